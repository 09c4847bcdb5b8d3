use explicit_rate::endpoint::Leg;
use explicit_rate::generate::{random_scenario, GeneratorOptions};
use explicit_rate::rate::{int, ratio};
use explicit_rate::simulator::{
    convergence_time, feasibility_monitor, inject_with, run_from, Convergence, EpochWindow,
    InitialWorld, PerturbConfig, TraceRecord,
};
use explicit_rate::{
    run, validate_scenario, ActualRatePolicy, FlowSpec, Rate, RateVector, RecordingPolicy,
    Scenario, ScenarioConfig, SimOptions, SimTrace,
};

fn single_link(duration: i64) -> Scenario {
    validate_scenario(
        ScenarioConfig::new(int(0), int(1), int(3), int(duration))
            .duplex("a", "b", int(30), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["a", "b"]))
            .flow(FlowSpec::along("C", &["a", "b"])),
    )
    .unwrap()
}

fn chain() -> Scenario {
    validate_scenario(
        ScenarioConfig::new(int(0), int(1), int(5), int(60))
            .duplex("a", "b", int(10), int(1))
            .duplex("b", "c", int(100), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["a", "b", "c"]))
            .flow(FlowSpec::along("C", &["b", "c"])),
    )
    .unwrap()
}

fn finals(report: &explicit_rate::simulator::ConvergenceReport) -> Vec<(String, Rate)> {
    report.epochs[0]
        .final_estimates
        .iter()
        .map(|(f, r)| (f.to_string(), r.clone()))
        .collect()
}

#[test]
fn single_link_converges_within_budget() {
    let s = single_link(20);
    let (_, report) = run(&s, &SimOptions::default()).unwrap();
    let e = &report.epochs[0];
    assert_eq!(
        finals(&report),
        vec![
            ("A".into(), Rate::Finite(int(10))),
            ("B".into(), Rate::Finite(int(10))),
            ("C".into(), Rate::Finite(int(10))),
        ]
    );
    assert_eq!(e.oracle.n_levels, 1);
    assert_eq!(e.budget, int(12));
    assert!(e.within_budget(), "elapsed {:?}", e.elapsed());
    assert!(e.at_fixed_point(s.d_bound()));
    assert_eq!(e.u_bit_violations, 0);
    assert!(e.settled_deliveries > 0);
}

#[test]
fn chain_converges_within_two_levels_budget() {
    let s = chain();
    let (_, report) = run(&s, &SimOptions::default()).unwrap();
    let e = &report.epochs[0];
    assert_eq!(
        finals(&report),
        vec![
            ("A".into(), Rate::Finite(int(5))),
            ("B".into(), Rate::Finite(int(5))),
            ("C".into(), Rate::Finite(int(95))),
        ]
    );
    assert_eq!(e.budget, int(8) * s.d_bound());
    assert!(e.within_budget());
    assert!(matches!(e.actual, Convergence::At(_)));
}

#[test]
fn zero_flows_keep_capacity_advertized() {
    let s = validate_scenario(ScenarioConfig::new(int(0), int(1), int(1), int(10)).duplex(
        "a",
        "b",
        int(30),
        int(1),
    ))
    .unwrap();
    let (trace, report) = run(&s, &SimOptions::default()).unwrap();
    assert_eq!(report.epochs.len(), 1);
    assert_eq!(report.epochs[0].estimates, Convergence::At(int(0)));
    assert!(trace.iter().all(|r| match r {
        TraceRecord::Advertized { rate, .. } => rate == &int(30),
        TraceRecord::Epoch { .. } => true,
        _ => false,
    }));
}

#[test]
fn zero_duration_gives_empty_trace_and_report() {
    let s = single_link(0);
    let (trace, report) = run(&s, &SimOptions::default()).unwrap();
    assert!(trace.is_empty());
    assert!(report.epochs.is_empty());
    assert!(report.feasibility.is_empty());
}

#[test]
fn identical_inputs_give_identical_traces() {
    let opts = GeneratorOptions {
        jitter: true,
        ..GeneratorOptions::default()
    };
    for seed in 0..5 {
        let s = random_scenario(seed, &opts);
        let a = run(&s, &SimOptions::default()).unwrap().0.to_text();
        let b = run(&s, &SimOptions::default()).unwrap().0.to_text();
        assert_eq!(a, b);
    }
}

#[test]
fn empty_perturbation_is_a_clean_start() {
    let s = chain();
    let world = inject_with(&s, &PerturbConfig::none());
    assert_eq!(world, InitialWorld::clean());
    let (a, _) = run(&s, &SimOptions::default()).unwrap();
    let (b, _) = run_from(&s, &SimOptions::default(), world).unwrap();
    assert_eq!(a, b);
}

#[test]
fn perturbed_start_still_converges() {
    let s = chain();
    for seed in 0..10 {
        let world = inject_with(&s, &PerturbConfig::new(seed));
        let (_, report) = run_from(&s, &SimOptions::default(), world).unwrap();
        assert!(report.all_converged(), "seed {seed}");
    }
}

#[test]
fn both_recording_policies_reach_the_oracle() {
    let s = chain();
    for recording in [RecordingPolicy::Arriving, RecordingPolicy::Outgoing] {
        let opts = SimOptions {
            recording,
            ..SimOptions::default()
        };
        let (_, report) = run(&s, &opts).unwrap();
        assert!(report.all_converged(), "{recording:?}");
        assert!(report.epochs[0].within_budget(), "{recording:?}");
    }
}

#[test]
fn departed_flow_packets_are_dropped_and_entries_removed() {
    let s = validate_scenario(
        ScenarioConfig::new(int(0), int(1), int(5), int(40))
            .duplex("a", "b", int(30), int(2))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["a", "b"]).active_during(int(0), Some(int(10)))),
    )
    .unwrap();
    let (trace, report) = run(&s, &SimOptions::default()).unwrap();
    assert!(trace
        .iter()
        .any(|r| matches!(r, TraceRecord::Dropped { flow, .. } if flow.as_str() == "B")));
    assert!(trace
        .iter()
        .any(|r| matches!(r, TraceRecord::Deregister { flow, .. } if flow.as_str() == "B")));
    assert_eq!(report.epochs.len(), 2);
    assert_eq!(
        report.epochs[0].final_estimates.get(&"A".into()),
        Some(&Rate::Finite(int(15)))
    );
    assert_eq!(
        report.epochs[1].final_estimates.get(&"A".into()),
        Some(&Rate::Finite(int(30)))
    );
    assert!(report.all_within_budget());
}

#[test]
fn rejoining_flow_gets_a_fresh_session() {
    let s = validate_scenario(
        ScenarioConfig::new(int(0), int(1), int(3), int(60))
            .duplex("a", "b", int(30), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(
                FlowSpec::along("B", &["a", "b"])
                    .active_during(int(0), Some(int(20)))
                    .rejoining(int(21), None),
            ),
    )
    .unwrap();
    let (trace, report) = run(&s, &SimOptions::default()).unwrap();
    assert_eq!(report.epochs.len(), 3);
    assert!(report.epochs[0].within_budget());
    assert!(report.epochs[2].within_budget());
    // One control packet per interval while active: no duplicated timer chain.
    let sent_after_rejoin = trace
        .iter()
        .filter(|r| {
            matches!(r, TraceRecord::Hop { flow, leg: Leg::Outbound, at, .. }
                if flow.as_str() == "B" && at >= &int(21))
        })
        .count();
    assert_eq!(sent_after_rejoin, 39);
}

#[test]
fn feedback_weighting_converges_when_returning_packets_are_processed() {
    let s = validate_scenario(
        ScenarioConfig::new(int(2), int(1), int(7), int(60))
            .link(explicit_rate::DirectedLink::new("a", "b", int(30), int(1)))
            .link(explicit_rate::DirectedLink::new(
                "b",
                "a",
                int(1000),
                int(1),
            ))
            .link(explicit_rate::DirectedLink::new("a", "c", int(12), int(1)))
            .link(explicit_rate::DirectedLink::new(
                "c",
                "a",
                int(1000),
                int(1),
            ))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["b", "a", "c"])),
    )
    .unwrap();
    let (_, report) = run(&s, &SimOptions::default()).unwrap();
    assert_eq!(
        finals(&report),
        vec![
            ("A".into(), Rate::Finite(int(10))),
            ("B".into(), Rate::Finite(int(10)))
        ]
    );
    assert!(report.epochs[0].within_budget());
}

#[test]
fn immediate_policy_overloads_during_transients() {
    let s = validate_scenario(
        ScenarioConfig::new(int(0), int(1), int(7), int(40))
            .duplex("a", "b", int(30), int(1))
            .duplex("b", "c", int(1000), int(2))
            .flow(FlowSpec::along("Far", &["a", "b", "c"]))
            .flow(FlowSpec::along("Near", &["a", "b"]).active_during(int(10), None)),
    )
    .unwrap();
    let delayed = run(&s, &SimOptions::default()).unwrap().1;
    assert!(delayed.feasibility.is_empty());
    let immediate = SimOptions {
        rate_policy: ActualRatePolicy::Immediate,
        ..SimOptions::default()
    };
    let (_, report) = run(&s, &immediate).unwrap();
    assert!(!report.feasibility.is_empty());
}

fn trace_of(records: Vec<TraceRecord>) -> SimTrace {
    SimTrace { records }
}

#[test]
fn convergence_time_on_a_hand_written_trace() {
    let est = |at: i64, flow: &str, r: i64| TraceRecord::Estimate {
        at: int(at),
        flow: flow.into(),
        rate: Rate::Finite(int(r)),
    };
    let trace = trace_of(vec![
        est(0, "A", 70),
        est(0, "B", 70),
        est(2, "A", 30),
        est(3, "B", 20),
        est(5, "B", 40),
        est(12, "A", 99),
    ]);
    let oracle: RateVector = [("A".into(), int(30)), ("B".into(), int(40))]
        .into_iter()
        .collect();
    let w = |start: i64, end: i64| EpochWindow {
        index: 0,
        start: int(start),
        end: int(end),
    };
    assert_eq!(
        convergence_time(&trace, &w(0, 10), &oracle),
        Convergence::At(int(5))
    );
    assert_eq!(
        convergence_time(&trace, &w(0, 4), &oracle),
        Convergence::NotConverged
    );
    assert_eq!(
        convergence_time(&trace, &w(6, 10), &oracle),
        Convergence::At(int(6))
    );
    assert_eq!(
        convergence_time(&trace, &w(0, 20), &oracle),
        Convergence::NotConverged
    );
}

#[test]
fn feasibility_monitor_on_a_hand_written_trace() {
    let s = single_link(10);
    let act = |at, flow: &str, r| TraceRecord::Actual {
        at,
        flow: flow.into(),
        rate: r,
    };
    let ok = trace_of(vec![
        act(int(0), "A", int(10)),
        act(int(0), "B", int(20)),
        act(int(1), "B", int(10)),
        act(int(1), "C", int(10)),
    ]);
    assert!(feasibility_monitor(&ok, &s).is_empty());

    let bad = trace_of(vec![
        act(int(0), "A", int(10)),
        act(int(0), "B", int(10)),
        act(ratio(3, 2), "C", int(11)),
        act(int(2), "A", int(9)),
    ]);
    let v = feasibility_monitor(&bad, &s);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].at, ratio(3, 2));
    assert_eq!(v[0].load, int(31));
}
