//! Post-hoc analysis of a trace: convergence per epoch and feasibility.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::trace::{SimTrace, TraceRecord};
use super::RunStats;
use crate::model::{FlowId, LinkId, RateVector, Scenario};
use crate::oracle::{compute_maxmin, convergence_budget, MaxminSolution};
use crate::rate::{int, Rate, Rational, Time};

/// Half-open time interval `[start, end)` of one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochWindow {
    pub index: usize,
    pub start: Time,
    pub end: Time,
}

impl EpochWindow {
    pub fn contains(&self, t: &Time) -> bool {
        &self.start <= t && t < &self.end
    }
}

/// Epoch windows of `scenario`, in order.
pub fn epoch_windows(scenario: &Scenario) -> Vec<EpochWindow> {
    let duration = scenario.duration();
    if duration.is_zero() {
        return Vec::new();
    }
    let mut starts = vec![Time::zero()];
    starts.extend(scenario.epoch_boundaries());
    let ends: Vec<Time> = starts[1..]
        .iter()
        .cloned()
        .chain(std::iter::once(duration.clone()))
        .collect();
    starts
        .into_iter()
        .zip(ends)
        .enumerate()
        .map(|(index, (start, end))| EpochWindow { index, start, end })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Convergence {
    /// Time of the last change; the values held from then to the end of the
    /// window equal the target.
    At(Time),
    NotConverged,
}

impl Convergence {
    pub fn time(&self) -> Option<&Time> {
        match self {
            Convergence::At(t) => Some(t),
            Convergence::NotConverged => None,
        }
    }
}

fn settle_time<'a>(
    window: &EpochWindow,
    target: &RateVector,
    series: impl Iterator<Item = (&'a Time, &'a FlowId, Rate)>,
) -> Convergence {
    let mut last: BTreeMap<&FlowId, (Time, Rate)> = BTreeMap::new();
    for (at, flow, value) in series {
        if at >= &window.end {
            break;
        }
        if target.get(flow).is_some() {
            last.insert(flow, (at.clone(), value));
        }
    }
    let mut settled = window.start.clone();
    for (flow, rate) in target.iter() {
        match last.get(flow) {
            Some((at, value)) if value == &Rate::Finite(rate.clone()) => {
                if at > &settled {
                    settled = at.clone();
                }
            }
            _ => return Convergence::NotConverged,
        }
    }
    Convergence::At(settled)
}

/// When every flow's rate estimate reached its final value in `window`, if
/// those final values equal `oracle`.
pub fn convergence_time(
    trace: &SimTrace,
    window: &EpochWindow,
    oracle: &RateVector,
) -> Convergence {
    settle_time(
        window,
        oracle,
        trace.iter().filter_map(|r| match r {
            TraceRecord::Estimate { at, flow, rate } => Some((at, flow, rate.clone())),
            _ => None,
        }),
    )
}

/// Like [`convergence_time`] for the actual transmission rates.
pub fn actual_convergence_time(
    trace: &SimTrace,
    window: &EpochWindow,
    oracle: &RateVector,
) -> Convergence {
    settle_time(
        window,
        oracle,
        trace.iter().filter_map(|r| match r {
            TraceRecord::Actual { at, flow, rate } => Some((at, flow, Rate::Finite(rate.clone()))),
            _ => None,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityViolation {
    pub at: Time,
    pub link: LinkId,
    pub load: Rational,
    pub capacity: Rational,
}

/// Replay the actual rates recorded in `trace` and report every instant at
/// which some link carries more than its capacity.
pub fn feasibility_monitor(trace: &SimTrace, scenario: &Scenario) -> Vec<FeasibilityViolation> {
    let mut rates: BTreeMap<FlowId, Rational> = BTreeMap::new();
    let mut out = Vec::new();
    let actual: Vec<(&Time, &FlowId, &Rational)> = trace
        .iter()
        .filter_map(|r| match r {
            TraceRecord::Actual { at, flow, rate } => Some((at, flow, rate)),
            _ => None,
        })
        .collect();
    let mut i = 0;
    while i < actual.len() {
        let at = actual[i].0;
        while i < actual.len() && actual[i].0 == at {
            rates.insert(actual[i].1.clone(), actual[i].2.clone());
            i += 1;
        }
        for link in scenario.links() {
            let load = rates
                .iter()
                .map(|(f, r)| scenario.weight(f, &link.id) * r)
                .fold(Rational::zero(), |a, b| a + b);
            if load > link.capacity {
                out.push(FeasibilityViolation {
                    at: at.clone(),
                    link: link.id.clone(),
                    load,
                    capacity: link.capacity.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochReport {
    pub window: EpochWindow,
    pub active: Vec<FlowId>,
    pub oracle: MaxminSolution,
    /// `4 N D` for this epoch's oracle.
    pub budget: Time,
    pub estimates: Convergence,
    pub actual: Convergence,
    /// When every active flow was known at all its links.
    pub t0: Option<Time>,
    /// Last change of any link or source control state.
    pub settled_at: Time,
    /// Packets sent strictly after `settled_at` that came back to their source.
    pub settled_deliveries: usize,
    /// Of those, how many had a clear u-bit.
    pub u_bit_violations: usize,
    pub final_estimates: BTreeMap<FlowId, Rate>,
    pub final_advertized: BTreeMap<LinkId, Rational>,
}

impl EpochReport {
    /// Estimate convergence time measured from the epoch start.
    pub fn elapsed(&self) -> Option<Time> {
        self.estimates.time().map(|t| t - &self.window.start)
    }

    pub fn within_budget(&self) -> bool {
        self.elapsed().is_some_and(|e| e <= self.budget)
    }

    /// Converged later than `2 N D` after the epoch start.
    pub fn exceeds_half_budget(&self) -> bool {
        self.elapsed().is_some_and(|e| e * int(2) > self.budget)
    }

    /// No state changed during the final `D` of the epoch, so every active
    /// flow completed a control round trip against an unchanging state.
    pub fn at_fixed_point(&self, d_bound: &Time) -> bool {
        &self.window.end - &self.settled_at >= *d_bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub epochs: Vec<EpochReport>,
    pub feasibility: Vec<FeasibilityViolation>,
    pub d_bound: Time,
    pub stats: RunStats,
}

impl ConvergenceReport {
    pub(super) fn build(scenario: &Scenario, trace: &SimTrace, stats: RunStats) -> Self {
        let epochs = epoch_windows(scenario)
            .into_iter()
            .map(|window| {
                let flows = scenario.active_at(&window.start);
                let oracle = compute_maxmin(scenario, &flows);
                epoch_report(scenario, trace, &stats, window, oracle)
            })
            .collect();
        Self {
            epochs,
            feasibility: feasibility_monitor(trace, scenario),
            d_bound: scenario.d_bound().clone(),
            stats,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.epochs
            .iter()
            .all(|e| matches!(e.estimates, Convergence::At(_)))
    }

    pub fn all_within_budget(&self) -> bool {
        self.epochs.iter().all(EpochReport::within_budget)
    }
}

fn epoch_report(
    scenario: &Scenario,
    trace: &SimTrace,
    stats: &RunStats,
    window: EpochWindow,
    oracle: MaxminSolution,
) -> EpochReport {
    let budget = convergence_budget(&oracle, scenario.d_bound());
    let estimates = convergence_time(trace, &window, &oracle.rates);
    let actual = actual_convergence_time(trace, &window, &oracle.rates);

    let mut settled_at = window.start.clone();
    let mut final_estimates = BTreeMap::new();
    let mut final_advertized = BTreeMap::new();
    for r in trace.iter().take_while(|r| r.at() < &window.end) {
        match r {
            TraceRecord::Estimate { flow, rate, .. } => {
                final_estimates.insert(flow.clone(), rate.clone());
            }
            TraceRecord::Advertized { link, rate, .. } => {
                final_advertized.insert(link.clone(), rate.clone());
            }
            _ => {}
        }
        let state_change = matches!(
            r,
            TraceRecord::Estimate { .. }
                | TraceRecord::Advertized { .. }
                | TraceRecord::Marked { .. }
                | TraceRecord::Register { .. }
                | TraceRecord::Deregister { .. }
                | TraceRecord::Allocation { .. }
        );
        if state_change && window.contains(r.at()) {
            settled_at = r.at().clone();
        }
    }
    final_estimates.retain(|f, _| oracle.rates.get(f).is_some());

    let mut settled_deliveries = 0;
    let mut u_bit_violations = 0;
    for r in trace.iter() {
        if let TraceRecord::Deliver {
            at,
            sent_at,
            u_bit,
            injected: false,
            ..
        } = r
        {
            if window.contains(at) && sent_at > &settled_at {
                settled_deliveries += 1;
                if !u_bit {
                    u_bit_violations += 1;
                }
            }
        }
    }

    EpochReport {
        active: oracle.rates.iter().map(|(f, _)| f.clone()).collect(),
        t0: stats.t0.get(window.index).cloned().flatten(),
        window,
        oracle,
        budget,
        estimates,
        actual,
        settled_at,
        settled_deliveries,
        u_bit_violations,
        final_estimates,
        final_advertized,
    }
}
