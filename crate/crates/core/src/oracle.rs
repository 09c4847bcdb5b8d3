//! Global maxmin-fair rate computation.
//!
//! The oracle repeatedly finds every constraint with the smallest remaining
//! capacity per weighted flow, fixes all flows crossing those constraints at
//! that share, and subtracts what they consume everywhere else. Feedback
//! crossings count with weight `k`. A finite demand is modeled as a private
//! access constraint of capacity equal to the demand that only the flow's
//! forward direction crosses.
//!
//! [`verify_maxmin`] checks a rate vector against the bottleneck
//! characterization of maxmin fairness without running the procedure, and
//! [`check_level_properties`] checks the structure of the level decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{link_load, FlowId, FlowSpec, LinkId, RateVector, Scenario};
use crate::rate::{fmt_exact, int, Rate, Rational, Time};

/// Something that can be a bottleneck: a real link or a flow's demand limit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Link(LinkId),
    Demand(FlowId),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Link(l) => write!(f, "{l}"),
            Constraint::Demand(flow) => write!(f, "demand({flow})"),
        }
    }
}

/// One iteration of the global procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BottleneckLevel {
    /// 1-based iteration number.
    pub index: usize,
    /// Rate assigned to every flow fixed in this iteration.
    pub rate: Rational,
    /// Constraints saturated in this iteration.
    pub links: BTreeSet<Constraint>,
    /// Flows fixed in this iteration.
    pub flows: BTreeSet<FlowId>,
    /// Weighted count `f + k*b` of this level's flows on each constraint they cross.
    pub weighted_counts: BTreeMap<Constraint, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxminSolution {
    pub rates: RateVector,
    pub levels: Vec<BottleneckLevel>,
    /// Number of distinct bottleneck rates.
    pub n_levels: usize,
}

/// Fair share of `remaining_capacity` among `forward` forward crossings and
/// `feedback` feedback crossings. Callers exclude constraints with no
/// weighted crossings.
pub fn capacity_per_flow(
    remaining_capacity: &Rational,
    forward: usize,
    feedback: usize,
    k: &Rational,
) -> Rational {
    let n = int(forward as i64) + k * int(feedback as i64);
    assert!(
        n.is_positive(),
        "capacity_per_flow on a link without weighted flows"
    );
    remaining_capacity / n
}

#[derive(Debug, Clone)]
struct Resource {
    id: Constraint,
    capacity: Rational,
    forward: BTreeSet<FlowId>,
    feedback: BTreeSet<FlowId>,
}

impl Resource {
    fn weight(&self, flow: &FlowId, k: &Rational) -> Rational {
        let mut w = Rational::zero();
        if self.forward.contains(flow) {
            w += int(1);
        }
        if self.feedback.contains(flow) {
            w += k;
        }
        w
    }

    fn crosses(&self, flow: &FlowId, k: &Rational) -> bool {
        self.weight(flow, k).is_positive()
    }

    fn weighted_count<'a>(
        &self,
        flows: impl IntoIterator<Item = &'a FlowId>,
        k: &Rational,
    ) -> Rational {
        flows
            .into_iter()
            .map(|f| self.weight(f, k))
            .fold(Rational::zero(), |a, b| a + b)
    }
}

/// Real links plus one demand constraint per finite-demand flow.
fn resources(scenario: &Scenario, flows: &[&FlowSpec]) -> Vec<Resource> {
    let mut out: Vec<Resource> = scenario
        .links()
        .map(|l| Resource {
            id: Constraint::Link(l.id.clone()),
            capacity: l.capacity.clone(),
            forward: BTreeSet::new(),
            feedback: BTreeSet::new(),
        })
        .collect();
    let index: BTreeMap<LinkId, usize> = scenario
        .links()
        .enumerate()
        .map(|(i, l)| (l.id.clone(), i))
        .collect();
    for flow in flows {
        for link in &flow.route {
            if let Some(&i) = index.get(link) {
                out[i].forward.insert(flow.id.clone());
            }
        }
        for link in scenario.reverse_route_of(&flow.id) {
            if let Some(&i) = index.get(link) {
                out[i].feedback.insert(flow.id.clone());
            }
        }
    }
    for flow in flows {
        if let Rate::Finite(d) = &flow.demand {
            out.push(Resource {
                id: Constraint::Demand(flow.id.clone()),
                capacity: d.clone(),
                forward: BTreeSet::from([flow.id.clone()]),
                feedback: BTreeSet::new(),
            });
        }
    }
    out
}

/// Maxmin-fair rates for `flows` (typically the flows active at one instant).
pub fn compute_maxmin(scenario: &Scenario, flows: &[&FlowSpec]) -> MaxminSolution {
    let k = scenario.k().clone();
    let res = resources(scenario, flows);
    let mut remaining: Vec<Rational> = res.iter().map(|r| r.capacity.clone()).collect();
    let mut unassigned: BTreeSet<FlowId> = flows.iter().map(|f| f.id.clone()).collect();
    let mut rates = RateVector::new();
    let mut levels = Vec::new();

    while !unassigned.is_empty() {
        let mut shares: Vec<Option<Rational>> = Vec::with_capacity(res.len());
        for (r, rem) in res.iter().zip(&remaining) {
            let f = r.forward.iter().filter(|x| unassigned.contains(*x)).count();
            let b = if k.is_positive() {
                r.feedback
                    .iter()
                    .filter(|x| unassigned.contains(*x))
                    .count()
            } else {
                0
            };
            shares.push((f > 0 || b > 0).then(|| capacity_per_flow(rem, f, b, &k)));
        }
        let tau = shares
            .iter()
            .flatten()
            .min()
            .cloned()
            .expect("every unassigned flow crosses at least one forward link");

        let bottlenecks: Vec<usize> = shares
            .iter()
            .enumerate()
            .filter(|(_, s)| s.as_ref() == Some(&tau))
            .map(|(i, _)| i)
            .collect();
        let fixed: BTreeSet<FlowId> = unassigned
            .iter()
            .filter(|f| bottlenecks.iter().any(|&i| res[i].crosses(f, &k)))
            .cloned()
            .collect();

        let mut weighted_counts = BTreeMap::new();
        for (r, rem) in res.iter().zip(remaining.iter_mut()) {
            let n = r.weighted_count(&fixed, &k);
            if n.is_positive() {
                *rem -= &tau * &n;
                weighted_counts.insert(r.id.clone(), n);
            }
        }
        for f in &fixed {
            rates.insert(f.clone(), tau.clone());
            unassigned.remove(f);
        }
        levels.push(BottleneckLevel {
            index: levels.len() + 1,
            rate: tau,
            links: bottlenecks.iter().map(|&i| res[i].id.clone()).collect(),
            flows: fixed,
            weighted_counts,
        });
    }

    let n_levels = levels.len();
    MaxminSolution {
        rates,
        levels,
        n_levels,
    }
}

/// Maxmin rates of the flows active at time `t`.
pub fn compute_maxmin_at(scenario: &Scenario, t: &Time) -> MaxminSolution {
    compute_maxmin(scenario, &scenario.active_at(t))
}

/// Number of distinct bottleneck rates `N` and the increasing rate list.
pub fn bottleneck_levels(solution: &MaxminSolution) -> (usize, Vec<Rational>) {
    let taus: Vec<Rational> = solution.levels.iter().map(|l| l.rate.clone()).collect();
    (solution.n_levels, taus)
}

/// Worst-case convergence time `4 N D` of the distributed protocol.
pub fn convergence_budget(solution: &MaxminSolution, d_bound: &Time) -> Time {
    int(4 * solution.n_levels as i64) * d_bound
}

/// Why a rate vector is not the maxmin-fair allocation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Counterexample {
    #[error("flow {0} has no rate")]
    MissingFlow(FlowId),
    #[error("flow {flow}: negative rate {rate}")]
    NegativeRate { flow: FlowId, rate: String },
    #[error("flow {flow}: rate {rate} exceeds demand {demand}")]
    ExceedsDemand {
        flow: FlowId,
        rate: String,
        demand: String,
    },
    #[error("link {link} infeasible: load {load} > capacity {capacity}")]
    Infeasible {
        link: LinkId,
        load: String,
        capacity: String,
    },
    #[error("flow {flow} at rate {rate} is below demand and has no saturated link on which it is among the largest flows")]
    NotMaxmin { flow: FlowId, rate: String },
}

/// Check that `rates` is the maxmin-fair allocation for `flows`.
///
/// A feasible vector is maxmin fair iff every flow is either at its demand or
/// crosses a saturated link on which no other flow has a larger rate: such a
/// flow can only be increased by decreasing a flow whose rate is no larger.
pub fn verify_maxmin(
    scenario: &Scenario,
    flows: &[&FlowSpec],
    rates: &RateVector,
) -> Result<(), Counterexample> {
    let mut restricted = RateVector::new();
    for flow in flows {
        let Some(r) = rates.get(&flow.id) else {
            return Err(Counterexample::MissingFlow(flow.id.clone()));
        };
        if r.is_negative() {
            return Err(Counterexample::NegativeRate {
                flow: flow.id.clone(),
                rate: fmt_exact(r),
            });
        }
        if let Rate::Finite(d) = &flow.demand {
            if r > d {
                return Err(Counterexample::ExceedsDemand {
                    flow: flow.id.clone(),
                    rate: fmt_exact(r),
                    demand: fmt_exact(d),
                });
            }
        }
        restricted.insert(flow.id.clone(), r.clone());
    }

    let mut saturated = BTreeSet::new();
    for link in scenario.links() {
        let load = link_load(&restricted, &link.id, scenario);
        if load > link.capacity {
            return Err(Counterexample::Infeasible {
                link: link.id.clone(),
                load: fmt_exact(&load),
                capacity: fmt_exact(&link.capacity),
            });
        }
        if load == link.capacity {
            saturated.insert(link.id.clone());
        }
    }

    for flow in flows {
        let r = &restricted.0[&flow.id];
        if flow.demand == *r {
            continue;
        }
        let has_bottleneck = saturated.iter().any(|link| {
            scenario.weight(&flow.id, link).is_positive()
                && restricted
                    .iter()
                    .filter(|(other, _)| scenario.weight(other, link).is_positive())
                    .all(|(_, other_rate)| other_rate <= r)
        });
        if !has_bottleneck {
            return Err(Counterexample::NotMaxmin {
                flow: flow.id.clone(),
                rate: fmt_exact(r),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyViolation {
    #[error("level rates not strictly increasing at level {0}")]
    NotIncreasing(usize),
    #[error("flow {0} is not in exactly one level")]
    FlowMembership(FlowId),
    #[error("level {level}: flow {flow} crosses no bottleneck of its level")]
    NoBottleneck { level: usize, flow: FlowId },
    #[error("level {level}: flow {flow} from a later level crosses bottleneck {constraint}")]
    LaterFlowOnBottleneck {
        level: usize,
        flow: FlowId,
        constraint: Constraint,
    },
    #[error("level {level}: bottleneck {constraint} does not satisfy the residual share equality")]
    ResidualEquality {
        level: usize,
        constraint: Constraint,
    },
    #[error("level {level}: non-bottleneck {constraint} does not satisfy the strict residual share inequality")]
    ResidualInequality {
        level: usize,
        constraint: Constraint,
    },
    #[error("level {level}: recorded weighted count on {constraint} is wrong")]
    WeightedCount {
        level: usize,
        constraint: Constraint,
    },
    #[error("bottleneck {0} is not saturated")]
    NotSaturated(Constraint),
    #[error("rate of flow {0} differs from its level rate")]
    RateMismatch(FlowId),
    #[error("level count {0} does not match the number of levels")]
    LevelCount(usize),
}

/// Check the level decomposition of `solution`:
///
/// * level rates are strictly increasing;
/// * each flow belongs to exactly one level and gets that level's rate;
/// * each flow of level `i` crosses a bottleneck of level `i`, and only flows
///   of levels `1..=i` cross the bottlenecks of level `i`;
/// * for each bottleneck `l` of level `i`,
///   `tau_i = (C_l - sum_{j<i} tau_j n_l^j) / (n_l - sum_{j<i} n_l^j)`, and the
///   same ratio is strictly larger than `tau_i` on every other constraint
///   still carrying a flow of a later level;
/// * every bottleneck ends up saturated.
pub fn check_level_properties(
    scenario: &Scenario,
    flows: &[&FlowSpec],
    solution: &MaxminSolution,
) -> Result<(), PropertyViolation> {
    let k = scenario.k().clone();
    let res = resources(scenario, flows);
    let levels = &solution.levels;
    if solution.n_levels != levels.len() {
        return Err(PropertyViolation::LevelCount(solution.n_levels));
    }

    for w in levels.windows(2) {
        if w[0].rate >= w[1].rate {
            return Err(PropertyViolation::NotIncreasing(w[1].index));
        }
    }

    let mut level_of: BTreeMap<FlowId, usize> = BTreeMap::new();
    for (i, level) in levels.iter().enumerate() {
        for f in &level.flows {
            if level_of.insert(f.clone(), i).is_some() {
                return Err(PropertyViolation::FlowMembership(f.clone()));
            }
            if solution.rates.get(f) != Some(&level.rate) {
                return Err(PropertyViolation::RateMismatch(f.clone()));
            }
        }
    }
    for f in flows {
        if !level_of.contains_key(&f.id) {
            return Err(PropertyViolation::FlowMembership(f.id.clone()));
        }
    }

    let by_id: BTreeMap<&Constraint, &Resource> = res.iter().map(|r| (&r.id, r)).collect();

    for (i, level) in levels.iter().enumerate() {
        for f in &level.flows {
            let crosses = level
                .links
                .iter()
                .any(|c| by_id.get(c).is_some_and(|r| r.crosses(f, &k)));
            if !crosses {
                return Err(PropertyViolation::NoBottleneck {
                    level: level.index,
                    flow: f.clone(),
                });
            }
        }
        for c in &level.links {
            let r = by_id[c];
            for f in r.forward.iter().chain(&r.feedback) {
                if r.crosses(f, &k) && level_of[f] > i {
                    return Err(PropertyViolation::LaterFlowOnBottleneck {
                        level: level.index,
                        flow: f.clone(),
                        constraint: c.clone(),
                    });
                }
            }
        }
    }

    // n_l^j recomputed from level membership, independent of the recorded counts.
    let counts: Vec<BTreeMap<&Constraint, Rational>> = levels
        .iter()
        .map(|level| {
            res.iter()
                .map(|r| (&r.id, r.weighted_count(&level.flows, &k)))
                .collect()
        })
        .collect();
    for (level, count) in levels.iter().zip(&counts) {
        for r in &res {
            let expected = &count[&r.id];
            let recorded = level
                .weighted_counts
                .get(&r.id)
                .cloned()
                .unwrap_or_default();
            if &recorded != expected {
                return Err(PropertyViolation::WeightedCount {
                    level: level.index,
                    constraint: r.id.clone(),
                });
            }
        }
    }

    for (i, level) in levels.iter().enumerate() {
        let marked: BTreeSet<&Constraint> = levels[..=i].iter().flat_map(|l| &l.links).collect();
        for r in &res {
            let total = r.weighted_count(r.forward.iter().chain(&r.feedback), &k);
            let mut numer = r.capacity.clone();
            let mut denom = total;
            for (j, prev) in levels[..i].iter().enumerate() {
                let n = &counts[j][&r.id];
                numer -= &prev.rate * n;
                denom -= n;
            }
            if level.links.contains(&r.id) {
                if !denom.is_positive() || level.rate != &numer / &denom {
                    return Err(PropertyViolation::ResidualEquality {
                        level: level.index,
                        constraint: r.id.clone(),
                    });
                }
            } else if !marked.contains(&r.id) {
                let carries_later = r
                    .forward
                    .iter()
                    .chain(&r.feedback)
                    .any(|f| level_of[f] > i && r.crosses(f, &k));
                if carries_later && (!denom.is_positive() || level.rate >= &numer / &denom) {
                    return Err(PropertyViolation::ResidualInequality {
                        level: level.index,
                        constraint: r.id.clone(),
                    });
                }
            }
        }
    }

    for level in levels {
        for c in &level.links {
            let r = by_id[c];
            let load = solution
                .rates
                .iter()
                .map(|(f, rate)| r.weight(f, &k) * rate)
                .fold(Rational::zero(), |a, b| a + b);
            if load != r.capacity {
                return Err(PropertyViolation::NotSaturated(c.clone()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_scenario, DirectedLink, ScenarioConfig};
    use crate::rate::ratio;

    fn link(id: &str) -> Constraint {
        Constraint::Link(id.parse().unwrap())
    }

    fn solve(cfg: ScenarioConfig) -> (Scenario, MaxminSolution) {
        let s = validate_scenario(cfg).unwrap();
        let flows: Vec<&FlowSpec> = s.flows().collect();
        let sol = compute_maxmin(&s, &flows);
        check_level_properties(&s, &flows, &sol).unwrap();
        verify_maxmin(&s, &flows, &sol.rates).unwrap();
        (s.clone(), sol)
    }

    fn rate(sol: &MaxminSolution, f: &str) -> Rational {
        sol.rates.get(&f.into()).unwrap().clone()
    }

    pub(crate) fn chain() -> ScenarioConfig {
        ScenarioConfig::new(int(0), int(1), int(10), int(100))
            .duplex("a", "b", int(10), int(1))
            .duplex("b", "c", int(100), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["a", "b", "c"]))
            .flow(FlowSpec::along("C", &["b", "c"]))
    }

    #[test]
    fn capacity_per_flow_examples() {
        assert_eq!(capacity_per_flow(&int(60), 3, 0, &int(7)), int(20));
        assert_eq!(
            capacity_per_flow(&int(100), 2, 2, &ratio(1, 2)),
            ratio(100, 3)
        );
        assert_eq!(capacity_per_flow(&int(40), 1, 3, &int(1)), int(10));
    }

    #[test]
    fn single_link_equal_share() {
        let cfg = ScenarioConfig::new(int(0), int(1), int(10), int(10))
            .duplex("a", "b", int(30), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["a", "b"]))
            .flow(FlowSpec::along("C", &["a", "b"]));
        let (_, sol) = solve(cfg);
        for f in ["A", "B", "C"] {
            assert_eq!(rate(&sol, f), int(10));
        }
        assert_eq!(sol.n_levels, 1);
    }

    #[test]
    fn chain_has_two_levels() {
        let (_, sol) = solve(chain());
        assert_eq!(rate(&sol, "A"), int(5));
        assert_eq!(rate(&sol, "B"), int(5));
        assert_eq!(rate(&sol, "C"), int(95));
        assert_eq!(bottleneck_levels(&sol), (2, vec![int(5), int(95)]));
        assert_eq!(sol.levels[0].links, BTreeSet::from([link("a->b")]));
        assert_eq!(sol.levels[1].links, BTreeSet::from([link("b->c")]));
        assert_eq!(convergence_budget(&sol, &int(3)), int(24));
    }

    pub(crate) fn feedback_weighted() -> ScenarioConfig {
        // L = a->b carries A forward and B's feedback; M = a->c carries B forward.
        ScenarioConfig::new(int(2), int(1), int(20), int(100))
            .link(DirectedLink::new("a", "b", int(30), int(1)))
            .link(DirectedLink::new("b", "a", int(1000), int(1)))
            .link(DirectedLink::new("a", "c", int(12), int(1)))
            .link(DirectedLink::new("c", "a", int(1000), int(1)))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["b", "a", "c"]))
    }

    #[test]
    fn feedback_weighting() {
        let (_, sol) = solve(feedback_weighted());
        assert_eq!(rate(&sol, "A"), int(10));
        assert_eq!(rate(&sol, "B"), int(10));
        assert_eq!(sol.levels[0].links, BTreeSet::from([link("a->b")]));
        assert_eq!(sol.levels[0].weighted_counts[&link("a->b")], int(3));
    }

    #[test]
    fn zero_k_ignores_feedback_crossings() {
        let mut cfg = feedback_weighted();
        cfg.k = int(0);
        let (_, sol) = solve(cfg);
        assert_eq!(rate(&sol, "A"), int(30));
        assert_eq!(rate(&sol, "B"), int(12));
    }

    #[test]
    fn finite_demand_via_demand_constraint() {
        let cfg = ScenarioConfig::new(int(0), int(1), int(10), int(10))
            .duplex("a", "b", int(30), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]).with_demand(Rate::Finite(int(5))))
            .flow(FlowSpec::along("B", &["a", "b"]))
            .flow(FlowSpec::along("C", &["a", "b"]));
        let (_, sol) = solve(cfg);
        assert_eq!(rate(&sol, "A"), int(5));
        assert_eq!(rate(&sol, "B"), ratio(25, 2));
        assert_eq!(rate(&sol, "C"), ratio(25, 2));
        assert_eq!(
            sol.levels[0].links,
            BTreeSet::from([Constraint::Demand("A".into())])
        );
    }

    #[test]
    fn ties_are_marked_together() {
        let cfg = ScenarioConfig::new(int(0), int(1), int(10), int(10))
            .duplex("a", "b", int(10), int(1))
            .duplex("c", "d", int(20), int(1))
            .flow(FlowSpec::along("A", &["a", "b"]))
            .flow(FlowSpec::along("B", &["c", "d"]))
            .flow(FlowSpec::along("C", &["c", "d"]));
        let (_, sol) = solve(cfg);
        assert_eq!(sol.n_levels, 1);
        assert_eq!(sol.levels[0].links.len(), 2);
    }

    #[test]
    fn zero_flows_give_empty_solution() {
        let cfg =
            ScenarioConfig::new(int(0), int(1), int(10), int(10)).duplex("a", "b", int(10), int(1));
        let (_, sol) = solve(cfg);
        assert!(sol.rates.is_empty());
        assert_eq!(sol.n_levels, 0);
        assert_eq!(convergence_budget(&sol, &int(5)), int(0));
    }

    #[test]
    fn verify_rejects_infeasible_vector() {
        let s = validate_scenario(chain()).unwrap();
        let flows: Vec<&FlowSpec> = s.flows().collect();
        let rates: RateVector = [("A", 5), ("B", 6), ("C", 94)]
            .into_iter()
            .map(|(f, r)| (f.into(), int(r)))
            .collect();
        let err = verify_maxmin(&s, &flows, &rates).unwrap_err();
        assert_eq!(
            err,
            Counterexample::Infeasible {
                link: "a->b".parse().unwrap(),
                load: "11".into(),
                capacity: "10".into()
            }
        );
    }

    #[test]
    fn verify_rejects_unfair_vector() {
        let s = validate_scenario(chain()).unwrap();
        let flows: Vec<&FlowSpec> = s.flows().collect();
        let rates: RateVector = [("A", 4), ("B", 6), ("C", 94)]
            .into_iter()
            .map(|(f, r)| (f.into(), int(r)))
            .collect();
        let err = verify_maxmin(&s, &flows, &rates).unwrap_err();
        assert_eq!(
            err,
            Counterexample::NotMaxmin {
                flow: "A".into(),
                rate: "4".into()
            }
        );
    }

    #[test]
    fn verify_rejects_missing_and_excess() {
        let s = validate_scenario(chain()).unwrap();
        let flows: Vec<&FlowSpec> = s.flows().collect();
        let rates: RateVector = [("A".into(), int(5))].into_iter().collect();
        assert_eq!(
            verify_maxmin(&s, &flows, &rates).unwrap_err(),
            Counterexample::MissingFlow("B".into())
        );
    }

    #[test]
    fn property_checker_catches_tampering() {
        let s = validate_scenario(chain()).unwrap();
        let flows: Vec<&FlowSpec> = s.flows().collect();
        let mut sol = compute_maxmin(&s, &flows);
        sol.levels[1].rate = int(5);
        assert_eq!(
            check_level_properties(&s, &flows, &sol),
            Err(PropertyViolation::NotIncreasing(2))
        );

        let mut sol = compute_maxmin(&s, &flows);
        let moved = sol.levels[0].flows.pop_first().unwrap();
        sol.levels[1].flows.insert(moved.clone());
        assert!(check_level_properties(&s, &flows, &sol).is_err());
    }
}
