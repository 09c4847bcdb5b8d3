//! Networks, flows and scenarios.
//!
//! Links are directed. A flow's data travels along its forward route and its
//! control feedback comes back along the direction-flipped links in reverse
//! order, so every link of a forward route must have its mirror in the
//! network. Feedback traffic loads a link with weight `k` per unit of forward
//! rate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rate::{fmt_exact, Rate, Rational, Time};

/// Directed link identifier, written `from->to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId {
    pub from: String,
    pub to: String,
}

impl LinkId {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }

    /// The same cable traversed in the opposite direction.
    pub fn reversed(&self) -> LinkId {
        LinkId::new(self.to.clone(), self.from.clone())
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for LinkId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once("->") {
            Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                Ok(LinkId::new(a.trim(), b.trim()))
            }
            _ => Err(format!("invalid link id `{s}` (expected `from->to`)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub String);

impl FlowId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for FlowId {
    fn from(s: &str) -> Self {
        FlowId(s.to_string())
    }
}

impl From<String> for FlowId {
    fn from(s: String) -> Self {
        FlowId(s)
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedLink {
    pub id: LinkId,
    pub capacity: Rational,
    pub delay: Time,
}

impl DirectedLink {
    pub fn new(from: &str, to: &str, capacity: Rational, delay: Time) -> Self {
        Self {
            id: LinkId::new(from, to),
            capacity,
            delay,
        }
    }
}

/// A period `[start, stop)` during which a flow is active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub start: Time,
    /// `None` means the flow never leaves.
    pub stop: Option<Time>,
}

impl Interval {
    pub fn contains(&self, t: &Time) -> bool {
        &self.start <= t && self.stop.as_ref().is_none_or(|s| t < s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: FlowId,
    pub route: Vec<LinkId>,
    pub demand: Rate,
    /// Disjoint activity periods in increasing order.
    pub intervals: Vec<Interval>,
    /// Actual transmission rate at time zero; zero when absent. Flows
    /// joining later always start at zero.
    pub initial_rate: Option<Rational>,
}

impl FlowSpec {
    /// A flow following the node path `nodes`, infinite demand, active from 0.
    pub fn along(id: &str, nodes: &[&str]) -> Self {
        let route = nodes.windows(2).map(|w| LinkId::new(w[0], w[1])).collect();
        Self {
            id: id.into(),
            route,
            demand: Rate::Infinite,
            intervals: vec![Interval {
                start: Time::zero(),
                stop: None,
            }],
            initial_rate: None,
        }
    }

    pub fn with_demand(mut self, demand: Rate) -> Self {
        self.demand = demand;
        self
    }

    /// Replace the activity periods with the single period `[start, stop)`.
    pub fn active_during(mut self, start: Time, stop: Option<Time>) -> Self {
        self.intervals = vec![Interval { start, stop }];
        self
    }

    /// Add a later activity period: the flow leaves and joins again.
    pub fn rejoining(mut self, start: Time, stop: Option<Time>) -> Self {
        self.intervals.push(Interval { start, stop });
        self
    }

    pub fn with_initial_rate(mut self, rate: Rational) -> Self {
        self.initial_rate = Some(rate);
        self
    }

    pub fn is_active_at(&self, t: &Time) -> bool {
        self.intervals.iter().any(|i| i.contains(t))
    }
}

/// Unvalidated scenario description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub links: Vec<DirectedLink>,
    pub flows: Vec<FlowSpec>,
    /// Ratio of feedback to forward data rate.
    pub k: Rational,
    /// Period between control packets of one source.
    pub control_interval: Time,
    /// Upper bound `D` on a control round trip, including `control_interval`.
    pub d_bound: Time,
    pub seed: u64,
    pub duration: Time,
    /// Per-hop propagation delays are drawn from `[delay, delay + jitter]`.
    pub jitter: Time,
}

impl ScenarioConfig {
    pub fn new(k: Rational, control_interval: Time, d_bound: Time, duration: Time) -> Self {
        Self {
            links: Vec::new(),
            flows: Vec::new(),
            k,
            control_interval,
            d_bound,
            seed: 0,
            duration,
            jitter: Time::zero(),
        }
    }

    pub fn link(mut self, link: DirectedLink) -> Self {
        self.links.push(link);
        self
    }

    /// Add both directions of a cable with identical capacity and delay.
    pub fn duplex(mut self, a: &str, b: &str, capacity: Rational, delay: Time) -> Self {
        self.links
            .push(DirectedLink::new(a, b, capacity.clone(), delay.clone()));
        self.links.push(DirectedLink::new(b, a, capacity, delay));
        self
    }

    pub fn flow(mut self, flow: FlowSpec) -> Self {
        self.flows.push(flow);
        self
    }

    /// Smallest `D` compatible with the routes, interval and jitter.
    pub fn required_d_bound(&self) -> Time {
        let delays: BTreeMap<&LinkId, &Time> =
            self.links.iter().map(|l| (&l.id, &l.delay)).collect();
        let mut worst = Time::zero();
        for flow in &self.flows {
            let mut rtt = Time::zero();
            for hop in flow.route.iter().chain(reverse_route(&flow.route).iter()) {
                if let Some(d) = delays.get(hop) {
                    rtt += *d + &self.jitter;
                }
            }
            if rtt > worst {
                worst = rtt;
            }
        }
        worst + &self.control_interval
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("duplicate link {0}")]
    DuplicateLink(LinkId),
    #[error("link {0}: non-positive capacity")]
    NonPositiveCapacity(LinkId),
    #[error("link {0}: negative propagation delay")]
    NegativeDelay(LinkId),
    #[error("duplicate flow {0}")]
    DuplicateFlow(FlowId),
    #[error("flow {0}: empty route")]
    EmptyRoute(FlowId),
    #[error("flow {flow}: unknown link {link}")]
    UnknownLink { flow: FlowId, link: LinkId },
    #[error("flow {flow}: feedback link {link} (reverse of a route link) is not in the network")]
    MissingReverseLink { flow: FlowId, link: LinkId },
    #[error("flow {flow}: link {link} repeated in route")]
    RepeatedLink { flow: FlowId, link: LinkId },
    #[error("flow {0}: non-positive demand")]
    NonPositiveDemand(FlowId),
    #[error("flow {0}: inconsistent times (need 0 <= start < stop, periods in order)")]
    InconsistentTimes(FlowId),
    #[error("flow {0}: negative initial rate")]
    NegativeInitialRate(FlowId),
    #[error("k must be >= 0")]
    NegativeK,
    #[error("control interval must be > 0")]
    NonPositiveControlInterval,
    #[error("duration must be >= 0")]
    NegativeDuration,
    #[error("jitter must be >= 0")]
    NegativeJitter,
    #[error("d_bound {d_bound} is below control interval plus worst round trip {required}")]
    DBoundTooSmall { d_bound: String, required: String },
}

/// A scenario whose cross references have all been resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    links: BTreeMap<LinkId, DirectedLink>,
    flows: BTreeMap<FlowId, FlowSpec>,
    reverse: BTreeMap<FlowId, Vec<LinkId>>,
}

/// Check every invariant of `config`, returning all violations at once.
pub fn validate_scenario(config: ScenarioConfig) -> Result<Scenario, Vec<ValidationError>> {
    let mut errors = Vec::new();
    let mut links = BTreeMap::new();
    for link in &config.links {
        if !link.capacity.is_positive() {
            errors.push(ValidationError::NonPositiveCapacity(link.id.clone()));
        }
        if link.delay.is_negative() {
            errors.push(ValidationError::NegativeDelay(link.id.clone()));
        }
        if links.insert(link.id.clone(), link.clone()).is_some() {
            errors.push(ValidationError::DuplicateLink(link.id.clone()));
        }
    }

    let mut flows = BTreeMap::new();
    let mut reverse = BTreeMap::new();
    for flow in &config.flows {
        let id = &flow.id;
        if flow.route.is_empty() {
            errors.push(ValidationError::EmptyRoute(id.clone()));
        }
        let mut seen = BTreeSet::new();
        for link in &flow.route {
            if !seen.insert(link) {
                errors.push(ValidationError::RepeatedLink {
                    flow: id.clone(),
                    link: link.clone(),
                });
            }
            if !links.contains_key(link) {
                errors.push(ValidationError::UnknownLink {
                    flow: id.clone(),
                    link: link.clone(),
                });
            } else if !links.contains_key(&link.reversed()) {
                errors.push(ValidationError::MissingReverseLink {
                    flow: id.clone(),
                    link: link.reversed(),
                });
            }
        }
        if matches!(&flow.demand, Rate::Finite(d) if !d.is_positive()) {
            errors.push(ValidationError::NonPositiveDemand(id.clone()));
        }
        let mut earliest = Time::zero();
        let mut times_ok = !flow.intervals.is_empty();
        for (i, interval) in flow.intervals.iter().enumerate() {
            times_ok &= interval.start >= earliest;
            match &interval.stop {
                Some(stop) => {
                    times_ok &= &interval.start < stop;
                    earliest = stop.clone();
                }
                None => times_ok &= i + 1 == flow.intervals.len(),
            }
        }
        if !times_ok {
            errors.push(ValidationError::InconsistentTimes(id.clone()));
        }
        if flow.initial_rate.as_ref().is_some_and(|r| r.is_negative()) {
            errors.push(ValidationError::NegativeInitialRate(id.clone()));
        }
        reverse.insert(id.clone(), reverse_route(&flow.route));
        if flows.insert(id.clone(), flow.clone()).is_some() {
            errors.push(ValidationError::DuplicateFlow(id.clone()));
        }
    }

    if config.k.is_negative() {
        errors.push(ValidationError::NegativeK);
    }
    if !config.control_interval.is_positive() {
        errors.push(ValidationError::NonPositiveControlInterval);
    }
    if config.duration.is_negative() {
        errors.push(ValidationError::NegativeDuration);
    }
    if config.jitter.is_negative() {
        errors.push(ValidationError::NegativeJitter);
    }
    let required = config.required_d_bound();
    if config.d_bound < required {
        errors.push(ValidationError::DBoundTooSmall {
            d_bound: fmt_exact(&config.d_bound),
            required: fmt_exact(&required),
        });
    }

    if errors.is_empty() {
        Ok(Scenario {
            config,
            links,
            flows,
            reverse,
        })
    } else {
        Err(errors)
    }
}

/// Direction-flipped links of `route` in reverse order.
pub fn reverse_route(route: &[LinkId]) -> Vec<LinkId> {
    route.iter().rev().map(LinkId::reversed).collect()
}

/// Rate assigned to each flow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RateVector(pub BTreeMap<FlowId, Rational>);

impl RateVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, flow: &FlowId) -> Option<&Rational> {
        self.0.get(flow)
    }

    pub fn insert(&mut self, flow: FlowId, rate: Rational) {
        self.0.insert(flow, rate);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FlowId, &Rational)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(FlowId, Rational)> for RateVector {
    fn from_iter<I: IntoIterator<Item = (FlowId, Rational)>>(iter: I) -> Self {
        RateVector(iter.into_iter().collect())
    }
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn k(&self) -> &Rational {
        &self.config.k
    }

    pub fn control_interval(&self) -> &Time {
        &self.config.control_interval
    }

    pub fn d_bound(&self) -> &Time {
        &self.config.d_bound
    }

    pub fn duration(&self) -> &Time {
        &self.config.duration
    }

    pub fn jitter(&self) -> &Time {
        &self.config.jitter
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn links(&self) -> impl Iterator<Item = &DirectedLink> {
        self.links.values()
    }

    pub fn link(&self, id: &LinkId) -> Option<&DirectedLink> {
        self.links.get(id)
    }

    pub fn flows(&self) -> impl Iterator<Item = &FlowSpec> {
        self.flows.values()
    }

    pub fn flow(&self, id: &FlowId) -> Option<&FlowSpec> {
        self.flows.get(id)
    }

    pub fn reverse_route_of(&self, id: &FlowId) -> &[LinkId] {
        self.reverse.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Flows active at time `t` (start <= t < stop).
    pub fn active_at(&self, t: &Time) -> Vec<&FlowSpec> {
        self.flows.values().filter(|f| f.is_active_at(t)).collect()
    }

    /// Load weight of `flow` on `link`: 1 per forward crossing plus `k` per
    /// feedback crossing.
    pub fn weight(&self, flow: &FlowId, link: &LinkId) -> Rational {
        let Some(spec) = self.flows.get(flow) else {
            return Rational::zero();
        };
        let mut w = Rational::zero();
        if spec.route.contains(link) {
            w += Rational::from_integer(1.into());
        }
        if self.reverse_route_of(flow).contains(link) {
            w += &self.config.k;
        }
        w
    }

    /// Links on which `flow` places positive weight.
    pub fn weighted_links(&self, flow: &FlowId) -> Vec<LinkId> {
        let mut out: BTreeSet<LinkId> = BTreeSet::new();
        if let Some(spec) = self.flows.get(flow) {
            out.extend(spec.route.iter().cloned());
            if self.config.k.is_positive() {
                out.extend(self.reverse_route_of(flow).iter().cloned());
            }
        }
        out.into_iter().collect()
    }

    /// Times strictly inside `(0, duration)` at which the active set changes.
    pub fn epoch_boundaries(&self) -> Vec<Time> {
        let mut times = BTreeSet::new();
        for f in self.flows.values() {
            for i in &f.intervals {
                times.insert(i.start.clone());
                if let Some(s) = &i.stop {
                    times.insert(s.clone());
                }
            }
        }
        times
            .into_iter()
            .filter(|t| t.is_positive() && t < &self.config.duration)
            .collect()
    }
}

/// Forward plus `k`-weighted feedback load that `rates` place on `link`.
/// Flows absent from `rates` contribute nothing.
pub fn link_load(rates: &RateVector, link: &LinkId, scenario: &Scenario) -> Rational {
    rates
        .iter()
        .map(|(flow, rate)| scenario.weight(flow, link) * rate)
        .fold(Rational::zero(), |acc, x| acc + x)
}
