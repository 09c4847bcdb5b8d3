//! Deterministic discrete-event simulation of the distributed protocol.
//!
//! Sources emit control packets every control interval. A packet visits the
//! links of its flow's forward route, is turned around at the destination and
//! visits the reverse route back to the source. Each link whose load the flow
//! contributes to (every forward link, and every feedback link when `k > 0`)
//! processes the packet through its [`LinkControlState`]. Per-hop propagation
//! delay is the link delay plus a seeded random jitter.
//!
//! Events at equal times are ordered by kind (epoch marks, leaves,
//! deregistrations, joins, packets, timers, pending increases), then flow id,
//! then insertion sequence, so a run is a pure function of the scenario, the
//! options and the initial world.

pub mod perturb;
pub mod report;
pub mod trace;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::endpoint::{destination_reflect, ActualRatePolicy, ControlPacket, Leg, SourceState};
use crate::model::{FlowId, LinkId, Scenario};
use crate::rate::{fmt_exact, Rational, Time};
use crate::switch::{LinkControlState, MConsistencyViolation, RecordingPolicy, SwitchError};

pub use perturb::{inject_initial_conditions, inject_with, InFlight, InitialWorld, PerturbConfig};
pub use report::{
    actual_convergence_time, convergence_time, feasibility_monitor, Convergence, ConvergenceReport,
    EpochReport, EpochWindow, FeasibilityViolation,
};
pub use trace::{SimTrace, TraceRecord, TRACE_HEADER};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub rate_policy: ActualRatePolicy,
    pub recording: RecordingPolicy,
    /// Abort when a link state is not marking consistent after an update.
    pub check_m_consistency: bool,
    /// Abort when an advertized rate drops below `C/n` once all flows of
    /// the epoch are known at all their links.
    pub check_lower_bound: bool,
    /// Abort when link load exceeds capacity, if the delayed-increase policy
    /// is on and the initial actual rates are feasible.
    pub check_feasibility: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rate_policy: ActualRatePolicy::Delayed,
            recording: RecordingPolicy::Arriving,
            check_m_consistency: true,
            check_lower_bound: true,
            check_feasibility: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViolationKind {
    #[error("marking consistency: {0}")]
    MConsistency(MConsistencyViolation),
    #[error("{link}: advertized rate {advertized} below fair share {fair_share}")]
    LowerBound {
        link: LinkId,
        advertized: String,
        fair_share: String,
    },
    #[error("{link}: load {load} exceeds capacity {capacity}")]
    Infeasible {
        link: LinkId,
        load: String,
        capacity: String,
    },
    #[error("flow {flow}: round trip plus control interval {observed} exceeds D = {d_bound}")]
    RoundTrip {
        flow: FlowId,
        observed: String,
        d_bound: String,
    },
    #[error("switch: {0}")]
    Switch(SwitchError),
}

/// A monitor failure with enough context to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("t={time} during {event}: {kind} [state: {digest}]")]
pub struct MonitorViolation {
    pub time: String,
    pub event: String,
    pub kind: Box<ViolationKind>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EventKind {
    EpochMark,
    FlowLeave,
    Deregister(LinkId),
    FlowJoin,
    Packet {
        packet: ControlPacket,
        hop: usize,
        injected: bool,
    },
    /// Carries the join count of the flow so timers of an earlier session die out.
    ControlTimer(u64),
    PendingIncrease,
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::EpochMark => 0,
            EventKind::FlowLeave => 1,
            EventKind::Deregister(_) => 2,
            EventKind::FlowJoin => 3,
            EventKind::Packet { .. } => 4,
            EventKind::ControlTimer(_) => 5,
            EventKind::PendingIncrease => 6,
        }
    }

    fn describe(&self, flow: &FlowId) -> String {
        match self {
            EventKind::EpochMark => "epoch mark".to_string(),
            EventKind::FlowLeave => format!("leave of {flow}"),
            EventKind::Deregister(l) => format!("deregistration of {flow} at {l}"),
            EventKind::FlowJoin => format!("join of {flow}"),
            EventKind::Packet { hop, packet, .. } => format!(
                "{} packet of {flow} at hop {hop} (rho={}, u={})",
                packet.leg,
                packet.stamped,
                u8::from(packet.u_bit)
            ),
            EventKind::ControlTimer(_) => format!("control timer of {flow}"),
            EventKind::PendingIncrease => format!("pending increase of {flow}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Scheduled {
    at: Time,
    flow: FlowId,
    seq: u64,
    kind: EventKind,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.at, self.kind.rank(), &self.flow, self.seq).cmp(&(
            &other.at,
            other.kind.rank(),
            &other.flow,
            other.seq,
        ))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Counters gathered while running.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    pub m_consistency_checks: u64,
    pub lower_bound_checks: u64,
    /// Links whose injected initial state was not marking consistent.
    pub initially_inconsistent_links: usize,
    pub max_round_trip: Option<Time>,
    /// Per epoch, when every active flow was known at all its links.
    pub t0: Vec<Option<Time>>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    opts: &'a SimOptions,
    now: Time,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    rng: ChaCha8Rng,
    switches: BTreeMap<LinkId, LinkControlState>,
    sources: BTreeMap<FlowId, SourceState>,
    preseeded: BTreeMap<FlowId, SourceState>,
    active: BTreeSet<FlowId>,
    sessions: BTreeMap<FlowId, u64>,
    hops: BTreeMap<FlowId, Vec<(LinkId, Leg)>>,
    trace: SimTrace,
    pending_setup: BTreeSet<(FlowId, LinkId)>,
    pending_teardown: BTreeSet<(FlowId, LinkId)>,
    dirty_links: BTreeSet<LinkId>,
    injected_links: Vec<LinkId>,
    enforce_feasibility: bool,
    stats: RunStats,
}

/// Run `scenario` from a clean start.
pub fn run(
    scenario: &Scenario,
    options: &SimOptions,
) -> Result<(SimTrace, ConvergenceReport), MonitorViolation> {
    run_from(scenario, options, InitialWorld::clean())
}

/// Run `scenario` starting from `world`.
pub fn run_from(
    scenario: &Scenario,
    options: &SimOptions,
    world: InitialWorld,
) -> Result<(SimTrace, ConvergenceReport), MonitorViolation> {
    let mut engine = Engine::new(scenario, options, world);
    engine.run()?;
    let Engine { trace, stats, .. } = engine;
    let report = ConvergenceReport::build(scenario, &trace, stats);
    Ok((trace, report))
}

fn initial_rates_feasible(scenario: &Scenario) -> bool {
    scenario.links().all(|link| {
        let load = scenario
            .active_at(&Time::zero())
            .into_iter()
            .filter_map(|f| {
                f.initial_rate
                    .as_ref()
                    .map(|r| scenario.weight(&f.id, &link.id) * r)
            })
            .fold(Rational::zero(), |a, b| a + b);
        load <= link.capacity
    })
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, opts: &'a SimOptions, world: InitialWorld) -> Self {
        let mut switches: BTreeMap<LinkId, LinkControlState> = scenario
            .links()
            .map(|l| (l.id.clone(), LinkControlState::new(l)))
            .collect();
        let mut stats = RunStats::default();
        let injected_links: Vec<LinkId> = world.switches.keys().cloned().collect();
        for (id, state) in world.switches {
            if state.check_m_consistency().is_err() {
                stats.initially_inconsistent_links += 1;
            }
            switches.insert(id, state);
        }
        for state in switches.values_mut() {
            *state = state.clone().with_policy(opts.recording);
        }

        let hops = scenario
            .flows()
            .map(|f| {
                let path = f
                    .route
                    .iter()
                    .map(|l| (l.clone(), Leg::Outbound))
                    .chain(
                        scenario
                            .reverse_route_of(&f.id)
                            .iter()
                            .map(|l| (l.clone(), Leg::Returning)),
                    )
                    .collect();
                (f.id.clone(), path)
            })
            .collect();

        let mut engine = Self {
            scenario,
            opts,
            now: Time::zero(),
            queue: BinaryHeap::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed()),
            switches,
            sources: BTreeMap::new(),
            preseeded: world.sources,
            active: BTreeSet::new(),
            sessions: BTreeMap::new(),
            hops,
            trace: SimTrace::default(),
            pending_setup: BTreeSet::new(),
            pending_teardown: BTreeSet::new(),
            dirty_links: BTreeSet::new(),
            injected_links,
            enforce_feasibility: opts.check_feasibility
                && opts.rate_policy == ActualRatePolicy::Delayed
                && initial_rates_feasible(scenario),
            stats,
        };

        let no_flow = FlowId(String::new());
        engine.schedule(Time::zero(), no_flow.clone(), EventKind::EpochMark);
        for t in scenario.epoch_boundaries() {
            engine.schedule(t, no_flow.clone(), EventKind::EpochMark);
        }
        for f in scenario.flows() {
            for i in &f.intervals {
                engine.schedule(i.start.clone(), f.id.clone(), EventKind::FlowJoin);
                if let Some(stop) = &i.stop {
                    engine.schedule(stop.clone(), f.id.clone(), EventKind::FlowLeave);
                }
            }
        }
        for p in world.in_flight {
            let flow = p.packet.flow.clone();
            engine.schedule(
                p.arrive_at,
                flow,
                EventKind::Packet {
                    packet: p.packet,
                    hop: p.hop,
                    injected: true,
                },
            );
        }
        engine
    }

    fn schedule(&mut self, at: Time, flow: FlowId, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            at,
            flow,
            seq: self.seq,
            kind,
        }));
    }

    fn run(&mut self) -> Result<(), MonitorViolation> {
        let duration = self.scenario.duration().clone();
        if duration.is_positive() {
            for (link, state) in &self.switches {
                self.trace.push(TraceRecord::Advertized {
                    at: Time::zero(),
                    link: link.clone(),
                    rate: state.advertized_rate().clone(),
                });
            }
            self.repair_injected()?;
        }
        while let Some(Reverse(ev)) = self.queue.pop() {
            if ev.at >= duration {
                break;
            }
            if ev.at > self.now {
                self.end_of_instant()?;
                self.now = ev.at.clone();
            }
            self.stats.events += 1;
            let desc = ev.kind.describe(&ev.flow);
            self.handle(ev.flow, ev.kind, &desc)?;
        }
        if !self.stats.t0.is_empty() {
            self.end_of_instant()?;
        }
        Ok(())
    }

    /// Recompute every injected link state once at time zero.
    fn repair_injected(&mut self) -> Result<(), MonitorViolation> {
        for link in std::mem::take(&mut self.injected_links) {
            let before = self.switches[&link].clone();
            self.switches
                .get_mut(&link)
                .expect("injected link exists")
                .compute_advertized_rate();
            self.after_switch_update(&link, &before, "repair pass")?;
        }
        Ok(())
    }

    fn violation(&self, event: &str, kind: ViolationKind, digest: String) -> MonitorViolation {
        MonitorViolation {
            time: fmt_exact(&self.now),
            event: event.to_string(),
            kind: Box::new(kind),
            digest,
        }
    }

    /// Work done once all events of the current instant are processed.
    fn end_of_instant(&mut self) -> Result<(), MonitorViolation> {
        if let Some(t0) = self.stats.t0.last_mut() {
            if t0.is_none() && self.pending_setup.is_empty() && self.pending_teardown.is_empty() {
                *t0 = Some(self.now.clone());
            }
        }
        let dirty = std::mem::take(&mut self.dirty_links);
        for link in dirty {
            let Some(spec) = self.scenario.link(&link) else {
                continue;
            };
            let load = self
                .sources
                .values()
                .map(|s| self.scenario.weight(&s.flow, &link) * &s.actual_rate)
                .fold(Rational::zero(), |a, b| a + b);
            if self.enforce_feasibility && load > spec.capacity {
                let digest = self
                    .sources
                    .values()
                    .map(|s| format!("{}={}", s.flow, fmt_exact(&s.actual_rate)))
                    .collect::<Vec<_>>()
                    .join(" ");
                return Err(self.violation(
                    "end of instant",
                    ViolationKind::Infeasible {
                        link: link.clone(),
                        load: fmt_exact(&load),
                        capacity: fmt_exact(&spec.capacity),
                    },
                    digest,
                ));
            }
        }
        Ok(())
    }

    fn handle(
        &mut self,
        flow: FlowId,
        kind: EventKind,
        desc: &str,
    ) -> Result<(), MonitorViolation> {
        match kind {
            EventKind::EpochMark => {
                let index = self.stats.t0.len();
                let active = self
                    .scenario
                    .active_at(&self.now)
                    .into_iter()
                    .map(|f| f.id.clone())
                    .collect();
                self.trace.push(TraceRecord::Epoch {
                    at: self.now.clone(),
                    index,
                    active,
                });
                self.stats.t0.push(None);
                Ok(())
            }
            EventKind::FlowJoin => self.join(flow, desc),
            EventKind::FlowLeave => {
                self.leave(flow);
                Ok(())
            }
            EventKind::Deregister(link) => self.deregister(flow, link, desc),
            EventKind::Packet {
                packet,
                hop,
                injected,
            } => self.hop(packet, hop, injected, desc),
            EventKind::ControlTimer(session) => {
                if self.sessions.get(&flow) == Some(&session) {
                    self.control_tick(flow, desc)
                } else {
                    Ok(())
                }
            }
            EventKind::PendingIncrease => {
                if let Some(source) = self.sources.get_mut(&flow) {
                    if source.apply_pending(&self.now) {
                        let rate = source.actual_rate.clone();
                        self.record_actual(&flow, rate);
                    }
                }
                Ok(())
            }
        }
    }

    fn record_actual(&mut self, flow: &FlowId, rate: Rational) {
        self.trace.push(TraceRecord::Actual {
            at: self.now.clone(),
            flow: flow.clone(),
            rate,
        });
        self.dirty_links.extend(self.scenario.weighted_links(flow));
    }

    fn join(&mut self, flow: FlowId, desc: &str) -> Result<(), MonitorViolation> {
        let spec = self.scenario.flow(&flow).expect("scheduled flow exists");
        let initial = if self.now.is_zero() {
            spec.initial_rate.clone().unwrap_or_else(Rational::zero)
        } else {
            Rational::zero()
        };
        let source = match self.preseeded.remove(&flow) {
            Some(s) => s,
            None => SourceState::new(
                flow.clone(),
                spec.demand.clone(),
                self.scenario.d_bound().clone(),
            ),
        }
        .with_actual_rate(initial.clone())
        .with_policy(self.opts.rate_policy);

        self.active.insert(flow.clone());
        *self.sessions.entry(flow.clone()).or_default() += 1;
        self.trace.push(TraceRecord::Join {
            at: self.now.clone(),
            flow: flow.clone(),
        });
        self.trace.push(TraceRecord::Estimate {
            at: self.now.clone(),
            flow: flow.clone(),
            rate: source.rate_estimate.clone(),
        });
        self.sources.insert(flow.clone(), source);
        self.record_actual(&flow, initial);
        for link in self.scenario.weighted_links(&flow) {
            if !self.switches[&link].is_registered(&flow) {
                self.pending_setup.insert((flow.clone(), link));
            }
        }
        self.control_tick(flow, desc)
    }

    fn leave(&mut self, flow: FlowId) {
        self.active.remove(&flow);
        self.trace.push(TraceRecord::Leave {
            at: self.now.clone(),
            flow: flow.clone(),
        });
        if let Some(source) = self.sources.remove(&flow) {
            if source.actual_rate.is_positive() {
                self.record_actual(&flow, Rational::zero());
            }
        }
        self.pending_setup.retain(|(f, _)| f != &flow);

        let mut offset = Time::zero();
        let hops = self.hops[&flow].clone();
        for (link, _) in hops {
            if self.switches[&link].is_registered(&flow) {
                self.pending_teardown.insert((flow.clone(), link.clone()));
                let at = &self.now + &offset;
                self.schedule(at, flow.clone(), EventKind::Deregister(link.clone()));
            }
            offset += &self.scenario.link(&link).expect("validated").delay;
        }
    }

    fn deregister(
        &mut self,
        flow: FlowId,
        link: LinkId,
        desc: &str,
    ) -> Result<(), MonitorViolation> {
        self.pending_teardown.remove(&(flow.clone(), link.clone()));
        if self.active.contains(&flow) || !self.switches[&link].is_registered(&flow) {
            return Ok(());
        }
        let before = self.switches[&link].clone();
        let sw = self.switches.get_mut(&link).expect("link exists");
        sw.deregister_flow(&flow).map_err(|e| {
            let digest = before.digest();
            MonitorViolation {
                time: fmt_exact(&self.now),
                event: desc.to_string(),
                kind: Box::new(ViolationKind::Switch(e)),
                digest,
            }
        })?;
        self.trace.push(TraceRecord::Deregister {
            at: self.now.clone(),
            link: link.clone(),
            flow,
        });
        self.after_switch_update(&link, &before, desc)
    }

    fn control_tick(&mut self, flow: FlowId, desc: &str) -> Result<(), MonitorViolation> {
        let Some(source) = self.sources.get(&flow) else {
            return Ok(());
        };
        if !self.active.contains(&flow) {
            return Ok(());
        }
        let packet = source.emit_control(&self.now);
        let next = &self.now + self.scenario.control_interval();
        let session = self.sessions[&flow];
        self.schedule(next, flow, EventKind::ControlTimer(session));
        self.hop(packet, 0, false, desc)
    }

    fn jitter(&mut self) -> Time {
        let jitter = self.scenario.jitter();
        if jitter.is_zero() {
            return Time::zero();
        }
        jitter * Rational::new(self.rng.gen_range(0..=1000).into(), 1000.into())
    }

    fn hop(
        &mut self,
        packet: ControlPacket,
        index: usize,
        injected: bool,
        desc: &str,
    ) -> Result<(), MonitorViolation> {
        let flow = packet.flow.clone();
        if !self.active.contains(&flow) {
            self.trace.push(TraceRecord::Dropped {
                at: self.now.clone(),
                flow,
            });
            return Ok(());
        }
        let path = &self.hops[&flow];
        if index >= path.len() {
            return self.deliver(packet, injected, desc);
        }
        let (link, leg) = path[index].clone();
        let mut packet = packet;
        if leg == Leg::Returning && packet.leg == Leg::Outbound {
            packet = destination_reflect(&packet);
        }
        if leg == Leg::Outbound || self.scenario.k().is_positive() {
            packet = self.process_at(&link, leg, packet, desc)?;
        }
        let delay = self.scenario.link(&link).expect("validated").delay.clone() + self.jitter();
        let at = &self.now + delay;
        self.schedule(
            at,
            flow,
            EventKind::Packet {
                packet,
                hop: index + 1,
                injected,
            },
        );
        Ok(())
    }

    fn process_at(
        &mut self,
        link: &LinkId,
        leg: Leg,
        packet: ControlPacket,
        desc: &str,
    ) -> Result<ControlPacket, MonitorViolation> {
        let flow = packet.flow.clone();
        let before = self.switches[link].clone();
        let sw = self.switches.get_mut(link).expect("link exists");
        let registered = if sw.is_registered(&flow) {
            Ok(false)
        } else {
            let weight = self.scenario.weight(&flow, link);
            sw.register_flow(flow.clone(), weight).map(|()| true)
        };
        let result =
            registered.and_then(|reg| sw.process_control_packet(&packet).map(|out| (reg, out)));
        let (registered, out) = result.map_err(|e| MonitorViolation {
            time: fmt_exact(&self.now),
            event: desc.to_string(),
            kind: Box::new(ViolationKind::Switch(e)),
            digest: before.digest(),
        })?;
        if registered {
            self.pending_setup.remove(&(flow.clone(), link.clone()));
            self.trace.push(TraceRecord::Register {
                at: self.now.clone(),
                link: link.clone(),
                flow: flow.clone(),
            });
        }
        self.trace.push(TraceRecord::Hop {
            at: self.now.clone(),
            flow,
            link: link.clone(),
            leg,
            stamped_in: packet.stamped,
            u_in: packet.u_bit,
            stamped_out: out.stamped.clone(),
            u_out: out.u_bit,
        });
        self.after_switch_update(link, &before, desc)?;
        Ok(out)
    }

    /// Trace what changed at `link` and run the link monitors.
    fn after_switch_update(
        &mut self,
        link: &LinkId,
        before: &LinkControlState,
        desc: &str,
    ) -> Result<(), MonitorViolation> {
        let sw = &self.switches[link];
        if sw.advertized_rate() != before.advertized_rate() {
            self.trace.push(TraceRecord::Advertized {
                at: self.now.clone(),
                link: link.clone(),
                rate: sw.advertized_rate().clone(),
            });
        }
        for (flow, entry) in sw.entries() {
            if before.entry(flow).map(|e| e.mark) != Some(entry.mark) {
                self.trace.push(TraceRecord::Marked {
                    at: self.now.clone(),
                    link: link.clone(),
                    flow: flow.clone(),
                    mark: entry.mark,
                });
            }
        }

        if self.opts.check_m_consistency {
            self.stats.m_consistency_checks += 1;
            if let Err(e) = sw.check_m_consistency() {
                return Err(self.violation(desc, ViolationKind::MConsistency(e), sw.digest()));
            }
        }
        let past_t0 = self.stats.t0.last().is_some_and(Option::is_some);
        if self.opts.check_lower_bound && past_t0 {
            self.stats.lower_bound_checks += 1;
            let n = sw.weighted_count();
            if n.is_positive() {
                let share = sw.capacity() / &n;
                if sw.advertized_rate() < &share {
                    return Err(self.violation(
                        desc,
                        ViolationKind::LowerBound {
                            link: link.clone(),
                            advertized: fmt_exact(sw.advertized_rate()),
                            fair_share: fmt_exact(&share),
                        },
                        sw.digest(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn deliver(
        &mut self,
        packet: ControlPacket,
        injected: bool,
        desc: &str,
    ) -> Result<(), MonitorViolation> {
        let flow = packet.flow.clone();
        if !injected {
            let rtt = &self.now - &packet.sent_at;
            let observed = &rtt + self.scenario.control_interval();
            if &observed > self.scenario.d_bound() {
                return Err(self.violation(
                    desc,
                    ViolationKind::RoundTrip {
                        flow,
                        observed: fmt_exact(&observed),
                        d_bound: fmt_exact(self.scenario.d_bound()),
                    },
                    String::new(),
                ));
            }
            if self.stats.max_round_trip.as_ref().is_none_or(|m| &rtt > m) {
                self.stats.max_round_trip = Some(rtt);
            }
        }
        self.trace.push(TraceRecord::Deliver {
            at: self.now.clone(),
            flow: flow.clone(),
            sent_at: packet.sent_at.clone(),
            stamped: packet.stamped.clone(),
            u_bit: packet.u_bit,
            injected,
        });

        let source = self
            .sources
            .get_mut(&flow)
            .expect("active flow has a source");
        let before_estimate = source.rate_estimate.clone();
        let before_actual = source.actual_rate.clone();
        let before_pending = source.pending_increase.clone();
        let before_allocation = source.last_allocation.clone();
        source.on_feedback(&packet, &self.now);
        let estimate = source.rate_estimate.clone();
        let actual = source.actual_rate.clone();
        let pending = source.pending_increase.clone();
        let allocation = source.last_allocation.clone();

        if estimate != before_estimate {
            self.trace.push(TraceRecord::Estimate {
                at: self.now.clone(),
                flow: flow.clone(),
                rate: estimate,
            });
        }
        if allocation != before_allocation {
            if let Some(rate) = allocation {
                self.trace.push(TraceRecord::Allocation {
                    at: self.now.clone(),
                    flow: flow.clone(),
                    rate,
                });
            }
        }
        if actual != before_actual {
            self.record_actual(&flow, actual);
        }
        if let Some(p) = pending {
            if before_pending.as_ref() != Some(&p) {
                self.schedule(p.apply_at, flow, EventKind::PendingIncrease);
            }
        }
        Ok(())
    }
}
