//! Adversarial initial conditions.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::endpoint::{ControlPacket, Leg, SourceState};
use crate::model::{FlowId, LinkId, Scenario};
use crate::rate::{int, Rate, Rational, Time};
use crate::switch::{FlowEntry, LinkControlState, Mark};

/// How much garbage to inject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbConfig {
    pub seed: u64,
    /// Give each link a table with random recorded rates, marks and advertized rate.
    pub switch_tables: bool,
    /// Up to this many packets with arbitrary fields in flight per flow.
    pub max_packets_per_flow: usize,
    /// Start sources with random estimates and allocations.
    pub source_estimates: bool,
}

impl PerturbConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            switch_tables: true,
            max_packets_per_flow: 3,
            source_estimates: true,
        }
    }

    /// Inject nothing; a run from this world equals a clean run.
    pub fn none() -> Self {
        Self {
            seed: 0,
            switch_tables: false,
            max_packets_per_flow: 0,
            source_estimates: false,
        }
    }
}

/// A control packet placed in the network before the run starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InFlight {
    pub arrive_at: Time,
    /// Index into the flow's hop list (forward links, then reverse links).
    pub hop: usize,
    pub packet: ControlPacket,
}

/// Starting state of every link, source and in-flight packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InitialWorld {
    pub switches: BTreeMap<LinkId, LinkControlState>,
    pub sources: BTreeMap<FlowId, SourceState>,
    pub in_flight: Vec<InFlight>,
}

impl InitialWorld {
    pub fn clean() -> Self {
        Self::default()
    }
}

fn random_fraction(rng: &mut ChaCha8Rng, scale: &Rational) -> Rational {
    scale * Rational::new(rng.gen_range(0..=2000).into(), 1000.into())
}

fn random_rate(rng: &mut ChaCha8Rng, scale: &Rational) -> Rate {
    match rng.gen_range(0..8) {
        0 => Rate::Infinite,
        1 => Rate::Finite(Rational::zero()),
        _ => Rate::Finite(random_fraction(rng, scale)),
    }
}

/// Random switch tables, in-flight packets and source estimates for the flows
/// active at time zero, seeded by `seed`.
pub fn inject_initial_conditions(scenario: &Scenario, seed: u64) -> InitialWorld {
    inject_with(scenario, &PerturbConfig::new(seed))
}

pub fn inject_with(scenario: &Scenario, config: &PerturbConfig) -> InitialWorld {
    let mut world = InitialWorld::clean();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let active: Vec<FlowId> = scenario
        .active_at(&Time::zero())
        .into_iter()
        .map(|f| f.id.clone())
        .collect();
    let max_capacity = scenario
        .links()
        .map(|l| l.capacity.clone())
        .max()
        .unwrap_or_else(|| int(1));

    if config.switch_tables {
        for link in scenario.links() {
            let mut entries = BTreeMap::new();
            for flow in &active {
                let weight = scenario.weight(flow, &link.id);
                if weight.is_zero() || rng.gen_bool(0.2) {
                    continue;
                }
                let recorded = match rng.gen_range(0..6) {
                    0 => None,
                    _ => Some(random_rate(&mut rng, &link.capacity)),
                };
                let mark = if rng.gen_bool(0.5) {
                    Mark::Restricted
                } else {
                    Mark::Unrestricted
                };
                entries.insert(
                    flow.clone(),
                    FlowEntry {
                        weight,
                        recorded,
                        mark,
                    },
                );
            }
            let advertized = random_fraction(&mut rng, &link.capacity);
            world.switches.insert(
                link.id.clone(),
                LinkControlState::from_parts(link, entries, advertized),
            );
        }
    }

    if config.source_estimates {
        for flow in &active {
            let spec = scenario.flow(flow).expect("active flow exists");
            let mut source = SourceState::new(
                flow.clone(),
                spec.demand.clone(),
                scenario.d_bound().clone(),
            );
            source.rate_estimate = random_rate(&mut rng, &max_capacity);
            if rng.gen_bool(0.5) {
                source.last_allocation = Some(random_rate(&mut rng, &max_capacity));
            }
            world.sources.insert(flow.clone(), source);
        }
    }

    if config.max_packets_per_flow > 0 {
        for flow in &active {
            let hops = scenario.flow(flow).map_or(0, |f| f.route.len()) * 2;
            let forward = hops / 2;
            for _ in 0..rng.gen_range(0..=config.max_packets_per_flow) {
                let hop = rng.gen_range(0..=hops);
                let arrive_at = random_fraction(&mut rng, scenario.d_bound()) / int(2);
                let packet = ControlPacket {
                    flow: flow.clone(),
                    leg: if hop < forward {
                        Leg::Outbound
                    } else {
                        Leg::Returning
                    },
                    stamped: random_rate(&mut rng, &max_capacity),
                    u_bit: rng.gen_bool(0.5),
                    sent_at: arrive_at.clone(),
                };
                world.in_flight.push(InFlight {
                    arrive_at,
                    hop,
                    packet,
                });
            }
        }
    }
    world
}
