//! Maxmin-fair explicit-rate congestion control.
//!
//! * [`oracle`] computes the maxmin-fair allocation of a static network
//!   centrally and checks candidate allocations independently.
//! * [`switch`] and [`endpoint`] implement the distributed protocol: each
//!   link advertizes a rate from the rates recorded for its flows, sources
//!   stamp control packets with their current estimate and adopt what comes
//!   back.
//! * [`simulator`] runs the protocol event by event in exact arithmetic and
//!   measures convergence against the oracle.

pub mod endpoint;
pub mod generate;
pub mod model;
pub mod oracle;
pub mod rate;
pub mod simulator;
pub mod switch;

pub use endpoint::{destination_reflect, ActualRatePolicy, ControlPacket, Leg, SourceState};
pub use model::{
    link_load, validate_scenario, DirectedLink, FlowId, FlowSpec, LinkId, RateVector, Scenario,
    ScenarioConfig, ValidationError,
};
pub use oracle::{
    bottleneck_levels, check_level_properties, compute_maxmin, compute_maxmin_at,
    convergence_budget, verify_maxmin, MaxminSolution,
};
pub use rate::{Rate, Rational, Time};
pub use simulator::{run, run_from, MonitorViolation, SimOptions, SimTrace};
pub use switch::{LinkControlState, Mark, RecordingPolicy};
