//! Sources and destinations.

use std::fmt;

use num_traits::Zero;

use crate::model::FlowId;
use crate::rate::{int, Rate, Rational, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leg {
    /// Source to destination along the forward route.
    Outbound,
    /// Destination back to source along the reverse route.
    Returning,
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Outbound => "out",
            Leg::Returning => "ret",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlPacket {
    pub flow: FlowId,
    pub leg: Leg,
    /// Stamped rate; switches only ever lower it.
    pub stamped: Rate,
    /// Underloading bit: set when some switch (or the source's own demand)
    /// limits the flow.
    pub u_bit: bool,
    pub sent_at: Time,
}

/// How a source moves its actual transmission rate in response to feedback.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ActualRatePolicy {
    /// Decrease at once on a constraining feedback, increase only `2D` later,
    /// ignore unconstrained feedback.
    #[default]
    Delayed,
    /// Follow the finite rate estimate immediately. Not feasibility
    /// preserving; kept as a negative control.
    Immediate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingIncrease {
    pub target: Rational,
    pub apply_at: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceState {
    pub flow: FlowId,
    pub demand: Rate,
    /// Value written into outgoing stamped-rate fields.
    pub rate_estimate: Rate,
    pub actual_rate: Rational,
    pub pending_increase: Option<PendingIncrease>,
    pub d_bound: Time,
    /// Stamped rate of the most recent feedback, if any.
    pub last_allocation: Option<Rate>,
    pub policy: ActualRatePolicy,
}

impl SourceState {
    /// Fresh source: the estimate starts at the demand and nothing has been
    /// heard from the network yet.
    pub fn new(flow: FlowId, demand: Rate, d_bound: Time) -> Self {
        Self {
            flow,
            rate_estimate: demand.clone(),
            demand,
            actual_rate: Rational::zero(),
            pending_increase: None,
            d_bound,
            last_allocation: None,
            policy: ActualRatePolicy::default(),
        }
    }

    pub fn with_actual_rate(mut self, rate: Rational) -> Self {
        self.actual_rate = rate;
        self
    }

    pub fn with_policy(mut self, policy: ActualRatePolicy) -> Self {
        self.policy = policy;
        self
    }

    /// True when the network has already offered at least the (finite)
    /// demand, i.e. the flow is limited by its own demand.
    fn demand_limited(&self) -> bool {
        match (&self.demand, &self.last_allocation) {
            (Rate::Finite(_), Some(alloc)) => &self.demand <= alloc,
            _ => false,
        }
    }

    /// Next control packet: stamped with the current estimate, u-bit clear
    /// unless the flow is demand limited.
    pub fn emit_control(&self, now: &Time) -> ControlPacket {
        ControlPacket {
            flow: self.flow.clone(),
            leg: Leg::Outbound,
            stamped: self.rate_estimate.clone(),
            u_bit: self.demand_limited(),
            sent_at: now.clone(),
        }
    }

    /// Absorb a returning control packet.
    ///
    /// With the u-bit set the estimate becomes the returned stamped rate
    /// (never above the demand); otherwise it goes back up to the demand.
    pub fn on_feedback(&mut self, packet: &ControlPacket, now: &Time) {
        debug_assert_eq!(packet.leg, Leg::Returning);
        self.rate_estimate = if packet.u_bit {
            packet.stamped.clone().min(self.demand.clone())
        } else {
            self.demand.clone()
        };
        self.last_allocation = Some(packet.stamped.clone());
        self.set_actual_rate(packet, now);
    }

    /// Adjust the actual transmission rate for one feedback packet.
    pub fn set_actual_rate(&mut self, packet: &ControlPacket, now: &Time) {
        match self.policy {
            ActualRatePolicy::Delayed => {
                if !packet.u_bit {
                    return;
                }
                let offered = packet.stamped.min_finite_or(&self.demand);
                let Some(offered) = offered else { return };
                if offered < self.actual_rate {
                    self.actual_rate = offered;
                    self.pending_increase = None;
                } else if offered > self.actual_rate {
                    let keep = self
                        .pending_increase
                        .as_ref()
                        .is_some_and(|p| p.target == offered);
                    if !keep {
                        self.pending_increase = Some(PendingIncrease {
                            target: offered,
                            apply_at: now + int(2) * &self.d_bound,
                        });
                    }
                } else {
                    self.pending_increase = None;
                }
            }
            ActualRatePolicy::Immediate => {
                if let Rate::Finite(r) = &self.rate_estimate {
                    self.actual_rate = r.clone();
                }
                self.pending_increase = None;
            }
        }
    }

    /// Apply a pending increase that is due at `now`. Returns whether the
    /// actual rate changed.
    pub fn apply_pending(&mut self, now: &Time) -> bool {
        match &self.pending_increase {
            Some(p) if &p.apply_at <= now => {
                let target = p.target.clone();
                self.pending_increase = None;
                let changed = target != self.actual_rate;
                self.actual_rate = target;
                changed
            }
            _ => false,
        }
    }
}

impl Rate {
    /// `min(self, other)` when at least one side is finite.
    fn min_finite_or(&self, other: &Rate) -> Option<Rational> {
        match (self, other) {
            (Rate::Infinite, Rate::Infinite) => None,
            (Rate::Infinite, Rate::Finite(b)) => Some(b.clone()),
            (Rate::Finite(a), _) => Some(other.min_finite(a)),
        }
    }
}

/// Turn an outbound packet around at the destination.
pub fn destination_reflect(packet: &ControlPacket) -> ControlPacket {
    ControlPacket {
        leg: Leg::Returning,
        ..packet.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn source(demand: Rate) -> SourceState {
        SourceState::new("A".into(), demand, int(5))
    }

    fn feedback(stamped: Rate, u_bit: bool) -> ControlPacket {
        ControlPacket {
            flow: "A".into(),
            leg: Leg::Returning,
            stamped,
            u_bit,
            sent_at: int(0),
        }
    }

    fn fin(n: i64) -> Rate {
        Rate::Finite(int(n))
    }

    #[test]
    fn emits_estimate_with_clear_u_bit() {
        let s = source(fin(70));
        let p = s.emit_control(&int(3));
        assert_eq!(p.stamped, fin(70));
        assert!(!p.u_bit);
        assert_eq!(p.leg, Leg::Outbound);
        assert_eq!(p.sent_at, int(3));
    }

    #[test]
    fn initial_infinite_estimate() {
        let p = source(Rate::Infinite).emit_control(&int(0));
        assert_eq!(p.stamped, Rate::Infinite);
        assert!(!p.u_bit);
    }

    #[test]
    fn demand_below_allocation_sets_u_bit() {
        let mut s = source(fin(10));
        s.last_allocation = Some(fin(30));
        let p = s.emit_control(&int(0));
        assert_eq!(p.stamped, fin(10));
        assert!(p.u_bit);
    }

    #[test]
    fn constrained_feedback_sets_estimate() {
        let mut s = source(Rate::Infinite);
        s.on_feedback(&feedback(fin(30), true), &int(1));
        assert_eq!(s.rate_estimate, fin(30));
    }

    #[test]
    fn unconstrained_feedback_restores_demand() {
        let mut s = source(fin(70));
        s.rate_estimate = fin(20);
        s.on_feedback(&feedback(fin(70), false), &int(1));
        assert_eq!(s.rate_estimate, fin(70));
    }

    #[test]
    fn unconstrained_feedback_with_infinite_demand_does_not_raise_actual() {
        let mut s = source(Rate::Infinite).with_actual_rate(int(20));
        s.on_feedback(&feedback(fin(30), false), &int(1));
        assert_eq!(s.rate_estimate, Rate::Infinite);
        assert_eq!(s.actual_rate, int(20));
        assert!(s.pending_increase.is_none());
    }

    #[test]
    fn estimate_never_exceeds_finite_demand() {
        let mut s = source(fin(10));
        s.on_feedback(&feedback(fin(500), true), &int(1));
        assert_eq!(s.rate_estimate, fin(10));
    }

    #[test]
    fn decrease_is_immediate() {
        let mut s = source(Rate::Infinite).with_actual_rate(int(40));
        s.on_feedback(&feedback(fin(30), true), &int(1));
        assert_eq!(s.actual_rate, int(30));
    }

    #[test]
    fn increase_waits_two_round_trip_bounds() {
        let mut s = source(Rate::Infinite).with_actual_rate(int(20));
        s.on_feedback(&feedback(fin(30), true), &int(4));
        assert_eq!(s.actual_rate, int(20));
        let p = s.pending_increase.clone().unwrap();
        assert_eq!(p.apply_at, int(14));
        assert!(!s.apply_pending(&int(13)));
        assert_eq!(s.actual_rate, int(20));
        assert!(s.apply_pending(&int(14)));
        assert_eq!(s.actual_rate, int(30));
    }

    #[test]
    fn repeated_offer_keeps_original_deadline() {
        let mut s = source(Rate::Infinite).with_actual_rate(int(20));
        s.on_feedback(&feedback(fin(30), true), &int(4));
        s.on_feedback(&feedback(fin(30), true), &int(6));
        assert_eq!(s.pending_increase.as_ref().unwrap().apply_at, int(14));
        s.on_feedback(&feedback(fin(25), true), &int(7));
        assert_eq!(
            s.pending_increase,
            Some(PendingIncrease {
                target: int(25),
                apply_at: int(17)
            })
        );
        s.on_feedback(&feedback(fin(10), true), &int(8));
        assert!(s.pending_increase.is_none());
        assert_eq!(s.actual_rate, int(10));
    }

    #[test]
    fn clear_u_bit_leaves_actual_rate() {
        let mut s = source(fin(70)).with_actual_rate(int(20));
        s.on_feedback(&feedback(fin(30), false), &int(1));
        assert_eq!(s.actual_rate, int(20));
    }

    #[test]
    fn immediate_policy_follows_estimate() {
        let mut s = source(Rate::Infinite)
            .with_actual_rate(int(20))
            .with_policy(ActualRatePolicy::Immediate);
        s.on_feedback(&feedback(fin(30), true), &int(1));
        assert_eq!(s.actual_rate, int(30));
    }

    #[test]
    fn reflect_examples() {
        let p = ControlPacket {
            flow: "A".into(),
            leg: Leg::Outbound,
            stamped: fin(30),
            u_bit: true,
            sent_at: int(2),
        };
        let r = destination_reflect(&p);
        assert_eq!(r.leg, Leg::Returning);
        assert_eq!((r.stamped, r.u_bit, r.sent_at), (fin(30), true, int(2)));

        let p = ControlPacket {
            stamped: Rate::Infinite,
            u_bit: false,
            ..p
        };
        let r = destination_reflect(&p);
        assert_eq!(r.stamped, Rate::Infinite);
        assert!(!r.u_bit);
    }

    proptest! {
        #[test]
        fn reflect_preserves_fields(
            num in 0i64..10_000, den in 1i64..100, inf: bool, u: bool, sent in 0i64..1000,
            flow in "[a-z]{1,4}",
        ) {
            let p = ControlPacket {
                flow: flow.as_str().into(),
                leg: Leg::Outbound,
                stamped: if inf { Rate::Infinite } else { Rate::Finite(crate::rate::ratio(num, den)) },
                u_bit: u,
                sent_at: int(sent),
            };
            let r = destination_reflect(&p);
            prop_assert_eq!(r.leg, Leg::Returning);
            prop_assert_eq!(ControlPacket { leg: Leg::Outbound, ..r }, p);
        }
    }
}
