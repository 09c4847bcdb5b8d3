//! Per-link advertized-rate computation.
//!
//! Each directed link keeps the last stamped rate it saw for every flow
//! crossing it, splits the flows into restricted (recorded rate at or below
//! the advertized rate) and unrestricted ones, and advertizes the capacity
//! left over by restricted flows divided among the unrestricted ones:
//!
//! ```text
//! mu = (C - C_R) / (n - n_R)
//! ```
//!
//! where `n` is the weighted flow count (`f + k*b`) and `C_R`, `n_R` are
//! restricted capacity and weighted count.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::endpoint::ControlPacket;
use crate::model::{DirectedLink, FlowId, LinkId};
use crate::rate::{fmt_exact, Rate, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mark {
    Restricted,
    Unrestricted,
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::Restricted => "R",
            Mark::Unrestricted => "U",
        })
    }
}

/// Which stamped value a link records for a flow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RecordingPolicy {
    /// The stamped rate as it arrived, before this link reduced it.
    #[default]
    Arriving,
    /// The stamped rate as it left, after this link's reduction.
    Outgoing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEntry {
    /// `1` for a forward crossing, `k` for a feedback crossing (`1 + k` if both).
    pub weight: Rational,
    /// `None` until the first control packet of the flow is seen.
    pub recorded: Option<Rate>,
    pub mark: Mark,
}

impl FlowEntry {
    fn restricted_rate(&self) -> Option<&Rational> {
        match (&self.mark, &self.recorded) {
            (Mark::Restricted, Some(Rate::Finite(r))) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwitchError {
    #[error("flow {flow} already registered on {link}")]
    AlreadyRegistered { link: LinkId, flow: FlowId },
    #[error("flow {flow} not registered on {link}")]
    NotRegistered { link: LinkId, flow: FlowId },
    #[error("flow {flow} registered on {link} with non-positive weight")]
    NonPositiveWeight { link: LinkId, flow: FlowId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MConsistencyViolation {
    #[error("{link}: restricted flow {flow} has recorded rate {recorded} above advertized rate {advertized}")]
    RestrictedAboveAdvertized {
        link: LinkId,
        flow: FlowId,
        recorded: String,
        advertized: String,
    },
    #[error("{link}: restricted flow {flow} has no finite recorded rate")]
    RestrictedWithoutRate { link: LinkId, flow: FlowId },
    #[error("{link}: advertized rate {advertized} differs from the restricted-set formula value {expected}")]
    AdvertizedMismatch {
        link: LinkId,
        advertized: String,
        expected: String,
    },
}

/// Control state of one directed link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkControlState {
    link: LinkId,
    capacity: Rational,
    entries: BTreeMap<FlowId, FlowEntry>,
    advertized: Rational,
    policy: RecordingPolicy,
}

impl LinkControlState {
    /// Empty state; with no flows the advertized rate is the capacity.
    pub fn new(link: &DirectedLink) -> Self {
        Self {
            link: link.id.clone(),
            capacity: link.capacity.clone(),
            entries: BTreeMap::new(),
            advertized: link.capacity.clone(),
            policy: RecordingPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: RecordingPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Build a state from arbitrary parts without repairing it. Used to set
    /// up hand-made or adversarial initial conditions.
    pub fn from_parts(
        link: &DirectedLink,
        entries: BTreeMap<FlowId, FlowEntry>,
        advertized: Rational,
    ) -> Self {
        Self {
            link: link.id.clone(),
            capacity: link.capacity.clone(),
            entries,
            advertized,
            policy: RecordingPolicy::default(),
        }
    }

    pub fn link(&self) -> &LinkId {
        &self.link
    }

    pub fn capacity(&self) -> &Rational {
        &self.capacity
    }

    pub fn advertized_rate(&self) -> &Rational {
        &self.advertized
    }

    pub fn entries(&self) -> &BTreeMap<FlowId, FlowEntry> {
        &self.entries
    }

    pub fn entry(&self, flow: &FlowId) -> Option<&FlowEntry> {
        self.entries.get(flow)
    }

    pub fn is_registered(&self, flow: &FlowId) -> bool {
        self.entries.contains_key(flow)
    }

    /// Weighted flow count `n = f + k*b`.
    pub fn weighted_count(&self) -> Rational {
        self.entries
            .values()
            .fold(Rational::zero(), |acc, e| acc + &e.weight)
    }

    /// `C_R` and `n_R`.
    fn restricted_totals(&self) -> (Rational, Rational) {
        let mut used = Rational::zero();
        let mut count = Rational::zero();
        for e in self.entries.values() {
            if let Some(r) = e.restricted_rate() {
                used += r * &e.weight;
                count += &e.weight;
            }
        }
        (used, count)
    }

    /// Advertized-rate formula for the current marks.
    ///
    /// When every entry is restricted the denominator of the formula is zero;
    /// the entries with the largest recorded rate are then counted as free
    /// without changing their marks, which gives the rate a flow would be
    /// offered if it were the one to grow.
    fn formula_value(&self) -> Rational {
        if self.entries.is_empty() {
            return self.capacity.clone();
        }
        let (used, count) = self.restricted_totals();
        let free = self.weighted_count() - count;
        if free.is_positive() {
            return (&self.capacity - used) / free;
        }
        let max = self
            .entries
            .values()
            .filter_map(FlowEntry::restricted_rate)
            .max()
            .cloned()
            .expect("non-empty table with no free weight has a restricted rate");
        let top_weight = self
            .entries
            .values()
            .filter(|e| e.restricted_rate() == Some(&max))
            .fold(Rational::zero(), |acc, e| acc + &e.weight);
        (&self.capacity - used + &max * &top_weight) / top_weight
    }

    /// Two-step recomputation of the advertized rate.
    ///
    /// Restricted entries without a finite rate are released first. Step one
    /// evaluates the formula for the current marks; every restricted flow
    /// whose recorded rate is above that value is released, and the formula
    /// is evaluated once more. No restricted flow can exceed the second value,
    /// so a third pass is never needed.
    pub fn compute_advertized_rate(&mut self) {
        for e in self.entries.values_mut() {
            if e.mark == Mark::Restricted && e.restricted_rate().is_none() {
                e.mark = Mark::Unrestricted;
            }
        }
        let first = self.formula_value();
        for e in self.entries.values_mut() {
            if e.restricted_rate().is_some_and(|r| r > &first) {
                e.mark = Mark::Unrestricted;
            }
        }
        let second = self.formula_value();
        debug_assert!(second >= first);
        debug_assert!(self
            .entries
            .values()
            .filter_map(FlowEntry::restricted_rate)
            .all(|r| r <= &second));
        self.advertized = second;
    }

    pub fn register_flow(&mut self, flow: FlowId, weight: Rational) -> Result<(), SwitchError> {
        if !weight.is_positive() {
            return Err(SwitchError::NonPositiveWeight {
                link: self.link.clone(),
                flow,
            });
        }
        if self.entries.contains_key(&flow) {
            return Err(SwitchError::AlreadyRegistered {
                link: self.link.clone(),
                flow,
            });
        }
        self.entries.insert(
            flow,
            FlowEntry {
                weight,
                recorded: None,
                mark: Mark::Unrestricted,
            },
        );
        self.compute_advertized_rate();
        Ok(())
    }

    pub fn deregister_flow(&mut self, flow: &FlowId) -> Result<(), SwitchError> {
        if self.entries.remove(flow).is_none() {
            return Err(SwitchError::NotRegistered {
                link: self.link.clone(),
                flow: flow.clone(),
            });
        }
        self.compute_advertized_rate();
        Ok(())
    }

    /// Record the packet's stamped rate, reclassify its flow and recompute the
    /// advertized rate, then stamp the packet down to the advertized rate
    /// (setting its u-bit) if it is not already below it.
    pub fn process_control_packet(
        &mut self,
        packet: &ControlPacket,
    ) -> Result<ControlPacket, SwitchError> {
        let flow = packet.flow.clone();
        let arriving = packet.stamped.clone();
        self.record(&flow, arriving)?;

        let mut out = packet.clone();
        if out.stamped >= self.advertized {
            out.stamped = Rate::Finite(self.advertized.clone());
            out.u_bit = true;
        }

        if self.policy == RecordingPolicy::Outgoing && out.stamped != packet.stamped {
            self.record(&flow, out.stamped.clone())?;
        }
        Ok(out)
    }

    fn record(&mut self, flow: &FlowId, rate: Rate) -> Result<(), SwitchError> {
        let entry = self
            .entries
            .get_mut(flow)
            .ok_or_else(|| SwitchError::NotRegistered {
                link: self.link.clone(),
                flow: flow.clone(),
            })?;
        let changed = entry.recorded.as_ref() != Some(&rate);
        if entry.mark == Mark::Restricted && !changed {
            return Ok(());
        }
        entry.recorded = Some(rate);
        entry.mark = Mark::Unrestricted;
        self.compute_advertized_rate();

        let entry = self.entries.get_mut(flow).expect("entry present");
        if entry
            .recorded
            .as_ref()
            .is_some_and(|r| r <= &self.advertized)
        {
            entry.mark = Mark::Restricted;
            self.compute_advertized_rate();
        }
        Ok(())
    }

    /// Check both marking-consistency conditions: every restricted flow's
    /// recorded rate is at most the advertized rate, and the advertized rate
    /// equals the formula value for the current restricted set.
    pub fn check_m_consistency(&self) -> Result<(), MConsistencyViolation> {
        for (flow, e) in &self.entries {
            if e.mark != Mark::Restricted {
                continue;
            }
            match &e.recorded {
                Some(Rate::Finite(r)) if r > &self.advertized => {
                    return Err(MConsistencyViolation::RestrictedAboveAdvertized {
                        link: self.link.clone(),
                        flow: flow.clone(),
                        recorded: fmt_exact(r),
                        advertized: fmt_exact(&self.advertized),
                    })
                }
                Some(Rate::Finite(_)) => {}
                _ => {
                    return Err(MConsistencyViolation::RestrictedWithoutRate {
                        link: self.link.clone(),
                        flow: flow.clone(),
                    })
                }
            }
        }
        let expected = self.formula_value();
        if expected == self.advertized {
            Ok(())
        } else {
            Err(MConsistencyViolation::AdvertizedMismatch {
                link: self.link.clone(),
                advertized: fmt_exact(&self.advertized),
                expected: fmt_exact(&expected),
            })
        }
    }

    /// Order-independent digest of the state, for repro records.
    pub fn digest(&self) -> String {
        let entries: Vec<String> = self
            .entries
            .iter()
            .map(|(f, e)| {
                let rec = e.recorded.as_ref().map_or("?".to_string(), Rate::to_string);
                format!("{f}:{}:{rec}:{}", fmt_exact(&e.weight), e.mark)
            })
            .collect();
        format!(
            "{} mu={} [{}]",
            self.link,
            fmt_exact(&self.advertized),
            entries.join(" ")
        )
    }
}
