//! Append-only record of every state transition in a run.

use std::fmt;
use std::io::{self, Write};

use crate::endpoint::Leg;
use crate::model::{FlowId, LinkId};
use crate::rate::{fmt_exact, Rate, Rational, Time};
use crate::switch::Mark;

pub const TRACE_HEADER: &str = "# explicit-rate trace v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRecord {
    Epoch {
        at: Time,
        index: usize,
        active: Vec<FlowId>,
    },
    Join {
        at: Time,
        flow: FlowId,
    },
    Leave {
        at: Time,
        flow: FlowId,
    },
    Register {
        at: Time,
        link: LinkId,
        flow: FlowId,
    },
    Deregister {
        at: Time,
        link: LinkId,
        flow: FlowId,
    },
    /// A control packet processed by a link.
    Hop {
        at: Time,
        flow: FlowId,
        link: LinkId,
        leg: Leg,
        stamped_in: Rate,
        u_in: bool,
        stamped_out: Rate,
        u_out: bool,
    },
    Advertized {
        at: Time,
        link: LinkId,
        rate: Rational,
    },
    Marked {
        at: Time,
        link: LinkId,
        flow: FlowId,
        mark: Mark,
    },
    /// Feedback packet handed to its source.
    Deliver {
        at: Time,
        flow: FlowId,
        sent_at: Time,
        stamped: Rate,
        u_bit: bool,
        injected: bool,
    },
    Dropped {
        at: Time,
        flow: FlowId,
    },
    Estimate {
        at: Time,
        flow: FlowId,
        rate: Rate,
    },
    Actual {
        at: Time,
        flow: FlowId,
        rate: Rational,
    },
    /// Stamped rate of the latest feedback seen by a source.
    Allocation {
        at: Time,
        flow: FlowId,
        rate: Rate,
    },
}

impl TraceRecord {
    pub fn at(&self) -> &Time {
        match self {
            TraceRecord::Epoch { at, .. }
            | TraceRecord::Join { at, .. }
            | TraceRecord::Leave { at, .. }
            | TraceRecord::Register { at, .. }
            | TraceRecord::Deregister { at, .. }
            | TraceRecord::Hop { at, .. }
            | TraceRecord::Advertized { at, .. }
            | TraceRecord::Marked { at, .. }
            | TraceRecord::Deliver { at, .. }
            | TraceRecord::Dropped { at, .. }
            | TraceRecord::Estimate { at, .. }
            | TraceRecord::Actual { at, .. }
            | TraceRecord::Allocation { at, .. } => at,
        }
    }
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = fmt_exact(self.at());
        match self {
            TraceRecord::Epoch { index, active, .. } => {
                let names: Vec<&str> = active.iter().map(FlowId::as_str).collect();
                write!(f, "epoch {t} {index} active={}", names.join(","))
            }
            TraceRecord::Join { flow, .. } => write!(f, "join {t} {flow}"),
            TraceRecord::Leave { flow, .. } => write!(f, "leave {t} {flow}"),
            TraceRecord::Register { link, flow, .. } => write!(f, "reg {t} {link} {flow}"),
            TraceRecord::Deregister { link, flow, .. } => write!(f, "dereg {t} {link} {flow}"),
            TraceRecord::Hop {
                flow,
                link,
                leg,
                stamped_in,
                u_in,
                stamped_out,
                u_out,
                ..
            } => write!(
                f,
                "hop {t} {flow} {link} {leg} in={stamped_in}/{} out={stamped_out}/{}",
                bit(*u_in),
                bit(*u_out)
            ),
            TraceRecord::Advertized { link, rate, .. } => {
                write!(f, "mu {t} {link} {}", fmt_exact(rate))
            }
            TraceRecord::Marked {
                link, flow, mark, ..
            } => {
                write!(f, "mark {t} {link} {flow} {mark}")
            }
            TraceRecord::Deliver {
                flow,
                sent_at,
                stamped,
                u_bit,
                injected,
                ..
            } => write!(
                f,
                "deliver {t} {flow} sent={} rho={stamped} u={}{}",
                fmt_exact(sent_at),
                bit(*u_bit),
                if *injected { " injected" } else { "" }
            ),
            TraceRecord::Dropped { flow, .. } => write!(f, "drop {t} {flow}"),
            TraceRecord::Estimate { flow, rate, .. } => write!(f, "est {t} {flow} {rate}"),
            TraceRecord::Actual { flow, rate, .. } => {
                write!(f, "actual {t} {flow} {}", fmt_exact(rate))
            }
            TraceRecord::Allocation { flow, rate, .. } => write!(f, "alloc {t} {flow} {rate}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.at() <= record.at()));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    /// Line-oriented text form with a version header.
    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{r}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace is ASCII")
    }
}
