//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[params]`, `[[links]]`,
//! `[[flows]]`, `[[events]]` and optionally `[monitors]`. Every rate and time
//! quantity is exact: it may be written as an integer (`60`), a decimal
//! (`0.125` or `"0.125"`) or a fraction (`"1/8"`). Demands additionally
//! accept `"inf"`. See `scenarios/README.md` for the full grammar.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use explicit_rate::model::Interval;
use explicit_rate::rate::parse_rational;
use explicit_rate::{
    validate_scenario, DirectedLink, FlowId, FlowSpec, LinkId, Rate, Rational, Scenario,
    ScenarioConfig, Time, ValidationError,
};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

/// A rational quantity as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Quantity(Rational);

struct QuantityVisitor;

impl Visitor<'_> for QuantityVisitor {
    type Value = Quantity;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or a string such as \"3/8\" or \"0.25\"")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
        Ok(Quantity(Rational::from_integer(v.into())))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Quantity, E> {
        Ok(Quantity(Rational::from_integer(v.into())))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
        // Shortest round-trip decimal, so 0.1 means exactly 1/10.
        self.visit_str(&v.to_string())
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
        parse_rational(v).map(Quantity).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(QuantityVisitor)
    }
}

/// A demand: a quantity or `"inf"`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Demand(Rate);

impl<'de> Deserialize<'de> for Demand {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Demand;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rate or \"inf\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Demand, E> {
                QuantityVisitor
                    .visit_i64(v)
                    .map(|q| Demand(Rate::Finite(q.0)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Demand, E> {
                QuantityVisitor
                    .visit_u64(v)
                    .map(|q| Demand(Rate::Finite(q.0)))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Demand, E> {
                if v.is_infinite() && v > 0.0 {
                    return Ok(Demand(Rate::Infinite));
                }
                QuantityVisitor
                    .visit_f64(v)
                    .map(|q| Demand(Rate::Finite(q.0)))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Demand, E> {
                v.parse::<Rate>().map(Demand).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// A node or flow name; integers are accepted and used as written.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Name(String);

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Name;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a name")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Name, E> {
                Ok(Name(v.to_string()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Name, E> {
                Ok(Name(v.to_string()))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Name, E> {
                if v.is_empty() || v.chars().any(char::is_whitespace) {
                    return Err(E::custom(
                        "names must be non-empty and contain no whitespace",
                    ));
                }
                Ok(Name(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

fn zero() -> Quantity {
    Quantity(Rational::from_integer(0.into()))
}

fn one() -> Quantity {
    Quantity(Rational::from_integer(1.into()))
}

fn infinite() -> Demand {
    Demand(Rate::Infinite)
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default = "zero")]
    k: Quantity,
    #[serde(default = "one")]
    control_interval: Quantity,
    d_bound: Option<Quantity>,
    duration: Quantity,
    #[serde(default)]
    seed: u64,
    #[serde(default = "zero")]
    jitter: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    from: Name,
    to: Name,
    capacity: Quantity,
    #[serde(default = "zero")]
    delay: Quantity,
    #[serde(default)]
    duplex: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    id: Name,
    route: Vec<Name>,
    #[serde(default = "infinite")]
    demand: Demand,
    #[serde(default = "zero")]
    start: Quantity,
    stop: Option<Quantity>,
    initial_rate: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at: Quantity,
    #[serde(default)]
    join: Vec<Name>,
    #[serde(default)]
    leave: Vec<Name>,
}

/// Which run-time monitors abort a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monitors {
    #[serde(default = "yes")]
    pub m_consistency: bool,
    #[serde(default = "yes")]
    pub lower_bound: bool,
    #[serde(default = "yes")]
    pub feasibility: bool,
}

impl Default for Monitors {
    fn default() -> Self {
        Self {
            m_consistency: true,
            lower_bound: true,
            feasibility: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    params: RawParams,
    #[serde(default)]
    links: Vec<RawLink>,
    #[serde(default)]
    flows: Vec<RawFlow>,
    #[serde(default)]
    events: Vec<RawEvent>,
    #[serde(default)]
    monitors: Monitors,
}

/// A parsed, not yet validated, scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioFile {
    pub config: ScenarioConfig,
    pub monitors: Monitors,
}

#[derive(Debug)]
pub enum ScenarioFileError {
    Io {
        path: String,
        message: String,
    },
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Joins and leaves that do not alternate, or name unknown flows.
    Events(String),
    Invalid(Vec<ValidationError>),
}

impl fmt::Display for ScenarioFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioFileError::Io { path, message } => write!(f, "{path}: {message}"),
            ScenarioFileError::Syntax {
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: {message}"),
            ScenarioFileError::Events(m) => write!(f, "events: {m}"),
            ScenarioFileError::Invalid(errors) => {
                let parts: Vec<String> = errors.iter().map(ToString::to_string).collect();
                write!(f, "invalid scenario: {}", parts.join("; "))
            }
        }
    }
}

impl std::error::Error for ScenarioFileError {}

/// 1-based line and column of byte `offset` in `text`.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioFile, ScenarioFileError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ScenarioFileError::Syntax {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;

    let mut config = ScenarioConfig::new(
        raw.params.k.0,
        raw.params.control_interval.0,
        Rational::from_integer(0.into()),
        raw.params.duration.0,
    );
    config.seed = raw.params.seed;
    config.jitter = raw.params.jitter.0;

    for l in raw.links {
        let link = DirectedLink::new(&l.from.0, &l.to.0, l.capacity.0, l.delay.0);
        if l.duplex {
            config.links.push(DirectedLink {
                id: link.id.reversed(),
                ..link.clone()
            });
        }
        config.links.push(link);
    }
    config.links.sort_by(|a, b| a.id.cmp(&b.id));

    let mut toggles: BTreeMap<String, Vec<(Time, bool)>> = BTreeMap::new();
    for f in &raw.flows {
        let list = toggles.entry(f.id.0.clone()).or_default();
        list.push((f.start.0.clone(), true));
        if let Some(stop) = &f.stop {
            list.push((stop.0.clone(), false));
        }
    }
    for e in &raw.events {
        for (names, join) in [(&e.join, true), (&e.leave, false)] {
            for n in names {
                let list = toggles.get_mut(&n.0).ok_or_else(|| {
                    ScenarioFileError::Events(format!("unknown flow {} at t={}", n.0, e.at.0))
                })?;
                list.push((e.at.0.clone(), join));
            }
        }
    }

    for f in raw.flows {
        let mut list = toggles.remove(&f.id.0).unwrap_or_default();
        list.sort_by(|a, b| a.0.cmp(&b.0));
        let intervals = intervals_from_toggles(&f.id.0, &list)?;
        let route = f
            .route
            .windows(2)
            .map(|w| LinkId::new(w[0].0.as_str(), w[1].0.as_str()))
            .collect();
        config.flows.push(FlowSpec {
            id: FlowId(f.id.0),
            route,
            demand: f.demand.0,
            intervals,
            initial_rate: f.initial_rate.map(|q| q.0),
        });
    }

    config.d_bound = match raw.params.d_bound {
        Some(d) => d.0,
        None => config.required_d_bound(),
    };
    Ok(ScenarioFile {
        config,
        monitors: raw.monitors,
    })
}

fn intervals_from_toggles(
    flow: &str,
    toggles: &[(Time, bool)],
) -> Result<Vec<Interval>, ScenarioFileError> {
    let mut out: Vec<Interval> = Vec::new();
    for (at, join) in toggles {
        let open = out.last().is_some_and(|i| i.stop.is_none());
        match (join, open) {
            (true, false) => out.push(Interval {
                start: at.clone(),
                stop: None,
            }),
            (false, true) => {
                out.last_mut().expect("open interval").stop = Some(at.clone());
            }
            (true, true) => {
                return Err(ScenarioFileError::Events(format!(
                    "flow {flow} joins at t={at} while already active"
                )))
            }
            (false, false) => {
                return Err(ScenarioFileError::Events(format!(
                    "flow {flow} leaves at t={at} while not active"
                )))
            }
        }
    }
    Ok(out)
}

/// Read a scenario file without validating it.
pub fn parse_scenario(path: &Path) -> Result<ScenarioFile, ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioFileError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario_str(&text)
}

/// Read and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Monitors), ScenarioFileError> {
    let file = parse_scenario(path)?;
    let scenario = validate_scenario(file.config).map_err(ScenarioFileError::Invalid)?;
    Ok((scenario, file.monitors))
}
