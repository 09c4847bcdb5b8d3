//! Text formats written and read by the command-line tool. Every format
//! starts with a `# explicit-rate <kind> v1` header line.

use std::fmt::Write as _;

use explicit_rate::oracle::Constraint;
use explicit_rate::rate::{fmt_decimal, fmt_exact, parse_rational};
use explicit_rate::simulator::{
    Convergence, ConvergenceReport, EpochReport, SimTrace, TraceRecord,
};
use explicit_rate::{FlowId, MaxminSolution, Rate, RateVector, Rational, Time};

pub const RATES_HEADER: &str = "# explicit-rate rates v1";
pub const REPORT_HEADER: &str = "# explicit-rate report v1";
pub const SERIES_HEADER: &str = "# explicit-rate series v1";

/// `a/b (decimal)`.
pub fn both(r: &Rational) -> String {
    format!("{} ({})", fmt_exact(r), fmt_decimal(r))
}

fn both_rate(r: &Rate) -> String {
    match r {
        Rate::Finite(q) => both(q),
        Rate::Infinite => "inf".to_string(),
    }
}

fn names<'a>(flows: impl IntoIterator<Item = &'a FlowId>) -> String {
    let v: Vec<&str> = flows.into_iter().map(FlowId::as_str).collect();
    if v.is_empty() {
        "-".to_string()
    } else {
        v.join(",")
    }
}

/// Oracle output. `flow` lines are what [`parse_rates`] reads back.
pub fn render_rates(solution: &MaxminSolution, at: &Time) -> String {
    let mut out = String::new();
    writeln!(out, "{RATES_HEADER}").unwrap();
    writeln!(out, "# t={} flows={}", fmt_exact(at), solution.rates.len()).unwrap();
    for (flow, rate) in solution.rates.iter() {
        writeln!(out, "flow {flow} {} {}", fmt_exact(rate), fmt_decimal(rate)).unwrap();
    }
    for level in &solution.levels {
        let constraints: Vec<String> = level.links.iter().map(Constraint::to_string).collect();
        writeln!(
            out,
            "level {} {} {} bottlenecks={} flows={}",
            level.index,
            fmt_exact(&level.rate),
            fmt_decimal(&level.rate),
            constraints.join(","),
            names(&level.flows)
        )
        .unwrap();
    }
    writeln!(out, "levels N={}", solution.n_levels).unwrap();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatesParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RatesParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for RatesParseError {}

/// Read `flow <id> <rate> [...]` lines; every other line is ignored.
pub fn parse_rates(text: &str) -> Result<RateVector, RatesParseError> {
    let mut rates = RateVector::new();
    for (i, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        if words.next() != Some("flow") {
            continue;
        }
        let err = |message: String| RatesParseError {
            line: i + 1,
            message,
        };
        let id = words.next().ok_or_else(|| err("missing flow id".into()))?;
        let rate = words.next().ok_or_else(|| err("missing rate".into()))?;
        let rate = parse_rational(rate).map_err(|e| err(e.to_string()))?;
        if rates.get(&FlowId::from(id)).is_some() {
            return Err(err(format!("flow {id} listed twice")));
        }
        rates.insert(id.into(), rate);
    }
    Ok(rates)
}

fn convergence_line(c: &Convergence, start: &Time) -> String {
    match c {
        Convergence::At(t) => format!("at {} after {}", both(t), both(&(t - start))),
        Convergence::NotConverged => "no".to_string(),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn render_epoch(out: &mut String, e: &EpochReport, d_bound: &Time) {
    let w = &e.window;
    writeln!(out, "\n[epoch {}]", w.index).unwrap();
    writeln!(out, "window = {} .. {}", both(&w.start), both(&w.end)).unwrap();
    writeln!(out, "active = {}", names(&e.active)).unwrap();
    writeln!(out, "levels = {}", e.oracle.n_levels).unwrap();
    writeln!(out, "budget_4ND = {}", both(&e.budget)).unwrap();
    match &e.t0 {
        Some(t) => writeln!(out, "t0 = {}", both(t)).unwrap(),
        None => writeln!(out, "t0 = never").unwrap(),
    }
    writeln!(
        out,
        "converged = {}",
        convergence_line(&e.estimates, &w.start)
    )
    .unwrap();
    writeln!(out, "within_4ND = {}", yes_no(e.within_budget())).unwrap();
    writeln!(out, "beyond_2ND = {}", yes_no(e.exceeds_half_budget())).unwrap();
    writeln!(
        out,
        "actual_converged = {}",
        convergence_line(&e.actual, &w.start)
    )
    .unwrap();
    writeln!(out, "settled_at = {}", both(&e.settled_at)).unwrap();
    writeln!(out, "fixed_point = {}", yes_no(e.at_fixed_point(d_bound))).unwrap();
    writeln!(
        out,
        "settled_feedback = {} packets, {} with clear u-bit",
        e.settled_deliveries, e.u_bit_violations
    )
    .unwrap();
    for (flow, rate) in e.oracle.rates.iter() {
        let fin = e
            .final_estimates
            .get(flow)
            .map_or_else(|| "none".to_string(), both_rate);
        writeln!(out, "flow {flow} oracle={} final={fin}", both(rate)).unwrap();
    }
    for (link, mu) in &e.final_advertized {
        writeln!(out, "mu {link} {}", both(mu)).unwrap();
    }
}

/// Structured convergence report.
pub fn render_report(report: &ConvergenceReport, seed: u64) -> String {
    let mut out = String::new();
    writeln!(out, "{REPORT_HEADER}").unwrap();
    writeln!(out, "seed = {seed}").unwrap();
    writeln!(out, "d_bound = {}", both(&report.d_bound)).unwrap();
    writeln!(out, "epochs = {}", report.epochs.len()).unwrap();
    for e in &report.epochs {
        render_epoch(&mut out, e, &report.d_bound);
    }
    let s = &report.stats;
    writeln!(out, "\n[summary]").unwrap();
    writeln!(out, "events = {}", s.events).unwrap();
    writeln!(out, "m_consistency_checks = {}", s.m_consistency_checks).unwrap();
    writeln!(out, "lower_bound_checks = {}", s.lower_bound_checks).unwrap();
    writeln!(
        out,
        "initially_inconsistent_links = {}",
        s.initially_inconsistent_links
    )
    .unwrap();
    match &s.max_round_trip {
        Some(t) => writeln!(out, "max_round_trip = {}", both(t)).unwrap(),
        None => writeln!(out, "max_round_trip = none").unwrap(),
    }
    writeln!(out, "feasibility_violations = {}", report.feasibility.len()).unwrap();
    for v in &report.feasibility {
        writeln!(
            out,
            "infeasible t={} link={} load={} capacity={}",
            both(&v.at),
            v.link,
            both(&v.load),
            both(&v.capacity)
        )
        .unwrap();
    }
    let verdict = if report.all_converged() {
        "converged"
    } else {
        "not converged"
    };
    writeln!(out, "verdict = {verdict}").unwrap();
    out
}

/// Plot-ready series: one `time series value` row per change of an
/// advertized rate (`mu:<link>`), rate estimate (`est:<flow>`) or actual
/// rate (`actual:<flow>`).
pub fn render_series(trace: &SimTrace) -> String {
    let mut out = String::new();
    writeln!(out, "{SERIES_HEADER}").unwrap();
    writeln!(out, "time\tseries\tvalue").unwrap();
    for r in trace.iter() {
        let (series, value) = match r {
            TraceRecord::Advertized { link, rate, .. } => (format!("mu:{link}"), fmt_decimal(rate)),
            TraceRecord::Estimate { flow, rate, .. } => (format!("est:{flow}"), rate.decimal()),
            TraceRecord::Actual { flow, rate, .. } => (format!("actual:{flow}"), fmt_decimal(rate)),
            _ => continue,
        };
        writeln!(out, "{}\t{series}\t{value}", fmt_decimal(r.at())).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use explicit_rate::rate::{int, ratio};

    #[test]
    fn rates_round_trip() {
        let text = format!("{RATES_HEADER}\nflow A 10 10\nflow B 25/2 12.5\nlevel 1 10 10 bottlenecks=a->b flows=A\nlevels N=1\n");
        let rates = parse_rates(&text).unwrap();
        assert_eq!(rates.get(&"A".into()), Some(&int(10)));
        assert_eq!(rates.get(&"B".into()), Some(&ratio(25, 2)));
        assert_eq!(rates.len(), 2);
    }

    #[test]
    fn rates_errors_name_the_line() {
        let e = parse_rates("# x\nflow A ten\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_rates("flow A 1\nflow A 2\n").is_err());
        assert!(parse_rates("flow\n").is_err());
    }

    #[test]
    fn both_forms() {
        assert_eq!(both(&ratio(81, 7)), "81/7 (11.5714)");
        assert_eq!(both(&int(40)), "40 (40)");
    }
}
