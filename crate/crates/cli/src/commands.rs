use backorbit::compare::{compare, invariant, OrbitInvariant, Verdict};
use backorbit::family::{family_bseq_at, solve_cm, verify_critical_orbit_at, MAX_M};
use backorbit::kms::{c_sequence, recover_bseq, recovery_residual_bound, KmsParams};
use backorbit::orbit::{b_sequence, backward_levels, is_exceptional, ExceptionalCertificate};
use backorbit::{parse_map, Error, NumericConfig64, Precision, RationalMap64, SpherePoint64};
use serde_json::{json, Value};

use crate::args::{Command, GlobalArgs};
use crate::emit::{cell, num, text, Output};

/// Failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
    /// Emission produced before the failure was detected.
    pub output: Option<Box<Output>>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into(), output: None }
    }

    pub fn numerical(message: impl Into<String>, output: Output) -> Self {
        CliError { code: 1, message: message.into(), output: Some(Box::new(output)) }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let usage = matches!(
            e,
            Error::Syntax { .. }
                | Error::InvalidArgument(_)
                | Error::DegreeTooLow { .. }
                | Error::NotCoprime { .. }
                | Error::InvalidBeta { .. }
                | Error::InvalidPrecision { .. }
                | Error::ZeroPolynomial
                | Error::DepthMismatch { .. }
        );
        CliError { code: if usage { 2 } else { 1 }, message: e.to_string(), output: None }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Enumeration cap for cross-checking counts in the orbit command.
const ORBIT_ENUMERATION_CAP: usize = 1 << 16;

pub fn numeric_config(g: &GlobalArgs) -> CliResult<NumericConfig64> {
    if !(g.tol > 0.0 && g.tol < 1.0) {
        return Err(CliError::usage(format!("--tol must lie in (0, 1), got {}", g.tol)));
    }
    if Precision::from_bits::<f64>(g.precision_bits).is_none() {
        return Err(Error::InvalidPrecision { bits: g.precision_bits, min: 53, max: 106 }.into());
    }
    Ok(NumericConfig64::with_tol(g.tol).with_precision_bits(g.precision_bits))
}

fn require_map(g: &GlobalArgs, config: &NumericConfig64) -> CliResult<(String, RationalMap64)> {
    let text = g.map.as_deref().ok_or_else(|| CliError::usage("--map is required"))?;
    Ok((text.to_string(), parse_map(text, config.clone())?))
}

fn require_point(g: &GlobalArgs) -> CliResult<SpherePoint64> {
    let text = g.point.as_deref().ok_or_else(|| CliError::usage("--point is required"))?;
    Ok(text.parse::<SpherePoint64>()?)
}

/// Default backward depth: 12 for quadratics, otherwise the deepest level
/// with at most 4096 points.
pub fn default_depth(degree: usize) -> usize {
    let mut d = 0;
    let mut size = 1usize;
    while size * degree <= 4096 {
        size *= degree;
        d += 1;
    }
    d
}

pub fn execute(command: &Command, g: &GlobalArgs) -> CliResult<Output> {
    let config = numeric_config(g)?;
    match command {
        Command::Critical => critical(g, &config),
        Command::Fiber => fiber(g, &config),
        Command::Orbit { levels } => orbit(g, &config, *levels),
        Command::Kms { truncation } => kms(g, &config, *truncation),
        Command::Family { m } => family(g, &config, *m),
        Command::Compare { map_a, map_b } => compare_maps(g, &config, map_a, map_b),
        Command::Verify => crate::suite::verify(g, &config),
    }
}

fn critical(g: &GlobalArgs, config: &NumericConfig64) -> CliResult<Output> {
    let (src, map) = require_map(g, config)?;
    let rh = map.verify_riemann_hurwitz();
    let mut points = Vec::new();
    let mut out_rows = Vec::new();
    for (cp, v) in map.critical_points().iter().zip(map.critical_values()) {
        points.push(json!({"point": text(cp.location), "branch_index": cp.branch_index, "critical_value": text(v)}));
        out_rows.push(vec![text(cp.location), cp.branch_index.to_string(), text(v)]);
    }
    let json = json!({
        "map": src,
        "degree": map.degree(),
        "critical_points": points,
        "riemann_hurwitz": {"total": rh.total, "expected": rh.expected, "passed": rh.passed},
    });
    let mut out = Output::new(json, &["point", "branch_index", "critical_value"]);
    out_rows.into_iter().for_each(|r| out.row(r));
    Ok(out)
}

fn fiber(g: &GlobalArgs, config: &NumericConfig64) -> CliResult<Output> {
    let (src, map) = require_map(g, config)?;
    let y = require_point(g)?;
    let f = map.fiber(&y)?;
    let members: Vec<Value> =
        f.members.iter().map(|m| json!({"point": text(m.location), "branch_index": m.branch_index})).collect();
    let json = json!({"map": src, "target": text(y), "members": members, "index_sum": f.index_sum()});
    let mut out = Output::new(json, &["point", "branch_index"]);
    for m in &f.members {
        out.row(vec![text(m.location), m.branch_index.to_string()]);
    }
    Ok(out)
}

fn orbit(g: &GlobalArgs, config: &NumericConfig64, with_levels: bool) -> CliResult<Output> {
    let (src, map) = require_map(g, config)?;
    let z = require_point(g)?;
    let depth = g.depth.unwrap_or_else(|| default_depth(map.degree()));
    let (counts, levels) = if with_levels {
        let lv = backward_levels(&map, &z, depth)?;
        let pts: Vec<Vec<String>> = lv.levels.iter().map(|l| l.iter().map(text).collect()).collect();
        (lv.counts, Some(pts))
    } else {
        (b_sequence(&map, &z, depth, ORBIT_ENUMERATION_CAP)?, None)
    };
    let ex = is_exceptional(&map, &z, 2)?;
    let exceptional = match &ex.certificate {
        ExceptionalCertificate::FiniteOrbit(pts) => json!({"exceptional": true, "grand_orbit": pts.iter().map(text).collect::<Vec<_>>()}),
        ExceptionalCertificate::Growth { level, count, accumulated } => {
            json!({"exceptional": false, "level": level, "count": count, "accumulated": accumulated})
        }
    };
    let mut json = json!({
        "map": src,
        "point": text(z),
        "depth": depth,
        "counts": counts.0,
        "exceptional": exceptional,
    });
    if let Some(l) = levels {
        json["levels"] = json!(l);
    }
    let mut out = Output::new(json, &["n", "b_n"]);
    for (n, b) in counts.iter().enumerate() {
        out.row(vec![n.to_string(), b.to_string()]);
    }
    Ok(out)
}

/// A warning when `ln N < beta <= N`.
pub fn kms_regime_warning(beta: f64, degree: usize) -> Option<String> {
    let n = degree as f64;
    (beta > n.ln() && beta <= n).then(|| {
        format!("warning: beta = {beta} lies in (ln N, N] = ({}, {n}]; the series converges but this is outside beta > N", n.ln())
    })
}

fn kms(g: &GlobalArgs, config: &NumericConfig64, truncation: usize) -> CliResult<Output> {
    let (src, map) = require_map(g, config)?;
    let z = require_point(g)?;
    let beta = g.beta.ok_or_else(|| CliError::usage("--beta is required"))?;
    let n_max = g.depth.unwrap_or(6);
    if let Some(w) = kms_regime_warning(beta, map.degree()) {
        eprintln!("{w}");
    }
    let params = KmsParams::for_map(&map, beta, z, truncation)?;
    let cs = c_sequence(&map, &params, n_max + 1)?;
    let rec = recover_bseq(&cs.values, beta)?;
    let reference = &cs.counts.0[..=n_max];
    let bound = recovery_residual_bound(cs.normalizer.m, params.tail_bound, rec.denominator);
    let matches = rec.b == reference;
    let json = json!({
        "map": src,
        "point": text(z),
        "beta": num(beta),
        "truncation": truncation,
        "m": num(cs.normalizer.m),
        "m_enclosure": [num(cs.normalizer.lower), num(cs.normalizer.upper)],
        "tail_bound": num(params.tail_bound),
        "c_sequence": cs.values.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "measure_route_checked": cs.measure_route.is_some(),
        "recovered_b": rec.b,
        "recovered_raw": rec.raw.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "uncorrected": rec.uncorrected.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "reference_b": reference,
        "max_residual": num(rec.max_residual),
        "residual_bound": num(bound),
        "recovery_matches": matches,
    });
    let mut out = Output::new(json, &["n", "c_n", "recovered_b", "reference_b", "residual"]);
    for n in 0..cs.values.len() {
        out.row(vec![
            n.to_string(),
            cell(cs.values[n]),
            rec.b.get(n).map_or(String::new(), |b| b.to_string()),
            reference.get(n).map_or(String::new(), |b| b.to_string()),
            rec.residuals.get(n).map_or(String::new(), |&r| cell(r)),
        ]);
    }
    if !matches {
        return Err(CliError::numerical(format!("recovered {:?} but orbit counts are {:?}", rec.b, reference), out));
    }
    Ok(out)
}

fn family(g: &GlobalArgs, config: &NumericConfig64, m: u32) -> CliResult<Output> {
    if !(2..=MAX_M).contains(&m) {
        return Err(CliError::usage(format!("--m must lie in 2..={MAX_M}")));
    }
    let param = solve_cm(m)?;
    let report = verify_critical_orbit_at(&param)?;
    let depth = g.depth.unwrap_or(m as usize + 1);
    if depth < m as usize + 1 {
        return Err(CliError::usage(format!("--depth must be at least m + 1 = {}", m + 1)));
    }
    let b = family_bseq_at(&param, depth, config.clone())?;
    let json = json!({
        "m": m,
        "coefficients": param.f.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "c_m": num(param.c),
        "bracket": [num(param.bracket.0), num(param.bracket.1)],
        "residual": num(param.residual),
        "minimal_certified": param.minimal_certified,
        "escalated": param.escalated || report.escalated,
        "orbit": report.orbit.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "orbit_return_residual": num(report.return_residual()),
        "g_residuals": report.g_residuals.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "b_sequence": b.0,
    });
    let mut out = Output::new(json, &["k", "b_k"]);
    for (k, v) in b.iter().enumerate() {
        out.row(vec![k.to_string(), v.to_string()]);
    }
    Ok(out)
}

fn invariant_json(inv: &OrbitInvariant<f64>) -> Value {
    json!(inv
        .entries
        .iter()
        .map(|e| json!({"point": text(e.point), "branch_index": e.branch_index, "counts": e.counts.0}))
        .collect::<Vec<_>>())
}

fn compare_maps(g: &GlobalArgs, config: &NumericConfig64, a: &str, b: &str) -> CliResult<Output> {
    let depth = g.depth.unwrap_or(6);
    let (ma, mb) = (parse_map(a, config.clone())?, parse_map(b, config.clone())?);
    let (ia, ib) = (invariant(&ma, a, depth)?, invariant(&mb, b, depth)?);
    let cmp = compare(&ia, &ib)?;
    let mut json = json!({
        "depth": depth,
        "verdict": cmp.verdict.label(),
        "set_equal": cmp.set_equal,
        "readings_differ": cmp.readings_differ(),
        "invariants": {"a": {"map": a, "entries": invariant_json(&ia)}, "b": {"map": b, "entries": invariant_json(&ib)}},
    });
    match &cmp.verdict {
        Verdict::Equal { matching } => json["matching"] = json!(matching),
        Verdict::Distinguished { witness } => {
            let inv = match witness.side {
                backorbit::compare::Side::Left => &ia,
                backorbit::compare::Side::Right => &ib,
            };
            json["witness"] = json!({
                "side": witness.side.to_string(),
                "point": text(inv.entries[witness.entry].point),
                "sequence": witness.sequence.0,
                "candidate": witness.candidate.as_ref().map(|c| c.0.clone()),
                "first_difference": witness.first_difference,
            });
        }
    }
    let mut header = vec!["map".to_string(), "point".into(), "branch_index".into()];
    header.extend((0..=depth).map(|k| format!("b_{k}")));
    let mut out = Output { json, csv_header: header, csv_rows: Vec::new() };
    for (label, inv) in [("a", &ia), ("b", &ib)] {
        for e in &inv.entries {
            let mut row = vec![label.to_string(), text(e.point), e.branch_index.to_string()];
            row.extend(e.counts.iter().map(|v| v.to_string()));
            out.row(row);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depths() {
        assert_eq!(default_depth(2), 12);
        assert_eq!(default_depth(3), 7);
        assert_eq!(default_depth(4), 6);
    }

    #[test]
    fn warning_window() {
        assert!(kms_regime_warning(1.5, 2).is_some());
        assert!(kms_regime_warning(3.0, 2).is_none());
        assert!(kms_regime_warning(0.5, 2).is_none());
    }
}
