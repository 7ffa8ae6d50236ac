//! The `verify` command: worked examples and structural checks, each reduced
//! to a named pass/fail line. Sampled checks draw from a ChaCha stream keyed
//! by `--seed`, and checks run in parallel but are reported in a fixed order.

use backorbit::compare::{compare, invariant};
use backorbit::family::{family_bseq_at, solve_cm, strictly_decreasing, verify_critical_orbit_at};
use backorbit::kms::{c_sequence, recover_bseq, telescoping_check, telescoping_pointwise, KmsParams, MEASURE_ATOM_GUARD};
use backorbit::orbit::{backward_levels, oracle_bn, z2_minus_1_closed_form};
use backorbit::ratmap::Mobius;
use backorbit::{parse_map, Complex64, NumericConfig64, RationalMap64, SpherePoint64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::args::GlobalArgs;
use crate::commands::{CliError, CliResult};
use crate::emit::Output;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn from_result(name: impl Into<String>, r: Result<String, String>) -> Self {
        match r {
            Ok(d) => Check::new(name, true, d),
            Err(d) => Check::new(name, false, d),
        }
    }
}

/// The quadratic `z^2 + c_3` written with the solved parameter.
pub fn period_three_map() -> Result<String, String> {
    let p = solve_cm(3).map_err(|e| e.to_string())?;
    Ok(format!("z^2 + ({})", p.c))
}

/// Test corpus: the four worked quadratics, further quadratics and rational
/// maps of degree two, and two cubics.
pub fn corpus() -> Result<Vec<String>, String> {
    let mut v: Vec<String> = ["z^2", "z^2 + 1", "z^2 - 1"].iter().map(|s| s.to_string()).collect();
    v.push(period_three_map()?);
    v.extend(
        ["z^2 + i", "z^2 - 2", "(z^2 + 1)/(2*z)", "1/z^2", "z^3 - 3*z", "z^3 + (0.4 + 0.3*i)*z + 1"]
            .iter()
            .map(|s| s.to_string()),
    );
    Ok(v)
}

fn map(s: &str, config: &NumericConfig64) -> Result<RationalMap64, String> {
    parse_map(s, config.clone()).map_err(|e| format!("{s}: {e}"))
}

fn seq(v: &[u64]) -> String {
    format!("{v:?}")
}

fn golden(config: &NumericConfig64) -> Vec<Check> {
    let c3 = match period_three_map() {
        Ok(s) => s,
        Err(e) => return vec![Check::new("golden", false, e)],
    };
    let cases: Vec<(String, Vec<u64>)> = vec![
        ("z^2".into(), vec![1; 7]),
        ("z^2 + 1".into(), vec![1, 2, 4, 8, 16, 32, 64]),
        ("z^2 - 1".into(), vec![1, 2, 3, 6, 11, 22, 43]),
        (c3, vec![1, 2, 4, 7, 14, 28, 55]),
    ];
    cases
        .into_iter()
        .map(|(s, want)| {
            let r = (|| {
                let m = map(&s, config)?;
                let at0 = backward_levels(&m, &SpherePoint64::zero(), 6).map_err(|e| e.to_string())?.counts.0;
                let atinf = backward_levels(&m, &SpherePoint64::infinity(), 6).map_err(|e| e.to_string())?.counts.0;
                let d = format!("b(0) = {}, b(inf) = {}", seq(&at0), seq(&atinf));
                if at0 == want && atinf == vec![1; 7] {
                    Ok(d)
                } else {
                    Err(d)
                }
            })();
            Check::from_result(format!("golden {s}"), r)
        })
        .collect()
}

fn closed_form(config: &NumericConfig64) -> Check {
    let r = (|| {
        let m = map("z^2 - 1", config)?;
        let b = backward_levels(&m, &SpherePoint64::zero(), 11).map_err(|e| e.to_string())?.counts.0;
        let want: Vec<u64> = (0..=11).map(z2_minus_1_closed_form).collect();
        if b == want {
            Ok(seq(&b))
        } else {
            Err(format!("{} vs {}", seq(&b), seq(&want)))
        }
    })();
    Check::from_result("closed form z^2 - 1", r)
}

fn sample_targets(m: &RationalMap64, rng: &mut ChaCha8Rng, count: usize) -> Vec<SpherePoint64> {
    let mut out = vec![SpherePoint64::infinity()];
    let values = m.critical_values();
    while out.len() < count {
        if rng.random_range(0..10) == 0 && !values.is_empty() {
            out.push(values[rng.random_range(0..values.len())]);
        } else {
            let c = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            out.push(SpherePoint64::finite(c).expect("finite sample"));
        }
    }
    out
}

pub fn structure_check(s: &str, config: &NumericConfig64, seed: u64, samples: usize) -> Check {
    let r = (|| {
        let m = map(s, config)?;
        let rh = m.verify_riemann_hurwitz();
        if !rh.passed {
            return Err(format!("Riemann-Hurwitz total {} != {}", rh.total, rh.expected));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for y in sample_targets(&m, &mut rng, samples) {
            let f = m.fiber(&y).map_err(|e| format!("fiber of {y}: {e}"))?;
            if f.index_sum() != m.degree() {
                return Err(format!("fiber of {y} has index sum {}", f.index_sum()));
            }
        }
        Ok(format!("{samples} fibers sum to {}, 2N-2 = {}", m.degree(), rh.expected))
    })();
    Check::from_result(format!("structure {s}"), r)
}

pub fn oracle_check(s: &str, config: &NumericConfig64) -> Check {
    let r = (|| {
        let m = map(s, config)?;
        let depth = if m.degree() == 2 { 3 } else { 2 };
        for cp in m.critical_points() {
            let lv = backward_levels(&m, &cp.location, depth).map_err(|e| e.to_string())?;
            for n in 0..=depth {
                let o = oracle_bn(&m, &cp.location, n as u32).map_err(|e| e.to_string())?;
                if o != lv.counts[n] {
                    return Err(format!("at {} level {n}: enumeration {} vs oracle {o}", cp.location, lv.counts[n]));
                }
            }
        }
        Ok(format!("levels 0..={depth} agree at {} critical points", m.critical_points().len()))
    })();
    Check::from_result(format!("oracle {s}"), r)
}

fn family_checks(config: &NumericConfig64) -> Vec<Check> {
    let params: Vec<_> = (2..=6).map(solve_cm).collect();
    let mut checks = Vec::new();
    let mut ok = Vec::new();
    for (i, p) in params.into_iter().enumerate() {
        let m = i as u32 + 2;
        let r = (|| {
            let p = p.map_err(|e| e.to_string())?;
            if p.bracket_width() > 1e-12 || p.minimal_certified == Some(false) {
                return Err(format!("bracket {:?} certified {:?}", p.bracket, p.minimal_certified));
            }
            let rep = verify_critical_orbit_at(&p).map_err(|e| e.to_string())?;
            let b = family_bseq_at(&p, m as usize + 1, config.clone()).map_err(|e| e.to_string())?;
            let d = format!("c = {:.15}, |R^m(0)| = {:.1e}, b = {}", p.c, rep.return_residual(), seq(&b));
            ok.push(p);
            Ok(d)
        })();
        checks.push(Check::from_result(format!("family m={m}"), r));
    }
    let exact = ok.first().is_some_and(|p| p.c == -1.0);
    checks.push(Check::new(
        "family monotone",
        ok.len() == 5 && strictly_decreasing(&ok) && exact,
        format!("c_2 = {}, {} brackets strictly decreasing", ok.first().map_or(f64::NAN, |p| p.c), ok.len()),
    ));
    checks
}

/// Inverse temperatures used for the KMS checks on quadratics.
pub fn beta_grid() -> [f64; 3] {
    [2f64.ln() + 0.5, 2f64.ln() + 2.0, 3.0]
}

pub fn kms_check(s: &str, z: SpherePoint64, beta: f64, config: &NumericConfig64) -> Check {
    let r = (|| {
        let m = map(s, config)?;
        let p = KmsParams::for_map(&m, beta, z, 40).map_err(|e| e.to_string())?;
        let cs = c_sequence(&m, &p, 7).map_err(|e| e.to_string())?;
        let rec = recover_bseq(&cs.values, beta).map_err(|e| e.to_string())?;
        let want = &cs.counts.0[..=6];
        let d = format!("recovered {} residual {:.1e}", seq(&rec.b), rec.max_residual);
        if rec.b == want && rec.max_residual < 1e-6 {
            Ok(d)
        } else {
            Err(format!("{d}, orbit counts {}", seq(want)))
        }
    })();
    Check::from_result(format!("kms {s} at {z} beta={beta:.6}"), r)
}

/// Telescoping on full measures when `tau_K` fits under the atom guard at
/// `K = 40`, else on measures at `K = 12` together with the pointwise check
/// at `K = 40`.
pub fn telescoping(s: &str, z: SpherePoint64, beta: f64, config: &NumericConfig64) -> Check {
    let r = (|| {
        let m = map(s, config)?;
        let p40 = KmsParams::for_map(&m, beta, z, 40).map_err(|e| e.to_string())?;
        let pointwise = telescoping_pointwise(&m, &p40).map_err(|e| e.to_string())?;
        let atoms = backorbit::orbit::b_sequence(&m, &z, 40, 1 << 12).map_err(|e| e.to_string())?;
        let total: u64 = atoms.iter().fold(0u64, |s, &b| s.saturating_add(b));
        let measure_depth = if total <= MEASURE_ATOM_GUARD { 40 } else { 12 };
        let pm = KmsParams::for_map(&m, beta, z, measure_depth).map_err(|e| e.to_string())?;
        let measure = telescoping_check(&m, &pm).map_err(|e| e.to_string())?;
        let d = format!(
            "K=40 pointwise |atom - m| = {:.1e} (bound {:.1e}); K={measure_depth} measure |atom - m| = {:.1e} (bound {:.1e})",
            (pointwise.atom_at_z - pointwise.m).abs(),
            pointwise.bound(),
            (measure.atom_at_z - measure.m).abs(),
            measure.bound(),
        );
        if pointwise.passed() && measure.passed() {
            Ok(d)
        } else {
            Err(d)
        }
    })();
    Check::from_result(format!("telescoping {s} at {z} beta={beta:.6}"), r)
}

pub fn conjugation_check(config: &NumericConfig64, seed: u64, cases: usize, depth: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = |r: f64| Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r));
    let mut jobs = Vec::new();
    while jobs.len() < cases {
        let cc = c(1.2);
        let (a, b, cm, d) = (c(1.0), c(1.0), c(1.0), c(1.0));
        if let Ok(mob) = Mobius::new(a, b, cm, d) {
            if mob.determinant().norm() >= 0.5 {
                jobs.push((cc, mob));
            }
        }
    }
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|(cc, mob)| {
            let r = (|| {
                let zero = Complex64::new(0.0, 0.0);
                let r = RationalMap64::polynomial(&[*cc, zero, Complex64::new(1.0, 0.0)], config.clone())?;
                let q = r.conjugate(mob)?;
                let cmp = compare(&invariant(&r, "r", depth)?, &invariant(&q, "q", depth)?)?;
                Ok::<bool, backorbit::Error>(cmp.verdict.is_equal())
            })();
            match r {
                Ok(true) => None,
                Ok(false) => Some(format!("c = {cc}: DISTINGUISHED")),
                Err(e) => Some(format!("c = {cc}: {e}")),
            }
        })
        .collect();
    let d = format!("{} of {cases} conjugate pairs EQUAL at depth {depth}", cases - failures.len());
    match failures.first() {
        None => Check::new("conjugation invariance", true, d),
        Some(f) => Check::new("conjugation invariance", false, format!("{d}; first failure {f}")),
    }
}

pub fn distinguishing(config: &NumericConfig64) -> Vec<Check> {
    let maps = match period_three_map() {
        Ok(c3) => vec!["z^2".to_string(), "z^2 + 1".into(), "z^2 - 1".into(), c3],
        Err(e) => return vec![Check::new("distinguish", false, e)],
    };
    let invs: Vec<_> = maps.iter().map(|s| map(s, config).and_then(|m| invariant(&m, s, 3).map_err(|e| e.to_string()))).collect();
    let mut out = Vec::new();
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            let r = match (&invs[i], &invs[j]) {
                (Ok(a), Ok(b)) => match compare(a, b) {
                    Ok(c) if !c.verdict.is_equal() => Ok(c.verdict.label().to_string()),
                    Ok(c) => Err(c.verdict.label().to_string()),
                    Err(e) => Err(e.to_string()),
                },
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            out.push(Check::from_result(format!("distinguish {} vs {}", maps[i], maps[j]), r));
        }
    }
    out
}

/// Every check, in report order.
pub fn all_checks(config: &NumericConfig64, seed: u64) -> Vec<Check> {
    let corpus = match corpus() {
        Ok(c) => c,
        Err(e) => return vec![Check::new("corpus", false, e)],
    };
    type Job<'a> = Box<dyn Fn() -> Vec<Check> + Send + Sync + 'a>;
    let mut jobs: Vec<Job> = Vec::new();
    jobs.push(Box::new(|| golden(config)));
    jobs.push(Box::new(|| vec![closed_form(config)]));
    for (i, s) in corpus.iter().enumerate() {
        jobs.push(Box::new(move || vec![structure_check(s, config, seed.wrapping_add(i as u64), 200)]));
    }
    for s in &corpus {
        jobs.push(Box::new(move || vec![oracle_check(s, config)]));
    }
    jobs.push(Box::new(|| family_checks(config)));
    for s in corpus.iter().take(4) {
        for beta in beta_grid() {
            jobs.push(Box::new(move || {
                let m = match map(s, config) {
                    Ok(m) => m,
                    Err(e) => return vec![Check::new(format!("kms {s}"), false, e)],
                };
                m.critical_points()
                    .iter()
                    .flat_map(|cp| [kms_check(s, cp.location, beta, config), telescoping(s, cp.location, beta, config)])
                    .collect()
            }));
        }
    }
    jobs.push(Box::new(|| vec![conjugation_check(config, seed, 50, 6)]));
    jobs.push(Box::new(|| distinguishing(config)));
    jobs.par_iter().map(|j| j()).collect::<Vec<_>>().into_iter().flatten().collect()
}

pub fn verify(g: &GlobalArgs, config: &NumericConfig64) -> CliResult<Output> {
    let checks = all_checks(config, g.seed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let json = json!({
        "seed": g.seed,
        "checks": checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect::<Vec<_>>(),
        "passed": checks.len() - failed,
        "failed": failed,
        "all_passed": failed == 0,
    });
    let mut out = Output::new(json, &["check", "passed", "detail"]);
    for c in &checks {
        out.row(vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]);
    }
    if failed > 0 {
        let msg = checks.iter().filter(|c| !c.passed).map(|c| format!("FAIL {}: {}", c.name, c.detail)).collect::<Vec<_>>();
        return Err(CliError::numerical(msg.join("\n"), out));
    }
    Ok(out)
}
