//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Expected values come from oracles in this file (plain forward iteration,
//! exact or Durand-Kerner root counts on composed maps, exact integer
//! signs) rather than
//! from the library routes under test.

use std::process::Command;
use std::time::{Duration, Instant};

use backorbit::compare::{compare, invariant, Verdict};
use backorbit::family::{family_bseq, solve_cm, verify_critical_orbit};
use backorbit::kms::{c_sequence, recover_bseq, telescoping_check, telescoping_pointwise, KmsParams};
use backorbit::orbit::{b_sequence, backward_levels};
use backorbit::poly::{all_roots, RootConfig};
use backorbit::ratmap::Mobius;
use backorbit::{parse_map, Complex64, NumericConfig64, Polynomial64, RationalMap64, SpherePoint64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_complex::Complex;
use num_traits::{Num, One, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;
const GOLDEN_DEPTH: usize = 6;
const GOLDEN_TIME: Duration = Duration::from_secs(1);
const ORACLE_CLUSTER: f64 = 2e-3;
const ORACLE_GAP: f64 = 2e-2;
const BRACKET: f64 = 1e-12;
const RETURN_TOL: f64 = 1e-8;
const EARLY_TOL: f64 = 1e-4;
const KMS_TRUNCATION: usize = 40;
const RECOVERY_RESIDUAL: f64 = 1e-6;
const CLOSED_FORM_C: f64 = 1e-12;
const C_AGREEMENT: f64 = 1e-12;
const PROPERTY_CASES: u32 = 500;
const RECONSTRUCTION: f64 = 1e-8;
const CONJUGATION_DEPTH: usize = 6;
const DISTINGUISH_DEPTH: usize = 3;

struct Outcome {
    passed: bool,
    detail: String,
}

fn ok(detail: impl Into<String>) -> Result<String, String> {
    Ok(detail.into())
}

fn map(s: &str) -> RationalMap64 {
    parse_map(s, NumericConfig64::default()).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn pt(s: &str) -> SpherePoint64 {
    s.parse().unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------- oracles

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (f(lo) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The period-three parameter, root of `x^3 + 2x^2 + x + 1`.
fn c3() -> f64 {
    bisect(|x| x * x * x + 2.0 * x * x + x + 1.0, -2.0, -1.5)
}

struct Quadratic {
    text: String,
    c: f64,
}

fn example_quadratics() -> Vec<Quadratic> {
    let c3 = c3();
    vec![
        Quadratic { text: "z^2".into(), c: 0.0 },
        Quadratic { text: "z^2 + 1".into(), c: 1.0 },
        Quadratic { text: "z^2 - 1".into(), c: -1.0 },
        Quadratic { text: format!("z^2 + ({c3})"), c: c3 },
    ]
}

/// `b_n` for `z^2 + c` (real `c`) at `0` or at infinity, by counting the
/// returns of the critical orbits: `b_{n+1} = 2 b_n - #{critical p : R^{n+1}(p) = t}`.
fn quadratic_counts(c: f64, at_infinity: bool, depth: usize) -> Vec<u64> {
    let mut b = vec![1u64];
    let mut x = 0.0f64;
    for _ in 0..depth {
        x = x * x + c;
        let hits = if at_infinity { 1 } else { u64::from(x.abs() < 1e-9) };
        let last = *b.last().unwrap();
        b.push(2 * last - hits);
    }
    b
}

fn trim(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    while v.len() > 1 && v.last().unwrap().norm() <= 1e-11 * scale {
        v.pop();
    }
    v
}

fn mul<T: Clone + Num>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn add_scaled<T: Clone + Num>(acc: &mut Vec<T>, p: &[T], k: &T) {
    if acc.len() < p.len() {
        acc.resize(p.len(), T::zero());
    }
    for (a, x) in acc.iter_mut().zip(p) {
        *a = a.clone() + x.clone() * k.clone();
    }
}

fn power<T: Clone + Num>(p: &[T], e: usize) -> Vec<T> {
    (0..e).fold(vec![T::one()], |acc, _| mul(&acc, p))
}

/// `b P_n - a Q_n` for `t = [a:b]`, where `(P_n, Q_n)` are the forms of degree
/// `N^n` obtained by homogeneous substitution.
fn fiber_form<T: Clone + Num>(p0: &[T], q0: &[T], target: (T, T), n: u32) -> Vec<T> {
    let deg = p0.len().max(q0.len()) - 1;
    let (mut p, mut q) = (vec![T::zero(), T::one()], vec![T::one()]);
    for _ in 0..n {
        let (mut np, mut nq) = (vec![T::zero()], vec![T::zero()]);
        for k in 0..=deg {
            let term = mul(&power(&p, k), &power(&q, deg - k));
            add_scaled(&mut np, &term, p0.get(k).unwrap_or(&T::zero()));
            add_scaled(&mut nq, &term, q0.get(k).unwrap_or(&T::zero()));
        }
        p = np;
        q = nq;
    }
    let mut g = vec![T::zero(); deg.pow(n) + 1];
    add_scaled(&mut g, &p, &target.1);
    add_scaled(&mut g, &q, &(T::zero() - target.0));
    g
}

type Exact = Complex<BigRational>;

fn strip(mut v: Vec<Exact>) -> Vec<Exact> {
    while v.len() > 1 && v.last().unwrap().is_zero() {
        v.pop();
    }
    v
}

fn exact_rem(a: &[Exact], b: &[Exact]) -> Vec<Exact> {
    let mut r = a.to_vec();
    while r.len() >= b.len() && !(r.len() == 1 && r[0].is_zero()) {
        let shift = r.len() - b.len();
        let factor = r.last().unwrap() / b.last().unwrap();
        for (k, y) in b.iter().enumerate() {
            r[shift + k] = &r[shift + k] - &factor * y;
        }
        r.pop();
        r = strip(r);
        if r.is_empty() {
            r.push(Exact::zero());
        }
    }
    r
}

/// Number of distinct affine roots, `deg g - deg gcd(g, g')`.
fn exact_distinct(g: &[Exact]) -> u64 {
    let deg = g.len() - 1;
    let mut a = g.to_vec();
    let mut b: Vec<Exact> = strip(
        g.iter().enumerate().skip(1).map(|(k, x)| x * Exact::new(BigRational::from_integer(k.into()), BigRational::zero())).collect(),
    );
    while !(b.len() == 1 && b[0].is_zero()) {
        let r = exact_rem(&a, &b);
        a = b;
        b = r;
    }
    (deg - (a.len() - 1)) as u64
}

/// Whether `x` has at most ten binary digits after the point.
fn short_dyadic(x: f64) -> bool {
    let y = x * 1024.0;
    y.fract() == 0.0 && y.abs() < 1e12
}

fn exact(z: Complex64) -> Exact {
    Exact::new(BigRational::from_float(z.re).unwrap(), BigRational::from_float(z.im).unwrap())
}

fn durand_kerner(poly: &[Complex64]) -> Vec<Complex64> {
    let d = poly.len() - 1;
    let lead = poly[d];
    let monic: Vec<Complex64> = poly.iter().map(|x| x / lead).collect();
    let radius = 1.0 + monic[..d].iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let mut z: Vec<Complex64> =
        (0..d).map(|k| Complex64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
    for _ in 0..20_000 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let f = monic.iter().rev().fold(c(0.0, 0.0), |acc, a| acc * z[i] + a);
            let den = (0..d).filter(|&j| j != i).fold(c(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            if den.norm() == 0.0 {
                continue;
            }
            let step = f / den;
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-17 {
            break;
        }
    }
    z
}

/// Distinct points among `roots` by single linkage at a relative scale, with
/// the smallest gap left between clusters.
fn distinct(roots: &[Complex64], tol: f64) -> (u64, f64) {
    let close = |i: usize, j: usize| (roots[i] - roots[j]).norm() / (1.0 + roots[i].norm().max(roots[j].norm()));
    let mut label: Vec<usize> = (0..roots.len()).collect();
    loop {
        let mut changed = false;
        for i in 0..roots.len() {
            for j in 0..i {
                if close(i, j) <= tol && label[i] != label[j] {
                    let (lo, hi) = (label[i].min(label[j]), label[i].max(label[j]));
                    label.iter_mut().filter(|l| **l == hi).for_each(|l| *l = lo);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut gap = f64::INFINITY;
    for i in 0..roots.len() {
        for j in 0..i {
            if label[i] != label[j] {
                gap = gap.min(close(i, j));
            }
        }
    }
    let mut ids = label.clone();
    ids.sort_unstable();
    ids.dedup();
    (ids.len() as u64, gap)
}

/// `#R^{-n}(t)` for `t = [a:1]` or `[1:0]`: exact square-free degree when the data are short dyadic
/// numbers, Durand-Kerner clusters otherwise. The numeric route fails when
/// its clusters are not separated by a wide margin.
fn brute_force_count(m: &RationalMap64, t: &SpherePoint64, n: u32) -> Result<u64, String> {
    if n == 0 {
        return Ok(1);
    }
    let (p0, q0) = (m.numerator().coeffs(), m.denominator().coeffs());
    let target = t.affine().map_or((c(1.0, 0.0), c(0.0, 0.0)), |z| (z, c(1.0, 0.0)));
    let full = m.degree().pow(n);
    let data: Vec<Complex64> = p0.iter().chain(q0).copied().chain([target.0, target.1]).collect();
    if data.iter().all(|z| short_dyadic(z.re) && short_dyadic(z.im)) {
        let ex = |v: &[Complex64]| v.iter().map(|z| exact(*z)).collect::<Vec<_>>();
        let g = strip(fiber_form(&ex(p0), &ex(q0), (exact(target.0), exact(target.1)), n));
        let affine = if g.len() > 1 { exact_distinct(&g) } else { 0 };
        return Ok(affine + u64::from(g.len() - 1 < full));
    }
    let g = trim(fiber_form(p0, q0, target, n));
    let (affine, gap) = if g.len() > 1 { distinct(&durand_kerner(&g), ORACLE_CLUSTER) } else { (0, f64::INFINITY) };
    if gap < ORACLE_GAP {
        return Err(format!("oracle clusters only {gap:e} apart"));
    }
    Ok(affine + u64::from(g.len() - 1 < full))
}

fn f_exact(m: u32) -> Vec<BigInt> {
    let mut f = vec![BigInt::one()];
    for _ in 1..m {
        let mut sq = vec![BigInt::zero(); 2 * f.len() - 1];
        for (i, a) in f.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        let mut next = vec![BigInt::one()];
        next.extend(sq);
        f = next;
    }
    f
}

/// Sign of `f(x)` for a float `x = k 2^e`, from `sum a_j k^j 2^{e j}` scaled
/// to integers.
fn exact_sign(f: &[BigInt], x: f64) -> i32 {
    let r = BigRational::from_float(x).unwrap();
    let (num, den) = (r.numer().clone(), r.denom().clone());
    let d = f.len() - 1;
    let mut acc = BigInt::zero();
    let mut den_pow = BigInt::one();
    let mut terms = Vec::with_capacity(f.len());
    for _ in 0..=d {
        terms.push(den_pow.clone());
        den_pow *= &den;
    }
    let mut num_pow = BigInt::one();
    for (j, a) in f.iter().enumerate() {
        acc += a * &num_pow * &terms[d - j];
        num_pow *= &num;
    }
    match acc.sign() {
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    }
}

// ---------------------------------------------------------------- criteria

fn golden() -> Result<String, String> {
    let literal: [(&[u64], &[u64]); 4] = [
        (&[1, 1, 1], &[1, 1, 1]),
        (&[1, 2, 4, 8, 16], &[1, 1]),
        (&[1, 2, 3, 6, 11], &[1, 1]),
        (&[1, 2, 4, 7, 14], &[1, 1]),
    ];
    let mut slowest = Duration::ZERO;
    for (q, (zero_prefix, inf_prefix)) in example_quadratics().iter().zip(literal) {
        let start = Instant::now();
        let m = map(&q.text);
        let at_zero = b_sequence(&m, &SpherePoint64::zero(), GOLDEN_DEPTH, 1 << 12).map_err(|e| e.to_string())?;
        let at_inf = b_sequence(&m, &SpherePoint64::infinity(), GOLDEN_DEPTH, 1 << 12).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let (want_zero, want_inf) = (quadratic_counts(q.c, false, GOLDEN_DEPTH), quadratic_counts(q.c, true, GOLDEN_DEPTH));
        if at_zero.0 != want_zero || at_inf.0 != want_inf {
            return Err(format!("{}: got {at_zero} / {at_inf}, want {want_zero:?} / {want_inf:?}", q.text));
        }
        if !want_zero.starts_with(zero_prefix) || !want_inf.starts_with(inf_prefix) {
            return Err(format!("{}: oracle disagrees with the published prefix", q.text));
        }
        if elapsed >= GOLDEN_TIME {
            return Err(format!("{} took {elapsed:?}", q.text));
        }
    }
    ok(format!("4 maps x 2 critical points to depth {GOLDEN_DEPTH}, slowest {slowest:.2?}"))
}

fn closed_form() -> Result<String, String> {
    let b = backward_levels(&map("z^2 - 1"), &SpherePoint64::zero(), 11).map_err(|e| e.to_string())?.counts;
    for n in 0..=5u32 {
        let even = (1 + (1u64 << (2 * n + 1))) / 3;
        let odd = (2 + (1u64 << (2 * n + 2))) / 3;
        if b[2 * n as usize] != even || b[2 * n as usize + 1] != odd {
            return Err(format!("n={n}: got {} {}, want {even} {odd}", b[2 * n as usize], b[2 * n as usize + 1]));
        }
    }
    ok(format!("b_0..b_11 = {b}"))
}

fn corpus() -> Vec<String> {
    let c3 = c3();
    [
        "z^2",
        "z^2 + 1",
        "z^2 - 1",
        &format!("z^2 + ({c3})"),
        "z^2 + i",
        "z^2 - 2",
        "(z^2 + 1)/(2*z)",
        "1/z^2",
        "z^3 - 3*z",
        "z^3 + (0.4 + 0.3*i)*z + 1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn structure() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut fibers = 0;
    for s in corpus() {
        let m = map(&s);
        let n = m.degree();
        let rh: usize = m.critical_points().iter().map(|cp| cp.branch_index - 1).sum();
        if rh != 2 * n - 2 {
            return Err(format!("{s}: sum (e-1) = {rh}"));
        }
        let values = m.critical_values().to_vec();
        for k in 0..200 {
            let t = match k % 10 {
                0 => values[rng.random_range(0..values.len())],
                1 if rng.random_bool(0.2) => SpherePoint64::infinity(),
                _ => SpherePoint64::finite(c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0))).unwrap(),
            };
            let fiber = m.fiber(&t).map_err(|e| format!("{s} at {t}: {e}"))?;
            if fiber.index_sum() != n {
                return Err(format!("{s} at {t}: index sum {}", fiber.index_sum()));
            }
            if let Some(x) = fiber.points().find(|x| m.apply(x).chordal_distance(&t) > 1e-6) {
                return Err(format!("{s}: {x} does not map to {t}"));
            }
            fibers += 1;
        }
    }
    ok(format!("{fibers} fibers over 10 maps"))
}

fn oracle() -> Result<String, String> {
    let mut compared = 0;
    for s in corpus() {
        let m = map(&s);
        let top = if m.degree() == 2 { 3 } else { 2 };
        let mut targets: Vec<SpherePoint64> = m.critical_points().iter().map(|cp| cp.location).collect();
        targets.extend(m.critical_values().iter().copied());
        targets.extend([pt("0.7-0.2i"), pt("0.5+0.25i")]);
        for t in targets {
            let lv = backward_levels(&m, &t, top).map_err(|e| format!("{s} at {t}: {e}"))?;
            for n in 0..=top {
                let want = brute_force_count(&m, &t, n as u32).map_err(|e| format!("{s} at {t}, n={n}: {e}"))?;
                if lv.counts[n] != want {
                    return Err(format!("{s} at {t}, n={n}: {} vs oracle {want}", lv.counts[n]));
                }
                compared += 1;
            }
        }
    }
    ok(format!("{compared} counts equal"))
}

fn family() -> Result<String, String> {
    let params = (2..=6).map(solve_cm).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    if params[0].c != -1.0 {
        return Err(format!("c_2 = {}", params[0].c));
    }
    if params.windows(2).any(|w| !(w[1].c < w[0].c)) {
        return Err("not strictly decreasing".into());
    }
    for p in &params {
        let f = f_exact(p.m);
        if p.f.coeffs() != f.as_slice() {
            return Err(format!("f_{} coefficients differ", p.m));
        }
        let (lo, hi) = p.bracket;
        if !(hi - lo <= BRACKET) || exact_sign(&f, lo) * exact_sign(&f, hi) > 0 {
            return Err(format!("m={}: bracket [{lo}, {hi}] is not a certified sign change", p.m));
        }
        // f_m has no roots left of -2 (the critical orbit escapes there)
        let left = exact_sign(&f, -2.0);
        let steps = 4_000;
        if let Some(x) = (0..=steps)
            .map(|k| -2.0 + (lo - BRACKET + 2.0) * k as f64 / steps as f64)
            .find(|x| exact_sign(&f, *x) != left)
        {
            return Err(format!("m={}: sign change at {x} below the bracket", p.m));
        }
        if p.minimal_certified != Some(true) {
            return Err(format!("m={}: minimality not certified", p.m));
        }
        let mut orbit = vec![0.0f64];
        for _ in 0..p.m {
            let x = *orbit.last().unwrap();
            orbit.push(x * x + p.c);
        }
        let back = orbit[p.m as usize].abs();
        let early = orbit[1..p.m as usize].iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
        if back > RETURN_TOL || early < EARLY_TOL {
            return Err(format!("m={}: |R^m(0)| = {back:e}, min early {early:e}", p.m));
        }
        let report = verify_critical_orbit(p.m).map_err(|e| e.to_string())?;
        if !report.passed() {
            return Err(format!("m={}: library orbit check failed", p.m));
        }
        let b = family_bseq(p.m, p.m as usize + 1).map_err(|e| e.to_string())?;
        if b[p.m as usize] != (1 << p.m) - 1 {
            return Err(format!("m={}: b_m(0) = {}", p.m, b[p.m as usize]));
        }
    }
    let cs: Vec<String> = params.iter().map(|p| format!("{:.12}", p.c)).collect();
    ok(format!("c_2..c_6 = {}", cs.join(", ")))
}

fn beta_grid() -> [f64; 3] {
    let ln2 = 2f64.ln();
    [ln2 + 0.5, ln2 + 2.0, 3.0]
}

fn kms() -> Result<String, String> {
    let n_max = GOLDEN_DEPTH + 1;
    let mut worst = 0.0f64;
    for q in example_quadratics() {
        let m = map(&q.text);
        for at_infinity in [false, true] {
            let z = if at_infinity { SpherePoint64::infinity() } else { SpherePoint64::zero() };
            let b = quadratic_counts(q.c, at_infinity, n_max + KMS_TRUNCATION);
            for beta in beta_grid() {
                let label = format!("{} at {z}, beta={beta:.6}", q.text);
                let params = KmsParams::new(beta, z, KMS_TRUNCATION, 2).map_err(|e| e.to_string())?;
                let cs = c_sequence(&m, &params, n_max).map_err(|e| format!("{label}: {e}"))?;
                let weight = |j: usize| (-(j as f64) * beta).exp() * b[j] as f64;
                let s: f64 = (0..=KMS_TRUNCATION).map(weight).sum();
                for (n, got) in cs.values.iter().enumerate() {
                    let want: f64 = (n..=n + KMS_TRUNCATION).map(weight).sum::<f64>() / s;
                    if (got - want).abs() > C_AGREEMENT {
                        return Err(format!("{label}: c_{n} = {got}, oracle {want}"));
                    }
                }
                let rec = recover_bseq(&cs.values, beta).map_err(|e| format!("{label}: {e}"))?;
                if rec.b != b[..=GOLDEN_DEPTH] || !(rec.max_residual < RECOVERY_RESIDUAL) {
                    return Err(format!("{label}: recovered {:?} (residual {:e})", rec.b, rec.max_residual));
                }
                worst = worst.max(rec.max_residual);
                if q.c == 0.0 && at_infinity {
                    if let Some((n, v)) =
                        cs.values.iter().enumerate().find(|(n, v)| (*v - (-(*n as f64) * beta).exp()).abs() > CLOSED_FORM_C)
                    {
                        return Err(format!("{label}: c_{n} = {v} is not e^(-n beta)"));
                    }
                    if rec.b.iter().any(|&x| x != 1) {
                        return Err(format!("{label}: recovered {:?}", rec.b));
                    }
                }
            }
        }
    }
    ok(format!("24 cases, K={KMS_TRUNCATION}, worst residual {worst:.2e}"))
}

fn telescoping() -> Result<String, String> {
    let mut measure_level = 0;
    for q in example_quadratics() {
        let m = map(&q.text);
        for at_infinity in [false, true] {
            let z = if at_infinity { SpherePoint64::infinity() } else { SpherePoint64::zero() };
            let b = quadratic_counts(q.c, at_infinity, KMS_TRUNCATION + 1);
            for beta in beta_grid() {
                let label = format!("{} at {z}, beta={beta:.6}", q.text);
                let mut reports = Vec::new();
                let params = KmsParams::new(beta, z, KMS_TRUNCATION, 2).map_err(|e| e.to_string())?;
                reports.push(telescoping_pointwise(&m, &params).map_err(|e| format!("{label}: {e}"))?);
                // full measures grow like 2^K; they are formed whenever they stay small
                let k = if b[KMS_TRUNCATION] <= 1 << 20 { KMS_TRUNCATION } else { 12 };
                let params = KmsParams::new(beta, z, k, 2).map_err(|e| e.to_string())?;
                reports.push(telescoping_check(&m, &params).map_err(|e| format!("{label}: {e}"))?);
                measure_level += usize::from(k == KMS_TRUNCATION);
                for r in reports {
                    let s: f64 = (0..=r.depth).map(|j| (-(j as f64) * beta).exp() * b[j] as f64).sum();
                    let leak = (-((r.depth + 1) as f64) * beta).exp() * b[r.depth + 1] as f64 / s;
                    if (r.m - 1.0 / s).abs() > 1e-12 * r.m || leak > r.bound() * (1.0 + 1e-12) {
                        return Err(format!("{label}, K={}: m = {} vs oracle {}", r.depth, r.m, 1.0 / s));
                    }
                    if !r.passed() {
                        return Err(format!(
                            "{label}, K={}: atom {} vs m {}, off-z {:e}, bound {:e}",
                            r.depth,
                            r.atom_at_z,
                            r.m,
                            r.off_z_mass,
                            r.bound()
                        ));
                    }
                }
            }
        }
    }
    ok(format!("24 pointwise at K={KMS_TRUNCATION}; 24 on full measures, {measure_level} of them at K={KMS_TRUNCATION}, the rest at K=12"))
}

fn runner(tag: u8) -> TestRunner {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&SEED.to_le_bytes());
    seed[31] = tag;
    let config = Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &seed))
}

fn point() -> impl Strategy<Value = SpherePoint64> {
    prop_oneof![
        1 => Just(SpherePoint64::infinity()),
        12 => (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(a, b)| SpherePoint64::finite(c(a, b)).unwrap()),
        4 => (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| SpherePoint64::finite(c(a, b)).unwrap()),
    ]
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

fn report<T: std::fmt::Debug>(name: &str, r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn properties() -> Result<String, String> {
    report(
        "chordal",
        runner(1).run(&(point(), point(), point()), |(a, b, z)| {
            let (ab, ba) = (a.chordal_distance(&b), b.chordal_distance(&a));
            prop_assert!((0.0..=2.0 + 1e-15).contains(&ab));
            prop_assert!((ab - ba).abs() <= 1e-15);
            prop_assert!(a.chordal_distance(&a) <= 1e-15);
            prop_assert!(ab <= a.chordal_distance(&z) + z.chordal_distance(&b) + 1e-14);
            Ok(())
        }),
    )?;

    report(
        "reconstruction",
        runner(2).run(&prop::collection::vec(complex(3.0), 2..8), |roots| {
            let mut p = Polynomial64::constant(c(1.0, 0.0));
            for r in &roots {
                p = &p * &Polynomial64::new(vec![-r, c(1.0, 0.0)]);
            }
            let found = all_roots(&p, &RootConfig::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let mut q = Polynomial64::constant(c(1.0, 0.0));
            for r in &found.roots {
                for _ in 0..r.multiplicity {
                    q = &q * &Polynomial64::new(vec![-r.location, c(1.0, 0.0)]);
                }
            }
            let scale = p.max_abs();
            for k in 0..=roots.len() {
                prop_assert!((p.coeff(k) - q.coeff(k)).norm() <= RECONSTRUCTION * scale);
            }
            Ok(())
        }),
    )?;

    let maps = prop_oneof![
        complex(1.5).prop_map(|a| vec![a, c(0.0, 0.0), c(1.0, 0.0)]),
        (complex(1.5), complex(1.5)).prop_map(|(a, b)| vec![a, b, c(0.0, 0.0), c(1.0, 0.0)]),
    ];
    report(
        "growth",
        runner(3).run(&(maps, point()), |(coeffs, z)| {
            let m = RationalMap64::polynomial(&coeffs, NumericConfig64::default())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let b = backward_levels(&m, &z, 5).map_err(|e| TestCaseError::fail(e.to_string()))?.counts;
            let n = m.degree() as u64;
            for w in b.windows(2) {
                prop_assert!(w[0] <= w[1] && w[1] <= n * w[0], "{:?}", b.0);
            }
            Ok(())
        }),
    )?;

    // d = (1 + b c) / a keeps the determinant at one
    let mobius = (complex(1.0), complex(1.0), complex(1.0)).prop_filter_map("a too small", |(a, b, cc)| {
        (a.norm() >= 0.3).then(|| Mobius::new(a, b, cc, (c(1.0, 0.0) + b * cc) / a).unwrap())
    });
    report(
        "conjugation",
        runner(4).run(&(complex(1.2), mobius), |(k, mob)| {
            let r = RationalMap64::polynomial(&[k, c(0.0, 0.0), c(1.0, 0.0)], NumericConfig64::default())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let q = r.conjugate(&mob).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let fail = |e: backorbit::Error| TestCaseError::fail(e.to_string());
            let (ir, iq) = (invariant(&r, "r", CONJUGATION_DEPTH).map_err(fail)?, invariant(&q, "q", CONJUGATION_DEPTH).map_err(fail)?);
            prop_assert!(compare(&ir, &iq).map_err(fail)?.verdict.is_equal());
            Ok(())
        }),
    )?;

    ok(format!("4 suites x {PROPERTY_CASES} cases"))
}

fn distinguishing() -> Result<String, String> {
    let qs = example_quadratics();
    let mut pairs = 0;
    for i in 0..qs.len() {
        for j in i + 1..qs.len() {
            let (a, b) = (map(&qs[i].text), map(&qs[j].text));
            let ia = invariant(&a, "a", DISTINGUISH_DEPTH).map_err(|e| e.to_string())?;
            let ib = invariant(&b, "b", DISTINGUISH_DEPTH).map_err(|e| e.to_string())?;
            let mut sa: Vec<Vec<u64>> =
                [false, true].iter().map(|&inf| quadratic_counts(qs[i].c, inf, DISTINGUISH_DEPTH)).collect();
            let mut sb: Vec<Vec<u64>> =
                [false, true].iter().map(|&inf| quadratic_counts(qs[j].c, inf, DISTINGUISH_DEPTH)).collect();
            sa.sort();
            sb.sort();
            if sa == sb {
                return Err(format!("oracle: {} and {} share invariants", qs[i].text, qs[j].text));
            }
            match compare(&ia, &ib).map_err(|e| e.to_string())?.verdict {
                Verdict::Distinguished { .. } => pairs += 1,
                v => return Err(format!("{} vs {}: {}", qs[i].text, qs[j].text, v.label())),
            }
        }
    }
    ok(format!("{pairs} pairs DISTINGUISHED at depth {DISTINGUISH_DEPTH}"))
}

fn determinism() -> Result<String, String> {
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_backorbit"))
            .args(["verify", "--jobs", jobs])
            .output()
            .map_err(|e| e.to_string())
    };
    let (one, eight) = (run("1")?, run("8")?);
    if !one.status.success() || !eight.status.success() {
        return Err(format!("exit {:?} / {:?}", one.status.code(), eight.status.code()));
    }
    if one.stdout != eight.stdout {
        return Err("outputs differ".into());
    }
    ok(format!("{} identical bytes", one.stdout.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Result<String, String>); 10] = [
        ("golden b-sequences", golden),
        ("closed form for z^2 - 1", closed_form),
        ("fiber and Riemann-Hurwitz identities", structure),
        ("brute-force oracle equivalence", oracle),
        ("quadratic family parameters", family),
        ("KMS recovery", kms),
        ("telescoping", telescoping),
        ("property suites", properties),
        ("distinguishing power", distinguishing),
        ("determinism across --jobs", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => Outcome { passed: true, detail },
            Ok(Err(detail)) => Outcome { passed: false, detail },
            Err(_) => Outcome { passed: false, detail: "panicked".into() },
        };
        failed += usize::from(!outcome.passed);
        println!("{} {:>2} {name}: {}", if outcome.passed { "PASS" } else { "FAIL" }, k + 1, outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
