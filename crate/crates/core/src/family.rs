//! The quadratic family `z^2 + c_m` with `0` periodic of exact period `m`.
//!
//! `f_1 = 1`, `f_{m+1}(x) = x f_m(x)^2 + 1`, and `c_m` is the smallest real
//! root of `f_m`. The orbit of `0` under `z^2 + c` is `g_n(c) = c f_n(c)`.
//! Polynomials are built over the integers; only the root solve is numeric,
//! and every reported bracket has its endpoint signs checked exactly.

use num_bigint::{BigInt, Sign};
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::orbit::{b_sequence, BSequence};
use crate::poly::{all_roots, Polynomial, RootConfig};
use crate::ratmap::RationalMap;
use crate::scalar::Dw;
use crate::sphere::SpherePoint;
use crate::IntPolynomial;

/// Largest `m` accepted; `deg f_13 = 4095`.
pub const MAX_M: u32 = 13;

/// Bracket width the solver certifies.
pub const BRACKET_WIDTH: f64 = 1e-12;

/// Largest degree for which the Sturm count below the bracket is run.
pub const STURM_DEGREE_LIMIT: usize = 255;

/// Exact `f_m`.
pub fn f_polynomial(m: u32) -> Result<IntPolynomial> {
    if m == 0 {
        return Err(Error::InvalidArgument("f_m is defined for m >= 1".into()));
    }
    if m > MAX_M {
        return Err(Error::Guard { what: format!("degree 2^{} - 1 of f_{m}", m - 1), limit: (1 << (MAX_M - 1)) - 1 });
    }
    let one = IntPolynomial::constant(BigInt::one());
    let x = IntPolynomial::x();
    let mut f = one.clone();
    for _ in 1..m {
        f = &(&x * &(&f * &f)) + &one;
    }
    Ok(f)
}

/// Sign of `f(x)` for a finite `x`, computed exactly.
pub fn exact_sign(f: &IntPolynomial, x: f64) -> Sign {
    let (h, _, _) = homogeneous_value(f, x);
    h.sign()
}

/// `f(x)` evaluated exactly and rounded once to `f64`.
pub fn exact_value(f: &IntPolynomial, x: f64) -> f64 {
    let (h, d, n) = homogeneous_value(f, x);
    BigRational::new(h, d.pow(n as u32)).to_f64().unwrap_or(f64::NAN)
}

/// For `x = a / d` with `d` a power of two: `(sum c_k a^k d^{n-k}, d, n)`.
fn homogeneous_value(f: &IntPolynomial, x: f64) -> (BigInt, BigInt, usize) {
    let (a, d) = dyadic(x);
    let c = f.coeffs();
    let n = c.len().saturating_sub(1);
    let mut acc = BigInt::zero();
    let mut dpow = BigInt::one();
    for ck in c.iter().rev() {
        acc = acc * &a + ck * &dpow;
        dpow *= &d;
    }
    (acc, d, n)
}

fn dyadic(x: f64) -> (BigInt, BigInt) {
    let (mant, exp, sign) = Float::integer_decode(x);
    let mut a = BigInt::from(mant) * BigInt::from(sign);
    if exp >= 0 {
        a <<= exp as usize;
        (a, BigInt::one())
    } else {
        (a, BigInt::one() << ((-exp) as usize))
    }
}

/// Sturm chain with every member divided by its positive content.
fn sturm_chain(f: &IntPolynomial) -> Vec<Vec<BigInt>> {
    let mut chain = vec![primitive(f.coeffs().to_vec()), primitive(f.derivative().into_coeffs())];
    loop {
        let (a, b) = (&chain[chain.len() - 2], &chain[chain.len() - 1]);
        if b.len() <= 1 {
            break;
        }
        let (r, lc_sign_negative) = pseudo_remainder(a, b);
        if r.is_empty() {
            break;
        }
        let r = if lc_sign_negative { r } else { r.into_iter().map(|c| -c).collect() };
        chain.push(primitive(r));
    }
    chain
}

/// `lc(b)^{da-db+1} a mod b`, plus whether that power of `lc(b)` is negative.
fn pseudo_remainder(a: &[BigInt], b: &[BigInt]) -> (Vec<BigInt>, bool) {
    let db = b.len() - 1;
    let lc = &b[db];
    let mut r = a.to_vec();
    let mut steps = 0usize;
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let lead = r[dr].clone();
        for c in r.iter_mut() {
            *c *= lc;
        }
        for (j, bj) in b.iter().enumerate() {
            r[dr - db + j] -= &lead * bj;
        }
        steps += 1;
        while r.last().is_some_and(|c| c.is_zero()) {
            r.pop();
        }
    }
    let total = a.len() - db;
    for _ in steps..total {
        for c in r.iter_mut() {
            *c *= lc;
        }
    }
    (r, lc.is_negative() && total % 2 == 1)
}

fn primitive(mut c: Vec<BigInt>) -> Vec<BigInt> {
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    let g = c.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in c.iter_mut() {
            *x /= &g;
        }
    }
    c
}

fn sign_changes(signs: impl Iterator<Item = Sign>) -> usize {
    let mut last = Sign::NoSign;
    let mut count = 0;
    for s in signs.filter(|s| *s != Sign::NoSign) {
        if last != Sign::NoSign && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Number of distinct real roots of `f` in `(-inf, x]`, by Sturm's theorem.
pub fn real_roots_at_most(f: &IntPolynomial, x: f64) -> usize {
    let chain = sturm_chain(f);
    let at_minus_inf = chain.iter().map(|p| {
        let s = p.last().map_or(Sign::NoSign, |c| c.sign());
        if (p.len() - 1) % 2 == 1 {
            -s
        } else {
            s
        }
    });
    let v_inf = sign_changes(at_minus_inf);
    let v_x = sign_changes(chain.iter().map(|p| exact_sign(&IntPolynomial::new(p.clone()), x)));
    v_inf - v_x
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyParameter {
    pub m: u32,
    pub f: IntPolynomial,
    pub c: f64,
    /// `f_m` changes sign (or vanishes) on this closed interval.
    pub bracket: (f64, f64),
    /// `|f_m(c)|`, evaluated exactly.
    pub residual: f64,
    /// Sturm certificate that no real root lies below `bracket.0 - 1e-12`;
    /// `None` above [`STURM_DEGREE_LIMIT`].
    pub minimal_certified: Option<bool>,
    pub escalated: bool,
}

impl FamilyParameter {
    pub fn bracket_width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

/// Refines a sign change of `f` on `[lo, hi]` down to adjacent floats.
fn bisect(f: &IntPolynomial, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let s_lo = exact_sign(f, lo);
    if s_lo == Sign::NoSign {
        return (lo, lo);
    }
    if exact_sign(f, hi) == Sign::NoSign {
        return (hi, hi);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match exact_sign(f, mid) {
            Sign::NoSign => return (mid, mid),
            s if s == s_lo => lo = mid,
            _ => hi = mid,
        }
    }
    (lo, hi)
}

/// A sign-changing bracket around a numerical real root estimate.
fn bracket_near(f: &IntPolynomial, r: f64) -> Option<(f64, f64)> {
    if exact_sign(f, r) == Sign::NoSign {
        return Some((r, r));
    }
    let mut delta = 1e-10 * r.abs().max(1.0);
    while delta < 1e-3 {
        let (lo, hi) = (r - delta, r + delta);
        let (a, b) = (exact_sign(f, lo), exact_sign(f, hi));
        if a == Sign::NoSign {
            return Some((lo, lo));
        }
        if b == Sign::NoSign {
            return Some((hi, hi));
        }
        if a != b {
            return Some((lo, hi));
        }
        delta *= 4.0;
    }
    None
}

fn real_candidates(f: &IntPolynomial, cfg: &RootConfig<f64>) -> Result<Vec<f64>> {
    let coeffs: Vec<Complex<f64>> = f
        .coeffs()
        .iter()
        .map(|c| c.to_f64().filter(|x| x.is_finite()).map(|x| Complex::new(x, 0.0)).ok_or(Error::CoefficientOverflow))
        .collect::<Result<_>>()?;
    let roots = all_roots(&Polynomial::new(coeffs), cfg)?;
    Ok(roots
        .roots
        .iter()
        .map(|r| r.location)
        .filter(|z| z.im.abs() <= 1e-6 * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect())
}

/// Smallest sign change of `f_m` on `(-2, -2 + 60 / 4^m]`, located through
/// the orbit `g_m(x) = R^m(0)` (`f_m(x)` has the sign of `-g_m(x)` there).
fn orbit_scan(f: &IntPolynomial, m: u32) -> Option<(f64, f64)> {
    let sign = |x: f64| {
        let g = (0..m).fold(0.0f64, |g, _| g * g + x);
        -g.signum()
    };
    let steps = 20_000;
    let width = 60.0 * 0.25f64.powi(m as i32);
    let mut prev = -2.0;
    for k in 1..=steps {
        let x = -2.0 + width * k as f64 / steps as f64;
        if sign(x) != sign(prev) {
            let (a, b) = (exact_sign(f, prev), exact_sign(f, x));
            let bracket = if a != b && a != Sign::NoSign && b != Sign::NoSign {
                Some((prev, x))
            } else {
                bracket_near(f, 0.5 * (prev + x))
            };
            return bracket.map(|(lo, hi)| bisect(f, lo, hi));
        }
        prev = x;
    }
    None
}

/// `c_m` with a certified bracket.
pub fn solve_cm(m: u32) -> Result<FamilyParameter> {
    if m < 2 {
        return Err(Error::InvalidArgument("c_m is defined for m >= 2".into()));
    }
    let f = f_polynomial(m)?;
    let base = NumericConfig::<f64>::default();
    let attempt = |cfg: &RootConfig<f64>| -> Result<Option<(f64, f64)>> {
        let mut best: Option<(f64, f64)> = None;
        for r in real_candidates(&f, cfg)? {
            if let Some((lo, hi)) = bracket_near(&f, r) {
                let b = bisect(&f, lo, hi);
                if best.is_none_or(|(blo, _)| b.0 < blo) {
                    best = Some(b);
                }
            }
        }
        Ok(best)
    };
    // complex root solves are skipped above the Sturm limit
    let small = f.degree().unwrap_or(0) <= STURM_DEGREE_LIMIT;
    let direct = if small { attempt(&base.roots) } else { Ok(None) };
    let (found, escalated) = match direct {
        Ok(Some(b)) => (b, false),
        Ok(None) | Err(_) => match small
            .then(|| attempt(&base.escalated().roots).ok().flatten())
            .flatten()
            .or_else(|| orbit_scan(&f, m))
        {
            Some(b) => (b, true),
            None => return Err(Error::NoRealRoot { m }),
        },
    };
    let (lo, hi) = found;
    let (r_lo, r_hi) = (exact_value(&f, lo).abs(), exact_value(&f, hi).abs());
    let (c, residual) = if r_lo <= r_hi { (lo, r_lo) } else { (hi, r_hi) };
    let minimal_certified =
        (f.degree().unwrap_or(0) <= STURM_DEGREE_LIMIT).then(|| real_roots_at_most(&f, lo - BRACKET_WIDTH) == 0);
    Ok(FamilyParameter { m, f, c, bracket: (lo, hi), residual, minimal_certified, escalated })
}

/// Whether the brackets show `c_2 > c_3 > ...` strictly.
pub fn strictly_decreasing(params: &[FamilyParameter]) -> bool {
    params.windows(2).all(|w| w[1].bracket.1 < w[0].bracket.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalOrbitReport {
    pub m: u32,
    pub c: f64,
    /// `R^k(0)` for `k = 0..=m`.
    pub orbit: Vec<f64>,
    /// `|g_n(c) - c f_n(c)|` for `n = 1..=m`.
    pub g_residuals: Vec<f64>,
    /// `|f_k(c)|` for `k = 1..m`.
    pub f_lower: Vec<f64>,
    pub escalated: bool,
}

impl CriticalOrbitReport {
    pub fn return_residual(&self) -> f64 {
        self.orbit[self.m as usize].abs()
    }

    pub fn min_early_distance(&self) -> f64 {
        self.orbit[1..self.m as usize].iter().fold(f64::INFINITY, |a, x| a.min(x.abs()))
    }

    fn failure(&self) -> Option<String> {
        if self.return_residual() > 1e-8 {
            return Some(format!("|R^m(0)| = {:e}", self.return_residual()));
        }
        if self.min_early_distance() < 1e-4 {
            return Some(format!("early return, min |R^k(0)| = {:e}", self.min_early_distance()));
        }
        if let Some(r) = self.g_residuals.iter().find(|r| !(**r <= 1e-10)) {
            return Some(format!("g_n residual {r:e}"));
        }
        if let Some(v) = self.f_lower.iter().find(|v| !(**v > 1e-6)) {
            return Some(format!("f_k(c_m) = {v:e} vanishes for k < m"));
        }
        None
    }

    pub fn passed(&self) -> bool {
        self.failure().is_none()
    }
}

fn orbit_plain(c: f64, m: u32) -> Vec<f64> {
    let mut out = vec![0.0];
    for _ in 0..m {
        let x = *out.last().unwrap();
        out.push(x * x + c);
    }
    out
}

fn orbit_double_word(c: f64, m: u32) -> Vec<f64> {
    let cc = Dw::new(c);
    let mut x = Dw::new(0.0);
    let mut out = vec![0.0];
    for _ in 0..m {
        x = x.mul(x).add(cc);
        out.push(x.value());
    }
    out
}

/// Checks that `0` has exact period `m` under `z^2 + c_m`.
pub fn verify_critical_orbit(m: u32) -> Result<CriticalOrbitReport> {
    let param = solve_cm(m)?;
    verify_critical_orbit_at(&param)
}

pub fn verify_critical_orbit_at(param: &FamilyParameter) -> Result<CriticalOrbitReport> {
    let (m, c) = (param.m, param.c);
    let fs: Vec<IntPolynomial> = (1..=m).map(f_polynomial).collect::<Result<_>>()?;
    let build = |orbit: Vec<f64>, escalated: bool| {
        let g_residuals = (1..=m as usize).map(|n| (orbit[n] - c * exact_value(&fs[n - 1], c)).abs()).collect();
        let f_lower = fs[..m as usize - 1].iter().map(|f| exact_value(f, c).abs()).collect();
        CriticalOrbitReport { m, c, orbit, g_residuals, f_lower, escalated }
    };
    let report = build(orbit_plain(c, m), false);
    if report.passed() {
        return Ok(report);
    }
    let report = build(orbit_double_word(c, m), true);
    match report.failure() {
        None => Ok(report),
        Some(detail) => Err(Error::FamilyCheck { m, detail }),
    }
}

/// `z^2 + c` as a map.
pub fn family_map(c: f64, config: NumericConfig<f64>) -> Result<RationalMap<f64>> {
    RationalMap::polynomial(&[Complex::new(c, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], config)
}

/// `b(0)` for `z^2 + c_m`, checked against `b_k = 2^k` (`k < m`) and `b_m = 2^m - 1`.
pub fn family_bseq(m: u32, depth: usize) -> Result<BSequence> {
    if depth < m as usize + 1 {
        return Err(Error::InvalidArgument(format!("depth must be at least m + 1 = {}", m + 1)));
    }
    let param = solve_cm(m)?;
    family_bseq_at(&param, depth, NumericConfig::default())
}

pub fn family_bseq_at(param: &FamilyParameter, depth: usize, config: NumericConfig<f64>) -> Result<BSequence> {
    let m = param.m;
    // 0 is periodic only up to the rounding of c_m
    let map = family_map(param.c, config.clone())?;
    let back = (0..m).fold(SpherePoint::zero(), |x, _| map.apply(&x));
    let slack = 8.0 * back.chordal_distance(&SpherePoint::zero());
    let map = if slack > config.point_tol {
        let mut config = config;
        config.point_tol = slack;
        config.roots.cluster_tol = config.roots.cluster_tol.max(slack);
        family_map(param.c, config)?
    } else {
        map
    };
    let b = b_sequence(&map, &SpherePoint::zero(), depth, 1 << 12)?;
    for k in 0..m as usize {
        if b[k] != 1 << k {
            return Err(Error::FamilyCheck { m, detail: format!("b_{k} = {} instead of {}", b[k], 1u64 << k) });
        }
    }
    if b[m as usize] != (1 << m) - 1 {
        return Err(Error::FamilyCheck { m, detail: format!("b_m = {} instead of 2^m - 1", b[m as usize]) });
    }
    Ok(b)
}
