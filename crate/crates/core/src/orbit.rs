//! Backward orbits counted without multiplicity.
//!
//! `b_n(z)` is the number of distinct points in `R^{-n}(z)`. Two routes
//! compute it: [`backward_levels`] enumerates every level, and
//! [`counts_from_critical_orbits`] uses the recursion
//! `b_{n+1} = N b_n - sum (e(c) - 1)` over critical points `c` with
//! `R^{n+1}(c) = z`, which only needs forward critical orbits and therefore
//! reaches depths where enumeration is out of the question.

use std::fmt;
use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::{all_roots, Polynomial};
use crate::ratmap::RationalMap;
use crate::scalar::Scalar;
use crate::sphere::{dedup_points, SpherePoint};

use num_complex::Complex;

/// Largest level [`backward_levels`] will materialize.
pub const LEVEL_POINT_GUARD: usize = 1 << 21;

/// Largest composed degree `N^n` the brute-force oracle accepts.
pub const ORACLE_DEGREE_GUARD: u64 = 10_000;

/// Per-level counts `b_0(z), b_1(z), ...`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BSequence(pub Vec<u64>);

impl Deref for BSequence {
    type Target = [u64];
    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for BSequence {
    fn from(v: Vec<u64>) -> Self {
        BSequence(v)
    }
}

impl fmt::Display for BSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(")")
    }
}

impl BSequence {
    pub fn truncated(&self, depth: usize) -> BSequence {
        BSequence(self.0.iter().take(depth + 1).copied().collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitLevels<F> {
    pub start: SpherePoint<F>,
    /// `levels[n]` is `R^{-n}(start)`, canonically sorted.
    pub levels: Vec<Vec<SpherePoint<F>>>,
    pub counts: BSequence,
}

impl<F> OrbitLevels<F> {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
}

/// The distinct preimages of every point in `level`, deduplicated.
pub fn preimage_level<F: Scalar>(map: &RationalMap<F>, level: &[SpherePoint<F>]) -> Result<Vec<SpherePoint<F>>> {
    let fibers: Vec<_> = level.par_iter().map(|p| map.fiber(p)).collect::<Result<_>>()?;
    let pts: Vec<SpherePoint<F>> = fibers.iter().flat_map(|f| f.points()).collect();
    Ok(dedup_points(&pts, map.config().point_tol))
}

/// Levels `0..=depth` of the backward orbit of `z`.
pub fn backward_levels<F: Scalar>(map: &RationalMap<F>, z: &SpherePoint<F>, depth: usize) -> Result<OrbitLevels<F>> {
    let mut levels = vec![vec![*z]];
    for n in 1..=depth {
        let prev = &levels[n - 1];
        if prev.len().saturating_mul(map.degree()) > LEVEL_POINT_GUARD {
            return Err(Error::Guard { what: format!("level {n} size"), limit: LEVEL_POINT_GUARD as u64 });
        }
        let next = preimage_level(map, prev).map_err(|e| e.at_level(n))?;
        levels.push(next);
    }
    let counts = BSequence(levels.iter().map(|l| l.len() as u64).collect());
    Ok(OrbitLevels { start: *z, levels, counts })
}

/// Forward orbit `x_0 = x, x_1 = R(x), ...` of length `len + 1`. Once a
/// point repeats within tolerance the rest is filled in periodically, so
/// rounding does not accumulate along cycles.
pub fn forward_orbit<F: Scalar>(map: &RationalMap<F>, x: &SpherePoint<F>, len: usize) -> Vec<SpherePoint<F>> {
    let tol = map.config().point_tol;
    let mut orbit = vec![*x];
    let mut cycle: Option<(usize, usize)> = None;
    while orbit.len() <= len {
        let k = orbit.len();
        if let Some((start, period)) = cycle {
            orbit.push(orbit[start + (k - start) % period]);
            continue;
        }
        let next = map.apply(&orbit[k - 1]);
        if let Some(i) = orbit.iter().position(|p| p.chordal_distance(&next) <= tol) {
            cycle = Some((i, k - i));
            orbit.push(orbit[i]);
        } else {
            orbit.push(next);
        }
    }
    orbit
}

/// Whether `z` pulls back along `orbit` (reversed), staying within tolerance
/// of each orbit point. Rejects orbits that only drift close to `z`, such as
/// escaping orbits approaching infinity.
fn pulls_back<F: Scalar>(map: &RationalMap<F>, orbit: &[SpherePoint<F>], z: &SpherePoint<F>) -> Result<bool> {
    let tol = map.config().point_tol;
    let mut y = *z;
    for x in orbit.iter().rev() {
        let fiber = map.fiber(&y)?;
        let nearest = fiber.points().min_by(|a, b| a.chordal_distance(x).partial_cmp(&b.chordal_distance(x)).unwrap());
        match nearest {
            Some(p) if p.chordal_distance(x) <= tol => y = p,
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// `b_0..=b_depth` from the forward orbits of the critical points.
pub fn counts_from_critical_orbits<F: Scalar>(
    map: &RationalMap<F>,
    z: &SpherePoint<F>,
    depth: usize,
) -> Result<BSequence> {
    let tol = map.config().point_tol;
    let n = map.degree() as u64;
    // excess[k] = sum of (e(c) - 1) over critical c with R^k(c) = z
    let mut excess = vec![0u64; depth + 1];
    for cp in map.critical_points() {
        let orbit = forward_orbit(map, &cp.location, depth);
        for (k, x) in orbit.iter().enumerate().skip(1) {
            if x.chordal_distance(z) <= tol && pulls_back(map, &orbit[..k], z)? {
                excess[k] += (cp.branch_index - 1) as u64;
            }
        }
    }
    let overflow = || Error::Guard { what: "backward orbit count".into(), limit: u64::MAX };
    let mut b = vec![1u64];
    for k in 1..=depth {
        let next = b[k - 1].checked_mul(n).ok_or_else(overflow)?;
        let next = next
            .checked_sub(excess[k])
            .ok_or_else(|| Error::RouteMismatch(format!("negative count at level {k}")))?;
        b.push(next);
    }
    Ok(BSequence(b))
}

/// `b_0..=b_depth`, cross-checking the critical-orbit recursion against
/// explicit enumeration on every level with at most `enumerate_cap` points.
pub fn b_sequence<F: Scalar>(
    map: &RationalMap<F>,
    z: &SpherePoint<F>,
    depth: usize,
    enumerate_cap: usize,
) -> Result<BSequence> {
    let counted = counts_from_critical_orbits(map, z, depth)?;
    let prefix = counted.iter().take_while(|&&b| b as usize <= enumerate_cap).count().max(1) - 1;
    let enumerated = backward_levels(map, z, prefix.min(depth))?;
    if enumerated.counts.0[..] != counted.0[..=prefix.min(depth)] {
        return Err(Error::RouteMismatch(format!(
            "enumeration gives {} but critical orbits give {}",
            enumerated.counts,
            counted.truncated(prefix)
        )));
    }
    Ok(counted)
}

/// `b_k(0)` for `z^2 - 1`: `(1 + 2^{k+1})/3` for even `k`, `(2 + 2^{k+1})/3` for odd `k`.
pub fn z2_minus_1_closed_form(k: u32) -> u64 {
    let p = 1u64 << (k + 1);
    if k % 2 == 0 {
        (1 + p) / 3
    } else {
        (2 + p) / 3
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedFormReport {
    pub computed: BSequence,
    pub expected: Vec<u64>,
    pub first_mismatch: Option<usize>,
}

impl ClosedFormReport {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Compares `b_k(0)` of `z^2 - 1` against the closed forms for `k <= n_max`.
pub fn bseq_closed_form_check<F: Scalar>(n_max: usize, config: crate::NumericConfig<F>) -> Result<ClosedFormReport> {
    let one = Complex::new(F::one(), F::zero());
    let map = RationalMap::polynomial(&[-one, Complex::new(F::zero(), F::zero()), one], config)?;
    let computed = backward_levels(&map, &SpherePoint::zero(), n_max)?.counts;
    let expected: Vec<u64> = (0..=n_max as u32).map(z2_minus_1_closed_form).collect();
    let first_mismatch = computed.iter().zip(&expected).position(|(a, b)| a != b);
    Ok(ClosedFormReport { computed, expected, first_mismatch })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExceptionalCertificate<F> {
    /// The whole grand backward orbit, closed under taking fibers.
    FiniteOrbit(Vec<SpherePoint<F>>),
    /// The accumulated orbit outgrew two points at `level`, where `b_level = count`.
    Growth { level: usize, count: u64, accumulated: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalCheck<F> {
    pub exceptional: bool,
    pub certificate: ExceptionalCertificate<F>,
}

/// Whether `z` has a finite grand backward orbit (at most two points for
/// degree at least two).
pub fn is_exceptional<F: Scalar>(map: &RationalMap<F>, z: &SpherePoint<F>, probe_depth: usize) -> Result<ExceptionalCheck<F>> {
    if probe_depth < 2 {
        return Err(Error::InvalidArgument("probe depth must be at least 2".into()));
    }
    let tol = map.config().point_tol;
    let mut union = vec![*z];
    let mut current = vec![*z];
    for level in 1..=probe_depth {
        current = preimage_level(map, &current).map_err(|e| e.at_level(level))?;
        let mut all = union.clone();
        all.extend_from_slice(&current);
        union = dedup_points(&all, tol);
        if union.len() > 2 {
            return Ok(ExceptionalCheck {
                exceptional: false,
                certificate: ExceptionalCertificate::Growth { level, count: current.len() as u64, accumulated: union.len() },
            });
        }
    }
    let closure = preimage_level(map, &union)?;
    let closed = closure.iter().all(|p| union.iter().any(|u| u.chordal_distance(p) <= tol));
    if closed {
        Ok(ExceptionalCheck { exceptional: true, certificate: ExceptionalCertificate::FiniteOrbit(union) })
    } else {
        let mut all = union.clone();
        all.extend_from_slice(&closure);
        let accumulated = dedup_points(&all, tol).len();
        Ok(ExceptionalCheck {
            exceptional: false,
            certificate: ExceptionalCertificate::Growth { level: probe_depth + 1, count: closure.len() as u64, accumulated },
        })
    }
}

/// Brute-force `b_n(z)`: forms the homogenized `R^n`, solves the single
/// fiber polynomial of degree `N^n`, and counts distinct solutions.
pub fn oracle_bn<F: Scalar>(map: &RationalMap<F>, z: &SpherePoint<F>, n: u32) -> Result<u64> {
    let big_n = map.degree();
    let total = (big_n as u64).checked_pow(n).filter(|&d| d <= ORACLE_DEGREE_GUARD);
    let Some(total) = total else {
        return Err(Error::Guard { what: format!("composed degree {big_n}^{n}"), limit: ORACLE_DEGREE_GUARD });
    };
    if n == 0 {
        return Ok(1);
    }
    type CP<F> = Polynomial<Complex<F>>;
    let pc: Vec<Complex<F>> = (0..=big_n).map(|k| map.numerator().coeff(k)).collect();
    let qc: Vec<Complex<F>> = (0..=big_n).map(|k| map.denominator().coeff(k)).collect();
    // (P_k, Q_k) homogeneous of degree N^k, stored as dehomogenized polynomials
    let mut pk: CP<F> = Polynomial::new(pc.clone());
    let mut qk: CP<F> = Polynomial::new(qc.clone());
    for _ in 1..n {
        let p_pows: Vec<CP<F>> = (0..=big_n as u32).map(|i| pk.pow(i)).collect();
        let q_pows: Vec<CP<F>> = (0..=big_n as u32).map(|i| qk.pow(i)).collect();
        let mut np = CP::<F>::zero();
        let mut nq = CP::<F>::zero();
        for i in 0..=big_n {
            let term = &p_pows[i] * &q_pows[big_n - i];
            np = &np + &term.scale(&pc[i]);
            nq = &nq + &term.scale(&qc[i]);
        }
        pk = np;
        qk = nq;
    }
    let (yz, yw) = (z.numerator(), z.denominator());
    let f = &pk.scale(&yw) - &qk.scale(&yz);
    let rel = F::lit(1e3) * F::from_count(total as usize) * F::epsilon();
    let f = f.trim_relative(rel);
    let finite_degree = f.degree().ok_or_else(|| Error::FiberInconsistent("composed fiber polynomial vanished".into()))?;
    let at_infinity = u64::from((finite_degree as u64) < total);
    if finite_degree == 0 {
        return Ok(at_infinity);
    }
    // a perturbed multiple root of the composed polynomial splits by about
    // the square root of the perturbation, so merge at that scale
    let mut cfg = map.config().roots.clone();
    cfg.cluster_tol = cfg.cluster_tol.max(F::lit(1e3) * F::epsilon().sqrt());
    let roots = all_roots(&f, &cfg)?;
    Ok(roots.roots.len() as u64 + at_infinity)
}
