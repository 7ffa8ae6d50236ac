//! Measures, the Perron-Frobenius operator, and the KMS-trace sequence.
//!
//! `F_X(delta_y)` is the sum of point masses on the distinct preimages of
//! `y`; branch indices do not enter. The damped operator is
//! `F_{X,beta} = e^{-beta} F_X`, and the truncated trace is
//! `tau_K = m * sum_{k<=K} e^{-k beta} sum_{x in R^{-k}(z)} delta_x`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orbit::{b_sequence, forward_orbit, BSequence};
use crate::ratmap::RationalMap;
use crate::scalar::Scalar;
use crate::sphere::{cluster_points, SpherePoint};

/// Largest number of atoms a measure may carry before it is materialized.
pub const MEASURE_ATOM_GUARD: u64 = 1 << 20;

/// Enumeration cap used when cross-checking counts for series computations.
pub const COUNT_CROSSCHECK_CAP: usize = 1 << 12;

/// A positive measure with finitely many atoms, distinct up to tolerance and
/// kept in canonical point order.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure<F> {
    atoms: Vec<(SpherePoint<F>, F)>,
    total_mass: F,
}

impl<F: Scalar> FiniteMeasure<F> {
    pub fn zero() -> Self {
        FiniteMeasure { atoms: Vec::new(), total_mass: F::zero() }
    }

    pub fn dirac(p: SpherePoint<F>) -> Self {
        FiniteMeasure { atoms: vec![(p, F::one())], total_mass: F::one() }
    }

    /// Merges atoms closer than `tol`; zero weights are dropped.
    pub fn new(atoms: Vec<(SpherePoint<F>, F)>, tol: F) -> Result<Self> {
        if atoms.iter().any(|(_, w)| !(*w >= F::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument("measure weights must be finite and nonnegative".into()));
        }
        let merged: Vec<_> = merge_atoms(&atoms, tol).into_iter().filter(|(_, w)| *w > F::zero()).collect();
        let total_mass = merged.iter().fold(F::zero(), |s, (_, w)| s + *w);
        Ok(FiniteMeasure { atoms: merged, total_mass })
    }

    pub fn atoms(&self) -> &[(SpherePoint<F>, F)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> F {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Weight of the atom within `tol` of `p`, or zero.
    pub fn weight_at(&self, p: &SpherePoint<F>, tol: F) -> F {
        self.atoms.iter().filter(|(q, _)| q.chordal_distance(p) <= tol).fold(F::zero(), |s, (_, w)| s + *w)
    }

    pub fn scaled(&self, alpha: F) -> Self {
        let atoms: Vec<_> = self.atoms.iter().map(|&(p, w)| (p, w * alpha)).filter(|(_, w)| *w > F::zero()).collect();
        let total_mass = atoms.iter().fold(F::zero(), |s, (_, w)| s + *w);
        FiniteMeasure { atoms, total_mass }
    }

    pub fn sum(&self, other: &Self, tol: F) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let atoms = merge_atoms(&atoms, tol);
        let total_mass = atoms.iter().fold(F::zero(), |s, (_, w)| s + *w);
        FiniteMeasure { atoms, total_mass }
    }
}

/// `a - b` as a signed list of atoms, merged under `tol`.
pub fn signed_difference<F: Scalar>(a: &FiniteMeasure<F>, b: &FiniteMeasure<F>, tol: F) -> Vec<(SpherePoint<F>, F)> {
    let mut atoms = a.atoms.clone();
    atoms.extend(b.atoms.iter().map(|&(p, w)| (p, -w)));
    merge_atoms(&atoms, tol)
}

fn merge_atoms<F: Scalar>(atoms: &[(SpherePoint<F>, F)], tol: F) -> Vec<(SpherePoint<F>, F)> {
    let points: Vec<_> = atoms.iter().map(|a| a.0).collect();
    cluster_points(&points, tol)
        .into_iter()
        .map(|g| {
            // summing in canonical order keeps the result independent of input order
            let w = g.iter().fold(F::zero(), |s, &i| s + atoms[i].1);
            (points[g[0]], w)
        })
        .collect()
}

/// Convergence parameters for the KMS series.
#[derive(Clone, Debug, PartialEq)]
pub struct KmsParams<F> {
    pub beta: F,
    pub z: SpherePoint<F>,
    /// Truncation depth `K`.
    pub depth: usize,
    pub degree: usize,
    /// `(N e^{-beta})^{K+1} / (1 - N e^{-beta})`.
    pub tail_bound: F,
}

impl<F: Scalar> KmsParams<F> {
    pub fn new(beta: F, z: SpherePoint<F>, depth: usize, degree: usize) -> Result<Self> {
        let bad = || Error::InvalidBeta { beta: beta.as_f64(), degree };
        if !beta.is_finite() || beta <= F::zero() || degree == 0 {
            return Err(bad());
        }
        let ratio = F::from_count(degree) * (-beta).exp();
        if ratio >= F::one() {
            return Err(bad());
        }
        let tail_bound = ratio.powi(depth as i32 + 1) / (F::one() - ratio);
        Ok(KmsParams { beta, z, depth, degree, tail_bound })
    }

    pub fn for_map(map: &RationalMap<F>, beta: F, z: SpherePoint<F>, depth: usize) -> Result<Self> {
        Self::new(beta, z, depth, map.degree())
    }

    /// Whether `beta <= N`; validation already ensures `beta > ln N`.
    pub fn beta_at_most_degree(&self) -> bool {
        self.beta <= F::from_count(self.degree)
    }
}

/// `F_X(mu)`: every atom spreads its full weight to each distinct preimage.
pub fn pf_apply<F: Scalar>(map: &RationalMap<F>, mu: &FiniteMeasure<F>) -> Result<FiniteMeasure<F>> {
    let pushed: Vec<Vec<(SpherePoint<F>, F)>> = mu
        .atoms
        .par_iter()
        .map(|&(y, w)| Ok(map.fiber(&y)?.points().map(|x| (x, w)).collect()))
        .collect::<Result<_>>()?;
    let atoms: Vec<_> = pushed.into_iter().flatten().collect();
    let atoms = merge_atoms(&atoms, map.config().point_tol);
    let total_mass = atoms.iter().fold(F::zero(), |s, (_, w)| s + *w);
    Ok(FiniteMeasure { atoms, total_mass })
}

/// `F_{X,beta}(mu) = e^{-beta} F_X(mu)`.
pub fn pf_apply_damped<F: Scalar>(map: &RationalMap<F>, mu: &FiniteMeasure<F>, beta: F) -> Result<FiniteMeasure<F>> {
    Ok(pf_apply(map, mu)?.scaled((-beta).exp()))
}

/// Total masses of `F_X^n(delta_z)` for `n = 0..=n_max`.
pub fn pf_mass_sequence<F: Scalar>(map: &RationalMap<F>, z: &SpherePoint<F>, n_max: usize) -> Result<Vec<F>> {
    let mut mu = FiniteMeasure::dirac(*z);
    let mut out = vec![mu.total_mass()];
    for n in 1..=n_max {
        if mu.len() as u64 * map.degree() as u64 > MEASURE_ATOM_GUARD {
            return Err(Error::Guard { what: format!("measure atoms at step {n}"), limit: MEASURE_ATOM_GUARD });
        }
        mu = pf_apply(map, &mu).map_err(|e| e.at_level(n))?;
        out.push(mu.total_mass());
    }
    Ok(out)
}

/// `m_{beta,z}` with its enclosure `[1/(S_K + tail), 1/S_K]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer<F> {
    pub m: F,
    pub lower: F,
    pub upper: F,
    /// `S_K = sum_{k<=K} e^{-k beta} b_k`.
    pub partial_sum: F,
}

/// `S = sum_k e^{-k beta} b_k` over the given counts.
fn weighted_sum<F: Scalar>(b: &[u64], beta: F, offset: usize) -> F {
    // smallest terms first
    b.iter()
        .enumerate()
        .rev()
        .fold(F::zero(), |s, (k, &bk)| s + F::lit(bk as f64) * (-(beta * F::from_count(k + offset))).exp())
}

pub fn normalizer_from_counts<F: Scalar>(b: &[u64], params: &KmsParams<F>) -> Normalizer<F> {
    let s = weighted_sum(&b[..=params.depth], params.beta, 0);
    Normalizer { m: s.recip(), lower: (s + params.tail_bound).recip(), upper: s.recip(), partial_sum: s }
}

pub fn normalizer<F: Scalar>(map: &RationalMap<F>, params: &KmsParams<F>) -> Result<Normalizer<F>> {
    let b = b_sequence(map, &params.z, params.depth, COUNT_CROSSCHECK_CAP)?;
    Ok(normalizer_from_counts(&b, params))
}

/// Whether `tau_K` followed by `extra` applications of `F_X` stays under
/// the atom guard, judging by the counts.
pub fn measure_feasible(b: &[u64], depth: usize, extra: usize) -> bool {
    let top = (depth + extra).min(b.len().saturating_sub(1));
    b[..=top].iter().try_fold(0u64, |s, &x| s.checked_add(x)).is_some_and(|s| s <= MEASURE_ATOM_GUARD) && top == depth + extra
}

/// The truncated trace `tau_K` as a measure.
pub fn kms_trace<F: Scalar>(map: &RationalMap<F>, params: &KmsParams<F>) -> Result<FiniteMeasure<F>> {
    let b = b_sequence(map, &params.z, params.depth, COUNT_CROSSCHECK_CAP)?;
    if !measure_feasible(&b, params.depth, 0) {
        return Err(Error::Guard { what: format!("trace atoms at depth {}", params.depth), limit: MEASURE_ATOM_GUARD });
    }
    let norm = normalizer_from_counts(&b, params);
    let tol = map.config().point_tol;
    let q = (-params.beta).exp();
    let mut level = FiniteMeasure::dirac(params.z);
    let mut weighted: Vec<(SpherePoint<F>, F)> = vec![(params.z, norm.m)];
    let mut scale = norm.m;
    for k in 1..=params.depth {
        level = pf_apply(map, &level).map_err(|e| e.at_level(k))?;
        scale = scale * q;
        weighted.extend(level.atoms.iter().map(|&(p, w)| (p, w * scale)));
    }
    FiniteMeasure::new(weighted, tol)
}

/// `c_n = m sum_{j=n}^{n+K} e^{-j beta} b_j`, the total mass of
/// `F_{X,beta}^n(tau_K)`, for `n = 0..=n_max`. Needs `b` through `n_max + K`.
pub fn c_from_counts<F: Scalar>(b: &[u64], params: &KmsParams<F>, n_max: usize) -> Vec<F> {
    let m = normalizer_from_counts(b, params).m;
    (0..=n_max).map(|n| m * weighted_sum(&b[n..=n + params.depth], params.beta, n)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CSequence<F> {
    pub values: Vec<F>,
    /// Masses of `F_{X,beta}^n(tau_K)` computed on actual measures, when the
    /// atom count allows it.
    pub measure_route: Option<Vec<F>>,
    pub counts: BSequence,
    pub normalizer: Normalizer<F>,
    pub tail_bound: F,
}

/// Relative agreement demanded between the series and measure routes.
pub fn route_tolerance<F: Scalar>() -> F {
    F::lit(1e3) * F::epsilon()
}

pub fn c_sequence<F: Scalar>(map: &RationalMap<F>, params: &KmsParams<F>, n_max: usize) -> Result<CSequence<F>> {
    let counts = b_sequence(map, &params.z, n_max + params.depth, COUNT_CROSSCHECK_CAP)?;
    let values = c_from_counts(&counts, params, n_max);
    let normalizer = normalizer_from_counts(&counts, params);
    let measure_route = if measure_feasible(&counts, params.depth, n_max) {
        let mut mu = kms_trace(map, params)?;
        let mut masses = vec![mu.total_mass()];
        for _ in 1..=n_max {
            mu = pf_apply_damped(map, &mu, params.beta)?;
            masses.push(mu.total_mass());
        }
        for (n, (a, b)) in values.iter().zip(&masses).enumerate() {
            if (*a - *b).abs() > route_tolerance::<F>() * a.abs().max(F::min_positive_value()) {
                return Err(Error::RouteMismatch(format!("c_{n}: series {a:e} vs measure {b:e}")));
            }
        }
        Some(masses)
    } else {
        None
    };
    Ok(CSequence { values, measure_route, counts, normalizer, tail_bound: params.tail_bound })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery<F> {
    /// Rounded `e^{n beta} (c_n - c_{n+1}) / (1 - c_1)`.
    pub b: Vec<u64>,
    /// The same quantity before rounding.
    pub raw: Vec<F>,
    /// `|raw - b|` per index.
    pub residuals: Vec<F>,
    pub max_residual: F,
    /// `(c_n - c_{n+1}) / (1 - c_1)` without the `e^{n beta}` factor.
    pub uncorrected: Vec<F>,
    pub denominator: F,
}

/// Recovers `b_0..b_{len-2}` from `c_0..c_{len-1}`.
pub fn recover_bseq<F: Scalar>(c: &[F], beta: F) -> Result<Recovery<F>> {
    if c.len() < 2 {
        return Err(Error::InvalidArgument("recovery needs c_0 and c_1".into()));
    }
    let denominator = F::one() - c[1];
    if !(denominator > F::zero()) {
        return Err(Error::DegenerateRecovery { denominator: denominator.as_f64() });
    }
    let uncorrected: Vec<F> = c.windows(2).map(|w| (w[0] - w[1]) / denominator).collect();
    let raw: Vec<F> = uncorrected.iter().enumerate().map(|(n, u)| *u * (beta * F::from_count(n)).exp()).collect();
    let b: Vec<u64> = raw
        .iter()
        .map(|r| r.round().to_u64().ok_or_else(|| Error::RouteMismatch(format!("recovered value {r} is not a count"))))
        .collect::<Result<_>>()?;
    let residuals: Vec<F> = raw.iter().zip(&b).map(|(r, &k)| (*r - F::lit(k as f64)).abs()).collect();
    let max_residual = residuals.iter().fold(F::zero(), |m, r| m.max(*r));
    Ok(Recovery { b, raw, residuals, max_residual, uncorrected, denominator })
}

/// Bound on recovery residuals, `10 m tail / (1 - c_1)`.
pub fn recovery_residual_bound<F: Scalar>(m: F, tail_bound: F, denominator: F) -> F {
    F::lit(10.0) * m * tail_bound / denominator
}

/// Outcome of checking `tau - F_{X,beta}(tau) = m delta_z - (level K+1 term)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TelescopeReport<F> {
    pub depth: usize,
    pub m: F,
    pub tail_bound: F,
    /// Residual weight at `z`.
    pub atom_at_z: F,
    /// Total absolute residual weight away from `z`.
    pub off_z_mass: F,
    /// Whether the residual was formed from full measures (as opposed to
    /// pointwise evaluation at `z` plus the total mass).
    pub measure_level: bool,
}

impl<F: Scalar> TelescopeReport<F> {
    pub fn bound(&self) -> F {
        self.m * self.tail_bound
    }

    pub fn passed(&self) -> bool {
        let slack = F::lit(16.0) * F::epsilon();
        (self.atom_at_z - self.m).abs() <= self.bound() + slack && self.off_z_mass <= self.bound() + slack
    }
}

/// Telescoping on materialized measures; needs `tau_K` under the atom guard.
pub fn telescoping_check<F: Scalar>(map: &RationalMap<F>, params: &KmsParams<F>) -> Result<TelescopeReport<F>> {
    let tau = kms_trace(map, params)?;
    let image = pf_apply_damped(map, &tau, params.beta)?;
    let tol = map.config().point_tol;
    let residual = signed_difference(&tau, &image, tol);
    let b = b_sequence(map, &params.z, params.depth, COUNT_CROSSCHECK_CAP)?;
    let m = normalizer_from_counts(&b, params).m;
    let mut atom_at_z = F::zero();
    let mut off_z_mass = F::zero();
    for (p, w) in residual {
        if p.chordal_distance(&params.z) <= tol {
            atom_at_z += w;
        } else {
            off_z_mass += w.abs();
        }
    }
    Ok(TelescopeReport { depth: params.depth, m, tail_bound: params.tail_bound, atom_at_z, off_z_mass, measure_level: true })
}

/// Telescoping without materializing `tau_K`: the residual at `z` is
/// `tau(z) - e^{-beta} tau(R(z))`, with `tau(x) = m sum e^{-k beta}` over
/// `k <= K` such that `R^k(x) = z`, read off forward orbits. The mass away
/// from `z` is the total residual mass `c_0 - c_1` minus that atom.
pub fn telescoping_pointwise<F: Scalar>(map: &RationalMap<F>, params: &KmsParams<F>) -> Result<TelescopeReport<F>> {
    let counts = b_sequence(map, &params.z, params.depth + 1, COUNT_CROSSCHECK_CAP)?;
    let m = normalizer_from_counts(&counts, params).m;
    let c = c_from_counts(&counts, params, 1);
    let tau_at = |x: &SpherePoint<F>| -> F {
        let tol = map.config().point_tol;
        forward_orbit(map, x, params.depth)
            .iter()
            .enumerate()
            .filter(|(_, y)| y.chordal_distance(&params.z) <= tol)
            .fold(F::zero(), |s, (k, _)| s + m * (-(params.beta * F::from_count(k))).exp())
    };
    let rz = map.apply(&params.z);
    let atom_at_z = tau_at(&params.z) - (-params.beta).exp() * tau_at(&rz);
    let off_z_mass = (c[0] - c[1] - atom_at_z).abs();
    Ok(TelescopeReport { depth: params.depth, m, tail_bound: params.tail_bound, atom_at_z, off_z_mass, measure_level: false })
}
