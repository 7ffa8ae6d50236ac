//! Simultaneous (Ehrlich-Aberth) root finding with multiplicity clustering.
//!
//! Pipeline: strip exact zero roots, run Aberth iterations from a circle of
//! radius given by the Cauchy bound, group approximations whose inclusion
//! disks overlap, decide multiplicity of each group with a Taylor-coefficient
//! test at its (polished) centroid, polish simple roots with Newton, then merge
//! anything closer than `cluster_tol` in the chordal metric.

use num_complex::Complex;
use num_traits::Zero;

use super::Polynomial;
use crate::error::{Error, Result};
use crate::scalar::{horner_dw, Precision, Scalar};
use crate::sphere::SpherePoint;

#[derive(Clone, Debug, PartialEq)]
pub struct RootConfig<F> {
    /// Working precision request; see [`Precision::from_bits`].
    pub precision_bits: u32,
    /// Chordal radius under which roots are merged.
    pub cluster_tol: F,
    pub max_iterations: usize,
}

impl<F: Scalar> Default for RootConfig<F> {
    fn default() -> Self {
        RootConfig {
            precision_bits: F::MANTISSA_BITS,
            cluster_tol: F::lit(F::DEFAULT_TOL),
            max_iterations: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root<F> {
    pub location: Complex<F>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<F> {
    /// Sorted by (Re, Im).
    pub roots: Vec<Root<F>>,
    /// Largest `|p(r)| / sum |a_i| |r|^i` over reported locations.
    pub residual_bound: F,
}

impl<F: Scalar> RootSet<F> {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn locations(&self) -> impl Iterator<Item = Complex<F>> + '_ {
        self.roots.iter().map(|r| r.location)
    }
}

/// All complex roots of `p` with multiplicities summing to `deg p`.
///
/// A numerical failure at working precision is retried once in compensated
/// arithmetic before being reported.
pub fn all_roots<F: Scalar>(p: &Polynomial<Complex<F>>, cfg: &RootConfig<F>) -> Result<RootSet<F>> {
    match p.degree() {
        None => return Err(Error::ZeroPolynomial),
        Some(0) => return Err(Error::ConstantPolynomial),
        Some(_) => {}
    }
    if p.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    let mode = Precision::from_bits::<F>(cfg.precision_bits).ok_or(Error::InvalidPrecision {
        bits: cfg.precision_bits,
        min: F::MANTISSA_BITS,
        max: 2 * F::MANTISSA_BITS,
    })?;
    match solve(p, mode, cfg) {
        Err(e) if mode == Precision::Working && e.is_numerical() => solve(p, Precision::Compensated, cfg),
        other => other,
    }
}

/// Degree of the approximate common factor of `p` and `q`, found by matching
/// roots within `cfg.cluster_tol`.
pub fn gcd_degree<F: Scalar>(
    p: &Polynomial<Complex<F>>,
    q: &Polynomial<Complex<F>>,
    cfg: &RootConfig<F>,
) -> Result<usize> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.degree() == Some(0) || q.degree() == Some(0) {
        return Ok(0);
    }
    let rp = all_roots(p, cfg)?;
    let rq = all_roots(q, cfg)?;
    let mut left: Vec<usize> = rq.roots.iter().map(|r| r.multiplicity).collect();
    let mut shared = 0;
    for a in &rp.roots {
        let pa = chordal_point(a.location);
        let mut need = a.multiplicity;
        for (j, b) in rq.roots.iter().enumerate() {
            if need == 0 {
                break;
            }
            if left[j] > 0 && pa.chordal_distance(&chordal_point(b.location)) <= cfg.cluster_tol {
                let take = need.min(left[j]);
                left[j] -= take;
                need -= take;
                shared += take;
            }
        }
    }
    Ok(shared)
}

fn chordal_point<F: Scalar>(c: Complex<F>) -> SpherePoint<F> {
    SpherePoint::finite(c).unwrap_or_else(|_| SpherePoint::infinity())
}

fn chordal<F: Scalar>(a: Complex<F>, b: Complex<F>) -> F {
    let num = F::lit(2.0) * (a - b).norm();
    let den = (F::one() + a.norm_sqr()).sqrt() * (F::one() + b.norm_sqr()).sqrt();
    num / den
}

/// Evaluation helper that switches to the reversed polynomial outside the
/// unit disk so that `|x|^n` never overflows.
struct Evaluator<'a, F> {
    coeffs: &'a [Complex<F>],
    rev: Vec<Complex<F>>,
    abs: Vec<F>,
    abs_rev: Vec<F>,
    n: usize,
}

struct Step<F> {
    /// `p(z) / p'(z)`.
    ratio: Complex<F>,
    /// `|p(z)| / sum |a_i||z|^i`.
    rel_residual: F,
}

impl<'a, F: Scalar> Evaluator<'a, F> {
    fn new(coeffs: &'a [Complex<F>]) -> Self {
        let rev: Vec<_> = coeffs.iter().rev().copied().collect();
        let abs: Vec<F> = coeffs.iter().map(|c| c.norm()).collect();
        let abs_rev: Vec<F> = abs.iter().rev().copied().collect();
        Evaluator { coeffs, rev, abs, abs_rev, n: coeffs.len() - 1 }
    }

    fn horner(c: &[Complex<F>], x: Complex<F>, mode: Precision) -> (Complex<F>, Complex<F>) {
        let mut p = Complex::zero();
        let mut dp = Complex::zero();
        for &a in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        if mode == Precision::Compensated {
            p = horner_dw(c, x);
        }
        (p, dp)
    }

    fn abs_horner(c: &[F], x: F) -> F {
        c.iter().rev().fold(F::zero(), |acc, &a| acc * x + a)
    }

    fn step(&self, z: Complex<F>, mode: Precision) -> Step<F> {
        let n = F::from_count(self.n);
        if z.norm() <= F::one() {
            let (p, dp) = Self::horner(self.coeffs, z, mode);
            let s = Self::abs_horner(&self.abs, z.norm());
            let ratio = if dp.is_zero() { p } else { p / dp };
            Step { ratio, rel_residual: p.norm() / s }
        } else {
            let w = z.inv();
            let (r, dr) = Self::horner(&self.rev, w, mode);
            let s = Self::abs_horner(&self.abs_rev, w.norm());
            let ratio = if r.is_zero() {
                Complex::zero()
            } else {
                let denom = Complex::new(n, F::zero()) - w * dr / r;
                if denom.is_zero() {
                    z
                } else {
                    z / denom
                }
            };
            Step { ratio, rel_residual: r.norm() / s }
        }
    }

    /// `ln |p(z)|` plus the rounding-error allowance, for inclusion radii.
    fn ln_abs_with_error(&self, z: Complex<F>, mode: Precision) -> F {
        let gamma = F::from_count(4 * (self.n + 1)) * mode.unit_roundoff::<F>();
        if z.norm() <= F::one() {
            let (p, _) = Self::horner(self.coeffs, z, mode);
            let s = Self::abs_horner(&self.abs, z.norm());
            (p.norm() + gamma * s).ln()
        } else {
            let w = z.inv();
            let (r, _) = Self::horner(&self.rev, w, mode);
            let s = Self::abs_horner(&self.abs_rev, w.norm());
            F::from_count(self.n) * z.norm().ln() + (r.norm() + gamma * s).ln()
        }
    }
}

/// Positive root of `|a_n| x^n = sum_{i<n} |a_i| x^i`, an upper bound on the
/// moduli of all roots.
fn cauchy_radius<F: Scalar>(coeffs: &[Complex<F>]) -> F {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].norm();
    // c_j multiplies t^j with t = 1/x
    let c: Vec<F> = (1..=n).map(|j| coeffs[n - j].norm() / lead).collect();
    let g = |x: F| -> F {
        let t = x.recip();
        c.iter().rev().fold(F::zero(), |acc, &cj| (acc + cj) * t) - F::one()
    };
    let mut hi = F::one() + c.iter().fold(F::zero(), |m, &v| m.max(v));
    let mut lo = hi;
    for _ in 0..2000 {
        lo = lo / F::lit(2.0);
        if g(lo) > F::zero() {
            break;
        }
    }
    if g(lo) <= F::zero() {
        return hi;
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if g(mid) > F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * F::epsilon() * F::lit(4.0) {
            break;
        }
    }
    hi
}

fn aberth<F: Scalar>(coeffs: &[Complex<F>], max_iterations: usize) -> Result<Vec<Complex<F>>> {
    let ev = Evaluator::new(coeffs);
    let n = ev.n;
    let u = Precision::Working.unit_roundoff::<F>();
    let threshold = F::from_count(4 * (n + 1)) * u;
    let radius = cauchy_radius(coeffs);
    let offset = F::lit(0.4);
    let tau = F::TAU();
    let mut z: Vec<Complex<F>> = (0..n)
        .map(|k| Complex::from_polar(radius, tau * F::from_count(k) / F::from_count(n) + offset))
        .collect();
    let mut done = vec![false; n];
    for _ in 0..max_iterations {
        let mut all = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let st = ev.step(z[k], Precision::Working);
            if st.rel_residual <= threshold {
                done[k] = true;
                continue;
            }
            all = false;
            let mut sum = Complex::zero();
            for j in 0..n {
                if j != k {
                    let d = z[k] - z[j];
                    if !d.is_zero() {
                        sum = sum + d.inv();
                    }
                }
            }
            let denom = Complex::new(F::one(), F::zero()) - st.ratio * sum;
            let corr = if denom.is_zero() || !denom.re.is_finite() || !denom.im.is_finite() {
                st.ratio
            } else {
                st.ratio / denom
            };
            if corr.re.is_finite() && corr.im.is_finite() {
                z[k] = z[k] - corr;
            }
            if corr.norm() <= u * z[k].norm() {
                done[k] = true;
            }
        }
        if all {
            break;
        }
    }
    let worst = z
        .iter()
        .map(|&zk| ev.step(zk, Precision::Working).rel_residual)
        .fold(F::zero(), |m, r| if r.is_nan() { F::infinity() } else { m.max(r) });
    // multiple roots stall with residuals a little above the rounding level
    if worst > threshold * F::lit(1e3) {
        return Err(Error::NonConvergence { worst_residual: worst.as_f64() });
    }
    Ok(z)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so grouping is order-independent
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }

    fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            out[r].push(i);
        }
        out.into_iter().filter(|g| !g.is_empty()).collect()
    }
}

/// Taylor coefficients `q^(j)(x)/j!` for `j < k`, by repeated synthetic division.
fn taylor<F: Scalar>(c: &[Complex<F>], x: Complex<F>, k: usize) -> Vec<Complex<F>> {
    let mut work = c.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        if work.is_empty() {
            out.push(Complex::zero());
            continue;
        }
        let mut acc = Complex::zero();
        let mut quotient = vec![Complex::zero(); work.len().saturating_sub(1)];
        for i in (0..work.len()).rev() {
            acc = acc * x + work[i];
            if i > 0 {
                quotient[i - 1] = acc;
            }
        }
        out.push(acc);
        work = quotient;
    }
    out
}

fn taylor_abs<F: Scalar>(c: &[F], x: F, k: usize) -> Vec<F> {
    let cc: Vec<Complex<F>> = c.iter().map(|&v| Complex::new(v, F::zero())).collect();
    taylor(&cc, Complex::new(x, F::zero()), k).into_iter().map(|v| v.re).collect()
}

fn derivative_coeffs<F: Scalar>(c: &[Complex<F>], order: usize) -> Vec<Complex<F>> {
    let mut v = c.to_vec();
    for _ in 0..order {
        v = v.iter().enumerate().skip(1).map(|(i, &a)| a * F::from_count(i)).collect();
    }
    v
}

/// Tests whether `centroid` is a root of multiplicity `k`; returns the
/// polished location when it is.
fn multiple_root<F: Scalar>(ev: &Evaluator<'_, F>, centroid: Complex<F>, k: usize) -> Option<Complex<F>> {
    let reversed = centroid.norm() > F::one();
    let (c, abs) = if reversed { (&ev.rev[..], &ev.abs_rev[..]) } else { (ev.coeffs, &ev.abs[..]) };
    let mut x = if reversed { centroid.inv() } else { centroid };
    // the k-fold root is a simple root of the (k-1)-th derivative
    let d = derivative_coeffs(c, k - 1);
    if d.len() >= 2 {
        let dd = derivative_coeffs(&d, 1);
        for _ in 0..8 {
            let (num, den) = (horner_plain(&d, x), horner_plain(&dd, x));
            if den.is_zero() {
                break;
            }
            let step = num / den;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            x = x - step;
            if step.norm() <= F::epsilon() * x.norm() {
                break;
            }
        }
    }
    let u = Precision::Working.unit_roundoff::<F>();
    let bound = F::from_count(64 * (ev.n + 1)) * u;
    let t = taylor(c, x, k);
    let s = taylor_abs(abs, x.norm(), k);
    let ok = t.iter().zip(&s).all(|(tj, sj)| tj.norm() <= bound * *sj);
    ok.then(|| if reversed { x.inv() } else { x })
}

fn horner_plain<F: Scalar>(c: &[Complex<F>], x: Complex<F>) -> Complex<F> {
    c.iter().rev().fold(Complex::zero(), |acc, &a| acc * x + a)
}

fn polish_simple<F: Scalar>(ev: &Evaluator<'_, F>, z0: Complex<F>, mode: Precision) -> Complex<F> {
    let mut best = z0;
    let mut best_res = ev.step(z0, mode).rel_residual;
    let mut z = z0;
    for _ in 0..10 {
        let st = ev.step(z, mode);
        if !(st.ratio.re.is_finite() && st.ratio.im.is_finite()) {
            break;
        }
        z = z - st.ratio;
        let res = ev.step(z, mode).rel_residual;
        if res < best_res {
            best = z;
            best_res = res;
        } else if res >= best_res && st.ratio.norm() <= F::epsilon() * z.norm() {
            break;
        }
        if best_res.is_zero() {
            break;
        }
    }
    best
}

fn merge_close<F: Scalar>(mut roots: Vec<Root<F>>, tol: F) -> Vec<Root<F>> {
    roots.sort_by(|a, b| cmp_complex(a.location, b.location));
    let mut uf = UnionFind::new(roots.len());
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if chordal(roots[i].location, roots[j].location) <= tol {
                uf.union(i, j);
            }
        }
    }
    uf.groups()
        .into_iter()
        .map(|g| {
            let m: usize = g.iter().map(|&i| roots[i].multiplicity).sum();
            let sum = g
                .iter()
                .fold(Complex::zero(), |acc, &i| acc + roots[i].location * F::from_count(roots[i].multiplicity));
            Root { location: sum / F::from_count(m), multiplicity: m }
        })
        .collect()
}

fn cmp_complex<F: Scalar>(a: Complex<F>, b: Complex<F>) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
}

fn solve<F: Scalar>(p: &Polynomial<Complex<F>>, mode: Precision, cfg: &RootConfig<F>) -> Result<RootSet<F>> {
    let all = p.coeffs();
    let zeros = all.iter().take_while(|c| c.is_zero()).count();
    let coeffs = &all[zeros..];
    let n = coeffs.len() - 1;

    let mut found: Vec<Root<F>> = Vec::new();
    if zeros > 0 {
        found.push(Root { location: Complex::zero(), multiplicity: zeros });
    }
    let ev = Evaluator::new(coeffs);
    if n == 1 {
        found.push(Root { location: -coeffs[0] / coeffs[1], multiplicity: 1 });
    } else if n >= 2 {
        let approx = aberth(coeffs, cfg.max_iterations)?;
        // inclusion radii n |p(z_k)| / |a_n prod (z_k - z_j)|, in log form
        let ln_lead = coeffs[n].norm().ln();
        let ln_n = F::from_count(n).ln();
        let floor = F::lit(4.0) * F::epsilon();
        let radii: Vec<F> = (0..n)
            .map(|k| {
                let mut ln_r = ln_n + ev.ln_abs_with_error(approx[k], mode) - ln_lead;
                for j in 0..n {
                    if j != k {
                        ln_r = ln_r - (approx[k] - approx[j]).norm().ln();
                    }
                }
                let r = ln_r.exp();
                let r = if r.is_nan() { F::infinity() } else { r };
                r.max(floor * approx[k].norm())
            })
            .collect();
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in i + 1..n {
                let d = (approx[i] - approx[j]).norm();
                if d <= radii[i] + radii[j] || chordal(approx[i], approx[j]) <= cfg.cluster_tol {
                    uf.union(i, j);
                }
            }
        }
        for group in uf.groups() {
            let k = group.len();
            if k == 1 {
                let z = polish_simple(&ev, approx[group[0]], mode);
                found.push(Root { location: z, multiplicity: 1 });
                continue;
            }
            let centroid = group.iter().fold(Complex::zero(), |acc, &i| acc + approx[i]) / F::from_count(k);
            match multiple_root(&ev, centroid, k) {
                Some(z) => found.push(Root { location: z, multiplicity: k }),
                None => {
                    for &i in &group {
                        let z = polish_simple(&ev, approx[i], mode);
                        found.push(Root { location: z, multiplicity: 1 });
                    }
                }
            }
        }
    }

    let mut roots = merge_close(found, cfg.cluster_tol);
    roots.sort_by(|a, b| cmp_complex(a.location, b.location));

    let ten = F::lit(10.0);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let sep = chordal(roots[i].location, roots[j].location);
            if sep <= ten * cfg.cluster_tol {
                return Err(Error::IllSeparated { separation: sep.as_f64(), cluster_tol: cfg.cluster_tol.as_f64() });
            }
        }
    }

    let full = Evaluator::new(all);
    let residual_bound = roots
        .iter()
        .map(|r| {
            if r.location.is_zero() && zeros > 0 {
                F::zero()
            } else {
                full.step(r.location, mode).rel_residual
            }
        })
        .fold(F::zero(), F::max);

    debug_assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), p.degree().unwrap_or(0));
    Ok(RootSet { roots, residual_bound })
}
