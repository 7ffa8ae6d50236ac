//! Rational maps `R = P/Q` on the Riemann sphere: forward evaluation,
//! critical points with branch indices, and fibers `R^{-1}(y)`.

use num_complex::Complex;
use num_traits::Zero;

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::poly::{all_roots, gcd_degree, Polynomial};
use crate::scalar::{horner_dw, Scalar};
use crate::sphere::SpherePoint;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint<F> {
    pub location: SpherePoint<F>,
    /// Local degree `e(z) >= 2`.
    pub branch_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberMember<F> {
    pub location: SpherePoint<F>,
    pub branch_index: usize,
}

/// The distinct solutions of `R(x) = target`, with local degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber<F> {
    pub target: SpherePoint<F>,
    /// Canonically sorted, pairwise distinct.
    pub members: Vec<FiberMember<F>>,
}

impl<F: Scalar> Fiber<F> {
    pub fn index_sum(&self) -> usize {
        self.members.iter().map(|m| m.branch_index).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = SpherePoint<F>> + '_ {
        self.members.iter().map(|m| m.location)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RiemannHurwitzReport {
    /// Sum of `e(z) - 1` over critical points.
    pub total: usize,
    /// `2N - 2`.
    pub expected: usize,
    pub passed: bool,
}

/// A validated rational map of degree at least two with coprime `P`, `Q`.
///
/// Critical data is computed once at construction; fibers at critical values
/// reuse it so multiple preimages come out with exact branch indices.
#[derive(Clone, Debug)]
pub struct RationalMap<F> {
    p: Polynomial<Complex<F>>,
    q: Polynomial<Complex<F>>,
    degree: usize,
    // homogeneous coefficient vectors, both of length degree + 1
    pc: Vec<Complex<F>>,
    qc: Vec<Complex<F>>,
    config: NumericConfig<F>,
    critical: Vec<CriticalPoint<F>>,
    critical_values: Vec<SpherePoint<F>>,
    infinity_image: SpherePoint<F>,
    infinity_index: usize,
}

impl<F: Scalar> RationalMap<F> {
    pub fn new(p: Polynomial<Complex<F>>, q: Polynomial<Complex<F>>, config: NumericConfig<F>) -> Result<Self> {
        let (Some(dp), Some(dq)) = (p.degree(), q.degree()) else {
            return Err(Error::ZeroPolynomial);
        };
        let degree = dp.max(dq);
        if degree < 2 {
            return Err(Error::DegreeTooLow { degree });
        }
        let g = gcd_degree(&p, &q, &config.roots)?;
        if g > 0 {
            return Err(Error::NotCoprime { gcd_degree: g });
        }
        let pad = |poly: &Polynomial<Complex<F>>| (0..=degree).map(|k| poly.coeff(k)).collect::<Vec<_>>();
        let mut map = RationalMap {
            pc: pad(&p),
            qc: pad(&q),
            p,
            q,
            degree,
            config,
            critical: Vec::new(),
            critical_values: Vec::new(),
            infinity_image: SpherePoint::infinity(),
            infinity_index: 1,
        };
        map.infinity_image = map.apply(&SpherePoint::infinity());
        match map.compute_critical(&map.config.clone()) {
            Err(e) if e.is_numerical() => map.compute_critical(&map.config.escalated())?,
            other => other?,
        }
        Ok(map)
    }

    /// Polynomial map from coefficients, constant term first.
    pub fn polynomial(coeffs: &[Complex<F>], config: NumericConfig<F>) -> Result<Self> {
        Self::new(Polynomial::new(coeffs.to_vec()), Polynomial::constant(Complex::new(F::one(), F::zero())), config)
    }

    pub fn numerator(&self) -> &Polynomial<Complex<F>> {
        &self.p
    }

    pub fn denominator(&self) -> &Polynomial<Complex<F>> {
        &self.q
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn config(&self) -> &NumericConfig<F> {
        &self.config
    }

    pub fn critical_points(&self) -> &[CriticalPoint<F>] {
        &self.critical
    }

    /// `R(c)` for each entry of [`critical_points`](Self::critical_points).
    pub fn critical_values(&self) -> &[SpherePoint<F>] {
        &self.critical_values
    }

    pub fn infinity_image(&self) -> SpherePoint<F> {
        self.infinity_image
    }

    /// Local degree at infinity (1 when infinity is not critical).
    pub fn infinity_index(&self) -> usize {
        self.infinity_index
    }

    /// `R(x)` via the homogenized pair, scaled so nothing overflows.
    pub fn apply(&self, x: &SpherePoint<F>) -> SpherePoint<F> {
        let (z, w) = (x.numerator(), x.denominator());
        let eval = |compensated: bool| {
            let (c_p, c_q, t): (Vec<Complex<F>>, Vec<Complex<F>>, Complex<F>) = if z.norm() <= w.norm() {
                (self.pc.clone(), self.qc.clone(), z / w)
            } else {
                (self.pc.iter().rev().copied().collect(), self.qc.iter().rev().copied().collect(), w / z)
            };
            if compensated {
                (horner_dw(&c_p, t), horner_dw(&c_q, t))
            } else {
                (horner(&c_p, t), horner(&c_q, t))
            }
        };
        let (a, b) = eval(false);
        let tiny = F::min_positive_value() * F::lit(1e8);
        if a.norm() > tiny || b.norm() > tiny {
            if let Ok(pt) = SpherePoint::normalize(a, b) {
                return pt;
            }
        }
        let (a, b) = eval(true);
        SpherePoint::normalize(a, b).expect("coprime map has no common zero of P and Q")
    }

    /// Coefficients of `y_w P(z) - y_z Q(z)`, padded to length `N + 1`.
    pub fn fiber_polynomial(&self, y: &SpherePoint<F>) -> Vec<Complex<F>> {
        let (yz, yw) = (y.numerator(), y.denominator());
        self.pc.iter().zip(&self.qc).map(|(&a, &b)| yw * a - yz * b).collect()
    }

    /// `R^{-1}(y)` as distinct points with branch indices summing to `N`.
    pub fn fiber(&self, y: &SpherePoint<F>) -> Result<Fiber<F>> {
        let tol = self.config.point_tol;
        let n = self.degree;

        // Targets within tolerance of a critical value are snapped onto it, and
        // the critical points over it enter with their known indices.
        let inf_dist = self.infinity_image.chordal_distance(y);
        let k_inf = if inf_dist <= tol { self.infinity_index } else { 0 };
        let mut known: Vec<(Complex<F>, usize)> = Vec::new();
        let mut snap: Option<(F, SpherePoint<F>)> = (k_inf > 0).then_some((inf_dist, self.infinity_image));
        for (cp, v) in self.critical.iter().zip(&self.critical_values) {
            let Some(c) = cp.location.affine() else { continue };
            let d = v.chordal_distance(y);
            if d <= tol {
                known.push((c, cp.branch_index));
                if snap.is_none_or(|(best, _)| d < best) {
                    snap = Some((d, *v));
                }
            }
        }
        let target = snap.map_or(*y, |(_, v)| v);

        let mut coeffs = self.fiber_polynomial(&target);
        coeffs.truncate(n + 1 - k_inf);
        let expected = n - k_inf;
        let mut poly = Polynomial::new(coeffs);
        if poly.degree() != Some(expected) {
            return Err(Error::FiberInconsistent(format!(
                "fiber polynomial has degree {:?}, expected {expected}",
                poly.degree()
            )));
        }

        let mut members: Vec<FiberMember<F>> = Vec::new();
        if k_inf > 0 {
            members.push(FiberMember { location: SpherePoint::infinity(), branch_index: k_inf });
        }
        let known_total: usize = known.iter().map(|k| k.1).sum();
        if known_total > expected {
            return Err(Error::FiberInconsistent(format!(
                "critical points over the target carry index {known_total} > {expected}"
            )));
        }
        for &(c, e) in &known {
            for _ in 0..e {
                poly = deflate(&poly, c);
            }
            members.push(FiberMember { location: SpherePoint::finite(c)?, branch_index: e });
        }
        if poly.degree().is_some_and(|d| d >= 1) {
            for r in all_roots(&poly, &self.config.roots)?.roots {
                members.push(FiberMember { location: SpherePoint::finite(tidy(r.location))?, branch_index: r.multiplicity });
            }
        }

        let members = merge_members(members, tol);
        let fiber = Fiber { target: *y, members };
        if fiber.index_sum() != n {
            return Err(Error::FiberInconsistent(format!("indices sum to {}, expected {n}", fiber.index_sum())));
        }
        Ok(fiber)
    }

    pub fn verify_riemann_hurwitz(&self) -> RiemannHurwitzReport {
        let total = self.critical.iter().map(|c| c.branch_index - 1).sum();
        let expected = 2 * self.degree - 2;
        RiemannHurwitzReport { total, expected, passed: total == expected }
    }

    fn compute_critical(&mut self, config: &NumericConfig<F>) -> Result<()> {
        let n = self.degree;
        let u = F::epsilon();
        let scale = self.p.max_abs() * self.q.max_abs();
        // finite critical points: zeros of the Wronskian P'Q - PQ'; the
        // coefficient of z^{2N-1} cancels identically
        let w = &(&self.p.derivative() * &self.q) - &(&self.p * &self.q.derivative());
        let mut wc: Vec<Complex<F>> = w.into_coeffs();
        wc.truncate(2 * n - 1);
        let thresh = F::from_count(64 * n) * u * scale;
        while wc.last().is_some_and(|c| c.norm() <= thresh) {
            wc.pop();
        }
        let wronskian = Polynomial::new(wc);
        let mut critical = Vec::new();
        if wronskian.degree().is_some_and(|d| d >= 1) {
            for r in all_roots(&wronskian, &config.roots)?.roots {
                critical.push(CriticalPoint { location: SpherePoint::finite(tidy(r.location))?, branch_index: r.multiplicity + 1 });
            }
        }

        // index at infinity: degree drop of the fiber polynomial at R(infinity)
        let (pn, qn) = (self.pc[n], self.qc[n]);
        let f_inf: Vec<Complex<F>> = self.pc.iter().zip(&self.qc).map(|(&a, &b)| qn * a - pn * b).collect();
        let thresh_inf = F::from_count(64 * n) * u * (qn.norm() * self.p.max_abs() + pn.norm() * self.q.max_abs());
        let top = f_inf
            .iter()
            .rposition(|c| c.norm() > thresh_inf)
            .ok_or_else(|| Error::FiberInconsistent("P and Q are proportional".into()))?;
        let e_inf = n - top;
        if e_inf >= 2 {
            critical.push(CriticalPoint { location: SpherePoint::infinity(), branch_index: e_inf });
        }

        let total: usize = critical.iter().map(|c| c.branch_index - 1).sum();
        if total != 2 * n - 2 {
            return Err(Error::RiemannHurwitz { computed: total, expected: 2 * n - 2 });
        }
        critical.sort_by(|a, b| a.location.canonical_cmp(&b.location));
        self.critical_values = critical.iter().map(|c| self.apply(&c.location)).collect();
        self.critical = critical;
        self.infinity_index = e_inf;
        Ok(())
    }
}

/// A Möbius transformation `z -> (a z + b) / (c z + d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius<F> {
    pub a: Complex<F>,
    pub b: Complex<F>,
    pub c: Complex<F>,
    pub d: Complex<F>,
}

impl<F: Scalar> Mobius<F> {
    pub fn new(a: Complex<F>, b: Complex<F>, c: Complex<F>, d: Complex<F>) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.norm() > F::zero()) {
            return Err(Error::InvalidArgument("Möbius determinant vanishes".into()));
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn determinant(&self) -> Complex<F> {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, x: &SpherePoint<F>) -> SpherePoint<F> {
        let (z, w) = (x.numerator(), x.denominator());
        SpherePoint::normalize(self.a * z + self.b * w, self.c * z + self.d * w).expect("invertible map of a valid point")
    }

    pub fn inverse(&self) -> Self {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }
}

impl<F: Scalar> RationalMap<F> {
    /// `M ∘ R ∘ M^{-1}`, which has the same backward-orbit counts at
    /// corresponding points.
    pub fn conjugate(&self, m: &Mobius<F>) -> Result<Self> {
        type P<F> = Polynomial<Complex<F>>;
        let inv = m.inverse();
        let x: P<F> = Polynomial::new(vec![inv.b, inv.a]);
        let y: P<F> = Polynomial::new(vec![inv.d, inv.c]);
        let n = self.degree as u32;
        let (mut ph, mut qh) = (P::<F>::zero(), P::<F>::zero());
        for i in 0..=self.degree {
            let t = &x.pow(i as u32) * &y.pow(n - i as u32);
            ph = &ph + &t.scale(&self.pc[i]);
            qh = &qh + &t.scale(&self.qc[i]);
        }
        let p = &ph.scale(&m.a) + &qh.scale(&m.b);
        let q = &ph.scale(&m.c) + &qh.scale(&m.d);
        let rel = F::from_count(64 * self.degree) * F::epsilon();
        RationalMap::new(p.trim_relative(rel), q.trim_relative(rel), self.config.clone())
    }
}

/// Zeroes a real or imaginary part that is pure roundoff relative to `|c|`.
fn tidy<F: Scalar>(c: Complex<F>) -> Complex<F> {
    let floor = F::lit(16.0) * F::epsilon() * c.norm();
    let re = if c.re.abs() <= floor { F::zero() } else { c.re };
    let im = if c.im.abs() <= floor { F::zero() } else { c.im };
    Complex::new(re, im)
}

fn horner<F: Scalar>(c: &[Complex<F>], x: Complex<F>) -> Complex<F> {
    c.iter().rev().fold(Complex::zero(), |acc, &a| acc * x + a)
}

/// Quotient of `p` by `(z - c)`, remainder dropped.
fn deflate<F: Scalar>(p: &Polynomial<Complex<F>>, c: Complex<F>) -> Polynomial<Complex<F>> {
    let a = p.coeffs();
    if a.len() <= 1 {
        return Polynomial::zero();
    }
    let mut out = vec![Complex::zero(); a.len() - 1];
    let mut acc = Complex::zero();
    for i in (1..a.len()).rev() {
        acc = acc * c + a[i];
        out[i - 1] = acc;
    }
    Polynomial::new(out)
}

fn merge_members<F: Scalar>(mut members: Vec<FiberMember<F>>, tol: F) -> Vec<FiberMember<F>> {
    members.sort_by(|a, b| a.location.canonical_cmp(&b.location));
    let mut out: Vec<FiberMember<F>> = Vec::with_capacity(members.len());
    'outer: for m in members {
        for o in out.iter_mut() {
            if o.location.chordal_distance(&m.location) <= tol {
                o.branch_index += m.branch_index;
                continue 'outer;
            }
        }
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type Map = RationalMap<f64>;

    fn poly_map(c: &[f64]) -> Map {
        let cc: Vec<_> = c.iter().map(|&v| Complex::new(v, 0.0)).collect();
        Map::polynomial(&cc, NumericConfig::default()).unwrap()
    }

    fn pt(x: f64) -> SpherePoint<f64> {
        SpherePoint::real(x).unwrap()
    }

    fn inf() -> SpherePoint<f64> {
        SpherePoint::infinity()
    }

    fn summary(cps: &[CriticalPoint<f64>]) -> Vec<(String, usize)> {
        cps.iter().map(|c| (c.location.to_text(6), c.branch_index)).collect()
    }

    #[test]
    fn conjugation_by_translation() {
        // z^2 conjugated by z + 1 is z^2 - 2z + 2
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        let m = Mobius::new(one, one, zero, one).unwrap();
        let r = Map::polynomial(&[zero, zero, one], NumericConfig::default()).unwrap();
        let q = r.conjugate(&m).unwrap();
        let want = [Complex::new(2.0, 0.0), Complex::new(-2.0, 0.0), one];
        for k in 0..3 {
            assert!((q.numerator().coeff(k) - want[k]).norm() < 1e-15);
        }
        assert_eq!(q.denominator().degree(), Some(0));
        let crit: Vec<String> = q.critical_points().iter().map(|c| c.location.to_string()).collect();
        assert_eq!(crit, ["1+0i", "inf"]);
        assert!(Mobius::new(one, one, one, one).is_err());
        let p = SpherePoint::finite(Complex::new(0.3, -2.0)).unwrap();
        assert!(m.inverse().apply(&m.apply(&p)).chordal_distance(&p) < 1e-15);
    }

    #[test]
    fn apply_examples() {
        assert_eq!(poly_map(&[0.0, 0.0, 1.0]).apply(&inf()), inf());
        let r = poly_map(&[-1.0, 0.0, 1.0]);
        assert!(r.apply(&pt(0.0)).chordal_distance(&pt(-1.0)) < 1e-15);
        // 1/z is degree 1, so check the pole through 1/z^2
        let recip = Map::new(
            Polynomial::from_real(&[1.0]),
            Polynomial::from_real(&[0.0, 0.0, 1.0]),
            NumericConfig::default(),
        )
        .unwrap();
        assert_eq!(recip.apply(&pt(0.0)), inf());
        assert!(recip.apply(&inf()).chordal_distance(&pt(0.0)) < 1e-15);
    }

    #[test]
    fn critical_points_examples() {
        let want = vec![("0+0i".to_string(), 2), ("inf".to_string(), 2)];
        assert_eq!(summary(poly_map(&[0.0, 0.0, 1.0]).critical_points()), want);
        assert_eq!(summary(poly_map(&[1.0, 0.0, 1.0]).critical_points()), want);
        // W = 3z^2 - 3
        let cubic = poly_map(&[0.0, -3.0, 0.0, 1.0]);
        assert_eq!(
            summary(cubic.critical_points()),
            vec![("-1+0i".to_string(), 2), ("1+0i".to_string(), 2), ("inf".to_string(), 3)]
        );
        let rh = cubic.verify_riemann_hurwitz();
        assert_eq!((rh.total, rh.expected, rh.passed), (4, 4, true));
    }

    #[test]
    fn fiber_examples() {
        let sq = poly_map(&[0.0, 0.0, 1.0]);
        let f = sq.fiber(&pt(0.0)).unwrap();
        assert_eq!(f.members.len(), 1);
        assert_eq!((f.members[0].location, f.members[0].branch_index), (pt(0.0), 2));

        let r = poly_map(&[-1.0, 0.0, 1.0]);
        let f = r.fiber(&pt(-1.0)).unwrap();
        assert_eq!(f.members.len(), 1);
        assert_eq!(f.members[0].branch_index, 2);
        assert!(f.members[0].location.chordal_distance(&pt(0.0)) < 1e-15);

        let f = poly_map(&[1.0, 0.0, 1.0]).fiber(&inf()).unwrap();
        assert_eq!(f.members, vec![FiberMember { location: inf(), branch_index: 2 }]);
    }

    #[test]
    fn near_critical_target_snaps() {
        let r = poly_map(&[-1.0, 0.0, 1.0]);
        let y = pt(-1.0 + 3e-16);
        let f = r.fiber(&y).unwrap();
        assert_eq!(f.members.len(), 1);
        assert_eq!(f.members[0].branch_index, 2);
    }

    #[test]
    fn generic_fiber_is_regular_covering() {
        let r = poly_map(&[0.25, 0.0, 1.0]);
        let y = SpherePoint::finite(Complex::new(0.3, 0.7)).unwrap();
        let f = r.fiber(&y).unwrap();
        assert_eq!(f.members.len(), 2);
        for m in &f.members {
            assert_eq!(m.branch_index, 1);
            assert!(r.apply(&m.location).chordal_distance(&y) < 1e-12);
        }
    }

    #[test]
    fn rational_map_with_finite_image_of_infinity() {
        // (z^2 + 1) / (2z): Newton map of z^2 - 1, critical points +-1
        let r = Map::new(
            Polynomial::from_real(&[1.0, 0.0, 1.0]),
            Polynomial::from_real(&[0.0, 2.0]),
            NumericConfig::default(),
        )
        .unwrap();
        assert_eq!(summary(r.critical_points()), vec![("-1+0i".to_string(), 2), ("1+0i".to_string(), 2)]);
        assert_eq!(r.infinity_index(), 1);
        let f = r.fiber(&inf()).unwrap();
        let pts: Vec<_> = f.members.iter().map(|m| (m.location.to_text(6), m.branch_index)).collect();
        assert_eq!(pts, vec![("0+0i".to_string(), 1), ("inf".to_string(), 1)]);
        let f = r.fiber(&pt(1.0)).unwrap();
        assert_eq!(f.members.len(), 1);
        assert_eq!(f.members[0].branch_index, 2);
    }

    #[test]
    fn rejects_invalid_maps() {
        let cfg = NumericConfig::<f64>::default();
        let e = Map::new(Polynomial::from_real(&[-1.0, 0.0, 1.0]), Polynomial::from_real(&[-1.0, 1.0]), cfg.clone());
        assert_eq!(e.unwrap_err(), Error::NotCoprime { gcd_degree: 1 });
        let e = Map::new(Polynomial::from_real(&[1.0, 2.0]), Polynomial::from_real(&[1.0]), cfg.clone());
        assert_eq!(e.unwrap_err(), Error::DegreeTooLow { degree: 1 });
        let e = Map::new(Polynomial::zero(), Polynomial::from_real(&[1.0]), cfg);
        assert_eq!(e.unwrap_err(), Error::ZeroPolynomial);
    }

    #[test]
    fn cubic_with_triple_point() {
        let r = poly_map(&[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(summary(r.critical_points()), vec![("0+0i".to_string(), 3), ("inf".to_string(), 3)]);
        let f = r.fiber(&pt(8.0)).unwrap();
        assert_eq!(f.members.len(), 3);
    }
}
