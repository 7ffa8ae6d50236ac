//! Points of the Riemann sphere in normalized projective coordinates.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Significant digits used by `Display` and the CLI by default.
pub const DEFAULT_DIGITS: usize = 17;

/// A point `[z : w]` of the Riemann sphere.
///
/// Stored with `|z|^2 + |w|^2 = 1` and the component of larger modulus real
/// and positive (ties go to `w`). Infinity is exactly `[1 : 0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint<F> {
    num: Complex<F>,
    den: Complex<F>,
}

impl<F: Scalar> SpherePoint<F> {
    /// Canonical representative of `[z : w]`.
    pub fn normalize(z: Complex<F>, w: Complex<F>) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite() && w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if z.is_zero() && w.is_zero() {
            return Err(Error::ZeroPair);
        }
        if w.is_zero() {
            return Ok(Self::infinity());
        }
        if z.is_zero() {
            return Ok(Self::zero());
        }
        let (nz, nw) = (z.norm(), w.norm());
        let scale = nz.max(nw);
        let (z, w) = (z.unscale(scale), w.unscale(scale));
        let r = z.norm().hypot(w.norm());
        let (z, w) = (z.unscale(r), w.unscale(r));
        // rotate so the dominant component is real-positive
        let pivot = if nw >= nz { w } else { z };
        let phase = pivot.conj().unscale(pivot.norm());
        let (mut z, mut w) = (z * phase, w * phase);
        if nw >= nz {
            w = Complex::new(w.re, F::zero());
        } else {
            z = Complex::new(z.re, F::zero());
        }
        Ok(SpherePoint { num: z, den: w })
    }

    pub fn infinity() -> Self {
        SpherePoint { num: Complex::one(), den: Complex::zero() }
    }

    pub fn zero() -> Self {
        SpherePoint { num: Complex::zero(), den: Complex::one() }
    }

    /// Embeds a finite complex number.
    pub fn finite(c: Complex<F>) -> Result<Self> {
        Self::normalize(c, Complex::one())
    }

    pub fn real(x: F) -> Result<Self> {
        Self::finite(Complex::new(x, F::zero()))
    }

    pub fn numerator(&self) -> Complex<F> {
        self.num
    }

    pub fn denominator(&self) -> Complex<F> {
        self.den
    }

    pub fn is_infinity(&self) -> bool {
        self.den.is_zero()
    }

    /// Affine coordinate `z / w`, or `None` at infinity.
    pub fn affine(&self) -> Option<Complex<F>> {
        if self.is_infinity() {
            None
        } else {
            Some(self.num / self.den)
        }
    }

    /// Chordal distance on the unit sphere; lies in `[0, 2]`.
    pub fn chordal_distance(&self, other: &Self) -> F {
        let cross = self.num * other.den - other.num * self.den;
        let np = self.num.norm().hypot(self.den.norm());
        let nq = other.num.norm().hypot(other.den.norm());
        let d = F::lit(2.0) * cross.norm() / (np * nq);
        d.min(F::lit(2.0))
    }

    pub fn points_equal(&self, other: &Self, tol: F) -> bool {
        self.chordal_distance(other) <= tol
    }

    /// Position on the unit sphere in R^3; Euclidean distance there is the
    /// chordal distance.
    pub fn embed(&self) -> [F; 3] {
        let two = F::lit(2.0);
        let zw = self.num * self.den.conj();
        let nz = self.num.norm_sqr();
        let nw = self.den.norm_sqr();
        let total = nz + nw;
        [two * zw.re / total, two * zw.im / total, (nz - nw) / total]
    }

    /// Total order: lexicographic on (Re, Im) of the affine coordinate,
    /// infinity last.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        match (self.affine(), other.affine()) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(a), Some(b)) => a
                .re
                .partial_cmp(&b.re)
                .unwrap_or(Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal)),
        }
    }

    /// `inf` or `a+bi` with the given number of significant digits.
    pub fn to_text(&self, digits: usize) -> String {
        match self.affine() {
            None => "inf".to_string(),
            Some(c) => format_complex(c, digits),
        }
    }

    /// Converts to another scalar type.
    pub fn cast<G: Scalar>(&self) -> SpherePoint<G> {
        let cv = |c: Complex<F>| Complex::new(G::lit(c.re.as_f64()), G::lit(c.im.as_f64()));
        SpherePoint::normalize(cv(self.num), cv(self.den)).expect("normalized point casts")
    }
}

impl<F: Scalar> fmt::Display for SpherePoint<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(f.precision().unwrap_or(DEFAULT_DIGITS)))
    }
}

impl<F: Scalar> FromStr for SpherePoint<F> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Self::infinity()),
            "" => return Err(Error::InvalidArgument("empty point".into())),
            _ => {}
        }
        let c = parse_complex_literal(&t)
            .ok_or_else(|| Error::InvalidArgument(format!("cannot parse point '{s}'")))?;
        Self::finite(Complex::new(F::lit(c.0), F::lit(c.1)))
    }
}

fn parse_complex_literal(t: &str) -> Option<(f64, f64)> {
    let num = |s: &str| -> Option<f64> {
        let v: f64 = s.parse().ok()?;
        v.is_finite().then_some(v)
    };
    let Some(body) = t.strip_suffix('i') else {
        return Some((num(t)?, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => num(s)?,
    };
    Some((re, im))
}

/// `%g`-style formatting with trailing zeros trimmed.
pub fn format_sig<F: Scalar>(x: F, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_zero() {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mant), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn format_complex<F: Scalar>(c: Complex<F>, digits: usize) -> String {
    let re = format_sig(c.re, digits);
    let im = format_sig(c.im.abs(), digits);
    let sign = if c.im.is_sign_negative() && !c.im.is_zero() { '-' } else { '+' };
    format!("{re}{sign}{im}i")
}

/// Groups points whose chordal distance is within `tol` (single linkage).
///
/// Sweeps the points sorted by one embedding coordinate, so only neighbours
/// inside a `tol`-wide slab are compared. Each group is returned sorted
/// canonically, and groups are ordered by their canonical minimum.
pub fn cluster_points<F: Scalar>(points: &[SpherePoint<F>], tol: F) -> Vec<Vec<usize>> {
    let n = points.len();
    let xs: Vec<F> = points.iter().map(|p| p.embed()[0]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        xs[a]
            .partial_cmp(&xs[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| points[a].canonical_cmp(&points[b]))
    });
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if xs[j] - xs[i] > tol {
                break;
            }
            if points[i].chordal_distance(&points[j]) <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    for g in groups.iter_mut() {
        g.sort_by(|&a, &b| points[a].canonical_cmp(&points[b]).then(a.cmp(&b)));
    }
    groups.sort_by(|a, b| points[a[0]].canonical_cmp(&points[b[0]]).then(a[0].cmp(&b[0])));
    groups
}

/// Distinct points up to `tol`, one canonical representative per cluster,
/// in canonical order.
pub fn dedup_points<F: Scalar>(points: &[SpherePoint<F>], tol: F) -> Vec<SpherePoint<F>> {
    cluster_points(points, tol).into_iter().map(|g| points[g[0]]).collect()
}
