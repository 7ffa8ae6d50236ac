//! Floating-point scalar abstraction and double-word helpers.
//!
//! Every numeric routine in the crate is generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. The double-word type [`Dw`] gives
//! roughly twice the working precision using error-free transformations,
//! and backs the "escalated" precision mode of the root finder.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type usable as the working precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Significand width including the implicit bit.
    const MANTISSA_BITS: u32;

    /// Default chordal tolerance for identifying points.
    const DEFAULT_TOL: f64;

    /// Converts an `f64` literal. Panics only for values the type cannot hold
    /// at all, which never happens for finite literals.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count fits in scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const MANTISSA_BITS: u32 = f32::MANTISSA_DIGITS;
    const DEFAULT_TOL: f64 = 1e-4;
}

impl Scalar for f64 {
    const MANTISSA_BITS: u32 = f64::MANTISSA_DIGITS;
    const DEFAULT_TOL: f64 = 1e-9;
}

/// Working precision mode for polynomial evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    /// Plain arithmetic in the scalar type.
    Working,
    /// Compensated (double-word) arithmetic, roughly doubling the bits.
    Compensated,
}

impl Precision {
    /// Maps a requested bit count onto an evaluation mode for `F`.
    /// Returns `None` when the request is outside `[mantissa, 2*mantissa]`.
    pub fn from_bits<F: Scalar>(bits: u32) -> Option<Self> {
        if bits < F::MANTISSA_BITS {
            None
        } else if bits == F::MANTISSA_BITS {
            Some(Precision::Working)
        } else if bits <= 2 * F::MANTISSA_BITS {
            Some(Precision::Compensated)
        } else {
            None
        }
    }

    /// Unit roundoff of the mode.
    pub fn unit_roundoff<F: Scalar>(self) -> F {
        let eps = F::epsilon() / F::lit(2.0);
        match self {
            Precision::Working => eps,
            Precision::Compensated => eps * eps * F::lit(4.0),
        }
    }
}

#[inline]
fn two_sum<F: Scalar>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod<F: Scalar>(a: F, b: F) -> (F, F) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dw<F> {
    pub hi: F,
    pub lo: F,
}

impl<F: Scalar> Dw<F> {
    pub fn new(x: F) -> Self {
        Dw { hi: x, lo: F::zero() }
    }

    #[inline]
    pub fn value(self) -> F {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dw { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Self {
        Dw { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = two_sum(p, e);
        Dw { hi, lo }
    }
}

/// Complex number with double-word parts.
#[derive(Clone, Copy, Debug, Default)]
pub struct CDw<F> {
    pub re: Dw<F>,
    pub im: Dw<F>,
}

impl<F: Scalar> CDw<F> {
    pub fn new(z: Complex<F>) -> Self {
        CDw { re: Dw::new(z.re), im: Dw::new(z.im) }
    }

    pub fn zero() -> Self {
        Self::new(Complex::new(F::zero(), F::zero()))
    }

    pub fn value(self) -> Complex<F> {
        Complex::new(self.re.value(), self.im.value())
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        CDw { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        let re = self.re.mul(o.re).add(self.im.mul(o.im).neg());
        let im = self.re.mul(o.im).add(self.im.mul(o.re));
        CDw { re, im }
    }
}

/// Evaluates `sum coeffs[i] * x^i` in double-word arithmetic.
pub fn horner_dw<F: Scalar>(coeffs: &[Complex<F>], x: Complex<F>) -> Complex<F> {
    let xd = CDw::new(x);
    coeffs
        .iter()
        .rev()
        .fold(CDw::zero(), |acc, &c| acc.mul(xd).add(CDw::new(c)))
        .value()
}
