use crate::poly::RootConfig;
use crate::scalar::Scalar;

/// Tolerance policy shared by every fiber and orbit computation.
///
/// Exact identities (fiber index sums, Riemann-Hurwitz) are integer checks;
/// these tolerances only decide when two computed points are the same point.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericConfig<F> {
    /// Chordal radius under which two sphere points are identified.
    pub point_tol: F,
    pub roots: RootConfig<F>,
}

impl<F: Scalar> Default for NumericConfig<F> {
    fn default() -> Self {
        NumericConfig { point_tol: F::lit(F::DEFAULT_TOL), roots: RootConfig::default() }
    }
}

impl<F: Scalar> NumericConfig<F> {
    /// Same chordal tolerance for dedup and root clustering.
    pub fn with_tol(tol: F) -> Self {
        let mut c = Self::default();
        c.point_tol = tol;
        c.roots.cluster_tol = tol;
        c
    }

    pub fn with_precision_bits(mut self, bits: u32) -> Self {
        self.roots.precision_bits = bits;
        self
    }

    /// The single escalation step: double the working precision.
    pub fn escalated(&self) -> Self {
        let mut c = self.clone();
        c.roots.precision_bits = 2 * F::MANTISSA_BITS;
        c
    }
}
