//! Dimension pair `(m, n)` and every constant derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dimensions of `M^m x R^n` together with the derived constants.
///
/// Constants are evaluated once from their integer formulas; downstream code
/// reads them from here instead of recomputing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemDims<T> {
    /// Dimension of the closed factor.
    pub m: u32,
    /// Dimension of the Euclidean factor.
    pub n: u32,
    /// Total dimension `m + n`.
    pub total: u32,
    /// Critical Sobolev exponent `2N/(N-2)`.
    pub p: T,
    /// Conformal Laplacian coefficient `4(N-1)/(N-2)`.
    pub a_n: T,
    /// Scalar curvature of the closed factor, normalized to `m(m-1)`.
    pub s_g: T,
}

/// Validates `(m, n)` and computes the derived constants.
pub fn make_dims<T: Scalar>(m: u32, n: u32) -> Result<ProblemDims<T>> {
    if m < 2 {
        return Err(Error::Domain(format!("m = {m} violates m >= 2")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("n = {n} violates n >= 2")));
    }
    let total = m + n;
    let big_n = T::from_u32(total).unwrap();
    let two = T::from_u32(2).unwrap();
    let four = T::from_u32(4).unwrap();
    let mt = T::from_u32(m).unwrap();
    Ok(ProblemDims {
        m,
        n,
        total,
        p: two * big_n / (big_n - two),
        a_n: four * (big_n - T::one()) / (big_n - two),
        s_g: mt * (mt - T::one()),
    })
}

impl<T: Scalar> ProblemDims<T> {
    /// `s_g / a_N`, the linear coefficient of the normalized radial equation.
    pub fn kappa(&self) -> T {
        self.s_g / self.a_n
    }

    /// Decay rate `sqrt(s_g / a_N)` of the ground state at infinity.
    pub fn decay_rate(&self) -> T {
        self.kappa().sqrt()
    }

    pub fn n_scalar(&self) -> T {
        T::from_u32(self.n).unwrap()
    }

    pub fn m_scalar(&self) -> T {
        T::from_u32(self.m).unwrap()
    }

    pub fn total_scalar(&self) -> T {
        T::from_u32(self.total).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_pairs() {
        let d = make_dims::<f64>(2, 2).unwrap();
        assert_eq!((d.total, d.p, d.a_n, d.s_g), (4, 4.0, 6.0, 2.0));

        let d = make_dims::<f64>(3, 2).unwrap();
        assert_eq!(d.total, 5);
        assert!((d.p - 10.0 / 3.0).abs() < 1e-15);
        assert!((d.a_n - 16.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.s_g, 6.0);

        let d = make_dims::<f64>(2, 7).unwrap();
        assert_eq!(d.total, 9);
        assert!((d.p - 18.0 / 7.0).abs() < 1e-15);
        assert!((d.a_n - 32.0 / 7.0).abs() < 1e-15);
        assert_eq!(d.s_g, 2.0);
    }

    #[test]
    fn rejects_small_dimensions() {
        let err = make_dims::<f64>(1, 3).unwrap_err();
        assert!(matches!(err, Error::Domain(ref s) if s.contains("m >= 2")));
        let err = make_dims::<f64>(4, 0).unwrap_err();
        assert!(matches!(err, Error::Domain(ref s) if s.contains("n >= 2")));
    }

    #[test]
    fn single_precision_matches() {
        let d = make_dims::<f32>(2, 2).unwrap();
        assert_eq!(d.p, 4.0f32);
        assert_eq!(d.a_n, 6.0f32);
    }

    proptest! {
        #[test]
        fn exponent_identities(m in 2u32..40, n in 2u32..40) {
            let d = make_dims::<f64>(m, n).unwrap();
            let big_n = d.total as f64;
            prop_assert!(d.p > 2.0 && d.p <= 4.0);
            prop_assert!(d.a_n > 4.0 && d.a_n <= 6.0);
            prop_assert!(((d.p - 2.0) - 4.0 / (big_n - 2.0)).abs() < 1e-14);
            prop_assert!(((d.p - 2.0) * big_n / 2.0 - d.p).abs() <= big_n * f64::EPSILON * d.p);
            let again = make_dims::<f64>(m, n).unwrap();
            prop_assert_eq!(d.p.to_bits(), again.p.to_bits());
            prop_assert_eq!(d.a_n.to_bits(), again.a_n.to_bits());
        }
    }
}
