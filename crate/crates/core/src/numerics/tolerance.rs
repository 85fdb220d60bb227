use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stopping rule shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance<T = f64> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_iter: usize) -> Result<Self> {
        let tol = Tolerance {
            abs_tol,
            rel_tol,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= T::zero()) || !(self.rel_tol >= T::zero()) {
            return Err(Error::InvalidTolerance(
                "abs_tol and rel_tol must be non-negative".into(),
            ));
        }
        if self.abs_tol == T::zero() && self.rel_tol == T::zero() {
            return Err(Error::InvalidTolerance(
                "at least one of abs_tol, rel_tol must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidTolerance("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Relative-only tolerance at a few ulps, for roots that must be exact to
    /// working precision.
    pub fn machine() -> Self {
        Tolerance {
            abs_tol: T::zero(),
            rel_tol: T::lit(4.0) * T::epsilon(),
            max_iter: 400,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// `max(abs_tol, rel_tol * |scale|)`.
    pub fn bound(&self, scale: T) -> T {
        self.abs_tol.max(self.rel_tol * scale.abs())
    }
}

impl<T: Real> Default for Tolerance<T> {
    /// abs 1e-12, rel 1e-10, 200 iterations; clamped to a small multiple of
    /// machine epsilon for narrow scalar types.
    fn default() -> Self {
        let floor = T::lit(64.0) * T::epsilon();
        Tolerance {
            abs_tol: T::lit(1e-12).max(floor),
            rel_tol: T::lit(1e-10).max(floor),
            max_iter: 200,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_all_zero() {
        assert!(Tolerance::<f64>::new(0.0, 0.0, 10).is_err());
        assert!(Tolerance::<f64>::new(1e-3, 0.0, 0).is_err());
        assert!(Tolerance::<f64>::new(-1.0, 1e-3, 5).is_err());
        assert!(Tolerance::<f64>::new(0.0, 1e-3, 5).is_ok());
    }

    #[test]
    fn defaults() {
        let t = Tolerance::<f64>::default();
        assert_eq!(t.abs_tol, 1e-12);
        assert_eq!(t.rel_tol, 1e-10);
        assert_eq!(t.max_iter, 200);
        let t32 = Tolerance::<f32>::default();
        assert!(t32.abs_tol > 1e-6);
    }
}
