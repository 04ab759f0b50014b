use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::FromPrimitive;

/// Floating-point scalar the whole pipeline is generic over.
pub trait Real: NdFloat + FromPrimitive + Default + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal; infallible for every implementor.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Relative threshold below which an eigenvalue counts as zero in rank decisions.
    fn rank_tol() -> Self {
        let floor = Self::lit(1e-12);
        let eps = Self::epsilon() * Self::lit(16.0);
        if eps > floor {
            eps
        } else {
            floor
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
