use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar accepted by the geometry, quadrature and element code.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used by iterative solvers: `max(floor, 64 eps)`.
    fn iter_tol(floor: f64) -> Self {
        let e = Self::epsilon() * Self::lit(64.0);
        let f = Self::lit(floor);
        if e > f {
            e
        } else {
            f
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
