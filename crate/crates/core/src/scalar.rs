//! Scalar abstraction for the linear-algebra paths.
//!
//! Everything that touches matrices is generic over [`Real`], so the same
//! code runs in `f64` (the default everywhere) or `f32`. Times, noise
//! parameters and recorded observables stay in `f64`.

use std::fmt::{Debug, Display};

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type usable for Hamiltonians and states.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Relative Frobenius tolerance for `V diag(λ) Vᵀ` reconstruction.
    const RECONSTRUCTION_TOL: f64;
    /// Largest acceptable trace drift of an evolving state.
    const TRACE_TOL: f64;
    /// Largest acceptable anti-Hermitian part of an evolving state.
    const HERMITICITY_TOL: f64;
    /// Most negative eigenvalue a state may carry before it is rejected.
    const NEGATIVITY_TOL: f64;

    fn name() -> &'static str;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }

    /// `exp(iθ)`.
    #[inline]
    fn cis(theta: Self) -> Complex<Self> {
        Complex::new(theta.cos(), theta.sin())
    }

    #[inline]
    fn abs_complex(z: Complex<Self>) -> Self {
        z.re.hypot(z.im)
    }
}

impl Real for f64 {
    const RECONSTRUCTION_TOL: f64 = 1e-10;
    const TRACE_TOL: f64 = 1e-8;
    const HERMITICITY_TOL: f64 = 1e-9;
    const NEGATIVITY_TOL: f64 = 1e-7;

    fn name() -> &'static str {
        "f64"
    }
}

impl Real for f32 {
    const RECONSTRUCTION_TOL: f64 = 1e-4;
    const TRACE_TOL: f64 = 1e-3;
    const HERMITICITY_TOL: f64 = 1e-4;
    const NEGATIVITY_TOL: f64 = 1e-3;

    fn name() -> &'static str {
        "f32"
    }
}
