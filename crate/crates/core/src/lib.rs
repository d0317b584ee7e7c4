//! Stability threshold `λ(m, n)` for Yamabe-type solutions on `M^m x R^n`.
//!
//! The pipeline is
//!
//! 1. [`dims::make_dims`] derives `N = m + n`, `p = 2N/(N-2)`, `a_N` and the
//!    scalar curvature `s_g = m(m-1)` of the unit sphere.
//! 2. [`ground_state::shoot_ground_state`] shoots the positive radial
//!    solution of `-a_N Δf + s_g f = s_g f^{p-1}` on `R^n`.
//! 3. [`stability::find_lambda`] bisects `λ` on the trichotomy of the linear
//!    radial equation (zero crossing, positive local minimum, or decreasing
//!    and positive).
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`.

// Guards like `!(x > 0)` are written that way so they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dims;
pub mod error;
pub mod ground_state;
pub mod profile_io;
pub mod quadrature;
pub mod radial_ode;
pub mod reference;
pub mod scalar;
pub mod stability;

pub use dims::{make_dims, ProblemDims};
pub use error::{Error, Result};
pub use ground_state::{Equation, RadialProfile, ShootingSettings};
pub use radial_ode::{Tolerances, TrajectoryClass};
pub use scalar::Scalar;
pub use stability::{LambdaResult, StabilityReport, StabilitySettings, Verdict};

pub type Dims = ProblemDims<f64>;
pub type Profile = RadialProfile<f64>;
pub type Shooting = ShootingSettings<f64>;
pub type Stability = StabilitySettings<f64>;
pub type Threshold = LambdaResult<f64>;
pub type Report = StabilityReport<f64>;
pub type Class = TrajectoryClass<f64>;

/// Settings for the full `(m, n) -> λ(m, n)` pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    pub shooting: ShootingSettings<T>,
    pub stability: StabilitySettings<T>,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            shooting: ShootingSettings::default(),
            stability: StabilitySettings::default(),
        }
    }
}

/// Shoots the ground state for `(m, n)` and bisects for `λ(m, n)`.
pub fn compute_lambda<T: Scalar>(
    m: u32,
    n: u32,
    settings: &SolverSettings<T>,
) -> Result<(RadialProfile<T>, LambdaResult<T>)> {
    let dims = make_dims::<T>(m, n)?;
    let profile = ground_state::shoot_ground_state(&dims, &settings.shooting)?;
    let result = stability::find_lambda(&profile, &settings.stability)?;
    Ok((profile, result))
}
