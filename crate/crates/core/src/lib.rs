//! Simulation and inference for non-stationary log-linear count time series.
//!
//! The count process is
//!
//! ```text
//! ln σ_t = a ln σ_{t-1} + b ln(X_{t-1} + 1) + C_{t-1},    X_t = ⌊σ_t Y_t⌋,
//! ```
//!
//! with i.i.d. non-negative innovations `Y_t` and exogenous terms `C_t`
//! (by default the deterministic trend `C_{t-1} = c ln t`). The crate
//! simulates the process, certifies its mixing rate through an ordered
//! maximal coupling, fits the trend exponent by least squares and builds
//! dependent wild bootstrap confidence intervals.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod bootstrap;
pub mod coupling;
pub mod error;
pub mod estimation;
pub mod innovations;
pub mod mc;
pub mod process;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Model = process::Model<f64>;
pub type ModelParams = process::ModelParams<f64>;
pub type InnovationSpec = innovations::InnovationSpec<f64>;
pub type DiscretizedLaw = innovations::DiscretizedLaw<f64>;
pub type Trajectory = process::Trajectory<f64>;
pub type TrendFit = estimation::TrendFit<f64>;
pub type BootstrapConfig = bootstrap::BootstrapConfig<f64>;
pub type ConfidenceInterval = bootstrap::ConfidenceInterval<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Model = crate::process::Model<f32>;
    pub type ModelParams = crate::process::ModelParams<f32>;
    pub type InnovationSpec = crate::innovations::InnovationSpec<f32>;
    pub type DiscretizedLaw = crate::innovations::DiscretizedLaw<f32>;
    pub type Trajectory = crate::process::Trajectory<f32>;
    pub type TrendFit = crate::estimation::TrendFit<f32>;
    pub type BootstrapConfig = crate::bootstrap::BootstrapConfig<f32>;
    pub type ConfidenceInterval = crate::bootstrap::ConfidenceInterval<f32>;
}
