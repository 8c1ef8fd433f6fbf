//! Design and simulation kernels for a hybrid SiC/YIG optically detected
//! DEER sensor: stripe magnetostatics, spin-wave resonances, spin spectra,
//! 2D-plane DEER signals, SNR budgets, implantation statistics and
//! photonic-crystal TM bands.

pub mod config;
pub mod constants;
pub mod deer;
pub mod error;
pub mod fabstats;
pub mod magnetostatics;
pub mod photonics;
pub mod report;
pub mod reproduce;
mod quadrature;
pub mod snr;
pub mod spin;
pub mod swr;

/// Cartesian 3-vector `(x, y, z)`.
pub type Vec3 = [f64; 3];

pub use config::SensorConfig;
pub use deer::{DeerScenario, DeerTrace};
pub use error::{Error, Result};
pub use fabstats::{ApertureSpec, ImplantProfile};
pub use magnetostatics::StripeGeometry;
pub use photonics::PhcLattice;
pub use report::{Format, Table};
pub use snr::SnrBudget;
pub use spin::SpinSystem;
pub use swr::SwrModel;
