//! Shared numerical kernels: root bracketing, adaptive quadrature, sample
//! streams and the Gamma function.

mod quadrature;
mod root;
mod sampling;
mod special;
mod tolerance;

pub use quadrature::{integrate_1d, integrate_1d_with_knots, Quadrature};
pub use root::find_root_monotone;
pub use sampling::{estimate_fraction, sample_unit_cube, SampleKind, SampleStream};
pub use special::{gamma, ln_gamma};
pub use tolerance::Tolerance;
