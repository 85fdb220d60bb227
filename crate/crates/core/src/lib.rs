//! Bergman kernels, pluricomplex Green functions, logarithmic capacity and
//! Azukawa/Kobayashi indicatrix volumes on model domains, together with the
//! inequalities relating them.
//!
//! The numerical core is generic over a [`Real`] scalar; the `*F64`
//! aliases below fix it to `f64`, which is what the experiments use.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod domains;
pub mod error;
pub mod green1d;
pub mod indicatrix;
pub mod numerics;
pub mod scalar;
pub mod suita;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ToleranceF64 = numerics::Tolerance<f64>;
pub type DomainSpecF64 = domains::DomainSpec<f64>;
pub type DomainSpecF32 = domains::DomainSpec<f32>;
pub type EllipsoidFamilyF64 = domains::EllipsoidFamilyParams<f64>;
pub type GreenSeries1DF64 = green1d::GreenSeries1D<f64>;
pub type KernelValueF64 = bergman::KernelValue<f64>;
pub type IndicatrixProfileF64 = indicatrix::IndicatrixProfile<f64>;
pub type SuitaRatioF64 = suita::SuitaRatio<f64>;
pub type FamilyF64 = suita::Family<f64>;
