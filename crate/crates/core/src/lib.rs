//! Squeeze-film damping of perforated oscillating microplates.
//!
//! The crate models the thin gas film between a perforated plate and a fixed
//! substrate. It computes frequency-dependent damping and stiffness
//! coefficients transferred from the film to the plate by two routes:
//!
//! * an imposed-velocity harmonic solve of the linearized, isothermal,
//!   compressible lubrication equation on a structured quad mesh of the film,
//!   with each etch hole attached as a lumped laminar channel
//!   ([`reynolds`]), and
//! * a modal projection that drives the film with structural mode shapes and
//!   back-projects the pressure forces onto all modes, producing
//!   frequency-dependent modal damping/stiffness matrices ([`projection`]).
//!
//! The experimental side of the loop lives in [`frf`]: a sixth-order
//! polynomial fit of a resonance curve, peak and half-power extraction, and
//! modal damping/stiffness identification from the half-power bandwidth.
//!
//! All numeric code is generic over the scalar type through [`Real`]
//! (`f32` or `f64`); concrete `f64` aliases for the main types are exported
//! at the crate root.

pub mod blech;
pub mod config;
pub mod error;
pub mod frf;
pub mod gasfilm;
pub mod geometry;
pub mod linalg;
pub mod projection;
pub mod reynolds;
pub mod structure;
pub mod sweep;

pub use error::{Error, Result};

/// Complex scalar built on the crate's real scalar type.
pub type Cplx<T> = num_complex::Complex<T>;

/// Floating-point scalar the solvers are generic over: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssignOps
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::NumAssignOps
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + std::fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

// Concrete aliases for the common double-precision instantiation.
pub type TestStructure64 = geometry::TestStructure<f64>;
pub type MaterialProps64 = geometry::MaterialProps<f64>;
pub type HoleGrid64 = geometry::HoleGrid<f64>;
pub type GasProps64 = gasfilm::GasProps<f64>;
pub type FilmMesh64 = gasfilm::FilmMesh<f64>;
pub type HoleChannel64 = gasfilm::HoleChannel<f64>;
pub type AssembledSystem64 = reynolds::AssembledSystem<f64>;
pub type HarmonicSolution64 = reynolds::HarmonicSolution<f64>;
pub type CKPair64 = reynolds::CKPair<f64>;
pub type ModalModel64 = structure::ModalModel<f64>;
pub type RomMatrices64 = projection::RomMatrices<f64>;
pub type FrfCurve64 = frf::FrfCurve<f64>;
pub type RunConfig64 = config::RunConfig<f64>;
