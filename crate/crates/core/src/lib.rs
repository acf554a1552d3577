//! Structure-preserving guided filtering for retinal fundus images.
//!
//! A cataractous lens scatters light over the retina and veils the fundus
//! photograph. Modelling the capture as `I = D t + L (1 - t)`, this crate
//! estimates the lens-light `L` and the transmission `t` from a simplified
//! dark channel that is filtered by two global quadratic filters, then
//! inverts the model. It also ships the guided image filter used as the
//! comparison baseline, the contrast metrics used for evaluation and a
//! sparse-coding cup-to-disc-ratio estimator.
//!
//! Every raster and solver is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the element type for the common cases.

pub mod decloud;
pub mod error;
pub mod fgs;
pub mod gif;
pub mod metrics;
pub mod raster;
pub mod scalar;
pub mod sdc;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Plane64 = raster::Plane<f64>;
pub type Plane32 = raster::Plane<f32>;
pub type Rgb64 = raster::RgbImage<f64>;
pub type Rgb32 = raster::RgbImage<f32>;
pub type Field64 = fgs::VectorField<f64>;
pub type Field32 = fgs::VectorField<f32>;


pub type DecloudParams64 = decloud::DecloudParams<f64>;
pub type DecloudParams32 = decloud::DecloudParams<f32>;
pub type ReferenceSet64 = sdc::ReferenceSet<f64>;
pub type ReferenceSet32 = sdc::ReferenceSet<f32>;
