//! Full-reference video quality assessment built on a single HVS-aware
//! wavelet transform shared by every quality feature.

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod fusion;
pub mod integral;
pub mod pipeline;
pub mod plane;
pub mod scalar;
pub mod transform;
pub mod video_io;

pub use error::{Error, Result};
pub use plane::Plane;
pub use scalar::Real;

pub type Plane32 = Plane<f32>;
pub type Plane64 = Plane<f64>;
pub type Pyramid32 = transform::WaveletPyramid<f32>;
pub type Pyramid64 = transform::WaveletPyramid<f64>;
