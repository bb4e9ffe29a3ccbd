//! Coded aperture snapshot spectral imaging (CASSI) simulation and
//! reconstruction by damped approximate message passing with an adaptive
//! Wiener denoiser in a wavelet x DCT domain.
//!
//! The pieces, bottom up:
//!
//! * [`cube`]: spectral cubes, binary apertures, measurement vectors.
//! * [`operator`]: the matrix-free sensing operator `H` and its adjoint.
//! * [`transform`]: the orthonormal wavelet x DCT transform and its subbands.
//! * [`wiener`]: subband Wiener shrinkage and its average derivative.
//! * [`amp`]: the reconstruction loop.
//! * [`metrics`]: PSNR and SNR-calibrated noise.
//! * [`io`]: binary cube, aperture and measurement files.

pub mod amp;
pub mod cli;
pub mod cube;
pub mod error;
pub mod io;
pub mod metrics;
pub mod operator;
pub mod rng;
pub mod synthetic;
pub mod transform;
pub mod wavelet;
pub mod wiener;

pub use amp::{run_amp, IterationReport, SolverConfig};
pub use cube::{CodedAperture, HyperCube, MeasurementVector};
pub use error::{Error, Result};
pub use operator::{CassiModel, Order};
pub use transform::TransformSpec;
pub use wavelet::WaveletFamily;
