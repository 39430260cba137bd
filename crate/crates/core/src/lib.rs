//! Unsupervised nonlinear unmixing of hyperspectral images under the
//! polynomial post-nonlinear mixing model.
//!
//! Each pixel is modelled as `y = g_b(M a) + e` with `g_b(s) = s + b s*s`
//! applied per band, abundances `a` on the simplex, endmembers `M` in
//! `[0, 1]` and Gaussian noise with one variance per band. The posterior is
//! explored by a Gibbs sampler whose abundance and endmember blocks are
//! updated by constrained Hamiltonian Monte Carlo.

pub mod chmc;
pub mod cli;
pub mod error;
pub mod gibbs;
pub mod init;
pub mod io;
pub mod metrics;
pub mod model;
pub mod par;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use gibbs::{mmse_estimate, run, Chain, PriorConfig, SamplerConfig, UnmixResult};
pub use model::{
    AbundanceMatrix, EndmemberMatrix, LatentCoefficients, ModelState, NoiseVariances,
    NonlinearityVector, SpectralImage,
};
pub use par::Exec;
