//! Multi-model score-based diffusion reconstruction of undersampled MRI
//! k-space.
//!
//! A structure model works on radially weighted k-space and one or more
//! detail models work inside virtual masks. Each noise level runs a
//! predictor step, Langevin corrector steps and a data-consistency
//! projection per model, either in cascade or in parallel.
//!
//! ```
//! use std::sync::Arc;
//! use kdiff_core::grid::{ComplexGrid, Domain, RealGrid};
//! use kdiff_core::recon::{cascade_reconstruct, ModelSlot, ReconConfig};
//! use kdiff_core::sampling::{apply_forward, gen_random2d};
//! use kdiff_core::sde::{make_schedule, GaussianPrior, GaussianScore};
//!
//! let prior = GaussianPrior::new(
//!     ComplexGrid::zeros(8, 8, Domain::KSpace),
//!     RealGrid::new(8, 8, vec![1.0; 64]).unwrap(),
//! )
//! .unwrap();
//! let truth = ComplexGrid::zeros(8, 8, Domain::KSpace);
//! let pattern = gen_random2d(8, 8, 2.0, 2, 0).unwrap();
//! let meas = apply_forward(&truth, &pattern, 0.0, 0).unwrap();
//! let slot = ModelSlot::plain(Arc::new(GaussianScore::new("prior", prior)));
//! let cfg = ReconConfig::new(make_schedule(0.01, 10.0, 20).unwrap(), vec![slot]);
//! let out = cascade_reconstruct(&meas, &cfg).unwrap();
//! assert_eq!(out.kspace.shape(), (8, 8));
//! ```

pub mod commands;
pub mod entropy;
pub mod error;
pub mod fft;
pub mod grid;
pub mod io;
pub mod masks;
pub mod metrics;
pub mod recon;
pub mod sampling;
pub mod sde;

pub use error::{Error, Result};
