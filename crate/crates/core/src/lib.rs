//! Reconstruction of images from undersampled k-space by total-variation
//! ADMM, with jackknife and bootstrap estimates of the pixelwise error that
//! need no ground truth, and a harness that checks those estimates when
//! ground truth exists.

pub mod config;
pub mod errbars;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kspace;
pub mod phantom;
pub mod render;
pub mod sampling;
pub mod tv;

pub use error::{Error, Result};
pub use grid::GridDims;
pub use kspace::{Image, KSpaceData, NoiseSpec};
