//! Post-flight triage for 360° reconnaissance footage.
//!
//! The crate turns a directory of extracted equirectangular video frames
//! into a curated, localized panorama tour:
//!
//! 1. [`imaging`] scores each frame by the variance of its Laplacian.
//! 2. [`blur`] discards frames whose score falls below the mean of a
//!    sliding window of neighbouring scores.
//! 3. [`keyframe`] reduces redundant frames, or ingests a SLAM keyframe list.
//! 4. [`sfm`] reads the structure-from-motion `reconstruction.json`, recovers
//!    camera centres and exports the sparse cloud as PLY.
//! 5. [`tour`] links every panorama to its nearest neighbours and writes
//!    `tour.json` for the browser viewer.
//!
//! [`pipeline`] and [`cli`] wrap the stages as the `triage` command.

pub mod blur;
pub mod cli;
pub mod config;
pub mod error;
pub mod imaging;
pub mod keyframe;
pub mod pipeline;
pub mod sfm;
pub mod synthetic;
pub mod tour;

pub use error::{Error, Result};
