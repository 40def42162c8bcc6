//! ECG-only blood pressure estimation.
//!
//! The pipeline runs in stages, one module each:
//!
//! - [`signalio`]: paired ECG/ABP records, 15 s segmentation and BP labels
//! - [`dsp`]: FFT band mask, min-max normalization, linear resampling
//! - [`ampd`]: automatic multiscale peak detection for R peaks
//! - [`features`]: whole-beat feature vectors and dataset assembly
//! - [`pca`]: covariance PCA on a cyclic Jacobi eigensolver
//! - [`boost`]: AdaBoost.R2 over weighted regression trees
//! - [`eval`]: subject-disjoint cross-validation, BHS/AAMI grading, Bland-Altman
//! - [`synth`]: synthetic paired ECG/ABP corpus with ground truth
//! - [`cli`]: subcommand front end

pub mod ampd;
pub mod boost;
pub mod cli;
pub mod config;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod pca;
pub mod rng;
pub mod signalio;
pub mod synth;

pub use error::{Error, Result};
