//! Sequential "look where it helps" image classification: images are
//! decomposed into a foveated Haar wavelet pyramid and read one multiscale
//! visual field at a time, each gaze chosen to shrink the posterior entropy
//! over the digit classes until a recognition threshold is met.
//!
//! The pipeline, module by module:
//!
//! - [`mnist`] — IDX ingestion into normalized grayscale rasters
//! - [`haar`] — orthonormal Haar pyramid, viewpoints, visual fields,
//!   partial reconstruction
//! - [`models`] — per-(class, viewpoint) Bernoulli-gated Gaussians, the
//!   root-coefficient prior, training and the model-file container
//! - [`belief`] — posterior vector with entropy and log-odds updates
//! - [`policy`] — predictive, saliency-map, random and Monte-Carlo gaze
//!   selection over the dynamic actions set
//! - [`explore`] — the saccadic exploration loop and its traces
//! - [`eval`] — exhaustive baseline, policy/threshold sweeps, reports

pub mod belief;
pub mod error;
pub mod eval;
pub mod explore;
pub mod haar;
pub mod mnist;
pub mod models;
pub mod pgm;
pub mod policy;

pub use belief::Belief;
pub use error::{Error, Result};
pub use explore::{compression_ratio, explore, ExplorationConfig, ExplorationTrace, StopReason};
pub use haar::{CoeffTriplet, Geometry, Raster, Viewpoint, VisualField, WaveletPyramid};
pub use mnist::{Dataset, LabeledImage, RawImage, Split};
pub use models::{ModelBank, RootModel, WeakModel};
pub use policy::{ActionSet, PolicyKind, SaliencyMap};
