//! Augmentation policy search for semantic segmentation.
//!
//! The crate implements the full experimental loop for tuning image
//! augmentations on a segmentation task: a patch/split data pipeline
//! ([`imgdata`]), a magnitude-scheduled augmentation library ([`augment`]),
//! confusion-matrix metrics and significance tests ([`metrics`]), a small
//! trainable fully-convolutional segmenter ([`toyseg`]), a tree-structured
//! Parzen estimator over the discrete `(M, N)` policy space ([`tpe`]), and
//! the experiment protocols that tie them together ([`search`]): baseline
//! trials, policy search, per-augmentation ablation, and k-fold
//! cross-validation.
//!
//! Everything is deterministic per seed: a run is fully reproducible from
//! its resolved configuration snapshot.

pub mod augment;
pub mod imgdata;
pub mod metrics;
pub mod rng;
pub mod search;
pub mod toyseg;
pub mod tpe;
