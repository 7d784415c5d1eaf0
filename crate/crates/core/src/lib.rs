//! Wavelet-domain detection of GAN-generated images.
//!
//! The crate covers the whole pipeline: Haar/db2 wavelet transforms, the
//! image preparation that turns a picture into a spatial or sub-band mosaic
//! tensor, dataset construction (ingestion, stratified splits, augmentation
//! and a synthetic real/fake generator), a compact CNN trained with Adam,
//! and ROC/AUC/AP evaluation.

pub mod data;
pub mod error;
pub mod experiment;
pub mod image;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod wavelet;

pub use error::{Error, Result};
