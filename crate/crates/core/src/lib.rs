//! Speech emotion recognition toolkit.
//!
//! Decodes WAV audio, extracts MFCC features, and classifies seven emotion
//! classes with a from-scratch LSTM trained by backpropagation through time,
//! plus a one-vs-one RBF-kernel SVM baseline trained by SMO on mean-pooled
//! features. Everything is deterministic under a fixed seed.

pub mod audio;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod model;
pub mod rng;
pub mod svm;
pub mod train;
