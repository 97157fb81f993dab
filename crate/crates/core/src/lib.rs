//! Pool-based active learning simulation for slice-wise segmentation of 3D scans.

pub mod interpolation;
pub mod learner;
pub mod pool;
pub mod simulation;
pub mod split;
pub mod strategies;
pub mod synthetic;
pub mod volume;
