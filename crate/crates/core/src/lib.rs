//! Simulation and reconstruction for focal-plane-array compressive imaging.
//!
//! A DMD codes the scene at high resolution and a small K×K sensor reads
//! one coded sum per block of mirrors, acting as K² single-pixel cameras in
//! parallel. This crate provides the forward model, the modulation pattern
//! generators, a monotone FISTA solver with isotropic 2D/3D total variation,
//! impulse-scan calibration, and the evaluation tools (rates, PSNR/SSIM,
//! MTF, sweeps, median filtering, synthetic scenes).

pub mod analysis;
pub mod calib;
mod error;
mod frame;
pub mod io;
pub mod linalg;
pub mod model;
pub mod patterns;
pub mod recon;
pub mod seed;
mod sparse;

pub use error::{Error, Result};
pub use frame::{Frame, HiResFrame, SensorFrame, VideoCube, Volume, VolumeShape};
pub use model::{
    adjoint, build_map, forward, simulate_capture, stack, stack_video, GeometryConfig, NoiseSpec,
    OpticsConfig, Scene, StackedSystem,
};
pub use patterns::{
    hadamard_sequence, pixel_scan_sequence, random_binary_sequence, DmdPattern, PatternKind,
    PatternSequence,
};
pub use recon::{solve, SolverConfig, TvKind};
pub use sparse::SparseMap;
