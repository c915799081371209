//! Planar contact SLAM: localizing a grasped polygonal object against
//! environment features of unknown pose from tactile wrench feedback alone.

pub mod cli;
pub mod estimation;
pub mod exploration;
pub mod geometry;
pub mod rng;
pub mod simulator;
pub mod tactile;
