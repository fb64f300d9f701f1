//! Two-rate multi-robot navigation: a coupled, full-horizon multi-agent
//! pathfinder over continuous 3-D space feeding decoupled per-robot LQ
//! trajectory trackers on simulated double-integrator plants.
//!
//! The crate is organised bottom-up:
//!
//! - [`workspace`]: obstacles and collision queries,
//! - [`roadmap`]: per-agent lattice roadmaps, cost-to-go and descent directions,
//! - [`planner`]: configuration-space search with lazy successor generation
//!   and anytime refinement, plus an independent plan checker,
//! - [`tracking`]: path interpolation, LQ gains, control law and plant,
//! - [`runtime`]: the closed replanning loop, missions, metrics and benchmarks,
//! - [`scenario`]: the JSON scenario schema shared by the CLI.

pub mod planner;
pub mod rng;
pub mod roadmap;
pub mod runtime;
pub mod scenario;
pub mod tracking;
pub mod workspace;

/// Positions, velocities and directions in meters (or m/s, m/s²).
pub type Point3 = nalgebra::Vector3<f64>;
