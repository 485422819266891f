//! Penalized predictive control (PPC) driven by a black-box feasibility oracle.
//!
//! A Simulator draws feasible actions from an oracle, fits a Gaussian kernel
//! density estimate over them and hands the closed-form score
//! `∇ ln p̂(u)` to a Planner. The Planner descends the free energy
//!
//! ```text
//! F(u) = c(u) - β ln p̂(u)
//! ```
//!
//! and the Simulator retracts the candidate back into the learned
//! `α`-superlevel set by score ascent when needed.
//!
//! Modules:
//!
//! * [`env`]: the 2D dynamic-obstacle benchmark and its feasibility oracle.
//! * [`density`]: marginal and context-conditional KDE, level sets, curvature.
//! * [`controller`]: planner, safety filter, stiffness schedule, `ppc_step`.
//! * [`baselines`]: oracle, CBF-QP, GP-CBF, CEM, static conservative, offline DRGD.
//! * [`theory`]: grid-based numerical checks of the landscape and curvature results.
//! * [`experiments`]: metrics, the six experiment protocols and CSV persistence.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod controller;
pub mod density;
pub mod env;
pub mod experiments;
pub mod linalg;
pub mod rng;
pub mod theory;

pub use nalgebra::{Matrix2, Vector2};

/// Planar vector used for actions, positions and scores.
pub type Vec2 = Vector2<f64>;
/// 2×2 matrix used for Hessians and Fisher information.
pub type Mat2 = Matrix2<f64>;
