//! Comparison controllers and the grid oracle that normalizes costs.

mod cbf;
mod cem;
mod gp;
mod offline;
mod oracle;
mod qp;

pub use cbf::{
    barrier_constraint, cbf_qp_action, filter_nominal, nominal_action, static_conservative_action, swept_barriers,
    workspace_constraints, Barrier, CbfQpController, QpAction, StaticConservativeController, CBF_GAMMA,
};
pub use cem::{cem_search, CemConfig, CemController, CemOutcome};
pub use gp::{barrier_value, gp_cbf_action, GpCbfController, GpConstraintModel};
pub use offline::{OfflineContextualController, OfflineDrgdController, OFFLINE_SAMPLES};
pub use oracle::{oracle_action, oracle_action_on, OracleController, ORACLE_GRID};
pub use qp::{max_feasible_scale, project, LinearConstraint, QpOutcome};
