//! Passive-state swap-cycle engines: a qutrit system coupled to a machine of
//! trivial Hamiltonian by cyclic swaps, with closed-form stationary machines,
//! an explicit joint-state oracle, activation regions, qudit reduction,
//! quasi-static trajectories and activation bookkeeping.

pub mod activation;
pub mod engine;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod par;
pub mod quasistatic;
pub mod reduction;
pub mod regions;
pub mod states;

pub use activation::{assess_activation, bath_ledger, optimal_bound_check, ActivationReport, BathLedger};
pub use engine::{machine_distribution, run_cycle, CycleOutcome, CycleParams, SolverRoute};
pub use error::{Error, Result};
pub use oracle::{simulate_cycle, stationary_machine, JointState};
pub use par::Execution;
pub use quasistatic::{integrate_trajectory, optimal_work, Strategy, Trajectory};
pub use regions::{classify, coverage_fraction, RationalGapRatio, RegionLabel};
pub use states::{Beta, DiagonalState, Hamiltonian};
