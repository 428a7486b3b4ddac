//! Activation of passive states: comparison of cycle work with ergotropy and
//! the optimal bound, plus free-energy bookkeeping when a thermal bath is
//! appended to the cycle.

use serde::{Deserialize, Serialize};

use crate::engine::CycleOutcome;
use crate::error::{Error, Result};
use crate::oracle::{mutual_information, JointState};
use crate::quasistatic::optimal_work;
use crate::states::{ergotropy, mean_energy, passify, relative_entropy, thermal_state, Beta, DiagonalState, Hamiltonian};

/// Allowed drift of the ancilla marginal.
pub const REUSABILITY_TOL: f64 = 1e-10;
const ENTROPY_SLACK: f64 = 1e-12;
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationReport {
    pub work_cycle: f64,
    pub ergotropy_value: f64,
    /// Cycle work beats every unitary on the system alone.
    pub activated: bool,
    /// `<H>(final) < <H>(passify(p))`.
    pub energy_ok: bool,
    /// `S(final) >= S(p)`.
    pub entropy_ok: bool,
}

pub fn assess_activation(p: &DiagonalState, h: &Hamiltonian, outcome: &CycleOutcome) -> Result<ActivationReport> {
    let ergotropy_value = ergotropy(p, h)?;
    let final_energy = mean_energy(&outcome.final_system, h)?;
    let passive_energy = mean_energy(&passify(p, h)?, h)?;
    Ok(ActivationReport {
        work_cycle: outcome.work,
        ergotropy_value,
        activated: outcome.work > ergotropy_value,
        energy_ok: final_energy < passive_energy,
        entropy_ok: outcome.final_system.entropy() >= p.entropy() - ENTROPY_SLACK,
    })
}

/// `outcome.work <= optimal_work(p, h)` up to rounding.
pub fn optimal_bound_check(p: &DiagonalState, h: &Hamiltonian, outcome: &CycleOutcome) -> Result<bool> {
    Ok(outcome.work <= optimal_work(p, h)? + BOUND_SLACK)
}

/// `<H> - S / beta`; undefined at `beta = 0`.
pub fn free_energy(state: &DiagonalState, h: &Hamiltonian, beta: f64) -> Result<Option<f64>> {
    let e = mean_energy(state, h)?;
    Ok((beta > 0.0).then(|| e - state.entropy() / beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathLedger {
    pub beta: f64,
    pub free_energy_initial: Option<f64>,
    pub free_energy_thermal: Option<f64>,
    /// Work released by the cycle, `<H>(p) - <H>(final)`.
    pub delta_w1: f64,
    /// Work released by thermalising the final system, `(D + I) / beta`.
    pub delta_w2: Option<f64>,
    /// Heat drawn from the bath, `(S(tau) - S(p)) / beta`.
    pub q2: Option<f64>,
    pub mutual_info: f64,
    /// `D(final || tau_beta)`.
    pub relative_entropy: f64,
}

impl BathLedger {
    /// `delta_w1 + delta_w2 - (F(p) - F(tau))`; `None` at `beta = 0`.
    pub fn identity_residual(&self) -> Option<f64> {
        Some(self.delta_w1 + self.delta_w2? - (self.free_energy_initial? - self.free_energy_thermal?))
    }
}

pub fn bath_ledger(
    p: &DiagonalState,
    h: &Hamiltonian,
    final_joint: &JointState,
    ancilla_initial: &DiagonalState,
    beta: f64,
) -> Result<BathLedger> {
    let ancilla = final_joint.machine_marginal();
    if ancilla.dim() != ancilla_initial.dim() {
        return Err(Error::DimensionMismatch {
            expected: ancilla_initial.dim(),
            actual: ancilla.dim(),
        });
    }
    let drift = ancilla.max_abs_diff(ancilla_initial);
    if drift > REUSABILITY_TOL {
        return Err(Error::ReusabilityViolated(drift));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidState(format!("bath inverse temperature {beta}")));
    }
    let system = final_joint.system_marginal();
    let tau = thermal_state(Beta::Finite(beta), h);
    let mut d = relative_entropy(&system, &tau)?;
    if (-1e-14..0.0).contains(&d) {
        d = 0.0;
    }
    let info = mutual_information(final_joint);
    let positive = (beta > 0.0).then_some(beta);
    Ok(BathLedger {
        beta,
        free_energy_initial: free_energy(p, h, beta)?,
        free_energy_thermal: free_energy(&tau, h, beta)?,
        delta_w1: mean_energy(p, h)? - mean_energy(&system, h)?,
        delta_w2: positive.map(|b| (d + info) / b),
        q2: positive.map(|b| (tau.entropy() - p.entropy()) / b),
        mutual_info: info,
        relative_entropy: d,
    })
}
