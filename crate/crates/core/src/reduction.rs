//! Running the qutrit cycle on a contiguous three-level window
//! `A_k = {k, k+1, k+2}` of a passive qudit.

use crate::engine::{run_cycle, CycleOutcome, CycleParams};
use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;
use crate::oracle::{apply_cycle, build_cycle, JointState};
use crate::par::{self, Execution};
use crate::states::{DiagonalState, Hamiltonian};

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceWindow {
    pub start: usize,
    /// Probability mass `lambda` of the window.
    pub weight: f64,
    pub reduced_state: DiagonalState,
    pub reduced_hamiltonian: Hamiltonian,
}

pub fn decompose(p: &DiagonalState, h: &Hamiltonian, k: usize) -> Result<SubspaceWindow> {
    h.check(p)?;
    let d = p.dim();
    if d < 3 || k > d - 3 {
        return Err(Error::WindowOutOfRange { start: k, dim: d });
    }
    let window = &p.probs()[k..k + 3];
    let weight = neumaier_sum(window.iter().copied());
    if weight <= 0.0 {
        return Err(Error::EmptyWindow(k));
    }
    let e = &h.energies()[k..k + 3];
    Ok(SubspaceWindow {
        start: k,
        weight,
        reduced_state: DiagonalState::from_computed(window.iter().map(|x| x / weight).collect()),
        reduced_hamiltonian: Hamiltonian::qutrit(e[0], e[1], e[2])?,
    })
}

/// Cycle on window `k`, with extensive quantities scaled by the window
/// weight and the final state embedded back into `d` levels.
pub fn lifted_cycle(p: &DiagonalState, h: &Hamiltonian, k: usize, params: CycleParams) -> Result<CycleOutcome> {
    let w = decompose(p, h, k)?;
    let inner = run_cycle(&w.reduced_state, &w.reduced_hamiltonian, params)?;
    let lam = w.weight;
    let mut final_probs = p.probs().to_vec();
    for (i, x) in inner.final_system.probs().iter().enumerate() {
        final_probs[k + i] = lam * x;
    }
    Ok(CycleOutcome {
        delta_p: lam * inner.delta_p,
        work: lam * inner.work,
        q_hot: lam * inner.q_hot,
        q_cold: lam * inner.q_cold,
        heat_hot: lam * inner.heat_hot,
        heat_cold: lam * inner.heat_cold,
        alpha_coeff: lam * inner.alpha_coeff,
        final_system: DiagonalState::from_computed(final_probs),
        ..inner
    })
}

/// Window with the largest lifted work; ties go to the smallest `k`.
/// Windows on which the cycle is undefined are skipped.
pub fn best_window(p: &DiagonalState, h: &Hamiltonian, params: CycleParams) -> Result<(usize, CycleOutcome)> {
    best_window_with(p, h, params, Execution::default())
}

pub fn best_window_with(
    p: &DiagonalState,
    h: &Hamiltonian,
    params: CycleParams,
    exec: Execution,
) -> Result<(usize, CycleOutcome)> {
    h.check(p)?;
    if p.dim() < 3 {
        return Err(Error::WindowOutOfRange { start: 0, dim: p.dim() });
    }
    let starts: Vec<usize> = (0..=p.dim() - 3).collect();
    let results = par::map(exec, &starts, |&k| lifted_cycle(p, h, k, params));
    let mut best: Option<(usize, CycleOutcome)> = None;
    let mut first_err = None;
    for (k, r) in starts.into_iter().zip(results) {
        match r {
            Ok(out) => {
                if best.as_ref().is_none_or(|(_, b)| out.work > b.work) {
                    best = Some((k, out));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one window"))
}

/// Joint state after the cycle acts as a block unitary on `A_k (x)` machine
/// and trivially on the other system levels.
pub fn block_unitary_final(
    p: &DiagonalState,
    k: usize,
    params: CycleParams,
    machine: &DiagonalState,
) -> Result<JointState> {
    if p.dim() < 3 || k > p.dim() - 3 {
        return Err(Error::WindowOutOfRange { start: k, dim: p.dim() });
    }
    let steps: Vec<_> = build_cycle(params).into_iter().map(|s| s.shifted(k)).collect();
    apply_cycle(&JointState::product(p, machine), &steps)
}
