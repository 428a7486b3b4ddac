//! Brute-force reference for the swap cycle: the literal sequence of
//! transpositions acting on the joint distribution, and the machine fixed
//! point solved by linear algebra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::engine::{require_passive_qutrit, CycleParams};
use crate::error::{Error, Result};
use crate::numeric::{neumaier_sum, xlnx};
use crate::states::{mean_energy, DiagonalState, Hamiltonian, NORMALIZATION_TOL};

/// Largest machine dimension solved by dense LU by default.
pub const DIRECT_SOLVE_MAX_DIM: usize = 1024;
pub const POWER_ITERATION_TOL: f64 = 1e-13;
pub const POWER_ITERATION_MAX: usize = 1_000_000;
/// Negative fixed-point entries above this are treated as rounding noise.
pub const NEGATIVE_ENTRY_TOL: f64 = 1e-12;

/// Distribution over `(system level, machine level)` pairs, row-major in the
/// system index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    system_dim: usize,
    machine_dim: usize,
    probs: Vec<f64>,
}

impl JointState {
    pub fn new(system_dim: usize, machine_dim: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != system_dim * machine_dim {
            return Err(Error::DimensionMismatch {
                expected: system_dim * machine_dim,
                actual: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidState(format!("joint entry {p} is not a probability")));
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("joint mass {total}, not 1")));
        }
        Ok(Self {
            system_dim,
            machine_dim,
            probs,
        })
    }

    pub fn product(system: &DiagonalState, machine: &DiagonalState) -> Self {
        let probs = system
            .probs()
            .iter()
            .flat_map(|&a| machine.probs().iter().map(move |&b| a * b))
            .collect();
        Self {
            system_dim: system.dim(),
            machine_dim: machine.dim(),
            probs,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.system_dim, self.machine_dim)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.machine_dim + j]
    }

    pub fn system_marginal(&self) -> DiagonalState {
        DiagonalState::from_computed(
            self.probs
                .chunks(self.machine_dim)
                .map(|row| neumaier_sum(row.iter().copied()))
                .collect(),
        )
    }

    pub fn machine_marginal(&self) -> DiagonalState {
        DiagonalState::from_computed(
            (0..self.machine_dim)
                .map(|j| neumaier_sum((0..self.system_dim).map(|i| self.get(i, j))))
                .collect(),
        )
    }

    pub fn entropy(&self) -> f64 {
        -neumaier_sum(self.probs.iter().map(|&p| xlnx(p)))
    }
}

/// Transposition `|a>|e> <-> |b>|c>` of system pair `(a, b)` and machine
/// pair `(c, e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapStep {
    pub system: (usize, usize),
    pub machine: (usize, usize),
}

impl SwapStep {
    /// Same step acting on system levels shifted up by `offset`.
    pub fn shifted(self, offset: usize) -> Self {
        Self {
            system: (self.system.0 + offset, self.system.1 + offset),
            machine: self.machine,
        }
    }

    fn positions(&self, machine_dim: usize) -> (usize, usize) {
        let (a, b) = self.system;
        let (c, e) = self.machine;
        (a * machine_dim + e, b * machine_dim + c)
    }
}

/// The `m + n` transpositions of `S_{m,n}` in application order.
pub fn build_cycle(params: CycleParams) -> Vec<SwapStep> {
    let (m, n) = (params.m, params.n);
    let d = m + n;
    let mut steps = Vec::with_capacity(d);
    for j in 0..m - 1 {
        steps.push(SwapStep {
            system: (0, 1),
            machine: (j, j + 1),
        });
    }
    steps.push(SwapStep {
        system: (0, 1),
        machine: (m - 1, d - 1),
    });
    for j in (m..d - 1).rev() {
        steps.push(SwapStep {
            system: (1, 2),
            machine: (j, j + 1),
        });
    }
    steps.push(SwapStep {
        system: (1, 2),
        machine: (0, m),
    });
    steps
}

fn validate_steps(system_dim: usize, machine_dim: usize, steps: &[SwapStep]) -> Result<()> {
    for s in steps {
        let (a, b) = s.system;
        let (c, e) = s.machine;
        if a == b || c == e || a.max(b) >= system_dim || c.max(e) >= machine_dim {
            return Err(Error::InvalidCycle(format!(
                "swap {s:?} invalid for a {system_dim} x {machine_dim} joint space"
            )));
        }
    }
    Ok(())
}

pub fn apply_cycle(joint: &JointState, steps: &[SwapStep]) -> Result<JointState> {
    validate_steps(joint.system_dim, joint.machine_dim, steps)?;
    let mut out = joint.clone();
    for s in steps {
        let (x, y) = s.positions(joint.machine_dim);
        out.probs.swap(x, y);
    }
    Ok(out)
}

/// For every joint position after the cycle, the joint position its mass
/// came from.
fn source_permutation(system_dim: usize, machine_dim: usize, steps: &[SwapStep]) -> Vec<usize> {
    let mut src: Vec<usize> = (0..system_dim * machine_dim).collect();
    for s in steps {
        let (x, y) = s.positions(machine_dim);
        src.swap(x, y);
    }
    src
}

/// Sparse form of the linear map `q -> machine marginal of cycle(p (x) q)`:
/// triples `(target level, source level, weight)`.
fn transfer_entries(p: &DiagonalState, params: CycleParams) -> Vec<(usize, usize, f64)> {
    let d = params.dim();
    let src = source_permutation(p.dim(), d, &build_cycle(params));
    src.iter()
        .enumerate()
        .map(|(pos, &from)| (pos % d, from % d, p.probs()[from / d]))
        .collect()
}

/// Column-stochastic matrix `T` with `q' = T q`.
pub fn transfer_matrix(p: &DiagonalState, params: CycleParams) -> DMatrix<f64> {
    let d = params.dim();
    let mut t = DMatrix::zeros(d, d);
    for (to, from, w) in transfer_entries(p, params) {
        t[(to, from)] += w;
    }
    t
}

fn apply_transfer(entries: &[(usize, usize, f64)], q: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for &(to, from, w) in entries {
        out[to] += w * q[from];
    }
}

/// `max |q - T q|`.
pub fn fixed_point_residual(p: &DiagonalState, params: CycleParams, q: &DiagonalState) -> f64 {
    let entries = transfer_entries(p, params);
    let mut image = vec![0.0; params.dim()];
    apply_transfer(&entries, q.probs(), &mut image);
    image
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FixedPointSolver {
    /// Dense LU up to [`DIRECT_SOLVE_MAX_DIM`], power iteration beyond.
    #[default]
    Auto,
    Direct,
    PowerIteration,
}

pub fn stationary_machine(p: &DiagonalState, params: CycleParams) -> Result<DiagonalState> {
    stationary_machine_with(p, params, FixedPointSolver::Auto)
}

pub fn stationary_machine_with(
    p: &DiagonalState,
    params: CycleParams,
    solver: FixedPointSolver,
) -> Result<DiagonalState> {
    require_passive_qutrit(p)?;
    let raw = match solver {
        FixedPointSolver::Direct => direct_solve(p, params)?,
        FixedPointSolver::PowerIteration => power_iteration(p, params)?,
        FixedPointSolver::Auto if params.dim() <= DIRECT_SOLVE_MAX_DIM => direct_solve(p, params)?,
        FixedPointSolver::Auto => power_iteration(p, params)?,
    };
    clean_solution(raw)
}

fn direct_solve(p: &DiagonalState, params: CycleParams) -> Result<Vec<f64>> {
    let d = params.dim();
    let mut a = transfer_matrix(p, params) - DMatrix::identity(d, d);
    a.row_mut(d - 1).fill(1.0);
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let lu = a.lu();
    let u = lu.u();
    let pivots = u.diagonal().map(f64::abs);
    let (lo, hi) = (pivots.min(), pivots.max());
    if !(lo > f64::EPSILON * d as f64 * hi) {
        return Err(Error::SingularSystem);
    }
    lu.solve(&b)
        .map(|x| x.iter().copied().collect())
        .ok_or(Error::SingularSystem)
}

fn power_iteration(p: &DiagonalState, params: CycleParams) -> Result<Vec<f64>> {
    let d = params.dim();
    let entries = transfer_entries(p, params);
    let mut q = vec![1.0 / d as f64; d];
    let mut image = vec![0.0; d];
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATION_MAX {
        apply_transfer(&entries, &q, &mut image);
        residual = image
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= POWER_ITERATION_TOL {
            return Ok(q);
        }
        // damping removes the periodicity of the permutation chain
        for (x, y) in q.iter_mut().zip(&image) {
            *x = 0.5 * (*x + y);
        }
    }
    Err(Error::NoConvergence {
        iterations: POWER_ITERATION_MAX,
        residual,
    })
}

fn clean_solution(mut q: Vec<f64>) -> Result<DiagonalState> {
    if let Some((index, &value)) = q
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < -NEGATIVE_ENTRY_TOL)
    {
        return Err(Error::NegativeStationaryEntry { index, value });
    }
    q.iter_mut().for_each(|x| *x = x.max(0.0));
    let total = neumaier_sum(q.iter().copied());
    q.iter_mut().for_each(|x| *x /= total);
    Ok(DiagonalState::from_computed(q))
}

/// `S(system) + S(machine) - S(joint)` in nats, clipped at zero.
pub fn mutual_information(joint: &JointState) -> f64 {
    let i = joint.system_marginal().entropy() + joint.machine_marginal().entropy() - joint.entropy();
    if (-1e-14..0.0).contains(&i) {
        0.0
    } else {
        i
    }
}

/// One literal cycle on `p (x) q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCycle {
    pub initial: JointState,
    pub final_joint: JointState,
    pub system: DiagonalState,
    pub machine: DiagonalState,
    /// `<H>(p) - <H>(final system marginal)`.
    pub work: f64,
}

pub fn simulate_cycle(
    p: &DiagonalState,
    h: &Hamiltonian,
    params: CycleParams,
    q: &DiagonalState,
) -> Result<SimulatedCycle> {
    h.check(p)?;
    if q.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: q.dim(),
        });
    }
    let initial = JointState::product(p, q);
    let final_joint = apply_cycle(&initial, &build_cycle(params))?;
    let system = final_joint.system_marginal();
    let machine = final_joint.machine_marginal();
    let work = neumaier_sum(
        h.energies()
            .iter()
            .zip(p.probs().iter().zip(system.probs()))
            .map(|(e, (a, b))| e * (a - b)),
    );
    debug_assert!((work - (mean_energy(p, h)? - mean_energy(&system, h)?)).abs() < 1e-9);
    Ok(SimulatedCycle {
        initial,
        final_joint,
        system,
        machine,
        work,
    })
}
