//! The infinite-machine limit: asymptotic machine distribution, the
//! admissible range of `alpha = n/m`, and quasi-static trajectories that
//! carry a passive qutrit to the thermal manifold.
//!
//! Trajectories integrate
//!
//! ```text
//! dp0/dt = (p1-p2)^2 (p0-p1)^2 / (p1 (p0-p2)^2)
//! dp1/dt = -(1 + alpha) dp0/dt
//! ```
//!
//! with classic RK4. The thermal manifold is reached in finite time; steps
//! are halved until they land within `TERMINATION_TOL` of it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::geometric_sum;
use crate::error::{Error, Result};
use crate::states::{
    beta_from_entropy, diagram_point, is_passive, mean_energy, thermal_state, DiagonalState, DiagramPoint,
    Hamiltonian,
};

/// Tolerance on the log-gap `upper ln(p1/p2) - ln(p0/p1)` at which a state
/// counts as thermal.
pub const TERMINATION_TOL: f64 = 1e-10;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;
const MIN_STEP: f64 = 1e-20;

/// Bounds on `alpha`: `ln(p0/p1)/ln(p1/p2)` (entropy conserving) and
/// `dE10/dE21` (energy conserving).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    pub lower: f64,
    pub upper: f64,
}

impl AlphaRange {
    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lower && alpha <= self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    fn clamp(&self, alpha: f64) -> f64 {
        alpha.max(self.lower).min(self.upper)
    }
}

fn check_qutrit(p: &DiagonalState, h: &Hamiltonian) -> Result<()> {
    h.require_qutrit()?;
    h.check(p)?;
    p.require_strictly_positive()?;
    if h.gap10() <= 0.0 {
        return Err(Error::DegenerateGap(0, 1));
    }
    if h.gap21() <= 0.0 {
        return Err(Error::DegenerateGap(1, 2));
    }
    Ok(())
}

fn bounds_at(x: [f64; 3], upper: f64) -> AlphaRange {
    AlphaRange {
        lower: (x[0] / x[1]).ln() / (x[1] / x[2]).ln(),
        upper,
    }
}

pub fn alpha_range(p: &DiagonalState, h: &Hamiltonian) -> Result<AlphaRange> {
    check_qutrit(p, h)?;
    let q = p.probs();
    let range = bounds_at([q[0], q[1], q[2]], h.gap10() / h.gap21());
    // lower < upper is exactly beta_hot < beta_cold
    if !(range.lower < range.upper) {
        return Err(Error::EmptyAlphaRange {
            lower: range.lower,
            upper: range.upper,
        });
    }
    Ok(range)
}

/// Large-`m` stationary machine: a `lambda`-weighted mixture of a thermal
/// tail at `beta_hot` over the first `m` levels and one at `beta_cold` over
/// the next `n - 2`; the top two levels carry vanishing weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMachine {
    pub m: usize,
    pub n: usize,
    pub mixture_weight: f64,
    /// `exp(-beta_hot dE10) = p1/p0`.
    pub hot_ratio: f64,
    /// `exp(-beta_cold dE21) = p2/p1`.
    pub cold_ratio: f64,
    pub z_hot: f64,
    pub z_cold: f64,
}

impl AsymptoticMachine {
    pub fn distribution(&self) -> DiagonalState {
        let lam = self.mixture_weight;
        let mut q = Vec::with_capacity(self.m + self.n);
        let mut w = 1.0;
        for _ in 0..self.m {
            q.push(lam * w / self.z_hot);
            w *= self.hot_ratio;
        }
        let mut w = 1.0;
        for _ in 0..self.n - 2 {
            q.push((1.0 - lam) * w / self.z_cold);
            w *= self.cold_ratio;
        }
        q.extend([0.0, 0.0]);
        DiagonalState::from_computed(q)
    }
}

/// `lambda = (1 - e^{-beta_cold dE21}) / (1 - e^{-beta_hot dE10 - beta_cold dE21})`.
pub fn mixture_weight(p: &DiagonalState) -> Result<f64> {
    p.require_strictly_positive()?;
    let q = p.probs();
    let (hot, cold) = (q[1] / q[0], q[2] / q[1]);
    Ok((1.0 - cold) / (1.0 - hot * cold))
}

pub fn asymptotic_machine(p: &DiagonalState, h: &Hamiltonian, m: usize, alpha: f64) -> Result<AsymptoticMachine> {
    let range = alpha_range(p, h)?;
    if !range.contains(alpha) {
        return Err(Error::AlphaOutOfRange {
            alpha,
            lower: range.lower,
            upper: range.upper,
        });
    }
    let n = (alpha * m as f64).ceil() as usize;
    if m == 0 || n < 3 {
        return Err(Error::InvalidCycle(format!(
            "asymptotic machine needs m >= 1 and n = ceil(alpha m) >= 3, got m = {m}, n = {n}"
        )));
    }
    let q = p.probs();
    let (hot_ratio, cold_ratio) = (q[1] / q[0], q[2] / q[1]);
    Ok(AsymptoticMachine {
        m,
        n,
        mixture_weight: mixture_weight(p)?,
        hot_ratio,
        cold_ratio,
        z_hot: geometric_sum(m as i64 - 1, hot_ratio),
        z_cold: geometric_sum(n as i64 - 3, cold_ratio),
    })
}

/// `c` in `dP ~ c (p1/p0)^m`.
pub fn asymptotic_delta_p_prefactor(p: &DiagonalState) -> Result<f64> {
    let q = p.probs();
    if q.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: q.len(),
        });
    }
    if !(q[0] > q[1] && q[1] > q[2] && q[2] > 0.0) {
        return Err(Error::InvalidState(format!(
            "prefactor needs p0 > p1 > p2 > 0, got {q:?}"
        )));
    }
    Ok(flow_rate([q[0], q[1], q[2]]))
}

/// Common factor of both time derivatives.
fn flow_rate(x: [f64; 3]) -> f64 {
    let (a, b, c) = (x[1] - x[2], x[0] - x[1], x[0] - x[2]);
    (a * a) * (b * b) / (x[1] * c * c)
}

pub type AlphaFn = dyn Fn(&DiagonalState, AlphaRange) -> f64 + Send + Sync;

/// Choice of `alpha(t)` along a trajectory.
#[derive(Clone)]
pub enum Strategy {
    /// `alpha = dE10/dE21`: energy is conserved, no work.
    EnergyConserving,
    /// `alpha = ln(p0/p1)/ln(p1/p2)`: entropy is conserved, maximal work.
    EntropyConserving,
    /// Fixed `alpha`, clamped into the current range.
    Constant(f64),
    /// User callback, clamped into the current range.
    Custom(Arc<AlphaFn>),
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::EnergyConserving => f.write_str("EnergyConserving"),
            Strategy::EntropyConserving => f.write_str("EntropyConserving"),
            Strategy::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            Strategy::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Strategy {
    fn alpha(&self, x: [f64; 3], upper: f64) -> f64 {
        let range = bounds_at(x, upper);
        match self {
            Strategy::EnergyConserving => range.upper,
            Strategy::EntropyConserving => range.lower,
            Strategy::Constant(a) => range.clamp(*a),
            Strategy::Custom(f) => range.clamp(f(&DiagonalState::from_computed(x.to_vec()), range)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Log-gap fell below `TERMINATION_TOL`.
    ReachedThermal,
    /// Initial state already thermal.
    StartedThermal,
    /// The flow rate vanished before reaching the thermal manifold.
    Stationary,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: DiagonalState,
    pub point: DiagramPoint,
    pub alpha: f64,
    /// Work accumulated up to `t`.
    pub work: f64,
    pub heat_hot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub accumulated_work: f64,
    pub accumulated_heat_hot: f64,
    /// Mean of the two virtual inverse temperatures at the last sample.
    pub endpoint_beta: f64,
    pub termination: Termination,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn endpoint(&self) -> &DiagonalState {
        &self.samples.last().expect("trajectory has samples").state
    }
}

struct Flow<'a> {
    upper: f64,
    strategy: &'a Strategy,
}

impl Flow<'_> {
    fn point(x: [f64; 2]) -> Option<[f64; 3]> {
        let p2 = 1.0 - x[0] - x[1];
        let ok = x.iter().all(|v| v.is_finite()) && p2 > 0.0 && x[1] > p2 && x[0] >= x[1];
        ok.then_some([x[0], x[1], p2])
    }

    /// Log-gap; positive inside `R1`.
    fn gap(&self, p: [f64; 3]) -> f64 {
        self.upper * (p[1] / p[2]).ln() - (p[0] / p[1]).ln()
    }

    fn field(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let p = Self::point(x)?;
        let alpha = self.strategy.alpha(p, self.upper);
        if !alpha.is_finite() {
            return None;
        }
        let g = flow_rate(p);
        Some([g, -(1.0 + alpha) * g])
    }

    fn rk4(&self, x: [f64; 2], h: f64) -> Option<[f64; 2]> {
        let add = |a: [f64; 2], k: [f64; 2], c: f64| [a[0] + c * k[0], a[1] + c * k[1]];
        let k1 = self.field(x)?;
        let k2 = self.field(add(x, k1, h / 2.0))?;
        let k3 = self.field(add(x, k2, h / 2.0))?;
        let k4 = self.field(add(x, k3, h))?;
        Some([
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ])
    }
}

/// Time derivative `(dp0/dt, dp1/dt)`; zero on the thermal manifold.
pub fn vector_field(p: &DiagonalState, h: &Hamiltonian, strategy: &Strategy) -> Result<[f64; 2]> {
    check_qutrit(p, h)?;
    let flow = Flow {
        upper: h.gap10() / h.gap21(),
        strategy,
    };
    let q = p.probs();
    let x = [q[0], q[1], q[2]];
    if flow.gap(x).abs() <= TERMINATION_TOL {
        return Ok([0.0, 0.0]);
    }
    flow.field([q[0], q[1]])
        .ok_or_else(|| Error::InvalidState(format!("vector field undefined at {q:?}")))
}

fn sample(t: f64, x: [f64; 3], h: &Hamiltonian, alpha: f64, work: f64, heat_hot: f64) -> Result<TrajectorySample> {
    let state = DiagonalState::from_computed(x.to_vec());
    Ok(TrajectorySample {
        t,
        point: diagram_point(&state, h)?,
        state,
        alpha,
        work,
        heat_hot,
    })
}

pub fn integrate_trajectory(
    p0: &DiagonalState,
    h: &Hamiltonian,
    strategy: &Strategy,
    step: f64,
    max_steps: usize,
) -> Result<Trajectory> {
    check_qutrit(p0, h)?;
    if !(step > 0.0) {
        return Err(Error::StepRejected(0.0));
    }
    if !is_passive(p0, h)? {
        return Err(Error::NotPassive);
    }
    let (g10, g21) = (h.gap10(), h.gap21());
    let flow = Flow {
        upper: g10 / g21,
        strategy,
    };
    let q = p0.probs();
    let mut x = [q[0], q[1], q[2]];
    let gap0 = flow.gap(x);
    if gap0 < -TERMINATION_TOL {
        return Err(Error::NotInR1);
    }
    let mut alpha = strategy.alpha(x, flow.upper);
    let mut samples = vec![sample(0.0, x, h, alpha, 0.0, 0.0)?];
    let (mut t, mut work, mut heat) = (0.0, 0.0, 0.0);
    let mut dt = step;
    let mut rejected = 0;
    let mut termination = if gap0 <= TERMINATION_TOL {
        Termination::StartedThermal
    } else {
        Termination::MaxSteps
    };
    if termination == Termination::MaxSteps {
        for _ in 0..max_steps {
            if flow_rate(x) == 0.0 {
                termination = Termination::Stationary;
                break;
            }
            let next = loop {
                let candidate = flow.rk4([x[0], x[1]], dt).and_then(Flow::point);
                match candidate {
                    Some(y) if flow.gap(y) >= -TERMINATION_TOL => break y,
                    _ => {
                        rejected += 1;
                        dt *= 0.5;
                        if dt < MIN_STEP {
                            return Err(Error::StepRejected(t));
                        }
                    }
                }
            };
            let next_alpha = strategy.alpha(next, flow.upper);
            let dp0 = next[0] - x[0];
            work += 0.5 * ((g10 - alpha * g21) + (g10 - next_alpha * g21)) * dp0;
            heat += g10 * dp0;
            t += dt;
            x = next;
            alpha = next_alpha;
            samples.push(sample(t, x, h, alpha, work, heat)?);
            if flow.gap(x) <= TERMINATION_TOL {
                termination = Termination::ReachedThermal;
                break;
            }
        }
    }
    let beta_hot = (x[0] / x[1]).ln() / g10;
    let beta_cold = (x[1] / x[2]).ln() / g21;
    Ok(Trajectory {
        samples,
        accumulated_work: work,
        accumulated_heat_hot: heat,
        endpoint_beta: 0.5 * (beta_hot + beta_cold),
        termination,
        rejected_steps: rejected,
    })
}

/// `<H>(p) - <H>(tau_beta_max)` with `S(tau_beta_max) = S(p)`.
pub fn optimal_work(p: &DiagonalState, h: &Hamiltonian) -> Result<f64> {
    if !is_passive(p, h)? {
        return Err(Error::NotPassive);
    }
    let beta = beta_from_entropy(p.entropy(), h)?;
    let w = mean_energy(p, h)? - mean_energy(&thermal_state(beta, h), h)?;
    Ok(w.max(0.0))
}

/// `1 - alpha dE21 / dE10`.
pub fn instantaneous_efficiency(h: &Hamiltonian, alpha: f64) -> f64 {
    1.0 - alpha * h.gap21() / h.gap10()
}

/// `1 - beta_hot / beta_cold` of the current state.
pub fn instantaneous_carnot(p: &DiagonalState, h: &Hamiltonian) -> Result<f64> {
    check_qutrit(p, h)?;
    let q = p.probs();
    let beta_hot = (q[0] / q[1]).ln() / h.gap10();
    let beta_cold = (q[1] / q[2]).ln() / h.gap21();
    Ok(1.0 - beta_hot / beta_cold)
}

/// Largest deviation of the instantaneous efficiency from the instantaneous
/// Carnot value along the entropy-conserving trajectory from `p`.
pub fn carnot_check(p: &DiagonalState, h: &Hamiltonian) -> Result<f64> {
    alpha_range(p, h).map_err(|_| Error::NotInR1)?;
    let traj = integrate_trajectory(p, h, &Strategy::EntropyConserving, DEFAULT_STEP, DEFAULT_MAX_STEPS)?;
    let mut worst = 0.0f64;
    for s in &traj.samples {
        let dev = (instantaneous_efficiency(h, s.alpha) - instantaneous_carnot(&s.state, h)?).abs();
        worst = worst.max(dev);
    }
    Ok(worst)
}
