//! Closed-form evaluation of the swap cycle `S_{m,n}` between a passive
//! qutrit and an `(m+n)`-level machine with trivial Hamiltonian.
//!
//! The stationary machine distribution is written as positive sums of
//! products of the population ratios `r1 = p0/p1`, `r2 = p1/p2`, so no
//! cancellation occurs anywhere in the evaluation. Large cycles switch to
//! log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, neumaier_sum};
use crate::oracle;
use crate::states::{is_passive, DiagonalState, Hamiltonian};

/// Below this distance from 1 the geometric ratio is summed term by term.
pub const UNIT_RATIO_TOL: f64 = 1e-9;
/// Powers `r1^m`, `r2^n` above this trigger the log-space path.
pub const LOG_SPACE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CycleParams {
    /// Hot swaps on the `(0, 1)` pair.
    pub m: usize,
    /// Cold swaps on the `(1, 2)` pair.
    pub n: usize,
}

impl CycleParams {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidCycle(format!(
                "m and n must be positive, got m = {m}, n = {n}"
            )));
        }
        Ok(Self { m, n })
    }

    /// Machine dimension `m + n`.
    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Whether the positive-sum closed form applies.
    pub fn closed_form_valid(&self) -> bool {
        self.m >= 1 && self.n >= 2
    }
}

/// `sum_{l=0..h} lambda^l`, with `T(-1) = 0` and `T(-2) = -1/lambda`.
///
/// # Panics
/// If `h < -2`.
pub fn geometric_sum(h: i64, lambda: f64) -> f64 {
    assert!(h >= -2, "geometric_sum needs h >= -2, got {h}");
    match h {
        -2 => -1.0 / lambda,
        -1 => 0.0,
        _ if (1.0 - lambda).abs() <= UNIT_RATIO_TOL => {
            let mut term = 1.0;
            let mut total = 0.0;
            for _ in 0..=h {
                total += term;
                term *= lambda;
            }
            total
        }
        _ => {
            // (1 - lambda^(h+1)) / (1 - lambda) without cancellation near 1
            let ln_lambda = lambda.ln();
            ((h + 1) as f64 * ln_lambda).exp_m1() / ln_lambda.exp_m1()
        }
    }
}

/// `ln T(h, lambda)` from `ln lambda`; `-inf` for `h = -1`.
fn ln_geometric_sum(h: i64, ln_lambda: f64) -> f64 {
    debug_assert!(h >= -1);
    if h < 0 {
        return f64::NEG_INFINITY;
    }
    let k = (h + 1) as f64;
    if ln_lambda.exp_m1().abs() <= UNIT_RATIO_TOL {
        let terms: Vec<f64> = (0..=h).map(|l| l as f64 * ln_lambda).collect();
        return log_sum_exp(&terms);
    }
    if ln_lambda > 0.0 {
        k * ln_lambda + (-(-k * ln_lambda).exp_m1()).ln() - ln_lambda.exp_m1().ln()
    } else {
        (-(k * ln_lambda).exp_m1()).ln() - (-ln_lambda.exp_m1()).ln()
    }
}

/// Literal coefficient quantities of the closed-form solution, kept for
/// cross-checking the positive-sum evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub r1: f64,
    pub r2: f64,
    pub params: CycleParams,
}

impl CoefficientTable {
    pub fn new(p: &DiagonalState, params: CycleParams) -> Result<Self> {
        let (r1, r2) = ratios(p)?;
        Ok(Self { r1, r2, params })
    }

    pub fn t1(&self, h: i64) -> f64 {
        geometric_sum(h, self.r1)
    }

    pub fn t2(&self, h: i64) -> f64 {
        geometric_sum(h, self.r2)
    }

    /// `D(m, n)`, the ratio `q_{m+n-2} / q_{m+n-1}`.
    pub fn d(&self) -> f64 {
        let (m, n) = (self.params.m as i64, self.params.n as i64);
        self.r2 * (self.t1(m) + self.r2 * self.t2(n - 2)) / (self.t1(m - 1) + self.r2 * self.t2(n - 1))
    }

    /// Normalized population of the top machine level as the literal ratio
    /// of geometric sums.
    pub fn last_level_probability(&self) -> f64 {
        let (m, n) = (self.params.m as i64, self.params.n as i64);
        let num = self.t1(m) + self.r2 * self.t2(n - 2);
        let den = self.t1(m - 1) + self.r2 * self.t2(n - 1);
        let sum_t1: f64 = (0..=m).map(|j| self.t1(j)).sum();
        let sum_t2: f64 = (0..=n - 3).map(|j| self.t2(j)).sum();
        let bracket = self.r2.powi(n as i32) - self.r1.powi(m as i32);
        den / (num * num + bracket * (sum_t1 - self.r2 * sum_t2))
    }

    /// Machine distribution from the literal difference formulas. Suffers
    /// cancellation for large cycles; use [`machine_distribution`].
    pub fn literal_distribution(&self) -> Vec<f64> {
        let (m, n) = (self.params.m as i64, self.params.n as i64);
        let d = self.d();
        let last = self.last_level_probability();
        let mut q = Vec::with_capacity((m + n) as usize);
        for j in 0..m {
            q.push((self.t1(m - j) - d / self.r2 * self.t1(m - j - 1)) * last);
        }
        for j in m..m + n - 2 {
            q.push((self.t2(m + n - j - 2) * d - self.r2 * self.t2(m + n - j - 3)) * last);
        }
        q.push(d * last);
        q.push(last);
        q
    }
}

/// Which path produced a [`CycleOutcome`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverRoute {
    ClosedForm,
    ClosedFormLogSpace,
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleOutcome {
    pub params: CycleParams,
    pub delta_p: f64,
    pub work: f64,
    pub q_hot: f64,
    pub q_cold: f64,
    pub heat_hot: f64,
    pub heat_cold: f64,
    /// `1 - n dE21 / (m dE10)`, only meaningful when `work > 0`.
    pub efficiency: f64,
    pub efficiency_meaningful: bool,
    pub final_system: DiagonalState,
    pub machine: DiagonalState,
    /// Positive factor with `delta_p = alpha_coeff * (r2^n - r1^m)`.
    pub alpha_coeff: f64,
    /// Set when the cycle inverted the populations of levels 1 and 2.
    pub final_state_active: bool,
    pub route: SolverRoute,
}

impl CycleOutcome {
    pub fn efficiency_if_meaningful(&self) -> Option<f64> {
        self.efficiency_meaningful.then_some(self.efficiency)
    }
}

fn ratios(p: &DiagonalState) -> Result<(f64, f64)> {
    if p.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: p.dim(),
        });
    }
    p.require_strictly_positive()?;
    let q = p.probs();
    Ok((q[0] / q[1], q[1] / q[2]))
}

pub(crate) fn require_passive_qutrit(p: &DiagonalState) -> Result<()> {
    if p.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: p.dim(),
        });
    }
    p.require_strictly_positive()?;
    let q = p.probs();
    if q[1] > q[0] || q[2] > q[1] {
        return Err(Error::NotPassive);
    }
    Ok(())
}

/// Unnormalized machine weights `c_j = q_j / q_{m+n-1}` together with the
/// denominator `T1(m-1) + r2 T2(n-1)`; both either plain or as logarithms.
struct Weights {
    values: Vec<f64>,
    den: f64,
    log_space: bool,
}

fn plain_weights(r1: f64, r2: f64, m: usize, n: usize) -> Weights {
    let (mi, ni) = (m as i64, n as i64);
    let t1 = |h: i64| geometric_sum(h, r1);
    let t2 = |h: i64| geometric_sum(h, r2);
    let den = t1(mi - 1) + r2 * t2(ni - 1);
    let num = t1(mi) + r2 * t2(ni - 2);
    let r1m = r1.powi(m as i32);
    let r2n = r2.powi(n as i32);
    let mut c = Vec::with_capacity(m + n);
    for j in 0..mi {
        let jp = mi - j;
        let a = r1.powi(jp as i32);
        c.push((a * t1(mi - 1 - jp) + t1(jp - 1) * r2n + r2 * t2(ni - 2) * a + a * r2n) / den);
    }
    for j in mi..mi + ni - 2 {
        let jp = mi + ni - 2 - j;
        let b = r2.powi(jp as i32);
        c.push(r2 * (t2(jp - 1) * r1m + t1(mi - 1) * b + b * r1m + r2 * b * t2(ni - 2 - jp)) / den);
    }
    c.push(r2 * num / den);
    c.push(1.0);
    Weights {
        values: c,
        den,
        log_space: false,
    }
}

fn log_weights(lr1: f64, lr2: f64, m: usize, n: usize) -> Weights {
    let (mi, ni) = (m as i64, n as i64);
    let (mf, nf) = (m as f64, n as f64);
    let lt1 = |h: i64| ln_geometric_sum(h, lr1);
    let lt2 = |h: i64| ln_geometric_sum(h, lr2);
    let ln_den = log_sum_exp(&[lt1(mi - 1), lr2 + lt2(ni - 1)]);
    let ln_num = log_sum_exp(&[lt1(mi), lr2 + lt2(ni - 2)]);
    let mut c = Vec::with_capacity(m + n);
    for j in 0..mi {
        let jp = mi - j;
        let a = jp as f64 * lr1;
        c.push(
            log_sum_exp(&[
                a + lt1(mi - 1 - jp),
                lt1(jp - 1) + nf * lr2,
                lr2 + lt2(ni - 2) + a,
                a + nf * lr2,
            ]) - ln_den,
        );
    }
    for j in mi..mi + ni - 2 {
        let jp = mi + ni - 2 - j;
        let b = jp as f64 * lr2;
        c.push(
            lr2 + log_sum_exp(&[
                lt2(jp - 1) + mf * lr1,
                lt1(mi - 1) + b,
                b + mf * lr1,
                lr2 + b + lt2(ni - 2 - jp),
            ]) - ln_den,
        );
    }
    c.push(lr2 + ln_num - ln_den);
    c.push(0.0);
    Weights {
        values: c,
        den: ln_den,
        log_space: true,
    }
}

fn needs_log_space(r1: f64, r2: f64, params: CycleParams) -> bool {
    let limit = LOG_SPACE_THRESHOLD.ln();
    params.m as f64 * r1.ln() > limit || params.n as f64 * r2.ln() > limit
}

struct ClosedForm {
    machine: Vec<f64>,
    alpha_coeff: f64,
    log_space: bool,
}

fn closed_form(p: &DiagonalState, params: CycleParams) -> Result<ClosedForm> {
    require_passive_qutrit(p)?;
    if !params.closed_form_valid() {
        return Err(Error::ClosedFormUnavailable {
            m: params.m,
            n: params.n,
        });
    }
    let (r1, r2) = ratios(p)?;
    let p1 = p.probs()[1];
    let w = if needs_log_space(r1, r2, params) {
        log_weights(r1.ln(), r2.ln(), params.m, params.n)
    } else {
        plain_weights(r1, r2, params.m, params.n)
    };
    let (machine, alpha_coeff) = if w.log_space {
        let ln_total = log_sum_exp(&w.values);
        let q = w.values.iter().map(|lc| (lc - ln_total).exp()).collect();
        (q, (p1.ln() - w.den - ln_total).exp())
    } else {
        let total = neumaier_sum(w.values.iter().copied());
        let q = w.values.iter().map(|c| c / total).collect();
        (q, p1 / (w.den * total))
    };
    Ok(ClosedForm {
        machine,
        alpha_coeff,
        log_space: w.log_space,
    })
}

/// Stationary machine distribution of the cycle, evaluated in closed form.
///
/// Requires a strictly positive passive qutrit and `n >= 2`; `n = 1`
/// cycles are solved by [`oracle::stationary_machine`] in [`run_cycle`].
pub fn machine_distribution(p: &DiagonalState, params: CycleParams) -> Result<DiagonalState> {
    Ok(DiagonalState::from_computed(closed_form(p, params)?.machine))
}

/// `r2^n - r1^m` evaluated as `r1^m expm1(n ln r2 - m ln r1)`.
fn ratio_bracket(p: &DiagonalState, params: CycleParams) -> Result<f64> {
    let (r1, r2) = ratios(p)?;
    let exponent = params.n as f64 * r2.ln() - params.m as f64 * r1.ln();
    Ok((params.m as f64 * r1.ln()).exp() * exponent.exp_m1())
}

/// Evaluates one cycle of `S_{m,n}` on a passive qutrit at the machine's
/// stationary distribution.
pub fn run_cycle(p: &DiagonalState, h: &Hamiltonian, params: CycleParams) -> Result<CycleOutcome> {
    h.require_qutrit()?;
    require_passive_qutrit(p)?;
    if params.closed_form_valid() {
        let cf = closed_form(p, params)?;
        let route = if cf.log_space {
            SolverRoute::ClosedFormLogSpace
        } else {
            SolverRoute::ClosedForm
        };
        let delta_p = cf.alpha_coeff * ratio_bracket(p, params)?;
        Ok(assemble(
            p,
            h,
            params,
            DiagonalState::from_computed(cf.machine),
            delta_p,
            cf.alpha_coeff,
            route,
        ))
    } else {
        let q = oracle::stationary_machine(p, params)?;
        outcome_from_machine(p, h, params, q)
    }
}

/// Builds the outcome for an externally supplied stationary machine.
///
/// Uses the identity `delta_p = p1 q_{m+n-1} (r2^n - r1^m) / (T1(m-1) + r2 T2(n-1))`,
/// which holds for the exact fixed point of every `(m, n)`.
pub fn outcome_from_machine(
    p: &DiagonalState,
    h: &Hamiltonian,
    params: CycleParams,
    machine: DiagonalState,
) -> Result<CycleOutcome> {
    h.require_qutrit()?;
    if machine.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: machine.dim(),
        });
    }
    let (r1, r2) = ratios(p)?;
    let den = geometric_sum(params.m as i64 - 1, r1) + r2 * geometric_sum(params.n as i64 - 1, r2);
    let alpha_coeff = p.probs()[1] * machine.probs()[params.dim() - 1] / den;
    let delta_p = alpha_coeff * ratio_bracket(p, params)?;
    Ok(assemble(p, h, params, machine, delta_p, alpha_coeff, SolverRoute::FixedPoint))
}

fn assemble(
    p: &DiagonalState,
    h: &Hamiltonian,
    params: CycleParams,
    machine: DiagonalState,
    delta_p: f64,
    alpha_coeff: f64,
    route: SolverRoute,
) -> CycleOutcome {
    let (m, n) = (params.m as f64, params.n as f64);
    let (g10, g21) = (h.gap10(), h.gap21());
    let q_hot = g10 * delta_p;
    let q_cold = g21 * delta_p;
    let heat_hot = m * q_hot;
    let heat_cold = n * q_cold;
    let work = (m * g10 - n * g21) * delta_p;
    let efficiency = 1.0 - n * g21 / (m * g10);
    let pp = p.probs();
    let final_probs = vec![pp[0] + m * delta_p, pp[1] - (m + n) * delta_p, pp[2] + n * delta_p];
    let final_state_active = final_probs[1] < final_probs[2] || final_probs[0] < final_probs[1];
    CycleOutcome {
        params,
        delta_p,
        work,
        q_hot,
        q_cold,
        heat_hot,
        heat_cold,
        efficiency,
        efficiency_meaningful: work > 0.0,
        final_system: DiagonalState::from_computed(final_probs),
        machine,
        alpha_coeff,
        final_state_active,
        route,
    }
}

/// Whether the final system state is still passive for `h`.
pub fn final_state_passive(outcome: &CycleOutcome, h: &Hamiltonian) -> Result<bool> {
    is_passive(&outcome.final_system, h)
}
