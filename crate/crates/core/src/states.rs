//! Diagonal states, Hamiltonians and the thermodynamic observables built on
//! them: passivity, ergotropy, virtual temperatures and thermal states.
//!
//! Entropies are in nats. Inverse temperatures are carried as [`Beta`] so the
//! zero-temperature limit never enters arithmetic as a raw infinity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{neumaier_sum, xlnx};

/// Tolerance on `sum(p) == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Slack allowed when comparing neighbouring populations for passivity.
pub const PASSIVITY_TOL: f64 = 1e-14;

const BISECTION_MAX_ITER: usize = 200;
/// `exp(-700)` is close to the smallest normal double.
const EXP_UNDERFLOW: f64 = 700.0;

/// Non-decreasing energy ladder `E_0 <= E_1 <= ... <= E_{d-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Hamiltonian {
    energies: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::InvalidHamiltonian(format!(
                "need at least two levels, got {}",
                energies.len()
            )));
        }
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidHamiltonian(format!("non-finite energy {e}")));
        }
        if let Some(i) = energies.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidHamiltonian(format!(
                "energies must be non-decreasing (E{} = {} > E{} = {})",
                i,
                energies[i],
                i + 1,
                energies[i + 1]
            )));
        }
        Ok(Self { energies })
    }

    pub fn qutrit(e0: f64, e1: f64, e2: f64) -> Result<Self> {
        Self::new(vec![e0, e1, e2])
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `E_1 - E_0`.
    pub fn gap10(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// `E_2 - E_1`; zero for a two-level ladder.
    pub fn gap21(&self) -> f64 {
        if self.dim() < 3 {
            0.0
        } else {
            self.energies[2] - self.energies[1]
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Width of the spectrum, `E_{d-1} - E_0`.
    pub fn bandwidth(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }

    /// Energies measured from the ground level.
    pub(crate) fn shifted(&self) -> Vec<f64> {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| e - e0).collect()
    }

    pub(crate) fn check(&self, state: &DiagonalState) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: state.dim(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_qutrit(&self) -> Result<()> {
        if self.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Hamiltonian {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Hamiltonian> for Vec<f64> {
    fn from(h: Hamiltonian) -> Self {
        h.energies
    }
}

/// Probability distribution over energy eigenstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagonalState {
    probs: Vec<f64>,
}

impl DiagonalState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidState("empty distribution".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidState(format!("p{i} = {p} is not a probability")));
            }
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Rescales non-negative weights to unit mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total = neumaier_sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidState(format!("weights sum to {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(dim: usize) -> Self {
        Self {
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    /// Pure state on level `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut probs = vec![0.0; dim];
        probs[k] = 1.0;
        Self { probs }
    }

    /// Wraps output of a mass-preserving computation; rounding noise below
    /// zero is flushed.
    pub(crate) fn from_computed(probs: Vec<f64>) -> Self {
        Self {
            probs: probs.into_iter().map(|p| p.max(0.0)).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub(crate) fn require_strictly_positive(&self) -> Result<()> {
        match self.probs.iter().position(|&p| p <= 0.0) {
            Some(index) => Err(Error::NonPositiveProbability {
                index,
                value: self.probs[index],
            }),
            None => Ok(()),
        }
    }

    /// Von Neumann entropy of the diagonal state, `0 ln 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -neumaier_sum(self.probs.iter().map(|&p| xlnx(p)))
    }

    pub fn max_abs_diff(&self, other: &DiagonalState) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for DiagonalState {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiagonalState> for Vec<f64> {
    fn from(s: DiagonalState) -> Self {
        s.probs
    }
}

/// Inverse temperature; `Infinite` stands for the ground-state limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Beta::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }
}

/// Virtual temperature of a level pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairTemperature {
    Finite(f64),
    /// Upper level empty while the lower one is populated.
    Infinite,
    /// `E_i == E_j`: no temperature can be assigned.
    Degenerate,
    /// Lower level empty, so the population ratio is undefined.
    ZeroProbability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualTemperatureTable {
    entries: BTreeMap<(usize, usize), PairTemperature>,
}

impl VirtualTemperatureTable {
    /// Entry for the unordered pair `{i, j}`.
    pub fn get(&self, i: usize, j: usize) -> Option<PairTemperature> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied()
    }

    pub fn beta(&self, i: usize, j: usize) -> Result<Beta> {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        match self.get(lo, hi) {
            Some(PairTemperature::Finite(b)) => Ok(Beta::Finite(b)),
            Some(PairTemperature::Infinite) => Ok(Beta::Infinite),
            Some(PairTemperature::Degenerate) => Err(Error::DegenerateGap(lo, hi)),
            Some(PairTemperature::ZeroProbability) => Err(Error::NonPositiveProbability {
                index: lo,
                value: 0.0,
            }),
            None => Err(Error::DimensionMismatch {
                expected: hi + 1,
                actual: self.entries.keys().map(|k| k.1 + 1).max().unwrap_or(0),
            }),
        }
    }

    /// Pair `(0, 1)`.
    pub fn beta_hot(&self) -> Result<Beta> {
        self.beta(0, 1)
    }

    /// Pair `(1, 2)`.
    pub fn beta_cold(&self) -> Result<Beta> {
        self.beta(1, 2)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), PairTemperature)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }
}

/// Point of the energy-entropy diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub energy: f64,
    pub entropy: f64,
}

pub fn mean_energy(state: &DiagonalState, h: &Hamiltonian) -> Result<f64> {
    h.check(state)?;
    Ok(neumaier_sum(
        state.probs.iter().zip(&h.energies).map(|(p, e)| p * e),
    ))
}

/// Passive iff populations are non-increasing along the energy order, with
/// equal populations on exactly degenerate levels.
pub fn is_passive(state: &DiagonalState, h: &Hamiltonian) -> Result<bool> {
    h.check(state)?;
    let p = &state.probs;
    let e = &h.energies;
    Ok((0..p.len() - 1).all(|i| {
        if e[i] == e[i + 1] {
            (p[i] - p[i + 1]).abs() <= PASSIVITY_TOL
        } else {
            p[i + 1] <= p[i] + PASSIVITY_TOL
        }
    }))
}

pub fn passify(state: &DiagonalState, h: &Hamiltonian) -> Result<DiagonalState> {
    h.check(state)?;
    let mut probs = state.probs.clone();
    probs.sort_by(|a, b| b.total_cmp(a));
    Ok(DiagonalState { probs })
}

/// Energy released by the optimal unitary, `<H>(p) - <H>(passify(p))`.
pub fn ergotropy(state: &DiagonalState, h: &Hamiltonian) -> Result<f64> {
    let passive = passify(state, h)?;
    let e0 = h.ground_energy();
    Ok(neumaier_sum(
        h.energies
            .iter()
            .zip(state.probs.iter().zip(&passive.probs))
            .map(|(e, (p, s))| (e - e0) * (p - s)),
    ))
}

pub fn virtual_temperatures(state: &DiagonalState, h: &Hamiltonian) -> Result<VirtualTemperatureTable> {
    h.check(state)?;
    let p = &state.probs;
    let e = &h.energies;
    let mut entries = BTreeMap::new();
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let t = if e[i] == e[j] {
                PairTemperature::Degenerate
            } else if p[i] == 0.0 {
                PairTemperature::ZeroProbability
            } else if p[j] == 0.0 {
                PairTemperature::Infinite
            } else {
                PairTemperature::Finite((p[i] / p[j]).ln() / (e[j] - e[i]))
            };
            entries.insert((i, j), t);
        }
    }
    Ok(VirtualTemperatureTable { entries })
}

/// Gibbs state `exp(-beta H) / Z`; at `Beta::Infinite` the degenerate ground
/// levels share the population equally.
pub fn thermal_state(beta: Beta, h: &Hamiltonian) -> DiagonalState {
    let eps = h.shifted();
    let weights: Vec<f64> = match beta {
        Beta::Finite(b) => {
            debug_assert!(b >= 0.0, "negative temperatures are not supported");
            eps.iter().map(|&x| (-b * x).exp()).collect()
        }
        Beta::Infinite => eps.iter().map(|&x| if x == 0.0 { 1.0 } else { 0.0 }).collect(),
    };
    let z = neumaier_sum(weights.iter().copied());
    DiagonalState {
        probs: weights.into_iter().map(|w| w / z).collect(),
    }
}

pub fn diagram_point(state: &DiagonalState, h: &Hamiltonian) -> Result<DiagramPoint> {
    Ok(DiagramPoint {
        energy: mean_energy(state, h)?,
        entropy: state.entropy(),
    })
}

/// Mean shifted energy and entropy of the Gibbs state at finite `beta`.
/// `eps` must be ground-referenced so that `Z >= 1`.
pub(crate) fn thermal_moments(beta: f64, eps: &[f64]) -> (f64, f64) {
    let weights: Vec<f64> = eps.iter().map(|&x| (-beta * x).exp()).collect();
    let z = neumaier_sum(weights.iter().copied());
    let u = neumaier_sum(eps.iter().zip(&weights).map(|(x, w)| x * w)) / z;
    (u, beta * u + z.ln())
}

fn bisect_decreasing(target: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, hi);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse temperature of the Gibbs state with mean energy `target_energy`.
pub fn beta_from_energy(target_energy: f64, h: &Hamiltonian) -> Result<Beta> {
    let eps = h.shifted();
    let e0 = h.ground_energy();
    let scale = h.bandwidth().max(e0.abs()).max(1.0);
    let u_target = target_energy - e0;
    let u_uniform = neumaier_sum(eps.iter().copied()) / eps.len() as f64;
    let out_of_range = || Error::OutOfRange {
        target: target_energy,
        low: e0,
        high: e0 + u_uniform,
    };
    if u_target < -NORMALIZATION_TOL * scale || u_target > u_uniform + NORMALIZATION_TOL * scale {
        return Err(out_of_range());
    }
    if u_target >= u_uniform {
        return Ok(Beta::Finite(0.0));
    }
    if u_target <= 0.0 {
        return Ok(Beta::Infinite);
    }
    let hi = EXP_UNDERFLOW / h.bandwidth();
    Ok(Beta::Finite(bisect_decreasing(u_target, hi, |b| {
        thermal_moments(b, &eps).0
    })))
}

/// Inverse temperature of the Gibbs state with entropy `target_entropy`.
pub fn beta_from_entropy(target_entropy: f64, h: &Hamiltonian) -> Result<Beta> {
    let eps = h.shifted();
    let d = eps.len() as f64;
    let ground_degeneracy = eps.iter().filter(|&&x| x == 0.0).count() as f64;
    let (s_min, s_max) = (ground_degeneracy.ln(), d.ln());
    if target_entropy < s_min - NORMALIZATION_TOL || target_entropy > s_max + NORMALIZATION_TOL {
        return Err(Error::OutOfRange {
            target: target_entropy,
            low: s_min,
            high: s_max,
        });
    }
    // S is quadratic in beta near 0, so rounding noise in the target would
    // otherwise be amplified to ~1e-8 in beta
    if target_entropy >= s_max - 4.0 * f64::EPSILON * s_max {
        return Ok(Beta::Finite(0.0));
    }
    if target_entropy <= s_min {
        return Ok(Beta::Infinite);
    }
    let hi = EXP_UNDERFLOW / h.bandwidth();
    Ok(Beta::Finite(bisect_decreasing(target_entropy, hi, |b| {
        thermal_moments(b, &eps).1
    })))
}

/// Thermal (or ground) state test: every pairwise virtual temperature of a
/// passive state agrees within `tol`.
pub fn is_completely_passive(state: &DiagonalState, h: &Hamiltonian, tol: f64) -> Result<bool> {
    if !is_passive(state, h)? {
        return Ok(false);
    }
    let table = virtual_temperatures(state, h)?;
    let mut finite = Vec::new();
    let mut any_infinite = false;
    for (_, t) in table.iter() {
        match t {
            PairTemperature::Finite(b) => finite.push(b),
            PairTemperature::Infinite => any_infinite = true,
            PairTemperature::Degenerate | PairTemperature::ZeroProbability => {}
        }
    }
    if any_infinite {
        return Ok(finite.is_empty());
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(finite.is_empty() || hi - lo <= tol)
}

/// `D(p || q)` in nats; `+inf` when `p` has support outside `q`.
pub fn relative_entropy(p: &DiagonalState, q: &DiagonalState) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: q.dim(),
        });
    }
    let mut terms = Vec::with_capacity(p.dim());
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(a * (a / b).ln());
    }
    Ok(neumaier_sum(terms))
}
