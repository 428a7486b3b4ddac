//! Classification of passive qutrit states relative to a rational gap ratio,
//! activation regions of individual cycles and the covering family
//! `m = (M/N) n + 1`.
//!
//! All comparisons are between logarithms of population ratios so that
//! `(p1/p2)^n` never has to be formed.

use serde::{Deserialize, Serialize};

use crate::engine::CycleParams;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::states::{DiagonalState, Hamiltonian};

/// Relative tolerance of the `R3` test.
pub const REGION_TOL: f64 = 1e-9;
/// Width of the log-gap band around `R3` dropped from coverage grids.
pub const COVERAGE_BAND: f64 = 1e-3;

const MAX_CONVERGENTS: usize = 64;

/// Integers with `M dE10 = N dE21`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalGapRatio {
    /// `M`, multiplies `dE10`.
    pub hot: u64,
    /// `N`, multiplies `dE21`.
    pub cold: u64,
}

impl RationalGapRatio {
    pub fn new(hot: u64, cold: u64) -> Result<Self> {
        if hot == 0 || cold == 0 {
            return Err(Error::InvalidCycle(format!(
                "gap ratio needs positive integers, got M = {hot}, N = {cold}"
            )));
        }
        Ok(Self { hot, cold })
    }

    /// Ladder `(0, N, N + M)` realising the ratio exactly.
    pub fn hamiltonian(&self) -> Hamiltonian {
        let (m, n) = (self.hot as f64, self.cold as f64);
        Hamiltonian::qutrit(0.0, n, n + m).expect("ladder is increasing")
    }

    /// Member `n` of the covering family for `R1`, `m = M n / N + 1`, if
    /// integral.
    pub fn covering_member(&self, n: u64) -> Option<CycleParams> {
        (self.hot * n).is_multiple_of(self.cold).then(|| CycleParams {
            m: (self.hot * n / self.cold + 1) as usize,
            n: n as usize,
        })
    }

    /// Mirror family for `R2`, `n = N m / M + 1`.
    pub fn mirror_member(&self, m: u64) -> Option<CycleParams> {
        (self.cold * m).is_multiple_of(self.hot).then(|| CycleParams {
            m: m as usize,
            n: (self.cold * m / self.hot + 1) as usize,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    /// `beta_hot < beta_cold`.
    R1,
    /// `beta_hot > beta_cold`.
    R2,
    /// Equal virtual temperatures: thermal.
    R3,
}

/// Smallest-denominator `(M, N)` with `|M dE10 - N dE21| <= tol dE21`, from
/// the continued-fraction convergents of `dE10 / dE21`.
pub fn approximate_gap_ratio(h: &Hamiltonian, tol: f64) -> Result<RationalGapRatio> {
    h.require_qutrit()?;
    let (g10, g21) = (h.gap10(), h.gap21());
    if g21 <= 0.0 {
        return Err(Error::DegenerateGap(1, 2));
    }
    if g10 <= 0.0 {
        return Err(Error::DegenerateGap(0, 1));
    }
    let x = g10 / g21;
    // convergents num/den of x: N = num, M = den
    let (mut num_prev, mut num) = (1u64, x.floor() as u64);
    let (mut den_prev, mut den) = (0u64, 1u64);
    let mut y = x;
    for _ in 0..MAX_CONVERGENTS {
        if num > 0 && (den as f64 * x - num as f64).abs() <= tol {
            return Ok(RationalGapRatio { hot: den, cold: num });
        }
        let frac = y - y.floor();
        if frac <= f64::EPSILON * y.max(1.0) {
            break;
        }
        y = 1.0 / frac;
        let a = y.floor() as u64;
        let next_num = a.checked_mul(num).and_then(|v| v.checked_add(num_prev));
        let next_den = a.checked_mul(den).and_then(|v| v.checked_add(den_prev));
        match (next_num, next_den) {
            (Some(nn), Some(nd)) => {
                (num_prev, num) = (num, nn);
                (den_prev, den) = (den, nd);
            }
            _ => break,
        }
    }
    Err(Error::NoRationalApproximation(tol))
}

fn log_ratios(p: &DiagonalState) -> Result<(f64, f64)> {
    if p.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: p.dim(),
        });
    }
    p.require_strictly_positive()?;
    let q = p.probs();
    Ok(((q[0] / q[1]).ln(), (q[1] / q[2]).ln()))
}

/// `N ln(p1/p2) - M ln(p0/p1)`: positive in `R1`, negative in `R2`.
pub fn log_gap(p: &DiagonalState, ratio: RationalGapRatio) -> Result<f64> {
    let (l1, l2) = log_ratios(p)?;
    Ok(ratio.cold as f64 * l2 - ratio.hot as f64 * l1)
}

pub fn classify(p: &DiagonalState, ratio: RationalGapRatio, tol: f64) -> Result<RegionLabel> {
    let (l1, l2) = log_ratios(p)?;
    let a = ratio.cold as f64 * l2;
    let b = ratio.hot as f64 * l1;
    Ok(if (a - b).abs() <= tol * a.abs().max(b.abs()) {
        RegionLabel::R3
    } else if a > b {
        RegionLabel::R1
    } else {
        RegionLabel::R2
    })
}

/// Membership of `R+_{m,n}`: the cycle extracts strictly positive work.
pub fn in_activation_region(p: &DiagonalState, h: &Hamiltonian, params: CycleParams) -> Result<bool> {
    h.require_qutrit()?;
    let (l1, l2) = log_ratios(p)?;
    let (m, n) = (params.m as f64, params.n as f64);
    let pop = n * l2 - m * l1;
    let energy = m * h.gap10() - n * h.gap21();
    Ok((pop > 0.0 && energy > 0.0) || (pop < 0.0 && energy < 0.0))
}

/// First member of the covering family (mirror family in `R2`) with
/// `n <= n_max` (resp. `m <= n_max`) that activates `p`.
pub fn covering_cycle(p: &DiagonalState, ratio: RationalGapRatio, n_max: u64) -> Result<Option<CycleParams>> {
    let h = ratio.hamiltonian();
    let member: fn(&RationalGapRatio, u64) -> Option<CycleParams> = match classify(p, ratio, REGION_TOL)? {
        RegionLabel::R3 => return Err(Error::ThermalState),
        RegionLabel::R1 => RationalGapRatio::covering_member,
        RegionLabel::R2 => RationalGapRatio::mirror_member,
    };
    for k in 1..=n_max {
        if let Some(params) = member(&ratio, k) {
            if in_activation_region(p, &h, params)? {
                return Ok(Some(params));
            }
        }
    }
    Ok(None)
}

/// Certifies that `p^{(m+n)}` is active through the eigenstate pair
/// `|1>^{m+n}` versus `|0>^m |2>^n`.
pub fn k_activability_witness(p: &DiagonalState, h: &Hamiltonian, params: CycleParams) -> Result<bool> {
    h.require_qutrit()?;
    h.check(p)?;
    let (m, n) = (params.m as f64, params.n as f64);
    let e = h.energies();
    let q = p.probs();
    let energy = (m + n) * e[1] - (m * e[0] + n * e[2]);
    let pop = (m + n) * q[1].ln() - (m * q[0].ln() + n * q[2].ln());
    Ok((energy > 0.0 && pop > 0.0) || (energy < 0.0 && pop < 0.0))
}

/// Strictly positive passive qutrits on a uniform barycentric grid of the
/// passive triangle with corners `(1,0,0)`, `(1/2,1/2,0)`, `(1/3,1/3,1/3)`.
pub fn passive_grid(resolution: usize) -> Vec<DiagonalState> {
    let g = resolution as f64;
    let mut out = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution - i {
            let k = resolution - i - j;
            let (a, b, c) = (i as f64 / g, j as f64 / g, k as f64 / g);
            let p2 = c / 3.0;
            let p1 = b / 2.0 + p2;
            let p0 = a + p1;
            out.push(DiagonalState::from_computed(vec![p0, p1, p2]));
        }
    }
    out
}

/// Fraction of `R1` grid points (outside the `COVERAGE_BAND` strip around
/// `R3`) activated by `params` on the ladder realising `ratio`.
pub fn coverage_fraction(ratio: RationalGapRatio, params: CycleParams, grid_resolution: usize) -> f64 {
    coverage_fraction_with(ratio, params, grid_resolution, COVERAGE_BAND, Execution::default())
}

pub fn coverage_fraction_with(
    ratio: RationalGapRatio,
    params: CycleParams,
    grid_resolution: usize,
    band: f64,
    exec: Execution,
) -> f64 {
    let h = ratio.hamiltonian();
    let r1: Vec<DiagonalState> = passive_grid(grid_resolution)
        .into_iter()
        .filter(|p| log_gap(p, ratio).is_ok_and(|g| g >= band))
        .collect();
    if r1.is_empty() {
        return 0.0;
    }
    let hits = par::count(exec, &r1, |p| in_activation_region(p, &h, params).unwrap_or(false));
    hits as f64 / r1.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{thermal_state, Beta};

    fn st(p: &[f64]) -> DiagonalState {
        DiagonalState::new(p.to_vec()).unwrap()
    }

    #[test]
    fn gap_ratio_examples() {
        let h = Hamiltonian::qutrit(0.0, 1.0, 3.0).unwrap();
        assert_eq!(approximate_gap_ratio(&h, 1e-9).unwrap(), RationalGapRatio { hot: 2, cold: 1 });
        let h = Hamiltonian::qutrit(0.0, 1.5, 3.0).unwrap();
        assert_eq!(approximate_gap_ratio(&h, 1e-9).unwrap(), RationalGapRatio { hot: 1, cold: 1 });
        let h = Hamiltonian::qutrit(0.0, 3.0, 4.0).unwrap();
        assert_eq!(approximate_gap_ratio(&h, 1e-9).unwrap(), RationalGapRatio { hot: 1, cold: 3 });
        assert!(approximate_gap_ratio(&Hamiltonian::qutrit(0.0, 1.0, 1.0).unwrap(), 1e-3).is_err());
    }

    #[test]
    fn golden_ratio_gives_fibonacci_pair() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let h = Hamiltonian::qutrit(0.0, phi, phi + 1.0).unwrap();
        let r = approximate_gap_ratio(&h, 1e-3).unwrap();
        let mut fib = vec![1u64, 1];
        while fib.len() < 40 {
            fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
        }
        let pos = fib.iter().rposition(|&f| f == r.hot).unwrap();
        assert_eq!(r.cold, fib[pos + 1]);
        assert!((r.hot as f64 * phi - r.cold as f64).abs() <= 1e-3);
        // the previous convergent must miss the tolerance
        assert!((fib[pos - 1] as f64 * phi - fib[pos] as f64).abs() > 1e-3);
    }

    #[test]
    fn classify_examples() {
        let r = RationalGapRatio { hot: 2, cold: 1 };
        assert_eq!(classify(&st(&[0.5, 0.35, 0.15]), r, REGION_TOL).unwrap(), RegionLabel::R1);
        assert_eq!(classify(&st(&[0.55, 0.3, 0.15]), r, REGION_TOL).unwrap(), RegionLabel::R2);
        let t = thermal_state(Beta::Finite(0.3), &r.hamiltonian());
        assert_eq!(classify(&t, r, REGION_TOL).unwrap(), RegionLabel::R3);
        assert!(classify(&st(&[0.6, 0.4, 0.0]), r, REGION_TOL).is_err());
    }

    #[test]
    fn activation_region_examples() {
        let h = Hamiltonian::qutrit(0.0, 3.0, 4.0).unwrap();
        let one = CycleParams { m: 1, n: 1 };
        assert!(in_activation_region(&st(&[0.5, 0.35, 0.15]), &h, one).unwrap());
        assert!(!in_activation_region(&st(&[0.5, 0.3, 0.2]), &h, one).unwrap());
        let t = thermal_state(Beta::Finite(0.8), &h);
        for m in 1..5 {
            for n in 1..5 {
                assert!(!in_activation_region(&t, &h, CycleParams { m, n }).unwrap());
            }
        }
        // m dE10 == n dE21
        assert!(!in_activation_region(&st(&[0.5, 0.35, 0.15]), &h, CycleParams { m: 1, n: 3 }).unwrap());
    }

    #[test]
    fn covering_family() {
        let r = RationalGapRatio { hot: 2, cold: 1 };
        let family: Vec<_> = [1, 2, 5].iter().map(|&n| r.covering_member(n).unwrap()).collect();
        assert_eq!(
            family,
            vec![CycleParams { m: 3, n: 1 }, CycleParams { m: 5, n: 2 }, CycleParams { m: 11, n: 5 }]
        );
        let deep = st(&[0.45, 0.44, 0.11]);
        assert_eq!(covering_cycle(&deep, r, 10).unwrap(), Some(CycleParams { m: 3, n: 1 }));
        let t = thermal_state(Beta::Finite(0.5), &r.hamiltonian());
        assert!(matches!(covering_cycle(&t, r, 10), Err(Error::ThermalState)));
    }

    #[test]
    fn covering_needs_larger_machines_near_r3() {
        let r = RationalGapRatio { hot: 2, cold: 1 };
        // ln r2 slightly above 2 ln r1
        let r1 = 1.2f64;
        let r2 = r1 * r1 * 1.01;
        let p2 = 1.0 / (1.0 + r2 + r1 * r2);
        let p = DiagonalState::from_weights(vec![r1 * r2 * p2, r2 * p2, p2]).unwrap();
        let found = covering_cycle(&p, r, 200).unwrap().unwrap();
        assert!(found.n > 1);
        assert!(covering_cycle(&p, r, 1).unwrap().is_none());
    }

    #[test]
    fn k_activability_examples() {
        let p = st(&[0.4, 0.35, 0.25]);
        let two_one = CycleParams { m: 2, n: 1 };
        assert!(k_activability_witness(&p, &Hamiltonian::qutrit(0.0, 1.0, 2.0).unwrap(), two_one).unwrap());
        assert!(!k_activability_witness(&p, &Hamiltonian::qutrit(0.0, 1.0, 3.0).unwrap(), two_one).unwrap());
        let h = Hamiltonian::qutrit(0.0, 1.0, 2.5).unwrap();
        let t = thermal_state(Beta::Finite(1.1), &h);
        for m in 1..5 {
            for n in 1..5 {
                assert!(!k_activability_witness(&t, &h, CycleParams { m, n }).unwrap());
            }
        }
    }

    #[test]
    fn grid_is_passive_and_positive() {
        let grid = passive_grid(20);
        assert_eq!(grid.len(), 20 * 21 / 2);
        let h = Hamiltonian::qutrit(0.0, 1.0, 2.0).unwrap();
        for p in &grid {
            assert!(p.is_strictly_positive());
            assert!(crate::states::is_passive(p, &h).unwrap());
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn coverage_degenerate_cycle_is_zero() {
        let r = RationalGapRatio { hot: 2, cold: 1 };
        // m dE10 = n dE21 with dE10 = 1, dE21 = 2
        assert_eq!(coverage_fraction(r, CycleParams { m: 2, n: 1 }, 40), 0.0);
    }

    #[test]
    fn coverage_modes_agree() {
        let r = RationalGapRatio { hot: 2, cold: 1 };
        let params = CycleParams { m: 5, n: 2 };
        let a = coverage_fraction_with(r, params, 60, COVERAGE_BAND, Execution::Sequential);
        let b = coverage_fraction_with(r, params, 60, COVERAGE_BAND, Execution::Parallel);
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }
}
