//! Closed-form engine against the explicit permutation oracle.

use anyhow::Result;
use passive_engine::engine::{machine_distribution, outcome_from_machine, run_cycle, CycleParams};
use passive_engine::oracle::{simulate_cycle, stationary_machine_with, FixedPointSolver};
use passive_engine::states::{DiagonalState, Hamiltonian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::table::Table;

const SEED: u64 = 0x5eed;
const STATES: usize = 40;
const MACHINE_TOL: f64 = 1e-10;
const WORK_TOL: f64 = 1e-12;
const REUSE_TOL: f64 = 1e-12;
const HEAT_TOL: f64 = 1e-12;
const EXAMPLE_TOL: f64 = 1e-12;

struct Check {
    name: &'static str,
    cases: usize,
    max_error: f64,
    tolerance: f64,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check {
            name,
            cases: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN must fail the check
        self.max_error = if err.is_nan() { f64::NAN } else { self.max_error.max(err) };
    }

    fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

fn random_passive(rng: &mut ChaCha8Rng) -> DiagonalState {
    let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.02..1.0), rng.gen_range(0.02..1.0), rng.gen_range(0.02..1.0));
    let p2 = c / 3.0;
    let p1 = b / 2.0 + p2;
    DiagonalState::from_weights(vec![a + p1, p1, p2]).expect("positive weights")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Runs every check; `perturbation` is added to the first entry of each
/// closed-form machine, before renormalisation, ahead of the comparisons.
pub fn run(perturbation: f64) -> Result<Table> {
    let mut machine = Check::new("machine_closed_vs_fixed_point", MACHINE_TOL);
    let mut work = Check::new("work_closed_vs_simulated", WORK_TOL);
    let mut reuse = Check::new("machine_reusability", REUSE_TOL);
    let mut heat = Check::new("heat_identity", HEAT_TOL);
    let mut small = Check::new("small_cycles_vs_simulated", WORK_TOL);
    let mut example = Check::new("worked_example", EXAMPLE_TOL);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..STATES {
        let p = random_passive(&mut rng);
        let g10 = rng.gen_range(0.2..4.0);
        let g21 = rng.gen_range(0.2..4.0);
        let h = Hamiltonian::qutrit(0.0, g10, g10 + g21)?;
        for m in 2..=8 {
            for n in 3..=8 {
                let params = CycleParams { m, n };
                let mut q = machine_distribution(&p, params)?.probs().to_vec();
                q[0] += perturbation;
                let q = DiagonalState::from_weights(q)?;
                let solved = stationary_machine_with(&p, params, FixedPointSolver::Direct)?;
                machine.record(q.max_abs_diff(&solved));
                let out = outcome_from_machine(&p, &h, params, q.clone())?;
                let sim = simulate_cycle(&p, &h, params, &q)?;
                work.record(rel(out.work, sim.work));
                reuse.record(sim.machine.max_abs_diff(&q));
                heat.record(rel(out.work, out.heat_hot - out.heat_cold));
            }
        }
        for m in 1..=2 {
            for n in 1..=2 {
                let params = CycleParams { m, n };
                let out = run_cycle(&p, &h, params)?;
                let sim = simulate_cycle(&p, &h, params, &out.machine)?;
                small.record(rel(out.work, sim.work));
            }
        }
    }

    let p = DiagonalState::new(vec![0.5, 0.35, 0.15])?;
    let h = Hamiltonian::qutrit(0.0, 3.0, 4.0)?;
    let out = run_cycle(&p, &h, CycleParams { m: 1, n: 1 })?;
    let dp = 0.0475 / 1.35;
    for err in [
        (out.delta_p - dp).abs(),
        (out.work - 2.0 * dp).abs(),
        (out.efficiency - 2.0 / 3.0).abs(),
        (out.machine.probs()[0] - 17.0 / 27.0).abs(),
        (out.final_system.probs()[1] - (0.35 - 2.0 * dp)).abs(),
    ] {
        example.record(err);
    }

    let mut t = Table::new(&["check", "cases", "max_error", "tolerance", "pass"]);
    for c in [machine, work, reuse, heat, small, example] {
        t.push(vec![
            c.name.into(),
            c.cases.into(),
            c.max_error.into(),
            c.tolerance.into(),
            c.passed().into(),
        ]);
    }
    Ok(t)
}

/// Whether every row of a verify table passed.
pub fn all_passed(t: &Table) -> bool {
    let col = t.column("pass").expect("pass column");
    t.rows
        .iter()
        .all(|r| r[col] == crate::table::Cell::Bool(true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        assert!(all_passed(&run(0.0).unwrap()));
    }

    #[test]
    fn perturbation_is_caught() {
        let t = run(1e-6).unwrap();
        assert!(!all_passed(&t));
        assert_eq!(t.rows[0][4], crate::table::Cell::Bool(false));
    }
}
