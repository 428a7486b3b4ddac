//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use passive_engine::activation::{assess_activation, optimal_bound_check};
use passive_engine::engine::{run_cycle, CycleParams};
use passive_engine::oracle::{simulate_cycle, stationary_machine, stationary_machine_with, FixedPointSolver};
use passive_engine::quasistatic::{
    alpha_range, asymptotic_delta_p_prefactor, asymptotic_machine, carnot_check, integrate_trajectory,
    optimal_work, Strategy, DEFAULT_MAX_STEPS, DEFAULT_STEP,
};
use passive_engine::reduction::{block_unitary_final, decompose, lifted_cycle};
use passive_engine::regions::{
    coverage_fraction, in_activation_region, passive_grid, RationalGapRatio,
};
use passive_engine::states::{
    beta_from_energy, beta_from_entropy, ergotropy, mean_energy, thermal_state, virtual_temperatures, Beta,
    DiagonalState, Hamiltonian,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_passive-engine");
const BOUNDARY_BAND: f64 = 1e-9;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Uniform sample of the strictly positive passive triangle.
fn random_passive(rng: &mut ChaCha8Rng) -> DiagonalState {
    let w: Vec<f64> = (0..3).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    let (a, b, c) = (w[0] / s, w[1] / s, w[2] / s);
    let p2 = c / 3.0;
    let p1 = b / 2.0 + p2;
    DiagonalState::from_weights(vec![a + p1, p1, p2]).unwrap()
}

fn random_ladder(rng: &mut ChaCha8Rng) -> Hamiltonian {
    let g10 = rng.gen_range(0.1..4.0);
    let g21 = rng.gen_range(0.1..4.0);
    Hamiltonian::qutrit(0.0, g10, g10 + g21).unwrap()
}

fn ladders() -> Vec<Hamiltonian> {
    [[0.0, 3.0, 4.0], [0.0, 1.0, 3.0], [0.0, 1.0, 2.5], [0.0, 2.0, 2.5]]
        .iter()
        .map(|e| Hamiltonian::new(e.to_vec()).unwrap())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Distance of `p` from the boundary of the activation region of `(m, n)`.
fn boundary_distance(p: &DiagonalState, h: &Hamiltonian, params: CycleParams) -> f64 {
    let x = p.probs();
    let (m, n) = (params.m as f64, params.n as f64);
    let pop = n * (x[1] / x[2]).ln() - m * (x[0] / x[1]).ln();
    let energy = m * h.gap10() - n * h.gap21();
    pop.abs().min(energy.abs())
}

struct OracleCase {
    machine_err: f64,
    work_err: f64,
    reuse_err: f64,
}

/// Shared sample for criteria 1 and 2.
fn oracle_cases() -> (Vec<OracleCase>, f64) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = Vec::new();
    for _ in 0..200 {
        let p = random_passive(&mut rng);
        let h = random_ladder(&mut rng);
        for m in 2..=8 {
            for n in 3..=8 {
                let params = CycleParams { m, n };
                let out = run_cycle(&p, &h, params).unwrap();
                let solved = stationary_machine_with(&p, params, FixedPointSolver::Direct).unwrap();
                let sim = simulate_cycle(&p, &h, params, &out.machine).unwrap();
                cases.push(OracleCase {
                    machine_err: out.machine.max_abs_diff(&solved),
                    work_err: (out.work - sim.work).abs() / out.work.abs().max(1.0),
                    reuse_err: sim.machine.max_abs_diff(&out.machine),
                });
            }
        }
    }
    (cases, start.elapsed().as_secs_f64())
}

fn c1_oracle_equivalence(cases: &[OracleCase], seconds: f64) -> Outcome {
    let machine = cases.iter().map(|c| c.machine_err).fold(0.0, f64::max);
    let work = cases.iter().map(|c| c.work_err).fold(0.0, f64::max);
    outcome(
        machine <= 1e-10 && work <= 1e-12 && seconds < 60.0,
        format!("{} cases, max |dq| = {machine:.2e}, max scaled |dW| = {work:.2e}, {seconds:.1} s", cases.len()),
    )
}

fn c2_reusability(cases: &[OracleCase]) -> Outcome {
    let worst = cases.iter().map(|c| c.reuse_err).fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("{} cases, max machine drift = {worst:.2e}", cases.len()))
}

fn c3_heat_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut count = 0;
    for _ in 0..200 {
        let p = random_passive(&mut rng);
        let h = random_ladder(&mut rng);
        for m in 1..=8 {
            for n in 1..=8 {
                let out = run_cycle(&p, &h, CycleParams { m, n }).unwrap();
                worst = worst
                    .max(rel(out.work, out.heat_hot - out.heat_cold))
                    .max(rel(out.heat_hot, m as f64 * h.gap10() * out.delta_p))
                    .max(rel(out.heat_cold, n as f64 * h.gap21() * out.delta_p));
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-12, format!("{count} cases, max error = {worst:.2e}"))
}

fn c4_worked_example() -> Outcome {
    let p = DiagonalState::new(vec![0.5, 0.35, 0.15]).unwrap();
    let h = Hamiltonian::qutrit(0.0, 3.0, 4.0).unwrap();
    let out = run_cycle(&p, &h, CycleParams { m: 1, n: 1 }).unwrap();
    let f = out.final_system.probs();
    let q = out.machine.probs();
    let errors = [
        (out.delta_p - 0.0351852).abs(),
        (out.work - 0.0703704).abs(),
        (out.efficiency - 2.0 / 3.0).abs(),
        (q[0] - 0.629630).abs(),
        (q[1] - 0.370370).abs(),
        (f[0] - 0.535185).abs(),
        (f[1] - 0.279630).abs(),
        (f[2] - 0.185185).abs(),
    ];
    let worst = errors.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 1e-6,
        format!("dP = {:.7}, dW = {:.7}, eta = {:.6}, max error = {worst:.1e}", out.delta_p, out.work, out.efficiency),
    )
}

fn c5_region_sign() -> Outcome {
    let grid = passive_grid(50);
    let mut mismatches = 0;
    let mut checked = 0;
    for h in ladders() {
        for m in 1..=6 {
            for n in 1..=6 {
                let params = CycleParams { m, n };
                for p in &grid {
                    if boundary_distance(p, &h, params) <= BOUNDARY_BAND {
                        continue;
                    }
                    let positive = run_cycle(p, &h, params).unwrap().work > 0.0;
                    if positive != in_activation_region(p, &h, params).unwrap() {
                        mismatches += 1;
                    }
                    checked += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} grid cases, {mismatches} mismatches"))
}

fn c6_sub_carnot() -> Outcome {
    let grid = passive_grid(50);
    let mut violations = 0;
    let mut positive = 0;
    for h in ladders() {
        for p in &grid {
            let vt = virtual_temperatures(p, &h).unwrap();
            let (Beta::Finite(bh), Beta::Finite(bc)) = (vt.beta_hot().unwrap(), vt.beta_cold().unwrap()) else {
                continue;
            };
            if !(bh < bc) {
                continue;
            }
            for m in 1..=8 {
                for n in 1..=8 {
                    let out = run_cycle(p, &h, CycleParams { m, n }).unwrap();
                    if out.work > 0.0 {
                        positive += 1;
                        if !(out.efficiency > 0.0 && out.efficiency < 1.0 - bh / bc) {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(
        violations == 0 && positive > 0,
        format!("{positive} positive-work cases in R1, {violations} violations"),
    )
}

fn c7_coverage() -> Outcome {
    let ratio = RationalGapRatio::new(2, 1).unwrap();
    let f = |m, n| coverage_fraction(ratio, CycleParams { m, n }, 200);
    let (a, b, c) = (f(3, 1), f(5, 2), f(11, 5));
    let big = f(401, 200);
    outcome(
        a <= b && b <= c && big >= 0.99,
        format!("(3,1) {a:.4} <= (5,2) {b:.4} <= (11,5) {c:.4}; (401,200) {big:.4}"),
    )
}

/// Populations and energies of the `k`-fold tensor power, sorted by energy.
fn tensor_power(p: &DiagonalState, h: &Hamiltonian, k: usize) -> (DiagonalState, Hamiltonian) {
    let mut levels = vec![(0.0f64, 1.0f64)];
    for _ in 0..k {
        levels = levels
            .iter()
            .flat_map(|&(e, x)| h.energies().iter().zip(p.probs()).map(move |(f, y)| (e + f, x * y)))
            .collect();
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (e, x): (Vec<f64>, Vec<f64>) = levels.into_iter().unzip();
    (DiagonalState::from_weights(x).unwrap(), Hamiltonian::new(e).unwrap())
}

fn c8_k_activability() -> Outcome {
    let grid = passive_grid(12);
    let mut checked = 0;
    let mut failures = 0;
    for h in ladders() {
        for p in &grid {
            for k in 2..=8usize {
                let mut power = None;
                for m in 1..k {
                    let params = CycleParams { m, n: k - m };
                    if !in_activation_region(p, &h, params).unwrap() {
                        continue;
                    }
                    let (pk, hk) = power.get_or_insert_with(|| tensor_power(p, &h, k));
                    checked += 1;
                    if !(ergotropy(pk, hk).unwrap() > 0.0) {
                        failures += 1;
                    }
                }
            }
        }
    }
    outcome(
        failures == 0 && checked > 0,
        format!("{checked} activating cases, {failures} with zero tensor-power ergotropy"),
    )
}

fn c9_asymptotics() -> Outcome {
    let h = Hamiltonian::qutrit(0.0, 3.0, 4.0).unwrap();
    let m = 200;
    let mut worst_level = 0.0f64;
    let mut worst_dp = 0.0f64;
    for probs in [[0.5, 0.35, 0.15], [0.45, 0.35, 0.2]] {
        let p = DiagonalState::new(probs.to_vec()).unwrap();
        let alpha = alpha_range(&p, &h).unwrap().midpoint();
        let approx = asymptotic_machine(&p, &h, m, alpha).unwrap();
        let params = CycleParams { m, n: approx.n };
        let exact = stationary_machine(&p, params).unwrap();
        for (e, a) in exact.probs().iter().zip(approx.distribution().probs()) {
            if *e > 1e-12 {
                worst_level = worst_level.max((a / e - 1.0).abs());
            }
        }
        let out = run_cycle(&p, &h, params).unwrap();
        let scaled = out.delta_p / (probs[1] / probs[0]).powi(m as i32);
        worst_dp = worst_dp.max((scaled / asymptotic_delta_p_prefactor(&p).unwrap() - 1.0).abs());
    }
    outcome(
        worst_level <= 0.01 && worst_dp <= 0.05,
        format!("max level deviation = {worst_level:.2e}, max dP prefactor deviation = {worst_dp:.2e}"),
    )
}

fn c10_trajectories() -> Outcome {
    let h = Hamiltonian::qutrit(0.0, 3.0, 4.0).unwrap();
    let mut worst = [0.0f64; 6];
    for probs in [[0.5, 0.35, 0.15], [0.6, 0.3, 0.1], [0.45, 0.35, 0.2]] {
        let p = DiagonalState::new(probs.to_vec()).unwrap();
        let e0 = mean_energy(&p, &h).unwrap();
        let s0 = p.entropy();
        let energy = integrate_trajectory(&p, &h, &Strategy::EnergyConserving, DEFAULT_STEP, DEFAULT_MAX_STEPS).unwrap();
        let entropy = integrate_trajectory(&p, &h, &Strategy::EntropyConserving, DEFAULT_STEP, DEFAULT_MAX_STEPS).unwrap();
        let drift_e = energy.samples.iter().map(|s| (s.point.energy - e0).abs()).fold(0.0, f64::max);
        let drift_s = entropy.samples.iter().map(|s| (s.point.entropy - s0).abs()).fold(0.0, f64::max);
        let beta_min = beta_from_energy(e0, &h).unwrap().finite().unwrap();
        let beta_max = beta_from_entropy(s0, &h).unwrap().finite().unwrap();
        let errs = [
            drift_e,
            drift_s,
            (energy.endpoint_beta - beta_min).abs(),
            (entropy.endpoint_beta - beta_max).abs(),
            (entropy.accumulated_work - optimal_work(&p, &h).unwrap()).abs(),
            carnot_check(&p, &h).unwrap(),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let limits = [1e-8, 1e-8, 1e-6, 1e-6, 1e-6, 1e-10];
    outcome(
        worst.iter().zip(limits).all(|(w, l)| *w <= l),
        format!(
            "drift E {:.1e}, S {:.1e}; endpoint beta {:.1e}, {:.1e}; work vs optimal {:.1e}; Carnot {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}

fn c11_activation_bounds() -> Outcome {
    let mut violations = Vec::new();
    let mut cases = 0;
    let grid = passive_grid(30);
    for h in ladders() {
        for p in &grid {
            for m in 1..=6 {
                for n in 1..=6 {
                    let out = run_cycle(p, &h, CycleParams { m, n }).unwrap();
                    let r = assess_activation(p, &h, &out).unwrap();
                    cases += 1;
                    if !optimal_bound_check(p, &h, &out).unwrap() {
                        violations.push("bound");
                    }
                    if !r.entropy_ok || (r.activated && !r.energy_ok) {
                        violations.push("constraint");
                    }
                }
            }
        }
        for beta in [0.0, 0.3, 1.0, 2.5] {
            let t = thermal_state(Beta::Finite(beta), &h);
            for m in 1..=6 {
                for n in 1..=6 {
                    let out = run_cycle(&t, &h, CycleParams { m, n }).unwrap();
                    cases += 1;
                    if assess_activation(&t, &h, &out).unwrap().activated {
                        violations.push("thermal");
                    }
                }
            }
        }
        let ground = DiagonalState::basis(3, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=4 {
            for n in 1..=4 {
                let params = CycleParams { m, n };
                let d = params.dim();
                let mut machines: Vec<DiagonalState> = (0..d).map(|k| DiagonalState::basis(d, k)).collect();
                machines.push(DiagonalState::uniform(d));
                machines.push(DiagonalState::from_weights((0..d).map(|_| rng.gen::<f64>() + 0.01).collect()).unwrap());
                for q in machines {
                    let sim = simulate_cycle(&ground, &h, params, &q).unwrap();
                    cases += 1;
                    let reusable = sim.machine.max_abs_diff(&q) <= 1e-12;
                    if reusable && sim.work > 0.0 {
                        violations.push("pure");
                    }
                }
            }
        }
    }
    outcome(violations.is_empty(), format!("{cases} cases, {} violations", violations.len()))
}

fn random_qudit(rng: &mut ChaCha8Rng, d: usize) -> (DiagonalState, Hamiltonian) {
    let mut w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    let mut e = vec![0.0];
    for _ in 1..d {
        e.push(e.last().unwrap() + rng.gen_range(0.05..2.0));
    }
    (DiagonalState::from_weights(w).unwrap(), Hamiltonian::new(e).unwrap())
}

fn c12_qudit_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut work_err, mut block_err) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for d in 3..=6 {
        for _ in 0..10 {
            let (p, h) = random_qudit(&mut rng, d);
            for k in 0..=d - 3 {
                for m in 1..=5 {
                    for n in 1..=6 - m {
                        let params = CycleParams { m, n };
                        let w = decompose(&p, &h, k).unwrap();
                        let inner = run_cycle(&w.reduced_state, &w.reduced_hamiltonian, params).unwrap();
                        let lifted = lifted_cycle(&p, &h, k, params).unwrap();
                        work_err = work_err.max((lifted.work - w.weight * inner.work).abs());
                        let joint = block_unitary_final(&p, k, params, &lifted.machine).unwrap();
                        block_err = block_err
                            .max(joint.system_marginal().max_abs_diff(&lifted.final_system))
                            .max(joint.machine_marginal().max_abs_diff(&lifted.machine));
                        cases += 1;
                    }
                }
            }
        }
    }
    outcome(
        work_err <= 1e-12 && block_err <= 1e-12,
        format!("{cases} cases, lifted work error {work_err:.1e}, block-unitary error {block_err:.1e}"),
    )
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (out.status.code(), out.stdout)
}

fn c13_cli_determinism() -> Outcome {
    let (verify, _) = run_cli(&["verify"]);
    let (mutated, _) = run_cli(&["verify", "--inject-perturbation", "1e-6"]);
    let runs: [&[&str]; 4] = [
        &["fig4", "--sweep-gap", "0.5:3:26"],
        &["fig5", "--grid", "40"],
        &["fig6", "--strategy", "entropy"],
        &["fig6", "--strategy", "energy", "--format", "json"],
    ];
    let mut identical = true;
    for args in runs {
        let (c1, a) = run_cli(args);
        let (c2, b) = run_cli(args);
        identical &= c1 == Some(0) && c2 == Some(0) && !a.is_empty() && a == b;
    }
    outcome(
        verify == Some(0) && mutated == Some(1) && identical,
        format!("verify exit {verify:?}, perturbed verify exit {mutated:?}, repeated figure runs identical: {identical}"),
    )
}

fn main() -> ExitCode {
    let (cases, seconds) = oracle_cases();
    let criteria: Vec<Criterion> = vec![
        ("oracle equivalence", Box::new(|| c1_oracle_equivalence(&cases, seconds))),
        ("machine reusability", Box::new(|| c2_reusability(&cases))),
        ("heat identity", Box::new(c3_heat_identity)),
        ("worked example", Box::new(c4_worked_example)),
        ("region/sign equivalence", Box::new(c5_region_sign)),
        ("sub-Carnot efficiency", Box::new(c6_sub_carnot)),
        ("coverage monotonicity", Box::new(c7_coverage)),
        ("k-activability", Box::new(c8_k_activability)),
        ("asymptotics", Box::new(c9_asymptotics)),
        ("trajectories", Box::new(c10_trajectories)),
        ("activation bounds", Box::new(c11_activation_bounds)),
        ("qudit reduction", Box::new(c12_qudit_reduction)),
        ("CLI determinism", Box::new(c13_cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "criterion {:>2} {:<24} {}  {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
