use anyhow::{bail, ensure, Context, Result};
use passive_engine::activation::assess_activation;
use passive_engine::engine::{run_cycle, CycleOutcome, CycleParams};
use passive_engine::par::{self, Execution};
use passive_engine::quasistatic::{integrate_trajectory, optimal_work, DEFAULT_MAX_STEPS, DEFAULT_STEP};
use passive_engine::reduction::best_window;
use passive_engine::regions::{approximate_gap_ratio, classify, in_activation_region, passive_grid, REGION_TOL};
use passive_engine::states::{thermal_state, virtual_temperatures, Beta, DiagonalState, Hamiltonian};

use crate::config::{Command, RunConfig, StrategySpec, SweepSpec};
use crate::table::{Cell, Table};
use crate::verify;

const DEFAULT_STATE: [f64; 3] = [0.5, 0.35, 0.15];
const DEFAULT_ENERGIES: [f64; 3] = [0.0, 3.0, 4.0];
const FIG4_ENERGIES: [f64; 3] = [0.0, 1.0, 2.0];
const FIG4_SWEEP: SweepSpec = SweepSpec {
    lo: 0.5,
    hi: 3.0,
    steps: 51,
};
const FIG5_ENERGIES: [f64; 3] = [0.0, 1.0, 3.0];
const FIG5_GRID: usize = 50;
/// 1-based ranks of the covering members shown by default.
const FIG5_MEMBER_RANKS: [usize; 3] = [1, 2, 5];
const GAP_RATIO_TOL: f64 = 1e-9;
const DEFAULT_MAX_DIM: usize = 12;

pub fn dispatch(config: &RunConfig) -> Result<Table> {
    match config.command {
        Command::Cycle => cycle(config),
        Command::Fig4 => fig4(config),
        Command::Fig5 => fig5(config),
        Command::Fig6 => fig6(config),
        Command::Optimize => optimize(config),
        Command::Verify => verify::run(config.inject_perturbation.unwrap_or(0.0)),
    }
}

fn hamiltonian(config: &RunConfig, default: &[f64]) -> Result<Hamiltonian> {
    let e = config.energies.clone().unwrap_or_else(|| default.to_vec());
    Ok(Hamiltonian::new(e)?)
}

fn state(config: &RunConfig, h: &Hamiltonian) -> Result<DiagonalState> {
    if let Some(beta) = config.beta {
        return Ok(thermal_state(Beta::Finite(beta), h));
    }
    let p = DiagonalState::new(config.state.clone().unwrap_or_else(|| DEFAULT_STATE.to_vec()))?;
    ensure!(
        p.dim() == h.dim(),
        "state has {} levels but the Hamiltonian has {}",
        p.dim(),
        h.dim()
    );
    Ok(p)
}

fn params(config: &RunConfig) -> Result<CycleParams> {
    Ok(CycleParams::new(config.m.unwrap_or(1), config.n.unwrap_or(1))?)
}

/// Cycle on a qutrit, or on the best three-level window of a qudit.
fn evaluate(p: &DiagonalState, h: &Hamiltonian, params: CycleParams) -> Result<(usize, CycleOutcome)> {
    if p.dim() == 3 {
        Ok((0, run_cycle(p, h, params)?))
    } else {
        Ok(best_window(p, h, params)?)
    }
}

fn cycle(config: &RunConfig) -> Result<Table> {
    let h = hamiltonian(config, &DEFAULT_ENERGIES)?;
    let p = state(config, &h)?;
    let (window, out) = evaluate(&p, &h, params(config)?)?;
    let report = assess_activation(&p, &h, &out)?;
    let optimal = if p.dim() == 3 { Some(optimal_work(&p, &h)?) } else { None };

    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: Cell| t.push(vec![k.into(), v]);
    row("m", out.params.m.into());
    row("n", out.params.n.into());
    row("window", window.into());
    row("route", format!("{:?}", out.route).as_str().into());
    row("delta_p", out.delta_p.into());
    row("work", out.work.into());
    row("q_hot", out.q_hot.into());
    row("q_cold", out.q_cold.into());
    row("heat_hot", out.heat_hot.into());
    row("heat_cold", out.heat_cold.into());
    row("efficiency", out.efficiency_if_meaningful().into());
    row("alpha_coeff", out.alpha_coeff.into());
    row("final_state_active", out.final_state_active.into());
    row("ergotropy", report.ergotropy_value.into());
    row("activated", report.activated.into());
    row("optimal_work", optimal.into());
    for (i, x) in out.final_system.probs().iter().enumerate() {
        row(&format!("final_p{i}"), (*x).into());
    }
    for (j, x) in out.machine.probs().iter().enumerate() {
        row(&format!("machine_q{j}"), (*x).into());
    }
    Ok(t)
}

/// Hot gap swept at fixed virtual temperatures and fixed cold gap.
fn fig4(config: &RunConfig) -> Result<Table> {
    let h = hamiltonian(config, &FIG4_ENERGIES)?;
    ensure!(h.dim() == 3, "fig4 needs a qutrit Hamiltonian");
    let p = state(config, &h)?;
    let vt = virtual_temperatures(&p, &h)?;
    let (beta_hot, beta_cold) = match (vt.beta_hot()?, vt.beta_cold()?) {
        (Beta::Finite(a), Beta::Finite(b)) if a > 0.0 && b > 0.0 => (a, b),
        _ => bail!("fig4 needs finite positive virtual temperatures"),
    };
    let g21 = h.gap21();
    let params = params(config)?;
    let gaps = config.sweep_gap.unwrap_or(FIG4_SWEEP).values();
    ensure!(gaps.iter().all(|g| *g > 0.0), "swept gaps must be positive");
    let rows = par::map(Execution::default(), &gaps, |&g| -> Result<Vec<Cell>> {
        let hg = Hamiltonian::qutrit(0.0, g, g + g21)?;
        let pg = DiagonalState::from_weights(vec![(beta_hot * g + beta_cold * g21).exp(), (beta_cold * g21).exp(), 1.0])?;
        let out = run_cycle(&pg, &hg, params)?;
        Ok(vec![g.into(), out.work.into(), out.efficiency_if_meaningful().into()])
    });
    let mut t = Table::new(&["gap", "work", "efficiency"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

fn fig5(config: &RunConfig) -> Result<Table> {
    let h = hamiltonian(config, &FIG5_ENERGIES)?;
    let ratio = approximate_gap_ratio(&h, GAP_RATIO_TOL).context("energies must have a rational gap ratio")?;
    let cycles = match &config.cycles {
        Some(c) => c.clone(),
        None => {
            let members: Vec<CycleParams> = (1..).filter_map(|n| ratio.covering_member(n)).take(FIG5_MEMBER_RANKS[2]).collect();
            FIG5_MEMBER_RANKS.iter().map(|r| members[r - 1]).collect()
        }
    };
    let grid = passive_grid(config.grid.unwrap_or(FIG5_GRID));
    let rows = par::map(Execution::default(), &grid, |p| -> Result<Vec<Cell>> {
        let mut row: Vec<Cell> = p.probs().iter().map(|x| (*x).into()).collect();
        row.push(format!("{:?}", classify(p, ratio, REGION_TOL)?).as_str().into());
        for &c in &cycles {
            row.push(in_activation_region(p, &h, c)?.into());
        }
        Ok(row)
    });
    let names: Vec<String> = cycles.iter().map(|c| format!("r_plus_{}_{}", c.m, c.n)).collect();
    let mut columns = vec!["p0", "p1", "p2", "region"];
    columns.extend(names.iter().map(String::as_str));
    let mut t = Table::new(&columns);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

fn fig6(config: &RunConfig) -> Result<Table> {
    let h = hamiltonian(config, &DEFAULT_ENERGIES)?;
    let p = state(config, &h)?;
    let strategy = config.strategy.unwrap_or(StrategySpec::Entropy).strategy();
    let traj = integrate_trajectory(&p, &h, &strategy, DEFAULT_STEP, DEFAULT_MAX_STEPS)?;
    let mut t = Table::new(&["t", "p0", "p1", "p2", "energy", "entropy", "alpha", "work"]);
    for s in &traj.samples {
        let q = s.state.probs();
        t.push(vec![
            s.t.into(),
            q[0].into(),
            q[1].into(),
            q[2].into(),
            s.point.energy.into(),
            s.point.entropy.into(),
            s.alpha.into(),
            s.work.into(),
        ]);
    }
    Ok(t)
}

/// Largest work over all `(m, n)` with `m + n <= max_dim`; ties keep the
/// smaller machine.
fn optimize(config: &RunConfig) -> Result<Table> {
    let h = hamiltonian(config, &DEFAULT_ENERGIES)?;
    let p = state(config, &h)?;
    let max_dim = config.max_dim.unwrap_or(DEFAULT_MAX_DIM);
    ensure!(max_dim >= 2, "max-dim must be at least 2");
    let candidates: Vec<CycleParams> = (2..=max_dim)
        .flat_map(|d| (1..d).map(move |m| CycleParams { m, n: d - m }))
        .collect();
    let results = par::map(Execution::default(), &candidates, |&c| evaluate(&p, &h, c));
    let mut best: Option<(usize, CycleOutcome)> = None;
    for r in results {
        let (k, out) = r?;
        if best.as_ref().is_none_or(|(_, b)| out.work > b.work) {
            best = Some((k, out));
        }
    }
    let (window, out) = best.expect("at least one candidate");
    let mut t = Table::new(&["quantity", "value"]);
    t.push(vec!["m".into(), out.params.m.into()]);
    t.push(vec!["n".into(), out.params.n.into()]);
    t.push(vec!["machine_dim".into(), out.params.dim().into()]);
    t.push(vec!["window".into(), window.into()]);
    t.push(vec!["work".into(), out.work.into()]);
    t.push(vec!["efficiency".into(), out.efficiency_if_meaningful().into()]);
    Ok(t)
}
