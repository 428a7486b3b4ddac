mod common;

use common::{ladder, passive_qudit, passive_qutrit, qudit_ladder};
use passive_engine::activation::{assess_activation, bath_ledger, optimal_bound_check};
use passive_engine::engine::{run_cycle, CycleParams};
use passive_engine::oracle::{mutual_information, simulate_cycle};
use passive_engine::reduction::{block_unitary_final, decompose, lifted_cycle};
use passive_engine::states::{relative_entropy, thermal_state, Beta};
use proptest::prelude::*;

proptest! {
    #[test]
    fn activation_constraints_hold(p in passive_qutrit(), h in ladder(), m in 1usize..=6, n in 1usize..=6) {
        let out = run_cycle(&p, &h, CycleParams { m, n }).unwrap();
        let report = assess_activation(&p, &h, &out).unwrap();
        prop_assert!(report.entropy_ok);
        prop_assert_eq!(report.activated, out.work > 0.0);
        if report.activated {
            prop_assert!(report.energy_ok);
        }
        prop_assert!(optimal_bound_check(&p, &h, &out).unwrap());
    }

    #[test]
    fn ledger_identity(p in passive_qutrit(), h in ladder(), m in 1usize..=4, n in 1usize..=4, beta in 0.05f64..5.0) {
        let params = CycleParams { m, n };
        let out = run_cycle(&p, &h, params).unwrap();
        let sim = simulate_cycle(&p, &h, params, &out.machine).unwrap();
        let ledger = bath_ledger(&p, &h, &sim.final_joint, &out.machine, beta).unwrap();
        prop_assert!(ledger.identity_residual().unwrap().abs() <= 1e-12);
        prop_assert!(ledger.relative_entropy >= -1e-14);
        prop_assert!(ledger.mutual_info >= -1e-14);
        prop_assert!(mutual_information(&sim.final_joint) >= -1e-14);
        let tau = thermal_state(Beta::Finite(beta), &h);
        prop_assert!(relative_entropy(&sim.system, &tau).unwrap() >= -1e-14);
    }

    #[test]
    fn lifted_work_factorises(
        (p, h) in (3usize..=10).prop_flat_map(|d| (passive_qudit(d), qudit_ladder(d))),
        k in 0usize..8,
        m in 1usize..=3,
        n in 1usize..=3,
    ) {
        prop_assume!(k + 3 <= p.dim());
        let params = CycleParams { m, n };
        let window = decompose(&p, &h, k).unwrap();
        let inner = run_cycle(&window.reduced_state, &window.reduced_hamiltonian, params).unwrap();
        let lifted = lifted_cycle(&p, &h, k, params).unwrap();
        prop_assert!((lifted.work - window.weight * inner.work).abs() <= 1e-12);
    }

    #[test]
    fn block_unitary_matches_lift(
        (p, h) in (3usize..=6).prop_flat_map(|d| (passive_qudit(d), qudit_ladder(d))),
        k in 0usize..4,
        m in 1usize..=3,
        n in 1usize..=3,
    ) {
        prop_assume!(k + 3 <= p.dim() && m + n <= 6);
        let params = CycleParams { m, n };
        let lifted = lifted_cycle(&p, &h, k, params).unwrap();
        let joint = block_unitary_final(&p, k, params, &lifted.machine).unwrap();
        prop_assert!(joint.system_marginal().max_abs_diff(&lifted.final_system) <= 1e-12);
        prop_assert!(joint.machine_marginal().max_abs_diff(&lifted.machine) <= 1e-12);
    }
}
