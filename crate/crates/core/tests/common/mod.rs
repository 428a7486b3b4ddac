#![allow(dead_code)]

use passive_engine::{DiagonalState, Hamiltonian};
use proptest::prelude::*;

/// Strictly decreasing positive qutrit populations, bounded away from the
/// edges of the passive triangle.
pub fn passive_qutrit() -> impl Strategy<Value = DiagonalState> {
    (0.02f64..1.0, 0.02f64..1.0, 0.02f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c;
        let (a, b, c) = (a / s, b / s, c / s);
        let p2 = c / 3.0;
        let p1 = b / 2.0 + p2;
        DiagonalState::from_weights(vec![a + p1, p1, p2]).unwrap()
    })
}

pub fn ladder() -> impl Strategy<Value = Hamiltonian> {
    (-1.0f64..1.0, 0.1f64..4.0, 0.1f64..4.0)
        .prop_map(|(e0, g10, g21)| Hamiltonian::qutrit(e0, e0 + g10, e0 + g10 + g21).unwrap())
}

/// Non-decreasing ladder of `dim` levels.
pub fn qudit_ladder(dim: usize) -> impl Strategy<Value = Hamiltonian> {
    prop::collection::vec(0.05f64..2.0, dim - 1).prop_map(|gaps| {
        let mut e = vec![0.0];
        for g in gaps {
            e.push(e.last().unwrap() + g);
        }
        Hamiltonian::new(e).unwrap()
    })
}

/// Passive strictly positive state of `dim` levels.
pub fn passive_qudit(dim: usize) -> impl Strategy<Value = DiagonalState> {
    prop::collection::vec(0.01f64..1.0, dim).prop_map(|mut w| {
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        DiagonalState::from_weights(w).unwrap()
    })
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
