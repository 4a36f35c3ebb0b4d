// SPDX-License-Identifier: Apache-2.0

//! Oracles and property checks shared by the integration suites and the
//! acceptance harness.

#![allow(dead_code)]

use crabfactor::cd::z_decompose;
use crabfactor::dynamics::{evolve_pure, AnnealPath, EvolutionConfig};
use crabfactor::encoding::{builtin_instance, FactorInstance, Problem};
use crabfactor::linalg::QuantumState;
use crabfactor::optimize::{nelder_mead, optimize_crab, simulate, NelderMeadConfig, OptimizerConfig};
use crabfactor::pauli::{materialize, PauliString, QubitOperator};
use crabfactor::schedule::{sample_frequencies, CrabParams, Schedule};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const BUILTINS: [u64; 6] = [21, 77, 91, 187, 703, 2479];

/// Bit `q` of basis index `k` on `n` qubits, qubit 0 most significant.
pub fn bit(k: usize, q: usize, n: usize) -> i64 {
    ((k >> (n - 1 - q)) & 1) as i64
}

fn bit_len(x: u64) -> usize {
    64 - x.leading_zeros() as usize
}

/// `(ω - ab)²` for every basis state of the direct encoding, computed from
/// the bit lengths alone.
pub fn direct_costs(omega: u64) -> Vec<i64> {
    let mut root = (omega as f64).sqrt() as u64;
    while root * root > omega {
        root -= 1;
    }
    while (root + 1) * (root + 1) <= omega {
        root += 1;
    }
    let odd_root = if root % 2 == 1 { root } else { root - 1 };
    let n_a = bit_len(odd_root) - 1;
    let n_b = bit_len(omega / 3) - 1;
    let n = n_a + n_b;
    (0..1usize << n)
        .map(|k| {
            let a = 1 + (1..=n_a).map(|l| bit(k, l - 1, n) << l).sum::<i64>();
            let b = 1 + (1..=n_b).map(|m| bit(k, n_a + m - 1, n) << m).sum::<i64>();
            let r = omega as i64 - a * b;
            r * r
        })
        .collect()
}

/// `Σ w_i e_i(x)²` for the built-in equation sets, written out by hand.
/// Variables are listed in qubit order.
pub fn equation_costs(omega: u64) -> Option<Vec<i64>> {
    type Eqs = fn(&[i64]) -> Vec<i64>;
    let (n, weights, eqs): (usize, &[i64], Eqs) = match omega {
        77 => (2, &[10, 5], |x| vec![x[0] + 2 * x[1] - 1, x[0] + x[1] - 1]),
        187 => (3, &[1, 5, 10], |x| {
            vec![x[0] + x[1] - 1, x[0] - 2 * x[2], x[1] + x[2] - 1]
        }),
        703 => (4, &[1, 1, 10, 5], |x| {
            let (a1, a2, a3, c) = (x[0], x[1], x[2], x[3]);
            vec![
                a1 + a2 + a3 - 2 * a1 * a2 - 1,
                a3 - a1 * a3,
                a3 - a2 * a3 + a1 - 2 * c,
                1 - a1 - a2 + 2 * a3 + c,
            ]
        }),
        2479 => (4, &[1, 1, 1, 10, 5], |x| {
            let (a3, b1, b2, c) = (x[0], x[1], x[2], x[3]);
            vec![
                a3 * b1 - b1,
                a3 * b2 - b1,
                a3 + b2 + c - 1,
                b1 - b2 - 2 * c + 1,
                a3 - 2 * b1 * b2 - b1 + b2 - 1,
            ]
        }),
        _ => return None,
    };
    Some(
        (0..1usize << n)
            .map(|k| {
                let x: Vec<i64> = (0..n).map(|q| bit(k, q, n)).collect();
                eqs(&x).iter().zip(weights).map(|(e, w)| w * e * e).sum()
            })
            .collect(),
    )
}

/// Brute-force cost table for any instance this crate builds by default.
pub fn oracle_costs(inst: &FactorInstance) -> Vec<i64> {
    equation_costs(inst.omega())
        .filter(|_| inst.method() == "equation_set")
        .unwrap_or_else(|| direct_costs(inst.omega()))
}

/// Library diagonal equals the oracle exactly.
pub fn diagonal_matches(inst: &FactorInstance) -> bool {
    let h = materialize(&inst.hamiltonian().unwrap()).unwrap();
    let diag = h.diagonal().unwrap();
    let oracle = oracle_costs(inst);
    diag.len() == oracle.len() && diag.iter().zip(&oracle).all(|(d, o)| *d == *o as f64)
}

pub fn problem(omega: u64) -> Problem {
    Problem::new(builtin_instance(omega).unwrap(), 10.0).unwrap()
}

pub fn pure(state: &QuantumState) -> DVector<Complex64> {
    match state {
        QuantumState::Pure(v) => v.clone(),
        QuantumState::Mixed(_) => panic!("expected a pure state"),
    }
}

// ---- strategies ----

pub fn crab_strategy() -> impl Strategy<Value = CrabParams> {
    (
        0.1f64..1.0,
        prop::collection::vec(-0.5f64..=0.5, 8),
        prop::collection::vec(-0.6f64..0.6, 8),
    )
        .prop_map(|(t, r, c)| {
            CrabParams::new(t, r[..4].to_vec(), r[4..].to_vec(), c[..4].to_vec(), c[4..].to_vec()).unwrap()
        })
}

/// A random Z-polynomial with couplings of weight at most four.
pub fn z_operator_strategy() -> impl Strategy<Value = QubitOperator> {
    (4usize..=6).prop_flat_map(|n| {
        prop::collection::vec((prop::collection::btree_set(0..n, 0..=4), -50.0f64..50.0), 1..24).prop_map(
            move |terms| {
                let mut op = QubitOperator::zero(n);
                for (qs, c) in terms {
                    let qs: Vec<usize> = qs.into_iter().collect();
                    op.add_term(PauliString::z_product(n, &qs), c);
                }
                op
            },
        )
    })
}

// ---- property checks ----

/// Norm is preserved along a random CRAB anneal of 21.
pub fn check_norm(params: &CrabParams) -> Result<(), TestCaseError> {
    let p = problem(21);
    let sched = Schedule::crab(params.clone());
    let path = AnnealPath::new(p.h0.matrix(), p.hp.matrix(), &sched).unwrap();
    let psi = evolve_pure(&path, &pure(&p.initial_state()), &EvolutionConfig::default()).unwrap().state;
    let norm = pure(&psi).norm();
    prop_assert!((norm - 1.0).abs() < 1e-10, "norm {norm}");
    Ok(())
}

/// Halving the step changes the final state by less than 1e-6.
pub fn check_step_halving(params: &CrabParams) -> Result<(), TestCaseError> {
    let p = problem(21);
    let sched = Schedule::crab(params.clone());
    let a = simulate(&p, &sched, &EvolutionConfig::with_steps(1000)).unwrap();
    let b = simulate(&p, &sched, &EvolutionConfig::with_steps(2000)).unwrap();
    let d = (pure(&a.state) - pure(&b.state)).norm();
    prop_assert!(d < 1e-6, "state difference {d:e}");
    prop_assert!((a.infidelity - b.infidelity).abs() < 1e-6);
    Ok(())
}

/// `s(0) = 0` and `s(T) = 1` exactly.
pub fn check_boundaries(params: &CrabParams) -> Result<(), TestCaseError> {
    let s = Schedule::crab(params.clone());
    prop_assert_eq!(s.eval(0.0).unwrap(), 0.0);
    prop_assert_eq!(s.eval(params.total_time).unwrap(), 1.0);
    Ok(())
}

/// Identical seeds give identical bases and identical short optimizations.
pub fn check_determinism(seed: u64) -> Result<(), TestCaseError> {
    prop_assert_eq!(sample_frequencies(4, 0.5, seed).unwrap(), sample_frequencies(4, 0.5, seed).unwrap());
    let p = problem(21);
    let cfg = OptimizerConfig {
        restarts: 2,
        seed,
        steps: 50,
        nelder_mead: NelderMeadConfig {
            max_iterations: 4,
            ..NelderMeadConfig::default()
        },
        ..OptimizerConfig::default()
    };
    let a = optimize_crab(&p, 0.3, &cfg).unwrap();
    let b = optimize_crab(&p, 0.3, &cfg).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

/// Best cost and best infidelity never increase during an optimization.
pub fn check_monotone_traces(seed: u64, shift: Vec<f64>) -> Result<(), TestCaseError> {
    let r = nelder_mead(
        |x| Ok(x.iter().zip(&shift).enumerate().map(|(i, (v, s))| (i + 1) as f64 * (v - s).powi(2)).sum::<f64>() + (x[0] * x[1]).sin()),
        &vec![0.0; shift.len()],
        &NelderMeadConfig {
            max_iterations: 200,
            ..NelderMeadConfig::default()
        },
    )
    .unwrap();
    prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));

    let cfg = OptimizerConfig {
        restarts: 1,
        seed,
        steps: 50,
        nelder_mead: NelderMeadConfig {
            max_iterations: 15,
            ..NelderMeadConfig::default()
        },
        ..OptimizerConfig::default()
    };
    let o = optimize_crab(&problem(21), 0.4, &cfg).unwrap();
    for x in &o.restarts {
        prop_assert!(x.cost_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(x.trace.windows(2).all(|w| w[1] <= w[0]));
    }
    Ok(())
}

/// Splitting into couplings and rebuilding reproduces the operator.
pub fn check_z_round_trip(op: &QubitOperator) -> Result<(), TestCaseError> {
    let dec = z_decompose(op).unwrap();
    let a = materialize(op).unwrap();
    let b = materialize(&dec.rebuild()).unwrap();
    let err = (a.matrix() - b.matrix()).amax_norm();
    prop_assert!(err <= 1e-12, "round-trip error {err:e}");
    Ok(())
}

trait AmaxNorm {
    fn amax_norm(&self) -> f64;
}

impl AmaxNorm for nalgebra::DMatrix<Complex64> {
    fn amax_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}
