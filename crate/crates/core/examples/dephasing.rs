// SPDX-License-Identifier: Apache-2.0

//! Open-system runs: one dephasing qubit against the analytic coherence,
//! then the published 21 schedule at increasing dephasing rates.

use crabfactor::dynamics::{evolve_density, purity, AnnealPath, EvolutionConfig, HamiltonianPath};
use crabfactor::encoding::{builtin_instance, Problem};
use crabfactor::linalg::c64;
use crabfactor::optimize::simulate;
use crabfactor::schedule::{CrabParams, Schedule};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// `Ĥ = 0` on one qubit for a fixed time.
struct Idle(f64);

impl HamiltonianPath for Idle {
    fn dim(&self) -> usize {
        2
    }
    fn total_time(&self) -> f64 {
        self.0
    }
    fn hamiltonian(&self, _t: f64) -> DMatrix<Complex64> {
        DMatrix::zeros(2, 2)
    }
}

fn main() -> crabfactor::Result<()> {
    let gamma = 0.04;
    let plus = DMatrix::from_element(2, 2, c64(0.5));
    for t in [0.5, 2.0, 10.0] {
        let cfg = EvolutionConfig {
            gamma,
            ..EvolutionConfig::default()
        };
        let rho = evolve_density(&Idle(t), &plus, &cfg)?.state.to_density();
        println!(
            "t = {t:<4} coherence {:.8}, analytic {:.8}",
            rho[(0, 1)].re,
            0.5 * (-2.0 * gamma * t).exp()
        );
    }

    let problem = Problem::new(builtin_instance(21)?, 10.0)?;
    let schedule = Schedule::crab(CrabParams::published_21());
    for gamma in [0.0, 0.01, 0.04, 0.1, 0.4] {
        let cfg = EvolutionConfig {
            gamma,
            ..EvolutionConfig::default()
        };
        let out = simulate(&problem, &schedule, &cfg)?;
        let p = purity(&out.state.to_density());
        println!("γ = {gamma:<4}  infidelity {:.4e}  purity {p:.4}", out.infidelity);
    }

    // the same path can be handed to the density-matrix integrator directly
    let path = AnnealPath::new(problem.h0.matrix(), problem.hp.matrix(), &schedule)?;
    let rho0 = problem.initial_state().to_density();
    let cfg = EvolutionConfig {
        gamma: 0.04,
        ..EvolutionConfig::default()
    };
    let rho = evolve_density(&path, &rho0, &cfg)?.state.to_density();
    println!("trace after anneal: {:.12}", rho.trace().re);
    Ok(())
}
