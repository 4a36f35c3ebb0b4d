// SPDX-License-Identifier: Apache-2.0

//! Plain linear ramp for 21: final infidelity against total time, and the
//! instantaneous-eigenstate populations along one run.

use crabfactor::dynamics::{evolve_pure, AnnealPath, EvolutionConfig, TrajectoryTable};
use crabfactor::encoding::{builtin_instance, Problem};
use crabfactor::linalg::QuantumState;
use crabfactor::optimize::simulate;
use crabfactor::schedule::Schedule;

fn main() -> crabfactor::Result<()> {
    let problem = Problem::new(builtin_instance(21)?, 10.0)?;
    for t in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let out = simulate(&problem, &Schedule::linear(t)?, &EvolutionConfig::default())?;
        println!("T = {t:<4}  infidelity {:.4}", out.infidelity);
    }

    let schedule = Schedule::linear(0.5)?;
    let path = AnnealPath::new(problem.h0.matrix(), problem.hp.matrix(), &schedule)?;
    let cfg = EvolutionConfig {
        record_trajectory: true,
        record_stride: 100,
        ..EvolutionConfig::default()
    };
    let QuantumState::Pure(psi0) = problem.initial_state() else {
        unreachable!()
    };
    let traj = evolve_pure(&path, &psi0, &cfg)?.trajectory.expect("recorded");
    let table = TrajectoryTable::new(&traj, &path, &problem.targets, 3)?;
    println!();
    table.write_csv(std::io::stdout().lock())
}
