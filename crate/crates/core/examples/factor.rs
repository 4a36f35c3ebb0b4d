// SPDX-License-Identifier: Apache-2.0

//! End to end: optimize a schedule for 2479, read the factors off the final
//! state and show how the dominant population depends on the total time.

use crabfactor::encoding::{basis_label, builtin_instance, Problem};
use crabfactor::optimize::{optimize_crab, simulate, OptimizerConfig};
use crabfactor::runner::decode_factors;
use crabfactor::schedule::Schedule;

fn main() -> crabfactor::Result<()> {
    let problem = Problem::new(builtin_instance(2479)?, 10.0)?;
    let n = problem.n_qubits();
    let cfg = OptimizerConfig {
        restarts: 2,
        seed: 3,
        ..OptimizerConfig::default()
    };
    for t in [0.75, 2.0] {
        let r = optimize_crab(&problem, t, &cfg)?;
        let state = simulate(&problem, &Schedule::crab(r.best_params.clone()), &cfg.reporting_evolution())?.state;
        let pops = state.populations();
        let target = problem.targets[0];
        println!("T = {t}: P({}) = {:.4}", basis_label(target, n), pops[target]);
        match decode_factors(&problem, &state) {
            Ok((a, b)) => println!("  2479 = {a} × {b}"),
            Err(e) => println!("  {e}"),
        }
    }
    Ok(())
}
