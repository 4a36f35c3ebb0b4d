// SPDX-License-Identifier: Apache-2.0

//! CRAB infidelity against total time for 21 and the empirical threshold
//! time, next to the speed-limit estimate. Takes a few minutes in release.

use crabfactor::encoding::{builtin_instance, Problem};
use crabfactor::optimize::{sweep_t, threshold_time, OptimizerConfig};
use crabfactor::spectrum::{min_gap, qsl, spectrum_curve, Pencil};

fn main() -> crabfactor::Result<()> {
    let problem = Problem::new(builtin_instance(21)?, 10.0)?;
    let pencil = Pencil::new(problem.h0.matrix().clone(), problem.hp.matrix().clone())?;
    let t_qsl = qsl(min_gap(&pencil, &spectrum_curve(&pencil, 201)?)?.gap)?;

    let cfg = OptimizerConfig {
        restarts: 3,
        seed: 11,
        ..OptimizerConfig::default()
    };
    let times = [0.05, 0.1, 0.15, 0.2, 0.3, 0.5];
    let results = sweep_t(&problem, &times, &cfg)?;
    for r in &results {
        println!("T = {:<5} best {:.3e}  mean {:.3e}", r.total_time, r.best_infidelity, r.mean_infidelity);
    }
    match threshold_time(&results, 0.1) {
        Some(t) => println!("threshold time {t} (T_QSL = {t_qsl:.3})"),
        None => println!("no time reached 0.1 (T_QSL = {t_qsl:.3})"),
    }
    Ok(())
}
