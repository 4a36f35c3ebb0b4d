// SPDX-License-Identifier: Apache-2.0

//! Multi-restart CRAB optimization for 21.
//!
//! `cargo run --release --example optimize -- [T] [restarts] [seed]`

use crabfactor::encoding::{builtin_instance, Problem};
use crabfactor::optimize::{optimize_crab, OptimizerConfig};

fn main() -> crabfactor::Result<()> {
    let mut args = std::env::args().skip(1);
    let total_time: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let restarts: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let problem = Problem::new(builtin_instance(21)?, 10.0)?;
    let cfg = OptimizerConfig {
        restarts,
        seed,
        ..OptimizerConfig::default()
    };
    let r = optimize_crab(&problem, total_time, &cfg)?;
    for x in &r.restarts {
        println!(
            "restart {}: infidelity {:.3e} after {} iterations{}",
            x.index,
            x.infidelity,
            x.iterations,
            if x.converged { "" } else { " (cap)" }
        );
    }
    println!(
        "best {:.3e}, mean {:.3e}, linear ramp {:.4}",
        r.best_infidelity, r.mean_infidelity, r.linear_infidelity
    );
    println!("A = {:?}\nB = {:?}", r.best_params.a, r.best_params.b);
    Ok(())
}
