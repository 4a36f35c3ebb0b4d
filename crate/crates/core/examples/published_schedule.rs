// SPDX-License-Identifier: Apache-2.0

//! Replays the published CRAB optimum for 21 and shows that a schedule
//! survives a JSON round trip unchanged.

use crabfactor::dynamics::EvolutionConfig;
use crabfactor::encoding::{builtin_instance, Problem};
use crabfactor::optimize::simulate;
use crabfactor::schedule::{CrabParams, Schedule};

fn main() -> crabfactor::Result<()> {
    let problem = Problem::new(builtin_instance(21)?, 10.0)?;
    let crab = Schedule::crab(CrabParams::published_21());
    let linear = Schedule::linear(0.5)?;
    let cfg = EvolutionConfig::default();

    println!("  t/T   linear    crab");
    for i in 0..=10 {
        let t = 0.05 * i as f64;
        println!("{:5.2} {:8.4} {:8.4}", t / 0.5, linear.value(t), crab.value(t));
    }
    println!("infidelity: linear {:.4}, crab {:.2e}",
        simulate(&problem, &linear, &cfg)?.infidelity,
        simulate(&problem, &crab, &cfg)?.infidelity,
    );

    let json = serde_json::to_string(&crab)?;
    let back: Schedule = serde_json::from_str(&json)?;
    assert_eq!(back, crab);
    println!("{json}");
    Ok(())
}
