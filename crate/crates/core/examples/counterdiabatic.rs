// SPDX-License-Identifier: Apache-2.0

//! Local counter-diabatic driving on the linear ramp, compared with the bare
//! ramp, with and without dephasing.

use crabfactor::cd::{cd_coefficients, cd_sweep, z_decompose, CdConfig};
use crabfactor::dynamics::EvolutionConfig;
use crabfactor::encoding::{builtin_instance, Problem};

fn main() -> crabfactor::Result<()> {
    let omega: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(21);
    let problem = Problem::new(builtin_instance(omega)?, 10.0)?;
    let dec = z_decompose(&problem.hp_operator)?;
    println!("h = {:?}, {} pair, {} triple, {} quadruple couplings", dec.h, dec.j.len(), dec.k.len(), dec.l.len());
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("s = {s:<4} α = {:.4?}", cd_coefficients(&dec, problem.g, s, &CdConfig::default()));
    }

    let times = [0.05, 0.1, 0.2, 0.5, 1.0];
    let off = CdConfig {
        strength: 0.0,
        ..CdConfig::default()
    };
    for gamma in [0.0, 0.04] {
        let cfg = EvolutionConfig {
            gamma,
            ..EvolutionConfig::default()
        };
        let cd = cd_sweep(&problem, &times, &CdConfig::default(), &cfg)?;
        let bare = cd_sweep(&problem, &times, &off, &cfg)?;
        println!("\nγ = {gamma}");
        for (c, b) in cd.iter().zip(&bare) {
            println!("T = {:<5} cd {:.4}  linear {:.4}", c.total_time, c.infidelity, b.infidelity);
        }
    }
    Ok(())
}
