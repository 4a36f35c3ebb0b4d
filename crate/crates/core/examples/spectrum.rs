// SPDX-License-Identifier: Apache-2.0

//! Minimum gap and speed-limit time along the linear path.
//!
//! `cargo run --example spectrum -- 2479 > gaps.csv` also writes the gap
//! curves to stdout as CSV.

use crabfactor::encoding::{instance_for, Problem};
use crabfactor::spectrum::{min_gap, qsl, spectrum_curve, Pencil, DEFAULT_POINTS};

fn main() -> crabfactor::Result<()> {
    let omega: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(21);
    let problem = Problem::new(instance_for(omega)?, 10.0)?;
    let pencil = Pencil::new(problem.h0.matrix().clone(), problem.hp.matrix().clone())?;
    let curve = spectrum_curve(&pencil, DEFAULT_POINTS)?;
    let m = min_gap(&pencil, &curve)?;
    eprintln!(
        "ω = {omega}: Δ_min = {:.4} at s = {:.4}, T_QSL = {:.4}",
        m.gap,
        m.s,
        qsl(m.gap)?
    );
    curve.write_csv(std::io::stdout().lock(), 8)
}
