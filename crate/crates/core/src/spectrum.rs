// SPDX-License-Identifier: Apache-2.0

//! Spectra of `Ĥ(s) = (1 - s)Ĥ₀ + sĤ_p`, minimum gaps and the
//! speed-limit estimate `T_QSL = π/Δ_min`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::interpolate;
use crate::error::{Error, Result};
use crate::linalg::eigenvalues_sorted;

const DEGENERACY_TOL: f64 = 1e-9;
const REFINE_TOL: f64 = 1e-4;
const MIN_POINTS: usize = 11;

/// Default grid size.
pub const DEFAULT_POINTS: usize = 201;

/// The straight line `(1 - s)Ĥ₀ + sĤ_p`, `s ∈ [0, 1]`.
#[derive(Clone, Debug)]
pub struct Pencil {
    h0: DMatrix<Complex64>,
    hp: DMatrix<Complex64>,
}

impl Pencil {
    pub fn new(h0: DMatrix<Complex64>, hp: DMatrix<Complex64>) -> Result<Self> {
        if h0.shape() != hp.shape() || h0.nrows() != h0.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h0.nrows(),
                got: hp.nrows(),
            });
        }
        Ok(Self { h0, hp })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn at(&self, s: f64) -> DMatrix<Complex64> {
        interpolate(&self.h0, &self.hp, s)
    }

    /// Ascending eigenvalues at `s`.
    pub fn eigenvalues(&self, s: f64) -> Vec<f64> {
        eigenvalues_sorted(&self.at(s))
    }

    /// Multiplicity of the lowest eigenvalue of `Ĥ_p`.
    pub fn terminal_degeneracy(&self) -> usize {
        degeneracy(&self.eigenvalues(1.0))
    }
}

fn degeneracy(values: &[f64]) -> usize {
    let e0 = values[0];
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .take_while(|v| (*v - e0).abs() <= DEGENERACY_TOL * scale)
        .count()
}

/// Level energies relative to the ground level on a uniform `s` grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub s_grid: Vec<f64>,
    /// `gaps[i][k] = E_k(s_i) - E_0(s_i)`.
    pub gaps: Vec<Vec<f64>>,
    /// `E_0(s_i)`.
    pub ground: Vec<f64>,
}

impl SpectrumCurve {
    pub fn n_levels(&self) -> usize {
        self.gaps.first().map_or(0, Vec::len)
    }

    /// Writes `s, E_1 - E_0, ..., E_kmax - E_0`.
    pub fn write_csv<W: Write>(&self, writer: W, k_max: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let k_max = k_max.min(self.n_levels().saturating_sub(1));
        let mut header = vec!["s".to_string()];
        header.extend((1..=k_max).map(|k| format!("E{k}-E0")));
        w.write_record(&header)?;
        for (s, row) in self.s_grid.iter().zip(&self.gaps) {
            let mut rec = vec![s.to_string()];
            rec.extend(row[1..=k_max].iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full spectrum on `n_points` uniformly spaced values of `s` in `[0, 1]`.
pub fn spectrum_curve(pencil: &Pencil, n_points: usize) -> Result<SpectrumCurve> {
    if n_points < MIN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "spectrum needs at least {MIN_POINTS} points, got {n_points}"
        )));
    }
    let s_grid: Vec<f64> = (0..n_points)
        .map(|i| i as f64 / (n_points - 1) as f64)
        .collect();
    let rows: Vec<Vec<f64>> = s_grid.par_iter().map(|&s| pencil.eigenvalues(s)).collect();
    let ground = rows.iter().map(|r| r[0]).collect();
    let gaps = rows
        .into_iter()
        .map(|r| {
            let e0 = r[0];
            r.into_iter().map(|e| (e - e0).max(0.0)).collect()
        })
        .collect();
    Ok(SpectrumCurve {
        s_grid,
        gaps,
        ground,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapMinimum {
    pub gap: f64,
    pub s: f64,
    /// Levels treated as the ground space.
    pub ground_degeneracy: usize,
}

/// Smallest gap above the ground space along the curve, refined by a
/// golden-section search between the neighbours of the grid minimum.
///
/// When `Ĥ_p` has a `d`-fold degenerate ground level the gap is taken as
/// `E_d - E_0`: the `d` lowest levels all end in the solution space, so only
/// leakage above them counts.
pub fn min_gap(pencil: &Pencil, curve: &SpectrumCurve) -> Result<GapMinimum> {
    let n = curve.n_levels();
    let d = degeneracy(&pencil.eigenvalues(1.0));
    if d >= n {
        return Err(Error::DegenerateSpectrum);
    }
    let gap_at = |s: f64| {
        let e = pencil.eigenvalues(s);
        e[d] - e[0]
    };
    let (i_min, coarse) = curve
        .gaps
        .iter()
        .map(|row| row[d])
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("curve is non-empty");
    let last = curve.s_grid.len() - 1;
    let mut lo = curve.s_grid[i_min.saturating_sub(1)];
    let mut hi = curve.s_grid[(i_min + 1).min(last)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = gap_at(x1);
    let mut f2 = gap_at(x2);
    while hi - lo > REFINE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = gap_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = gap_at(x2);
        }
    }
    let (gap, s) = [(coarse, curve.s_grid[i_min]), (f1, x1), (f2, x2)]
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    Ok(GapMinimum {
        gap,
        s,
        ground_degeneracy: d,
    })
}

/// `π/Δ_min`.
pub fn qsl(min_gap: f64) -> Result<f64> {
    if !(min_gap > 0.0) || !min_gap.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "speed limit needs a positive gap, got {min_gap}"
        )));
    }
    Ok(PI / min_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{builtin_instance, Problem};
    use crate::linalg::c64;

    fn pencil(omega: u64) -> Pencil {
        let p = Problem::new(builtin_instance(omega).unwrap(), 10.0).unwrap();
        Pencil::new(p.h0.matrix().clone(), p.hp.matrix().clone()).unwrap()
    }

    #[test]
    fn endpoints_of_21() {
        let c = spectrum_curve(&pencil(21), 101).unwrap();
        assert_eq!(c.gaps.len(), 101);
        let first = &c.gaps[0];
        let expected0 = [0.0, 20.0, 20.0, 20.0, 40.0, 40.0, 40.0, 60.0];
        for (a, b) in first.iter().zip(expected0) {
            assert!((a - b).abs() < 1e-9);
        }
        let last = c.gaps.last().unwrap();
        let expected1 = [0.0, 36.0, 144.0, 196.0, 256.0, 324.0, 324.0, 400.0];
        for (a, b) in last.iter().zip(expected1) {
            assert!((a - b).abs() < 1e-9);
        }
        for row in &c.gaps {
            assert!(row.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn min_gap_21() {
        let p = pencil(21);
        let c = spectrum_curve(&p, DEFAULT_POINTS).unwrap();
        let m = min_gap(&p, &c).unwrap();
        assert!((m.gap - 17.8608).abs() < 1e-3, "{m:?}");
        let coarse = c.gaps.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
        assert!(m.gap <= coarse);
        assert!((qsl(m.gap).unwrap() - 0.1759).abs() < 1e-3);
    }

    #[test]
    fn two_level_toy() {
        let x = DMatrix::from_row_slice(2, 2, &[c64(0.0), c64(-1.0), c64(-1.0), c64(0.0)]);
        let z = DMatrix::from_row_slice(2, 2, &[c64(1.0), c64(0.0), c64(0.0), c64(-1.0)]);
        let p = Pencil::new(x, z).unwrap();
        let m = min_gap(&p, &spectrum_curve(&p, 101).unwrap()).unwrap();
        assert!((m.gap - 2f64.sqrt()).abs() < 1e-8);
        assert!((m.s - 0.5).abs() < 1e-4);
    }

    #[test]
    fn degenerate_terminal_level() {
        let p = pencil(91);
        assert_eq!(p.terminal_degeneracy(), 2);
        let m = min_gap(&p, &spectrum_curve(&p, 51).unwrap()).unwrap();
        assert_eq!(m.ground_degeneracy, 2);
        assert!(m.gap > 1e-3);
    }

    #[test]
    fn all_degenerate_rejected() {
        let z = DMatrix::<Complex64>::zeros(2, 2);
        let p = Pencil::new(z.clone(), z).unwrap();
        let c = spectrum_curve(&p, 11).unwrap();
        assert!(matches!(min_gap(&p, &c), Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn qsl_values() {
        assert!((qsl(PI).unwrap() - 1.0).abs() < 1e-15);
        assert!(qsl(0.0).is_err());
        assert!(qsl(-1.0).is_err());
    }

    #[test]
    fn csv_shape() {
        let c = spectrum_curve(&pencil(77), 11).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, 10).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,E1-E0,E2-E0,E3-E0\n"));
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn too_few_points() {
        assert!(spectrum_curve(&pencil(21), 10).is_err());
    }
}
