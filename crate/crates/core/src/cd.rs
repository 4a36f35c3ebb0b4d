// SPDX-License-Identifier: Apache-2.0

//! Local counter-diabatic driving baseline.
//!
//! The problem Hamiltonian is split into Z-string couplings of weight up to
//! four. Along `Ĥ(s) = (1 - s)Ĥ₀ + sĤ_p` the first-order local gauge potential
//! gives `Ĥ_CD = ṡ Σ_i α_i σ_y^(i)` with
//! `α_i = (h_z ḣ_x - h_x ḣ_z) / (2ṡ R_i)` and
//! `R_i = h_z² + h_x² + 2ΣJ² + 3ΣK² + 4ΣL²`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{EvolutionConfig, HamiltonianPath};
use crate::encoding::Problem;
use crate::error::{Error, Result};
use crate::local::LocalFields;
use crate::optimize::{simulate_path, Outcome};
use crate::pauli::{PauliString, QubitOperator};
use crate::schedule::Schedule;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `Ĥ_p = Σ h_i Z_i + Σ J_ij Z_iZ_j + Σ K_ijk Z_iZ_jZ_k + Σ L_ijkl Z_iZ_jZ_kZ_l + c·I`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ZDecomposition {
    pub n_qubits: usize,
    pub h: Vec<f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub k: BTreeMap<(usize, usize, usize), f64>,
    pub l: BTreeMap<(usize, usize, usize, usize), f64>,
    pub constant: f64,
}

impl ZDecomposition {
    pub fn rebuild(&self) -> QubitOperator {
        let n = self.n_qubits;
        let mut op = QubitOperator::identity(n, self.constant);
        let mut add = |qs: &[usize], c: f64| op.add_term(PauliString::z_product(n, qs), c);
        for (i, &c) in self.h.iter().enumerate() {
            add(&[i], c);
        }
        for (&(a, b), &c) in &self.j {
            add(&[a, b], c);
        }
        for (&(a, b, d), &c) in &self.k {
            add(&[a, b, d], c);
        }
        for (&(a, b, d, e), &c) in &self.l {
            add(&[a, b, d, e], c);
        }
        op
    }

    /// `(Σ_{pairs ∋ i} J², Σ_{triples ∋ i} K², Σ_{quads ∋ i} L²)`, or sums
    /// over every coupling when `all` is set.
    fn coupling_sums(&self, i: usize, all: bool) -> (f64, f64, f64) {
        let sq = |it: &mut dyn Iterator<Item = f64>| it.map(|c| c * c).sum::<f64>();
        let j = sq(&mut self
            .j
            .iter()
            .filter(|((a, b), _)| all || *a == i || *b == i)
            .map(|(_, c)| *c));
        let k = sq(&mut self
            .k
            .iter()
            .filter(|((a, b, d), _)| all || [*a, *b, *d].contains(&i))
            .map(|(_, c)| *c));
        let l = sq(&mut self
            .l
            .iter()
            .filter(|((a, b, d, e), _)| all || [*a, *b, *d, *e].contains(&i))
            .map(|(_, c)| *c));
        (j, k, l)
    }
}

/// Splits a Z-diagonal operator into its coupling tables.
pub fn z_decompose(hp: &QubitOperator) -> Result<ZDecomposition> {
    let n = hp.n_qubits();
    let mut dec = ZDecomposition {
        n_qubits: n,
        h: vec![0.0; n],
        ..ZDecomposition::default()
    };
    for (string, c) in hp.terms() {
        if !string.is_diagonal() {
            return Err(Error::NonZTerm {
                term: string.to_string(),
            });
        }
        match string.support()[..] {
            [] => dec.constant += c,
            [a] => dec.h[a] += c,
            [a, b] => *dec.j.entry((a, b)).or_default() += c,
            [a, b, d] => *dec.k.entry((a, b, d)).or_default() += c,
            [a, b, d, e] => *dec.l.entry((a, b, d, e)).or_default() += c,
            _ => {
                return Err(Error::CouplingTooHigh {
                    term: string.to_string(),
                })
            }
        }
    }
    Ok(dec)
}

/// Which couplings enter `R_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSum {
    /// Couplings that involve qubit `i`.
    #[default]
    PerQubit,
    /// Every coupling, for every qubit.
    AllCouplings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdConfig {
    /// Floor applied to `R_i`.
    pub epsilon_r: f64,
    pub coupling_sum: CouplingSum,
    /// Multiplies every `α_i`; zero switches the drive off.
    pub strength: f64,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            epsilon_r: 1e-12,
            coupling_sum: CouplingSum::PerQubit,
            strength: 1.0,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_r > 0.0) {
            return Err(Error::InvalidArgument("epsilon_r must be positive".into()));
        }
        if !self.strength.is_finite() {
            return Err(Error::InvalidArgument("CD strength must be finite".into()));
        }
        Ok(())
    }
}

/// `R_i(s)` with `h_x = (1 - s)h̃_x` and every Z coupling scaled by `s`.
fn r_i(dec: &ZDecomposition, h_x: f64, s: f64, i: usize, coupling: CouplingSum) -> f64 {
    let (j, k, l) = dec.coupling_sums(i, coupling == CouplingSum::AllCouplings);
    let hx = (1.0 - s) * h_x;
    let hz = s * dec.h[i];
    hz * hz + hx * hx + s * s * (2.0 * j + 3.0 * k + 4.0 * l)
}

/// `α_i(s) = -h̃_x h̃_z^(i) / (2R_i(s))` with `h̃_x = -g`; the `ṡ` of the
/// general expression cancels.
pub fn cd_coefficients(dec: &ZDecomposition, g: f64, s: f64, cfg: &CdConfig) -> Vec<f64> {
    let h_x = -g;
    (0..dec.n_qubits)
        .map(|i| {
            let r = r_i(dec, h_x, s, i, cfg.coupling_sum).max(cfg.epsilon_r);
            -h_x * dec.h[i] / (2.0 * r) * cfg.strength
        })
        .collect()
}

/// The uncancelled ratio `(h_z ḣ_x - h_x ḣ_z) / (2ṡR_i)`.
pub fn cd_coefficients_literal(dec: &ZDecomposition, g: f64, s: f64, s_dot: f64, cfg: &CdConfig) -> Result<Vec<f64>> {
    if s_dot == 0.0 || !s_dot.is_finite() {
        return Err(Error::InvalidArgument(format!("ṡ = {s_dot} must be finite and non-zero")));
    }
    let h_x_tilde = -g;
    Ok((0..dec.n_qubits)
        .map(|i| {
            let hx = (1.0 - s) * h_x_tilde;
            let hz = s * dec.h[i];
            let dhx = -s_dot * h_x_tilde;
            let dhz = s_dot * dec.h[i];
            let r = r_i(dec, h_x_tilde, s, i, cfg.coupling_sum).max(cfg.epsilon_r);
            (hz * dhx - hx * dhz) / (2.0 * s_dot * r) * cfg.strength
        })
        .collect())
}

/// `Ĥ(t) + ṡ Σ_i α_i(s(t)) σ_y^(i)`.
pub struct CdPath<'a> {
    schedule: &'a Schedule,
    h0: LocalFields,
    hp: LocalFields,
    dec: ZDecomposition,
    g: f64,
    cfg: CdConfig,
}

impl<'a> CdPath<'a> {
    pub fn new(problem: &Problem, schedule: &'a Schedule, cfg: &CdConfig) -> Result<Self> {
        cfg.validate()?;
        let local = |m: &DMatrix<Complex64>| {
            LocalFields::from_dense(m).ok_or_else(|| Error::InvalidArgument("Hamiltonian is not local".into()))
        };
        Ok(Self {
            schedule,
            h0: local(problem.h0.matrix())?,
            hp: local(problem.hp.matrix())?,
            dec: z_decompose(&problem.hp_operator)?,
            g: problem.g,
            cfg: cfg.clone(),
        })
    }

    /// `ṡ α_i` at time `t`.
    pub fn drive(&self, t: f64) -> Vec<f64> {
        let (s, s_dot) = self.schedule.value_and_rate(t);
        cd_coefficients(&self.dec, self.g, s, &self.cfg)
            .into_iter()
            .map(|a| s_dot * a)
            .collect()
    }
}

impl HamiltonianPath for CdPath<'_> {
    fn dim(&self) -> usize {
        self.h0.dim()
    }

    fn total_time(&self) -> f64 {
        self.schedule.total_time()
    }

    fn hamiltonian(&self, t: f64) -> DMatrix<Complex64> {
        let mut f = LocalFields::zeros(self.h0.n_qubits());
        self.local_fields(t, &mut f);
        f.to_dense()
    }

    fn local_fields(&self, t: f64, out: &mut LocalFields) -> bool {
        let (s, s_dot) = self.schedule.value_and_rate(t);
        out.combine_from(1.0 - s, &self.h0, s, &self.hp);
        for (y, a) in out.y.iter_mut().zip(cd_coefficients(&self.dec, self.g, s, &self.cfg)) {
            *y += s_dot * a;
        }
        true
    }

    fn s(&self, t: f64) -> Option<f64> {
        Some(self.schedule.value(t))
    }
}

/// Anneals with the local CD term added; `evolution.gamma` selects open or
/// closed dynamics.
pub fn evolve_with_cd(problem: &Problem, schedule: &Schedule, cfg: &CdConfig, evolution: &EvolutionConfig) -> Result<Outcome> {
    simulate_path(problem, &CdPath::new(problem, schedule, cfg)?, evolution)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdPoint {
    pub total_time: f64,
    pub infidelity: f64,
    pub energy: f64,
}

/// CD runs on the linear ramp for each total time, in input order.
pub fn cd_sweep(problem: &Problem, times: &[f64], cfg: &CdConfig, evolution: &EvolutionConfig) -> Result<Vec<CdPoint>> {
    times
        .par_iter()
        .map(|&t| {
            let out = evolve_with_cd(problem, &Schedule::linear(t)?, cfg, evolution)?;
            Ok(CdPoint {
                total_time: t,
                infidelity: out.infidelity,
                energy: out.energy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::builtin_instance;
    use crate::optimize::simulate;
    use crate::pauli::materialize;

    fn problem(omega: u64) -> Problem {
        Problem::new(builtin_instance(omega).unwrap(), 10.0).unwrap()
    }

    #[test]
    fn decomposition_of_2479() {
        let dec = z_decompose(&problem(2479).hp_operator).unwrap();
        assert_eq!(dec.h[0], 4.75);
        assert_eq!(dec.j[&(0, 1)], -5.5);
        assert_eq!(dec.k[&(0, 1, 2)], 2.75);
        assert_eq!(dec.constant, 29.25);
        assert!(dec.l.is_empty());
    }

    #[test]
    fn single_z_term() {
        let op = QubitOperator::from_terms(1, [("Z".parse().unwrap(), 2.0)]).unwrap();
        let dec = z_decompose(&op).unwrap();
        assert_eq!(dec.h, vec![2.0]);
        assert!(dec.j.is_empty() && dec.k.is_empty() && dec.l.is_empty());
    }

    #[test]
    fn round_trip_for_builtins() {
        for omega in [21, 77, 91, 187, 703, 2479] {
            let p = problem(omega);
            let dec = z_decompose(&p.hp_operator).unwrap();
            if omega == 21 {
                assert!(!dec.k.is_empty());
            }
            let rebuilt = materialize(&dec.rebuild()).unwrap();
            assert!((rebuilt.matrix() - p.hp.matrix()).camax() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_z_and_high_weight() {
        let x = QubitOperator::from_terms(1, [("X".parse().unwrap(), 1.0)]).unwrap();
        assert!(matches!(z_decompose(&x), Err(Error::NonZTerm { .. })));
        let z5 = QubitOperator::from_terms(5, [("ZZZZZ".parse().unwrap(), 1.0)]).unwrap();
        assert!(matches!(z_decompose(&z5), Err(Error::CouplingTooHigh { .. })));
    }

    #[test]
    fn cancelled_matches_literal() {
        let dec = z_decompose(&problem(21).hp_operator).unwrap();
        let cfg = CdConfig::default();
        for (s, sd) in [(0.1, 2.0), (0.5, -0.3), (0.9, 17.0), (1e-6, 1.0)] {
            let a = cd_coefficients(&dec, 10.0, s, &cfg);
            let b = cd_coefficients_literal(&dec, 10.0, s, sd, &cfg).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "{x} {y}");
            }
        }
        assert!(cd_coefficients_literal(&dec, 10.0, 0.5, 0.0, &cfg).is_err());
    }

    #[test]
    fn limit_at_s_zero() {
        let dec = z_decompose(&problem(21).hp_operator).unwrap();
        let cfg = CdConfig::default();
        let at0 = cd_coefficients(&dec, 10.0, 0.0, &cfg);
        let near = cd_coefficients_literal(&dec, 10.0, 1e-6, 1.0, &cfg).unwrap();
        for (i, (a, b)) in at0.iter().zip(&near).enumerate() {
            assert!((a - dec.h[i] / 20.0).abs() < 1e-15);
            assert!((a - b).abs() <= 1e-5 * a.abs());
        }
    }

    #[test]
    fn zero_field_gives_zero_alpha() {
        let mut dec = z_decompose(&problem(21).hp_operator).unwrap();
        dec.h[1] = 0.0;
        assert_eq!(cd_coefficients(&dec, 10.0, 0.4, &CdConfig::default())[1], 0.0);
    }

    #[test]
    fn regression_alpha_21_midway() {
        let dec = z_decompose(&problem(21).hp_operator).unwrap();
        let a = cd_coefficients(&dec, 10.0, 0.5, &CdConfig::default());
        // h = (84, 44, 88), J = (-10, -20, 20), K = -16, all halved at s = 1/2
        let r0 = 42.0f64.powi(2) + 25.0 + 2.0 * (25.0 + 100.0) + 3.0 * 64.0;
        assert!((a[0] - 10.0 * 84.0 / (2.0 * r0)).abs() < 1e-14);
        let r2 = 44.0f64.powi(2) + 25.0 + 2.0 * (100.0 + 100.0) + 3.0 * 64.0;
        assert!((a[2] - 10.0 * 88.0 / (2.0 * r2)).abs() < 1e-14);
    }

    #[test]
    fn cd_term_is_hermitian_and_traceless() {
        let p = problem(21);
        let sched = Schedule::linear(0.3).unwrap();
        let path = CdPath::new(&p, &sched, &CdConfig::default()).unwrap();
        let plain = crate::dynamics::AnnealPath::new(p.h0.matrix(), p.hp.matrix(), &sched).unwrap();
        for t in [0.0, 0.1, 0.2, 0.3] {
            let h_cd = path.hamiltonian(t) - plain.hamiltonian(t);
            assert!((&h_cd - h_cd.adjoint()).camax() < 1e-12);
            assert!(h_cd.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn zero_strength_is_plain_ramp() {
        let p = problem(21);
        let sched = Schedule::linear(0.5).unwrap();
        let off = CdConfig {
            strength: 0.0,
            ..CdConfig::default()
        };
        let ev = EvolutionConfig::default();
        let a = evolve_with_cd(&p, &sched, &off, &ev).unwrap();
        let b = simulate(&p, &sched, &ev).unwrap();
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn cd_beats_linear_ramp() {
        let p = problem(21);
        let ev = EvolutionConfig::default();
        for t in [0.05, 0.5, 2.0] {
            let sched = Schedule::linear(t).unwrap();
            let cd = evolve_with_cd(&p, &sched, &CdConfig::default(), &ev).unwrap();
            let lin = simulate(&p, &sched, &ev).unwrap();
            assert!(cd.infidelity < lin.infidelity, "T = {t}");
        }
        let sweep = cd_sweep(&p, &[0.5, 0.05], &CdConfig::default(), &ev).unwrap();
        assert!((sweep[0].infidelity - 0.0437).abs() < 1e-3, "{:?}", sweep[0]);
        assert!((sweep[1].infidelity - 0.0619).abs() < 1e-3, "{:?}", sweep[1]);
    }
}
