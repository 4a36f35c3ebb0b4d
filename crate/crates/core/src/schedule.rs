// SPDX-License-Identifier: Apache-2.0

//! Annealing schedules `s(t)` on `[0, T]`.
//!
//! The CRAB schedule dresses a base ramp `s₀(t)` as
//! `s(t) = s₀(t)·[1 + sin(πt/T)·Σ_k (A_k sin(ω_k t) + B_k cos(ν_k t))]`
//! with `ω_k = 2πk(1 + r_k)/T` for the sine modes and `ν_k = 2πk(1 + q_k)/T`
//! for the cosine modes. The offsets `r_k`, `q_k` are drawn once and frozen;
//! only `A` and `B` are optimized.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offsets and coefficients of a CRAB correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrabParams {
    pub total_time: f64,
    /// Offsets `r_k` of the sine modes.
    pub sin_offsets: Vec<f64>,
    /// Offsets `q_k` of the cosine modes.
    pub cos_offsets: Vec<f64>,
    /// Sine coefficients `A_k`.
    pub a: Vec<f64>,
    /// Cosine coefficients `B_k`.
    pub b: Vec<f64>,
}

impl CrabParams {
    pub fn new(
        total_time: f64,
        sin_offsets: Vec<f64>,
        cos_offsets: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "total time {total_time} must be positive"
            )));
        }
        let n = sin_offsets.len();
        if n == 0 {
            return Err(Error::InvalidArgument("CRAB basis needs at least one mode".into()));
        }
        for (name, v) in [("cos_offsets", &cos_offsets), ("a", &a), ("b", &b)] {
            if v.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
        }
        if let Some(r) = sin_offsets
            .iter()
            .chain(&cos_offsets)
            .find(|r| !(r.abs() <= 0.5))
        {
            return Err(Error::InvalidArgument(format!(
                "offset {r} outside [-0.5, 0.5]"
            )));
        }
        if a.iter().chain(&b).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("CRAB coefficients must be finite".into()));
        }
        Ok(Self {
            total_time,
            sin_offsets,
            cos_offsets,
            a,
            b,
        })
    }

    /// Published optimum for ω = 21 at `T = 0.5` with `N_c = 4`.
    pub fn published_21() -> Self {
        Self::new(
            0.5,
            vec![0.125, -0.348, 0.013, -0.032],
            vec![-0.181, 0.417, 0.194, 0.205],
            vec![-0.116, -1.093, 0.234, -0.209],
            vec![0.166, 0.333, 0.477, 0.340],
        )
        .expect("published coefficients are valid")
    }

    /// One offset vector for both mode families.
    pub fn shared(total_time: f64, offsets: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(total_time, offsets.clone(), offsets, a, b)
    }

    /// Zero coefficients on a freshly sampled basis.
    pub fn sampled(total_time: f64, n_c: usize, seed: u64) -> Result<Self> {
        let basis = sample_frequencies(n_c, total_time, seed)?;
        Self::new(
            total_time,
            basis.sin_offsets,
            basis.cos_offsets,
            vec![0.0; n_c],
            vec![0.0; n_c],
        )
    }

    pub fn n_c(&self) -> usize {
        self.a.len()
    }

    pub fn sin_frequencies(&self) -> Vec<f64> {
        frequencies(&self.sin_offsets, self.total_time)
    }

    pub fn cos_frequencies(&self) -> Vec<f64> {
        frequencies(&self.cos_offsets, self.total_time)
    }

    /// `(A₁..A_N, B₁..B_N)`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    /// Same basis with coefficients taken from `(A₁..A_N, B₁..B_N)`.
    pub fn with_coefficients(&self, x: &[f64]) -> Result<Self> {
        let n = self.n_c();
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: x.len(),
            });
        }
        Self::new(
            self.total_time,
            self.sin_offsets.clone(),
            self.cos_offsets.clone(),
            x[..n].to_vec(),
            x[n..].to_vec(),
        )
    }
}

/// Sampled offsets together with the resulting angular frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrabBasis {
    pub sin_offsets: Vec<f64>,
    pub cos_offsets: Vec<f64>,
    pub sin_frequencies: Vec<f64>,
    pub cos_frequencies: Vec<f64>,
}

/// `2πk(1 + r_k)/T` for `k = 1..N`.
pub fn frequencies(offsets: &[f64], total_time: f64) -> Vec<f64> {
    offsets
        .iter()
        .enumerate()
        .map(|(i, r)| 2.0 * PI * (i + 1) as f64 * (1.0 + r) / total_time)
        .collect()
}

/// Draws `N_c` sine offsets then `N_c` cosine offsets uniformly from
/// `[-0.5, 0.5]`.
pub fn sample_frequencies(n_c: usize, total_time: f64, seed: u64) -> Result<CrabBasis> {
    if n_c == 0 {
        return Err(Error::InvalidArgument("CRAB basis needs at least one mode".into()));
    }
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "total time {total_time} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || (0..n_c).map(|_| rng.gen_range(-0.5..=0.5)).collect::<Vec<f64>>();
    let sin_offsets = draw();
    let cos_offsets = draw();
    Ok(CrabBasis {
        sin_frequencies: frequencies(&sin_offsets, total_time),
        cos_frequencies: frequencies(&cos_offsets, total_time),
        sin_offsets,
        cos_offsets,
    })
}

/// `s(t)` on `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Linear {
        total_time: f64,
    },
    Crab {
        params: CrabParams,
        base: Box<Schedule>,
    },
}

impl Schedule {
    pub fn linear(total_time: f64) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "total time {total_time} must be positive"
            )));
        }
        Ok(Schedule::Linear { total_time })
    }

    /// CRAB dressing of the linear ramp.
    pub fn crab(params: CrabParams) -> Self {
        let base = Box::new(Schedule::Linear {
            total_time: params.total_time,
        });
        Schedule::Crab { params, base }
    }

    pub fn crab_on(params: CrabParams, base: Schedule) -> Result<Self> {
        if base.total_time() != params.total_time {
            return Err(Error::InvalidArgument(format!(
                "base schedule runs for {} but CRAB parameters for {}",
                base.total_time(),
                params.total_time
            )));
        }
        Ok(Schedule::Crab {
            params,
            base: Box::new(base),
        })
    }

    pub fn total_time(&self) -> f64 {
        match self {
            Schedule::Linear { total_time } => *total_time,
            Schedule::Crab { params, .. } => params.total_time,
        }
    }

    /// `s(t)`, rejecting `t` outside `[0, T]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let total_time = self.total_time();
        if !(0.0..=total_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, total_time });
        }
        Ok(self.value(t))
    }

    /// `s(t)` without the range check.
    pub fn value(&self, t: f64) -> f64 {
        self.value_and_rate(t).0
    }

    /// `ds/dt`.
    pub fn rate(&self, t: f64) -> f64 {
        self.value_and_rate(t).1
    }

    pub fn value_and_rate(&self, t: f64) -> (f64, f64) {
        match self {
            Schedule::Linear { total_time } => (t / total_time, 1.0 / total_time),
            Schedule::Crab { params, base } => {
                let (s0, ds0) = base.value_and_rate(t);
                let (w, dw) = window(t, params.total_time);
                let (g, dg) = modulation(params, t);
                let f = 1.0 + w * g;
                (s0 * f, ds0 * f + s0 * (dw * g + w * dg))
            }
        }
    }
}

/// `Σ_k A_k sin(ω_k t) + B_k cos(ν_k t)` and its time derivative.
fn modulation(params: &CrabParams, t: f64) -> (f64, f64) {
    let base = 2.0 * PI / params.total_time;
    let (mut g, mut dg) = (0.0, 0.0);
    for k in 0..params.a.len() {
        let kk = (k + 1) as f64;
        let w = base * kk * (1.0 + params.sin_offsets[k]);
        let (sn, cs) = (w * t).sin_cos();
        g += params.a[k] * sn;
        dg += params.a[k] * w * cs;
        let v = base * kk * (1.0 + params.cos_offsets[k]);
        let (sn, cs) = (v * t).sin_cos();
        g += params.b[k] * cs;
        dg -= params.b[k] * v * sn;
    }
    (g, dg)
}

/// `sin(πt/T)` and its derivative. The second half is evaluated as
/// `sin(π(T - t)/T)` so the window vanishes exactly at `t = T`.
fn window(t: f64, total_time: f64) -> (f64, f64) {
    let w = if t <= 0.5 * total_time {
        (PI * t / total_time).sin()
    } else {
        (PI * (total_time - t) / total_time).sin()
    };
    (w, PI / total_time * (PI * t / total_time).cos())
}
