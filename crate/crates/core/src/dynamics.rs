// SPDX-License-Identifier: Apache-2.0

//! Time evolution under `Ĥ(t) = [1 - s(t)]Ĥ₀ + s(t)Ĥ_p`.
//!
//! Closed systems are propagated with a fourth-order commutator-free Magnus
//! step built from two exact exponentials per step. Open systems add pure
//! dephasing `γ Σ_k D[σ_z^(k)]ρ`, which damps `ρ_ij` at rate `2γ·d(i, j)` with
//! `d` the Hamming distance of the basis labels. The default open integrator
//! is a Strang splitting of that exact damping around the unitary step; an
//! explicit RK4 integrator is available for cross-checks.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, eig_matrix, eigh_unsorted, QuantumState};
use crate::local::LocalFields;
use crate::schedule::Schedule;

const NORM_DRIFT_TOL: f64 = 1e-8;
const TRACE_DRIFT_TOL: f64 = 1e-6;
const DEGENERACY_TOL: f64 = 1e-9;
const MIN_STEPS: usize = 10;

/// A time-dependent Hermitian generator on `[0, T]`.
pub trait HamiltonianPath {
    fn dim(&self) -> usize;

    fn total_time(&self) -> f64;

    fn hamiltonian(&self, t: f64) -> DMatrix<Complex64>;

    /// Writes `Ĥ(t)` into a preallocated matrix.
    fn hamiltonian_into(&self, t: f64, out: &mut DMatrix<Complex64>) {
        *out = self.hamiltonian(t);
    }

    /// Writes `Ĥ(t)` as local fields when the path has that structure.
    fn local_fields(&self, _t: f64, _out: &mut LocalFields) -> bool {
        false
    }

    /// Interpolation parameter at `t`, if the path has one.
    fn s(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// `[1 - s(t)]Ĥ₀ + s(t)Ĥ_p`.
#[derive(Clone, Debug)]
pub struct AnnealPath<'a> {
    pub h0: &'a DMatrix<Complex64>,
    pub hp: &'a DMatrix<Complex64>,
    pub schedule: &'a Schedule,
    local: Option<(LocalFields, LocalFields)>,
}

impl<'a> AnnealPath<'a> {
    pub fn new(h0: &'a DMatrix<Complex64>, hp: &'a DMatrix<Complex64>, schedule: &'a Schedule) -> Result<Self> {
        for m in [h0, hp] {
            if m.nrows() != m.ncols() || m.nrows() != h0.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: h0.nrows(),
                    got: m.ncols(),
                });
            }
        }
        let local = LocalFields::from_dense(h0).zip(LocalFields::from_dense(hp));
        Ok(Self {
            h0,
            hp,
            schedule,
            local,
        })
    }
}

/// `(1 - s)Ĥ₀ + sĤ_p`.
pub fn interpolate(h0: &DMatrix<Complex64>, hp: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    let mut h = h0 * c64(1.0 - s);
    h.zip_apply(hp, |a, b| *a += b * s);
    h
}

impl HamiltonianPath for AnnealPath<'_> {
    fn dim(&self) -> usize {
        self.h0.nrows()
    }

    fn total_time(&self) -> f64 {
        self.schedule.total_time()
    }

    fn hamiltonian(&self, t: f64) -> DMatrix<Complex64> {
        interpolate(self.h0, self.hp, self.schedule.value(t))
    }

    fn hamiltonian_into(&self, t: f64, out: &mut DMatrix<Complex64>) {
        let s = self.schedule.value(t);
        out.zip_zip_apply(self.h0, self.hp, |o, a, b| *o = a * (1.0 - s) + b * s);
    }

    fn local_fields(&self, t: f64, out: &mut LocalFields) -> bool {
        let Some((l0, lp)) = &self.local else {
            return false;
        };
        let s = self.schedule.value(t);
        out.combine_from(1.0 - s, l0, s, lp);
        true
    }

    fn s(&self, t: f64) -> Option<f64> {
        Some(self.schedule.value(t))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedIntegrator {
    /// Fourth-order commutator-free Magnus, two exponentials per step.
    #[default]
    Magnus4,
    /// One exponential of `Ĥ` at the step midpoint.
    Midpoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenIntegrator {
    /// Exact dephasing half-steps around the unitary step.
    #[default]
    Split,
    /// Explicit fourth-order Runge-Kutta on the master equation.
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub steps: usize,
    pub gamma: f64,
    pub record_trajectory: bool,
    pub record_stride: usize,
    pub integrator: ClosedIntegrator,
    pub open_integrator: OpenIntegrator,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            gamma: 0.0,
            record_trajectory: false,
            record_stride: 1,
            integrator: ClosedIntegrator::default(),
            open_integrator: OpenIntegrator::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn with_steps(steps: usize) -> Self {
        Self {
            steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::InvalidArgument(format!(
                "steps = {} is below the minimum of {MIN_STEPS}",
                self.steps
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dephasing rate {} must be non-negative",
                self.gamma
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Snapshots of an evolution; always starts at `t = 0` and ends at `t = T`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
}

impl Trajectory {
    fn push(&mut self, t: f64, state: QuantumState) {
        self.times.push(t);
        self.states.push(state);
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: QuantumState,
    pub trajectory: Option<Trajectory>,
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.re.abs() + z.im.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Taylor substeps for a generator of norm `norm·|τ|`, or `None` when more
/// than `cap` would be needed and an eigen-decomposition is cheaper.
fn taylor_substeps(norm: f64, cap: usize) -> Option<usize> {
    let m = norm.ceil().max(1.0) as usize;
    (m <= cap).then_some(m)
}

/// Smallest order `K` whose Taylor remainder bound `θ^(K+1)e^θ/(K+1)!` is
/// below a quarter ulp, for `θ ≤ 1`.
fn taylor_terms(theta: f64) -> usize {
    let mut bound = theta.exp();
    for k in 1..=40 {
        bound *= theta / k as f64;
        if bound <= 0.25 * f64::EPSILON {
            return (k - 1).max(1);
        }
    }
    40
}

fn dense_cap(dim: usize) -> usize {
    (dim / 2).max(4)
}

fn local_cap(dim: usize, n_qubits: usize) -> usize {
    (10 * dim * dim / (14 * (2 * n_qubits + 1))).max(4)
}

/// `exp(-iτM)` from an eigen-decomposition of Hermitian `M`.
fn eigen_propagator(m: &DMatrix<Complex64>, tau: f64) -> DMatrix<Complex64> {
    let (values, vectors) = eigh_unsorted(m);
    let mut scaled = vectors.clone();
    for (j, lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -tau * lambda);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// A generator in whichever representation is cheapest to apply.
#[derive(Clone, Debug)]
enum Generator {
    Dense(DMatrix<Complex64>),
    Local(LocalFields),
}

impl Generator {
    fn zeros_like(&self) -> Self {
        match self {
            Generator::Dense(m) => Generator::Dense(DMatrix::zeros(m.nrows(), m.ncols())),
            Generator::Local(f) => Generator::Local(LocalFields::zeros(f.n_qubits())),
        }
    }

    fn load<P: HamiltonianPath + ?Sized>(&mut self, path: &P, t: f64) {
        match self {
            Generator::Dense(m) => path.hamiltonian_into(t, m),
            Generator::Local(f) => {
                let ok = path.local_fields(t, f);
                debug_assert!(ok, "path stopped providing local fields");
            }
        }
    }

    fn combine_from(&mut self, a: f64, p: &Self, b: f64, q: &Self) {
        match (self, p, q) {
            (Generator::Dense(o), Generator::Dense(x), Generator::Dense(y)) => {
                o.zip_zip_apply(x, y, |g, u, v| *g = u * a + v * b);
            }
            (Generator::Local(o), Generator::Local(x), Generator::Local(y)) => o.combine_from(a, x, b, y),
            _ => unreachable!("generators share one representation"),
        }
    }

    fn norm(&self, tau: f64) -> f64 {
        tau.abs()
            * match self {
                Generator::Dense(m) => one_norm(m),
                Generator::Local(f) => f.norm_bound(),
            }
    }

    fn substeps(&self, tau: f64) -> Option<usize> {
        let cap = match self {
            Generator::Dense(m) => dense_cap(m.nrows()),
            Generator::Local(f) => local_cap(f.dim(), f.n_qubits()),
        };
        taylor_substeps(self.norm(tau), cap)
    }

    /// Subtracts the midpoint of the diagonal range from a local generator,
    /// halving its norm when one sign dominates; returns the offset.
    fn center_diagonal(&mut self) -> f64 {
        let Generator::Local(f) = self else { return 0.0 };
        let (lo, hi) = f
            .diagonal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &d| (l.min(d), h.max(d)));
        let c = 0.5 * (lo + hi);
        if c != 0.0 {
            f.diagonal.iter_mut().for_each(|d| *d -= c);
        }
        c
    }

    fn dense(&self) -> DMatrix<Complex64> {
        match self {
            Generator::Dense(m) => m.clone(),
            Generator::Local(f) => f.to_dense(),
        }
    }

    fn apply(&self, v: &DVector<Complex64>, out: &mut DVector<Complex64>) {
        match self {
            Generator::Dense(m) => out.gemv(c64(1.0), m, v, c64(0.0)),
            Generator::Local(f) => f.apply(v.as_slice(), out.as_mut_slice()),
        }
    }
}

/// Buffers for repeated in-place propagation.
struct Workspace {
    h1: Generator,
    h2: Generator,
    gens: [Generator; 2],
    n_gens: usize,
    /// Dense propagators for generators beyond the Taylor range.
    props: [Option<DMatrix<Complex64>>; 2],
    substeps: [usize; 2],
    terms: [usize; 2],
    /// Diagonal offsets removed before exponentiating, restored as a phase.
    shifts: [f64; 2],
    tau: f64,
    term: DVector<Complex64>,
    next: DVector<Complex64>,
    sum: DVector<Complex64>,
}

impl Workspace {
    fn new<P: HamiltonianPath + ?Sized>(path: &P) -> Self {
        let dim = path.dim();
        let n = dim.trailing_zeros() as usize;
        let mut probe = LocalFields::zeros(n);
        let h1 = if dim.is_power_of_two() && path.local_fields(0.0, &mut probe) {
            Generator::Local(probe)
        } else {
            Generator::Dense(DMatrix::zeros(dim, dim))
        };
        Self {
            h2: h1.zeros_like(),
            gens: [h1.zeros_like(), h1.zeros_like()],
            h1,
            n_gens: 0,
            props: [None, None],
            substeps: [0, 0],
            terms: [0, 0],
            shifts: [0.0, 0.0],
            tau: 0.0,
            term: DVector::zeros(dim),
            next: DVector::zeros(dim),
            sum: DVector::zeros(dim),
        }
    }

    /// Builds the generators of the step from `t` to `t + τ`.
    fn prepare<P: HamiltonianPath + ?Sized>(&mut self, path: &P, t: f64, tau: f64, integrator: ClosedIntegrator) {
        self.tau = tau;
        match integrator {
            ClosedIntegrator::Midpoint => {
                self.gens[0].load(path, t + 0.5 * tau);
                self.n_gens = 1;
            }
            ClosedIntegrator::Magnus4 => {
                self.h1.load(path, t + GAUSS_LO * tau);
                self.h2.load(path, t + GAUSS_HI * tau);
                self.gens[0].combine_from(CF4_A2, &self.h1, CF4_A1, &self.h2);
                self.gens[1].combine_from(CF4_A1, &self.h1, CF4_A2, &self.h2);
                self.n_gens = 2;
            }
        }
        for k in 0..self.n_gens {
            self.shifts[k] = self.gens[k].center_diagonal();
            match self.gens[k].substeps(tau) {
                Some(m) => {
                    self.substeps[k] = m;
                    self.terms[k] = taylor_terms(self.gens[k].norm(tau) / m as f64);
                    self.props[k] = None;
                }
                None => self.props[k] = Some(eigen_propagator(&self.gens[k].dense(), tau)),
            }
        }
    }

    /// `ψ ← U ψ` with `U` the prepared step propagator.
    fn apply(&mut self, psi: &mut DVector<Complex64>) {
        for k in 0..self.n_gens {
            if let Some(u) = &self.props[k] {
                self.next.gemv(c64(1.0), u, psi, c64(0.0));
                psi.copy_from(&self.next);
            } else {
                self.taylor(k, psi);
            }
            if self.shifts[k] != 0.0 {
                *psi *= Complex64::from_polar(1.0, -self.tau * self.shifts[k]);
            }
        }
    }

    fn taylor(&mut self, k: usize, psi: &mut DVector<Complex64>) {
        let m = self.substeps[k];
        let h = Complex64::new(0.0, -self.tau / m as f64);
        let terms = self.terms[k];
        for _ in 0..m {
            self.term.copy_from(psi);
            self.sum.copy_from(psi);
            for j in 1..=terms {
                self.gens[k].apply(&self.term, &mut self.next);
                let c = h / j as f64;
                for (n, s) in self.next.iter_mut().zip(self.sum.iter_mut()) {
                    *n *= c;
                    *s += *n;
                }
                std::mem::swap(&mut self.term, &mut self.next);
            }
            psi.copy_from(&self.sum);
        }
    }

    /// `ρ ← U ρ U†`, using `U(Uρ)† = UρU†` for Hermitian `ρ`.
    fn conjugate(&mut self, rho: &mut DMatrix<Complex64>) {
        let n = rho.nrows();
        let mut u = DMatrix::identity(n, n);
        self.conjugate_left(&mut u);
        *rho = &u * &*rho * u.adjoint();
    }
}

/// `exp(-iτM)ψ` for Hermitian `M`.
pub fn expm_action(m: &DMatrix<Complex64>, tau: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
    match taylor_substeps(one_norm(m) * tau.abs(), dense_cap(m.nrows())) {
        Some(k) => {
            let mut v = psi.clone();
            let mut ws = single_generator(m.clone(), tau, k);
            ws.apply(&mut v);
            v
        }
        None => eigen_propagator(m, tau) * psi,
    }
}

fn single_generator(m: DMatrix<Complex64>, tau: f64, substeps: usize) -> Workspace {
    let dim = m.nrows();
    let g_norm_src = m.clone();
    let g = Generator::Dense(m);
    Workspace {
        h1: g.zeros_like(),
        h2: g.zeros_like(),
        gens: [g.clone(), g],
        n_gens: 1,
        props: [None, None],
        substeps: [substeps, 0],
        terms: [taylor_terms(one_norm(&g_norm_src) * tau.abs() / substeps as f64), 0],
        shifts: [0.0, 0.0],
        tau,
        term: DVector::zeros(dim),
        next: DVector::zeros(dim),
        sum: DVector::zeros(dim),
    }
}

/// `exp(-iτM)` for Hermitian `M`.
pub fn expm(m: &DMatrix<Complex64>, tau: f64) -> DMatrix<Complex64> {
    let n = m.nrows();
    match taylor_substeps(one_norm(m) * tau.abs(), dense_cap(n)) {
        Some(k) => {
            let mut u = DMatrix::identity(n, n);
            single_generator(m.clone(), tau, k).conjugate_left(&mut u);
            u
        }
        None => eigen_propagator(m, tau),
    }
}

impl Workspace {
    /// `X ← U X` column by column.
    fn conjugate_left(&mut self, x: &mut DMatrix<Complex64>) {
        let mut col = DVector::zeros(x.nrows());
        for j in 0..x.ncols() {
            col.copy_from(&x.column(j));
            self.apply(&mut col);
            x.set_column(j, &col);
        }
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;
const CF4_A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const GAUSS_LO: f64 = 0.5 - SQRT3 / 6.0;
const GAUSS_HI: f64 = 0.5 + SQRT3 / 6.0;

fn step_times(total_time: f64, steps: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..steps).map(move |k| {
        let t0 = total_time * k as f64 / steps as f64;
        let t1 = if k + 1 == steps {
            total_time
        } else {
            total_time * (k + 1) as f64 / steps as f64
        };
        (t0, t1 - t0)
    })
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Schrödinger evolution of a pure state along `path`.
pub fn evolve_pure<P: HamiltonianPath + ?Sized>(
    path: &P,
    psi0: &DVector<Complex64>,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    cfg.validate()?;
    check_dim(path.dim(), psi0.len())?;
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("initial norm {norm0} is not 1")));
    }
    let total_time = path.total_time();
    let mut psi = psi0.clone();
    let mut traj = cfg.record_trajectory.then(Trajectory::default);
    if let Some(tr) = traj.as_mut() {
        tr.push(0.0, QuantumState::Pure(psi.clone()));
    }
    let mut ws = Workspace::new(path);
    for (k, (t, tau)) in step_times(total_time, cfg.steps).enumerate() {
        ws.prepare(path, t, tau, cfg.integrator);
        ws.apply(&mut psi);
        if let Some(tr) = traj.as_mut() {
            if (k + 1) % cfg.record_stride == 0 || k + 1 == cfg.steps {
                tr.push(t + tau, QuantumState::Pure(psi.clone()));
            }
        }
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_DRIFT_TOL {
        return Err(Error::NormDrift { norm });
    }
    Ok(Evolution {
        state: QuantumState::Pure(psi),
        trajectory: traj,
    })
}

/// Closed evolution under `[1 - s(t)]Ĥ₀ + s(t)Ĥ_p`.
pub fn evolve_closed(
    h0: &DMatrix<Complex64>,
    hp: &DMatrix<Complex64>,
    schedule: &Schedule,
    psi0: &DVector<Complex64>,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    evolve_pure(&AnnealPath::new(h0, hp, schedule)?, psi0, cfg)
}

fn hamming_table(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| (i ^ j).count_ones() as f64)
}

fn dephase(rho: &mut DMatrix<Complex64>, hamming: &DMatrix<f64>, rate_time: f64) {
    if rate_time == 0.0 {
        return;
    }
    rho.zip_apply(hamming, |z, d| *z *= (-2.0 * rate_time * d).exp());
}

fn symmetrize(rho: &mut DMatrix<Complex64>) {
    let n = rho.nrows();
    for i in 0..n {
        rho[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (rho[(i, j)] + rho[(j, i)].conj());
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
}

/// `-i[H, ρ] + γ Σ_k D[σ_z^(k)]ρ`.
fn lindblad_rhs(h: &DMatrix<Complex64>, rho: &DMatrix<Complex64>, hamming: &DMatrix<f64>, gamma: f64) -> DMatrix<Complex64> {
    let hr = h * rho;
    let comm = &hr - hr.adjoint();
    let mut out = comm * Complex64::new(0.0, -1.0);
    if gamma != 0.0 {
        out.zip_zip_apply(rho, hamming, |o, r, d| *o -= r * (2.0 * gamma * d));
    }
    out
}

/// Lindblad evolution with pure dephasing at rate `cfg.gamma` on every qubit.
pub fn evolve_density<P: HamiltonianPath + ?Sized>(
    path: &P,
    rho0: &DMatrix<Complex64>,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    cfg.validate()?;
    check_dim(path.dim(), rho0.nrows())?;
    QuantumState::mixed(rho0.clone())?;
    let dim = path.dim();
    let hamming = hamming_table(dim);
    let gamma = cfg.gamma;
    let mut rho = rho0.clone();
    let mut ws = Workspace::new(path);
    let mut traj = cfg.record_trajectory.then(Trajectory::default);
    if let Some(tr) = traj.as_mut() {
        tr.push(0.0, QuantumState::Mixed(rho.clone()));
    }
    for (k, (t, tau)) in step_times(path.total_time(), cfg.steps).enumerate() {
        match cfg.open_integrator {
            OpenIntegrator::Split => {
                dephase(&mut rho, &hamming, 0.5 * gamma * tau);
                ws.prepare(path, t, tau, cfg.integrator);
                ws.conjugate(&mut rho);
                dephase(&mut rho, &hamming, 0.5 * gamma * tau);
            }
            OpenIntegrator::Rk4 => {
                let h_mid = path.hamiltonian(t + 0.5 * tau);
                let scale = 2.0 * one_norm(&h_mid) + 2.0 * gamma * (dim.trailing_zeros() as f64);
                let sub = ((scale * tau) / 0.1).ceil().max(1.0) as usize;
                let dt = tau / sub as f64;
                for j in 0..sub {
                    let ts = t + j as f64 * dt;
                    let h0 = path.hamiltonian(ts);
                    let hm = path.hamiltonian(ts + 0.5 * dt);
                    let h1 = path.hamiltonian(ts + dt);
                    let k1 = lindblad_rhs(&h0, &rho, &hamming, gamma);
                    let k2 = lindblad_rhs(&hm, &(&rho + &k1 * c64(0.5 * dt)), &hamming, gamma);
                    let k3 = lindblad_rhs(&hm, &(&rho + &k2 * c64(0.5 * dt)), &hamming, gamma);
                    let k4 = lindblad_rhs(&h1, &(&rho + &k3 * c64(dt)), &hamming, gamma);
                    rho += (k1 + k2 * c64(2.0) + k3 * c64(2.0) + k4) * c64(dt / 6.0);
                }
            }
        }
        symmetrize(&mut rho);
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > TRACE_DRIFT_TOL {
            return Err(Error::TraceDrift { trace });
        }
        if let Some(tr) = traj.as_mut() {
            if (k + 1) % cfg.record_stride == 0 || k + 1 == cfg.steps {
                tr.push(t + tau, QuantumState::Mixed(rho.clone()));
            }
        }
    }
    Ok(Evolution {
        state: QuantumState::Mixed(rho),
        trajectory: traj,
    })
}

/// Open evolution under `[1 - s(t)]Ĥ₀ + s(t)Ĥ_p` with dephasing.
pub fn evolve_open(
    h0: &DMatrix<Complex64>,
    hp: &DMatrix<Complex64>,
    schedule: &Schedule,
    rho0: &DMatrix<Complex64>,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    evolve_density(&AnnealPath::new(h0, hp, schedule)?, rho0, cfg)
}

/// Evolves either kind of state; a pure state with `γ > 0` is promoted to a
/// density matrix.
pub fn evolve_state<P: HamiltonianPath + ?Sized>(
    path: &P,
    state: &QuantumState,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    match state {
        QuantumState::Pure(psi) if cfg.gamma == 0.0 => evolve_pure(path, psi, cfg),
        _ => evolve_density(path, &state.to_density(), cfg),
    }
}

/// Smallest eigenvalue of a density matrix; used to monitor positivity.
pub fn min_eigenvalue(rho: &DMatrix<Complex64>) -> Result<f64> {
    Ok(eig_matrix(rho)?.values[0])
}

/// `Tr ρ²`.
pub fn purity(rho: &DMatrix<Complex64>) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Populations `P_k(t) = |⟨φ_k(t)|ψ(t)⟩|²` in the instantaneous eigenbasis,
/// ordered by energy. Degenerate levels split their subspace population
/// equally, which keeps each `P_k` independent of the eigenvector basis.
pub fn instantaneous_populations<P: HamiltonianPath + ?Sized>(traj: &Trajectory, path: &P) -> Result<Vec<Vec<f64>>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, state)| {
            let QuantumState::Pure(psi) = state else {
                return Err(Error::MixedTrajectory);
            };
            check_dim(path.dim(), psi.len())?;
            let eig = eig_matrix(&path.hamiltonian(t))?;
            let overlaps: Vec<f64> = eig
                .vectors
                .column_iter()
                .map(|phi| phi.dotc(psi).norm_sqr())
                .collect();
            let mut pops = vec![0.0; overlaps.len()];
            let mut start = 0;
            while start < overlaps.len() {
                let e = eig.values[start];
                let mut end = start + 1;
                while end < overlaps.len() && (eig.values[end] - e).abs() <= DEGENERACY_TOL * (1.0 + e.abs()) {
                    end += 1;
                }
                let share = overlaps[start..end].iter().sum::<f64>() / (end - start) as f64;
                pops[start..end].fill(share);
                start = end;
            }
            Ok(pops)
        })
        .collect()
}

/// Columnar view of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub infidelity: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
}

impl TrajectoryTable {
    /// Builds the table; `targets` are the basis states counted as success
    /// and `k_max` bounds the number of population columns.
    pub fn new<P: HamiltonianPath + ?Sized>(traj: &Trajectory, path: &P, targets: &[usize], k_max: usize) -> Result<Self> {
        let populations = instantaneous_populations(traj, path)?
            .into_iter()
            .map(|mut p| {
                p.truncate(k_max + 1);
                p
            })
            .collect();
        Ok(Self {
            s: traj.times.iter().map(|&t| path.s(t).unwrap_or(f64::NAN)).collect(),
            infidelity: traj
                .states
                .iter()
                .map(|st| (1.0 - st.population_in(targets)).clamp(0.0, 1.0))
                .collect(),
            times: traj.times.clone(),
            populations,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let k = self.populations.first().map_or(0, Vec::len);
        let mut header = vec!["time".to_string(), "s".into(), "infidelity".into()];
        header.extend((0..k).map(|i| format!("P_{i}")));
        w.write_record(&header)?;
        for i in 0..self.times.len() {
            let mut row = vec![
                self.times[i].to_string(),
                self.s[i].to_string(),
                self.infidelity[i].to_string(),
            ];
            row.extend(self.populations[i].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{builtin_instance, Problem};
    use crate::linalg::fidelity;

    struct Constant(DMatrix<Complex64>, f64);

    impl HamiltonianPath for Constant {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn total_time(&self) -> f64 {
            self.1
        }
        fn hamiltonian(&self, _t: f64) -> DMatrix<Complex64> {
            self.0.clone()
        }
    }

    fn sigma_x() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c64(0.0), c64(1.0), c64(1.0), c64(0.0)])
    }

    fn problem21() -> Problem {
        Problem::new(builtin_instance(21).unwrap(), 10.0).unwrap()
    }

    fn pure(state: &QuantumState) -> &DVector<Complex64> {
        match state {
            QuantumState::Pure(v) => v,
            QuantumState::Mixed(_) => panic!("expected a pure state"),
        }
    }

    #[test]
    fn rabi_half_period() {
        let g = 10.0;
        let path = Constant(sigma_x() * c64(-g), std::f64::consts::PI / (2.0 * g));
        let psi0 = QuantumState::basis(1, 0);
        let out = evolve_pure(&path, pure(&psi0), &EvolutionConfig::default()).unwrap();
        assert!((out.state.populations()[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stationary_ground_state() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let plus = p.initial_state();
        let out = evolve_closed(p.h0.matrix(), p.h0.matrix(), &sched, pure(&plus), &EvolutionConfig::default()).unwrap();
        let f = fidelity(&out.state, pure(&plus)).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_ramp_21() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let out = evolve_closed(p.h0.matrix(), p.hp.matrix(), &sched, pure(&p.initial_state()), &EvolutionConfig::default()).unwrap();
        let inf = p.infidelity(&out.state);
        assert!((inf - 0.2987).abs() < 1e-3, "{inf}");
    }

    #[test]
    fn midpoint_and_magnus_agree() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let psi0 = p.initial_state();
        let mut cfg = EvolutionConfig::with_steps(4000);
        cfg.integrator = ClosedIntegrator::Midpoint;
        let a = evolve_closed(p.h0.matrix(), p.hp.matrix(), &sched, pure(&psi0), &cfg).unwrap();
        let b = evolve_closed(p.h0.matrix(), p.hp.matrix(), &sched, pure(&psi0), &EvolutionConfig::default()).unwrap();
        assert!((p.infidelity(&a.state) - p.infidelity(&b.state)).abs() < 1e-6);
    }

    #[test]
    fn expm_paths_agree() {
        let p = problem21();
        let h = interpolate(p.h0.matrix(), p.hp.matrix(), 0.3);
        let psi = pure(&p.initial_state()).clone();
        let small = 1e-3;
        let taylor = expm_action(&h, small, &psi);
        let eigen = eigen_propagator(&h, small) * &psi;
        assert!((taylor - eigen).camax() < 1e-13);
        let big = 0.5;
        let u = expm(&h, big);
        assert!((&u * u.adjoint() - DMatrix::identity(8, 8)).camax() < 1e-12);
        assert!((expm_action(&h, big, &psi) - &u * &psi).camax() < 1e-12);
    }

    #[test]
    fn pure_dephasing_coherence() {
        let gamma = 0.04;
        let path = Constant(DMatrix::zeros(2, 2), 3.0);
        let rho0 = QuantumState::plus_state(1).to_density();
        let cfg = EvolutionConfig {
            gamma,
            record_trajectory: true,
            ..EvolutionConfig::with_steps(30)
        };
        for integrator in [OpenIntegrator::Split, OpenIntegrator::Rk4] {
            let cfg = EvolutionConfig {
                open_integrator: integrator,
                ..cfg.clone()
            };
            let out = evolve_density(&path, &rho0, &cfg).unwrap();
            let traj = out.trajectory.unwrap();
            let mut last_purity = f64::INFINITY;
            for (t, st) in traj.times.iter().zip(&traj.states) {
                let QuantumState::Mixed(rho) = st else { panic!() };
                assert!((rho[(0, 1)].re - 0.5 * (-2.0 * gamma * t).exp()).abs() < 1e-6);
                let pur = purity(rho);
                assert!(pur <= last_purity + 1e-15);
                last_purity = pur;
            }
        }
    }

    #[test]
    fn open_without_noise_matches_closed() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let psi0 = p.initial_state();
        let closed = evolve_closed(p.h0.matrix(), p.hp.matrix(), &sched, pure(&psi0), &EvolutionConfig::default()).unwrap();
        let proj = closed.state.to_density();
        for integrator in [OpenIntegrator::Split, OpenIntegrator::Rk4] {
            let cfg = EvolutionConfig {
                open_integrator: integrator,
                ..EvolutionConfig::default()
            };
            let open = evolve_open(p.h0.matrix(), p.hp.matrix(), &sched, &psi0.to_density(), &cfg).unwrap();
            let QuantumState::Mixed(rho) = open.state else { panic!() };
            let dev = (rho - &proj).camax();
            assert!(dev < 1e-6, "{integrator:?} {dev}");
        }
    }

    #[test]
    fn noisy_run_keeps_trace_and_positivity() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let cfg = EvolutionConfig {
            gamma: 0.04,
            ..EvolutionConfig::default()
        };
        let out = evolve_open(p.h0.matrix(), p.hp.matrix(), &sched, &p.initial_state().to_density(), &cfg).unwrap();
        let QuantumState::Mixed(rho) = &out.state else { panic!() };
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
        assert!(min_eigenvalue(rho).unwrap() > -1e-8);
        let closed_inf = 0.2987;
        assert!(p.infidelity(&out.state) > closed_inf);
    }

    #[test]
    fn populations_sum_to_one() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let cfg = EvolutionConfig {
            record_trajectory: true,
            record_stride: 50,
            ..EvolutionConfig::default()
        };
        let path = AnnealPath::new(p.h0.matrix(), p.hp.matrix(), &sched).unwrap();
        let out = evolve_pure(&path, pure(&p.initial_state()), &cfg).unwrap();
        let traj = out.trajectory.unwrap();
        assert_eq!(traj.times.len(), 21);
        assert_eq!(*traj.times.last().unwrap(), 0.5);
        let pops = instantaneous_populations(&traj, &path).unwrap();
        assert!((pops[0][0] - 1.0).abs() < 1e-10);
        for row in &pops {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
        let last = pops.last().unwrap();
        assert!((last[0] - 0.7).abs() < 0.05);
        assert!(pops.iter().any(|row| row[1..].iter().sum::<f64>() > 0.05));

        let table = TrajectoryTable::new(&traj, &path, &p.targets, 3).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,s,infidelity,P_0,P_1,P_2,P_3\n"));
        assert_eq!(text.lines().count(), 22);
    }

    #[test]
    fn mixed_trajectory_rejected() {
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let path = AnnealPath::new(p.h0.matrix(), p.hp.matrix(), &sched).unwrap();
        let traj = Trajectory {
            times: vec![0.0],
            states: vec![QuantumState::maximally_mixed(3)],
        };
        assert!(matches!(instantaneous_populations(&traj, &path), Err(Error::MixedTrajectory)));
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::with_steps(5).validate().is_err());
        let bad = EvolutionConfig {
            gamma: -1.0,
            ..EvolutionConfig::default()
        };
        assert!(bad.validate().is_err());
        let p = problem21();
        let sched = Schedule::linear(0.5).unwrap();
        let psi = DVector::from_element(4, c64(0.5));
        assert!(matches!(
            evolve_closed(p.h0.matrix(), p.hp.matrix(), &sched, &psi, &EvolutionConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
