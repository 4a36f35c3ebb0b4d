// SPDX-License-Identifier: Apache-2.0

//! Dense Hermitian matrices, quantum states, and the queries on them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::QubitOperator;

const HERMITIAN_TOL: f64 = 1e-12;
const EIG_HERMITIAN_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;

/// Real number as a complex scalar.
pub fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for c in 0..n {
        for r in c..n {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// A dense matrix known to be Hermitian.
///
/// Diagonal matrices keep their real diagonal alongside the dense form so that
/// energy expectations cost `O(dim)`.
#[derive(Clone, Debug)]
pub struct DenseHermitian {
    matrix: DMatrix<Complex64>,
    diagonal: Option<Vec<f64>>,
    real: bool,
}

impl DenseHermitian {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::trusted(matrix))
    }

    fn trusted(matrix: DMatrix<Complex64>) -> Self {
        let n = matrix.nrows();
        let real = matrix.iter().all(|z| z.im == 0.0);
        let is_diag = (0..n).all(|c| (0..n).all(|r| r == c || matrix[(r, c)].norm() == 0.0));
        let diagonal = is_diag.then(|| (0..n).map(|i| matrix[(i, i)].re).collect());
        Self {
            matrix,
            diagonal,
            real,
        }
    }

    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        let n = diag.len();
        let matrix = DMatrix::from_fn(n, n, |r, c| if r == c { c64(diag[r]) } else { c64(0.0) });
        Self {
            matrix,
            diagonal: Some(diag),
            real: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal.is_some()
    }

    /// No imaginary entries.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `a·x + b·y`; Hermiticity is preserved exactly for real weights.
    pub fn combine(a: f64, x: &DenseHermitian, b: f64, y: &DenseHermitian) -> DenseHermitian {
        assert_eq!(x.dim(), y.dim(), "dimension mismatch");
        let matrix = x.matrix.map(|z| z * a) + y.matrix.map(|z| z * b);
        let diagonal = match (&x.diagonal, &y.diagonal) {
            (Some(dx), Some(dy)) => Some(dx.iter().zip(dy).map(|(p, q)| a * p + b * q).collect()),
            _ => None,
        };
        DenseHermitian {
            matrix,
            diagonal,
            real: x.real && y.real,
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Pure state vector or density matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(DVector<Complex64>),
    Mixed(DMatrix<Complex64>),
}

impl QuantumState {
    pub fn pure(vector: DVector<Complex64>) -> Result<Self> {
        let norm = vector.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("vector norm is {norm}")));
        }
        Ok(QuantumState::Pure(vector))
    }

    pub fn mixed(rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::DimensionMismatch {
                expected: rho.nrows(),
                got: rho.ncols(),
            });
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        let dev = hermitian_deviation(&rho);
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix is not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(QuantumState::Mixed(rho))
    }

    /// Computational basis state `|index⟩` on `n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut v = DVector::zeros(dim);
        v[index] = c64(1.0);
        QuantumState::Pure(v)
    }

    /// `|+⟩^⊗n`, the ground state of `-g Σ σ_x`.
    pub fn plus_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let amp = c64(1.0 / (dim as f64).sqrt());
        QuantumState::Pure(DVector::from_element(dim, amp))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        QuantumState::Mixed(DMatrix::identity(dim, dim) * c64(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Mixed(r) => r.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn to_density(&self) -> DMatrix<Complex64> {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Mixed(r) => r.clone(),
        }
    }

    /// Computational-basis probabilities.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            QuantumState::Mixed(r) => (0..r.nrows()).map(|i| r[(i, i)].re).collect(),
        }
    }

    /// Total probability on a set of basis states.
    pub fn population_in(&self, indices: &[usize]) -> f64 {
        let pops = self.populations();
        indices.iter().map(|&i| pops[i]).sum()
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Eigensystem {
    /// `V Λ V†`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| c64(x)),
        ));
        &self.vectors * lambda * self.vectors.adjoint()
    }
}

/// Unsorted eigen-decomposition used on hot paths; real input takes the
/// real symmetric solver.
pub(crate) fn eigh_unsorted(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(c64),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }
}

/// Eigenvalues only, ascending.
pub(crate) fn eigenvalues_sorted(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut vals = if m.iter().all(|z| z.im == 0.0) {
        m.map(|z| z.re)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect::<Vec<_>>()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    vals
}

/// Sorted eigen-decomposition. Each eigenvector is rotated so that its first
/// component with magnitude above 1e-12 is real and positive.
pub fn eig_hermitian(m: &DenseHermitian) -> Result<Eigensystem> {
    eig_matrix(m.matrix())
}

/// As [`eig_hermitian`] for an unchecked matrix; rejects non-Hermitian input.
pub fn eig_matrix(m: &DMatrix<Complex64>) -> Result<Eigensystem> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let deviation = hermitian_deviation(m);
    if deviation > EIG_HERMITIAN_TOL * (1.0 + m.camax()) {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.nrows();
    let is_diag = (0..n).all(|c| (0..n).all(|r| r == c || m[(r, c)].norm() == 0.0));
    let (values, vectors) = if is_diag {
        let vals = (0..n).map(|i| m[(i, i)].re).collect();
        (vals, DMatrix::identity(n, n))
    } else {
        eigh_unsorted(m)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut sorted_vectors = DMatrix::zeros(n, n);
    let mut sorted_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sorted_values.push(values[src]);
        let mut col = vectors.column(src).into_owned();
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-12).copied() {
            let rot = lead.conj() / lead.norm();
            col *= rot;
        }
        sorted_vectors.set_column(dst, &col);
    }
    Ok(Eigensystem {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > STATE_TOL * (1.0 + z.re.abs()) {
        return Err(Error::ComplexExpectation { imag: z.im });
    }
    Ok(z.re)
}

/// `⟨ψ|M|ψ⟩` or `Tr(ρM)`.
pub fn expectation_dense(m: &DenseHermitian, state: &QuantumState) -> Result<f64> {
    check_dim(m.dim(), state.dim())?;
    if let Some(diag) = m.diagonal() {
        let pops = state.populations();
        return Ok(diag.iter().zip(&pops).map(|(d, p)| d * p).sum());
    }
    let value = match state {
        QuantumState::Pure(v) => v.dotc(&(m.matrix() * v)),
        QuantumState::Mixed(rho) => (rho * m.matrix()).trace(),
    };
    real_part(value)
}

/// Expectation of a Pauli-sum observable. Z-diagonal operators never
/// materialize a matrix.
pub fn expectation(op: &QubitOperator, state: &QuantumState) -> Result<f64> {
    check_dim(1usize << op.n_qubits(), state.dim())?;
    if let Some(diag) = op.diagonal() {
        let value: Complex64 = match state {
            QuantumState::Pure(v) => c64(diag.iter().zip(v.iter()).map(|(d, z)| d * z.norm_sqr()).sum()),
            QuantumState::Mixed(rho) => diag
                .iter()
                .enumerate()
                .map(|(i, d)| rho[(i, i)] * d)
                .sum(),
        };
        return real_part(value);
    }
    expectation_dense(&op.materialize()?, state)
}

/// Overlap with a pure target: `|⟨t|ψ⟩|²` or `⟨t|ρ|t⟩`.
pub fn fidelity(state: &QuantumState, target: &DVector<Complex64>) -> Result<f64> {
    check_dim(target.len(), state.dim())?;
    let f = match state {
        QuantumState::Pure(v) => target.dotc(v).norm_sqr(),
        QuantumState::Mixed(rho) => real_part(target.dotc(&(rho * target)))?,
    };
    Ok(f.clamp(0.0, 1.0))
}
