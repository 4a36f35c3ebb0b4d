// SPDX-License-Identifier: Apache-2.0

//! Hamiltonians made of a diagonal part plus single-qubit `σ_x`, `σ_y` fields.
//!
//! Every generator used here (transverse field, Z-diagonal problem
//! Hamiltonians, local counter-diabatic terms) has this form, which allows a
//! matrix-free product costing `O(n·2ⁿ)` instead of `O(4ⁿ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::c64;

const MATCH_TOL: f64 = 1e-12;

/// `Σ_i d_i |i⟩⟨i| + Σ_q (x_q σ_x^(q) + y_q σ_y^(q))`, qubit 0 being the most
/// significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFields {
    n_qubits: usize,
    pub diagonal: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl LocalFields {
    pub fn zeros(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            diagonal: vec![0.0; 1 << n_qubits],
            x: vec![0.0; n_qubits],
            y: vec![0.0; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Recognizes the structure in a dense Hermitian matrix.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Option<Self> {
        let dim = m.nrows();
        if dim == 0 || !dim.is_power_of_two() || m.ncols() != dim {
            return None;
        }
        let n = dim.trailing_zeros() as usize;
        let mut out = Self::zeros(n);
        let scale = 1.0 + m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let tol = MATCH_TOL * scale;
        for q in 0..n {
            let mask = out.mask(q);
            // row 0 has bit q clear: entry is x - iy
            let z = m[(0, mask)];
            out.x[q] = z.re;
            out.y[q] = -z.im;
        }
        for i in 0..dim {
            if m[(i, i)].im.abs() > tol {
                return None;
            }
            out.diagonal[i] = m[(i, i)].re;
            for j in 0..dim {
                let flip = i ^ j;
                let expected = match flip.count_ones() {
                    0 => continue,
                    1 => {
                        let q = n - 1 - flip.trailing_zeros() as usize;
                        let sign = if i & flip == 0 { -1.0 } else { 1.0 };
                        Complex64::new(out.x[q], sign * out.y[q])
                    }
                    _ => c64(0.0),
                };
                if (m[(i, j)] - expected).norm() > tol {
                    return None;
                }
            }
        }
        Some(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = DMatrix::from_fn(dim, dim, |i, j| if i == j { c64(self.diagonal[i]) } else { c64(0.0) });
        for q in 0..self.n_qubits {
            let mask = self.mask(q);
            for i in 0..dim {
                let sign = if i & mask == 0 { -1.0 } else { 1.0 };
                m[(i, i ^ mask)] = Complex64::new(self.x[q], sign * self.y[q]);
            }
        }
        m
    }

    /// `out = M v`.
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for ((o, d), z) in out.iter_mut().zip(&self.diagonal).zip(v) {
            *o = z * d;
        }
        for q in 0..self.n_qubits {
            let (x, y) = (self.x[q], self.y[q]);
            if x == 0.0 && y == 0.0 {
                continue;
            }
            let mask = self.mask(q);
            for (i, o) in out.iter_mut().enumerate() {
                let z = v[i ^ mask];
                // σ_y contributes -i·y·z on rows with bit q clear, +i·y·z otherwise
                let s = if i & mask == 0 { y } else { -y };
                *o += Complex64::new(x * z.re + s * z.im, x * z.im - s * z.re);
            }
        }
    }

    /// Upper bound on the induced 1-norm.
    pub fn norm_bound(&self) -> f64 {
        let d = self.diagonal.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        d + self.x.iter().zip(&self.y).map(|(x, y)| x.hypot(*y)).sum::<f64>()
    }

    /// `self = a·p + b·q`.
    pub fn combine_from(&mut self, a: f64, p: &Self, b: f64, q: &Self) {
        for ((o, u), v) in self.diagonal.iter_mut().zip(&p.diagonal).zip(&q.diagonal) {
            *o = a * u + b * v;
        }
        for ((o, u), v) in self.x.iter_mut().zip(&p.x).zip(&q.x) {
            *o = a * u + b * v;
        }
        for ((o, u), v) in self.y.iter_mut().zip(&p.y).zip(&q.y) {
            *o = a * u + b * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{materialize, Pauli, PauliString, QubitOperator};
    use nalgebra::DVector;

    fn random_fields(n: usize, seed: u64) -> LocalFields {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut f = LocalFields::zeros(n);
        f.diagonal.iter_mut().for_each(|v| *v = next());
        f.x.iter_mut().for_each(|v| *v = next());
        f.y.iter_mut().for_each(|v| *v = next());
        f
    }

    #[test]
    fn dense_round_trip_matches_pauli_materialization() {
        let n = 3;
        let f = random_fields(n, 5);
        let mut op = QubitOperator::zero(n);
        for q in 0..n {
            op.add_term(PauliString::single(n, q, Pauli::X), f.x[q]);
            op.add_term(PauliString::single(n, q, Pauli::Y), f.y[q]);
        }
        let mut dense = materialize(&op).unwrap().matrix().clone();
        for i in 0..8 {
            dense[(i, i)] += f.diagonal[i];
        }
        assert!((f.to_dense() - &dense).camax() < 1e-14);
        let back = LocalFields::from_dense(&dense).unwrap();
        for (a, b) in back.x.iter().chain(&back.y).zip(f.x.iter().chain(&f.y)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let f = random_fields(4, 9);
        let v = DVector::from_fn(16, |i, _| Complex64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05));
        let mut out = vec![c64(0.0); 16];
        f.apply(v.as_slice(), &mut out);
        let expected = f.to_dense() * &v;
        for (a, b) in out.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn non_local_matrix_rejected() {
        let zz = materialize(&QubitOperator::from_terms(2, [("XX".parse().unwrap(), 1.0)]).unwrap()).unwrap();
        assert!(LocalFields::from_dense(zz.matrix()).is_none());
    }
}
