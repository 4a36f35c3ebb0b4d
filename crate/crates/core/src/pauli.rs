// SPDX-License-Identifier: Apache-2.0

//! Pauli strings and real-weighted sums of them.
//!
//! Qubit `q` (0-based, displayed leftmost for `q = 0`) maps to bit `n - 1 - q`
//! of a computational-basis index, so `|a₁b₁b₂⟩ = |011⟩` is index 3.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseHermitian;

/// Largest register that may be materialized densely.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Coefficients with magnitude below this are dropped on simplification.
const ZERO_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Single-qubit product `self · other = i^phase · result`.
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, one axis per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    axes: Vec<Pauli>,
}

impl PauliString {
    pub fn new(axes: Vec<Pauli>) -> Self {
        Self { axes }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            axes: vec![Pauli::I; n_qubits],
        }
    }

    /// `pauli` on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, pauli: Pauli) -> Self {
        let mut s = Self::identity(n_qubits);
        s.axes[qubit] = pauli;
        s
    }

    /// Product of `σ_z` over the given qubits.
    pub fn z_product(n_qubits: usize, qubits: &[usize]) -> Self {
        let mut s = Self::identity(n_qubits);
        for &q in qubits {
            s.axes[q] = Pauli::Z;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.axes.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Qubits carrying a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Only `I` and `Z` factors.
    pub fn is_diagonal(&self) -> bool {
        self.axes.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Product with phase tracking: `self · other = phase · result`.
    pub fn mul(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut power = 0u8;
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(&a, &b)| {
                let (p, c) = a.mul(b);
                power = (power + p) % 4;
                c
            })
            .collect();
        Ok((phase_of(power), PauliString { axes }))
    }

    /// Bit masks describing the action on basis states:
    /// `P|c⟩ = i^{#Y} (-1)^{popcount(c & phase_mask)} |c ^ flip_mask⟩`.
    pub(crate) fn masks(&self) -> (usize, usize, u8) {
        let n = self.len();
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut n_y = 0u8;
        for (q, &p) in self.axes.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    phase |= bit;
                    n_y = (n_y + 1) % 4;
                }
                Pauli::Z => phase |= bit,
            }
        }
        (flip, phase, n_y)
    }
}

fn phase_of(power: u8) -> Complex64 {
    match power % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.axes {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArgument(format!(
                    "`{other}` is not a Pauli label"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { axes })
    }
}

/// Real linear combination of Pauli strings on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitOperator {
    n_qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl QubitOperator {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    /// `coeff · I`.
    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(PauliString::identity(n_qubits), coeff);
        op
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut op = Self::zero(n_qubits);
        for (s, c) in terms {
            if s.len() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    got: s.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient of {s} is not finite"
                )));
            }
            op.add_term(s, c);
        }
        Ok(op)
    }

    /// Binary projector `(I - σ_z)/2` on `qubit`, i.e. the operator of a 0/1 variable.
    pub fn bit(n_qubits: usize, qubit: usize) -> Self {
        let mut op = Self::identity(n_qubits, 0.5);
        op.add_term(PauliString::single(n_qubits, qubit, Pauli::Z), -0.5);
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, string: &PauliString) -> f64 {
        self.terms.get(string).copied().unwrap_or(0.0)
    }

    /// Accumulates `coeff · string`, dropping the entry if it cancels.
    pub fn add_term(&mut self, string: PauliString, coeff: f64) {
        assert_eq!(string.len(), self.n_qubits, "Pauli string length mismatch");
        let cancelled = {
            let entry = self.terms.entry(string.clone()).or_insert(0.0);
            *entry += coeff;
            entry.abs() <= ZERO_TOL
        };
        if cancelled {
            self.terms.remove(&string);
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (s, c) in self.terms() {
            out.add_term(s.clone(), c * factor);
        }
        out
    }

    /// All strings are products of `I` and `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(PauliString::is_diagonal)
    }

    /// Operator product. Imaginary parts must cancel, as they do for products
    /// of commuting terms and for squares.
    pub fn mul(&self, other: &QubitOperator) -> Result<QubitOperator> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let (phase, s) = a.mul(b)?;
                *acc.entry(s).or_insert(Complex64::new(0.0, 0.0)) += phase * (ca * cb);
            }
        }
        let mut out = QubitOperator::zero(self.n_qubits);
        for (s, c) in acc {
            if c.im.abs() > ZERO_TOL * (1.0 + c.re.abs()) {
                return Err(Error::NonRealProduct {
                    term: s.to_string(),
                });
            }
            out.add_term(s, c.re);
        }
        Ok(out)
    }

    pub fn square(&self) -> Result<QubitOperator> {
        self.mul(self)
    }

    /// Diagonal in the computational basis, if every term is Z-type.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        let dim = 1usize << self.n_qubits;
        let mut diag = vec![0.0; dim];
        for (s, c) in self.terms() {
            let (_, mask, _) = s.masks();
            for (idx, d) in diag.iter_mut().enumerate() {
                if (idx & mask).count_ones() % 2 == 0 {
                    *d += c;
                } else {
                    *d -= c;
                }
            }
        }
        Some(diag)
    }

    /// Dense matrix `Σ c · ⊗ σ`.
    pub fn materialize(&self) -> Result<DenseHermitian> {
        materialize(self)
    }
}

/// Dense matrix of an operator, built from the signed-permutation action of
/// each string rather than explicit Kronecker products.
pub fn materialize(op: &QubitOperator) -> Result<DenseHermitian> {
    let n = op.n_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity {
            n_qubits: n,
            limit: MAX_DENSE_QUBITS,
        });
    }
    let dim = 1usize << n;
    if let Some(diag) = op.diagonal() {
        return Ok(DenseHermitian::from_diagonal(diag));
    }
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (s, c) in op.terms() {
        let (flip, phase, n_y) = s.masks();
        let base = phase_of(n_y) * c;
        for col in 0..dim {
            let row = col ^ flip;
            let v = if (col & phase).count_ones() % 2 == 0 {
                base
            } else {
                -base
            };
            m[(row, col)] += v;
        }
    }
    DenseHermitian::new(m)
}

impl Add for &QubitOperator {
    type Output = QubitOperator;

    fn add(self, rhs: &QubitOperator) -> QubitOperator {
        assert_eq!(self.n_qubits, rhs.n_qubits, "register size mismatch");
        let mut out = self.clone();
        for (s, c) in rhs.terms() {
            out.add_term(s.clone(), c);
        }
        out
    }
}

impl Sub for &QubitOperator {
    type Output = QubitOperator;

    fn sub(self, rhs: &QubitOperator) -> QubitOperator {
        self + &rhs.scaled(-1.0)
    }
}

impl Mul<f64> for &QubitOperator {
    type Output = QubitOperator;

    fn mul(self, rhs: f64) -> QubitOperator {
        self.scaled(rhs)
    }
}

impl Neg for &QubitOperator {
    type Output = QubitOperator;

    fn neg(self) -> QubitOperator {
        self.scaled(-1.0)
    }
}

impl fmt::Display for QubitOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{s}")?;
        }
        Ok(())
    }
}
