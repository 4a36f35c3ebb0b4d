// SPDX-License-Identifier: Apache-2.0

//! Factorization instances and their Hamiltonians.
//!
//! Two encodings are supported. The direct encoding squares the cost
//! `(ω - ab)²` with `a = 1 + Σ 2^l a_l`, `b = 1 + Σ 2^m b_m`. The equation-set
//! encoding takes a hand-simplified list of binary polynomial constraints
//! `P_i = 0` and builds `Σ w_i P_i²`. Every binary variable `x` becomes the
//! projector `(I - σ_z)/2` on its own qubit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseHermitian, QuantumState};
use crate::pauli::{materialize, Pauli, PauliString, QubitOperator, MAX_DENSE_QUBITS};

/// Odd composites shipped with the crate.
pub const BUILTIN_OMEGAS: [u64; 6] = [21, 77, 91, 187, 703, 2479];

const ZERO_ENERGY_TOL: f64 = 1e-9;
const READOUT_MARGIN: f64 = 0.1;

/// Multilinear polynomial over 0/1 variables. Constant terms carry an empty
/// variable set.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryPolynomial {
    terms: Vec<(f64, BTreeSet<String>)>,
}

impl BinaryPolynomial {
    /// Builds the canonical form: repeated variables collapse (`x² = x`),
    /// identical monomials merge, zero coefficients vanish.
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, Vec<S>)>,
        S: Into<String>,
    {
        let mut merged: BTreeMap<BTreeSet<String>, f64> = BTreeMap::new();
        for (c, vars) in terms {
            let key: BTreeSet<String> = vars.into_iter().map(Into::into).collect();
            *merged.entry(key).or_insert(0.0) += c;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(v, c)| (c, v))
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[(f64, BTreeSet<String>)] {
        &self.terms
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.terms
            .iter()
            .flat_map(|(_, v)| v.iter().map(String::as_str))
            .collect()
    }

    /// Value at an assignment given as a lookup from variable name to bit.
    pub fn evaluate<F>(&self, value_of: F) -> f64
    where
        F: Fn(&str) -> u8,
    {
        self.terms
            .iter()
            .filter(|(_, vars)| vars.iter().all(|v| value_of(v) == 1))
            .map(|(c, _)| c)
            .sum()
    }

    /// Maps each variable to the bit operator of its qubit.
    pub fn to_operator(&self, qubit_of: &BTreeMap<String, usize>, n_qubits: usize) -> Result<QubitOperator> {
        let mut op = QubitOperator::zero(n_qubits);
        for (c, vars) in &self.terms {
            let mut monomial = QubitOperator::identity(n_qubits, *c);
            for v in vars {
                let q = *qubit_of
                    .get(v)
                    .ok_or_else(|| Error::UnknownVariable(v.clone()))?;
                monomial = monomial.mul(&QubitOperator::bit(n_qubits, q))?;
            }
            op = &op + &monomial;
        }
        Ok(op)
    }
}

impl fmt::Display for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, vars)) in self.terms.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if i > 0 {
                write!(f, " {sign} ")?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            let mag = c.abs();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else {
                if mag != 1.0 {
                    write!(f, "{mag}·")?;
                }
                let names: Vec<&str> = vars.iter().map(String::as_str).collect();
                write!(f, "{}", names.join("·"))?;
            }
        }
        Ok(())
    }
}

/// Constraints `P_i = 0` with positive penalty weights.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationSet {
    equations: Vec<BinaryPolynomial>,
    weights: Vec<f64>,
    variable_order: Vec<String>,
}

impl EquationSet {
    pub fn new(equations: Vec<BinaryPolynomial>, weights: Vec<f64>, variable_order: Vec<String>) -> Result<Self> {
        if equations.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} equations but {} weights",
                equations.len(),
                weights.len()
            )));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::NonPositiveWeight(w));
        }
        let known: BTreeSet<&str> = variable_order.iter().map(String::as_str).collect();
        if known.len() != variable_order.len() {
            return Err(Error::InvalidArgument("variable_order has duplicates".into()));
        }
        for eq in &equations {
            if let Some(v) = eq.variables().into_iter().find(|v| !known.contains(v)) {
                return Err(Error::UnknownVariable(v.to_string()));
            }
        }
        Ok(Self {
            equations,
            weights,
            variable_order,
        })
    }

    pub fn equations(&self) -> &[BinaryPolynomial] {
        &self.equations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variable_order(&self) -> &[String] {
        &self.variable_order
    }

    pub fn n_qubits(&self) -> usize {
        self.variable_order.len()
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.equations.clone(), weights, self.variable_order.clone())
    }

    /// `Σ w_i P_i(x)²` evaluated on the bits of a basis-state index.
    pub fn penalty(&self, index: usize) -> f64 {
        let bits = index_bits(index, self.n_qubits());
        let lookup = |name: &str| {
            let q = self.variable_order.iter().position(|v| v == name).unwrap();
            bits[q]
        };
        self.equations
            .iter()
            .zip(&self.weights)
            .map(|(eq, w)| {
                let p = eq.evaluate(lookup);
                w * p * p
            })
            .sum()
    }

    /// Weighted square-sum Hamiltonian `Σ w_i P̂_i²`.
    pub fn to_hamiltonian(&self) -> Result<QubitOperator> {
        equations_to_hamiltonian(self)
    }
}

/// `Σ w_i P̂_i²` with every variable mapped to `(I - σ_z)/2` on its qubit.
pub fn equations_to_hamiltonian(eqs: &EquationSet) -> Result<QubitOperator> {
    let n = eqs.n_qubits();
    let qubit_of: BTreeMap<String, usize> = eqs
        .variable_order
        .iter()
        .enumerate()
        .map(|(q, v)| (v.clone(), q))
        .collect();
    let mut h = QubitOperator::zero(n);
    for (eq, &w) in eqs.equations.iter().zip(&eqs.weights) {
        if !(w > 0.0) {
            return Err(Error::NonPositiveWeight(w));
        }
        let p = eq.to_operator(&qubit_of, n)?;
        h = &h + &p.square()?.scaled(w);
    }
    Ok(h)
}

/// A bit source in the reconstruction of factor `a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitSource {
    Constant(u64),
    Bit(String),
}

/// How the Hamiltonian of an instance was built.
#[derive(Clone, Debug, PartialEq)]
pub enum Encoding {
    Direct {
        n_a: usize,
        n_b: usize,
    },
    EquationSet {
        equations: EquationSet,
        /// Bits settled by classical preprocessing.
        fixed_bits: BTreeMap<String, u8>,
        /// `a = Σ source · 2^power`.
        a_reconstruction: Vec<(BitSource, u32)>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorInstance {
    omega: u64,
    encoding: Encoding,
}

/// `⌊√x⌋` for integers.
fn isqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

fn bit_length(y: u64) -> usize {
    (u64::BITS - y.leading_zeros()) as usize
}

/// Number of free bits `(n_a, n_b)` for the direct encoding of odd `omega`:
/// `n_a = m(⌊√ω⌋_odd) - 1`, `n_b = m(⌊ω/3⌋) - 1`, where `m` is the bit length.
pub fn bit_lengths(omega: u64) -> Result<(usize, usize)> {
    if omega % 2 == 0 {
        return Err(Error::InvalidOmega {
            omega,
            reason: "must be odd",
        });
    }
    if omega < 9 {
        return Err(Error::InvalidOmega {
            omega,
            reason: "must be at least 9",
        });
    }
    let root = isqrt(omega);
    let odd_root = if root % 2 == 1 { root } else { root - 1 };
    Ok((bit_length(odd_root) - 1, bit_length(omega / 3) - 1))
}

/// `[ωI - (I + Σ_{l=1}^{n_a} 2^l â_l)(I + Σ_{m=1}^{n_b} 2^m b̂_m)]²` with the
/// `a` bits on the leading qubits.
pub fn direct_hamiltonian(omega: u64) -> Result<QubitOperator> {
    let (n_a, n_b) = bit_lengths(omega)?;
    direct_hamiltonian_with(omega, n_a, n_b)
}

fn direct_hamiltonian_with(omega: u64, n_a: usize, n_b: usize) -> Result<QubitOperator> {
    let n = n_a + n_b;
    let mut a = QubitOperator::identity(n, 1.0);
    for l in 1..=n_a {
        a = &a + &QubitOperator::bit(n, l - 1).scaled((1u64 << l) as f64);
    }
    let mut b = QubitOperator::identity(n, 1.0);
    for m in 1..=n_b {
        b = &b + &QubitOperator::bit(n, n_a + m - 1).scaled((1u64 << m) as f64);
    }
    let residual = &QubitOperator::identity(n, omega as f64) - &a.mul(&b)?;
    residual.square()
}

/// `-g Σ_i σ_x^{(i)}`.
pub fn initial_hamiltonian(n_qubits: usize, g: f64) -> Result<QubitOperator> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("field strength g = {g} must be positive")));
    }
    QubitOperator::from_terms(
        n_qubits,
        (0..n_qubits).map(|q| (PauliString::single(n_qubits, q, Pauli::X), -g)),
    )
}

fn poly(terms: &[(f64, &[&str])]) -> BinaryPolynomial {
    BinaryPolynomial::new(terms.iter().map(|(c, v)| (*c, v.to_vec())))
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn reconstruction(bits: &[(&str, u32)], top_power: u32) -> Vec<(BitSource, u32)> {
    let mut out = vec![(BitSource::Constant(1), 0)];
    out.extend(bits.iter().map(|(b, p)| (BitSource::Bit(b.to_string()), *p)));
    out.push((BitSource::Constant(1), top_power));
    out
}

/// Built-in instances: 21 and 91 use the direct encoding, the others the
/// weighted equation sets obtained from the multiplication-table reduction.
pub fn builtin_instance(omega: u64) -> Result<FactorInstance> {
    let (equations, weights, order, fixed, a_bits, top): (
        Vec<BinaryPolynomial>,
        Vec<f64>,
        Vec<&str>,
        Vec<(&str, u8)>,
        Vec<(&str, u32)>,
        u32,
    ) = match omega {
        21 | 91 => return FactorInstance::direct(omega),
        77 => (
            vec![
                poly(&[(1.0, &["a1"]), (2.0, &["a2"]), (-1.0, &[])]),
                poly(&[(1.0, &["a1"]), (1.0, &["a2"]), (-1.0, &[])]),
            ],
            vec![10.0, 5.0],
            vec!["a1", "a2"],
            vec![],
            vec![("a1", 1), ("a2", 2)],
            3,
        ),
        187 => (
            vec![
                poly(&[(1.0, &["a1"]), (1.0, &["b1"]), (-1.0, &[])]),
                poly(&[(1.0, &["a1"]), (-2.0, &["c4_5"])]),
                poly(&[(1.0, &["b1"]), (1.0, &["c4_5"]), (-1.0, &[])]),
            ],
            vec![1.0, 5.0, 10.0],
            vec!["a1", "b1", "c4_5"],
            vec![("a2", 0), ("a3", 0)],
            vec![("a1", 1), ("a2", 2), ("a3", 3)],
            4,
        ),
        703 => (
            vec![
                poly(&[
                    (1.0, &["a1"]),
                    (1.0, &["a2"]),
                    (1.0, &["a3"]),
                    (-2.0, &["a1", "a2"]),
                    (-1.0, &[]),
                ]),
                poly(&[(1.0, &["a3"]), (-1.0, &["a1", "a3"])]),
                poly(&[
                    (1.0, &["a3"]),
                    (-1.0, &["a2", "a3"]),
                    (1.0, &["a1"]),
                    (-2.0, &["c5_6"]),
                ]),
                poly(&[
                    (1.0, &[]),
                    (-1.0, &["a1"]),
                    (-1.0, &["a2"]),
                    (2.0, &["a3"]),
                    (1.0, &["c5_6"]),
                ]),
            ],
            vec![1.0, 1.0, 10.0, 5.0],
            vec!["a1", "a2", "a3", "c5_6"],
            vec![("a4", 0)],
            vec![("a1", 1), ("a2", 2), ("a3", 3), ("a4", 4)],
            5,
        ),
        2479 => (
            vec![
                poly(&[(1.0, &["a3", "b1"]), (-1.0, &["b1"])]),
                poly(&[(1.0, &["a3", "b2"]), (-1.0, &["b1"])]),
                poly(&[(1.0, &["a3"]), (1.0, &["b2"]), (1.0, &["c7_8"]), (-1.0, &[])]),
                poly(&[(1.0, &["b1"]), (-1.0, &["b2"]), (-2.0, &["c7_8"]), (1.0, &[])]),
                poly(&[
                    (1.0, &["a3"]),
                    (-2.0, &["b1", "b2"]),
                    (-1.0, &["b1"]),
                    (1.0, &["b2"]),
                    (-1.0, &[]),
                ]),
            ],
            vec![1.0, 1.0, 1.0, 10.0, 5.0],
            vec!["a3", "b1", "b2", "c7_8"],
            vec![("a1", 1), ("a2", 0), ("a4", 0), ("a5", 0)],
            vec![("a1", 1), ("a2", 2), ("a3", 3), ("a4", 4), ("a5", 5)],
            6,
        ),
        other => return Err(Error::UnsupportedInstance(other)),
    };
    FactorInstance::equation_set(
        omega,
        EquationSet::new(equations, weights, names(&order))?,
        fixed.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        reconstruction(&a_bits, top),
    )
}

/// Resolves a built-in, or falls back to the direct encoding for other odd ω.
pub fn instance_for(omega: u64) -> Result<FactorInstance> {
    match builtin_instance(omega) {
        Err(Error::UnsupportedInstance(_)) => FactorInstance::direct(omega),
        other => other,
    }
}

/// Bits of `index`, qubit 0 first.
pub fn index_bits(index: usize, n_qubits: usize) -> Vec<u8> {
    (0..n_qubits)
        .map(|q| ((index >> (n_qubits - 1 - q)) & 1) as u8)
        .collect()
}

/// Ket label such as `|0010⟩`.
pub fn basis_label(index: usize, n_qubits: usize) -> String {
    let bits: String = index_bits(index, n_qubits)
        .iter()
        .map(|b| if *b == 1 { '1' } else { '0' })
        .collect();
    format!("|{bits}⟩")
}

impl FactorInstance {
    pub fn direct(omega: u64) -> Result<Self> {
        let (n_a, n_b) = bit_lengths(omega)?;
        Ok(Self {
            omega,
            encoding: Encoding::Direct { n_a, n_b },
        })
    }

    pub fn equation_set(
        omega: u64,
        equations: EquationSet,
        fixed_bits: BTreeMap<String, u8>,
        a_reconstruction: Vec<(BitSource, u32)>,
    ) -> Result<Self> {
        if omega % 2 == 0 || omega < 9 {
            return Err(Error::InvalidOmega {
                omega,
                reason: "must be odd and at least 9",
            });
        }
        if let Some((k, v)) = fixed_bits.iter().find(|(_, v)| **v > 1) {
            return Err(Error::InvalidArgument(format!("fixed bit {k} = {v} is not binary")));
        }
        if a_reconstruction.iter().any(|(src, _)| matches!(src, BitSource::Constant(c) if *c > 1)) {
            return Err(Error::InvalidArgument("reconstruction constants must be 0 or 1".into()));
        }
        for (src, _) in &a_reconstruction {
            if let BitSource::Bit(name) = src {
                let free = equations.variable_order().iter().any(|v| v == name);
                if !free && !fixed_bits.contains_key(name) {
                    return Err(Error::UnknownVariable(name.clone()));
                }
            }
        }
        let odd = a_reconstruction
            .iter()
            .any(|(src, p)| *p == 0 && matches!(src, BitSource::Constant(1)));
        if !odd {
            return Err(Error::InvalidArgument(
                "a reconstruction must fix the 2^0 bit to 1".into(),
            ));
        }
        Ok(Self {
            omega,
            encoding: Encoding::EquationSet {
                equations,
                fixed_bits,
                a_reconstruction,
            },
        })
    }

    pub fn omega(&self) -> u64 {
        self.omega
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    pub fn method(&self) -> &'static str {
        match self.encoding {
            Encoding::Direct { .. } => "direct",
            Encoding::EquationSet { .. } => "equation_set",
        }
    }

    pub fn n_qubits(&self) -> usize {
        match &self.encoding {
            Encoding::Direct { n_a, n_b } => n_a + n_b,
            Encoding::EquationSet { equations, .. } => equations.n_qubits(),
        }
    }

    /// Free variable per qubit.
    pub fn variable_names(&self) -> Vec<String> {
        match &self.encoding {
            Encoding::Direct { n_a, n_b } => (1..=*n_a)
                .map(|l| format!("a{l}"))
                .chain((1..=*n_b).map(|m| format!("b{m}")))
                .collect(),
            Encoding::EquationSet { equations, .. } => equations.variable_order().to_vec(),
        }
    }

    /// Same instance with different equation weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        match &self.encoding {
            Encoding::Direct { .. } => Err(Error::InvalidArgument(
                "direct encodings carry no equation weights".into(),
            )),
            Encoding::EquationSet {
                equations,
                fixed_bits,
                a_reconstruction,
            } => Self::equation_set(
                self.omega,
                equations.with_weights(weights)?,
                fixed_bits.clone(),
                a_reconstruction.clone(),
            ),
        }
    }

    pub fn hamiltonian(&self) -> Result<QubitOperator> {
        match &self.encoding {
            Encoding::Direct { n_a, n_b } => direct_hamiltonian_with(self.omega, *n_a, *n_b),
            Encoding::EquationSet { equations, .. } => equations_to_hamiltonian(equations),
        }
    }

    /// Factor `a` from full free-bit assignment.
    pub fn reconstruct_a(&self, bits: &[u8]) -> u64 {
        match &self.encoding {
            Encoding::Direct { n_a, .. } => {
                1 + (1..=*n_a).map(|l| (bits[l - 1] as u64) << l).sum::<u64>()
            }
            Encoding::EquationSet {
                equations,
                fixed_bits,
                a_reconstruction,
            } => a_reconstruction
                .iter()
                .map(|(src, p)| {
                    let v = match src {
                        BitSource::Constant(c) => *c,
                        BitSource::Bit(name) => match equations.variable_order().iter().position(|v| v == name) {
                            Some(q) => bits[q] as u64,
                            None => fixed_bits[name] as u64,
                        },
                    };
                    v << p
                })
                .sum(),
        }
    }

    /// `(a, b)` for a free-bit assignment. The direct encoding reads `b` from
    /// its bits; equation sets recover it by exact division.
    pub fn factors_from_bits(&self, bits: &[u8]) -> Result<(u64, u64)> {
        let a = self.reconstruct_a(bits);
        let b = match &self.encoding {
            Encoding::Direct { n_a, n_b } => {
                1 + (1..=*n_b).map(|m| (bits[n_a + m - 1] as u64) << m).sum::<u64>()
            }
            Encoding::EquationSet { .. } => {
                if a == 0 || self.omega % a != 0 {
                    return Err(Error::FactorizationFailed {
                        omega: self.omega,
                        detail: format!("{a} does not divide {}", self.omega),
                    });
                }
                self.omega / a
            }
        };
        if a * b != self.omega {
            return Err(Error::FactorizationFailed {
                omega: self.omega,
                detail: format!("{a} × {b} = {}", a * b),
            });
        }
        Ok((a, b))
    }

    /// Basis indices with zero problem energy.
    pub fn zero_energy_states(&self) -> Result<Vec<usize>> {
        let diag = self.diagonal()?;
        let scale = 1.0 + diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        Ok(diag
            .iter()
            .enumerate()
            .filter(|(_, e)| e.abs() <= ZERO_ENERGY_TOL * scale)
            .map(|(i, _)| i)
            .collect())
    }

    fn diagonal(&self) -> Result<Vec<f64>> {
        let n = self.n_qubits();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Capacity {
                n_qubits: n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        Ok(self
            .hamiltonian()?
            .diagonal()
            .expect("problem Hamiltonians are Z-diagonal"))
    }
}

/// One zero-energy assignment found by enumeration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub index: usize,
    pub label: String,
    pub a: u64,
    pub b: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub omega: u64,
    pub method: &'static str,
    pub n_qubits: usize,
    pub min_energy: f64,
    pub solutions: Vec<Solution>,
}

impl VerificationReport {
    /// Every zero-energy assignment yields `a·b = ω`.
    pub fn all_factor(&self) -> bool {
        self.solutions
            .iter()
            .all(|s| s.b.is_some_and(|b| s.a * b == self.omega))
    }

    /// Exactly one factor pair, treating `(a, b)` and `(b, a)` as the same.
    pub fn is_unique(&self) -> bool {
        let pairs: BTreeSet<(u64, u64)> = self
            .solutions
            .iter()
            .filter_map(|s| s.b.map(|b| (s.a.min(b), s.a.max(b))))
            .collect();
        pairs.len() == 1 && self.all_factor()
    }

    pub fn factors(&self) -> Option<(u64, u64)> {
        self.solutions.first().and_then(|s| s.b.map(|b| (s.a, b)))
    }
}

/// Brute-force enumeration of every assignment of the free bits.
pub fn verify_instance(inst: &FactorInstance) -> Result<VerificationReport> {
    let n = inst.n_qubits();
    let diag = inst.diagonal()?;
    let min_energy = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let zeros = inst.zero_energy_states()?;
    if zeros.is_empty() {
        return Err(Error::NoZeroEnergy { min_energy });
    }
    let solutions = zeros
        .into_iter()
        .map(|index| {
            let bits = index_bits(index, n);
            let a = inst.reconstruct_a(&bits);
            let b = inst.factors_from_bits(&bits).ok().map(|(_, b)| b);
            Solution {
                index,
                label: basis_label(index, n),
                a,
                b,
            }
        })
        .collect();
    Ok(VerificationReport {
        omega: inst.omega(),
        method: inst.method(),
        n_qubits: n,
        min_energy,
        solutions,
    })
}

/// Rounds each `⟨(I - σ_z)/2⟩` to a bit and reconstructs the factors.
pub fn readout(state: &QuantumState, inst: &FactorInstance) -> Result<(u64, u64)> {
    let n = inst.n_qubits();
    if state.dim() != 1usize << n {
        return Err(Error::DimensionMismatch {
            expected: 1usize << n,
            got: state.dim(),
        });
    }
    let pops = state.populations();
    let names = inst.variable_names();
    let mut bits = Vec::with_capacity(n);
    for q in 0..n {
        let mask = 1usize << (n - 1 - q);
        let p: f64 = pops
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, p)| p)
            .sum();
        if (p - 0.5).abs() < READOUT_MARGIN {
            return Err(Error::AmbiguousReadout {
                bit: names[q].clone(),
                value: p,
            });
        }
        bits.push(u8::from(p > 0.5));
    }
    inst.factors_from_bits(&bits)
}

/// An instance together with the operators needed to anneal it.
#[derive(Clone, Debug)]
pub struct Problem {
    pub instance: FactorInstance,
    pub g: f64,
    pub h0: DenseHermitian,
    pub hp: DenseHermitian,
    pub hp_operator: QubitOperator,
    /// Zero-energy basis states of `Ĥ_p`.
    pub targets: Vec<usize>,
}

impl Problem {
    pub fn new(instance: FactorInstance, g: f64) -> Result<Self> {
        let n = instance.n_qubits();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Capacity {
                n_qubits: n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let h0 = materialize(&initial_hamiltonian(n, g)?)?;
        let hp_operator = instance.hamiltonian()?;
        let hp = materialize(&hp_operator)?;
        let targets = instance.zero_energy_states()?;
        if targets.is_empty() {
            let min_energy = hp.diagonal().unwrap().iter().copied().fold(f64::INFINITY, f64::min);
            return Err(Error::NoZeroEnergy { min_energy });
        }
        Ok(Self {
            instance,
            g,
            h0,
            hp,
            hp_operator,
            targets,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.instance.n_qubits()
    }

    pub fn dim(&self) -> usize {
        self.hp.dim()
    }

    pub fn initial_state(&self) -> QuantumState {
        QuantumState::plus_state(self.n_qubits())
    }

    /// Probability outside the zero-energy subspace; for a unique ground
    /// state this is `1 - |⟨ψ_p|ψ⟩|²`.
    pub fn infidelity(&self, state: &QuantumState) -> f64 {
        (1.0 - state.population_in(&self.targets)).clamp(0.0, 1.0)
    }
}

/// On-disk instance document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub omega: u64,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equations: Vec<Vec<(f64, Vec<String>)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variable_order: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed_bits: BTreeMap<String, u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a_reconstruction: Vec<(BitSource, u32)>,
}

impl From<&FactorInstance> for InstanceFile {
    fn from(inst: &FactorInstance) -> Self {
        let mut file = InstanceFile {
            omega: inst.omega,
            method: inst.method().to_string(),
            n_a: None,
            n_b: None,
            equations: Vec::new(),
            weights: Vec::new(),
            variable_order: Vec::new(),
            fixed_bits: BTreeMap::new(),
            a_reconstruction: Vec::new(),
        };
        match &inst.encoding {
            Encoding::Direct { n_a, n_b } => {
                file.n_a = Some(*n_a);
                file.n_b = Some(*n_b);
            }
            Encoding::EquationSet {
                equations,
                fixed_bits,
                a_reconstruction,
            } => {
                file.equations = equations
                    .equations()
                    .iter()
                    .map(|p| {
                        p.terms()
                            .iter()
                            .map(|(c, v)| (*c, v.iter().cloned().collect()))
                            .collect()
                    })
                    .collect();
                file.weights = equations.weights().to_vec();
                file.variable_order = equations.variable_order().to_vec();
                file.fixed_bits = fixed_bits.clone();
                file.a_reconstruction = a_reconstruction.clone();
            }
        }
        file
    }
}

impl TryFrom<InstanceFile> for FactorInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        match file.method.as_str() {
            "direct" => {
                let (n_a, n_b) = bit_lengths(file.omega)?;
                if file.n_a.is_some_and(|v| v != n_a) || file.n_b.is_some_and(|v| v != n_b) {
                    return Err(Error::InvalidArgument(format!(
                        "bit lengths for {} must be ({n_a}, {n_b})",
                        file.omega
                    )));
                }
                FactorInstance::direct(file.omega)
            }
            "equation_set" => {
                let equations = file
                    .equations
                    .into_iter()
                    .map(BinaryPolynomial::new)
                    .collect();
                let set = EquationSet::new(equations, file.weights, file.variable_order)?;
                FactorInstance::equation_set(file.omega, set, file.fixed_bits, file.a_reconstruction)
            }
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

impl FactorInstance {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
