//! Ladder algebra of the z-formalism.
//!
//! The mode operators a' and abar' are not hermitian conjugates of each
//! other everywhere: in P1 they conjugate into each other as usual, while
//! in P2 each conjugates into itself at the negated mode. Their
//! commutator carries the factor |lambda|/lambda instead of 1, and the
//! per-mode coefficient of abar' a' in H' is -lambda^2/|lambda|.
//!
//! Two levels are provided: exact structure constants on symbols, and
//! finite truncated matrix realizations (a single oscillator for a P1
//! mode, a two-oscillator Bogoliubov-type pair for a P2 mode pair).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::dispersion::{classify_region, lambda_of, MassParam, MomentumTriple, Region};
use crate::linalg::{dagger, identity, kron, CMat};
use crate::{Error, Result};

/// Which of the two mode operators a symbol denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OpKind {
    A,
    ABar,
}

/// A formal ladder operator a'(k') or abar'(k').
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOpSymbol {
    pub kind: OpKind,
    pub mode: MomentumTriple,
}

impl Eq for ModeOpSymbol {}

impl PartialOrd for ModeOpSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModeOpSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then(self.mode.kx.total_cmp(&other.mode.kx))
            .then(self.mode.ky.total_cmp(&other.mode.ky))
            .then(self.mode.kt.total_cmp(&other.mode.kt))
    }
}

impl ModeOpSymbol {
    pub fn a(mode: MomentumTriple) -> Self {
        ModeOpSymbol { kind: OpKind::A, mode }
    }

    pub fn abar(mode: MomentumTriple) -> Self {
        ModeOpSymbol { kind: OpKind::ABar, mode }
    }
}

/// Hermitian conjugation rule for a single symbol.
///
/// P1: a'(k) <-> abar'(k). P2: each kind maps to itself at -k.
pub fn conjugate_symbol(op: ModeOpSymbol, m: MassParam) -> ModeOpSymbol {
    match classify_region(op.mode, m).effective() {
        Region::P2 => ModeOpSymbol {
            kind: op.kind,
            mode: op.mode.negated(),
        },
        _ => ModeOpSymbol {
            kind: match op.kind {
                OpKind::A => OpKind::ABar,
                OpKind::ABar => OpKind::A,
            },
            mode: op.mode,
        },
    }
}

/// Coefficient of the delta in [op1, op2].
///
/// [a'(k), abar'(k)] = |lambda|/lambda; same kinds and distinct modes
/// commute; antisymmetric under swap.
pub fn commutator_coeff(op1: ModeOpSymbol, op2: ModeOpSymbol, m: MassParam) -> Complex64 {
    if op1.mode != op2.mode {
        return Complex64::new(0.0, 0.0);
    }
    let lambda = lambda_of(op1.mode, m).lambda;
    let ratio = lambda.norm() / lambda;
    match (op1.kind, op2.kind) {
        (OpKind::A, OpKind::ABar) => ratio,
        (OpKind::ABar, OpKind::A) => -ratio,
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Per-mode coefficient of abar' a' in H': -lambda^2/|lambda|.
pub fn hprime_coeff(kp: MomentumTriple, m: MassParam) -> Result<Complex64> {
    if classify_region(kp, m) == Region::Boundary {
        return Err(Error::DegenerateMode);
    }
    let lambda = lambda_of(kp, m).lambda;
    if lambda.norm() == 0.0 {
        return Err(Error::DegenerateMode);
    }
    Ok(-lambda * lambda / lambda.norm())
}

/// A linear combination of symbol products of length at most two, used to
/// carry the structure-constant identities.
#[derive(Debug, Clone, Default)]
pub struct AlgebraElement {
    terms: BTreeMap<Vec<ModeOpSymbol>, Complex64>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut e = Self::zero();
        e.add_term(vec![], c);
        e
    }

    pub fn symbol(s: ModeOpSymbol) -> Self {
        let mut e = Self::zero();
        e.add_term(vec![s], Complex64::new(1.0, 0.0));
        e
    }

    pub fn product(a: ModeOpSymbol, b: ModeOpSymbol) -> Self {
        let mut e = Self::zero();
        e.add_term(vec![a, b], Complex64::new(1.0, 0.0));
        e
    }

    fn add_term(&mut self, key: Vec<ModeOpSymbol>, c: Complex64) {
        let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            // drop exact cancellations so is_zero stays meaningful
            let key: Vec<_> = self
                .terms
                .iter()
                .filter(|(_, v)| v.norm() == 0.0)
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut e = Self::zero();
        for (k, v) in &self.terms {
            e.add_term(k.clone(), *v * c);
        }
        e
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = self.clone();
        for (k, v) in &other.terms {
            e.add_term(k.clone(), *v);
        }
        e
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.terms.values().all(|v| v.norm() <= tol)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[ModeOpSymbol], Complex64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Adjoint: conjugate coefficients, reverse products, conjugate symbols.
    pub fn adjoint(&self, m: MassParam) -> Self {
        let mut e = Self::zero();
        for (k, v) in &self.terms {
            let key: Vec<_> = k.iter().rev().map(|s| conjugate_symbol(*s, m)).collect();
            e.add_term(key, v.conj());
        }
        e
    }

    /// Commutator of this element with a single symbol, using the delta
    /// commutators as structure constants (Leibniz rule on products).
    pub fn commutator_with(&self, s: ModeOpSymbol, m: MassParam) -> Self {
        let mut e = Self::zero();
        for (k, v) in &self.terms {
            match k.as_slice() {
                [] => {}
                [x] => {
                    e.add_term(vec![], *v * commutator_coeff(*x, s, m));
                }
                [x, y] => {
                    // [XY, S] = X [Y, S] + [X, S] Y
                    e.add_term(vec![*x], *v * commutator_coeff(*y, s, m));
                    e.add_term(vec![*y], *v * commutator_coeff(*x, s, m));
                }
                _ => unreachable!("products longer than two are never built"),
            }
        }
        e
    }
}

/// Standard truncated lowering matrix: subdiagonal sqrt(1..dim-1).
pub fn lowering(dim: usize) -> CMat {
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Finite matrix realization of the operators attached to one mode label.
#[derive(Debug, Clone)]
pub enum ModeRealization {
    /// Single oscillator: a' = lowering, abar' = its hermitian transpose.
    P1 { dim: usize, a: CMat },
    /// Two-oscillator pair carrying the modes k and -k together, with
    /// A(k) = b+ + b-^dag, A(-k) = b- + b+^dag, ABar(k) = g b+^dag + g* b-,
    /// ABar(-k) = g b-^dag + g* b+ and g = -i/2. These satisfy
    /// [A(k), ABar(k)] = -i off corner and A(k)^dag = A(-k) exactly.
    P2Pair {
        dim: usize,
        a_k: CMat,
        a_mk: CMat,
        abar_k: CMat,
        abar_mk: CMat,
    },
}

impl ModeRealization {
    /// Dimension of the full matrix space this realization acts on.
    pub fn total_dim(&self) -> usize {
        match self {
            ModeRealization::P1 { dim, .. } => *dim,
            ModeRealization::P2Pair { dim, .. } => dim * dim,
        }
    }

    /// Per-oscillator dimensions, for corner projectors.
    pub fn osc_dims(&self) -> Vec<usize> {
        match self {
            ModeRealization::P1 { dim, .. } => vec![*dim],
            ModeRealization::P2Pair { dim, .. } => vec![*dim, *dim],
        }
    }

    pub fn abar(&self) -> CMat {
        match self {
            ModeRealization::P1 { a, .. } => dagger(a),
            ModeRealization::P2Pair { abar_k, .. } => abar_k.clone(),
        }
    }
}

/// Single-oscillator realization for a P1 mode.
pub fn realize_p1_mode(dim: usize) -> Result<ModeRealization> {
    if dim < 2 {
        return Err(Error::Precondition(format!("dim must be >= 2, got {dim}")));
    }
    Ok(ModeRealization::P1 { dim, a: lowering(dim) })
}

/// Two-oscillator realization for a P2 mode pair (k, -k).
pub fn realize_p2_pair(kp: MomentumTriple, m: MassParam, dim: usize) -> Result<ModeRealization> {
    if dim < 2 {
        return Err(Error::Precondition(format!("dim must be >= 2, got {dim}")));
    }
    if classify_region(kp, m).effective() != Region::P2 {
        return Err(Error::WrongRegion(format!(
            "({}, {}, {}) is not in P2",
            kp.kx, kp.ky, kp.kt
        )));
    }
    let b = lowering(dim);
    let id = identity(dim);
    let b_plus = kron(&b, &id);
    let b_minus = kron(&id, &b);
    let gamma = Complex64::new(0.0, -0.5);
    let a_k = &b_plus + &dagger(&b_minus);
    let a_mk = &b_minus + &dagger(&b_plus);
    let abar_k = dagger(&b_plus).mapv(|x| x * gamma) + b_minus.mapv(|x| x * gamma.conj());
    let abar_mk = dagger(&b_minus).mapv(|x| x * gamma) + b_plus.mapv(|x| x * gamma.conj());
    Ok(ModeRealization::P2Pair {
        dim,
        a_k,
        a_mk,
        abar_k,
        abar_mk,
    })
}

/// A mode label paired with its matrix realization.
#[derive(Debug, Clone)]
pub struct ModeAssignment {
    pub mode: MomentumTriple,
    pub realization: ModeRealization,
}

/// H' over a finite mode set, with its zero-point analog.
#[derive(Debug, Clone)]
pub struct HprimeModes {
    /// H' = sum over modes of (-lambda^2/|lambda|) abar' a' + e0 * I.
    pub matrix: CMat,
    /// E0' = sum over modes of -lambda/2.
    pub e0: Complex64,
    /// Per-oscillator dimensions of the tensor space, in factor order.
    pub osc_dims: Vec<usize>,
}

/// Embed a matrix acting on factor `index` into the tensor product of all
/// assignment spaces.
pub fn embed(assignments: &[ModeAssignment], index: usize, local: &CMat) -> CMat {
    let mut out = if index == 0 {
        local.clone()
    } else {
        let mut left = identity(assignments[0].realization.total_dim());
        for a in &assignments[1..index] {
            left = kron(&left, &identity(a.realization.total_dim()));
        }
        kron(&left, local)
    };
    for a in &assignments[index + 1..] {
        out = kron(&out, &identity(a.realization.total_dim()));
    }
    out
}

/// Assemble H' from a list of realized modes.
pub fn build_hprime_modes(assignments: &[ModeAssignment], m: MassParam) -> Result<HprimeModes> {
    if assignments.is_empty() {
        return Err(Error::Precondition("empty mode list".into()));
    }
    let total: usize = assignments.iter().map(|a| a.realization.total_dim()).product();
    let mut matrix: CMat = Array2::zeros((total, total));
    let mut e0 = Complex64::new(0.0, 0.0);
    let mut osc_dims = Vec::new();
    for (idx, a) in assignments.iter().enumerate() {
        let coeff = hprime_coeff(a.mode, m)?;
        let lambda = lambda_of(a.mode, m).lambda;
        let local = match &a.realization {
            ModeRealization::P1 { a: low, .. } => dagger(low).dot(low).mapv(|x| x * coeff),
            ModeRealization::P2Pair {
                a_k,
                a_mk,
                abar_k,
                abar_mk,
                ..
            } => (abar_k.dot(a_k) + abar_mk.dot(a_mk)).mapv(|x| x * coeff),
        };
        matrix = matrix + embed(assignments, idx, &local);
        // per mode: coeff * [a, abar] / 2 = -lambda/2; a P2 pair carries two modes
        let modes_carried = match a.realization {
            ModeRealization::P1 { .. } => 1.0,
            ModeRealization::P2Pair { .. } => 2.0,
        };
        e0 += -lambda / 2.0 * modes_carried;
        osc_dims.extend(a.realization.osc_dims());
    }
    for i in 0..total {
        matrix[[i, i]] += e0;
    }
    Ok(HprimeModes { matrix, e0, osc_dims })
}
