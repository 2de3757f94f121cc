//! Finite Fock representations of the q-oscillator at a root of unity.
//!
//! The ladder `b`, `b̄` acts on `|0⟩ … |k⟩` as
//!
//! ```text
//! b|n⟩ = q^(n-1) √[n] |n-1⟩      b̄|n⟩ = √[n+1] |n+1⟩      N|n⟩ = n|n⟩
//! ```
//!
//! with symmetric q-numbers. Since `[k+1] = 0` the ladder closes on `k+1`
//! states. The hermitian-conjugate pair is `a = q^(-N/2) b`, `a†`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::qnum::{RootData, DEFAULT_TOL};

#[derive(Debug, Clone)]
pub struct FockRep {
    pub root: RootData,
    pub dim: usize,
    pub number: Matrix,
    pub a: Matrix,
    pub a_dag: Matrix,
    pub b: Matrix,
    pub b_bar: Matrix,
}

/// Relations that can be checked on a [`FockRep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `a a† - q a† a = q^(-N)` and `a† a = [N]_sym`.
    Defining,
    /// `b b̄ - q² b̄ b = 1`.
    Cr1,
    /// `b b̄ - b̄ b = q^(2N)`.
    Cr2,
    /// `b b̄ + b̄ b = 1`, only at `k = 1`.
    Cr4,
    /// `a a† + (a†)² a² = 1`, only at `k = 2`.
    Cr15,
    /// `b† = b̄ q^(-N)` and `b̄† = q^(-N) b`.
    ConjB,
    /// `b̄ b = [N]_box`.
    BoxNumber,
}

impl Relation {
    pub const ALL: [Relation; 7] = [
        Relation::Defining,
        Relation::Cr1,
        Relation::Cr2,
        Relation::Cr4,
        Relation::Cr15,
        Relation::ConjB,
        Relation::BoxNumber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Defining => "defining",
            Relation::Cr1 => "cr1",
            Relation::Cr2 => "cr2",
            Relation::Cr4 => "cr4",
            Relation::Cr15 => "cr15",
            Relation::ConjB => "conj_b",
            Relation::BoxNumber => "box_number",
        }
    }

    /// Whether the relation is defined at this `k`.
    pub fn applies(self, k: u32) -> bool {
        match self {
            Relation::Cr4 => k == 1,
            Relation::Cr15 => k == 2,
            _ => true,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn build_fock_rep(root: &RootData) -> FockRep {
    let dim = root.dim();
    let mut number = Matrix::zeros((dim, dim));
    let mut b = Matrix::zeros((dim, dim));
    let mut b_bar = Matrix::zeros((dim, dim));
    let mut q_minus_half_n = Matrix::zeros((dim, dim));
    for n in 0..dim {
        number[[n, n]] = Complex64::new(n as f64, 0.0);
        q_minus_half_n[[n, n]] = root.q_half_pow(-(n as i64));
        if n >= 1 {
            b[[n - 1, n]] = root.q_pow(n as i64 - 1) * root.num_sym(n as u32).sqrt();
        }
        if n + 1 < dim {
            b_bar[[n + 1, n]] = Complex64::new(root.num_sym(n as u32 + 1).sqrt(), 0.0);
        }
    }
    let a = q_minus_half_n.dot(&b);
    let a_dag = linalg::dagger(&a);
    FockRep {
        root: *root,
        dim,
        number,
        a,
        a_dag,
        b,
        b_bar,
    }
}

impl FockRep {
    pub fn identity(&self) -> Matrix {
        linalg::identity(self.dim)
    }

    /// `q^(e·N)` as a diagonal matrix.
    pub fn q_pow_number(&self, e: i64) -> Matrix {
        let entries: Vec<_> = (0..self.dim)
            .map(|n| self.root.q_pow(e * n as i64))
            .collect();
        linalg::diag(&entries)
    }

    /// Diagonal matrix of box q-numbers `[N]`.
    pub fn box_number(&self) -> Matrix {
        let entries: Vec<_> = (0..self.dim).map(|n| self.root.num_box(n as u32)).collect();
        linalg::diag(&entries)
    }
}

/// Max absolute entry of `LHS - RHS` for the chosen relation.
pub fn verify_relation(rep: &FockRep, relation: Relation) -> Result<f64> {
    let k = rep.root.k();
    let q = rep.root.q();
    let one = rep.identity();
    let (b, bb) = (&rep.b, &rep.b_bar);
    let res = match relation {
        Relation::Defining => {
            let lhs = rep.a.dot(&rep.a_dag) - rep.a_dag.dot(&rep.a).mapv(|z| z * q);
            let sym: Vec<_> = (0..rep.dim)
                .map(|n| Complex64::new(rep.root.num_sym(n as u32), 0.0))
                .collect();
            let first = linalg::max_abs_diff(&lhs, &rep.q_pow_number(-1));
            let second = linalg::max_abs_diff(&rep.a_dag.dot(&rep.a), &linalg::diag(&sym));
            first.max(second)
        }
        Relation::Cr1 => {
            let lhs = b.dot(bb) - bb.dot(b).mapv(|z| z * rep.root.q2());
            linalg::max_abs_diff(&lhs, &one)
        }
        Relation::Cr2 => {
            let lhs = b.dot(bb) - bb.dot(b);
            linalg::max_abs_diff(&lhs, &rep.q_pow_number(2))
        }
        Relation::Cr4 => {
            if k != 1 {
                return Err(Error::RelationNotApplicable {
                    relation: "cr4",
                    required: 1,
                    k,
                });
            }
            linalg::max_abs_diff(&(b.dot(bb) + bb.dot(b)), &one)
        }
        Relation::Cr15 => {
            if k != 2 {
                return Err(Error::RelationNotApplicable {
                    relation: "cr15",
                    required: 2,
                    k,
                });
            }
            let a2 = rep.a.dot(&rep.a);
            let ad2 = rep.a_dag.dot(&rep.a_dag);
            let lhs = rep.a.dot(&rep.a_dag) + ad2.dot(&a2);
            linalg::max_abs_diff(&lhs, &one)
        }
        Relation::ConjB => {
            let qmn = rep.q_pow_number(-1);
            let first = linalg::max_abs_diff(&linalg::dagger(b), &bb.dot(&qmn));
            let second = linalg::max_abs_diff(&linalg::dagger(bb), &qmn.dot(b));
            first.max(second)
        }
        Relation::BoxNumber => linalg::max_abs_diff(&bb.dot(b), &rep.box_number()),
    };
    Ok(res)
}

/// Parameters of `H = ω(u b̄b + v b̄²b²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianSpec {
    pub u: Complex64,
    pub v: Complex64,
    pub omega: f64,
}

impl HamiltonianSpec {
    pub fn new(u: Complex64, v: Complex64, omega: f64) -> Self {
        Self { u, v, omega }
    }

    /// The three hermitian couples at `k = 2`: `(1,-q)`, `(1,1-2q)`, `(0,-q²)`.
    pub fn hermitian_couples(root: &RootData, omega: f64) -> [HamiltonianSpec; 3] {
        let one = Complex64::new(1.0, 0.0);
        let q = root.q();
        [
            Self::new(one, -q, omega),
            Self::new(one, one - 2.0 * q, omega),
            Self::new(Complex64::new(0.0, 0.0), -root.q2(), omega),
        ]
    }
}

pub fn build_hamiltonian(rep: &FockRep, spec: &HamiltonianSpec) -> Matrix {
    let bb_b = rep.b_bar.dot(&rep.b);
    let bb2 = rep.b_bar.dot(&rep.b_bar);
    let b2 = rep.b.dot(&rep.b);
    let quartic = bb2.dot(&b2);
    (bb_b.mapv(|z| z * spec.u) + quartic.mapv(|z| z * spec.v)).mapv(|z| z * spec.omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hermiticity {
    pub hermitian: bool,
    pub residual: f64,
}

pub fn hermiticity_classify(rep: &FockRep, spec: &HamiltonianSpec) -> Hermiticity {
    let h = build_hamiltonian(rep, spec);
    let residual = linalg::max_abs_diff(&h, &linalg::dagger(&h));
    Hermiticity {
        hermitian: residual < DEFAULT_TOL,
        residual,
    }
}

/// `exp(-iHT)`.
pub fn exact_evolution(h: &Matrix, time: f64) -> Result<Matrix> {
    let generator = h.mapv(|z| z * Complex64::new(0.0, -time));
    linalg::expm(&generator)
}

/// Fock representation of `α α† + (α†)^n α^n = 1`.
#[derive(Debug, Clone)]
pub struct PolynomialFock {
    pub order: usize,
    /// `c_1 … c_n` with `α|m⟩ = c_m |m-1⟩`.
    pub coeffs: Vec<f64>,
    /// `c_(n+1)`, zero when the representation truncates.
    pub overflow: f64,
    pub alpha: Matrix,
    pub alpha_dag: Matrix,
    pub residual: f64,
}

impl PolynomialFock {
    pub fn dim(&self) -> usize {
        self.order + 1
    }
}

pub fn polynomial_fock(order: usize) -> Result<PolynomialFock> {
    if order == 0 {
        return Err(Error::Config("polynomial algebra order must be ≥ 1".into()));
    }
    // c_sq[m] = |c_m|², c_sq[0] = 0
    let mut c_sq = vec![0.0f64; order + 2];
    for m in 0..=order {
        let tail: f64 = if m + 1 > order {
            (m + 1 - order..=m).map(|j| c_sq[j]).product()
        } else {
            0.0
        };
        let value = 1.0 - tail;
        let value = if value.abs() < 1e-14 { 0.0 } else { value };
        if value < 0.0 {
            return Err(Error::NegativeNorm {
                index: m + 1,
                value,
            });
        }
        c_sq[m + 1] = value;
    }
    let coeffs: Vec<f64> = c_sq[1..=order].iter().map(|v| v.sqrt()).collect();
    let overflow = c_sq[order + 1].sqrt();

    let dim = order + 1;
    let mut alpha = Matrix::zeros((dim, dim));
    for (m, c) in coeffs.iter().enumerate() {
        alpha[[m, m + 1]] = Complex64::new(*c, 0.0);
    }
    let alpha_dag = linalg::dagger(&alpha);
    let lhs = alpha.dot(&alpha_dag)
        + linalg::matrix_power(&alpha_dag, order as u32)
            .dot(&linalg::matrix_power(&alpha, order as u32));
    let residual = linalg::max_abs_diff(&lhs, &linalg::identity(dim));
    Ok(PolynomialFock {
        order,
        coeffs,
        overflow,
        alpha,
        alpha_dag,
        residual,
    })
}
