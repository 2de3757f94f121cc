//! Bargmann-Fock realization on nilpotent functions.
//!
//! The Fock state `|n⟩` is the function `ψ_n = z̄^n / √([n]!)`. The scalar
//! product is `⟨f, g⟩ = ∫ dz̄ dz f̄(z) μ(z̄z) g(z̄)`, with the diagonal measure
//! `μ` fixed by orthonormality. An operator `A` is represented by its kernel
//!
//! ```text
//! 𝒜(z̄_out, z_in) = Σ_mn A_mn ψ_m(z̄_out) ψ̄_n(z_in)
//! ```
//!
//! and kernels compose by `(𝒜 ∗ ℬ)(z̄, z') = ∫ dz̄'' dz'' 𝒜(z̄, z'') μ(z̄''z'') ℬ(z̄'', z')`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{build_fock_rep, polynomial_fock};
use crate::linalg::{self, Matrix};
use crate::nilalg::{CoefficientRecord, NilPoly, SliceAlgebra, Variant};
use crate::qnum::RootData;

/// Normalized functions `ψ_0 … ψ_k` on a single slice.
#[derive(Debug, Clone)]
pub struct BfBasis {
    algebra: SliceAlgebra,
    functions: Vec<NilPoly>,
}

impl BfBasis {
    pub fn new(algebra: SliceAlgebra) -> Result<Self> {
        let root = algebra.root;
        let functions = (0..=root.k())
            .map(|n| {
                let norm = root.factorial_sym(n).sqrt();
                NilPoly::monomial(algebra, vec![[n, 0]], Complex64::new(1.0 / norm, 0.0))
            })
            .collect::<Result<_>>()?;
        Ok(Self { algebra, functions })
    }

    pub fn algebra(&self) -> &SliceAlgebra {
        &self.algebra
    }

    pub fn root(&self) -> &RootData {
        &self.algebra.root
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn function(&self, n: usize) -> &NilPoly {
        &self.functions[n]
    }

    pub fn functions(&self) -> &[NilPoly] {
        &self.functions
    }

    /// `√([n]_sym!)`.
    fn norm(&self, n: usize) -> f64 {
        self.algebra.root.factorial_sym(n as u32).sqrt()
    }

    /// `∫ f̄ μ g` for single-slice functions of z̄.
    pub fn inner_product(&self, f: &NilPoly, g: &NilPoly, measure: &Measure) -> Result<Complex64> {
        let integrand = f.bar()?.mul(&measure.poly)?.mul(g)?;
        Ok(integrand.integrate(0)?.constant_term())
    }

    /// Matrix of a function-space operator: `M_mn = ⟨ψ_m, op(ψ_n)⟩`.
    pub fn operator_matrix<F>(&self, measure: &Measure, op: F) -> Result<Matrix>
    where
        F: Fn(&NilPoly) -> Result<NilPoly>,
    {
        let d = self.dim();
        let mut m = Matrix::zeros((d, d));
        for n in 0..d {
            let image = op(&self.functions[n])?;
            for row in 0..d {
                m[[row, n]] = self.inner_product(&self.functions[row], &image, measure)?;
            }
        }
        Ok(m)
    }

    /// Gram matrix `⟨ψ_m, ψ_n⟩`.
    pub fn gram(&self, measure: &Measure) -> Result<Matrix> {
        self.operator_matrix(measure, |f| Ok(f.clone()))
    }
}

/// Diagonal measure `μ = Σ_j μ_j z̄^j z^j` on one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub coeffs: Vec<Complex64>,
    pub poly: NilPoly,
}

impl Measure {
    pub fn new(algebra: SliceAlgebra, coeffs: Vec<Complex64>) -> Result<Self> {
        let poly = NilPoly::diagonal(algebra, 1, 0, 0, &coeffs)?;
        Ok(Self { coeffs, poly })
    }
}

/// Solves `⟨ψ_n, μ ψ_n⟩ = 1` for the diagonal measure coefficients.
pub fn solve_measure(basis: &BfBasis) -> Result<Measure> {
    let d = basis.dim();
    let algebra = *basis.algebra();
    let mut system = Matrix::zeros((d, d));
    for j in 0..d {
        let mut unit = vec![Complex64::new(0.0, 0.0); d];
        unit[j] = Complex64::new(1.0, 0.0);
        let probe = Measure::new(algebra, unit)?;
        for n in 0..d {
            let psi = basis.function(n);
            system[[n, j]] = basis.inner_product(psi, psi, &probe)?;
        }
    }
    let rhs = vec![Complex64::new(1.0, 0.0); d];
    let coeffs = linalg::solve(&system, &rhs)?;
    Measure::new(algebra, coeffs)
}

/// Kernel coefficient table `K_mn` on `z̄_out^m z_in^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub algebra: SliceAlgebra,
    pub coeffs: Matrix,
}

impl Kernel {
    pub fn new(algebra: SliceAlgebra, coeffs: Matrix) -> Result<Self> {
        let d = algebra.root.dim();
        if coeffs.dim() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: coeffs.nrows(),
            });
        }
        Ok(Self { algebra, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Two-slice polynomial: slice 0 carries `z̄_out`, slice 1 carries `z_in`.
    pub fn to_nilpoly(&self) -> Result<NilPoly> {
        let mut p = NilPoly::zero(self.algebra, 2)?;
        for ((m, n), &c) in self.coeffs.indexed_iter() {
            if c.norm() == 0.0 {
                continue;
            }
            let t = NilPoly::monomial(self.algebra, vec![[m as u32, 0], [0, n as u32]], c)?;
            p = p.checked_add(&t)?;
        }
        Ok(p)
    }

    /// Reads a kernel back from a polynomial in `z̄(t_out)` and `z(t_in)`.
    pub fn from_nilpoly(p: &NilPoly, out_slice: usize, in_slice: usize) -> Result<Self> {
        let algebra = *p.algebra();
        let d = algebra.root.dim();
        let mut coeffs = Matrix::zeros((d, d));
        for (mono, &c) in p.terms() {
            for (i, &[m, n]) in mono.0.iter().enumerate() {
                let stray = (i != out_slice && m != 0) || (i != in_slice && n != 0);
                if stray {
                    return Err(Error::NotAKernel(format!(
                        "unexpected monomial {:?}",
                        mono.0
                    )));
                }
            }
            let m = mono.0[out_slice][0] as usize;
            let n = mono.0[in_slice][1] as usize;
            coeffs[[m, n]] += c;
        }
        Ok(Self { algebra, coeffs })
    }

    /// Inverse of [`operator_kernel`]: `A_mn = K_mn √([m]! [n]!)`.
    pub fn to_operator(&self) -> Matrix {
        let root = self.algebra.root;
        let mut a = self.coeffs.clone();
        for ((m, n), v) in a.indexed_iter_mut() {
            *v *= (root.factorial_sym(m as u32) * root.factorial_sym(n as u32)).sqrt();
        }
        a
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        linalg::max_abs_diff(&self.coeffs, &other.coeffs)
    }

    pub fn to_records(&self) -> Result<Vec<CoefficientRecord>> {
        Ok(self.to_nilpoly()?.to_records())
    }
}

/// `g = Σ_n ψ_n(z̄_out) ψ̄_n(z_in)`, diagonal with entries `1/[n]!`.
pub fn identity_kernel(basis: &BfBasis) -> Kernel {
    let d = basis.dim();
    let mut coeffs = Matrix::zeros((d, d));
    for n in 0..d {
        let norm = basis.norm(n);
        coeffs[[n, n]] = Complex64::new(1.0 / (norm * norm), 0.0);
    }
    Kernel {
        algebra: *basis.algebra(),
        coeffs,
    }
}

/// Kernel with coefficient `⟨ψ_m|A|ψ_n⟩ / √([m]! [n]!)` on `z̄_out^m z_in^n`.
pub fn operator_kernel(a: &Matrix, basis: &BfBasis) -> Result<Kernel> {
    let d = basis.dim();
    if a.dim() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.nrows(),
        });
    }
    let mut coeffs = a.clone();
    for ((m, n), v) in coeffs.indexed_iter_mut() {
        *v /= basis.norm(m) * basis.norm(n);
    }
    Ok(Kernel {
        algebra: *basis.algebra(),
        coeffs,
    })
}

/// Where the intermediate-slice measure sits in the convolution integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasurePlacement {
    /// `𝒜(z̄, z'') μ(z̄''z'') ℬ(z̄'', z')`
    #[default]
    Between,
    /// `μ(z̄''z'') 𝒜(z̄, z'') ℬ(z̄'', z')`; loses the right unit in the q-commuting variant.
    Leading,
}

pub fn kernel_convolve(k1: &Kernel, k2: &Kernel, measure: &Measure) -> Result<Kernel> {
    kernel_convolve_with(k1, k2, measure, MeasurePlacement::Between)
}

pub fn kernel_convolve_with(
    k1: &Kernel,
    k2: &Kernel,
    measure: &Measure,
    placement: MeasurePlacement,
) -> Result<Kernel> {
    if k1.algebra != k2.algebra || k1.algebra != *measure.poly.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    // slices: 0 = outgoing, 1 = integrated, 2 = incoming
    let left = k1.to_nilpoly()?.embed(3, &[0, 1])?;
    let right = k2.to_nilpoly()?.embed(3, &[1, 2])?;
    let mu = measure.poly.embed(3, &[1])?;
    let integrand = match placement {
        MeasurePlacement::Between => left.mul(&mu)?.mul(&right)?,
        MeasurePlacement::Leading => mu.mul(&left)?.mul(&right)?,
    };
    Kernel::from_nilpoly(&integrand.integrate(1)?, 0, 2)
}

/// `H_eff = g⁻¹ 𝓗` in the two-slice algebra of `(z̄_out, z_in)`.
pub fn effective_hamiltonian(h_kernel: &Kernel, g: &Kernel) -> Result<NilPoly> {
    let g_inv = g.to_nilpoly()?.inv()?;
    g_inv.mul(&h_kernel.to_nilpoly()?)
}

/// Ladder pair used for normal ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ladder {
    /// `b̄`, `b` of the q-oscillator.
    Deformed,
    /// `α†`, `α` of the polynomial algebra `αα† + (α†)^k α^k = 1`.
    Polynomial,
}

fn ladder_pair(root: &RootData, ladder: Ladder) -> Result<(Matrix, Matrix)> {
    match ladder {
        Ladder::Deformed => {
            let rep = build_fock_rep(root);
            Ok((rep.b_bar, rep.b))
        }
        Ladder::Polynomial => {
            let p = polynomial_fock(root.k() as usize)?;
            Ok((p.alpha_dag, p.alpha))
        }
    }
}

/// Coefficients `s_jl` with `A = Σ s_jl c^j a^l` for the ladder pair `(c, a)`.
fn normal_order_coeffs(a: &Matrix, root: &RootData, ladder: Ladder) -> Result<Matrix> {
    let d = root.dim();
    if a.dim() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.nrows(),
        });
    }
    let (create, annihilate) = ladder_pair(root, ladder)?;
    let mut system = Matrix::zeros((d * d, d * d));
    for j in 0..d {
        let cj = linalg::matrix_power(&create, j as u32);
        for l in 0..d {
            let word = cj.dot(&linalg::matrix_power(&annihilate, l as u32));
            for ((m, n), &v) in word.indexed_iter() {
                system[[m * d + n, j * d + l]] = v;
            }
        }
    }
    let rhs: Vec<_> = a.iter().copied().collect();
    let s = linalg::solve(&system, &rhs)?;
    Ok(Matrix::from_shape_vec((d, d), s).expect("d*d coefficients"))
}

/// Normal symbol `Σ s_jl z̄^j z^l` on one slice.
pub fn normal_symbol(a: &Matrix, basis: &BfBasis, ladder: Ladder) -> Result<NilPoly> {
    let s = normal_order_coeffs(a, basis.root(), ladder)?;
    let mut p = NilPoly::zero(*basis.algebra(), 1)?;
    for ((j, l), &c) in s.indexed_iter() {
        let t = NilPoly::monomial(*basis.algebra(), vec![[j as u32, l as u32]], c)?;
        p = p.checked_add(&t)?;
    }
    Ok(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolKernelReport {
    pub ladder: Ladder,
    pub rule: &'static str,
    /// Max over the normal-ordered monomial basis of `|𝒜 − μ·A_N|`.
    pub residual: f64,
}

/// Tests `𝒜(z̄_out, z_in) = μ(z̄_out z_in) · A_N(z̄_out, z_in)` on every
/// normal-ordered monomial `c^j a^l`.
pub fn symbol_kernel_relation_check(basis: &BfBasis, ladder: Ladder) -> Result<SymbolKernelReport> {
    let measure = solve_measure(basis)?;
    let algebra = *basis.algebra();
    let d = basis.dim();
    let mu = NilPoly::diagonal(algebra, 2, 0, 1, &measure.coeffs)?;
    let (create, annihilate) = ladder_pair(basis.root(), ladder)?;
    let mut residual = 0.0f64;
    for j in 0..d {
        for l in 0..d {
            let a = linalg::matrix_power(&create, j as u32)
                .dot(&linalg::matrix_power(&annihilate, l as u32));
            let kernel = operator_kernel(&a, basis)?.to_nilpoly()?;
            let symbol = normal_symbol(&a, basis, ladder)?.embed(2, &[0])?;
            // move the z's of the one-slice symbol onto the incoming slice
            let mut lifted = NilPoly::zero(algebra, 2)?;
            for (mono, &c) in symbol.terms() {
                let [m, n] = mono.0[0];
                let t = NilPoly::monomial(algebra, vec![[m, 0], [0, n]], c)?;
                lifted = lifted.checked_add(&t)?;
            }
            let predicted = mu.mul(&lifted)?;
            residual = residual.max(kernel.max_abs_diff(&predicted)?);
        }
    }
    Ok(SymbolKernelReport {
        ladder,
        rule: "kernel = mu(zbar_out z_in) * normal_symbol(zbar_out, z_in)",
        residual,
    })
}

/// `D̄ ψ_m = c_m ψ_(m-1)` realized on single-slice functions of z̄.
#[derive(Debug, Clone)]
pub struct DbarOperator {
    algebra: SliceAlgebra,
    /// `c_1 … c_k`.
    coeffs: Vec<f64>,
}

impl DbarOperator {
    pub fn new(algebra: SliceAlgebra) -> Result<Self> {
        let p = polynomial_fock(algebra.k() as usize)?;
        Ok(Self {
            algebra,
            coeffs: p.coeffs,
        })
    }

    /// `D̄ z̄^m = c_m √[m] z̄^(m-1)`.
    pub fn apply(&self, f: &NilPoly) -> Result<NilPoly> {
        let root = self.algebra.root;
        let mut out = NilPoly::zero(self.algebra, 1)?;
        for (mono, &c) in f.terms() {
            let [m, n] = mono.0[0];
            if n != 0 {
                return Err(Error::NotAntiholomorphic);
            }
            if m == 0 {
                continue;
            }
            let w = self.coeffs[m as usize - 1] * root.num_sym(m).sqrt();
            let t = NilPoly::monomial(self.algebra, vec![[m - 1, 0]], c * w)?;
            out = out.checked_add(&t)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DbarReport {
    /// Max residual of `(D̄ z̄ + z̄² D̄²) ψ_n − ψ_n`.
    pub identity_residual: f64,
    /// Max residual of `⟨z̄ ψ_n, ψ_m⟩ − ⟨ψ_n, D̄ ψ_m⟩`.
    pub adjoint_residual: f64,
}

/// Checks `D̄ z̄ + z̄² D̄² = 1` and that `z̄` and `D̄` are mutually adjoint,
/// on commuting variables at `k = 2`.
pub fn dbar_realization_check(root: &RootData) -> Result<DbarReport> {
    if root.k() != 2 {
        return Err(Error::RelationNotApplicable {
            relation: "dbar",
            required: 2,
            k: root.k(),
        });
    }
    let algebra = SliceAlgebra::new(Variant::FullyCommuting, *root);
    let basis = BfBasis::new(algebra)?;
    let measure = solve_measure(&basis)?;
    let dbar = DbarOperator::new(algebra)?;
    let zbar = NilPoly::zbar(algebra, 1, 0, 1)?;
    let zbar2 = NilPoly::zbar(algebra, 1, 0, 2)?;

    let mut identity_residual = 0.0f64;
    for psi in basis.functions() {
        let first = dbar.apply(&zbar.mul(psi)?)?;
        let second = zbar2.mul(&dbar.apply(&dbar.apply(psi)?)?)?;
        let lhs = first.checked_add(&second)?;
        identity_residual = identity_residual.max(lhs.max_abs_diff(psi)?);
    }

    let mut adjoint_residual = 0.0f64;
    for psi_n in basis.functions() {
        for psi_m in basis.functions() {
            let lhs = basis.inner_product(&zbar.mul(psi_n)?, psi_m, &measure)?;
            let rhs = basis.inner_product(psi_n, &dbar.apply(psi_m)?, &measure)?;
            adjoint_residual = adjoint_residual.max((lhs - rhs).norm());
        }
    }
    Ok(DbarReport {
        identity_residual,
        adjoint_residual,
    })
}
