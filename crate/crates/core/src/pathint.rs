//! Time-sliced evolution.
//!
//! The evolution kernel over `T` is approximated by `K` convolutions of the
//! infinitesimal kernel `g(z̄z) exp(-i H_eff Δt)`, with the measure inserted on
//! every intermediate slice. Intermediate slices are integrated out as soon as
//! they appear, so at most three slices are ever live.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bfrep::{
    effective_hamiltonian, identity_kernel, kernel_convolve, operator_kernel, solve_measure,
    BfBasis, Kernel, Measure,
};
use crate::error::{Error, Result};
use crate::fock::{build_fock_rep, build_hamiltonian, exact_evolution, HamiltonianSpec};
use crate::linalg::{self, Matrix};
use crate::nilalg::{NilPoly, SliceAlgebra, Variant};
use crate::qnum::RootData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionJob {
    pub algebra: SliceAlgebra,
    pub hamiltonian: HamiltonianSpec,
    pub time: f64,
    pub slices: usize,
}

impl EvolutionJob {
    pub fn new(
        algebra: SliceAlgebra,
        hamiltonian: HamiltonianSpec,
        time: f64,
        slices: usize,
    ) -> Result<Self> {
        if slices == 0 {
            return Err(Error::Config("slice count must be ≥ 1".into()));
        }
        if !time.is_finite() {
            return Err(Error::Config("total time must be finite".into()));
        }
        Ok(Self {
            algebra,
            hamiltonian,
            time,
            slices,
        })
    }

    pub fn with_slices(&self, slices: usize) -> Result<Self> {
        Self::new(self.algebra, self.hamiltonian, self.time, slices)
    }

    pub fn delta_t(&self) -> f64 {
        self.time / self.slices as f64
    }
}

/// Per-step kernel used by [`evolve_discrete_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepKernel {
    /// `g exp(-i H_eff Δt)`.
    #[default]
    Infinitesimal,
    /// Kernel of `exp(-iHΔt)`; isolates convolution error from discretization error.
    Exact,
}

/// Everything derived once from `(algebra, H)`.
struct Setup {
    basis: BfBasis,
    measure: Measure,
    identity: Kernel,
    hamiltonian: Matrix,
    h_eff: NilPoly,
}

impl Setup {
    fn new(job: &EvolutionJob) -> Result<Self> {
        let basis = BfBasis::new(job.algebra)?;
        let measure = solve_measure(&basis)?;
        let identity = identity_kernel(&basis);
        let rep = build_fock_rep(&job.algebra.root);
        let hamiltonian = build_hamiltonian(&rep, &job.hamiltonian);
        let h_eff = effective_hamiltonian(&operator_kernel(&hamiltonian, &basis)?, &identity)?;
        Ok(Self {
            basis,
            measure,
            identity,
            hamiltonian,
            h_eff,
        })
    }

    fn infinitesimal(&self, dt: f64) -> Result<Kernel> {
        let weight = self.h_eff.scale(Complex64::new(0.0, -dt)).exp()?;
        let p = self.identity.to_nilpoly()?.mul(&weight)?;
        Kernel::from_nilpoly(&p, 0, 1)
    }

    fn exact(&self, time: f64) -> Result<Kernel> {
        operator_kernel(&exact_evolution(&self.hamiltonian, time)?, &self.basis)
    }

    fn evolve(&self, job: &EvolutionJob, step: StepKernel) -> Result<Kernel> {
        let dt = job.delta_t();
        let unit = match step {
            StepKernel::Infinitesimal => self.infinitesimal(dt)?,
            StepKernel::Exact => self.exact(dt)?,
        };
        let mut acc = unit.clone();
        for _ in 1..job.slices {
            acc = kernel_convolve(&unit, &acc, &self.measure)?;
        }
        Ok(acc)
    }
}

pub fn infinitesimal_kernel(job: &EvolutionJob) -> Result<Kernel> {
    Setup::new(job)?.infinitesimal(job.delta_t())
}

/// Kernel of the exact evolution `exp(-iHT)`.
pub fn exact_kernel(job: &EvolutionJob) -> Result<Kernel> {
    Setup::new(job)?.exact(job.time)
}

/// `U(z̄_K z_(K-1)) ∗ … ∗ U(z̄_1 z_0)`.
pub fn evolve_discrete(job: &EvolutionJob) -> Result<Kernel> {
    evolve_discrete_with(job, StepKernel::Infinitesimal)
}

pub fn evolve_discrete_with(job: &EvolutionJob, step: StepKernel) -> Result<Kernel> {
    Setup::new(job)?.evolve(job, step)
}

/// `max |Û†Û - 1|` for the operator reconstructed from a kernel.
pub fn unitarity_residual(kernel: &Kernel) -> f64 {
    let u = kernel.to_operator();
    let gram = linalg::dagger(&u).dot(&u);
    linalg::max_abs_diff(&gram, &linalg::identity(u.nrows()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub slices: usize,
    pub delta_t: f64,
    pub max_coeff_error: f64,
    pub unitarity_residual: f64,
}

/// Runs the discrete evolution for each slice count and compares it with the
/// exact kernel. Rows come back in the order of `slice_counts`.
pub fn convergence_sweep(template: &EvolutionJob, slice_counts: &[usize]) -> Result<Vec<SweepRow>> {
    if slice_counts.is_empty() {
        return Err(Error::Config("slice list must not be empty".into()));
    }
    if slice_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "slice list must be strictly ascending".into(),
        ));
    }
    let setup = Setup::new(template)?;
    let exact = setup.exact(template.time)?;
    slice_counts
        .par_iter()
        .map(|&k| {
            let job = template.with_slices(k)?;
            let kernel = setup.evolve(&job, StepKernel::Infinitesimal)?;
            Ok(SweepRow {
                slices: k,
                delta_t: job.delta_t(),
                max_coeff_error: kernel.max_abs_diff(&exact),
                unitarity_residual: unitarity_residual(&kernel),
            })
        })
        .collect()
}

/// Derived diagonal coefficients (index `j` ↔ `z̄^j z^j`) next to the values
/// printed with the continuum formulas, when there are any.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientComparison {
    pub label: String,
    pub derived: Vec<Complex64>,
    pub reference: Option<Vec<Complex64>>,
    pub matches: Option<Vec<bool>>,
}

impl CoefficientComparison {
    fn new(label: &str, derived: Vec<Complex64>, reference: Option<Vec<Complex64>>) -> Self {
        let matches = reference.as_ref().map(|r| {
            (0..derived.len().max(r.len()))
                .map(|j| {
                    let d = derived.get(j).copied().unwrap_or_default();
                    let p = r.get(j).copied().unwrap_or_default();
                    (d - p).norm() < 1e-10
                })
                .collect()
        });
        Self {
            label: label.to_string(),
            derived,
            reference,
            matches,
        }
    }

    pub fn all_match(&self) -> Option<bool> {
        self.matches.as_ref().map(|m| m.iter().all(|&b| b))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuumReport {
    pub k: u32,
    pub variant: Variant,
    pub items: Vec<CoefficientComparison>,
}

impl ContinuumReport {
    pub fn item(&self, label: &str) -> Option<&CoefficientComparison> {
        self.items.iter().find(|i| i.label == label)
    }
}

fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Reference coefficients printed alongside the continuum path integrals.
struct Printed {
    identity: Option<Vec<Complex64>>,
    measure: Option<Vec<Complex64>>,
    boundary_exponent: Option<Vec<Complex64>>,
    slice_measure: Option<Vec<Complex64>>,
    action: Option<Vec<Complex64>>,
}

fn printed_values(root: &RootData, variant: Variant) -> Printed {
    let q = root.q();
    let one = cplx(1.0, 0.0);
    let zero = cplx(0.0, 0.0);
    let none = Printed {
        identity: None,
        measure: None,
        boundary_exponent: None,
        slice_measure: None,
        action: None,
    };
    match (root.k(), variant) {
        (1, Variant::FullyCommuting) => Printed {
            identity: Some(vec![one, one]),
            measure: Some(vec![one, one]),
            boundary_exponent: Some(vec![zero, one]),
            slice_measure: Some(vec![one, cplx(2.0, 0.0)]),
            action: Some(vec![one, zero]),
        },
        (2, Variant::QCommuting) => Printed {
            identity: Some(vec![one; 3]),
            measure: Some(vec![one, root.q2(), root.q2()]),
            boundary_exponent: None,
            slice_measure: Some(vec![one, q, zero]),
            action: Some(vec![one, one + 2.0 * q, zero]),
        },
        (2, Variant::FullyCommuting) => Printed {
            identity: Some(vec![one; 3]),
            measure: Some(vec![one; 3]),
            boundary_exponent: None,
            slice_measure: Some(vec![one, cplx(2.0, 0.0), cplx(3.0, 0.0)]),
            action: Some(vec![one, one, zero]),
        },
        (3, Variant::QCommuting) => {
            let c = 2f64.powf(-0.25);
            Printed {
                identity: Some(vec![one, one, cplx(c, 0.0), cplx(c, 0.0)]),
                measure: None,
                boundary_exponent: Some(vec![zero, one, cplx(c, -0.5), cplx(2.0 * c, -1.0 / 3.0)]),
                slice_measure: Some(vec![
                    one,
                    cplx(1.0, 1.0),
                    cplx(2.0 * c - 1.0, 0.0),
                    cplx(0.0, 1.0 - c),
                ]),
                action: Some(vec![one, cplx(-0.5, -c), cplx(-6.0 * c, 1.5), zero]),
            }
        }
        _ => none,
    }
}

/// Nilpotent identities behind the continuum forms: logarithms and inverses
/// of `g` and `μ`, the per-slice factor `μ g`, and the action density
/// `d log g / d(z̄z)`, each next to the printed coefficients where they exist.
pub fn continuum_coefficient_report(root: &RootData, variant: Variant) -> Result<ContinuumReport> {
    if !(1..=3).contains(&root.k()) {
        return Err(Error::Config("continuum report covers k = 1, 2, 3".into()));
    }
    let algebra = SliceAlgebra::new(variant, *root);
    let basis = BfBasis::new(algebra)?;
    let measure = solve_measure(&basis)?;
    let g_coeffs: Vec<_> = (0..basis.dim())
        .map(|n| identity_kernel(&basis).coeffs[[n, n]])
        .collect();
    let diag = |coeffs: &[Complex64]| NilPoly::diagonal(algebra, 1, 0, 0, coeffs);
    let read = |p: &NilPoly| p.diagonal_coeffs(0, 0);

    let g = diag(&g_coeffs)?;
    let mu = measure.poly.clone();
    let log_g = g.log()?;
    let printed = printed_values(root, variant);

    // X^j = phase_j · z̄^j z^j
    let x = diag(&[cplx(0.0, 0.0), cplx(1.0, 0.0)])?;
    let mut phases = vec![cplx(1.0, 0.0)];
    let mut power = NilPoly::one(algebra, 1)?;
    for j in 1..=root.k() {
        power = power.mul(&x)?;
        phases.push(power.coefficient(&[[j, j]]));
    }
    let log_g_coeffs = read(&log_g);
    let mut action = vec![cplx(0.0, 0.0); basis.dim()];
    for j in 1..basis.dim() {
        action[j - 1] = log_g_coeffs[j] / phases[j] * j as f64 * phases[j - 1];
    }

    let mut items = vec![
        CoefficientComparison::new("identity kernel g", g_coeffs.clone(), printed.identity),
        CoefficientComparison::new("measure mu", measure.coeffs.clone(), printed.measure),
        CoefficientComparison::new(
            "log g (boundary exponent)",
            log_g_coeffs,
            printed.boundary_exponent,
        ),
        CoefficientComparison::new("log mu", read(&mu.log()?), None),
        CoefficientComparison::new("inverse g", read(&g.inv()?), None),
        CoefficientComparison::new(
            "per-slice measure mu*g",
            read(&mu.mul(&g)?),
            printed.slice_measure,
        ),
        CoefficientComparison::new("action density d(log g)/d(zbar z)", action, printed.action),
    ];
    if root.k() == 1 && variant == Variant::FullyCommuting {
        let p = diag(&[cplx(1.0, 0.0), cplx(-2.0, 0.0)])?;
        items.push(CoefficientComparison::new(
            "inverse of 1 - 2 zbar z",
            read(&p.inv()?),
            Some(vec![cplx(1.0, 0.0), cplx(2.0, 0.0)]),
        ));
    }
    Ok(ContinuumReport {
        k: root.k(),
        variant,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnum::q_root;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn job(
        variant: Variant,
        k: u32,
        spec: HamiltonianSpec,
        time: f64,
        slices: usize,
    ) -> EvolutionJob {
        let alg = SliceAlgebra::new(variant, q_root(k).unwrap());
        EvolutionJob::new(alg, spec, time, slices).unwrap()
    }

    fn fermion_spec(omega: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(c(1.0, 0.0), c(0.0, 0.0), omega)
    }

    #[test]
    fn job_validation() {
        let alg = SliceAlgebra::fully_commuting(q_root(1).unwrap());
        assert!(EvolutionJob::new(alg, fermion_spec(1.0), 1.0, 0).is_err());
        assert!(EvolutionJob::new(alg, fermion_spec(1.0), f64::NAN, 4).is_err());
    }

    #[test]
    fn zero_step_is_identity_kernel() {
        let j = job(Variant::QCommuting, 2, fermion_spec(1.0), 0.0, 1);
        let basis = BfBasis::new(j.algebra).unwrap();
        let u = infinitesimal_kernel(&j).unwrap();
        assert!(u.max_abs_diff(&identity_kernel(&basis)) < 1e-14);
    }

    #[test]
    fn fermion_step_is_first_order_in_dt() {
        // nilpotency keeps only 1 - iωΔt on z̄z at k = 1
        let omega = 1.3;
        let j = job(Variant::FullyCommuting, 1, fermion_spec(omega), 0.01, 1);
        let p = infinitesimal_kernel(&j).unwrap().to_nilpoly().unwrap();
        assert!((p.constant_term() - c(1.0, 0.0)).norm() < 1e-14);
        let x = p.coefficient(&[[1, 0], [0, 1]]);
        assert!((x - c(1.0, -omega * 0.01)).norm() < 1e-14);
    }

    #[test]
    fn step_defect_is_quadratic() {
        let r = q_root(2).unwrap();
        let spec = HamiltonianSpec::hermitian_couples(&r, 1.0)[0];
        for variant in [Variant::FullyCommuting, Variant::QCommuting] {
            let defect = |dt: f64| {
                let j = job(variant, 2, spec, dt, 1);
                infinitesimal_kernel(&j)
                    .unwrap()
                    .max_abs_diff(&exact_kernel(&j).unwrap())
            };
            let ratio = defect(0.02) / defect(0.01);
            assert!((ratio - 4.0).abs() < 0.5, "{variant}: {ratio}");
        }
    }

    #[test]
    fn single_slice_and_zero_hamiltonian() {
        let zero = HamiltonianSpec::new(c(0.0, 0.0), c(0.0, 0.0), 1.0);
        for variant in [Variant::FullyCommuting, Variant::QCommuting] {
            let j = job(variant, 2, zero, 1.0, 17);
            let basis = BfBasis::new(j.algebra).unwrap();
            assert!(
                evolve_discrete(&j)
                    .unwrap()
                    .max_abs_diff(&identity_kernel(&basis))
                    < 1e-12
            );
            let one = j.with_slices(1).unwrap();
            assert_eq!(
                evolve_discrete(&one).unwrap(),
                infinitesimal_kernel(&one).unwrap()
            );
        }
    }

    #[test]
    fn exact_steps_compose_exactly() {
        let r = q_root(2).unwrap();
        for spec in HamiltonianSpec::hermitian_couples(&r, 1.7) {
            for variant in [Variant::FullyCommuting, Variant::QCommuting] {
                for k in [1, 3, 10] {
                    let j = job(variant, 2, spec, 0.9, k);
                    let discrete = evolve_discrete_with(&j, StepKernel::Exact).unwrap();
                    assert!(discrete.max_abs_diff(&exact_kernel(&j).unwrap()) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn semigroup_split() {
        let r = q_root(2).unwrap();
        let spec = HamiltonianSpec::hermitian_couples(&r, 1.0)[1];
        let whole = job(Variant::QCommuting, 2, spec, 1.0, 32);
        let half = job(Variant::QCommuting, 2, spec, 0.5, 16);
        let h = evolve_discrete(&half).unwrap();
        let basis = BfBasis::new(whole.algebra).unwrap();
        let mu = solve_measure(&basis).unwrap();
        let joined = kernel_convolve(&h, &h, &mu).unwrap();
        let direct = evolve_discrete(&whole).unwrap();
        assert!(joined.max_abs_diff(&direct) < 10.0 * f64::EPSILON * 32.0 * 10.0);
    }

    #[test]
    fn sweep_validation() {
        let j = job(Variant::FullyCommuting, 1, fermion_spec(1.0), 1.0, 1);
        assert!(convergence_sweep(&j, &[]).is_err());
        assert!(convergence_sweep(&j, &[8, 4]).is_err());
        let zero = HamiltonianSpec::new(c(0.0, 0.0), c(0.0, 0.0), 1.0);
        let z = job(Variant::QCommuting, 2, zero, 1.0, 1);
        for row in convergence_sweep(&z, &[1, 5, 9]).unwrap() {
            assert!(row.max_coeff_error < 1e-12);
        }
    }

    #[test]
    fn sweep_error_is_monotone() {
        let r = q_root(2).unwrap();
        for spec in HamiltonianSpec::hermitian_couples(&r, 1.0) {
            let j = job(Variant::FullyCommuting, 2, spec, 1.0, 1);
            let rows = convergence_sweep(&j, &[8, 12, 16, 24, 32, 48, 64]).unwrap();
            for w in rows.windows(2) {
                assert!(w[1].max_coeff_error <= w[0].max_coeff_error, "{rows:?}");
            }
        }
    }

    #[test]
    fn fermion_limit() {
        let omega = 0.8;
        let j = job(Variant::FullyCommuting, 1, fermion_spec(omega), 1.0, 2048);
        let p = evolve_discrete(&j).unwrap().to_nilpoly().unwrap();
        let want = c(0.0, -omega).exp();
        assert!((p.coefficient(&[[1, 0], [0, 1]]) - want).norm() < 2e-4);
        assert!((p.constant_term() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn report_k2_commuting() {
        let r = q_root(2).unwrap();
        let report = continuum_coefficient_report(&r, Variant::FullyCommuting).unwrap();
        let log_g = report.item("log g (boundary exponent)").unwrap();
        assert!((log_g.derived[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(
            report.item("per-slice measure mu*g").unwrap().all_match(),
            Some(true)
        );
        assert_eq!(report.item("measure mu").unwrap().all_match(), Some(true));
    }

    #[test]
    fn report_k1() {
        let r = q_root(1).unwrap();
        let report = continuum_coefficient_report(&r, Variant::FullyCommuting).unwrap();
        assert_eq!(
            report.item("inverse of 1 - 2 zbar z").unwrap().all_match(),
            Some(true)
        );
        assert_eq!(
            report.item("per-slice measure mu*g").unwrap().all_match(),
            Some(true)
        );
        assert!(continuum_coefficient_report(&q_root(4).unwrap(), Variant::QCommuting).is_err());
    }

    #[test]
    fn report_k3_lists_both_identity_kernels() {
        let r = q_root(3).unwrap();
        let report = continuum_coefficient_report(&r, Variant::QCommuting).unwrap();
        let g = report.item("identity kernel g").unwrap();
        let printed = g.reference.as_ref().unwrap();
        assert!((g.derived[2].re - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((printed[2].re - 2f64.powf(-0.25)).abs() < 1e-12);
        assert_eq!(g.all_match(), Some(false));
    }
}
