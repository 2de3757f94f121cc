//! `qpath` command-line front end.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::bfrep::{
    dbar_realization_check, identity_kernel, kernel_convolve, operator_kernel, solve_measure,
    symbol_kernel_relation_check, BfBasis, Kernel, Ladder,
};
use crate::error::Error;
use crate::fock::{
    build_fock_rep, hermiticity_classify, polynomial_fock, verify_relation, HamiltonianSpec,
    Relation,
};
use crate::linalg::{self, Matrix};
use crate::nilalg::{CoefficientRecord, NilPoly, SliceAlgebra, Variant};
use crate::pathint::{
    continuum_coefficient_report, convergence_sweep, evolve_discrete, EvolutionJob,
};
use crate::qnum::RootData;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const CSV_HEADER: &str = "K,delta_t,max_coeff_error,unitarity_residual";
const SEED: u64 = 0x5eed_2b0f;

#[derive(Debug, Parser)]
#[command(
    name = "qpath",
    version,
    about = "q-oscillator Bargmann-Fock kernels and path integrals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the algebra, measure and kernel consistency checks.
    Verify(RunArgs),
    /// Print the orthonormalizing measure coefficients.
    Measure(RunArgs),
    /// Print the discrete evolution kernel for a single slice count.
    Kernel(RunArgs),
    /// Sweep slice counts and compare against the exact evolution.
    Converge(RunArgs),
    /// Summarize nilpotent identities behind the continuum path integrals.
    Report(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Commuting,
    Qcommuting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, value_enum, default_value = "qcommuting")]
    pub variant: VariantArg,
    /// Complex "re[,im]" or one of q, -q, q^2, -q^2, 1-2q.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub u: String,
    #[arg(long, default_value = "-q", allow_hyphen_values = true)]
    pub v: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub time: f64,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    pub slices: Vec<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Verify,
    Measure,
    Kernel,
    Converge,
    Report,
}

/// Parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub root: RootData,
    pub variant: Variant,
    pub u: Complex64,
    pub v: Complex64,
    pub omega: f64,
    pub time: f64,
    pub slices: Vec<usize>,
    pub tol: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, Error> {
        let (command, args) = match cli.command {
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Measure(a) => (CommandKind::Measure, a),
            Command::Kernel(a) => (CommandKind::Kernel, a),
            Command::Converge(a) => (CommandKind::Converge, a),
            Command::Report(a) => (CommandKind::Report, a),
        };
        let root = RootData::new(args.k)?;
        let u = parse_complex(&args.u, &root)?;
        let v = parse_complex(&args.v, &root)?;
        if !args.omega.is_finite() || !args.time.is_finite() {
            return Err(Error::Config("omega and time must be finite".into()));
        }
        if args.tol.is_nan() || args.tol <= 0.0 {
            return Err(Error::Config("tol must be positive".into()));
        }
        if args.slices.is_empty() || args.slices.contains(&0) {
            return Err(Error::Config("slices must be positive integers".into()));
        }
        if args.slices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("slices must be strictly ascending".into()));
        }
        let variant = match args.variant {
            VariantArg::Commuting => Variant::FullyCommuting,
            VariantArg::Qcommuting => Variant::QCommuting,
        };
        Ok(Self {
            command,
            root,
            variant,
            u,
            v,
            omega: args.omega,
            time: args.time,
            slices: args.slices,
            tol: args.tol,
            format: args.format,
            output: args.output,
        })
    }

    pub fn algebra(&self) -> SliceAlgebra {
        SliceAlgebra::new(self.variant, self.root)
    }

    pub fn hamiltonian(&self) -> HamiltonianSpec {
        HamiltonianSpec::new(self.u, self.v, self.omega)
    }
}

/// Parses `re`, `re,im`, or a symbolic multiple of the configured root.
pub fn parse_complex(s: &str, root: &RootData) -> Result<Complex64, Error> {
    let one = Complex64::new(1.0, 0.0);
    let t = s.trim();
    let symbolic = match t {
        "q" => Some(root.q()),
        "-q" => Some(-root.q()),
        "q^2" => Some(root.q2()),
        "-q^2" => Some(-root.q2()),
        "1-2q" => Some(one - 2.0 * root.q()),
        _ => None,
    };
    if let Some(z) = symbolic {
        return Ok(z);
    }
    let bad = || Error::Config(format!("cannot parse complex value {s:?}"));
    let mut parts = t.split(',');
    let re: f64 = parts
        .next()
        .ok_or_else(bad)?
        .trim()
        .parse()
        .map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(p) => p.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: msg.into(),
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome::usage(text)
            };
        }
    };
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => return Outcome::usage(format!("error: {e}\n")),
    };
    let mut outcome = execute(&cfg);
    if outcome.code != EXIT_USAGE {
        if let Some(path) = &cfg.output {
            if let Err(e) = std::fs::write(path, &outcome.stdout) {
                return Outcome::usage(format!("error: cannot write {}: {e}\n", path.display()));
            }
            outcome.stdout.clear();
        }
    }
    outcome
}

pub fn execute(cfg: &RunConfig) -> Outcome {
    let result = match cfg.command {
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Measure => cmd_measure(cfg),
        CommandKind::Kernel => cmd_kernel(cfg),
        CommandKind::Converge => cmd_converge(cfg),
        CommandKind::Report => cmd_report(cfg),
    };
    result.unwrap_or_else(|e| Outcome::usage(format!("error: {e}\n")))
}

/// Rounds to 15 significant digits, mapping `-0` to `0`.
fn round15(x: f64) -> f64 {
    let r: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn fmt_num(x: f64) -> String {
    format!("{:.14e}", round15(x))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn rounded_records(records: Vec<CoefficientRecord>) -> Vec<CoefficientRecord> {
    records
        .into_iter()
        .map(|r| CoefficientRecord {
            exponents: r.exponents,
            re: round15(r.re),
            im: round15(r.im),
        })
        .collect()
}

fn render_records(records: Vec<CoefficientRecord>, format: Format) -> String {
    let records = rounded_records(records);
    match format {
        Format::Json => to_json(&records),
        Format::Csv => {
            let mut out = String::from("exponents,re,im\n");
            for r in &records {
                let e: Vec<String> = r
                    .exponents
                    .iter()
                    .map(|[m, n]| format!("{m}:{n}"))
                    .collect();
                let _ = writeln!(out, "{},{},{}", e.join(";"), fmt_num(r.re), fmt_num(r.im));
            }
            out
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn random_complex(rng: &mut StdRng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_matrix(rng: &mut StdRng, d: usize) -> Matrix {
    Matrix::from_shape_fn((d, d), |_| random_complex(rng))
}

/// Residuals of every consistency check that applies to `(k, variant)`.
pub fn verification_suite(cfg: &RunConfig) -> Result<Vec<(String, f64)>, Error> {
    let root = cfg.root;
    let k = root.k();
    let algebra = cfg.algebra();
    let mut rows = Vec::new();
    let mut rng = StdRng::seed_from_u64(SEED);

    let rep = build_fock_rep(&root);
    for rel in Relation::ALL {
        if rel.applies(k) {
            rows.push((format!("relation:{rel}"), verify_relation(&rep, rel)?));
        }
    }
    if k == 2 {
        let names = ["i", "ii", "iii"];
        for (name, spec) in names
            .iter()
            .zip(HamiltonianSpec::hermitian_couples(&root, 1.0))
        {
            rows.push((
                format!("hermitian_couple:{name}"),
                hermiticity_classify(&rep, &spec).residual,
            ));
        }
    }

    let basis = BfBasis::new(algebra)?;
    let measure = solve_measure(&basis)?;
    let d = basis.dim();
    let gram = basis.gram(&measure)?;
    rows.push((
        "orthonormality".into(),
        linalg::max_abs_diff(&gram, &linalg::identity(d)),
    ));

    let g = identity_kernel(&basis);
    let mut unit = kernel_convolve(&g, &g, &measure)?.max_abs_diff(&g);
    for _ in 0..10 {
        let kern = Kernel::new(algebra, random_matrix(&mut rng, d))?;
        unit = unit.max(kernel_convolve(&g, &kern, &measure)?.max_abs_diff(&kern));
        unit = unit.max(kernel_convolve(&kern, &g, &measure)?.max_abs_diff(&kern));
    }
    rows.push(("convolution_unit".into(), unit));

    let mut homo = 0.0f64;
    for _ in 0..10 {
        let a = random_matrix(&mut rng, d);
        let b = random_matrix(&mut rng, d);
        let lhs = kernel_convolve(
            &operator_kernel(&a, &basis)?,
            &operator_kernel(&b, &basis)?,
            &measure,
        )?;
        homo = homo.max(lhs.max_abs_diff(&operator_kernel(&a.dot(&b), &basis)?));
    }
    rows.push(("kernel_homomorphism".into(), homo));

    let mut series = 0.0f64;
    for _ in 0..10 {
        let mut p = NilPoly::one(algebra, 2)?;
        for _ in 0..4 {
            let e = vec![
                [rng.gen_range(0..=k), rng.gen_range(0..=k)],
                [rng.gen_range(0..=k), rng.gen_range(0..=k)],
            ];
            if e.iter().all(|&[m, n]| m == 0 && n == 0) {
                continue;
            }
            p = p.checked_add(&NilPoly::monomial(algebra, e, random_complex(&mut rng))?)?;
        }
        series = series.max(p.log()?.exp()?.max_abs_diff(&p)?);
        let one = NilPoly::one(algebra, 2)?;
        series = series.max(p.mul(&p.inv()?)?.max_abs_diff(&one)?);
        series = series.max(p.inv()?.mul(&p)?.max_abs_diff(&one)?);
    }
    rows.push(("nilpotent_series".into(), series));

    if cfg.variant == Variant::FullyCommuting {
        let zbar = NilPoly::zbar(algebra, 1, 0, 1)?;
        let mut deriv = 0.0f64;
        for psi in basis.functions() {
            let first = zbar.mul(psi)?.q_derivative(0, true)?;
            let second = zbar.mul(&psi.q_derivative(0, true)?)?.scale(root.q2());
            deriv = deriv.max(first.checked_sub(&second)?.max_abs_diff(psi)?);
        }
        rows.push(("deformed_derivative".into(), deriv));
    }
    if k == 1 && cfg.variant == Variant::QCommuting {
        let mut anti = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let z = NilPoly::z(algebra, 2, i, 1)?;
                let zb = NilPoly::zbar(algebra, 2, j, 1)?;
                let s = z.mul(&zb)?.checked_add(&zb.mul(&z)?)?;
                anti = anti.max(s.terms().fold(0.0, |acc, (_, c)| acc.max(c.norm())));
            }
        }
        rows.push(("grassmann_anticommutation".into(), anti));
    }

    let poly = polynomial_fock(k as usize)?;
    rows.push(("polynomial_fock".into(), poly.residual.max(poly.overflow)));
    if k == 2 {
        let dbar = dbar_realization_check(&root)?;
        rows.push(("dbar_identity".into(), dbar.identity_residual));
        rows.push(("dbar_adjoint".into(), dbar.adjoint_residual));
        if cfg.variant == Variant::FullyCommuting {
            let rel = symbol_kernel_relation_check(&basis, Ladder::Polynomial)?;
            rows.push(("symbol_kernel_relation".into(), rel.residual));
        }
    }
    Ok(rows)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, Error> {
    let rows: Vec<CheckRow> = verification_suite(cfg)?
        .into_iter()
        .map(|(check, residual)| CheckRow {
            passed: residual < cfg.tol,
            check,
            residual: round15(residual),
            threshold: cfg.tol,
        })
        .collect();
    let ok = rows.iter().all(|r| r.passed);
    let stdout = match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("check,residual,threshold,status\n");
            for r in &rows {
                let status = if r.passed { "pass" } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "{},{},{},{status}",
                    r.check,
                    fmt_num(r.residual),
                    fmt_num(r.threshold)
                );
            }
            out
        }
    };
    Ok(Outcome {
        code: if ok { EXIT_OK } else { EXIT_CHECK_FAILED },
        stdout,
        stderr: String::new(),
    })
}

pub fn cmd_measure(cfg: &RunConfig) -> Result<Outcome, Error> {
    let measure = solve_measure(&BfBasis::new(cfg.algebra())?)?;
    Ok(Outcome {
        code: EXIT_OK,
        stdout: render_records(measure.poly.to_records(), cfg.format),
        stderr: String::new(),
    })
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<Outcome, Error> {
    let &[slices] = cfg.slices.as_slice() else {
        return Err(Error::Config("kernel takes a single slice count".into()));
    };
    let job = EvolutionJob::new(cfg.algebra(), cfg.hamiltonian(), cfg.time, slices)?;
    let kernel = evolve_discrete(&job)?;
    Ok(Outcome {
        code: EXIT_OK,
        stdout: render_records(kernel.to_records()?, cfg.format),
        stderr: String::new(),
    })
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut stderr = String::new();
    let rep = build_fock_rep(&cfg.root);
    if !hermiticity_classify(&rep, &cfg.hamiltonian()).hermitian {
        stderr.push_str("warning: Hamiltonian is not hermitian; unitarity is not expected\n");
    }
    let template = EvolutionJob::new(cfg.algebra(), cfg.hamiltonian(), cfg.time, cfg.slices[0])?;
    let rows: Vec<_> = convergence_sweep(&template, &cfg.slices)?
        .into_iter()
        .map(|mut r| {
            r.delta_t = round15(r.delta_t);
            r.max_coeff_error = round15(r.max_coeff_error);
            r.unitarity_residual = round15(r.unitarity_residual);
            r
        })
        .collect();
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].max_coeff_error < w[0].max_coeff_error);
    if !decreasing {
        stderr.push_str("error: coefficient error does not decrease across the sweep\n");
    }
    let stdout = match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = format!("{CSV_HEADER}\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    r.slices,
                    fmt_num(r.delta_t),
                    fmt_num(r.max_coeff_error),
                    fmt_num(r.unitarity_residual)
                );
            }
            out
        }
    };
    Ok(Outcome {
        code: if decreasing {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        },
        stdout,
        stderr,
    })
}

fn fmt_complex(z: Complex64) -> String {
    let re = round15(z.re);
    let im = round15(z.im);
    format!("{re:>+.12} {im:>+.12}i")
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome, Error> {
    let report = continuum_coefficient_report(&cfg.root, cfg.variant)?;
    if cfg.format == Format::Json {
        return Ok(Outcome {
            code: EXIT_OK,
            stdout: to_json(&report),
            stderr: String::new(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "continuum coefficient report: k = {}, variant = {}, q = {}",
        report.k,
        report.variant,
        fmt_complex(cfg.root.q())
    );
    let _ = writeln!(out, "coefficients are indexed by j for zbar^j z^j");
    for item in &report.items {
        let _ = writeln!(out, "\n[{}]", item.label);
        for (j, d) in item.derived.iter().enumerate() {
            let _ = write!(out, "  j={j}  derived {}", fmt_complex(*d));
            if let (Some(p), Some(m)) = (&item.reference, &item.matches) {
                let pj = p.get(j).copied().unwrap_or_default();
                let flag = if m[j] { "match" } else { "MISMATCH" };
                let _ = write!(out, "  printed {}  {flag}", fmt_complex(pj));
            }
            out.push('\n');
        }
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout: out,
        stderr: String::new(),
    })
}
