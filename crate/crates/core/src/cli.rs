//! The `sparse-dft` command line.
//!
//! Exit status: 0 when every checked claim holds, 1 when a claim is violated
//! (details on standard output), 2 for usage and I/O errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::basis::{
    audit_sparsity, build_basis_with, gram_report, multiplicities, survey_row_with, uncertainty_report,
    EigenBasis, SelectionRule,
};
use crate::delta_trains::eta_pair;
use crate::eigenprojection::{verify_eigenvector, EigenClass};
use crate::fast_transform::{analyze, analyze_naive, synthesize, ChangeOfBasis, DenseCorrelationMatrix};
use crate::io::{parse_vector, survey_csv, write_complex_lines, BasisExport};
use crate::numerics::{DenseVector, EliminationState, TolerancePolicy};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "sparse-dft", version, about = "Sparse eigenvector bases of the unitary DFT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    FirstAccepted,
    LargestResidual,
}

impl From<Selection> for SelectionRule {
    fn from(s: Selection) -> Self {
        match s {
            Selection::FirstAccepted => SelectionRule::FirstAccepted,
            Selection::LargestResidual => SelectionRule::LargestResidual,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Zero and residual tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Candidate selection rule.
    #[arg(long, value_enum, default_value_t = Selection::FirstAccepted)]
    pub selection: Selection,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the basis for one n and export it.
    Build {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Export the raw projections instead of unit vectors.
        #[arg(long)]
        unnormalized: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run every audit on a freshly built or imported basis.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..), required_unless_present = "input", conflicts_with = "input")]
        n: Option<u64>,
        /// JSON export to verify instead of building.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Expand a vector file in the basis and report the round-trip residual.
    Analyze {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Vector file with `index,re,im` lines.
        #[arg(long)]
        input: PathBuf,
        /// Coefficient file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify orthogonality for every n in 2..=max-n.
    Survey {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        max_n: u64,
        /// CSV report; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Time the fast correlation path against naive loops and a dense matrix.
    Bench {
        /// Comma-separated sizes.
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',', value_parser = clap::value_parser!(u64).range(2..))]
        n: Vec<u64>,
        /// Repetitions per timing; the minimum is reported.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure of a command: either a usage/I/O problem or a violated claim.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Violation(String),
}

type Outcome = std::result::Result<u8, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Violation(msg)) => {
            let _ = writeln!(out, "FAIL: {msg}");
            EXIT_VIOLATION
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Build { n, out: path, format, unnormalized, common } => {
            cmd_build(n as usize, path.as_deref(), format, unnormalized, &common, out)
        }
        Command::Verify { n, input, common } => cmd_verify(n.map(|n| n as usize), input.as_deref(), &common, out),
        Command::Analyze { n, input, out: path, common } => {
            cmd_analyze(n as usize, &input, path.as_deref(), &common, out)
        }
        Command::Survey { max_n, out: path, common } => cmd_survey(max_n as usize, path.as_deref(), &common, out),
        Command::Bench { n, reps, seed, out: path } => {
            let sizes: Vec<usize> = n.into_iter().map(|n| n as usize).collect();
            cmd_bench(&sizes, reps, seed, path.as_deref(), out)
        }
    }
}

fn policy(common: &Common) -> std::result::Result<TolerancePolicy, Failure> {
    TolerancePolicy::uniform(common.tol).map_err(usage)
}

fn build(n: usize, common: &Common) -> std::result::Result<EigenBasis, Failure> {
    build_basis_with(n, &policy(common)?, common.selection.into()).map_err(|e| Failure::Violation(e.to_string()))
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(usage),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn cmd_build(
    n: usize,
    path: Option<&Path>,
    format: Format,
    unnormalized: bool,
    common: &Common,
    out: &mut dyn Write,
) -> Outcome {
    let tol = policy(common)?;
    let mut basis = build(n, common)?;
    if unnormalized {
        for rec in &mut basis.vectors {
            rec.scale = 1.0;
            rec.dense = rec.sum.densify();
        }
    }
    let export = BasisExport::from_basis(&basis, &tol);
    let text = match format {
        Format::Json => export.to_json(),
        Format::Csv => export.to_csv(),
    };
    emit(path, &text, out)?;
    Ok(EXIT_OK)
}

/// n for which the first-accepted basis is orthogonal: perfect squares and 2, 3, 8.
pub fn expected_orthogonal(n: usize) -> bool {
    matches!(n, 2 | 3 | 8) || eta_pair(n).map(|e| e.is_square()).unwrap_or(false)
}

struct Table {
    rows: Vec<(String, bool, String)>,
}

impl Table {
    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.rows.push((name.to_string(), ok, detail.into()));
    }

    fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.1)
    }

    fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (name, ok, detail) in &self.rows {
            let status = if *ok { "PASS" } else { "FAIL" };
            writeln!(s, "{name:<width$}  {status}  {detail}").expect("writing to a String");
        }
        s
    }
}

fn cmd_verify(n: Option<usize>, input: Option<&Path>, common: &Common, out: &mut dyn Write) -> Outcome {
    let tol = policy(common)?;
    let basis = match (n, input) {
        (Some(n), _) => build(n, common)?,
        (None, Some(path)) => {
            let export = BasisExport::from_json(&read(path)?).map_err(usage)?;
            let mut basis = export.into_basis(&tol).map_err(usage)?;
            basis.renormalize().map_err(|e| Failure::Violation(e.to_string()))?;
            basis
        }
        (None, None) => return Err(usage("either --n or --input is required")),
    };
    let report = verify_basis(&basis, &tol).map_err(|e| Failure::Violation(e.to_string()))?;
    writeln!(out, "n={} eta=({}, {}) rule={}", basis.n, basis.eta.eta1, basis.eta.eta2, basis.rule.name())
        .map_err(usage)?;
    out.write_all(report.render().as_bytes()).map_err(usage)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VIOLATION })
}

fn verify_basis(basis: &EigenBasis, tol: &TolerancePolicy) -> crate::Result<Table> {
    let n = basis.n;
    let mut t = Table { rows: Vec::new() };

    let table = multiplicities(n)?;
    let expected: Vec<usize> = EigenClass::ALL.iter().map(|&k| table.dim(k)).collect();
    let mut counts = [0usize; 4];
    for rec in &basis.vectors {
        counts[rec.label.class.index()] += 1;
    }
    t.check("vector count", basis.len() == n, format!("{} of {n}", basis.len()));
    t.check("multiplicities", counts[..] == expected[..], format!("{counts:?} (expected {expected:?}, k = 0..3)"));

    let mut worst = (0.0f64, None);
    for rec in &basis.vectors {
        let r = verify_eigenvector(&rec.dense, rec.label.class, tol)?;
        if r >= worst.0 {
            worst = (r, Some(rec.label));
        }
    }
    let at = worst.1.map(|l| format!(" at {l}")).unwrap_or_default();
    t.check("eigenvectors", worst.0 <= tol.residual_tol, format!("max relative residual {:.2e}{at}", worst.0));

    let mut elim = EliminationState::new(n);
    for rec in &basis.vectors {
        elim.try_extend_rank(&rec.dense, tol)?;
    }
    t.check("rank", elim.rank() == n, format!("{} of {n}", elim.rank()));

    match audit_sparsity(basis, tol) {
        Ok(a) => t.check(
            "sparsity",
            true,
            format!(
                "support {}..={} within [{}, {}], ratio {:.3}",
                a.min_support, a.max_support, a.lower_bound, a.upper_bound, a.ratio_to_lower_bound
            ),
        ),
        Err(e) => t.check("sparsity", false, e.to_string()),
    }

    let mut failing = None;
    for rec in &basis.vectors {
        if !uncertainty_report(&rec.dense, tol)?.holds() {
            failing = Some(rec.label);
            break;
        }
    }
    t.check(
        "uncertainty",
        failing.is_none(),
        failing.map_or_else(|| "product and divisor bounds hold".to_string(), |l| format!("violated at {l}")),
    );

    let gram = gram_report(basis, tol)?;
    t.check("cross-class", gram.max_cross_class <= tol.residual_tol, format!("max |<v, w>| {:.2e}", gram.max_cross_class));

    let detail = if gram.is_orthogonal {
        format!("orthogonal, max off-diagonal {:.2e}", gram.max_offdiag)
    } else {
        match &gram.witness {
            Some(w) => format!("non-orthogonal, witness {} {} |<v, w>| = {:.6}", w.first, w.second, w.inner.norm()),
            None => format!("non-orthogonal without a witness, max off-diagonal {:.2e}", gram.max_offdiag),
        }
    };
    let consistent = match basis.rule {
        SelectionRule::FirstAccepted => gram.is_orthogonal == expected_orthogonal(n),
        SelectionRule::LargestResidual => true,
    };
    t.check("orthogonality", consistent && (gram.is_orthogonal || gram.witness.is_some()), detail);
    Ok(t)
}

fn cmd_analyze(n: usize, input: &Path, path: Option<&Path>, common: &Common, out: &mut dyn Write) -> Outcome {
    let tol = policy(common)?;
    let v = parse_vector(&read(input)?).map_err(|e| usage(format!("{}: {e}", input.display())))?;
    if v.len() != n {
        return Err(usage(format!("{}: vector has length {}, expected n={n}", input.display(), v.len())));
    }
    let basis = build(n, common)?;
    let cob = ChangeOfBasis::new(&basis, &tol).map_err(|e| Failure::Violation(e.to_string()))?;
    let c = cob.coefficients(&v).map_err(|e| Failure::Violation(e.to_string()))?;
    let back = synthesize(&c, &basis).map_err(|e| Failure::Violation(e.to_string()))?;
    let residual = back.distance(&v).map_err(usage)? / v.norm().max(f64::MIN_POSITIVE);
    emit(path, &write_complex_lines(&c.coefficients), out)?;
    // A comment line, so the output stays a valid vector file.
    writeln!(out, "# round-trip residual {residual:e}").map_err(usage)?;
    if residual > tol.residual_tol {
        return Err(Failure::Violation(format!("round-trip residual {residual:e} exceeds {:e}", tol.residual_tol)));
    }
    Ok(EXIT_OK)
}

fn cmd_survey(max_n: usize, path: Option<&Path>, common: &Common, out: &mut dyn Write) -> Outcome {
    let tol = policy(common)?;
    let rule: SelectionRule = common.selection.into();
    let rows = (2..=max_n)
        .map(|n| survey_row_with(n, &tol, rule))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| Failure::Violation(e.to_string()))?;
    emit(path, &survey_csv(&rows), out)?;

    let orthogonal: Vec<usize> = rows.iter().filter(|r| r.is_orthogonal).map(|r| r.n).collect();
    let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
    writeln!(out, "orthogonal: {{{}}}", list(&orthogonal)).map_err(usage)?;

    let missing_witness: Vec<usize> = rows.iter().filter(|r| !r.is_orthogonal && r.witness.is_none()).map(|r| r.n).collect();
    if !missing_witness.is_empty() {
        return Err(Failure::Violation(format!("no witness for n in {{{}}}", list(&missing_witness))));
    }
    if rule == SelectionRule::FirstAccepted {
        let unexpected: Vec<usize> = rows.iter().filter(|r| r.is_orthogonal != expected_orthogonal(r.n)).map(|r| r.n).collect();
        if !unexpected.is_empty() {
            return Err(Failure::Violation(format!(
                "classification differs from squares and {{2, 3, 8}} at n in {{{}}}",
                list(&unexpected)
            )));
        }
    }
    Ok(EXIT_OK)
}

pub const BENCH_HEADER: &str = "n,fast_s,naive_s,dense_setup_s,dense_s,max_diff_naive,max_diff_dense";

fn min_time<T>(reps: u32, mut f: impl FnMut() -> T) -> (f64, T) {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..reps {
        let start = Instant::now();
        let r = f();
        best = best.min(start.elapsed().as_secs_f64());
        last = Some(r);
    }
    (best, last.expect("reps >= 1"))
}

fn cmd_bench(sizes: &[usize], reps: u32, seed: u64, path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    if sizes.is_empty() {
        return Err(usage("at least one n is required"));
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut csv = format!("{BENCH_HEADER}\n");
    let mut disagreements = Vec::new();
    for &n in sizes {
        let v = DenseVector::new((0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .map_err(usage)?;
        let (fast_s, fast) = min_time(reps, || analyze(&v));
        let (naive_s, naive) = min_time(reps, || analyze_naive(&v));
        let start = Instant::now();
        let dense = DenseCorrelationMatrix::new(n).map_err(usage)?;
        let dense_setup_s = start.elapsed().as_secs_f64();
        let (dense_s, via_dense) = min_time(reps, || dense.apply(&v).expect("length n"));
        drop(dense);
        let diff_naive = fast.max_abs_diff(&naive);
        let diff_dense = fast.max_abs_diff(&via_dense);
        if diff_naive.max(diff_dense) > 1e-9 {
            disagreements.push(n);
        }
        writeln!(csv, "{n},{fast_s:e},{naive_s:e},{dense_setup_s:e},{dense_s:e},{diff_naive:e},{diff_dense:e}")
            .expect("writing to a String");
    }
    emit(path, &csv, out)?;
    if !disagreements.is_empty() {
        return Err(Failure::Violation(format!("paths disagree beyond 1e-9 at n = {disagreements:?}")));
    }
    Ok(EXIT_OK)
}
