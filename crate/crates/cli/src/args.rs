use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drazin_lab::matcore::Tolerances;
use drazin_lab::record::IdentityId;
use drazin_lab::report::ReportFormat;
use num_complex::Complex64;

#[derive(Debug, Parser)]
#[command(
    name = "drazin-lab",
    version,
    about = "Drazin inverses and identity checks for complex matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drazin inverse, index and defining-equation residuals of a matrix file.
    Compute(ComputeArgs),
    /// Write a random instance satisfying the hypotheses of one identity.
    Generate(GenerateArgs),
    /// Evaluate one identity on matrix files.
    Check(CheckArgs),
    /// Run a seeded audit over every identity and write a report.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Largest acceptable scaled residual.
    #[arg(long, default_value_t = Tolerances::default().residual_tol)]
    pub tol: f64,
}

impl TolArgs {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            residual_tol: self.tol,
            ..Tolerances::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha1: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha2: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub beta: Option<Complex64>,
    /// May be repeated.
    #[arg(long = "lambda", value_parser = parse_complex, allow_hyphen_values = true)]
    pub lambdas: Vec<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub gamma1: Option<Complex64>,
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Idempotent,
    Pair0,
    #[value(name = "pair-alpha", alias = "pairα", alias = "pairalpha")]
    PairAlpha,
    TripleSum,
    TripleProd,
    TripleIdem,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Rank of the idempotent, or size of the regular block of a pair.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory that receives the matrix files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Allow sum-form parameters in the excluded set.
    #[arg(long)]
    pub audit_mode: bool,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_parser = parse_identity)]
    pub identity: IdentityId,
    /// Matrix files in the order the identity expects: x1 x2 x3 for triple
    /// identities, x1 x2 for pairs, p q for idempotent identities, x for
    /// LEMMA33_INV; none for the scalar substitutions.
    pub inputs: Vec<PathBuf>,
    /// Substitution parameter for CARDANO_SUM, CARDANO_PROD and QUAD_SUB.
    /// May be repeated.
    #[arg(long = "mu", value_parser = parse_complex, allow_hyphen_values = true)]
    pub mus: Vec<Complex64>,
    /// Polynomial coefficients for LEMMA33_INV, constant term first.
    #[arg(long = "coeff", value_parser = parse_complex, allow_hyphen_values = true)]
    pub coeffs: Vec<Complex64>,
    /// Seed for spectral parameters drawn when no --lambda is given.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// JSON file with a suite configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also run the under-audit comparisons.
    #[arg(long)]
    pub audit_mode: bool,
    #[arg(long, value_parser = parse_format, default_value = "json")]
    pub format: ReportFormat,
    /// Report path; defaults to report.json or report.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accepts `1`, `-0.5`, `2i`, `1+2i`, `1.5-0.25i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|_| format!("`{s}` is not a complex number (expected e.g. 1, 2i, 1+2i)"))
}

fn parse_identity(s: &str) -> Result<IdentityId, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}
