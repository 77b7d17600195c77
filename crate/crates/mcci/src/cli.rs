//! Command-line front end: `ci`, `test`, `oracle`, and `coverage`.
//!
//! Input is CSV: a single numeric column for the one-sample model, or
//! `value,group` rows with exactly two group labels for the two-sample
//! model. A header row is detected by its first field failing to parse as a
//! number. The Unicode minus sign (U+2212) is accepted anywhere a number is.
//!
//! Exit codes: 0 success; 2 bad input (flags, files, unsupported
//! combinations); 3 preconditions the data or configuration cannot meet
//! (alpha at or below the attainable floor, rejected point estimate, groups
//! too large to enumerate); 4 a computed interval endpoint was unbounded and
//! `--allow-unbounded` was not given. A one-sided request's infinite side is
//! part of the ask, not a diagnostic, and never triggers exit 4.
//!
//! JSON output is a single line with a fixed field order; infinite bounds
//! are encoded as the strings `"inf"` / `"-inf"` since JSON has no literal
//! for them.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

use crate::coverage::{
    run_coverage, run_subuniformity, CoverageConfig, CoverageError, Noise,
};
use crate::invert::{
    lower_bound, quasiconcave_interval, upper_bound, Convention, Diagnostic, InvertError,
    SearchConfig, Side,
};
use crate::oracle::{full_group_interval, full_group_pvalue, FullGroupIndex, OracleError};
use crate::pvalues::{FrozenDraws, PValueFn, Tail};
use crate::rng::{GeneratorKind, SeededGenerator};
use crate::shift::{
    default_delta0, default_eta0, make_pvalue_fn, make_pvalue_fn_studentized, one_sample_freeze,
    two_sample_freeze, two_sample_freeze_with_assignments, Data, Estimator, ModelError,
    OneSampleData, TwoSampleData,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_UNBOUNDED: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "mcci",
    version,
    about = "Conservative Monte Carlo confidence intervals for shift parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Confidence interval by inverting tests over one frozen set of draws
    Ci(CiArgs),
    /// P-value for one hypothesized shift
    Test(TestArgs),
    /// Exact interval or P-value by full-group enumeration (small samples)
    Oracle(OracleArgs),
    /// Coverage or sub-uniformity simulation with synthetic data
    Coverage(CoverageArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SideArg {
    Lower,
    Upper,
    TwoSided,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ConventionArg {
    Bonferroni,
    Abs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StatArg {
    Mean,
    Studentized,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GenArg {
    Sha256,
    Fast,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputArg {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum NoiseArg {
    Uniform,
    TwoPoint,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelArg {
    OneSample,
    TwoSample,
}

impl From<GenArg> for GeneratorKind {
    fn from(g: GenArg) -> Self {
        match g {
            GenArg::Sha256 => GeneratorKind::Sha256Counter,
            GenArg::Fast => GeneratorKind::Fast,
        }
    }
}

impl SideArg {
    fn to_side(self) -> Side {
        match self {
            SideArg::Lower => Side::Lower,
            SideArg::Upper => Side::Upper,
            SideArg::TwoSided => Side::TwoSided,
        }
    }
}

impl ConventionArg {
    fn to_convention(self) -> Convention {
        match self {
            ConventionArg::Bonferroni => Convention::Bonferroni,
            ConventionArg::Abs => Convention::Abs,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Data model: one-sample (single numeric column) or two-sample
    /// (value,group rows)
    #[arg(value_enum)]
    model: ModelArg,
    /// CSV data file
    file: PathBuf,
    /// Miscoverage level; the confidence level is 1 - alpha
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Monte Carlo replicates to freeze (ignored by `oracle`)
    #[arg(long = "n-replicates", default_value_t = 10_000)]
    n_replicates: usize,
    /// Seed bytes as UTF-8, or hex digits with a `hex:` prefix
    #[arg(long, default_value = "mcci")]
    seed: String,
    #[arg(long, value_enum, default_value_t = SideArg::TwoSided)]
    side: SideArg,
    /// Two-sided construction; ignored for one-sided bounds
    #[arg(long, value_enum, default_value_t = ConventionArg::Bonferroni)]
    convention: ConventionArg,
    /// Test statistic (studentized requires two-sample data)
    #[arg(long, value_enum, default_value_t = StatArg::Mean)]
    statistic: StatArg,
    /// Group label to treat as the treatment; defaults to the first seen
    #[arg(long)]
    treatment_label: Option<String>,
    /// Replicate generator (ignored by `oracle`)
    #[arg(long, value_enum, default_value_t = GenArg::Sha256)]
    generator: GenArg,
    #[arg(long, value_enum, default_value_t = OutputArg::Text)]
    output: OutputArg,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct CiArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Endpoint resolution: reported bounds are within this of the exact
    /// inversion boundary
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Exit 0 even when a two-sided endpoint comes back infinite
    #[arg(long)]
    allow_unbounded: bool,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Hypothesized shift to test
    #[arg(long)]
    eta: f64,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Evaluate the exact P-value at this shift instead of inverting
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::OneSample)]
    model: ModelArg,
    /// True shift used to generate data
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Sample size per dataset
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Treated-group size (two-sample; defaults to n/2)
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value_t = NoiseArg::Uniform)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Simulated datasets
    #[arg(long, default_value_t = 1000)]
    replications: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "n-replicates", default_value_t = 999)]
    n_replicates: usize,
    #[arg(long, default_value = "mcci")]
    seed: String,
    /// Endpoint resolution for each inverted interval
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = GenArg::Sha256)]
    generator: GenArg,
    /// Check sub-uniformity of the P-value at theta instead of coverage
    #[arg(long)]
    subuniformity: bool,
    #[arg(long, value_enum, default_value_t = OutputArg::Json)]
    output: OutputArg,
    #[arg(long)]
    threads: Option<usize>,
}

/// Errors carrying their exit code; clap handles its own (code 2).
#[derive(Debug)]
enum CliError {
    Input(String),
    Precondition(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Precondition(_) => EXIT_PRECONDITION,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Precondition(m) => m,
        }
    }
}

fn model_err(e: ModelError) -> CliError {
    CliError::Input(e.to_string())
}

fn invert_err(e: InvertError) -> CliError {
    match e {
        InvertError::BadConfig { .. } => CliError::Input(e.to_string()),
        _ => CliError::Precondition(e.to_string()),
    }
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::TooLarge
        | OracleError::TooManyReplicates { .. }
        | OracleError::EmptyConfidenceSet { .. } => CliError::Precondition(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn coverage_err(e: CoverageError) -> CliError {
    match e {
        CoverageError::BadConfig { .. } => CliError::Input(e.to_string()),
        CoverageError::Model(m) => model_err(m),
        CoverageError::Invert(i) => invert_err(i),
    }
}

#[derive(Debug)]
struct Outcome {
    text: String,
    exit: i32,
}

/// Entry point for the binary: parse, dispatch, print, map errors to codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are not errors
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            println!("{}", out.text);
            out.exit
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Ci(a) => run_ci(a),
        Command::Test(a) => run_test(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Coverage(a) => run_coverage_cmd(a),
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // a second initialization in the same process is a no-op
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn decode_seed(s: &str) -> Result<Vec<u8>, CliError> {
    let Some(hex) = s.strip_prefix("hex:") else {
        return Ok(s.as_bytes().to_vec());
    };
    if hex.is_empty() || hex.len() % 2 != 0 {
        return Err(CliError::Input(format!(
            "hex seed must have a positive, even number of digits, got {:?}",
            hex
        )));
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| {
                CliError::Input(format!("invalid hex digits in seed: {:?}", &hex[i..i + 2]))
            })
        })
        .collect()
}

/// ASCII-ize the Unicode minus sign so copy-pasted tables parse.
fn normalize_number(field: &str) -> String {
    field.trim().replace('\u{2212}', "-")
}

#[derive(Debug)]
enum CsvData {
    One(Vec<f64>),
    Two { values: Vec<f64>, labels: Vec<String> },
}

fn parse_csv(path: &Path) -> Result<CsvData, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut columns: Option<usize> = None;
    let mut header_allowed = true;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let ncol = fields.len();
        if !(1..=2).contains(&ncol) {
            return Err(CliError::Input(format!(
                "line {lineno}: expected 1 or 2 columns, found {ncol}"
            )));
        }
        let first = normalize_number(fields[0]);
        if header_allowed && first.parse::<f64>().is_err() {
            // the first row may be a header; it fixes the column count
            columns = Some(ncol);
            header_allowed = false;
            continue;
        }
        header_allowed = false;
        match columns {
            Some(c) if c != ncol => {
                return Err(CliError::Input(format!(
                    "line {lineno}: found {ncol} columns, earlier rows had {c}"
                )));
            }
            None => columns = Some(ncol),
            _ => {}
        }
        let v: f64 = first.parse().map_err(|_| {
            CliError::Input(format!(
                "line {lineno}: cannot parse {:?} as a number",
                fields[0]
            ))
        })?;
        if !v.is_finite() {
            return Err(CliError::Input(format!(
                "line {lineno}: values must be finite, got {:?}",
                fields[0]
            )));
        }
        values.push(v);
        if ncol == 2 {
            labels.push(fields[1].to_string());
        }
    }
    if values.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    if labels.is_empty() {
        Ok(CsvData::One(values))
    } else {
        Ok(CsvData::Two { values, labels })
    }
}

/// What the data looked like, for the human-readable report.
#[derive(Debug)]
struct ModelDesc {
    name: &'static str,
    n: usize,
    m: Option<usize>,
    treatment: Option<String>,
    control: Option<String>,
}

fn build_data(csv: CsvData, treatment_label: Option<&str>) -> Result<(Data, ModelDesc), CliError> {
    match csv {
        CsvData::One(x) => {
            let n = x.len();
            let d = OneSampleData::new(x).map_err(model_err)?;
            Ok((
                Data::One(d),
                ModelDesc {
                    name: "one-sample",
                    n,
                    m: None,
                    treatment: None,
                    control: None,
                },
            ))
        }
        CsvData::Two { values, labels } => {
            let mut uniq: Vec<&str> = Vec::new();
            for l in &labels {
                if !uniq.contains(&l.as_str()) {
                    uniq.push(l);
                }
            }
            if uniq.len() != 2 {
                return Err(CliError::Input(format!(
                    "two-sample data needs exactly 2 group labels, found {}: {:?}",
                    uniq.len(),
                    uniq
                )));
            }
            let treatment = match treatment_label {
                Some(t) => {
                    if !uniq.contains(&t) {
                        return Err(CliError::Input(format!(
                            "treatment label {t:?} not in the data; labels are {:?}",
                            uniq
                        )));
                    }
                    t.to_string()
                }
                None => uniq[0].to_string(),
            };
            let control = uniq
                .iter()
                .find(|&&u| u != treatment)
                .expect("two labels, one is treatment")
                .to_string();
            // canonical layout: treated first, both groups in input order
            let mut w: Vec<f64> = Vec::with_capacity(values.len());
            for (v, l) in values.iter().zip(&labels) {
                if *l == treatment {
                    w.push(*v);
                }
            }
            let m = w.len();
            for (v, l) in values.iter().zip(&labels) {
                if *l != treatment {
                    w.push(*v);
                }
            }
            let n = w.len();
            let d = TwoSampleData::new(w, m).map_err(model_err)?;
            Ok((
                Data::Two(d),
                ModelDesc {
                    name: "two-sample",
                    n,
                    m: Some(m),
                    treatment: Some(treatment),
                    control: Some(control),
                },
            ))
        }
    }
}

fn load(args: &DataArgs) -> Result<(Data, ModelDesc), CliError> {
    let csv = parse_csv(&args.file)?;
    match (args.model, &csv) {
        (ModelArg::OneSample, CsvData::Two { .. }) => {
            return Err(CliError::Input(format!(
                "{}: declared one-sample but the file has value,group rows",
                args.file.display()
            )));
        }
        (ModelArg::TwoSample, CsvData::One(_)) => {
            return Err(CliError::Input(format!(
                "{}: declared two-sample but the file has a single column",
                args.file.display()
            )));
        }
        _ => {}
    }
    build_data(csv, args.treatment_label.as_deref())
}

fn freeze_for(
    data: &Data,
    stat: StatArg,
    n_replicates: usize,
    gen: &SeededGenerator,
) -> Result<FrozenDraws, CliError> {
    match (data, stat) {
        (Data::One(d), StatArg::Mean) => Ok(one_sample_freeze(d, n_replicates, gen)),
        (Data::One(_), StatArg::Studentized) => {
            Err(model_err(ModelError::UnsupportedStatistic))
        }
        (Data::Two(d), StatArg::Mean) => Ok(two_sample_freeze(d, n_replicates, gen)),
        (Data::Two(d), StatArg::Studentized) => {
            Ok(two_sample_freeze_with_assignments(d, n_replicates, gen))
        }
    }
}

fn pvalue_fn_for(
    data: &Data,
    draws: &Arc<FrozenDraws>,
    tail: Tail,
    stat: StatArg,
) -> Result<PValueFn, CliError> {
    match stat {
        StatArg::Mean => {
            make_pvalue_fn(data, draws, tail, Estimator::PlusOne).map_err(model_err)
        }
        StatArg::Studentized => make_pvalue_fn_studentized(data, draws, tail).map_err(model_err),
    }
}

/// Lower bounds invert upper-tail tests and vice versa.
fn tail_for(side: SideArg, convention: ConventionArg) -> Tail {
    match side {
        SideArg::Lower => Tail::Upper,
        SideArg::Upper => Tail::Lower,
        SideArg::TwoSided => match convention {
            ConventionArg::Bonferroni => Tail::TwoSidedBonferroni,
            ConventionArg::Abs => Tail::TwoSidedAbs,
        },
    }
}

fn ser_bound<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_finite() => s.serialize_f64(*x),
        Some(x) if *x > 0.0 => s.serialize_str("inf"),
        Some(_) => s.serialize_str("-inf"),
    }
}

/// Report for `ci`, `test`, and `oracle`. Field order is part of the output
/// contract; serde emits fields in declaration order.
#[derive(Serialize)]
struct AnalysisJson {
    command: &'static str,
    model: &'static str,
    alpha: f64,
    #[serde(rename = "N")]
    n_replicates: u64,
    seed: Option<String>,
    e: f64,
    side: Side,
    convention: Option<Convention>,
    #[serde(serialize_with = "ser_bound")]
    lower: Option<f64>,
    #[serde(serialize_with = "ser_bound")]
    upper: Option<f64>,
    p_value: Option<f64>,
    evaluations: u64,
    wall_time_ms: u64,
    version: &'static str,
    diagnostics: Vec<Diagnostic>,
}

fn diag_name(d: &Diagnostic) -> &'static str {
    match d {
        Diagnostic::UnboundedBelow => "unbounded_below",
        Diagnostic::UnboundedAbove => "unbounded_above",
        Diagnostic::ShapeUnverified => "shape_unverified",
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

fn side_name(side: SideArg) -> &'static str {
    match side {
        SideArg::Lower => "lower",
        SideArg::Upper => "upper",
        SideArg::TwoSided => "two-sided",
    }
}

fn convention_name(c: ConventionArg) -> &'static str {
    match c {
        ConventionArg::Bonferroni => "bonferroni",
        ConventionArg::Abs => "abs",
    }
}

fn describe_model(desc: &ModelDesc) -> String {
    match (&desc.m, &desc.treatment, &desc.control) {
        (Some(m), Some(t), Some(c)) => format!(
            "{} (n = {}, m = {}; treatment {:?}, control {:?})",
            desc.name, desc.n, m, t, c
        ),
        _ => format!("{} (n = {})", desc.name, desc.n),
    }
}

fn diagnostics_line(diags: &[Diagnostic]) -> Option<String> {
    if diags.is_empty() {
        None
    } else {
        let names: Vec<&str> = diags.iter().map(diag_name).collect();
        Some(format!("diagnostics: {}", names.join(", ")))
    }
}

fn run_ci(a: &CiArgs) -> Result<Outcome, CliError> {
    init_threads(a.data.threads);
    let start = Instant::now();
    let seed_bytes = decode_seed(&a.data.seed)?;
    let (data, desc) = load(&a.data)?;
    let gen = SeededGenerator::with_kind(&seed_bytes, a.data.generator.into());
    let draws = Arc::new(freeze_for(
        &data,
        a.data.statistic,
        a.data.n_replicates,
        &gen,
    )?);
    let tail = tail_for(a.data.side, a.data.convention);
    let p = pvalue_fn_for(&data, &draws, tail, a.data.statistic)?;
    let cfg = SearchConfig::new(
        a.data.alpha,
        a.tol,
        default_eta0(&data),
        default_delta0(&data),
    );
    let (lower, upper, evaluations, diagnostics, p_at_eta0) = match a.data.side {
        SideArg::Lower => {
            let r = lower_bound(&p, &cfg).map_err(invert_err)?;
            let p0 = p.evaluate(cfg.eta0);
            (r.value, f64::INFINITY, r.evaluations, r.diagnostics, p0)
        }
        SideArg::Upper => {
            let r = upper_bound(&p, &cfg).map_err(invert_err)?;
            let p0 = p.evaluate(cfg.eta0);
            (f64::NEG_INFINITY, r.value, r.evaluations, r.diagnostics, p0)
        }
        SideArg::TwoSided => {
            let r = quasiconcave_interval(&p, &cfg).map_err(invert_err)?;
            (r.lower, r.upper, r.evaluations, r.diagnostics, r.p_at_eta0)
        }
    };
    let unbounded = diagnostics
        .iter()
        .any(|d| matches!(d, Diagnostic::UnboundedBelow | Diagnostic::UnboundedAbove));
    let exit = if unbounded && !a.allow_unbounded {
        EXIT_UNBOUNDED
    } else {
        EXIT_OK
    };
    let json = AnalysisJson {
        command: "ci",
        model: desc.name,
        alpha: a.data.alpha,
        n_replicates: a.data.n_replicates as u64,
        seed: Some(a.data.seed.clone()),
        e: a.tol,
        side: a.data.side.to_side(),
        convention: (a.data.side == SideArg::TwoSided)
            .then(|| a.data.convention.to_convention()),
        lower: Some(lower),
        upper: Some(upper),
        p_value: None,
        evaluations: evaluations as u64,
        wall_time_ms: start.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION"),
        diagnostics,
    };
    let text = match a.data.output {
        OutputArg::Json => serde_json::to_string(&json).expect("serializable report"),
        OutputArg::Text => {
            let mut s = String::new();
            s.push_str(&format!("model: {}\n", describe_model(&desc)));
            s.push_str(&format!(
                "alpha: {}   N: {}   seed: {}   e: {}\n",
                a.data.alpha, a.data.n_replicates, a.data.seed, a.tol
            ));
            if a.data.side == SideArg::TwoSided {
                s.push_str(&format!(
                    "side: two-sided ({})\n",
                    convention_name(a.data.convention)
                ));
            } else {
                s.push_str(&format!("side: {}\n", side_name(a.data.side)));
            }
            s.push_str(&format!(
                "interval: [{}, {}]\n",
                fmt_bound(lower),
                fmt_bound(upper)
            ));
            s.push_str(&format!(
                "p at estimate {:.6}: {:.6}\n",
                cfg.eta0, p_at_eta0
            ));
            s.push_str(&format!(
                "evaluations: {}   wall time: {} ms",
                evaluations,
                json.wall_time_ms
            ));
            if let Some(line) = diagnostics_line(&json.diagnostics) {
                s.push('\n');
                s.push_str(&line);
            }
            s
        }
    };
    Ok(Outcome { text, exit })
}

fn run_test(a: &TestArgs) -> Result<Outcome, CliError> {
    init_threads(a.data.threads);
    let start = Instant::now();
    if !a.eta.is_finite() {
        return Err(CliError::Input(format!(
            "eta must be finite, got {}",
            a.eta
        )));
    }
    let seed_bytes = decode_seed(&a.data.seed)?;
    let (data, desc) = load(&a.data)?;
    let gen = SeededGenerator::with_kind(&seed_bytes, a.data.generator.into());
    let draws = Arc::new(freeze_for(
        &data,
        a.data.statistic,
        a.data.n_replicates,
        &gen,
    )?);
    let tail = tail_for(a.data.side, a.data.convention);
    let p = pvalue_fn_for(&data, &draws, tail, a.data.statistic)?;
    let value = p.evaluate(a.eta);
    let json = AnalysisJson {
        command: "test",
        model: desc.name,
        alpha: a.data.alpha,
        n_replicates: a.data.n_replicates as u64,
        seed: Some(a.data.seed.clone()),
        e: 0.0,
        side: a.data.side.to_side(),
        convention: (a.data.side == SideArg::TwoSided)
            .then(|| a.data.convention.to_convention()),
        lower: None,
        upper: None,
        p_value: Some(value),
        evaluations: 1,
        wall_time_ms: start.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION"),
        diagnostics: Vec::new(),
    };
    let text = match a.data.output {
        OutputArg::Json => serde_json::to_string(&json).expect("serializable report"),
        OutputArg::Text => {
            let verdict = if value < a.data.alpha {
                "rejected"
            } else {
                "not rejected"
            };
            format!(
                "model: {}\np-value at eta = {}: {:.6}\nshift {} at alpha = {}\nwall time: {} ms",
                describe_model(&desc),
                a.eta,
                value,
                verdict,
                a.data.alpha,
                json.wall_time_ms
            )
        }
    };
    Ok(Outcome {
        text,
        exit: EXIT_OK,
    })
}

fn run_oracle(a: &OracleArgs) -> Result<Outcome, CliError> {
    init_threads(a.data.threads);
    let start = Instant::now();
    if a.data.statistic == StatArg::Studentized {
        return Err(CliError::Input(
            "exact enumeration supports the mean statistic only".to_string(),
        ));
    }
    let (data, desc) = load(&a.data)?;
    let index = FullGroupIndex::for_data(&data).map_err(oracle_err)?;
    let (lower, upper, p_value) = match a.eta {
        Some(eta) => {
            if !eta.is_finite() {
                return Err(CliError::Input(format!("eta must be finite, got {eta}")));
            }
            let tail = tail_for(a.data.side, a.data.convention);
            let p = full_group_pvalue(&data, eta, tail, &index).map_err(oracle_err)?;
            (None, None, Some(p))
        }
        None => {
            let r = full_group_interval(
                &data,
                a.data.alpha,
                a.data.side.to_side(),
                a.data.convention.to_convention(),
                &index,
            )
            .map_err(oracle_err)?;
            (Some(r.lower), Some(r.upper), None)
        }
    };
    let json = AnalysisJson {
        command: "oracle",
        model: desc.name,
        alpha: a.data.alpha,
        // for exact enumeration N is the group size, not a replicate count
        n_replicates: index.size() as u64,
        seed: None,
        e: 0.0,
        side: a.data.side.to_side(),
        convention: (a.data.side == SideArg::TwoSided)
            .then(|| a.data.convention.to_convention()),
        lower,
        upper,
        p_value,
        evaluations: 0,
        wall_time_ms: start.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION"),
        diagnostics: Vec::new(),
    };
    let text = match a.data.output {
        OutputArg::Json => serde_json::to_string(&json).expect("serializable report"),
        OutputArg::Text => {
            let mut s = format!(
                "model: {}   group size: {}\n",
                describe_model(&desc),
                index.size()
            );
            match (lower, upper, p_value) {
                (Some(lo), Some(hi), _) => {
                    if a.data.side == SideArg::TwoSided {
                        s.push_str(&format!(
                            "exact {} interval (alpha = {}): [{}, {}]",
                            convention_name(a.data.convention),
                            a.data.alpha,
                            fmt_bound(lo),
                            fmt_bound(hi)
                        ));
                    } else {
                        s.push_str(&format!(
                            "exact {} bound (alpha = {}): [{}, {}]",
                            side_name(a.data.side),
                            a.data.alpha,
                            fmt_bound(lo),
                            fmt_bound(hi)
                        ));
                    }
                }
                (_, _, Some(p)) => {
                    s.push_str(&format!(
                        "exact p-value at eta = {}: {:.6}",
                        a.eta.expect("eta provided"),
                        p
                    ));
                }
                _ => unreachable!("oracle produces an interval or a p-value"),
            }
            s
        }
    };
    Ok(Outcome {
        text,
        exit: EXIT_OK,
    })
}

#[derive(Serialize)]
struct CoverageJson {
    command: &'static str,
    mode: &'static str,
    model: &'static str,
    alpha: f64,
    #[serde(rename = "N")]
    n_replicates: u64,
    seed: String,
    theta: f64,
    n: usize,
    m: Option<usize>,
    noise: &'static str,
    scale: f64,
    replications: usize,
    covered: usize,
    empirical_coverage: f64,
    binomial_se: f64,
    conservative: bool,
    mean_finite_length: f64,
    unbounded: usize,
    degenerate: usize,
    wall_time_ms: u64,
    version: &'static str,
}

#[derive(Serialize)]
struct SubuniformityRowJson {
    threshold: f64,
    empirical_cdf: f64,
    bound: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SubuniformityJson {
    command: &'static str,
    mode: &'static str,
    model: &'static str,
    alpha: f64,
    #[serde(rename = "N")]
    n_replicates: u64,
    seed: String,
    theta: f64,
    n: usize,
    m: Option<usize>,
    noise: &'static str,
    scale: f64,
    replications: usize,
    rows: Vec<SubuniformityRowJson>,
    all_pass: bool,
    wall_time_ms: u64,
    version: &'static str,
}

fn run_coverage_cmd(a: &CoverageArgs) -> Result<Outcome, CliError> {
    init_threads(a.threads);
    let start = Instant::now();
    let seed_bytes = decode_seed(&a.seed)?;
    let noise = match a.noise {
        NoiseArg::Uniform => Noise::uniform(a.scale),
        NoiseArg::TwoPoint => Noise::two_point(a.scale),
    };
    let (model_name, m) = match a.model {
        ModelArg::OneSample => ("one-sample", None),
        ModelArg::TwoSample => ("two-sample", Some(a.m.unwrap_or(a.n / 2))),
    };
    let mut cfg = match a.model {
        ModelArg::OneSample => CoverageConfig::one_sample(
            a.theta,
            a.n,
            noise,
            a.replications,
            a.alpha,
            a.n_replicates,
            &seed_bytes,
        ),
        ModelArg::TwoSample => CoverageConfig::two_sample(
            a.theta,
            a.n,
            m.expect("two-sample m resolved above"),
            noise,
            a.replications,
            a.alpha,
            a.n_replicates,
            &seed_bytes,
        ),
    };
    cfg.tolerance = a.tol;
    cfg.generator = a.generator.into();
    let noise_name = match a.noise {
        NoiseArg::Uniform => "uniform",
        NoiseArg::TwoPoint => "two-point",
    };
    if a.subuniformity {
        let rep = run_subuniformity(&cfg).map_err(coverage_err)?;
        let json = SubuniformityJson {
            command: "coverage",
            mode: "subuniformity",
            model: model_name,
            alpha: a.alpha,
            n_replicates: a.n_replicates as u64,
            seed: a.seed.clone(),
            theta: a.theta,
            n: a.n,
            m,
            noise: noise_name,
            scale: a.scale,
            replications: a.replications,
            rows: rep
                .rows
                .iter()
                .map(|r| SubuniformityRowJson {
                    threshold: r.threshold,
                    empirical_cdf: r.empirical_cdf,
                    bound: r.bound,
                    pass: r.pass,
                })
                .collect(),
            all_pass: rep.all_pass(),
            wall_time_ms: start.elapsed().as_millis() as u64,
            version: env!("CARGO_PKG_VERSION"),
        };
        let text = match a.output {
            OutputArg::Json => serde_json::to_string(&json).expect("serializable report"),
            OutputArg::Text => {
                let mut s = format!(
                    "sub-uniformity of the P-value at theta = {} ({} replications)\n",
                    a.theta, a.replications
                );
                for r in &rep.rows {
                    s.push_str(&format!(
                        "  CDF({:>4}) = {:.4}  bound {:.4}  {}\n",
                        r.threshold,
                        r.empirical_cdf,
                        r.bound,
                        if r.pass { "ok" } else { "FAIL" }
                    ));
                }
                s.push_str(if rep.all_pass() {
                    "all checkpoints pass"
                } else {
                    "SOME CHECKPOINTS FAIL"
                });
                s
            }
        };
        return Ok(Outcome {
            text,
            exit: EXIT_OK,
        });
    }
    let rep = run_coverage(&cfg).map_err(coverage_err)?;
    let json = CoverageJson {
        command: "coverage",
        mode: "coverage",
        model: model_name,
        alpha: a.alpha,
        n_replicates: a.n_replicates as u64,
        seed: a.seed.clone(),
        theta: a.theta,
        n: a.n,
        m,
        noise: noise_name,
        scale: a.scale,
        replications: a.replications,
        covered: rep.covered,
        empirical_coverage: rep.empirical_coverage,
        binomial_se: rep.binomial_se,
        conservative: rep.conservative(),
        mean_finite_length: rep.mean_finite_length,
        unbounded: rep.unbounded,
        degenerate: rep.degenerate,
        wall_time_ms: start.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION"),
    };
    let text = match a.output {
        OutputArg::Json => serde_json::to_string(&json).expect("serializable report"),
        OutputArg::Text => {
            let mut s = format!(
                "coverage simulation: {}, n = {}{}, theta = {}, {} noise (scale {})\n",
                model_name,
                a.n,
                m.map(|m| format!(", m = {m}")).unwrap_or_default(),
                a.theta,
                noise_name,
                a.scale
            );
            s.push_str(&format!(
                "replications: {}   N: {}   alpha: {}\n",
                a.replications, a.n_replicates, a.alpha
            ));
            s.push_str(&format!(
                "empirical coverage: {:.4} (nominal {:.4}, binomial SE {:.4})\n",
                rep.empirical_coverage,
                1.0 - a.alpha,
                rep.binomial_se
            ));
            s.push_str(&format!(
                "conservative: {}\n",
                if rep.conservative() { "yes" } else { "NO" }
            ));
            s.push_str(&format!(
                "mean finite length: {:.4}   unbounded: {}   estimate rejected: {}",
                rep.mean_finite_length, rep.unbounded, rep.degenerate
            ));
            s
        }
    };
    Ok(Outcome {
        text,
        exit: EXIT_OK,
    })
}
