//! Command-line front end: expected flat counts, brute-force identity
//! verification, closed-form prime scans, normalized Riemann sums, and
//! template dumps, all as machine-readable output.
//!
//! Exit codes: 0 success; 1 a verification or convergence check failed;
//! 2 invalid configuration (non-prime p, inadmissible profile, bad flags);
//! 3 an enumeration would exceed the guard.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use padic_flats::error::Error;
use padic_flats::expectation::{expected_flats, MethodSpec, DEFAULT_GUARD, MC_DEFAULT_PRECISION};
use padic_flats::jacobian::{build_template, DegreeProfile};
use padic_flats::padic::{is_prime_u64, PadicContext};
use padic_flats::rational::ExactRational;
use padic_flats::report::{
    flat_count_record, primes_in_range, scan_csv, scan_rows, volkenborn_record,
};
use padic_flats::verify::{run_suite, Suite};
use padic_flats::volkenborn::{padic_limit_check, volkenborn_partial, PolynomialIntegrand};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_TOO_LARGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "padic-flats",
    version,
    about = "Expected numbers of k-flats on random p-adic complete intersections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected number of k-flats on a random complete intersection.
    ExpectedFlats(ExpectedFlatsArgs),
    /// Re-derive counting identities by brute force, one JSON line each.
    Verify(VerifyArgs),
    /// Tabulate closed forms and bounds over a list of primes.
    Scan(ScanArgs),
    /// Normalized Riemann sums of a polynomial integrand with a p-adic
    /// convergence check.
    Volkenborn(VolkenbornArgs),
    /// Emit the structured Jacobian template of a profile as JSON.
    TemplateDump(TemplateDumpArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Hard cap on brute-force enumeration sizes (falls back to the
    /// PADIC_FLATS_GUARD environment variable, then a built-in default).
    #[arg(long)]
    guard: Option<u64>,

    /// Output format. CSV is supported for scan tables only.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Write output to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Size of the worker pool (default: logical cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ExpectedFlatsArgs {
    /// Prime base.
    #[arg(long)]
    p: u64,

    /// Dimension of the ambient projective space.
    #[arg(long)]
    n: u32,

    /// Dimension of the flats to count.
    #[arg(long)]
    k: u32,

    /// Comma-separated equation degrees, e.g. `3` or `2,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    degrees: Vec<u32>,

    /// Determinant-expectation engine.
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    method: MethodArg,

    /// Truncation level m (residues mod p^m). Defaults to 2 for exact runs
    /// and to the Monte Carlo default otherwise.
    #[arg(long)]
    precision: Option<u32>,

    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,

    /// Monte Carlo seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which identity family to check: volumes, counts, fibers, jacobian,
    /// volkenborn, or all.
    #[arg(long, default_value = "all")]
    suite: String,

    /// Restrict to one prime (default: 2, 3, and 5).
    #[arg(long)]
    p: Option<u64>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ScanArgs {
    /// Comma-separated primes and/or inclusive ranges, e.g. `2,3,5` or
    /// `2..101` (ranges keep only the primes they contain).
    #[arg(long)]
    primes: String,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VolkenbornArgs {
    /// Prime base.
    #[arg(long)]
    p: u64,

    /// Compute normalized sums at levels 1..=levels.
    #[arg(long, default_value_t = 2)]
    levels: u32,

    /// Integrand to sum.
    #[arg(long, value_enum, default_value_t = IntegrandArg::CubicDet)]
    integrand: IntegrandArg,

    /// Convergence target, as `num/den` or an integer. Its denominator must
    /// be coprime to p.
    #[arg(long, default_value = "-1/9", allow_hyphen_values = true)]
    target: String,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TemplateDumpArgs {
    /// Dimension of the ambient projective space.
    #[arg(long)]
    n: u32,

    /// Dimension of the flats.
    #[arg(long)]
    k: u32,

    /// Comma-separated equation degrees.
    #[arg(long, value_delimiter = ',', required = true)]
    degrees: Vec<u32>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum IntegrandArg {
    CubicDet,
    Coordinate,
}

/// A failure destined for stderr, carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooLarge(_) => EXIT_TOO_LARGE,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Fully rendered output plus the exit code to report after writing it.
struct Outcome {
    body: String,
    code: u8,
}

impl Outcome {
    fn lines(lines: Vec<String>, code: u8) -> Self {
        let mut body = lines.join("\n");
        if !body.is_empty() {
            body.push('\n');
        }
        Outcome { body, code }
    }
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let (common, outcome) = match &cli.command {
        Command::ExpectedFlats(args) => (&args.common, prepared(&args.common).and_then(|g| cmd_expected_flats(args, g))),
        Command::Verify(args) => (&args.common, prepared(&args.common).and_then(|g| cmd_verify(args, g))),
        Command::Scan(args) => (&args.common, prepared(&args.common).and_then(|g| cmd_scan(args, g))),
        Command::Volkenborn(args) => (&args.common, prepared(&args.common).and_then(|g| cmd_volkenborn(args, g))),
        Command::TemplateDump(args) => (&args.common, prepared(&args.common).and_then(|g| cmd_template_dump(args, g))),
    };
    match outcome {
        Ok(outcome) => {
            if let Err(e) = write_output(&outcome.body, common.output.as_deref()) {
                eprintln!("error: cannot write output: {e}");
                return std::process::ExitCode::from(EXIT_INVALID);
            }
            std::process::ExitCode::from(outcome.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::ExitCode::from(f.code)
        }
    }
}

/// Resolve the guard and install the worker pool before any computation.
fn prepared(common: &CommonArgs) -> Result<u64, Failure> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Failure::invalid("--threads must be at least 1"));
        }
        // A second install attempt (tests, repeated calls) is harmless: the
        // first pool wins and the error is ignored.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match common.guard {
        Some(g) => Ok(g),
        None => match std::env::var("PADIC_FLATS_GUARD") {
            Ok(raw) => raw.parse().map_err(|_| {
                Failure::invalid(format!("PADIC_FLATS_GUARD is not an integer: '{raw}'"))
            }),
            Err(_) => Ok(DEFAULT_GUARD),
        },
    }
}

fn write_output(body: &str, path: Option<&std::path::Path>) -> std::io::Result<()> {
    match path {
        Some(path) => fs::write(path, body),
        None => std::io::stdout().write_all(body.as_bytes()),
    }
}

fn require_json(common: &CommonArgs) -> Result<(), Failure> {
    if common.format == Some(FormatArg::Csv) {
        return Err(Failure::invalid(
            "CSV output is only available for the scan subcommand",
        ));
    }
    Ok(())
}

fn require_prime(p: u64) -> Result<(), Failure> {
    if !is_prime_u64(p) {
        return Err(Failure::invalid(format!("{p} is not prime")));
    }
    Ok(())
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("records serialize")
}

fn cmd_expected_flats(args: &ExpectedFlatsArgs, guard: u64) -> Result<Outcome, Failure> {
    require_json(&args.common)?;
    require_prime(args.p)?;
    let profile = DegreeProfile::new(args.n, args.k, args.degrees.clone())?;
    let method = match args.method {
        MethodArg::Exact => MethodSpec::Exact {
            precision: args.precision.unwrap_or(2),
        },
        MethodArg::Mc => MethodSpec::Mc {
            precision: args.precision.unwrap_or(MC_DEFAULT_PRECISION),
            samples: args.samples,
            seed: args.seed,
        },
    };
    let result = expected_flats(&profile, args.p, &method, guard)?;
    let record = flat_count_record(&result);
    Ok(Outcome::lines(vec![json_line(&record)], 0))
}

fn cmd_verify(args: &VerifyArgs, guard: u64) -> Result<Outcome, Failure> {
    require_json(&args.common)?;
    let suite = Suite::from_str(&args.suite)?;
    let records = run_suite(suite, args.p, guard)?;
    let all_pass = records.iter().all(|r| r.pass);
    let lines = records.iter().map(json_line).collect();
    Ok(Outcome::lines(lines, if all_pass { 0 } else { EXIT_CHECK_FAILED }))
}

fn cmd_scan(args: &ScanArgs, _guard: u64) -> Result<Outcome, Failure> {
    let primes = parse_primes(&args.primes).map_err(Failure::invalid)?;
    let rows = scan_rows(&primes)?;
    match args.common.format.unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => Ok(Outcome {
            body: scan_csv(&rows),
            code: 0,
        }),
        FormatArg::Json => {
            let lines = rows
                .iter()
                .map(|row| {
                    json_line(&serde_json::json!({
                        "p": row.p,
                        "cubic": row.cubic.fraction_string(),
                        "cubic_decimal": row.cubic.decimal_string(),
                        "quadrics": row.quadrics.fraction_string(),
                        "lower_bound": row.lower_bound.fraction_string(),
                        "limsup_bound": row.limsup_bound.fraction_string(),
                        "limsup_decimal": row.limsup_bound.decimal_string(),
                    }))
                })
                .collect();
            Ok(Outcome::lines(lines, 0))
        }
    }
}

fn cmd_volkenborn(args: &VolkenbornArgs, guard: u64) -> Result<Outcome, Failure> {
    require_json(&args.common)?;
    require_prime(args.p)?;
    if args.levels == 0 {
        return Err(Failure::invalid("--levels must be at least 1"));
    }
    let target = parse_rational(&args.target).map_err(Failure::invalid)?;
    let (name, integrand) = match args.integrand {
        IntegrandArg::CubicDet => ("cubic-det", PolynomialIntegrand::cubic_det()),
        IntegrandArg::Coordinate => ("coordinate", PolynomialIntegrand::coordinate()),
    };
    let partials: Vec<_> = (1..=args.levels)
        .map(|n| volkenborn_partial(&integrand, args.p, n, guard))
        .collect::<Result<_, _>>()?;
    let ctx = PadicContext::new(args.p, args.levels)?;
    let pass = padic_limit_check(&partials, &target, &ctx)?;
    let record = volkenborn_record(name, args.p, &partials, &target, pass);
    Ok(Outcome::lines(
        vec![json_line(&record)],
        if pass { 0 } else { EXIT_CHECK_FAILED },
    ))
}

fn cmd_template_dump(args: &TemplateDumpArgs, _guard: u64) -> Result<Outcome, Failure> {
    require_json(&args.common)?;
    let profile = DegreeProfile::new(args.n, args.k, args.degrees.clone())?;
    let template = build_template(&profile)?;
    Ok(Outcome::lines(vec![template.to_json().to_string()], 0))
}

/// Parse a prime list: comma-separated entries, each either a single prime
/// or an inclusive `lo..hi` range that keeps the primes it contains.
fn parse_primes(spec: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for token in spec.split(',') {
        let t = token.trim();
        if t.is_empty() {
            return Err("empty entry in the prime list".into());
        }
        if let Some((lo, hi)) = t.split_once("..") {
            let lo: u64 = lo
                .trim()
                .parse()
                .map_err(|_| format!("bad range start in '{t}'"))?;
            let hi: u64 = hi
                .trim()
                .parse()
                .map_err(|_| format!("bad range end in '{t}'"))?;
            if lo > hi {
                return Err(format!("empty range '{t}'"));
            }
            out.extend(primes_in_range(lo, hi));
        } else {
            let p: u64 = t.parse().map_err(|_| format!("'{t}' is not an integer"))?;
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err("no primes selected".into());
    }
    Ok(out)
}

/// Parse `num/den` or a plain integer into an exact rational.
fn parse_rational(s: &str) -> Result<ExactRational, String> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), "1"),
    };
    let num = num::BigInt::from_str(num).map_err(|_| format!("bad numerator in '{s}'"))?;
    let den = num::BigInt::from_str(den).map_err(|_| format!("bad denominator in '{s}'"))?;
    ExactRational::new(num, den).map_err(|e| e.to_string())
}
