use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use jacobi_asym::certify::json_rows;
use jacobi_asym::coeffs::coefficients_at;
use jacobi_asym::{
    c_hat_osc, c_hat_outer, evaluate, evaluate_general, sweep, write_csv, Convention, Error,
    ExpansionResult, GridSpec, OracleMode, Parameters, Region, RegionPoint,
};

const EXIT_FAIL: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_ENDPOINT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "jacobi",
    version,
    about = "Certified large-degree Jacobi polynomial asymptotics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print expansion coefficients A_0..A_J.
    Coeffs(CoeffsArgs),
    /// Evaluate P_n at one point with its certificate.
    Eval(EvalArgs),
    /// Print the bound constants at one point.
    Bounds(BoundsArgs),
    /// Check certificates against the recurrence oracle over a grid.
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    region: Region,
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
}

#[derive(Args)]
struct CoeffsArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    max_j: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also dump a_k, b_m and the Q_j coefficient lists.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["gamma", "region"])]
    x: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "region")]
    gamma: Option<f64>,
    #[arg(long, requires = "gamma")]
    region: Option<Region>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = Convention::default())]
    convention: Convention,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct CertifyArgs {
    /// JSON grid file; overrides every inline grid flag.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Region of the inline grid. Without it the built-in grid of `--preset`
    /// is used.
    #[arg(long)]
    region: Option<Region>,
    /// Built-in acceptance grid.
    #[arg(long, default_value = "outer")]
    preset: Region,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    gamma: Vec<f64>,
    /// Zipped with `--beta`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    convention: Option<Convention>,
    #[arg(long)]
    oracle: Option<OracleMode>,
    /// Record output path; only the summary is printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Invalid(String),
    Endpoint(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Endpoint(_) => Failure::Endpoint(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn params(alpha: f64, beta: f64) -> Result<Parameters, Failure> {
    Ok(Parameters::new(alpha, beta)?)
}

fn complex_json(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn cmd_coeffs(args: CoeffsArgs, out: &mut impl Write) -> CmdResult {
    let point = RegionPoint::new(args.point.region, args.point.gamma)?;
    let params = params(args.point.alpha, args.point.beta)?;
    jacobi_asym::params::validate_point(params, point).into_result()?;
    let table = coefficients_at(point, params, args.max_j.max(1))?;
    let coeffs = &table.coeffs[..=args.max_j];
    let real = args.point.region == Region::Outer;
    match args.format {
        Format::Json => {
            let mut doc = json!({
                "region": args.point.region,
                "gamma": args.point.gamma,
                "alpha": params.alpha,
                "beta": params.beta,
                "A": coeffs.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
            });
            if args.audit {
                doc["a"] = table.a.iter().map(|&z| complex_json(z)).collect();
                doc["b_from_3"] = table.b.iter().map(|&z| complex_json(z)).collect();
                doc["Q"] = table
                    .q
                    .iter()
                    .map(|q| {
                        q.coeffs()
                            .iter()
                            .map(|&z| complex_json(z))
                            .collect::<serde_json::Value>()
                    })
                    .collect();
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
        Format::Csv if args.audit => {
            writeln!(out, "quantity,index,power,re,im")?;
            let mut row = |q: &str, i: usize, k: &str, z: Complex64| {
                writeln!(out, "{q},{i},{k},{:.16e},{:.16e}", z.re, z.im)
            };
            for (j, &z) in coeffs.iter().enumerate() {
                row("A", j, "", z)?;
            }
            for (k, &z) in table.a.iter().enumerate() {
                row("a", k, "", z)?;
            }
            for (m, &z) in table.b.iter().enumerate() {
                row("b", m + 3, "", z)?;
            }
            for (j, q) in table.q.iter().enumerate() {
                for (d, &z) in q.coeffs().iter().enumerate() {
                    row("Q", j, &d.to_string(), z)?;
                }
            }
        }
        Format::Csv => {
            if real {
                writeln!(out, "j,A")?;
                for (j, z) in coeffs.iter().enumerate() {
                    writeln!(out, "{j},{:.16e}", z.re)?;
                }
            } else {
                writeln!(out, "j,re,im")?;
                for (j, z) in coeffs.iter().enumerate() {
                    writeln!(out, "{j},{:.16e},{:.16e}", z.re, z.im)?;
                }
            }
        }
    }
    Ok(0)
}

fn print_expansion(r: &ExpansionResult, out: &mut impl Write) -> io::Result<()> {
    writeln!(
        out,
        "value={} mantissa={:.16e} exp2={}",
        r.value.decimal(),
        r.value.mantissa(),
        r.value.exponent()
    )?;
    writeln!(
        out,
        "bound={} mantissa={:.16e} exp2={}",
        r.absolute_bound.decimal(),
        r.absolute_bound.mantissa(),
        r.absolute_bound.exponent()
    )?;
    writeln!(out, "normalized_bound={:.16e}", r.bundle.sharp_bound)?;
    writeln!(
        out,
        "certified_normalized_bound={:.16e}",
        r.bundle.certified_bound
    )?;
    writeln!(
        out,
        "region={} gamma={} p={}",
        r.point.region(),
        r.point.gamma(),
        r.p
    )?;
    writeln!(out, "flags={}", r.flag_string())
}

fn cmd_eval(args: EvalArgs, out: &mut impl Write) -> CmdResult {
    let params = params(args.alpha, args.beta)?;
    let result = match (args.x, args.gamma, args.region) {
        (Some(x), _, _) => evaluate_general(args.n, params, x, args.p, args.convention)?,
        (None, Some(gamma), Some(region)) => {
            let point = RegionPoint::new(region, gamma)?;
            evaluate(args.n, point, params, args.p, args.convention)?
        }
        _ => {
            return Err(Failure::Invalid(
                "give either --x or both --gamma and --region".into(),
            ))
        }
    };
    print_expansion(&result, out)?;
    Ok(0)
}

fn cmd_bounds(args: BoundsArgs, out: &mut impl Write) -> CmdResult {
    let point = RegionPoint::new(args.point.region, args.point.gamma)?;
    let params = params(args.point.alpha, args.point.beta)?;
    jacobi_asym::params::validate_point(params, point).into_result()?;
    if args.p == 0 {
        return Err(Error::ZeroOrder.into());
    }
    let table = coefficients_at(point, params, args.p)?;
    let a_p = table.coeffs[args.p];
    let gamma = point.gamma();
    let b = match point.region() {
        Region::Outer => c_hat_outer(args.p, args.n, gamma, params, a_p.re)?,
        Region::Oscillatory => c_hat_osc(args.p, args.n, gamma, params, a_p)?,
    };
    match b.delta {
        Some(d) => writeln!(out, "delta={d}")?,
        None => writeln!(out, "delta=none")?,
    }
    writeln!(out, "c_p={:.16e}", b.c_p)?;
    writeln!(out, "c_p_next={:.16e}", b.c_p_next)?;
    writeln!(out, "c_hat_p={:.16e}", b.c_hat_p)?;
    writeln!(out, "sharp_bound={:.16e}", b.sharp_bound)?;
    writeln!(out, "coarse_bound={:.16e}", b.coarse_bound)?;
    writeln!(out, "certified_bound={:.16e}", b.certified_bound)?;
    writeln!(out, "n_threshold={}", b.n_threshold)?;
    Ok(0)
}

fn grid_from(args: &CertifyArgs) -> Result<GridSpec, Failure> {
    let mut grid = if let Some(path) = &args.grid {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str::<GridSpec>(&text)
            .map_err(|e| Failure::Invalid(format!("bad grid file {}: {e}", path.display())))?
    } else if let Some(region) = args.region {
        let mut g = match region {
            Region::Outer => GridSpec::acceptance_outer(),
            Region::Oscillatory => GridSpec::acceptance_osc(),
        };
        if !args.n.is_empty() {
            g.n = args.n.clone();
        }
        if !args.gamma.is_empty() {
            g.gamma = args.gamma.clone();
        }
        if !args.alpha.is_empty() || !args.beta.is_empty() {
            g.alpha = args.alpha.clone();
            g.beta = args.beta.clone();
        }
        if !args.p.is_empty() {
            g.p = args.p.clone();
        }
        g
    } else {
        match args.preset {
            Region::Outer => GridSpec::acceptance_outer(),
            Region::Oscillatory => GridSpec::acceptance_osc(),
        }
    };
    if let Some(s) = args.slack {
        grid.slack = s;
    }
    if let Some(c) = args.convention {
        grid.convention = c;
    }
    if let Some(o) = args.oracle {
        grid.oracle = o;
    }
    Ok(grid)
}

fn cmd_certify(args: CertifyArgs, out: &mut impl Write) -> CmdResult {
    let grid = grid_from(&args)?;
    if args.threads == Some(0) {
        return Err(Failure::Invalid("--threads must be at least 1".into()));
    }
    let report = sweep(&grid, args.threads)?;
    if let Some(path) = &args.out {
        let file = fs::File::create(path)?;
        let mut w = io::BufWriter::new(file);
        match args.format {
            Format::Csv => write_csv(&report.records, &mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &json_rows(&report.records))
                    .map_err(io::Error::other)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    let s = &report.summary;
    let summary = json!({
        "pass_rate": s.pass_rate,
        "worst_ratio": s.worst_ratio,
        "n_points": s.n_points,
        "wall_ms": s.wall_ms,
    });
    writeln!(out, "{summary}")?;
    Ok(if s.all_pass() { 0 } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Coeffs(a) => cmd_coeffs(a, &mut out),
        Command::Eval(a) => cmd_eval(a, &mut out),
        Command::Bounds(a) => cmd_bounds(a, &mut out),
        Command::Certify(a) => cmd_certify(a, &mut out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Endpoint(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ENDPOINT)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
