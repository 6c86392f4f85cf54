//! ap3lab command-line front end.
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ap3lab::bohr::{build_bohr_set, parse_decimal};
use ap3lab::bounds::{
    choose_k, density_bound_table, epsilon_delta_constraint, prop32_lower_bound, sanders_lower_bound,
};
use ap3lab::formats::{read_function, read_integer_set, write_integers, write_spectrum};
use ap3lab::pipeline::{prepare, write_csv, Constants, PipelineConfig};
use ap3lab::prime_engine::sieve_primes;
use ap3lab::sieve_bounds::{
    count_prime_tuples, klimov_upper_bound, prop21_bound, singular_series, TupleSpec, DEFAULT_SERIES_CUTOFF,
};
use ap3lab::threeap::{lambda_direct, lambda_fourier, trivial_mass};
use ap3lab::wtrick::construct;
use ap3lab::{Function64, LabError, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ap3lab", version, about = "Three-term progressions in the primes, at desk scale")]
struct Cli {
    /// JSON pipeline configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Evaluate bounds outside their stated ranges; output is tagged exploratory
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Primes up to a limit, one per line
    Primes {
        #[arg(long)]
        limit: u64,
    },
    /// Forward transform of a ZPFN function file into a ZPSP spectrum file
    Transform {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// W-trick construction report
    Wtrick {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        z: Option<f64>,
        /// One prime per line; default is every prime up to N
        #[arg(long)]
        set: Option<PathBuf>,
    },
    /// Bohr set size and measure
    Bohr {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<u64>,
        #[arg(long)]
        eps: String,
        /// List the members as well
        #[arg(long)]
        members: bool,
    },
    /// Progression operator of an indicator function
    Lambda(LambdaArgs),
    /// Prime tuple count against its sieve upper bound
    Tuples {
        #[arg(long)]
        w: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        offsets: Vec<u64>,
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = DEFAULT_SERIES_CUTOFF)]
        series_cutoff: u64,
    },
    /// Full experiment report as JSON
    Pipeline(RunArgs),
    /// L^{2k} norms of the smoothed function over the k grid, as CSV
    NormSweep(RunArgs),
    /// Progression-count gap over the delta x epsilon grid, as CSV
    DeltaSweep(RunArgs),
    /// Closed-form bound evaluators
    Bounds(BoundsArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("method").args(["fourier", "direct", "both"])))]
struct LambdaArgs {
    #[arg(long)]
    p: u64,
    /// Residues mod P, one per line
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    fourier: bool,
    #[arg(long)]
    direct: bool,
    #[arg(long)]
    both: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Overrides N from the configuration
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: u64,
    /// Relative density for the lower bound on Lambda(h, h, h)
    #[arg(long)]
    alpha: Option<f64>,
    /// Density for the Sanders bound
    #[arg(long)]
    xi: Option<f64>,
    /// Defaults to choose_k(N)
    #[arg(long)]
    k: Option<u32>,
    /// Sieve parameter z for the L^{2k} bound
    #[arg(long)]
    z: Option<f64>,
    /// |Sigma| for the L^{2k} bound
    #[arg(long)]
    sigma: Option<u64>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(LabError::InvalidArgument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| LabError::InvalidArgument(e.to_string()))?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Primes { limit } => {
            let table = sieve_primes(limit)?;
            let mut w = sink(out)?;
            write_integers(&mut w, table.primes())?;
            w.flush()?;
        }
        Command::Transform { input } => {
            let f = read_function(&mut BufReader::new(File::open(&input)?))?;
            let Some(path) = out else {
                return Err(LabError::InvalidArgument("transform needs --out".into()));
            };
            let mut w = BufWriter::new(File::create(path)?);
            write_spectrum(&mut w, f.spectrum())?;
            w.flush()?;
        }
        Command::Wtrick { n, z, set } => {
            let table = sieve_primes(n)?;
            let set = match set {
                Some(path) => read_set(&path)?,
                None => table.primes().collect(),
            };
            let (sieved, choice, params) = construct::<f64>(&set, n, z, &table)?;
            emit_json(out, &serde_json::to_value(sieved.report(&params, &choice))?)?;
        }
        Command::Bohr { p, freqs, eps, members } => {
            let b = build_bohr_set(p, &freqs, parse_decimal(&eps)?)?;
            let mut v = json!({
                "P": p,
                "frequencies": b.frequencies(),
                "epsilon": eps,
                "size": b.size(),
                "measure": b.measure(),
                "pigeonhole_log10": b.pigeonhole_log10(),
                "pigeonhole_holds": b.pigeonhole_holds(),
            });
            if members {
                v["members"] = json!(b.members().collect::<Vec<_>>());
            }
            emit_json(out, &v)?;
        }
        Command::Lambda(args) => emit_json(out, &lambda_command(&args)?)?,
        Command::Tuples {
            w,
            offsets,
            limit,
            series_cutoff,
        } => {
            let spec = TupleSpec::new(w, offsets)?;
            let count = count_prime_tuples(&spec, limit)?;
            let series = singular_series(&spec, series_cutoff)?;
            let bound = klimov_upper_bound(&spec, limit, series.value)?;
            emit_json(
                out,
                &json!({
                    "count": count,
                    "klimov_bound": bound.value,
                    "ratio": count as f64 / bound.value,
                    "singular_series": series.value,
                    "tail_estimate": series.tail_estimate,
                    "k_in_range": bound.k_in_range,
                    "offsets_hypothesis": bound.offsets_hypothesis,
                }),
            )?;
        }
        Command::Pipeline(args) => {
            let cfg = load_config(cli.config.as_deref(), &args, cli.force)?;
            let report = prepare(&cfg)?.report()?;
            emit_text(out, &(report.to_json() + "\n"))?;
        }
        Command::NormSweep(args) => {
            let cfg = load_config(cli.config.as_deref(), &args, cli.force)?;
            let rows = prepare(&cfg)?.norm_sweep()?;
            let mut w = sink(out)?;
            write_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::DeltaSweep(args) => {
            let cfg = load_config(cli.config.as_deref(), &args, cli.force)?;
            let rows = prepare(&cfg)?.delta_sweep()?;
            let mut w = sink(out)?;
            write_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::Bounds(args) => {
            let constants = match cli.config.as_deref() {
                Some(path) => PipelineConfig::from_json(&fs::read_to_string(path)?)?.constants,
                None => Constants::default(),
            };
            emit_json(out, &bounds_command(&args, &constants, cli.force)?)?;
        }
    }
    Ok(())
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    emit_text(out, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn read_set(path: &Path) -> Result<Vec<u64>> {
    read_integer_set(BufReader::new(File::open(path)?))
}

fn load_config(path: Option<&Path>, args: &RunArgs, force: bool) -> Result<PipelineConfig> {
    let mut cfg = match (path, args.n) {
        (Some(path), _) => PipelineConfig::from_json(&fs::read_to_string(path)?)?,
        (None, Some(n)) => PipelineConfig::new(n),
        (None, None) => return Err(LabError::InvalidArgument("give --config or --n".into())),
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    cfg.force |= force;
    Ok(cfg)
}

fn lambda_command(args: &LambdaArgs) -> Result<Value> {
    let set = read_set(&args.set)?;
    if let Some(x) = set.iter().find(|&&x| x >= args.p) {
        return Err(LabError::InvalidInput(format!("{x} is not a residue mod {}", args.p)));
    }
    let f = Function64::indicator(args.p, &set)?;
    let trivial = trivial_mass(&f, &f, &f)?;
    let direct = (args.direct || args.both).then(|| lambda_direct(&f, &f, &f)).transpose()?;
    let fourier = (!args.direct).then(|| lambda_fourier(&f, &f, &f)).transpose()?;
    let lambda = fourier.or(direct.as_ref().map(|d| d.lambda)).expect("one method runs");
    let mut v = json!({
        "P": args.p,
        "size": set.len(),
        "lambda": lambda,
        "trivial": trivial,
        "nontrivial": lambda - trivial,
    });
    if let (Some(d), Some(f)) = (&direct, fourier) {
        v["lambda_direct"] = json!(d.lambda);
        v["lambda_fourier"] = json!(f);
        v["difference"] = json!((d.lambda - f).abs());
    }
    if let Some(pairs) = direct.and_then(|d| d.pair_count) {
        v["pair_count"] = json!(pairs);
    }
    Ok(v)
}

fn bounds_command(args: &BoundsArgs, constants: &Constants, force: bool) -> Result<Value> {
    let k = match args.k {
        Some(k) => k,
        None => choose_k(args.n)?,
    };
    let mut v = json!({
        "N": args.n,
        "k": k,
        "density": density_bound_table(args.n),
        "constants": constants,
    });
    if let Some(xi) = args.xi {
        v["sanders"] = json!(sanders_lower_bound(xi, constants.c_sanders)?);
    }
    if let Some(alpha) = args.alpha {
        v["prop32"] = json!(prop32_lower_bound(alpha, k, constants.c1)?);
    }
    if let (Some(z), Some(sigma)) = (args.z, args.sigma) {
        let b = prop21_bound(k, args.n as f64, z, sigma, force)?;
        v["prop21"] = json!(b);
        v["exploratory"] = json!(!b.in_range);
    }
    if let (Some(d), Some(e)) = (&args.delta, &args.eps) {
        let to_f64 = |s: &str| -> Result<f64> {
            let r = parse_decimal(s)?;
            Ok(*r.numer() as f64 / *r.denom() as f64)
        };
        v["constraint"] = json!(epsilon_delta_constraint(to_f64(d)?, to_f64(e)?, args.n, constants.c4)?);
    }
    Ok(v)
}
