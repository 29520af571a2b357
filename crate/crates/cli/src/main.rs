//! `qrac`: build Galois MUBs, evaluate random access codes, scan triplets for
//! operational inequivalence, sweep perturbations and simulate shot noise.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrac::error::{Error, Result};
use qrac::mub::{bases_to_json, galois_mubs, load_bases, Basis, MubSet};
use qrac::oiscan::{check_pattern, scan, TripletId, DEFAULT_TOL};
use qrac::perturb::{sweep, SweepSpec, DEFAULT_MARGIN};
use qrac::shots::{simulate, ShotMode, ShotSpec};
use qrac::success::analytic::p3_analytic;
use qrac::success::{p_general, verify_stationary_structure, InputWord, RequestWeights};
use serde_json::json;

#[derive(Parser)]
#[command(name = "qrac", version, about = "Quantum random access codes over Galois mutually unbiased bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the d+1 Galois MUBs and write them as JSON.
    Mub(MubArgs),
    /// Success probability of an n-input code for fixed bases.
    Qrac(QracArgs),
    /// P for every three-basis subset, grouped into distinct values.
    ///
    /// CSV columns: mu1,mu2,mu3,P (one row per triplet).
    OiScan(ScanArgs),
    /// Sweep U -> GS(U + delta I) and track P per triplet.
    ///
    /// CSV columns: triplet,delta,P with triplets written as a-b-c.
    Perturb(PerturbArgs),
    /// Shot-noise Monte Carlo of the best and worst triplets.
    Shots(ShotArgs),
    /// Check the stationary structure of q for one word.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Eig,
    Analytic,
    Both,
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Comma-separated list, e.g. `0,2,5`.
#[derive(Clone, Debug)]
struct List<T>(Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|_| format!("cannot parse {x:?} in {s:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(List)
    }
}

#[derive(Args)]
struct MubArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QracArgs {
    /// Dimension of the Galois set; ignored when --bases is given.
    #[arg(long)]
    dim: Option<usize>,
    /// Number of input dits.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Basis-set JSON produced by `qrac mub`.
    #[arg(long)]
    bases: Option<PathBuf>,
    /// Basis indices, defaults to 0,1,..,n-1.
    #[arg(long)]
    subset: Option<List<usize>>,
    #[arg(long, value_enum, default_value_t = MethodArg::Eig)]
    method: MethodArg,
    /// Question weights p_i, defaults to uniform.
    #[arg(long)]
    weights: Option<List<f64>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0.0)]
    delta_start: f64,
    #[arg(long, default_value_t = 2.0)]
    delta_end: f64,
    #[arg(long, default_value_t = 0.02)]
    delta_step: f64,
    /// Restrict to these triplets (repeatable); all by default.
    #[arg(long)]
    subset: Vec<List<usize>>,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ShotArgs {
    #[arg(long)]
    dim: usize,
    /// Total shots per trial and scenario.
    #[arg(long, default_value_t = 25_000)]
    shots: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Seed of the ChaCha20 generator; required.
    #[arg(long)]
    seed: u64,
    /// Use the Born-rule expectation instead of sampling.
    #[arg(long)]
    infinite: bool,
    /// Scenario triplets (repeatable); defaults to one P_plus and one P_minus triplet.
    #[arg(long)]
    subset: Vec<List<usize>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    word: List<usize>,
    #[arg(long, default_value = "0,1,2")]
    subset: List<usize>,
    #[command(flatten)]
    output: Output,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence(_) | Error::RankDeficient { .. } | Error::NotHermitian(_) | Error::RootNotFound => 3,
        Error::BudgetExceeded { .. } => 4,
        _ => 2,
    }
}

/// Fails before any computation if the output directory does not exist.
fn check_out(out: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = out {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Error::InvalidArgument(format!("output directory {} does not exist", parent.display())));
        }
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// `x` with twelve significant digits.
fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (11 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn triplet(ids: &[usize]) -> Result<TripletId> {
    match *ids {
        [a, b, c] => TripletId::new([a, b, c]),
        _ => Err(Error::InvalidArgument(format!("a triplet needs three indices, got {ids:?}"))),
    }
}

fn pick<'a>(bases: &'a [Basis], ids: &[usize]) -> Result<Vec<&'a Basis>> {
    ids.iter()
        .map(|&i| bases.get(i).ok_or_else(|| Error::InvalidArgument(format!("basis {i} out of range 0..{}", bases.len()))))
        .collect()
}

fn cmd_mub(a: MubArgs) -> Result<()> {
    check_out(&a.out)?;
    let set = galois_mubs(a.dim)?;
    let text = bases_to_json(set.bases(), "galois")?;
    match &a.out {
        Some(path) => {
            fs::write(path, text)?;
            println!("wrote {} bases of dimension {} to {}", set.len(), set.dim(), path.display());
            println!("max unbiasedness deviation {:.3e}", set.max_deviation());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_qrac(a: QracArgs) -> Result<()> {
    check_out(&a.output.out)?;
    let bases = match (&a.bases, a.dim) {
        (Some(path), _) => load_bases(path)?,
        (None, Some(d)) => galois_mubs(d)?.into_bases(),
        (None, None) => return Err(Error::InvalidArgument("give --dim or --bases".into())),
    };
    let ids = a.subset.map_or_else(|| (0..a.n).collect(), |s| s.0);
    if ids.len() != a.n {
        return Err(Error::InvalidArgument(format!("--subset has {} indices but --n is {}", ids.len(), a.n)));
    }
    let chosen = pick(&bases, &ids)?;
    let weights = match a.weights {
        Some(w) => RequestWeights::new(w.0)?,
        None => RequestWeights::uniform(a.n),
    };
    let eig = match a.method {
        MethodArg::Eig | MethodArg::Both => Some(p_general(&chosen, &weights)?.value),
        MethodArg::Analytic => None,
    };
    let analytic = match a.method {
        MethodArg::Analytic | MethodArg::Both => {
            if a.n != 3 {
                return Err(Error::InvalidArgument("the analytic method needs --n 3".into()));
            }
            if weights.as_slice().iter().any(|&p| (p - 1.0 / 3.0).abs() > 1e-12) {
                return Err(Error::InvalidArgument("the analytic method needs uniform weights".into()));
            }
            Some(p3_analytic(&[chosen[0], chosen[1], chosen[2]])?.value)
        }
        MethodArg::Eig => None,
    };
    let diff = eig.zip(analytic).map(|(e, a)| (e - a).abs());
    let text = match a.output.format {
        Format::Json => {
            let v = json!({
                "dim": chosen[0].dim(),
                "n": a.n,
                "subset": ids,
                "weights": weights.as_slice(),
                "eig": eig,
                "analytic": analytic,
                "abs_diff": diff,
            });
            serde_json::to_string_pretty(&v).map_err(Error::from)? + "\n"
        }
        Format::Csv => {
            let cell = |x: Option<f64>| x.map(qrac::mub::format_exact).unwrap_or_default();
            format!("method,P\neig,{}\nanalytic,{}\n", cell(eig), cell(analytic))
        }
    };
    if let Some(e) = eig {
        eprintln!("P (eigensolver) = {}", sig12(e));
    }
    if let Some(x) = analytic {
        eprintln!("P (analytic)    = {}", sig12(x));
    }
    if let Some(d) = diff {
        eprintln!("|difference|    = {d:.3e}");
    }
    emit(&a.output.out, &text)
}

fn cmd_oi(a: ScanArgs) -> Result<()> {
    check_out(&a.output.out)?;
    let r = scan(&galois_mubs(a.dim)?, a.tol)?;
    eprintln!(
        "d={} N={} (predicted {}) agrees={} P_plus={} P_minus={}{}",
        r.dim,
        r.n_clusters,
        r.predicted_n,
        check_pattern(&r),
        sig12(r.p_plus),
        sig12(r.p_minus),
        if r.fragile { " [tolerance-fragile]" } else { "" }
    );
    let text = match a.output.format {
        Format::Json => r.to_json()? + "\n",
        Format::Csv => r.to_csv(),
    };
    emit(&a.output.out, &text)
}

fn cmd_perturb(a: PerturbArgs) -> Result<()> {
    check_out(&a.output.out)?;
    let grid = SweepSpec::grid(a.delta_start, a.delta_end, a.delta_step)?;
    let triplets = if a.subset.is_empty() {
        None
    } else {
        Some(a.subset.iter().map(|s| triplet(&s.0)).collect::<Result<Vec<_>>>()?)
    };
    let spec = SweepSpec::new(grid, triplets, a.margin)?;
    let r = sweep(&spec, &galois_mubs(a.dim)?)?;
    eprintln!(
        "d={} surpass={} best {} at delta={} P={} ({:+.3e} over P_plus={}, margin {})",
        r.dim,
        r.surpass,
        r.best.triplet,
        r.best.delta,
        sig12(r.best.p),
        r.surpass_margin,
        sig12(r.p_plus),
        r.margin
    );
    let text = match a.output.format {
        Format::Json => r.to_json()? + "\n",
        Format::Csv => r.to_csv(),
    };
    emit(&a.output.out, &text)
}

fn cmd_shots(a: ShotArgs) -> Result<()> {
    check_out(&a.output.out)?;
    if matches!(a.output.format, Format::Csv) {
        return Err(Error::InvalidArgument("shots reports are JSON only".into()));
    }
    let set = galois_mubs(a.dim)?;
    let scenarios = if a.subset.is_empty() {
        let r = scan(&set, DEFAULT_TOL)?;
        let mut v = vec![r.clusters[0].members[0]];
        if r.n_clusters > 1 {
            v.push(r.clusters[r.n_clusters - 1].members[0]);
        }
        v
    } else {
        a.subset.iter().map(|s| triplet(&s.0)).collect::<Result<Vec<_>>>()?
    };
    let mode = if a.infinite { ShotMode::Infinite } else { ShotMode::Sampled(a.shots) };
    let spec = ShotSpec::new(mode, a.trials, a.seed)?;
    let r = simulate(set.bases(), &scenarios, &spec)?;
    for s in &r.scenarios {
        eprintln!("{}: {:.4} +- {:.4} (exact {})", s.triplet, s.mean, s.sd, sig12(s.exact));
    }
    if let Some(g) = r.sigma_gap {
        eprintln!("sigma-gap {g:.3}");
    }
    emit(&a.output.out, &(r.to_json()? + "\n"))
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    check_out(&a.output.out)?;
    if matches!(a.output.format, Format::Csv) {
        return Err(Error::InvalidArgument("verify reports are JSON only".into()));
    }
    let set: MubSet = galois_mubs(a.dim)?;
    let chosen = pick(set.bases(), &a.subset.0)?;
    if chosen.len() != 3 {
        return Err(Error::InvalidArgument("--subset needs three indices".into()));
    }
    let word = InputWord::new(a.dim, a.word.0)?;
    let r = verify_stationary_structure(&[chosen[0], chosen[1], chosen[2]], &word)?;
    eprintln!("Phi     = {:.4}", r.phi.big_phi);
    eprintln!("gamma0  = {:.4}", r.gamma0);
    eprintln!("q_m1    = {}  q_m2 = {}", sig12(r.q_m1), sig12(r.q_m2));
    eprintln!(
        "gradient norms {:.1e} {:.1e} {:.1e}; line variation {:.1e}; grid max - q_m1 = {:.1e}",
        r.gradient_norms[0],
        r.gradient_norms[1],
        r.gradient_norms[2],
        r.max_line_variation,
        r.grid_max - r.q_m1
    );
    eprintln!("all checks passed: {}", r.all_passed());
    emit(&a.output.out, &(serde_json::to_string_pretty(&r).map_err(Error::from)? + "\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mub(a) => cmd_mub(a),
        Command::Qrac(a) => cmd_qrac(a),
        Command::OiScan(a) => cmd_oi(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Shots(a) => cmd_shots(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
