//! `corrpref`: command-line front end for the recursive-preference library.
//!
//! Exit codes: 0 success, 1 computation error (or a failed reproduce check),
//! 2 usage error. Diagnostics go to stderr, results to stdout or `--out`.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use corrpref::horizon::{compare_iid_corr, value_iterate, HorizonValue, StationaryKind, StationaryLottery, DEFAULT_TOL};
use corrpref::info_order::{compare as compare_info, Comparison};
use corrpref::longrun::{
    lrr_persistence_premium, lrr_timing_premium, lrr_timing_premium_squared, match_longrun_volatility, match_rohde_yu, LrrParams,
};
use corrpref::premia::{dpos_measure, persistence_premium_approx, premium_sweep, timing_premium_report, PremiumKind, PremiumReport};
use corrpref::reproduce::{reproduce, LrrRow, Reproduction, Target};
use corrpref::risk::{classify, kp_evaluate, present_equivalent, Grid};
use corrpref::suites::{prop1_suite, theorem1_converse, theorem1_forward_with, ChainMode};
use corrpref::taxation::{optimize_tau, TaxParams};
use corrpref::variational::{duality_report, NodeDuality};
use corrpref::{Distribution, TemporalLottery};

use output::{emit, to_json, write_csv};

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl From<corrpref::Error> for Failure {
    fn from(e: corrpref::Error) -> Self {
        // the variant name leads the message so scripts can match on it
        let debug = format!("{e:?}");
        let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default();
        Failure::Compute(format!("{kind}: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "corrpref", version, about = "Recursive preferences over temporal lotteries")]
struct Cli {
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recursive value of a lottery.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lottery: PathBuf,
    },
    /// Informativeness of the first lottery relative to the second.
    Compare { first: PathBuf, second: PathBuf },
    /// Exact premium with its local approximation.
    #[command(subcommand)]
    Premium(PremiumCmd),
    /// Local preference measures and risk-attitude classification.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Long-run-risk calibration.
    #[command(subcommand)]
    Calibrate(CalibrateCmd),
    /// Progressive taxation.
    #[command(subcommand)]
    Tax(TaxCmd),
    /// Recursive against variational values at every interior node.
    #[command(subcommand)]
    Variational(VariationalCmd),
    /// Infinite-horizon iid against perfectly correlated streams.
    #[command(subcommand)]
    Horizon(HorizonCmd),
    /// Randomized property suites.
    #[command(subcommand)]
    Suite(SuiteCmd),
    /// Recompute the reference numbers; `all` runs every target.
    Reproduce { target: String },
}

#[derive(Args)]
struct PremiumArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    /// Consumption at t = 1 (timing premium only).
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
    eps: Option<f64>,
    /// Evenly spaced ε over [0, 1] with this many points.
    #[arg(long)]
    sweep: Option<usize>,
    /// CSV of the sweep: epsilon,exact_pi,approx_pi,gap.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PremiumCmd {
    Persistence(PremiumArgs),
    Timing(PremiumArgs),
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Local strength of preference for early resolution.
    Er {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Relative present-equivalent gap between iid and correlated halves.
    Dpos {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        hi: f64,
        #[arg(long, default_value_t = 5.0)]
        lo: f64,
    },
    /// DARA / IRRA / SCA / UPI on a log grid.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = Grid::default().lo)]
        grid_lo: f64,
        #[arg(long, default_value_t = Grid::default().hi)]
        grid_hi: f64,
        #[arg(long, default_value_t = Grid::default().n)]
        grid_n: usize,
    },
}

#[derive(Subcommand)]
enum CalibrateCmd {
    Lrr {
        /// Parameter file; the monthly reference calibration when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also solve for the iid volatility with the same long-run variance.
        #[arg(long)]
        match_vol: bool,
        /// Also solve for the risk parameter giving this correlation-aversion measure.
        #[arg(long)]
        match_dpos: Option<f64>,
    },
}

#[derive(Subcommand)]
enum TaxCmd {
    Optimize {
        #[arg(long)]
        params: Option<PathBuf>,
        /// CSV of the welfare curve: tau,welfare.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VariationalCmd {
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lottery: PathBuf,
    },
}

#[derive(Subcommand)]
enum HorizonCmd {
    Compare {
        #[arg(long)]
        model: PathBuf,
        /// JSON `{"c0": .., "points": [[value, prob], ..]}`.
        #[arg(long)]
        dist: PathBuf,
        /// Felicity exponent: utilities are c^rho.
        #[arg(long)]
        rho: f64,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    Theorem1 {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Run the counterexample construction instead of the forward chains.
        #[arg(long)]
        converse: bool,
        /// Draw a fresh pair at every chain step.
        #[arg(long)]
        mixed_pairs: bool,
    },
    Prop1 {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn load_lottery(path: &Path) -> Result<TemporalLottery, Failure> {
    Ok(TemporalLottery::from_json_str(&config::read(path)?)?)
}

/// Output files must land in an existing directory; checked before any work.
fn check_out(path: Option<&Path>) -> Result<(), Failure> {
    if let Some(p) = path {
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !dir.is_dir() {
            return Err(Failure::Usage(format!("output directory {} does not exist", dir.display())));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOut {
    value: f64,
    present_equivalent: Option<f64>,
    horizon: usize,
}

#[derive(Serialize)]
struct CompareOut {
    result: &'static str,
    /// G with M₂ = G·M₁ for `more_informative` and `equal`, the reverse for `less`.
    witness: Option<Vec<Vec<f64>>>,
    residual: Option<f64>,
    marginals_differ: Option<bool>,
}

#[derive(Serialize)]
struct LrrOut {
    row: LrrRow,
    timing_premium: f64,
    timing_premium_squared_loading: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    matched_volatility: Option<MatchedVol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matched_dpos: Option<MatchedDpos>,
}

#[derive(Serialize)]
struct MatchedVol {
    sigma_iid: f64,
    premium: f64,
}

#[derive(Serialize)]
struct MatchedDpos {
    target: f64,
    alpha: f64,
    risk_aversion: f64,
    premium: f64,
}

#[derive(Serialize)]
struct TaxOut {
    tau_star: f64,
    welfare: f64,
    params: TaxParams,
}

#[derive(Serialize)]
struct VariationalOut {
    gap: f64,
    nodes: Vec<NodeDuality>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistFile {
    c0: f64,
    points: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct HorizonOut {
    iid_weakly_preferred: bool,
    iid: f64,
    corr: f64,
    iid_iteration: HorizonValue,
    corr_iteration: HorizonValue,
}

fn premium(kind: PremiumKind, a: PremiumArgs, out: Option<&Path>) -> Result<(), Failure> {
    let model = config::load_model(&a.model)?.model()?;
    check_out(a.csv.as_deref())?;
    let k = match (kind, a.k) {
        (PremiumKind::Timing, None) => return Err(Failure::Usage("timing premium needs --k".into())),
        (_, k) => k.unwrap_or(0.0),
    };
    let reports: Vec<PremiumReport> = match (a.eps, a.sweep) {
        (Some(e), _) => vec![match kind {
            PremiumKind::Persistence => persistence_premium_approx(&model, a.c0, a.x, a.y, e)?,
            PremiumKind::Timing => timing_premium_report(&model, a.c0, k, a.x, a.y, e)?,
        }],
        (None, Some(n)) if n >= 2 => {
            let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            premium_sweep(&model, kind, a.c0, k, a.x, a.y, &grid)?
        }
        _ => return Err(Failure::Usage("--sweep needs at least 2 points".into())),
    };
    if let Some(p) = &a.csv {
        let rows: Vec<Vec<f64>> = reports
            .iter()
            .map(|r| vec![r.epsilon, r.exact_pi, r.approx_pi.unwrap_or(f64::NAN), r.gap.unwrap_or(f64::NAN)])
            .collect();
        write_csv(p, &["epsilon", "exact_pi", "approx_pi", "gap"], &rows)?;
    }
    let text = if a.eps.is_some() { to_json(&reports[0]) } else { to_json(&reports) };
    emit(&text, out)
}

fn lrr(params: Option<PathBuf>, match_vol: bool, match_dpos: Option<f64>, out: Option<&Path>) -> Result<(), Failure> {
    let p: LrrParams = match &params {
        Some(path) => config::parse(path)?,
        None => LrrParams::table1(),
    };
    let row = LrrRow {
        sigma: p.sigma,
        vol_loading: p.vol_loading,
        a: p.a,
        beta: p.beta,
        risk_aversion: 1.0 - p.alpha,
        rho: p.rho,
        x0: p.x0,
        premium: lrr_persistence_premium(&p)?,
    };
    let matched_volatility = if match_vol {
        let (sigma_iid, premium) = match_longrun_volatility(&p)?;
        Some(MatchedVol { sigma_iid, premium })
    } else {
        None
    };
    let matched_dpos = match match_dpos {
        Some(target) => {
            let alpha = match_rohde_yu(target, p.rho, p.beta, 10.0, 5.0)?;
            Some(MatchedDpos { target, alpha, risk_aversion: 1.0 - alpha, premium: lrr_persistence_premium(&p.with_alpha(alpha))? })
        }
        None => None,
    };
    let report = LrrOut {
        row,
        timing_premium: lrr_timing_premium(&p)?,
        timing_premium_squared_loading: lrr_timing_premium_squared(&p)?,
        matched_volatility,
        matched_dpos,
    };
    emit(&to_json(&report), out)
}

fn reproduce_cmd(target: &str, out: Option<&Path>) -> Result<(), Failure> {
    let targets: Vec<Target> = if target == "all" {
        Target::ALL.to_vec()
    } else {
        vec![target.parse().map_err(|_| {
            let names: Vec<&str> = Target::ALL.iter().map(|t| t.name()).collect();
            Failure::Usage(format!("unknown target {target:?}; expected one of {} or all", names.join(", ")))
        })?]
    };
    let results: Vec<Reproduction> = targets.into_iter().map(reproduce).collect::<Result<_, _>>()?;
    let mut failed = 0;
    for r in &results {
        eprintln!("{}: {}", r.target, if r.passed() { "PASS" } else { "FAIL" });
        for c in &r.checks {
            eprintln!(
                "  {} {}: observed {} expected {} tol {}",
                if c.passed { "ok  " } else { "MISS" },
                c.name,
                output::fmt_num(c.observed),
                c.expected,
                c.tol
            );
            failed += usize::from(!c.passed);
        }
    }
    let text = if results.len() == 1 { to_json(&results[0]) } else { to_json(&results) };
    emit(&text, out)?;
    if failed > 0 {
        return Err(Failure::Compute(format!("{failed} reproduce check(s) outside tolerance")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    check_out(out)?;
    match cli.command {
        Command::Eval { model, lottery } => {
            let m = config::load_model(&model)?.model()?;
            let d = load_lottery(&lottery)?;
            let report = EvalOut { value: kp_evaluate(&m, &d)?, present_equivalent: present_equivalent(&m, &d).ok(), horizon: d.horizon() };
            emit(&to_json(&report), out)
        }
        Command::Compare { first, second } => {
            let (a, b) = (load_lottery(&first)?, load_lottery(&second)?);
            let c = compare_info(&a, &b)?;
            let (witness, marginals_differ) = match &c {
                Comparison::MoreInformative(w) | Comparison::LessInformative(w) | Comparison::Equal { forward: w, .. } => {
                    (Some(w), None)
                }
                Comparison::Incomparable { marginals_differ } => (None, Some(*marginals_differ)),
            };
            let report = CompareOut {
                result: c.label(),
                witness: witness.map(|w| w.g.clone()),
                residual: witness.map(|w| w.residual),
                marginals_differ,
            };
            emit(&to_json(&report), out)
        }
        Command::Premium(PremiumCmd::Persistence(a)) => premium(PremiumKind::Persistence, a, out),
        Command::Premium(PremiumCmd::Timing(a)) => premium(PremiumKind::Timing, a, out),
        Command::Measure(MeasureCmd::Er { model, x, y }) => {
            let m = config::load_model(&model)?.model()?;
            emit(&to_json(&serde_json::json!({ "er": m.er(x, y)? })), out)
        }
        Command::Measure(MeasureCmd::Dpos { model, hi, lo }) => {
            let m = config::load_model(&model)?.model()?;
            emit(&to_json(&serde_json::json!({ "dpos": dpos_measure(&m, hi, lo)? })), out)
        }
        Command::Measure(MeasureCmd::Classify { model, grid_lo, grid_hi, grid_n }) => {
            let cfg = config::load_model(&model)?;
            if !(grid_lo > 0.0 && grid_hi > grid_lo && grid_n >= 2) {
                return Err(Failure::Usage("grid needs 0 < lo < hi and n >= 2".into()));
            }
            let c = classify(&cfg.phi()?, cfg.beta, &Grid { lo: grid_lo, hi: grid_hi, n: grid_n });
            emit(&to_json(&c), out)
        }
        Command::Calibrate(CalibrateCmd::Lrr { params, match_vol, match_dpos }) => lrr(params, match_vol, match_dpos, out),
        Command::Tax(TaxCmd::Optimize { params, curve }) => {
            let p: TaxParams = match &params {
                Some(path) => config::parse(path)?,
                None => TaxParams::default(),
            };
            check_out(curve.as_deref())?;
            let opt = optimize_tau(&p)?;
            if let Some(path) = &curve {
                let rows: Vec<Vec<f64>> = opt.curve.iter().map(|&(t, w)| vec![t, w]).collect();
                write_csv(path, &["tau", "welfare"], &rows)?;
            }
            emit(&to_json(&TaxOut { tau_star: opt.tau_star, welfare: opt.welfare, params: p }), out)
        }
        Command::Variational(VariationalCmd::Check { model, lottery }) => {
            let m = config::load_model(&model)?.model()?;
            let d = load_lottery(&lottery)?;
            let nodes = duality_report(&m, &d)?;
            let gap = nodes.iter().map(|n| (n.recursive - n.variational).abs()).fold(0.0, f64::max);
            emit(&to_json(&VariationalOut { gap, nodes }), out)
        }
        Command::Horizon(HorizonCmd::Compare { model, dist, rho }) => {
            let cfg = config::load_model(&model)?;
            let phi = cfg.phi()?;
            let file: DistFile =
                serde_json::from_str(&config::read(&dist)?).map_err(|e| Failure::Usage(format!("{}: {e}", dist.display())))?;
            let ell = Distribution::new(file.points)?;
            let iteration = |kind| -> Result<HorizonValue, Failure> {
                Ok(value_iterate(&phi, rho, cfg.beta, &StationaryLottery::new(kind, ell.clone(), file.c0)?, DEFAULT_TOL)?)
            };
            let iid_iteration = iteration(StationaryKind::Iid)?;
            let corr_iteration = iteration(StationaryKind::PerfectlyCorrelated)?;
            let c = compare_iid_corr(&phi, rho, cfg.beta, &ell, file.c0)?;
            let report = HorizonOut { iid_weakly_preferred: c.iid_weakly_preferred, iid: c.iid, corr: c.corr, iid_iteration, corr_iteration };
            emit(&to_json(&report), out)
        }
        Command::Suite(SuiteCmd::Theorem1 { model, n, seed, converse, mixed_pairs }) => {
            let phi = config::load_model(&model)?.phi()?;
            let report = if converse {
                theorem1_converse(&phi)?
            } else {
                theorem1_forward_with(&phi, n, seed, if mixed_pairs { ChainMode::MixedPairs } else { ChainMode::SinglePair })
            };
            emit(&to_json(&report), out)
        }
        Command::Suite(SuiteCmd::Prop1 { model, n, seed }) => {
            let cfg = config::load_model(&model)?;
            emit(&to_json(&prop1_suite(&cfg.phi()?, cfg.beta, n, seed)?), out)
        }
        Command::Reproduce { target } => reproduce_cmd(&target, out),
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CORRPREF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("CORRPREF_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Compute(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("usage: corrpref <COMMAND> [OPTIONS]; see corrpref --help");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
