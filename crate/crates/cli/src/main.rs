use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wrates::bounds::{
    bound_finite_dim, bound_gaussian, bound_iid_integral, bound_markov, bound_markov_unbounded, minimize_iid_integral,
    CoveringCurve, DimensionProfile, GaussianBoundInputs, MarkovBoundInputs, SmallBall,
};
use wrates::experiments::{run_experiment_with_jobs, ExperimentConfig};
use wrates::gaussian::{check_doubling, small_ball_curve, GaussianProcessModel};
use wrates::markov::{check_variance_decay, metropolis_on_grid, spectral_gap_finite, MarkovModel};
use wrates::measures::io::{read_measure_csv, read_space_csv};
use wrates::measures::{DiscreteMeasure, MetricKind, MetricSpace};
use wrates::multiscale::{build_partition_tree, tree_transport_bound, tree_transport_plan};
use wrates::transport::{brute_force_wp, exact_wp, wp_1d};

#[derive(Parser)]
#[command(name = "wrates", version, about = "Wasserstein convergence rates: exact transport, bounds and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Euclidean,
    SupNorm,
}

impl From<Metric> for MetricKind {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::SupNorm => MetricKind::SupNorm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Brute,
    OneD,
}

#[derive(Subcommand)]
enum Command {
    /// Exact W_p between two measure CSVs (columns x1,...,xd,weight).
    Wp {
        mu: PathBuf,
        nu: PathBuf,
        #[arg(short, long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t = Metric::Euclidean)]
        metric: Metric,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Write the optimal plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Evaluate an analytic bound and print {inputs, value, applicable}.
    Bound {
        #[command(subcommand)]
        bound: BoundCommand,
    },
    /// Multiscale tree bound and tree plan cost next to exact W_p.
    TreeBound {
        mu: PathBuf,
        nu: PathBuf,
        #[arg(short, long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t = Metric::Euclidean)]
        metric: Metric,
        /// Finest level of the tree.
        #[arg(long, default_value_t = 6)]
        levels: i32,
    },
    /// Run a Monte Carlo experiment from a TOML or JSON config.
    Experiment {
        config: PathBuf,
        /// Worker threads for replicates.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Finite Markov chain tools.
    Markov {
        #[command(subcommand)]
        command: MarkovCommand,
    },
    /// Gaussian process tools.
    Gaussian {
        #[command(subcommand)]
        command: GaussianCommand,
    },
}

#[derive(clap::Args)]
struct ProfileArgs {
    #[arg(long)]
    k_e: f64,
    #[arg(long)]
    alpha: f64,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Integral bound with a power-law covering curve; minimized over t when --t is absent.
    IidIntegral {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        d: f64,
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        n: u64,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Closed-form bound for finite-dimensional spaces (needs alpha > 2p).
    FiniteDim {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        d: f64,
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        n: u64,
    },
    /// Bound for reversible chains on a bounded space.
    Markov {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        d: f64,
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        n: u64,
    },
    /// Bound for chains on unbounded spaces from moments of pi.
    MarkovUnbounded {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        n: u64,
        #[arg(long, default_value_t = 2.0)]
        zeta: f64,
        /// Moments as theta:M pairs, comma separated.
        #[arg(long, value_delimiter = ',')]
        moments: Vec<String>,
    },
    /// Gaussian bound with psi(t) = scale * t^-exponent.
    Gaussian {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        psi_scale: f64,
        #[arg(long)]
        psi_exponent: f64,
        #[arg(long, default_value_t = 1.0)]
        c_g: f64,
        #[arg(short, long)]
        n: u64,
    },
}

#[derive(clap::Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    lambda: f64,
    /// ‖d nu / d pi‖_r.
    #[arg(long)]
    rn_norm: f64,
    /// Exponent r; `inf` is accepted.
    #[arg(long)]
    r: f64,
}

#[derive(Subcommand)]
enum MarkovCommand {
    /// Spectral gap of a kernel CSV, or of a Metropolis chain on a grid of [0, 1].
    Gap {
        /// Kernel rows followed by a row for pi, no header.
        #[arg(long, requires = "states")]
        kernel: Option<PathBuf>,
        /// State coordinates (space CSV).
        #[arg(long)]
        states: Option<PathBuf>,
        /// Number of grid states for the Metropolis chain.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Gaussian target on the grid; uniform when absent.
        #[arg(long)]
        target_mean: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        target_sd: f64,
        #[arg(long, default_value_t = 1)]
        proposal_scale: usize,
    },
}

#[derive(Subcommand)]
enum GaussianCommand {
    /// Monte Carlo small-ball function of truncated Brownian motion.
    Smallball {
        #[arg(long, default_value_t = 64)]
        truncation: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 100_000)]
        mc: usize,
        /// Radii, comma separated; default 0.3 * 2^(k/4), k = 0..=16.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Outcome {
    Ok,
    Inapplicable,
}

fn read_measure(path: &Path, metric: Metric) -> Result<DiscreteMeasure> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_measure_csv(f, metric.into())?)
}

fn print(v: &Value) {
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("JSON value"));
}

fn bound_record(name: &str, inputs: Value, value: wrates::Result<f64>) -> Result<Outcome> {
    match value {
        Ok(v) => {
            print(&json!({ "bound": name, "inputs": inputs, "value": v, "applicable": true }));
            Ok(Outcome::Ok)
        }
        Err(e) if e.is_inapplicable() => {
            print(
                &json!({ "bound": name, "inputs": inputs, "value": null, "applicable": false, "reason": e.to_string() }),
            );
            Ok(Outcome::Inapplicable)
        }
        Err(e) => Err(e.into()),
    }
}

fn chain_inputs(c: &ChainArgs) -> wrates::Result<MarkovBoundInputs> {
    MarkovBoundInputs::new(c.c, c.lambda, c.rn_norm, c.r)
}

fn bound(cmd: BoundCommand) -> Result<Outcome> {
    match cmd {
        BoundCommand::IidIntegral { profile, d, p, n, t } => {
            let curve = CoveringCurve::power_law(profile.k_e, profile.alpha, d)?;
            let (t, value) = match t {
                Some(t) => (t, bound_iid_integral(&curve, d, p, n, t)),
                None => match minimize_iid_integral(&curve, d, p, n) {
                    Ok((t, v)) => (t, Ok(v)),
                    Err(e) => (f64::NAN, Err(e)),
                },
            };
            let inputs = json!({ "k_e": profile.k_e, "alpha": profile.alpha, "d": d, "p": p, "n": n, "t": t });
            bound_record("iid-integral", inputs, value)
        }
        BoundCommand::FiniteDim { profile, d, p, n } => {
            let prof = DimensionProfile::new(profile.k_e, profile.alpha)?;
            let inputs = json!({ "k_e": profile.k_e, "alpha": profile.alpha, "d": d, "p": p, "n": n });
            bound_record("finite-dim", inputs, bound_finite_dim(&prof, d, p, n))
        }
        BoundCommand::Markov { profile, chain, d, p, n } => {
            let prof = DimensionProfile::new(profile.k_e, profile.alpha)?;
            let m = chain_inputs(&chain)?;
            let inputs = json!({ "profile": prof, "chain": m, "d": d, "p": p, "n": n });
            bound_record("markov", inputs, bound_markov(&prof, d, p, n, &m))
        }
        BoundCommand::MarkovUnbounded { profile, chain, p, n, zeta, moments } => {
            let prof = DimensionProfile::new(profile.k_e, profile.alpha)?;
            let mut m = chain_inputs(&chain)?;
            m.zeta = zeta;
            for pair in &moments {
                let (a, b) = pair.split_once(':').with_context(|| format!("moment `{pair}` is not theta:M"))?;
                m.moments.push((a.trim().parse()?, b.trim().parse()?));
            }
            m.validate()?;
            let inputs = json!({ "profile": prof, "chain": m, "p": p, "n": n });
            match bound_markov_unbounded(&prof, p, n, &m) {
                Ok((v, within)) => {
                    print(&json!({ "bound": "markov-unbounded", "inputs": inputs, "value": v, "applicable": within }));
                    Ok(if within { Outcome::Ok } else { Outcome::Inapplicable })
                }
                Err(e) => bound_record("markov-unbounded", inputs, Err(e)),
            }
        }
        BoundCommand::Gaussian { sigma, kappa, t0, psi_scale, psi_exponent, c_g, n } => {
            let psi = SmallBall::Power { scale: psi_scale, exponent: psi_exponent };
            let mut g = GaussianBoundInputs::new(sigma, kappa, t0, psi)?;
            g.c_g = c_g;
            g.validate()?;
            let inputs = json!({ "inputs": g, "n": n, "log_n_threshold": g.log_n_threshold()? });
            bound_record("gaussian", inputs, bound_gaussian(&g, n))
        }
    }
}

fn wp(mu: &Path, nu: &Path, p: f64, metric: Metric, method: Method, plan: Option<&Path>) -> Result<Outcome> {
    let (a, b) = (read_measure(mu, metric)?, read_measure(nu, metric)?);
    let value = match method {
        Method::Exact => {
            let (v, pl) = exact_wp(&a, &b, p)?;
            if let Some(path) = plan {
                pl.write_csv(File::create(path)?)?;
            }
            v
        }
        Method::Brute => brute_force_wp(&a, &b, p)?,
        Method::OneD => wp_1d(&a, &b, p)?,
    };
    print(&json!({ "p": p, "value": value, "mu_atoms": a.len(), "nu_atoms": b.len() }));
    Ok(Outcome::Ok)
}

fn tree_bound(mu: &Path, nu: &Path, p: f64, metric: Metric, levels: i32) -> Result<Outcome> {
    let (a, b) = (read_measure(mu, metric)?, read_measure(nu, metric)?);
    if a.space().dim() != b.space().dim() {
        bail!("measures have different dimensions");
    }
    let points: Vec<Vec<f64>> =
        (0..a.len()).map(|i| a.atom(i).to_vec()).chain((0..b.len()).map(|i| b.atom(i).to_vec())).collect();
    let space = Arc::new(MetricSpace::from_points(points, metric.into())?);
    let all: Vec<usize> = (0..space.len()).collect();
    let am = DiscreteMeasure::new(space.clone(), (0..a.len()).collect(), a.weights().to_vec())?;
    let bm = DiscreteMeasure::new(space.clone(), (a.len()..space.len()).collect(), b.weights().to_vec())?;
    let d = space.diameter().value.max(f64::MIN_POSITIVE);
    let tree = build_partition_tree(space, &all, d, 1, levels.max(2))?;
    let tb = tree_transport_bound(&am, &bm, &tree, p, d)?;
    let plan = tree_transport_plan(&am, &bm, &tree, p)?;
    let exact = exact_wp(&am, &bm, p)?.0;
    print(&json!({ "p": p, "d": d, "exact": exact, "plan_cost": plan.cost, "bound": tb }));
    Ok(Outcome::Ok)
}

fn experiment(config: &Path, jobs: usize, output_dir: Option<PathBuf>) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let report = run_experiment_with_jobs(&cfg, jobs)?;
    let dir = report.output_dir.clone().unwrap_or_default();
    print(&json!({
        "output_dir": dir,
        "config_hash": report.config_hash,
        "fit": report.fit,
        "rows": report.rows,
        "violations": report.violations,
    }));
    if !report.violations.is_empty() {
        bail!("empirical mean exceeds the analytic bound at n = {:?}", report.violations);
    }
    Ok(if report.inapplicable_only() { Outcome::Inapplicable } else { Outcome::Ok })
}

fn markov(cmd: MarkovCommand) -> Result<Outcome> {
    let MarkovCommand::Gap { kernel, states, grid, target_mean, target_sd, proposal_scale } = cmd;
    let model = match (kernel, states) {
        (Some(k), Some(s)) => {
            let space = Arc::new(read_space_csv(std::io::BufReader::new(File::open(&s)?))?);
            MarkovModel::read_kernel_csv(File::open(&k)?, space, true)?
        }
        _ => match target_mean {
            Some(m) => {
                metropolis_on_grid(grid, |x| (-(x - m).powi(2) / (2.0 * target_sd * target_sd)).exp(), proposal_scale)?
            }
            None => metropolis_on_grid(grid, |_| 1.0, proposal_scale)?,
        },
    };
    let gap = spectral_gap_finite(&model)?;
    let f: Vec<f64> = (0..model.len())
        .map(|i| if model.space().has_coordinates() { model.space().point(i)[0] } else { i as f64 })
        .collect();
    let decay = check_variance_decay(&model, &f, 500).ok();
    print(&json!({
        "states": model.len(),
        "lambda": gap.lambda,
        "poincare_constant": gap.c_p,
        "second_eigenvalue": gap.second_eigenvalue,
        "variance_decay_lambda": decay.map(|d| d.lambda),
    }));
    Ok(Outcome::Ok)
}

fn gaussian(cmd: GaussianCommand) -> Result<Outcome> {
    let GaussianCommand::Smallball { truncation, grid, mc, t, seed } = cmd;
    let model = GaussianProcessModel::brownian_kl(truncation, grid)?;
    let ts = if t.is_empty() { (0..=16).map(|k| 0.3 * 2f64.powf(k as f64 / 4.0)).collect() } else { t };
    let est = small_ball_curve(&model, &ts, mc, seed)?;
    let psi: Vec<f64> = est.iter().map(|e| e.psi_hat).collect();
    let doubling = check_doubling(&ts, &psi).ok();
    let rows: Vec<Value> = est
        .iter()
        .map(|e| json!({ "t": e.t, "psi_hat": e.psi_hat.is_finite().then_some(e.psi_hat), "stderr": e.stderr.is_finite().then_some(e.stderr), "hits": e.hits }))
        .collect();
    print(&json!({ "sigma_hat": model.sigma_hat, "mc": mc, "estimates": rows, "doubling": doubling }));
    Ok(Outcome::Ok)
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Wp { mu, nu, p, metric, method, plan } => wp(&mu, &nu, p, metric, method, plan.as_deref()),
        Command::Bound { bound: b } => bound(b),
        Command::TreeBound { mu, nu, p, metric, levels } => tree_bound(&mu, &nu, p, metric, levels),
        Command::Experiment { config, jobs, output_dir } => experiment(&config, jobs, output_dir),
        Command::Markov { command } => markov(command),
        Command::Gaussian { command } => gaussian(command),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Inapplicable) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
