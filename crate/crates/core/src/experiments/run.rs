use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scenario};
use super::estimate::{estimate_mean_wp, fit_rate, RateFit, Source};
use super::svg::{loglog_svg, Series};
use crate::bounds::{
    bound_finite_dim, bound_gaussian, bound_markov, effective_dimension, markov_leading_ratio, minimize_iid_integral,
    CoveringCurve, DimensionProfile, GaussianBoundInputs, MarkovBoundInputs, LEADING_CONSTANT,
};
use crate::gaussian::{
    check_doubling, empirical_vs_quantizer, small_ball_curve, small_ball_table, GaussianProcessModel,
    QuantizerComparison, SmallBallEstimate,
};
use crate::markov::{check_variance_decay, metropolis_kernel, spectral_gap_finite, MarkovModel};
use crate::measures::io::read_measure_csv;
use crate::measures::{derive_seed, DiscreteMeasure, MetricSpace, Sampler, SamplerKind};
use crate::transport::exact_wp;
use crate::{Error, Result};

/// Seed offsets for the streams that are not replicates.
const REFERENCE_STREAM: u64 = u64::MAX;
const SMALL_BALL_STREAM: u64 = u64::MAX - 1;
const PROXY_STREAM_A: u64 = u64::MAX - 2;
const PROXY_STREAM_B: u64 = u64::MAX - 3;
const QUANTIZER_STREAM: u64 = u64::MAX - 4;

/// Radii `0.2 * 2^{k/8}` for the small-ball table, `k = 0..=40`.
fn small_ball_radii() -> Vec<f64> {
    (0..=40).map(|k| 0.2 * 2f64.powf(k as f64 / 8.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// The scenario's analytic bound; `None` outside its regime.
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_note: Option<String>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Leading constant of the i.i.d. and Markov bounds.
    pub leading: f64,
    /// Constant of the Gaussian bound.
    pub c_g: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub scenario: String,
    pub config_hash: String,
    pub version: String,
    pub p: f64,
    pub replicates: usize,
    pub seed: u64,
    pub constants: Constants,
    pub rows: Vec<RateRow>,
    /// Fit of `log mean` on `log n`; absent when the grid is too short or a
    /// mean is zero.
    pub fit: Option<RateFit>,
    /// Grid sizes where the mean exceeds an applicable bound.
    pub violations: Vec<usize>,
    /// Scenario specific diagnostics.
    pub details: serde_json::Value,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

impl RateReport {
    /// True when no grid size has an applicable bound.
    pub fn inapplicable_only(&self) -> bool {
        self.rows.iter().all(|r| r.bound.is_none())
    }

    /// `n,mean,stderr,bound` with an empty field for a missing bound.
    pub fn results_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Line {
            n: usize,
            mean: f64,
            stderr: f64,
            bound: Option<f64>,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(Line { n: r.n, mean: r.mean, stderr: r.stderr, bound: r.bound })
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralBound {
    pub n: usize,
    /// Minimizing `t`.
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IidDetails {
    pub diameter: f64,
    pub reference_size: usize,
    pub profile: Option<DimensionProfile>,
    /// Number of steps of the greedy covering curve of the reference.
    pub covering_steps: usize,
    /// Minimized integral bound with the greedy covering curve.
    pub integral_bounds: Vec<IntegralBound>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovDetails {
    pub states: usize,
    pub diameter: f64,
    pub lambda: f64,
    pub poincare_constant: f64,
    pub radon_nikodym_norm: f64,
    pub r: f64,
    pub profile: DimensionProfile,
    pub effective_dimension: f64,
    /// Signed leading ratio; the bound uses its absolute value.
    pub leading_ratio: f64,
    /// Decay rate fitted from `Var_pi P^k x`, when the coordinate is not constant under `P`.
    pub variance_decay_lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianRow {
    pub n: usize,
    pub psi_inv_log_n: Option<f64>,
    /// `mean / psi_inv_log_n`.
    pub ratio: Option<f64>,
    pub quantizer: Option<QuantizerComparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRefinement {
    pub grid: usize,
    pub sigma_hat: f64,
    /// `psi_hat(1)` on the configured grid and on the refined one.
    pub psi_at_one: f64,
    pub psi_at_one_refined: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianDetails {
    pub sigma_hat: f64,
    pub kappa_hat: Option<f64>,
    pub t0_hat: Option<f64>,
    pub log_n_threshold: Option<f64>,
    pub small_ball: Vec<SmallBallEstimate>,
    pub per_n: Vec<GaussianRow>,
    /// Fit of the ratio `mean / psi^{-1}(log n)` against `n`.
    pub ratio_fit: Option<RateFit>,
    /// `W_2` between two independent references of `proxy_bias_size` paths.
    pub proxy_bias: f64,
    pub refinement: GridRefinement,
}

/// Computes the report without writing anything.
pub fn compute_report(config: &ExperimentConfig) -> Result<RateReport> {
    config.validate()?;
    let (rows, details) = match &config.scenario {
        Scenario::IidCube { dim, reference_size } => {
            let sampler = Sampler::uniform_cube(*dim, config.seed)?;
            let reference =
                sampler.with_seed(derive_seed(config.seed, REFERENCE_STREAM)).sample_empirical(*reference_size)?;
            let profile = match &config.profile {
                Some(p) => p.clone(),
                None => DimensionProfile::new(1.0, *dim as f64)?,
            };
            iid_rows(config, &sampler, &reference, (*dim as f64).sqrt(), Some(profile))?
        }
        Scenario::IidCustom { law_csv, metric } => {
            let law = read_measure_csv(fs::File::open(law_csv)?, *metric)?;
            let law = law.rescaled(1.0)?;
            let sampler = Sampler::new(SamplerKind::FiniteSupport(law.clone()), config.seed)?;
            let d = law.space().diameter().value;
            iid_rows(config, &sampler, &law, d, config.profile.clone())?
        }
        Scenario::MarkovFinite { states, target, proposal_scale, iid_kernel, initial_state, r } => {
            let weights = target.weights(*states)?;
            let xs: Vec<Vec<f64>> = (0..*states).map(|i| vec![i as f64 / (*states - 1) as f64]).collect();
            let space = Arc::new(MetricSpace::euclidean(xs)?);
            let mut model = if *iid_kernel {
                let total: f64 = weights.iter().sum();
                MarkovModel::iid(space, weights.iter().map(|w| w / total).collect())?
            } else {
                metropolis_kernel(space, &weights, *proposal_scale)?
            };
            if let Some(s) = initial_state {
                let mut nu = vec![0.0; *states];
                nu[*s] = 1.0;
                model = model.with_initial(nu)?;
            }
            markov_rows(config, &model, *r)?
        }
        Scenario::GaussianKl {
            truncation,
            grid,
            reference_size,
            small_ball_mc,
            quantizer,
            lloyd_iterations,
            proxy_bias_size,
        } => {
            let model = GaussianProcessModel::brownian_kl(*truncation, *grid)?;
            gaussian_rows(
                config,
                &model,
                *reference_size,
                *small_ball_mc,
                quantizer.then_some(*lloyd_iterations),
                *proxy_bias_size,
            )?
        }
    };
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let fit =
        if rows.len() >= 3 && means.iter().all(|&m| m > 0.0) { Some(fit_rate(&config.n_grid, &means)?) } else { None };
    let violations: Vec<usize> = rows.iter().filter(|r| r.bound.is_some_and(|b| r.mean > b)).map(|r| r.n).collect();
    for n in &violations {
        log::error!("empirical mean exceeds the analytic bound at n = {n}");
    }
    Ok(RateReport {
        scenario: config.scenario.name().to_string(),
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        p: config.p,
        replicates: config.replicates,
        seed: config.seed,
        constants: Constants { leading: LEADING_CONSTANT, c_g: config.c_g },
        rows,
        fit,
        violations,
        details,
        output_dir: None,
    })
}

/// Runs the experiment on the current rayon pool and writes `results.csv`,
/// `report.json`, `plot.svg` and `config.json` under
/// `output_dir/<config hash>/`. An existing directory is never reused: later
/// runs go to `<hash>-2`, `<hash>-3` and so on.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    let mut report = compute_report(config)?;
    let dir = fresh_dir(&config.output_dir, &report.config_hash)?;
    write_artifacts(&report, config, &dir)?;
    report.output_dir = Some(dir);
    Ok(report)
}

/// [`run_experiment`] on a pool of `jobs` threads.
pub fn run_experiment_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<RateReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Experiment(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

fn fresh_dir(root: &Path, hash: &str) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    for k in 1.. {
        let name = if k == 1 { hash.to_string() } else { format!("{hash}-{k}") };
        let dir = root.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Writes the four artifacts into `dir`.
pub fn write_artifacts(report: &RateReport, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::write(dir.join("results.csv"), report.results_csv()?)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;
    fs::write(dir.join("plot.svg"), plot(report))?;
    Ok(())
}

fn plot(report: &RateReport) -> String {
    let mut series = vec![Series {
        label: "mean W_p".into(),
        points: report.rows.iter().map(|r| (r.n as f64, r.mean, Some(r.stderr))).collect(),
        markers: true,
        color: "black",
    }];
    let bound: Vec<_> = report.rows.iter().filter_map(|r| r.bound.map(|b| (r.n as f64, b, None))).collect();
    if !bound.is_empty() {
        series.push(Series { label: "bound".into(), points: bound, markers: false, color: "firebrick" });
    }
    if let Ok(d) = serde_json::from_value::<IidDetails>(report.details.clone()) {
        series.push(Series {
            label: "integral bound".into(),
            points: d.integral_bounds.iter().map(|b| (b.n as f64, b.value, None)).collect(),
            markers: false,
            color: "steelblue",
        });
    }
    if let Ok(d) = serde_json::from_value::<GaussianDetails>(report.details.clone()) {
        series.push(Series {
            label: "psi^-1(log n)".into(),
            points: d.per_n.iter().filter_map(|g| g.psi_inv_log_n.map(|v| (g.n as f64, v, None))).collect(),
            markers: false,
            color: "seagreen",
        });
        series.push(Series {
            label: "quantizer".into(),
            points: d
                .per_n
                .iter()
                .filter_map(|g| g.quantizer.as_ref().map(|q| (g.n as f64, q.delta_hat, None)))
                .collect(),
            markers: false,
            color: "darkorange",
        });
    }
    let title = format!("{} (p = {}, {} replicates)", report.scenario, report.p, report.replicates);
    loglog_svg(&title, "n", "W_p", &series)
}

fn estimate_rows(
    config: &ExperimentConfig,
    source: Source<'_>,
    reference: &DiscreteMeasure,
    mut bound: impl FnMut(usize) -> Result<f64>,
) -> Result<Vec<RateRow>> {
    config
        .n_grid
        .iter()
        .map(|&n| {
            let e = estimate_mean_wp(source, reference, config.p, n, config.replicates, config.seed)?;
            let (bound, bound_note) = match bound(n) {
                Ok(b) => (Some(b), None),
                Err(e) if e.is_inapplicable() || matches!(e, Error::Range(_)) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            log::info!("n = {n}: mean {} ± {}, bound {bound:?}", e.mean, e.stderr);
            Ok(RateRow { n, mean: e.mean, stderr: e.stderr, bound, bound_note, failures: e.failures })
        })
        .collect()
}

fn iid_rows(
    config: &ExperimentConfig,
    sampler: &Sampler,
    reference: &DiscreteMeasure,
    d: f64,
    profile: Option<DimensionProfile>,
) -> Result<(Vec<RateRow>, serde_json::Value)> {
    let curve = CoveringCurve::greedy(reference.space(), reference.support())?;
    let integral_bounds = config
        .n_grid
        .iter()
        .map(|&n| {
            let (t, value) = minimize_iid_integral(&curve, d, config.p, n as u64)?;
            Ok(IntegralBound { n, t, value })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = estimate_rows(config, Source::Sampler(sampler), reference, |n| match &profile {
        Some(prof) => bound_finite_dim(prof, d, config.p, n as u64),
        None => Ok(integral_bounds.iter().find(|b| b.n == n).expect("bound per n").value),
    })?;
    let steps = match &curve {
        CoveringCurve::Step { deltas, .. } => deltas.len(),
        CoveringCurve::PowerLaw { .. } => 0,
    };
    let details =
        IidDetails { diameter: d, reference_size: reference.len(), profile, covering_steps: steps, integral_bounds };
    Ok((rows, serde_json::to_value(details)?))
}

fn markov_rows(config: &ExperimentConfig, model: &MarkovModel, r: f64) -> Result<(Vec<RateRow>, serde_json::Value)> {
    let pi = model.invariant_measure()?;
    let d = model.space().diameter().value;
    let gap = spectral_gap_finite(model)?;
    let rn = model.radon_nikodym_norm(r)?;
    let inputs = MarkovBoundInputs::new(1.0, gap.lambda, rn, r)?;
    let profile = match &config.profile {
        Some(p) => p.clone(),
        None => {
            let curve = CoveringCurve::greedy(model.space(), &(0..model.len()).collect::<Vec<_>>())?;
            DimensionProfile::new(curve.fit_k_e(1.0, d)?, 1.0)?
        }
    };
    let xs: Vec<f64> = (0..model.len()).map(|i| model.space().point(i)[0]).collect();
    let variance_decay_lambda = check_variance_decay(model, &xs, 500).ok().map(|v| v.lambda);
    let rows =
        estimate_rows(config, Source::Chain(model), &pi, |n| bound_markov(&profile, d, config.p, n as u64, &inputs))?;
    let details = MarkovDetails {
        states: model.len(),
        diameter: d,
        lambda: gap.lambda,
        poincare_constant: gap.c_p,
        radon_nikodym_norm: rn,
        r,
        effective_dimension: effective_dimension(profile.alpha, r),
        leading_ratio: markov_leading_ratio(profile.alpha, r, config.p),
        profile,
        variance_decay_lambda,
    };
    Ok((rows, serde_json::to_value(details)?))
}

fn gaussian_rows(
    config: &ExperimentConfig,
    model: &GaussianProcessModel,
    reference_size: usize,
    small_ball_mc: usize,
    lloyd_iterations: Option<usize>,
    proxy_bias_size: usize,
) -> Result<(Vec<RateRow>, serde_json::Value)> {
    let seed = config.seed;
    let reference = model.sample_empirical(reference_size, derive_seed(seed, REFERENCE_STREAM))?;
    let radii = small_ball_radii();
    let small_ball = small_ball_curve(model, &radii, small_ball_mc, derive_seed(seed, SMALL_BALL_STREAM))?;
    let table = small_ball_table(&small_ball)?;
    let (table_ts, table_psi) = match &table {
        crate::bounds::SmallBall::Table { ts, values } => (ts.clone(), values.clone()),
        _ => unreachable!("small_ball_table returns a table"),
    };
    let doubling = check_doubling(&table_ts, &table_psi).ok();
    let inputs = doubling.as_ref().and_then(|dc| {
        let mut g =
            GaussianBoundInputs::new(model.sigma_hat, dc.kappa_hat * (1.0 + 1e-9), dc.t0_hat, table.clone()).ok()?;
        g.c_g = config.c_g;
        Some(g)
    });
    let log_n_threshold = inputs.as_ref().and_then(|g| g.log_n_threshold().ok());
    let sampler = model.sampler(seed)?;
    let rows = estimate_rows(config, Source::Sampler(&sampler), &reference, |n| match &inputs {
        Some(g) => bound_gaussian(g, n as u64),
        None => Err(Error::InapplicableRegime("no doubling constant above 1 from the small-ball table".into())),
    })?;
    let per_n = rows
        .iter()
        .map(|row| {
            let psi_inv_log_n = table.inverse((row.n as f64).ln()).ok();
            let quantizer = lloyd_iterations.map(|it| {
                empirical_vs_quantizer(
                    model,
                    &reference,
                    row.n,
                    &table,
                    it,
                    derive_seed(derive_seed(seed, QUANTIZER_STREAM), row.n as u64),
                )
            });
            let quantizer = match quantizer {
                Some(Err(Error::Range(_))) => None,
                Some(q) => Some(q?),
                None => None,
            };
            Ok(GaussianRow { n: row.n, psi_inv_log_n, ratio: psi_inv_log_n.map(|v| row.mean / v), quantizer })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio_fit = {
        let pts: Vec<(usize, f64)> = per_n.iter().filter_map(|g| g.ratio.map(|r| (g.n, r))).collect();
        let (ns, rs): (Vec<usize>, Vec<f64>) = pts.into_iter().unzip();
        fit_rate(&ns, &rs).ok()
    };
    let proxy_a = model.sample_empirical(proxy_bias_size, derive_seed(seed, PROXY_STREAM_A))?;
    let proxy_b = model.sample_empirical(proxy_bias_size, derive_seed(seed, PROXY_STREAM_B))?;
    let proxy_bias = exact_wp(&proxy_a, &proxy_b, 2.0)?.0;
    let refined = GaussianProcessModel::brownian_kl(model.truncation, 2 * model.grid)?;
    let mc = (small_ball_mc / 10).max(1);
    let at_one = small_ball_curve(model, &[1.0], mc, derive_seed(seed, SMALL_BALL_STREAM))?[0].psi_hat;
    let at_one_refined = small_ball_curve(&refined, &[1.0], mc, derive_seed(seed, SMALL_BALL_STREAM))?[0].psi_hat;
    let details = GaussianDetails {
        sigma_hat: model.sigma_hat,
        kappa_hat: doubling.as_ref().map(|d| d.kappa_hat),
        t0_hat: doubling.as_ref().map(|d| d.t0_hat),
        log_n_threshold,
        small_ball,
        per_n,
        ratio_fit,
        proxy_bias,
        refinement: GridRefinement {
            grid: refined.grid,
            sigma_hat: refined.sigma_hat,
            psi_at_one: at_one,
            psi_at_one_refined: at_one_refined,
        },
    };
    Ok((rows, serde_json::to_value(details)?))
}
