use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand, ValueEnum};
use drpkit_core::benchmarks::{
    generate_conjugate, generate_toy, uninformative_sampler, ConjugateConfig, ToyCase, ToyConfig,
};
use drpkit_core::coverage::{
    fit_normalization, hpd_test, posterior_stream, run_coverage, CoverageCurve, CoverageError,
    CoverageSettings, DataShift, Euclidean, JointSampleSet, MethodContext, MethodRegistry,
    MetricRegistry, NormalizationMap, PolicyContext, PolicyRegistry, PriorDraw, SampleProvider,
    Simulation, StoredSamples,
};
use drpkit_core::lensing::{run_lensing, LensingConfig, LensingExperiment, ScoreKind, VeSchedule};
use drpkit_core::numerics::{DenseMatrix, SeededRng};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{atomic_write, fmt_f64, CoverageCsv};
use crate::plot::render_svg;
use crate::samples::{
    attach_obs, read_bounds, read_joint, read_posterior, read_weights, write_bounds, write_joint,
    write_obs, write_posterior, EmpiricalPrior,
};

#[derive(Parser, Debug)]
#[command(name = "drpkit", version, about = "Coverage tests for generative posterior estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Gaussian toy model with a correct, over-, under-confident or biased estimator.
    Toy(ToyArgs),
    /// Prior-as-posterior estimator on a conjugate Gaussian model.
    Uninformative(UninformativeArgs),
    /// Linear-Gaussian imaging problem with reverse-SDE samplers.
    Lensing(LensingArgs),
    /// DRP test on user-supplied sample files.
    Coverage(CoverageArgs),
    /// Render coverage CSVs to one SVG.
    Plot(PlotArgs),
    /// Replay a run from its resolved_config.txt.
    Rerun(RerunArgs),
}

fn positive(s: &str) -> std::result::Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseArg {
    Correct,
    Over,
    Under,
    Biased,
}

impl CaseArg {
    fn case(self) -> ToyCase {
        match self {
            CaseArg::Correct => ToyCase::Correct,
            CaseArg::Over => ToyCase::Overconfident,
            CaseArg::Under => ToyCase::Underconfident,
            CaseArg::Biased => ToyCase::Biased,
        }
    }

    fn name(self) -> &'static str {
        match self {
            CaseArg::Correct => "correct",
            CaseArg::Over => "over",
            CaseArg::Under => "under",
            CaseArg::Biased => "biased",
        }
    }
}

#[derive(Args, Debug)]
pub struct ToyArgs {
    #[arg(long, value_enum, default_value = "correct")]
    pub case: CaseArg,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub dim: u64,
    #[arg(long, default_value_t = 500, value_parser = positive)]
    pub n_sims: u64,
    #[arg(long, default_value_t = 500, value_parser = positive)]
    pub n_post: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Comma-separated coverage methods: drp, hpd.
    #[arg(long, value_delimiter = ',', default_value = "drp,hpd")]
    pub methods: Vec<String>,
    /// hypercube or prior.
    #[arg(long, default_value = "hypercube")]
    pub ref_policy: String,
    /// euclidean or weighted:w0,w1,...
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// Reference draws per simulation.
    #[arg(long, default_value_t = 1, value_parser = positive)]
    pub repeat: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
    /// Also write joint.csv, posterior.csv, obs.csv and bounds.txt.
    #[arg(long)]
    pub dump_samples: bool,
}

#[derive(Args, Debug)]
pub struct UninformativeArgs {
    #[arg(long, default_value_t = 500, value_parser = positive)]
    pub n_sims: u64,
    #[arg(long, default_value_t = 500, value_parser = positive)]
    pub n_post: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorArg {
    Exact,
    Biased,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceSize {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

impl SourceSize {
    fn side(self) -> usize {
        match self {
            SourceSize::Eight => 8,
            SourceSize::Sixteen => 16,
        }
    }
}

#[derive(Args, Debug)]
pub struct LensingArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "8")]
    pub source_size: SourceSize,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub n_sims: u64,
    #[arg(long, default_value_t = 200, value_parser = positive)]
    pub n_post: u64,
    #[arg(long, default_value_t = 300, value_parser = positive)]
    pub steps: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_n: f64,
    /// Prior correlation length as a fraction of the source side.
    #[arg(long, default_value_t = 0.5)]
    pub kernel_scale: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    #[arg(long)]
    pub joint: PathBuf,
    #[arg(long)]
    pub posterior: PathBuf,
    #[arg(long)]
    pub obs: Option<PathBuf>,
    /// hypercube, prior-file:FILE or datashift:k,u
    #[arg(long, default_value = "hypercube")]
    pub ref_policy: String,
    /// euclidean or weighted:FILE
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// auto, or a file with one lo:hi line per dimension.
    #[arg(long, default_value = "auto")]
    pub bounds: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    pub repeat: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long = "in", value_delimiter = ',', required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match with_thread_cap(|| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("drpkit: {e}");
            e.exit_code()
        }
    }
}

/// Runs `f` inside a pool capped by `DRPKIT_THREADS` (0 or unset: default).
fn with_thread_cap(f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    let cap = match std::env::var("DRPKIT_THREADS") {
        Err(_) => 0,
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!("DRPKIT_THREADS must be a nonnegative integer, got `{v}`"))
        })?,
    };
    if cap == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cap)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?
        .install(f)
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Toy(a) => cmd_toy(&a),
        Command::Uninformative(a) => cmd_uninformative(&a),
        Command::Lensing(a) => cmd_lensing(&a),
        Command::Coverage(a) => cmd_coverage(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Rerun(a) => cmd_rerun(&a),
    }
}

fn write_config(out: &Path, config: &RunConfig) -> Result<()> {
    atomic_write(&out.join("resolved_config.txt"), config.render().as_bytes())
}

/// Writes `name.csv` and reports the band summary on stdout.
fn emit(out: &Path, name: &str, curve: &CoverageCurve, seed: u64) -> Result<CoverageCsv> {
    let csv = CoverageCsv::from_curve(curve, seed);
    let path = out.join(format!("{name}.csv"));
    csv.write(&path)?;
    println!(
        "{name}: in band at {:.1}% of levels, max deviation {:.2} half-widths -> {}",
        100.0 * curve.fraction_in_band(),
        curve.max_standardized_deviation(),
        path.display()
    );
    Ok(csv)
}

fn maybe_svg(out: &Path, svg: bool, curves: &[CoverageCsv]) -> Result<()> {
    if svg {
        atomic_write(&out.join("coverage.svg"), render_svg(curves).as_bytes())?;
    }
    Ok(())
}

fn settings(n_post: u64, seed: u64, repeat: u64) -> CoverageSettings {
    let mut s = CoverageSettings::new(n_post as usize, seed);
    s.repeat_count = repeat as usize;
    s
}

/// Draws every simulation's posterior samples from its own substream, as a
/// live run would.
fn presample(
    dataset: &JointSampleSet,
    provider: &dyn SampleProvider,
    n_post: usize,
    seed: u64,
) -> Result<BTreeMap<usize, DenseMatrix>> {
    use rayon::prelude::*;
    let table = Mutex::new(BTreeMap::new());
    dataset.sims().par_iter().try_for_each(|sim: &Simulation| {
        let mut rng: SeededRng = posterior_stream(seed, sim.sim_id);
        let m = provider
            .draw(sim, n_post, &mut rng)
            .map_err(|e| CoverageError::from(e).at_sim(sim.sim_id))?;
        table.lock().expect("sample table poisoned").insert(sim.sim_id, m);
        Ok::<_, CoverageError>(())
    })?;
    Ok(table.into_inner().expect("sample table poisoned"))
}

pub fn cmd_toy(a: &ToyArgs) -> Result<()> {
    let config = ToyConfig::new(a.dim as usize, a.n_sims as usize, a.case.case());
    let bench = generate_toy(&config, a.seed)?;
    let prior = Arc::new(bench.prior);
    let policy = PolicyRegistry::with_builtins().build(
        &a.ref_policy,
        &PolicyContext {
            prior: Some(prior.clone()),
        },
    )?;
    let metric = MetricRegistry::with_builtins().build(&a.metric, &())?;
    let ctx = MethodContext {
        policy,
        metric,
        normalization: Some(NormalizationMap::from_bounds(&bench.bounds())?),
        estimator: Some(Arc::new(bench.estimator)),
    };
    let registry = MethodRegistry::with_builtins();
    let methods = a
        .methods
        .iter()
        .map(|m| Ok((m.trim().to_string(), registry.build(m.trim(), &ctx)?)))
        .collect::<Result<Vec<_>>>()?;
    let s = settings(a.n_post, a.seed, a.repeat);

    let stored = if a.dump_samples {
        let samples = presample(&bench.dataset, &bench.estimator, s.n_post, a.seed)?;
        write_joint(&a.out.join("joint.csv"), &bench.dataset)?;
        write_obs(&a.out.join("obs.csv"), &bench.dataset)?;
        write_posterior(&a.out.join("posterior.csv"), &samples, config.dim)?;
        write_bounds(&a.out.join("bounds.txt"), &bench.bounds())?;
        let mut st = StoredSamples::new();
        for (id, m) in samples {
            st.insert(id, m);
        }
        Some(st)
    } else {
        None
    };
    let provider: &dyn SampleProvider = match &stored {
        Some(st) => st,
        None => &bench.estimator,
    };
    let mut csvs = Vec::new();
    for (name, method) in &methods {
        let curve = run_coverage(&bench.dataset, provider, method.as_ref(), &s)?;
        csvs.push(emit(&a.out, name, &curve, a.seed)?);
    }
    maybe_svg(&a.out, a.svg, &csvs)?;

    let mut rc = RunConfig::new("toy");
    rc.set("case", a.case.name())
        .set("dim", a.dim)
        .set("n-sims", a.n_sims)
        .set("n-post", a.n_post)
        .set("seed", a.seed)
        .set("methods", a.methods.join(","))
        .set("ref-policy", &a.ref_policy)
        .set("metric", &a.metric)
        .set("repeat", a.repeat)
        .set("out", a.out.display())
        .set("svg", a.svg)
        .set("dump-samples", a.dump_samples);
    write_config(&a.out, &rc)
}

pub fn cmd_uninformative(a: &UninformativeArgs) -> Result<()> {
    let config = ConjugateConfig {
        n_sims: a.n_sims as usize,
        ..ConjugateConfig::default()
    };
    let bench = generate_conjugate(&config, a.seed)?;
    let est = uninformative_sampler(&config);
    let s = settings(a.n_post, a.seed, 1);
    let normalization = fit_normalization(&bench.dataset, None)?;
    let drp = |policy: Arc<dyn drpkit_core::coverage::ReferencePolicy>| {
        let method = drpkit_core::coverage::Drp {
            policy,
            metric: Arc::new(Euclidean),
            normalization: normalization.clone(),
        };
        run_coverage(&bench.dataset, &est, &method, &s)
    };
    let hpd = hpd_test(&bench.dataset, Arc::new(est), &s)?;
    let prior = drp(Arc::new(PriorDraw::new(Arc::new(bench.prior))))?;
    let shift = drp(Arc::new(DataShift::new(0, 1.0)?))?;
    let csvs = vec![
        emit(&a.out, "hpd", &hpd, a.seed)?,
        emit(&a.out, "drp-prior", &prior, a.seed)?,
        emit(&a.out, "drp-datashift", &shift, a.seed)?,
    ];
    maybe_svg(&a.out, a.svg, &csvs)?;

    let mut rc = RunConfig::new("uninformative");
    rc.set("n-sims", a.n_sims)
        .set("n-post", a.n_post)
        .set("seed", a.seed)
        .set("out", a.out.display())
        .set("svg", a.svg);
    write_config(&a.out, &rc)
}

fn write_grid(path: &Path, rows: impl Iterator<Item = (usize, Vec<f64>)>, dim: usize) -> Result<()> {
    let mut text = String::from("sim_id");
    for i in 0..dim {
        text.push_str(&format!(",px_{i}"));
    }
    text.push('\n');
    for (id, v) in rows {
        text.push_str(&id.to_string());
        for x in v {
            text.push(',');
            text.push_str(&fmt_f64(x));
        }
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

pub fn cmd_lensing(a: &LensingArgs) -> Result<()> {
    let mut model = LensingConfig::new(a.source_size.side(), a.seed);
    model.sigma_n = a.sigma_n;
    model.kernel_scale = a.kernel_scale;
    if !(a.sigma_n.is_finite() && a.sigma_n > 0.0) {
        return Err(CliError::Usage(format!("--sigma-n must be > 0, got {}", a.sigma_n)));
    }
    let exp = LensingExperiment {
        model,
        schedule: VeSchedule {
            steps: a.steps as usize,
            ..VeSchedule::default()
        },
        kind: match a.estimator {
            EstimatorArg::Exact => ScoreKind::Exact,
            EstimatorArg::Biased => ScoreKind::Biased,
        },
        n_sims: a.n_sims as usize,
        n_post: a.n_post as usize,
        seed: a.seed,
    };
    let run = run_lensing(&exp)?;
    let csvs = vec![emit(&a.out, "drp", &run.curve, a.seed)?];
    let d = run.summaries.first().map_or(0, |s| s.truth.len());
    for (name, pick) in [
        ("truth", 0usize),
        ("mean", 1),
        ("std", 2),
        ("residual", 3),
    ] {
        write_grid(
            &a.out.join(format!("summary_{name}.csv")),
            run.summaries.iter().map(|s| {
                let v = match pick {
                    0 => &s.truth,
                    1 => &s.mean,
                    2 => &s.std,
                    _ => &s.residual,
                };
                (s.sim_id, v.clone())
            }),
            d,
        )?;
    }
    maybe_svg(&a.out, a.svg, &csvs)?;

    let mut rc = RunConfig::new("lensing");
    rc.set(
        "estimator",
        match a.estimator {
            EstimatorArg::Exact => "exact",
            EstimatorArg::Biased => "biased",
        },
    )
    .set("source-size", a.source_size.side())
    .set("n-sims", a.n_sims)
    .set("n-post", a.n_post)
    .set("steps", a.steps)
    .set("seed", a.seed)
    .set("sigma-n", a.sigma_n)
    .set("kernel-scale", a.kernel_scale)
    .set("out", a.out.display())
    .set("svg", a.svg);
    write_config(&a.out, &rc)
}

/// Turns `weighted:FILE` into the inline `weighted:w0,w1,…` spec.
fn resolve_metric(spec: &str, dim: usize) -> Result<String> {
    let Some(arg) = spec.strip_prefix("weighted:") else {
        return Ok(spec.to_string());
    };
    let inline = arg.split(',').all(|t| t.trim().parse::<f64>().is_ok());
    let weights = if inline {
        arg.split(',').map(|t| t.trim().parse::<f64>().unwrap_or(f64::NAN)).collect()
    } else {
        read_weights(Path::new(arg))?
    };
    if weights.len() != dim {
        return Err(CliError::Usage(format!(
            "{} metric weights for {dim}-dimensional parameters",
            weights.len()
        )));
    }
    Ok(format!(
        "weighted:{}",
        weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
    ))
}

fn coverage_policies() -> PolicyRegistry {
    let mut r = PolicyRegistry::with_builtins();
    r.register("prior-file", |args, _| {
        let prior = EmpiricalPrior::read(Path::new(args))
            .map_err(|e| CoverageError::Policy(e.to_string()))?;
        Ok(Arc::new(PriorDraw::new(Arc::new(prior))))
    });
    r
}

pub fn cmd_coverage(a: &CoverageArgs) -> Result<()> {
    // Flag-level problems are reported before touching the data files.
    let metric_is_weighted = a.metric.starts_with("weighted:");
    if !metric_is_weighted {
        MetricRegistry::with_builtins().build(&a.metric, &())?;
    }
    let mut dataset = read_joint(&a.joint)?;
    if let Some(obs) = &a.obs {
        dataset = attach_obs(obs, dataset)?;
    }
    let dim = dataset.dim_theta();
    let metric = MetricRegistry::with_builtins().build(&resolve_metric(&a.metric, dim)?, &())?;
    let policy = coverage_policies().build(&a.ref_policy, &PolicyContext::default())?;
    let bounds = match a.bounds.as_str() {
        "auto" => None,
        file => Some(read_bounds(Path::new(file))?),
    };
    let normalization = fit_normalization(&dataset, bounds.as_deref())?;
    let stored = read_posterior(&a.posterior, &dataset)?;
    let method = MethodRegistry::with_builtins().build(
        "drp",
        &MethodContext {
            policy,
            metric,
            normalization: Some(normalization),
            estimator: None,
        },
    )?;
    let n_post = stored
        .min_count()
        .ok_or_else(|| CliError::Runtime(format!("{}: no posterior samples", a.posterior.display())))?;
    let s = settings(n_post as u64, a.seed, a.repeat);
    let curve = run_coverage(&dataset, &stored, method.as_ref(), &s)?;
    let csvs = vec![emit(&a.out, "drp", &curve, a.seed)?];
    maybe_svg(&a.out, a.svg, &csvs)?;

    let mut rc = RunConfig::new("coverage");
    rc.set("joint", a.joint.display())
        .set("posterior", a.posterior.display())
        .set("ref-policy", &a.ref_policy)
        .set("metric", &a.metric)
        .set("bounds", &a.bounds)
        .set("seed", a.seed)
        .set("repeat", a.repeat)
        .set("out", a.out.display())
        .set("svg", a.svg);
    if let Some(obs) = &a.obs {
        rc.set("obs", obs.display());
    }
    write_config(&a.out, &rc)
}

pub fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let curves = a
        .inputs
        .iter()
        .map(|p| CoverageCsv::read(p))
        .collect::<Result<Vec<_>>>()?;
    atomic_write(&a.out, render_svg(&curves).as_bytes())
}

pub fn cmd_rerun(a: &RerunArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
    let mut config = RunConfig::parse(&text, &a.config)?;
    if config.command() == Some("rerun") {
        return Err(CliError::Usage("a config cannot replay another rerun".into()));
    }
    if let Some(out) = &a.out {
        config.set("out", out.display());
    }
    let args = std::iter::once("drpkit".to_string()).chain(config.to_args());
    let cli = Cli::try_parse_from(args)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.config.display())))?;
    execute(cli.command)
}
