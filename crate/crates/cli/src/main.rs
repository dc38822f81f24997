//! `tcoint`: simulation, estimation, specification testing, Whittle fitting,
//! Monte Carlo studies and the carbon/GDP analysis from the command line.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.

mod input;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tempered_coint::empirical::{ckc_analysis, ingest_ckc_csv, CkcOptions};
use tempered_coint::mc::{export_study, run_study, StudyConfig, StudyKind};
use tempered_coint::process::simulate_model_fn;
use tempered_coint::regression::nw_estimate;
use tempered_coint::spec_test::{run_spec_test_blocks, WeightFunction};
use tempered_coint::whittle::{fit_arfima00, fit_artfima00};
use tempered_coint::{
    ArtfimaFit, BlockRule, Kernel, MemoryKind, MemoryNormalization, NoiseConfig, ParametricFamily,
    RegressionFunction, ScheduleRule, SpecTestConfig, TemperedProcessSpec,
};

use manifest::{run_manifest_path, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "tcoint", version, about = "Tempered cointegrating regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a regressor / error / response path to CSV.
    Simulate(SimulateArgs),
    /// Nadaraya-Watson estimate on a grid, with optional pointwise intervals.
    Estimate(EstimateArgs),
    /// Specification test of a parametric family with subsampling p-values.
    SpecTest(SpecTestArgs),
    /// Whittle fits of ARTFIMA(0,d,lambda,0) and ARFIMA(0,d,0) to one column.
    FitArtfima(FitArgs),
    /// Run a Monte Carlo study and export its tables.
    Mc(McArgs),
    /// Memory fits and p-value grid for year,gdp,co2 country files.
    Ckc(CkcArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value = "slm")]
    memory: MemoryKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    /// Tempering parameter (semi-long memory only).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.25)]
    psi: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = tempered_coint::process::DEFAULT_BURN_IN)]
    burn_in: usize,
    /// `sine`, `zero`, or a JSON object such as {"kind":"linear","intercept":0,"slope":1}.
    #[arg(long, default_value = "sine")]
    function: String,
    /// Output CSV with columns k,x,u,y.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "x")]
    x_col: String,
    #[arg(long, default_value = "y")]
    y_col: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Epanechnikov,
    Gaussian,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Kernel {
        match k {
            KernelArg::Epanechnikov => Kernel::Epanechnikov,
            KernelArg::Gaussian => Kernel::Gaussian,
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Bandwidth rule (`N^-1/3`, `N^-0.2`) or a fixed value.
    #[arg(long)]
    bandwidth_rule: String,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    kernel: KernelArg,
    /// Evaluation grid `lo:hi:count`.
    #[arg(long, default_value = "0:1:101")]
    grid: String,
    /// Adds `100(1-alpha)%` pointwise intervals.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpecTestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "linear")]
    family: String,
    /// Bandwidth rule, evaluated at N for the full sample and at b for blocks.
    #[arg(long)]
    bandwidth_rule: String,
    /// Block rule (`[2N^0.5]`, `sqrt:2`, `fixed:30`); repeat for several.
    #[arg(long, required = true)]
    block_rule: Vec<String>,
    /// Normalization of the statistic.
    #[arg(long, default_value = "slm")]
    memory: MemoryKind,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    /// Tempering rule for semi-long memory, e.g. `N^-1/5` or `fixed:0.13`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long, value_enum, default_value = "gaussian")]
    kernel: KernelArg,
    /// Indicator weight support `a,b`.
    #[arg(long, default_value = "-100,100", allow_hyphen_values = true)]
    weight_support: String,
    #[arg(long, default_value_t = tempered_coint::spec_test::DEFAULT_QUAD_CELLS)]
    quad_cells: usize,
    /// Output JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: String,
    /// Take logs before fitting.
    #[arg(long)]
    log: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    study: StudyKind,
    /// JSON study configuration; the built-in design is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replications for the built-in design.
    #[arg(long, default_value_t = 1000)]
    replications: usize,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct CkcArgs {
    /// `year,gdp,co2` CSV per country; repeat for several.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_bandwidth(text: &str) -> Result<ScheduleRule> {
    if let Ok(v) = text.trim().parse::<f64>() {
        if !(v > 0.0 && v.is_finite()) {
            bail!(tempered_coint::Error::Invalid(format!("bandwidth must be positive, got {v}")));
        }
        return Ok(ScheduleRule::Fixed(v));
    }
    Ok(text.parse()?)
}

fn parse_list(text: &str, sep: char, what: &str) -> Result<Vec<f64>> {
    text.split(sep)
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| tempered_coint::Error::Invalid(format!("{what}: '{s}' is not a number")).into())
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts = parse_list(text, ':', "grid")?;
    let [lo, hi, count] = parts[..] else {
        bail!(tempered_coint::Error::Invalid(format!("grid must be lo:hi:count, got '{text}'")));
    };
    if !(count >= 1.0 && count.fract() == 0.0 && lo <= hi) {
        bail!(tempered_coint::Error::Invalid(format!("grid must be lo:hi:count with lo <= hi and count >= 1, got '{text}'")));
    }
    let count = count as usize;
    Ok(if count == 1 { vec![lo] } else { (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect() })
}

fn parse_function(text: &str) -> Result<RegressionFunction> {
    match text.trim() {
        "sine" => Ok(RegressionFunction::sine()),
        "zero" => Ok(RegressionFunction::Zero),
        json => serde_json::from_str(json).map_err(|e| {
            tempered_coint::Error::Invalid(format!("function must be 'sine', 'zero' or a JSON object: {e}")).into()
        }),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut run = RunManifest::new("simulate");
    let spec = match args.memory {
        MemoryKind::LongMemory => TemperedProcessSpec::long_memory(args.n, args.d)?,
        MemoryKind::SemiLongMemory => {
            let lambda = args
                .lambda
                .ok_or_else(|| tempered_coint::Error::Invalid("--lambda is required for semi-long memory".into()))?;
            TemperedProcessSpec::semi_long_memory(args.n, args.d, lambda)?
        }
        MemoryKind::ShortMemory => TemperedProcessSpec::short_memory(args.n)?,
    }
    .with_burn_in(args.burn_in);
    let noise = NoiseConfig::new(args.rho, args.psi, args.sigma, args.seed)?;
    let function = parse_function(&args.function)?;
    let path = simulate_model_fn(&spec, &noise, &function)?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    path.save(&args.out)?;
    run.seeds.push(args.seed);
    run.output(&args.out);
    run.output(&tempered_coint::process::manifest_path(&args.out));
    run.write(&run_manifest_path(&args.out))
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let mut run = RunManifest::new("estimate");
    run.input(&args.data.input)?;
    let (x, y) = input::read_xy(&args.data.input, &args.data.x_col, &args.data.y_col)?;
    let h = parse_bandwidth(&args.bandwidth_rule)?.value(x.len());
    let grid = parse_grid(&args.grid)?;
    let mut est = nw_estimate(&x, &y, &grid, h, args.kernel.into())?;
    if let Some(alpha) = args.alpha {
        est = est.with_confidence(alpha)?;
    }
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    est.write_csv(fs::File::create(&args.out)?)?;
    run.output(&args.out);
    run.write(&run_manifest_path(&args.out))
}

fn memory_normalization(kind: MemoryKind, d: f64, lambda: Option<&str>) -> Result<MemoryNormalization> {
    Ok(match kind {
        MemoryKind::SemiLongMemory => {
            let text = lambda
                .ok_or_else(|| tempered_coint::Error::Invalid("--lambda is required for semi-long memory".into()))?;
            MemoryNormalization::SemiLong { d, lambda: text.parse()? }
        }
        MemoryKind::LongMemory => MemoryNormalization::Long { d },
        MemoryKind::ShortMemory => MemoryNormalization::Short,
    })
}

fn spec_test(args: SpecTestArgs) -> Result<()> {
    let mut run = RunManifest::new("spec-test");
    run.input(&args.data.input)?;
    let (x, y) = input::read_xy(&args.data.input, &args.data.x_col, &args.data.y_col)?;
    let family: ParametricFamily = args.family.parse()?;
    let blocks: Vec<BlockRule> = args.block_rule.iter().map(|b| b.parse()).collect::<tempered_coint::Result<_>>()?;
    let memory = memory_normalization(args.memory, args.d, args.lambda.as_deref())?;
    let support = parse_list(&args.weight_support, ',', "weight support")?;
    let [lo, hi] = support[..] else {
        bail!(tempered_coint::Error::Invalid(format!("weight support must be a,b, got '{}'", args.weight_support)));
    };
    let cfg = SpecTestConfig::new(family, parse_bandwidth(&args.bandwidth_rule)?, blocks[0], memory)
        .with_kernel(args.kernel.into())
        .with_weight(WeightFunction::indicator(lo, hi)?)
        .with_quad_cells(args.quad_cells);
    let results = run_spec_test_blocks(&x, &y, &cfg, &blocks)?;
    write_json(&args.out, &results)?;
    run.output(&args.out);
    run.write(&run_manifest_path(&args.out))
}

#[derive(Serialize)]
struct FitRecord {
    column: String,
    log: bool,
    n: usize,
    artfima: ArtfimaFit,
    arfima: ArtfimaFit,
}

fn fit_artfima(args: FitArgs) -> Result<()> {
    let mut run = RunManifest::new("fit-artfima");
    run.input(&args.input)?;
    let mut z = input::read_column(&args.input, &args.column)?;
    if args.log {
        if z.iter().any(|&v| v <= 0.0) {
            bail!(tempered_coint::Error::Invalid(format!("column '{}' has non-positive values", args.column)));
        }
        z.iter_mut().for_each(|v| *v = v.ln());
    }
    let record = FitRecord {
        column: args.column.clone(),
        log: args.log,
        n: z.len(),
        artfima: fit_artfima00(&z)?,
        arfima: fit_arfima00(&z)?,
    };
    write_json(&args.out, &record)?;
    run.output(&args.out);
    run.write(&run_manifest_path(&args.out))
}

fn mc(args: McArgs) -> Result<()> {
    let mut run = RunManifest::new("mc");
    let config = match &args.config {
        Some(path) => {
            run.input(path)?;
            let cfg = StudyConfig::load(path)?;
            if cfg.study_kind != args.study {
                bail!(tempered_coint::Error::Invalid(format!(
                    "config describes a {:?} study but --study asks for {:?}",
                    cfg.study_kind, args.study
                )));
            }
            cfg
        }
        None => match args.study {
            StudyKind::Estimation => StudyConfig::estimation(args.replications),
            StudyKind::Coverage => StudyConfig::coverage(args.replications),
            StudyKind::Size => StudyConfig::size(args.replications),
        },
    };
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            bail!(tempered_coint::Error::Invalid("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let result = pool.install(|| run_study(&config))?;
    let files = export_study(&result, &args.out)?;
    run.seeds.push(config.master_seed);
    for f in &files {
        run.output(f);
    }
    run.write(&args.out.join("run.json"))
}

fn ckc(args: CkcArgs) -> Result<()> {
    let mut run = RunManifest::new("ckc");
    fs::create_dir_all(&args.out)?;
    let options = CkcOptions::default();
    for path in &args.input {
        run.input(path)?;
        let series = ingest_ckc_csv(path)?;
        let report = ckc_analysis(&series, &options)?;
        for w in &report.warnings {
            eprintln!("{}: {w}", report.country);
        }
        let json = args.out.join(format!("{}.json", report.country));
        write_json(&json, &report)?;
        let csv = args.out.join(format!("{}_pvalues.csv", report.country));
        report.write_csv(fs::File::create(&csv)?)?;
        run.output(&json);
        run.output(&csv);
    }
    run.write(&args.out.join("run.json"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tempered_coint::Error>() {
            return match e {
                tempered_coint::Error::Numerical(_) | tempered_coint::Error::NoConvergence { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::SpecTest(a) => spec_test(a),
        Command::FitArtfima(a) => fit_artfima(a),
        Command::Mc(a) => mc(a),
        Command::Ckc(a) => ckc(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
