use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{simulate_model_fn, NoiseConfig, SimulatedPath};
use crate::regression::{confidence_intervals, nw_fit};
use crate::rng::derive_seed;
use crate::spec_test::{run_spec_test_blocks, ParametricFamily, SpecTestConfig, WeightFunction};

use super::config::{StudyConfig, StudyKind};

/// Replications per work unit. Partial sums are formed per chunk and added
/// in chunk order, so results do not depend on the thread count.
pub const CHUNK_SIZE: usize = 16;

/// Share of undefined (replication, point) pairs above which a cell is flagged.
pub const UNDEFINED_FLAG_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub criterion: String,
    pub memory: String,
    pub bandwidth_rule: String,
    pub d: f64,
    pub value: f64,
    pub mc_error: f64,
    /// Fraction of (replication, point) pairs that could not be evaluated.
    pub undefined_fraction: f64,
    pub flagged: bool,
}

/// Normalized statistics of one size-study setting, in replication order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub memory: String,
    pub bandwidth_rule: String,
    pub d: f64,
    pub replications: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub cells: Vec<Cell>,
    pub histograms: Vec<Histogram>,
}

impl StudyResult {
    pub fn cell(&self, criterion: &str, memory: &str, bandwidth_rule: &str, d: f64) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.criterion == criterion && c.memory == memory && c.bandwidth_rule == bandwidth_rule && c.d == d)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.flagged)
    }
}

pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    match config.study_kind {
        StudyKind::Estimation => run_estimation_study(config),
        StudyKind::Coverage => run_coverage_study(config, config.alpha),
        StudyKind::Size => run_size_study(config, &config.nominal_levels),
    }
}

/// Runs `body` for every replication in fixed chunks and merges the chunk
/// accumulators in order.
fn run_chunked<A, I, F, M>(reps: usize, init: I, body: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, usize) -> Result<()> + Sync,
    M: Fn(&mut A, A),
{
    let chunks = reps.div_ceil(CHUNK_SIZE);
    let parts: Vec<Result<A>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for r in c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(reps) {
                body(&mut acc, r)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for part in parts {
        merge(&mut total, part?);
    }
    Ok(total)
}

/// One cell per (memory setting, d, bandwidth rule), in that nesting order.
struct Layout {
    memories: usize,
    ds: usize,
    hs: usize,
}

impl Layout {
    fn new(cfg: &StudyConfig) -> Self {
        Layout { memories: cfg.memory_settings.len(), ds: cfg.d_values.len(), hs: cfg.bandwidth_rules.len() }
    }
    fn len(&self) -> usize {
        self.memories * self.ds * self.hs
    }
    fn index(&self, m: usize, d: usize, h: usize) -> usize {
        (m * self.ds + d) * self.hs + h
    }
    /// Cells grouped by criterion, then memory, bandwidth and d.
    fn each(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.memories).flat_map(move |m| (0..self.hs).flat_map(move |h| (0..self.ds).map(move |d| (m, d, h))))
    }
}

/// Paths for every (memory, d) setting of one replication. All settings
/// share the replication seed, and the `d = 0` path is simulated once.
fn replication_paths(cfg: &StudyConfig, r: usize) -> Result<Vec<Vec<SimulatedPath>>> {
    let seed = derive_seed(cfg.master_seed, r as u64);
    let noise = NoiseConfig::new(cfg.rho, cfg.psi, cfg.sigma, seed)?;
    let function = cfg.function();
    let mut zero: Option<SimulatedPath> = None;
    let mut out = Vec::with_capacity(cfg.memory_settings.len());
    for m in &cfg.memory_settings {
        let mut row = Vec::with_capacity(cfg.d_values.len());
        for &d in &cfg.d_values {
            if d == 0.0 {
                if let Some(p) = &zero {
                    row.push(p.clone());
                    continue;
                }
            }
            let spec = m.process(cfg.n, d, cfg.burn_in)?;
            let path = simulate_model_fn(&spec, &noise, &function)?;
            if d == 0.0 {
                zero = Some(path.clone());
            }
            row.push(path);
        }
        out.push(row);
    }
    Ok(out)
}

fn cell_base(cfg: &StudyConfig, criterion: &str, m: usize, d: usize, h: usize) -> Cell {
    Cell {
        criterion: criterion.to_string(),
        memory: cfg.memory_settings[m].label.clone(),
        bandwidth_rule: cfg.bandwidth_rules[h].to_string(),
        d: cfg.d_values[d],
        value: f64::NAN,
        mc_error: f64::NAN,
        undefined_fraction: 0.0,
        flagged: false,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    s1: f64,
    s2: f64,
    s4: f64,
}

impl Moments {
    fn push(&mut self, e: f64) {
        let e2 = e * e;
        self.count += 1;
        self.s1 += e;
        self.s2 += e2;
        self.s4 += e2 * e2;
    }
    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s4 += o.s4;
    }
    fn mean(&self) -> f64 {
        self.s1 / self.count as f64
    }
    fn sample_var(&self) -> f64 {
        let n = self.count as f64;
        ((self.s2 - self.s1 * self.s1 / n) / (n - 1.0)).max(0.0)
    }
}

/// Bias, Std and RMSE of `f̂` on the evaluation grid, averaged over points.
pub fn run_estimation_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.study_kind != StudyKind::Estimation {
        return Err(Error::invalid("configuration is not an estimation study"));
    }
    config.validate()?;
    let layout = Layout::new(config);
    let points = config.eval_points.points();
    let truth: Vec<f64> = points.iter().map(|&x| config.function().eval(x)).collect();
    let kernel = config.kernel();
    let np = points.len();

    let acc = run_chunked(
        config.replications,
        || vec![Moments::default(); layout.len() * np],
        |acc, r| {
            let paths = replication_paths(config, r)?;
            for (m, row) in paths.iter().enumerate() {
                for (d, path) in row.iter().enumerate() {
                    for (h, rule) in config.bandwidth_rules.iter().enumerate() {
                        let bw = rule.value(config.n);
                        let (fhat, _) = nw_fit(&path.x, &path.y, &points, bw, kernel)?;
                        let base = layout.index(m, d, h) * np;
                        for (p, f) in fhat.iter().enumerate() {
                            if let Some(f) = f {
                                acc[base + p].push(f - truth[p]);
                            }
                        }
                    }
                }
            }
            Ok(())
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(&part) {
                t.merge(p);
            }
        },
    )?;

    let pairs = (config.replications * np) as f64;
    let mut cells = Vec::new();
    for criterion in ["bias", "std", "rmse"] {
        for (m, d, h) in layout.each() {
            let base = layout.index(m, d, h) * np;
            let mut cell = cell_base(config, criterion, m, d, h);
            let pts: Vec<&Moments> = acc[base..base + np].iter().filter(|a| a.count >= 2).collect();
            let defined: u64 = acc[base..base + np].iter().map(|a| a.count).sum();
            cell.undefined_fraction = 1.0 - defined as f64 / pairs;
            cell.flagged = cell.undefined_fraction > UNDEFINED_FLAG_FRACTION || pts.is_empty();
            if !pts.is_empty() {
                let k = pts.len() as f64;
                let (mut value, mut se) = (0.0, 0.0);
                for a in &pts {
                    let n = a.count as f64;
                    let sd = a.sample_var().sqrt();
                    let (v, e) = match criterion {
                        "bias" => (a.mean().abs(), sd / n.sqrt()),
                        "std" => (sd, sd / (2.0 * (n - 1.0)).sqrt()),
                        _ => {
                            let mse = a.s2 / n;
                            let rmse = mse.sqrt();
                            let var_sq = (a.s4 / n - mse * mse).max(0.0);
                            let e = if rmse > 0.0 { (var_sq / n).sqrt() / (2.0 * rmse) } else { 0.0 };
                            (rmse, e)
                        }
                    };
                    value += v;
                    se += e;
                }
                cell.value = value / k;
                cell.mc_error = se / k;
            }
            cells.push(cell);
        }
    }
    Ok(StudyResult { config: config.clone(), cells, histograms: Vec::new() })
}

#[derive(Debug, Clone, Copy, Default)]
struct CoverageAcc {
    defined: u64,
    covered: u64,
    len: f64,
    len2: f64,
}

/// Empirical coverage and mean length of `100(1-α)%` pointwise intervals.
pub fn run_coverage_study(config: &StudyConfig, alpha: f64) -> Result<StudyResult> {
    if config.study_kind != StudyKind::Coverage {
        return Err(Error::invalid("configuration is not a coverage study"));
    }
    config.validate()?;
    let layout = Layout::new(config);
    let points = config.eval_points.points();
    if points.is_empty() {
        return Err(Error::invalid("coverage study needs evaluation points"));
    }
    let truth: Vec<f64> = points.iter().map(|&x| config.function().eval(x)).collect();
    let kernel = config.kernel();
    let np = points.len();

    let acc = run_chunked(
        config.replications,
        || vec![CoverageAcc::default(); layout.len() * np],
        |acc, r| {
            let paths = replication_paths(config, r)?;
            for (m, row) in paths.iter().enumerate() {
                for (d, path) in row.iter().enumerate() {
                    for (h, rule) in config.bandwidth_rules.iter().enumerate() {
                        let bw = rule.value(config.n);
                        let cis = confidence_intervals(&path.x, &path.y, &points, bw, kernel, alpha)?;
                        let base = layout.index(m, d, h) * np;
                        for (p, ci) in cis.iter().enumerate() {
                            if let Some(ci) = ci {
                                let a = &mut acc[base + p];
                                a.defined += 1;
                                a.covered += ci.covers(truth[p]) as u64;
                                let l = ci.length();
                                a.len += l;
                                a.len2 += l * l;
                            }
                        }
                    }
                }
            }
            Ok(())
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(&part) {
                t.defined += p.defined;
                t.covered += p.covered;
                t.len += p.len;
                t.len2 += p.len2;
            }
        },
    )?;

    let reps = config.replications as f64;
    let mut cells = Vec::new();
    for (measure, is_length) in [("coverage", false), ("length", true)] {
        for (p, x) in points.iter().enumerate() {
            let criterion = format!("{measure}_x{x}");
            for (m, d, h) in layout.each() {
                let a = acc[layout.index(m, d, h) * np + p];
                let mut cell = cell_base(config, &criterion, m, d, h);
                cell.undefined_fraction = 1.0 - a.defined as f64 / reps;
                cell.flagged = cell.undefined_fraction > UNDEFINED_FLAG_FRACTION || a.defined == 0;
                if a.defined > 0 {
                    let n = a.defined as f64;
                    if is_length {
                        let mean = a.len / n;
                        let var = if n > 1.0 { ((a.len2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
                        cell.value = mean;
                        cell.mc_error = (var / n).sqrt();
                    } else {
                        let c = a.covered as f64 / n;
                        cell.value = c;
                        cell.mc_error = (c * (1.0 - c) / n).sqrt();
                    }
                }
                cells.push(cell);
            }
        }
    }
    let mut config = config.clone();
    config.alpha = alpha;
    Ok(StudyResult { config, cells, histograms: Vec::new() })
}

#[derive(Debug, Clone, Default)]
struct SizeAcc {
    ok: u64,
    failed: u64,
    /// Per (block rule, level).
    rejections: Vec<u64>,
    hist_reps: Vec<usize>,
    hist_values: Vec<f64>,
}

/// Rejection frequencies of the subsampling test under a linear null.
pub fn run_size_study(config: &StudyConfig, nominal_levels: &[f64]) -> Result<StudyResult> {
    if config.study_kind != StudyKind::Size {
        return Err(Error::invalid("configuration is not a size study"));
    }
    let mut config = config.clone();
    config.nominal_levels = nominal_levels.to_vec();
    config.validate()?;
    let config = &config;
    let layout = Layout::new(config);
    let (wlo, whi) = config.weight_support();
    let weight = WeightFunction::indicator(wlo, whi)?;
    let nb = config.block_rules.len();
    let nl = nominal_levels.len();
    let per_cell = nb * nl;

    let test_config = |m: usize, d: usize, h: usize| {
        let setting = &config.memory_settings[m];
        SpecTestConfig::new(
            ParametricFamily::Linear,
            config.bandwidth_rules[h],
            config.block_rules[0],
            setting.normalization(config.d_values[d]),
        )
        .with_kernel(config.kernel())
        .with_weight(weight.clone())
        .with_quad_cells(config.quad_cells)
    };

    let init = || {
        (0..layout.len())
            .map(|_| SizeAcc { rejections: vec![0; per_cell], ..Default::default() })
            .collect::<Vec<_>>()
    };
    let acc = run_chunked(
        config.replications,
        init,
        |acc, r| {
            let paths = replication_paths(config, r)?;
            for (m, row) in paths.iter().enumerate() {
                for (d, path) in row.iter().enumerate() {
                    for h in 0..layout.hs {
                        let a = &mut acc[layout.index(m, d, h)];
                        match run_spec_test_blocks(&path.x, &path.y, &test_config(m, d, h), &config.block_rules) {
                            Ok(results) => {
                                a.ok += 1;
                                a.hist_reps.push(r);
                                a.hist_values.push(results[0].t_normalized);
                                for (bi, res) in results.iter().enumerate() {
                                    for (li, &level) in nominal_levels.iter().enumerate() {
                                        a.rejections[bi * nl + li] += res.rejects(level) as u64;
                                    }
                                }
                            }
                            Err(e) if e.is_validation() => return Err(e),
                            Err(_) => a.failed += 1,
                        }
                    }
                }
            }
            Ok(())
        },
        |total, part| {
            for (t, p) in total.iter_mut().zip(part) {
                t.ok += p.ok;
                t.failed += p.failed;
                for (a, b) in t.rejections.iter_mut().zip(&p.rejections) {
                    *a += b;
                }
                t.hist_reps.extend(p.hist_reps);
                t.hist_values.extend(p.hist_values);
            }
        },
    )?;

    let mut cells = Vec::new();
    for (bi, rule) in config.block_rules.iter().enumerate() {
        let b = rule.block_size(config.n);
        for (li, level) in nominal_levels.iter().enumerate() {
            let criterion = format!("size_b{b}_a{level}");
            for (m, d, h) in layout.each() {
                let a = &acc[layout.index(m, d, h)];
                let mut cell = cell_base(config, &criterion, m, d, h);
                cell.undefined_fraction = a.failed as f64 / config.replications as f64;
                cell.flagged = a.failed > 0;
                if a.ok > 0 {
                    let n = a.ok as f64;
                    let p = a.rejections[bi * nl + li] as f64 / n;
                    cell.value = p;
                    cell.mc_error = (p * (1.0 - p) / n).sqrt();
                }
                cells.push(cell);
            }
        }
    }
    let histograms = layout
        .each()
        .map(|(m, d, h)| {
            let a = &acc[layout.index(m, d, h)];
            Histogram {
                memory: config.memory_settings[m].label.clone(),
                bandwidth_rule: config.bandwidth_rules[h].to_string(),
                d: config.d_values[d],
                replications: a.hist_reps.clone(),
                values: a.hist_values.clone(),
            }
        })
        .collect();
    Ok(StudyResult { config: config.clone(), cells, histograms })
}
