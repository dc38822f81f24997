//! Annual GDP / CO₂ panels and the carbon Kuznets curve analysis: memory
//! fits for both log series and a grid of specification-test p-values for
//! log emissions regressed on log income.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::schedule::{BlockRule, ScheduleRule};
use crate::spec_test::{
    run_spec_test_blocks, MemoryNormalization, ParametricFamily, SpecTestConfig, WeightFunction, DEFAULT_QUAD_CELLS,
};
use crate::whittle::{fit_arfima00, fit_artfima00, ArtfimaFit};

/// Below this length the block rules give very short blocks.
pub const SHORT_SERIES_WARNING: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSeries {
    pub country: String,
    pub year: Vec<i32>,
    /// Per-capita GDP.
    pub gdp: Vec<f64>,
    /// Per-capita CO₂ emissions.
    pub co2: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    year: String,
    gdp: String,
    co2: String,
}

impl EmpiricalSeries {
    pub fn len(&self) -> usize {
        self.year.len()
    }

    pub fn is_empty(&self) -> bool {
        self.year.is_empty()
    }

    pub fn log_gdp(&self) -> Vec<f64> {
        self.gdp.iter().map(|v| v.ln()).collect()
    }

    pub fn log_co2(&self) -> Vec<f64> {
        self.co2.iter().map(|v| v.ln()).collect()
    }

    /// Parses a `year,gdp,co2` CSV. Rows are numbered as file lines, the
    /// header being line 1.
    pub fn from_reader<R: Read>(reader: R, country: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        for col in ["year", "gdp", "co2"] {
            if !headers.iter().any(|h| h == col) {
                return Err(Error::invalid(format!("missing column '{col}' (expected header year,gdp,co2)")));
            }
        }
        let mut series = EmpiricalSeries { country: country.into(), year: Vec::new(), gdp: Vec::new(), co2: Vec::new() };
        for (i, rec) in rdr.deserialize::<RawRow>().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::Row { row, message: e.to_string() })?;
            let year: i32 = rec
                .year
                .parse()
                .map_err(|_| Error::Row { row, message: format!("year '{}' is not an integer", rec.year) })?;
            let value = |name: &str, text: &str| -> Result<f64> {
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Row { row, message: format!("{name} '{text}' is not a number") })?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Row { row, message: format!("{name} must be positive, got {text}") });
                }
                Ok(v)
            };
            let gdp = value("gdp", &rec.gdp)?;
            let co2 = value("co2", &rec.co2)?;
            if let Some(&prev) = series.year.last() {
                if year != prev + 1 {
                    return Err(Error::Row {
                        row,
                        message: format!("year {year} does not follow {prev} (years must be consecutive)"),
                    });
                }
            }
            series.year.push(year);
            series.gdp.push(gdp);
            series.co2.push(co2);
        }
        if series.is_empty() {
            return Err(Error::invalid("no data rows"));
        }
        Ok(series)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["year", "gdp", "co2"])?;
        for i in 0..self.len() {
            w.write_record([self.year[i].to_string(), self.gdp[i].to_string(), self.co2[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a series, labelling it with the file stem.
pub fn ingest_ckc_csv(path: &Path) -> Result<EmpiricalSeries> {
    let country = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    EmpiricalSeries::from_reader(std::fs::File::open(path)?, country)
}

#[derive(Debug, Clone)]
pub struct CkcOptions {
    pub hypotheses: Vec<ParametricFamily>,
    pub bandwidth_rules: Vec<ScheduleRule>,
    pub block_rules: Vec<BlockRule>,
    pub kernel: Kernel,
    pub weight: WeightFunction,
    pub quad_cells: usize,
}

impl Default for CkcOptions {
    /// Linear and quadratic hypotheses, `h ∈ {N^-1/2, N^-1}`, blocks
    /// `[2N^0.5]`, `[4N^0.5]`, `[6N^0.5]`, Gaussian kernel on `[-100, 100]`.
    fn default() -> Self {
        CkcOptions {
            hypotheses: vec![ParametricFamily::Linear, ParametricFamily::Quadratic],
            bandwidth_rules: vec![ScheduleRule::power(0.5), ScheduleRule::power(1.0)],
            block_rules: [2.0, 4.0, 6.0].into_iter().map(BlockRule::SqrtMultiple).collect(),
            kernel: Kernel::Gaussian,
            weight: WeightFunction::wide(),
            quad_cells: DEFAULT_QUAD_CELLS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkcCell {
    pub hypothesis: String,
    pub bandwidth_rule: String,
    pub block_rule: String,
    pub block_size: usize,
    pub t_normalized: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryFits {
    pub artfima: ArtfimaFit,
    pub arfima: ArtfimaFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkcReport {
    pub country: String,
    pub n: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub log_gdp: MemoryFits,
    pub log_co2: MemoryFits,
    /// Applied at full-sample and block level, from the log-GDP fit.
    pub normalization: MemoryNormalization,
    pub cells: Vec<CkcCell>,
    pub warnings: Vec<String>,
}

impl CkcReport {
    pub fn p_value(&self, hypothesis: &str, bandwidth_rule: &str, block_size: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.hypothesis == hypothesis && c.bandwidth_rule == bandwidth_rule && c.block_size == block_size)
            .map(|c| c.p_value)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["hypothesis", "bandwidth_rule", "block_rule", "block_size", "t_normalized", "p_value"])?;
        for c in &self.cells {
            w.write_record([
                c.hypothesis.clone(),
                c.bandwidth_rule.clone(),
                c.block_rule.clone(),
                c.block_size.to_string(),
                c.t_normalized.to_string(),
                c.p_value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Memory fits of both log series plus specification tests of log CO₂ on
/// log GDP, normalized as semi-long memory with the log-GDP `(d̂, λ̂)`.
pub fn ckc_analysis(series: &EmpiricalSeries, options: &CkcOptions) -> Result<CkcReport> {
    let n = series.len();
    let e = series.log_gdp();
    let z = series.log_co2();
    let mut warnings = Vec::new();
    if n < SHORT_SERIES_WARNING {
        warnings.push(format!("only {n} observations: block rules may collapse to very short blocks"));
    }
    let log_gdp = MemoryFits { artfima: fit_artfima00(&e)?, arfima: fit_arfima00(&e)? };
    let log_co2 = MemoryFits { artfima: fit_artfima00(&z)?, arfima: fit_arfima00(&z)? };
    for (name, fit) in [("log gdp", &log_gdp.artfima), ("log co2", &log_co2.artfima)] {
        if fit.at_boundary {
            warnings.push(format!("{name}: ARTFIMA fit ended on the parameter boundary"));
        }
    }
    let normalization = MemoryNormalization::SemiLong {
        d: log_gdp.artfima.d_hat,
        lambda: ScheduleRule::Fixed(log_gdp.artfima.lambda_hat),
    };

    let mut cells = Vec::new();
    for family in &options.hypotheses {
        for &bw in &options.bandwidth_rules {
            let cfg = SpecTestConfig::new(family.clone(), bw, options.block_rules[0], normalization)
                .with_kernel(options.kernel)
                .with_weight(options.weight.clone())
                .with_quad_cells(options.quad_cells);
            let results = run_spec_test_blocks(&e, &z, &cfg, &options.block_rules)?;
            for (rule, res) in options.block_rules.iter().zip(results) {
                cells.push(CkcCell {
                    hypothesis: family.to_string(),
                    bandwidth_rule: bw.to_string(),
                    block_rule: rule.to_string(),
                    block_size: res.block_size,
                    t_normalized: res.t_normalized,
                    p_value: res.p_value,
                });
            }
        }
    }
    Ok(CkcReport {
        country: series.country.clone(),
        n,
        first_year: series.year[0],
        last_year: series.year[n - 1],
        log_gdp,
        log_co2,
        normalization,
        cells,
        warnings,
    })
}
