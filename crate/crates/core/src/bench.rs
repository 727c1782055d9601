//! Error-versus-runtime harness.
//!
//! Every method is run over every test group. For each (method, config, m,
//! group) cell the harness records the mean relative error against the
//! stored exact labels and the wall-clock time of the evaluation loop. The
//! timed region covers the method's per-cell preparation (direction
//! generation for the line method) and the estimate of every set; it
//! excludes file IO, label computation and error bookkeeping. A warm-up pass
//! over the first few sets of each cell runs untimed beforehand.

use std::collections::{BTreeMap, HashMap};
use std::hint::black_box;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::read_dataset;
use crate::error::{Error, Result};
use crate::exact::hv_exact;
use crate::hvnet::{loss_mape, HvNetModel, LabeledSet};
use crate::line::{generate_unv_directions, hv_line, DirectionSet};
use crate::mc::{hv_mc_with, UniformSampler};
use crate::pareto::{ReferencePoint, SolutionSet};
use crate::rng;

pub const CSV_HEADER: [&str; 6] = ["method", "config", "m", "group", "mean_error", "runtime_s"];
const WARMUP_SETS: usize = 100;

/// Relative error `|approx - exact| / |exact|`.
pub fn approximation_error(approx: f64, exact: f64) -> Result<f64> {
    loss_mape(approx, exact)
}

/// Sample counts 100, 200, ..., 2000.
pub fn point_grid() -> Vec<usize> {
    (1..=20).map(|i| 100 * i).collect()
}

/// Direction counts 10, 20, ..., 200.
pub fn line_grid() -> Vec<usize> {
    (1..=20).map(|i| 10 * i).collect()
}

/// A hypervolume estimator for canonical-frame sets (reference point
/// `(1, ..., 1)`).
pub trait Approximator {
    fn method(&self) -> &str;
    fn config(&self) -> String;
    /// Per-cell setup, timed together with the estimates.
    fn prepare(&mut self, _m: usize) -> Result<()> {
        Ok(())
    }
    /// `index` identifies the set within its group.
    fn estimate(&self, index: usize, set: &SolutionSet) -> Result<f64>;
}

/// Monte Carlo with `k` samples; set `i` uses stream `i` of `seed`.
pub struct PointMethod {
    pub k: usize,
    pub seed: u64,
}

impl Approximator for PointMethod {
    fn method(&self) -> &str {
        "point"
    }

    fn config(&self) -> String {
        format!("k={}", self.k)
    }

    fn estimate(&self, index: usize, set: &SolutionSet) -> Result<f64> {
        let mut sampler = UniformSampler::from_rng(rng::stream(self.seed, index as u64));
        hv_mc_with(set, &ReferencePoint::unit(set.dim()), self.k, &mut sampler)
    }
}

/// Line-based estimate with `n` directions shared by a whole cell.
pub struct LineMethod {
    pub n: usize,
    pub seed: u64,
    dirs: Option<DirectionSet>,
}

impl LineMethod {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, dirs: None }
    }
}

impl Approximator for LineMethod {
    fn method(&self) -> &str {
        "line"
    }

    fn config(&self) -> String {
        format!("n={}", self.n)
    }

    fn prepare(&mut self, m: usize) -> Result<()> {
        self.dirs = Some(generate_unv_directions(self.n, m, self.seed)?);
        Ok(())
    }

    fn estimate(&self, _index: usize, set: &SolutionSet) -> Result<f64> {
        let dirs = self
            .dirs
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("line method used before prepare".into()))?;
        hv_line(set, &ReferencePoint::unit(set.dim()), dirs)
    }
}

/// Trained regressors keyed by objective count.
pub struct HvNetMethod {
    id: String,
    models: HashMap<usize, HvNetModel>,
    active: Option<usize>,
}

impl HvNetMethod {
    pub fn new(id: impl Into<String>, models: impl IntoIterator<Item = HvNetModel>) -> Self {
        Self {
            id: id.into(),
            models: models.into_iter().map(|m| (m.meta.m, m)).collect(),
            active: None,
        }
    }
}

impl Approximator for HvNetMethod {
    fn method(&self) -> &str {
        "hvnet"
    }

    fn config(&self) -> String {
        self.id.clone()
    }

    fn prepare(&mut self, m: usize) -> Result<()> {
        if !self.models.contains_key(&m) {
            return Err(Error::InvalidArgument(format!("no HV-Net model for m = {m}")));
        }
        self.active = Some(m);
        Ok(())
    }

    fn estimate(&self, _index: usize, set: &SolutionSet) -> Result<f64> {
        let model = self
            .active
            .and_then(|m| self.models.get(&m))
            .ok_or_else(|| Error::InvalidArgument("hvnet method used before prepare".into()))?;
        model.predict(set)
    }
}

/// Exact hypervolume; a zero-error reference row.
pub struct ExactMethod;

impl Approximator for ExactMethod {
    fn method(&self) -> &str {
        "exact"
    }

    fn config(&self) -> String {
        "-".into()
    }

    fn estimate(&self, _index: usize, set: &SolutionSet) -> Result<f64> {
        hv_exact(set, &ReferencePoint::unit(set.dim()))
    }
}

#[derive(Debug, Clone)]
pub struct TestGroup {
    pub m: usize,
    pub id: usize,
    pub sets: Vec<LabeledSet>,
}

impl TestGroup {
    pub fn new(id: usize, sets: Vec<LabeledSet>) -> Result<Self> {
        let m = sets.first().ok_or(Error::Empty)?.set.dim();
        if let Some(bad) = sets.iter().find(|s| s.set.dim() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.set.dim() });
        }
        Ok(Self { m, id, sets })
    }
}

/// Reads group files; groups with the same `m` are numbered 0, 1, ... in
/// the order given.
pub fn load_groups<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<TestGroup>> {
    let mut next_id: BTreeMap<usize, usize> = BTreeMap::new();
    paths
        .iter()
        .map(|p| {
            let sets = read_dataset(p)?;
            let m = sets.first().ok_or(Error::Empty)?.set.dim();
            let id = next_id.entry(m).or_insert(0);
            let group = TestGroup::new(*id, sets)?;
            *id += 1;
            Ok(group)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub config: String,
    pub m: usize,
    pub group: usize,
    pub mean_error: f64,
    pub runtime_s: f64,
}

/// Runs every method on every group, ordered by method, then m, then group.
pub fn run_benchmark(methods: &mut [Box<dyn Approximator + '_>], groups: &[TestGroup]) -> Result<Vec<BenchRecord>> {
    let mut order: Vec<&TestGroup> = groups.iter().collect();
    order.sort_by_key(|g| (g.m, g.id));
    let mut records = Vec::with_capacity(methods.len() * groups.len());
    for method in methods.iter_mut() {
        for group in &order {
            records.push(run_cell(method.as_mut(), group)?);
        }
    }
    Ok(records)
}

fn run_cell(method: &mut dyn Approximator, group: &TestGroup) -> Result<BenchRecord> {
    method.prepare(group.m)?;
    for (i, item) in group.sets.iter().take(WARMUP_SETS).enumerate() {
        black_box(method.estimate(i, &item.set)?);
    }

    let start = Instant::now();
    method.prepare(group.m)?;
    let mut estimates = Vec::with_capacity(group.sets.len());
    for (i, item) in group.sets.iter().enumerate() {
        estimates.push(black_box(method.estimate(i, &item.set)?));
    }
    let runtime_s = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);

    let mut total = 0.0;
    for (est, item) in estimates.iter().zip(&group.sets) {
        total += approximation_error(*est, item.hv)?;
    }
    Ok(BenchRecord {
        method: method.method().to_string(),
        config: method.config(),
        m: group.m,
        group: group.id,
        mean_error: total / group.sets.len() as f64,
        runtime_s,
    })
}

/// Formats like C's `%.{digits}g`: significant digits, trailing zeros
/// dropped, scientific notation for very large or small magnitudes.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits, the precision of all reported numbers.
pub fn sig9(x: f64) -> String {
    format_sig(x, 9)
}

pub fn write_records_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            r.config.clone(),
            r.m.to_string(),
            r.group.to_string(),
            sig9(r.mean_error),
            sig9(r.runtime_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per (method, config, m) aggregate over groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub method: String,
    pub config: String,
    pub m: usize,
    pub groups: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_runtime_s: f64,
}

pub fn summarize(records: &[BenchRecord]) -> Vec<BenchSummary> {
    let mut cells: Vec<((String, String, usize), Vec<&BenchRecord>)> = Vec::new();
    for r in records {
        let key = (r.method.clone(), r.config.clone(), r.m);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(r),
            None => cells.push((key, vec![r])),
        }
    }
    cells
        .into_iter()
        .map(|((method, config, m), rows)| {
            let n = rows.len() as f64;
            let mean = rows.iter().map(|r| r.mean_error).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r.mean_error - mean).powi(2)).sum::<f64>() / n;
            BenchSummary {
                method,
                config,
                m,
                groups: rows.len(),
                mean_error: mean,
                std_error: var.sqrt(),
                mean_runtime_s: rows.iter().map(|r| r.runtime_s).sum::<f64>() / n,
            }
        })
        .collect()
}
