//! Random non-dominated solution sets, exact labels, and dataset files.
//!
//! Each set is produced by:
//! 1. drawing a cardinality `num` uniformly from `1..=max_size`;
//! 2. sampling a pool of `pool_size` uniform points in `[0, 1]^m`;
//! 3. non-dominated sorting the pool into fronts F1, F2, ...;
//! 4. taking the first front with at least `num` members, or redrawing the
//!    pool (step 2) if there is none;
//! 5. choosing `num` members of that front uniformly without replacement.
//!
//! Files are JSON lines, one `{"m":..,"points":[[..],..],"hv":..}` record
//! per line, floats written with 17 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{hv_exact, hv_oracle_incl_excl};
use crate::hvnet::{to_json_17, LabeledSet};
use crate::pareto::{front_indices, Point, ReferencePoint, SolutionSet};
use crate::rng::{self, Rng};

/// Pool redraws allowed before giving up on one set.
pub const RETRY_CAP: usize = 1000;
/// Labels of sets up to this size are cross-checked by inclusion-exclusion.
pub const ORACLE_CHECK_MAX: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub m: usize,
    pub num_sets: usize,
    pub max_size: usize,
    pub pool_size: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(m: usize, num_sets: usize, seed: u64) -> Self {
        Self { m, num_sets, max_size: 100, pool_size: 1000, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::TooFewObjectives(self.m));
        }
        if self.num_sets == 0 || self.max_size == 0 || self.pool_size == 0 {
            return Err(Error::InvalidArgument("set count, set size and pool size must be positive".into()));
        }
        if self.max_size > self.pool_size {
            return Err(Error::InvalidArgument(format!(
                "max set size {} exceeds the candidate pool of {}",
                self.max_size, self.pool_size
            )));
        }
        Ok(())
    }
}

/// One random non-dominated set inside `[0, 1)^m`.
pub fn generate_solution_set(cfg: &GenConfig, rng: &mut Rng) -> Result<SolutionSet> {
    cfg.validate()?;
    let num = rng.random_range(1..=cfg.max_size);
    for _ in 0..RETRY_CAP {
        let pool: Vec<Vec<f64>> = (0..cfg.pool_size)
            .map(|_| (0..cfg.m).map(|_| rng.random::<f64>()).collect())
            .collect();
        if let Some(front) = front_indices(&pool).into_iter().find(|f| f.len() >= num) {
            let chosen = front.choose_multiple(rng, num);
            let points = chosen
                .map(|&i| Point::new(pool[i].clone()))
                .collect::<Result<Vec<_>>>()?;
            match SolutionSet::new(points) {
                // Repeated draws: redraw the pool.
                Err(Error::DuplicatePoint { .. }) => continue,
                other => return other,
            }
        }
    }
    Err(Error::RetryLimit(RETRY_CAP))
}

fn label(set: SolutionSet) -> Result<LabeledSet> {
    let r = ReferencePoint::unit(set.dim());
    let hv = hv_exact(&set, &r)?;
    if set.len() <= ORACLE_CHECK_MAX {
        let check = hv_oracle_incl_excl(&set, &r)?;
        if (hv - check).abs() > 1e-9 * hv.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "exact hypervolume {hv} disagrees with inclusion-exclusion {check}"
            )));
        }
    }
    Ok(LabeledSet { set, hv })
}

/// `cfg.num_sets` labeled sets. Set `i` draws from its own stream of
/// `cfg.seed`, so the output does not depend on thread scheduling.
pub fn generate_labeled_dataset(cfg: &GenConfig) -> Result<Vec<LabeledSet>> {
    cfg.validate()?;
    (0..cfg.num_sets)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, i as u64);
            label(generate_solution_set(cfg, &mut rng)?)
        })
        .collect()
}

/// `groups` disjoint test groups of `cfg.num_sets` sets each.
pub fn generate_test_groups(cfg: &GenConfig, groups: usize) -> Result<Vec<Vec<LabeledSet>>> {
    let all = GenConfig { num_sets: cfg.num_sets * groups, ..cfg.clone() };
    let mut data = generate_labeled_dataset(&all)?;
    let mut out = Vec::with_capacity(groups);
    for _ in 0..groups {
        let rest = data.split_off(cfg.num_sets);
        out.push(data);
        data = rest;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Files

#[derive(Serialize, Deserialize)]
struct Record {
    m: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hv: Option<f64>,
}

/// A set read from disk; `hv` is present when the file carries labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SetRecord {
    pub set: SolutionSet,
    pub hv: Option<f64>,
}

pub fn write_dataset_to<W: Write>(mut out: W, data: &[LabeledSet]) -> Result<()> {
    for item in data {
        write_record(&mut out, &item.set, Some(item.hv))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sets_to<W: Write>(mut out: W, sets: &[SolutionSet]) -> Result<()> {
    for set in sets {
        write_record(&mut out, set, None)?;
    }
    out.flush()?;
    Ok(())
}

fn write_record<W: Write>(out: &mut W, set: &SolutionSet, hv: Option<f64>) -> Result<()> {
    let record = Record {
        m: set.dim(),
        points: set.iter().map(|p| p.coords().to_vec()).collect(),
        hv,
    };
    to_json_17(&mut *out, &record)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_dataset(path: impl AsRef<Path>, data: &[LabeledSet]) -> Result<()> {
    write_dataset_to(BufWriter::new(File::create(path)?), data)
}

/// Reads records, labeled or not. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn read_sets_from<R: BufRead>(input: R, origin: &Path) -> Result<Vec<SetRecord>> {
    let parse_err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let mut records = Vec::new();
    for (i, text) in input.lines().enumerate() {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&text).map_err(|e| parse_err(line, e.to_string()))?;
        if let Some(p) = record.points.iter().position(|p| p.len() != record.m) {
            return Err(parse_err(
                line,
                format!("point {p} has {} coordinates but m = {}", record.points[p].len(), record.m),
            ));
        }
        let wrap = |source: Error| Error::Record { path: origin.to_path_buf(), line, source: Box::new(source) };
        let set = SolutionSet::from_rows(record.points).map_err(wrap)?;
        records.push(SetRecord { set, hv: record.hv });
    }
    Ok(records)
}

pub fn read_sets(path: impl AsRef<Path>) -> Result<Vec<SetRecord>> {
    let path = path.as_ref();
    read_sets_from(BufReader::new(File::open(path)?), path)
}

pub fn read_dataset_from<R: BufRead>(input: R, origin: &Path) -> Result<Vec<LabeledSet>> {
    let records = read_sets_from(input, origin)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.hv {
            Some(hv) => Ok(LabeledSet { set: r.set, hv }),
            None => Err(Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: "record has no hv label".into(),
            }),
        })
        .collect()
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledSet>> {
    let path = path.as_ref();
    read_dataset_from(BufReader::new(File::open(path)?), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::validate_solution_set;

    #[test]
    fn generated_sets_are_valid_and_deterministic() {
        let cfg = GenConfig::new(3, 1, 0);
        for seed in 0..20 {
            let a = generate_solution_set(&cfg, &mut rng::seeded(seed)).unwrap();
            validate_solution_set(a.points().to_vec()).unwrap();
            assert!(a.len() <= 100);
            assert!(a.iter().all(|p| p.coords().iter().all(|&x| (0.0..1.0).contains(&x))));
            let b = generate_solution_set(&cfg, &mut rng::seeded(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cardinality_is_uniform() {
        // Chi-square goodness of fit, 99 degrees of freedom. The 0.999
        // quantile (148.2304) was computed with scipy.stats.chi2.ppf.
        const CRITICAL: f64 = 148.230_359;
        let cfg = GenConfig::new(3, 10_000, 12);
        let counts = (0..cfg.num_sets)
            .into_par_iter()
            .map(|i| generate_solution_set(&cfg, &mut rng::stream(cfg.seed, i as u64)).unwrap().len())
            .fold(|| vec![0usize; 101], |mut acc, n| {
                acc[n] += 1;
                acc
            })
            .reduce(|| vec![0usize; 101], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
        assert_eq!(counts[0], 0);
        let expected = cfg.num_sets as f64 / 100.0;
        let stat: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(stat < CRITICAL, "chi-square {stat}");
    }

    #[test]
    fn labels_are_exact() {
        let cfg = GenConfig { max_size: 12, ..GenConfig::new(4, 100, 3) };
        let data = generate_labeled_dataset(&cfg).unwrap();
        assert_eq!(data.len(), 100);
        for item in &data {
            assert!(item.hv > 0.0 && item.hv < 1.0);
            let oracle = hv_oracle_incl_excl(&item.set, &ReferencePoint::unit(4)).unwrap();
            assert!((item.hv - oracle).abs() <= 1e-9 * item.hv.max(1.0));
            if item.set.len() == 1 {
                let single: f64 = item.set.points()[0].coords().iter().map(|x| 1.0 - x).product();
                assert_eq!(item.hv, single);
            }
        }
    }

    #[test]
    fn seeds_change_the_data() {
        let a = generate_labeled_dataset(&GenConfig::new(3, 5, 1)).unwrap();
        let b = generate_labeled_dataset(&GenConfig::new(3, 5, 1)).unwrap();
        let c = generate_labeled_dataset(&GenConfig::new(3, 5, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(GenConfig::new(1, 5, 0).validate().is_err());
        assert!(GenConfig { max_size: 2000, ..GenConfig::new(3, 5, 0) }.validate().is_err());
        assert!(GenConfig { num_sets: 0, ..GenConfig::new(3, 5, 0) }.validate().is_err());
    }

    #[test]
    fn impossible_sizes_hit_the_retry_cap() {
        let cfg = GenConfig { max_size: 40, pool_size: 40, ..GenConfig::new(2, 1, 0) };
        // Forty mutually non-dominated points out of forty uniform draws in
        // the plane never happens in practice.
        let mut rng = rng::seeded(1);
        let hit = (0..200).any(|_| matches!(generate_solution_set(&cfg, &mut rng), Err(Error::RetryLimit(_))));
        assert!(hit);
    }

    #[test]
    fn files_round_trip_bit_exactly() {
        let data = generate_labeled_dataset(&GenConfig { max_size: 10, ..GenConfig::new(3, 1000, 5) }).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &data).unwrap();
        let back = read_dataset_from(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back.len(), data.len());
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.hv.to_bits(), b.hv.to_bits());
            for (p, q) in a.set.iter().zip(b.set.iter()) {
                for (x, y) in p.coords().iter().zip(q.coords()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn malformed_records_name_the_line() {
        let text = "{\"m\":2,\"points\":[[0.1,0.9]],\"hv\":0.09}\n{\"m\":2,\"points\":[[0.1,0.9],[0.5]],\"hv\":0.1}\n";
        match read_dataset_from(text.as_bytes(), Path::new("d.jsonl")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let dominated = "\n{\"m\":2,\"points\":[[0.1,0.1],[0.5,0.5]],\"hv\":0.1}\n";
        match read_dataset_from(dominated.as_bytes(), Path::new("d.jsonl")) {
            Err(Error::Record { line, source, .. }) => {
                assert_eq!(line, 2);
                assert!(matches!(*source, Error::DominatedPair { dominating: 0, dominated: 1 }));
            }
            other => panic!("{other:?}"),
        }
        assert!(read_dataset_from("not json\n".as_bytes(), Path::new("x")).is_err());
        let unlabeled = "{\"m\":2,\"points\":[[0.1,0.9]]}\n";
        assert!(read_dataset_from(unlabeled.as_bytes(), Path::new("x")).is_err());
        assert_eq!(read_sets_from(unlabeled.as_bytes(), Path::new("x")).unwrap()[0].hv, None);
    }
}
