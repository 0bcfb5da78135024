//! Local score tables: per-(node, parent-set) log evidence minus the
//! binomial multiplicity penalty. These are the sufficient statistics
//! for every optimization in the crate; once cached, nothing downstream
//! touches the filter again.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::{parent_set_masks, Dag};
use crate::dlm::{node_log_evidence_with_delta, DlmConfig};
use crate::error::{Error, Result};
use crate::math::ln_binomial;
use crate::timeseries::TimeSeries;

/// Cached scores s(i, π) for one subject. Pairs with |π| > d_max are
/// not stored and read back as negative infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    subject: String,
    p: usize,
    d_max: usize,
    scores: Vec<BTreeMap<u64, f64>>,
    chosen_delta: Vec<f64>,
}

impl ScoreTable {
    /// Assembles a table from explicit entries; used by tests, fixtures
    /// and the cache reader. Validates completeness and admissibility.
    pub fn from_entries(
        subject: impl Into<String>,
        p: usize,
        d_max: usize,
        entries: &[(usize, u64, f64)],
        chosen_delta: Vec<f64>,
    ) -> Result<ScoreTable> {
        if p == 0 || p > crate::dag::MAX_VERTICES {
            return Err(Error::input(format!("vertex count {p} unsupported")));
        }
        if d_max > p - 1 {
            return Err(Error::input(format!(
                "d_max {d_max} exceeds p-1 = {}",
                p - 1
            )));
        }
        let subject = subject.into();
        let mut scores: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); p];
        for &(node, mask, score) in entries {
            if node == 0 || node > p {
                return Err(Error::input(format!("node {node} outside 1..={p}")));
            }
            if mask.count_ones() as usize > d_max {
                return Err(Error::input(format!(
                    "entry ({node}, {mask:#x}) has more than d_max = {d_max} parents"
                )));
            }
            if mask & (1u64 << (node - 1)) != 0 {
                return Err(Error::input(format!(
                    "entry ({node}, {mask:#x}) lists the node as its own parent"
                )));
            }
            if p < 64 && mask >> p != 0 {
                return Err(Error::input(format!(
                    "entry ({node}, {mask:#x}) references a vertex outside 1..={p}"
                )));
            }
            if !score.is_finite() {
                return Err(Error::input(format!(
                    "entry ({node}, {mask:#x}) has non-finite score {score}"
                )));
            }
            if scores[node - 1].insert(mask, score).is_some() {
                return Err(Error::input(format!(
                    "duplicate entry for ({node}, {mask:#x})"
                )));
            }
        }
        let chosen_delta = if chosen_delta.is_empty() {
            vec![1.0; p]
        } else if chosen_delta.len() == p {
            chosen_delta
        } else {
            return Err(Error::input(format!(
                "expected {p} per-node discounts, got {}",
                chosen_delta.len()
            )));
        };
        let table = ScoreTable {
            subject,
            p,
            d_max,
            scores,
            chosen_delta,
        };
        table.validate_complete()?;
        Ok(table)
    }

    fn validate_complete(&self) -> Result<()> {
        for node in 1..=self.p {
            let expected = parent_set_masks(self.p, node, self.d_max);
            if self.scores[node - 1].len() != expected.len() {
                return Err(Error::input(format!(
                    "subject {}: node {node} has {} entries, expected {}",
                    self.subject,
                    self.scores[node - 1].len(),
                    expected.len()
                )));
            }
        }
        Ok(())
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn chosen_delta(&self) -> &[f64] {
        &self.chosen_delta
    }

    /// Score of (node, parent mask); negative infinity when the parent
    /// set is inadmissible.
    pub fn get(&self, node: usize, mask: u64) -> f64 {
        self.scores[node - 1]
            .get(&mask)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Admissible (mask, score) pairs for a node, ascending by mask.
    pub fn entries(&self, node: usize) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.scores[node - 1].iter().map(|(&m, &s)| (m, s))
    }

    /// Sum of scores along a DAG's parent sets.
    pub fn dag_score(&self, dag: &Dag) -> f64 {
        (1..=self.p)
            .map(|i| self.get(i, dag.parent_mask(i)))
            .sum()
    }

    /// Max and min over the finite entries of one node.
    pub fn finite_range(&self, node: usize) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, s) in self.entries(node) {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::input(format!(
                "subject {}: node {node} has no finite score",
                self.subject
            )));
        }
        Ok((hi, lo))
    }
}

/// A multiplicity-only table for a latent prototype: zero data term,
/// so s(i, π) is just the binomial penalty.
pub fn prototype_table(subject: impl Into<String>, p: usize, d_max: usize) -> ScoreTable {
    let mut entries = Vec::new();
    for node in 1..=p {
        for mask in parent_set_masks(p, node, d_max) {
            entries.push((node, mask, -ln_binomial(p, mask.count_ones() as usize)));
        }
    }
    ScoreTable::from_entries(subject, p, d_max, &entries, vec![1.0; p])
        .expect("prototype table construction cannot fail")
}

/// Builds the score table for one subject: per node, the discount is
/// picked from the grid (when configured) by the node's best raw
/// evidence over admissible parent sets, and every admissible entry is
/// then the evidence minus log C(P, |π|).
pub fn build_score_table(
    series: &TimeSeries,
    d_max: usize,
    config: &DlmConfig,
) -> Result<ScoreTable> {
    config.validate()?;
    let p = series.p();
    if d_max > p.saturating_sub(1) {
        return Err(Error::input(format!(
            "d_max {d_max} exceeds p-1 = {}",
            p - 1
        )));
    }
    let grid = config.grid();

    // flatten (node, delta, mask) jobs so rayon slots results
    // deterministically regardless of scheduling
    let mut jobs: Vec<(usize, usize, u64)> = Vec::new();
    let mut node_masks: Vec<Vec<u64>> = Vec::with_capacity(p);
    for node in 1..=p {
        let masks = parent_set_masks(p, node, d_max);
        for (di, _) in grid.iter().enumerate() {
            for &mask in &masks {
                jobs.push((node, di, mask));
            }
        }
        node_masks.push(masks);
    }
    let evidences: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(node, di, mask)| {
            node_log_evidence_with_delta(series, node, mask, config, grid[di]).map_err(|e| {
                Error::numerical(format!(
                    "scoring node {node}, parents mask {mask:#x}, delta {}: {e}",
                    grid[di]
                ))
            })
        })
        .collect();

    let mut cursor = 0usize;
    let mut entries = Vec::new();
    let mut chosen_delta = Vec::with_capacity(p);
    for node in 1..=p {
        let masks = &node_masks[node - 1];
        let mut per_delta: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
        for _ in &grid {
            let mut vals = Vec::with_capacity(masks.len());
            for _ in masks {
                match &evidences[cursor] {
                    Ok(v) => vals.push(*v),
                    Err(e) => return Err(Error::numerical(e.to_string())),
                }
                cursor += 1;
            }
            per_delta.push(vals);
        }
        // pick the discount whose best parent set has the highest raw
        // evidence; ties go to the earliest grid entry
        let mut best_di = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (di, vals) in per_delta.iter().enumerate() {
            let node_best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if node_best > best_val {
                best_val = node_best;
                best_di = di;
            }
        }
        chosen_delta.push(grid[best_di]);
        for (t, &mask) in masks.iter().enumerate() {
            let penalty = ln_binomial(p, mask.count_ones() as usize);
            entries.push((node, mask, per_delta[best_di][t] - penalty));
        }
    }
    ScoreTable::from_entries(series.subject(), p, d_max, &entries, chosen_delta)
}

// --- cache file format ---------------------------------------------------
//
// Line-delimited text. Two header lines:
//   #%multidag-score-cache v1
//   #%meta {json}
// then one record per admissible (node, parent-set) pair:
//   subject \t node \t mask \t score
// Scores are printed with 17 significant digits so the round-trip is
// bit-exact.

const CACHE_MAGIC: &str = "#%multidag-score-cache v1";

#[derive(Serialize, Deserialize)]
struct CacheMeta {
    subject: String,
    p: usize,
    d_max: usize,
    tool_version: String,
    config: DlmConfig,
    chosen_delta: Vec<f64>,
}

/// Renders a score table in the cache format.
pub fn cache_to_string(table: &ScoreTable, config: &DlmConfig) -> String {
    let meta = CacheMeta {
        subject: table.subject.clone(),
        p: table.p,
        d_max: table.d_max,
        tool_version: crate::VERSION.to_string(),
        config: config.clone(),
        chosen_delta: table.chosen_delta.clone(),
    };
    let mut out = String::new();
    out.push_str(CACHE_MAGIC);
    out.push('\n');
    out.push_str("#%meta ");
    out.push_str(&serde_json::to_string(&meta).expect("meta serializes"));
    out.push('\n');
    for node in 1..=table.p {
        for (mask, score) in table.entries(node) {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.16e}\n",
                table.subject, node, mask, score
            ));
        }
    }
    out
}

/// Parses a cache file produced by [`cache_to_string`]. Returns the
/// table and the configuration recorded in its header. Lines starting
/// with `#%config` (the embedded run configuration) are ignored.
pub fn cache_from_reader(read: impl Read, path: &str) -> Result<(ScoreTable, DlmConfig)> {
    let reader = BufReader::new(read);
    let mut lines = reader
        .lines()
        .enumerate()
        .filter(|(_, line)| match line {
            Ok(text) => !text.starts_with("#%config"),
            Err(_) => true,
        });

    let parse_err = |record: usize, message: String| Error::Parse {
        path: path.to_string(),
        record,
        message,
    };

    let (_, magic) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty cache file".into()))?;
    let magic = magic.map_err(|e| parse_err(1, e.to_string()))?;
    if magic.trim() != CACHE_MAGIC {
        return Err(parse_err(1, format!("bad magic line {magic:?}")));
    }
    let (_, meta_line) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing meta line".into()))?;
    let meta_line = meta_line.map_err(|e| parse_err(2, e.to_string()))?;
    let meta_json = meta_line
        .strip_prefix("#%meta ")
        .ok_or_else(|| parse_err(2, "missing #%meta prefix".into()))?;
    let meta: CacheMeta =
        serde_json::from_str(meta_json).map_err(|e| parse_err(2, e.to_string()))?;

    let mut entries = Vec::new();
    for (idx, line) in lines {
        let record = idx + 1;
        let line = line.map_err(|e| parse_err(record, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let subject = fields
            .next()
            .ok_or_else(|| parse_err(record, "missing subject".into()))?;
        if subject != meta.subject {
            return Err(parse_err(
                record,
                format!("subject {subject:?} does not match header {:?}", meta.subject),
            ));
        }
        let node: usize = fields
            .next()
            .ok_or_else(|| parse_err(record, "missing node".into()))?
            .parse()
            .map_err(|e| parse_err(record, format!("bad node: {e}")))?;
        let mask: u64 = fields
            .next()
            .ok_or_else(|| parse_err(record, "missing mask".into()))?
            .parse()
            .map_err(|e| parse_err(record, format!("bad mask: {e}")))?;
        let score: f64 = fields
            .next()
            .ok_or_else(|| parse_err(record, "missing score".into()))?
            .parse()
            .map_err(|e| parse_err(record, format!("bad score: {e}")))?;
        if fields.next().is_some() {
            return Err(parse_err(record, "trailing fields".into()));
        }
        entries.push((node, mask, score));
    }
    let table = ScoreTable::from_entries(
        meta.subject.clone(),
        meta.p,
        meta.d_max,
        &entries,
        meta.chosen_delta.clone(),
    )
    .map_err(|e| parse_err(0, e.to_string()))?;
    Ok((table, meta.config))
}

/// Reads a cache file from disk.
pub fn read_cache(path: &Path) -> Result<(ScoreTable, DlmConfig)> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening score cache {display}"), e))?;
    cache_from_reader(file, &display)
}
