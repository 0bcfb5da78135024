//! Elicitation diagnostics: hyperparameter sweeps with per-point MAP
//! summaries, and MAP log-score comparisons between settings.
//!
//! Sweeps emit plot-ready CSV (one record per grid value) and a matching
//! gnuplot script rather than rendered images. Distances are reported in
//! both conventions; the structural Hamming distance is the default
//! summary and the XOR count is the penalty's own metric.

use serde::{Deserialize, Serialize};

use crate::dag::{distance, SubjectNetwork};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::score::ScoreTable;
use crate::solver::{encode, solve, Limits, MapEstimate, SolveMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Shd,
    Xor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweptParam {
    Lambda,
    Eta,
}

/// One grid point of a sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    /// Total pairwise SHD over the linked pairs at this point.
    pub total_shd: u64,
    /// Total pairwise XOR count over the linked pairs.
    pub total_xor: u64,
    pub objective: f64,
    /// Canonical component partition of the network at this point.
    pub partition: String,
    pub estimate: MapEstimate,
}

impl SweepPoint {
    pub fn summary_distance(&self, metric: DistanceMetric) -> u64 {
        match metric {
            DistanceMetric::Shd => self.total_shd,
            DistanceMetric::Xor => self.total_xor,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub param: SweptParam,
    pub metric: DistanceMetric,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV with header `value,total_shd,total_xor,objective,partition`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,total_shd,total_xor,objective,partition\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},\"{}\"\n",
                p.value, p.total_shd, p.total_xor, p.objective, p.partition
            ));
        }
        out
    }

    /// A gnuplot script plotting distance and objective against the
    /// swept hyperparameter from the given CSV file.
    pub fn gnuplot_script(&self, csv_name: &str) -> String {
        let xlabel = match self.param {
            SweptParam::Lambda => "lambda",
            SweptParam::Eta => "eta",
        };
        let ycol = match self.metric {
            DistanceMetric::Shd => 2,
            DistanceMetric::Xor => 3,
        };
        let ylabel = match self.metric {
            DistanceMetric::Shd => "total SHD over linked pairs",
            DistanceMetric::Xor => "total XOR count over linked pairs",
        };
        format!(
            "set datafile separator ','\n\
             set xlabel '{xlabel}'\n\
             set ylabel '{ylabel}'\n\
             set y2label 'MAP objective'\n\
             set y2tics\n\
             set grid\n\
             plot '{csv_name}' every ::1 using 1:{ycol} with linespoints axes x1y1 title 'distance', \\\n\
             \x20    '{csv_name}' every ::1 using 1:4 with linespoints axes x1y2 title 'objective'\n"
        )
    }

    /// First grid value whose summary distance drops to at most the
    /// given fraction of the distance at the first grid point. Used for
    /// the replicate-variability elicitation rule.
    pub fn value_at_fraction(&self, fraction: f64) -> Option<f64> {
        let base = self.points.first()?.summary_distance(self.metric) as f64;
        let target = base * fraction;
        self.points
            .iter()
            .find(|p| (p.summary_distance(self.metric) as f64) <= target)
            .map(|p| p.value)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("sweep grid must not be empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("sweep grid must be strictly increasing"));
    }
    Ok(())
}

fn pairwise_distances(estimate: &MapEstimate, linked: &SubjectNetwork) -> Result<(u64, u64)> {
    let mut total_shd = 0;
    let mut total_xor = 0;
    for (k, l) in linked.edges() {
        let d = distance(&estimate.dags[k - 1], &estimate.dags[l - 1])?;
        total_shd += d.shd;
        total_xor += d.xor_count;
    }
    Ok((total_shd, total_xor))
}

/// Solves the fixed-network problem at each λ on the grid and reports
/// the total pairwise distance over the linked pairs.
pub fn lambda_sweep(
    tables: &[ScoreTable],
    a_fixed: &SubjectNetwork,
    grid: &[f64],
    metric: DistanceMetric,
    hp_base: &Hyperparameters,
    limits: &Limits,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let hp = hp_base.with_scalar_lambda(lambda);
        let model = encode(tables, &hp, SolveMode::FixedNetwork(a_fixed.clone()))?;
        let estimate = solve(&model, limits)
            .map_err(|e| Error::internal(format!("at grid point {lambda}: {e}")))?;
        let (total_shd, total_xor) = pairwise_distances(&estimate, a_fixed)?;
        points.push(SweepPoint {
            value: lambda,
            total_shd,
            total_xor,
            objective: estimate.objective,
            partition: a_fixed.partition_string(),
            estimate,
        });
    }
    Ok(SweepResult {
        param: SweptParam::Lambda,
        metric,
        points,
    })
}

/// Solves the joint-network problem at each η on the grid; reports the
/// component partition of the estimated network and distances over its
/// edges.
pub fn eta_sweep(
    tables: &[ScoreTable],
    hp_base: &Hyperparameters,
    grid: &[f64],
    metric: DistanceMetric,
    limits: &Limits,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for &eta in grid {
        let hp = hp_base.with_scalar_eta(eta);
        let model = encode(tables, &hp, SolveMode::JointNetwork)?;
        let estimate = solve(&model, limits)
            .map_err(|e| Error::internal(format!("at grid point {eta}: {e}")))?;
        let network = estimate.network.clone();
        let (total_shd, total_xor) = pairwise_distances(&estimate, &network)?;
        points.push(SweepPoint {
            value: eta,
            total_shd,
            total_xor,
            objective: estimate.objective,
            partition: network.partition_string(),
            estimate,
        });
    }
    Ok(SweepResult {
        param: SweptParam::Eta,
        metric,
        points,
    })
}

/// A named hyperparameter/mode setting for score comparison.
#[derive(Clone, Debug)]
pub struct ComparisonSetting {
    pub name: String,
    pub hp: Hyperparameters,
    pub mode: SolveMode,
}

#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub name: String,
    pub objective: f64,
    /// Objective minus the baseline's; positive favors this setting.
    pub delta: f64,
}

/// MAP objective per setting and differences against the named
/// baseline. All settings share the same score tables, so the deltas
/// are MAP log-score differences, not integrated Bayes factors.
pub fn log_score_comparison(
    tables: &[ScoreTable],
    settings: &[ComparisonSetting],
    baseline: &str,
    limits: &Limits,
) -> Result<Vec<ComparisonRow>> {
    if settings.is_empty() {
        return Err(Error::input("no comparison settings given"));
    }
    let mut objectives = Vec::with_capacity(settings.len());
    for setting in settings {
        let model = encode(tables, &setting.hp, setting.mode.clone())?;
        let estimate = solve(&model, limits)?;
        objectives.push(estimate.objective);
    }
    let base_idx = settings
        .iter()
        .position(|s| s.name == baseline)
        .ok_or_else(|| Error::input(format!("baseline {baseline:?} not among settings")))?;
    let base = objectives[base_idx];
    Ok(settings
        .iter()
        .zip(&objectives)
        .map(|(s, &objective)| ComparisonRow {
            name: s.name.clone(),
            objective,
            delta: objective - base,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::lambda_eta_star;
    use crate::score::ScoreTable;
    use crate::solver::independent_estimates;

    fn opposed_pair_tables() -> Vec<ScoreTable> {
        let t1 = ScoreTable::from_entries(
            "s1",
            2,
            1,
            &[(1, 0, 0.0), (1, 0b10, -3.0), (2, 0, 0.0), (2, 0b01, 1.0)],
            vec![],
        )
        .unwrap();
        let t2 = ScoreTable::from_entries(
            "s2",
            2,
            1,
            &[(1, 0, 0.0), (1, 0b10, 4.0), (2, 0, 0.0), (2, 0b01, 1.0)],
            vec![],
        )
        .unwrap();
        vec![t1, t2]
    }

    fn linked_pair() -> SubjectNetwork {
        SubjectNetwork::with_edges(2, &[(1, 2)]).unwrap()
    }

    #[test]
    fn worked_instance_sweep_distances() {
        // MAP configurations at these grid points are (1->2, 2->1),
        // (empty, 2->1), (1->2, 1->2): xor distances 2, 1, 0 and shd
        // distances 1, 1, 0 (frozen from the enumeration oracle)
        let tables = opposed_pair_tables();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        let sweep = lambda_sweep(
            &tables,
            &linked_pair(),
            &[0.5, 1.5, 3.0],
            DistanceMetric::Xor,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        let xor: Vec<u64> = sweep.points.iter().map(|p| p.total_xor).collect();
        let shd: Vec<u64> = sweep.points.iter().map(|p| p.total_shd).collect();
        let obj: Vec<f64> = sweep.points.iter().map(|p| p.objective).collect();
        assert_eq!(xor, vec![2, 1, 0]);
        assert_eq!(shd, vec![1, 1, 0]);
        assert!((obj[0] - 4.0).abs() < 1e-9);
        assert!((obj[1] - 2.5).abs() < 1e-9);
        assert!((obj[2] - 2.0).abs() < 1e-9);
        // cross-check each point against the enumeration oracle
        for (lambda, expect_xor) in [(0.5, 2u64), (1.5, 1), (3.0, 0)] {
            let hp_l = hp.with_scalar_lambda(lambda);
            let oracle = crate::solver::solve_brute_force(
                &tables,
                &hp_l,
                SolveMode::FixedNetwork(linked_pair()),
            )
            .unwrap();
            let d = distance(&oracle.dags[0], &oracle.dags[1]).unwrap();
            assert_eq!(d.xor_count, expect_xor, "oracle disagrees at {lambda}");
        }
    }

    #[test]
    fn lambda_zero_matches_independent_estimates() {
        let tables = opposed_pair_tables();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        let sweep = lambda_sweep(
            &tables,
            &linked_pair(),
            &[0.0],
            DistanceMetric::Shd,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        let indep = independent_estimates(&tables).unwrap();
        let expect = distance(&indep[0], &indep[1]).unwrap();
        assert_eq!(sweep.points[0].total_shd, expect.shd);
        assert_eq!(sweep.points[0].estimate.dags, indep);
    }

    #[test]
    fn distance_vanishes_past_the_threshold() {
        let tables = opposed_pair_tables();
        let star = lambda_eta_star(&tables).unwrap();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        let sweep = lambda_sweep(
            &tables,
            &linked_pair(),
            &[0.0, star + 1.0],
            DistanceMetric::Shd,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(sweep.points[1].total_shd, 0);
        assert_eq!(sweep.points[1].total_xor, 0);
        assert!(sweep.points[0].total_shd >= sweep.points[1].total_shd);
    }

    #[test]
    fn eta_sweep_partitions() {
        let tables = opposed_pair_tables();
        let star = lambda_eta_star(&tables).unwrap();
        let hp = Hyperparameters::scalar(1.5, 0.0, 1);
        let sweep = eta_sweep(
            &tables,
            &hp,
            &[0.0, star + 1.0],
            DistanceMetric::Shd,
            &Limits::default(),
        )
        .unwrap();
        // eta = 0: empty network preferred by tie-break -> singletons
        assert_eq!(sweep.points[0].partition, "{1|2}");
        // eta above the threshold: complete network, one component
        assert_eq!(sweep.points[1].partition, "{1,2}");
    }

    #[test]
    fn comparison_with_itself_is_zero_and_forced_identity_scores_lower() {
        let tables = opposed_pair_tables();
        let star = lambda_eta_star(&tables).unwrap();
        let at = |l: f64| Hyperparameters::scalar(l, 0.0, 1);
        let mode = || SolveMode::FixedNetwork(linked_pair());
        let rows = log_score_comparison(
            &tables,
            &[
                ComparisonSetting {
                    name: "lambda-1.5".into(),
                    hp: at(1.5),
                    mode: mode(),
                },
                ComparisonSetting {
                    name: "same".into(),
                    hp: at(1.5),
                    mode: mode(),
                },
                ComparisonSetting {
                    name: "forced-identical".into(),
                    hp: at(star + 1.0),
                    mode: mode(),
                },
            ],
            "lambda-1.5",
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(rows[1].delta, 0.0);
        // forced-identical MAP puts 1->2 in both subjects, objective 2;
        // the lambda = 1.5 MAP scores 2.5, so the gap is 0.5
        assert!((rows[0].objective - 2.5).abs() < 1e-9);
        assert!((rows[2].objective - 2.0).abs() < 1e-9);
        assert!((rows[2].delta + 0.5).abs() < 1e-9);
    }

    #[test]
    fn sweep_points_are_reproducible_in_isolation() {
        let tables = opposed_pair_tables();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        let sweep = lambda_sweep(
            &tables,
            &linked_pair(),
            &[0.5, 1.5],
            DistanceMetric::Shd,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        let single = lambda_sweep(
            &tables,
            &linked_pair(),
            &[1.5],
            DistanceMetric::Shd,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(sweep.points[1].total_shd, single.points[0].total_shd);
        assert_eq!(sweep.points[1].objective, single.points[0].objective);
        assert_eq!(
            sweep.points[1].estimate.dags,
            single.points[0].estimate.dags
        );
    }

    #[test]
    fn grid_validation() {
        let tables = opposed_pair_tables();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        for grid in [vec![], vec![1.0, 1.0], vec![2.0, 1.0]] {
            assert!(matches!(
                lambda_sweep(
                    &tables,
                    &linked_pair(),
                    &grid,
                    DistanceMetric::Shd,
                    &hp,
                    &Limits::default(),
                ),
                Err(Error::Input(_))
            ));
        }
    }

    #[test]
    fn csv_and_gnuplot_share_shape() {
        let tables = opposed_pair_tables();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        let sweep = lambda_sweep(
            &tables,
            &linked_pair(),
            &[0.5, 3.0],
            DistanceMetric::Shd,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        let csv = sweep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "value,total_shd,total_xor,objective,partition"
        );
        assert_eq!(lines.count(), 2);
        assert!(csv.contains("\"{1,2}\""));
        let script = sweep.gnuplot_script("sweep.csv");
        assert!(script.contains("set xlabel 'lambda'"));
        assert!(script.contains("using 1:2"));
    }

    #[test]
    fn fraction_rule_finds_first_grid_value() {
        let tables = opposed_pair_tables();
        let hp = Hyperparameters::scalar(0.0, 0.0, 1);
        let sweep = lambda_sweep(
            &tables,
            &linked_pair(),
            &[0.5, 1.5, 3.0],
            DistanceMetric::Xor,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        // distances are 2, 1, 0: half of the base is first reached at 1.5
        assert_eq!(sweep.value_at_fraction(0.5), Some(1.5));
    }
}
