//! k-means clustering of DAGs: subjects are linked to exactly one of L
//! latent prototype DAGs, and subject graphs, prototypes and the
//! assignment are optimized jointly.
//!
//! Prototypes carry no data; their local scores are the multiplicity
//! prior alone, which keeps them from absorbing spurious edges. The
//! assignment is reported in canonical form (cluster labels renumbered
//! by first appearance over subjects), since the optimum is defined
//! only up to label permutation.

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::score::ScoreTable;
use crate::solver::{
    encode, solve, solve_brute_force, Certificate, ClusterSpec, Limits, MapEstimate, SolveMode,
    SolveStats,
};

/// A clustering solution with canonical labels.
#[derive(Clone, Debug)]
pub struct ClusterResult {
    pub subject_dags: Vec<Dag>,
    /// Prototypes reordered to match the canonical labels; prototypes of
    /// empty clusters follow in their original order.
    pub prototypes: Vec<Dag>,
    /// Canonical cluster label per subject, 1-based.
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub certificate: Certificate,
    pub stats: SolveStats,
}

/// Renumbers cluster labels by order of first appearance.
pub fn canonicalize(assignment: &[usize]) -> Vec<usize> {
    let mut relabel: Vec<(usize, usize)> = Vec::new(); // (original, canonical)
    let mut out = Vec::with_capacity(assignment.len());
    for &label in assignment {
        let canonical = match relabel.iter().find(|&&(orig, _)| orig == label) {
            Some(&(_, c)) => c,
            None => {
                let c = relabel.len() + 1;
                relabel.push((label, c));
                c
            }
        };
        out.push(canonical);
    }
    out
}

/// Certified optimum of the constrained clustering problem.
pub fn solve_clustering(
    tables: &[ScoreTable],
    hp: &Hyperparameters,
    spec: ClusterSpec,
    limits: &Limits,
) -> Result<ClusterResult> {
    let model = encode(tables, hp, SolveMode::Clustering(spec))?;
    let estimate = solve(&model, limits)?;
    cluster_result_from_estimate(&estimate, spec)
}

/// Exhaustive-enumeration twin of [`solve_clustering`].
pub fn solve_clustering_brute_force(
    tables: &[ScoreTable],
    hp: &Hyperparameters,
    spec: ClusterSpec,
) -> Result<ClusterResult> {
    let estimate = solve_brute_force(tables, hp, SolveMode::Clustering(spec))?;
    cluster_result_from_estimate(&estimate, spec)
}

/// Converts a raw solver estimate over K + L vertices into the
/// canonical clustering view.
pub fn cluster_result_from_estimate(
    estimate: &MapEstimate,
    spec: ClusterSpec,
) -> Result<ClusterResult> {
    let k = spec.subject_count;
    let l = spec.l_clusters;
    if estimate.dags.len() != k + l {
        return Err(Error::input(format!(
            "estimate carries {} DAGs, expected {} subjects + {} prototypes",
            estimate.dags.len(),
            k,
            l
        )));
    }
    // raw assignment: the unique prototype each subject is linked to
    let mut raw = Vec::with_capacity(k);
    for subject in 1..=k {
        let mut found: Option<usize> = None;
        for m in 1..=l {
            if estimate.network.contains(subject, k + m) {
                if found.is_some() {
                    return Err(Error::internal(format!(
                        "subject {subject} linked to two prototypes"
                    )));
                }
                found = Some(m);
            }
        }
        raw.push(found.ok_or_else(|| {
            Error::internal(format!("subject {subject} linked to no prototype"))
        })?);
    }
    let assignment = canonicalize(&raw);
    // map canonical label -> original prototype index
    let mut used: Vec<usize> = Vec::new();
    for &orig in &raw {
        if !used.contains(&orig) {
            used.push(orig);
        }
    }
    let mut prototypes: Vec<Dag> = used
        .iter()
        .map(|&m| estimate.dags[k + m - 1].clone())
        .collect();
    for m in 1..=l {
        if !used.contains(&m) {
            prototypes.push(estimate.dags[k + m - 1].clone());
        }
    }
    Ok(ClusterResult {
        subject_dags: estimate.dags[..k].to_vec(),
        prototypes,
        assignment,
        objective: estimate.objective,
        certificate: estimate.certificate,
        stats: estimate.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::parent_set_masks;
    use crate::enumerate::enumerate_dags;
    use crate::prior::lambda_eta_star;

    fn table_with(
        subject: &str,
        p: usize,
        d_max: usize,
        boosts: &[(usize, u64, f64)],
    ) -> ScoreTable {
        let mut entries = Vec::new();
        for node in 1..=p {
            for mask in parent_set_masks(p, node, d_max) {
                let boost = boosts
                    .iter()
                    .find(|&&(n, m, _)| n == node && m == mask)
                    .map(|&(_, _, b)| b)
                    .unwrap_or(0.0);
                entries.push((node, mask, boost));
            }
        }
        ScoreTable::from_entries(subject, p, d_max, &entries, vec![]).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[7, 3, 7]), vec![1, 2, 1]);
        assert_eq!(canonicalize(&[1, 2, 1]), vec![1, 2, 1]);
        assert_eq!(canonicalize(&[4, 4, 4]), vec![1, 1, 1]);
    }

    #[test]
    fn single_cluster_with_large_lambda_collapses_to_common_dag() {
        // two subjects with opposed preferences; lambda above the
        // threshold forces both onto the prototype
        let t1 = table_with("a", 2, 1, &[(2, 0b01, 1.0)]); // likes 1->2
        let t2 = table_with("b", 2, 1, &[(1, 0b10, 4.0), (2, 0b01, 1.0)]);
        let tables = vec![t1, t2];
        let star = lambda_eta_star(&tables).unwrap();
        let hp = Hyperparameters::scalar(star + 1.0, 0.0, 1);
        let spec = ClusterSpec {
            l_clusters: 1,
            subject_count: 2,
        };
        let result = solve_clustering(&tables, &hp, spec, &Limits::default()).unwrap();
        assert_eq!(result.subject_dags[0], result.subject_dags[1]);
        assert_eq!(result.subject_dags[0], result.prototypes[0]);
        // independent oracle: best common DAG over the enumeration
        let mut best = f64::NEG_INFINITY;
        let mut best_dag = None;
        let proto = crate::score::prototype_table("p", 2, 1);
        for dag in enumerate_dags(2, Some(1)).unwrap() {
            let v = tables[0].dag_score(&dag) + tables[1].dag_score(&dag) + proto.dag_score(&dag);
            if v > best {
                best = v;
                best_dag = Some(dag);
            }
        }
        assert_eq!(result.subject_dags[0], best_dag.unwrap());
        assert!((result.objective - best).abs() < 1e-9);
    }

    #[test]
    fn opposed_patterns_separate_into_two_clusters() {
        // subjects 1,2 prefer 1->2; subjects 3,4 prefer 2->1
        let like_a = &[(2usize, 0b01u64, 5.0)];
        let like_b = &[(1usize, 0b10u64, 5.0)];
        let tables = vec![
            table_with("s1", 2, 1, like_a),
            table_with("s2", 2, 1, like_a),
            table_with("s3", 2, 1, like_b),
            table_with("s4", 2, 1, like_b),
        ];
        let hp = Hyperparameters::scalar(1.0, 0.0, 1);
        let spec = ClusterSpec {
            l_clusters: 2,
            subject_count: 4,
        };
        let exact = solve_clustering(&tables, &hp, spec, &Limits::default()).unwrap();
        let oracle = solve_clustering_brute_force(&tables, &hp, spec).unwrap();
        assert_eq!(exact.assignment, vec![1, 1, 2, 2]);
        assert_eq!(oracle.assignment, exact.assignment);
        assert!((exact.objective - oracle.objective).abs() < 1e-9);
        assert_eq!(exact.subject_dags, oracle.subject_dags);
        assert_eq!(exact.prototypes, oracle.prototypes);
        // prototypes summarize their clusters
        assert_eq!(exact.prototypes[0], exact.subject_dags[0]);
        assert_eq!(exact.prototypes[1], exact.subject_dags[2]);
    }

    #[test]
    fn l_equals_k_with_distinct_optima_gives_identity_partition() {
        // four subjects, four mutually distinct strongly preferred DAGs;
        // lambda above ln C(3,1) so prototypes copy their member
        let tables = vec![
            table_with("s1", 3, 1, &[(2, 0b001, 5.0)]), // 1->2
            table_with("s2", 3, 1, &[(3, 0b001, 5.0)]), // 1->3
            table_with("s3", 3, 1, &[(1, 0b010, 5.0)]), // 2->1
            table_with("s4", 3, 1, &[(3, 0b010, 5.0)]), // 2->3
        ];
        let hp = Hyperparameters::scalar(2.0, 0.0, 1);
        let spec = ClusterSpec {
            l_clusters: 4,
            subject_count: 4,
        };
        let exact = solve_clustering(&tables, &hp, spec, &Limits::default()).unwrap();
        let oracle = solve_clustering_brute_force(&tables, &hp, spec).unwrap();
        assert_eq!(exact.assignment, vec![1, 2, 3, 4]);
        assert_eq!(oracle.assignment, exact.assignment);
        for k in 0..4 {
            assert_eq!(exact.prototypes[k], exact.subject_dags[k]);
        }
        assert!((exact.objective - oracle.objective).abs() < 1e-9);
    }

    #[test]
    fn oracle_equivalence_on_random_instances() {
        let mut state = 0x5EEDu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for trial in 0..12 {
            let p = 2 + (next() % 2) as usize; // 2..=3
            let k = 2 + (next() % 3) as usize; // 2..=4
            let l = 1 + (next() % 2.min(k as u64)) as usize;
            let d_max = 1.max(p - 1);
            let mut tables = Vec::new();
            for s in 0..k {
                let mut entries = Vec::new();
                for node in 1..=p {
                    for mask in parent_set_masks(p, node, d_max) {
                        let v = ((next() >> 11) as f64 / (1u64 << 53) as f64) * 8.0 - 4.0;
                        entries.push((node, mask, v));
                    }
                }
                tables.push(
                    ScoreTable::from_entries(format!("s{s}"), p, d_max, &entries, vec![])
                        .unwrap(),
                );
            }
            let lambda = ((next() >> 11) as f64 / (1u64 << 53) as f64) * 3.0;
            let hp = Hyperparameters::scalar(lambda, 0.0, d_max);
            let spec = ClusterSpec {
                l_clusters: l,
                subject_count: k,
            };
            let exact = solve_clustering(&tables, &hp, spec, &Limits::default()).unwrap();
            let oracle = solve_clustering_brute_force(&tables, &hp, spec).unwrap();
            assert!(
                (exact.objective - oracle.objective).abs() < 1e-9,
                "trial {trial}: {} vs {}",
                exact.objective,
                oracle.objective
            );
            assert_eq!(exact.assignment, oracle.assignment, "trial {trial}");
            assert_eq!(exact.subject_dags, oracle.subject_dags, "trial {trial}");
        }
    }

    #[test]
    fn too_many_clusters_is_an_input_error() {
        let tables = vec![table_with("a", 2, 1, &[])];
        let hp = Hyperparameters::scalar(1.0, 0.0, 1);
        let spec = ClusterSpec {
            l_clusters: 2,
            subject_count: 1,
        };
        assert!(matches!(
            solve_clustering(&tables, &hp, spec, &Limits::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn every_subject_has_exactly_one_assignment_edge() {
        let tables = vec![
            table_with("s1", 2, 1, &[(2, 0b01, 2.0)]),
            table_with("s2", 2, 1, &[(1, 0b10, 2.0)]),
            table_with("s3", 2, 1, &[]),
        ];
        let hp = Hyperparameters::scalar(0.7, 0.0, 1);
        let spec = ClusterSpec {
            l_clusters: 2,
            subject_count: 3,
        };
        let model = encode(&tables, &hp, SolveMode::Clustering(spec)).unwrap();
        let est = solve(&model, &Limits::default()).unwrap();
        for subject in 1..=3 {
            let count = (1..=2)
                .filter(|m| est.network.contains(subject, 3 + m))
                .count();
            assert_eq!(count, 1);
        }
        // no subject-subject or prototype-prototype edges can exist
        for (k, l) in est.network.edges() {
            assert!(k <= 3 && l >= 4);
        }
    }
}
