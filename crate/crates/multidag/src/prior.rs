//! The multiple-DAG prior and the unnormalized joint log posterior it
//! induces over (DAG list, subject network) configurations.
//!
//! All quantities live on the log scale with additive constants fixed
//! at zero; only differences matter for the argmax.

use crate::dag::{Dag, SubjectNetwork};
use crate::error::{Error, Result};
use crate::hyper::{Hyperparameters, LambdaParam};
use crate::math::ln_binomial;
use crate::score::ScoreTable;

/// Log of the pairwise regularity factor between two DAGs for the
/// subject pair (k, l): minus the λ-weighted count of mismatched
/// parent memberships. Always ≤ 0 for valid (nonnegative) λ.
pub fn log_regularity(
    g1: &Dag,
    g2: &Dag,
    hp: &Hyperparameters,
    k: usize,
    l: usize,
) -> Result<f64> {
    if g1.p() != g2.p() {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {} vertices",
            g1.p(),
            g2.p()
        )));
    }
    match &hp.lambda {
        LambdaParam::Scalar(lambda) => {
            let xor = crate::dag::distance(g1, g2)?.xor_count;
            Ok(-lambda * xor as f64)
        }
        LambdaParam::Table(_) => {
            let p = g1.p();
            let mut total = 0.0;
            for i in 1..=p {
                let mut diff = g1.parent_mask(i) ^ g2.parent_mask(i);
                while diff != 0 {
                    let j = diff.trailing_zeros() as usize + 1;
                    diff &= diff - 1;
                    total -= hp.lambda_value(k, l, j, i);
                }
            }
            Ok(total)
        }
    }
}

/// Log of the binomial multiplicity correction for one DAG: the sum of
/// -log C(P, |G_i|), or negative infinity when any in-degree exceeds
/// `d_max`.
pub fn log_multiplicity(g: &Dag, d_max: usize) -> f64 {
    let p = g.p();
    let mut total = 0.0;
    for i in 1..=p {
        let deg = g.parent_mask(i).count_ones() as usize;
        if deg > d_max {
            return f64::NEG_INFINITY;
        }
        total -= ln_binomial(p, deg);
    }
    total
}

/// Log of the network hyperprior: the η reward summed over present
/// edges, with the additive constant fixed at zero.
pub fn log_network_prior(a: &SubjectNetwork, hp: &Hyperparameters) -> f64 {
    a.edges().map(|(k, l)| hp.eta_value(k, l)).sum()
}

/// The unnormalized joint log posterior of a full configuration:
/// per-subject local scores (multiplicity already folded in), plus
/// regularity over network edges, plus the network prior. May be
/// negative infinity (infeasible parent set under `d_max`), never NaN.
pub fn joint_log_posterior(
    tables: &[ScoreTable],
    dags: &[Dag],
    a: &SubjectNetwork,
    hp: &Hyperparameters,
) -> Result<f64> {
    if tables.len() != dags.len() {
        return Err(Error::input(format!(
            "{} score tables for {} DAGs",
            tables.len(),
            dags.len()
        )));
    }
    if a.k_total() != dags.len() {
        return Err(Error::input(format!(
            "network over {} subjects but {} DAGs",
            a.k_total(),
            dags.len()
        )));
    }
    let mut total = 0.0;
    for (table, dag) in tables.iter().zip(dags) {
        if table.p() != dag.p() {
            return Err(Error::input(format!(
                "subject {}: table over {} vertices, DAG over {}",
                table.subject(),
                table.p(),
                dag.p()
            )));
        }
        total += table.dag_score(dag);
    }
    for (k, l) in a.edges() {
        total += log_regularity(&dags[k - 1], &dags[l - 1], hp, k, l)?;
    }
    total += log_network_prior(a, hp);
    // -inf + finite stays -inf; +inf never occurs, so NaN cannot arise
    debug_assert!(!total.is_nan());
    Ok(total)
}

/// The Property-1 thresholds: λ* = η* = Σ_k Σ_i (max_π s − min_π s)
/// over finite entries. Any scalar λ above this forces linked DAGs
/// equal; any scalar η above it forces the estimated network complete.
pub fn lambda_eta_star(tables: &[ScoreTable]) -> Result<f64> {
    let mut total = 0.0;
    for table in tables {
        for node in 1..=table.p() {
            let (hi, lo) = table.finite_range(node)?;
            total += hi - lo;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::EtaParam;
    use std::collections::BTreeMap;

    /// Appendix-style two-variable tables used across the solver tests:
    /// subject 1 scores {∅:0, {2}:-3} for node 1 and {∅:0, {1}:1} for
    /// node 2; subject 2 scores {∅:0, {2}:4} and {∅:0, {1}:1}.
    pub(crate) fn opposed_pair_tables() -> Vec<ScoreTable> {
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

    #[test]
    fn regularity_vanishes_on_equal_graphs() {
        let g = Dag::from_edges(3, &[(1, 2)]).unwrap();
        let hp = Hyperparameters::scalar(4.0, 0.0, 3);
        assert_eq!(log_regularity(&g, &g, &hp, 1, 2).unwrap(), 0.0);
    }

    #[test]
    fn regularity_scalar_counts_mismatches() {
        // three differing memberships at lambda 4 -> -12
        let g1 = Dag::from_edges(3, &[(1, 2), (1, 3), (2, 3)]).unwrap();
        let g2 = Dag::empty(3).unwrap();
        let hp = Hyperparameters::scalar(4.0, 0.0, 3);
        assert_eq!(log_regularity(&g1, &g2, &hp, 1, 2).unwrap(), -12.0);
    }

    #[test]
    fn regularity_reversal_costs_two_lambda() {
        let g1 = Dag::from_edges(2, &[(1, 2)]).unwrap();
        let g2 = Dag::from_edges(2, &[(2, 1)]).unwrap();
        let hp = Hyperparameters::scalar(1.75, 0.0, 3);
        assert_eq!(log_regularity(&g1, &g2, &hp, 1, 2).unwrap(), -3.5);
    }

    #[test]
    fn regularity_table_weights_edges() {
        let mut t = BTreeMap::new();
        t.insert((1, 2), vec![vec![0.0, 2.0], vec![5.0, 0.0]]);
        let hp = Hyperparameters {
            lambda: LambdaParam::Table(t),
            eta: EtaParam::Scalar(0.0),
            d_max: 1,
        };
        let g1 = Dag::from_edges(2, &[(1, 2)]).unwrap();
        let g2 = Dag::from_edges(2, &[(2, 1)]).unwrap();
        // mismatches: edge 1->2 (weight 2) and edge 2->1 (weight 5)
        assert_eq!(log_regularity(&g1, &g2, &hp, 2, 1).unwrap(), -7.0);
    }

    #[test]
    fn multiplicity_of_empty_graph_is_zero() {
        let g = Dag::empty(10).unwrap();
        assert_eq!(log_multiplicity(&g, 3), 0.0);
    }

    #[test]
    fn multiplicity_matches_binomial() {
        let g = Dag::from_edges(10, &[(1, 5), (2, 5), (3, 5)]).unwrap();
        assert!((log_multiplicity(&g, 3) + 120f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn multiplicity_over_cap_is_negative_infinity() {
        let g = Dag::from_edges(5, &[(1, 5), (2, 5), (3, 5), (4, 5)]).unwrap();
        assert_eq!(log_multiplicity(&g, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn multiplicity_grows_toward_half_p() {
        let p = 8;
        let mut last = 0.0;
        for deg in 1..=p / 2 {
            let parents: Vec<usize> = (1..=deg).collect();
            let lists: Vec<Vec<usize>> = (0..p)
                .map(|i0| if i0 == p - 1 { parents.clone() } else { vec![] })
                .collect();
            let g = Dag::from_parent_lists(p, &lists).unwrap();
            let m = log_multiplicity(&g, p - 1);
            assert!(m < last, "penalty must strictly grow toward p/2");
            last = m;
        }
    }

    #[test]
    fn network_prior_counts_eta() {
        let hp = Hyperparameters::scalar(0.0, 1.5, 3);
        assert_eq!(log_network_prior(&SubjectNetwork::empty(4), &hp), 0.0);
        assert_eq!(log_network_prior(&SubjectNetwork::complete(4), &hp), 9.0);
        let mut t = BTreeMap::new();
        t.insert((1, 2), 5.0);
        let hp_table = Hyperparameters {
            lambda: LambdaParam::Scalar(0.0),
            eta: EtaParam::Table(t),
            d_max: 3,
        };
        let a = SubjectNetwork::with_edges(2, &[(1, 2)]).unwrap();
        assert_eq!(log_network_prior(&a, &hp_table), 5.0);
    }

    #[test]
    fn single_subject_posterior_reduces_to_score() {
        let tables = opposed_pair_tables();
        let dag = Dag::from_edges(2, &[(1, 2)]).unwrap();
        let hp = Hyperparameters::scalar(3.0, 1.0, 1);
        let value = joint_log_posterior(
            &tables[..1],
            std::slice::from_ref(&dag),
            &SubjectNetwork::empty(1),
            &hp,
        )
        .unwrap();
        assert_eq!(value, tables[0].dag_score(&dag));
        assert_eq!(value, 1.0);
    }

    #[test]
    fn worked_instance_posterior_is_five_minus_two_lambda() {
        let tables = opposed_pair_tables();
        let dags = vec![
            Dag::from_edges(2, &[(1, 2)]).unwrap(),
            Dag::from_edges(2, &[(2, 1)]).unwrap(),
        ];
        let a = SubjectNetwork::with_edges(2, &[(1, 2)]).unwrap();
        for lambda in [0.5, 1.0, 2.25] {
            let hp = Hyperparameters::scalar(lambda, 0.0, 1);
            let v = joint_log_posterior(&tables, &dags, &a, &hp).unwrap();
            assert!((v - (5.0 - 2.0 * lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_dags_complete_network_gets_eta_choose_two() {
        let tables = opposed_pair_tables();
        let g = Dag::from_edges(2, &[(1, 2)]).unwrap();
        let dags = vec![g.clone(), g];
        let a = SubjectNetwork::complete(2);
        let hp = Hyperparameters::scalar(9.0, 2.0, 1);
        let v = joint_log_posterior(&tables, &dags, &a, &hp).unwrap();
        // scores 1 + 1, no regularity, eta * C(2,2)=1 edge
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_eta_star_matches_worked_arithmetic() {
        let tables = opposed_pair_tables();
        // (0-(-3)) + (1-0) + (4-0) + (1-0) = 9
        assert_eq!(lambda_eta_star(&tables).unwrap(), 9.0);
    }

    #[test]
    fn lambda_eta_star_zero_when_scores_constant() {
        let t = ScoreTable::from_entries(
            "flat",
            2,
            1,
            &[(1, 0, 2.0), (1, 0b10, 2.0), (2, 0, 2.0), (2, 0b01, 2.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(lambda_eta_star(&[t]).unwrap(), 0.0);
    }

    #[test]
    fn lambda_eta_star_single_node_gap() {
        let t = ScoreTable::from_entries("one", 2, 1, &[(1, 0, 0.0), (1, 0b10, -3.0), (2, 0, 0.0), (2, 0b01, 0.0)], vec![])
            .unwrap();
        assert_eq!(lambda_eta_star(&[t]).unwrap(), 3.0);
    }

    #[test]
    fn posterior_is_exchangeable_under_relabeling_with_scalars() {
        let tables = opposed_pair_tables();
        let dags = vec![
            Dag::from_edges(2, &[(1, 2)]).unwrap(),
            Dag::from_edges(2, &[(2, 1)]).unwrap(),
        ];
        let a = SubjectNetwork::complete(2);
        let hp = Hyperparameters::scalar(1.25, 0.75, 1);
        let v = joint_log_posterior(&tables, &dags, &a, &hp).unwrap();
        let swapped_tables = vec![tables[1].clone(), tables[0].clone()];
        let swapped_dags = vec![dags[1].clone(), dags[0].clone()];
        let v_swapped =
            joint_log_posterior(&swapped_tables, &swapped_dags, &a, &hp).unwrap();
        assert!((v - v_swapped).abs() < 1e-12);
    }
}
