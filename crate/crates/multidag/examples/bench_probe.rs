//! Scratch probe for sizing the recovery benchmark (will be replaced).

use std::time::Instant;

use multidag::dag::SubjectNetwork;
use multidag::diagnostics::{lambda_sweep, DistanceMetric};
use multidag::dlm::DlmConfig;
use multidag::hyper::Hyperparameters;
use multidag::score::build_score_table;
use multidag::solver::{encode, independent_estimates, solve, Limits, SolveMode};
use multidag::synthetic::{generate, Dynamics, SyntheticSpec};

fn main() {
    let p = 6;
    let k = 6;
    let d_max = 2;
    let mut joint_wins = 0;
    let mut ties = 0;
    let mut total_joint = 0u64;
    let mut total_indep = 0u64;
    let seeds = 5u64;
    let t_all = Instant::now();
    for seed in 0..seeds {
        let spec = SyntheticSpec {
            p,
            k_subjects: k,
            n_steps: 200,
            base_dag: None,
            d_max,
            divergence: 1.0,
            dynamics: Dynamics {
                obs_noise: 1.0,
                coef_drift: 0.0,
                coef_scale: 0.7,
            },
            seed,
        };
        let t0 = Instant::now();
        let (series, truth) = generate(&spec).unwrap();
        let config = DlmConfig {
            delta: 1.0,
            ..Default::default()
        };
        let tables: Vec<_> = series
            .iter()
            .map(|s| build_score_table(s, d_max, &config).unwrap())
            .collect();
        let t_score = t0.elapsed();

        let t1 = Instant::now();
        let indep = independent_estimates(&tables).unwrap();
        let t_indep = t1.elapsed();

        let complete = SubjectNetwork::complete(k);
        let hp = Hyperparameters::scalar(0.0, 0.0, d_max);
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        let t2 = Instant::now();
        let sweep = lambda_sweep(
            &tables,
            &complete,
            &grid,
            DistanceMetric::Shd,
            &hp,
            &Limits::default(),
        )
        .unwrap();
        let t_sweep = t2.elapsed();
        let lambda = sweep.value_at_fraction(0.5).unwrap_or(4.0);

        let t3 = Instant::now();
        let model = encode(
            &tables,
            &hp.with_scalar_lambda(lambda),
            SolveMode::FixedNetwork(complete.clone()),
        )
        .unwrap();
        let joint = solve(&model, &Limits::default()).unwrap();
        let t_joint = t3.elapsed();

        let shd_to_truth = |dags: &[multidag::dag::Dag]| -> u64 {
            dags.iter()
                .zip(&truth)
                .map(|(a, b)| multidag::dag::distance(a, b).unwrap().shd)
                .sum()
        };
        let si = shd_to_truth(&indep);
        let sj = shd_to_truth(&joint.dags);
        total_indep += si;
        total_joint += sj;
        if sj < si {
            joint_wins += 1;
        } else if sj == si {
            ties += 1;
        }
        println!(
            "seed {seed}: lambda {lambda}, shd indep {si} joint {sj} | score {:?} indep {:?} sweep {:?} joint {:?} (nodes {}, cuts {})",
            t_score, t_indep, t_sweep, t_joint, joint.stats.nodes, joint.stats.cuts
        );
    }
    println!(
        "wins {joint_wins}/{seeds}, ties {ties}; total shd indep {total_indep} joint {total_joint}; elapsed {:?}",
        t_all.elapsed()
    );
}
