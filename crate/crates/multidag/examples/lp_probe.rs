//! Scratch: reproduce the stalled LP from seed 2 (will be removed).

use multidag::dag::SubjectNetwork;
use multidag::dlm::DlmConfig;
use multidag::hyper::Hyperparameters;
use multidag::score::build_score_table;
use multidag::solver::{encode, solve, Limits, SolveMode};
use multidag::synthetic::{generate, Dynamics, SyntheticSpec};

fn main() {
    let spec = SyntheticSpec {
        p: 6,
        k_subjects: 6,
        n_steps: 200,
        base_dag: None,
        d_max: 2,
        divergence: 1.0,
        dynamics: Dynamics {
            obs_noise: 1.0,
            coef_drift: 0.0,
            coef_scale: 0.7,
        },
        seed: 2,
    };
    let (series, _) = generate(&spec).unwrap();
    let config = DlmConfig {
        delta: 1.0,
        ..Default::default()
    };
    let tables: Vec<_> = series
        .iter()
        .map(|s| build_score_table(s, 2, &config).unwrap())
        .collect();
    let hp = Hyperparameters::scalar(0.25, 0.0, 2);
    let model = encode(&tables, &hp, SolveMode::FixedNetwork(SubjectNetwork::complete(6))).unwrap();
    let t0 = std::time::Instant::now();
    match solve(&model, &Limits::default()) {
        Ok(est) => println!(
            "ok: objective {} nodes {} cuts {} in {:?}",
            est.objective, est.stats.nodes, est.stats.cuts, t0.elapsed()
        ),
        Err(e) => println!("error after {:?}: {e}", t0.elapsed()),
    }
}
