//! Ground-truth generator for multi-subject linear-Gaussian dynamics:
//! per subject, a DAG perturbed from a shared base graph, then a series
//! where each node regresses on its parents' values at the same time
//! step with slowly drifting coefficients.
//!
//! All randomness flows from one 64-bit seed through ChaCha streams
//! (stream 0 drives graph structure, stream 1 + k drives subject k's
//! dynamics), so generation is reproducible across platforms and
//! independent of subject evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dag::{is_acyclic, Dag};
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Identifier of the generator stream, pinned in output metadata.
pub const RNG_ALGORITHM: &str = "chacha12 (rand_chacha 0.3)";

/// Noise and coefficient levels of the generated dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dynamics {
    /// Observation noise variance v.
    pub obs_noise: f64,
    /// Standard deviation of the per-step coefficient random walk.
    pub coef_drift: f64,
    /// Standard deviation of the initial coefficients (and intercept).
    pub coef_scale: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        Dynamics {
            obs_noise: 1.0,
            coef_drift: 0.0,
            coef_scale: 0.7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub p: usize,
    pub k_subjects: usize,
    pub n_steps: usize,
    /// Shared base graph; `None` samples one under `d_max`.
    pub base_dag: Option<Dag>,
    pub d_max: usize,
    /// Expected number of parent-membership toggles per subject.
    pub divergence: f64,
    pub dynamics: Dynamics,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p > crate::dag::MAX_VERTICES {
            return Err(Error::input(format!("vertex count {} unsupported", self.p)));
        }
        if self.k_subjects == 0 {
            return Err(Error::input("need at least one subject"));
        }
        if self.n_steps == 0 {
            return Err(Error::input("need at least one time step"));
        }
        if self.d_max > self.p - 1 {
            return Err(Error::input(format!(
                "d_max {} exceeds p-1 = {}",
                self.d_max,
                self.p - 1
            )));
        }
        if !(self.divergence >= 0.0) {
            return Err(Error::input("divergence must be nonnegative"));
        }
        if let Some(base) = &self.base_dag {
            if base.p() != self.p {
                return Err(Error::input(format!(
                    "base DAG has {} vertices, spec says {}",
                    base.p(),
                    self.p
                )));
            }
            if base.max_in_degree() > self.d_max {
                return Err(Error::input("base DAG exceeds d_max"));
            }
        }
        if !(self.dynamics.obs_noise >= 0.0)
            || !(self.dynamics.coef_drift >= 0.0)
            || !(self.dynamics.coef_scale >= 0.0)
        {
            return Err(Error::input("dynamics levels must be nonnegative"));
        }
        Ok(())
    }
}

/// Generated data with the pieces tests need beyond the public pair.
pub struct SyntheticData {
    pub series: Vec<TimeSeries>,
    pub truth: Vec<Dag>,
    /// Observation noise draws, per subject, time-major then node.
    pub innovations: Vec<Vec<f64>>,
}

/// Deterministic generation: same spec, bit-identical output.
pub fn generate(spec: &SyntheticSpec) -> Result<(Vec<TimeSeries>, Vec<Dag>)> {
    let data = generate_full(spec)?;
    Ok((data.series, data.truth))
}

pub fn generate_full(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut structure_rng = stream_rng(spec.seed, 0);
    let base = match &spec.base_dag {
        Some(dag) => dag.clone(),
        None => random_dag(spec.p, spec.d_max, &mut structure_rng)?,
    };
    let mut truth = Vec::with_capacity(spec.k_subjects);
    for _ in 0..spec.k_subjects {
        truth.push(perturb(&base, spec.divergence, spec.d_max, &mut structure_rng)?);
    }

    let mut series = Vec::with_capacity(spec.k_subjects);
    let mut innovations = Vec::with_capacity(spec.k_subjects);
    for (k0, dag) in truth.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, 1 + k0 as u64);
        let (ts, inno) = simulate_subject(
            &format!("s{}", k0 + 1),
            dag,
            spec.n_steps,
            &spec.dynamics,
            &mut rng,
        )?;
        series.push(ts);
        innovations.push(inno);
    }
    Ok(SyntheticData {
        series,
        truth,
        innovations,
    })
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform random DAG under the cap: random vertex order, then each
/// vertex draws an in-degree and that many distinct predecessors.
fn random_dag(p: usize, d_max: usize, rng: &mut ChaCha12Rng) -> Result<Dag> {
    let mut order: Vec<usize> = (1..=p).collect();
    for i in (1..p).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut parents = vec![0u64; p];
    for (pos, &v) in order.iter().enumerate() {
        let cap = d_max.min(pos);
        if cap == 0 {
            continue;
        }
        let degree = rng.gen_range(0..=cap);
        // partial shuffle of the predecessors picks a distinct sample
        let mut preds: Vec<usize> = order[..pos].to_vec();
        for t in 0..degree {
            let j = rng.gen_range(t..preds.len());
            preds.swap(t, j);
        }
        for &u in &preds[..degree] {
            parents[v - 1] |= 1u64 << (u - 1);
        }
    }
    Dag::from_masks(p, parents)
}

/// Base graph plus a Poisson number of parent-membership toggles,
/// resampled until the result is acyclic and within the cap.
fn perturb(base: &Dag, divergence: f64, d_max: usize, rng: &mut ChaCha12Rng) -> Result<Dag> {
    let p = base.p();
    let max_toggles = p * (p - 1);
    let count = if divergence == 0.0 {
        0
    } else {
        let poisson = Poisson::new(divergence)
            .map_err(|e| Error::input(format!("bad divergence: {e}")))?;
        (poisson.sample(rng) as usize).min(max_toggles)
    };
    if count == 0 {
        return Ok(base.clone());
    }
    for _attempt in 0..10_000 {
        let mut masks = base.parent_masks().to_vec();
        let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(count);
        while chosen.len() < count {
            let j = rng.gen_range(1..=p);
            let i = rng.gen_range(1..=p);
            if i == j || chosen.contains(&(j, i)) {
                continue;
            }
            chosen.push((j, i));
            masks[i - 1] ^= 1u64 << (j - 1);
        }
        let within_cap = masks.iter().all(|m| m.count_ones() as usize <= d_max);
        if within_cap && is_acyclic(p, &masks)? {
            return Dag::from_masks(p, masks);
        }
    }
    Err(Error::internal(
        "perturbation rejection sampling failed to find a valid DAG",
    ))
}

fn simulate_subject(
    subject: &str,
    dag: &Dag,
    n_steps: usize,
    dyn_: &Dynamics,
    rng: &mut ChaCha12Rng,
) -> Result<(TimeSeries, Vec<f64>)> {
    let p = dag.p();
    let topo = dag.topological_order();
    // coefficients per node: [intercept, parents ascending]
    let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(p);
    let init = Normal::new(0.0, dyn_.coef_scale)
        .map_err(|e| Error::input(format!("bad coef_scale: {e}")))?;
    for i in 1..=p {
        let q = dag.parents_of(i).len() + 1;
        coefs.push((0..q).map(|_| init.sample(rng)).collect());
    }
    let drift = if dyn_.coef_drift > 0.0 {
        Some(Normal::new(0.0, dyn_.coef_drift).expect("validated"))
    } else {
        None
    };
    let noise = if dyn_.obs_noise > 0.0 {
        Some(Normal::new(0.0, dyn_.obs_noise.sqrt()).expect("validated"))
    } else {
        None
    };

    let mut values = vec![0.0; n_steps * p];
    let mut innovations = Vec::with_capacity(n_steps * p);
    for n in 0..n_steps {
        // drift and noise drawn in fixed node order, independent of the
        // topology, so the draw sequence is stable
        if let Some(d) = &drift {
            for c in coefs.iter_mut() {
                for v in c.iter_mut() {
                    *v += d.sample(rng);
                }
            }
        }
        let eps: Vec<f64> = (0..p)
            .map(|_| noise.as_ref().map_or(0.0, |d| d.sample(rng)))
            .collect();
        for &i in &topo {
            let c = &coefs[i - 1];
            let mut mean = c[0];
            for (t, j) in dag.parents_of(i).into_iter().enumerate() {
                mean += c[t + 1] * values[n * p + (j - 1)];
            }
            values[n * p + (i - 1)] = mean + eps[i - 1];
        }
        innovations.extend_from_slice(&eps);
    }
    let names = (1..=p).map(|i| format!("v{i}")).collect();
    let ts = TimeSeries::new(subject, n_steps, p, names, values)?;
    Ok((ts, innovations))
}
