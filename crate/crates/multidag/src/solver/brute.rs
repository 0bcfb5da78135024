//! Exhaustive enumeration backend: the ground-truth oracle against
//! which the branch-and-cut solver is certified on small instances.
//!
//! Enumeration applies the same near-tie window and canonical key as
//! the main solver, so the two backends agree configuration-for-
//! configuration, not just on objective values.

use crate::dag::{Dag, SubjectNetwork};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::score::ScoreTable;

use super::ilp::{encode, IlpModel};
use super::{Certificate, MapEstimate, SolveMode, SolveStats, TIE_WINDOW};

/// Enumerated DAG tuples beyond this are refused.
const TUPLE_BUDGET: f64 = 2.0e8;
/// Vertex and subject caps for full enumeration.
const MAX_P: usize = 4;
const MAX_K: usize = 4;
/// Caps on tie expansion; exceeding them reports an error rather than
/// returning a silently wrong canonical choice.
const MAX_WINDOW_CANDIDATES: usize = 512;
const MAX_COMBO: usize = 4096;

#[derive(Clone)]
struct Candidate {
    value: f64,
    dag_indices: Vec<usize>,
    a_code: u64,
}

struct Tracker<'a> {
    dags: &'a [Dag],
    n_pairs: usize,
    max_val: f64,
    list: Vec<Candidate>,
}

impl<'a> Tracker<'a> {
    fn new(dags: &'a [Dag], n_pairs: usize) -> Tracker<'a> {
        Tracker {
            dags,
            n_pairs,
            max_val: f64::NEG_INFINITY,
            list: Vec::new(),
        }
    }

    fn key_less(&self, a: &Candidate, b: &Candidate) -> bool {
        let edges = |c: &Candidate| -> usize {
            c.dag_indices
                .iter()
                .map(|&g| self.dags[g].edge_count())
                .sum()
        };
        let (ea, eb) = (edges(a), edges(b));
        if ea != eb {
            return ea < eb;
        }
        for (&ga, &gb) in a.dag_indices.iter().zip(&b.dag_indices) {
            let (ma, mb) = (self.dags[ga].parent_masks(), self.dags[gb].parent_masks());
            if ma != mb {
                return ma < mb;
            }
        }
        for q in 0..self.n_pairs {
            let (ba, bb) = (a.a_code >> q & 1, b.a_code >> q & 1);
            if ba != bb {
                return ba < bb;
            }
        }
        false
    }

    fn offer(&mut self, value: f64, dag_indices: &[usize], a_code: u64) -> Result<()> {
        if value < self.max_val - TIE_WINDOW {
            return Ok(());
        }
        if value > self.max_val {
            self.max_val = value;
            let keep = value - TIE_WINDOW;
            self.list.retain(|c| c.value >= keep);
        }
        let cand = Candidate {
            value,
            dag_indices: dag_indices.to_vec(),
            a_code,
        };
        // exact-value ties resolve eagerly so degenerate instances keep
        // one entry per distinct value
        let same = self
            .list
            .iter()
            .position(|c| (c.value - value).abs() <= 1e-12);
        if let Some(idx) = same {
            if self.key_less(&cand, &self.list[idx]) {
                self.list[idx] = cand;
            }
            return Ok(());
        }
        self.list.push(cand);
        if self.list.len() > MAX_WINDOW_CANDIDATES {
            return Err(Error::internal(
                "tie window exploded during brute-force enumeration",
            ));
        }
        Ok(())
    }

    fn best(mut self) -> Option<Candidate> {
        let keep = self.max_val - TIE_WINDOW;
        let list = std::mem::take(&mut self.list);
        let mut best: Option<Candidate> = None;
        for cand in list.into_iter().filter(|c| c.value >= keep) {
            best = match best {
                None => Some(cand),
                Some(cur) => {
                    if self.key_less(&cand, &cur) {
                        Some(cand)
                    } else {
                        Some(cur)
                    }
                }
            };
        }
        best
    }
}

/// True MAP by exhaustive enumeration. Same tie-break as [`super::solve`].
pub fn solve_brute_force(
    tables: &[ScoreTable],
    hp: &Hyperparameters,
    mode: SolveMode,
) -> Result<MapEstimate> {
    let started = std::time::Instant::now();
    let model = encode(tables, hp, mode)?;
    if model.p > MAX_P {
        return Err(Error::capacity(format!(
            "brute force refuses {} vertices (max {MAX_P})",
            model.p
        )));
    }
    if model.k_subjects > MAX_K {
        return Err(Error::capacity(format!(
            "brute force refuses {} subjects (max {MAX_K})",
            model.k_subjects
        )));
    }
    if model.pairs.len() >= 64 {
        return Err(Error::capacity("too many coupled pairs for brute force"));
    }
    let dags: Vec<Dag> =
        crate::enumerate::enumerate_dags(model.p, Some(model.d_max))?.collect();

    let candidate = match &model.mode {
        SolveMode::Clustering(_) => cluster_enumerate(&model, &dags)?,
        _ => tuple_enumerate(&model, &dags)?,
    };
    let candidate =
        candidate.ok_or_else(|| Error::internal("enumeration produced no candidate"))?;

    let chosen: Vec<Dag> = candidate
        .dag_indices
        .iter()
        .map(|&g| dags[g].clone())
        .collect();
    let network = network_from_code(&model, candidate.a_code)?;
    let objective = model.recompute_objective(&chosen, &network)?;
    Ok(MapEstimate {
        dags: chosen,
        network,
        objective,
        certificate: Certificate::ProvenOptimal,
        stats: SolveStats {
            nodes: 0,
            cuts: 0,
            wall: started.elapsed(),
        },
    })
}

fn network_from_code(model: &IlpModel, a_code: u64) -> Result<SubjectNetwork> {
    match &model.mode {
        SolveMode::FixedNetwork(a) => Ok(a.clone()),
        _ => {
            let mut net = SubjectNetwork::empty(model.k_total);
            for (q, &(k, l)) in model.pairs.iter().enumerate() {
                if a_code >> q & 1 == 1 {
                    net.add_edge(k, l)?;
                }
            }
            Ok(net)
        }
    }
}

/// Per-pair penalty matrices (dag-index by dag-index), one per coupled
/// pair; collapses to a shared λ·xor matrix in the scalar case.
struct Penalties {
    n: usize,
    scalar: Option<f64>,
    xor: Vec<u16>,
    per_pair: Vec<Vec<f64>>,
}

impl Penalties {
    fn build(model: &IlpModel, dags: &[Dag]) -> Result<Penalties> {
        let n = dags.len();
        let mut xor = vec![0u16; n * n];
        for (a, da) in dags.iter().enumerate() {
            for (b, db) in dags.iter().enumerate().skip(a + 1) {
                let d = crate::dag::distance(da, db)?.xor_count as u16;
                xor[a * n + b] = d;
                xor[b * n + a] = d;
            }
        }
        let scalar = model.hp.lambda_is_scalar();
        let mut per_pair = Vec::new();
        if scalar.is_none() {
            for &(pk, pl) in &model.pairs {
                let mut m = vec![0.0f64; n * n];
                for (a, da) in dags.iter().enumerate() {
                    for (b, db) in dags.iter().enumerate() {
                        if a != b {
                            m[a * n + b] =
                                -crate::prior::log_regularity(da, db, &model.hp, pk, pl)?;
                        }
                    }
                }
                per_pair.push(m);
            }
        }
        Ok(Penalties {
            n,
            scalar,
            xor,
            per_pair,
        })
    }

    fn get(&self, pair: usize, a: usize, b: usize) -> f64 {
        match self.scalar {
            Some(l) => l * self.xor[a * self.n + b] as f64,
            None => self.per_pair[pair][a * self.n + b],
        }
    }
}

/// Fixed-network and joint-network enumeration over DAG tuples. In the
/// joint mode the optimal network decomposes per pair given the tuple;
/// pairs whose gain lands inside the tie window are expanded explicitly.
fn tuple_enumerate(model: &IlpModel, dags: &[Dag]) -> Result<Option<Candidate>> {
    let n = dags.len();
    let k = model.k_subjects;
    if (n as f64).powi(k as i32) > TUPLE_BUDGET {
        return Err(Error::capacity(format!(
            "brute force budget exceeded: {n}^{k} DAG tuples"
        )));
    }
    let scores: Vec<Vec<f64>> = model
        .tables()
        .iter()
        .map(|t| dags.iter().map(|d| t.dag_score(d)).collect())
        .collect();
    let pen = Penalties::build(model, dags)?;
    let joint = matches!(model.mode, SolveMode::JointNetwork);
    let etas: Vec<f64> = model
        .pairs
        .iter()
        .map(|&(pk, pl)| if joint { model.hp.eta_value(pk, pl) } else { 0.0 })
        .collect();
    // pairs grouped by their larger endpoint so each level settles the
    // pairs it completes; entries are (pair index, other subject - 1)
    let mut pairs_at: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (q, &(pk, pl)) in model.pairs.iter().enumerate() {
        pairs_at[pl - 1].push((q, pk - 1));
    }
    let fixed_code: u64 = (1u64 << model.pairs.len()) - 1;

    struct Ctx<'a> {
        n: usize,
        k: usize,
        scores: &'a [Vec<f64>],
        pen: &'a Penalties,
        etas: &'a [f64],
        pairs_at: &'a [Vec<(usize, usize)>],
        joint: bool,
    }
    fn rec(
        ctx: &Ctx<'_>,
        level: usize,
        value: f64,
        a_code: u64,
        amb: u64,
        tuple: &mut Vec<usize>,
        tracker: &mut Tracker<'_>,
    ) -> Result<()> {
        if level == ctx.k {
            if amb == 0 {
                return tracker.offer(value, tuple, a_code);
            }
            let amb_bits: Vec<usize> = (0..64).filter(|&q| amb >> q & 1 == 1).collect();
            for subset in 0u64..(1u64 << amb_bits.len()) {
                let mut v = value;
                let mut code = a_code;
                for (t, &q) in amb_bits.iter().enumerate() {
                    if subset >> t & 1 == 1 {
                        let (_, pl) = pair_endpoints(ctx.pairs_at, q);
                        let other = pair_other(ctx.pairs_at, q);
                        v += ctx.etas[q] - ctx.pen.get(q, tuple[other], tuple[pl]);
                        code |= 1u64 << q;
                    }
                }
                tracker.offer(v, tuple, code)?;
            }
            return Ok(());
        }
        for g in 0..ctx.n {
            tuple[level] = g;
            let mut v = value + ctx.scores[level][g];
            let mut code = a_code;
            let mut next_amb = amb;
            for &(q, other) in &ctx.pairs_at[level] {
                let p = ctx.pen.get(q, tuple[other], g);
                if ctx.joint {
                    let gain = ctx.etas[q] - p;
                    if gain > TIE_WINDOW {
                        v += gain;
                        code |= 1u64 << q;
                    } else if gain >= -TIE_WINDOW {
                        next_amb |= 1u64 << q;
                    }
                } else {
                    v -= p;
                }
            }
            rec(ctx, level + 1, v, code, next_amb, tuple, tracker)?;
        }
        Ok(())
    }
    fn pair_endpoints(pairs_at: &[Vec<(usize, usize)>], q: usize) -> (usize, usize) {
        for (level, list) in pairs_at.iter().enumerate() {
            for &(qq, other) in list {
                if qq == q {
                    return (other, level);
                }
            }
        }
        unreachable!("pair index missing from level grouping")
    }
    fn pair_other(pairs_at: &[Vec<(usize, usize)>], q: usize) -> usize {
        pair_endpoints(pairs_at, q).0
    }

    let ctx = Ctx {
        n,
        k,
        scores: &scores,
        pen: &pen,
        etas: &etas,
        pairs_at: &pairs_at,
        joint,
    };
    let mut tracker = Tracker::new(dags, model.pairs.len());
    let mut tuple = vec![0usize; k];
    let root_code = if joint { 0 } else { fixed_code };
    rec(
        &ctx,
        0,
        model.constant,
        root_code,
        0,
        &mut tuple,
        &mut tracker,
    )?;
    Ok(tracker.best())
}

/// Clustering enumeration: assignments of subjects to prototypes, then
/// per-cluster prototype choice with independent member best responses.
/// Choices inside tie windows are expanded and re-scored exactly.
fn cluster_enumerate(model: &IlpModel, dags: &[Dag]) -> Result<Option<Candidate>> {
    let SolveMode::Clustering(spec) = &model.mode else {
        unreachable!("cluster_enumerate called for a non-clustering mode")
    };
    let k = model.k_subjects;
    let l = spec.l_clusters;
    let n = dags.len();
    let lambda = model
        .hp
        .lambda_is_scalar()
        .ok_or_else(|| Error::input("clustering requires a scalar lambda"))?;

    let scores: Vec<Vec<f64>> = model.tables()[..k]
        .iter()
        .map(|t| dags.iter().map(|d| t.dag_score(d)).collect())
        .collect();
    let proto_scores: Vec<f64> = dags
        .iter()
        .map(|d| model.tables()[k].dag_score(d))
        .collect();
    let pen = Penalties::build(model, dags)?;

    // best member response per (subject, prototype dag)
    let mut member_best = vec![vec![f64::NEG_INFINITY; n]; k];
    let mut member_ties: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; k];
    for k0 in 0..k {
        for gp in 0..n {
            let mut best = f64::NEG_INFINITY;
            for g in 0..n {
                let v = scores[k0][g] - lambda * pen.xor[g * n + gp] as f64;
                if v > best {
                    best = v;
                }
            }
            member_best[k0][gp] = best;
            member_ties[k0][gp] = (0..n)
                .filter(|&g| {
                    scores[k0][g] - lambda * pen.xor[g * n + gp] as f64
                        >= best - TIE_WINDOW
                })
                .collect();
        }
    }

    let n_assignments = (l as u64).pow(k as u32);
    let mut tracker = Tracker::new(dags, model.pairs.len());
    for code in 0..n_assignments {
        let mut assign = vec![0usize; k];
        let mut rest = code;
        for a in assign.iter_mut() {
            *a = (rest % l as u64) as usize;
            rest /= l as u64;
        }
        let mut proto_choices: Vec<Vec<usize>> = Vec::with_capacity(l);
        let mut nominal = 0.0;
        for c in 0..l {
            let members: Vec<usize> = (0..k).filter(|&k0| assign[k0] == c).collect();
            let cluster_value = |gp: usize| -> f64 {
                proto_scores[gp]
                    + members
                        .iter()
                        .map(|&k0| member_best[k0][gp])
                        .sum::<f64>()
            };
            let best = (0..n).map(&cluster_value).fold(f64::NEG_INFINITY, f64::max);
            nominal += best;
            proto_choices.push(
                (0..n)
                    .filter(|&gp| cluster_value(gp) >= best - TIE_WINDOW)
                    .collect(),
            );
        }
        if nominal < tracker.max_val - 2.0 * TIE_WINDOW {
            continue;
        }
        let mut proto_combos: Vec<Vec<usize>> = vec![Vec::new()];
        for choices in &proto_choices {
            let mut next = Vec::new();
            for partial in &proto_combos {
                for &gp in choices {
                    let mut np = partial.clone();
                    np.push(gp);
                    next.push(np);
                }
            }
            proto_combos = next;
            if proto_combos.len() > MAX_COMBO {
                return Err(Error::internal("prototype tie expansion exploded"));
            }
        }
        for proto_pick in proto_combos {
            let mut member_combos: Vec<Vec<usize>> = vec![Vec::new()];
            for k0 in 0..k {
                let gp = proto_pick[assign[k0]];
                let mut next = Vec::new();
                for partial in &member_combos {
                    for &g in &member_ties[k0][gp] {
                        let mut np = partial.clone();
                        np.push(g);
                        next.push(np);
                    }
                }
                member_combos = next;
                if member_combos.len() > MAX_COMBO {
                    return Err(Error::internal("member tie expansion exploded"));
                }
            }
            for members in member_combos {
                // exact value of the materialized configuration
                let mut value = 0.0;
                for k0 in 0..k {
                    let gp = proto_pick[assign[k0]];
                    value +=
                        scores[k0][members[k0]] - lambda * pen.xor[members[k0] * n + gp] as f64;
                }
                for &gp in &proto_pick {
                    value += proto_scores[gp];
                }
                let mut a_code = 0u64;
                for (q, &(pk, pl)) in model.pairs.iter().enumerate() {
                    if assign[pk - 1] == pl - k - 1 {
                        a_code |= 1u64 << q;
                    }
                }
                let mut dag_indices = members.clone();
                dag_indices.extend(proto_pick.iter().copied());
                tracker.offer(value, &dag_indices, a_code)?;
            }
        }
    }
    Ok(tracker.best())
}
