//! Certified global optimization of the joint MAP problem: ILP encoding
//! plus branch-and-cut, with an exhaustive brute-force backend for
//! small instances.

mod branch;
mod brute;
mod ilp;
pub mod simplex;

pub use brute::solve_brute_force;
pub use ilp::{encode, IlpModel, LinRow, VarDef, VarKind};

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, SubjectNetwork};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::score::ScoreTable;

/// Which joint problem is being solved.
#[derive(Clone, Debug)]
pub enum SolveMode {
    /// The subject network is given and only the DAGs move.
    FixedNetwork(SubjectNetwork),
    /// Network and DAGs are optimized together.
    JointNetwork,
    /// k-means clustering of DAGs: latent prototypes, each subject
    /// linked to exactly one of them.
    Clustering(ClusterSpec),
}

/// Shape of a clustering run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub l_clusters: usize,
    pub subject_count: usize,
}

/// Search limits. Runs without binding limits are deterministic; a
/// wall-clock limit can obviously cut the search at a machine-dependent
/// point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Limits {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
    /// Absolute objective gap below which a node is abandoned.
    pub gap: Option<f64>,
}

/// Whether a returned estimate carries an optimality proof.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Certificate {
    ProvenOptimal,
    Gap { bound: f64 },
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub cuts: u64,
    /// Wall time; not serialized so identical runs emit identical files.
    #[serde(skip)]
    pub wall: Duration,
}

/// A joint MAP solution with its certificate.
#[derive(Clone, Debug)]
pub struct MapEstimate {
    pub dags: Vec<Dag>,
    pub network: SubjectNetwork,
    pub objective: f64,
    pub certificate: Certificate,
    pub stats: SolveStats,
}

impl MapEstimate {
    pub fn is_proven_optimal(&self) -> bool {
        matches!(self.certificate, Certificate::ProvenOptimal)
    }
}

/// Near-tie window: configurations whose objectives differ by at most
/// this amount are ordered by the canonical tie-break key instead.
pub const TIE_WINDOW: f64 = 1e-9;

/// The canonical total order on optima: fewer total edges first, then
/// the concatenated parent-set masks by (subject, node), then the
/// network indicator over coupled pairs in canonical order with absent
/// preferred.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SolutionKey {
    pub edges: usize,
    pub masks: Vec<u64>,
    pub network: Vec<bool>,
}

pub fn solution_key(
    dags: &[Dag],
    network: &SubjectNetwork,
    pairs: &[(usize, usize)],
) -> SolutionKey {
    let mut masks = Vec::with_capacity(dags.len() * dags.first().map_or(0, |d| d.p()));
    let mut edges = 0usize;
    for dag in dags {
        edges += dag.edge_count();
        for i in 1..=dag.p() {
            masks.push(dag.parent_mask(i));
        }
    }
    let net = pairs
        .iter()
        .map(|&(k, l)| network.contains(k, l))
        .collect();
    SolutionKey {
        edges,
        masks,
        network: net,
    }
}

/// Exact MAP estimation by branch-and-cut over the encoded ILP.
pub fn solve(model: &IlpModel, limits: &Limits) -> Result<MapEstimate> {
    branch::run(model, limits)
}

/// Per-subject MAP DAGs ignoring all coupling: the single-subject
/// special case of [`solve`], sharing its tie-break rule.
pub fn independent_estimates(tables: &[ScoreTable]) -> Result<Vec<Dag>> {
    let mut out = Vec::with_capacity(tables.len());
    for table in tables {
        let hp = Hyperparameters::scalar(0.0, 0.0, table.d_max());
        let model = encode(
            std::slice::from_ref(table),
            &hp,
            SolveMode::FixedNetwork(SubjectNetwork::empty(1)),
        )?;
        let estimate = solve(&model, &Limits::default())?;
        if !estimate.is_proven_optimal() {
            return Err(Error::internal(
                "single-subject solve unexpectedly hit a limit",
            ));
        }
        out.push(estimate.dags.into_iter().next().expect("one DAG"));
    }
    Ok(out)
}
