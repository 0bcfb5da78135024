//! Integer-linear-program encoding of the joint MAP problem.
//!
//! Binary variables:
//!   x[k,i,π]  — subject k gives node i the parent set π
//!   z[k,l]    — the pair (k,l) is an edge of the subject network
//!               (joint mode), or subject k is assigned to prototype l
//!               (clustering mode)
//!   d[k,l,j,i] — membership of edge j→i differs between subjects k and
//!               l while (k,l) is linked
//!
//! Exactly-one rows select a parent set per (subject, node); linking
//! rows tie d to the memberships and z; acyclicity is enforced by
//! cluster constraints — for every vertex subset C with |C| ≥ 2, at
//! least one member of C takes all parents outside C — which are
//! exponentially many and therefore separated lazily during search.

use std::collections::BTreeMap;

use crate::dag::{Dag, SubjectNetwork};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::prior::joint_log_posterior;
use crate::score::{prototype_table, ScoreTable};

use super::simplex::StoredRow;
use super::{ClusterSpec, SolveMode};

/// What a decision variable stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// `[G_i^(k) = π]`; subject and node are 1-based, `mask` is the
    /// parent-set bitmask.
    ParentSet { subject: usize, node: usize, mask: u64 },
    /// `[(k,l) ∈ A]`, k < l.
    NetworkEdge { k: usize, l: usize },
    /// XOR-and-linked indicator for edge j→i between subjects k < l.
    XorMembership { k: usize, l: usize, j: usize, i: usize },
}

#[derive(Clone, Debug)]
pub struct VarDef {
    pub kind: VarKind,
    pub obj: f64,
    pub lo: f64,
    pub up: f64,
}

/// One sparse linear row; pairs (column, coefficient).
#[derive(Clone, Debug)]
pub struct LinRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// The encoded model plus everything needed to decode solutions and
/// recompute true objectives.
pub struct IlpModel {
    pub p: usize,
    pub d_max: usize,
    /// Subjects carrying data (prototypes excluded).
    pub k_subjects: usize,
    /// Subjects plus prototypes.
    pub k_total: usize,
    pub mode: SolveMode,
    pub vars: Vec<VarDef>,
    /// Equality system C x = d.
    pub eq_rows: Vec<LinRow>,
    /// Inequality system A x ≤ b (membership linking).
    pub ineq_rows: Vec<LinRow>,
    /// Objective constant so that f·x + constant equals the joint log
    /// posterior of the decoded configuration.
    pub constant: f64,

    pub(crate) tables: Vec<ScoreTable>,
    pub(crate) hp: Hyperparameters,
    pub(crate) x_vars: Vec<Vec<Vec<(u64, usize)>>>, // [k0][i0] -> (mask, col)
    pub(crate) z_index: BTreeMap<(usize, usize), usize>,
    /// Coupled subject pairs in canonical order.
    pub(crate) pairs: Vec<(usize, usize)>,
}

impl IlpModel {
    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn x_col(&self, k: usize, i: usize, mask: u64) -> Option<usize> {
        self.x_vars[k - 1][i - 1]
            .iter()
            .find(|&&(m, _)| m == mask)
            .map(|&(_, c)| c)
    }

    pub fn z_col(&self, k: usize, l: usize) -> Option<usize> {
        self.z_index.get(&(k.min(l), k.max(l))).copied()
    }

    pub fn tables(&self) -> &[ScoreTable] {
        &self.tables
    }

    /// Coupled subject pairs in the canonical order used by tie-breaks.
    pub fn coupled_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Hyperparameters with η neutralized in clustering mode, where the
    /// assignment cardinality is fixed and the η term is constant.
    pub(crate) fn posterior_hp(&self) -> Hyperparameters {
        match self.mode {
            SolveMode::Clustering(_) => self.hp.with_scalar_eta(0.0),
            _ => self.hp.clone(),
        }
    }

    /// True objective of a configuration under this model's posterior.
    pub fn recompute_objective(&self, dags: &[Dag], network: &SubjectNetwork) -> Result<f64> {
        joint_log_posterior(&self.tables, dags, network, &self.posterior_hp())
    }

    /// Reads a 0/1 solution vector back into a configuration. Fails
    /// with an input error when a decoded graph is cyclic (the caller
    /// then separates a violated cluster constraint).
    pub fn decode(&self, values: &[f64]) -> Result<(Vec<Dag>, SubjectNetwork)> {
        let mut dags = Vec::with_capacity(self.k_total);
        for k in 1..=self.k_total {
            let mut masks = Vec::with_capacity(self.p);
            for i in 1..=self.p {
                let mut chosen: Option<u64> = None;
                for &(mask, col) in &self.x_vars[k - 1][i - 1] {
                    if values[col] > 0.5 {
                        if chosen.is_some() {
                            return Err(Error::internal(format!(
                                "two parent sets selected for subject {k}, node {i}"
                            )));
                        }
                        chosen = Some(mask);
                    }
                }
                masks.push(chosen.ok_or_else(|| {
                    Error::internal(format!("no parent set selected for subject {k}, node {i}"))
                })?);
            }
            dags.push(Dag::from_masks(self.p, masks)?);
        }
        let network = match &self.mode {
            SolveMode::FixedNetwork(a) => a.clone(),
            _ => {
                let mut net = SubjectNetwork::empty(self.k_total);
                for (&(k, l), &col) in &self.z_index {
                    if values[col] > 0.5 {
                        net.add_edge(k, l)?;
                    }
                }
                net
            }
        };
        Ok((dags, network))
    }

    /// Encodes a configuration as a 0/1 vector with the canonical d
    /// values (d = xor ∧ linked), so `f·x + constant` equals the joint
    /// log posterior exactly.
    pub fn encode_point(&self, dags: &[Dag], network: &SubjectNetwork) -> Result<Vec<f64>> {
        if dags.len() != self.k_total {
            return Err(Error::input(format!(
                "expected {} DAGs, got {}",
                self.k_total,
                dags.len()
            )));
        }
        let mut x = vec![0.0; self.vars.len()];
        for (k0, dag) in dags.iter().enumerate() {
            for i in 1..=self.p {
                let mask = dag.parent_mask(i);
                let col = self.x_col(k0 + 1, i, mask).ok_or_else(|| {
                    Error::input(format!(
                        "subject {}: parent set {mask:#x} of node {i} is inadmissible",
                        k0 + 1
                    ))
                })?;
                x[col] = 1.0;
            }
        }
        for (&(k, l), &col) in &self.z_index {
            if network.contains(k, l) {
                x[col] = 1.0;
            }
        }
        for (col, var) in self.vars.iter().enumerate() {
            if let VarKind::XorMembership { k, l, j, i } = var.kind {
                let linked = network.contains(k, l);
                let differs =
                    dags[k - 1].has_edge(j, i) != dags[l - 1].has_edge(j, i);
                if linked && differs {
                    x[col] = 1.0;
                }
            }
        }
        Ok(x)
    }

    /// LP objective value of a raw vector, including the constant.
    pub fn objective_at(&self, values: &[f64]) -> f64 {
        self.constant
            + values
                .iter()
                .zip(&self.vars)
                .map(|(x, v)| x * v.obj)
                .sum::<f64>()
    }

    /// The cluster constraint for subject `k` and vertex subset
    /// `c_mask`: sum over members of C of the x vars whose parent set
    /// avoids C, at least 1. Returned in ≤ form.
    pub fn cluster_cut_row(&self, k: usize, c_mask: u64) -> StoredRow {
        let mut coeffs = Vec::new();
        let mut rest = c_mask;
        while rest != 0 {
            let i0 = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            for &(mask, col) in &self.x_vars[k - 1][i0] {
                if mask & c_mask == 0 {
                    coeffs.push((col, -1.0));
                }
            }
        }
        StoredRow {
            coeffs,
            rhs: -1.0,
            eq: false,
        }
    }

    /// Finds, per subject, the most violated cluster constraint at the
    /// given point, if any. Exhaustive over vertex subsets (p is small).
    pub fn separate_cluster_cuts(&self, values: &[f64], tol: f64) -> Vec<(usize, u64, f64)> {
        let mut found = Vec::new();
        let full: u64 = if self.p == 64 { u64::MAX } else { (1u64 << self.p) - 1 };
        for k in 1..=self.k_total {
            // nonzero parent-set selections for this subject
            let mut best: Option<(u64, f64)> = None;
            let mut c_mask = 1u64;
            loop {
                c_mask += 1;
                if c_mask > full {
                    break;
                }
                if c_mask.count_ones() < 2 {
                    continue;
                }
                let mut lhs = 0.0;
                let mut rest = c_mask;
                while rest != 0 {
                    let i0 = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    for &(mask, col) in &self.x_vars[k - 1][i0] {
                        let v = values[col];
                        if v != 0.0 && mask & c_mask == 0 {
                            lhs += v;
                        }
                    }
                }
                if lhs < 1.0 - tol {
                    let viol = 1.0 - lhs;
                    if best.map_or(true, |(_, b)| viol > b) {
                        best = Some((c_mask, viol));
                    }
                }
            }
            if let Some((mask, viol)) = best {
                found.push((k, mask, viol));
            }
        }
        found
    }
}

/// Builds the ILP for the requested mode over the given score tables.
/// In clustering mode, multiplicity-only prototype tables are appended
/// internally.
pub fn encode(
    tables: &[ScoreTable],
    hp: &Hyperparameters,
    mode: SolveMode,
) -> Result<IlpModel> {
    if tables.is_empty() {
        return Err(Error::input("no score tables given"));
    }
    let p = tables[0].p();
    let d_max = tables[0].d_max();
    for t in tables {
        if t.p() != p {
            return Err(Error::input(format!(
                "subject {} has {} vertices, expected {p}",
                t.subject(),
                t.p()
            )));
        }
        if t.d_max() != d_max {
            return Err(Error::input(format!(
                "subject {} has d_max {}, expected {d_max}",
                t.subject(),
                t.d_max()
            )));
        }
    }
    if hp.d_max != d_max {
        return Err(Error::input(format!(
            "hyperparameter d_max {} does not match score tables' {d_max}",
            hp.d_max
        )));
    }
    let k_subjects = tables.len();
    hp.validate(k_subjects, p)?;

    // assemble the full table list and the coupled pairs per mode
    let mut all_tables: Vec<ScoreTable> = tables.to_vec();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut constant = 0.0;
    let (k_total, has_z) = match &mode {
        SolveMode::FixedNetwork(a) => {
            if a.k_total() != k_subjects {
                return Err(Error::input(format!(
                    "network over {} subjects, but {} score tables",
                    a.k_total(),
                    k_subjects
                )));
            }
            pairs.extend(a.edges());
            constant = crate::prior::log_network_prior(a, hp);
            (k_subjects, false)
        }
        SolveMode::JointNetwork => {
            for k in 1..=k_subjects {
                for l in (k + 1)..=k_subjects {
                    pairs.push((k, l));
                }
            }
            (k_subjects, true)
        }
        SolveMode::Clustering(spec) => {
            spec.validate(k_subjects)?;
            if hp.lambda_is_scalar().is_none() {
                return Err(Error::input(
                    "clustering requires a scalar lambda (tables are not defined over prototypes)",
                ));
            }
            for m in 1..=spec.l_clusters {
                all_tables.push(prototype_table(format!("prototype_{m}"), p, d_max));
            }
            for k in 1..=k_subjects {
                for m in 1..=spec.l_clusters {
                    pairs.push((k, k_subjects + m));
                }
            }
            (k_subjects + spec.l_clusters, true)
        }
    };

    let mut vars: Vec<VarDef> = Vec::new();
    let mut x_vars: Vec<Vec<Vec<(u64, usize)>>> = Vec::with_capacity(k_total);
    for (k0, table) in all_tables.iter().enumerate() {
        let mut per_node = Vec::with_capacity(p);
        for i in 1..=p {
            let mut list = Vec::new();
            for (mask, score) in table.entries(i) {
                let col = vars.len();
                vars.push(VarDef {
                    kind: VarKind::ParentSet {
                        subject: k0 + 1,
                        node: i,
                        mask,
                    },
                    obj: score,
                    lo: 0.0,
                    up: 1.0,
                });
                list.push((mask, col));
            }
            per_node.push(list);
        }
        x_vars.push(per_node);
    }

    let mut z_index = BTreeMap::new();
    if has_z {
        for &(k, l) in &pairs {
            let obj = match &mode {
                SolveMode::JointNetwork => hp.eta_value(k, l),
                // assignment cardinality is fixed, the eta term is constant
                SolveMode::Clustering(_) => 0.0,
                SolveMode::FixedNetwork(_) => unreachable!(),
            };
            let col = vars.len();
            vars.push(VarDef {
                kind: VarKind::NetworkEdge { k, l },
                obj,
                lo: 0.0,
                up: 1.0,
            });
            z_index.insert((k, l), col);
        }
    }

    // d variables, skipping zero-weight couplings
    let mut d_list: Vec<(usize, (usize, usize, usize, usize), f64)> = Vec::new();
    for &(k, l) in &pairs {
        for j in 1..=p {
            for i in 1..=p {
                if i == j {
                    continue;
                }
                // prototypes only appear in clustering mode where lambda
                // is scalar, so the table lookup never reaches them
                let lambda = hp.lambda_value(k.min(l), k.max(l), j, i);
                if lambda == 0.0 {
                    continue;
                }
                let col = vars.len();
                vars.push(VarDef {
                    kind: VarKind::XorMembership { k, l, j, i },
                    obj: -lambda,
                    lo: 0.0,
                    up: 1.0,
                });
                d_list.push((col, (k, l, j, i), lambda));
            }
        }
    }

    // exactly-one rows per (subject, node)
    let mut eq_rows = Vec::new();
    for k in 1..=k_total {
        for i in 1..=p {
            let coeffs: Vec<(usize, f64)> = x_vars[k - 1][i - 1]
                .iter()
                .map(|&(_, col)| (col, 1.0))
                .collect();
            eq_rows.push(LinRow { coeffs, rhs: 1.0 });
        }
    }
    // clustering: each subject joins exactly one prototype
    if let SolveMode::Clustering(spec) = &mode {
        for k in 1..=k_subjects {
            let coeffs: Vec<(usize, f64)> = (1..=spec.l_clusters)
                .map(|m| (z_index[&(k, k_subjects + m)], 1.0))
                .collect();
            eq_rows.push(LinRow { coeffs, rhs: 1.0 });
        }
    }

    // linking rows: d >= e_k - e_l + z - 1, d >= e_l - e_k + z - 1, d <= z
    let mut ineq_rows = Vec::new();
    for &(col_d, (k, l, j, i), _) in &d_list {
        let ek: Vec<usize> = x_vars[k - 1][i - 1]
            .iter()
            .filter(|&&(mask, _)| mask & (1u64 << (j - 1)) != 0)
            .map(|&(_, c)| c)
            .collect();
        let el: Vec<usize> = x_vars[l - 1][i - 1]
            .iter()
            .filter(|&&(mask, _)| mask & (1u64 << (j - 1)) != 0)
            .map(|&(_, c)| c)
            .collect();
        let z_col = z_index.get(&(k, l)).copied();
        for flip in [false, true] {
            let (pos, neg) = if flip { (&el, &ek) } else { (&ek, &el) };
            let mut coeffs = vec![(col_d, -1.0)];
            coeffs.extend(pos.iter().map(|&c| (c, 1.0)));
            coeffs.extend(neg.iter().map(|&c| (c, -1.0)));
            let rhs = match z_col {
                Some(zc) => {
                    coeffs.push((zc, 1.0));
                    1.0
                }
                None => 0.0,
            };
            ineq_rows.push(LinRow { coeffs, rhs });
        }
        if let Some(zc) = z_col {
            ineq_rows.push(LinRow {
                coeffs: vec![(col_d, 1.0), (zc, -1.0)],
                rhs: 0.0,
            });
        }
    }

    Ok(IlpModel {
        p,
        d_max,
        k_subjects,
        k_total,
        mode,
        vars,
        eq_rows,
        ineq_rows,
        constant,
        tables: all_tables,
        hp: hp.clone(),
        x_vars,
        z_index,
        pairs,
    })
}

impl ClusterSpec {
    pub fn validate(&self, k_subjects: usize) -> Result<()> {
        if self.subject_count != k_subjects {
            return Err(Error::input(format!(
                "cluster spec says {} subjects, but {} score tables given",
                self.subject_count, k_subjects
            )));
        }
        if self.l_clusters == 0 {
            return Err(Error::input("need at least one cluster"));
        }
        if self.l_clusters > k_subjects {
            return Err(Error::input(format!(
                "{} clusters exceed {} subjects",
                self.l_clusters, k_subjects
            )));
        }
        Ok(())
    }
}
