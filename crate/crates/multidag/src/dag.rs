//! Directed acyclic graphs over a small vertex set, stored as one
//! parent-set bitmask per vertex.
//!
//! Vertices are numbered 1..=P in the public API and in all serialized
//! forms; internally bit `j-1` of a mask stands for vertex `j`. P is
//! capped at 64 so a parent set always fits one `u64`.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Hard cap on vertex count so parent sets fit a single machine word.
pub const MAX_VERTICES: usize = 64;

/// A DAG on vertices 1..=p, as parent-set bitmasks.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    p: usize,
    parents: Vec<u64>,
}

/// Both distance conventions between two DAGs on the same vertex set.
///
/// `shd` treats a reversed edge as one operation; `xor_count` counts
/// mismatched parent memberships, so a reversal contributes two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagDistanceReport {
    pub shd: u64,
    pub xor_count: u64,
}

fn check_vertex_count(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::input("vertex count must be at least 1"));
    }
    if p > MAX_VERTICES {
        return Err(Error::input(format!(
            "vertex count {p} exceeds the supported maximum {MAX_VERTICES}"
        )));
    }
    Ok(())
}

/// True iff the parent sets admit a topological order. Masks must only
/// reference vertices 1..=p (checked; out-of-range bits are an input
/// error, not `false`).
pub fn is_acyclic(p: usize, parents: &[u64]) -> Result<bool> {
    check_vertex_count(p)?;
    if parents.len() != p {
        return Err(Error::input(format!(
            "expected {p} parent sets, got {}",
            parents.len()
        )));
    }
    let universe = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
    for (i0, &mask) in parents.iter().enumerate() {
        if mask & !universe != 0 {
            return Err(Error::input(format!(
                "parent set of vertex {} references a vertex outside 1..={p}",
                i0 + 1
            )));
        }
        if mask & (1u64 << i0) != 0 {
            return Err(Error::input(format!(
                "vertex {} lists itself as a parent",
                i0 + 1
            )));
        }
    }
    // Kahn peeling on bitmasks: repeatedly remove vertices whose
    // remaining parents are all removed.
    let mut removed: u64 = 0;
    loop {
        let mut progressed = false;
        for (i0, &mask) in parents.iter().enumerate() {
            let bit = 1u64 << i0;
            if removed & bit == 0 && mask & !removed == 0 {
                removed |= bit;
                progressed = true;
            }
        }
        if removed == universe {
            return Ok(true);
        }
        if !progressed {
            return Ok(false);
        }
    }
}

impl Dag {
    /// The empty graph on p vertices.
    pub fn empty(p: usize) -> Result<Dag> {
        check_vertex_count(p)?;
        Ok(Dag {
            p,
            parents: vec![0; p],
        })
    }

    /// Builds a DAG from raw masks, validating range, self-loops and
    /// acyclicity.
    pub fn from_masks(p: usize, parents: Vec<u64>) -> Result<Dag> {
        if !is_acyclic(p, &parents)? {
            return Err(Error::input("parent sets contain a directed cycle"));
        }
        Ok(Dag { p, parents })
    }

    /// Builds a DAG from 1-based parent lists.
    pub fn from_parent_lists(p: usize, lists: &[Vec<usize>]) -> Result<Dag> {
        check_vertex_count(p)?;
        if lists.len() != p {
            return Err(Error::input(format!(
                "expected {p} parent lists, got {}",
                lists.len()
            )));
        }
        let mut parents = vec![0u64; p];
        for (i0, list) in lists.iter().enumerate() {
            for &j in list {
                if j == 0 || j > p {
                    return Err(Error::input(format!(
                        "vertex {} has parent {j} outside 1..={p}",
                        i0 + 1
                    )));
                }
                let bit = 1u64 << (j - 1);
                if parents[i0] & bit != 0 {
                    return Err(Error::input(format!(
                        "vertex {} lists parent {j} twice",
                        i0 + 1
                    )));
                }
                parents[i0] |= bit;
            }
        }
        Dag::from_masks(p, parents)
    }

    /// Convenience constructor from a list of edges `j -> i` (1-based).
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Dag> {
        check_vertex_count(p)?;
        let mut parents = vec![0u64; p];
        for &(j, i) in edges {
            if j == 0 || j > p || i == 0 || i > p {
                return Err(Error::input(format!(
                    "edge {j}->{i} references a vertex outside 1..={p}"
                )));
            }
            parents[i - 1] |= 1u64 << (j - 1);
        }
        Dag::from_masks(p, parents)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Parent-set bitmask of vertex `i` (1-based).
    pub fn parent_mask(&self, i: usize) -> u64 {
        self.parents[i - 1]
    }

    pub fn parent_masks(&self) -> &[u64] {
        &self.parents
    }

    /// Parents of vertex `i`, ascending, 1-based.
    pub fn parents_of(&self, i: usize) -> Vec<usize> {
        mask_to_vertices(self.parents[i - 1])
    }

    /// True iff the edge `j -> i` is present (1-based).
    pub fn has_edge(&self, j: usize, i: usize) -> bool {
        self.parents[i - 1] & (1u64 << (j - 1)) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|m| m.count_ones() as usize).sum()
    }

    pub fn max_in_degree(&self) -> usize {
        self.parents
            .iter()
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// A topological order (parents before children), 1-based.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.p);
        let mut removed: u64 = 0;
        while order.len() < self.p {
            for i0 in 0..self.p {
                let bit = 1u64 << i0;
                if removed & bit == 0 && self.parents[i0] & !removed == 0 {
                    removed |= bit;
                    order.push(i0 + 1);
                }
            }
        }
        order
    }

    /// DOT rendering; `labels` supplies one display name per vertex.
    pub fn to_dot(&self, name: &str, labels: &[String]) -> Result<String> {
        if labels.len() != self.p {
            return Err(Error::input(format!(
                "expected {} labels, got {}",
                self.p,
                labels.len()
            )));
        }
        let mut out = String::new();
        out.push_str(&format!("digraph \"{name}\" {{\n"));
        for i in 1..=self.p {
            out.push_str(&format!(
                "  {i} [label=\"{}\"];\n",
                labels[i - 1].replace('"', "\\\"")
            ));
        }
        for i in 1..=self.p {
            for j in self.parents_of(i) {
                out.push_str(&format!("  {j} -> {i};\n"));
            }
        }
        out.push_str("}\n");
        Ok(out)
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = (1..=self.p)
            .flat_map(|i| {
                self.parents_of(i)
                    .into_iter()
                    .map(move |j| format!("{j}->{i}"))
            })
            .collect();
        write!(f, "Dag(p={}, [{}])", self.p, edges.join(", "))
    }
}

/// Vertices in a mask, ascending, 1-based.
pub fn mask_to_vertices(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        let b = mask.trailing_zeros() as usize;
        out.push(b + 1);
        mask &= mask - 1;
    }
    out
}

/// Bitmask over 1-based vertices.
pub fn vertices_to_mask(vertices: &[usize]) -> u64 {
    vertices.iter().fold(0u64, |m, &v| m | (1u64 << (v - 1)))
}

/// Admissible parent-set masks for `node` (1-based): every subset of
/// the other vertices with at most `d_max` members, in ascending
/// numeric order. That ordering is relied on for determinism wherever
/// tables and models are built.
pub fn parent_set_masks(p: usize, node: usize, d_max: usize) -> Vec<u64> {
    let node_bit = 1u64 << (node - 1);
    let limit: u64 = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
    let mut out = Vec::new();
    let mut mask = 0u64;
    loop {
        if mask & node_bit == 0 && mask.count_ones() as usize <= d_max {
            out.push(mask);
        }
        if mask == limit {
            break;
        }
        mask += 1;
    }
    out
}

/// Both distances between two DAGs on the same vertex count.
pub fn distance(g1: &Dag, g2: &Dag) -> Result<DagDistanceReport> {
    if g1.p != g2.p {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {} vertices",
            g1.p, g2.p
        )));
    }
    let mut xor_count = 0u64;
    for i0 in 0..g1.p {
        xor_count += (g1.parents[i0] ^ g2.parents[i0]).count_ones() as u64;
    }
    // SHD over unordered pairs: states none / j->i / i->j, one unit per
    // differing pair (reversal counts once).
    let mut shd = 0u64;
    for i in 1..=g1.p {
        for j in (i + 1)..=g1.p {
            let s1 = pair_state(g1, i, j);
            let s2 = pair_state(g2, i, j);
            if s1 != s2 {
                shd += 1;
            }
        }
    }
    Ok(DagDistanceReport { shd, xor_count })
}

fn pair_state(g: &Dag, i: usize, j: usize) -> u8 {
    match (g.has_edge(i, j), g.has_edge(j, i)) {
        (false, false) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (true, true) => unreachable!("both directions present in a DAG"),
    }
}

// --- serde: {"p": int, "parents": [[int,...], ...]} with 1-based ids ---

#[derive(Serialize, Deserialize)]
struct DagWire {
    p: usize,
    parents: Vec<Vec<usize>>,
}

impl Serialize for Dag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = DagWire {
            p: self.p,
            parents: (1..=self.p).map(|i| self.parents_of(i)).collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = DagWire::deserialize(deserializer)?;
        Dag::from_parent_lists(wire.p, &wire.parents).map_err(D::Error::custom)
    }
}

/// An undirected network over subjects 1..=k_total; edges stored with
/// the smaller endpoint first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectNetwork {
    k_total: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl SubjectNetwork {
    pub fn empty(k_total: usize) -> SubjectNetwork {
        SubjectNetwork {
            k_total,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(k_total: usize) -> SubjectNetwork {
        let mut net = SubjectNetwork::empty(k_total);
        for k in 1..=k_total {
            for l in (k + 1)..=k_total {
                net.edges.insert((k, l));
            }
        }
        net
    }

    pub fn with_edges(k_total: usize, edges: &[(usize, usize)]) -> Result<SubjectNetwork> {
        let mut net = SubjectNetwork::empty(k_total);
        for &(k, l) in edges {
            net.add_edge(k, l)?;
        }
        Ok(net)
    }

    pub fn add_edge(&mut self, k: usize, l: usize) -> Result<()> {
        if k == l {
            return Err(Error::input(format!("self-loop on subject {k}")));
        }
        if k == 0 || l == 0 || k > self.k_total || l > self.k_total {
            return Err(Error::input(format!(
                "edge ({k},{l}) references a subject outside 1..={}",
                self.k_total
            )));
        }
        self.edges.insert((k.min(l), k.max(l)));
        Ok(())
    }

    pub fn k_total(&self) -> usize {
        self.k_total
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        self.edges.contains(&(k.min(l), k.max(l)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp: Vec<usize> = (0..self.k_total).collect();
        fn root(comp: &mut Vec<usize>, mut v: usize) -> usize {
            while comp[v] != v {
                comp[v] = comp[comp[v]];
                v = comp[v];
            }
            v
        }
        for &(k, l) in &self.edges {
            let (rk, rl) = (root(&mut comp, k - 1), root(&mut comp, l - 1));
            if rk != rl {
                comp[rk.max(rl)] = rk.min(rl);
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.k_total];
        for v in 0..self.k_total {
            let r = root(&mut comp, v);
            groups[r].push(v + 1);
        }
        groups.retain(|g| !g.is_empty());
        groups
    }

    /// Canonical `{1,4|2,3|5,6}` rendering of [`Self::components`].
    pub fn partition_string(&self) -> String {
        let parts: Vec<String> = self
            .components()
            .iter()
            .map(|g| {
                g.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        format!("{{{}}}", parts.join("|"))
    }
}
