//! Exhaustive DAG enumeration, the brute-force oracle backend.
//!
//! The DAG count grows super-exponentially in the vertex count, so the
//! enumerator refuses more than [`MAX_ENUM_VERTICES`] vertices.

use crate::dag::Dag;
use crate::error::{Error, Result};

/// Largest vertex count the enumerator accepts (2^(p(p-1)) candidate
/// edge sets are scanned; p = 5 is ~1M candidates).
pub const MAX_ENUM_VERTICES: usize = 5;

/// Streams every DAG on `p` vertices exactly once, filtered to in-degree
/// at most `d_max` when given. Order is fixed: ascending over the packed
/// edge-indicator code, so runs are reproducible.
pub fn enumerate_dags(p: usize, d_max: Option<usize>) -> Result<DagEnumeration> {
    if p == 0 {
        return Err(Error::input("vertex count must be at least 1"));
    }
    if p > MAX_ENUM_VERTICES {
        return Err(Error::capacity(format!(
            "refusing to enumerate DAGs on {p} vertices (maximum {MAX_ENUM_VERTICES})"
        )));
    }
    let mut pairs = Vec::new();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                // bit t set means edge j -> i present
                pairs.push((j, i));
            }
        }
    }
    Ok(DagEnumeration {
        p,
        d_max,
        pairs,
        next_code: 0,
        done: false,
    })
}

/// Iterator over all DAGs on a fixed vertex count. Single-consumer.
pub struct DagEnumeration {
    p: usize,
    d_max: Option<usize>,
    pairs: Vec<(usize, usize)>,
    next_code: u64,
    done: bool,
}

impl Iterator for DagEnumeration {
    type Item = Dag;

    fn next(&mut self) -> Option<Dag> {
        if self.done {
            return None;
        }
        let n_codes: u64 = 1u64 << self.pairs.len();
        while self.next_code < n_codes {
            let code = self.next_code;
            self.next_code += 1;
            let mut parents = vec![0u64; self.p];
            for (t, &(j, i)) in self.pairs.iter().enumerate() {
                if code & (1u64 << t) != 0 {
                    parents[i] |= 1u64 << j;
                }
            }
            if let Some(cap) = self.d_max {
                if parents.iter().any(|m| m.count_ones() as usize > cap) {
                    continue;
                }
            }
            if let Ok(dag) = Dag::from_masks(self.p, parents) {
                return Some(dag);
            }
        }
        self.done = true;
        None
    }
}
