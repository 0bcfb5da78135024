//! Dense bounded-variable simplex, the LP core of the branch-and-cut
//! solver.
//!
//! The engine maximizes a linear objective over box-bounded variables
//! and a growing set of `<=` / `=` rows. It keeps a fully reduced
//! tableau (one slack per row), so three operations stay cheap during
//! search: appending a cut row, tightening or restoring a variable
//! bound, and swapping the objective. Dual pivots restore primal
//! feasibility after rows or bound changes; primal pivots restore
//! optimality after an objective swap. All pivot rules break ties by
//! smallest index so runs are deterministic.

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-7;
pub const DUAL_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-8;
const MAX_PIVOTS: u64 = 500_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VStat {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Outcome of one bounded-pivot solving pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PassOutcome {
    Done(LpStatus),
    PivotLimit,
}

/// Pivots before a pass gives up, triggering a drift-clearing cold
/// restart with Bland's rule.
const SOFT_PIVOTS: u64 = 30_000;

/// A stored constraint row: sparse structural coefficients, right-hand
/// side, and whether it is an equality.
#[derive(Clone, Debug)]
pub struct StoredRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub eq: bool,
}

pub struct Simplex {
    n_struct: usize,
    obj: Vec<f64>, // structural objective (maximize)
    lo: Vec<f64>,
    up: Vec<f64>,
    rows: Vec<StoredRow>,

    // tableau state; column j >= n_struct is the slack of row j - n_struct
    tab: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basic: Vec<usize>,
    stat: Vec<VStat>,
    redcost: Vec<f64>,
    beta: Vec<f64>,
    pivots: u64,
}

impl Simplex {
    pub fn new(obj: Vec<f64>, lo: Vec<f64>, up: Vec<f64>) -> Simplex {
        let n = obj.len();
        assert_eq!(lo.len(), n);
        assert_eq!(up.len(), n);
        let mut s = Simplex {
            n_struct: n,
            obj,
            lo,
            up,
            rows: Vec::new(),
            tab: Vec::new(),
            rhs: Vec::new(),
            basic: Vec::new(),
            stat: Vec::new(),
            redcost: Vec::new(),
            beta: Vec::new(),
            pivots: 0,
        };
        s.cold_reset();
        s
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_count(&self) -> u64 {
        self.pivots
    }

    fn n_cols(&self) -> usize {
        self.n_struct + self.rows.len()
    }

    fn col_lo(&self, j: usize) -> f64 {
        if j < self.n_struct {
            self.lo[j]
        } else {
            0.0
        }
    }

    fn col_up(&self, j: usize) -> f64 {
        if j < self.n_struct {
            self.up[j]
        } else if self.rows[j - self.n_struct].eq {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn col_obj(&self, j: usize) -> f64 {
        if j < self.n_struct {
            self.obj[j]
        } else {
            0.0
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.stat[j] {
            VStat::AtLower => self.col_lo(j),
            VStat::AtUpper => self.col_up(j),
            VStat::Basic => unreachable!("basic column has no bound value"),
        }
    }

    /// Rebuilds the tableau with the all-slack basis and a dual-feasible
    /// placement of the structural columns. Cheap: the all-slack basis
    /// needs no elimination.
    pub fn cold_reset(&mut self) {
        let n_cols = self.n_cols();
        let n_rows = self.rows.len();
        self.tab = Vec::with_capacity(n_rows);
        self.rhs = Vec::with_capacity(n_rows);
        self.basic = Vec::with_capacity(n_rows);
        for (r, row) in self.rows.iter().enumerate() {
            let mut dense = vec![0.0; n_cols];
            for &(j, v) in &row.coeffs {
                dense[j] = v;
            }
            dense[self.n_struct + r] = 1.0;
            self.tab.push(dense);
            self.rhs.push(row.rhs);
            self.basic.push(self.n_struct + r);
        }
        self.stat = (0..n_cols)
            .map(|j| {
                if j >= self.n_struct {
                    return VStat::Basic;
                }
                if self.obj[j] > 0.0 && self.up[j].is_finite() {
                    VStat::AtUpper
                } else {
                    VStat::AtLower
                }
            })
            .collect();
        for r in 0..n_rows {
            self.stat[self.n_struct + r] = VStat::Basic;
        }
        self.redcost = (0..n_cols).map(|j| self.col_obj(j)).collect();
        self.recompute_beta();
    }

    fn recompute_beta(&mut self) {
        let hot: Vec<(usize, f64)> = (0..self.n_cols())
            .filter(|&j| self.stat[j] != VStat::Basic)
            .filter_map(|j| {
                let v = self.nonbasic_value(j);
                (v != 0.0).then_some((j, v))
            })
            .collect();
        self.beta = self.rhs.clone();
        for (r, beta) in self.beta.iter_mut().enumerate() {
            let row = &self.tab[r];
            for &(j, v) in &hot {
                *beta -= row[j] * v;
            }
        }
    }

    /// Appends a constraint row, eliminating current basic variables so
    /// the tableau stays reduced. The new slack starts basic.
    pub fn add_row(&mut self, row: StoredRow) {
        let mut dense = vec![0.0; self.n_cols() + 1];
        for &(j, v) in &row.coeffs {
            dense[j] += v;
        }
        let mut new_rhs = row.rhs;
        for r in 0..self.rows.len() {
            let f = dense[self.basic[r]];
            if f != 0.0 {
                let trow = &self.tab[r];
                for (j, d) in dense[..self.n_cols()].iter_mut().enumerate() {
                    *d -= f * trow[j];
                }
                new_rhs -= f * self.rhs[r];
            }
        }
        let slack_col = self.n_cols(); // before push
        dense[slack_col] = 1.0;
        for trow in self.tab.iter_mut() {
            trow.push(0.0);
        }
        self.rows.push(row);
        self.tab.push(dense);
        self.rhs.push(new_rhs);
        self.basic.push(slack_col);
        self.stat.push(VStat::Basic);
        self.redcost.push(0.0);
        self.recompute_beta();
    }

    /// Changes one structural variable's bounds. Reduced costs are
    /// untouched, so dual feasibility survives; primal feasibility may
    /// not, which a dual re-solve repairs.
    pub fn set_bounds(&mut self, j: usize, lo: f64, up: f64) {
        debug_assert!(j < self.n_struct);
        debug_assert!(lo <= up);
        self.lo[j] = lo;
        self.up[j] = up;
        if self.stat[j] != VStat::Basic {
            // keep the variable on its current side, clamped to the new box
            if self.stat[j] == VStat::AtUpper && !up.is_finite() {
                self.stat[j] = VStat::AtLower;
            }
        }
        self.recompute_beta();
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.up[j])
    }

    /// Swaps the structural objective and recomputes reduced costs.
    /// Primal feasibility is untouched; optimality needs a primal
    /// re-solve.
    pub fn set_objective(&mut self, obj: Vec<f64>) {
        assert_eq!(obj.len(), self.n_struct);
        self.obj = obj;
        let n_cols = self.n_cols();
        let mut red: Vec<f64> = (0..n_cols).map(|j| self.col_obj(j)).collect();
        for r in 0..self.rows.len() {
            let cb = self.col_obj(self.basic[r]);
            if cb != 0.0 {
                let trow = &self.tab[r];
                for (j, red_j) in red.iter_mut().enumerate() {
                    *red_j -= cb * trow[j];
                }
            }
        }
        self.redcost = red;
    }

    pub fn objective(&self) -> &[f64] {
        &self.obj
    }

    /// Current value of one structural variable.
    pub fn value(&self, j: usize) -> f64 {
        match self.stat[j] {
            VStat::Basic => {
                let r = self
                    .basic
                    .iter()
                    .position(|&b| b == j)
                    .expect("basic column has a row");
                self.beta[r]
            }
            _ => self.nonbasic_value(j),
        }
    }

    /// All structural values.
    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.n_struct)
            .map(|j| {
                if self.stat[j] == VStat::Basic {
                    0.0
                } else {
                    self.nonbasic_value(j)
                }
            })
            .collect();
        for (r, &b) in self.basic.iter().enumerate() {
            if b < self.n_struct {
                out[b] = self.beta[r];
            }
        }
        out
    }

    pub fn objective_value(&self) -> f64 {
        self.values()
            .iter()
            .zip(&self.obj)
            .map(|(x, c)| x * c)
            .sum()
    }

    pub fn is_primal_feasible(&self) -> bool {
        self.beta.iter().enumerate().all(|(r, &b)| {
            let col = self.basic[r];
            b >= self.col_lo(col) - FEAS_TOL && b <= self.col_up(col) + FEAS_TOL
        })
    }

    pub fn is_dual_feasible(&self) -> bool {
        (0..self.n_cols()).all(|j| match self.stat[j] {
            VStat::Basic => true,
            _ if self.col_lo(j) == self.col_up(j) => true,
            VStat::AtLower => self.redcost[j] <= DUAL_TOL,
            VStat::AtUpper => self.redcost[j] >= -DUAL_TOL,
        })
    }

    /// Re-solves after any mix of bound, row and objective changes,
    /// picking whichever simplex applies; falls back to a cold reset
    /// when neither warm start is valid.
    pub fn reoptimize(&mut self) -> Result<LpStatus> {
        if self.is_dual_feasible() {
            return self.dual_solve();
        }
        if self.is_primal_feasible() {
            return self.primal_solve();
        }
        self.cold_reset();
        self.dual_solve()
    }

    /// Dual simplex: from a dual-feasible state, drives out primal
    /// infeasibilities. Returns `Infeasible` when a violated row admits
    /// no eligible entering column. A pass that stalls (degenerate
    /// cycling or accumulated tableau drift) is retried once from a
    /// cold reset, which rebuilds the tableau from the original rows
    /// and so clears all drift, with Bland's rule active throughout.
    pub fn dual_solve(&mut self) -> Result<LpStatus> {
        match self.dual_pass(false, SOFT_PIVOTS)? {
            PassOutcome::Done(status) => Ok(status),
            PassOutcome::PivotLimit => {
                self.cold_reset();
                match self.dual_pass(true, MAX_PIVOTS)? {
                    PassOutcome::Done(status) => Ok(status),
                    PassOutcome::PivotLimit => {
                        Err(Error::internal("dual simplex pivot limit exceeded"))
                    }
                }
            }
        }
    }

    fn dual_pass(&mut self, bland_from_start: bool, max_pivots: u64) -> Result<PassOutcome> {
        let mut local: u64 = 0;
        let mut bland = bland_from_start;
        let mut stall: u32 = 0;
        // the (primal-value) objective is non-increasing along dual
        // pivots; cycling shows up as a long run without strict decrease
        let mut best_obj = f64::INFINITY;
        loop {
            local += 1;
            if local > max_pivots {
                return Ok(PassOutcome::PivotLimit);
            }
            // leaving row: largest bound violation, or smallest basic
            // index once the anti-cycling fallback is active
            let mut leave: Option<(usize, f64, bool)> = None; // (row, violation, above_upper)
            for r in 0..self.rows.len() {
                let col = self.basic[r];
                let b = self.beta[r];
                let over = b - self.col_up(col);
                let under = self.col_lo(col) - b;
                let (viol, above) = if over > under { (over, true) } else { (under, false) };
                if viol <= FEAS_TOL {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((lr, lv, _)) => {
                        if bland {
                            self.basic[r] < self.basic[lr]
                        } else {
                            viol > lv
                        }
                    }
                };
                if better {
                    leave = Some((r, viol, above));
                }
            }
            let Some((r, _, above)) = leave else {
                return Ok(PassOutcome::Done(LpStatus::Optimal));
            };
            let obj = self.objective_value();
            if obj >= best_obj - 1e-12 {
                stall += 1;
                if stall > 300 {
                    bland = true;
                }
            } else {
                best_obj = obj;
                stall = 0;
            }

            // entering column: dual ratio test; among near-minimal
            // ratios prefer the largest pivot magnitude (stability), or
            // the smallest index in anti-cycling mode
            let mut min_ratio = f64::INFINITY;
            let row = &self.tab[r];
            for j in 0..self.n_cols() {
                if self.stat[j] == VStat::Basic || self.col_lo(j) == self.col_up(j) {
                    continue;
                }
                let alpha = row[j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                if dual_eligible(above, self.stat[j], alpha) {
                    min_ratio = min_ratio.min((self.redcost[j] / alpha).abs());
                }
            }
            if min_ratio.is_infinite() {
                return Ok(PassOutcome::Done(LpStatus::Infeasible));
            }
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n_cols() {
                if self.stat[j] == VStat::Basic || self.col_lo(j) == self.col_up(j) {
                    continue;
                }
                let alpha = row[j];
                if alpha.abs() <= PIVOT_TOL || !dual_eligible(above, self.stat[j], alpha) {
                    continue;
                }
                if (self.redcost[j] / alpha).abs() <= min_ratio + DUAL_TOL {
                    if bland {
                        enter = Some((j, alpha.abs()));
                        break;
                    }
                    if enter.map_or(true, |(_, a)| alpha.abs() > a) {
                        enter = Some((j, alpha.abs()));
                    }
                }
            }
            let (q, _) = enter.expect("a min-ratio column exists");
            self.pivot(r, q, above);
        }
    }

    /// Primal simplex: from a primal-feasible state, drives reduced
    /// costs to optimality.
    /// Primal simplex from a primal-feasible state; a stalled pass is
    /// retried via a cold reset plus the dual simplex, which is valid
    /// under any objective.
    pub fn primal_solve(&mut self) -> Result<LpStatus> {
        match self.primal_pass(false, SOFT_PIVOTS)? {
            PassOutcome::Done(status) => Ok(status),
            PassOutcome::PivotLimit => {
                self.cold_reset();
                match self.dual_pass(true, MAX_PIVOTS)? {
                    PassOutcome::Done(status) => Ok(status),
                    PassOutcome::PivotLimit => {
                        Err(Error::internal("primal simplex pivot limit exceeded"))
                    }
                }
            }
        }
    }

    fn primal_pass(&mut self, bland_from_start: bool, max_pivots: u64) -> Result<PassOutcome> {
        let mut local: u64 = 0;
        let mut bland = bland_from_start;
        let mut stall: u32 = 0;
        let mut best_obj = f64::NEG_INFINITY;
        loop {
            local += 1;
            if local > max_pivots {
                return Ok(PassOutcome::PivotLimit);
            }
            // entering: most favorable reduced cost (smallest index once
            // the anti-cycling fallback is active)
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n_cols() {
                if self.stat[j] == VStat::Basic || self.col_lo(j) == self.col_up(j) {
                    continue;
                }
                let d = self.redcost[j];
                let gain = match self.stat[j] {
                    VStat::AtLower => d,
                    VStat::AtUpper => -d,
                    VStat::Basic => unreachable!(),
                };
                if gain > DUAL_TOL {
                    if bland {
                        enter = Some((j, gain));
                        break;
                    }
                    if enter.map_or(true, |(_, g)| gain > g) {
                        enter = Some((j, gain));
                    }
                }
            }
            let Some((q, _)) = enter else {
                return Ok(PassOutcome::Done(LpStatus::Optimal));
            };
            let obj = self.objective_value();
            if obj <= best_obj + 1e-12 {
                stall += 1;
                if stall > 300 {
                    bland = true;
                }
            } else {
                best_obj = obj;
                stall = 0;
            }
            let dir = if self.stat[q] == VStat::AtLower { 1.0 } else { -1.0 };

            // ratio test over basics, plus the entering bound flip
            let mut t_best = self.col_up(q) - self.col_lo(q); // flip distance
            let mut block: Option<(usize, bool)> = None; // (row, leaving_to_upper)
            for r in 0..self.rows.len() {
                let a = self.tab[r][q] * dir;
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let col = self.basic[r];
                let t = if a > 0.0 {
                    // beta decreases toward its lower bound
                    let lo = self.col_lo(col);
                    if lo.is_finite() {
                        (self.beta[r] - lo) / a
                    } else {
                        continue;
                    }
                } else {
                    let up = self.col_up(col);
                    if up.is_finite() {
                        (self.beta[r] - up) / a
                    } else {
                        continue;
                    }
                };
                let t = t.max(0.0);
                if t < t_best - 1e-12 {
                    t_best = t;
                    block = Some((r, a < 0.0));
                }
            }
            if t_best.is_infinite() {
                return Err(Error::internal("primal simplex detected an unbounded ray"));
            }
            match block {
                None => {
                    // bound flip only
                    self.stat[q] = if self.stat[q] == VStat::AtLower {
                        VStat::AtUpper
                    } else {
                        VStat::AtLower
                    };
                    self.recompute_beta();
                }
                Some((r, to_upper)) => {
                    self.pivot(r, q, to_upper);
                }
            }
        }
    }

    /// Gauss-Jordan pivot: column `q` becomes basic in row `r`; the
    /// old basic column leaves to its upper (`to_upper`) or lower bound.
    fn pivot(&mut self, r: usize, q: usize, to_upper: bool) {
        debug_assert!(self.stat[q] != VStat::Basic);
        self.pivots += 1;
        let leaving = self.basic[r];
        let alpha = self.tab[r][q];
        debug_assert!(alpha.abs() > 1e-12, "near-zero pivot");

        let inv = 1.0 / alpha;
        for v in self.tab[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        let pivot_rhs = self.rhs[r];

        let prow = std::mem::take(&mut self.tab[r]);
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r || row.is_empty() {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for (j, v) in row.iter_mut().enumerate() {
                    *v -= f * prow[j];
                }
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.redcost[q];
        if f != 0.0 {
            for (j, d) in self.redcost.iter_mut().enumerate() {
                *d -= f * prow[j];
            }
        }
        self.tab[r] = prow;

        self.basic[r] = q;
        self.stat[q] = VStat::Basic;
        self.stat[leaving] = if to_upper { VStat::AtUpper } else { VStat::AtLower };
        self.recompute_beta();
    }
}

fn dual_eligible(above: bool, stat: VStat, alpha: f64) -> bool {
    match (above, stat) {
        (true, VStat::AtLower) => alpha > 0.0,
        (true, VStat::AtUpper) => alpha < 0.0,
        (false, VStat::AtLower) => alpha < 0.0,
        (false, VStat::AtUpper) => alpha > 0.0,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[(usize, f64)], rhs: f64, eq: bool) -> StoredRow {
        StoredRow {
            coeffs: coeffs.to_vec(),
            rhs,
            eq,
        }
    }

    #[test]
    fn unconstrained_box_maximum() {
        let mut s = Simplex::new(vec![1.0, -2.0, 0.5], vec![0.0; 3], vec![1.0; 3]);
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert_eq!(s.values(), vec![1.0, 0.0, 1.0]);
        assert!((s.objective_value() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn knapsack_relaxation() {
        // max 3a + 2b st a + b <= 1, a,b in [0,1]
        let mut s = Simplex::new(vec![3.0, 2.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, 1.0), (1, 1.0)], 1.0, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 3.0).abs() < 1e-9);
        assert!((s.value(0) - 1.0).abs() < 1e-9);
        assert!(s.value(1).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_bind() {
        // max a + b st a + b = 0.5
        let mut s = Simplex::new(vec![1.0, 1.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, 1.0), (1, 1.0)], 0.5, true));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fractional_vertex() {
        // max x + y st 2x + y <= 1.5, x + 2y <= 1.5 -> x = y = 0.5
        let mut s = Simplex::new(vec![1.0, 1.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, 2.0), (1, 1.0)], 1.5, false));
        s.add_row(row(&[(0, 1.0), (1, 2.0)], 1.5, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.value(0) - 0.5).abs() < 1e-9);
        assert!((s.value(1) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut s = Simplex::new(vec![0.0, 0.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, 1.0), (1, 1.0)], 3.0, true));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Infeasible);
    }

    #[test]
    fn rows_added_midway_reoptimize() {
        let mut s = Simplex::new(vec![1.0, 1.0], vec![0.0; 2], vec![1.0; 2]);
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 2.0).abs() < 1e-9);
        s.add_row(row(&[(0, 1.0), (1, 1.0)], 1.0, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 1.0).abs() < 1e-9);
        s.add_row(row(&[(0, 1.0)], 0.25, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 1.0).abs() < 1e-9);
        assert!(s.value(0) <= 0.25 + 1e-9);
        assert!((s.value(0) + s.value(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bound_fixing_and_restoring() {
        let mut s = Simplex::new(vec![2.0, 1.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, 1.0), (1, 1.0)], 1.0, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.value(0) - 1.0).abs() < 1e-9);
        s.set_bounds(0, 0.0, 0.0);
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 1.0).abs() < 1e-9);
        assert!((s.value(1) - 1.0).abs() < 1e-9);
        s.set_bounds(0, 0.0, 1.0);
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.objective_value() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn objective_swap_uses_primal_warm_start() {
        let mut s = Simplex::new(vec![1.0, 0.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, 1.0), (1, 1.0)], 1.0, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        s.set_objective(vec![0.0, 1.0]);
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.value(1) - 1.0).abs() < 1e-9);
        assert!((s.objective_value() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_rows() {
        // x - y >= 0.25 stored as -x + y <= -0.25; max y
        let mut s = Simplex::new(vec![0.0, 1.0], vec![0.0; 2], vec![1.0; 2]);
        s.add_row(row(&[(0, -1.0), (1, 1.0)], -0.25, false));
        assert_eq!(s.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((s.value(1) - 0.75).abs() < 1e-9);
        assert!((s.value(0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        // cross-check small random LPs against brute-force enumeration
        // of basic feasible points on the box-plus-rows polytope
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _trial in 0..200 {
            let n = 3;
            let obj: Vec<f64> = (0..n).map(|_| next() * 4.0 - 2.0).collect();
            let mut s = Simplex::new(obj.clone(), vec![0.0; n], vec![1.0; n]);
            let mut rows = Vec::new();
            for _ in 0..2 {
                let coeffs: Vec<(usize, f64)> =
                    (0..n).map(|j| (j, next() * 2.0 - 1.0)).collect();
                let rhs = next() * 1.5;
                rows.push((coeffs.clone(), rhs));
                s.add_row(row(&coeffs, rhs, false));
            }
            let status = s.reoptimize().unwrap();
            // grid search as an independent (approximate) oracle
            let mut best = f64::NEG_INFINITY;
            let steps = 20usize;
            for a in 0..=steps {
                for b in 0..=steps {
                    for c in 0..=steps {
                        let x = [
                            a as f64 / steps as f64,
                            b as f64 / steps as f64,
                            c as f64 / steps as f64,
                        ];
                        let ok = rows.iter().all(|(coeffs, rhs)| {
                            coeffs.iter().map(|&(j, v)| v * x[j]).sum::<f64>() <= *rhs + 1e-9
                        });
                        if ok {
                            let v: f64 = x.iter().zip(&obj).map(|(x, c)| x * c).sum();
                            best = best.max(v);
                        }
                    }
                }
            }
            assert_eq!(status, LpStatus::Optimal);
            let lp = s.objective_value();
            assert!(
                lp >= best - 1e-6,
                "lp {lp} below grid bound {best}"
            );
            // verify the lp point is feasible
            let xs = s.values();
            for (coeffs, rhs) in &rows {
                let lhs: f64 = coeffs.iter().map(|&(j, v)| v * xs[j]).sum();
                assert!(lhs <= rhs + 1e-6);
            }
            for &x in &xs {
                assert!((-1e-9..=1.0 + 1e-9).contains(&x));
            }
        }
    }
}
