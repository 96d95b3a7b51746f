//! The spreading-metric relaxation.
//!
//! Variables are the pairwise distances `dist(u, v)`. The relaxation asks
//! for a semimetric that (a) reproduces the pinned terminal distances, (b)
//! satisfies every triangle inequality, and (c) "spreads" every vertex
//! neighborhood: for each vertex `u` and each set `S` containing it,
//!
//! ```text
//! sum_{v in S} dist(u, v) >= (|S| - 1)^(1 + 1/dim) / 4.
//! ```
//!
//! Minimizing the weighted edge-length sum over this region lower-bounds
//! every injective lattice placement, because lattice point sets obey the
//! same volume growth.
//!
//! The solver runs a cutting-plane loop over a deliberately small variable
//! set: only pairs that carry objective weight (and have a free endpoint)
//! are LP variables; terminal-terminal distances are constants, and every
//! other pair is recovered per round as the shortest-path completion of the
//! weighted/fixed graph (capped at a value too large to ever bind). The
//! completion is the pointwise largest metric consistent with the variable
//! values, and zero-weight pairs only ever help the spreading sums, so
//! optimizing over the small set loses nothing. Violated spreading
//! constraints (found by an exact oracle on the completed table) are
//! translated into valid inequalities over the variables by substituting
//! each completed distance with its shortest-path sum; a completion that
//! undercuts a pinned distance yields the analogous path inequality.
//! Internally the growing LP is kept in dual form, where a new cut is a new
//! column: the dual stays feasible across rounds, so each round resumes
//! from the previous basis instead of re-solving from scratch.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::model::{Instance, ModelError, VertexId};

/// Dense symmetric table of pairwise distances with zero diagonal.
#[derive(Clone, PartialEq, Debug)]
pub struct DistTable {
    n: usize,
    d: Vec<f64>,
}

impl DistTable {
    pub fn zeros(n: usize) -> Self {
        DistTable { n, d: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = DistTable::zeros(n);
        for u in 0..n {
            for v in u + 1..n {
                t.set(u, v, f(u, v));
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.d[u * self.n + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.d[u * self.n + v] = value;
        self.d[v * self.n + u] = value;
    }

    /// Largest entry.
    pub fn diameter(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest nonzero entry, or None if all distances vanish.
    pub fn min_positive(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for &v in &self.d {
            if v > 0.0 && v < best {
                best = v;
            }
        }
        (best != f64::INFINITY).then_some(best)
    }
}

/// A solved spreading metric: the distance table, the relaxation objective
/// (a lower bound on the optimal placement cost), and the tolerance the
/// feasibility checks were run at.
#[derive(Clone, Debug)]
pub struct SpreadingMetric {
    pub table: DistTable,
    pub objective: f64,
    pub feasibility_tol: f64,
}

impl SpreadingMetric {
    /// Worst violation across both constraint families (negative = slack
    /// everywhere).
    pub fn max_violation(&self, dim: u32) -> f64 {
        max_spreading_violation(&self.table, dim).max(max_triangle_violation(&self.table))
    }
}

/// Right-hand side of the spreading constraint for a set of `set_size`
/// vertices.
pub fn spreading_rhs(set_size: usize, dim: u32) -> f64 {
    ((set_size - 1) as f64).powf(1.0 + 1.0 / dim as f64) / 4.0
}

/// A violated spreading constraint: vertex `u` together with the set
/// `members` (which includes `u`).
#[derive(Clone, Debug)]
pub struct SpreadingCut {
    pub u: VertexId,
    pub members: Vec<VertexId>,
    pub lhs: f64,
    pub rhs: f64,
}

impl SpreadingCut {
    pub fn violation(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// A violated triangle inequality: `dist(u, v) > dist(u, via) + dist(via, v)`.
#[derive(Clone, Copy, Debug)]
pub struct TriangleCut {
    pub u: VertexId,
    pub v: VertexId,
    pub via: VertexId,
    pub violation: f64,
}

/// Exact separation for the spreading family. For a fixed vertex `u` and
/// set size `s`, the left-hand side is minimized by the `s - 1` vertices
/// closest to `u`, so scanning prefixes of the sorted distance row finds a
/// violated set of some size if and only if one exists. Returns every
/// violated `(u, size)` candidate.
pub fn separate_spreading(table: &DistTable, dim: u32, tol: f64) -> Vec<SpreadingCut> {
    let n = table.len();
    let mut cuts = Vec::new();
    let mut order: Vec<VertexId> = Vec::with_capacity(n.saturating_sub(1));
    for u in 0..n {
        order.clear();
        order.extend((0..n).filter(|&v| v != u));
        order.sort_by(|&a, &b| {
            table.get(u, a).partial_cmp(&table.get(u, b)).unwrap().then(a.cmp(&b))
        });
        let mut lhs = 0.0;
        for (idx, &v) in order.iter().enumerate() {
            lhs += table.get(u, v);
            let size = idx + 2; // u plus the idx+1 nearest others
            let rhs = spreading_rhs(size, dim);
            if lhs < rhs - tol {
                let mut members = Vec::with_capacity(size);
                members.push(u);
                members.extend_from_slice(&order[..=idx]);
                members.sort_unstable();
                cuts.push(SpreadingCut { u, members, lhs, rhs });
            }
        }
    }
    cuts
}

/// Worst spreading violation over all `(u, size)` candidates; negative
/// values mean every constraint has slack.
pub fn max_spreading_violation(table: &DistTable, dim: u32) -> f64 {
    let n = table.len();
    let mut worst = f64::NEG_INFINITY;
    let mut row: Vec<f64> = Vec::with_capacity(n.saturating_sub(1));
    for u in 0..n {
        row.clear();
        row.extend((0..n).filter(|&v| v != u).map(|v| table.get(u, v)));
        row.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut lhs = 0.0;
        for (idx, d) in row.iter().enumerate() {
            lhs += d;
            worst = worst.max(spreading_rhs(idx + 2, dim) - lhs);
        }
    }
    worst
}

/// Exact triangle separation by full triple scan: returns every ordered
/// triple with `dist(u, v) > dist(u, via) + dist(via, v) + tol` (one entry
/// per `(u, v, via)` with `u < v`).
pub fn separate_triangle(table: &DistTable, tol: f64) -> Vec<TriangleCut> {
    let n = table.len();
    let mut cuts = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let duv = table.get(u, v);
            for via in 0..n {
                if via == u || via == v {
                    continue;
                }
                let slack = duv - table.get(u, via) - table.get(via, v);
                if slack > tol {
                    cuts.push(TriangleCut { u, v, via, violation: slack });
                }
            }
        }
    }
    cuts
}

/// Worst triangle violation (negative = all satisfied).
pub fn max_triangle_violation(table: &DistTable) -> f64 {
    let n = table.len();
    let mut worst = f64::NEG_INFINITY;
    for u in 0..n {
        for v in u + 1..n {
            let duv = table.get(u, v);
            for via in 0..n {
                if via == u || via == v {
                    continue;
                }
                worst = worst.max(duv - table.get(u, via) - table.get(via, v));
            }
        }
    }
    worst
}

/// Principal sub-table on `subset` (in the given order). The restriction of
/// a feasible metric stays feasible: its constraints are a subset of the
/// original ones up to relabeling. The restriction carries no objective.
pub fn restrict_metric(metric: &SpreadingMetric, subset: &[VertexId]) -> SpreadingMetric {
    let table =
        DistTable::from_fn(subset.len(), |a, b| metric.table.get(subset[a], subset[b]));
    SpreadingMetric { table, objective: 0.0, feasibility_tol: metric.feasibility_tol }
}

/// Per-round progress of the cutting-plane loop.
#[derive(Clone, Copy, Debug)]
pub struct RoundStats {
    pub spreading_added: usize,
    /// Triangle-family cuts: path inequalities protecting pinned distances.
    pub triangle_added: usize,
    /// The relaxation value after this round's solve (non-decreasing).
    pub objective: f64,
}

/// Summary of a finished cutting-plane run.
#[derive(Clone, Debug, Default)]
pub struct CutReport {
    pub rounds: usize,
    pub spreading_cuts: usize,
    /// Triangle-family cuts: path inequalities protecting pinned distances.
    pub triangle_cuts: usize,
    /// Worst residual violation at termination (<= the solve tolerance).
    pub final_violation: f64,
    pub per_round: Vec<RoundStats>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LpError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("instance with {0} vertices exceeds the supported cap of {MAX_VERTICES}")]
    TooLarge(usize),
    #[error("tolerance {0} out of range (must be in [1e-9, 1e-1])")]
    BadTol(f64),
    #[error("cutting-plane loop hit the round limit {rounds} with violation {violation}")]
    RoundLimit { rounds: usize, violation: f64 },
    #[error("LP solve stalled: {0}")]
    Stalled(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ROUNDS: usize = 200;
/// Everything is dense; past this size the cutting-plane LP is impractical.
pub const MAX_VERTICES: usize = 256;
/// Universal lower bound on every pairwise distance: the spreading
/// constraint for a two-element set, (2-1)^(1+1/dim) / 4, for any dim.
pub const PAIR_FLOOR: f64 = 0.25;
/// Terminal distances are frozen to the nearest rational with this
/// denominator, which keeps the equality band away from exact-arithmetic
/// knife edges.
pub const TERMINAL_ROUNDING: f64 = 1e9;

fn round_terminal(d: f64) -> f64 {
    (d * TERMINAL_ROUNDING).round() / TERMINAL_ROUNDING
}

/// Growing LP kept in dual form. Primal: min c.y subject to (accumulated
/// cut rows) A y >= b, y >= 0. Dual: max b.l subject to A^T l <= c, l >= 0,
/// solved as a minimization tableau. The dual is feasible at l = 0 because
/// c >= 0 (edge weights), so no phase-one is ever needed, and a new primal
/// cut is just a new dual column priced against the current basis.
struct CutLp {
    rows: usize,            // one per primal variable, plus objective row
    cols: Vec<Vec<f64>>,    // column-major; cols[0..rows] are the slack block
    rhs: Vec<f64>,          // length rows + 1
    basis: Vec<usize>,
    bland: bool,
}

const LP_EPS: f64 = 1e-9;

impl CutLp {
    fn new(costs: &[f64]) -> Self {
        let rows = costs.len();
        let mut cols = Vec::with_capacity(rows * 2);
        for r in 0..rows {
            let mut col = vec![0.0; rows + 1];
            col[r] = 1.0;
            cols.push(col);
        }
        let mut rhs = vec![0.0; rows + 1];
        rhs[..rows].copy_from_slice(costs);
        CutLp { rows, cols, rhs, basis: (0..rows).collect(), bland: false }
    }

    /// Add the primal cut `sum coef*y >= rhs` as a dual column, priced
    /// through the current basis inverse (the slack block).
    fn add_cut(&mut self, coefs: &[(usize, f64)], rhs: f64) {
        let mut col = vec![0.0; self.rows + 1];
        for &(r, a) in coefs {
            for (dst, &binv) in col.iter_mut().zip(&self.cols[r]) {
                if binv != 0.0 {
                    *dst += binv * a;
                }
            }
        }
        // Dual objective coefficient is -rhs (minimization form).
        col[self.rows] += -rhs;
        self.cols.push(col);
    }

    /// Resume pivoting until optimal. Returns Err on iteration blowup.
    fn reoptimize(&mut self) -> Result<(), LpError> {
        let limit = 600 * (self.rows + self.cols.len()) + 4000;
        let mut iters = 0usize;
        let mut stall = 0usize;
        let mut last = self.rhs[self.rows];
        loop {
            let ncols = self.cols.len();
            let mut entering = None;
            if self.bland {
                for c in 0..ncols {
                    if self.cols[c][self.rows] < -LP_EPS {
                        entering = Some(c);
                        break;
                    }
                }
            } else {
                let mut best = -LP_EPS;
                for c in 0..ncols {
                    let rc = self.cols[c][self.rows];
                    if rc < best {
                        best = rc;
                        entering = Some(c);
                    }
                }
            }
            let Some(pc) = entering else { return Ok(()) };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.cols[pc][r];
                if a > LP_EPS {
                    let ratio = self.rhs[r] / a;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((pr, _)) = leaving else {
                // Dual unbounded = primal infeasible; cannot happen for
                // valid cut systems (see the feasibility argument in
                // solve_lp), so treat it as numerical failure.
                return Err(LpError::Stalled("dual unbounded".into()));
            };
            self.pivot(pr, pc);
            iters += 1;
            if iters > limit {
                return Err(LpError::Stalled(format!("{limit} pivots without convergence")));
            }
            let obj = self.rhs[self.rows];
            if obj > last + 1e-12 {
                last = obj;
                stall = 0;
            } else {
                stall += 1;
                if stall > 2 * (self.rows + 16) {
                    self.bland = true;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.cols[pc][pr];
        let inv = 1.0 / piv;
        for col in self.cols.iter_mut() {
            col[pr] *= inv;
        }
        self.rhs[pr] *= inv;
        let fcol: Vec<f64> = self.cols[pc].clone();
        let pr_rhs = self.rhs[pr];
        for (i, col) in self.cols.iter_mut().enumerate() {
            if i == pc {
                continue;
            }
            let v = col[pr];
            if v == 0.0 {
                continue;
            }
            for (dst, &f) in col.iter_mut().zip(&fcol) {
                *dst -= f * v;
            }
            col[pr] = v; // the pivot row was already normalized above
        }
        for (dst, &f) in self.rhs.iter_mut().zip(&fcol) {
            *dst -= f * pr_rhs;
        }
        self.rhs[pr] = pr_rhs;
        self.cols[pc].fill(0.0);
        self.cols[pc][pr] = 1.0;
        self.basis[pr] = pc;
    }

    /// Optimal primal values: the reduced cost of slack column `p` equals
    /// the dual multiplier of row `p`, which is the primal variable.
    fn primal(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.cols[r][self.rows].max(0.0)).collect()
    }
}

/// All-pairs shortest paths over the weighted/fixed pair graph, with a
/// next-hop matrix for path reconstruction. Entries with no path (or one
/// longer than `cap`) are clamped to `cap` and get no next-hop.
struct Completion {
    dist: DistTable,
    /// `next[u * n + v]` = first hop from `u` on a shortest u-v path, or
    /// `usize::MAX` when the entry is capped.
    next: Vec<usize>,
}

fn complete(n: usize, lengths: &[(usize, usize, f64)], cap: f64) -> Completion {
    let mut dist = vec![f64::INFINITY; n * n];
    let mut next = vec![usize::MAX; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
        next[i * n + i] = i;
    }
    for &(u, v, len) in lengths {
        if len < dist[u * n + v] {
            dist[u * n + v] = len;
            dist[v * n + u] = len;
            next[u * n + v] = v;
            next[v * n + u] = u;
        }
    }
    for w in 0..n {
        for u in 0..n {
            let duw = dist[u * n + w];
            if !duw.is_finite() {
                continue;
            }
            for v in 0..n {
                let alt = duw + dist[w * n + v];
                if alt < dist[u * n + v] - 1e-15 {
                    dist[u * n + v] = alt;
                    next[u * n + v] = next[u * n + w];
                }
            }
        }
    }
    let mut table = DistTable::zeros(n);
    for u in 0..n {
        for v in u + 1..n {
            let d = dist[u * n + v];
            if d < cap {
                table.set(u, v, d);
            } else {
                table.set(u, v, cap);
                next[u * n + v] = usize::MAX;
                next[v * n + u] = usize::MAX;
            }
        }
    }
    Completion { dist: table, next }
}

/// Solve the spreading relaxation for `inst`.
///
/// Terminal pair distances are substituted as constants (rounded once, see
/// [`TERMINAL_ROUNDING`]); every objective-weighted pair with a free
/// endpoint is a variable with lower bound [`PAIR_FLOOR`]; every other pair
/// is read off the shortest-path completion, which is simultaneously the
/// best case for the spreading sums and the binding case for the triangle
/// family. Each round solves the current LP, completes the table, and runs
/// the exact spreading oracle at `tol`; each violated constraint is added
/// after substituting completed entries with their shortest-path sums,
/// which keeps it a valid inequality everywhere while still cutting off the
/// current point. Terminates when no constraint is violated by more than
/// `tol`; the objective is then a valid lower bound on every placement
/// extending the pins.
pub fn solve_lp(
    inst: &Instance,
    tol: f64,
    max_rounds: usize,
) -> Result<(SpreadingMetric, CutReport), LpError> {
    inst.validate()?;
    if inst.n > MAX_VERTICES {
        return Err(LpError::TooLarge(inst.n));
    }
    if !(1e-9..=1e-1).contains(&tol) {
        return Err(LpError::BadTol(tol));
    }
    let n = inst.n;

    // Fixed entries: all terminal-terminal pairs.
    let mut fixed: Vec<(usize, usize, f64)> = Vec::new();
    let mut is_fixed = vec![false; n * n];
    for (&a, pa) in &inst.pins {
        for (&b, pb) in &inst.pins {
            if a < b {
                fixed.push((a, b, round_terminal(pa.dist(pb))));
                is_fixed[a * n + b] = true;
                is_fixed[b * n + a] = true;
            }
        }
    }
    let fixed_pair = |u: usize, v: usize| is_fixed[u * n + v];

    // Pair weights from the edge list (parallel edges accumulate).
    let mut weight: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &inst.edges {
        let key = (e.u.min(e.v), e.u.max(e.v));
        *weight.entry(key).or_insert(0.0) += e.w;
    }
    let objective_of = |table: &DistTable| -> f64 {
        weight.iter().map(|(&(u, v), &w)| w * table.get(u, v)).sum()
    };

    // All vertices pinned: the metric is fully determined.
    if inst.num_terminals() == n {
        let mut table = DistTable::zeros(n);
        for &(a, b, d) in &fixed {
            table.set(a, b, d);
        }
        let report = CutReport {
            rounds: 0,
            final_violation: max_spreading_violation(&table, inst.dim)
                .max(if n >= 3 { max_triangle_violation(&table) } else { f64::NEG_INFINITY }),
            ..CutReport::default()
        };
        if report.final_violation > tol {
            return Err(LpError::Internal(
                "pinned terminal distances violate the relaxation".into(),
            ));
        }
        let objective = objective_of(&table);
        return Ok((SpreadingMetric { table, objective, feasibility_tol: tol }, report));
    }

    // LP variables: weighted pairs with a free endpoint, shifted by the
    // universal floor (y = x - PAIR_FLOOR >= 0).
    let mut var_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &(u, v) in weight.keys() {
        if !fixed_pair(u, v) {
            var_of.insert((u, v), pairs.len());
            pairs.push((u, v));
        }
    }
    let costs: Vec<f64> = pairs.iter().map(|&p| weight[&p]).collect();
    // Objective constant: the floor under each variable plus the weighted
    // fixed pairs. The LP value each round is costs . y + this.
    let objective_base: f64 = costs.iter().sum::<f64>() * PAIR_FLOOR
        + fixed
            .iter()
            .map(|&(a, b, d)| weight.get(&(a, b)).copied().unwrap_or(0.0) * d)
            .sum::<f64>();

    // Cap for completed distances: larger than any spreading demand and any
    // pin distance, so a capped entry can never participate in a violated
    // or binding constraint.
    let cap = {
        let mut c = spreading_rhs(n, inst.dim).max(1.0);
        for &(_, _, d) in &fixed {
            c = c.max(d);
        }
        2.0 * c + 1.0
    };

    let fixed_len: BTreeMap<(usize, usize), f64> =
        fixed.iter().map(|&(a, b, d)| ((a, b), d)).collect();
    let mut lp = CutLp::new(&costs);
    let mut report = CutReport::default();
    // Dedup on the substituted rows; coefficients are path multiplicities
    // (small integers), so exact quantization is safe.
    let mut seen: HashSet<(Vec<(usize, i64)>, i64)> = HashSet::new();
    let mut last_violation = f64::INFINITY;

    for round in 1..=max_rounds {
        lp.reoptimize()?;
        let y = lp.primal();
        let lengths: Vec<(usize, usize, f64)> = pairs
            .iter()
            .zip(&y)
            .map(|(&(u, v), &yv)| (u, v, yv + PAIR_FLOOR))
            .chain(fixed.iter().copied())
            .collect();
        let completion = complete(n, &lengths, cap);
        let mut table = completion.dist;
        let next = completion.next;

        // Force pinned distances (the completion can only undercut them);
        // every undercut beyond half the tolerance becomes a path cut.
        let mut undercuts: Vec<(usize, usize, f64, f64)> = Vec::new();
        for &(a, b, d) in &fixed {
            let sp = table.get(a, b);
            if sp < d - 0.5 * tol {
                undercuts.push((a, b, d, d - sp));
            }
            table.set(a, b, d);
        }

        // Walk the shortest-path tree from `a` to `b`, accumulating
        // variable multiplicities and folding fixed edges and floors into
        // the right-hand side. Returns false on a capped (pathless) entry.
        let add_path = |a: usize,
                        b: usize,
                        coefs: &mut BTreeMap<usize, f64>,
                        rhs: &mut f64|
         -> bool {
            let mut cur = a;
            let mut hops = 0usize;
            while cur != b {
                let hop = next[cur * n + b];
                if hop == usize::MAX || hops > n {
                    return false;
                }
                let key = (cur.min(hop), cur.max(hop));
                match var_of.get(&key) {
                    Some(&var) => {
                        *coefs.entry(var).or_insert(0.0) += 1.0;
                        *rhs -= PAIR_FLOOR;
                    }
                    None => {
                        // A non-variable edge in the graph is a fixed pair.
                        *rhs -= fixed_len[&key];
                    }
                }
                cur = hop;
                hops += 1;
            }
            true
        };

        let s_cuts = separate_spreading(&table, inst.dim, tol);
        if s_cuts.is_empty() && undercuts.is_empty() {
            report.rounds = round;
            report.final_violation = max_spreading_violation(&table, inst.dim)
                .max(if n >= 3 { max_triangle_violation(&table) } else { f64::NEG_INFINITY });
            if report.final_violation > tol {
                return Err(LpError::Internal(
                    "completed table failed its feasibility certificate".into(),
                ));
            }
            let objective = objective_of(&table);
            return Ok((SpreadingMetric { table, objective, feasibility_tol: tol }, report));
        }

        // Most violated spreading cut per vertex.
        let mut best_per_u: BTreeMap<VertexId, &SpreadingCut> = BTreeMap::new();
        for cut in &s_cuts {
            let slot = best_per_u.entry(cut.u).or_insert(cut);
            if cut.violation() > slot.violation() {
                *slot = cut;
            }
        }

        let mut added_s = 0usize;
        let mut added_t = 0usize;
        for cut in best_per_u.values() {
            let mut coefs: BTreeMap<usize, f64> = BTreeMap::new();
            let mut rhs = cut.rhs;
            // A violated set never contains a capped entry (the cap alone
            // exceeds every spreading demand), so the paths all exist.
            let ok = cut
                .members
                .iter()
                .filter(|&&v| v != cut.u)
                .all(|&v| add_path(cut.u, v, &mut coefs, &mut rhs));
            debug_assert!(ok, "violated spreading set contained a capped pair");
            if !ok {
                continue;
            }
            if coefs.is_empty() {
                if rhs > tol {
                    return Err(LpError::Internal(
                        "spreading constraint on pinned vertices violated".into(),
                    ));
                }
                continue;
            }
            let key = quantize_row(&coefs, rhs);
            if !seen.insert(key) {
                continue;
            }
            let row: Vec<(usize, f64)> = coefs.into_iter().collect();
            lp.add_cut(&row, rhs);
            added_s += 1;
        }
        for &(a, b, d, _) in &undercuts {
            let mut coefs: BTreeMap<usize, f64> = BTreeMap::new();
            let mut rhs = d;
            if !add_path(a, b, &mut coefs, &mut rhs) {
                return Err(LpError::Internal("undercut pinned pair has no path".into()));
            }
            if coefs.is_empty() {
                // Fixed-only path shorter than a fixed distance would mean
                // the pins themselves violate the triangle inequality.
                if rhs > tol {
                    return Err(LpError::Internal(
                        "pinned distances violate the triangle inequality".into(),
                    ));
                }
                continue;
            }
            let key = quantize_row(&coefs, rhs);
            if !seen.insert(key) {
                continue;
            }
            let row: Vec<(usize, f64)> = coefs.into_iter().collect();
            lp.add_cut(&row, rhs);
            added_t += 1;
        }

        last_violation = s_cuts
            .iter()
            .map(SpreadingCut::violation)
            .chain(undercuts.iter().map(|&(_, _, _, gap)| gap))
            .fold(0.0, f64::max);
        if added_s == 0 && added_t == 0 {
            // Every violated cut is already present: numerical drift has
            // reopened an old cut. Treated as failure rather than looping.
            return Err(LpError::Stalled(format!(
                "no new cuts but violation {last_violation:.3e} persists"
            )));
        }
        report.spreading_cuts += added_s;
        report.triangle_cuts += added_t;
        let lp_value = costs.iter().zip(&y).map(|(c, yv)| c * yv).sum::<f64>() + objective_base;
        report.per_round.push(RoundStats {
            spreading_added: added_s,
            triangle_added: added_t,
            objective: lp_value,
        });
    }

    Err(LpError::RoundLimit { rounds: max_rounds, violation: last_violation })
}

fn quantize_row(coefs: &BTreeMap<usize, f64>, rhs: f64) -> (Vec<(usize, i64)>, i64) {
    (
        coefs.iter().map(|(&v, &c)| (v, c.round() as i64)).collect(),
        (rhs * 1e9).round() as i64,
    )
}

/// [`solve_lp`] at the default tolerance and round limit.
pub fn solve_lp_default(inst: &Instance) -> Result<(SpreadingMetric, CutReport), LpError> {
    solve_lp(inst, DEFAULT_TOL, DEFAULT_MAX_ROUNDS)
}
