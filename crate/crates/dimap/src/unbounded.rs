//! Placement on the unbounded lattice, plus the inflated-grid variant.
//!
//! The pipeline solves the spreading relaxation once, then runs seeded
//! trials. Each trial partitions the vertices around the terminals (random
//! tree embedding + zero extension by default, the direct random-radius
//! partition as an alternative), orders every cluster with the recursive
//! anchored traversal, lays each ordering out along a space-filling curve
//! in its own small grid, and interleaves the cluster grids onto disjoint
//! translates of a scaled sublattice so the images cannot collide. Finally
//! each terminal is swapped onto its pin; the swap chain is short because
//! every terminal starts within half a stride of its pin.
//!
//! The inflated-grid variant replaces the interleaving with a quota-based
//! packing into sub-squares of a box only slightly larger than the
//! bijective grid.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::curve::{
    grid_curve_order, is_power_of_two, next_power_of_two, subset_order_with, CurveVariant, Square,
};
use crate::lp::{solve_lp_default, LpError, SpreadingMetric};
use crate::metric::{
    alter_instance, ckr_partition, hst_build, tree_zero_extension_regions, Clustering,
};
use crate::model::{GridMode, Instance, Placement, Point, VertexId};
use crate::order::{rv_order_on_region, rv_order_restricted, Ordering};

/// Default number of independent trials per placement call.
pub const DEFAULT_TRIALS: usize = 8;

#[derive(Error, Debug)]
pub enum PlaceError {
    #[error("placer expects a {expected} instance, got {got:?}")]
    WrongMode { expected: &'static str, got: GridMode },
    #[error("eps must lie in (0, 1/2], got {0}")]
    BadEps(f64),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Knobs shared by the trial-based placers.
#[derive(Clone, Copy, Debug)]
pub struct TrialOpts {
    /// Number of seeded trials; the cheapest placement wins.
    pub trials: usize,
    /// Use the direct random-radius partition instead of the tree
    /// embedding.
    pub use_ckr: bool,
    /// Worker threads for running trials in parallel (1 = sequential).
    pub threads: usize,
}

impl Default for TrialOpts {
    fn default() -> Self {
        TrialOpts { trials: DEFAULT_TRIALS, use_ckr: false, threads: 1 }
    }
}

/// The lattice coloring used to interleave cluster layouts: point `p` has
/// color `(p.x mod ell, p.y mod ell)`, so each color class is a translate
/// of `ell * Z^2` and distinct colors never collide.
#[derive(Clone, Copy, Debug)]
pub struct ColorGrid {
    /// Stride of the coloring; every `ell x ell` window contains each
    /// color exactly once.
    pub ell: i64,
}

impl ColorGrid {
    /// Smallest stride whose color count covers `k` clusters: `ceil(sqrt(k))`
    /// in dimension 2 (so `(ell-1)^2 < k <= ell^2`), `k` itself in
    /// dimension 1.
    pub fn for_clusters(k: usize, dim: u32) -> Self {
        assert!(k >= 1, "need at least one cluster");
        let ell = match dim {
            1 => k as i64,
            _ => (k as f64).sqrt().ceil() as i64,
        };
        ColorGrid { ell: ell.max(1) }
    }

    /// Color of a lattice point.
    pub fn color(&self, p: &Point) -> (i64, i64) {
        (p.x.rem_euclid(self.ell), p.y.rem_euclid(self.ell))
    }

    /// Color assigned to cluster `i` (row-major over the color square in
    /// dimension 2, along the axis in dimension 1).
    pub fn color_of_index(&self, i: usize, dim: u32) -> (i64, i64) {
        let i = i as i64;
        match dim {
            1 => (i, 0),
            _ => (i % self.ell, i / self.ell),
        }
    }
}

/// The point closest to `target` among those congruent to `residue` mod
/// `ell` (ties resolved toward the smaller value). The result is within
/// `floor(ell / 2)` of `target`.
pub fn nearest_residue(target: i64, residue: i64, ell: i64) -> i64 {
    assert!(ell >= 1);
    let below = target - (target - residue).rem_euclid(ell);
    if target - below <= below + ell - target {
        below
    } else {
        below + ell
    }
}

/// Superimpose per-cluster layouts onto the lattice: cluster `i`'s layout
/// is scaled by the coloring stride and translated so that its terminal
/// (which must sit at the layout origin) lands on the point of color `i`
/// nearest to the terminal's pin. Distinct clusters live on disjoint color
/// classes, so the combined map is injective and every intra-cluster edge
/// stretches by exactly the stride.
pub fn interleave(
    layouts: &[BTreeMap<VertexId, Point>],
    terminals: &[VertexId],
    pins: &BTreeMap<VertexId, Point>,
    dim: u32,
) -> (BTreeMap<VertexId, Point>, ColorGrid) {
    let k = layouts.len();
    assert_eq!(terminals.len(), k, "one layout per cluster");
    let color = ColorGrid::for_clusters(k, dim);
    let ell = color.ell;
    let mut map: BTreeMap<VertexId, Point> = BTreeMap::new();
    for (i, layout) in layouts.iter().enumerate() {
        let t = terminals[i];
        assert_eq!(
            layout[&t],
            Point::new(0, 0),
            "cluster layout must place its terminal at the origin"
        );
        let (cx, cy) = color.color_of_index(i, dim);
        let pin = pins[&t];
        let offset = Point::new(nearest_residue(pin.x, cx, ell), nearest_residue(pin.y, cy, ell));
        for (&v, &q) in layout {
            let p = Point::new(offset.x + ell * q.x, offset.y + ell * q.y);
            let prev = map.insert(v, p);
            assert!(prev.is_none(), "vertex {v} appears in two layouts");
        }
    }
    debug_assert_eq!(
        map.values().collect::<BTreeSet<_>>().len(),
        map.len(),
        "interleaved layouts collided"
    );
    (map, color)
}

/// Result of settling terminals onto their pins.
#[derive(Clone, Debug)]
pub struct RemapOutcome {
    pub map: BTreeMap<VertexId, Point>,
    /// Largest Euclidean distance any vertex moved.
    pub max_displacement: f64,
    /// Whether `max_displacement <= 2 * ell`, the bound the interleaving
    /// guarantees when every terminal starts within half a stride of its
    /// pin.
    pub within_bound: bool,
}

/// Settle each terminal onto its pin by swapping it with whatever vertex
/// currently occupies the pin (terminals are processed in the given order;
/// already-settled terminals are never evicted because pins are distinct).
pub fn remap_terminals(
    map: &BTreeMap<VertexId, Point>,
    pins: &[(VertexId, Point)],
    ell: i64,
) -> RemapOutcome {
    let mut map = map.clone();
    let mut occupied: BTreeMap<Point, VertexId> = map.iter().map(|(&v, &p)| (p, v)).collect();
    assert_eq!(occupied.len(), map.len(), "input map must be injective");
    let original = map.clone();
    let mut settled: BTreeSet<VertexId> = BTreeSet::new();
    for &(t, target) in pins {
        let current = map[&t];
        if current != target {
            if let Some(&w) = occupied.get(&target) {
                debug_assert!(!settled.contains(&w), "settled terminal evicted");
                map.insert(w, current);
                occupied.insert(current, w);
            } else {
                occupied.remove(&current);
            }
            map.insert(t, target);
            occupied.insert(target, t);
        }
        settled.insert(t);
    }
    let max_displacement = map
        .iter()
        .map(|(v, p)| original[v].dist(p))
        .fold(0.0, f64::max);
    let within_bound = max_displacement <= 2.0 * ell as f64 + 1e-9;
    RemapOutcome { map, max_displacement, within_bound }
}

/// Everything one seeded trial produced, for tests and diagnostics.
#[derive(Clone, Debug)]
pub struct UnboundedTrial {
    pub clustering: Clustering,
    pub orderings: Vec<Ordering>,
    pub layouts: Vec<BTreeMap<VertexId, Point>>,
    pub color: ColorGrid,
    pub max_remap_displacement: f64,
    pub remap_within_bound: bool,
    pub placement: Placement,
}

/// One seeded trial of the unbounded pipeline (partition, order, curve
/// layout, interleave, settle).
pub fn unbounded_trial(
    inst: &Instance,
    metric: &SpreadingMetric,
    seed: u64,
    use_ckr: bool,
) -> UnboundedTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = inst.dim;

    let (clustering, region) = if use_ckr {
        (ckr_partition(metric, &inst.terminals, rng.random()), None)
    } else {
        let hst = hst_build(metric, rng.random());
        let (clustering, node_assignment) =
            tree_zero_extension_regions(&hst, &inst.terminals, rng.random());
        (clustering, Some((hst, node_assignment)))
    };

    let altered = alter_instance(inst, &clustering);
    let intra = clustering.intra_edges(&altered.edges);

    let mut orderings = Vec::with_capacity(clustering.terminals.len());
    for (i, &t) in clustering.terminals.iter().enumerate() {
        let ordering = match &region {
            Some((hst, node_assignment)) => {
                rv_order_on_region(hst, node_assignment, t, &intra[i], dim, rng.random())
            }
            None => rv_order_restricted(
                metric,
                &clustering.clusters[i],
                &intra[i],
                t,
                dim,
                rng.random(),
            ),
        };
        orderings.push(ordering);
    }

    let layouts: Vec<BTreeMap<VertexId, Point>> =
        orderings.iter().map(|o| curve_layout(o, dim)).collect();
    let (interleaved, color) = interleave(&layouts, &clustering.terminals, &inst.pins, dim);

    let pin_list: Vec<(VertexId, Point)> =
        inst.terminals.iter().map(|&t| (t, inst.pins[&t])).collect();
    let outcome = remap_terminals(&interleaved, &pin_list, color.ell);

    let positions: Vec<Point> = (0..inst.n).map(|v| outcome.map[&v]).collect();
    let placement = Placement::from_positions(inst, positions);
    debug_assert!(placement.validate(inst).is_ok());
    UnboundedTrial {
        clustering,
        orderings,
        layouts,
        color,
        max_remap_displacement: outcome.max_displacement,
        remap_within_bound: outcome.within_bound,
        placement,
    }
}

/// Map the ordering onto the cells of its own small grid, following the
/// space-filling curve so that rank intervals stay geometrically local.
/// Rank 0 (the anchor) lands on the origin.
fn curve_layout(ordering: &Ordering, dim: u32) -> BTreeMap<VertexId, Point> {
    let m = ordering.sequence.len();
    if dim == 1 {
        return ordering
            .sequence
            .iter()
            .enumerate()
            .map(|(r, &v)| (v, Point::new(r as i64, 0)))
            .collect();
    }
    let side = next_power_of_two((m as f64).sqrt().ceil() as i64);
    let cells = grid_curve_order(side).expect("side is a power of two");
    ordering
        .sequence
        .iter()
        .enumerate()
        .map(|(r, &v)| (v, cells[r]))
        .collect()
}

/// Place an unbounded-mode instance: solve the relaxation once, run
/// `trials` seeded trials, return the cheapest placement.
pub fn place_unbounded(inst: &Instance, seed: u64, trials: usize) -> Result<Placement, PlaceError> {
    place_unbounded_opts(inst, seed, &TrialOpts { trials, ..TrialOpts::default() })
}

/// As [`place_unbounded`] with explicit pipeline / threading options.
pub fn place_unbounded_opts(
    inst: &Instance,
    seed: u64,
    opts: &TrialOpts,
) -> Result<Placement, PlaceError> {
    match inst.grid {
        GridMode::Unbounded => {}
        got => return Err(PlaceError::WrongMode { expected: "unbounded", got }),
    }
    let (metric, _) = solve_lp_default(inst)?;
    Ok(best_of_trials(seed, opts.trials, opts.threads, |s| {
        let trial = unbounded_trial(inst, &metric, s, opts.use_ckr);
        assert!(
            trial.remap_within_bound,
            "settling moved a vertex {} > twice the stride",
            trial.max_remap_displacement
        );
        trial.placement
    }))
}

/// Run `trials` seeded trials (trial `i` uses `seed + i`, wrapping) and
/// return the cheapest placement, breaking ties toward the earlier trial.
/// With `threads > 1` the trials run on scoped worker threads; the result
/// is identical to the sequential one because selection happens in trial
/// order afterwards.
pub(crate) fn best_of_trials<F>(seed: u64, trials: usize, threads: usize, run: F) -> Placement
where
    F: Fn(u64) -> Placement + Sync,
{
    assert!(trials >= 1, "need at least one trial");
    let seeds: Vec<u64> = (0..trials).map(|i| seed.wrapping_add(i as u64)).collect();
    let mut results: Vec<Option<Placement>> = (0..trials).map(|_| None).collect();
    if threads <= 1 {
        for (slot, &s) in results.iter_mut().zip(&seeds) {
            *slot = Some(run(s));
        }
    } else {
        let chunk = trials.div_ceil(threads);
        let run = &run;
        std::thread::scope(|scope| {
            for (slots, seeds) in results.chunks_mut(chunk).zip(seeds.chunks(chunk)) {
                scope.spawn(move || {
                    for (slot, &s) in slots.iter_mut().zip(seeds) {
                        *slot = Some(run(s));
                    }
                });
            }
        });
    }
    let mut best: Option<Placement> = None;
    for p in results.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => p.cost < b.cost,
        };
        if better {
            best = Some(p);
        }
    }
    best.expect("at least one trial ran")
}

/// The quota plan for packing clusters into the inflated grid: clusters
/// are bucketed by size on a geometric scale, bucket `i` reserves
/// `ceil((1+eps)^i)` cells per sub-square, and consecutive rank chunks of
/// each cluster fill its slot across consecutive sub-squares.
#[derive(Clone, Debug)]
pub struct BucketPlan {
    pub eps: f64,
    /// Size thresholds `s_i = eps * (n/k) * (1+eps)^i`.
    pub thresholds: Vec<f64>,
    /// Cells reserved per sub-square for a bucket-`i` cluster.
    pub quotas: Vec<usize>,
    /// Number of clusters in each bucket.
    pub counts: Vec<usize>,
    /// Bucket index of each cluster (aligned with the cluster list).
    pub bucket_of: Vec<usize>,
    /// Total cells reserved per sub-square.
    pub reserved: usize,
    /// Sub-square side (or segment length in dimension 1).
    pub sub_side: i64,
    /// Number of sub-squares.
    pub squares: usize,
    /// Sub-squares per grid row.
    pub per_row: i64,
    /// True when the sub-squares do not fit and the placer must fall back
    /// to one curve pass over the whole box.
    pub degenerate: bool,
}

/// Build the quota plan for the given cluster sizes. Panics if the
/// reservation exceeds its provable cap of `(1 + 3 eps) k / eps`.
pub fn bucket_plan(
    cluster_sizes: &[usize],
    n: usize,
    eps: f64,
    grid_side: i64,
    dim: u32,
) -> BucketPlan {
    let k = cluster_sizes.len();
    assert!(k >= 1, "need at least one cluster");
    assert!(eps > 0.0 && eps.is_finite());
    let base = eps * n as f64 / k as f64;
    let bucket_of: Vec<usize> = cluster_sizes
        .iter()
        .map(|&m| {
            assert!(m >= 1);
            let mut i = 0usize;
            while m as f64 > base * (1.0 + eps).powi(i as i32) * (1.0 + 1e-12) {
                i += 1;
            }
            i
        })
        .collect();
    let buckets = bucket_of.iter().copied().max().unwrap() + 1;
    let thresholds: Vec<f64> = (0..buckets).map(|i| base * (1.0 + eps).powi(i as i32)).collect();
    let quotas: Vec<usize> =
        (0..buckets).map(|i| (1.0 + eps).powi(i as i32).ceil() as usize).collect();
    let mut counts = vec![0usize; buckets];
    for &b in &bucket_of {
        counts[b] += 1;
    }
    let reserved: usize = counts.iter().zip(&quotas).map(|(&c, &q)| c * q).sum();
    let cap = (1.0 + 3.0 * eps) / eps * k as f64;
    assert!(
        reserved as f64 <= cap + 1e-6,
        "reserved {reserved} cells per sub-square, cap is {cap}"
    );
    let sub_side: i64 = match dim {
        1 => reserved as i64,
        _ => (reserved as f64).sqrt().ceil() as i64,
    }
    .max(1);
    let squares = cluster_sizes
        .iter()
        .zip(&bucket_of)
        .map(|(&m, &b)| m.div_ceil(quotas[b]))
        .max()
        .unwrap()
        .max((eps * n as f64 / k as f64).ceil() as usize)
        .max(1);
    let per_row = grid_side / sub_side;
    let capacity = match dim {
        1 => per_row,
        _ => per_row * per_row,
    };
    let degenerate = per_row < 1 || squares as i64 > capacity;
    BucketPlan {
        eps,
        thresholds,
        quotas,
        counts,
        bucket_of,
        reserved,
        sub_side,
        squares,
        per_row,
        degenerate,
    }
}

/// Cells of the `side`-sized box at `origin`, in curve order (exact
/// power-of-two boxes follow the adjacency-preserving curve; other sizes
/// inherit the order from the enclosing power-of-two square).
fn ordered_box_cells(origin: Point, side: i64, dim: u32) -> Vec<Point> {
    assert!(side >= 1);
    if dim == 1 {
        return (0..side).map(|x| Point::new(origin.x + x, origin.y)).collect();
    }
    if is_power_of_two(side) {
        return grid_curve_order(side)
            .expect("power-of-two side")
            .into_iter()
            .map(|p| Point::new(origin.x + p.x, origin.y + p.y))
            .collect();
    }
    let points: Vec<Point> = (0..side)
        .flat_map(|y| (0..side).map(move |x| Point::new(origin.x + x, origin.y + y)))
        .collect();
    let anchor = Square::new(origin, next_power_of_two(side)).expect("power-of-two anchor");
    subset_order_with(&points, Some(anchor), CurveVariant::Morton)
        .expect("distinct box cells")
        .points
}

/// Degenerate fallback: concatenate the cluster orderings along one curve
/// pass over the whole box.
fn whole_grid_layout(
    orderings: &[Ordering],
    grid_side: i64,
    dim: u32,
) -> BTreeMap<VertexId, Point> {
    let cells = ordered_box_cells(Point::new(0, 0), grid_side, dim);
    let mut map = BTreeMap::new();
    let mut cursor = 0usize;
    for ordering in orderings {
        for &v in &ordering.sequence {
            map.insert(v, cells[cursor]);
            cursor += 1;
        }
    }
    map
}

/// Pack the clusters into the plan's sub-squares: inside sub-square `m`,
/// cluster `c` (in cluster order) occupies the next `quota(c)` curve cells
/// with its ranks `[m * quota(c), (m+1) * quota(c))`.
fn bucketed_layout(
    orderings: &[Ordering],
    plan: &BucketPlan,
    dim: u32,
) -> BTreeMap<VertexId, Point> {
    let l = plan.sub_side;
    let mut map = BTreeMap::new();
    for m in 0..plan.squares {
        let origin = match dim {
            1 => Point::new(m as i64 * l, 0),
            _ => Point::new((m as i64 % plan.per_row) * l, (m as i64 / plan.per_row) * l),
        };
        let cells = ordered_box_cells(origin, l, dim);
        let mut cursor = 0usize;
        for (c, ordering) in orderings.iter().enumerate() {
            let quota = plan.quotas[plan.bucket_of[c]];
            let start = m * quota;
            for offset in 0..quota {
                let rank = start + offset;
                if rank >= ordering.sequence.len() {
                    break;
                }
                map.insert(ordering.sequence[rank], cells[cursor + offset]);
            }
            cursor += quota;
        }
        debug_assert_eq!(cursor, plan.reserved);
        debug_assert!(cursor <= cells.len());
    }
    map
}

/// One seeded trial of the inflated-grid pipeline.
#[derive(Clone, Debug)]
pub struct EpsTrial {
    pub clustering: Clustering,
    pub orderings: Vec<Ordering>,
    pub plan: BucketPlan,
    pub max_remap_displacement: f64,
    pub placement: Placement,
}

/// Inflated-grid trial: tree partition, per-cluster orderings, quota
/// packing (or the whole-box curve when the plan is degenerate), then
/// settle terminals onto their pins.
pub fn eps_trial(inst: &Instance, metric: &SpreadingMetric, eps: f64, seed: u64) -> EpsTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = inst.dim;
    let grid_side = inst.grid.box_side(inst.n, dim).expect("inflated mode has a box");

    let hst = hst_build(metric, rng.random());
    let (clustering, node_assignment) =
        tree_zero_extension_regions(&hst, &inst.terminals, rng.random());
    let altered = alter_instance(inst, &clustering);
    let intra = clustering.intra_edges(&altered.edges);
    let mut orderings = Vec::with_capacity(clustering.terminals.len());
    for (i, &t) in clustering.terminals.iter().enumerate() {
        orderings.push(rv_order_on_region(&hst, &node_assignment, t, &intra[i], dim, rng.random()));
    }

    let sizes: Vec<usize> = clustering.clusters.iter().map(|c| c.len()).collect();
    let plan = bucket_plan(&sizes, inst.n, eps, grid_side, dim);
    let raw = if plan.degenerate {
        whole_grid_layout(&orderings, grid_side, dim)
    } else {
        bucketed_layout(&orderings, &plan, dim)
    };
    debug_assert_eq!(raw.len(), inst.n, "every vertex must receive a cell");

    let pin_list: Vec<(VertexId, Point)> =
        inst.terminals.iter().map(|&t| (t, inst.pins[&t])).collect();
    let outcome = remap_terminals(&raw, &pin_list, plan.sub_side.max(1));
    let positions: Vec<Point> = (0..inst.n).map(|v| outcome.map[&v]).collect();
    let placement = Placement::from_positions(inst, positions);
    debug_assert!(placement.validate(inst).is_ok());
    EpsTrial {
        clustering,
        orderings,
        plan,
        max_remap_displacement: outcome.max_displacement,
        placement,
    }
}

/// Place an inflated-grid instance. `eps` must match the instance's mode
/// and lie in (0, 1/2].
pub fn place_eps_violation(
    inst: &Instance,
    eps: f64,
    seed: u64,
    trials: usize,
) -> Result<Placement, PlaceError> {
    place_eps_violation_opts(inst, eps, seed, &TrialOpts { trials, ..TrialOpts::default() })
}

/// As [`place_eps_violation`] with explicit threading options (`use_ckr`
/// is ignored: the inflated-grid pipeline always uses the tree
/// embedding).
pub fn place_eps_violation_opts(
    inst: &Instance,
    eps: f64,
    seed: u64,
    opts: &TrialOpts,
) -> Result<Placement, PlaceError> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(PlaceError::BadEps(eps));
    }
    match inst.grid {
        GridMode::EpsViolation { eps: e } if (e - eps).abs() <= 1e-12 => {}
        got => return Err(PlaceError::WrongMode { expected: "eps-violation", got }),
    }
    let (metric, _) = solve_lp_default(inst)?;
    Ok(best_of_trials(seed, opts.trials, opts.threads, |s| {
        eps_trial(inst, &metric, eps, s).placement
    }))
}
