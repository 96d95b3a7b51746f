//! Placement on the bounded grid (`side^dim` cells for `n` vertices, so
//! every placement is a bijection).
//!
//! Each trial partitions the vertices around the terminals with the
//! random-radius partition, orders every cluster with the recursive
//! anchored traversal, splits each ordering into dyadic rank pieces
//! (anchor alone, geometrically growing blocks, remainder), then greedily
//! carves grid regions for the pieces — closest unassigned cells to the
//! owning pin first, piece by piece in block-major order — and finally
//! maps each piece onto its region along the space-filling curve with a
//! random cyclic shift. The anchor piece always receives exactly its pin,
//! so the output extends the pinned map by construction.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::curve::{next_power_of_two, subset_order_with, CurveVariant, Square};
use crate::lp::{solve_lp_default, SpreadingMetric};
use crate::metric::{alter_instance, ckr_partition, Clustering};
use crate::model::{grid_cells, GridMode, Instance, Placement, Point};
use crate::order::{rv_order_restricted, Ordering};
use crate::unbounded::{best_of_trials, PlaceError, TrialOpts};

/// Dyadic rank pieces of one cluster ordering. `blocks[0]` is the anchor
/// singleton `[0, 1)`; block `j` (1-based) covers ranks
/// `[floor(gamma * 2^(j-1)), floor(gamma * 2^j))` clipped to the cluster,
/// and the final block holds every remaining rank. Pieces emptied by
/// clipping are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct SubClusterEntry {
    /// `max(0, floor(log2(len / 4)))` — the number of dyadic blocks before
    /// the remainder.
    pub delta: usize,
    /// Rank ranges `[start, end)`, in order, partitioning `0..len`.
    pub blocks: Vec<(usize, usize)>,
    /// One cyclic shift per block, uniform in `0..block_len`.
    pub shifts: Vec<usize>,
}

/// The per-trial sub-cluster split: one `gamma` draw shared by all
/// clusters, one entry per cluster.
#[derive(Clone, Debug)]
pub struct SubClusterPlan {
    pub gamma: f64,
    pub clusters: Vec<SubClusterEntry>,
}

/// Split the ranks `0..len` of one cluster ordering into the anchor
/// singleton, dyadic blocks scaled by `gamma`, and the remainder.
pub fn build_subclusters(len: usize, gamma: f64, rng: &mut impl Rng) -> SubClusterEntry {
    assert!(len >= 1, "a cluster always contains its terminal");
    assert!((1.0..2.0).contains(&gamma));
    let delta = if len <= 4 { 0 } else { (len / 4).ilog2() as usize };
    let mut blocks = vec![(0usize, 1usize)];
    let edge = |j: usize| -> usize { (gamma * (1u64 << j) as f64).floor() as usize };
    for j in 1..=delta {
        let start = edge(j - 1).clamp(1, len);
        let end = edge(j).clamp(1, len);
        if start < end {
            blocks.push((start, end));
        }
    }
    let tail = edge(delta).clamp(1, len);
    if tail < len {
        blocks.push((tail, len));
    }
    debug_assert_eq!(blocks.iter().map(|&(s, e)| e - s).sum::<usize>(), len);
    let shifts = blocks.iter().map(|&(s, e)| rng.random_range(0..e - s)).collect();
    SubClusterEntry { delta, blocks, shifts }
}

/// Cyclic shift of a local rank within a piece of `len` cells.
pub fn apply_shift(rank: usize, tau: usize, len: usize) -> usize {
    assert!(rank < len && tau < len);
    (rank + tau) % len
}

/// One carved grid region: the cells assigned to piece `block` of cluster
/// `cluster`, in selection order (closest to the pin first).
#[derive(Clone, Debug)]
pub struct RegionEntry {
    pub cluster: usize,
    pub block: usize,
    pub cells: Vec<Point>,
    /// Largest Chebyshev distance from the owning pin to a carved cell.
    pub radius: i64,
    /// Number of grid cells still unassigned when this piece was carved.
    pub unassigned_before: usize,
}

/// Greedily carve the grid into regions, one per piece, processing pieces
/// block-major (all anchor pieces, then all first blocks, ...) and
/// clusters in index order within a block. Each piece takes the unassigned
/// cells closest to its pin in `(Chebyshev distance, y, x)` order, which
/// makes the carving radius minimal among all valid choices at that step.
/// The anchor piece of every cluster therefore receives exactly its pin.
pub fn carve_regions(
    plan: &SubClusterPlan,
    pins: &[Point],
    side: i64,
    dim: u32,
) -> Vec<RegionEntry> {
    let k = plan.clusters.len();
    assert_eq!(pins.len(), k, "one pin per cluster");
    let mut free: BTreeSet<Point> = grid_cells(side, dim).into_iter().collect();
    let planned: usize = plan
        .clusters
        .iter()
        .map(|c| c.blocks.iter().map(|&(s, e)| e - s).sum::<usize>())
        .sum();
    assert_eq!(planned, free.len(), "pieces must exactly fill the grid");
    let max_blocks = plan.clusters.iter().map(|c| c.blocks.len()).max().unwrap_or(0);
    let mut regions = Vec::new();
    for block in 0..max_blocks {
        for (cluster, (entry, pin)) in plan.clusters.iter().zip(pins).enumerate() {
            let Some(&(start, end)) = entry.blocks.get(block) else {
                continue;
            };
            let size = end - start;
            let unassigned_before = free.len();
            let mut candidates: Vec<Point> = free.iter().copied().collect();
            candidates.sort_by_key(|p| (pin.linf(p), p.y, p.x));
            let cells = candidates[..size].to_vec();
            for c in &cells {
                free.remove(c);
            }
            let radius = cells.iter().map(|c| pin.linf(c)).max().unwrap_or(0);
            regions.push(RegionEntry { cluster, block, cells, radius, unassigned_before });
        }
    }
    assert!(free.is_empty(), "regions must partition the grid");
    regions
}

/// The region's cells in space-filling-curve order, traversing the
/// power-of-two square that encloses the carving radius around the pin
/// (one-dimensional regions are simply sorted along the axis).
fn region_curve_order(entry: &RegionEntry, pin: Point, dim: u32) -> Vec<Point> {
    if dim == 1 {
        let mut cells = entry.cells.clone();
        cells.sort_by_key(|p| p.x);
        return cells;
    }
    let r = entry.radius;
    let side = next_power_of_two(2 * r + 1);
    let pad = side - (2 * r + 1);
    let origin = Point::new(pin.x - r - pad / 2, pin.y - r - pad / 2);
    let square = Square::new(origin, side).expect("power-of-two side");
    subset_order_with(&entry.cells, Some(square), CurveVariant::Morton)
        .expect("carved cells are distinct")
        .points
}

/// Everything one seeded trial produced, for tests and diagnostics.
#[derive(Clone, Debug)]
pub struct BoundedTrial {
    pub clustering: Clustering,
    pub orderings: Vec<Ordering>,
    pub plan: SubClusterPlan,
    pub regions: Vec<RegionEntry>,
    pub placement: Placement,
}

/// One seeded trial of the bounded pipeline (partition, order, split,
/// carve, curve-map with shifts).
pub fn bounded_trial(inst: &Instance, metric: &SpreadingMetric, seed: u64) -> BoundedTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = inst.dim;
    let side = inst.grid.box_side(inst.n, dim).expect("bounded grid");

    let clustering = ckr_partition(metric, &inst.terminals, rng.random());
    let altered = alter_instance(inst, &clustering);
    let intra = clustering.intra_edges(&altered.edges);
    let mut orderings = Vec::with_capacity(clustering.terminals.len());
    for (i, &t) in clustering.terminals.iter().enumerate() {
        orderings.push(rv_order_restricted(
            metric,
            &clustering.clusters[i],
            &intra[i],
            t,
            dim,
            rng.random(),
        ));
    }

    let gamma: f64 = rng.random_range(1.0..2.0);
    let clusters: Vec<SubClusterEntry> = orderings
        .iter()
        .map(|o| build_subclusters(o.sequence.len(), gamma, &mut rng))
        .collect();
    let plan = SubClusterPlan { gamma, clusters };
    let pins: Vec<Point> =
        clustering.terminals.iter().map(|&t| inst.pins[&t]).collect();
    let regions = carve_regions(&plan, &pins, side, dim);

    let mut positions = vec![Point::new(0, 0); inst.n];
    for entry in &regions {
        let ordering = &orderings[entry.cluster];
        let (start, end) = plan.clusters[entry.cluster].blocks[entry.block];
        let tau = plan.clusters[entry.cluster].shifts[entry.block];
        let cells = region_curve_order(entry, pins[entry.cluster], dim);
        debug_assert_eq!(cells.len(), end - start);
        for local in 0..end - start {
            positions[ordering.sequence[start + local]] =
                cells[apply_shift(local, tau, cells.len())];
        }
    }
    let placement = Placement::from_positions(inst, positions);
    debug_assert!(placement.validate(inst).is_ok());
    BoundedTrial { clustering, orderings, plan, regions, placement }
}

/// Place a bounded-mode instance: solve the relaxation once, run `trials`
/// seeded trials, return the cheapest placement.
pub fn place_bounded(inst: &Instance, seed: u64, trials: usize) -> Result<Placement, PlaceError> {
    place_bounded_opts(inst, seed, &TrialOpts { trials, ..TrialOpts::default() })
}

/// As [`place_bounded`] with explicit options (`use_ckr` is ignored: the
/// bounded pipeline always uses the direct random-radius partition).
pub fn place_bounded_opts(
    inst: &Instance,
    seed: u64,
    opts: &TrialOpts,
) -> Result<Placement, PlaceError> {
    match inst.grid {
        GridMode::Bounded { .. } => {}
        got => return Err(PlaceError::WrongMode { expected: "bounded", got }),
    }
    let (metric, _) = solve_lp_default(inst)?;
    Ok(best_of_trials(seed, opts.trials, opts.threads, |s| {
        bounded_trial(inst, &metric, s).placement
    }))
}
