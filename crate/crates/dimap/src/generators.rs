//! Extremal instance families.
//!
//! Two kinds of constructions live here. The gap generators build
//! instances on which the spreading relaxation is provably far below every
//! integral placement: each comes with an explicitly constructed feasible
//! metric (the certificate), whose feasibility is checked by the
//! separation oracles rather than taken on faith. The 3-partition
//! generators build grids whose free cells form widely separated "holes"
//! of exactly B cells each, with star components that only fit cheaply if
//! the stars can be grouped into triples of total size B — the classic
//! packing structure behind hardness-of-approximation arguments.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lp::{DistTable, SpreadingMetric};
use crate::model::{Edge, GridMode, Instance, Placement, Point, VertexId};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GenError {
    #[error("{0} is not a perfect square")]
    NotPerfectSquare(usize),
    #[error("need n >= 9, got {0}")]
    TooSmall(usize),
    #[error("sqrt(n) = {sqrt_n} must be a positive integer multiple of 2t = {two_t}")]
    BadDivisibility { sqrt_n: i64, two_t: i64 },
    #[error("t must be at least 2, got {0}")]
    BadSpacingParam(i64),
    #[error("alpha must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("invalid 3-partition parameters: {0}")]
    BadPartitionParams(String),
    #[error("invalid witness grouping: {0}")]
    BadWitness(String),
}

/// A generated gap instance together with the hand-built feasible metric
/// that certifies the relaxation value, and the cost every integral
/// placement is forced to pay.
#[derive(Clone, Debug)]
pub struct GapCertificate {
    pub instance: Instance,
    /// Feasible by oracle audit: zero violated spreading or triangle cuts.
    pub fractional_metric: SpreadingMetric,
    /// Weighted cost of `fractional_metric` (equals its `objective`).
    pub fractional_cost: f64,
    /// For the bounded family: the exact cost every placement must pay.
    /// For the unbounded family: the scale of the integral lower bound,
    /// `(alpha * sqrt(n) + t) * n / t^2`, recorded for ratio bookkeeping
    /// rather than as a tested exact optimum.
    pub forced_integral_cost: f64,
}

fn exact_sqrt(n: usize) -> Option<i64> {
    let s = (n as f64).sqrt().round() as i64;
    (s * s == n as i64).then_some(s)
}

/// Bounded-grid gap family: a full sqrt(n) x sqrt(n) grid with every cell
/// pinned except the two opposite corners, and a single unit edge between
/// the two free vertices. The certificate metric keeps the free pair at
/// distance 1 (cost 1), but any placement must put the free pair on the
/// two corners, paying sqrt(2) * (sqrt(n) - 1).
///
/// Terminal ids 0..n-3 are pinned to the non-corner cells in row-major
/// (y, x) order; the free vertices are n-2 and n-1. Zero-weight edges are
/// omitted entirely.
pub fn gen_bounded_gap(n: usize) -> Result<GapCertificate, GenError> {
    if n < 9 {
        return Err(GenError::TooSmall(n));
    }
    let side = exact_sqrt(n).ok_or(GenError::NotPerfectSquare(n))?;
    let corner_a = Point::new(0, 0);
    let corner_b = Point::new(side - 1, side - 1);
    let mut cells = Vec::with_capacity(n - 2);
    for y in 0..side {
        for x in 0..side {
            let p = Point::new(x, y);
            if p != corner_a && p != corner_b {
                cells.push(p);
            }
        }
    }
    let k = n - 2;
    let pins: BTreeMap<VertexId, Point> = cells.into_iter().enumerate().collect();
    let u = k;
    let v = k + 1;
    let instance = Instance {
        dim: 2,
        n,
        edges: vec![Edge::new(u, v, 1.0)],
        terminals: (0..k).collect(),
        pins: pins.clone(),
        grid: GridMode::Bounded { side },
    };
    instance.validate().expect("gap instance must be well-formed");

    let far = (2.0 * n as f64).sqrt();
    let table = DistTable::from_fn(n, |a, b| {
        let at = a < k;
        let bt = b < k;
        match (at, bt) {
            (true, true) => pins[&a].dist(&pins[&b]),
            (false, false) => 1.0,
            _ => far,
        }
    });
    let fractional_cost = 1.0;
    let fractional_metric =
        SpreadingMetric { table, objective: fractional_cost, feasibility_tol: 1e-9 };
    let forced_integral_cost = 2f64.sqrt() * (side - 1) as f64;
    Ok(GapCertificate { instance, fractional_metric, fractional_cost, forced_integral_cost })
}

/// Unbounded gap family on 9n vertices. Terminals fill the 3*sqrt(n)
/// square grid except for the lattice `B` of t-spaced points inside the
/// central sqrt(n) square; the non-terminals sit on `B` (via the row-major
/// bijection g), joined by a unit-weight vertical matching (mu) and a
/// weight-alpha edge to each one's anchor terminal (the terminal pinned
/// one cell above its own slot).
///
/// The certificate metric is the shortest-path closure of the support
/// graph: the terminal clique with pin distances, plus length-t anchor
/// edges and length-1 matching edges. Closure distances keep
/// d(u, anchor(u)) = t and d(u, mu(u)) = 1, so the relaxation cost is
/// n/(2 t^2) + alpha * t * n / t^2.
pub fn gen_unbounded_gap(n: usize, t: i64, alpha: f64) -> Result<GapCertificate, GenError> {
    if t < 2 {
        return Err(GenError::BadSpacingParam(t));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GenError::BadAlpha(alpha));
    }
    let sqrt_n = exact_sqrt(n).ok_or(GenError::NotPerfectSquare(n))?;
    if sqrt_n == 0 || sqrt_n % (2 * t) != 0 {
        return Err(GenError::BadDivisibility { sqrt_n, two_t: 2 * t });
    }

    let total = 9 * n;
    let side = 3 * sqrt_n;
    let in_b = |p: &Point| -> bool {
        p.x >= sqrt_n
            && p.x < 2 * sqrt_n
            && p.y >= sqrt_n
            && p.y < 2 * sqrt_n
            && p.x % t == 0
            && p.y % t == 0
    };
    let mut a_cells = Vec::new();
    let mut b_cells = Vec::new();
    for y in 0..side {
        for x in 0..side {
            let p = Point::new(x, y);
            if in_b(&p) {
                b_cells.push(p);
            } else {
                a_cells.push(p);
            }
        }
    }
    let k = a_cells.len();
    debug_assert_eq!(b_cells.len(), (n as i64 / (t * t)) as usize);
    debug_assert_eq!(k + b_cells.len(), total);

    let pins: BTreeMap<VertexId, Point> = a_cells.iter().copied().enumerate().collect();
    let pin_id: BTreeMap<Point, VertexId> =
        a_cells.iter().copied().enumerate().map(|(i, p)| (p, i)).collect();
    let slot_id: BTreeMap<Point, VertexId> =
        b_cells.iter().copied().enumerate().map(|(i, p)| (p, k + i)).collect();

    let mut edges = Vec::new();
    let mut anchor_of = vec![usize::MAX; total];
    for (i, &slot) in b_cells.iter().enumerate() {
        let vtx = k + i;
        // Matching partner: rows alternate between even and odd multiples
        // of t; the even row is matched upward.
        if (slot.y / t) % 2 == 0 {
            let partner = slot_id[&Point::new(slot.x, slot.y + t)];
            edges.push(Edge::new(vtx, partner, 1.0));
        }
        let anchor = pin_id[&Point::new(slot.x, slot.y + 1)];
        anchor_of[vtx] = anchor;
        edges.push(Edge::new(vtx, anchor, alpha));
    }
    let matched_pairs = b_cells.len() / 2;

    let instance = Instance {
        dim: 2,
        n: total,
        edges: edges.clone(),
        terminals: (0..k).collect(),
        pins: pins.clone(),
        grid: GridMode::Unbounded,
    };
    instance.validate().expect("gap instance must be well-formed");

    // Shortest-path closure of the support graph. Initialize with the
    // terminal clique and the anchor/matching edges, then relax through
    // the non-terminals (paths never benefit from more than a few hops
    // through the sparse part, but full Floyd-Warshall keeps it simple
    // and exactly metric).
    let mut table = DistTable::from_fn(total, |a, b| {
        if a < k && b < k {
            pins[&a].dist(&pins[&b])
        } else {
            f64::INFINITY
        }
    });
    for e in &edges {
        let d = if e.w == 1.0 { 1.0 } else { t as f64 };
        if d < table.get(e.u, e.v) {
            table.set(e.u, e.v, d);
        }
    }
    for via in 0..total {
        for a in 0..total {
            let d_av = table.get(a, via);
            if !d_av.is_finite() {
                continue;
            }
            for b in a + 1..total {
                let alt = d_av + table.get(via, b);
                if alt < table.get(a, b) {
                    table.set(a, b, alt);
                }
            }
        }
    }

    let fractional_cost: f64 =
        edges.iter().map(|e| e.w * table.get(e.u, e.v)).sum();
    let formula = matched_pairs as f64 + alpha * t as f64 * b_cells.len() as f64;
    debug_assert!(
        (fractional_cost - formula).abs() < 1e-9 * formula,
        "closure disturbed the designed edge distances"
    );
    let fractional_metric =
        SpreadingMetric { table, objective: fractional_cost, feasibility_tol: 1e-9 };
    let forced_integral_cost =
        (alpha * (n as f64).sqrt() + t as f64) * (b_cells.len() as f64);
    Ok(GapCertificate { instance, fractional_metric, fractional_cost, forced_integral_cost })
}

/// Parameters of a 3-partition grid construction.
#[derive(Clone, Debug)]
pub struct HardnessParams {
    /// Star sizes, 3 per group, each strictly inside (B/4, B/2).
    pub a: Vec<u64>,
    pub b: u64,
    /// Side of the (inner) grid.
    pub side: i64,
    /// Minimum separation between net points and from the boundary.
    pub spacing: i64,
}

impl HardnessParams {
    pub fn groups(&self) -> usize {
        self.a.len() / 3
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::BadPartitionParams(msg));
        if self.a.is_empty() || !self.a.len().is_multiple_of(3) {
            return bad(format!("need a multiple of 3 star sizes, got {}", self.a.len()));
        }
        let b = self.b as f64;
        for (i, &ai) in self.a.iter().enumerate() {
            if !((ai as f64) > b / 4.0 && (ai as f64) < b / 2.0) {
                return bad(format!("a[{i}] = {ai} outside ({}, {})", b / 4.0, b / 2.0));
            }
        }
        let total: u64 = self.a.iter().sum();
        if total != self.groups() as u64 * self.b {
            return bad(format!("sizes sum to {total}, expected n*B = {}", self.groups() as u64 * self.b));
        }
        if self.spacing < 1 || self.side < 2 * self.spacing + 1 {
            return bad(format!("side {} cannot hold spacing {}", self.side, self.spacing));
        }
        Ok(())
    }
}

/// One free star component: a center and its leaves, joined by unit edges.
#[derive(Clone, Debug)]
pub struct Star {
    pub center: VertexId,
    pub leaves: Vec<VertexId>,
}

impl Star {
    pub fn size(&self) -> usize {
        1 + self.leaves.len()
    }
}

/// Geometry of a generated 3-partition instance, kept for witness
/// construction and audits.
#[derive(Clone, Debug)]
pub struct PartitionLayout {
    pub params: HardnessParams,
    /// One net point per group, pairwise >= spacing apart and >= spacing
    /// from the grid boundary.
    pub net: Vec<Point>,
    /// holes[g]: the B cells removed around net[g], in closest-first
    /// (dist^2, y, x) order.
    pub holes: Vec<Vec<Point>>,
    pub stars: Vec<Star>,
}

fn net_points(params: &HardnessParams) -> Result<Vec<Point>, GenError> {
    let groups = params.groups() as i64;
    let s = params.spacing;
    let per_row = (params.side - 2 * s) / s + 1; // lattice pitch s, inset s
    if per_row < 1 || per_row * per_row < groups {
        return Err(GenError::BadPartitionParams(format!(
            "grid side {} cannot hold {} net points at spacing {}",
            params.side, groups, s
        )));
    }
    Ok((0..groups)
        .map(|g| Point::new(s * (1 + g % per_row), s * (1 + g / per_row)))
        .collect())
}

fn carve_hole(center: Point, b: u64, side: i64, taken: &mut BTreeMap<Point, usize>, idx: usize) -> Vec<Point> {
    // The B closest free cells by (squared distance, y, x).
    let r = (b as f64).sqrt() as i64 + 2;
    let mut candidates: Vec<(i64, i64, i64)> = Vec::new();
    for y in (center.y - r).max(0)..=(center.y + r).min(side - 1) {
        for x in (center.x - r).max(0)..=(center.x + r).min(side - 1) {
            let p = Point::new(x, y);
            if taken.contains_key(&p) {
                continue;
            }
            let d2 = (x - center.x).pow(2) + (y - center.y).pow(2);
            candidates.push((d2, y, x));
        }
    }
    candidates.sort_unstable();
    let cells: Vec<Point> =
        candidates.iter().take(b as usize).map(|&(_, y, x)| Point::new(x, y)).collect();
    for &c in &cells {
        taken.insert(c, idx);
    }
    cells
}

/// Bounded 3-partition family: an N x N grid whose cells are all pinned
/// terminals except for `groups` holes of exactly B cells each (carved
/// closest-first around the net points), plus free star components of the
/// given sizes with unit-weight internal edges. All other weights are zero
/// and hence omitted. Star vertices get the highest ids: centers and
/// leaves in star order after the terminals.
pub fn gen_3partition_bounded(
    params: &HardnessParams,
) -> Result<(Instance, PartitionLayout), GenError> {
    params.validate()?;
    let net = net_points(params)?;
    let side = params.side;
    let mut taken: BTreeMap<Point, usize> = BTreeMap::new();
    let holes: Vec<Vec<Point>> = net
        .iter()
        .enumerate()
        .map(|(i, &c)| carve_hole(c, params.b, side, &mut taken, i))
        .collect();
    if let Some((i, h)) = holes.iter().enumerate().find(|(_, h)| h.len() != params.b as usize) {
        return Err(GenError::BadPartitionParams(format!(
            "hole {i} could only fit {} of {} cells",
            h.len(),
            params.b
        )));
    }

    let mut pins: BTreeMap<VertexId, Point> = BTreeMap::new();
    let mut next_id = 0usize;
    for y in 0..side {
        for x in 0..side {
            let p = Point::new(x, y);
            if !taken.contains_key(&p) {
                pins.insert(next_id, p);
                next_id += 1;
            }
        }
    }
    let k = next_id;
    let free_total: u64 = params.a.iter().sum();
    debug_assert_eq!(k + free_total as usize, (side * side) as usize);

    let mut stars = Vec::with_capacity(params.a.len());
    let mut edges = Vec::new();
    for &ai in &params.a {
        let center = next_id;
        next_id += 1;
        let leaves: Vec<VertexId> = (0..ai - 1)
            .map(|_| {
                let leaf = next_id;
                next_id += 1;
                edges.push(Edge::new(center, leaf, 1.0));
                leaf
            })
            .collect();
        stars.push(Star { center, leaves });
    }

    let instance = Instance {
        dim: 2,
        n: (side * side) as usize,
        edges,
        terminals: (0..k).collect(),
        pins,
        grid: GridMode::Bounded { side },
    };
    instance.validate().expect("3-partition instance must be well-formed");
    let layout = PartitionLayout { params: params.clone(), net, holes, stars };
    Ok((instance, layout))
}

/// Build the placement a YES-certificate implies: `groups[g]` names the
/// three stars packed into hole g (their sizes must sum to B). Each hole's
/// cells are consumed closest-first, center before leaves, so each star
/// occupies a contiguous clump.
pub fn partition_witness(
    inst: &Instance,
    layout: &PartitionLayout,
    groups: &[[usize; 3]],
) -> Result<Placement, GenError> {
    if groups.len() != layout.holes.len() {
        return Err(GenError::BadWitness(format!(
            "{} groups for {} holes",
            groups.len(),
            layout.holes.len()
        )));
    }
    let mut used = vec![false; layout.stars.len()];
    let mut positions: Vec<Point> = vec![Point::new(0, 0); inst.n];
    for (&t, p) in &inst.pins {
        positions[t] = *p;
    }
    for (g, trio) in groups.iter().enumerate() {
        let mut cells = layout.holes[g].iter();
        let mut size = 0u64;
        for &s in trio {
            if s >= layout.stars.len() || used[s] {
                return Err(GenError::BadWitness(format!("star {s} reused or out of range")));
            }
            used[s] = true;
            size += layout.params.a[s];
            let star = &layout.stars[s];
            for &vtx in std::iter::once(&star.center).chain(&star.leaves) {
                let c = cells
                    .next()
                    .ok_or_else(|| GenError::BadWitness(format!("hole {g} overflows")))?;
                positions[vtx] = *c;
            }
        }
        if size != layout.params.b {
            return Err(GenError::BadWitness(format!(
                "group {g} sizes sum to {size}, want {}",
                layout.params.b
            )));
        }
    }
    Ok(Placement::from_positions(inst, positions))
}

/// Parameters derived for the unbounded (padded) 3-partition variant.
#[derive(Clone, Debug)]
pub struct PaddedParams {
    pub inner: HardnessParams,
    /// Side of the padded all-terminal frame: (N * B)^2 area scaling,
    /// N' = N^2 * B^2.
    pub outer_side: i64,
    /// Weight of the star-to-center edges: sqrt(B) / N.
    pub center_weight: f64,
    /// Offset of the inner grid inside the frame.
    pub offset: Point,
    /// The designated center terminal's cell.
    pub center: Point,
}

/// Unbounded 3-partition family: the bounded construction embedded at the
/// center of an N' x N' all-terminal frame (N' = N^2 B^2, grid mode
/// unbounded), plus an edge of weight sqrt(B)/N from every star vertex to
/// the frame's center terminal. The center cell is the closest non-hole
/// cell to (N'/2, N'/2).
pub fn gen_3partition_unbounded(
    params: &HardnessParams,
) -> Result<(Instance, PartitionLayout, PaddedParams), GenError> {
    params.validate()?;
    let net_inner = net_points(params)?;
    let n_inner = params.side;
    let outer = n_inner * n_inner * (params.b * params.b) as i64;
    let offset = Point::new((outer - n_inner) / 2, (outer - n_inner) / 2);
    let net: Vec<Point> =
        net_inner.iter().map(|p| Point::new(p.x + offset.x, p.y + offset.y)).collect();

    let mut taken: BTreeMap<Point, usize> = BTreeMap::new();
    let holes: Vec<Vec<Point>> = net
        .iter()
        .enumerate()
        .map(|(i, &c)| carve_hole(c, params.b, outer, &mut taken, i))
        .collect();
    if let Some((i, h)) = holes.iter().enumerate().find(|(_, h)| h.len() != params.b as usize) {
        return Err(GenError::BadPartitionParams(format!(
            "hole {i} could only fit {} of {} cells",
            h.len(),
            params.b
        )));
    }

    let mut pins: BTreeMap<VertexId, Point> = BTreeMap::new();
    let mut id_of: BTreeMap<Point, VertexId> = BTreeMap::new();
    let mut next_id = 0usize;
    for y in 0..outer {
        for x in 0..outer {
            let p = Point::new(x, y);
            if !taken.contains_key(&p) {
                pins.insert(next_id, p);
                id_of.insert(p, next_id);
                next_id += 1;
            }
        }
    }
    let k = next_id;

    // Closest non-hole cell to the geometric center, ties by (y, x).
    let mid = Point::new(outer / 2, outer / 2);
    let center = (0..=2i64)
        .flat_map(|r| {
            ((mid.y - r).max(0)..=(mid.y + r).min(outer - 1)).flat_map(move |y| {
                ((mid.x - r).max(0)..=(mid.x + r).min(outer - 1))
                    .map(move |x| Point::new(x, y))
            })
        })
        .filter(|p| !taken.contains_key(p))
        .min_by_key(|p| ((p.x - mid.x).pow(2) + (p.y - mid.y).pow(2), p.y, p.x))
        .expect("frame must have a non-hole cell near its center");
    let center_id = id_of[&center];
    let center_weight = (params.b as f64).sqrt() / n_inner as f64;

    let mut stars = Vec::with_capacity(params.a.len());
    let mut edges = Vec::new();
    for &ai in &params.a {
        let c = next_id;
        next_id += 1;
        let mut members = vec![c];
        let leaves: Vec<VertexId> = (0..ai - 1)
            .map(|_| {
                let leaf = next_id;
                next_id += 1;
                edges.push(Edge::new(c, leaf, 1.0));
                leaf
            })
            .collect();
        members.extend(&leaves);
        for &m in &members {
            edges.push(Edge::new(m, center_id, center_weight));
        }
        stars.push(Star { center: c, leaves });
    }

    let instance = Instance {
        dim: 2,
        n: next_id,
        edges,
        terminals: (0..k).collect(),
        pins,
        grid: GridMode::Unbounded,
    };
    instance.validate().expect("padded 3-partition instance must be well-formed");
    let layout = PartitionLayout { params: params.clone(), net, holes, stars };
    let padded =
        PaddedParams { inner: params.clone(), outer_side: outer, center_weight, offset, center };
    Ok((instance, layout, padded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{
        max_triangle_violation, separate_spreading, separate_triangle, solve_lp_default,
    };
    use crate::model::evaluate_cost;

    #[test]
    fn bounded_gap_certificate_has_unit_cost_and_forced_corner_cost() {
        let cert = gen_bounded_gap(16).unwrap();
        assert_eq!(cert.instance.n, 16);
        assert_eq!(cert.instance.terminals.len(), 14);
        assert!((cert.fractional_cost - 1.0).abs() < 1e-15);
        let expected = 2f64.sqrt() * 3.0;
        assert!((cert.forced_integral_cost - expected).abs() < 1e-12);
        // Certificate metric cost really is the weighted sum.
        let recomputed: f64 = cert
            .instance
            .edges
            .iter()
            .map(|e| e.w * cert.fractional_metric.table.get(e.u, e.v))
            .sum();
        assert!((recomputed - cert.fractional_cost).abs() < 1e-12);
    }

    #[test]
    fn bounded_gap_metric_passes_both_oracles() {
        for n in [9usize, 16, 64] {
            let cert = gen_bounded_gap(n).unwrap();
            let table = &cert.fractional_metric.table;
            assert!(
                separate_spreading(table, 2, 1e-9).is_empty(),
                "spreading cut on gap metric n={n}"
            );
            assert!(
                separate_triangle(table, 1e-9).is_empty(),
                "triangle cut on gap metric n={n}"
            );
        }
    }

    #[test]
    fn bounded_gap_rejects_bad_sizes() {
        assert!(matches!(gen_bounded_gap(15), Err(GenError::NotPerfectSquare(15))));
        assert!(matches!(gen_bounded_gap(4), Err(GenError::TooSmall(4))));
    }

    /// The relaxation optimum on the gap instance is even lower than the
    /// certificate's cost: nothing stops the free pair's distance from
    /// sitting at the universal floor of 1/4. The certificate is the
    /// designed feasible point, not the argmin.
    #[test]
    fn bounded_gap_lp_optimum_sits_at_the_pair_floor() {
        let cert = gen_bounded_gap(16).unwrap();
        let (metric, _) = solve_lp_default(&cert.instance).unwrap();
        assert!(metric.objective <= cert.fractional_cost + 1e-7);
        assert!(
            (metric.objective - 0.25).abs() < 1e-6,
            "LP optimum {} should be the floor",
            metric.objective
        );
    }

    #[test]
    fn unbounded_gap_shape_and_designed_distances() {
        let cert = gen_unbounded_gap(16, 2, 0.5).unwrap();
        let inst = &cert.instance;
        assert_eq!(inst.n, 144);
        assert_eq!(inst.terminals.len(), 140);
        let table = &cert.fractional_metric.table;
        let mut matched = 0;
        let mut anchors = 0;
        for e in &inst.edges {
            if e.w == 1.0 {
                assert!((table.get(e.u, e.v) - 1.0).abs() < 1e-12, "matched pair distance");
                matched += 1;
            } else {
                assert!((table.get(e.u, e.v) - 2.0).abs() < 1e-12, "anchor distance");
                anchors += 1;
            }
        }
        assert_eq!(matched, 2); // n / (2 t^2)
        assert_eq!(anchors, 4); // n / t^2
        // cost = matched * 1 + anchors * t * alpha = 2 + 4 = 6
        assert!((cert.fractional_cost - 6.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_gap_metric_passes_both_oracles() {
        let cert = gen_unbounded_gap(16, 2, 0.5).unwrap();
        let table = &cert.fractional_metric.table;
        assert!(separate_spreading(table, 2, 1e-9).is_empty());
        assert!(separate_triangle(table, 1e-9).is_empty());
        // The closure is exactly metric, not merely within tolerance.
        assert!(max_triangle_violation(table) <= 1e-12);
    }

    #[test]
    fn unbounded_gap_rejects_bad_divisibility() {
        assert!(gen_unbounded_gap(16, 3, 0.5).is_err()); // 4 % 6 != 0
        assert!(gen_unbounded_gap(9, 2, 0.5).is_err()); // 3 % 4 != 0
        assert!(gen_unbounded_gap(16, 2, 0.0).is_err());
        assert!(gen_unbounded_gap(16, 1, 0.5).is_err());
    }

    fn desk_params() -> HardnessParams {
        HardnessParams { a: vec![2; 6], b: 6, side: 25, spacing: 8 }
    }

    #[test]
    fn partition_holes_conserve_cells() {
        let params = desk_params();
        let (inst, layout) = gen_3partition_bounded(&params).unwrap();
        let hole_cells: usize = layout.holes.iter().map(Vec::len).sum();
        assert_eq!(hole_cells, 12); // n * B
        assert_eq!(inst.n - inst.terminals.len(), 12); // free vertices fill them
        let mut all: Vec<Point> = layout.holes.iter().flatten().copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 12, "holes overlap");
        // Net separation from each other and the boundary.
        for (i, p) in layout.net.iter().enumerate() {
            assert!(p.x >= params.spacing && p.y >= params.spacing);
            assert!(p.x <= params.side - 1 - params.spacing);
            assert!(p.y <= params.side - 1 - params.spacing);
            for q in &layout.net[i + 1..] {
                assert!(p.dist(q) >= params.spacing as f64);
            }
        }
    }

    #[test]
    fn partition_witness_is_valid_and_cheap() {
        let params = desk_params();
        let (inst, layout) = gen_3partition_bounded(&params).unwrap();
        let witness = partition_witness(&inst, &layout, &[[0, 1, 2], [3, 4, 5]]).unwrap();
        witness.validate(&inst).unwrap();
        let n_groups = layout.params.groups() as f64;
        let budget = n_groups * (params.b as f64 - 3.0) * 4.0 * (params.b as f64).sqrt();
        assert!(witness.cost <= budget, "witness cost {} over {budget}", witness.cost);
    }

    #[test]
    fn splitting_a_star_across_holes_stretches_an_edge() {
        let params = desk_params();
        let (_, layout) = gen_3partition_bounded(&params).unwrap();
        // Any cell of hole 0 is far from any cell of hole 1.
        let bound = params.spacing as f64 - 2.0 * (params.b as f64).sqrt();
        for p in &layout.holes[0] {
            for q in &layout.holes[1] {
                assert!(p.dist(q) >= bound);
            }
        }
    }

    #[test]
    fn partition_rejects_bad_parameters() {
        let mut p = desk_params();
        p.a[0] = 1; // <= B/4
        assert!(gen_3partition_bounded(&p).is_err());
        let mut p = desk_params();
        p.a[0] = 3; // sum no longer n*B (and 3 is not < B/2)
        assert!(gen_3partition_bounded(&p).is_err());
        let mut p = desk_params();
        p.side = 10; // net cannot keep its distance
        assert!(gen_3partition_bounded(&p).is_err());
        let p = desk_params();
        let (inst, layout) = gen_3partition_bounded(&p).unwrap();
        assert!(partition_witness(&inst, &layout, &[[0, 1, 2], [3, 4, 0]]).is_err());
        assert!(partition_witness(&inst, &layout, &[[0, 1, 2]]).is_err());
    }

    #[test]
    fn padded_partition_center_edges_and_witness_bound() {
        let params = HardnessParams { a: vec![2, 2, 2], b: 6, side: 5, spacing: 2 };
        let (inst, layout, padded) = gen_3partition_unbounded(&params).unwrap();
        assert_eq!(padded.outer_side, 25 * 36);
        let w = padded.center_weight;
        assert!((w - 6f64.sqrt() / 5.0).abs() < 1e-15);
        let w_edges: Vec<&Edge> =
            inst.edges.iter().filter(|e| (e.w - w).abs() < 1e-12).collect();
        assert_eq!(w_edges.len(), 6); // one per star vertex

        // Witness: pack the single group into its hole; its cost is the
        // star edges plus the center edges, bounded by the inner witness
        // cost plus w * nB * N / 2.
        let witness = partition_witness(&inst, &layout, &[[0, 1, 2]]).unwrap();
        witness.validate(&inst).unwrap();
        let star_cost: f64 = inst
            .edges
            .iter()
            .filter(|e| (e.w - 1.0).abs() < 1e-12)
            .map(|e| {
                let pos = |v: usize| witness.positions[v];
                e.w * pos(e.u).dist(&pos(e.v))
            })
            .sum();
        let budget = star_cost + w * 6.0 * params.side as f64 / 2.0;
        assert!(witness.cost <= budget + 1e-9, "cost {} over {budget}", witness.cost);

        // A star vertex exiled past the frame pays at least w * N'/2 on
        // its center edge.
        let exile = Point::new(padded.outer_side, padded.outer_side / 2);
        assert!(w * exile.dist(&padded.center) >= w * padded.outer_side as f64 / 2.0);

        // Independent cost check through the public evaluator.
        let as_map: std::collections::BTreeMap<usize, Point> =
            witness.positions.iter().copied().enumerate().collect();
        let cost = evaluate_cost(&inst, &as_map).unwrap();
        assert!((cost - witness.cost).abs() < 1e-9);
    }
}
