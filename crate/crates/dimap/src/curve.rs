//! Space-filling-curve orderings.
//!
//! Two services: a Hilbert-curve order of a full power-of-two square (used
//! to lay a cluster's vertices out contiguously), and a quad-tree in-order
//! traversal of an arbitrary finite point set (used to walk the cells of a
//! carved region). Both produce orders in which positions that are close
//! along the order are close in the plane: for any stride `delta`, the
//! summed distance between order-neighbors at that stride is at most
//! `C_CURVE * |X| * sqrt(delta)` where `|X|` is the area of the enclosing
//! square.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::Point;

/// Test/audit threshold for the stride-sum invariant. Chosen to dominate
/// the geometric-series constants in the quad-tree argument; not tight.
pub const C_CURVE: f64 = 16.0;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("side {0} is not a positive power of two")]
    SideNotPowerOfTwo(i64),
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("duplicate point {0}")]
    DuplicatePoint(Point),
    #[error("anchor square (origin {origin}, side {side}) does not contain {point}")]
    AnchorTooSmall { origin: Point, side: i64, point: Point },
}

pub fn is_power_of_two(v: i64) -> bool {
    v > 0 && (v & (v - 1)) == 0
}

/// Smallest power of two >= v (v >= 1).
pub fn next_power_of_two(v: i64) -> i64 {
    let mut s = 1i64;
    while s < v {
        s <<= 1;
    }
    s
}

fn hilbert_rot(n: i64, x: &mut i64, y: &mut i64, rx: i64, ry: i64) {
    if ry == 0 {
        if rx == 1 {
            *x = n - 1 - *x;
            *y = n - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

/// Index of cell (x, y) along the Hilbert curve of a side x side square.
pub fn hilbert_xy2d(side: i64, mut x: i64, mut y: i64) -> i64 {
    let mut d = 0;
    let mut s = side / 2;
    while s > 0 {
        let rx = i64::from(x & s > 0);
        let ry = i64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        hilbert_rot(side, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    d
}

/// Cell at index d along the Hilbert curve of a side x side square.
pub fn hilbert_d2xy(side: i64, d: i64) -> Point {
    let (mut x, mut y) = (0i64, 0i64);
    let mut t = d;
    let mut s = 1i64;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        hilbert_rot(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    Point::new(x, y)
}

/// All cells of a side x side square in Hilbert order; consecutive cells
/// are lattice-adjacent.
pub fn grid_curve_order(side: i64) -> Result<Vec<Point>, CurveError> {
    if !is_power_of_two(side) {
        return Err(CurveError::SideNotPowerOfTwo(side));
    }
    Ok((0..side * side).map(|d| hilbert_d2xy(side, d)).collect())
}

/// Axis-aligned power-of-two square of cells
/// `{origin.x .. origin.x + side - 1} x {origin.y .. origin.y + side - 1}`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Square {
    pub origin: Point,
    pub side: i64,
}

impl Square {
    pub fn new(origin: Point, side: i64) -> Result<Self, CurveError> {
        if !is_power_of_two(side) {
            return Err(CurveError::SideNotPowerOfTwo(side));
        }
        Ok(Square { origin, side })
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.origin.x
            && p.x < self.origin.x + self.side
            && p.y >= self.origin.y
            && p.y < self.origin.y + self.side
    }

    pub fn area(&self) -> i64 {
        self.side * self.side
    }

    /// Smallest power-of-two square anchored at the bounding-box corner of
    /// `points`.
    pub fn enclosing(points: &[Point]) -> Result<Self, CurveError> {
        if points.is_empty() {
            return Err(CurveError::EmptyPointSet);
        }
        let xmin = points.iter().map(|p| p.x).min().unwrap();
        let ymin = points.iter().map(|p| p.y).min().unwrap();
        let xmax = points.iter().map(|p| p.x).max().unwrap();
        let ymax = points.iter().map(|p| p.y).max().unwrap();
        let extent = (xmax - xmin + 1).max(ymax - ymin + 1);
        Ok(Square { origin: Point::new(xmin, ymin), side: next_power_of_two(extent) })
    }
}

/// Which traversal orders the quad-tree children.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum CurveVariant {
    /// Fixed child order low-y/low-x, low-y/high-x, high-y/low-x,
    /// high-y/high-x (Morton / Z-order). The default.
    #[default]
    Morton,
    /// Hilbert child rotation; same stride-sum contract.
    Hilbert,
}

/// A bijection between a finite point set and `{0 .. |Y|-1}` induced by the
/// in-order traversal of the quad-tree on an enclosing power-of-two square.
#[derive(Clone, Debug)]
pub struct SubsetOrder {
    /// Rank -> point (the inverse bijection).
    pub points: Vec<Point>,
    pub enclosing_square: Square,
    /// |Y| / |X|: fraction of the square actually occupied.
    pub density: f64,
    rank_of: BTreeMap<Point, usize>,
}

impl SubsetOrder {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The forward bijection.
    pub fn rank(&self, p: &Point) -> Option<usize> {
        self.rank_of.get(p).copied()
    }
}

/// Order `points` by the in-order quad-tree traversal of `anchor` (or of
/// the smallest enclosing power-of-two square when `anchor` is None).
///
/// Both traversal variants visit each quad-tree leaf exactly once, so the
/// subset order is the full-square cell order restricted to the subset; in
/// particular it inherits the stride-sum bound and is an order embedding
/// into the full-square order. One-dimensional inputs (all y equal) come
/// out sorted by x.
pub fn subset_order_with(
    points: &[Point],
    anchor: Option<Square>,
    variant: CurveVariant,
) -> Result<SubsetOrder, CurveError> {
    if points.is_empty() {
        return Err(CurveError::EmptyPointSet);
    }
    let square = match anchor {
        Some(sq) => {
            if let Some(p) = points.iter().find(|p| !sq.contains(p)) {
                return Err(CurveError::AnchorTooSmall {
                    origin: sq.origin,
                    side: sq.side,
                    point: *p,
                });
            }
            sq
        }
        None => Square::enclosing(points)?,
    };
    let key = |p: &Point| -> i64 {
        let x = p.x - square.origin.x;
        let y = p.y - square.origin.y;
        match variant {
            CurveVariant::Morton => morton_key(x, y),
            CurveVariant::Hilbert => hilbert_xy2d(square.side, x, y),
        }
    };
    let mut ordered: Vec<Point> = points.to_vec();
    ordered.sort_by_key(key);
    let mut rank_of = BTreeMap::new();
    for (i, p) in ordered.iter().enumerate() {
        if rank_of.insert(*p, i).is_some() {
            return Err(CurveError::DuplicatePoint(*p));
        }
    }
    let density = ordered.len() as f64 / square.area() as f64;
    Ok(SubsetOrder { points: ordered, enclosing_square: square, density, rank_of })
}

/// [`subset_order_with`] using the default Morton child order.
pub fn subset_order(points: &[Point], anchor: Option<Square>) -> Result<SubsetOrder, CurveError> {
    subset_order_with(points, anchor, CurveVariant::Morton)
}

/// Morton key with y first at every level, matching the child order
/// low-y/low-x, low-y/high-x, high-y/low-x, high-y/high-x.
fn morton_key(x: i64, y: i64) -> i64 {
    let mut key = 0i64;
    for bit in 0..31 {
        key |= ((x >> bit) & 1) << (2 * bit);
        key |= ((y >> bit) & 1) << (2 * bit + 1);
    }
    key
}

/// Sum over `l` of the distance between the points at ranks `l` and
/// `l + delta`: the quantity the stride-sum invariant bounds by
/// `C_CURVE * |X| * sqrt(delta)`.
pub fn stride_sum(ordered: &[Point], delta: usize) -> f64 {
    if delta == 0 || delta >= ordered.len() {
        return 0.0;
    }
    (0..ordered.len() - delta).map(|l| ordered[l].dist(&ordered[l + delta])).sum()
}
