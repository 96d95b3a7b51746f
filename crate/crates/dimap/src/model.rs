//! Problem model: weighted instances with pinned terminals, grid modes, and
//! placements (injective maps from vertices to lattice points).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub type VertexId = usize;

/// A lattice point. The instance's `dim` governs how much of it is live:
/// in one dimension `y` must be zero everywhere and all norms collapse to
/// `|dx|`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance to `other`.
    pub fn dist(&self, other: &Point) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }

    /// Chebyshev (max-coordinate) distance to `other`.
    pub fn linf(&self, other: &Point) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A weighted undirected edge. Parallel edges are allowed and their weights
/// simply add in every cost expression.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

impl Edge {
    pub fn new(u: VertexId, v: VertexId, w: f64) -> Self {
        Edge { u, v, w }
    }
}

/// Which lattice the placement must live on.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum GridMode {
    /// All of Z^dim is available.
    Unbounded,
    /// The cube {0..side-1}^dim, with side^dim equal to the vertex count, so
    /// every valid placement is a bijection onto the grid.
    Bounded { side: i64 },
    /// A slightly inflated cube: the placement may use
    /// {0..ceil(((1+4*eps)*n)^(1/dim))-1}^dim.
    EpsViolation { eps: f64 },
}

impl GridMode {
    /// Side length of the allowed cube for `n` vertices in dimension `dim`,
    /// or `None` in unbounded mode.
    pub fn box_side(&self, n: usize, dim: u32) -> Option<i64> {
        match *self {
            GridMode::Unbounded => None,
            GridMode::Bounded { side } => Some(side),
            GridMode::EpsViolation { eps } => Some(eps_box_side(n, eps, dim)),
        }
    }
}

/// Side length of the inflated cube used by the eps-violation mode:
/// ceil(((1+4*eps)*n)^(1/dim)).
pub fn eps_box_side(n: usize, eps: f64, dim: u32) -> i64 {
    ceil_root((1.0 + 4.0 * eps) * n as f64, dim)
}

/// Smallest integer r with r^dim >= value, robust against the root landing
/// a hair above an exact integer in floating point.
pub fn ceil_root(value: f64, dim: u32) -> i64 {
    if value <= 0.0 {
        return 0;
    }
    let mut r = value.powf(1.0 / dim as f64).ceil() as i64;
    while r > 1 && ((r - 1) as f64).powi(dim as i32) >= value - 1e-9 {
        r -= 1;
    }
    while (r as f64).powi(dim as i32) < value - 1e-9 {
        r += 1;
    }
    r
}

/// An arrangement instance: `n` vertices, weighted edges, and a set of
/// terminals pinned to distinct lattice points.
#[derive(Clone, PartialEq, Debug)]
pub struct Instance {
    pub dim: u32,
    pub n: usize,
    pub edges: Vec<Edge>,
    /// Terminal ids in a fixed order; cluster indices and seeds follow it.
    pub terminals: Vec<VertexId>,
    /// Pinned location of every terminal.
    pub pins: BTreeMap<VertexId, Point>,
    pub grid: GridMode,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension {0} unsupported (only 1 and 2 are implemented)")]
    BadDimension(u32),
    #[error("instance must have at least one vertex")]
    Empty,
    #[error("edge ({u}, {v}) out of range for {n} vertices")]
    EdgeOutOfRange { u: VertexId, v: VertexId, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({u}, {v}) has invalid weight {w}")]
    BadWeight { u: VertexId, v: VertexId, w: f64 },
    #[error("no terminals (at least one vertex must be pinned)")]
    NoTerminals,
    #[error("terminal {0} listed twice")]
    DuplicateTerminal(VertexId),
    #[error("terminal {0} out of range")]
    TerminalOutOfRange(VertexId),
    #[error("terminal {0} has no pin")]
    MissingPin(VertexId),
    #[error("pin for vertex {0} does not match any terminal")]
    PinWithoutTerminal(VertexId),
    #[error("terminals {0} and {1} pinned to the same point")]
    PinCollision(VertexId, VertexId),
    #[error("pin {point} of terminal {t} outside the grid")]
    PinOutsideGrid { t: VertexId, point: Point },
    #[error("bounded grid side {side} does not satisfy side^{dim} = {n}")]
    GridSizeMismatch { side: i64, dim: u32, n: usize },
    #[error("eps must be positive and finite, got {0}")]
    BadEps(f64),
    #[error("point {point} uses a second coordinate in dimension 1")]
    NotOneDimensional { point: Point },
    #[error("assignment missing vertex {0}")]
    MissingVertex(VertexId),
}

impl Instance {
    /// Check every structural invariant: ids in range, weights finite and
    /// nonnegative, terminals distinct and pinned injectively, pins inside
    /// the grid for the bounded and eps modes, and the bounded side matching
    /// the vertex count exactly.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim != 1 && self.dim != 2 {
            return Err(ModelError::BadDimension(self.dim));
        }
        if self.n == 0 {
            return Err(ModelError::Empty);
        }
        for e in &self.edges {
            if e.u >= self.n || e.v >= self.n {
                return Err(ModelError::EdgeOutOfRange { u: e.u, v: e.v, n: self.n });
            }
            if e.u == e.v {
                return Err(ModelError::SelfLoop(e.u));
            }
            if !e.w.is_finite() || e.w < 0.0 {
                return Err(ModelError::BadWeight { u: e.u, v: e.v, w: e.w });
            }
        }
        if self.terminals.is_empty() {
            return Err(ModelError::NoTerminals);
        }
        let mut seen = vec![false; self.n];
        for &t in &self.terminals {
            if t >= self.n {
                return Err(ModelError::TerminalOutOfRange(t));
            }
            if seen[t] {
                return Err(ModelError::DuplicateTerminal(t));
            }
            seen[t] = true;
            if !self.pins.contains_key(&t) {
                return Err(ModelError::MissingPin(t));
            }
        }
        for &v in self.pins.keys() {
            if v >= self.n || !seen[v] {
                return Err(ModelError::PinWithoutTerminal(v));
            }
        }
        let mut by_point: BTreeMap<Point, VertexId> = BTreeMap::new();
        for (&t, &p) in &self.pins {
            if let Some(&other) = by_point.get(&p) {
                return Err(ModelError::PinCollision(other, t));
            }
            by_point.insert(p, t);
        }
        match self.grid {
            GridMode::Bounded { side } => {
                if side < 1 || checked_pow(side, self.dim) != Some(self.n as i64) {
                    return Err(ModelError::GridSizeMismatch { side, dim: self.dim, n: self.n });
                }
            }
            GridMode::EpsViolation { eps } => {
                if !eps.is_finite() || eps <= 0.0 {
                    return Err(ModelError::BadEps(eps));
                }
            }
            GridMode::Unbounded => {}
        }
        let side = self.grid.box_side(self.n, self.dim);
        for (&t, &p) in &self.pins {
            if self.dim == 1 && p.y != 0 {
                return Err(ModelError::NotOneDimensional { point: p });
            }
            if let Some(s) = side {
                if !point_in_box(&p, s, self.dim) {
                    return Err(ModelError::PinOutsideGrid { t, point: p });
                }
            }
        }
        Ok(())
    }

    pub fn is_terminal(&self, v: VertexId) -> bool {
        self.pins.contains_key(&v)
    }

    /// Free (unpinned) vertices in ascending id order.
    pub fn free_vertices(&self) -> Vec<VertexId> {
        (0..self.n).filter(|v| !self.pins.contains_key(v)).collect()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }
}

fn checked_pow(base: i64, exp: u32) -> Option<i64> {
    base.checked_pow(exp)
}

pub fn point_in_box(p: &Point, side: i64, dim: u32) -> bool {
    let x_ok = p.x >= 0 && p.x < side;
    match dim {
        1 => x_ok && p.y == 0,
        _ => x_ok && p.y >= 0 && p.y < side,
    }
}

/// Total cost of a full assignment: sum over edges of w * ||f(u) - f(v)||.
/// The assignment must cover every vertex that appears in an edge.
pub fn evaluate_cost(
    inst: &Instance,
    assignment: &BTreeMap<VertexId, Point>,
) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for e in &inst.edges {
        let pu = assignment.get(&e.u).ok_or(ModelError::MissingVertex(e.u))?;
        let pv = assignment.get(&e.v).ok_or(ModelError::MissingVertex(e.v))?;
        total += e.w * pu.dist(pv);
    }
    Ok(total)
}

/// Same cost over a dense assignment vector indexed by vertex id.
pub fn cost_of(inst: &Instance, positions: &[Point]) -> f64 {
    debug_assert_eq!(positions.len(), inst.n);
    inst.edges
        .iter()
        .map(|e| e.w * positions[e.u].dist(&positions[e.v]))
        .sum()
}

/// Result of a placement run: a total injective assignment together with the
/// mode it satisfies and its evaluated cost.
#[derive(Clone, PartialEq, Debug)]
pub struct Placement {
    pub positions: Vec<Point>,
    pub mode: GridMode,
    pub cost: f64,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PlacementError {
    #[error("placement covers {got} vertices, instance has {want}")]
    WrongSize { got: usize, want: usize },
    #[error("vertices {0} and {1} collide at the same point")]
    Collision(VertexId, VertexId),
    #[error("terminal {t} placed at {got}, pinned to {want}")]
    PinMoved { t: VertexId, got: Point, want: Point },
    #[error("vertex {v} at {point} lies outside the allowed box")]
    OutsideBox { v: VertexId, point: Point },
    #[error("stored cost {stored} does not match evaluated cost {evaluated}")]
    CostMismatch { stored: f64, evaluated: f64 },
}

impl Placement {
    pub fn from_positions(inst: &Instance, positions: Vec<Point>) -> Self {
        let cost = cost_of(inst, &positions);
        Placement { positions, mode: inst.grid, cost }
    }

    pub fn assignment(&self) -> BTreeMap<VertexId, Point> {
        self.positions.iter().copied().enumerate().collect()
    }

    /// Verify the placement against its instance: total, injective, pins
    /// exactly respected, inside the mode's box, and the stored cost equal
    /// to the evaluated one up to floating-point noise.
    pub fn validate(&self, inst: &Instance) -> Result<(), PlacementError> {
        if self.positions.len() != inst.n {
            return Err(PlacementError::WrongSize { got: self.positions.len(), want: inst.n });
        }
        let mut seen: BTreeMap<Point, VertexId> = BTreeMap::new();
        for (v, &p) in self.positions.iter().enumerate() {
            if let Some(&other) = seen.get(&p) {
                return Err(PlacementError::Collision(other, v));
            }
            seen.insert(p, v);
        }
        for (&t, &p) in &inst.pins {
            if self.positions[t] != p {
                return Err(PlacementError::PinMoved { t, got: self.positions[t], want: p });
            }
        }
        if let Some(side) = inst.grid.box_side(inst.n, inst.dim) {
            for (v, p) in self.positions.iter().enumerate() {
                if !point_in_box(p, side, inst.dim) {
                    return Err(PlacementError::OutsideBox { v, point: *p });
                }
            }
        }
        let evaluated = cost_of(inst, &self.positions);
        let scale = 1.0 + evaluated.abs();
        if (self.cost - evaluated).abs() > 1e-9 * scale {
            return Err(PlacementError::CostMismatch { stored: self.cost, evaluated });
        }
        Ok(())
    }
}

/// All cells of the bounded grid {0..side-1}^dim in lexicographic (y, x)
/// order.
pub fn grid_cells(side: i64, dim: u32) -> Vec<Point> {
    match dim {
        1 => (0..side).map(|x| Point::new(x, 0)).collect(),
        _ => {
            let mut cells = Vec::with_capacity((side * side) as usize);
            for y in 0..side {
                for x in 0..side {
                    cells.push(Point::new(x, y));
                }
            }
            cells
        }
    }
}
