//! Brute-force exact solver for tiny instances — the ground truth that
//! approximation-ratio and lower-bound tests compare against.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{cost_of, grid_cells, Instance, ModelError, Placement, Point};

/// Hard cap on the number of free vertices: 9! injections is the largest
/// search this oracle is willing to run.
pub const MAX_FREE: usize = 9;

/// How far beyond the pin bounding box the unbounded-mode search looks.
pub const DEFAULT_MARGIN: i64 = 2;

#[derive(Clone, Debug)]
pub struct ExactResult {
    pub optimum: f64,
    pub argmin: Placement,
    /// Number of complete candidate maps that were evaluated.
    pub enumerated: u64,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExactError {
    #[error("{free} free vertices exceed the exhaustive-search cap of {MAX_FREE}")]
    TooManyFree { free: usize },
    #[error("{cells} candidate cells exceed the budget of {budget}")]
    BudgetExceeded { cells: usize, budget: usize },
    #[error("only {cells} candidate cells for {free} free vertices")]
    NotEnoughCells { cells: usize, free: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exhaustive minimum over all injections of the free vertices into the
/// candidate cells, searching the pin bounding box inflated by
/// [`DEFAULT_MARGIN`] in unbounded mode.
pub fn solve_exact(inst: &Instance, cell_budget: usize) -> Result<ExactResult, ExactError> {
    solve_exact_margin(inst, cell_budget, DEFAULT_MARGIN)
}

/// [`solve_exact`] with an explicit bounding-box margin.
///
/// In the bounded and inflated modes the candidate cells are exactly the
/// unpinned cells of the box, so the result is the true optimum. In
/// unbounded mode the search is restricted to the pin bounding box grown
/// by `margin` on every side — a deliberate truncation of an infinite
/// space, so the result is exact only relative to that window (optima that
/// wander further out are missed; a larger margin widens the window at
/// combinatorial cost).
///
/// Enumeration order is deterministic: free vertices in ascending id,
/// candidate cells in ascending (y, x), ties between equal-cost maps
/// resolved toward the first one found.
pub fn solve_exact_margin(
    inst: &Instance,
    cell_budget: usize,
    margin: i64,
) -> Result<ExactResult, ExactError> {
    inst.validate()?;
    let free = inst.free_vertices();
    if free.len() > MAX_FREE {
        return Err(ExactError::TooManyFree { free: free.len() });
    }
    let pinned: BTreeSet<Point> = inst.pins.values().copied().collect();

    let candidates: Vec<Point> = match inst.grid.box_side(inst.n, inst.dim) {
        Some(side) => grid_cells(side, inst.dim)
            .into_iter()
            .filter(|c| !pinned.contains(c))
            .collect(),
        None => {
            let xs: Vec<i64> = pinned.iter().map(|p| p.x).collect();
            let ys: Vec<i64> = pinned.iter().map(|p| p.y).collect();
            let (x0, x1) = (
                xs.iter().min().unwrap() - margin,
                xs.iter().max().unwrap() + margin,
            );
            let (y0, y1) = match inst.dim {
                1 => (0, 0),
                _ => (
                    ys.iter().min().unwrap() - margin,
                    ys.iter().max().unwrap() + margin,
                ),
            };
            let mut cells = Vec::new();
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let c = Point::new(x, y);
                    if !pinned.contains(&c) {
                        cells.push(c);
                    }
                }
            }
            cells
        }
    };
    if !matches!(inst.grid, crate::model::GridMode::Bounded { .. })
        && candidates.len() > cell_budget
    {
        return Err(ExactError::BudgetExceeded { cells: candidates.len(), budget: cell_budget });
    }
    if candidates.len() < free.len() {
        return Err(ExactError::NotEnoughCells { cells: candidates.len(), free: free.len() });
    }

    let mut positions = vec![Point::new(0, 0); inst.n];
    for (&t, &p) in &inst.pins {
        positions[t] = p;
    }

    let mut used = vec![false; candidates.len()];
    let mut search = Search {
        free: &free,
        candidates: &candidates,
        inst,
        best_cost: f64::INFINITY,
        best_positions: None,
        enumerated: 0,
    };
    search.dfs(0, &mut used, &mut positions);

    let best = search.best_positions.expect("search space nonempty");
    let argmin = Placement::from_positions(inst, best);
    debug_assert!(argmin.validate(inst).is_ok());
    Ok(ExactResult { optimum: search.best_cost, argmin, enumerated: search.enumerated })
}

/// Depth-first assignment of free vertices to candidate cells, tracking the
/// cheapest complete placement seen so far.
struct Search<'a> {
    free: &'a [usize],
    candidates: &'a [Point],
    inst: &'a Instance,
    best_cost: f64,
    best_positions: Option<Vec<Point>>,
    enumerated: u64,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, used: &mut [bool], positions: &mut [Point]) {
        if depth == self.free.len() {
            self.enumerated += 1;
            let cost = cost_of(self.inst, positions);
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best_positions = Some(positions.to_vec());
            }
            return;
        }
        for i in 0..self.candidates.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            positions[self.free[depth]] = self.candidates[i];
            self.dfs(depth + 1, used, positions);
            used[i] = false;
        }
    }
}
