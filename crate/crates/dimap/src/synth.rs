//! Seeded random instances for tests and benchmarks. Everything here is
//! deterministic in the seed, so failures reproduce exactly.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::model::{grid_cells, Edge, GridMode, Instance, Point, VertexId};

/// Random bounded instance: `n` must be `side^dim`; `k` of the vertices
/// (chosen at random) are pinned to distinct random cells; `m` edges with
/// weights in (0, 1].
pub fn synth_bounded(n: usize, k: usize, m: usize, dim: u32, seed: u64) -> Instance {
    let side = (n as f64).powf(1.0 / dim as f64).round() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = grid_cells(side, dim);
    let (terminals, pins) = random_pins(n, k, &cells, &mut rng);
    Instance {
        dim,
        n,
        edges: random_edges(n, m, &mut rng),
        terminals,
        pins,
        grid: GridMode::Bounded { side },
    }
}

/// Random unbounded instance with pins scattered over a `span x span`
/// region (or a span-length segment in dimension 1).
pub fn synth_unbounded(n: usize, k: usize, m: usize, span: i64, dim: u32, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = grid_cells(span, dim);
    let (terminals, pins) = random_pins(n, k, &cells, &mut rng);
    Instance {
        dim,
        n,
        edges: random_edges(n, m, &mut rng),
        terminals,
        pins,
        grid: GridMode::Unbounded,
    }
}

/// Random instance in the inflated-grid mode; pins land inside the
/// inflated box.
pub fn synth_eps(n: usize, k: usize, m: usize, eps: f64, dim: u32, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridMode::EpsViolation { eps };
    let side = grid.box_side(n, dim).expect("eps mode has a box");
    let cells = grid_cells(side, dim);
    let (terminals, pins) = random_pins(n, k, &cells, &mut rng);
    Instance { dim, n, edges: random_edges(n, m, &mut rng), terminals, pins, grid }
}

fn random_pins(
    n: usize,
    k: usize,
    cells: &[Point],
    rng: &mut ChaCha8Rng,
) -> (Vec<VertexId>, BTreeMap<VertexId, Point>) {
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    assert!(cells.len() >= k, "not enough cells for {k} pins");
    let mut ids: Vec<VertexId> = (0..n).collect();
    ids.shuffle(rng);
    let mut terminals: Vec<VertexId> = ids[..k].to_vec();
    terminals.sort_unstable();
    let mut spots: Vec<Point> = cells.to_vec();
    spots.shuffle(rng);
    let pins: BTreeMap<VertexId, Point> =
        terminals.iter().copied().zip(spots).collect();
    (terminals, pins)
}

fn random_edges(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    assert!(n >= 2 || m == 0, "edges need at least two vertices");
    (0..m)
        .map(|_| {
            let u = rng.random_range(0..n);
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            let w = 1.0 - rng.random::<f64>(); // (0, 1]
            Edge::new(u.min(v), u.max(v), w)
        })
        .collect()
}
