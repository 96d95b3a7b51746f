//! Whole-system acceptance checks. Each test is one numbered criterion
//! and prints a single PASS line when it holds; the harness reports the
//! failure line otherwise. Tolerances are pinned in the assertions.

use std::collections::{BTreeSet, HashSet};
use std::io::Write as _;
use std::process::{Command, Stdio};
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dimap::bounded::bounded_trial;
use dimap::curve::{stride_sum, subset_order};
use dimap::exact::solve_exact;
use dimap::generators::{
    gen_3partition_bounded, gen_bounded_gap, gen_unbounded_gap, partition_witness, HardnessParams,
};
use dimap::lp::{
    separate_spreading, separate_triangle, solve_lp_default, DistTable, SpreadingMetric,
};
use dimap::metric::{ckr_partition, hst_build};
use dimap::model::{eps_box_side, grid_cells, point_in_box, Point};
use dimap::synth::{synth_bounded, synth_eps, synth_unbounded};
use dimap::unbounded::{place_eps_violation, unbounded_trial};
use dimap_cli::fmt;

fn passed(number: u32, what: &str) {
    println!("ACCEPTANCE {number:02} {what}: PASS");
}

#[test]
fn criterion_01_relaxation_below_exact_below_pipeline() {
    let start = Instant::now();
    for seed in 0..50u64 {
        let n = if seed % 2 == 0 { 4 } else { 9 };
        let k = 1 + (seed as usize) % (n / 2);
        let m = n + (seed as usize) % 7;
        let inst = synth_bounded(n, k, m, 2, seed);
        let (metric, _) = solve_lp_default(&inst).unwrap();
        let exact = solve_exact(&inst, 1 << 16).unwrap();
        let cost = dimap::bounded::place_bounded(&inst, seed, 4).unwrap().cost;
        assert!(
            metric.objective <= exact.optimum + 1e-6,
            "seed {seed}: relaxation {} above optimum {}",
            metric.objective,
            exact.optimum,
        );
        assert!(
            exact.optimum <= cost + 1e-6,
            "seed {seed}: optimum {} above pipeline cost {cost}",
            exact.optimum,
        );
    }
    assert!(start.elapsed().as_secs_f64() < 120.0, "sandwich sweep too slow");
    passed(1, "relaxation <= exact <= pipeline on 50 random instances");
}

#[test]
fn criterion_02_designed_fractional_metrics_admit_zero_cuts() {
    let mut metrics: Vec<(String, SpreadingMetric)> = Vec::new();
    for n in [16usize, 64, 144] {
        let cert = gen_bounded_gap(n).unwrap();
        metrics.push((format!("corner gap n={n}"), cert.fractional_metric));
    }
    let cert = gen_unbounded_gap(16, 2, 0.5).unwrap();
    metrics.push(("matched net n=16 t=2".into(), cert.fractional_metric));
    for (label, metric) in metrics {
        let spreading = separate_spreading(&metric.table, 2, 1e-9);
        assert!(spreading.is_empty(), "{label}: {} spreading cuts", spreading.len());
        let triangle = separate_triangle(&metric.table, 1e-9);
        assert!(triangle.is_empty(), "{label}: {} triangle cuts", triangle.len());
    }
    passed(2, "hand-built fractional metrics pass both separation oracles");
}

#[test]
fn criterion_03_corner_gap_ratio_matches_the_closed_form() {
    for n in [16usize, 64, 144] {
        let cert = gen_bounded_gap(n).unwrap();
        let exact = solve_exact(&cert.instance, 1 << 16).unwrap();
        let ratio = exact.optimum / cert.fractional_cost;
        let closed_form = 2f64.sqrt() * ((n as f64).sqrt() - 1.0);
        assert!(
            (ratio - closed_form).abs() <= 1e-6,
            "n={n}: ratio {ratio} differs from {closed_form}"
        );
        let k = (n - 2) as f64;
        let normalized = ratio / k.sqrt();
        assert!(
            (1.0..=1.5).contains(&normalized),
            "n={n}: ratio grows like {normalized} * sqrt(k)"
        );
    }
    passed(3, "corner-gap ratio equals sqrt(2)(sqrt(n)-1) and grows as sqrt(k)");
}

#[test]
fn criterion_04_random_radius_partition_hard_guarantees() {
    let mut draws = 0u64;
    for m in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(m);
        let n = 16 + (m as usize % 9);
        let points: Vec<Point> =
            (0..n).map(|_| Point::new(rng.random_range(0..40), rng.random_range(0..40))).collect();
        let table = DistTable::from_fn(n, |u, v| points[u].dist(&points[v]));
        let metric = SpreadingMetric { table, objective: 0.0, feasibility_tol: 1e-9 };
        let k = 3 + (m as usize % 4);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        let mut terminals: Vec<usize> = ids[..k].to_vec();
        terminals.sort_unstable();
        for draw in 0..500u64 {
            let c = ckr_partition(&metric, &terminals, m * 1_000_003 + draw);
            draws += 1;
            for &t in &terminals {
                assert_eq!(c.assignment[t], t, "terminal {t} left its own cluster");
            }
            for u in 0..n {
                let d = metric.table.get(u, c.assignment[u]);
                assert!(
                    d <= 2.0 * c.a_star[u] + 1e-12,
                    "vertex {u} landed {d} away with nearest terminal {}",
                    c.a_star[u],
                );
            }
        }
    }
    assert_eq!(draws, 10_000);
    passed(4, "terminal fixpoints and the 2x nearest-terminal radius on 10^4 draws");
}

#[test]
fn criterion_05_tree_embedding_never_shrinks_and_stretches_logarithmically() {
    let n = 64usize;
    let uniform = DistTable::from_fn(n, |u, v| if u == v { 0.0 } else { 1.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut seen = HashSet::new();
    let mut points: Vec<Point> = Vec::with_capacity(n);
    while points.len() < n {
        let p = Point::new(rng.random_range(0..100), rng.random_range(0..100));
        if seen.insert((p.x, p.y)) {
            points.push(p);
        }
    }
    let euclid = DistTable::from_fn(n, |u, v| points[u].dist(&points[v]));
    for (label, table) in [("uniform", uniform), ("euclidean", euclid)] {
        let metric =
            SpreadingMetric { table, objective: 0.0, feasibility_tol: 1e-9 };
        let mut total = 0.0f64;
        let mut count = 0u64;
        for seed in 0..100u64 {
            let hst = hst_build(&metric, seed);
            for u in 0..n {
                for v in u + 1..n {
                    let d = metric.table.get(u, v);
                    let df = hst.tree_dist(u, v);
                    assert!(df >= d - 1e-9, "{label} seed {seed}: pair ({u},{v}) shrank");
                    total += df / d;
                    count += 1;
                }
            }
        }
        let mean = total / count as f64;
        assert!(
            mean <= 8.0 * (n as f64).ln(),
            "{label}: mean stretch {mean} above the pinned logarithmic bound"
        );
    }
    passed(5, "tree embedding no-shrink on all pairs, mean stretch within 8 ln n");
}

#[test]
fn criterion_06_curve_order_stride_sums_stay_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut checked = 0usize;
    for _rep in 0..5 {
        for side in [4i64, 8, 16, 32, 64] {
            for density in [1.0f64, 0.5, 0.25, 0.0625] {
                let mut cells = grid_cells(side, 2);
                cells.shuffle(&mut rng);
                let take = ((cells.len() as f64 * density).round() as usize).max(1);
                let subset = &cells[..take];
                let order = subset_order(subset, None).unwrap();
                let m = order.points.len() as f64;
                for delta in 1..order.points.len() {
                    let bound = 16.0 * m * (delta as f64).sqrt();
                    let sum = stride_sum(&order.points, delta);
                    assert!(
                        sum <= bound + 1e-6,
                        "side {side} density {density} delta {delta}: {sum} > {bound}"
                    );
                }
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 100);
    passed(6, "curve stride sums below 16 |X| sqrt(delta) on 100 random subsets");
}

#[test]
fn criterion_07_bounded_pipeline_structural_validity() {
    for i in 0..100u64 {
        let side = 2 + (i as usize) % 7; // grids from 2x2 up to 8x8
        let n = side * side;
        let k = 1 + (i as usize * 7 + 3) % n.min(9);
        let m = n + (i as usize) % (n + 1);
        let inst = synth_bounded(n, k, m, 2, i);
        let (metric, _) = solve_lp_default(&inst).unwrap();
        let trial = bounded_trial(&inst, &metric, i ^ 0x5eed);

        // Bijection onto the grid extending the pins.
        trial.placement.validate(&inst).unwrap();

        // Regions partition the grid.
        let mut covered: BTreeSet<Point> = BTreeSet::new();
        for entry in &trial.regions {
            for c in &entry.cells {
                assert!(covered.insert(*c), "instance {i}: cell {c:?} carved twice");
            }
        }
        let grid: BTreeSet<Point> = grid_cells(side as i64, 2).into_iter().collect();
        assert_eq!(covered, grid, "instance {i}: regions must cover the grid");

        // Rank pieces partition each cluster ordering.
        for (ci, entry) in trial.plan.clusters.iter().enumerate() {
            let len = trial.orderings[ci].sequence.len();
            let mut cursor = 0usize;
            for &(s, e) in &entry.blocks {
                assert_eq!(s, cursor, "instance {i}: cluster {ci} pieces must tile");
                assert!(e > s);
                cursor = e;
            }
            assert_eq!(cursor, len);
        }

        // Each piece lands exactly on its carved region.
        for entry in &trial.regions {
            let (s, e) = trial.plan.clusters[entry.cluster].blocks[entry.block];
            let image: BTreeSet<Point> = trial.orderings[entry.cluster].sequence[s..e]
                .iter()
                .map(|&v| trial.placement.positions[v])
                .collect();
            let region: BTreeSet<Point> = entry.cells.iter().copied().collect();
            assert_eq!(image, region, "instance {i}: piece image != region");
        }
    }
    passed(7, "bounded pipeline bijections, piece images, and partitions on 100 instances");
}

#[test]
fn criterion_08_unbounded_and_inflated_pipeline_validity() {
    for i in 0..100u64 {
        let n = 6 + (i as usize) % 35;
        let k = 1 + (i as usize * 11 + 5) % n.min(10);
        let m = n + (i as usize) % (2 * n);
        let span = 6 + (i as i64) % 20;
        let inst = synth_unbounded(n, k, m, span, 2, i);
        let (metric, _) = solve_lp_default(&inst).unwrap();
        let trial = unbounded_trial(&inst, &metric, i * 31 + 7, i % 2 == 0);
        trial.placement.validate(&inst).unwrap();
        assert!(
            trial.remap_within_bound,
            "instance {i}: settling displaced a vertex {} beyond twice the stride",
            trial.max_remap_displacement,
        );
    }
    for (j, eps) in [(0u64, 0.25f64), (1, 0.5)] {
        for i in 0..10u64 {
            let n = 9 + (i as usize) * 3;
            let k = 1 + (i as usize) % 4;
            let inst = synth_eps(n, k, n + 5, eps, 2, 1000 + 20 * j + i);
            let p = place_eps_violation(&inst, eps, i, 2).unwrap();
            p.validate(&inst).unwrap();
            let side = eps_box_side(n, eps, 2);
            for q in &p.positions {
                assert!(
                    point_in_box(q, side, 2),
                    "eps={eps} instance {i}: {q:?} outside the inflated box of side {side}"
                );
            }
        }
    }
    passed(8, "unbounded injectivity, pins, settle bound; inflated image in its box");
}

#[test]
fn criterion_09_partition_witness_and_split_penalty() {
    let params = HardnessParams { a: vec![2; 6], b: 6, side: 25, spacing: 8 };
    let (inst, layout) = gen_3partition_bounded(&params).unwrap();
    let groups = [[0usize, 1, 2], [3, 4, 5]];
    let witness = partition_witness(&inst, &layout, &groups).unwrap();
    witness.validate(&inst).unwrap();

    let b = params.b as f64;
    let budget = groups.len() as f64 * (b - 3.0) * 4.0 * b.sqrt();
    assert!(witness.cost <= budget, "witness cost {} above {budget}", witness.cost);

    // Geometry: cells of different holes are far apart, so a star edge
    // spanning two holes is long.
    let split_bound = params.spacing as f64 - 2.0 * b.sqrt();
    assert!(split_bound > 0.0);
    for (hi, a) in layout.holes.iter().enumerate() {
        for bcells in layout.holes.iter().skip(hi + 1) {
            let closest = a
                .iter()
                .flat_map(|p| bcells.iter().map(move |q| p.dist(q)))
                .fold(f64::INFINITY, f64::min);
            assert!(
                closest >= split_bound,
                "holes {closest} apart, below the split penalty {split_bound}"
            );
        }
    }

    // And a concrete split placement pays that penalty on one edge.
    let mut split = witness.positions.clone();
    let leaf_a = layout.stars[0].leaves[0];
    let leaf_b = layout.stars[3].leaves[0];
    split.swap(leaf_a, leaf_b);
    let worst_unit_edge = inst
        .edges
        .iter()
        .filter(|e| e.w > 0.0)
        .map(|e| split[e.u].dist(&split[e.v]))
        .fold(0.0f64, f64::max);
    assert!(
        worst_unit_edge >= split_bound,
        "split placement's longest edge {worst_unit_edge} under {split_bound}"
    );
    passed(9, "witness placement within budget; split stars pay the hole separation");
}

#[test]
fn criterion_10_solver_output_is_byte_identical() {
    let run = |args: &[&str], stdin: &str| -> (i32, String) {
        let mut child = Command::new(env!("CARGO_BIN_EXE_dimap"))
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .expect("binary spawns");
        let _ = child.stdin.as_mut().unwrap().write_all(stdin.as_bytes());
        let out = child.wait_with_output().unwrap();
        (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
    };
    let cases: Vec<(String, Vec<&str>)> = vec![
        (
            fmt::serialize_instance(&synth_bounded(25, 6, 20, 2, 42)),
            vec!["solve", "--mode", "bounded", "--seed", "3", "--trials", "4"],
        ),
        (
            fmt::serialize_instance(&synth_unbounded(14, 4, 12, 9, 2, 42)),
            vec!["solve", "--mode", "unbounded", "--seed", "3", "--trials", "4"],
        ),
        (
            fmt::serialize_instance(&synth_eps(16, 4, 14, 0.5, 2, 42)),
            vec!["solve", "--mode", "eps", "--seed", "3", "--trials", "4"],
        ),
    ];
    for (text, args) in cases {
        let (code_a, out_a) = run(&args, &text);
        let (code_b, out_b) = run(&args, &text);
        assert_eq!(code_a, 0, "{args:?} failed");
        assert_eq!(code_b, 0);
        assert_eq!(out_a, out_b, "{args:?}: reruns must agree byte for byte");
        assert!(!out_a.is_empty());
    }
    passed(10, "repeat solve runs agree byte for byte in every mode");
}
