//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use ooskit::detectors::{score_groos, DetectorKind};
use ooskit::episodes::{
    few_shot_split, synth_radial, EmbeddingDataset, Episode, EpisodeConfig, Query, SupportExample,
};
use ooskit::geometry::{
    adjacency_witness, classify_cell, oos_core_contains, region_nonempty, viable_system, CellIndex,
    HalfSpaceSystem, RegionStatus, ViabilityMode, BOUNDARY_TOL,
};
use ooskit::metric::{euclidean_distance, AffineHead, ClassId, Point, PrototypeContext};
use ooskit::metrics::{aupr, auroc, collect_scores, evaluate, DetectorConfig, EvalConfig};
use ooskit::render::{
    cell_color, effective_context, pixel_center, render_decision_map, Bounds, BOUNDARY_COLOR,
};
use ooskit::rng::{stream, Purpose};
use ooskit::training::{
    episodic_loss, grad_episodic_loss, train, LossMode, TrainConfig, TrainMode,
};

fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec()).unwrap()
}

fn report(criterion: u32, name: &str, passed: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion} ({name}): {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// Criterion 1: geometry ground truth through the CLI.
// ---------------------------------------------------------------------------

fn run_geometry(args: &[&str]) -> serde_json::Value {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_ooskit"))
        .args(args)
        .output()
        .expect("spawn ooskit");
    assert!(
        output.status.success(),
        "geometry command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("geometry JSON")
}

#[test]
fn criterion_1_geometry_ground_truth() {
    let started = Instant::now();

    // Config (a): generic (1,0), class 1 at the origin, class 2 at (-1,0).
    let a = run_geometry(&[
        "geometry",
        "--check",
        "viable",
        "--mode",
        "generic",
        "--prototypes",
        "0,0;-1,0",
        "--gamma-oos",
        "1,0",
    ]);
    let results_a = a["results"].as_array().unwrap();
    let class2 = results_a.iter().find(|r| r["class"] == 2).unwrap();
    let a_ok = class2["status"] == "empty";

    // Config (b): generic at the origin, classes on the four axis points.
    let b = run_geometry(&[
        "geometry",
        "--check",
        "viable",
        "--mode",
        "generic",
        "--prototypes",
        "1,0;0,1;-1,0;0,-1",
        "--gamma-oos",
        "origin",
    ]);
    let results_b = b["results"].as_array().unwrap();
    // Per-class inequalities from the appendix example, class 1 being
    // x > 1/2, |y| < 1/2 and the rest its rotations.
    let expected: [(i64, Box<dyn Fn(f64, f64) -> bool>); 4] = [
        (1, Box::new(|x, y| x > 0.5 && y.abs() < 0.5)),
        (2, Box::new(|x, y| y > 0.5 && x.abs() < 0.5)),
        (3, Box::new(|x, y| x < -0.5 && y.abs() < 0.5)),
        (4, Box::new(|x, y| y < -0.5 && x.abs() < 0.5)),
    ];
    let mut b_ok = true;
    for (class, check) in &expected {
        let entry = results_b.iter().find(|r| r["class"] == *class).unwrap();
        if entry["status"] != "nonempty" {
            b_ok = false;
            continue;
        }
        let w = entry["witness"].as_array().unwrap();
        let (x, y) = (w[0].as_f64().unwrap(), w[1].as_f64().unwrap());
        b_ok &= check(x, y);
    }

    let elapsed = started.elapsed();
    let timed = elapsed.as_secs_f64() < 1.0;
    report(
        1,
        "geometry ground truth",
        a_ok && b_ok && timed,
        &format!(
            "config (a) class 2 empty: {a_ok}; config (b) all four nonempty with \
             in-bounds witnesses: {b_ok}; runtime {elapsed:?} < 1s: {timed}"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: geometry property suite over random configurations.
// ---------------------------------------------------------------------------

fn random_context(dim: usize, ways: usize, rng: &mut impl Rng) -> PrototypeContext {
    loop {
        let mut points: Vec<Point> = Vec::new();
        for _ in 0..=ways {
            points.push(
                Point::new(
                    (0..dim)
                        .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                )
                .unwrap(),
            );
        }
        let mut distinct = true;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if euclidean_distance(&points[i], &points[j]).unwrap() < 0.05 {
                    distinct = false;
                }
            }
        }
        if !distinct {
            continue;
        }
        let generic = points.pop().unwrap();
        let prototypes: BTreeMap<ClassId, Point> = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i + 1, p))
            .collect();
        return PrototypeContext::new(prototypes)
            .unwrap()
            .with_generic(generic)
            .unwrap();
    }
}

fn config_box(ctx: &PrototypeContext) -> Vec<(f64, f64)> {
    let mut points: Vec<&Point> = ctx.prototypes().values().collect();
    if let Some(g) = ctx.generic() {
        points.push(g);
    }
    let dim = ctx.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in &points {
        for (axis, &c) in p.coords().iter().enumerate() {
            lo[axis] = lo[axis].min(c);
            hi[axis] = hi[axis].max(c);
        }
    }
    let spread = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(1e-6_f64, f64::max);
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| (l - 2.0 * spread, h + 2.0 * spread))
        .collect()
}

fn uniform_point(bounds: &[(f64, f64)], rng: &mut impl Rng) -> Point {
    Point::new(
        bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect(),
    )
    .unwrap()
}

fn strict_ordering_holds(x: &Point, ctx: &PrototypeContext, ordering: &[CellIndex]) -> bool {
    let dist = |idx: &CellIndex| match idx {
        CellIndex::Class(c) => euclidean_distance(x, &ctx.prototypes()[c]).unwrap(),
        CellIndex::Generic => euclidean_distance(x, ctx.generic().unwrap()).unwrap(),
    };
    ordering.windows(2).all(|w| dist(&w[0]) < dist(&w[1]))
}

fn segment_point(a: &Point, b: &Point, t: f64) -> Point {
    Point::new(
        a.coords()
            .iter()
            .zip(b.coords())
            .map(|(x, y)| x + t * (y - x))
            .collect(),
    )
    .unwrap()
}

#[test]
fn criterion_2_geometry_property_suite() {
    let started = Instant::now();
    let mut configs = 0usize;
    let mut boundary_hits = 0usize;
    let mut broken_orderings = 0usize;
    let mut relabel_mismatches = 0usize;
    let mut standard_empty = 0usize;
    let mut witness_failures = 0usize;
    let mut nonempty_regions = 0usize;
    let mut same_side_failures = 0usize;
    let mut witness_segment_failures = 0usize;

    for (case, &dim) in [2usize, 5]
        .iter()
        .flat_map(|d| std::iter::repeat(d).take(60))
        .enumerate()
    {
        let mut rng = stream(2024, Purpose::GeometryCheck, case as u64);
        let ways = rng.random_range(2..=5);
        let ctx = random_context(dim, ways, &mut rng);
        let bounds = config_box(&ctx);
        configs += 1;

        // Partition: every off-boundary point realizes exactly one strict
        // distance ordering, stable under class relabeling.
        for sample in 0..10_000 {
            let x = uniform_point(&bounds, &mut rng);
            let label = classify_cell(&x, &ctx, 1e-12).unwrap();
            if label.on_boundary {
                boundary_hits += 1;
                continue;
            }
            if !strict_ordering_holds(&x, &ctx, &label.ordering) || label.ordering.len() != ways + 1
            {
                broken_orderings += 1;
            }
            if sample < 3 {
                // Relabel classes in reverse and check the ordering maps over.
                let relabeled: BTreeMap<ClassId, Point> = ctx
                    .prototypes()
                    .iter()
                    .map(|(&c, p)| (1000 - c, p.clone()))
                    .collect();
                let rctx = PrototypeContext::new(relabeled)
                    .unwrap()
                    .with_generic(ctx.generic().unwrap().clone())
                    .unwrap();
                let rlabel = classify_cell(&x, &rctx, 1e-12).unwrap();
                let mapped: Vec<CellIndex> = label
                    .ordering
                    .iter()
                    .map(|idx| match idx {
                        CellIndex::Class(c) => CellIndex::Class(1000 - c),
                        CellIndex::Generic => CellIndex::Generic,
                    })
                    .collect();
                if rlabel.ordering != mapped {
                    relabel_mismatches += 1;
                }
            }
        }

        // Totality: standard-mode viable regions are never empty.
        for class in ctx.class_ids() {
            let sys = viable_system(class, &ctx, ViabilityMode::Standard).unwrap();
            if !region_nonempty(&sys).unwrap().is_nonempty() {
                standard_empty += 1;
            }
        }

        // Core adjacency: nonempty generic-mode regions admit a witness
        // whose segment satisfies the double inequality (class first, then
        // generic, then everything else) up to the crossing, and sits
        // inside the OOS core beyond it.
        for class in ctx.class_ids() {
            let sys = viable_system(class, &ctx, ViabilityMode::Generic).unwrap();
            let RegionStatus::Nonempty(x) = region_nonempty(&sys).unwrap() else {
                continue;
            };
            nonempty_regions += 1;
            let Ok(witness) = adjacency_witness(&x, class, &ctx) else {
                witness_failures += 1;
                continue;
            };
            let z = &witness.boundary_point;
            let generic = ctx.generic().unwrap();
            let target = &ctx.prototypes()[&class];
            // [x, z): strictly class-first, generic second.
            for step in 0..20 {
                let w = segment_point(&x, z, step as f64 / 20.0 * 0.98);
                let d_i = euclidean_distance(&w, target).unwrap();
                let d_oos = euclidean_distance(&w, generic).unwrap();
                let mut ok = d_i < d_oos;
                for (&other, proto) in ctx.prototypes() {
                    if other != class {
                        ok &= d_oos < euclidean_distance(&w, proto).unwrap();
                    }
                }
                if !ok {
                    witness_segment_failures += 1;
                }
            }
            // (z, generic]: strictly inside the OOS core.
            for step in 1..=20 {
                let w = segment_point(z, generic, 0.02 + step as f64 / 20.0 * 0.98);
                if !oos_core_contains(&w, &ctx).unwrap() {
                    witness_segment_failures += 1;
                }
            }
        }

        // Half-space convexity: segments between same-side points stay on
        // that side; from a point exactly on the plane, interior points are
        // strictly on the other endpoint's side.
        let slots: Vec<&Point> = ctx.prototypes().values().chain(ctx.generic()).collect();
        for _ in 0..5 {
            let i = rng.random_range(0..slots.len());
            let mut j = rng.random_range(0..slots.len());
            while j == i {
                j = rng.random_range(0..slots.len());
            }
            let (gi, gj) = (slots[i], slots[j]);
            let side =
                |p: &Point| euclidean_distance(p, gi).unwrap() - euclidean_distance(p, gj).unwrap();
            let mut x = uniform_point(&bounds, &mut rng);
            let mut y = uniform_point(&bounds, &mut rng);
            for _ in 0..50 {
                if side(&x) < -1e-9 {
                    break;
                }
                x = uniform_point(&bounds, &mut rng);
            }
            for _ in 0..50 {
                if side(&y) < -1e-9 {
                    break;
                }
                y = uniform_point(&bounds, &mut rng);
            }
            if side(&x) < -1e-9 && side(&y) < -1e-9 {
                for step in 0..=20 {
                    let z = segment_point(&x, &y, step as f64 / 20.0);
                    if side(&z) >= 0.0 {
                        same_side_failures += 1;
                    }
                }
                // Midpoint of the pair sits on the bisector exactly.
                let mid = segment_point(gi, gj, 0.5);
                for step in 1..=20 {
                    let z = segment_point(&mid, &y, step as f64 / 20.0);
                    if side(&z) >= 0.0 {
                        same_side_failures += 1;
                    }
                }
            }
        }
    }

    let elapsed = started.elapsed();
    let ok = boundary_hits == 0
        && broken_orderings == 0
        && relabel_mismatches == 0
        && standard_empty == 0
        && witness_failures == 0
        && nonempty_regions > 0
        && same_side_failures == 0
        && witness_segment_failures == 0
        && elapsed.as_secs_f64() < 60.0;
    report(
        2,
        "geometry property suite",
        ok,
        &format!(
            "{configs} configs; boundary hits {boundary_hits}; broken orderings \
             {broken_orderings}; relabel mismatches {relabel_mismatches}; empty standard \
             regions {standard_empty}; witness failures {witness_failures}/{nonempty_regions} \
             nonempty; same-side segment failures {same_side_failures}; witness segment \
             failures {witness_segment_failures}; runtime {elapsed:?} < 60s"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: oracle equivalence for the metrics and the LP.
// ---------------------------------------------------------------------------

fn auroc_brute(scores: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut total = 0.0;
    for &p in &pos {
        for &n in &neg {
            total += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    total / (pos.len() as f64 * neg.len() as f64)
}

fn aupr_brute(scores: &[(f64, bool)]) -> f64 {
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let total_pos = sorted.iter().filter(|s| s.1).count() as f64;
    let (mut ap, mut seen, mut tp, mut i) = (0.0, 0.0, 0.0, 0);
    while i < sorted.len() {
        let mut j = i;
        let mut block_tp = 0.0;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 {
                block_tp += 1.0;
            }
            j += 1;
        }
        seen += (j - i) as f64;
        tp += block_tp;
        ap += (tp / seen) * (block_tp / total_pos);
        i = j;
    }
    ap
}

/// 400x400 scan over the configuration box; returns a strictly feasible
/// grid point when one exists.
fn grid_oracle(sys: &HalfSpaceSystem, bounds: &[(f64, f64)]) -> Option<Vec<f64>> {
    let n = 400;
    for iy in 0..n {
        for ix in 0..n {
            let x = bounds[0].0 + (ix as f64 + 0.5) / n as f64 * (bounds[0].1 - bounds[0].0);
            let y = bounds[1].0 + (iy as f64 + 0.5) / n as f64 * (bounds[1].1 - bounds[1].0);
            if sys.contains(&[x, y]) {
                return Some(vec![x, y]);
            }
        }
    }
    None
}

#[test]
fn criterion_3_oracle_equivalence() {
    let started = Instant::now();

    // Exact metrics vs O(m^2) brute force, with plenty of ties.
    let mut metric_failures = 0usize;
    for case in 0..200u64 {
        let mut rng = stream(3033, Purpose::GeometryCheck, case);
        let m = rng.random_range(2..=500);
        let mut scores: Vec<(f64, bool)> = (0..m)
            .map(|_| {
                let s = (rng.random_range(0..80) as f64) / 8.0;
                (s, rng.random_range(0..2) == 0)
            })
            .collect();
        if !scores.iter().any(|s| s.1) {
            scores[0].1 = true;
        }
        if scores.iter().all(|s| s.1) {
            scores[0].1 = false;
        }
        if (auroc(&scores).unwrap() - auroc_brute(&scores)).abs() > 1e-9
            || (aupr(&scores).unwrap() - aupr_brute(&scores)).abs() > 1e-9
        {
            metric_failures += 1;
        }
    }

    // LP feasibility vs the dense grid scan on random 2-D systems.
    let mut lp_disagreements = 0usize;
    let mut lp_bad_witness = 0usize;
    for case in 0..50u64 {
        let mut rng = stream(3434, Purpose::GeometryCheck, 1000 + case);
        let ways = rng.random_range(2..=5);
        let ctx = random_context(2, ways, &mut rng);
        let class = 1 + (case as usize % ways);
        let mode = if case % 2 == 0 {
            ViabilityMode::Generic
        } else {
            ViabilityMode::Standard
        };
        let sys = viable_system(class, &ctx, mode).unwrap();
        let bounds = config_box(&ctx);
        let grid = grid_oracle(&sys, &bounds);
        match region_nonempty(&sys).unwrap() {
            RegionStatus::Nonempty(w) => {
                if !sys.contains(w.coords()) {
                    lp_bad_witness += 1;
                }
                if grid.is_none() {
                    lp_disagreements += 1;
                }
            }
            RegionStatus::Empty => {
                if grid.is_some() {
                    lp_disagreements += 1;
                }
            }
        }
    }

    let elapsed = started.elapsed();
    let ok = metric_failures == 0
        && lp_disagreements == 0
        && lp_bad_witness == 0
        && elapsed.as_secs_f64() < 30.0;
    report(
        3,
        "oracle equivalence",
        ok,
        &format!(
            "metric mismatches {metric_failures}/200; LP/grid disagreements \
             {lp_disagreements}/50; invalid LP witnesses {lp_bad_witness}; \
             runtime {elapsed:?} < 30s"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: analytic gradients vs central finite differences.
// ---------------------------------------------------------------------------

fn random_episode(dim: usize, seed: u64) -> Episode {
    let mut rng = stream(seed, Purpose::GeometryCheck, 40_000);
    let mut point = |scale: f64| -> Point {
        Point::new(
            (0..dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
        .unwrap()
    };
    let mut support = BTreeMap::new();
    let mut queries = Vec::new();
    let mut c_in = std::collections::BTreeSet::new();
    for c in 0..2 {
        c_in.insert(c);
        let center = point(2.0);
        support.insert(
            c,
            (0..2)
                .map(|i| SupportExample {
                    id: format!("s{c}-{i}"),
                    point: center.translated(point(0.6).coords()),
                })
                .collect(),
        );
        for i in 0..2 {
            queries.push(Query {
                id: format!("q{c}-{i}"),
                point: center.translated(point(0.6).coords()),
                true_label: c,
                is_oos: false,
            });
        }
    }
    for i in 0..2 {
        queries.push(Query {
            id: format!("o-{i}"),
            point: point(2.5),
            true_label: 7,
            is_oos: true,
        });
    }
    Episode {
        support,
        queries,
        c_in,
        c_out: std::collections::BTreeSet::from([7]),
    }
}

fn random_head(dim: usize, seed: u64) -> AffineHead {
    let mut rng = stream(seed, Purpose::GeometryCheck, 41_000);
    let weight: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    (if i == j { 1.0 } else { 0.0 }) + 0.25 * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        })
        .collect();
    let bias = (0..dim)
        .map(|_| 0.25 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    AffineHead::new(weight, bias).unwrap()
}

fn head_from_flat(dim: usize, flat: &[f64]) -> AffineHead {
    let weight: Vec<Vec<f64>> = (0..dim)
        .map(|i| flat[i * dim..(i + 1) * dim].to_vec())
        .collect();
    AffineHead::new(weight, flat[dim * dim..].to_vec()).unwrap()
}

#[test]
fn criterion_4_gradient_checks() {
    let started = Instant::now();
    let dim = 3;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for instance in 0..20u64 {
        let episode = random_episode(dim, 500 + instance);
        let head = random_head(dim, 600 + instance);
        let modes = [
            LossMode::Standard,
            LossMode::Groos {
                generic: pt(&[0.3, -0.2, 0.1]),
            },
            LossMode::Background {
                background: 1.0 + 0.1 * instance as f64,
            },
        ];
        for mode in modes {
            let (_, grad) = grad_episodic_loss(&episode, &head, &mode, false).unwrap();
            let analytic: Vec<f64> = grad
                .weight
                .iter()
                .flatten()
                .chain(&grad.bias)
                .copied()
                .collect();
            let mut theta: Vec<f64> = head
                .weight()
                .iter()
                .flatten()
                .chain(head.bias())
                .copied()
                .collect();
            let h = 1e-5;
            let mut numeric = vec![0.0; theta.len()];
            for i in 0..theta.len() {
                let keep = theta[i];
                theta[i] = keep + h;
                let up = episodic_loss(&episode, &head_from_flat(dim, &theta), &mode)
                    .unwrap()
                    .0;
                theta[i] = keep - h;
                let down = episodic_loss(&episode, &head_from_flat(dim, &theta), &mode)
                    .unwrap()
                    .0;
                theta[i] = keep;
                numeric[i] = (up - down) / (2.0 * h);
            }
            let rel = analytic
                .iter()
                .zip(&numeric)
                .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
                .fold(0.0_f64, f64::max);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    let ok = worst <= 1e-5 && checked == 60 && elapsed.as_secs_f64() < 30.0;
    report(
        4,
        "gradient checks",
        ok,
        &format!(
            "{checked} instance/mode checks; max relative error {worst:.3e} <= 1e-5; \
             runtime {elapsed:?} < 30s"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6: end-to-end synthetic detection and translation behavior.
// ---------------------------------------------------------------------------

const DATA_SEED: u64 = 20250810;
const SPLIT_SEED: u64 = 101;
const TRAIN_SEED: u64 = 13;
const EVAL_SEED: u64 = 77;

fn criterion5_data() -> (EmbeddingDataset, EmbeddingDataset) {
    let ds = synth_radial(12, 8, 4.0, 0.5, 200, DATA_SEED).unwrap();
    few_shot_split(&ds, 0.5, SPLIT_SEED).unwrap()
}

fn eval_cfg() -> EvalConfig {
    EvalConfig {
        episodes: 1000,
        shape: EpisodeConfig::default(),
        seed: EVAL_SEED,
        per_episode: false,
    }
}

#[test]
fn criterion_5_end_to_end_synthetic() {
    let started = Instant::now();
    let (train_ds, test_ds) = criterion5_data();
    assert_eq!(train_ds.num_classes(), 6);
    assert_eq!(test_ds.num_classes(), 6);

    let cfg = TrainConfig::new(TrainMode::Groos, 5000, TRAIN_SEED);
    let outcome = train(&train_ds, &cfg).unwrap();
    let groos = DetectorConfig::Groos {
        generic: Point::origin(8),
    };
    let trained = evaluate(&test_ds, &groos, &outcome.head, &eval_cfg()).unwrap();
    let (groos_auroc, groos_aupr) = (trained.auroc_x100.unwrap(), trained.aupr_x100.unwrap());

    let untrained = evaluate(
        &test_ds,
        &DetectorConfig::MinDist,
        &AffineHead::identity(8),
        &eval_cfg(),
    )
    .unwrap();
    let mindist_auroc = untrained.auroc_x100.unwrap();

    // Re-runs are bit-identical: training and evaluation both reproduce.
    let outcome2 = train(&train_ds, &cfg).unwrap();
    let trained2 = evaluate(&test_ds, &groos, &outcome2.head, &eval_cfg()).unwrap();
    let reproducible =
        outcome.losses == outcome2.losses && outcome.head == outcome2.head && trained == trained2;

    let elapsed = started.elapsed();
    let ok = groos_auroc >= 95.0
        && groos_aupr >= 95.0
        && mindist_auroc >= 80.0
        && reproducible
        && elapsed.as_secs_f64() < 600.0;
    report(
        5,
        "end-to-end synthetic detection",
        ok,
        &format!(
            "trained GROOS auroc_x100 {groos_auroc:.2} >= 95, aupr_x100 {groos_aupr:.2} >= 95; \
             untrained MinDist auroc_x100 {mindist_auroc:.2} >= 80; bit-identical re-runs: \
             {reproducible}; runtime {elapsed:?} < 10min"
        ),
    );
}

#[test]
fn criterion_6_centered_groos_invariance() {
    let (_, test_ds) = criterion5_data();
    let head = AffineHead::identity(8);
    let cfg = eval_cfg();

    let mut rng = stream(4242, Purpose::GeometryCheck, 1);
    let shift: Vec<f64> = (0..8).map(|_| 2.0 * rng.random_range(-1.0..1.0)).collect();
    let moved = test_ds.translated(&shift).unwrap();

    // Centered scores: episode sampling is keyed by (seed, index) and
    // ignores coordinates, so queries line up one-to-one.
    let centered = DetectorConfig::CenteredGroos;
    let base_scores = collect_scores(&test_ds, &centered, &head, &cfg).unwrap();
    let moved_scores = collect_scores(&moved, &centered, &head, &cfg).unwrap();
    let max_delta = base_scores
        .iter()
        .zip(&moved_scores)
        .map(|(a, b)| (a.score - b.score).abs())
        .fold(0.0_f64, f64::max);

    let groos = DetectorConfig::Groos {
        generic: Point::origin(8),
    };
    let base = evaluate(&test_ds, &groos, &head, &cfg).unwrap();
    let after = evaluate(&moved, &groos, &head, &cfg).unwrap();
    let auroc_shift = (base.auroc_x100.unwrap() - after.auroc_x100.unwrap()).abs();

    let ok = max_delta < 1e-9 && auroc_shift > 0.1;
    report(
        6,
        "centered GROOS invariance",
        ok,
        &format!(
            "max centered score change {max_delta:.3e} < 1e-9; fixed-origin GROOS \
             auroc_x100 moved {auroc_shift:.3} > 0.1 ({:.2} -> {:.2})",
            base.auroc_x100.unwrap(),
            after.auroc_x100.unwrap()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: decision-map smoke test.
// ---------------------------------------------------------------------------

fn axis_cross_context() -> PrototypeContext {
    let prototypes: BTreeMap<ClassId, Point> = [
        (1, pt(&[1.0, 0.0])),
        (2, pt(&[0.0, 1.0])),
        (3, pt(&[-1.0, 0.0])),
        (4, pt(&[0.0, -1.0])),
    ]
    .into_iter()
    .collect();
    PrototypeContext::new(prototypes)
        .unwrap()
        .with_generic(pt(&[0.0, 0.0]))
        .unwrap()
}

#[test]
fn criterion_7_decision_map_smoke() {
    let ctx = axis_cross_context();
    let mode = ViabilityMode::Generic;
    let bounds = Bounds::new(-2.0, -2.0, 2.0, 2.0).unwrap();
    let (width, height) = (512usize, 512usize);
    let image = render_decision_map(&ctx, mode, &bounds, width, height).unwrap();

    // PPM bytes round-trip through the documented header.
    let ppm = image.ppm_bytes();
    let header = format!("P6\n{width} {height}\n255\n");
    assert!(ppm.starts_with(header.as_bytes()));
    assert_eq!(ppm.len(), header.len() + width * height * 3);

    // Re-derive the expected color of 1000 random pixels from classify_cell
    // (base color plus right/down boundary overdraw) and demand exact
    // agreement with the rendered raster.
    let eff = effective_context(&ctx, mode).unwrap();
    let ranks: Vec<ClassId> = eff.class_ids().collect();
    let label_at = |px: usize, py: usize| {
        classify_cell(
            &pixel_center(&bounds, width, height, px, py),
            &eff,
            BOUNDARY_TOL,
        )
        .unwrap()
    };
    let mut rng = stream(7007, Purpose::GeometryCheck, 2);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let px = rng.random_range(0..width);
        let py = rng.random_range(0..height);
        let label = label_at(px, py);
        let boundary = (px + 1 < width && label_at(px + 1, py).ordering != label.ordering)
            || (py + 1 < height && label_at(px, py + 1).ordering != label.ordering);
        let expected = if boundary {
            BOUNDARY_COLOR
        } else {
            cell_color(&label, mode, &ranks)
        };
        if image.pixel(px, py) != expected {
            mismatches += 1;
        }
    }

    // Saturated (viable) pixels exist for all four classes.
    let mut saturated = [0usize; 4];
    for py in 0..height {
        for px in 0..width {
            let c = image.pixel(px, py);
            for rank in 0..4 {
                if c == ooskit::render::class_color(rank, true) {
                    saturated[rank] += 1;
                }
            }
        }
    }
    let all_viable_present = saturated.iter().all(|&n| n > 0);

    let ok = mismatches == 0 && all_viable_present;
    report(
        7,
        "decision-map smoke test",
        ok,
        &format!(
            "pixel mismatches {mismatches}/1000; saturated viable pixels per class \
             {saturated:?} (all nonempty: {all_viable_present})"
        ),
    );
}

// ---------------------------------------------------------------------------
// Cross-check retained from the detector contract: the canonical score of a
// groos detector is exactly what the evaluation pipeline pools.
// ---------------------------------------------------------------------------

#[test]
fn canonical_scores_match_direct_scoring() {
    let (_, test_ds) = criterion5_data();
    let head = AffineHead::identity(8);
    let cfg = EvalConfig {
        episodes: 3,
        shape: EpisodeConfig::default(),
        seed: EVAL_SEED,
        per_episode: false,
    };
    let generic = Point::origin(8);
    let detector = DetectorConfig::Groos {
        generic: generic.clone(),
    };
    let scored = collect_scores(&test_ds, &detector, &head, &cfg).unwrap();
    assert_eq!(scored.len(), 3 * 80);
    // Spot-check one episode by rebuilding its context manually.
    let episode = ooskit::episodes::sample_episode(&test_ds, &cfg.shape, cfg.seed, 0).unwrap();
    let ctx = PrototypeContext::from_support(&episode.support_points())
        .unwrap()
        .with_generic(generic)
        .unwrap();
    for (q, s) in episode.queries.iter().zip(&scored) {
        let direct = score_groos(&q.point, &ctx).unwrap();
        assert!((direct - s.raw_score).abs() < 1e-12);
        assert_eq!(s.is_oos, q.is_oos);
        assert_eq!(
            s.score,
            ooskit::detectors::canonical_score(DetectorKind::Groos, s.raw_score)
        );
    }
}
