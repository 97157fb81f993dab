//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report lines always reach stdout.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use alseg_core::interpolation::{
    all_foreground_cap, block_interpolation_dice, euclidean_distance_transform, interpolate_signed_distance,
    signed_distance_map, BinaryMask, InterpolationMethod,
};
use alseg_core::learner::{compute_loss, FeatureGrid, LossKind, ModelState, ProbabilityMap, TrainingSample};
use alseg_core::pool::{BlockRef, PoolEvent, PoolState, PseudoLabel, SliceId};
use alseg_core::simulation::{run_active_learning, ALConfig, PreparedDataset, RunOptions};
use alseg_core::strategies::{
    cluster_quotas, mean_shift, score_entropy, score_least_confidence, select_distance_representative,
    select_strided_blocks, select_top_uncertain, uncertainty_alpha, BlockScoring, SliceScore, StrategySpec,
    StridedPhase, StridedPick, DEFAULT_BANDWIDTH,
};
use alseg_core::synthetic::{make_synthetic_dataset, SyntheticSpec};
use alseg_core::volume::LabelMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<f64, String> {
    let secs = start.elapsed().as_secs_f64();
    check!(secs < limit.as_secs_f64(), "took {secs:.1} s, limit {} s", limit.as_secs());
    Ok(secs)
}

// ---- 1: formula oracles ----

fn random_map(rng: &mut ChaCha8Rng, mode: LabelMode) -> (Vec<Vec<Vec<f64>>>, ProbabilityMap) {
    let (h, w) = (rng.random_range(1..=4), rng.random_range(1..=4));
    let classes = match mode {
        LabelMode::MultiLabel => rng.random_range(1..=3),
        LabelMode::SingleLabel => rng.random_range(2..=3),
    };
    let alpha = uncertainty_alpha(mode, classes);
    // p[c][i][j]
    let mut p = vec![vec![vec![0.0; w]; h]; classes];
    for i in 0..h {
        for j in 0..w {
            match mode {
                LabelMode::MultiLabel => {
                    for plane in p.iter_mut() {
                        plane[i][j] = if rng.random_bool(0.1) { alpha } else { rng.random() };
                    }
                }
                LabelMode::SingleLabel => {
                    if rng.random_bool(0.1) {
                        for plane in p.iter_mut() {
                            plane[i][j] = alpha;
                        }
                    } else {
                        let e: Vec<f64> = (0..classes).map(|_| rng.random_range(-4.0f64..4.0).exp()).collect();
                        let total: f64 = e.iter().sum();
                        for (plane, v) in p.iter_mut().zip(&e) {
                            plane[i][j] = v / total;
                        }
                    }
                }
            }
        }
    }
    let values = p.iter().flatten().flatten().copied().collect();
    (p, ProbabilityMap::new(classes, h, w, values))
}

fn top_uncertain_oracle(scores: &[SliceScore], k: usize) -> Vec<SliceId> {
    // round r holds every scan's r-th best slice; rounds are served in order,
    // each by descending score
    let mut by_scan: BTreeMap<&str, Vec<&SliceScore>> = BTreeMap::new();
    for s in scores {
        by_scan.entry(&s.slice.scan_id).or_default().push(s);
    }
    let mut ranked = Vec::new();
    for list in by_scan.values_mut() {
        list.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.slice.cmp(&b.slice)));
        ranked.extend(list.iter().enumerate().map(|(r, s)| (r, *s)));
    }
    ranked.sort_by(|(ra, a), (rb, b)| {
        ra.cmp(rb)
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| a.slice.cmp(&b.slice))
    });
    ranked.into_iter().take(k).map(|(_, s)| s.slice.clone()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in 0..500 {
        let mode = if n % 2 == 0 { LabelMode::SingleLabel } else { LabelMode::MultiLabel };
        let (p, map) = random_map(&mut rng, mode);
        let alpha = uncertainty_alpha(mode, p.len());
        let (mut lc, mut ent) = (0.0, 0.0);
        for plane in &p {
            for row in plane {
                for &v in row {
                    let d: f64 = (alpha - v).abs();
                    lc -= d;
                    if d > 0.0 {
                        ent += d * d.ln();
                    }
                }
            }
        }
        let e1 = (score_least_confidence(&map, alpha) - lc).abs();
        let e2 = (score_entropy(&map, alpha) - ent).abs();
        worst = worst.max(e1).max(e2);
        check!(e1 <= 1e-9 && e2 <= 1e-9, "map {n}: least confidence off by {e1:e}, entropy off by {e2:e}");
    }
    for n in 0..500 {
        let scans = rng.random_range(1..=4);
        let mut scores = Vec::new();
        for s in 0..scans {
            for z in 0..rng.random_range(0..=6) {
                // coarse grid so ties occur
                let score = -(rng.random_range(0..8) as f64) / 4.0;
                scores.push(SliceScore { slice: SliceId::new(format!("scan{s}"), z), score });
            }
        }
        let k = rng.random_range(0..=scores.len());
        let got = select_top_uncertain(&scores, k).map_err(|e| e.to_string())?;
        check!(got == top_uncertain_oracle(&scores, k), "selection instance {n} (k = {k}) differs");
    }
    let secs = within(Duration::from_secs(5), start)?;
    Ok(format!("500 maps max error {worst:.1e}, 500 selections exact, {secs:.2} s"))
}

// ---- 2: EDT ----

fn brute_edt(mask: &BinaryMask) -> Vec<f64> {
    let (h, w) = mask.shape();
    let background: Vec<(i64, i64)> = (0..h * w)
        .filter(|&p| !mask.data()[p])
        .map(|p| ((p / w) as i64, (p % w) as i64))
        .collect();
    (0..h * w)
        .map(|p| {
            if !mask.data()[p] {
                return 0.0;
            }
            if background.is_empty() {
                return all_foreground_cap(h, w);
            }
            let (r, c) = ((p / w) as i64, (p % w) as i64);
            let best = background.iter().map(|&(br, bc)| (br - r).pow(2) + (bc - c).pow(2)).min().unwrap();
            (best as f64).sqrt()
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    for bits in 0u32..512 {
        let mask = BinaryMask::new(3, 3, (0..9).map(|i| bits >> i & 1 == 1).collect());
        check!(
            euclidean_distance_transform(&mask).values() == &brute_edt(&mask)[..],
            "3x3 mask {bits:09b} differs"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 0..1000 {
        let density = rng.random_range(0.05..0.95);
        let mask = BinaryMask::new(8, 8, (0..64).map(|_| rng.random_bool(density)).collect());
        check!(
            euclidean_distance_transform(&mask).values() == &brute_edt(&mask)[..],
            "random 8x8 mask {n} differs"
        );
    }
    let secs = within(Duration::from_secs(10), start)?;
    Ok(format!("512 exhaustive 3x3 + 1000 random 8x8 exact, {secs:.2} s"))
}

// ---- 3: signed distance ----

fn random_mask(rng: &mut ChaCha8Rng, h: usize, w: usize) -> BinaryMask {
    let density = rng.random_range(0.0..1.0);
    BinaryMask::new(h, w, (0..h * w).map(|_| rng.random_bool(density)).collect())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 0..500 {
        let (h, w) = (rng.random_range(1..=12), rng.random_range(1..=12));
        let a = random_mask(&mut rng, h, w);
        let b = random_mask(&mut rng, h, w);
        let d = signed_distance_map(&a);
        check!(
            d.values().iter().zip(a.data()).all(|(&v, &fg)| (v > 0.0) == fg),
            "mask {n}: sign disagrees with membership"
        );
        let k = rng.random_range(1..=4);
        let same = interpolate_signed_distance(&a, &a, k).map_err(|e| e.to_string())?;
        check!(same.iter().all(|m| *m == a), "mask {n}: identical endpoints not reproduced");
        let forward = interpolate_signed_distance(&a, &b, k).map_err(|e| e.to_string())?;
        let mut backward = interpolate_signed_distance(&b, &a, k).map_err(|e| e.to_string())?;
        backward.reverse();
        check!(forward == backward, "mask {n}: swapping endpoints is not the reversed sequence");
    }
    Ok(format!("500 masks: sign, identity and swap symmetry hold, {:.2} s", start.elapsed().as_secs_f64()))
}

// ---- 4: concentric circles ----

fn criterion_4() -> Outcome {
    let disc = |r: f64| {
        BinaryMask::from_fn(32, 32, |y, x| {
            let (dy, dx) = (y as f64 - 16.0, x as f64 - 16.0);
            dy * dy + dx * dx <= r * r
        })
    };
    let slices = interpolate_signed_distance(&disc(4.0), &disc(8.0), 3).map_err(|e| e.to_string())?;
    let radii: Vec<f64> = slices.iter().map(|m| (m.count() as f64 / std::f64::consts::PI).sqrt()).collect();
    for (r, want) in radii.iter().zip([5.0, 6.0, 7.0]) {
        check!((r - want).abs() <= 1.0, "equivalent radii {radii:.3?}, expected 5, 6, 7 within 1.0");
    }
    Ok(format!("equivalent radii {:.3} {:.3} {:.3}", radii[0], radii[1], radii[2]))
}

// ---- 5: block-size trend ----

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let data = make_synthetic_dataset(&SyntheticSpec::standard(), 42).map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for l in [5, 10, 15] {
        let per_scan: Vec<Vec<f64>> = data
            .par_iter()
            .map(|(_, labels)| block_interpolation_dice(labels, l, InterpolationMethod::SignedDistance))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let all: Vec<f64> = per_scan.into_iter().flatten().collect();
        check!(!all.is_empty(), "no pseudo-labels at l = {l}");
        means.push(all.iter().sum::<f64>() / all.len() as f64);
    }
    let (d5, d10, d15) = (means[0], means[1], means[2]);
    check!(d5 >= d10 && d10 >= d15 - 0.02, "Dice(5) {d5:.4}, Dice(10) {d10:.4}, Dice(15) {d15:.4}");
    let secs = within(Duration::from_secs(120), start)?;
    Ok(format!("Dice(5) {d5:.4} >= Dice(10) {d10:.4} >= Dice(15) {d15:.4} - 0.02, {secs:.1} s"))
}

// ---- 6: gradient check ----

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut focal_gap: f64 = 0.0;
    for n in 0..50 {
        let mode = if n % 2 == 0 { LabelMode::SingleLabel } else { LabelMode::MultiLabel };
        let classes = rng.random_range(2..=3);
        let pixels = rng.random_range(1..=4);
        let mut model = ModelState::new(8, 4, classes, mode, rng.random());
        let params: Vec<f64> = model.params().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        model.set_params(params.clone());
        let grid = FeatureGrid::new(8, 1, pixels, (0..8 * pixels).map(|_| rng.random_range(-1.0..1.0)).collect());
        let mask: Vec<u8> = (0..pixels).map(|_| rng.random_range(0..classes as u8)).collect();
        let sample = [TrainingSample { features: &grid, mask: &mask, weight: 1.0 }];
        let loss_at = |p: &[f64], kind, gamma| {
            let mut m = model.clone();
            m.set_params(p.to_vec());
            m.loss_and_gradient(&sample, kind, gamma).map(|r| r.0)
        };
        for (kind, gamma) in [
            (LossKind::Focal, 0.0),
            (LossKind::Focal, 2.0),
            (LossKind::Focal, 5.0),
            (LossKind::CrossEntropy, 0.0),
            (LossKind::Dice, 0.0),
        ] {
            let (_, grad) = model.loss_and_gradient(&sample, kind, gamma).map_err(|e| e.to_string())?;
            for i in 0..params.len() {
                let mut up = params.clone();
                up[i] += h;
                let mut down = params.clone();
                down[i] -= h;
                let numeric = (loss_at(&up, kind, gamma).map_err(|e| e.to_string())?
                    - loss_at(&down, kind, gamma).map_err(|e| e.to_string())?)
                    / (2.0 * h);
                let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
                check!(rel < 1e-4, "instance {n}, {kind:?} gamma {gamma}, param {i}: relative error {rel:e}");
            }
        }
        let probs = model.predict_proba(&grid).map_err(|e| e.to_string())?;
        let focal = compute_loss(LossKind::Focal, &probs, &mask, 0.0, mode).map_err(|e| e.to_string())?;
        let ce = compute_loss(LossKind::CrossEntropy, &probs, &mask, 0.0, mode).map_err(|e| e.to_string())?;
        focal_gap = focal_gap.max((focal - ce).abs());
        check!((focal - ce).abs() <= 1e-6, "instance {n}: focal(0) {focal} vs cross-entropy {ce}");
    }
    Ok(format!("50 instances, max relative error {worst:.1e}, |focal(0) - CE| <= {focal_gap:.1e}"))
}

// ---- 7: CLI determinism ----

const GRID: &str = r#"{
  "dataset": {"synthetic": {"spec": {"num_scans": 5, "shape": [12, 24, 24], "num_classes": 1, "noise": 0.1}, "seed": 42}},
  "strategies": ["random", "stratified", "entropy", "dist_repr", "cluster_repr",
                 {"name": "strided", "block_size": 5, "interpolation": "signed_distance"}],
  "output": "unused",
  "initial_slices": 6,
  "slices_per_iteration": 4,
  "iterations": 3,
  "epochs_per_iteration": 2,
  "seeds": [1, 2]
}"#;

fn simulate(config: &Path, out: &Path, jobs: &str) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_alseg"))
        .args(["simulate", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs, "--quiet"])
        .output()
        .map_err(|e| e.to_string())?;
    check!(
        status.status.success(),
        "alseg simulate failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let mut curves = BTreeMap::new();
    for e in fs::read_dir(out).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        let name = e.file_name().into_string().unwrap();
        if name.starts_with("curve_") {
            curves.insert(name, fs::read(e.path()).map_err(|e| e.to_string())?);
        }
    }
    Ok(curves)
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("grid.json");
    fs::write(&config, GRID).map_err(|e| e.to_string())?;
    let a = simulate(&config, &dir.path().join("a"), "4")?;
    let b = simulate(&config, &dir.path().join("b"), "1")?;
    check!(a.len() == 12, "expected 12 curves, got {}", a.len());
    for (name, bytes) in &a {
        check!(b.get(name) == Some(bytes), "{name} differs between invocations");
    }
    Ok(format!("{} curve CSVs byte-identical across two invocations (4 and 1 threads)", a.len()))
}

// ---- 8: full protocol ----

fn criterion_8() -> Outcome {
    let data = make_synthetic_dataset(&SyntheticSpec::standard(), 42).map_err(|e| e.to_string())?;
    let dataset = PreparedDataset::new(data).map_err(|e| e.to_string())?;
    let config = ALConfig::new(StrategySpec::Random);
    let (mut first, mut last, mut slowest, mut truncated_at) = (0.0, 0.0, 0.0f64, Vec::new());
    for &seed in &config.seeds {
        let start = Instant::now();
        let out = run_active_learning(&config, &dataset, seed, &RunOptions::default()).map_err(|e| e.to_string())?;
        let secs = within(Duration::from_secs(600), start)?;
        slowest = slowest.max(secs);
        let records = &out.curve.records;
        for r in records {
            let want = config.initial_slices + config.slices_per_iteration * r.iteration;
            check!(r.labeled_count == want, "seed {seed}, iteration {}: {} labeled, expected {want}", r.iteration, r.labeled_count);
        }
        let validation: usize = out
            .split
            .validation_scans
            .iter()
            .map(|id| dataset.scan(id).map_or(0, |s| s.shape.depth))
            .sum();
        check!(
            out.pool.len() + validation == dataset.total_slices(),
            "seed {seed}: pool holds {} slices, expected {}",
            out.pool.len(),
            dataset.total_slices() - validation
        );
        for s in out.pool.labeled().iter().chain(out.pool.pseudo_labeled().keys()).chain(out.pool.unlabeled()) {
            check!(!out.split.is_validation(&s.scan_id), "seed {seed}: validation slice {s} in the pool");
        }
        if out.truncated {
            truncated_at.push(records.last().unwrap().iteration);
        }
        first += records[0].mean_dice / config.seeds.len() as f64;
        last += records.last().unwrap().mean_dice / config.seeds.len() as f64;
    }
    check!(last > first, "final mean Dice {last:.5} does not exceed iteration-0 mean {first:.5}");
    let note = if truncated_at.is_empty() {
        String::new()
    } else {
        format!(", pool exhausted at iterations {truncated_at:?} of {}", config.iterations)
    };
    Ok(format!(
        "labeled = 32 + 16i, no leakage, mean Dice {first:.5} -> {last:.5}, slowest run {slowest:.0} s{note}"
    ))
}

// ---- 9: representativeness ----

fn distance_oracle(candidates: &[(SliceId, Vec<f64>)], labeled: &[Vec<f64>], k: usize) -> Vec<SliceId> {
    let mut scores: Vec<(f64, SliceId)> = candidates
        .iter()
        .map(|(id, x)| {
            let mut total = 0.0;
            for f in labeled {
                let mut sq = 0.0;
                for (a, b) in x.iter().zip(f) {
                    sq += (a - b) * (a - b);
                }
                total += f64::sqrt(sq);
            }
            (total / labeled.len() as f64, id.clone())
        })
        .collect();
    let mut out = Vec::new();
    for _ in 0..k {
        let mut best = 0;
        for i in 1..scores.len() {
            let (s, id) = &scores[i];
            let (bs, bid) = &scores[best];
            if s > bs || (s == bs && id < bid) {
                best = i;
            }
        }
        out.push(scores.remove(best).1);
    }
    out
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in 0..200 {
        let dims = rng.random_range(1..=5);
        let point = |rng: &mut ChaCha8Rng| (0..dims).map(|_| rng.random_range(-3..=3) as f64).collect::<Vec<_>>();
        let candidates: Vec<(SliceId, Vec<f64>)> = (0..rng.random_range(1..=20))
            .map(|i| (SliceId::new(format!("s{}", i % 3), i), point(&mut rng)))
            .collect();
        let labeled: Vec<Vec<f64>> = (0..rng.random_range(1..=10)).map(|_| point(&mut rng)).collect();
        let k = rng.random_range(0..=candidates.len());
        let got = select_distance_representative(&candidates, &labeled, k).map_err(|e| e.to_string())?;
        check!(got == distance_oracle(&candidates, &labeled, k), "distance instance {n} differs");
    }
    for n in 0..500 {
        let sizes: Vec<usize> = (0..rng.random_range(1..=8)).map(|_| rng.random_range(0..30)).collect();
        let total: usize = sizes.iter().sum();
        let k = rng.random_range(0..=total);
        let q = cluster_quotas(&sizes, k);
        check!(q.iter().sum::<usize>() == k, "quota instance {n}: sum {} != {k}", q.iter().sum::<usize>());
        for (&qi, &s) in q.iter().zip(&sizes) {
            let ideal = k as f64 * s as f64 / total.max(1) as f64;
            check!((qi as f64 - ideal).abs() <= 1.0, "quota instance {n}: {qi} vs {ideal:.3}");
        }
    }
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (blob, centre) in [[0.0, 0.0, 0.0], [20.0, 20.0, 20.0]].iter().enumerate() {
        for _ in 0..40 {
            points.push(centre.iter().map(|c| c + rng.random_range(-1.5..1.5)).collect::<Vec<f64>>());
            truth.push(blob);
        }
    }
    let clusters = mean_shift(&points, DEFAULT_BANDWIDTH).map_err(|e| e.to_string())?;
    check!(clusters.modes.len() == 2, "mean shift found {} modes", clusters.modes.len());
    let map = [clusters.membership[0], clusters.membership[40]];
    let correct = truth.iter().zip(&clusters.membership).filter(|(&t, &m)| map[t] == m).count();
    check!(map[0] != map[1] && correct == points.len(), "{correct}/{} points assigned to their blob", points.len());
    Ok("200 distance instances exact, 500 quota instances within 1, 2 blobs recovered 80/80".into())
}

// ---- 10: strided state machine ----

fn block(z_top: usize, z_bottom: usize) -> BlockRef {
    BlockRef { scan_id: "s".into(), z_top, z_bottom, block_size: 5 }
}

fn pseudo(source: &BlockRef) -> PseudoLabel {
    PseudoLabel {
        mask: vec![0; 4],
        height: 2,
        width: 2,
        source_block: source.clone(),
        method: InterpolationMethod::SignedDistance,
    }
}

/// Labels the annotated slices and pseudo-labels unlabeled block interiors.
fn apply(pool: &mut PoolState, picks: &[StridedPick]) -> Result<(), String> {
    for pick in picks {
        for s in pick.annotated() {
            pool.apply(PoolEvent::Label(s)).map_err(|e| e.to_string())?;
        }
        if let StridedPick::Block { block, .. } = pick {
            for s in block.intermediate() {
                if pool.unlabeled().contains(&s) {
                    pool.apply(PoolEvent::PseudoLabel(s, pseudo(block))).map_err(|e| e.to_string())?;
                }
            }
        }
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    use StridedPhase::{PseudoLabeled, Unlabeled};
    let depths: BTreeMap<String, usize> = [("s".to_string(), 12)].into();
    // earlier slices are more uncertain
    let scores: BTreeMap<SliceId, f64> = (0..12).map(|z| (SliceId::new("s", z), -(z as f64))).collect();
    let select = |pool: &PoolState, budget| {
        select_strided_blocks(pool, &depths, 5, budget, BlockScoring::Uncertainty(&scores), 10).map_err(|e| e.to_string())
    };
    let b = |z_top, z_bottom, phase| StridedPick::Block { block: block(z_top, z_bottom), phase };

    let mut pool = PoolState::from_scans([("s", 12)]);
    let fresh = select(&pool, 2)?;
    check!(fresh.picks == [b(0, 5, Unlabeled)], "empty pool picked {:?}", fresh.picks);

    pool.apply(PoolEvent::Label(SliceId::new("s", 2))).map_err(|e| e.to_string())?;
    let steps: [(usize, Vec<StridedPick>, bool); 5] = [
        // (0, 5) holds the labeled slice 2 and is discarded
        (2, vec![b(3, 8, Unlabeled)], false),
        // no span of 5, 4 or 3 fits: shrink to 2, then 1
        (4, vec![b(9, 11, Unlabeled), b(0, 1, Unlabeled)], false),
        // nothing unlabeled: span resets to 5 over pseudo-labels, fits at 3
        (2, vec![b(4, 7, PseudoLabeled)], false),
        (2, vec![b(5, 6, PseudoLabeled)], false),
        (2, vec![StridedPick::Single { slice: SliceId::new("s", 10), phase: PseudoLabeled }], true),
    ];
    for (i, (budget, want, shortage)) in steps.iter().enumerate() {
        let sel = select(&pool, *budget)?;
        check!(
            sel.picks == *want && sel.shortage == *shortage,
            "step {}: got {:?} (shortage {}), expected {want:?} (shortage {shortage})",
            i + 1,
            sel.picks,
            sel.shortage
        );
        apply(&mut pool, &sel.picks)?;
        let pseudo_left = pool.pseudo_labeled().len();
        if i == 1 {
            check!(pool.unlabeled().is_empty() && pseudo_left == 5, "after step 2: {pseudo_left} pseudo-labels");
        }
        if i == 2 {
            let gone = [4, 7].iter().all(|&z| !pool.pseudo_labeled().contains_key(&SliceId::new("s", z)));
            check!(gone && pseudo_left == 3, "labels did not replace the pseudo-labels of 4 and 7");
        }
    }
    check!(pool.labeled().len() == 12, "{} of 12 slices labeled at the end", pool.labeled().len());

    let data = make_synthetic_dataset(
        &SyntheticSpec {
            num_scans: 5,
            shape: alseg_core::volume::Shape3::new(12, 24, 24),
            ..SyntheticSpec::standard()
        },
        10,
    )
    .map_err(|e| e.to_string())?;
    let dataset = PreparedDataset::new(data).map_err(|e| e.to_string())?;
    let config = ALConfig {
        initial_slices: 4,
        slices_per_iteration: 4,
        iterations: 20,
        epochs_per_iteration: 1,
        ..ALConfig::new(StrategySpec::strided(5, Some(InterpolationMethod::SignedDistance)))
    };
    let out = run_active_learning(&config, &dataset, 1, &RunOptions::default()).map_err(|e| e.to_string())?;
    check!(
        out.pool.unlabeled().is_empty(),
        "full run left {} of {} slices without any label",
        out.pool.unlabeled().len(),
        out.pool.len()
    );
    Ok(format!(
        "5-step transcript matches; full run ends with {} labeled + {} pseudo-labeled of {}",
        out.pool.labeled().len(),
        out.pool.pseudo_labeled().len(),
        out.pool.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("formula oracles", criterion_1),
        ("EDT exactness", criterion_2),
        ("signed-distance contract", criterion_3),
        ("concentric circles", criterion_4),
        ("block-size trend", criterion_5),
        ("gradient check", criterion_6),
        ("CLI determinism", criterion_7),
        ("protocol bookkeeping", criterion_8),
        ("representativeness oracles", criterion_9),
        ("strided state machine", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == (i + 1).to_string() || name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("{id} ({name}): PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} ({name}): FAIL  {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
