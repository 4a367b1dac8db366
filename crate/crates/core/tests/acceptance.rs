//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use memcrop::frame::{CropRect, CropTrajectory, FrameSequence};
use memcrop::metrics::{
    compare_runs, cumulative_mean, improvement_partition, iqr_filter, threshold_table, EvaluationRecord, ScoreSeries,
};
use memcrop::pipeline::{plan_and_render, plan_render_batch, run_pipeline, Manifest, Settings};
use memcrop::plan::{self, fit_linear_zoom, Direction, PlanConfig, Strategy, Tolerance, VideoAnalysis};
use memcrop::saliency::{binarize, saliency_centroid, Centroid, RegionStats, SaliencyMap};
use memcrop::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_map(rng: &mut impl Rng, max_side: u32) -> SaliencyMap {
    let (w, h) = (rng.gen_range(1..=max_side), rng.gen_range(1..=max_side));
    let n = (w * h) as usize;
    let values: Vec<f64> = match rng.gen_range(0..4) {
        0 => (0..n).map(|_| rng.gen_range(0..=8) as f64 / 8.0).collect(),
        1 => vec![rng.gen_range(0..=4) as f64 / 4.0; n],
        _ => (0..n).map(|_| rng.gen::<f64>()).collect(),
    };
    SaliencyMap::new(w, h, values).unwrap()
}

fn centroid_oracle(map: &SaliencyMap) -> (f64, f64) {
    let (w, h) = map.dims();
    let (mut total, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for row in 0..h {
        for col in 0..w {
            let s = map.get(col, row);
            total += s;
            sx += col as f64 * s;
            sy += row as f64 * s;
        }
    }
    if total == 0.0 {
        ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0)
    } else {
        (sx / total, sy / total)
    }
}

fn centroid_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let maps: Vec<SaliencyMap> = (0..1000).map(|_| random_map(&mut rng, 16)).collect();
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for map in &maps {
        let Centroid { x, y } = saliency_centroid(map);
        let (ox, oy) = centroid_oracle(map);
        worst = worst.max((x - ox).abs()).max((y - oy).abs());
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-9, || format!("max coordinate error {worst:e}"))?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 maps, max error {worst:.1e}, {elapsed:?}"))
}

fn binarize_oracle(map: &SaliencyMap, k: f64) -> Vec<bool> {
    let v = map.values();
    let n = v.len() as f64;
    let mut sum = 0.0;
    for x in v {
        sum += x;
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for x in v {
        ss += (x - mean) * (x - mean);
    }
    let std = (ss / n).sqrt();
    v.iter().map(|&x| x > mean + k * std).collect()
}

fn binarize_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let map = random_map(&mut rng, 24);
        for k in [0.0, 1.0, 2.0] {
            let got = binarize(&map, k);
            check(got.bits() == binarize_oracle(&map, k).as_slice(), || {
                format!("case {case}, k={k}: mask differs from oracle")
            })?;
        }
        check(binarize(&map, 2.0).is_subset_of(&binarize(&map, 1.0)), || {
            format!("case {case}: k=2 mask not within k=1 mask")
        })?;
    }
    Ok("1000 maps × k∈{0,1,2} exact; subset held on every case".into())
}

fn normal_equations(areas: &[f64]) -> (f64, f64, f64) {
    let n = areas.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (i, a) in areas.iter().enumerate() {
        let (x, y) = (i as f64, a.sqrt());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let sse: f64 = areas
        .iter()
        .enumerate()
        .map(|(i, a)| (a.sqrt() - intercept - slope * i as f64).powi(2))
        .sum();
    (slope, intercept, (sse / n).sqrt())
}

fn zoom_fit_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = Tolerance::Relative(0.01);
    for case in 0..200 {
        let c: f64 = rng.gen_range(0.5..200.0);
        let m: f64 = rng.gen_range(-c / 8.0..40.0);
        let areas: Vec<f64> = (0..9).map(|i| (c + m * i as f64).powi(2)).collect();
        let fit = fit_linear_zoom(&areas, eps).map_err(|e| e.to_string())?;
        check((fit.slope - m).abs() <= 1e-6 && (fit.intercept - c).abs() <= 1e-6, || {
            format!("case {case}: fit ({}, {}) for (c={c}, m={m})", fit.intercept, fit.slope)
        })?;
        check(fit.rmse <= 1e-9, || format!("case {case}: rmse {:e}", fit.rmse))?;
    }
    let mut worst = 0.0_f64;
    for case in 0..1000 {
        let c: f64 = rng.gen_range(1.0..150.0);
        let m: f64 = rng.gen_range(-c / 8.0..30.0);
        let noise: f64 = rng.gen_range(0.0..0.3);
        let areas: Vec<f64> = (0..9)
            .map(|i| ((c + m * i as f64) * (1.0 + rng.gen_range(-noise..=noise))).max(0.0).powi(2))
            .collect();
        let fit = fit_linear_zoom(&areas, eps).map_err(|e| e.to_string())?;
        let (slope, intercept, rmse) = normal_equations(&areas);
        let err = (fit.slope - slope).abs().max((fit.intercept - intercept).abs()).max((fit.rmse - rmse).abs());
        worst = worst.max(err);
        check(err <= 1e-9, || format!("noisy case {case}: deviation {err:e}"))?;
    }
    Ok(format!("200 exact fits recovered; 1000 noisy fits within {worst:.1e} of normal equations"))
}

fn identity_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut settings = Settings::default();
    settings.plan.strategy = Strategy::Center;
    settings.plan.crop_fraction = 1.0;
    settings.render.resize_to_source = true;
    for k in 0..20 {
        let (w, h) = (rng.gen_range(1..=96), rng.gen_range(1..=96));
        let frames = rng.gen_range(1..=25);
        let seq = common::noise_video(&mut rng, &format!("id{k}"), w, h, frames);
        let (_, rendered) = plan_and_render(&seq, &settings, Execution::Sequential).map_err(|e| e.to_string())?;
        check(rendered == seq, || format!("video {k} ({w}x{h}, {frames} frames) changed"))?;
    }
    Ok("20 random videos reproduced byte-for-byte".into())
}

fn random_analysis(rng: &mut impl Rng) -> VideoAnalysis {
    let (w, h) = (rng.gen_range(1..=400u32), rng.gen_range(1..=300u32));
    let n = rng.gen_range(1..=12usize);
    let stride = rng.gen_range(1..=12usize);
    let frame_indices: Vec<usize> = (0..n).map(|i| i * stride).collect();
    let linear = rng.gen_bool(0.5);
    let (c, m) = (rng.gen_range(0.0..(w * h) as f64).sqrt(), rng.gen_range(-20.0..20.0));
    let mut centroids = Vec::new();
    let mut stats = Vec::new();
    for i in 0..n {
        centroids.push(Centroid {
            x: rng.gen_range(0.0..w as f64),
            y: rng.gen_range(0.0..h as f64),
        });
        let target = if linear {
            ((c + m * i as f64).max(0.0).powi(2)).min((w * h) as f64)
        } else {
            rng.gen_range(0.0..=(w * h) as f64)
        };
        stats.push(if target < 1.0 {
            RegionStats { area: 0, bbox: None }
        } else {
            let bw = rng.gen_range(1..=w) as i64;
            let bh = rng.gen_range(1..=h) as i64;
            let bbox = CropRect {
                x: rng.gen_range(0..=w as i64 - bw),
                y: rng.gen_range(0..=h as i64 - bh),
                w: bw,
                h: bh,
            };
            RegionStats {
                area: (target as u64).clamp(1, (bw * bh) as u64),
                bbox: Some(bbox),
            }
        });
    }
    let areas = stats.iter().map(|s| s.area as f64).collect();
    VideoAnalysis {
        video_id: "fuzz".into(),
        src_width: w,
        src_height: h,
        frame_indices,
        centroids,
        stats,
        areas,
    }
}

fn random_config(rng: &mut impl Rng, strategy: Strategy) -> PlanConfig {
    PlanConfig {
        strategy,
        crop_fraction: rng.gen_range(0.01..=1.0),
        padding_fraction: rng.gen_range(0.0..1.0),
        smoothing_window: 2 * rng.gen_range(0..4) + 1,
        zoom_rmse_max: Tolerance::Relative(rng.gen_range(0.05..0.5)),
        ..PlanConfig::default()
    }
}

fn all_rects_in_frame(traj: &CropTrajectory) -> bool {
    let (w, h) = traj.src_dims();
    let last = traj.rects().last().map_or(0, |r| r.0);
    traj.rects().iter().all(|(_, r)| r.validate(w, h).is_ok())
        && (0..=last + 3).all(|i| traj.rect_at(i).validate(w, h).is_ok())
}

fn geometry_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let strategies = [Strategy::Center, Strategy::FixedTrack, Strategy::VariableTrack];
    let (mut zoomed, mut rejected) = (0, 0);
    for case in 0..10_000 {
        let (analysis, cfg, traj) = loop {
            let analysis = random_analysis(&mut rng);
            let cfg = random_config(&mut rng, strategies[case % 3]);
            match plan::plan(&analysis, &cfg) {
                Ok(traj) => break (analysis, cfg, traj),
                // A centre crop that rounds below one pixel is refused by contract.
                Err(e) => {
                    let side = |s: u32| (cfg.crop_fraction * s as f64 + 0.5).floor();
                    let too_small = cfg.strategy == Strategy::Center
                        && (side(analysis.src_width) < 1.0 || side(analysis.src_height) < 1.0);
                    check(too_small, || format!("case {case}: {e}"))?;
                    rejected += 1;
                }
            }
        };
        check(all_rects_in_frame(&traj), || format!("case {case}: rect outside the frame"))?;
        if cfg.strategy != Strategy::VariableTrack || traj.meta().fallback {
            continue;
        }
        zoomed += 1;
        let fit = fit_linear_zoom(&analysis.areas, cfg.slope_epsilon).map_err(|e| e.to_string())?;
        let sides: Vec<(i64, i64)> = traj.rects().iter().map(|(_, r)| (r.w, r.h)).collect();
        let monotone = sides.windows(2).all(|p| {
            let ((w0, h0), (w1, h1)) = (p[0], p[1]);
            match fit.direction {
                Direction::Increasing => w1 >= w0 - 1 && h1 >= h0 - 1,
                Direction::Decreasing => w1 <= w0 + 1 && h1 <= h0 + 1,
                Direction::Neither => false,
            }
        });
        check(monotone, || format!("case {case}: {:?} sides {sides:?}", fit.direction))?;
    }
    Ok(format!(
        "10000 plans in frame; {zoomed} variable-size plans monotone; {rejected} sub-pixel centre crops refused"
    ))
}

fn metrics_criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for case in 0..1000 {
        let n = rng.gen_range(1..200);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = cumulative_mean(&values).map_err(|e| e.to_string())?;
        for i in 0..n {
            let oracle = values[..=i].iter().sum::<f64>() / (i + 1) as f64;
            let err = (got[i] - oracle).abs();
            worst = worst.max(err);
            check(err <= 1e-12, || format!("series {case} position {i}: error {err:e}"))?;
        }
    }

    let filtered = iqr_filter(&[1.0, 2.0, 3.0, 4.0, 100.0]).map_err(|e| e.to_string())?;
    check(filtered == [1.0, 2.0, 3.0, 4.0], || format!("iqr fixture gave {filtered:?}"))?;

    for case in 0..100 {
        let n = rng.gen_range(0..120);
        let records: Vec<EvaluationRecord> = (0..n)
            .map(|i| {
                let before = rng.gen_range(0..=20) as f64 / 20.0;
                let after = match rng.gen_range(0..3) {
                    0 => before,
                    _ => rng.gen_range(0.0..=1.0),
                };
                EvaluationRecord::new(format!("v{i}"), before, after)
            })
            .collect();
        let mut thresholds: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(0..=20) as f64 / 20.0).collect();
        thresholds.sort_by(f64::total_cmp);
        let rows = threshold_table(&records, &thresholds).map_err(|e| e.to_string())?;
        for (row, &t) in rows.iter().zip(&thresholds) {
            let mut population = 0;
            let mut improved = 0;
            for r in &records {
                if r.score_before >= t {
                    population += 1;
                    if r.score_after > r.score_before {
                        improved += 1;
                    }
                }
            }
            let fraction = if population == 0 { 0.0 } else { improved as f64 / population as f64 };
            check(row.population == population && row.improved_fraction == fraction, || {
                format!("set {case} threshold {t}: {row:?} vs ({population}, {fraction})")
            })?;
        }
        let p = improvement_partition(&records);
        check(p.improved + p.decreased + p.unchanged == n, || format!("set {case}: partition {p:?} for {n}"))?;
    }
    Ok(format!("cumulative mean within {worst:.1e}; iqr fixture exact; 100 threshold tables and partitions match"))
}

fn pairs(entries: &[(&str, String)]) -> BTreeMap<String, String> {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn run(root: &Path, out: &Path, strategy: &str, extra: &[(&str, String)]) -> Result<Vec<EvaluationRecord>, String> {
    let mut entries = vec![
        ("root", root.display().to_string()),
        ("out", out.display().to_string()),
        ("strategy", strategy.to_string()),
        ("stride", "1".to_string()),
        ("scorer", "synthetic_contrast".to_string()),
    ];
    entries.extend_from_slice(extra);
    let manifest = Manifest::from_pairs(&pairs(&entries)).map_err(|e| e.to_string())?;
    let summary = run_pipeline(&manifest).map_err(|e| e.to_string())?;
    check(summary.failures.is_empty(), || format!("failures: {:?}", summary.failures))?;
    Ok(summary.records)
}

fn end_to_end_criterion() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path().join("videos");
    for seq in common::blob_corpus(7, 50, 320, 240, 9) {
        common::write_video(&root, &seq);
    }
    let fixed = run(&root, &tmp.path().join("fixed"), "fixed_track", &[])?;
    let variable = run(&root, &tmp.path().join("variable"), "variable_track", &[])?;

    let mut detail = Vec::new();
    for (name, records) in [("fixed", &fixed), ("variable", &variable)] {
        let mut sorted = records.clone();
        sorted.sort_by(|a, b| a.score_before.total_cmp(&b.score_before));
        let low = &sorted[..sorted.len() / 2];
        let mean_delta = low.iter().map(|r| r.delta).sum::<f64>() / low.len() as f64;
        check(mean_delta > 0.0, || format!("{name}: low-score half mean delta {mean_delta:.4}"))?;
        detail.push(format!("{name} low-half Δ={mean_delta:+.3}"));
    }
    let (a, b) = compare_runs(
        &ScoreSeries::deltas_by_score_before(&fixed),
        &ScoreSeries::deltas_by_score_before(&variable),
    )
    .map_err(|e| e.to_string())?;
    for curve in [&a, &b] {
        let (first, last) = (curve.values[0], *curve.values.last().unwrap());
        check(last < first, || format!("{} curve rises: {first:.4} -> {last:.4}", curve.label))?;
        detail.push(format!("{} curve {first:+.3}→{last:+.3}", curve.label));
    }
    Ok(detail.join("; "))
}

fn throughput_criterion() -> Outcome {
    const VIDEOS: usize = 1500;
    const BATCH: usize = 100;
    let settings = Settings {
        stride: 1,
        ..Settings::default()
    };
    let exec = settings.execution();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut elapsed = Duration::ZERO;
    for batch in 0..VIDEOS / BATCH {
        let videos: Vec<FrameSequence> = (0..BATCH)
            .map(|k| common::BlobVideo::random(&mut rng, 320, 240, 9).sequence(&format!("b{batch}v{k}")))
            .collect();
        let start = Instant::now();
        let results = plan_render_batch(&videos, &settings, exec);
        elapsed += start.elapsed();
        if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
            return Err(e.to_string());
        }
    }
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    check(elapsed < Duration::from_secs(120), || format!("{elapsed:?} on {cores} core(s)"))?;
    Ok(format!("{VIDEOS} videos planned and rendered in {:.1}s on {cores} core(s)", elapsed.as_secs_f64()))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism_criterion() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path().join("videos");
    for seq in common::blob_corpus(9, 12, 160, 120, 9) {
        common::write_video(&root, &seq);
    }
    let extra = [("crop_fractions", "0.5,0.75,1.0".to_string())];
    let (one, two) = (tmp.path().join("one"), tmp.path().join("two"));
    run(&root, &one, "variable_track", &extra)?;
    run(&root, &two, "variable_track", &extra)?;
    let (a, b) = (read_tree(&one), read_tree(&two));
    check(a.keys().eq(b.keys()), || "runs wrote different file sets".into())?;
    for (name, bytes) in &a {
        check(&b[name] == bytes, || format!("{name} differs between runs"))?;
    }
    for ext in ["csv", "jsonl", "svg"] {
        check(a.keys().any(|k| k.ends_with(ext)), || format!("no .{ext} output to compare"))?;
    }
    Ok(format!("{} output files byte-identical across two runs", a.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 centroid oracle", centroid_criterion),
        ("2 binarization oracle", binarize_criterion),
        ("3 zoom fit", zoom_fit_criterion),
        ("4 identity pipeline", identity_criterion),
        ("5 geometry safety", geometry_criterion),
        ("6 metrics oracles", metrics_criterion),
        ("7 end-to-end synthetic experiment", end_to_end_criterion),
        ("8 throughput", throughput_criterion),
        ("9 determinism", determinism_criterion),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  criterion {name}: {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
