//! End-to-end runs: saliency → plan → render → score → reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{sample_frame_indices_from, CropTrajectory, FrameSequence};
use crate::io::{csvio, frames, svg, trajectory};
use crate::metrics::{self, EvaluationRecord, ScoreSeries, DEFAULT_THRESHOLDS};
use crate::par::Execution;
use crate::plan::{self, PlanConfig, Strategy, VideoAnalysis};
use crate::render::{render_video_with, RenderConfig};
use crate::saliency::{CentroidSource, SaliencyBackend};
use crate::score::{Scorer, ScorerConfig};

pub const DEFAULT_STRIDE: usize = 10;
pub const WORKERS_ENV: &str = "MEMCROP_WORKERS";

/// Every configurable knob, buildable from `key=value` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub plan: PlanConfig,
    pub render: RenderConfig,
    pub scorer: ScorerConfig,
    /// Scorer for the cropped videos; the before-scorer when absent.
    pub scorer_after: Option<ScorerConfig>,
    pub saliency: SaliencyBackend,
    pub stride: usize,
    pub offset: usize,
    pub workers: Option<usize>,
    pub fail_fast: bool,
    /// Extra centre-crop fractions to sweep for the range summary.
    pub crop_fractions: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub write_frames: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            plan: PlanConfig::default(),
            render: RenderConfig::default(),
            scorer: ScorerConfig::default(),
            scorer_after: None,
            saliency: SaliencyBackend::default(),
            stride: DEFAULT_STRIDE,
            offset: 0,
            workers: None,
            fail_fast: false,
            crop_fractions: Vec::new(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            write_frames: false,
        }
    }
}

pub const SETTING_KEYS: &[&str] = &[
    "strategy",
    "crop_fraction",
    "threshold_k",
    "padding_fraction",
    "zoom_rmse_max",
    "slope_epsilon",
    "smoothing_window",
    "centroid_source",
    "min_crop_side",
    "resize_to_source",
    "interpolation",
    "scorer",
    "scores",
    "score_value",
    "scorer_after",
    "scores_after",
    "score_value_after",
    "saliency",
    "blur_radius",
    "saliency_dir",
    "stride",
    "offset",
    "workers",
    "fail_fast",
    "crop_fractions",
    "thresholds",
    "write_frames",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn scorer_from(kind: Option<&String>, path: Option<&String>, value: Option<&String>, suffix: &str) -> Result<Option<ScorerConfig>> {
    let Some(kind) = kind else {
        return Ok(None);
    };
    Ok(Some(match kind.as_str() {
        "synthetic_contrast" => ScorerConfig::SyntheticContrast,
        "constant" => {
            let key = format!("score_value{suffix}");
            let v = value.ok_or_else(|| Error::invalid(format!("constant scorer needs `{key}`")))?;
            ScorerConfig::Constant { value: parse(&key, v)? }
        }
        "file_store" => {
            let key = format!("scores{suffix}");
            let p = path.ok_or_else(|| Error::invalid(format!("file_store scorer needs `{key}`")))?;
            ScorerConfig::FileStore { path: PathBuf::from(p) }
        }
        other => return Err(Error::invalid(format!("unknown scorer `{other}`"))),
    }))
}

impl Settings {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(unknown) = pairs.keys().find(|k| !SETTING_KEYS.contains(&k.as_str())) {
            return Err(Error::invalid(format!("unknown setting `{unknown}`")));
        }
        let get = |k: &str| pairs.get(k);
        let mut s = Settings::default();
        let p = &mut s.plan;
        if let Some(v) = get("strategy") {
            p.strategy = v.parse()?;
        }
        if let Some(v) = get("crop_fraction") {
            p.crop_fraction = parse("crop_fraction", v)?;
        }
        if let Some(v) = get("threshold_k") {
            p.threshold_k = parse("threshold_k", v)?;
        }
        if let Some(v) = get("padding_fraction") {
            p.padding_fraction = parse("padding_fraction", v)?;
        }
        if let Some(v) = get("zoom_rmse_max") {
            p.zoom_rmse_max = v.parse()?;
        }
        if let Some(v) = get("slope_epsilon") {
            p.slope_epsilon = v.parse()?;
        }
        if let Some(v) = get("smoothing_window") {
            p.smoothing_window = parse("smoothing_window", v)?;
        }
        if let Some(v) = get("min_crop_side") {
            p.min_crop_side = parse("min_crop_side", v)?;
        }
        if let Some(v) = get("centroid_source") {
            p.centroid_source = match v.as_str() {
                "raw" => CentroidSource::Raw,
                "thresholded" => CentroidSource::Thresholded,
                other => return Err(Error::invalid(format!("unknown centroid_source `{other}`"))),
            };
        }
        p.validate()?;

        if let Some(v) = get("resize_to_source") {
            s.render.resize_to_source = parse_bool("resize_to_source", v)?;
        }
        if let Some(v) = get("interpolation") {
            s.render.interpolation = v.parse()?;
        }

        if let Some(c) = scorer_from(get("scorer"), get("scores"), get("score_value"), "")? {
            s.scorer = c;
        }
        s.scorer_after = scorer_from(get("scorer_after"), get("scores_after"), get("score_value_after"), "_after")?;
        for c in std::iter::once(&s.scorer).chain(&s.scorer_after) {
            if let ScorerConfig::Constant { value } = c {
                if !(0.0..=1.0).contains(value) {
                    return Err(Error::invalid(format!("constant score {value} outside [0, 1]")));
                }
            }
        }

        let blur_radius = match get("blur_radius") {
            Some(v) => parse("blur_radius", v)?,
            None => crate::saliency::DEFAULT_BLUR_RADIUS,
        };
        s.saliency = match get("saliency").map(String::as_str) {
            None | Some("spectral_residual") => SaliencyBackend::SpectralResidual { blur_radius },
            Some("file_store") => SaliencyBackend::FileStore {
                dir: get("saliency_dir")
                    .map(PathBuf::from)
                    .ok_or_else(|| Error::invalid("file_store saliency needs `saliency_dir`"))?,
            },
            Some(other) => return Err(Error::invalid(format!("unknown saliency backend `{other}`"))),
        };

        if let Some(v) = get("stride") {
            s.stride = parse("stride", v)?;
        }
        if s.stride < 1 {
            return Err(Error::invalid("stride must be >= 1"));
        }
        if let Some(v) = get("offset") {
            s.offset = parse("offset", v)?;
        }
        if let Some(v) = get("workers") {
            let n: usize = parse("workers", v)?;
            if n == 0 {
                return Err(Error::invalid("workers must be >= 1"));
            }
            s.workers = Some(n);
        }
        if let Some(v) = get("fail_fast") {
            s.fail_fast = parse_bool("fail_fast", v)?;
        }
        if let Some(v) = get("crop_fractions") {
            s.crop_fractions = parse_list("crop_fractions", v)?;
            if let Some(f) = s.crop_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                return Err(Error::invalid(format!("crop fraction {f} outside (0, 1]")));
            }
        }
        if let Some(v) = get("thresholds") {
            s.thresholds = parse_list("thresholds", v)?;
        }
        if s.thresholds.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("thresholds must be sorted ascending"));
        }
        if let Some(v) = get("write_frames") {
            s.write_frames = parse_bool("write_frames", v)?;
        }
        Ok(s)
    }

    pub fn execution(&self) -> Execution {
        Execution::with_workers(self.workers)
    }

    pub fn sample_indices(&self, frame_count: usize) -> Result<Vec<usize>> {
        sample_frame_indices_from(frame_count, self.stride, self.offset)
    }
}

/// A whole run: where the videos are, where outputs go, and how to process them.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub roots: Vec<PathBuf>,
    pub out: PathBuf,
    pub settings: Settings,
}

impl Manifest {
    /// Build from pairs carrying `root` (comma-separated) and `out` plus settings.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut rest = pairs.clone();
        let roots: Vec<PathBuf> = rest
            .remove("root")
            .map(|v| v.split(',').filter(|s| !s.trim().is_empty()).map(|s| PathBuf::from(s.trim())).collect())
            .unwrap_or_default();
        if roots.is_empty() {
            return Err(Error::invalid("a run needs at least one `root` directory"));
        }
        let out = rest
            .remove("out")
            .map(PathBuf::from)
            .ok_or_else(|| Error::invalid("a run needs an `out` directory"))?;
        Ok(Manifest {
            roots,
            out,
            settings: Settings::from_pairs(&rest)?,
        })
    }
}

/// Saliency measurements of the sampled frames.
pub fn analyze_video(
    seq: &FrameSequence,
    backend: &SaliencyBackend,
    frame_indices: &[usize],
    cfg: &PlanConfig,
    exec: Execution,
) -> Result<VideoAnalysis> {
    let maps = exec
        .map(frame_indices, |&i| {
            let frame = seq.frames().get(i).ok_or_else(|| {
                Error::invalid(format!("frame index {i} out of range for {} frames", seq.len()))
            })?;
            backend.compute(frame, seq.video_id(), i)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    VideoAnalysis::from_maps(seq.video_id(), frame_indices.to_vec(), &maps, cfg.threshold_k, cfg.centroid_source)
}

/// Plan a trajectory for one video. The centre strategy skips saliency.
pub fn plan_video(
    seq: &FrameSequence,
    settings: &Settings,
    plan_cfg: &PlanConfig,
    exec: Execution,
) -> Result<CropTrajectory> {
    let indices = settings.sample_indices(seq.len())?;
    if plan_cfg.strategy == Strategy::Center {
        let (w, h) = seq.dims();
        return plan::center_crop_plan(seq.video_id(), w, h, &indices, plan_cfg.crop_fraction);
    }
    let analysis = analyze_video(seq, &settings.saliency, &indices, plan_cfg, exec)?;
    plan::plan(&analysis, plan_cfg)
}

/// Plan and render one video.
pub fn plan_and_render(
    seq: &FrameSequence,
    settings: &Settings,
    exec: Execution,
) -> Result<(CropTrajectory, FrameSequence)> {
    let traj = plan_video(seq, settings, &settings.plan, exec)?;
    let rendered = render_video_with(seq, &traj, &settings.render, exec)?;
    Ok((traj, rendered))
}

/// Plan and render a batch of videos, one video per worker.
pub fn plan_render_batch(
    videos: &[FrameSequence],
    settings: &Settings,
    exec: Execution,
) -> Vec<Result<(CropTrajectory, FrameSequence)>> {
    exec.install(|| exec.map(videos, |seq| plan_and_render(seq, settings, Execution::Sequential)))
}

struct Scorers {
    before: Scorer,
    after: Scorer,
}

impl Scorers {
    fn new(settings: &Settings) -> Result<Self> {
        let before = Scorer::from_config(&settings.scorer)?;
        let after = match &settings.scorer_after {
            Some(c) => Scorer::from_config(c)?,
            None => before.clone(),
        };
        Ok(Scorers { before, after })
    }
}

/// Everything produced for one video.
#[derive(Clone, Debug)]
pub struct VideoOutcome {
    pub record: EvaluationRecord,
    pub trajectory: CropTrajectory,
    /// `(crop_fraction, score_after)` for each swept centre crop.
    pub sweep: Vec<(f64, f64)>,
}

fn process_video(dir: &Path, manifest: &Manifest, scorers: &Scorers) -> Result<VideoOutcome> {
    let settings = &manifest.settings;
    let seq = frames::ingest_frames(dir)?;
    let indices = settings.sample_indices(seq.len())?;
    let exec = Execution::Sequential;
    let before = scorers.before.score_video(&seq, &indices)?.value();

    let (traj, rendered) = plan_and_render(&seq, settings, exec)?;
    let after = scorers.after.score_video(&rendered, &indices)?.value();
    if settings.write_frames {
        frames::write_frames(&rendered, &manifest.out.join("rendered").join(seq.video_id()))?;
    }

    let mut sweep = Vec::with_capacity(settings.crop_fractions.len());
    for &fraction in &settings.crop_fractions {
        let t = plan::center_crop_plan(seq.video_id(), seq.dims().0, seq.dims().1, &indices, fraction)?;
        let r = render_video_with(&seq, &t, &settings.render, exec)?;
        sweep.push((fraction, scorers.after.score_video(&r, &indices)?.value()));
    }

    Ok(VideoOutcome {
        record: EvaluationRecord::new(seq.video_id(), before, after),
        trajectory: traj,
        sweep,
    })
}

/// Result of [`run_pipeline`].
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub records: Vec<EvaluationRecord>,
    pub failures: Vec<(String, String)>,
    pub written: Vec<PathBuf>,
}

fn discover(manifest: &Manifest) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    let mut seen = BTreeSet::new();
    for root in &manifest.roots {
        for dir in frames::list_video_dirs(root)? {
            let id = frames::video_id_of(&dir);
            if !seen.insert(id.clone()) {
                return Err(Error::invalid(format!("video id `{id}` appears under more than one root")));
            }
            dirs.push(dir);
        }
    }
    if dirs.is_empty() {
        return Err(Error::invalid("no video directories found under the given roots"));
    }
    Ok(dirs)
}

/// Run every video through the pipeline and write the reports.
///
/// Outputs under `manifest.out`:
/// `evaluation.csv`, `trajectories/<video_id>.jsonl`, `report/partition.csv`,
/// `report/thresholds.csv`, `report/cumulative_mean.csv`,
/// `report/cumulative_mean.svg`, `failures.csv` when videos failed, and with a
/// crop-fraction sweep `report/range_summary.{csv,svg}`.
///
/// Failed videos are recorded and skipped unless `fail_fast` is set, in which
/// case the first failure aborts the run.
pub fn run_pipeline(manifest: &Manifest) -> Result<RunSummary> {
    let settings = &manifest.settings;
    let scorers = Scorers::new(settings)?;
    let dirs = discover(manifest)?;
    let exec = settings.execution();

    let outcomes: Vec<Result<VideoOutcome>> = exec.install(|| {
        exec.map(&dirs, |dir| {
            process_video(dir, manifest, &scorers).map_err(|e| Error::Video {
                video_id: frames::video_id_of(dir),
                source: Box::new(e),
            })
        })
    });

    let mut done = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(o) => done.push(o),
            Err(e) if settings.fail_fast => return Err(e),
            Err(e) => {
                let id = match &e {
                    Error::Video { video_id, .. } => video_id.clone(),
                    _ => String::new(),
                };
                failures.push((id, e.to_string()));
            }
        }
    }
    write_outputs(manifest, &done, failures)
}

fn write_outputs(manifest: &Manifest, done: &[VideoOutcome], failures: Vec<(String, String)>) -> Result<RunSummary> {
    let out = &manifest.out;
    let report = out.join("report");
    fs::create_dir_all(&report).map_err(|e| Error::io(&report, e))?;
    let mut written = Vec::new();

    let records: Vec<EvaluationRecord> = done.iter().map(|o| o.record.clone()).collect();
    let eval_path = out.join("evaluation.csv");
    csvio::write_evaluation(&eval_path, &records)?;
    written.push(eval_path);

    for o in done {
        let path = out.join("trajectories").join(format!("{}.jsonl", o.trajectory.video_id()));
        trajectory::write_trajectory(&o.trajectory, &path)?;
        written.push(path);
    }

    let failure_path = out.join("failures.csv");
    if failures.is_empty() {
        let _ = fs::remove_file(&failure_path);
    } else {
        let mut w = csv::Writer::from_path(&failure_path).map_err(|e| Error::malformed_input(&failure_path, e))?;
        w.write_record(["video_id", "error"]).map_err(|e| Error::malformed_input(&failure_path, e))?;
        for (id, msg) in &failures {
            w.write_record([id, msg]).map_err(|e| Error::malformed_input(&failure_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&failure_path, e))?;
        written.push(failure_path);
    }

    if !records.is_empty() {
        written.extend(write_reports(&report, &records, None, &manifest.settings.thresholds)?);
    }

    let fractions = &manifest.settings.crop_fractions;
    if !fractions.is_empty() && !done.is_empty() {
        let groups: Vec<(f64, Vec<f64>)> = fractions
            .iter()
            .enumerate()
            .map(|(k, f)| (*f, done.iter().map(|o| o.sweep[k].1).collect()))
            .collect();
        written.extend(write_range_report(&report, &groups)?);
    }

    Ok(RunSummary {
        records,
        failures,
        written,
    })
}

fn label_for(strategy: Option<&str>) -> String {
    strategy.unwrap_or("run").to_string()
}

/// Partition, threshold table and cumulative-mean curve(s) for one run, or
/// for two runs over the same videos when `compare` is given.
pub fn write_reports(
    dir: &Path,
    records: &[EvaluationRecord],
    compare: Option<&[EvaluationRecord]>,
    thresholds: &[f64],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let p = dir.join("partition.csv");
    csvio::write_partition(&p, &metrics::improvement_partition(records))?;
    written.push(p);

    let p = dir.join("thresholds.csv");
    csvio::write_thresholds(&p, &metrics::threshold_table(records, thresholds)?)?;
    written.push(p);

    let series = ScoreSeries::deltas_by_score_before(records);
    let curves = match compare {
        None => vec![metrics::cumulative_mean_curve(&label_for(None), &series)?],
        Some(other) => {
            let ids = |rs: &[EvaluationRecord]| rs.iter().map(|r| r.video_id.clone()).collect::<BTreeSet<_>>();
            if ids(records) != ids(other) {
                return Err(Error::invalid("compared runs cover different videos"));
            }
            // both curves follow the first run's original-score order
            let before: BTreeMap<&str, f64> = records.iter().map(|r| (r.video_id.as_str(), r.score_before)).collect();
            let aligned: Vec<EvaluationRecord> = other
                .iter()
                .map(|r| EvaluationRecord {
                    score_before: before[r.video_id.as_str()],
                    ..r.clone()
                })
                .collect();
            let (a, b) = metrics::compare_runs(&series, &ScoreSeries::deltas_by_score_before(&aligned))?;
            vec![a, b]
        }
    };
    let p = dir.join("cumulative_mean.csv");
    csvio::write_curves(&p, &curves)?;
    written.push(p);

    let chart = svg::Chart {
        title: "Cumulative mean of score change".into(),
        x_label: "videos by ascending original score".into(),
        y_label: "cumulative mean delta".into(),
        series: curves
            .iter()
            .map(|c| svg::PlotSeries {
                label: c.label.clone(),
                points: c.positions.iter().zip(&c.values).map(|(p, v)| (*p as f64, *v)).collect(),
            })
            .collect(),
    };
    let p = dir.join("cumulative_mean.svg");
    svg::emit_plot(&chart, &p)?;
    written.push(p);
    Ok(written)
}

/// Percentile ranges of after-crop scores per crop fraction.
pub fn write_range_report(dir: &Path, groups: &[(f64, Vec<f64>)]) -> Result<Vec<PathBuf>> {
    let rows = metrics::range_summary(groups)?;
    let csv_path = dir.join("range_summary.csv");
    csvio::write_range_summary(&csv_path, &rows)?;
    let line = |label: &str, f: fn(&metrics::RangeRow) -> f64| svg::PlotSeries {
        label: label.into(),
        points: rows.iter().map(|r| (r.crop_fraction, f(r))).collect(),
    };
    let chart = svg::Chart {
        title: "Score range by centre crop size".into(),
        x_label: "crop fraction".into(),
        y_label: "memorability score".into(),
        series: vec![line("p05", |r| r.p05), line("median", |r| r.median), line("p95", |r| r.p95)],
    };
    let svg_path = dir.join("range_summary.svg");
    svg::emit_plot(&chart, &svg_path)?;
    Ok(vec![csv_path, svg_path])
}
