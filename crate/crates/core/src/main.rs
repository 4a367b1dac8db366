use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use memcrop::error::{Error, Result};
use memcrop::io::{config, csvio, frames, maps, trajectory};
use memcrop::pipeline::{self, Manifest, Settings, WORKERS_ENV};
use memcrop::render::render_video_with;
use memcrop::score::Scorer;

macro_rules! setting_args {
    ($($field:ident),* $(,)?) => {
        /// Pipeline settings. Every flag can also be given as `key = value` in
        /// the `--config` file; flags win over the file.
        #[derive(Args, Debug, Default)]
        struct SettingArgs {
            /// Flat key=value config file
            #[arg(long)]
            config: Option<PathBuf>,
            $(
                #[arg(long, value_name = "VALUE")]
                $field: Option<String>,
            )*
        }

        impl SettingArgs {
            fn pairs(&self) -> Result<BTreeMap<String, String>> {
                let mut pairs = match &self.config {
                    Some(path) => config::read_config(path)?,
                    None => BTreeMap::new(),
                };
                if let Ok(workers) = std::env::var(WORKERS_ENV) {
                    pairs.insert("workers".into(), workers);
                }
                $(
                    if let Some(v) = &self.$field {
                        pairs.insert(stringify!($field).to_string(), v.clone());
                    }
                )*
                Ok(pairs)
            }
        }
    };
}

setting_args!(
    strategy,
    crop_fraction,
    threshold_k,
    padding_fraction,
    zoom_rmse_max,
    slope_epsilon,
    smoothing_window,
    centroid_source,
    min_crop_side,
    resize_to_source,
    interpolation,
    scorer,
    scores,
    score_value,
    scorer_after,
    scores_after,
    score_value_after,
    saliency,
    blur_radius,
    saliency_dir,
    stride,
    offset,
    workers,
    fail_fast,
    crop_fractions,
    thresholds,
    write_frames,
);

impl SettingArgs {
    /// Settings only; `root` and `out` from a shared config file are ignored.
    fn settings(&self) -> Result<Settings> {
        let mut pairs = self.pairs()?;
        pairs.remove("root");
        pairs.remove("out");
        Settings::from_pairs(&pairs)
    }
}

#[derive(Parser, Debug)]
#[command(name = "memcrop", version, about = "Saliency-guided video cropping and memorability evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute saliency maps for the sampled frames of one video
    Saliency {
        #[arg(long)]
        video: PathBuf,
        /// Map store directory; maps go to <out>/<video_id>/<frame_index>.<format>
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "png", value_parser = ["png", "csv"])]
        format: String,
        #[command(flatten)]
        settings: SettingArgs,
    },
    /// Plan a crop trajectory for one video
    Plan {
        #[arg(long)]
        video: PathBuf,
        /// Trajectory JSON-lines output
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: SettingArgs,
    },
    /// Apply a trajectory to a video and write the cropped frames
    Render {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: SettingArgs,
    },
    /// Score videos and write `video_id,score`
    Score {
        /// A video directory (repeatable)
        #[arg(long)]
        video: Vec<PathBuf>,
        /// A directory of video directories (repeatable)
        #[arg(long)]
        root: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-frame `video_id,frame_index,score`
        #[arg(long)]
        frame_scores: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingArgs,
    },
    /// Join before/after video scores into an evaluation CSV
    Evaluate {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write metric reports from evaluation CSVs
    Report {
        #[arg(long)]
        eval: PathBuf,
        /// Second run over the same videos (e.g. variable vs fixed tracking)
        #[arg(long)]
        compare: Option<PathBuf>,
        /// FRACTION=EVAL_CSV for the crop-size range summary (repeatable)
        #[arg(long = "range")]
        ranges: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        settings: SettingArgs,
    },
    /// Run the whole pipeline over one or more roots of video directories
    Run {
        #[arg(long)]
        root: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Saliency {
            video,
            out,
            format,
            settings,
        } => {
            let settings = settings.settings()?;
            let seq = frames::ingest_frames(&video)?;
            let indices = settings.sample_indices(seq.len())?;
            let format = if format == "csv" { maps::MapFormat::Csv } else { maps::MapFormat::Png };
            let exec = settings.execution();
            let results = exec.install(|| {
                exec.map(&indices, |&i| {
                    let map = settings.saliency.compute(&seq.frames()[i], seq.video_id(), i)?;
                    maps::write_map(&map, &maps::map_path(&out, seq.video_id(), i, format), format)
                })
            });
            results.into_iter().collect::<Result<Vec<_>>>()?;
            println!("wrote {} saliency maps for {}", indices.len(), seq.video_id());
        }
        Command::Plan { video, out, settings } => {
            let settings = settings.settings()?;
            let seq = frames::ingest_frames(&video)?;
            let traj = pipeline::plan_video(&seq, &settings, &settings.plan, settings.execution())?;
            trajectory::write_trajectory(&traj, &out)?;
            let meta = traj.meta();
            println!(
                "{}: {} rects, strategy {}{}",
                traj.video_id(),
                traj.rects().len(),
                meta.strategy,
                if meta.fallback { " (fell back to fixed size)" } else { "" }
            );
        }
        Command::Render {
            video,
            trajectory: traj_path,
            out,
            settings,
        } => {
            let settings = settings.settings()?;
            let seq = frames::ingest_frames(&video)?;
            let traj = trajectory::read_trajectory(&traj_path)?;
            let exec = settings.execution();
            let rendered = exec.install(|| render_video_with(&seq, &traj, &settings.render, exec))?;
            frames::write_frames(&rendered, &out)?;
            println!("rendered {} frames to {}", rendered.len(), out.display());
        }
        Command::Score {
            video,
            root,
            out,
            frame_scores,
            settings,
        } => {
            let settings = settings.settings()?;
            let mut dirs = video;
            for r in &root {
                dirs.extend(frames::list_video_dirs(r)?);
            }
            if dirs.is_empty() {
                return Err(Error::InvalidArgument("give at least one --video or --root".into()));
            }
            score_command(&dirs, &out, frame_scores.as_deref(), &settings)?;
        }
        Command::Evaluate { before, after, out } => {
            let before = csvio::read_video_scores(&before)?;
            let after = csvio::read_video_scores(&after)?;
            let records = csvio::join_scores(&before, &after)?;
            csvio::write_evaluation(&out, &records)?;
            println!("wrote {} evaluation records", records.len());
        }
        Command::Report {
            eval,
            compare,
            ranges,
            out,
            settings,
        } => {
            let settings = settings.settings()?;
            let records = csvio::read_evaluation(&eval)?;
            if records.is_empty() {
                return Err(Error::malformed_input(&eval, "no evaluation records"));
            }
            let other = compare.as_deref().map(csvio::read_evaluation).transpose()?;
            let mut written = pipeline::write_reports(&out, &records, other.as_deref(), &settings.thresholds)?;
            if !ranges.is_empty() {
                let groups = ranges
                    .iter()
                    .map(|spec| {
                        let (fraction, path) = spec.split_once('=').ok_or_else(|| {
                            Error::InvalidArgument(format!("--range expects FRACTION=CSV, got `{spec}`"))
                        })?;
                        let fraction: f64 = fraction
                            .parse()
                            .map_err(|_| Error::InvalidArgument(format!("bad crop fraction `{fraction}`")))?;
                        let scores = csvio::read_evaluation(Path::new(path))?
                            .into_iter()
                            .map(|r| r.score_after)
                            .collect();
                        Ok((fraction, scores))
                    })
                    .collect::<Result<Vec<_>>>()?;
                written.extend(pipeline::write_range_report(&out, &groups)?);
            }
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Run { root, out, settings } => {
            let mut pairs = settings.pairs()?;
            if !root.is_empty() {
                let joined: Vec<String> = root.iter().map(|p| p.display().to_string()).collect();
                pairs.insert("root".into(), joined.join(","));
            }
            if let Some(out) = out {
                pairs.insert("out".into(), out.display().to_string());
            }
            let manifest = Manifest::from_pairs(&pairs)?;
            let summary = pipeline::run_pipeline(&manifest)?;
            let p = memcrop::metrics::improvement_partition(&summary.records);
            println!(
                "{} videos: {} improved, {} decreased, {} unchanged",
                summary.records.len(),
                p.improved,
                p.decreased,
                p.unchanged
            );
            if !summary.failures.is_empty() {
                for (id, msg) in &summary.failures {
                    eprintln!("failed: {id}: {msg}");
                }
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn score_command(dirs: &[PathBuf], out: &Path, frame_scores: Option<&Path>, settings: &Settings) -> Result<()> {
    let scorer = Scorer::from_config(&settings.scorer)?;
    let exec = settings.execution();
    let results = exec.install(|| {
        exec.map(dirs, |dir| -> Result<(csvio::VideoScoreRow, Vec<csvio::FrameScoreRow>)> {
            let seq = frames::ingest_frames(dir)?;
            let indices = settings.sample_indices(seq.len())?;
            let mut rows = Vec::with_capacity(indices.len());
            for &i in &indices {
                let s = scorer.score_frame(&seq.frames()[i], seq.video_id(), i)?;
                rows.push(csvio::FrameScoreRow {
                    video_id: seq.video_id().to_string(),
                    frame_index: i,
                    score: s.value(),
                });
            }
            let video = scorer.score_video(&seq, &indices)?;
            Ok((
                csvio::VideoScoreRow {
                    video_id: seq.video_id().to_string(),
                    score: video.value(),
                },
                rows,
            ))
        })
    });
    let mut videos = Vec::new();
    let mut per_frame = Vec::new();
    for r in results {
        let (v, f) = r?;
        videos.push(v);
        per_frame.extend(f);
    }
    csvio::write_video_scores(out, &videos)?;
    if let Some(path) = frame_scores {
        csvio::write_frame_scores(path, &per_frame)?;
    }
    println!("scored {} videos", videos.len());
    Ok(())
}
