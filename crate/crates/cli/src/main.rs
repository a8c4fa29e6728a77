//! `lcvs` command-line tool.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage or configuration error,
//! 3 missing or unreadable file, 4 corrupt stream, 5 shape mismatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lcvs::annotation::{read_annotations, write_annotations};
use lcvs::backtrace::{accumulate, write_accumulated};
use lcvs::bench::{bench_accumulate, linear_fit};
use lcvs::codec::{decode, deserialize, encode, read_raw_video, serialize, write_raw_video, GopStream};
use lcvs::config::PipelineConfig;
use lcvs::eval::{corpus_report, pair_predictions, Prediction};
use lcvs::model::{ModelParams, WeightsFile};
use lcvs::pipeline::{detect, extract_timeline};
use lcvs::synth::{baseline_detector, generate_all, hard_cut_suite, CutFamily, SynthSpec, DEFAULT_BASELINE_TAU};
use lcvs::training::{loss_trace_csv, micro_train, training_labels};
use lcvs::Error;

const DEMO_SPEC: &str = include_str!("demo_spec.json");

#[derive(Parser)]
#[command(name = "lcvs", version, about = "Event boundary detection over compressed GOP video streams")]
struct Cli {
    /// Pipeline configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// The bundled three-segment demo clip.
    Demo,
    /// 64×64 hard-cut clips.
    HardCut,
    /// Short 64×48 micro-training clips.
    Training,
}

#[derive(Subcommand)]
enum Command {
    /// Render synthetic clips (`<id>.lcvr`) and their `annotations.json`.
    Synth {
        /// JSON file holding one clip spec or a list of them.
        #[arg(long, conflicts_with = "family")]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "demo")]
        family: Family,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Raw video (LCVR) → compressed stream (LCVS).
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compressed stream (LCVS) → raw video (LCVR).
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Dump accumulated motion/residual planes (LCVA).
    Accumulate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score a stream and pick boundaries; writes detection JSON.
    Detect {
        input: PathBuf,
        /// Weights JSON; seeded initialization from the config when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Defaults to the input file stem.
        #[arg(long)]
        video_id: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Pixel-difference baseline on a raw video; writes prediction JSON.
    Baseline {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BASELINE_TAU)]
        tau: f64,
        #[arg(long)]
        video_id: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Finite-difference micro-training on streams named `<video_id>.lcvs`.
    Train {
        #[arg(required = true)]
        streams: Vec<PathBuf>,
        #[arg(long)]
        annotations: PathBuf,
        /// Starting weights; seeded initialization when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        weights_out: PathBuf,
        #[arg(long)]
        loss_out: PathBuf,
    },
    /// Score predictions against annotations; prints a table, optional CSV.
    Eval {
        /// Detection or prediction JSON files (an object or a list each).
        #[arg(long, required = true, num_args = 1..)]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time backtracing over growing GOP lengths and fit a line.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
        t_enc: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct DetectionOut {
    video_id: String,
    fps: f64,
    source_frames: Vec<usize>,
    scores: Vec<f64>,
    boundaries_s: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(t) => vec![t],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Lib { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::File { .. } => 3,
            CliError::Usage(_) => 2,
            CliError::Lib { source, .. } | CliError::Core(source) => match source {
                e if e.is_stream_corruption() => 4,
                Error::Io(_) => 3,
                Error::Config(_) | Error::Json(_) => 2,
                Error::Shape(_) | Error::InvalidDimensions(_) => 5,
                _ => 1,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::File { path: path.into(), source })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::File { path: path.into(), source })
}

fn at<T>(path: &Path, r: lcvs::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Lib { path: path.into(), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let bytes = read(path)?;
    at(path, serde_json::from_slice(&bytes).map_err(Error::from))
}

fn read_stream(path: &Path) -> CliResult<GopStream> {
    at(path, deserialize(&read(path)?))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn load_params(cfg: &PipelineConfig, weights: Option<&Path>) -> CliResult<(ModelParams, lcvs::model::ModelConfig)> {
    match weights {
        Some(p) => {
            let text = String::from_utf8_lossy(&read(p)?).into_owned();
            let file = at(p, WeightsFile::from_json(&text))?;
            at(p, file.into_model())
        }
        None => Ok((ModelParams::init(&cfg.model)?, cfg.model.clone())),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => {
            if !p.exists() {
                return Err(CliError::File {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "config file not found"),
                });
            }
            at(p, PipelineConfig::load(p))?
        }
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Synth { spec, family, count, seed, out_dir } => {
            let specs: Vec<SynthSpec> = match (spec, family) {
                (Some(p), _) => read_json::<OneOrMany<SynthSpec>>(&p)?.into_vec(),
                (None, Family::Demo) => vec![serde_json::from_str(DEMO_SPEC).map_err(Error::from)?],
                (None, Family::HardCut) => hard_cut_suite(count, seed),
                (None, Family::Training) => CutFamily::training().suite("train", count, seed),
            };
            fs::create_dir_all(&out_dir).map_err(|source| CliError::File { path: out_dir.clone(), source })?;
            let clips = generate_all(&specs)?;
            let mut anns = Vec::with_capacity(clips.len());
            for (video, ann) in clips {
                write(&out_dir.join(format!("{}.lcvr", ann.video_id)), write_raw_video(&video))?;
                anns.push(ann);
            }
            let ann_path = out_dir.join("annotations.json");
            at(&ann_path, write_annotations(&ann_path, &anns))?;
            println!("wrote {} clip(s) to {}", anns.len(), out_dir.display());
        }
        Command::Encode { input, output } => {
            let video = at(&input, read_raw_video(&read(&input)?))?;
            let stream = encode(&video, &cfg.codec.encoder())?;
            write(&output, serialize(&stream))?;
        }
        Command::Decode { input, output } => {
            let stream = read_stream(&input)?;
            write(&output, write_raw_video(&at(&input, decode(&stream))?))?;
        }
        Command::Accumulate { input, output } => {
            let stream = read_stream(&input)?;
            let gops = stream.gops.iter().map(accumulate).collect::<lcvs::Result<Vec<_>>>();
            let gops = at(&input, gops)?;
            write(&output, write_accumulated(stream.width(), stream.height(), &gops))?;
        }
        Command::Detect { input, weights, video_id, output } => {
            let stream = read_stream(&input)?;
            let (params, model) = load_params(&cfg, weights.as_deref())?;
            let det = at(&input, detect(&params, &model, &cfg.detect, &stream))?;
            let out = DetectionOut {
                video_id: video_id.unwrap_or_else(|| stem(&input)),
                fps: det.fps,
                source_frames: det.source_frames,
                scores: det.scores,
                boundaries_s: det.boundaries_s,
            };
            write(&output, serde_json::to_string_pretty(&out).map_err(Error::from)?)?;
            println!("{} boundaries", out.boundaries_s.len());
        }
        Command::Baseline { input, tau, video_id, output } => {
            let video = at(&input, read_raw_video(&read(&input)?))?;
            let pred = Prediction {
                video_id: video_id.unwrap_or_else(|| stem(&input)),
                boundaries_s: baseline_detector(&video, tau),
            };
            write(&output, serde_json::to_string_pretty(&pred).map_err(Error::from)?)?;
        }
        Command::Train { streams, annotations, weights, weights_out, loss_out } => {
            let anns = at(&annotations, read_annotations(&annotations))?;
            let (params, model) = load_params(&cfg, weights.as_deref())?;
            let labels_cfg = cfg.train.soft_labels();
            let mut dataset = Vec::with_capacity(streams.len());
            for path in &streams {
                let id = stem(path);
                let ann = anns
                    .iter()
                    .find(|a| a.video_id == id)
                    .ok_or_else(|| CliError::Usage(format!("no annotation for video {id}")))?;
                let stream = read_stream(path)?;
                let timeline = at(path, extract_timeline(&params, &model, &stream))?;
                let labels = at(path, training_labels(&timeline, ann, cfg.train.top_n_raters, &labels_cfg))?;
                dataset.push((stream, labels));
            }
            let outcome = micro_train(&params, &model, &dataset, &cfg.train)?;
            let file = WeightsFile::from_model(&outcome.params, &model);
            write(&weights_out, file.to_json()?)?;
            write(&loss_out, loss_trace_csv(&outcome.loss_trace))?;
            let (first, last) = (outcome.loss_trace[0], outcome.loss_trace[outcome.loss_trace.len() - 1]);
            println!("loss {first:.6} -> {last:.6}");
        }
        Command::Eval { predictions, annotations, csv } => {
            let anns = at(&annotations, read_annotations(&annotations))?;
            let mut preds = Vec::new();
            for p in &predictions {
                preds.extend(read_json::<OneOrMany<Prediction>>(p)?.into_vec());
            }
            let items = pair_predictions(&preds, &anns)?;
            let report = corpus_report(&items, &cfg.eval.thresholds)?;
            print!("{}", report.to_table());
            if let Some(path) = csv {
                write(&path, report.to_csv())?;
            }
        }
        Command::Bench { t_enc, size, reps, seed } => {
            if t_enc.len() < 2 {
                return Err(CliError::Usage("bench needs at least two GOP lengths".into()));
            }
            let points = bench_accumulate(&t_enc, size, size, reps, seed);
            println!("t_enc,seconds");
            for p in &points {
                println!("{},{:.9}", p.t_enc, p.seconds);
            }
            let xs: Vec<f64> = points.iter().map(|p| p.t_enc as f64).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.seconds).collect();
            let fit = linear_fit(&xs, &ys);
            println!("# slope {:.3e} s/frame, intercept {:.3e} s, r2 {:.4}", fit.slope, fit.intercept, fit.r2);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
