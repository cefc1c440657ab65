//! Command-line front end.
//!
//! Every value resolves in the order flag, `--config` file, built-in
//! default. The resolved values are written as `# key=value` lines at the
//! top of each CSV, so a result file can be passed back as `--config`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dictlearn::{load_dictionary, read_dictionary_text, save_dictionary, write_dictionary_text, DictLearnConfig};
use crate::error::{Error, Result};
use crate::linops::{dct_dictionary, Dictionary};
use crate::measurements::{apply_measurement, estimate_clip_model, MeasurementModel, Observation};
use crate::parallel::Execution;
use crate::pipeline::{
    format_sig, gen_synthetic, mean, run_synthetic, wav_read, wav_write, write_csv, AudioJob, Distortion, EvalRow,
    FrameSpec, Method, Problem, Reconstruction, SyntheticSpec,
};

#[derive(Debug, Parser)]
#[command(name = "nlcs", version, about = "Consistent sparse coding and dictionary learning from nonlinear measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic sparse signals through a distortion sweep.
    Synth(Opts),
    /// Restore a clipped recording.
    Declip(Opts),
    /// Restore a quantized recording.
    Dequant(Opts),
    /// Recover a recording from its signs.
    Onebit(Opts),
    /// Classical linear baselines (synthetic, or on INPUT when given).
    Baseline(Opts),
    /// Learn a dictionary from a recording and save it to --out.
    LearnDict(Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Declip(_) => "declip",
            Command::Dequant(_) => "dequant",
            Command::Onebit(_) => "onebit",
            Command::Baseline(_) => "baseline",
            Command::LearnDict(_) => "learn-dict",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Synth(o)
            | Command::Declip(o)
            | Command::Dequant(o)
            | Command::Onebit(o)
            | Command::Baseline(o)
            | Command::LearnDict(o) => o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fixed,
    Adaptive,
    Iht,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistortionArg {
    Clip,
    Quant,
    Onebit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReconstructArg {
    Consistent,
    Synthesis,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Input WAV file.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV path (synth, baseline), WAV path (audio commands) or dictionary
    /// path (learn-dict).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Option<Vec<MethodArg>>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    /// Solver iterations (synth) or coding and learning rounds (audio).
    #[arg(long)]
    pub iters: Option<u32>,
    /// Inner iterations of each dictionary learning step.
    #[arg(long)]
    pub inner: Option<u32>,
    /// Sparsity: nonzeros per synthetic code, or the IHT budget.
    #[arg(short = 'K')]
    pub k: Option<u32>,
    #[arg(long)]
    pub frame: Option<u32>,
    #[arg(long)]
    pub overlap: Option<f64>,
    /// `dct` or `file:PATH`.
    #[arg(long)]
    pub dict: Option<String>,
    #[arg(long)]
    pub learn: bool,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub stdout: bool,
    #[arg(long, value_enum)]
    pub distortion: Option<DistortionArg>,
    /// Clip levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
    /// Quantizer bit depths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub bits: Option<Vec<u32>>,
    /// Estimate clip thresholds from the input instead of clipping it.
    #[arg(long)]
    pub detect: bool,
    /// Number of synthetic signals.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub reconstruct: Option<ReconstructArg>,
    /// Disable data parallelism.
    #[arg(long)]
    pub sequential: bool,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub seed: u64,
    pub distortion: Option<DistortionArg>,
    pub thetas: Vec<f64>,
    pub bits: Vec<u32>,
    pub methods: Vec<MethodArg>,
    pub lambda: f64,
    pub epsilon: f64,
    pub decay: f64,
    pub iters: u32,
    pub inner: u32,
    pub k: u32,
    pub count: usize,
    pub frame: u32,
    pub overlap: f64,
    pub dict: String,
    pub learn: bool,
    pub detect: bool,
    pub reconstruct: ReconstructArg,
    pub sequential: bool,
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad value {s:?} for {key}"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
}

fn parse_enum<T: ValueEnum>(key: &str, v: &str) -> Result<T> {
    T::from_str(v.trim(), true).map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Reads `key=value` lines. Blank lines and `#` comments are skipped, except
/// that `# key=value` lines are read too; reading stops at the first other
/// line, so a CSV written by this tool is a valid config file.
pub fn read_config<R: BufRead>(r: R) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let body = t.strip_prefix('#').map(str::trim).unwrap_or(t);
        match body.split_once('=') {
            Some((k, v)) => {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
            None if t.starts_with('#') => continue,
            None => break,
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Merges flags over the config file over defaults.
    pub fn resolve(command: &Command) -> Result<Self> {
        let opts = command.opts();
        let name = command.name();
        let file = match &opts.config {
            Some(p) => read_config(BufReader::new(File::open(p)?))?,
            None => BTreeMap::new(),
        };
        let known = [
            "command", "input", "reference", "seed", "distortion", "theta", "bits", "method", "lambda", "epsilon",
            "decay", "iters", "inner", "k", "count", "frame", "overlap", "dict", "learn", "detect", "reconstruct",
            "sequential",
        ];
        if let Some(k) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown config key {k:?}")));
        }
        if let Some(c) = file.get("command") {
            if c != name {
                log::warn!("config was written by `{c}`, running `{name}`");
            }
        }
        let get = |k: &str| file.get(k).map(String::as_str);
        let audio = matches!(name, "declip" | "dequant" | "onebit" | "learn-dict")
            || (name == "baseline" && (opts.input.is_some() || get("input").is_some()));

        let distortion = match (opts.distortion, get("distortion")) {
            (Some(d), _) => Some(d),
            (None, Some(v)) if !v.is_empty() => Some(parse_enum("distortion", v)?),
            _ => match name {
                "declip" => Some(DistortionArg::Clip),
                "dequant" => Some(DistortionArg::Quant),
                "onebit" => Some(DistortionArg::Onebit),
                _ => None,
            },
        };
        let methods = match (&opts.method, get("method")) {
            (Some(m), _) => m.clone(),
            (None, Some(v)) => v.split(',').map(|s| parse_enum("method", s)).collect::<Result<_>>()?,
            (None, None) => match name {
                "baseline" => vec![MethodArg::Baseline],
                "synth" => vec![MethodArg::Fixed, MethodArg::Adaptive, MethodArg::Baseline],
                _ => vec![MethodArg::Iht],
            },
        };
        let bool_flag = |flag: bool, k: &str| -> Result<bool> {
            Ok(flag || get(k).map(|v| parse_one::<bool>(k, v)).transpose()?.unwrap_or(false))
        };
        macro_rules! pick {
            ($flag:expr, $key:literal, $default:expr) => {
                match $flag {
                    Some(v) => v,
                    None => match get($key) {
                        Some(v) => parse_one($key, v)?,
                        None => $default,
                    },
                }
            };
        }
        let cfg = RunConfig {
            command: name.to_string(),
            input: opts.input.clone().or_else(|| get("input").filter(|v| !v.is_empty()).map(PathBuf::from)),
            reference: opts
                .reference
                .clone()
                .or_else(|| get("reference").filter(|v| !v.is_empty()).map(PathBuf::from)),
            seed: pick!(opts.seed, "seed", 0),
            distortion,
            thetas: match (&opts.theta, get("theta")) {
                (Some(t), _) => t.clone(),
                (None, Some(v)) => parse_list("theta", v)?,
                (None, None) if audio => vec![0.2],
                (None, None) => (1..=10).map(|i| f64::from(i) / 10.0).collect(),
            },
            bits: match (&opts.bits, get("bits")) {
                (Some(b), _) => b.clone(),
                (None, Some(v)) => parse_list("bits", v)?,
                (None, None) if audio => vec![3],
                (None, None) => (2..=8).collect(),
            },
            methods,
            lambda: pick!(opts.lambda, "lambda", 1e-2),
            epsilon: pick!(opts.epsilon, "epsilon", 1e-3),
            decay: pick!(opts.decay, "decay", 0.5),
            iters: pick!(opts.iters, "iters", if audio { 50 } else { 400 }),
            inner: pick!(opts.inner, "inner", 20),
            k: pick!(opts.k, "k", if audio { 32 } else { 4 }),
            count: pick!(opts.count, "count", 2000),
            frame: pick!(opts.frame, "frame", 256),
            overlap: pick!(opts.overlap, "overlap", 0.75),
            dict: pick!(opts.dict.clone(), "dict", "dct".to_string()),
            learn: bool_flag(opts.learn, "learn")?,
            detect: bool_flag(opts.detect, "detect")?,
            reconstruct: match (opts.reconstruct, get("reconstruct")) {
                (Some(r), _) => r,
                (None, Some(v)) => parse_enum("reconstruct", v)?,
                (None, None) => ReconstructArg::Consistent,
            },
            sequential: bool_flag(opts.sequential, "sequential")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no method selected".into()));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument(format!("clip level {t} must be positive")));
        }
        if let Some(b) = self.bits.iter().find(|b| !(1..=16).contains(*b)) {
            return Err(Error::InvalidArgument(format!("bit depth {b} must be in 1..=16")));
        }
        if self.iters == 0 || self.inner == 0 || self.k == 0 || self.count == 0 || self.frame == 0 {
            return Err(Error::InvalidArgument("iteration counts, K, count and frame must be positive".into()));
        }
        if !(self.lambda >= 0.0) || !(self.epsilon > 0.0) || !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument("need lambda >= 0, epsilon > 0 and decay in (0, 1)".into()));
        }
        if self.dict != "dct" && !self.dict.starts_with("file:") {
            return Err(Error::InvalidArgument(format!("--dict must be dct or file:PATH, got {}", self.dict)));
        }
        Ok(())
    }

    /// `key=value` pairs, in a fixed order, for embedding in outputs.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let v = [
            ("command", self.command.clone()),
            ("input", path(&self.input)),
            ("reference", path(&self.reference)),
            ("seed", self.seed.to_string()),
            ("distortion", self.distortion.map(|d| enum_name(&d)).unwrap_or_default()),
            ("theta", join(&self.thetas)),
            ("bits", join(&self.bits)),
            ("method", self.methods.iter().map(enum_name).collect::<Vec<_>>().join(",")),
            ("lambda", self.lambda.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("decay", self.decay.to_string()),
            ("iters", self.iters.to_string()),
            ("inner", self.inner.to_string()),
            ("k", self.k.to_string()),
            ("count", self.count.to_string()),
            ("frame", self.frame.to_string()),
            ("overlap", self.overlap.to_string()),
            ("dict", self.dict.clone()),
            ("learn", self.learn.to_string()),
            ("detect", self.detect.to_string()),
            ("reconstruct", enum_name(&self.reconstruct)),
            ("sequential", self.sequential.to_string()),
        ];
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn reconstruction(&self) -> Reconstruction {
        match self.reconstruct {
            ReconstructArg::Consistent => Reconstruction::Consistent,
            ReconstructArg::Synthesis => Reconstruction::Synthesis,
        }
    }

    fn frame_spec(&self) -> FrameSpec {
        FrameSpec { frame_len: self.frame as usize, overlap: self.overlap }
    }

    /// Distortions to run, in sweep order.
    fn distortions(&self, kinds: &[DistortionArg]) -> Vec<Distortion> {
        let mut out = Vec::new();
        for kind in kinds {
            match kind {
                DistortionArg::Clip => out.extend(self.thetas.iter().map(|&theta| Distortion::Clip { theta })),
                DistortionArg::Quant => out.extend(self.bits.iter().map(|&bits| Distortion::Quant { bits })),
                DistortionArg::Onebit => out.push(Distortion::OneBit),
            }
        }
        out
    }

    /// Solver and treatment for a method choice. The classical baseline
    /// uses the continuation on synthetic data and IHT on audio.
    fn solver(&self, choice: MethodArg, audio: bool) -> (Method, bool) {
        let adaptive = Method::Adaptive { epsilon: self.epsilon, decay: self.decay };
        let iht = Method::Iht { sparsity: self.k as usize };
        match choice {
            MethodArg::Fixed => (Method::Fixed { lambda: self.lambda }, false),
            MethodArg::Adaptive => (adaptive, false),
            MethodArg::Iht => (iht, false),
            MethodArg::Baseline => (if audio { iht } else { adaptive }, true),
        }
    }

    fn learn_config(&self, method: &Method) -> DictLearnConfig {
        DictLearnConfig {
            outer_iters: self.iters as usize,
            dict_iters: self.inner as usize,
            coding: method.learning_config(self.inner as usize),
            exec: self.exec(),
            ..DictLearnConfig::default()
        }
    }

    fn dictionary(&self, signal_dim: usize) -> Result<Dictionary> {
        match self.dict.strip_prefix("file:") {
            Some(path) => {
                let path = Path::new(path);
                let d = if path.extension().is_some_and(|e| e == "txt") {
                    read_dictionary_text(BufReader::new(File::open(path)?))?
                } else {
                    load_dictionary(path)?
                };
                if d.signal_dim() != signal_dim {
                    return Err(Error::DimensionMismatch { expected: signal_dim, got: d.signal_dim() });
                }
                Ok(d)
            }
            None => dct_dictionary(signal_dim, 2 * signal_dim),
        }
    }
}

/// Outcome of a command.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    pub rows: Vec<EvalRow>,
    /// Rows that were requested but could not be produced.
    pub failures: Vec<String>,
}

fn synth_rows(cfg: &RunConfig, kinds: &[DistortionArg]) -> Result<Report> {
    let spec = SyntheticSpec { seed: cfg.seed, sparsity: cfg.k as usize, count: cfg.count, ..Default::default() };
    let set = gen_synthetic(&spec)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for d in cfg.distortions(kinds) {
        for &choice in &cfg.methods {
            let (method, classical) = cfg.solver(choice, false);
            let label = enum_name(&choice);
            log::info!("{} {label}: {} signals", d.label(), set.signals.len());
            let start = Instant::now();
            let res = run_synthetic(&set, &d, &method, cfg.iters as usize, classical, cfg.reconstruction(), cfg.exec());
            let runtime_s = start.elapsed().as_secs_f64();
            match res {
                Ok(snrs) => rows.push(EvalRow {
                    distortion: d.label(),
                    method: label,
                    snr_db: mean(&snrs),
                    runtime_s,
                    seed: cfg.seed,
                }),
                Err(e) => {
                    log::error!("{} {label}: {e}", d.label());
                    failures.push(format!("{} {label}", d.label()));
                }
            }
        }
    }
    Ok(Report { config: cfg.clone(), rows, failures })
}

fn peak(x: &ndarray::Array1<f64>) -> f64 {
    x.fold(0.0_f64, |p, v| p.max(v.abs()))
}

fn audio_rows(cfg: &RunConfig, kinds: &[DistortionArg], out: Option<&Path>) -> Result<Report> {
    let input = cfg.input.as_ref().ok_or_else(|| Error::InvalidArgument("an input WAV file is required".into()))?;
    let wav = wav_read(input)?;
    let scale = peak(&wav.samples);
    if scale == 0.0 {
        return Err(Error::DegenerateObservation(format!("{} is silent", input.display())));
    }
    let x = &wav.samples / scale;
    let reference = match &cfg.reference {
        Some(p) => {
            let r = wav_read(p)?;
            if r.samples.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: x.len(), got: r.samples.len() });
            }
            Some(r.samples)
        }
        None => None,
    };
    let frame = cfg.frame_spec();
    let dict = cfg.dictionary(frame.frame_len)?;

    let distortions = cfg.distortions(kinds);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let multiple = distortions.len() * cfg.methods.len() > 1;
    for d in &distortions {
        let obs: Observation = match d {
            Distortion::Clip { .. } if cfg.detect => estimate_clip_model(x.view())?,
            _ => apply_measurement(&d.model()?, x.view())?,
        };
        let label_d = match (d, &obs.model()) {
            (Distortion::Clip { .. }, MeasurementModel::Clip { upper, .. }) if cfg.detect => {
                format!("clip:{}", format_sig(*upper))
            }
            _ => d.label(),
        };
        for &choice in &cfg.methods {
            let (method, classical) = cfg.solver(choice, true);
            let mut label = enum_name(&choice);
            if cfg.learn {
                label.push_str("+learn");
            }
            log::info!("{label_d} {label}: {} samples", x.len());
            let job = AudioJob {
                frame,
                method,
                iters: cfg.iters as usize,
                learn: cfg.learn.then(|| cfg.learn_config(&method)),
                classical,
                reconstruction: cfg.reconstruction(),
                exec: cfg.exec(),
            };
            let start = Instant::now();
            let restored = match job.restore(&obs, &dict) {
                Ok(r) => r,
                Err(e) => {
                    log::error!("{label_d} {label}: {e}");
                    failures.push(format!("{label_d} {label}"));
                    continue;
                }
            };
            let runtime_s = start.elapsed().as_secs_f64();
            let estimate = &restored.signal * scale;
            if let Some(path) = out {
                let path = if multiple { numbered(path, rows.len() + failures.len()) } else { path.to_path_buf() };
                wav_write(&path, estimate.view(), wav.sample_rate)?;
                log::info!("wrote {}", path.display());
            }
            if let Some(r) = &reference {
                match d.score(estimate.view(), r.view()) {
                    Ok(snr_db) => rows.push(EvalRow {
                        distortion: label_d.clone(),
                        method: label,
                        snr_db,
                        runtime_s,
                        seed: cfg.seed,
                    }),
                    Err(e) => {
                        log::error!("{label_d} {label}: {e}");
                        failures.push(format!("{label_d} {label}"));
                    }
                }
            }
        }
    }
    Ok(Report { config: cfg.clone(), rows, failures })
}

/// `out.wav` becomes `out.<i>.wav`.
fn numbered(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}.{i}{ext}"))
}

fn learn_dict(cfg: &RunConfig, out: Option<&Path>) -> Result<Report> {
    let input = cfg.input.as_ref().ok_or_else(|| Error::InvalidArgument("an input WAV file is required".into()))?;
    let out = out.ok_or_else(|| Error::InvalidArgument("--out is required for learn-dict".into()))?;
    let wav = wav_read(input)?;
    let scale = peak(&wav.samples);
    if scale == 0.0 {
        return Err(Error::DegenerateObservation(format!("{} is silent", input.display())));
    }
    let x = &wav.samples / scale;
    let obs = match cfg.distortion {
        None => apply_measurement(&MeasurementModel::Identity, x.view())?,
        Some(DistortionArg::Clip) if cfg.detect => estimate_clip_model(x.view())?,
        Some(kind) => {
            let d = cfg.distortions(&[kind]);
            let d = d.first().ok_or_else(|| Error::InvalidArgument("empty distortion sweep".into()))?;
            apply_measurement(&d.model()?, x.view())?
        }
    };
    let frame = cfg.frame_spec();
    let init = cfg.dictionary(frame.frame_len)?;
    let (method, classical) = cfg.solver(cfg.methods[0], true);
    let frames = crate::pipeline::frame_observation(&obs, &frame)?;
    let problem = Problem::with_treatment(frames, classical)?;
    let learned = problem.learn(&init, &method, &cfg.learn_config(&method))?;
    for (i, (a, b)) in learned.trace.after_coding.iter().zip(&learned.trace.after_dictionary).enumerate() {
        log::info!("round {}: objective {a:.6e} after coding, {b:.6e} after dictionary step", i + 1);
    }
    if out.extension().is_some_and(|e| e == "txt") {
        write_dictionary_text(&learned.dictionary, BufWriter::new(File::create(out)?))?;
    } else {
        save_dictionary(&learned.dictionary, out)?;
    }
    log::info!("wrote {}", out.display());
    Ok(Report { config: cfg.clone(), rows: Vec::new(), failures: Vec::new() })
}

/// Runs one command and writes its outputs.
pub fn run(cli: &Cli) -> Result<Report> {
    let cfg = RunConfig::resolve(&cli.command)?;
    let opts = cli.command.opts();
    let all = [DistortionArg::Clip, DistortionArg::Quant, DistortionArg::Onebit];
    let kinds: Vec<DistortionArg> = match cfg.distortion {
        Some(d) => vec![d],
        None => all.to_vec(),
    };
    let (report, csv_path) = match &cli.command {
        Command::Synth(_) => (synth_rows(&cfg, &kinds)?, opts.out.clone()),
        Command::Baseline(_) if cfg.input.is_none() => (synth_rows(&cfg, &kinds)?, opts.out.clone()),
        Command::Baseline(_) => (audio_rows(&cfg, &kinds, None)?, opts.out.clone()),
        Command::Declip(_) | Command::Dequant(_) | Command::Onebit(_) => {
            let out = opts.out.as_deref();
            (audio_rows(&cfg, &kinds, out)?, out.map(|p| p.with_extension("csv")))
        }
        Command::LearnDict(_) => return learn_dict(&cfg, opts.out.as_deref()),
    };
    if opts.stdout || csv_path.is_none() {
        write_csv(io::stdout().lock(), &report.config.pairs(), &report.rows)?;
    }
    if let Some(path) = csv_path {
        let mut f = BufWriter::new(File::create(&path)?);
        write_csv(&mut f, &report.config.pairs(), &report.rows)?;
        f.flush()?;
        log::info!("wrote {}", path.display());
    }
    Ok(report)
}

/// Entry point of the `nlcs` binary.
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) if report.failures.is_empty() => std::process::ExitCode::SUCCESS,
        Ok(report) => {
            log::error!("{} requested rows not produced", report.failures.len());
            std::process::ExitCode::FAILURE
        }
        Err(e) => {
            log::error!("{e}");
            std::process::ExitCode::FAILURE
        }
    }
}
