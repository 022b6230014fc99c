//! Command-line front end: `solve`, `generate`, `stats`, `train`, `eval`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{load_checkpoint, A2CHyper};
use crate::game::{EnvConfig, Encoding, DEFAULT_STEP_CAP};
use crate::harness::{
    self, evaluate, sha256_hex, shortest_path_stats, summary_report, write_metrics_csv, ExperimentConfig,
    HarnessError, METRICS_HEADER,
};
use crate::level_io::{parse_xsb, GenerateSpec, LevelIoError, LevelSet};
use crate::planner::{plan_string, solve_astar, HeuristicMode, PlanStatus};
use crate::shaping::ShapingConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Unsolvable(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Unsolvable(_) => 2,
            _ => 1,
        }
    }
}

impl From<LevelIoError> for CliError {
    fn from(e: LevelIoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Unsolvable(_) | HarnessError::Budget(_) => CliError::Unsolvable(e.to_string()),
            HarnessError::Validation(_) => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "sokoshape", version, about = "Sokoban planning and shaped A2C training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one XSB level with A* and print the plan.
    Solve(SolveArgs),
    /// Generate a level set (XSB files plus a manifest).
    Generate(GenerateArgs),
    /// Optimal solution lengths of a level set.
    Stats(StatsArgs),
    /// Train A2C on a level set, writing metrics CSVs and checkpoints.
    Train(Box<TrainArgs>),
    /// Greedy evaluation of a checkpoint on a level set.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// XSB level file.
    pub level: PathBuf,
    /// all-pairs, nearest-target or min-matching.
    #[arg(long, default_value = "min-matching")]
    pub heuristic: HeuristicMode,
    /// Maximum number of expanded nodes.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub boxes: usize,
    /// Board height including the outer wall.
    #[arg(long, default_value_t = 7)]
    pub height: usize,
    /// Board width including the outer wall.
    #[arg(long, default_value_t = 7)]
    pub width: usize,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Reverse-play pulls per level.
    #[arg(long, default_value_t = 20)]
    pub max_pulls: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Manifest or XSB file.
    pub levels: PathBuf,
    /// Write the per-level CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Every flag has a config-file key of the same name with `_` for `-`.
#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// `key = value` config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Level set manifest or XSB file; when absent a set is generated.
    #[arg(long)]
    pub levels: Option<String>,
    /// Seed for the generated set when `levels` is absent.
    #[arg(long)]
    pub generate_seed: Option<String>,
    #[arg(long)]
    pub n_boxes: Option<String>,
    /// Number of generated levels.
    #[arg(long)]
    pub n_levels: Option<String>,
    #[arg(long)]
    pub height: Option<String>,
    #[arg(long)]
    pub width: Option<String>,
    /// on or off.
    #[arg(long)]
    pub shaping: Option<String>,
    /// all-pairs, nearest-target or min-matching.
    #[arg(long)]
    pub heuristic: Option<String>,
    /// Use the discounted potential difference (true/false).
    #[arg(long)]
    pub gamma_in_potential: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub entropy_coef: Option<String>,
    #[arg(long)]
    pub value_loss_coef: Option<String>,
    #[arg(long)]
    pub rmsprop_eps: Option<String>,
    #[arg(long)]
    pub rmsprop_alpha: Option<String>,
    #[arg(long)]
    pub rollout_len: Option<String>,
    #[arg(long)]
    pub n_envs: Option<String>,
    /// A number, or `none` to disable clipping.
    #[arg(long)]
    pub max_grad_norm: Option<String>,
    /// Environment steps summed over all workers.
    #[arg(long)]
    pub total_steps: Option<String>,
    /// Evaluate every this many environment steps.
    #[arg(long)]
    pub eval_every: Option<String>,
    /// Levels per evaluation, sampled without replacement.
    #[arg(long)]
    pub eval_instances: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub step_cap: Option<String>,
    /// symbolic or pixel.
    #[arg(long)]
    pub observation: Option<String>,
    /// A node count, or `none`.
    #[arg(long)]
    pub planner_budget: Option<String>,
    /// Output directory for metrics and the summary.
    #[arg(long)]
    pub out: Option<String>,
    /// Save a checkpoint at every evaluation (true/false).
    #[arg(long)]
    pub checkpoints: Option<String>,
}

impl TrainArgs {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("levels", &self.levels),
            ("generate_seed", &self.generate_seed),
            ("n_boxes", &self.n_boxes),
            ("n_levels", &self.n_levels),
            ("height", &self.height),
            ("width", &self.width),
            ("shaping", &self.shaping),
            ("heuristic", &self.heuristic),
            ("gamma_in_potential", &self.gamma_in_potential),
            ("learning_rate", &self.learning_rate),
            ("gamma", &self.gamma),
            ("entropy_coef", &self.entropy_coef),
            ("value_loss_coef", &self.value_loss_coef),
            ("rmsprop_eps", &self.rmsprop_eps),
            ("rmsprop_alpha", &self.rmsprop_alpha),
            ("rollout_len", &self.rollout_len),
            ("n_envs", &self.n_envs),
            ("max_grad_norm", &self.max_grad_norm),
            ("total_steps", &self.total_steps),
            ("eval_every", &self.eval_every),
            ("eval_instances", &self.eval_instances),
            ("seeds", &self.seeds),
            ("step_cap", &self.step_cap),
            ("observation", &self.observation),
            ("planner_budget", &self.planner_budget),
            ("out", &self.out),
            ("checkpoints", &self.checkpoints),
        ]
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Level set manifest or XSB file.
    #[arg(long)]
    pub levels: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    /// Seed of the level sampling stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: u32,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected `key = value`", i + 1)));
        };
        let key = k.trim().replace('-', "_");
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Resolved `train` settings.
#[derive(Debug, Clone)]
pub struct TrainPlan {
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Validation(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Validation(format!("invalid value `{value}` for `{key}` (use on/off)"))),
    }
}

fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError> {
    if value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

/// Merges the config file with flags and builds the experiment.
pub fn resolve_train(args: &TrainArgs) -> Result<TrainPlan, CliError> {
    let mut map = match &args.config {
        Some(path) => parse_config_text(&fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?)?,
        None => BTreeMap::new(),
    };
    let flags = args.flags();
    if let Some(unknown) = map.keys().find(|k| !flags.iter().any(|(name, _)| name == k)) {
        return Err(CliError::Validation(format!("unknown config key `{unknown}`")));
    }
    for (key, value) in flags {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    let get = |k: &str| map.get(k).map(String::as_str);

    let level_set = match get("levels") {
        Some(path) => LevelSet::load(Path::new(path))?,
        None => {
            let seed = get("generate_seed").map_or(Ok(0), |v| parse_value("generate_seed", v))?;
            let spec = GenerateSpec {
                count: get("n_levels").map_or(Ok(20), |v| parse_value("n_levels", v))?,
                n_boxes: get("n_boxes").map_or(Ok(1), |v| parse_value("n_boxes", v))?,
                height: get("height").map_or(Ok(7), |v| parse_value("height", v))?,
                width: get("width").map_or(Ok(7), |v| parse_value("width", v))?,
                ..GenerateSpec::default()
            };
            LevelSet::generate(seed, spec)?
        }
    };
    let mut config = ExperimentConfig::new(level_set);
    let mut shaping = ShapingConfig::default();
    let mut hyper = A2CHyper::default();
    let mut out = PathBuf::from("runs");
    let mut checkpoints = false;
    for (key, value) in &map {
        let (k, v) = (key.as_str(), value.as_str());
        match k {
            "levels" | "generate_seed" | "n_boxes" | "n_levels" | "height" | "width" => {}
            "shaping" => shaping.enabled = parse_bool(k, v)?,
            "heuristic" => shaping.heuristic_mode = v.parse().map_err(CliError::Validation)?,
            "gamma_in_potential" => shaping.gamma_in_potential = parse_bool(k, v)?,
            "learning_rate" => hyper.learning_rate = parse_value(k, v)?,
            "gamma" => hyper.gamma = parse_value(k, v)?,
            "entropy_coef" => hyper.entropy_coef = parse_value(k, v)?,
            "value_loss_coef" => hyper.value_loss_coef = parse_value(k, v)?,
            "rmsprop_eps" => hyper.rmsprop_eps = parse_value(k, v)?,
            "rmsprop_alpha" => hyper.rmsprop_alpha = parse_value(k, v)?,
            "rollout_len" => hyper.rollout_len = parse_value(k, v)?,
            "n_envs" => hyper.n_envs = parse_value(k, v)?,
            "max_grad_norm" => hyper.max_grad_norm = parse_optional(k, v)?,
            "total_steps" => config.total_env_steps = parse_value(k, v)?,
            "eval_every" => config.eval_every = parse_value(k, v)?,
            "eval_instances" => config.eval_instances = parse_value(k, v)?,
            "seeds" => {
                config.seeds = v
                    .split(',')
                    .map(|s| parse_value("seeds", s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "step_cap" => config.step_cap = parse_value(k, v)?,
            "observation" => {
                config.encoding = match v.to_ascii_lowercase().as_str() {
                    "symbolic" => Encoding::Symbolic,
                    "pixel" => Encoding::Pixel,
                    _ => return Err(CliError::Validation(format!("invalid observation `{v}` (symbolic or pixel)"))),
                }
            }
            "planner_budget" => config.planner_budget = parse_optional(k, v)?,
            "out" => out = PathBuf::from(v),
            "checkpoints" => checkpoints = parse_bool(k, v)?,
            _ => unreachable!("keys were checked above"),
        }
    }
    shaping.gamma = hyper.gamma;
    config.shaping = shaping;
    config.hyper = hyper;
    if config.seeds.is_empty() {
        return Err(CliError::Validation("at least one seed is required".into()));
    }
    if checkpoints {
        config.checkpoint_dir = Some(out.join("checkpoints"));
    }
    config.validate()?;
    Ok(TrainPlan { config, out })
}

fn header_line(fields: &str) -> String {
    format!("# sokoshape {} config={} {fields}", env!("CARGO_PKG_VERSION"), sha256_hex(fields))
}

fn solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.level).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", args.level.display()))
    })?;
    let level = parse_xsb(&text)?;
    let result = solve_astar(&level, &level.initial_state(), args.heuristic, args.budget);
    match result.status {
        PlanStatus::Solved { plan, length } => {
            let _ = writeln!(out, "{}", plan_string(&plan));
            let _ = writeln!(out, "length {length}");
            let _ = writeln!(out, "nodes {}", result.nodes_expanded);
            Ok(())
        }
        PlanStatus::Unsolvable => Err(CliError::Unsolvable(format!(
            "level is unsolvable ({} nodes expanded)",
            result.nodes_expanded
        ))),
        PlanStatus::Budget => Err(CliError::Unsolvable(format!(
            "node budget of {} exhausted before a solution was found",
            args.budget.unwrap_or_default()
        ))),
    }
}

fn generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = GenerateSpec {
        count: args.count,
        n_boxes: args.boxes,
        height: args.height,
        width: args.width,
        max_pulls: args.max_pulls,
    };
    let set = LevelSet::generate(args.seed, spec)?;
    let manifest = set.write(&args.out)?;
    let fields = format!(
        "seed={} boxes={} height={} width={} count={} max_pulls={}",
        args.seed, args.boxes, args.height, args.width, args.count, args.max_pulls
    );
    let body = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
    fs::write(&manifest, format!("{}\n{body}", header_line(&fields))).map_err(io_err(&manifest))?;
    let _ = writeln!(out, "{}", manifest.display());
    Ok(())
}

fn stats(args: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let set = LevelSet::load(&args.levels)?;
    let stats = shortest_path_stats(&set)?;
    let csv = format!("{}\n{}", header_line(&format!("levels={}", args.levels.display())), stats.to_csv());
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).map_err(io_err(path))?;
            let _ = writeln!(out, "mean {:.4}", stats.mean);
        }
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    Ok(())
}

fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = resolve_train(args)?;
    let config = &plan.config;
    let mut results = Vec::new();
    for &seed in &config.seeds {
        let result = harness::train(config, seed)?;
        let path = plan.out.join(format!("metrics_seed{seed}.csv"));
        write_metrics_csv(&path, config, seed, &result.rows)?;
        let _ = writeln!(out, "{}", path.display());
        results.push(result);
    }
    let summary = plan.out.join("summary.txt");
    fs::write(&summary, summary_report(config, &results)).map_err(io_err(&summary))?;
    let _ = writeln!(out, "{}", summary.display());
    Ok(())
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = load_checkpoint(&args.checkpoint).map_err(|e| CliError::Validation(e.to_string()))?;
    let set = LevelSet::load(&args.levels)?;
    if args.instances == 0 || args.instances > set.len() {
        return Err(CliError::Validation(format!(
            "--instances must be between 1 and the level count ({})",
            set.len()
        )));
    }
    let (c, h, w) = params.arch().input;
    let encoding = if c == Encoding::Symbolic.channels() { Encoding::Symbolic } else { Encoding::Pixel };
    if let Some(bad) = set.levels.iter().find(|l| encoding.shape(l.height(), l.width()) != (c, h, w)) {
        return Err(CliError::Validation(format!(
            "level {} does not match the checkpoint input shape {:?}",
            bad.id(),
            (c, h, w)
        )));
    }
    let env = EnvConfig { step_cap: args.step_cap, ..EnvConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let stats = evaluate(&params, &set, args.instances, encoding, &env, &mut rng);
    let fields = format!(
        "checkpoint={} levels={} instances={} seed={} step_cap={}",
        args.checkpoint.display(),
        args.levels.display(),
        args.instances,
        args.seed,
        args.step_cap
    );
    let _ = writeln!(out, "{}", header_line(&fields));
    let _ = writeln!(out, "{METRICS_HEADER}");
    let _ = writeln!(
        out,
        "{},0,{},{},{},0.000,false",
        args.seed, stats.solved_ratio, stats.mean_return, stats.mean_ep_len
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Help and version requests print to `out` and succeed.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let msg = msg.strip_prefix("error: ").unwrap_or(&msg);
            return Err(CliError::Usage(msg.trim_end().to_string()));
        }
    };
    match &cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Generate(a) => generate(a, out),
        Command::Stats(a) => stats(a, out),
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_parsing() {
        let map = parse_config_text("# run\nshaping = off\n total-steps=10 # inline\n\n").unwrap();
        assert_eq!(map["shaping"], "off");
        assert_eq!(map["total_steps"], "10");
        assert!(parse_config_text("oops").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "shaping = on\ntotal_steps = 500\nseeds = 3, 4\nn_levels = 5\neval_instances = 5\n").unwrap();
        let args = TrainArgs {
            config: Some(cfg),
            shaping: Some("off".into()),
            ..TrainArgs::default()
        };
        let plan = resolve_train(&args).unwrap();
        assert!(!plan.config.shaping.enabled);
        assert_eq!(plan.config.total_env_steps, 500);
        assert_eq!(plan.config.seeds, vec![3, 4]);
        assert_eq!(plan.config.level_set.len(), 5);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "learning_rat = 0.1\n").unwrap();
        let args = TrainArgs { config: Some(cfg), ..TrainArgs::default() };
        let err = resolve_train(&args).unwrap_err();
        assert!(err.to_string().contains("learning_rat"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_flag_rejected() {
        let mut sink = Vec::new();
        let err = run(["sokoshape", "train", "--learning-rat", "0.1"], &mut sink).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert_eq!(err.exit_code(), 1);
    }
}
