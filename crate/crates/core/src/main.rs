//! `soccer-sim` command-line interface.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 I/O, 4 file format,
//! 5 incompatible policy or layout, 6 replay verification mismatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use soccer_sim::bench::run_bench;
use soccer_sim::config::{ConfigError, PresetName, SimConfig};
use soccer_sim::env::{EnvError, ObsLayout};
use soccer_sim::evaluation::{
    read_trace, render_table, run_suite, verify_trace, EvalError, ReplayError, Report,
    ReportColumn, SuiteOptions,
};
use soccer_sim::policy::{
    load_policy, parameter_count, Controller, PolicyError, PolicyFileError, ScriptedController,
    ZeroController, POLICY_FORMAT_VERSION,
};
use soccer_sim::scenario::{
    load_scenarios, scenarios_to_toml, ScenarioError, ScenarioName, ScenarioSpec,
};

/// Environment variable naming the directory searched for `<preset>.toml`
/// when a preset name is not built in.
const CONFIG_DIR_ENV: &str = "SOCCER_SIM_CONFIG_DIR";

#[derive(Parser)]
#[command(
    name = "soccer-sim",
    version,
    about = "Abstract 2D multi-robot soccer simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an evaluation suite and write a metrics report.
    Eval(EvalArgs),
    /// Measure environment throughput with random actions.
    Bench(BenchArgs),
    /// Summarize and optionally verify a replay trace.
    Replay(ReplayArgs),
    /// List configuration presets or print one as TOML.
    Presets(PresetsArgs),
    /// List evaluation scenarios or export them as TOML.
    Scenarios(ScenariosArgs),
    /// Dump the header of a policy file.
    PolicyInfo(PolicyInfoArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Built-in preset, or `<name>.toml` inside $SOCCER_SIM_CONFIG_DIR.
    #[arg(long, default_value = "eval_realistic")]
    preset: String,
    /// TOML config file; overrides --preset.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Policy file to evaluate.
    #[arg(long, required_unless_present_any = ["scripted", "zero"], conflicts_with_all = ["scripted", "zero"])]
    policy: Option<PathBuf>,
    /// Use the built-in chase-and-kick controller instead of a policy file.
    #[arg(long, conflicts_with = "zero")]
    scripted: bool,
    /// Use the always-zero controller.
    #[arg(long)]
    zero: bool,
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated scenario names.
    #[arg(long, value_delimiter = ',', default_values_t = ["BS1".to_string(), "BS2".into(), "BS3".into(), "D1".into(), "D2".into(), "D3".into()])]
    scenarios: Vec<String>,
    /// TOML scenario file; replaces --scenarios.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Machine-readable report destination (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one replay trace per trial into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Column label; defaults to the policy's training preset.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "full_marl")]
    preset: String,
    /// Steps per world.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    worlds: u64,
    /// Worker counts to measure, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize])]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReplayArgs {
    trace: PathBuf,
    /// Re-simulate and check every record bit for bit.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct PresetsArgs {
    /// Print this preset as TOML.
    #[arg(long)]
    show: Option<String>,
}

#[derive(Args)]
struct ScenariosArgs {
    /// Write the fixed scenarios to this TOML file.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyInfoArgs {
    policy: PathBuf,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

const USAGE: u8 = 2;
const IO: u8 = 3;
const FORMAT: u8 = 4;
const INCOMPATIBLE: u8 = 5;
const VERIFY: u8 = 6;

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::UnknownPreset(_) => USAGE,
            ConfigError::Io { .. } => IO,
            ConfigError::Parse { .. } | ConfigError::SchemaVersion { .. } => FORMAT,
            ConfigError::Invalid { .. } => FORMAT,
        };
        Self::new(code, e)
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Unknown(_) => Self::new(USAGE, e),
            ScenarioError::File(c) => c.into(),
            other => Self::new(INCOMPATIBLE, other),
        }
    }
}

impl From<PolicyFileError> for CliError {
    fn from(e: PolicyFileError) -> Self {
        let code = match &e {
            PolicyFileError::Io { .. } => IO,
            _ => FORMAT,
        };
        Self::new(code, e)
    }
}

impl From<ReplayError> for CliError {
    fn from(e: ReplayError) -> Self {
        let code = match &e {
            ReplayError::Io { .. } => IO,
            ReplayError::Parse { .. } | ReplayError::Format { .. } | ReplayError::Empty => FORMAT,
            ReplayError::Divergence { .. }
            | ReplayError::Incomplete { .. }
            | ReplayError::Overlong { .. } => VERIFY,
            ReplayError::Env(_) => INCOMPATIBLE,
        };
        Self::new(code, e)
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(c) => c.into(),
            EnvError::Scenario(s) => s.into(),
            other => Self::new(1, other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Env(e) => e.into(),
            EvalError::Replay(e) => e.into(),
            EvalError::Policy(p @ PolicyError::LayoutMismatch { .. })
            | EvalError::Policy(p @ PolicyError::InputDimension { .. }) => {
                Self::new(INCOMPATIBLE, p)
            }
            EvalError::NoTrials | EvalError::NoScenarios => Self::new(USAGE, e),
            other => Self::new(1, other),
        }
    }
}

fn resolve_preset(name: &str) -> Result<(String, SimConfig), CliError> {
    if let Ok(p) = name.parse::<PresetName>() {
        return Ok((p.as_str().to_string(), p.config()));
    }
    if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
        let path = Path::new(&dir).join(format!("{name}.toml"));
        if path.is_file() {
            return Ok((name.to_string(), SimConfig::load(&path)?));
        }
    }
    Err(ConfigError::UnknownPreset(name.to_string()).into())
}

fn resolve_config(args: &ConfigArgs) -> Result<(String, SimConfig), CliError> {
    match &args.config {
        Some(path) => {
            let config = SimConfig::load(path)?;
            let label = path
                .file_stem()
                .map_or_else(|| "custom".into(), |s| s.to_string_lossy().into_owned());
            Ok((label, config))
        }
        None => resolve_preset(&args.preset),
    }
}

fn preset_label(name: &str) -> String {
    name.parse::<PresetName>()
        .map_or_else(|_| name.to_string(), |p| p.display_name().to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::new(IO, format!("{}: {e}", path.display())))
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let (preset, config) = resolve_config(&args.config)?;
    let scenarios = match &args.scenario_file {
        Some(path) => load_scenarios(path)?,
        None => args
            .scenarios
            .iter()
            .map(|s| ScenarioSpec::by_name(s.trim()))
            .collect::<Result<Vec<_>, _>>()?,
    };
    for s in &scenarios {
        s.validate(&config)?;
    }
    let (controller, default_label): (Box<dyn Controller>, String) = match &args.policy {
        Some(path) => {
            let policy = load_policy(path)?;
            let label = if policy.metadata.preset.is_empty() {
                path.file_stem()
                    .map_or_else(|| "policy".into(), |s| s.to_string_lossy().into_owned())
            } else {
                preset_label(&policy.metadata.preset)
            };
            (Box::new(policy), label)
        }
        None if args.zero => (Box::new(ZeroController), "zero".to_string()),
        None => (
            Box::new(ScriptedController::new(&config)),
            "scripted".to_string(),
        ),
    };
    if let Some(dir) = &args.trace_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new(IO, format!("{}: {e}", dir.display())))?;
    }
    let options = SuiteOptions {
        workers: args.workers,
        trace_dir: args.trace_dir.clone(),
    };
    let suite = run_suite(
        controller.as_ref(),
        &scenarios,
        &config,
        args.trials as usize,
        args.seed,
        &options,
    )?;
    let report = Report::new(
        &preset,
        args.trials as usize,
        args.seed,
        vec![ReportColumn {
            label: args.label.unwrap_or(default_label),
            summaries: suite.summaries,
        }],
    );
    print!("{}", render_table(&report));
    if let Some(out) = &args.out {
        write_file(out, &report.to_json())?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let (_, config) = resolve_preset(&args.preset)?;
    let scenario = ScenarioSpec::random_train();
    let mut reports = Vec::new();
    for &w in &args.workers {
        if w == 0 {
            return Err(CliError::new(USAGE, "worker counts must be positive"));
        }
        let (report, _) = run_bench(
            &config,
            &scenario,
            args.worlds as usize,
            args.steps,
            w,
            args.seed,
        )?;
        if !args.json {
            println!(
                "workers {:>2}  worlds {:>4}  steps {:>10}  {:>9.3} s  {:>12.0} steps/s  digest {:016x}",
                report.workers, report.worlds, report.total_steps, report.seconds, report.steps_per_sec, report.digest
            );
        }
        reports.push(report);
    }
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&reports).expect("bench report serializes")
        );
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), CliError> {
    let trace = read_trace(&args.trace)?;
    let h = &trace.header;
    println!("trace      {}", args.trace.display());
    println!("scenario   {}", h.scenario.name);
    println!("seed       {}", h.seed);
    println!("controller {}", h.controller);
    println!("layout     {}", h.obs_layout_version);
    println!("steps      {}", trace.records.len());
    if let Some(last) = trace.final_record() {
        let outcome = if last.events.goal_scored {
            format!("goal at {:.2} s", last.step as f64 * h.config.dt)
        } else if last.terminated {
            "ball out of bounds".to_string()
        } else if last.truncated {
            "timeout".to_string()
        } else {
            "unfinished".to_string()
        };
        println!("outcome    {outcome}");
    }
    if args.verify {
        let n = verify_trace(&trace)?;
        println!("OK: {n} steps match bit for bit");
    }
    Ok(())
}

fn cmd_presets(args: PresetsArgs) -> Result<(), CliError> {
    if let Some(name) = args.show {
        let (_, config) = resolve_preset(&name)?;
        print!("{}", config.to_toml());
        return Ok(());
    }
    let base = PresetName::FullMarl.config();
    for p in PresetName::ALL {
        let diff = p.config().semantic_diff(&base);
        let diff = if diff.is_empty() {
            "-".to_string()
        } else {
            diff.join(", ")
        };
        println!(
            "{:<26} {:<30} differs from full_marl in: {diff}",
            p.as_str(),
            p.display_name()
        );
    }
    Ok(())
}

fn cmd_scenarios(args: ScenariosArgs) -> Result<(), CliError> {
    let fixed = ScenarioSpec::all_fixed();
    if let Some(path) = args.export {
        return write_file(&path, &scenarios_to_toml(&fixed));
    }
    for s in &fixed {
        let agents: Vec<String> = s
            .agent_poses
            .iter()
            .map(|p| {
                format!(
                    "({:.2}, {:.2}, {:.2} rad)",
                    p.position.x,
                    p.position.y,
                    p.heading()
                )
            })
            .collect();
        let defenders: Vec<String> = s
            .defender_poses
            .iter()
            .map(|p| format!("({:.2}, {:.2})", p.position.x, p.position.y))
            .collect();
        println!(
            "{:<5} ball ({:.2}, {:.2})  agents {}  defenders {}",
            s.name.row_label(),
            s.ball_position.x,
            s.ball_position.y,
            agents.join(" "),
            if defenders.is_empty() {
                "none".to_string()
            } else {
                defenders.join(" ")
            }
        );
    }
    println!(
        "{:<5} random overlap-free placement, defender present half the time",
        ScenarioName::RandomTrain
    );
    Ok(())
}

fn cmd_policy_info(args: PolicyInfoArgs) -> Result<(), CliError> {
    let policy = load_policy(&args.policy)?;
    let sizes: Vec<String> = policy.layer_sizes().iter().map(|n| n.to_string()).collect();
    println!("file               {}", args.policy.display());
    println!("format_version     {POLICY_FORMAT_VERSION}");
    println!("obs_layout_version {}", policy.layout_version());
    println!("layer_sizes        {}", sizes.join(" x "));
    println!(
        "parameters         {}",
        parameter_count(policy.layer_sizes())
    );
    println!(
        "preset             {}",
        if policy.metadata.preset.is_empty() {
            "-"
        } else {
            &policy.metadata.preset
        }
    );
    println!("training_steps     {}", policy.metadata.training_steps);
    let default_layout = ObsLayout::for_config(&PresetName::FullMarl.config()).version();
    let compatible = if policy.layout_version() == default_layout {
        "yes"
    } else {
        "no"
    };
    println!("matches default    {compatible} ({default_layout})");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Presets(a) => cmd_presets(a),
        Command::Scenarios(a) => cmd_scenarios(a),
        Command::PolicyInfo(a) => cmd_policy_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
