mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{ApproxArgs, DriftArgs, ExponentsArgs, NfArgs, RerunArgs, ScalingArgs, SdmArgs};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "nekolab", version, about = "Periodic averaging, SDM checks and drift experiments")]
struct Cli {
    /// TOML file with one table per command; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root for run directories (default: $NEKOLAB_RUNS, else ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sampling and scaling runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dirichlet approximation of a direction by a periodic vector.
    #[command(args_override_self = true)]
    Approx(ApproxArgs),
    /// Multi-stage averaging normal form.
    #[command(args_override_self = true)]
    Nf(NfArgs),
    /// SDM check and optional prevalence estimate for an integrable h.
    #[command(args_override_self = true)]
    Sdm(SdmArgs),
    /// Integrate one orbit and record action drift.
    #[command(args_override_self = true)]
    Drift(DriftArgs),
    /// Escape time against ε with a log-log fit.
    #[command(args_override_self = true)]
    Scaling(ScalingArgs),
    /// Stability exponents and the smallness ledger.
    #[command(args_override_self = true)]
    Exponents(ExponentsArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

pub const COMMANDS: [&str; 7] = ["approx", "nf", "sdm", "drift", "scaling", "exponents", "rerun"];

/// Globals that do not belong in a manifest.
fn strip_globals(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if ["--config", "--out", "--jobs"].contains(&a.as_str()) {
            skip = true;
        } else if !(a.starts_with("--config=") || a.starts_with("--out=") || a.starts_with("--jobs=")) {
            out.push(a.clone());
        }
    }
    out
}

fn find_config(argv: &[String]) -> Option<PathBuf> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).map(PathBuf::from)
        } else {
            a.strip_prefix("--config=").map(PathBuf::from)
        }
    })
}

/// Splices config flags in right after the command name.
fn expand(argv: Vec<String>) -> Result<(Vec<String>, Option<String>), String> {
    let Some(pos) = argv.iter().skip(1).position(|a| COMMANDS.contains(&a.as_str())).map(|p| p + 1) else {
        return Ok((argv, None));
    };
    let Some(cfg) = find_config(&argv) else { return Ok((argv, None)) };
    let extra = config::section_args(&cfg, &argv[pos])?;
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok((out, Some(cfg.display().to_string())))
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let (argv, config_file) = match expand(raw) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let pos = argv.iter().skip(1).position(|a| COMMANDS.contains(&a.as_str())).map_or(argv.len(), |p| p + 2);
    let ctx = commands::Context {
        root: cli.out.clone().unwrap_or_else(output::default_root),
        args: strip_globals(&argv[pos.min(argv.len())..]),
        config_file,
    };
    let result = match &cli.command {
        Command::Approx(a) => commands::approx(a, &ctx),
        Command::Nf(a) => commands::nf(a, &ctx),
        Command::Sdm(a) => commands::sdm(a, &ctx),
        Command::Drift(a) => commands::drift(a, &ctx),
        Command::Scaling(a) => commands::scaling(a, &ctx),
        Command::Exponents(a) => commands::exponents(a, &ctx),
        Command::Rerun(a) => rerun(a, cli.out.clone()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn rerun(a: &RerunArgs, out: Option<PathBuf>) -> Result<u8, String> {
    let text = std::fs::read_to_string(a.run.join("manifest.json")).map_err(|e| format!("cannot read manifest: {e}"))?;
    let m: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("bad manifest: {e}"))?;
    let command = m["command"].as_str().ok_or("manifest has no command")?.to_string();
    let args: Vec<String> = m["args"]
        .as_array()
        .ok_or("manifest has no args")?
        .iter()
        .map(|v| v.as_str().map(String::from).ok_or("non-string argument"))
        .collect::<Result<_, _>>()?;
    let root = out.unwrap_or_else(|| a.run.parent().map(PathBuf::from).unwrap_or_else(output::default_root));
    let mut argv = vec!["nekolab".to_string(), command];
    argv.extend(args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
    let ctx = commands::Context { root, args, config_file: None };
    match &cli.command {
        Command::Nf(a) => commands::nf(a, &ctx),
        Command::Sdm(a) => commands::sdm(a, &ctx),
        Command::Drift(a) => commands::drift(a, &ctx),
        Command::Scaling(a) => commands::scaling(a, &ctx),
        Command::Exponents(a) => commands::exponents(a, &ctx),
        Command::Approx(_) | Command::Rerun(_) => Err("manifest names a command without a run directory".into()),
    }
}
