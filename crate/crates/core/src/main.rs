use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use synfocus::config::{parse_config_for, ExperimentConfig, Mode};
use synfocus::pipeline::run;
use synfocus::Error;

/// Synthetic focusing experiments for ultrasound-modulated tomography.
#[derive(Debug, Parser)]
#[command(name = "synfocus", version)]
struct Cli {
    /// phantom, forward, kernel, measure, focus, endtoend or validate
    mode: Mode,
    /// `key = value` configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), Error> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::ConfigValue {
            key: "--config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config_for(&text, Some(cli.mode))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    let out = cli.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| Error::ConfigValue {
        key: "out".into(),
        message: "no output directory (pass --out DIR)".into(),
    })?;
    Ok((cfg, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (cfg, out) = match load(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match run(&cfg, &out) {
        Ok(metrics) => {
            for (k, v) in metrics.entries().iter().filter(|(k, _)| !k.starts_with("config.")) {
                println!("{k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
