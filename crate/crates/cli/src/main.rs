mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use sicyig_core::config::load_config;
use sicyig_core::report::Format;
use sicyig_core::{Error, Result};

use args::{Cli, Command, FormatArg};
use commands::Run;
use output::{seconds, write_dir, write_stdout, RunManifest};

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::FieldMap(_) => "field-map",
        Command::Swr(_) => "swr",
        Command::EprSpectrum(_) => "epr-spectrum",
        Command::DeerSim(_) => "deer-sim",
        Command::DeerFit(_) => "deer-fit",
        Command::Snr(_) => "snr",
        Command::Yield(_) => "yield",
        Command::PhcBands(_) => "phc-bands",
        Command::Design(_) => "design",
        Command::Reproduce(_) => "reproduce",
    }
}

fn execute(cli: &Cli) -> Result<(Run, Vec<String>)> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Error::argument("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::argument(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&g.config)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let run = match &cli.command {
        Command::FieldMap(a) => commands::field_map(&cfg, a),
        Command::Swr(a) => commands::swr(&cfg, a),
        Command::EprSpectrum(a) => commands::epr_spectrum(&cfg, a),
        Command::DeerSim(a) => commands::deer_sim(&cfg, a, g.seed),
        Command::DeerFit(a) => commands::deer_fit(&cfg, a),
        Command::Snr(a) => commands::snr(&cfg, a),
        Command::Yield(a) => commands::yield_(&cfg, a),
        Command::PhcBands(a) => commands::phc_bands(&cfg, a),
        Command::Design(a) => commands::design(&cfg, a),
        Command::Reproduce(a) => commands::reproduce_cmd(&cfg, a, g.seed),
    }?;
    let fmt = match g.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let paths = match &g.out {
        Some(dir) => write_dir(dir, &run.outputs, fmt)?,
        None => write_stdout(&run.outputs, fmt)?,
    };
    Ok((run, paths))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let start = Instant::now();
    let (code, outputs) = match execute(&cli) {
        Ok((run, paths)) => (if run.failed { EXIT_NUMERICAL } else { 0 }, paths),
        Err(e) => {
            eprintln!("error: {e}");
            (if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID }, Vec::new())
        }
    };
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command).into(),
        config: cli.global.config.display().to_string(),
        seed: cli.global.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        threads: rayon::current_num_threads(),
        wall_time_s: seconds(start.elapsed()),
        exit_code: i32::from(code),
        outputs,
    };
    match &cli.global.out {
        Some(dir) if dir.is_dir() => {
            let path = dir.join("manifest.json");
            let text = serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n";
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
            }
        }
        _ => eprintln!("manifest: {}", serde_json::to_string(&manifest).unwrap_or_default()),
    }
    ExitCode::from(code)
}
