//! `varpath`: effective metrics, autoparallels and variational checks for
//! torsion-free metric-affine geometries given as JSON files.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use config::{Command, Flags, RunConfig};
use varpath::GeometrySpec;

#[derive(Parser)]
#[command(name = "varpath", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

const EXIT_TOLERANCE: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn error_record(
    config: Option<&RunConfig>,
    kind: &str,
    message: String,
    key: Option<&str>,
) -> Value {
    let mut err = json!({ "kind": kind, "message": message });
    if let Some(key) = key {
        err["key"] = Value::from(key);
    }
    json!({
        "config": config.map(RunConfig::to_value),
        "error": err,
        "pass": false,
    })
}

fn emit(value: &Value, cfg: Option<&RunConfig>, command: Command) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    // integrate writes the trajectory to --output; the report goes to stdout.
    match cfg.and_then(|c| c.output.as_ref()) {
        Some(path) if command != Command::Integrate => fs::write(path, text),
        _ => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn fail(cfg: Option<&RunConfig>, command: Command, record: Value) -> ExitCode {
    eprintln!(
        "varpath: {}",
        record["error"]["message"].as_str().unwrap_or("error")
    );
    let _ = emit(&record, cfg, command);
    ExitCode::from(EXIT_ERROR)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command;

    let file = match &cli.flags.config {
        Some(path) => match fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<Value>(&t).map_err(|e| e.to_string()))
        {
            Ok(v) => Some(v),
            Err(e) => {
                return fail(
                    None,
                    command,
                    error_record(None, "config", format!("{}: {e}", path.display()), None),
                )
            }
        },
        None => None,
    };
    let cfg = match RunConfig::resolve(command, &cli.flags, file.as_ref()) {
        Ok((cfg, warnings)) => {
            for w in warnings {
                eprintln!("varpath: warning: {w}");
            }
            cfg
        }
        Err(e) => return fail(None, command, error_record(None, "config", e, None)),
    };

    let outcome =
        GeometrySpec::load(&cfg.geometry).and_then(|spec| commands::run(command, &cfg, &spec));
    match outcome {
        Ok(out) => {
            let report =
                json!({ "config": cfg.to_value(), "results": out.results, "pass": out.pass });
            // A streamed trajectory owns stdout.
            let streamed = command == Command::Integrate && cfg.output.is_none();
            if !streamed {
                if let Err(e) = emit(&report, Some(&cfg), command) {
                    eprintln!("varpath: {e}");
                    return ExitCode::from(EXIT_ERROR);
                }
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_TOLERANCE)
            }
        }
        Err(e) => {
            let record = error_record(Some(&cfg), e.kind(), e.to_string(), e.key());
            fail(Some(&cfg), command, record)
        }
    }
}
