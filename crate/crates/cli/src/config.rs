use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Echo the parsed geometry with g, Q and h0 at the base point.
    Inspect,
    /// Connection, disformation and curvature at --x0.
    Connection,
    /// Effective metric H at --x0 with a degeneracy report.
    SolveH,
    /// Loop defect of H around a square at --x0, under step halving.
    Holonomy,
    /// Integrate an autoparallel or geodesic and write the trajectory.
    Integrate,
    /// Integrate an autoparallel and evaluate the action and its EL residual.
    VerifyAction,
    /// Helmholtz residuals at seeded random states.
    CheckHelmholtz,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Inspect => "inspect",
            Command::Connection => "connection",
            Command::SolveH => "solve-h",
            Command::Holonomy => "holonomy",
            Command::Integrate => "integrate",
            Command::VerifyAction => "verify-action",
            Command::CheckHelmholtz => "check-helmholtz",
        }
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Autoparallel,
    Geodesic,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplier {
    /// H from transport of h0.
    Solved,
    /// H = g.
    Metric,
}

#[derive(ValueEnum, Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Force {
    Autoparallel,
    LeviCivita,
}

fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_span(s: &str) -> Result<[f64; 2], String> {
    match parse_vector(s)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        other => Err(format!("expected two values, got {}", other.len())),
    }
}

/// Flags as given; `None` means not on the command line. Vectors are
/// spelled `::std::vec::Vec` so clap takes them as one comma-separated value.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Geometry JSON file.
    #[arg(long, global = true)]
    pub geometry: Option<PathBuf>,
    /// Run configuration JSON; its entries win over flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Point, comma-separated (defaults to the base point).
    #[arg(long, global = true, value_parser = parse_vector, allow_hyphen_values = true)]
    pub x0: Option<::std::vec::Vec<f64>>,
    /// Initial velocity, comma-separated.
    #[arg(long, global = true, value_parser = parse_vector, allow_hyphen_values = true)]
    pub v0: Option<::std::vec::Vec<f64>>,
    /// Curve parameter range `a,b`.
    #[arg(long, global = true, value_parser = parse_span, allow_hyphen_values = true)]
    pub lambda_span: Option<[f64; 2]>,
    /// Integrator steps (solve-h: per unit distance; holonomy: per edge at the coarsest level).
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Pass tolerance for the subcommand's main residual.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Tolerance on the relative drift of H(v, v) (verify-action).
    #[arg(long, global = true)]
    pub drift_tol: Option<f64>,
    /// Random states (check-helmholtz).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Half-width of the sampling box around --x0 (check-helmholtz).
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<Kind>,
    /// Use the adaptive Dormand-Prince integrator (rtol 1e-9).
    #[arg(long, global = true)]
    pub adaptive: bool,
    /// Side of the holonomy square.
    #[arg(long, global = true)]
    pub side: Option<f64>,
    /// Number of step halvings (holonomy).
    #[arg(long, global = true)]
    pub halvings: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub multiplier: Option<Multiplier>,
    #[arg(long, global = true, value_enum)]
    pub force: Option<Force>,
}

/// Fully resolved run configuration, echoed in every report.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    pub geometry: PathBuf,
    pub x0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
    pub lambda_span: [f64; 2],
    pub steps: usize,
    pub tol: f64,
    pub drift_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub kind: Kind,
    pub adaptive: bool,
    pub side: f64,
    pub halvings: usize,
    pub multiplier: Multiplier,
    pub force: Force,
}

pub const ADAPTIVE_RTOL: f64 = 1e-9;

impl RunConfig {
    /// Defaults for `command`, then flags, then entries of the config file.
    /// Returns warnings for flags overridden by the file.
    pub fn resolve(
        command: Command,
        flags: &Flags,
        file: Option<&Value>,
    ) -> Result<(Self, Vec<String>), String> {
        let (steps, tol, format) = match command {
            Command::SolveH => (256, 1e-10, Format::Json),
            Command::Holonomy => (8, 1e-9, Format::Json),
            Command::CheckHelmholtz => (0, 1e-7, Format::Json),
            Command::Integrate => (1000, 0.0, Format::Csv),
            _ => (1000, 1e-6, Format::Json),
        };
        let mut cfg = RunConfig {
            subcommand: command.name().to_string(),
            geometry: flags.geometry.clone().unwrap_or_default(),
            x0: flags.x0.clone(),
            v0: flags.v0.clone(),
            lambda_span: flags.lambda_span.unwrap_or([0.0, 1.0]),
            steps: flags.steps.unwrap_or(steps),
            tol: flags.tol.unwrap_or(tol),
            drift_tol: flags.drift_tol.unwrap_or(1e-7),
            samples: flags.samples.unwrap_or(100),
            seed: flags.seed.unwrap_or(0),
            radius: flags.radius.unwrap_or(0.5),
            output: flags.output.clone(),
            format: flags.format.unwrap_or(format),
            kind: flags.kind.unwrap_or(Kind::Autoparallel),
            adaptive: flags.adaptive,
            side: flags.side.unwrap_or(0.1),
            halvings: flags.halvings.unwrap_or(4),
            multiplier: flags.multiplier.unwrap_or(Multiplier::Solved),
            force: flags.force.unwrap_or(Force::Autoparallel),
        };
        let mut warnings = Vec::new();
        if let Some(file) = file {
            let Value::Object(entries) = file else {
                return Err("config file must hold a JSON object".into());
            };
            let mut merged = match serde_json::to_value(&cfg).map_err(|e| e.to_string())? {
                Value::Object(m) => m,
                _ => unreachable!("RunConfig serializes to an object"),
            };
            let given = given_flags(flags);
            for (key, value) in entries {
                if key == "subcommand" {
                    continue;
                }
                if !merged.contains_key(key) {
                    return Err(format!("unknown config key `{key}`"));
                }
                if given.contains(&key.as_str()) && merged[key] != *value {
                    warnings.push(format!("config file overrides --{}", key.replace('_', "-")));
                }
                merged.insert(key.clone(), value.clone());
            }
            cfg = serde_json::from_value(Value::Object(merged))
                .map_err(|e| format!("config file: {e}"))?;
        }
        if cfg.geometry.as_os_str().is_empty() {
            return Err("--geometry is required".into());
        }
        Ok((cfg, warnings))
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Object(Map::new()))
    }
}

fn given_flags(f: &Flags) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut mark = |present: bool, name: &'static str| {
        if present {
            out.push(name);
        }
    };
    mark(f.geometry.is_some(), "geometry");
    mark(f.x0.is_some(), "x0");
    mark(f.v0.is_some(), "v0");
    mark(f.lambda_span.is_some(), "lambda_span");
    mark(f.steps.is_some(), "steps");
    mark(f.tol.is_some(), "tol");
    mark(f.drift_tol.is_some(), "drift_tol");
    mark(f.samples.is_some(), "samples");
    mark(f.seed.is_some(), "seed");
    mark(f.radius.is_some(), "radius");
    mark(f.output.is_some(), "output");
    mark(f.format.is_some(), "format");
    mark(f.kind.is_some(), "kind");
    mark(f.adaptive, "adaptive");
    mark(f.side.is_some(), "side");
    mark(f.halvings.is_some(), "halvings");
    mark(f.multiplier.is_some(), "multiplier");
    mark(f.force.is_some(), "force");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_parse() {
        assert_eq!(parse_vector("1, -2.5,3e-1").unwrap(), vec![1.0, -2.5, 0.3]);
        assert!(parse_vector("1,,2").is_err());
        assert!(parse_span("0,1,2").is_err());
    }

    #[test]
    fn file_wins_with_warning() {
        let flags = Flags {
            geometry: Some("g.json".into()),
            steps: Some(10),
            seed: Some(3),
            ..Flags::default()
        };
        let file = serde_json::json!({"steps": 20, "seed": 3, "tol": 1e-3});
        let (cfg, warnings) =
            RunConfig::resolve(Command::VerifyAction, &flags, Some(&file)).unwrap();
        assert_eq!((cfg.steps, cfg.seed, cfg.tol), (20, 3, 1e-3));
        assert_eq!(warnings, vec!["config file overrides --steps".to_string()]);
        let bad = serde_json::json!({"stepz": 1});
        assert!(RunConfig::resolve(Command::VerifyAction, &flags, Some(&bad)).is_err());
    }

    #[test]
    fn geometry_required() {
        assert!(RunConfig::resolve(Command::Inspect, &Flags::default(), None).is_err());
    }
}
