use std::fs::File;
use std::io::{BufWriter, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use varpath::connection::{connection_at, rbar_symmetry_residuals};
use varpath::dynamics::{
    action_value, el_residual, generalized_proper_time, integrate_curve, norm_drift, CurveKind,
    Trajectory,
};
use varpath::expr::Order;
use varpath::helmholtz::{
    helmholtz_residuals_with, ForceModel, HSource, HelmholtzOptions, HelmholtzReport,
    MetricMultiplier,
};
use varpath::ode::Stepper;
use varpath::tensor::matrix_to_rows;
use varpath::transport::{
    degeneracy_check, h_at_with, holonomy_convergence, Path, TransportOptions,
};
use varpath::{Error, GeometrySpec, Result};

use crate::config::{Command, Force, Format, Kind, Multiplier, RunConfig, ADAPTIVE_RTOL};

pub struct Outcome {
    pub results: Value,
    pub pass: bool,
}

pub fn run(command: Command, cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    match command {
        Command::Inspect => inspect(spec),
        Command::Connection => connection(cfg, spec),
        Command::SolveH => solve_h(cfg, spec),
        Command::Holonomy => holonomy(cfg, spec),
        Command::Integrate => integrate(cfg, spec),
        Command::VerifyAction => verify_action(cfg, spec),
        Command::CheckHelmholtz => check_helmholtz(cfg, spec),
    }
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

fn point(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Vec<f64>> {
    let x = cfg.x0.clone().unwrap_or_else(|| spec.base_point().to_vec());
    if x.len() != spec.dim() {
        return Err(Error::Invalid(format!(
            "--x0 needs {} components",
            spec.dim()
        )));
    }
    Ok(x)
}

fn velocity(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Vec<f64>> {
    let v = cfg
        .v0
        .clone()
        .ok_or_else(|| Error::Invalid("--v0 is required".into()))?;
    if v.len() != spec.dim() {
        return Err(Error::Invalid(format!(
            "--v0 needs {} components",
            spec.dim()
        )));
    }
    Ok(v)
}

fn stepper(cfg: &RunConfig) -> Stepper {
    if cfg.adaptive {
        Stepper::adaptive(ADAPTIVE_RTOL)
    } else {
        Stepper::rk4(cfg.steps)
    }
}

fn transport_options(cfg: &RunConfig) -> TransportOptions {
    TransportOptions {
        adaptive_rtol: cfg.adaptive.then_some(ADAPTIVE_RTOL),
        ..TransportOptions::default()
    }
}

fn inspect(spec: &GeometrySpec) -> Result<Outcome> {
    let pf = spec.fields_at_order(spec.base_point(), Order::Value)?;
    Ok(Outcome {
        results: json!({
            "geometry": spec.to_json(),
            "weyl": spec.is_weyl(),
            "base_point": spec.base_point(),
            "g": matrix_to_rows(&pf.g),
            "det_g": pf.det_g,
            "q": pf.q,
            "h0": matrix_to_rows(spec.h0()),
            "h0_explicit": spec.h0_is_explicit(),
        }),
        pass: true,
    })
}

fn connection(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    let x = point(cfg, spec)?;
    let cp = connection_at(spec, &x)?;
    Ok(Outcome {
        results: json!({
            "x": x,
            "g": matrix_to_rows(&cp.fields.g),
            "q": cp.fields.q,
            "christoffel": cp.christoffel,
            "disformation": cp.disformation,
            "gamma": cp.gamma,
            "riemann": cp.riemann,
        }),
        pass: true,
    })
}

fn solve_h(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    let x = point(cfg, spec)?;
    let opts = TransportOptions {
        steps_per_unit: cfg.steps,
        degeneracy_threshold: cfg.tol,
        ..transport_options(cfg)
    };
    let state = h_at_with(spec, &x, &opts)?;
    let report = degeneracy_check(&state.h, cfg.tol);
    let rbar = rbar_symmetry_residuals(&connection_at(spec, &x)?, &state.h);
    Ok(Outcome {
        pass: !report.degenerate,
        results: json!({
            "state": to_value(&state)?,
            "degeneracy": to_value(&report)?,
            "rbar_symmetry": to_value(&rbar)?,
        }),
    })
}

/// Defects at or below this are round-off and carry no order information.
const DEFECT_FLOOR: f64 = 1e-12;

fn holonomy(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    if spec.dim() < 2 {
        return Err(Error::Invalid(
            "holonomy needs at least two coordinates".into(),
        ));
    }
    let corner = point(cfg, spec)?;
    let square = Path::square(&corner, cfg.side, 0, 1);
    let h_start = h_at_with(spec, &corner, &transport_options(cfg))?.h;
    let rows = holonomy_convergence(spec, &square, &h_start, cfg.steps.max(1), cfg.halvings)?;
    let last = rows.last().map_or(0.0, |r| r.defect);
    Ok(Outcome {
        pass: last <= cfg.tol,
        results: json!({
            "corner": corner,
            "side": cfg.side,
            "plane": [0, 1],
            "h_start": matrix_to_rows(&h_start),
            "rows": to_value(&rows)?,
            "final_defect": last,
            "at_round_off": last <= DEFECT_FLOOR,
        }),
    })
}

fn curve(cfg: &RunConfig, spec: &GeometrySpec, kind: CurveKind) -> Result<Trajectory> {
    let x0 = point(cfg, spec)?;
    let v0 = velocity(cfg, spec)?;
    let [a, b] = cfg.lambda_span;
    integrate_curve(spec, kind, &x0, &v0, (a, b), stepper(cfg))
}

fn write_trajectory<W: Write>(traj: &Trajectory, format: Format, mut w: W) -> Result<()> {
    match format {
        Format::Csv => traj.write_csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, traj)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn integrate(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    let kind = match cfg.kind {
        Kind::Autoparallel => CurveKind::Autoparallel,
        Kind::Geodesic => CurveKind::Geodesic,
    };
    let traj = curve(cfg, spec, kind)?;
    match &cfg.output {
        Some(path) => write_trajectory(&traj, cfg.format, BufWriter::new(File::create(path)?))?,
        None => write_trajectory(&traj, cfg.format, std::io::stdout().lock())?,
    }
    let last = traj
        .samples
        .last()
        .expect("trajectory has its initial sample");
    Ok(Outcome {
        results: json!({
            "kind": traj.kind,
            "samples": traj.samples.len(),
            "stats": to_value(&traj.stats)?,
            "final": { "lambda": last.lambda, "x": last.x, "v": last.v },
        }),
        pass: true,
    })
}

fn verify_action(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    let traj = curve(cfg, spec, CurveKind::Autoparallel)?;
    let report = el_residual(spec, &traj)?;
    let drift = norm_drift(spec, &traj)?;
    let action = action_value(spec, &traj)?;
    let gpt = generalized_proper_time(spec, &traj)?;
    let pass = report.el_residual_max <= cfg.tol && drift <= cfg.drift_tol;
    Ok(Outcome {
        pass,
        results: json!({
            "samples": traj.samples.len(),
            "stats": to_value(&traj.stats)?,
            "action": to_value(&report)?,
            "action_value": action,
            "norm_drift": drift,
            "generalized_proper_time": gpt,
            "el_residual_pass": report.el_residual_max <= cfg.tol,
            "norm_drift_pass": drift <= cfg.drift_tol,
        }),
    })
}

/// Worker count from `VARPATH_THREADS`, if set to a positive integer.
fn thread_cap() -> Option<usize> {
    std::env::var("VARPATH_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

#[derive(Serialize)]
struct Summary {
    max: f64,
    mean: f64,
}

fn summarize(reports: &[HelmholtzReport], f: impl Fn(&HelmholtzReport) -> f64) -> Summary {
    let values: Vec<f64> = reports.iter().map(f).collect();
    Summary {
        max: values.iter().copied().fold(0.0, f64::max),
        mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
    }
}

fn check_helmholtz(cfg: &RunConfig, spec: &GeometrySpec) -> Result<Outcome> {
    let center = point(cfg, spec)?;
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let states: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.samples)
        .map(|_| {
            let x = center
                .iter()
                .map(|c| c + cfg.radius * rng.gen_range(-1.0..1.0))
                .collect();
            let v = loop {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if v.iter().map(|c| c * c).sum::<f64>() > 0.01 {
                    break v;
                }
            };
            (x, v)
        })
        .collect();
    let opts = HelmholtzOptions {
        tolerance: cfg.tol,
        force: match cfg.force {
            Force::Autoparallel => ForceModel::Autoparallel,
            Force::LeviCivita => ForceModel::LeviCivita,
        },
        transport: transport_options(cfg),
    };
    let metric = MetricMultiplier(spec);
    let evaluate = || -> Result<Vec<HelmholtzReport>> {
        states
            .par_iter()
            .map(|(x, v)| {
                let source = match cfg.multiplier {
                    Multiplier::Solved => HSource::Solved,
                    Multiplier::Metric => HSource::Explicit(&metric),
                };
                helmholtz_residuals_with(spec, x, v, source, &opts)
            })
            .collect()
    };
    let reports = match thread_cap() {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(evaluate)?,
        None => evaluate()?,
    };
    let failures = reports.iter().filter(|r| !r.pass).count();
    let worst = reports
        .iter()
        .max_by(|a, b| a.max().total_cmp(&b.max()))
        .map(to_value)
        .transpose()?;
    Ok(Outcome {
        pass: failures == 0,
        results: json!({
            "samples": reports.len(),
            "failures": failures,
            "h1": summarize(&reports, |r| r.h1),
            "h2_generic": summarize(&reports, |r| r.h2_generic),
            "h2_connection": summarize(&reports, |r| r.h2_connection),
            "h3_generic": summarize(&reports, |r| r.h3_generic),
            "h3_simplified": summarize(&reports, |r| r.h3_simplified),
            "worst": worst,
        }),
    })
}
