//! Autoparallel and geodesic curves, the action `S = ∫ √|H(γ̇, γ̇)| dλ`, its
//! Euler-Lagrange residual, and the generalized proper time.

use std::io::Write;

use serde::Serialize;

use crate::connection::{christoffel_at, gamma_at};
use crate::error::{Error, Result};
use crate::expr::Order;
use crate::geometry::GeometrySpec;
use crate::ode::{self, OdeStats, Stepper};
use crate::tensor::{bilinear, Matrix, Tensor3};
use crate::transport::{h_at_with, HState, TransportOptions};

/// |H(v, v)| below this is treated as a null direction.
pub const NULL_THRESHOLD: f64 = 1e-14;
/// Points per finite-difference stencil in λ.
const STENCIL: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// `ẍ^a = −Γ^a_bc ẋ^b ẋ^c` with the full connection.
    Autoparallel,
    /// `ẍ^a = −{a bc} ẋ^b ẋ^c` with the Levi-Civita symbols of g.
    Geodesic,
    /// Supplied sample by sample rather than integrated.
    Prescribed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub kind: CurveKind,
    pub samples: Vec<Sample>,
    pub stats: OdeStats,
}

impl Trajectory {
    /// Wraps externally produced samples; λ must be strictly increasing.
    pub fn prescribed(samples: Vec<Sample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].lambda > w[0].lambda)) {
            return Err(Error::Invalid("lambda must be strictly increasing".into()));
        }
        Ok(Self {
            kind: CurveKind::Prescribed,
            samples,
            stats: OdeStats {
                method: "prescribed",
                ..OdeStats::default()
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lambda).collect()
    }

    /// Same curve under λ ↦ φ(λ); `phi` returns (φ, φ′) with φ′ > 0.
    pub fn reparametrized(&self, phi: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let (l, dl) = phi(s.lambda);
                Sample {
                    lambda: l,
                    x: s.x.clone(),
                    v: s.v.iter().map(|v| v / dl).collect(),
                }
            })
            .collect();
        Self::prescribed(samples)
    }

    /// Adds `amplitude · sin(π s)` to coordinate `coord`, with s the
    /// normalized parameter, so the endpoints stay fixed.
    pub fn perturbed(&self, coord: usize, amplitude: f64) -> Result<Self> {
        let (l0, l1) = match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.lambda, b.lambda),
            _ => {
                return Err(Error::InsufficientSamples {
                    needed: 2,
                    found: 0,
                })
            }
        };
        let span = l1 - l0;
        let pi = std::f64::consts::PI;
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let u = (s.lambda - l0) / span;
                let mut out = s.clone();
                out.x[coord] += amplitude * (pi * u).sin();
                out.v[coord] += amplitude * pi * (pi * u).cos() / span;
                out
            })
            .collect();
        Self::prescribed(samples)
    }

    /// CSV with columns `lambda, x0..x{n-1}, v0..v{n-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        let mut header = vec!["lambda".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("v{i}")));
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let row: Vec<String> = std::iter::once(s.lambda)
                .chain(s.x.iter().copied())
                .chain(s.v.iter().copied())
                .map(|x| format!("{x:e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn quadratic_form(gamma: &Tensor3, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|a| {
            let mut s = 0.0;
            for b in 0..n {
                for c in 0..n {
                    s += gamma[[a, b, c]] * v[b] * v[c];
                }
            }
            s
        })
        .collect()
}

pub fn integrate_curve(
    spec: &GeometrySpec,
    kind: CurveKind,
    x0: &[f64],
    v0: &[f64],
    lambda_span: (f64, f64),
    stepper: Stepper,
) -> Result<Trajectory> {
    let n = spec.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::Invalid(format!("x0 and v0 need {n} components")));
    }
    if v0.iter().all(|v| *v == 0.0) {
        return Err(Error::Invalid("initial velocity must be nonzero".into()));
    }
    let (l0, l1) = lambda_span;
    if !(l1 > l0) {
        return Err(Error::Invalid("lambda span must be increasing".into()));
    }
    let symbols = |x: &[f64]| match kind {
        CurveKind::Autoparallel => gamma_at(spec, x),
        CurveKind::Geodesic => christoffel_at(spec, x),
        CurveKind::Prescribed => Err(Error::Invalid("cannot integrate a prescribed curve".into())),
    };
    // Surface the initial-point error directly.
    symbols(x0)?;
    let rhs = |lambda: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (x, v) = y.split_at(n);
        let gamma = symbols(x).map_err(|e| Error::DomainExit {
            lambda,
            source: Box::new(e),
        })?;
        let acc = quadratic_form(&gamma, v);
        Ok(v.iter()
            .copied()
            .chain(acc.into_iter().map(|a| -a))
            .collect())
    };
    let mut samples = vec![Sample {
        lambda: l0,
        x: x0.to_vec(),
        v: v0.to_vec(),
    }];
    let y0: Vec<f64> = x0.iter().chain(v0).copied().collect();
    let (_, stats) = ode::integrate(rhs, l0, l1, y0, stepper, |lambda, y| {
        samples.push(Sample {
            lambda,
            x: y[..n].to_vec(),
            v: y[n..].to_vec(),
        });
        Ok(())
    })?;
    Ok(Trajectory {
        kind,
        samples,
        stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lagrangian {
    pub value: f64,
    /// `|H(v, v)| < NULL_THRESHOLD`
    pub null: bool,
}

/// `√|H_ab v^a v^b|`
pub fn lagrangian_at(h: &Matrix, v: &[f64]) -> Lagrangian {
    let q = bilinear(h, v, v);
    Lagrangian {
        value: q.abs().sqrt(),
        null: q.abs() < NULL_THRESHOLD,
    }
}

fn non_null(h: &Matrix, v: &[f64]) -> Result<f64> {
    let l = lagrangian_at(h, v);
    if l.null {
        return Err(Error::NullVector {
            norm: l.value * l.value,
        });
    }
    Ok(l.value)
}

/// Derivative weights at `z` of the interpolating polynomial through `xs`.
pub fn derivative_weights(z: f64, xs: &[f64]) -> Vec<f64> {
    let m = xs.len();
    (0..m)
        .map(|j| {
            let mut total = 0.0;
            for k in (0..m).filter(|&k| k != j) {
                let mut term = 1.0 / (xs[j] - xs[k]);
                for i in (0..m).filter(|&i| i != j && i != k) {
                    term *= (z - xs[i]) / (xs[j] - xs[i]);
                }
                total += term;
            }
            total
        })
        .collect()
}

fn stencil_derivative(lambdas: &[f64], values: &[f64], i: usize) -> f64 {
    let lo = i - STENCIL / 2;
    let xs = &lambdas[lo..lo + STENCIL];
    derivative_weights(lambdas[i], xs)
        .iter()
        .zip(&values[lo..lo + STENCIL])
        .map(|(w, y)| w * y)
        .sum()
}

/// Composite Simpson rule on a possibly non-uniform grid; an odd interval
/// count closes with the quadratic through the last three samples.
pub fn simpson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: n.min(y.len()),
        });
    }
    if n == 2 {
        return Ok(0.5 * (x[1] - x[0]) * (y[0] + y[1]));
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut total = 0.0;
    for i in (0..paired).step_by(2) {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * y[i]
                + hs * hs / (h0 * h1) * y[i + 1]
                + (2.0 - h0 / h1) * y[i + 2]);
    }
    if intervals % 2 == 1 {
        let h0 = x[n - 2] - x[n - 3];
        let h1 = x[n - 1] - x[n - 2];
        let alpha = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        let beta = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        let eta = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        total += alpha * y[n - 1] + beta * y[n - 2] - eta * y[n - 3];
    }
    Ok(total)
}

/// Cumulative trapezoid, starting at 0.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        if i > 0 {
            acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        }
        out.push(acc);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ActionReport {
    /// `∫ √|H(γ̇, γ̇)| dλ`
    pub value: f64,
    /// max over interior samples of `|d/dλ ∂L/∂ẋ^a − ∂L/∂x^a|`
    pub el_residual_max: f64,
    /// max |dL/dλ|
    pub affine_defect: f64,
}

/// H along the samples, each by straight transport from the base point.
pub fn h_along(
    spec: &GeometrySpec,
    traj: &Trajectory,
    opts: &TransportOptions,
) -> Result<Vec<HState>> {
    traj.samples
        .iter()
        .map(|s| {
            let st = h_at_with(spec, &s.x, opts)?;
            st.require_nondegenerate()?;
            Ok(st)
        })
        .collect()
}

pub fn el_residual(spec: &GeometrySpec, traj: &Trajectory) -> Result<ActionReport> {
    el_residual_with(spec, traj, &TransportOptions::default())
}

pub fn el_residual_with(
    spec: &GeometrySpec,
    traj: &Trajectory,
    opts: &TransportOptions,
) -> Result<ActionReport> {
    let m = traj.samples.len();
    if m < STENCIL {
        return Err(Error::InsufficientSamples {
            needed: STENCIL,
            found: m,
        });
    }
    let n = traj.dim();
    let hs = h_along(spec, traj, opts)?;
    let lambdas = traj.lambdas();

    let mut lag = Vec::with_capacity(m);
    // momenta[a][i] = H_ab v^b / L at sample i
    let mut momenta = vec![Vec::with_capacity(m); n];
    // forces[i][a] = ∂_a H_bc v^b v^c / 2L
    let mut forces = Vec::with_capacity(m);
    for (s, st) in traj.samples.iter().zip(&hs) {
        let l = non_null(&st.h, &s.v)?;
        lag.push(l);
        for (a, p) in momenta.iter_mut().enumerate() {
            p.push((0..n).map(|b| st.h[(a, b)] * s.v[b]).sum::<f64>() / l);
        }
        forces.push(
            (0..n)
                .map(|a| {
                    let mut q = 0.0;
                    for b in 0..n {
                        for c in 0..n {
                            q += st.dh[[a, b, c]] * s.v[b] * s.v[c];
                        }
                    }
                    q / (2.0 * l)
                })
                .collect::<Vec<f64>>(),
        );
    }

    let mut el_max: f64 = 0.0;
    let mut affine: f64 = 0.0;
    for i in STENCIL / 2..m - STENCIL / 2 {
        for a in 0..n {
            let dp = stencil_derivative(&lambdas, &momenta[a], i);
            el_max = el_max.max((dp - forces[i][a]).abs());
        }
        affine = affine.max(stencil_derivative(&lambdas, &lag, i).abs());
    }
    Ok(ActionReport {
        value: simpson(&lambdas, &lag)?,
        el_residual_max: el_max,
        affine_defect: affine,
    })
}

pub fn action_value(spec: &GeometrySpec, traj: &Trajectory) -> Result<f64> {
    action_value_with(spec, traj, &TransportOptions::default())
}

pub fn action_value_with(
    spec: &GeometrySpec,
    traj: &Trajectory,
    opts: &TransportOptions,
) -> Result<f64> {
    let hs = h_along(spec, traj, opts)?;
    let lag = traj
        .samples
        .iter()
        .zip(&hs)
        .map(|(s, st)| non_null(&st.h, &s.v))
        .collect::<Result<Vec<_>>>()?;
    simpson(&traj.lambdas(), &lag)
}

/// `∫ e^{−ω/2} √|g(γ̇, γ̇)| dλ` with `ω(λ) = ∫ Q(γ̇, γ̇, γ̇) / g(γ̇, γ̇) dλ′`
/// accumulated from the first sample.
pub fn generalized_proper_time(spec: &GeometrySpec, traj: &Trajectory) -> Result<f64> {
    let n = traj.dim();
    let mut rate = Vec::with_capacity(traj.samples.len());
    let mut speed = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let pf = spec.fields_at_order(&s.x, Order::Value)?;
        let gvv = bilinear(&pf.g, &s.v, &s.v);
        if gvv.abs() < NULL_THRESHOLD {
            return Err(Error::NullVector { norm: gvv.abs() });
        }
        let mut qvvv = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    qvvv += pf.q[[a, b, c]] * s.v[a] * s.v[b] * s.v[c];
                }
            }
        }
        rate.push(qvvv / gvv);
        speed.push(gvv.abs().sqrt());
    }
    let lambdas = traj.lambdas();
    let omega = cumulative_trapezoid(&lambdas, &rate);
    let integrand: Vec<f64> = omega
        .iter()
        .zip(&speed)
        .map(|(w, s)| (-0.5 * w).exp() * s)
        .collect();
    simpson(&lambdas, &integrand)
}

/// max over samples of `|H(γ̇, γ̇) − H(γ̇, γ̇)₀| / |H(γ̇, γ̇)₀|`.
pub fn norm_drift(spec: &GeometrySpec, traj: &Trajectory) -> Result<f64> {
    norm_drift_with(spec, traj, &TransportOptions::default())
}

pub fn norm_drift_with(
    spec: &GeometrySpec,
    traj: &Trajectory,
    opts: &TransportOptions,
) -> Result<f64> {
    if traj.kind != CurveKind::Autoparallel {
        return Err(Error::Invalid(
            "norm drift is defined for autoparallels".into(),
        ));
    }
    let hs = h_along(spec, traj, opts)?;
    let norms: Vec<f64> = traj
        .samples
        .iter()
        .zip(&hs)
        .map(|(s, st)| bilinear(&st.h, &s.v, &s.v))
        .collect();
    let n0 = norms[0];
    if n0.abs() < NULL_THRESHOLD {
        return Err(Error::NullVector { norm: n0.abs() });
    }
    Ok(norms.iter().fold(0.0_f64, |m, q| m.max((q - n0).abs())) / n0.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str =
        r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1"},"base_point":[0,0]}"#;
    const WEYL: &str = r#"{"dim":2,"coords":["x0","x1"],"metric":{"0,0":"1","1,1":"1"},"nonmetricity":{"weyl":"2*x0"},"base_point":[0,0]}"#;

    const GENERIC: &str = r#"{"dim":2,"coords":["x0","x1"],"metric":{"0,0":"1","1,1":"1"},"nonmetricity":{"1,1,1":"0.3*x0"},"base_point":[0,0]}"#;

    fn spec(doc: &str) -> GeometrySpec {
        GeometrySpec::from_json_str(doc).unwrap()
    }

    #[test]
    fn flat_straight_line() {
        let t = integrate_curve(
            &spec(FLAT),
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 1.0],
            (0.0, 1.0),
            Stepper::rk4(100),
        )
        .unwrap();
        assert_eq!(t.samples.len(), 101);
        for s in &t.samples {
            assert!((s.x[0] - s.lambda).abs() < 1e-10 && (s.x[1] - s.lambda).abs() < 1e-10);
        }
    }

    #[test]
    fn weyl_autoparallel_closed_form() {
        let t = integrate_curve(
            &spec(WEYL),
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 0.0],
            (0.0, 0.5),
            Stepper::rk4(1000),
        )
        .unwrap();
        for s in &t.samples {
            assert!((s.x[0] + (1.0 - s.lambda).ln()).abs() < 1e-8);
            assert_eq!(s.x[1], 0.0);
        }
    }

    fn line(dir: [f64; 2], end: f64, count: usize) -> Trajectory {
        let samples = (0..=count)
            .map(|i| {
                let l = end * i as f64 / count as f64;
                Sample {
                    lambda: l,
                    x: vec![l * dir[0], l * dir[1]],
                    v: dir.to_vec(),
                }
            })
            .collect();
        Trajectory::prescribed(samples).unwrap()
    }

    #[test]
    fn weyl_autoparallel_is_extremal() {
        let s = spec(WEYL);
        let t = integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 0.0],
            (0.0, 0.5),
            Stepper::rk4(1000),
        )
        .unwrap();
        let r = el_residual(&s, &t).unwrap();
        assert!(
            r.el_residual_max <= 1e-6 && r.affine_defect <= 1e-8,
            "{r:?}"
        );
        // integrand e^{-x0} ẋ0 = 1
        assert!((r.value - 0.5).abs() < 1e-9);
        assert!(norm_drift(&s, &t).unwrap() <= 1e-8);
        assert!((generalized_proper_time(&s, &t).unwrap() - r.value).abs() <= 1e-7);
    }

    #[test]
    fn weyl_negative_controls() {
        let s = spec(WEYL);
        // Same trace as the autoparallel through the origin, only not affinely
        // parametrized: the reparametrization-invariant EL operator vanishes.
        let r = el_residual(&s, &line([1.0, 0.0], 0.5, 500)).unwrap();
        assert!(r.el_residual_max <= 1e-8);
        assert!(r.affine_defect >= 0.5);
        let r = el_residual(&s, &line([1.0, 1.0], 0.5, 500)).unwrap();
        assert!(r.el_residual_max >= 0.1, "{r:?}");
    }

    #[test]
    fn proper_time_differs_off_autoparallels_for_generic_q() {
        let s = spec(GENERIC);
        let pi = std::f64::consts::PI;
        let samples = (0..=1000)
            .map(|i| {
                let l = i as f64 * 1e-3;
                Sample {
                    lambda: l,
                    x: vec![(pi * l).sin(), 2.0 * l],
                    v: vec![pi * (pi * l).cos(), 2.0],
                }
            })
            .collect();
        let t = Trajectory::prescribed(samples).unwrap();
        let d = generalized_proper_time(&s, &t).unwrap() - action_value(&s, &t).unwrap();
        assert!(d.abs() > 1e-3, "{d}");
    }

    #[test]
    fn reparametrized_action_unchanged() {
        let s = spec(WEYL);
        let t = integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[0.8, 0.3],
            (0.0, 0.5),
            Stepper::rk4(500),
        )
        .unwrap();
        let re = t.reparametrized(|l| (l.exp(), l.exp())).unwrap();
        assert!((action_value(&s, &t).unwrap() - action_value(&s, &re).unwrap()).abs() <= 1e-9);
        assert!(norm_drift(&s, &re).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let s = spec(FLAT);
        assert!(integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[0.0, 0.0],
            (0.0, 1.0),
            Stepper::rk4(4)
        )
        .is_err());
        assert!(integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 0.0],
            (1.0, 0.0),
            Stepper::rk4(4)
        )
        .is_err());
    }

    #[test]
    fn lagrangian_values() {
        let l = lagrangian_at(&Matrix::identity(2, 2), &[3.0, 4.0]);
        assert_eq!((l.value, l.null), (5.0, false));
        let l = lagrangian_at(
            &Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            &[1.0, 1.0],
        );
        assert_eq!((l.value, l.null), (0.0, true));
        let t: f64 = 0.7;
        let f = (-2.0 * t).exp();
        let l = lagrangian_at(
            &Matrix::from_row_slice(2, 2, &[f, 0.0, 0.0, f]),
            &[1.0, 0.0],
        );
        assert!((l.value - (-t).exp()).abs() < 1e-15);
    }

    #[test]
    fn simpson_exact_for_cubics_on_uniform_grid() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t * t - t).collect();
        assert!((simpson(&x, &y).unwrap() - (0.25 - 0.5)).abs() < 1e-14);
        // odd number of intervals, non-uniform
        let x = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0];
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t * t + 1.0).collect();
        assert!((simpson(&x, &y).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_weights_exact_for_quartics() {
        let xs = [0.0, 0.1, 0.25, 0.3, 0.5];
        let w = derivative_weights(0.25, &xs);
        let d: f64 = w.iter().zip(&xs).map(|(w, x)| w * x.powi(4)).sum();
        assert!((d - 4.0 * 0.25f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn flat_line_residual_is_zero() {
        let s = spec(FLAT);
        let t = integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 1.0],
            (0.0, 1.0),
            Stepper::rk4(50),
        )
        .unwrap();
        let r = el_residual(&s, &t).unwrap();
        assert!(r.el_residual_max <= 1e-12);
        assert!(r.affine_defect <= 1e-12);
        assert!((r.value - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(norm_drift(&s, &t).unwrap(), 0.0);
        assert!((generalized_proper_time(&s, &t).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let s = spec(FLAT);
        let t = integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 1.0],
            (0.0, 1.0),
            Stepper::rk4(3),
        )
        .unwrap();
        assert!(matches!(
            el_residual(&s, &t),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn null_curves_rejected() {
        let s = spec(
            r#"{"dim":2,"coords":["t","x"],"metric":{"0,0":"-1","1,1":"1"},"base_point":[0,0]}"#,
        );
        let t = integrate_curve(
            &s,
            CurveKind::Autoparallel,
            &[0.0, 0.0],
            &[1.0, 1.0],
            (0.0, 1.0),
            Stepper::rk4(10),
        )
        .unwrap();
        assert!(matches!(
            action_value(&s, &t),
            Err(Error::NullVector { .. })
        ));
        assert!(matches!(
            generalized_proper_time(&s, &t),
            Err(Error::NullVector { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let s = spec(FLAT);
        let t = integrate_curve(
            &s,
            CurveKind::Geodesic,
            &[0.0, 0.0],
            &[1.0, 2.0],
            (0.0, 1.0),
            Stepper::rk4(2),
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "lambda,x0,x1,v0,v1");
        assert_eq!(lines.len(), 4);
        let last: Vec<f64> = lines[3].split(',').map(|c| c.parse().unwrap()).collect();
        for (got, want) in last.iter().zip([1.0, 1.0, 2.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }
}
