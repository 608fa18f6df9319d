//! The effective metric H: solutions of `∇_a H_bc = 0` obtained by parallel
//! transport from the base point, with ∂H reconstructed algebraically.
//!
//! Along a curve x(s) the condition reads
//! `dH_ab/ds = ẋ^c (Γ^d_ca H_db + Γ^d_cb H_ad)`.
//! H at a point is defined by transport along the straight coordinate segment
//! from the base point, so it is well defined on a star-shaped neighbourhood.
//! Whether that field really has `∇H = 0` in every direction is exactly the
//! integrability question; [`holonomy_defect`] measures it.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::connection::gamma_at;
use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::ode::{self, OdeStats, Stepper};
use crate::tensor::{self, Matrix, Tensor3};

pub const DEFAULT_STEPS_PER_UNIT: usize = 256;
pub const DEFAULT_DEGENERACY_THRESHOLD: f64 = 1e-10;
/// Maximum endpoint gap for a loop to count as closed.
pub const LOOP_CLOSURE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportOptions {
    /// RK4 steps per unit of coordinate distance (ignored when adaptive).
    pub steps_per_unit: usize,
    /// Use Dormand-Prince 5(4) with this relative tolerance instead of RK4.
    pub adaptive_rtol: Option<f64>,
    pub degeneracy_threshold: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            steps_per_unit: DEFAULT_STEPS_PER_UNIT,
            adaptive_rtol: None,
            degeneracy_threshold: DEFAULT_DEGENERACY_THRESHOLD,
        }
    }
}

impl TransportOptions {
    fn stepper_for(&self, length: f64) -> Stepper {
        match self.adaptive_rtol {
            Some(rtol) => Stepper::adaptive(rtol),
            None => Stepper::rk4(((self.steps_per_unit as f64 * length).ceil() as usize).max(1)),
        }
    }
}

/// Integration diagnostics collected during a transport.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TransportHealth {
    pub steps: usize,
    /// Largest |H − Hᵀ| seen before the per-step symmetrization.
    pub max_asymmetry: f64,
    /// Smallest |det H| seen along the way.
    pub min_abs_det: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HState {
    pub x: Vec<f64>,
    #[serde(with = "tensor::serde_matrix")]
    pub h: Matrix,
    pub det_h: f64,
    /// `dh[c][a][b] = ∂_c H_ab = Γ^d_ca H_db + Γ^d_cb H_ad`
    pub dh: Tensor3,
    /// |det H| dropped to or below the threshold somewhere along the path.
    pub degenerate: bool,
    pub health: TransportHealth,
}

impl HState {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Fails with [`Error::DegenerateH`] when the state is flagged.
    pub fn require_nondegenerate(&self) -> Result<&Self> {
        if self.degenerate {
            return Err(Error::DegenerateH { det: self.det_h });
        }
        Ok(self)
    }

    pub fn h_inverse(&self) -> Result<Matrix> {
        self.h
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateH { det: self.det_h })
    }
}

/// `∂_c H_ab = Γ^d_ca H_db + Γ^d_cb H_ad`, stored `[c][a][b]`.
pub fn reconstruct_dh(gamma: &Tensor3, h: &Matrix) -> Tensor3 {
    let n = gamma.dim();
    Tensor3::from_fn(n, |c, a, b| {
        (0..n)
            .map(|d| gamma[[d, c, a]] * h[(d, b)] + gamma[[d, c, b]] * h[(a, d)])
            .sum()
    })
}

/// A path in the chart, parametrized over `s ∈ [0, 1]` piece by piece.
pub enum Path<'a> {
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    /// Consecutive straight edges through the listed vertices.
    Polyline(Vec<Vec<f64>>),
    /// Smooth curve `s ↦ (x(s), ẋ(s))` over `[0, 1]`.
    Curve(&'a dyn Fn(f64) -> (Vec<f64>, Vec<f64>)),
}

impl Path<'_> {
    pub fn start(&self) -> Vec<f64> {
        match self {
            Path::Segment { from, .. } => from.clone(),
            Path::Polyline(v) => v.first().cloned().unwrap_or_default(),
            Path::Curve(f) => f(0.0).0,
        }
    }

    pub fn end(&self) -> Vec<f64> {
        match self {
            Path::Segment { to, .. } => to.clone(),
            Path::Polyline(v) => v.last().cloned().unwrap_or_default(),
            Path::Curve(f) => f(1.0).0,
        }
    }

    /// Axis-aligned square loop with lower-left corner `corner`, traversed
    /// counter-clockwise in the `(i, j)` coordinate plane.
    pub fn square(corner: &[f64], side: f64, i: usize, j: usize) -> Path<'static> {
        let mut pts = vec![corner.to_vec(); 5];
        pts[1][i] += side;
        pts[2][i] += side;
        pts[2][j] += side;
        pts[3][j] += side;
        Path::Polyline(pts)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct Transporter<'s> {
    spec: &'s GeometrySpec,
    threshold: f64,
    health: TransportHealth,
    degenerate: bool,
}

impl Transporter<'_> {
    /// Transports `h` along one smooth piece; `curve(s)` gives (x, ẋ).
    fn piece(
        &mut self,
        h: Matrix,
        curve: &dyn Fn(f64) -> (Vec<f64>, Vec<f64>),
        stepper: Stepper,
    ) -> Result<Matrix> {
        let n = h.nrows();
        let spec = self.spec;
        let rhs = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
            let (x, xdot) = curve(s);
            let gamma = gamma_at(spec, &x).map_err(|e| Error::DomainExit {
                lambda: s,
                source: Box::new(e),
            })?;
            let hm = DMatrix::from_column_slice(n, n, y);
            // A_da = ẋ^c Γ^d_ca; dH = Aᵀ H + H A
            let a = DMatrix::from_fn(n, n, |d, a| {
                (0..n).map(|c| xdot[c] * gamma[[d, c, a]]).sum()
            });
            let dh = a.transpose() * &hm + &hm * a;
            Ok(dh.as_slice().to_vec())
        };
        let threshold = self.threshold;
        let health = &mut self.health;
        let degenerate = &mut self.degenerate;
        let (y, stats): (Vec<f64>, OdeStats) =
            ode::integrate(rhs, 0.0, 1.0, h.as_slice().to_vec(), stepper, |_, y| {
                let mut m = DMatrix::from_column_slice(n, n, y);
                health.max_asymmetry = health.max_asymmetry.max(tensor::asymmetry(&m));
                tensor::symmetrize(&mut m);
                let det = m.determinant().abs();
                health.min_abs_det = health.min_abs_det.min(det);
                if det <= threshold {
                    *degenerate = true;
                }
                y.copy_from_slice(m.as_slice());
                Ok(())
            })?;
        self.health.steps += stats.steps;
        Ok(DMatrix::from_column_slice(n, n, &y))
    }
}

fn finish(spec: &GeometrySpec, x: Vec<f64>, h: Matrix, t: Transporter) -> Result<HState> {
    let gamma = gamma_at(spec, &x)?;
    let det_h = h.determinant();
    let dh = reconstruct_dh(&gamma, &h);
    let degenerate = t.degenerate || det_h.abs() <= t.threshold;
    Ok(HState {
        x,
        h,
        det_h,
        dh,
        degenerate,
        health: t.health,
    })
}

/// Transports `h_start` along `path`. For RK4, `stepper` steps are used on
/// every straight edge (or over the whole curve).
pub fn transport_h(
    spec: &GeometrySpec,
    path: &Path,
    h_start: &Matrix,
    stepper: Stepper,
    degeneracy_threshold: f64,
) -> Result<HState> {
    let n = spec.dim();
    if h_start.nrows() != n || h_start.ncols() != n {
        return Err(Error::Invalid(format!("H must be {n}x{n}")));
    }
    if tensor::asymmetry(h_start) != 0.0 {
        return Err(Error::Invalid("initial H must be symmetric".into()));
    }
    let mut t = Transporter {
        spec,
        threshold: degeneracy_threshold,
        health: TransportHealth {
            min_abs_det: h_start.determinant().abs(),
            ..TransportHealth::default()
        },
        degenerate: false,
    };
    if t.health.min_abs_det <= degeneracy_threshold {
        t.degenerate = true;
    }
    let mut h = h_start.clone();
    match path {
        Path::Segment { from, to } => {
            h = transport_edge(&mut t, h, from, to, stepper)?;
        }
        Path::Polyline(pts) => {
            for w in pts.windows(2) {
                h = transport_edge(&mut t, h, &w[0], &w[1], stepper)?;
            }
        }
        Path::Curve(f) => {
            h = t.piece(h, f, stepper)?;
        }
    }
    finish(spec, path.end(), h, t)
}

fn transport_edge(
    t: &mut Transporter,
    h: Matrix,
    from: &[f64],
    to: &[f64],
    stepper: Stepper,
) -> Result<Matrix> {
    if from == to {
        return Ok(h);
    }
    let dir: Vec<f64> = to.iter().zip(from).map(|(b, a)| b - a).collect();
    let line = |s: f64| {
        let x = from.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
        (x, dir.clone())
    };
    t.piece(h, &line, stepper)
}

/// H at `x` by transport of `spec.h0()` along the straight segment from the
/// base point, with default options.
pub fn h_at(spec: &GeometrySpec, x: &[f64]) -> Result<HState> {
    h_at_with(spec, x, &TransportOptions::default())
}

pub fn h_at_with(spec: &GeometrySpec, x: &[f64], opts: &TransportOptions) -> Result<HState> {
    let p0 = spec.base_point();
    if x.len() != p0.len() {
        return Err(Error::Invalid(format!(
            "point has {} coordinates, chart has {}",
            x.len(),
            p0.len()
        )));
    }
    let path = Path::Segment {
        from: p0.to_vec(),
        to: x.to_vec(),
    };
    transport_h(
        spec,
        &path,
        spec.h0(),
        opts.stepper_for(distance(p0, x)),
        opts.degeneracy_threshold,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyResult {
    /// max |H_returned − H_start|
    pub defect: f64,
    #[serde(with = "tensor::serde_matrix")]
    pub h_returned: Matrix,
    pub steps: usize,
}

pub fn holonomy_defect(
    spec: &GeometrySpec,
    path: &Path,
    h_start: &Matrix,
    steps: usize,
) -> Result<HolonomyResult> {
    let gap = distance(&path.start(), &path.end());
    if !(gap <= LOOP_CLOSURE) {
        return Err(Error::OpenLoop { gap });
    }
    let end = transport_h(spec, path, h_start, Stepper::rk4(steps), 0.0)?;
    Ok(HolonomyResult {
        defect: tensor::max_abs(&(&end.h - h_start)),
        h_returned: end.h,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub defect: f64,
    /// log2(previous defect / this defect)
    pub observed_order: Option<f64>,
}

/// Holonomy defect at `base_steps · 2^k` for `k = 0..=halvings`.
pub fn holonomy_convergence(
    spec: &GeometrySpec,
    path: &Path,
    h_start: &Matrix,
    base_steps: usize,
    halvings: usize,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(halvings + 1);
    for k in 0..=halvings {
        let steps = base_steps << k;
        let defect = holonomy_defect(spec, path, h_start, steps)?.defect;
        let observed_order = rows.last().map(|prev| (prev.defect / defect).log2());
        rows.push(ConvergenceRow {
            steps,
            defect,
            observed_order,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub det: f64,
    pub smallest_singular_value: f64,
    pub threshold: f64,
    pub degenerate: bool,
    pub advice: Option<String>,
}

pub fn degeneracy_check(h: &Matrix, threshold: f64) -> DegeneracyReport {
    let det = h.determinant();
    let smallest_singular_value = h
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |m, s| m.min(*s));
    let degenerate = det.abs() <= threshold;
    let advice = degenerate.then(|| {
        if smallest_singular_value > 0.0 && smallest_singular_value.powi(h.nrows() as i32) <= threshold {
            let scale = (threshold / det.abs()).powf(1.0 / h.nrows() as f64);
            format!(
                "|det H| = {:.3e} is at or below {threshold:.1e}; H is uniformly small here, \
                 rescale h0 by at least {scale:.3e} (or lower the threshold)",
                det.abs()
            )
        } else {
            format!(
                "|det H| = {:.3e} is at or below {threshold:.1e}; smallest singular value {smallest_singular_value:.3e}",
                det.abs()
            )
        }
    });
    DegeneracyReport {
        det,
        smallest_singular_value,
        threshold,
        degenerate,
        advice,
    }
}
