//! Helmholtz conditions for second-order systems `ẍ^a = F^a(x, ẋ)` with a
//! candidate multiplier `H_ab`, in the generic form and in the form adapted to
//! a torsion-free connection, plus the reference forces for `H = g` and
//! `H = e^{−ω} g`.

use serde::Serialize;

use crate::connection::{
    connection_at, covariant_derivative_of_form, weyl_disformation, ConnectionPoint,
};
use crate::error::{Error, Result};
use crate::expr::{Expression, Order};
use crate::geometry::GeometrySpec;
use crate::tensor::{Matrix, Tensor3};
use crate::transport::{h_at_with, TransportOptions};

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
/// Step of the central differences probing velocity dependence of explicit H.
const VELOCITY_STEP: f64 = 1e-5;

/// A multiplier field `H_ab(x, v)` with exact position derivatives.
pub trait MultiplierField {
    /// Returns `H` and `∂_c H_ab` stored `[c][a][b]`.
    fn eval(&self, x: &[f64], v: &[f64]) -> Result<(Matrix, Tensor3)>;
}

/// `H = g`.
pub struct MetricMultiplier<'a>(pub &'a GeometrySpec);

impl MultiplierField for MetricMultiplier<'_> {
    fn eval(&self, x: &[f64], _v: &[f64]) -> Result<(Matrix, Tensor3)> {
        let pf = self.0.fields_at_order(x, Order::First)?;
        Ok((pf.g, pf.dg))
    }
}

/// `H = e^{−ω} g` for a Weyl-mode geometry.
pub struct ConformalMultiplier<'a>(pub &'a GeometrySpec);

impl MultiplierField for ConformalMultiplier<'_> {
    fn eval(&self, x: &[f64], _v: &[f64]) -> Result<(Matrix, Tensor3)> {
        let omega = self.0.weyl_potential().ok_or(Error::NotWeyl)?;
        let w = omega.evaluate_jet(x, Order::First)?;
        let pf = self.0.fields_at_order(x, Order::First)?;
        let f = (-w.value).exp();
        let n = pf.dim();
        let dh = Tensor3::from_fn(n, |c, a, b| {
            f * (pf.dg[[c, a, b]] - w.grad[c] * pf.g[(a, b)])
        });
        Ok((pf.g * f, dh))
    }
}

/// A constant matrix.
pub struct ConstantMultiplier(pub Matrix);

impl MultiplierField for ConstantMultiplier {
    fn eval(&self, _x: &[f64], _v: &[f64]) -> Result<(Matrix, Tensor3)> {
        Ok((self.0.clone(), Tensor3::zeros(self.0.nrows())))
    }
}

/// Any field given as a closure; handy for velocity-dependent probes.
pub struct FnMultiplier<F>(pub F);

impl<F> MultiplierField for FnMultiplier<F>
where
    F: Fn(&[f64], &[f64]) -> Result<(Matrix, Tensor3)>,
{
    fn eval(&self, x: &[f64], v: &[f64]) -> Result<(Matrix, Tensor3)> {
        (self.0)(x, v)
    }
}

pub enum HSource<'a> {
    /// H obtained by transport from the base point, with `∂H` from `∇H = 0`.
    Solved,
    Explicit(&'a dyn MultiplierField),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceModel {
    /// `F^a = −Γ^a_bc v^b v^c`
    Autoparallel,
    /// `F^a = −{a bc} v^b v^c`, non-metricity ignored.
    LeviCivita,
}

#[derive(Clone, Copy, Debug)]
pub struct HelmholtzOptions {
    pub tolerance: f64,
    pub force: ForceModel,
    pub transport: TransportOptions,
}

impl Default for HelmholtzOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            force: ForceModel::Autoparallel,
            transport: TransportOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HelmholtzReport {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub h1: f64,
    pub h2_generic: f64,
    pub h2_connection: f64,
    pub h3_generic: f64,
    pub h3_simplified: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl HelmholtzReport {
    pub fn max(&self) -> f64 {
        [
            self.h1,
            self.h2_generic,
            self.h2_connection,
            self.h3_generic,
            self.h3_simplified,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Force with its Jacobians: `dv[a][b] = ∂F^a/∂v^b`, `dx[a][c] = ∂F^a/∂x^c`.
#[derive(Clone, Debug, PartialEq)]
pub struct Force {
    pub f: Vec<f64>,
    pub dv: Matrix,
    pub dx: Matrix,
}

fn quadratic_force(cp: &ConnectionPoint, v: &[f64]) -> Force {
    let n = cp.dim();
    let g = &cp.gamma;
    let f = (0..n)
        .map(|a| {
            let mut s = 0.0;
            for b in 0..n {
                for c in 0..n {
                    s -= g[[a, b, c]] * v[b] * v[c];
                }
            }
            s
        })
        .collect();
    let dv = Matrix::from_fn(n, n, |a, b| {
        -2.0 * (0..n).map(|d| g[[a, b, d]] * v[d]).sum::<f64>()
    });
    let dx = Matrix::from_fn(n, n, |a, c| {
        let mut s = 0.0;
        for b in 0..n {
            for d in 0..n {
                s -= cp.dgamma[[c, a, b, d]] * v[b] * v[d];
            }
        }
        s
    });
    Force { f, dv, dx }
}

fn check_dims(spec: &GeometrySpec, x: &[f64], v: &[f64]) -> Result<()> {
    let n = spec.dim();
    if x.len() != n || v.len() != n {
        return Err(Error::Invalid(format!("x and v need {n} components")));
    }
    Ok(())
}

/// `F^a = −Γ^a_bc v^b v^c` with exact Jacobians.
pub fn autoparallel_force(spec: &GeometrySpec, x: &[f64], v: &[f64]) -> Result<Force> {
    check_dims(spec, x, v)?;
    Ok(quadratic_force(&connection_at(spec, x)?, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Multiplier `H = g`.
    Prop31,
    /// Multiplier `H = e^{−ω} g`, Weyl geometries only.
    Prop32,
}

/// `−({a bc} + L^a_bc) v^b v^c + P^a_b v^b + S^a`, with `L = 0` for
/// `Prop31` and the Weyl disformation of ω for `Prop32`. `p` is row-major
/// n×n, `s` has n entries; `None` means zero.
pub fn reference_force(
    kind: ReferenceKind,
    spec: &GeometrySpec,
    p: Option<&[Expression]>,
    s: Option<&[Expression]>,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    check_dims(spec, x, v)?;
    let n = spec.dim();
    if p.is_some_and(|p| p.len() != n * n) || s.is_some_and(|s| s.len() != n) {
        return Err(Error::Invalid(format!(
            "P needs {} entries and S needs {n}",
            n * n
        )));
    }
    let pf = spec.fields_at_order(x, Order::First)?;
    let cp = ConnectionPoint::from_fields(spec.fields_at(x)?).levi_civita_only();
    let mut symbols = cp.christoffel;
    if kind == ReferenceKind::Prop32 {
        let omega = spec.weyl_potential().ok_or(Error::NotWeyl)?;
        let w = omega.evaluate_jet(x, Order::First)?;
        let l = weyl_disformation(&pf.g, &pf.ginv, &w.grad);
        symbols = Tensor3::from_fn(n, |a, b, c| symbols[[a, b, c]] + l[[a, b, c]]);
    }
    let mut f = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                f[a] -= symbols[[a, b, c]] * v[b] * v[c];
            }
        }
        if let Some(p) = p {
            for b in 0..n {
                f[a] += p[a * n + b].value_at(x)? * v[b];
            }
        }
        if let Some(s) = s {
            f[a] += s[a].value_at(x)?;
        }
    }
    Ok(f)
}

pub fn helmholtz_residuals(
    spec: &GeometrySpec,
    x: &[f64],
    v: &[f64],
    source: HSource,
) -> Result<HelmholtzReport> {
    helmholtz_residuals_with(spec, x, v, source, &HelmholtzOptions::default())
}

pub fn helmholtz_residuals_with(
    spec: &GeometrySpec,
    x: &[f64],
    v: &[f64],
    source: HSource,
    opts: &HelmholtzOptions,
) -> Result<HelmholtzReport> {
    check_dims(spec, x, v)?;
    let mut cp = connection_at(spec, x)?;
    if opts.force == ForceModel::LeviCivita {
        cp = cp.levi_civita_only();
    }
    let n = spec.dim();
    // dh_dv[d][a][b] = ∂H_ab/∂v^d, only for explicit candidates
    let (h, dh, dh_dv) = match source {
        HSource::Solved => {
            let st = h_at_with(spec, x, &opts.transport)?;
            st.require_nondegenerate()?;
            (st.h, st.dh, None)
        }
        HSource::Explicit(field) => {
            let (h, dh) = field.eval(x, v)?;
            let det = h.determinant();
            if det.abs() < opts.transport.degeneracy_threshold {
                return Err(Error::DegenerateH { det });
            }
            let mut dh_dv = Tensor3::zeros(n);
            for d in 0..n {
                let mut vp = v.to_vec();
                let mut vm = v.to_vec();
                vp[d] += VELOCITY_STEP;
                vm[d] -= VELOCITY_STEP;
                let (hp, _) = field.eval(x, &vp)?;
                let (hm, _) = field.eval(x, &vm)?;
                for a in 0..n {
                    for b in 0..n {
                        dh_dv[[d, a, b]] = (hp[(a, b)] - hm[(a, b)]) / (2.0 * VELOCITY_STEP);
                    }
                }
            }
            (h, dh, Some(dh_dv))
        }
    };
    let force = quadratic_force(&cp, v);
    let mut report = HelmholtzReport {
        x: x.to_vec(),
        v: v.to_vec(),
        h1: 0.0,
        h2_generic: 0.0,
        h2_connection: 0.0,
        h3_generic: 0.0,
        h3_simplified: 0.0,
        tolerance: opts.tolerance,
        pass: false,
    };

    let nabla_h = covariant_derivative_of_form(&cp.gamma, &h, &dh);
    for a in 0..n {
        for b in 0..n {
            // (H2): dH_ab/dλ along the flow plus the symmetrized H ∂F/∂v.
            let mut dh_dl = 0.0;
            let mut cov = 0.0;
            for c in 0..n {
                dh_dl += v[c] * dh[[c, a, b]];
                cov += v[c] * nabla_h[[c, a, b]];
            }
            if let Some(dv) = &dh_dv {
                for d in 0..n {
                    dh_dl += force.f[d] * dv[[d, a, b]];
                    cov += force.f[d] * dv[[d, a, b]];
                }
            }
            let sym: f64 = (0..n)
                .map(|c| h[(a, c)] * force.dv[(c, b)] + h[(b, c)] * force.dv[(c, a)])
                .sum();
            report.h2_generic = report.h2_generic.max((dh_dl + 0.5 * sym).abs());
            report.h2_connection = report.h2_connection.max(cov.abs());
        }
    }
    if let Some(dv) = &dh_dv {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    report.h1 = report.h1.max((dv[[c, a, b]] - dv[[a, c, b]]).abs());
                }
            }
        }
    }

    // ∂_e(∂F^d/∂v^c) = −2 ∂_e Γ^d_cf v^f
    let ddf = Tensor3::from_fn(n, |e, d, c| {
        -2.0 * (0..n).map(|f| cp.dgamma[[e, d, c, f]] * v[f]).sum::<f64>()
    });
    for a in 0..n {
        for c in 0..n {
            let mut t = 0.0;
            for b in 0..n {
                t += (dh[[c, a, b]] - dh[[a, c, b]]) * force.f[b];
                t += h[(a, b)] * force.dx[(b, c)] - h[(c, b)] * force.dx[(b, a)];
            }
            let mut flow = 0.0;
            for e in 0..n {
                for d in 0..n {
                    flow += v[e]
                        * (dh[[e, a, d]] * force.dv[(d, c)] + h[(a, d)] * ddf[[e, d, c]]
                            - dh[[e, c, d]] * force.dv[(d, a)]
                            - h[(c, d)] * ddf[[e, d, a]]);
                }
            }
            report.h3_generic = report.h3_generic.max((t - 0.5 * flow).abs());

            // v^a v^b (H_ic R_kab^c − H_kc R_iab^c) with i = a, k = c
            let (i, k) = (a, c);
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    for m in 0..n {
                        s += v[p]
                            * v[q]
                            * (h[(i, m)] * cp.riemann[[k, p, q, m]]
                                - h[(k, m)] * cp.riemann[[i, p, q, m]]);
                    }
                }
            }
            report.h3_simplified = report.h3_simplified.max(s.abs());
        }
    }
    report.pass = report.max() <= opts.tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str =
        r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1"},"base_point":[0,0]}"#;
    const WEYL: &str = r#"{"dim":2,"coords":["x0","x1"],"metric":{"0,0":"1","1,1":"1"},"nonmetricity":{"weyl":"2*x0"},"base_point":[0,0]}"#;
    const SPHERE: &str = r#"{"dim":2,"coords":["th","ph"],"metric":{"0,0":"1","1,1":"sin(th)^2"},"base_point":[1.2,0.3]}"#;

    fn spec(doc: &str) -> GeometrySpec {
        GeometrySpec::from_json_str(doc).unwrap()
    }

    fn exprs(spec: &GeometrySpec, src: &[&str]) -> Vec<Expression> {
        src.iter()
            .map(|s| Expression::parse(s, spec.coords()).unwrap())
            .collect()
    }

    #[test]
    fn flat_force_vanishes() {
        let f = autoparallel_force(&spec(FLAT), &[0.3, 0.1], &[1.0, 2.0]).unwrap();
        assert_eq!(f.f, vec![0.0, 0.0]);
    }

    #[test]
    fn weyl_force() {
        let f = autoparallel_force(&spec(WEYL), &[0.4, -0.2], &[1.0, 0.0]).unwrap();
        assert!((f.f[0] - 1.0).abs() < 1e-15 && f.f[1].abs() < 1e-15);
    }

    #[test]
    fn velocity_jacobian_matches_differences() {
        let s = spec(SPHERE);
        let (x, v) = ([1.1, 0.4], [0.3, -0.7]);
        let f = autoparallel_force(&s, &x, &v).unwrap();
        let step = 1e-5;
        for b in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[b] += step;
            vm[b] -= step;
            let fp = autoparallel_force(&s, &x, &vp).unwrap().f;
            let fm = autoparallel_force(&s, &x, &vm).unwrap().f;
            for a in 0..2 {
                assert!(((fp[a] - fm[a]) / (2.0 * step) - f.dv[(a, b)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn reference_forces() {
        let flat = spec(FLAT);
        let f = reference_force(
            ReferenceKind::Prop31,
            &flat,
            None,
            None,
            &[0.2, 0.1],
            &[1.0, 3.0],
        )
        .unwrap();
        assert_eq!(f, vec![0.0, 0.0]);
        let p = exprs(&flat, &["0", "1", "-1", "0"]);
        let f = reference_force(
            ReferenceKind::Prop31,
            &flat,
            Some(&p),
            None,
            &[0.2, 0.1],
            &[1.0, 0.0],
        )
        .unwrap();
        assert_eq!(f, vec![0.0, -1.0]);
        assert!(matches!(
            reference_force(
                ReferenceKind::Prop32,
                &flat,
                None,
                None,
                &[0.0, 0.0],
                &[1.0, 0.0]
            ),
            Err(Error::NotWeyl)
        ));
        let w = spec(WEYL);
        for v in [[1.0, 0.0], [0.3, -1.2]] {
            let x = [0.25, 0.5];
            let r = reference_force(ReferenceKind::Prop32, &w, None, None, &x, &v).unwrap();
            let a = autoparallel_force(&w, &x, &v).unwrap().f;
            for i in 0..2 {
                assert!((r[i] - a[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn metric_multiplier_with_levi_civita_force() {
        let s = spec(SPHERE);
        let opts = HelmholtzOptions {
            force: ForceModel::LeviCivita,
            ..HelmholtzOptions::default()
        };
        let r = helmholtz_residuals_with(
            &s,
            &[1.0, 0.2],
            &[0.4, 0.9],
            HSource::Explicit(&MetricMultiplier(&s)),
            &opts,
        )
        .unwrap();
        assert!(r.max() <= 1e-9, "{r:?}");
        assert!(r.pass);
    }

    #[test]
    fn weyl_solved_and_conformal() {
        let s = spec(WEYL);
        let (x, v) = ([0.3, -0.2], [0.7, 0.4]);
        let r = helmholtz_residuals(&s, &x, &v, HSource::Solved).unwrap();
        assert!(r.max() <= 1e-7, "{r:?}");
        let r =
            helmholtz_residuals(&s, &x, &v, HSource::Explicit(&ConformalMultiplier(&s))).unwrap();
        assert!(r.max() <= 1e-12, "{r:?}");
    }

    #[test]
    fn metric_multiplier_fails_for_weyl_force() {
        let s = spec(WEYL);
        let r = helmholtz_residuals(
            &s,
            &[0.3, 0.1],
            &[1.0, 0.5],
            HSource::Explicit(&MetricMultiplier(&s)),
        )
        .unwrap();
        assert!(r.h2_generic >= 0.1 && r.h2_connection >= 0.1);
        assert!(!r.pass);
    }

    #[test]
    fn velocity_dependent_candidate_trips_h1() {
        let s = spec(FLAT);
        let field = FnMultiplier(|_x: &[f64], v: &[f64]| {
            let h = Matrix::from_row_slice(2, 2, &[1.0 + v[1] * v[1], 0.0, 0.0, 1.0]);
            Ok((h, Tensor3::zeros(2)))
        });
        let r =
            helmholtz_residuals(&s, &[0.0, 0.0], &[0.0, 1.0], HSource::Explicit(&field)).unwrap();
        assert!((r.h1 - 2.0).abs() < 1e-6, "{}", r.h1);
    }

    #[test]
    fn degenerate_candidate_rejected() {
        let s = spec(FLAT);
        let field = ConstantMultiplier(Matrix::zeros(2, 2));
        assert!(matches!(
            helmholtz_residuals(&s, &[0.0, 0.0], &[1.0, 0.0], HSource::Explicit(&field)),
            Err(Error::DegenerateH { .. })
        ));
    }
}
