//! Levi-Civita symbols, disformation, the full torsion-free connection, its
//! first partials and its curvature at a point.
//!
//! Conventions: `Γ[a][b][c] = Γ^a_bc`, derivative index first for partials,
//! and `R[a][b][c][d] = R_abc^d = ∂_b Γ^d_ac − ∂_a Γ^d_bc + Γ^d_bi Γ^i_ac − Γ^d_ai Γ^i_bc`.
//! Indices are raised and lowered with g only.

use serde::Serialize;

use crate::error::Result;
use crate::expr::Order;
use crate::geometry::{GeometrySpec, PointFields};
use crate::tensor::{Matrix, Tensor3, Tensor4};

/// Christoffel symbols of a metric with their first partials.
#[derive(Clone, Debug)]
pub struct LeviCivita {
    /// `{a bc}` stored `[a][b][c]`
    pub symbols: Tensor3,
    /// `∂_e {a bc}` stored `[e][a][b][c]`
    pub derivs: Tensor4,
}

#[derive(Clone, Debug)]
pub struct ConnectionPoint {
    pub fields: PointFields,
    pub christoffel: Tensor3,
    pub disformation: Tensor3,
    pub gamma: Tensor3,
    /// `∂_d Γ^a_bc` stored `[d][a][b][c]`
    pub dgamma: Tensor4,
    pub riemann: Tensor4,
}

impl ConnectionPoint {
    pub fn x(&self) -> &[f64] {
        &self.fields.x
    }

    pub fn dim(&self) -> usize {
        self.fields.dim()
    }
}

/// `½ ginv^{ad} (∂_b m_cd + ∂_c m_bd − ∂_d m_bc)` for any symmetric
/// non-degenerate `m` with partials `dm[e][a][b] = ∂_e m_ab`.
pub fn christoffel_from_metric(minv: &Matrix, dm: &Tensor3) -> Tensor3 {
    let n = minv.nrows();
    let lowered = Tensor3::from_fn(n, |d, b, c| {
        0.5 * (dm[[b, c, d]] + dm[[c, b, d]] - dm[[d, b, c]])
    });
    let mut out = Tensor3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let s: f64 = (0..n).map(|d| minv[(a, d)] * lowered[[d, b, c]]).sum();
                out[[a, b, c]] = s;
                out[[a, c, b]] = s;
            }
        }
    }
    out
}

pub fn levi_civita_at(pf: &PointFields) -> LeviCivita {
    let n = pf.dim();
    let symbols = christoffel_from_metric(&pf.ginv, &pf.dg);
    let dginv = pf.dginv();
    let mut derivs = Tensor4::zeros(n);
    for e in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        let lowered = pf.dg[[b, c, d]] + pf.dg[[c, b, d]] - pf.dg[[d, b, c]];
                        let dlowered =
                            pf.d2g[[e, b, c, d]] + pf.d2g[[e, c, b, d]] - pf.d2g[[e, d, b, c]];
                        s += dginv[[e, a, d]] * lowered + pf.ginv[(a, d)] * dlowered;
                    }
                    derivs[[e, a, b, c]] = 0.5 * s;
                    derivs[[e, a, c, b]] = 0.5 * s;
                }
            }
        }
    }
    LeviCivita { symbols, derivs }
}

/// `K_dbc = ½(Q_dbc − Q_bdc − Q_cdb)`, so that `L^a_bc = g^{ad} K_dbc`.
fn lowered_disformation(q: &Tensor3) -> Tensor3 {
    let n = q.dim();
    Tensor3::symmetric_from_fn(n, |d, b, c| {
        0.5 * (q[[d, b, c]] - q[[b, d, c]] - q[[c, d, b]])
    })
}

fn raise_first(ginv: &Matrix, t: &Tensor3) -> Tensor3 {
    let n = t.dim();
    Tensor3::symmetric_from_fn(n, |a, b, c| {
        (0..n).map(|d| ginv[(a, d)] * t[[d, b, c]]).sum()
    })
}

/// `L^a_bc = ½ Q^a_bc − Q_(b^a_c)`
pub fn disformation_at(pf: &PointFields) -> Tensor3 {
    raise_first(&pf.ginv, &lowered_disformation(&pf.q))
}

/// `∂_e L^a_bc` stored `[e][a][b][c]`.
pub fn disformation_derivs(pf: &PointFields) -> Tensor4 {
    let n = pf.dim();
    let lowered = lowered_disformation(&pf.q);
    let dginv = pf.dginv();
    Tensor4::symmetric_from_fn(n, |e, a, b, c| {
        let mut s = 0.0;
        for d in 0..n {
            let dk = 0.5 * (pf.dq[[e, d, b, c]] - pf.dq[[e, b, d, c]] - pf.dq[[e, c, d, b]]);
            s += dginv[[e, a, d]] * lowered[[d, b, c]] + pf.ginv[(a, d)] * dk;
        }
        s
    })
}

/// Closed-form disformation of a Weyl non-metricity `Q_abc = ∂_a ω g_bc`:
/// `L^a_bc = ½ g^{ad} ∂_d ω g_bc − ½ (∂_b ω δ^a_c + ∂_c ω δ^a_b)`.
pub fn weyl_disformation(g: &Matrix, ginv: &Matrix, domega: &[f64]) -> Tensor3 {
    let n = g.nrows();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Tensor3::symmetric_from_fn(n, |a, b, c| {
        let up: f64 = (0..n).map(|d| ginv[(a, d)] * domega[d]).sum();
        0.5 * up * g[(b, c)] - 0.5 * (domega[b] * delta(a, c) + domega[c] * delta(a, b))
    })
}

/// `R_abc^d = ∂_b Γ^d_ac − ∂_a Γ^d_bc + Γ^d_bi Γ^i_ac − Γ^d_ai Γ^i_bc`
pub fn curvature(gamma: &Tensor3, dgamma: &Tensor4) -> Tensor4 {
    let n = gamma.dim();
    let mut r = Tensor4::zeros(n);
    for a in 0..n {
        for b in (a + 1)..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = dgamma[[b, d, a, c]] - dgamma[[a, d, b, c]];
                    for i in 0..n {
                        s += gamma[[d, b, i]] * gamma[[i, a, c]]
                            - gamma[[d, a, i]] * gamma[[i, b, c]];
                    }
                    r[[a, b, c, d]] = s;
                    r[[b, a, c, d]] = -s;
                }
            }
        }
    }
    r
}

impl ConnectionPoint {
    pub fn from_fields(fields: PointFields) -> Self {
        let n = fields.dim();
        let lc = levi_civita_at(&fields);
        let disformation = disformation_at(&fields);
        let dl = disformation_derivs(&fields);
        let gamma = Tensor3::symmetric_from_fn(n, |a, b, c| {
            lc.symbols[[a, b, c]] + disformation[[a, b, c]]
        });
        let dgamma =
            Tensor4::symmetric_from_fn(n, |d, a, b, c| lc.derivs[[d, a, b, c]] + dl[[d, a, b, c]]);
        let riemann = curvature(&gamma, &dgamma);
        Self {
            fields,
            christoffel: lc.symbols,
            disformation,
            gamma,
            dgamma,
            riemann,
        }
    }

    /// Same point with the disformation dropped (the Levi-Civita connection of g).
    pub fn levi_civita_only(&self) -> Self {
        let n = self.dim();
        let lc = levi_civita_at(&self.fields);
        let riemann = curvature(&lc.symbols, &lc.derivs);
        Self {
            fields: self.fields.clone(),
            christoffel: lc.symbols.clone(),
            disformation: Tensor3::zeros(n),
            gamma: lc.symbols,
            dgamma: lc.derivs,
            riemann,
        }
    }

    /// `∇_a g_bc = ∂_a g_bc − Γ^d_ab g_dc − Γ^d_ac g_bd`, stored `[a][b][c]`.
    pub fn metric_covariant_derivative(&self) -> Tensor3 {
        covariant_derivative_of_form(&self.gamma, &self.fields.g, &self.fields.dg)
    }

    /// `R̄_abcd = R_abc^k H_kd`
    pub fn rbar(&self, h: &Matrix) -> Tensor4 {
        let n = self.dim();
        Tensor4::from_fn(n, |a, b, c, d| {
            (0..n).map(|k| self.riemann[[a, b, c, k]] * h[(k, d)]).sum()
        })
    }
}

/// `∇_a m_bc` for a symmetric two-form with partials `dm[a][b][c] = ∂_a m_bc`.
pub fn covariant_derivative_of_form(gamma: &Tensor3, m: &Matrix, dm: &Tensor3) -> Tensor3 {
    let n = gamma.dim();
    Tensor3::from_fn(n, |a, b, c| {
        let mut s = dm[[a, b, c]];
        for d in 0..n {
            s -= gamma[[d, a, b]] * m[(d, c)] + gamma[[d, a, c]] * m[(b, d)];
        }
        s
    })
}

/// Γ alone, from first-order jets. Used on hot integration paths.
pub fn gamma_at(spec: &GeometrySpec, x: &[f64]) -> Result<Tensor3> {
    let pf = spec.fields_at_order(x, Order::First)?;
    let lc = christoffel_from_metric(&pf.ginv, &pf.dg);
    let l = disformation_at(&pf);
    let n = pf.dim();
    Ok(Tensor3::symmetric_from_fn(n, |a, b, c| {
        lc[[a, b, c]] + l[[a, b, c]]
    }))
}

/// Levi-Civita symbols of g alone, from first-order jets.
pub fn christoffel_at(spec: &GeometrySpec, x: &[f64]) -> Result<Tensor3> {
    let pf = spec.fields_at_order(x, Order::First)?;
    Ok(christoffel_from_metric(&pf.ginv, &pf.dg))
}

pub fn connection_at(spec: &GeometrySpec, x: &[f64]) -> Result<ConnectionPoint> {
    Ok(ConnectionPoint::from_fields(spec.fields_at(x)?))
}

/// Max-abs residuals of the three pair symmetries of `R̄_abcd`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RbarResiduals {
    /// `R̄_abcd + R̄_bacd`
    pub first_pair: f64,
    /// `R̄_abcd + R̄_abdc`
    pub last_pair: f64,
    /// `R̄_abcd − R̄_cdab`
    pub pair_exchange: f64,
}

impl RbarResiduals {
    pub fn max(&self) -> f64 {
        self.first_pair.max(self.last_pair).max(self.pair_exchange)
    }
}

pub fn rbar_symmetry_residuals(cp: &ConnectionPoint, h: &Matrix) -> RbarResiduals {
    let n = cp.dim();
    let rb = cp.rbar(h);
    let mut out = RbarResiduals {
        first_pair: 0.0,
        last_pair: 0.0,
        pair_exchange: 0.0,
    };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = rb[[a, b, c, d]];
                    out.first_pair = out.first_pair.max((v + rb[[b, a, c, d]]).abs());
                    out.last_pair = out.last_pair.max((v + rb[[a, b, d, c]]).abs());
                    out.pair_exchange = out.pair_exchange.max((v - rb[[c, d, a, b]]).abs());
                }
            }
        }
    }
    out
}
