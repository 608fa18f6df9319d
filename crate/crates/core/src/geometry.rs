//! Geometry documents and point evaluation of metric and non-metricity.
//!
//! A document is a JSON object:
//!
//! ```json
//! {
//!   "dim": 2,
//!   "coords": ["t", "r"],
//!   "metric": { "0,0": "1", "1,1": "sin(t)^2" },
//!   "nonmetricity": { "weyl": "2*t" },
//!   "base_point": [0.5, 0.0],
//!   "h0": [[1, 0], [0, 1]]
//! }
//! ```
//!
//! `nonmetricity` is either absent (Q ≡ 0), `{"weyl": ω}` meaning
//! `Q_abc = ∂_a ω g_bc`, or a map from `"a,b,c"` to expressions, symmetric in
//! `b,c`. Omitted entries are zero. Indices are zero-based.

use std::path::Path;

use nalgebra::DMatrix;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::expr::{Expression, Order};
use crate::tensor::{Matrix, Tensor3, Tensor4};

/// |det g| at or below this is treated as singular.
pub const METRIC_SINGULARITY: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum NonMetricity {
    /// `Q_abc` table, `[a][b][c]` row-major, symmetric in `b,c`.
    Explicit(Vec<Expression>),
    /// `Q_abc = ∂_a ω g_bc`.
    Weyl(Expression),
}

#[derive(Clone, Debug)]
pub struct GeometrySpec {
    dim: usize,
    coords: Vec<String>,
    /// `g_ab`, row-major, mirror-completed.
    metric: Vec<Expression>,
    nonmetricity: NonMetricity,
    base_point: Vec<f64>,
    h0: Matrix,
    h0_explicit: bool,
}

/// Metric and non-metricity with their partials at one point.
#[derive(Clone, Debug)]
pub struct PointFields {
    pub x: Vec<f64>,
    pub g: Matrix,
    pub ginv: Matrix,
    pub det_g: f64,
    /// `dg[c][a][b] = ∂_c g_ab`
    pub dg: Tensor3,
    /// `d2g[c][d][a][b] = ∂_c ∂_d g_ab`
    pub d2g: Tensor4,
    /// `q[a][b][c] = Q_abc`
    pub q: Tensor3,
    /// `dq[d][a][b][c] = ∂_d Q_abc`
    pub dq: Tensor4,
}

impl PointFields {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `∂_e g^ab = −g^ap ∂_e g_pq g^qb`, stored `[e][a][b]`.
    pub fn dginv(&self) -> Tensor3 {
        let n = self.dim();
        let mut out = Tensor3::zeros(n);
        for e in 0..n {
            let de = DMatrix::from_fn(n, n, |p, q| self.dg[[e, p, q]]);
            let prod = -(&self.ginv * de * &self.ginv);
            for a in 0..n {
                for b in 0..n {
                    out[[e, a, b]] = prod[(a, b)];
                }
            }
        }
        out
    }
}

fn parse_index(key: &str, n: usize, arity: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    if parts.len() != arity {
        return Err(Error::schema(
            key,
            format!("expected {arity} comma-separated indices"),
        ));
    }
    parts
        .iter()
        .map(|p| {
            let i: usize = p
                .parse()
                .map_err(|_| Error::schema(key, format!("`{p}` is not an index")))?;
            if i >= n {
                return Err(Error::schema(
                    key,
                    format!("index {i} out of range for dim {n}"),
                ));
            }
            Ok(i)
        })
        .collect()
}

fn expression_entry(key: &str, value: &Value, coords: &[String]) -> Result<Expression> {
    let src = match value {
        Value::String(s) => s.clone(),
        Value::Number(x) => x.to_string(),
        _ => return Err(Error::schema(key, "expected an expression string")),
    };
    Expression::parse(&src, coords).map_err(|source| Error::Expression {
        key: key.to_string(),
        source,
    })
}

fn real_array(key: &str, value: &Value, len: usize) -> Result<Vec<f64>> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::schema(key, "expected an array of numbers"))?;
    if arr.len() != len {
        return Err(Error::schema(
            key,
            format!("expected {len} entries, got {}", arr.len()),
        ));
    }
    arr.iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| Error::schema(key, format!("`{v}` is not a number")))
        })
        .collect()
}

/// Places `expr` at every slot in `slots`, failing if one is already taken by a
/// different expression.
fn place(
    table: &mut [Option<(String, Expression)>],
    slots: &[usize],
    key: &str,
    expr: Expression,
) -> Result<()> {
    for &s in slots {
        if let Some((prev_key, prev)) = &table[s] {
            if prev_key != key && !prev.same_tree(&expr) {
                return Err(Error::Conflict {
                    key: key.to_string(),
                    mirror: prev_key.clone(),
                    message: format!("`{expr}` differs from `{prev}`"),
                });
            }
        }
    }
    for &s in slots {
        table[s] = Some((key.to_string(), expr.clone()));
    }
    Ok(())
}

impl GeometrySpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_value(&value)
    }

    pub fn from_value(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::schema("$", "document must be an object"))?;
        const KEYS: [&str; 6] = [
            "dim",
            "coords",
            "metric",
            "nonmetricity",
            "base_point",
            "h0",
        ];
        if let Some(bad) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::schema(bad.as_str(), "unknown key"));
        }
        let required = |k: &str| {
            obj.get(k)
                .ok_or_else(|| Error::schema(k, "missing required key"))
        };

        let dim = required("dim")?
            .as_u64()
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::schema("dim", "expected a positive integer"))?
            as usize;

        let coords: Vec<String> = required("coords")?
            .as_array()
            .ok_or_else(|| Error::schema("coords", "expected an array of names"))?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::schema("coords", "coordinate names must be strings"))
            })
            .collect::<Result<_>>()?;
        if coords.len() != dim {
            return Err(Error::schema(
                "coords",
                format!("expected {dim} names, got {}", coords.len()),
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            let ident = c
                .chars()
                .next()
                .is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !ident {
                return Err(Error::schema(
                    "coords",
                    format!("`{c}` is not an identifier"),
                ));
            }
            if coords[..i].contains(c) {
                return Err(Error::schema("coords", format!("duplicate name `{c}`")));
            }
        }

        let metric_obj = required("metric")?
            .as_object()
            .ok_or_else(|| Error::schema("metric", "expected a map from \"a,b\" to expressions"))?;
        let mut metric: Vec<Option<(String, Expression)>> = vec![None; dim * dim];
        for (key, v) in metric_obj {
            let full = format!("metric.{key}");
            let idx = parse_index(key, dim, 2).map_err(|e| rekey(e, &full))?;
            let expr = expression_entry(&full, v, &coords)?;
            let (a, b) = (idx[0], idx[1]);
            place(&mut metric, &[a * dim + b, b * dim + a], &full, expr)?;
        }
        let metric: Vec<Expression> = metric
            .into_iter()
            .map(|e| e.map_or_else(|| Expression::zero(&coords), |(_, x)| x))
            .collect();

        let nonmetricity = match obj.get("nonmetricity") {
            None | Some(Value::Null) => {
                NonMetricity::Explicit(vec![Expression::zero(&coords); dim.pow(3)])
            }
            Some(Value::Object(m)) if m.contains_key("weyl") => {
                if m.len() != 1 {
                    return Err(Error::schema(
                        "nonmetricity",
                        "Weyl form takes only the `weyl` key",
                    ));
                }
                NonMetricity::Weyl(expression_entry("nonmetricity.weyl", &m["weyl"], &coords)?)
            }
            Some(Value::Object(m)) => NonMetricity::Explicit(explicit_q(m, dim, &coords)?),
            Some(_) => {
                return Err(Error::schema(
                    "nonmetricity",
                    "expected a map from \"a,b,c\" to expressions or {\"weyl\": ...}",
                ))
            }
        };

        let base_point = real_array("base_point", required("base_point")?, dim)?;

        let h0 = match obj.get("h0") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let rows = v
                    .as_array()
                    .filter(|r| r.len() == dim)
                    .ok_or_else(|| Error::schema("h0", format!("expected {dim} rows")))?;
                let rows: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|r| real_array("h0", r, dim))
                    .collect::<Result<_>>()?;
                let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
                if m != m.transpose() {
                    return Err(Error::schema("h0", "matrix must be symmetric"));
                }
                Some(m)
            }
        };

        let mut spec = GeometrySpec {
            dim,
            coords,
            metric,
            nonmetricity,
            base_point,
            h0: DMatrix::zeros(dim, dim),
            h0_explicit: h0.is_some(),
        };
        let g0 = spec.metric_at(&spec.base_point, Order::Value)?;
        let det = g0.0.determinant();
        if !(det.abs() > METRIC_SINGULARITY) {
            return Err(Error::DegenerateMetric {
                at: spec.base_point.clone(),
                det,
            });
        }
        spec.h0 = h0.unwrap_or(g0.0);
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    /// Initial value of the effective metric at the base point.
    pub fn h0(&self) -> &Matrix {
        &self.h0
    }

    pub fn h0_is_explicit(&self) -> bool {
        self.h0_explicit
    }

    pub fn nonmetricity(&self) -> &NonMetricity {
        &self.nonmetricity
    }

    pub fn is_weyl(&self) -> bool {
        matches!(self.nonmetricity, NonMetricity::Weyl(_))
    }

    pub fn weyl_potential(&self) -> Option<&Expression> {
        match &self.nonmetricity {
            NonMetricity::Weyl(w) => Some(w),
            NonMetricity::Explicit(_) => None,
        }
    }

    pub fn metric_expr(&self, a: usize, b: usize) -> &Expression {
        &self.metric[a * self.dim + b]
    }

    /// Returns a copy with the base point (and default `h0`) moved to `p`.
    pub fn with_base_point(&self, p: &[f64]) -> Result<Self> {
        let mut doc = self.to_json();
        doc["base_point"] = Value::from(p.to_vec());
        Self::from_value(&doc)
    }

    /// Returns a copy with an explicit `h0`.
    pub fn with_h0(&self, h0: &Matrix) -> Result<Self> {
        let mut doc = self.to_json();
        doc["h0"] = Value::from(crate::tensor::matrix_to_rows(h0));
        Self::from_value(&doc)
    }

    /// g with partials up to `order`, as (g, dg[c][a][b], d2g[c][d][a][b]).
    fn metric_at(&self, x: &[f64], order: Order) -> Result<(Matrix, Tensor3, Tensor4)> {
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        let mut dg = Tensor3::zeros(n);
        let mut d2g = Tensor4::zeros(n);
        for a in 0..n {
            for b in a..n {
                let expr = self.metric_expr(a, b);
                if expr.is_zero() {
                    continue;
                }
                let j = expr.evaluate_jet(x, order)?;
                g[(a, b)] = j.value;
                g[(b, a)] = j.value;
                for c in 0..n {
                    dg[[c, a, b]] = j.grad[c];
                    dg[[c, b, a]] = j.grad[c];
                    for d in 0..n {
                        d2g[[c, d, a, b]] = j.hess[(c, d)];
                        d2g[[c, d, b, a]] = j.hess[(c, d)];
                    }
                }
            }
        }
        Ok((g, dg, d2g))
    }

    pub fn metric_value(&self, x: &[f64]) -> Result<Matrix> {
        self.check_point(x)?;
        Ok(self.metric_at(x, Order::Value)?.0)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Invalid(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Metric, inverse metric, non-metricity and their partials at `x`.
    pub fn fields_at(&self, x: &[f64]) -> Result<PointFields> {
        self.fields_at_order(x, Order::Second)
    }

    /// As [`fields_at`](Self::fields_at) with g differentiated to `order`
    /// and Q to one order less; skipped partials are zero.
    pub fn fields_at_order(&self, x: &[f64], order: Order) -> Result<PointFields> {
        self.check_point(x)?;
        let n = self.dim;
        let q_order = match order {
            Order::Second => Order::First,
            _ => Order::Value,
        };
        let (g, dg, d2g) = self.metric_at(x, order)?;
        let lu = g.clone().lu();
        let det_g = lu.determinant();
        if !(det_g.abs() > METRIC_SINGULARITY) {
            return Err(Error::DegenerateMetric {
                at: x.to_vec(),
                det: det_g,
            });
        }
        let ginv = lu.try_inverse().ok_or(Error::DegenerateMetric {
            at: x.to_vec(),
            det: det_g,
        })?;

        let mut q = Tensor3::zeros(n);
        let mut dq = Tensor4::zeros(n);
        match &self.nonmetricity {
            NonMetricity::Explicit(table) => {
                for a in 0..n {
                    for b in 0..n {
                        for c in b..n {
                            let expr = &table[(a * n + b) * n + c];
                            if expr.is_zero() {
                                continue;
                            }
                            let j = expr.evaluate_jet(x, q_order)?;
                            q[[a, b, c]] = j.value;
                            q[[a, c, b]] = j.value;
                            for d in 0..n {
                                dq[[d, a, b, c]] = j.grad[d];
                                dq[[d, a, c, b]] = j.grad[d];
                            }
                        }
                    }
                }
            }
            NonMetricity::Weyl(omega) => {
                // Q needs ∂ω, so ω carries one order more than Q.
                let w = omega.evaluate_jet(x, order.max(Order::First))?;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            q[[a, b, c]] = w.grad[a] * g[(b, c)];
                            for d in 0..n {
                                dq[[d, a, b, c]] =
                                    w.hess[(d, a)] * g[(b, c)] + w.grad[a] * dg[[d, b, c]];
                            }
                        }
                    }
                }
            }
        }

        Ok(PointFields {
            x: x.to_vec(),
            g,
            ginv,
            det_g,
            dg,
            d2g,
            q,
            dq,
        })
    }

    /// Serializes back to the document format.
    pub fn to_json(&self) -> Value {
        let n = self.dim;
        let mut metric = Map::new();
        for a in 0..n {
            for b in a..n {
                let e = self.metric_expr(a, b);
                if !e.is_zero() {
                    metric.insert(format!("{a},{b}"), Value::from(e.to_string()));
                }
            }
        }
        let nonmetricity = match &self.nonmetricity {
            NonMetricity::Weyl(w) => serde_json::json!({ "weyl": w.to_string() }),
            NonMetricity::Explicit(table) => {
                let mut m = Map::new();
                for a in 0..n {
                    for b in 0..n {
                        for c in b..n {
                            let e = &table[(a * n + b) * n + c];
                            if !e.is_zero() {
                                m.insert(format!("{a},{b},{c}"), Value::from(e.to_string()));
                            }
                        }
                    }
                }
                Value::Object(m)
            }
        };
        let mut doc = serde_json::json!({
            "dim": n,
            "coords": self.coords,
            "metric": metric,
            "nonmetricity": nonmetricity,
            "base_point": self.base_point,
        });
        if self.h0_explicit {
            doc["h0"] = Value::from(crate::tensor::matrix_to_rows(&self.h0));
        }
        doc
    }
}

fn explicit_q(m: &Map<String, Value>, n: usize, coords: &[String]) -> Result<Vec<Expression>> {
    let mut table: Vec<Option<(String, Expression)>> = vec![None; n * n * n];
    for (key, v) in m {
        let full = format!("nonmetricity.{key}");
        let idx = parse_index(key, n, 3).map_err(|e| rekey(e, &full))?;
        let expr = expression_entry(&full, v, coords)?;
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        place(
            &mut table,
            &[(a * n + b) * n + c, (a * n + c) * n + b],
            &full,
            expr,
        )?;
    }
    Ok(table
        .into_iter()
        .map(|e| e.map_or_else(|| Expression::zero(coords), |(_, x)| x))
        .collect())
}

fn rekey(e: Error, key: &str) -> Error {
    match e {
        Error::Schema { message, .. } => Error::schema(key, message),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn spec(doc: &str) -> Result<GeometrySpec> {
        GeometrySpec::from_json_str(doc)
    }

    #[test]
    fn flat_document_has_zero_q() {
        let s = spec(
            r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1"},"base_point":[0,0]}"#,
        )
        .unwrap();
        let pf = s.fields_at(&[0.3, -1.2]).unwrap();
        assert_eq!(pf.g, Matrix::identity(2, 2));
        assert_eq!(pf.q.max_abs(), 0.0);
        assert_eq!(pf.dg.max_abs(), 0.0);
        assert_eq!(pf.d2g.max_abs(), 0.0);
        assert_eq!(s.h0(), &Matrix::identity(2, 2));
        assert!(!s.is_weyl());
    }

    #[test]
    fn weyl_document() {
        let s = spec(
            r#"{"dim":2,"coords":["x0","x1"],"metric":{"0,0":"1","1,1":"1"},
                        "nonmetricity":{"weyl":"2*x0"},"base_point":[0,0]}"#,
        )
        .unwrap();
        assert!(s.is_weyl());
        let pf = s.fields_at(&[0.7, 0.1]).unwrap();
        assert_eq!(pf.q[[0, 0, 0]], 2.0);
        assert_eq!(pf.q[[0, 1, 1]], 2.0);
        assert_eq!(pf.q[[0, 0, 1]], 0.0);
        for b in 0..2 {
            for c in 0..2 {
                assert_eq!(pf.q[[1, b, c]], 0.0);
            }
        }
    }

    #[test]
    fn degenerate_base_point_rejected() {
        let e = spec(
            r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"0","1,1":"1"},"base_point":[0,0]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::DegenerateMetric { .. }), "{e}");
    }

    #[test]
    fn sphere_metric_derivative() {
        let s = spec(r#"{"dim":2,"coords":["th","ph"],"metric":{"0,0":"1","1,1":"sin(th)^2"},"base_point":[1,0]}"#)
            .unwrap();
        let pf = s.fields_at(&[FRAC_PI_4, 0.0]).unwrap();
        assert!((pf.dg[[0, 1, 1]] - 1.0).abs() < 1e-15);
        assert!((pf.d2g[[0, 0, 1, 1]] - 0.0).abs() < 1e-15); // 2 cos 2θ at π/4
        let eye = &pf.ginv * &pf.g - Matrix::identity(2, 2);
        assert!(crate::tensor::max_abs(&eye) <= 1e-12);
    }

    #[test]
    fn singular_point_is_an_error() {
        let s = spec(r#"{"dim":2,"coords":["th","ph"],"metric":{"0,0":"1","1,1":"sin(th)^2"},"base_point":[1,0]}"#)
            .unwrap();
        assert!(matches!(
            s.fields_at(&[0.0, 0.0]),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn schema_errors_name_the_key() {
        let cases = [
            (
                r#"{"dim":2,"coords":["x","y"],"metric":{},"base_point":[0,0],"extra":1}"#,
                "extra",
            ),
            (r#"{"coords":["x"],"metric":{},"base_point":[0]}"#, "dim"),
            (
                r#"{"dim":1,"coords":["x"],"metric":{"0,0":"1"},"base_point":[0,1]}"#,
                "base_point",
            ),
            (
                r#"{"dim":1,"coords":["x"],"metric":{"0,1":"1"},"base_point":[0]}"#,
                "metric.0,1",
            ),
            (
                r#"{"dim":1,"coords":["x"],"metric":{"0,0":"1"},"nonmetricity":{"0,0":"1"},"base_point":[0]}"#,
                "nonmetricity.0,0",
            ),
            (
                r#"{"dim":1,"coords":["x"],"metric":{"0,0":"1"},"base_point":[0],"h0":[[1,2]]}"#,
                "h0",
            ),
            (
                r#"{"dim":2,"coords":["x","x"],"metric":{"0,0":"1"},"base_point":[0,0]}"#,
                "coords",
            ),
        ];
        for (doc, key) in cases {
            match spec(doc).unwrap_err() {
                Error::Schema { key: k, .. } => assert_eq!(k, key, "{doc}"),
                other => panic!("{doc}: {other}"),
            }
        }
        match spec(r#"{"dim":1,"coords":["x"],"metric":{"0,0":"1 +"},"base_point":[0]}"#)
            .unwrap_err()
        {
            Error::Expression { key, .. } => assert_eq!(key, "metric.0,0"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn mirrored_entries_must_agree() {
        let ok = spec(
            r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1","0,1":"x/9","1,0":"x / 9"},"base_point":[0,0]}"#,
        );
        assert!(ok.is_ok());
        let bad = spec(
            r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1","0,1":"x","1,0":"y"},"base_point":[0,0]}"#,
        );
        assert!(matches!(bad, Err(Error::Conflict { .. })));
        let bad_q = spec(
            r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1"},
            "nonmetricity":{"0,0,1":"x","0,1,0":"2*x"},"base_point":[0,0]}"#,
        );
        assert!(matches!(bad_q, Err(Error::Conflict { .. })));
    }

    #[test]
    fn explicit_q_is_mirrored() {
        let s = spec(
            r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"1","1,1":"1"},
            "nonmetricity":{"1,0,1":"x*y"},"base_point":[0,0]}"#,
        )
        .unwrap();
        let pf = s.fields_at(&[2.0, 3.0]).unwrap();
        assert_eq!(pf.q[[1, 0, 1]], 6.0);
        assert_eq!(pf.q[[1, 1, 0]], 6.0);
        assert_eq!(pf.dq[[0, 1, 1, 0]], 3.0);
        assert_eq!(pf.dq[[1, 1, 0, 1]], 2.0);
    }

    #[test]
    fn json_round_trip_preserves_fields() {
        let s = spec(r#"{"dim":2,"coords":["x","y"],"metric":{"0,0":"exp(x)","1,1":"1 + y^2","0,1":"0.1*x*y"},
            "nonmetricity":{"weyl":"sin(x) - y"},"base_point":[0.2,0.1],"h0":[[2,0],[0,3]]}"#)
        .unwrap();
        let back = GeometrySpec::from_value(&s.to_json()).unwrap();
        let x = [0.4, -0.3];
        let (a, b) = (s.fields_at(&x).unwrap(), back.fields_at(&x).unwrap());
        assert_eq!(a.g, b.g);
        assert_eq!(a.dq, b.dq);
        assert_eq!(back.h0(), s.h0());
    }
}
