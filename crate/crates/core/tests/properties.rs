use proptest::prelude::*;

use varpath::connection::{
    christoffel_from_metric, connection_at, covariant_derivative_of_form, weyl_disformation,
};
use varpath::dynamics::{action_value, integrate_curve, CurveKind};
use varpath::helmholtz::{
    autoparallel_force, helmholtz_residuals, reference_force, ConstantMultiplier, HSource,
    MultiplierField, ReferenceKind,
};
use varpath::ode::Stepper;
use varpath::tensor::{max_abs, Tensor3};
use varpath::transport::{h_at, reconstruct_dh, transport_h, Path, DEFAULT_DEGENERACY_THRESHOLD};
use varpath::{Expression, GeometrySpec, Matrix, Order};

const COORDS: [&str; 3] = ["x", "y", "z"];

/// Smooth expressions in x, y, z, finite on [-1, 1]^3.
fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(&COORDS[..]).prop_map(str::to_string),
        (-3.0f64..3.0).prop_map(|c| format!("{c:.4}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + cos({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("exp(tanh({a}))")),
            inner.clone().prop_map(|a| format!("ln(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("sqrt(2 + sin({a}))^3")),
        ]
    })
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

fn parse(src: &str) -> Expression {
    Expression::parse(src, &COORDS).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jets_match_central_differences(src in smooth_expr(), p in point3()) {
        let e = parse(&src);
        let jet = e.evaluate_jet(&p, Order::Second).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[i] += h;
            pm[i] -= h;
            let fd = (e.value_at(&pp).unwrap() - e.value_at(&pm).unwrap()) / (2.0 * h);
            prop_assert!(close(jet.grad[i], fd, 1e-6), "grad {i}: {} vs {fd}", jet.grad[i]);
            let gp = e.evaluate_jet(&pp, Order::First).unwrap().grad;
            let gm = e.evaluate_jet(&pm, Order::First).unwrap().grad;
            for j in 0..3 {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                prop_assert!(close(jet.hess[(i, j)], fd, 1e-6));
                prop_assert_eq!(jet.hess[(i, j)], jet.hess[(j, i)]);
            }
        }
    }

    #[test]
    fn jets_are_linear(f in smooth_expr(), g in smooth_expr(), a in -2.0f64..2.0, b in -2.0f64..2.0, p in point3()) {
        let combined = parse(&format!("({a:?})*({f}) + ({b:?})*({g})"));
        let (jf, jg) = (parse(&f).evaluate_jet(&p, Order::Second).unwrap(), parse(&g).evaluate_jet(&p, Order::Second).unwrap());
        let j = combined.evaluate_jet(&p, Order::Second).unwrap();
        let scale = 1.0 + jf.hess.amax().max(jg.hess.amax()).max(jf.value.abs()).max(jg.value.abs());
        let tol = 1e-13 * scale;
        prop_assert!((j.value - (a * jf.value + b * jg.value)).abs() <= tol);
        for i in 0..3 {
            prop_assert!((j.grad[i] - (a * jf.grad[i] + b * jg.grad[i])).abs() <= tol);
            for k in 0..3 {
                prop_assert!((j.hess[(i, k)] - (a * jf.hess[(i, k)] + b * jg.hess[(i, k)])).abs() <= tol);
            }
        }
    }

    #[test]
    fn product_rule(f in smooth_expr(), g in smooth_expr(), p in point3()) {
        let (jf, jg) = (parse(&f).evaluate_jet(&p, Order::First).unwrap(), parse(&g).evaluate_jet(&p, Order::First).unwrap());
        let j = parse(&format!("({f}) * ({g})")).evaluate_jet(&p, Order::First).unwrap();
        for i in 0..3 {
            let expected = jf.value * jg.grad[i] + jg.value * jf.grad[i];
            prop_assert!(close(j.grad[i], expected, 1e-13));
        }
    }

    #[test]
    fn display_round_trips(src in smooth_expr(), p in point3()) {
        let e = parse(&src);
        let again = parse(&e.to_string());
        prop_assert!(e.same_tree(&again));
        prop_assert_eq!(e.value_at(&p).unwrap(), again.value_at(&p).unwrap());
    }
}

/// Curved 2D metric with an explicit polynomial non-metricity.
const CURVED: &str = r#"{
    "dim": 2, "coords": ["u", "w"],
    "metric": {"0,0": "1 + 0.2*u^2", "0,1": "0.1*u*w", "1,1": "2 + sin(w)"},
    "nonmetricity": {"0,0,0": "0.1*u", "0,1,1": "0.05*w^2", "1,0,1": "0.2*u*w", "1,1,1": "0.1"},
    "base_point": [0.1, 0.2]
}"#;

fn curved() -> GeometrySpec {
    GeometrySpec::from_json_str(CURVED).unwrap()
}

fn weyl_spec(omega: &str, metric11: &str) -> GeometrySpec {
    let doc = serde_json::json!({
        "dim": 2, "coords": ["x0", "x1"],
        "metric": {"0,0": "1 + 0.1*x1^2", "1,1": metric11},
        "nonmetricity": {"weyl": omega},
        "base_point": [0.0, 0.0],
    });
    GeometrySpec::from_value(&doc).unwrap()
}

fn weyl_potential() -> impl Strategy<Value = String> {
    (-1.0f64..1.0, -1.0f64..1.0, -0.5f64..0.5)
        .prop_map(|(a, b, c)| format!("{a:.3}*x0 + {b:.3}*sin(x1) + {c:.3}*x0*x1"))
}

fn point2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.6f64..0.6, 2)
}

fn velocity2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2).prop_filter("nonzero", |v| v[0].hypot(v[1]) > 0.1)
}

fn finite_difference_partials(spec: &GeometrySpec, x: &[f64]) -> (Tensor3, Matrix) {
    let h = 1e-5;
    let n = x.len();
    let mut dg = Tensor3::zeros(n);
    for c in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        let d = (spec.metric_value(&xp).unwrap() - spec.metric_value(&xm).unwrap()) / (2.0 * h);
        for a in 0..n {
            for b in 0..n {
                dg[[c, a, b]] = d[(a, b)];
            }
        }
    }
    (dg, spec.metric_value(x).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metric_inverse_and_partials(x in point2()) {
        let spec = curved();
        let pf = spec.fields_at(&x).unwrap();
        prop_assert!(max_abs(&(&pf.ginv * &pf.g - Matrix::identity(2, 2))) <= 1e-12);
        let (dg, _) = finite_difference_partials(&spec, &x);
        for c in 0..2 { for a in 0..2 { for b in 0..2 {
            prop_assert!(close(pf.dg[[c, a, b]], dg[[c, a, b]], 1e-6));
        }}}
    }

    #[test]
    fn connection_identities(x in point2()) {
        let cp = connection_at(&curved(), &x).unwrap();
        prop_assert!(cp.metric_covariant_derivative().max_abs_diff(&cp.fields.q) <= 1e-9);
        for a in 0..2 { for b in 0..2 { for c in 0..2 {
            prop_assert_eq!(cp.gamma[[a, b, c]], cp.gamma[[a, c, b]]);
            for d in 0..2 {
                prop_assert!((cp.riemann[[a, b, c, d]] + cp.riemann[[b, a, c, d]]).abs() <= 1e-14);
            }
        }}}
    }

    #[test]
    fn dgamma_matches_differences(x in point2()) {
        let spec = curved();
        let cp = connection_at(&spec, &x).unwrap();
        let h = 1e-5;
        for d in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[d] += h;
            xm[d] -= h;
            let (gp, gm) = (connection_at(&spec, &xp).unwrap().gamma, connection_at(&spec, &xm).unwrap().gamma);
            for a in 0..2 { for b in 0..2 { for c in 0..2 {
                let fd = (gp[[a, b, c]] - gm[[a, b, c]]) / (2.0 * h);
                prop_assert!(close(cp.dgamma[[d, a, b, c]], fd, 1e-6));
            }}}
        }
    }

    #[test]
    fn weyl_paths_agree(omega in weyl_potential(), x in point2()) {
        let spec = weyl_spec(&omega, "1 + x0^2");
        let pf = spec.fields_at(&x).unwrap();
        let w = spec.weyl_potential().unwrap().evaluate_jet(&x, Order::First).unwrap();
        for a in 0..2 { for b in 0..2 { for c in 0..2 {
            prop_assert!((pf.q[[a, b, c]] - w.grad[a] * pf.g[(b, c)]).abs() <= 1e-15);
        }}}
        let closed = weyl_disformation(&pf.g, &pf.ginv, &w.grad);
        let cp = connection_at(&spec, &x).unwrap();
        prop_assert!(cp.disformation.max_abs_diff(&closed) <= 1e-14);
        // H = e^{−(ω−ω(p₀))} g
        let st = h_at(&spec, &x).unwrap();
        let w0 = spec.weyl_potential().unwrap().value_at(&[0.0, 0.0]).unwrap();
        prop_assert!(max_abs(&(st.h - pf.g * (-(w.value - w0)).exp())) <= 1e-8);
    }

    #[test]
    fn solved_h_is_compatible(x in point2()) {
        let spec = curved();
        let st = h_at(&spec, &x).unwrap();
        prop_assert!(max_abs(&(&st.h - st.h.transpose())) == 0.0);
        let cp = connection_at(&spec, &x).unwrap();
        prop_assert!(covariant_derivative_of_form(&cp.gamma, &st.h, &st.dh).max_abs() <= 1e-9);
        let gamma_h = christoffel_from_metric(&st.h_inverse().unwrap(), &st.dh);
        prop_assert!(gamma_h.max_abs_diff(&cp.gamma) <= 1e-8);
        prop_assert!(h_at(&spec, &x).unwrap().h == st.h);
    }

    #[test]
    fn transport_there_and_back(x in point2(), y in point2()) {
        let spec = curved();
        let h0 = spec.h0().clone();
        let there = transport_h(&spec, &Path::Segment { from: x.clone(), to: y.clone() }, &h0, Stepper::rk4(400), DEFAULT_DEGENERACY_THRESHOLD).unwrap();
        let back = transport_h(&spec, &Path::Segment { from: y, to: x }, &there.h, Stepper::rk4(400), DEFAULT_DEGENERACY_THRESHOLD).unwrap();
        prop_assert!(max_abs(&(back.h - h0)) <= 1e-10);
    }

    #[test]
    fn prop32_is_the_weyl_autoparallel_force(omega in weyl_potential(), x in point2(), v in velocity2()) {
        let spec = weyl_spec(&omega, "2 - x0");
        let r = reference_force(ReferenceKind::Prop32, &spec, None, None, &x, &v).unwrap();
        let f = autoparallel_force(&spec, &x, &v).unwrap().f;
        for a in 0..2 {
            prop_assert!((r[a] - f[a]).abs() <= 1e-14 * (1.0 + f[a].abs()));
        }
    }

    #[test]
    fn helmholtz_forms_agree_for_solved_h(omega in weyl_potential(), x in point2(), v in velocity2()) {
        let spec = weyl_spec(&omega, "1 + x0^2");
        let r = helmholtz_residuals(&spec, &x, &v, HSource::Solved).unwrap();
        prop_assert!((r.h2_generic - r.h2_connection).abs() <= 1e-10);
        prop_assert!((r.h3_generic - r.h3_simplified).abs() <= 1e-8);
        prop_assert!(r.pass, "{r:?}");
    }

    #[test]
    fn helmholtz_residuals_are_homogeneous(x in point2(), v in velocity2(), c in 0.1f64..10.0) {
        let spec = curved();
        let h = spec.metric_value(&x).unwrap();
        let base = helmholtz_residuals(&spec, &x, &v, HSource::Explicit(&ConstantMultiplier(h.clone()))).unwrap();
        let scaled = helmholtz_residuals(&spec, &x, &v, HSource::Explicit(&ConstantMultiplier(h * c))).unwrap();
        for (a, b) in [
            (base.h1, scaled.h1),
            (base.h2_generic, scaled.h2_generic),
            (base.h2_connection, scaled.h2_connection),
            (base.h3_generic, scaled.h3_generic),
            (base.h3_simplified, scaled.h3_simplified),
        ] {
            prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + c * a));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn action_is_reparametrization_invariant(omega in weyl_potential(), v in velocity2(), k in 0.1f64..0.9) {
        let spec = weyl_spec(&omega, "1 + x0^2");
        let traj = integrate_curve(&spec, CurveKind::Autoparallel, &[0.0, 0.0], &v, (0.0, 0.5), Stepper::rk4(400)).unwrap();
        // λ ↦ λ + k λ², strictly increasing on [0, 0.5]
        let re = traj.reparametrized(|l| (l + k * l * l, 1.0 + 2.0 * k * l)).unwrap();
        let (a, b) = (action_value(&spec, &traj).unwrap(), action_value(&spec, &re).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * a.abs());
    }

    #[test]
    fn riemannian_autoparallels_are_geodesics(x0 in point2(), v in velocity2()) {
        let spec = GeometrySpec::from_json_str(
            r#"{"dim":2,"coords":["u","w"],"metric":{"0,0":"1 + 0.2*u^2","1,1":"2 + sin(w)"},"base_point":[0,0]}"#,
        ).unwrap();
        let a = integrate_curve(&spec, CurveKind::Autoparallel, &x0, &v, (0.0, 1.0), Stepper::rk4(200)).unwrap();
        let g = integrate_curve(&spec, CurveKind::Geodesic, &x0, &v, (0.0, 1.0), Stepper::rk4(200)).unwrap();
        for (p, q) in a.samples.iter().zip(&g.samples) {
            prop_assert!(p.x.iter().zip(&q.x).all(|(s, t)| (s - t).abs() <= 1e-12));
        }
    }
}

#[test]
fn reconstruct_dh_solves_compatibility_for_arbitrary_h() {
    let cp = connection_at(&curved(), &[0.3, -0.2]).unwrap();
    let h = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, -1.0]);
    let dh = reconstruct_dh(&cp.gamma, &h);
    assert!(covariant_derivative_of_form(&cp.gamma, &h, &dh).max_abs() <= 1e-15);
}

#[test]
fn constant_multiplier_is_a_field() {
    let m = ConstantMultiplier(Matrix::identity(2, 2));
    let (h, dh) = m.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert_eq!(h, Matrix::identity(2, 2));
    assert_eq!(dh.max_abs(), 0.0);
}
