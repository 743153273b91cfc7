use std::collections::BTreeMap;

use proptest::prelude::*;

use warpmass::fieldexpr::{check_grad_fd, ScalarField};
use warpmass::geometry::{curvature, MetricField, MetricJet, MetricSource};
use warpmass::hypersurface::{graph_jet, GraphSpec};
use warpmass::massint::{extrapolate, penrose_check, LadderConfig, SphereRule};
use warpmass::models::{BaseModel, BoundaryModel, GraphModel, ModelSpec, WarpModel};
use warpmass::ambient::WarpedAmbient;

fn field(src: &str, n: usize) -> ScalarField {
    ScalarField::parse(src, n, &BTreeMap::new()).unwrap()
}

/// Smooth expressions in `x1, x2, x3` that are defined everywhere.
fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0.1f64..3.0).prop_map(|c| format!("{c}")),
        (1usize..=3).prop_map(|i| format!("x{i}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1 + ({b})^2))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            inner.clone().prop_map(|a| format!("exp(-({a})^2)")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_reparse_to_the_same_jet(src in expression(), x in point3()) {
        let a = field(&src, 3);
        let b = field(&a.describe(), 3);
        let (ja, jb) = (a.eval_jet2(&x).unwrap(), b.eval_jet2(&x).unwrap());
        prop_assert_eq!(ja.value(), jb.value());
        prop_assert_eq!(ja.grad(), jb.grad());
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(ja.hess(i, j), jb.hess(i, j));
            }
        }
    }

    #[test]
    fn forward_derivatives_match_central_differences(src in expression(), x in point3()) {
        let f = field(&src, 3);
        let coarse = check_grad_fd(&f, &x, 1e-3).unwrap();
        let fine = check_grad_fd(&f, &x, 5e-4).unwrap();
        // O(h²) truncation: halving the step cannot make things much worse,
        // and the residual is small at these steps.
        prop_assert!(coarse.gradient < 1e-3 && coarse.hessian < 1e-3, "{coarse:?}");
        prop_assert!(fine.gradient <= 0.3 * coarse.gradient + 1e-9, "{coarse:?} {fine:?}");
        prop_assert!(fine.hessian <= 0.3 * coarse.hessian + 1e-9, "{coarse:?} {fine:?}");
    }
}

/// A random metric jet: SPD value, and first and second derivatives with
/// the symmetries of `∂_k g_ij` and `∂_k∂_l g_ij`.
fn metric_jet(n: usize) -> impl Strategy<Value = MetricJet> {
    let count = n * n + n * n * n + n * n * n * n;
    prop::collection::vec(-0.5f64..0.5, count).prop_map(move |v| {
        let point = vec![0.0; n];
        let mut jet = MetricJet::zeros(n, &point);
        let mut it = v.into_iter();
        let a: Vec<f64> = (0..n * n).map(|_| it.next().unwrap()).collect();
        for i in 0..n {
            for j in 0..n {
                // AᵀA + I is SPD.
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    s += a[k * n + i] * a[k * n + j];
                }
                jet.set_g(i, j, s);
            }
        }
        let d: Vec<f64> = (0..n * n * n).map(|_| it.next().unwrap()).collect();
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    jet.set_dg(i, j, k, d[(k * n + i) * n + j]);
                }
            }
        }
        let e: Vec<f64> = (0..n * n * n * n).map(|_| it.next().unwrap()).collect();
        for k in 0..n {
            for l in k..n {
                for i in 0..n {
                    for j in i..n {
                        jet.set_d2g(i, j, k, l, e[((k * n + l) * n + i) * n + j]);
                    }
                }
            }
        }
        jet
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn riemann_tensor_symmetries(jet in (3usize..=5).prop_flat_map(metric_jet)) {
        let n = jet.dim();
        let curv = curvature(&jet).unwrap();
        let low = curv.riemann_lowered(&jet);
        let at = |i: usize, j: usize, k: usize, l: usize| low[((i * n + j) * n + k) * n + l];
        let scale = low.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let bianchi = at(i, j, k, l) + at(j, k, i, l) + at(k, i, j, l);
                        prop_assert!(bianchi.abs() <= 1e-10 * scale);
                        prop_assert!((at(i, j, k, l) + at(j, i, k, l)).abs() <= 1e-10 * scale);
                        prop_assert!((at(i, j, k, l) - at(k, l, i, j)).abs() <= 1e-10 * scale);
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                prop_assert!((curv.ricci(i, j) - curv.ricci(j, i)).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn linear_charts_of_flat_space_are_flat(a in prop::collection::vec(-0.6f64..0.6, 9), x in point3()) {
        // h = (I + A)ᵀ(I + A) written as constant coefficient expressions.
        let m: Vec<f64> = (0..9).map(|k| a[k] + if k % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let mut rows = Vec::new();
        for i in 0..3 {
            for j in i..3 {
                let v: f64 = (0..3).map(|k| m[k * 3 + i] * m[k * 3 + j]).sum();
                rows.push(field(&format!("{v} + 0*x1"), 3));
            }
        }
        prop_assume!((m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])).abs() > 0.1);
        let metric = MetricField::from_upper_triangle(3, rows, 1.0).unwrap();
        let curv = curvature(&metric.jet(&x).unwrap()).unwrap();
        prop_assert!(curv.riemann.iter().all(|v| v.abs() < 1e-14));
        prop_assert_eq!(curv.scalar, 0.0);
    }
}

fn swap12(src: &str) -> String {
    src.replace("x1", "#").replace("x2", "x1").replace('#', "x2")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Relabelling `x1 ↔ x2` in every input and in the point leaves all
    /// scalar graph quantities unchanged.
    #[test]
    fn scalar_quantities_ignore_coordinate_order(
        f in expression(),
        c in -0.3f64..0.3,
        x in prop::collection::vec(1.0f64..2.0, 3),
    ) {
        let phi = format!("1 + 0.3/(1 + x1^2 + x2^2 + x3^2) + {c}*x1/(2 + x1^2 + x2^2 + x3^2)");
        let h = [
            format!("1 + {c}*x1^2/(1 + x1^2 + x2^2 + x3^2)"),
            format!("{c}*x1*x2/(3 + x1^2 + x2^2 + x3^2)"),
            "0*x1".to_string(),
            format!("1 + 0.1*x2/(2 + x1^2 + x2^2 + x3^2)"),
            "0*x1".to_string(),
            "1 + 0*x1".to_string(),
        ];
        let build = |perm: bool| -> GraphSpec {
            let t = |s: &str| if perm { swap12(s) } else { s.to_string() };
            // Swapping the labels also swaps h_11 ↔ h_22 and h_13 ↔ h_23.
            let entries = if perm {
                vec![t(&h[3]), t(&h[1]), t(&h[4]), t(&h[0]), t(&h[2]), t(&h[5])]
            } else {
                h.to_vec()
            };
            let rows = entries.iter().map(|e| field(e, 3)).collect();
            let base = MetricField::from_upper_triangle(3, rows, 1.0).unwrap();
            let amb = WarpedAmbient::new(base, field(&t(&phi), 3)).unwrap();
            GraphSpec::new(amb, field(&t(&f), 3), 1.0).unwrap()
        };
        let a = graph_jet(&build(false), &x).unwrap();
        let y = vec![x[1], x[0], x[2]];
        let b = graph_jet(&build(true), &y).unwrap();
        for (u, v) in [(a.w, b.w), (a.s1, b.s1), (a.s2, b.s2), (a.theta, b.theta), (a.r_g, b.r_g)] {
            prop_assert!((u - v).abs() <= 1e-11 * u.abs().max(1.0), "{u} vs {v}");
        }
    }
}

/// `∫_{S^{n−1}} Π x_i^{a_i} = 2 Π Γ(b_i) / Γ(Σ b_i)`, `b_i = (a_i + 1)/2`,
/// for even exponents.
fn monomial_sphere_integral(exponents: &[usize]) -> f64 {
    fn gamma_half(twice: usize) -> f64 {
        // Γ(twice/2) by Γ(x + 1) = xΓ(x) from Γ(1/2) and Γ(1).
        if twice == 1 {
            std::f64::consts::PI.sqrt()
        } else if twice == 2 {
            1.0
        } else {
            (twice as f64 / 2.0 - 1.0) * gamma_half(twice - 2)
        }
    }
    let num: f64 = exponents.iter().map(|a| gamma_half(a + 1)).product();
    let total: usize = exponents.iter().map(|a| a + 1).sum();
    2.0 * num / gamma_half(total)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sphere_rules_integrate_monomials(
        n in 2usize..=5,
        half in prop::collection::vec(0usize..=4, 5),
        radius in 0.5f64..3.0,
    ) {
        let exps: Vec<usize> = half[..n].iter().map(|h| 2 * h).collect();
        let degree: usize = exps.iter().sum();
        prop_assume!(degree < 24);
        let rule = SphereRule::new(n, radius, 12).unwrap();
        let value = rule
            .integrate(|x| Ok(x.iter().zip(&exps).map(|(v, e)| (v / radius).powi(*e as i32)).product()))
            .unwrap();
        let exact = monomial_sphere_integral(&exps) * radius.powi(n as i32 - 1);
        prop_assert!((value - exact).abs() <= 1e-11 * exact, "{exps:?}: {value} vs {exact}");
    }

    /// An odd exponent anywhere integrates to zero.
    #[test]
    fn odd_monomials_vanish(n in 3usize..=5, which in 0usize..3, e in 0usize..4) {
        let rule = SphereRule::new(n, 1.3, 10).unwrap();
        let value = rule
            .integrate(|x| Ok(x[which].powi(2 * e as i32 + 1) * x[(which + 1) % n].powi(2)))
            .unwrap();
        prop_assert!(value.abs() < 1e-13);
    }

    #[test]
    fn doubling_the_order_does_not_change_a_smooth_integral(n in 3usize..=4, k in 0.2f64..1.0) {
        let f = |x: &[f64]| Ok((k * x[0]).exp() * (1.0 + x[1] * x[1]).recip());
        let a = SphereRule::new(n, 1.0, 12).unwrap().integrate(f).unwrap();
        let b = SphereRule::new(n, 1.0, 24).unwrap().integrate(f).unwrap();
        prop_assert!((a - b).abs() < 1e-6 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn exact_power_laws_are_recovered(m in -3.0f64..3.0, c in 0.5f64..5.0, p in 0.5f64..4.0) {
        let radii = [16.0_f64, 32.0, 64.0, 128.0, 256.0];
        let values: Vec<f64> = radii.iter().map(|r| m + c * r.powf(-p)).collect();
        let fit = extrapolate(&radii, &values, 6.0).unwrap();
        prop_assert!((fit.limit - m).abs() <= 1e-6 * (1.0 + c), "{fit:?}");
        prop_assert!((fit.rate.unwrap() - p).abs() <= 1e-3, "{fit:?}");
        prop_assert!(fit.error >= (fit.limit - m).abs() - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn penrose_equality_on_flamm_graphs(m in 0.5f64..2.0) {
        let spec = ModelSpec {
            dim: 3,
            base: BaseModel::Flat,
            warp: WarpModel::Product,
            graph: GraphModel::Flamm { mass: m },
            boundary: BoundaryModel::Horizon { radius: None },
            tau: None,
            params: BTreeMap::new(),
        }
        .build()
        .unwrap();
        let report = penrose_check(&spec, 2.0 * m, &LadderConfig::for_dim(3)).unwrap();
        prop_assert!(report.margin.abs() <= 0.01 * m, "{report:?}");
    }
}
