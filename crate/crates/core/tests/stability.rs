mod common;

use std::f64::consts::PI;

use common::*;
use membrane_core::stability::*;
use membrane_core::*;

const HEIGHTS: [f64; 4] = [-0.55, -0.7, -0.9, -1.2];

fn superdomain(z_hat: f64, n: usize) -> ProfileCurve {
    let l = trace(2.0, z_hat, StopKind::PhiReachesMinusPi, 20.0).sigma_end();
    grid(2.0, z_hat, StopKind::SigmaMax, 1.1 * l, n)
}

fn fig1_params(alpha: f64, beta: f64) -> ModelParams {
    ModelParams::new(2.0, 1.0, 0.0, alpha, beta).unwrap()
}

#[test]
fn sigma_zero_family_is_stable() {
    for zh in HEIGHTS {
        let coarse = thmbif_verdict(&sigma0(zh, 512)).unwrap();
        let fine = thmbif_verdict(&sigma0(zh, 1024)).unwrap();
        assert!(fine.lambda1 < 0.0);
        assert!(fine.lambda2 >= -fine.zero_band, "{zh}: {}", fine.lambda2);
        assert!(fine.modes[0].lambda[1] > 0.0);
        assert!(fine.h_integral.unwrap() < 0.0);
        assert_eq!(fine.verdict, Verdict::Stable, "{zh}");
        let (e0, e1) = (
            coarse.h_closed_form_error.unwrap(),
            fine.h_closed_form_error.unwrap(),
        );
        assert!((order(e0, e1) - 2.0).abs() < 0.2, "{zh}: {e0:e} {e1:e}");
        assert!(fine.h_residual.unwrap() < 1e-8);
        // ψ(ℓ) ≠ 0
        assert!(fine.psi_boundary.unwrap().abs() > 0.5);
    }
}

#[test]
fn superdomains_are_unstable() {
    for zh in HEIGHTS {
        let r = thmbif_verdict(&superdomain(zh, 1024)).unwrap();
        assert!(r.verdict.is_unstable(), "{zh}: {:?}", r.verdict);
    }
}

#[test]
fn translation_mode_marks_the_boundary_of_sigma_zero() {
    // the mode-1 eigenvalue is O(Δσ²) on Σ₀ and negative past it
    let raw = trace(2.0, -0.7, StopKind::PhiReachesMinusPi, 20.0);
    let l1 = |n| thmbif_verdict(&resample(&raw, n).unwrap()).unwrap().modes[1].lambda[0];
    let (a, b) = (l1(256), l1(512));
    assert!(order(a.abs(), b.abs()) > 1.8, "{a:e} {b:e}");
    let sup = thmbif_verdict(&superdomain(-0.7, 512)).unwrap();
    assert!(sup.modes[1].lambda[0] < -0.1);
}

#[test]
fn nested_subdomains_keep_stability() {
    let l = trace(2.0, -0.9, StopKind::PhiReachesMinusPi, 20.0).sigma_end();
    for frac in [0.5, 0.75, 0.9] {
        let c = grid(2.0, -0.9, StopKind::SigmaMax, frac * l, 512);
        let r = thmbif_verdict(&c).unwrap();
        assert!(r.verdict.is_stable(), "{frac}: {:?}", r.verdict);
    }
}

#[test]
fn plane_disc_is_unconstrained_stable() {
    let r = thmbif_verdict(&plane_disc(512)).unwrap();
    assert!(r.lambda1 > 2.0 * 4.0);
    assert_eq!(r.verdict, Verdict::StableUnconstrained);
}

#[test]
fn plane_disc_h_and_psi_match_bessel_oracle() {
    // P = Δ - 8 on the disc: h = (1 - I₀(√8 r)/I₀(√8 R))/4
    let c = plane_disc(1024);
    let op = p_operator(&c, 0).unwrap();
    let h = solve_h(&op).unwrap();
    let k = 8f64.sqrt();
    let i_r = bessel_i0(k * 0.3);
    let err = c
        .r()
        .iter()
        .zip(&h.h)
        .map(|(r, h)| (h - 0.25 * (1.0 - bessel_i0(k * r) / i_r)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-7, "{err:e}");

    let psi = shoot_psi(&c).unwrap();
    for (r, p) in c.r().iter().zip(&psi.psi) {
        assert!((p - bessel_i0(k * r)).abs() < 1e-10);
    }
    assert!(psi.dn_psi_end > 0.0);
}

#[test]
fn closed_form_h_solves_the_equation() {
    let raw = trace(2.0, -0.7, StopKind::PhiReachesMinusPi, 20.0);
    let res: Vec<f64> = [256, 512]
        .iter()
        .map(|&n| {
            let c = resample(&raw, n).unwrap();
            let h = closed_form_h(&c, &shoot_psi(&c).unwrap()).unwrap();
            assert!(h[n].abs() < 1e-12);
            let op = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free).unwrap();
            let ph = op.apply(&h).unwrap();
            max_abs(&ph[..n].iter().map(|v| v + 2.0).collect::<Vec<_>>())
        })
        .collect();
    assert!((order(res[0], res[1]) - 2.0).abs() < 0.2, "{res:?}");
}

#[test]
fn psi_matches_discrete_null_vector_on_sphere() {
    let c = grid(0.0, 1.0, StopKind::SigmaMax, 1.2, 1024);
    let psi = shoot_psi(&c).unwrap();
    let a = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free)
        .unwrap()
        .full_matrix();
    // rows 0..n-1 of the discrete operator determine f from f(0) = 1
    let n = c.len() - 1;
    let mut f = vec![0.0; n + 1];
    f[0] = 1.0;
    f[1] = -a.get(0, 0) / a.get(0, 1);
    for i in 1..n {
        f[i + 1] = -(a.get(i, i - 1) * f[i - 1] + a.get(i, i) * f[i]) / a.get(i, i + 1);
    }
    let err = f.iter().zip(&psi.psi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5, "{err:e}");
}

#[test]
fn proof_algebra_holds_discretely() {
    let c = sigma0(-0.9, 512);
    let op = p_operator(&c, 0).unwrap();
    let f1 = &solve_dirichlet_spectrum(&op, WeightKind::ZSq, 1).unwrap()[0];
    let h = solve_h(&op).unwrap().h;
    let z = c.z();
    let ph = op.apply(&h).unwrap();
    let pf = op.apply(&f1.f).unwrap();
    let n = c.len() - 1;
    let lhs: Vec<f64> = (0..=n).map(|i| f1.f[i] * ph[i] / (z[i] * z[i])).collect();
    let rhs: Vec<f64> = (0..=n).map(|i| h[i] * pf[i] / (z[i] * z[i])).collect();
    let (a, b) = (surface_integral(&c, &lhs, 0).unwrap(), surface_integral(&c, &rhs, 0).unwrap());
    assert!((a - b).abs() < 1e-4 * a.abs(), "{a} {b}");

    let c1 = constraint_integral(&c, &f1.f).unwrap();
    assert!(c1.abs() > 1e-3);
    let hint = constraint_integral(&c, &h).unwrap();
    let mu = -hint / c1;
    let g: Vec<f64> = (0..=n).map(|i| mu * f1.f[i] + h[i]).collect();
    let pg = op.apply(&g).unwrap();
    for i in op.unknowns() {
        let want = -mu * f1.lambda * z[i] * z[i] * f1.f[i] - 2.0;
        assert!((pg[i] - want).abs() < 1e-9 * want.abs().max(1.0), "{i}");
    }
}

#[test]
fn second_variation_of_g_on_eigenfunction() {
    let c = sigma0(-0.7, 1024);
    let op = p_operator(&c, 0).unwrap();
    let f1 = &solve_dirichlet_spectrum(&op, WeightKind::ZSq, 1).unwrap()[0];
    let q = second_variation_g(&op, &f1.f).unwrap();
    let f2: Vec<f64> = f1.f.iter().map(|v| v * v).collect();
    let want = f1.lambda * surface_integral(&c, &f2, 0).unwrap();
    assert!((q - want).abs() < 1e-5 * want.abs(), "{q} {want}");
}

#[test]
fn constrained_test_function_when_criterion_fails() {
    // h-integral is positive on this superdomain
    let c = superdomain(-0.55, 1024);
    let r = thmbif_verdict(&c).unwrap();
    let hint = r.h_integral.unwrap();
    assert!(hint > 0.0);
    let op = p_operator(&c, 0).unwrap();
    let f1 = &solve_dirichlet_spectrum(&op, WeightKind::ZSq, 1).unwrap()[0];
    let mu = -hint / constraint_integral(&c, &f1.f).unwrap();
    let h = solve_h(&op).unwrap().h;
    let g: Vec<f64> = f1.f.iter().zip(&h).map(|(a, b)| mu * a + b).collect();
    assert!(constraint_integral(&c, &g).unwrap().abs() < 1e-8 * hint);
    let q = second_variation_g(&op, &g).unwrap();
    let f2: Vec<f64> = f1.f.iter().map(|v| v * v).collect();
    let want = mu * mu * f1.lambda * surface_integral(&c, &f2, 0).unwrap() - 2.0 * hint;
    assert!(q < 0.0);
    assert!((q - want).abs() < 1e-3 * want.abs(), "{q} {want}");
    let sample = r.quadratic_form_samples.iter().find(|s| s.id == "mu_f1_plus_h").unwrap();
    assert!((sample.second_variation_g - q).abs() < 1e-9 * q.abs());
}

#[test]
fn flat_disc_quadratic_forms() {
    // f = (R² - r²)², z² = 1/4, P = Δ - 8
    let c = plane_disc(1024);
    let op = p_operator(&c, 0).unwrap();
    let rr = 0.09;
    let f: Vec<f64> = c.r().iter().map(|r| (rr - r * r).powi(2)).collect();
    let fine = 200_000;
    let quad = |g: &dyn Fn(f64) -> f64| {
        let h = 0.3 / fine as f64;
        (0..fine)
            .map(|i| {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                0.5 * h * (g(a) * a + g(b) * b)
            })
            .sum::<f64>()
            * 2.0
            * PI
    };
    let df = |r: f64| -4.0 * r * (rr - r * r);
    let fv = |r: f64| (rr - r * r).powi(2);
    let lap = |r: f64| 16.0 * r * r - 8.0 * rr;
    let g_want = 4.0 * quad(&|r| df(r).powi(2) + 8.0 * fv(r).powi(2));
    let g_got = second_variation_g(&op, &f).unwrap();
    assert!((g_got / g_want - 1.0).abs() < 1e-5, "{g_got} {g_want}");

    let h_want = 0.5 * quad(&|r| (lap(r) - 8.0 * fv(r)) * lap(r));
    let h_got = second_variation_h(&op, &c, &f).unwrap();
    assert!(h_got.boundary.abs() < 1e-14);
    assert!((h_got.total / h_want - 1.0).abs() < 1e-5, "{} {h_want}", h_got.total);
}

#[test]
fn second_variation_on_inv_zsq_eigenfunction() {
    let c = plane_disc(1024);
    let op = p_operator(&c, 0).unwrap();
    for p in solve_dirichlet_spectrum(&op, WeightKind::InvZSq, 2).unwrap() {
        let q = second_variation_h(&op, &c, &p.f).unwrap();
        let w: Vec<f64> = p.f.iter().zip(c.z()).map(|(f, z)| f * f / z.powi(4)).collect();
        let want = 0.5 * p.lambda * (p.lambda - 2.0) * surface_integral(&c, &w, 0).unwrap();
        assert!((q.area / want - 1.0).abs() < 1e-3, "{} {want}", q.area);
        assert!(q.total > 0.0);
    }
}

#[test]
fn corollary_one_on_figure_one() {
    let p = fig1_params(1.0, 1.0);
    let raw = trace(2.0, 3.0, StopKind::RPrimeZero, 20.0);
    let mut rel = Vec::new();
    for n in [512, 1024] {
        let c = resample(&raw, n).unwrap();
        let nu3 = geometric_fields(&c).nu3;
        let op = p_operator(&c, 0).unwrap();
        let e = second_variation_e(&op, &c, &nu3, &p).unwrap();
        let b = nu3_boundary_expression(&c, &p);
        assert!(e.total < 0.0 && b < 0.0);
        // (P + 2/z²)[ν₃] = 0 kills the area term
        assert!(e.area.abs() < 1e-5 * b.abs());
        let h = second_variation_h(&op, &c, &nu3).unwrap();
        assert!((h.total - e.total).abs() < 1e-12 * b.abs());
        rel.push((e.total - b).abs() / b.abs());
    }
    assert!(rel[1] < 1e-3);
    assert!(order(rel[0], rel[1]) > 1.8, "{rel:?}");
}

#[test]
fn geodesic_boundary_removes_the_b_term() {
    let c = fig1(512);
    let nu3 = geometric_fields(&c).nu3;
    let op = p_operator(&c, 0).unwrap();
    let e0 = second_variation_e(&op, &c, &nu3, &fig1_params(1.0, 1.0)).unwrap();
    let e1 = second_variation_e(&op, &c, &nu3, &ModelParams::new(2.0, 1.0, 0.7, 1.0, 1.0).unwrap()).unwrap();
    assert!((e0.total - e1.total).abs() < 1e-9 * e0.total.abs());
}

#[test]
fn corollaries_on_figure_one() {
    let c = fig1(1024);
    let f = geometric_fields(&c);
    let el = el_residuals_and_alpha_beta(&c, &f, &fig1_params(1.0, 1.0)).unwrap();
    for &(alpha, beta) in &el.samples {
        assert!(alpha > 0.0 && beta > 0.0);
        let rep = corollary_checks(&c, &f, &fig1_params(alpha, beta)).unwrap();
        assert_eq!(rep.cor_verdict, Verdict::Unstable, "{:?}", rep.cor_reason);
        assert!((rep.dn_z + 1.0).abs() < 1e-12 && rep.z_o > 0.0 && rep.dn_nu3 != 0.0);
        // on the critical line α/r_o² - β = C < 0 while K > 0 at the rim
        assert!(rep.boundary_gauss > 0.0);
        assert!((rep.cor2_sign - el.admissible_c * rep.boundary_gauss).abs() < 1e-9);
        assert_eq!(rep.cor2_verdict, Verdict::Unstable, "{:?}", rep.cor2_reason);
        // the same sign as δ²E[ν₃] = ∮(α/r_o² - β) K ds
        let sv = 2.0 * PI * el.r_o * rep.cor2_sign;
        assert!((sv - rep.boundary_expression).abs() < 1e-3 * sv.abs(), "{sv} {}", rep.boundary_expression);
    }
}

#[test]
fn euler_lagrange_line() {
    let c = fig1(1024);
    let f = geometric_fields(&c);
    let base = el_residuals_and_alpha_beta(&c, &f, &fig1_params(1.0, 1.0)).unwrap();
    let r_o = base.r_o;
    for &(alpha, beta) in &base.samples {
        let on = el_residuals_and_alpha_beta(&c, &f, &fig1_params(alpha, beta)).unwrap();
        assert!(on.max_residual() < 1e-3, "{on:?}");
        let off = el_residuals_and_alpha_beta(&c, &f, &fig1_params(alpha, beta + 0.1)).unwrap();
        assert!((off.el3 - on.el3 - 0.1 / r_o).abs() < 1e-3);
        assert!((off.el2 - on.el2).abs() < 1e-15);
    }
}

#[test]
fn sigma_zero_is_not_helfrich_critical() {
    let c = sigma0(-0.7, 512);
    let f = geometric_fields(&c);
    let el = el_residuals_and_alpha_beta(&c, &f, &ModelParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap()).unwrap();
    let z_l = *c.z().last().unwrap();
    // ν₃(ℓ) = -1
    assert!((el.el2 - 1.0 / z_l).abs() < 1e-6);
    let rep = corollary_checks(&c, &f, &params(2.0)).unwrap();
    assert_eq!(rep.cor_verdict, Verdict::Inapplicable);
    assert!(rep.cor_reason.unwrap().contains("ν₃"));
    assert_eq!(rep.cor2_verdict, Verdict::Inapplicable);
}

#[test]
fn corollary_preconditions() {
    let c = fig1(256);
    let f = geometric_fields(&c);
    let rep = corollary_checks(&c, &f, &ModelParams::new(2.0, 1.0, 0.5, 1.0, 1.0).unwrap()).unwrap();
    assert_eq!(rep.cor_verdict, Verdict::Inapplicable);
    assert!(rep.cor_reason.unwrap().contains("b"));
}

#[test]
fn bound_chain_on_sigma_zero() {
    let c = sigma0(-0.7, 1024);
    let psi = shoot_psi(&c).unwrap();
    assert!(psi.dn_psi_end / psi.psi_end > 0.0);
    let b = bound_chain(&c, &psi).unwrap();
    assert!(b.psi_integral < b.psi_bound);
    assert!(b.q_integral > b.q_bound);
    assert!((b.dn_q / b.dn_q_formula - 1.0).abs() < 1e-3);
    assert!((b.psi_green / b.psi_integral - 1.0).abs() < 1e-4);
    assert!(b.h_integral < b.h_bound && b.h_bound < 0.0);
    let r = thmbif_verdict(&c).unwrap();
    assert!((r.h_integral.unwrap() / b.h_integral - 1.0).abs() < 1e-4);
}

#[test]
fn constraint_integral_of_odd_probe_vanishes() {
    let n = 200;
    let s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let bump = |x: f64| 0.1 * x * (1.0 - x);
    let c = ProfileCurve::from_samples(
        s.clone(),
        s.iter().map(|&x| 1.0 + bump(x)).collect(),
        s.iter().map(|&x| 1.0 + bump(x)).collect(),
        vec![0.0; n + 1],
        params(1.0),
    )
    .unwrap();
    let f: Vec<f64> = s.iter().map(|x| x - 0.5).collect();
    assert!(constraint_integral(&c, &f).unwrap().abs() < 1e-14);
}

#[test]
fn verdict_outside_half_space() {
    let n = 64;
    let s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let c = ProfileCurve::from_samples(
        s.clone(),
        s.clone(),
        s.iter().map(|x| 0.5 - x).collect(),
        vec![-PI / 2.0; n + 1],
        params(1.0),
    )
    .unwrap();
    assert_eq!(thmbif_verdict(&c).unwrap().verdict, Verdict::Inapplicable);
}

#[test]
fn solve_h_preconditions() {
    let c = fig1(128);
    let m1 = p_operator(&c, 1).unwrap();
    assert!(matches!(solve_h(&m1), Err(MembraneError::BoundaryCondition(_))));
    let l = assemble(&c, OperatorKind::L, 0, ApexBc::Regular, OuterBc::Dirichlet).unwrap();
    assert!(solve_h(&l).is_err());
    let free = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free).unwrap();
    assert!(solve_h(&free).is_err());
}

#[test]
fn report_serializes() {
    let r = thmbif_verdict(&sigma0(-0.9, 256)).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["verdict"], "stable");
    assert!(v["bound_chain"]["psi_bound_holds"].as_bool().unwrap());
    assert_eq!(v["quadratic_form_samples"].as_array().unwrap().len(), 3);
}
