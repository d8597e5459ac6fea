mod common;

use common::*;
use membrane_core::operators::apex_bc_for;
use membrane_core::spectrum::{count_below, sign_changes, spectrum_entries, weighted_inner};
use membrane_core::*;

fn p_dirichlet(c: &ProfileCurve, m: u32) -> DiscreteOperator {
    assemble(c, OperatorKind::P, m, apex_bc_for(m), OuterBc::Dirichlet).unwrap()
}

fn disc_mu(m: u32, k: usize) -> f64 {
    (bessel_zero(m, k) / 0.3).powi(2)
}

#[test]
fn bessel_oracle_is_consistent() {
    assert!((j01() - bessel_zero(0, 1)).abs() < 1e-12);
    assert!(bessel_j0(j01()).abs() < 1e-14);
}

#[test]
fn plane_disc_first_eigenvalues() {
    let mu = (j01() / 0.3).powi(2);
    let c = plane_disc(1024);
    let op = p_dirichlet(&c, 0);
    let inv = solve_dirichlet_spectrum(&op, WeightKind::InvZSq, 1).unwrap();
    let zsq = solve_dirichlet_spectrum(&op, WeightKind::ZSq, 1).unwrap();
    let want_inv = 2.0 + mu / 4.0;
    let want_zsq = 4.0 * (mu + 8.0);
    assert!((inv[0].lambda / want_inv - 1.0).abs() < 1e-4);
    assert!((zsq[0].lambda / want_zsq - 1.0).abs() < 1e-4);
}

#[test]
fn plane_disc_higher_modes() {
    let c = plane_disc(1024);
    for m in 0..3u32 {
        let op = p_dirichlet(&c, m);
        let pairs = solve_dirichlet_spectrum(&op, WeightKind::InvZSq, 3).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            let want = 2.0 + disc_mu(m, k + 1) / 4.0;
            assert!((p.lambda / want - 1.0).abs() < 1e-3, "m={m} k={k} {} {want}", p.lambda);
        }
    }
}

#[test]
fn plane_disc_weights_are_affinely_related() {
    let c = plane_disc(512);
    let op = p_dirichlet(&c, 0);
    let inv = solve_dirichlet_spectrum(&op, WeightKind::InvZSq, 4).unwrap();
    let zsq = solve_dirichlet_spectrum(&op, WeightKind::ZSq, 4).unwrap();
    for (a, b) in inv.iter().zip(&zsq) {
        // z² = 1/4 is constant: λ_ZSq = 16 λ_InvZSq
        assert!((b.lambda - 16.0 * a.lambda).abs() < 1e-9 * b.lambda, "{} {}", a.lambda, b.lambda);
    }
}

#[test]
fn eigenvalue_converges_at_second_order() {
    let mu = (j01() / 0.3).powi(2);
    let raw = trace(2.0, -0.5, StopKind::SigmaMax, 0.3);
    let e: Vec<f64> = [128, 256, 512]
        .iter()
        .map(|&n| {
            let c = resample(&raw, n).unwrap();
            let l = solve_dirichlet_spectrum(&p_dirichlet(&c, 0), WeightKind::InvZSq, 1).unwrap()[0].lambda;
            (l - (2.0 + mu / 4.0)).abs()
        })
        .collect();
    let ord = membrane_core::operators::fitted_order(&[128, 256, 512], &e);
    assert!((ord - 2.0).abs() < 0.1, "{e:?}");
}

#[test]
fn sturm_oscillation() {
    for c in [fig1(512), sigma0(-0.7, 512), plane_disc(512)] {
        for m in 0..2 {
            for w in [WeightKind::InvZSq, WeightKind::ZSq] {
                let pairs = solve_dirichlet_spectrum(&p_dirichlet(&c, m), w, 5).unwrap();
                for (k, p) in pairs.iter().enumerate() {
                    assert_eq!(p.sign_changes, k, "m={m} {w:?}");
                    assert_eq!(sign_changes(&p.f), k);
                }
                assert!(pairs.windows(2).all(|w| w[0].lambda < w[1].lambda));
            }
        }
    }
}

#[test]
fn pairs_are_orthonormal_and_accurate() {
    let c = sigma0(-0.9, 512);
    let op = p_dirichlet(&c, 0);
    let pairs = solve_dirichlet_spectrum(&op, WeightKind::ZSq, 4).unwrap();
    for (i, a) in pairs.iter().enumerate() {
        assert!(a.residual < 1e-10, "{}", a.residual);
        let rq = rayleigh_quotient(&op, &a.f, WeightKind::ZSq).unwrap();
        assert!((rq - a.lambda).abs() < 1e-10 * a.lambda.abs().max(1.0));
        for (j, b) in pairs.iter().enumerate() {
            let ip = weighted_inner(&op, WeightKind::ZSq, &a.f, &b.f);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-9, "{i} {j} {ip}");
        }
    }
    assert_eq!(count_below(&op, WeightKind::ZSq, pairs[2].lambda - 1e-9).unwrap(), 2);
}

#[test]
fn lambda_two_with_nu3_on_figure_one() {
    let c = fig1(1024);
    let op = p_dirichlet(&c, 0);
    let below = count_below(&op, WeightKind::InvZSq, 2.0 - 1e-3).unwrap();
    let pairs = solve_dirichlet_spectrum(&op, WeightKind::InvZSq, below + 1).unwrap();
    let p = &pairs[below];
    assert!((p.lambda - 2.0).abs() < 1e-4, "{}", p.lambda);
    let nu3 = geometric_fields(&c).nu3;
    let (sf, sn) = (max_abs(&p.f), max_abs(&nu3));
    let sign = (p.f[0] * nu3[0]).signum();
    let diff = p
        .f
        .iter()
        .zip(&nu3)
        .map(|(a, b)| (a / sf - sign * b / sn).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-4, "{diff:e}");
}

#[test]
fn fp_relation_converges() {
    let raw = trace(2.0, -0.5, StopKind::SigmaMax, 0.3);
    let ns = [256, 512, 1024];
    let errs: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| {
            let c = resample(&raw, n).unwrap();
            let pairs = solve_dirichlet_spectrum(&p_dirichlet(&c, 0), WeightKind::InvZSq, 3).unwrap();
            let f = assemble_f(&c, 0).unwrap();
            pairs.iter().map(|p| fp_consistency(&f, p, &c).unwrap()).collect()
        })
        .collect();
    for k in 0..3 {
        let e: Vec<f64> = errs.iter().map(|v| v[k]).collect();
        assert!(order(e[1], e[2]) > 1.8, "pair {k}: {e:?}");
    }
}

#[test]
fn spectrum_errors() {
    let c = fig1(128);
    let free = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free).unwrap();
    assert!(solve_dirichlet_spectrum(&free, WeightKind::ZSq, 1).is_err());
    let f = assemble_f(&c, 0).unwrap();
    assert!(solve_dirichlet_spectrum(&f, WeightKind::ZSq, 1).is_err());
    let op = p_dirichlet(&c, 0);
    assert!(solve_dirichlet_spectrum(&op, WeightKind::ZSq, 0).is_err());
    assert!(solve_dirichlet_spectrum(&op, WeightKind::ZSq, 10_000).is_err());
    let pairs = solve_dirichlet_spectrum(&op, WeightKind::ZSq, 2).unwrap();
    let entries = spectrum_entries(0, WeightKind::ZSq, &pairs);
    let json = serde_json::to_value(&entries).unwrap();
    assert_eq!(json[0]["weight"], "zsq");
    assert_eq!(json[1]["sign_changes"], 1);
}
