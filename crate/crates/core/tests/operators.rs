mod common;

use common::*;
use membrane_core::*;

#[test]
fn identities_converge_at_second_order() {
    let raw = trace(2.0, 3.0, StopKind::RPrimeZero, 20.0);
    let fits = convergence_study(&raw, &[256, 512, 1024], 0).unwrap();
    assert_eq!(fits.len(), 7);
    for fit in &fits {
        assert!((fit.order - 2.0).abs() < 0.2, "{:?}", fit);
        assert!(fit.residuals[2] < 1e-3, "{:?}", fit);
    }
}

#[test]
fn mode_one_identities_converge() {
    let raw = trace(2.0, -0.9, StopKind::PhiReachesMinusPi, 20.0);
    let fits = convergence_study(&raw, &[256, 512, 1024], 1).unwrap();
    for fit in &fits {
        assert!((fit.order - 2.0).abs() < 0.3, "{:?}", fit);
    }
    let ids: Vec<_> = fits.iter().map(|f| f.id).collect();
    assert!(ids.contains(&IdentityId::PNuR) && ids.contains(&IdentityId::FNuR));
}

#[test]
fn sphere_nu3_is_a_jacobi_field() {
    // P[cos σ] = -2 cos σ / z² on the unit sphere, and q ≡ 1 gives P[q] = 0
    let raw = trace(0.0, 1.0, StopKind::SigmaMax, 1.0);
    let e: Vec<f64> = [256, 512]
        .iter()
        .map(|&n| identity_suite(&resample(&raw, n).unwrap(), 0).unwrap())
        .map(|rep| {
            assert!(rep.get(IdentityId::PQ).unwrap() < 1e-8);
            rep.get(IdentityId::PNu3).unwrap()
        })
        .collect();
    assert!(e[1] < 1e-4);
    assert!((order(e[0], e[1]) - 2.0).abs() < 0.2, "{e:?}");
}

#[test]
fn flat_disc_operator_is_shifted_laplacian() {
    // on z = -1/2 with c_o = 2: P = Δ - 8, and Δ r² = 4
    let c = plane_disc(256);
    let op = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free).unwrap();
    let f: Vec<f64> = c.r().iter().map(|r| r * r).collect();
    let pf = op.apply(&f).unwrap();
    for i in 0..c.len() {
        assert!((pf[i] - (4.0 - 8.0 * f[i])).abs() < 1e-8, "{i} {}", pf[i]);
    }
}

#[test]
fn matrix_is_symmetric_in_the_mass_inner_product() {
    let c = sigma0(-0.7, 256);
    for kind in [OperatorKind::L, OperatorKind::CalL, OperatorKind::P, OperatorKind::Pstar] {
        for m in 0..3 {
            let op = assemble(&c, kind, m, membrane_core::operators::apex_bc_for(m), OuterBc::Dirichlet)
                .unwrap();
            let a = op.matrix();
            let w: Vec<f64> = op.unknowns().map(|i| op.mass()[i]).collect();
            assert!(a.weighted_asymmetry(&w) < 1e-13, "{kind:?} {m}");
        }
    }
}

#[test]
fn full_matrix_reproduces_apply() {
    let c = fig1(128);
    let f: Vec<f64> = c.sigma().iter().map(|s| (1.0 + s).cos()).collect();
    for kind in [OperatorKind::P, OperatorKind::F] {
        let op = if kind == OperatorKind::F {
            assemble_f(&c, 0).unwrap()
        } else {
            assemble(&c, kind, 0, ApexBc::Regular, OuterBc::Free).unwrap()
        };
        let a = op.apply(&f).unwrap();
        let b = op.full_matrix().matvec(&f);
        let scale = max_abs(&a);
        for i in 0..a.len() {
            assert!((a[i] - b[i]).abs() < 1e-10 * scale, "{kind:?} {i}");
        }
    }
}

#[test]
fn boundary_condition_errors() {
    let c = fig1(64);
    let err = |r: Result<DiscreteOperator>| matches!(r, Err(MembraneError::BoundaryCondition(_)));
    assert!(err(assemble(&c, OperatorKind::P, 1, ApexBc::Regular, OuterBc::Dirichlet)));
    assert!(err(assemble(&c, OperatorKind::P, 0, ApexBc::Vanishing, OuterBc::Dirichlet)));
    assert!(err(assemble(&c, OperatorKind::P, 0, ApexBc::None, OuterBc::Dirichlet)));
    assert!(matches!(
        assemble_f(&resample(&trace(2.0, 3.0, StopKind::RPrimeZero, 20.0), 16).unwrap(), 0),
        Err(MembraneError::GridTooCoarse { .. })
    ));
    let op = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Dirichlet).unwrap();
    assert!(matches!(op.apply(&[1.0; 3]), Err(MembraneError::DimensionMismatch { .. })));
    let raw = trace(2.0, 3.0, StopKind::RPrimeZero, 20.0);
    assert!(matches!(
        assemble(&raw, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free),
        Err(MembraneError::NotUniform)
    ));
}

#[test]
fn coo_export() {
    let c = fig1(32);
    let op = assemble(&c, OperatorKind::L, 0, ApexBc::Regular, OuterBc::Dirichlet).unwrap();
    let mut buf = Vec::new();
    op.write_coo(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("row,col,value\n"));
    // tridiagonal on 32 unknowns
    assert_eq!(text.lines().count() - 1, 32 * 3 - 2);
}

#[test]
fn f_factors_through_p_and_its_adjoint() {
    let c = fig1(256);
    let f: Vec<f64> = c.sigma().iter().map(|s| (1.0 + s * s).cos()).collect();
    let p = assemble(&c, OperatorKind::P, 0, ApexBc::Regular, OuterBc::Free).unwrap();
    let ps = assemble(&c, OperatorKind::Pstar, 0, ApexBc::Regular, OuterBc::Free).unwrap();
    let pf = p.apply(&f).unwrap();
    let qpf = ps.apply(&pf).unwrap();
    let ff = assemble_f(&c, 0).unwrap().apply(&f).unwrap();
    let scale = max_abs(&ff);
    // end values of the intermediate are extrapolated, so compare away from them
    for i in 3..c.len() - 3 {
        let z = c.z()[i];
        let want = 0.5 * (qpf[i] + 2.0 * pf[i] / (z * z));
        assert!((ff[i] - want).abs() < 1e-9 * scale, "{i}: {} vs {want}", ff[i]);
    }
}
