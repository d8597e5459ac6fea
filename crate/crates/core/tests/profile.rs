mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::*;
use membrane_core::fields::rme_residual;
use membrane_core::*;

#[test]
fn unit_sphere_nodes_and_event() {
    let c = integrate_profile(
        &params(0.0),
        &ApexInit::new(1.0).unwrap(),
        &StopRule::new(StopKind::RPrimeZero, 3.0).unwrap(),
        1e-10,
    )
    .unwrap();
    let err = (0..c.len())
        .map(|i| {
            let s = c.sigma()[i];
            (c.r()[i] - s.sin())
                .abs()
                .max((c.z()[i] - s.cos()).abs())
                .max((c.phi()[i] + s).abs())
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
    assert!((c.event_sigma().unwrap() - FRAC_PI_2).abs() < 1e-10);
    assert_eq!(c.event_kind(), Some(StopKind::RPrimeZero));
}

#[test]
fn figure_one_event_and_rme() {
    let raw = trace(2.0, 3.0, StopKind::RPrimeZero, 20.0);
    let s_o = raw.event_sigma().unwrap();
    assert!(raw.z().last().unwrap() > &0.0);
    assert!(raw.phi().last().unwrap().cos().abs() < 1e-10);
    // event located on the dense output
    let y = raw.dense_eval(s_o).unwrap();
    assert!(y[2].cos().abs() < 1e-10);

    let c = resample(&raw, 1024).unwrap();
    let f = geometric_fields(&c);
    assert!(rme_residual(&c, &f) < 1e-8);
    assert!((c.sigma_end() - s_o).abs() < 1e-12);
}

#[test]
fn figure_two_family_reaches_minus_pi() {
    for zh in [-0.55, -0.7, -0.9, -1.2] {
        assert!(zh < -1.0 / 2.0);
        let c = trace(2.0, zh, StopKind::PhiReachesMinusPi, 20.0);
        assert_eq!(c.event_kind(), Some(StopKind::PhiReachesMinusPi));
        assert!((c.phi().last().unwrap() + PI).abs() < 1e-10);
        assert!(c.z().iter().all(|&z| z < 0.0), "z changed sign for {zh}");
    }
}

#[test]
fn resolution_independent_event() {
    let a = trace(2.0, -0.7, StopKind::PhiReachesMinusPi, 20.0);
    let b = integrate_profile(
        &params(2.0),
        &ApexInit::new(-0.7).unwrap(),
        &StopRule::new(StopKind::PhiReachesMinusPi, 20.0).unwrap(),
        1e-9,
    )
    .unwrap();
    assert!((a.sigma_end() - b.sigma_end()).abs() < 1e-7);
}

#[test]
fn plane_disc_is_flat() {
    let c = plane_disc(64);
    for i in 0..c.len() {
        assert!((c.z()[i] + 0.5).abs() < 1e-12);
        assert!(c.phi()[i].abs() < 1e-12);
        assert!((c.r()[i] - c.sigma()[i]).abs() < 1e-12);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(
        ApexInit::new(0.0),
        Err(MembraneError::InvalidParameter { .. })
    ));
    assert!(StopRule::new(StopKind::SigmaMax, -1.0).is_err());
    assert!(ModelParams::with_co(f64::NAN).is_err());
    let p = params(2.0);
    let init = ApexInit::new(3.0).unwrap();
    let stop = StopRule::new(StopKind::RPrimeZero, 20.0).unwrap();
    assert!(integrate_profile(&p, &init, &stop, 0.0).is_err());
    assert!(resample(&trace(2.0, 3.0, StopKind::RPrimeZero, 20.0), 1).is_err());
}

#[test]
fn resample_preserves_the_endpoint() {
    let raw = trace(2.0, -0.9, StopKind::PhiReachesMinusPi, 20.0);
    for n in [64, 257, 1000] {
        let c = resample(&raw, n).unwrap();
        assert_eq!(c.len(), n + 1);
        assert!(c.is_uniform());
        assert!((c.sigma_end() - raw.sigma_end()).abs() < 1e-12);
        assert!((c.phi()[n] - raw.phi().last().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn reflection_maps_solutions_to_solutions() {
    let up = resample(&trace(2.0, 3.0, StopKind::RPrimeZero, 20.0), 256).unwrap();
    let down = resample(&trace(-2.0, -3.0, StopKind::RPrimeZero, 20.0), 256).unwrap();
    assert!((up.sigma_end() - down.sigma_end()).abs() < 1e-10);
    for i in 0..up.len() {
        assert!((up.r()[i] - down.r()[i]).abs() < 1e-10);
        assert!((up.z()[i] + down.z()[i]).abs() < 1e-10);
        assert!((up.phi()[i] + down.phi()[i]).abs() < 1e-10);
    }
}
