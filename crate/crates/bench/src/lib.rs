//! Fixtures shared by the benchmarks.

use membrane_core::{
    integrate_profile, resample, ApexInit, ModelParams, ProfileCurve, StopKind, StopRule,
};

pub fn profile(c_o: f64, z_hat: f64, kind: StopKind) -> ProfileCurve {
    integrate_profile(
        &ModelParams::with_co(c_o).expect("valid c_o"),
        &ApexInit::new(z_hat).expect("valid height"),
        &StopRule::new(kind, 20.0).expect("valid stop"),
        1e-12,
    )
    .expect("profile integrates")
}

/// Figure 1 domain on `n` intervals.
pub fn figure_one(n: usize) -> ProfileCurve {
    resample(&profile(2.0, 3.0, StopKind::RPrimeZero), n).expect("resample")
}

/// Σ₀ for `c_o = 2` on `n` intervals.
pub fn sigma_zero(z_hat: f64, n: usize) -> ProfileCurve {
    resample(&profile(2.0, z_hat, StopKind::PhiReachesMinusPi), n).expect("resample")
}
