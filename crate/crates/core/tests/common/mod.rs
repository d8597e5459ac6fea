#![allow(dead_code)]

use std::f64::consts::PI;

use membrane_core::*;

pub const TOL: f64 = 1e-12;

pub fn params(c_o: f64) -> ModelParams {
    ModelParams::with_co(c_o).unwrap()
}

pub fn trace(c_o: f64, z_hat: f64, kind: StopKind, sigma_max: f64) -> ProfileCurve {
    integrate_profile(
        &params(c_o),
        &ApexInit::new(z_hat).unwrap(),
        &StopRule::new(kind, sigma_max).unwrap(),
        TOL,
    )
    .unwrap()
}

pub fn grid(c_o: f64, z_hat: f64, kind: StopKind, sigma_max: f64, n: usize) -> ProfileCurve {
    resample(&trace(c_o, z_hat, kind, sigma_max), n).unwrap()
}

/// Figure 1 domain: c_o = 2, ẑ = 3, up to r' = 0.
pub fn fig1(n: usize) -> ProfileCurve {
    grid(2.0, 3.0, StopKind::RPrimeZero, 20.0, n)
}

/// Σ₀ for c_o = 2: apex to φ = -π.
pub fn sigma0(z_hat: f64, n: usize) -> ProfileCurve {
    grid(2.0, z_hat, StopKind::PhiReachesMinusPi, 20.0, n)
}

/// Plane disc z = -1/2, c_o = 2, radius 0.3.
pub fn plane_disc(n: usize) -> ProfileCurve {
    grid(2.0, -0.5, StopKind::SigmaMax, 0.3, n)
}

/// J₀ by its power series; adequate for x < 10.
pub fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let q = -(x * x) / 4.0;
    for k in 1..80 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

/// I₀ by its power series.
pub fn bessel_i0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let q = x * x / 4.0;
    for k in 1..80 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

/// First positive zero of J₀, bracketed in [2, 3] and bisected.
pub fn j01() -> f64 {
    let (mut a, mut b) = (2.0f64, 3.0f64);
    assert!(bessel_j0(a) > 0.0 && bessel_j0(b) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j0(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// k-th positive zero of J_m by sign scanning and bisection.
pub fn bessel_zero(m: u32, k: usize) -> f64 {
    let jm = |x: f64| {
        let q = -(x * x) / 4.0;
        let mut term = (x / 2.0).powi(m as i32) / (1..=m).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for j in 1..120 {
            term *= q / (j as f64 * (j + m as usize) as f64);
            sum += term;
        }
        sum
    };
    let mut found = 0;
    let mut x = 0.5;
    let dx = 0.01;
    loop {
        if jm(x) * jm(x + dx) < 0.0 {
            found += 1;
            if found == k {
                let (mut a, mut b) = (x, x + dx);
                for _ in 0..100 {
                    let c = 0.5 * (a + b);
                    if jm(a) * jm(c) <= 0.0 {
                        b = c;
                    } else {
                        a = c;
                    }
                }
                return 0.5 * (a + b);
            }
        }
        x += dx;
    }
}

/// `∫_V z⁻² dV` by the shell method for a graph `z(r)` over the disc,
/// trapezoid in `r`, between the surface and the plane `z = z_o`.
pub fn shell_volume(r: &[f64], z: &[f64]) -> f64 {
    let n = r.len() - 1;
    let z_o = z[n];
    let g: Vec<f64> = (0..=n).map(|i| 2.0 * PI * r[i] * (1.0 / z_o - 1.0 / z[i]).abs()).collect();
    (0..n).map(|i| 0.5 * (r[i + 1] - r[i]) * (g[i] + g[i + 1])).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}
