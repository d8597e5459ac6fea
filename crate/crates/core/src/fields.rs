//! Pointwise geometry, boundary Darboux data and energy functionals.

use std::f64::consts::PI;
use std::io;

use serde::Serialize;

use crate::error::{invalid, MembraneError, Result};
use crate::io::fmt_f64;
use crate::profile::{ModelParams, ProfileCurve};

/// Per-node geometric quantities.
#[derive(Debug, Clone, Serialize)]
pub struct FieldTable {
    /// Mean curvature `H = (kappa_m + kappa_p) / 2`.
    pub mean: Vec<f64>,
    /// Gaussian curvature `K = kappa_m kappa_p`.
    pub gauss: Vec<f64>,
    pub nu3: Vec<f64>,
    pub nu_r: Vec<f64>,
    /// Support function `q = X . nu = -r sin phi + z cos phi`.
    pub q: Vec<f64>,
    pub kappa_m: Vec<f64>,
    pub kappa_p: Vec<f64>,
}

impl FieldTable {
    pub fn len(&self) -> usize {
        self.mean.len()
    }
    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
    /// `||d nu||^2 = kappa_m^2 + kappa_p^2`.
    pub fn dnu_sq(&self, i: usize) -> f64 {
        self.kappa_m[i].powi(2) + self.kappa_p[i].powi(2)
    }
}

/// Derivative at `xs[k]` of the interpolating polynomial through `(xs, ys)`.
pub(crate) fn lagrange_derivative(xs: &[f64], ys: &[f64], k: usize) -> f64 {
    let xk = xs[k];
    let mut d = 0.0;
    for j in 0..xs.len() {
        let w = if j == k {
            (0..xs.len())
                .filter(|&l| l != k)
                .map(|l| 1.0 / (xk - xs[l]))
                .sum::<f64>()
        } else {
            let num: f64 = (0..xs.len())
                .filter(|&l| l != j && l != k)
                .map(|l| xk - xs[l])
                .product();
            let den: f64 = (0..xs.len())
                .filter(|&l| l != j)
                .map(|l| xs[j] - xs[l])
                .product();
            num / den
        };
        d += w * ys[j];
    }
    d
}

/// Seven-point (or fewer on tiny grids) finite-difference derivative at node `i`.
fn fd_derivative(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let width = xs.len().min(7);
    let start = i.saturating_sub(width / 2).min(xs.len() - width);
    lagrange_derivative(&xs[start..start + width], &ys[start..start + width], i - start)
}

/// Three-point one-sided derivative at the last sample. A sliver-sized last
/// interval (event close to the previous step) is skipped to keep the
/// stencil well conditioned.
pub(crate) fn end_derivative(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() - 1;
    let idx = if n >= 3 && xs[n] - xs[n - 1] < 0.1 * (xs[n - 1] - xs[n - 2]) {
        [n - 3, n - 2, n]
    } else {
        [n - 2, n - 1, n]
    };
    let x = idx.map(|i| xs[i]);
    let y = idx.map(|i| ys[i]);
    lagrange_derivative(&x, &y, 2)
}

/// Principal curvatures from the sampled angle: `kappa_m` is a
/// finite-difference derivative of `phi` (so the reduced-membrane residual
/// is a genuine check), `kappa_p = sin phi / r` with the apex limit.
pub fn geometric_fields(curve: &ProfileCurve) -> FieldTable {
    let (s, r, z, phi) = (curve.sigma(), curve.r(), curve.z(), curve.phi());
    let n = curve.len();
    let mut t = FieldTable {
        mean: Vec::with_capacity(n),
        gauss: Vec::with_capacity(n),
        nu3: Vec::with_capacity(n),
        nu_r: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        kappa_m: Vec::with_capacity(n),
        kappa_p: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (sp, cp) = phi[i].sin_cos();
        let (km, kp) = if r[i] == 0.0 {
            (curve.apex_slope(), curve.apex_slope())
        } else {
            (fd_derivative(s, phi, i), sp / r[i])
        };
        t.kappa_m.push(km);
        t.kappa_p.push(kp);
        t.mean.push(0.5 * (km + kp));
        t.gauss.push(km * kp);
        t.nu3.push(cp);
        t.nu_r.push(-sp);
        t.q.push(-r[i] * sp + z[i] * cp);
    }
    t
}

/// Pointwise `H + c_o + nu3 / z`.
pub fn rme_residuals(curve: &ProfileCurve, fields: &FieldTable) -> Vec<f64> {
    let c_o = curve.params().c_o();
    (0..curve.len())
        .map(|i| fields.mean[i] + c_o + fields.nu3[i] / curve.z()[i])
        .collect()
}

/// Max-norm residual of the reduced membrane equation.
pub fn rme_residual(curve: &ProfileCurve, fields: &FieldTable) -> f64 {
    rme_residuals(curve, fields)
        .into_iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxReport {
    pub max_residual: f64,
    /// Nodes where `|H + c_o| < 1e-10` and the quotient is undefined.
    pub skipped: Vec<usize>,
}

/// Max of `|nu3 / (H + c_o) + z|`, which vanishes on RME solutions.
pub fn flux_scalar(curve: &ProfileCurve, fields: &FieldTable) -> FluxReport {
    let c_o = curve.params().c_o();
    let mut rep = FluxReport {
        max_residual: 0.0,
        skipped: Vec::new(),
    };
    for i in 0..curve.len() {
        let d = fields.mean[i] + c_o;
        if d.abs() < 1e-10 {
            rep.skipped.push(i);
            continue;
        }
        let v = (fields.nu3[i] / d + curve.z()[i]).abs();
        rep.max_residual = rep.max_residual.max(v);
    }
    rep
}

/// Darboux frame data along the last parallel, with outward conormal
/// `n = (cos phi cos t, cos phi sin t, sin phi)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryData {
    pub sigma_o: f64,
    pub r_o: f64,
    pub z_o: f64,
    pub phi_o: f64,
    pub kappa: f64,
    pub kappa_n: f64,
    pub kappa_g: f64,
    pub tau_g: f64,
    pub dn_z: f64,
    pub dn_nu3: f64,
    pub dn_h: f64,
    pub nu3: f64,
    pub mean: f64,
    pub gauss: f64,
    pub kappa_m: f64,
}

pub fn boundary_darboux(curve: &ProfileCurve, fields: &FieldTable) -> BoundaryData {
    let n = curve.len() - 1;
    let (r_o, z_o, phi_o) = (curve.r()[n], curve.z()[n], curve.phi()[n]);
    let (sp, cp) = phi_o.sin_cos();
    let dn_nu3 = end_derivative(curve.sigma(), &fields.nu3);
    let dn_z = sp;
    BoundaryData {
        sigma_o: curve.sigma_end(),
        r_o,
        z_o,
        phi_o,
        kappa: 1.0 / r_o,
        kappa_n: sp / r_o,
        kappa_g: -cp / r_o,
        tau_g: 0.0,
        dn_z,
        dn_nu3,
        dn_h: -dn_nu3 / z_o + cp * dn_z / (z_o * z_o),
        nu3: cp,
        mean: fields.mean[n],
        gauss: fields.gauss[n],
        kappa_m: fields.kappa_m[n],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadRule {
    Trapezoid,
    /// Piecewise quadratic; on a uniform grid this is composite Simpson,
    /// i.e. one Richardson step over the trapezoid rule.
    Simpson,
}

/// `int values d sigma` over the sample grid.
pub fn integrate(xs: &[f64], ys: &[f64], rule: QuadRule) -> f64 {
    let n = xs.len() - 1;
    let trap = |i: usize| 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
    if rule == QuadRule::Trapezoid || n < 2 {
        return (0..n).map(trap).sum();
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 <= n {
        let (h1, h2) = (xs[i + 1] - xs[i], xs[i + 2] - xs[i + 1]);
        let (f0, f1, f2) = (ys[i], ys[i + 1], ys[i + 2]);
        total += (h1 + h2) / 6.0
            * ((2.0 - h2 / h1) * f0 + (h1 + h2).powi(2) / (h1 * h2) * f1 + (2.0 - h1 / h2) * f2);
        i += 2;
    }
    if i < n {
        // odd interval count: last interval from the quadratic through the
        // final three samples
        let (h1, h2) = (xs[n - 1] - xs[n - 2], xs[n] - xs[n - 1]);
        let (f0, f1, f2) = (ys[n - 2], ys[n - 1], ys[n]);
        let c = ((f2 - f1) / h2 + (f0 - f1) / h1) / (h1 + h2);
        let b = (f2 - f1) / h2 - c * h2;
        total += f1 * h2 + b * h2 * h2 / 2.0 + c * h2.powi(3) / 3.0;
    }
    total
}

/// Angular factor of `int cos^2(m t) dt`.
pub fn angular_factor(m: u32) -> f64 {
    if m == 0 {
        2.0 * PI
    } else {
        PI
    }
}

/// `int_Sigma g dSigma` with `dSigma = r d sigma d t`, for a mode-`m`
/// integrand `g(sigma) cos^2(m t)` (`m = 0`: full angular factor `2 pi`).
pub fn surface_integral(curve: &ProfileCurve, g: &[f64], m: u32) -> Result<f64> {
    surface_integral_with(curve, g, m, QuadRule::Simpson)
}

pub fn surface_integral_with(
    curve: &ProfileCurve,
    g: &[f64],
    m: u32,
    rule: QuadRule,
) -> Result<f64> {
    if g.len() != curve.len() {
        return Err(MembraneError::DimensionMismatch {
            expected: curve.len(),
            got: g.len(),
        });
    }
    let y: Vec<f64> = g.iter().zip(curve.r()).map(|(g, r)| g * r).collect();
    Ok(angular_factor(m) * integrate(curve.sigma(), &y, rule))
}

fn require_half_space(curve: &ProfileCurve) -> Result<()> {
    if curve.in_half_space() {
        Ok(())
    } else {
        Err(MembraneError::HalfSpaceExit {
            sigma: curve
                .sigma()
                .iter()
                .zip(curve.z())
                .find(|(_, z)| z.signum() != curve.z()[0].signum() || **z == 0.0)
                .map_or(f64::NAN, |(s, _)| *s),
        })
    }
}

/// `int_V z^-2 dV` for the region bounded by the surface and the flat disc
/// at the last parallel, via the divergence of `(0, 0, -1/z)`:
/// `-int_Sigma nu3 / z dSigma + pi r_o^2 / z_o`. Positive when `nu` is the
/// outward normal of the region.
pub fn potential_volume_integral(curve: &ProfileCurve) -> Result<f64> {
    require_half_space(curve)?;
    if !curve.has_apex() {
        return Err(invalid("curve", "the disc closure needs a curve starting at the apex"));
    }
    let g: Vec<f64> = curve
        .phi()
        .iter()
        .zip(curve.z())
        .map(|(p, z)| -p.cos() / z)
        .collect();
    let n = curve.len() - 1;
    let (r_o, z_o) = (curve.r()[n], curve.z()[n]);
    Ok(surface_integral(curve, &g, 0)? + PI * r_o * r_o / z_o)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Energies {
    /// `int (H + c_o)^2 dSigma`.
    pub helfrich: f64,
    /// `b int K dSigma`.
    pub gauss_term: f64,
    /// `int z^-2 dSigma`.
    pub hyperbolic_area: f64,
    /// `int_V z^-2 dV`.
    pub potential: f64,
    /// `hyperbolic_area - 2 c_o potential`.
    pub g: f64,
    /// `oint (alpha kappa^2 + beta) ds` with `kappa = 1 / r_o`.
    pub boundary_elastic: f64,
    /// `a helfrich + gauss_term + boundary_elastic`.
    pub euler_helfrich: f64,
}

pub fn energies(curve: &ProfileCurve, fields: &FieldTable, params: &ModelParams) -> Result<Energies> {
    if params.c_o() != curve.params().c_o() {
        return Err(invalid("c_o", "differs from the value the curve was integrated with"));
    }
    require_half_space(curve)?;
    let c_o = params.c_o();
    let h2: Vec<f64> = fields.mean.iter().map(|h| (h + c_o).powi(2)).collect();
    let helfrich = surface_integral(curve, &h2, 0)?;
    let gauss_term = params.b() * surface_integral(curve, &fields.gauss, 0)?;
    let inv_z2: Vec<f64> = curve.z().iter().map(|z| 1.0 / (z * z)).collect();
    let hyperbolic_area = surface_integral(curve, &inv_z2, 0)?;
    let potential = potential_volume_integral(curve)?;
    let r_o = *curve.r().last().unwrap();
    let boundary_elastic = 2.0 * PI * r_o * (params.alpha() / (r_o * r_o) + params.beta());
    Ok(Energies {
        helfrich,
        gauss_term,
        hyperbolic_area,
        potential,
        g: hyperbolic_area - 2.0 * c_o * potential,
        boundary_elastic,
        euler_helfrich: params.a() * helfrich + gauss_term + boundary_elastic,
    })
}

/// Write `sigma,r,z,phi,H,K,nu3,q,rme_residual`.
pub fn write_fields_csv<W: io::Write>(
    curve: &ProfileCurve,
    fields: &FieldTable,
    w: W,
) -> io::Result<()> {
    let res = rme_residuals(curve, fields);
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["sigma", "r", "z", "phi", "H", "K", "nu3", "q", "rme_residual"])?;
    for i in 0..curve.len() {
        wr.write_record(
            [
                curve.sigma()[i],
                curve.r()[i],
                curve.z()[i],
                curve.phi()[i],
                fields.mean[i],
                fields.gauss[i],
                fields.nu3[i],
                fields.q[i],
                res[i],
            ]
            .map(fmt_f64),
        )?;
    }
    wr.flush()
}
