//! Stability tests: the constrained criterion for 𝒢, the instability
//! corollaries for the Euler-Helfrich energy, second-variation forms and
//! the boundary Euler-Lagrange residuals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::banded::solve_tridiagonal;
use crate::dd::Dd;
use crate::error::{invalid, MembraneError, Result};
use crate::fields::{angular_factor, boundary_darboux, geometric_fields, surface_integral, FieldTable};
use crate::ode::Dopri5;
use crate::operators::{apex_bc_for, assemble, ApexBc, DiscreteOperator, OperatorKind, OuterBc};
use crate::profile::{
    apex_expansion, default_delta, ApexInit, ModelParams, ProfileCurve, BLOWUP_BOUND,
};
use crate::spectrum::{count_below, pencil, solve_dirichlet_spectrum, EigenPair, WeightKind};

/// Relative size below which a ZSq eigenvalue counts as zero in `solve_h`.
pub const SINGULAR_TOL: f64 = 1e-9;
/// Width of the band around zero, relative to `|λ₂|` of mode 0, inside
/// which the second full-surface eigenvalue is treated as zero.
pub const ZERO_BAND: f64 = 1e-3;
/// Highest Fourier mode included in the full-surface eigenvalue count.
pub const EXTRA_MODES: u32 = 3;
/// Largest `|ν₃|` at the boundary accepted as "ν₃ = 0".
pub const NU3_TOL: f64 = 1e-6;
/// Largest Euler-Lagrange residual accepted as "critical".
pub const EL_TOL: f64 = 1e-3;
/// Local tolerance for the ψ shooting.
pub const PSI_TOL: f64 = 1e-13;
const PSI_H_MAX: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    StableUnconstrained,
    UnstableTwoNegative,
    Inapplicable,
}

impl Verdict {
    pub fn is_unstable(self) -> bool {
        matches!(self, Verdict::Unstable | Verdict::UnstableTwoNegative)
    }
    pub fn is_stable(self) -> bool {
        matches!(self, Verdict::Stable | Verdict::StableUnconstrained)
    }
}

/// Dirichlet P operator for a mode with the matching apex closure.
pub fn p_operator(curve: &ProfileCurve, mode: u32) -> Result<DiscreteOperator> {
    assemble(curve, OperatorKind::P, mode, apex_bc_for(mode), OuterBc::Dirichlet)
}

fn require_p(op: &DiscreteOperator) -> Result<()> {
    if op.kind() != OperatorKind::P {
        return Err(invalid("op", "expected the P operator"));
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HSolution {
    pub h: Vec<f64>,
    /// `‖P h + 2‖_∞` over the unknowns.
    pub residual: f64,
    /// ZSq eigenvalue closest to zero.
    pub lambda_near_zero: f64,
}

/// Solve `P[h] = -2`, `h = 0` on the boundary.
pub fn solve_h(op: &DiscreteOperator) -> Result<HSolution> {
    require_p(op)?;
    if op.mode() != 0 || op.bc_apex() != ApexBc::Regular || op.bc_outer() != OuterBc::Dirichlet {
        return Err(MembraneError::BoundaryCondition(
            "solve_h needs mode 0 with Regular apex and Dirichlet rim".into(),
        ));
    }
    let below = count_below(op, WeightKind::ZSq, 0.0)?;
    let pairs = solve_dirichlet_spectrum(op, WeightKind::ZSq, below + 1)?;
    let near = pairs[below.saturating_sub(1)..]
        .iter()
        .map(|p| p.lambda)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(f64::NAN);
    let scale = pairs.iter().fold(1.0f64, |m, p| m.max(p.lambda.abs()));
    if near.abs() <= SINGULAR_TOL * scale {
        return Err(MembraneError::SingularOperator { lambda: near });
    }

    let pen = pencil(op, WeightKind::ZSq)?;
    let mass = &op.stencil().mass;
    let rhs: Vec<Dd> = op.unknowns().map(|i| mass[i] * 2.0).collect();
    let x = solve_tridiagonal(&pen.off, &pen.diag, &pen.off, &rhs)
        .ok_or(MembraneError::SingularOperator { lambda: near })?;
    let mut h = vec![Dd::ZERO; op.len()];
    for (k, v) in x.into_iter().enumerate() {
        h[pen.start + k] = v;
    }
    let ph = op.apply_full(&h);
    let residual = op
        .unknowns()
        .map(|i| (ph[i] + 2.0).to_f64().abs())
        .fold(0.0, f64::max);
    Ok(HSolution {
        h: h.iter().map(|v| v.to_f64()).collect(),
        residual,
        lambda_near_zero: near,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiSolution {
    pub sigma: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub psi_end: f64,
    /// `∂_n ψ` at the boundary; the conormal points along increasing σ.
    pub dn_psi_end: f64,
}

impl PsiSolution {
    /// ψ scaled so that `ψ(σ_end) = 1`.
    pub fn normalized(&self) -> Vec<f64> {
        self.psi.iter().map(|v| v / self.psi_end).collect()
    }
}

/// Apex-regular solution of `P[ψ] = 0` with `ψ(0) = 1`, shot jointly with
/// the profile ODE and sampled at the curve nodes.
pub fn shoot_psi(curve: &ProfileCurve) -> Result<PsiSolution> {
    if !curve.has_apex() {
        return Err(invalid("curve", "ψ is shot from the apex"));
    }
    let params = curve.params();
    let c_o = params.c_o();
    let z_hat = curve.z_hat();
    let k = curve.apex_slope();
    let psi2 = -(2.0 * k * k - 2.0 / (z_hat * z_hat)) / 4.0;
    let delta = default_delta(c_o, z_hat);
    let start = apex_expansion(params, &ApexInit::new(z_hat)?, delta)?;

    let rhs = move |_t: f64, y: &[f64; 5]| {
        let (s, c) = y[2].sin_cos();
        let kp = s / y[0];
        let km = -2.0 * c / y[1] - kp - 2.0 * c_o;
        let hc = -c / y[1];
        let coef = km * km + kp * kp - 2.0 * hc * hc;
        [
            c,
            s,
            km,
            y[4],
            -(c / y[0] - 2.0 * s / y[1]) * y[4] - coef * y[3],
        ]
    };
    let y0 = [
        start.r,
        start.z,
        start.phi,
        1.0 + psi2 * delta * delta,
        2.0 * psi2 * delta,
    ];
    let mut st = Dopri5::new(rhs, delta, y0, PSI_TOL, PSI_H_MAX);
    let sigma = curve.sigma().to_vec();
    let mut psi = Vec::with_capacity(sigma.len());
    let mut dpsi = Vec::with_capacity(sigma.len());
    for &s in &sigma {
        if s <= delta {
            psi.push(1.0 + psi2 * s * s);
            dpsi.push(2.0 * psi2 * s);
            continue;
        }
        while st.t() < s {
            st.step(s)?;
            let y = st.y();
            let phi_prime = rhs(st.t(), &y)[2];
            if !(phi_prime.abs() <= BLOWUP_BOUND) {
                return Err(MembraneError::SingularBlowup {
                    sigma: st.t(),
                    phi_prime,
                });
            }
        }
        let y = st.y();
        psi.push(y[3]);
        dpsi.push(y[4]);
    }
    let psi_end = *psi.last().expect("non-empty");
    let dn_psi_end = *dpsi.last().expect("non-empty");
    Ok(PsiSolution {
        sigma,
        psi,
        dpsi,
        psi_end,
        dn_psi_end,
    })
}

fn support(curve: &ProfileCurve) -> Vec<f64> {
    (0..curve.len())
        .map(|i| {
            let (s, c) = curve.phi()[i].sin_cos();
            -curve.r()[i] * s + curve.z()[i] * c
        })
        .collect()
}

/// `h = c_o⁻¹ (q(ℓ) ψ̃ - q)` with `ψ̃(ℓ) = 1`.
pub fn closed_form_h(curve: &ProfileCurve, psi: &PsiSolution) -> Result<Vec<f64>> {
    let c_o = curve.params().c_o();
    if c_o == 0.0 {
        return Err(invalid("c_o", "the closed form needs c_o ≠ 0"));
    }
    if psi.psi_end == 0.0 {
        return Err(MembraneError::ZeroDenominator("ψ(ℓ)"));
    }
    let q = support(curve);
    let ql = *q.last().expect("non-empty");
    let pn = psi.normalized();
    Ok(q.iter().zip(&pn).map(|(q, p)| (ql * p - q) / c_o).collect())
}

/// `∫ f z⁻² dΣ` for an axially symmetric `f`.
pub fn constraint_integral(curve: &ProfileCurve, f: &[f64]) -> Result<f64> {
    if f.len() != curve.len() {
        return Err(MembraneError::DimensionMismatch {
            expected: curve.len(),
            got: f.len(),
        });
    }
    let g: Vec<f64> = f.iter().zip(curve.z()).map(|(f, z)| f / (z * z)).collect();
    surface_integral(curve, &g, 0)
}

/// `δ²𝒢 = -∫ f P[f] z⁻² dΣ` with the discrete mass-weighted product.
pub fn second_variation_g(op: &DiscreteOperator, f: &[f64]) -> Result<f64> {
    require_p(op)?;
    op.apply(f)?;
    let fd: Vec<Dd> = f.iter().map(|&v| Dd::from(v)).collect();
    let pf = op.apply_full(&fd);
    let mass = &op.stencil().mass;
    let s: Dd = op.unknowns().map(|i| fd[i] * pf[i] * mass[i]).sum();
    Ok(-s.to_f64() * angular_factor(op.mode()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub area: f64,
    pub boundary: f64,
    pub total: f64,
}

fn one_sided(v: &[f64], h: f64) -> f64 {
    let n = v.len() - 1;
    (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h)
}

/// `(area term without the factor a, ∂_n f, boundary length factor)`.
fn area_part(op: &DiscreteOperator, curve: &ProfileCurve, f: &[f64]) -> Result<(f64, f64, f64)> {
    require_p(op)?;
    if f.len() != op.len() || curve.len() != op.len() {
        return Err(MembraneError::DimensionMismatch {
            expected: op.len(),
            got: f.len(),
        });
    }
    let n = f.len() - 1;
    if f[n].abs() > 1e-8 * max_abs(f) {
        log::warn!("test function does not vanish on the boundary: f = {:e}", f[n]);
    }
    let fd: Vec<Dd> = f.iter().map(|&v| Dd::from(v)).collect();
    let pf = op.apply_free(&fd);
    let z = curve.z();
    let integrand: Vec<f64> = (0..=n)
        .map(|i| (pf[i] * (pf[i] + fd[i] * 2.0 / (z[i] * z[i])) * 0.5).to_f64())
        .collect();
    let area = surface_integral(curve, &integrand, op.mode())?;
    let dnf = one_sided(f, op.step());
    let len = angular_factor(op.mode()) * curve.r()[n];
    Ok((area, dnf, len))
}

/// `½ ∫ P[f] (P + 2/z²)[f] dΣ + ∮ (∂_n f)² ∂_n z / z ds`.
pub fn second_variation_h(op: &DiscreteOperator, curve: &ProfileCurve, f: &[f64]) -> Result<QuadraticForm> {
    let (area, dnf, len) = area_part(op, curve, f)?;
    let n = curve.len() - 1;
    let boundary = len * dnf * dnf * curve.phi()[n].sin() / curve.z()[n];
    Ok(QuadraticForm {
        area,
        boundary,
        total: area + boundary,
    })
}

/// `a/2 ∫ P[f] (P + 2/z²)[f] dΣ + ∮ (a ∂_n z / z - b κ_g)(∂_n f)² ds`.
pub fn second_variation_e(
    op: &DiscreteOperator,
    curve: &ProfileCurve,
    f: &[f64],
    params: &ModelParams,
) -> Result<QuadraticForm> {
    let (area, dnf, len) = area_part(op, curve, f)?;
    let n = curve.len() - 1;
    let (s, c) = curve.phi()[n].sin_cos();
    let kappa_g = -c / curve.r()[n];
    let a = params.a();
    let boundary = len * dnf * dnf * (a * s / curve.z()[n] - params.b() * kappa_g);
    Ok(QuadraticForm {
        area: a * area,
        boundary,
        total: a * area + boundary,
    })
}

/// `a ∮ (∂_n z / z)(∂_n ν₃)² ds` with `∂_n ν₃ = -sin φ · φ'` from the ODE.
pub fn nu3_boundary_expression(curve: &ProfileCurve, params: &ModelParams) -> f64 {
    let n = curve.len() - 1;
    let (r, z, phi) = (curve.r()[n], curve.z()[n], curve.phi()[n]);
    let (s, c) = phi.sin_cos();
    let phi_prime = -2.0 * c / z - s / r - 2.0 * curve.params().c_o();
    let dn_nu3 = -s * phi_prime;
    params.a() * 2.0 * PI * r * (s / z) * dn_nu3 * dn_nu3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElReport {
    pub el2: f64,
    pub el3: f64,
    pub el4: f64,
    /// `C = a (1 - 2 c_o r_o) / z_o`; critical pairs satisfy `β = α/r_o² - C`.
    pub admissible_c: f64,
    pub r_o: f64,
    /// Positive `(α, β)` pairs on the admissible line.
    pub samples: Vec<(f64, f64)>,
}

impl ElReport {
    pub fn max_residual(&self) -> f64 {
        self.el2.abs().max(self.el3.abs()).max(self.el4.abs())
    }
}

/// Boundary residuals of the Euler-Lagrange system for the parallel circle
/// at the end of the curve, and the admissible `(α, β)` line.
pub fn el_residuals_and_alpha_beta(
    curve: &ProfileCurve,
    fields: &FieldTable,
    params: &ModelParams,
) -> Result<ElReport> {
    let bd = boundary_darboux(curve, fields);
    if bd.z_o == 0.0 {
        return Err(MembraneError::ZeroDenominator("z_o"));
    }
    let (a, b, c_o) = (params.a(), params.b(), params.c_o());
    let hc = bd.mean + c_o;
    let j = params.alpha() / (bd.r_o * bd.r_o) - params.beta();
    let el2 = a * hc + b * bd.kappa_n;
    let el3 = j * bd.kappa_n - a * bd.dn_h;
    let el4 = j * bd.kappa_g + a * hc * hc + b * bd.gauss;
    let cc = a * (1.0 - 2.0 * c_o * bd.r_o) / bd.z_o;
    let r2 = bd.r_o * bd.r_o;
    let samples = [0.5, 1.0, 2.0]
        .iter()
        .map(|t| {
            let alpha = r2 * (cc.max(0.0) + t);
            (alpha, alpha / r2 - cc)
        })
        .collect();
    Ok(ElReport {
        el2,
        el3,
        el4,
        admissible_c: cc,
        r_o: bd.r_o,
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub cor_applicable: bool,
    pub cor_reason: Option<String>,
    pub cor_verdict: Verdict,
    pub dn_z: f64,
    pub dn_nu3: f64,
    pub z_o: f64,
    pub nu3_boundary: f64,
    /// `a ∮ (∂_n z / z)(∂_n ν₃)² ds`
    pub boundary_expression: f64,
    pub cor2_applicable: bool,
    pub cor2_reason: Option<String>,
    /// `(α/r_o² - β) K` at the boundary.
    pub cor2_sign: f64,
    pub boundary_gauss: f64,
    pub cor2_verdict: Verdict,
}

pub fn corollary_checks(
    curve: &ProfileCurve,
    fields: &FieldTable,
    params: &ModelParams,
) -> Result<CorollaryReport> {
    let bd = boundary_darboux(curve, fields);
    let expr = nu3_boundary_expression(curve, params);
    let el = el_residuals_and_alpha_beta(curve, fields, params)?;
    let z = curve.z();
    let slack = 1e-12 * bd.z_o.abs().max(1.0);

    let mut fail = None;
    if !(params.c_o() > 0.0) {
        fail = Some("c_o must be positive".to_string());
    } else if params.b() != 0.0 {
        fail = Some("b must vanish".into());
    } else if !curve.in_half_space() {
        fail = Some("surface leaves the half-space".into());
    } else if bd.nu3.abs() > NU3_TOL {
        fail = Some(format!("ν₃ = {:e} on the boundary, expected 0", bd.nu3));
    } else if !((bd.z_o > 0.0 && z.iter().all(|&v| v >= bd.z_o - slack))
        || (bd.z_o < 0.0 && z.iter().all(|&v| v <= bd.z_o + slack)))
    {
        fail = Some("surface is not on one side of the boundary plane".into());
    }
    let cor_applicable = fail.is_none();
    let cor_verdict = if cor_applicable && expr < 0.0 {
        Verdict::Unstable
    } else {
        if cor_applicable {
            fail = Some(format!("boundary term {expr:e} is not negative"));
        }
        Verdict::Inapplicable
    };

    let sign = (params.alpha() / (bd.r_o * bd.r_o) - params.beta()) * bd.gauss;
    let mut fail2 = None;
    if params.b() != 0.0 {
        fail2 = Some("b must vanish".to_string());
    } else if !curve.in_half_space() {
        fail2 = Some("surface leaves the half-space".into());
    } else if el.max_residual() > EL_TOL {
        fail2 = Some(format!(
            "not critical: Euler-Lagrange residual {:e}",
            el.max_residual()
        ));
    }
    let cor2_applicable = fail2.is_none();
    let cor2_verdict = if cor2_applicable && sign < 0.0 {
        Verdict::Unstable
    } else {
        if cor2_applicable {
            fail2 = Some(format!("(α/r_o² - β) K = {sign:e} is not negative"));
        }
        Verdict::Inapplicable
    };

    Ok(CorollaryReport {
        cor_applicable,
        cor_reason: fail,
        cor_verdict,
        dn_z: bd.dn_z,
        dn_nu3: bd.dn_nu3,
        z_o: bd.z_o,
        nu3_boundary: bd.nu3,
        boundary_expression: expr,
        cor2_applicable,
        cor2_reason: fail2,
        cor2_sign: sign,
        boundary_gauss: bd.gauss,
        cor2_verdict,
    })
}

/// Quantities of the upper-bound argument for `∫ h z⁻² dΣ` on domains
/// with a horizontal tangent plane along the boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundChain {
    /// `∫ ψ̃ z⁻² dΣ`, `ψ̃(ℓ) = 1`
    pub psi_integral: f64,
    /// `π r ∂_n q / (c_o z²)`
    pub psi_bound: f64,
    /// `(π r / (c_o z²)) (∂_n q - q(ℓ) ∂_n ψ̃)`, equal to `psi_integral`
    pub psi_green: f64,
    /// `∫ q z⁻² dΣ`
    pub q_integral: f64,
    /// `π r² / z`
    pub q_bound: f64,
    /// `∂_n q` by a one-sided difference
    pub dn_q: f64,
    /// `2r/z - 2c_o r`
    pub dn_q_formula: f64,
    pub dn_psi: f64,
    /// `c_o⁻¹ (q(ℓ) ∫ψ̃ z⁻² - ∫ q z⁻²)`
    pub h_integral: f64,
    /// `-2π r²/(c_o² z²) + π r²/(c_o z)`
    pub h_bound: f64,
    pub psi_bound_holds: bool,
    pub q_bound_holds: bool,
}

pub fn bound_chain(curve: &ProfileCurve, psi: &PsiSolution) -> Result<BoundChain> {
    let c_o = curve.params().c_o();
    if c_o == 0.0 {
        return Err(invalid("c_o", "the bound chain needs c_o ≠ 0"));
    }
    let n = curve.len() - 1;
    let (r, z) = (curve.r()[n], curve.z()[n]);
    let pn = psi.normalized();
    let q = support(curve);
    let psi_integral = constraint_integral(curve, &pn)?;
    let q_integral = constraint_integral(curve, &q)?;
    let h = curve.sigma()[n] - curve.sigma()[n - 1];
    let dn_q = one_sided(&q, h);
    let dn_q_formula = 2.0 * r / z - 2.0 * c_o * r;
    let dn_psi = psi.dn_psi_end / psi.psi_end;
    let psi_bound = PI * r * dn_q / (c_o * z * z);
    let psi_green = PI * r / (c_o * z * z) * (dn_q - q[n] * dn_psi);
    let q_bound = PI * r * r / z;
    Ok(BoundChain {
        psi_integral,
        psi_bound,
        psi_green,
        q_integral,
        q_bound,
        dn_q,
        dn_q_formula,
        dn_psi,
        h_integral: (q[n] * psi_integral - q_integral) / c_o,
        h_bound: -2.0 * PI * r * r / (c_o * c_o * z * z) + PI * r * r / (c_o * z),
        psi_bound_holds: psi_integral < psi_bound,
        q_bound_holds: q_integral > q_bound,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeEigenvalues {
    pub mode: u32,
    /// Lowest ZSq Dirichlet eigenvalues; modes m ≥ 1 count twice on the surface.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticFormSample {
    pub id: String,
    pub second_variation_g: f64,
    pub second_variation_h: f64,
    pub second_variation_e: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Lowest full-surface ZSq eigenvalue.
    pub lambda1: f64,
    /// Second full-surface ZSq eigenvalue, with multiplicity.
    pub lambda2: f64,
    pub modes: Vec<ModeEigenvalues>,
    pub zero_band: f64,
    pub h_integral: Option<f64>,
    pub h_residual: Option<f64>,
    pub h_closed_form_error: Option<f64>,
    pub psi_boundary: Option<f64>,
    pub dn_psi_boundary: Option<f64>,
    pub verdict: Verdict,
    pub reason: String,
    pub quadratic_form_samples: Vec<QuadraticFormSample>,
    pub el_residuals: Option<ElReport>,
    pub bound_chain: Option<BoundChain>,
}

fn inapplicable(reason: String) -> StabilityReport {
    StabilityReport {
        lambda1: f64::NAN,
        lambda2: f64::NAN,
        modes: Vec::new(),
        zero_band: f64::NAN,
        h_integral: None,
        h_residual: None,
        h_closed_form_error: None,
        psi_boundary: None,
        dn_psi_boundary: None,
        verdict: Verdict::Inapplicable,
        reason,
        quadratic_form_samples: Vec::new(),
        el_residuals: None,
        bound_chain: None,
    }
}

fn sample(
    id: &str,
    op: &DiscreteOperator,
    curve: &ProfileCurve,
    f: &[f64],
) -> Result<QuadraticFormSample> {
    Ok(QuadraticFormSample {
        id: id.into(),
        second_variation_g: second_variation_g(op, f)?,
        second_variation_h: second_variation_h(op, curve, f)?.total,
        second_variation_e: second_variation_e(op, curve, f, curve.params())?.total,
    })
}

/// Constrained stability of an axially symmetric domain for 𝒢.
///
/// The gate uses the full-surface ZSq spectrum: mode 0 and the modes
/// `1..=EXTRA_MODES`, the latter with multiplicity two.
pub fn thmbif_verdict(curve: &ProfileCurve) -> Result<StabilityReport> {
    if !curve.in_half_space() {
        return Ok(inapplicable("surface meets the plane z = 0".into()));
    }
    let op0 = p_operator(curve, 0)?;
    let pairs0 = solve_dirichlet_spectrum(&op0, WeightKind::ZSq, 2)?;
    let mut modes = vec![ModeEigenvalues {
        mode: 0,
        lambda: pairs0.iter().map(|p| p.lambda).collect(),
    }];
    let mut all: Vec<f64> = modes[0].lambda.clone();
    for m in 1..=EXTRA_MODES {
        let op = p_operator(curve, m)?;
        let l = solve_dirichlet_spectrum(&op, WeightKind::ZSq, 1)?[0].lambda;
        all.extend([l, l]);
        modes.push(ModeEigenvalues {
            mode: m,
            lambda: vec![l],
        });
    }
    all.sort_by(f64::total_cmp);
    let (lambda1, lambda2) = (all[0], all[1]);
    let zero_band = ZERO_BAND * pairs0[1].lambda.abs();

    let f1: &EigenPair = &pairs0[0];
    let mut samples = vec![sample("f1", &op0, curve, &f1.f)?];
    let fields = geometric_fields(curve);
    let el = el_residuals_and_alpha_beta(curve, &fields, curve.params()).ok();

    let psi = shoot_psi(curve).ok();
    let horizontal = {
        let n = curve.len() - 1;
        let phi = curve.phi()[n];
        phi.sin().abs() < 1e-6 && phi.cos() < 0.0
    };
    let chain = match (&psi, horizontal) {
        (Some(p), true) => bound_chain(curve, p).ok(),
        _ => None,
    };

    let mut report = StabilityReport {
        lambda1,
        lambda2,
        modes,
        zero_band,
        h_integral: None,
        h_residual: None,
        h_closed_form_error: None,
        psi_boundary: psi.as_ref().map(|p| p.psi_end),
        dn_psi_boundary: psi.as_ref().map(|p| p.dn_psi_end),
        verdict: Verdict::Inapplicable,
        reason: String::new(),
        quadratic_form_samples: Vec::new(),
        el_residuals: el,
        bound_chain: chain,
    };

    // h is reported whenever it exists, even outside the gate
    let hsol = solve_h(&op0);
    if let Ok(hs) = &hsol {
        let hint = constraint_integral(curve, &hs.h)?;
        report.h_integral = Some(hint);
        report.h_residual = Some(hs.residual);
        if let Some(p) = &psi {
            if let Ok(hc) = closed_form_h(curve, p) {
                let err = hs.h.iter().zip(&hc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                report.h_closed_form_error = Some(err);
            }
        }
        samples.push(sample("h", &op0, curve, &hs.h)?);
        let c1 = constraint_integral(curve, &f1.f)?;
        if c1 != 0.0 {
            let mu = -hint / c1;
            let g: Vec<f64> = f1.f.iter().zip(&hs.h).map(|(a, b)| mu * a + b).collect();
            samples.push(sample("mu_f1_plus_h", &op0, curve, &g)?);
        }
    }
    report.quadratic_form_samples = samples;

    let (verdict, reason) = if lambda1 >= 0.0 {
        (Verdict::StableUnconstrained, "lambda1 >= 0".to_string())
    } else if lambda2 < -zero_band {
        (Verdict::UnstableTwoNegative, "lambda2 < 0".to_string())
    } else {
        match (&hsol, report.h_integral) {
            (Err(MembraneError::SingularOperator { .. }), _) => {
                (Verdict::Unstable, "no_solution".to_string())
            }
            (Err(e), _) => return Err(e.clone()),
            (Ok(_), Some(hint)) if hint <= 0.0 => (Verdict::Stable, "h_integral <= 0".to_string()),
            (Ok(_), _) => (Verdict::Unstable, "h_integral > 0".to_string()),
        }
    };
    report.verdict = verdict;
    report.reason = reason;
    Ok(report)
}
