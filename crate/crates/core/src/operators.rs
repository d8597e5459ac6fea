//! Finite-difference operators L, 𝓛, P, P* and F per Fourier mode.
//!
//! Second-order operators are stored in divergence form
//! `(1/(r w)) (r w f')' - m²/r² f + c f` with `w = z^p`, `p ∈ {0, -2, 2}`.
//! Fluxes live on half nodes, so the matrix weighted by the node masses
//! `r w h` (apex: `h² w / 8`) is exactly symmetric under Dirichlet closure.
//! Coefficients and products are evaluated in double-double: F multiplies
//! rounding errors by roughly `16 / h⁴`.

use std::io;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::dd::{Dd, Scalar};
use crate::error::{MembraneError, Result};
use crate::fields::surface_integral;
use crate::profile::{GridData, ProfileCurve};

/// Smallest interior node count accepted by `assemble_f`.
pub const MIN_F_INTERIOR: usize = 32;
/// Relative size of boundary values tolerated by `apply` under Dirichlet data.
pub const BC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Jacobi operator of the area: `Δ + ‖dν‖²`.
    L,
    /// `Δ + 2(H(H - c_o) - K)`.
    CalL,
    /// Jacobi operator of 𝒢.
    P,
    /// Adjoint of P with respect to `dΣ`.
    Pstar,
    /// `½ (P* + 2/z²) ∘ P`.
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApexBc {
    /// `f'(0) = 0`, mode 0 only.
    Regular,
    /// `f(0) = 0`, modes m ≥ 1.
    Vanishing,
    /// Domain does not contain the apex.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBc {
    Dirichlet,
    /// One-sided second-order closure, the operator acts on the full grid.
    Free,
}

/// Three-point rows for nodes `0..n` and a four-point one-sided row at `n`.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub n: usize,
    pub h: Dd,
    /// `r w` at half nodes `i + ½`.
    pub flux: Vec<Dd>,
    /// Node masses `r w h`, apex `h² w / 8`.
    pub mass: Vec<Dd>,
    /// Zero-order coefficient including `-m²/r²`.
    pub c: Vec<Dd>,
    /// `(lower, diagonal, upper)` for nodes `0..n`.
    rows: Vec<[Dd; 3]>,
    /// Coefficients of `f_n, f_{n-1}, f_{n-2}, f_{n-3}` in the last row.
    outer: [Dd; 4],
}

impl Stencil {
    fn new(g: &GridData, p: i32, mode: u32, coef: impl Fn(usize) -> Dd) -> Stencil {
        let n = g.n;
        let h = g.h;
        let m2 = f64::from(mode * mode);
        let flux: Vec<Dd> = (0..n).map(|i| g.rm[i] * g.zm[i].powi(p)).collect();
        let mass: Vec<Dd> = (0..=n)
            .map(|i| {
                if i == 0 {
                    h * h * g.z[0].powi(p) / 8.0
                } else {
                    g.r[i] * g.z[i].powi(p) * h
                }
            })
            .collect();
        let c: Vec<Dd> = (0..=n)
            .map(|i| {
                if i == 0 {
                    coef(0)
                } else {
                    coef(i) - Dd::from(m2) / (g.r[i] * g.r[i])
                }
            })
            .collect();
        let rows = (0..n)
            .map(|i| {
                let hm = h * mass[i];
                let lo = if i == 0 { Dd::ZERO } else { flux[i - 1] / hm };
                let up = flux[i] / hm;
                [lo, c[i] - lo - up, up]
            })
            .collect();
        let h2 = h * h;
        let a1 = g.cos[n] / g.r[n] + g.sin[n] * f64::from(p) / g.z[n];
        let d1 = a1 / (h * 2.0);
        let outer = [
            Dd::from(2.0) / h2 + d1 * 3.0 + c[n],
            Dd::from(-5.0) / h2 - d1 * 4.0,
            Dd::from(4.0) / h2 + d1,
            Dd::from(-1.0) / h2,
        ];
        Stencil {
            n,
            h,
            flux,
            mass,
            c,
            rows,
            outer,
        }
    }

    /// Full-grid action; row 0 is zero when `vanishing`.
    fn apply<S: Scalar>(&self, f: &[S], vanishing: bool) -> Vec<S> {
        let n = self.n;
        let mut out = Vec::with_capacity(n + 1);
        for (i, row) in self.rows.iter().enumerate() {
            if i == 0 {
                out.push(if vanishing {
                    S::zero()
                } else {
                    S::from_dd(row[1]) * f[0] + S::from_dd(row[2]) * f[1]
                });
            } else {
                out.push(
                    S::from_dd(row[0]) * f[i - 1]
                        + S::from_dd(row[1]) * f[i]
                        + S::from_dd(row[2]) * f[i + 1],
                );
            }
        }
        let o = &self.outer;
        out.push(
            S::from_dd(o[0]) * f[n]
                + S::from_dd(o[1]) * f[n - 1]
                + S::from_dd(o[2]) * f[n - 2]
                + S::from_dd(o[3]) * f[n - 3],
        );
        out
    }

    fn matrix(&self, vanishing: bool) -> BandMatrix {
        let n = self.n;
        let mut a = BandMatrix::zeros(n + 1, n + 1, 3, 1);
        for (i, row) in self.rows.iter().enumerate() {
            if i == 0 && vanishing {
                continue;
            }
            if i > 0 {
                a.set(i, i - 1, row[0].to_f64());
            }
            a.set(i, i, row[1].to_f64());
            a.set(i, i + 1, row[2].to_f64());
        }
        for (k, v) in self.outer.iter().enumerate() {
            a.set(n, n - k, v.to_f64());
        }
        a
    }
}

/// Pointwise curvature data shared by the coefficient formulas.
struct Curvatures {
    dnu2: Dd,
    mean: Dd,
    gauss: Dd,
    hc: Dd,
    inv_z2: Dd,
}

fn curvatures(g: &GridData, i: usize) -> Curvatures {
    let km = g.kappa_m(i);
    let kp = g.kappa_p(i);
    let mean = (km + kp) * 0.5;
    Curvatures {
        dnu2: km * km + kp * kp,
        mean,
        gauss: km * kp,
        hc: mean + g.c_o,
        inv_z2: Dd::ONE / (g.z[i] * g.z[i]),
    }
}

fn stencil_for(g: &GridData, kind: OperatorKind, mode: u32) -> Stencil {
    match kind {
        OperatorKind::L => Stencil::new(g, 0, mode, |i| curvatures(g, i).dnu2),
        OperatorKind::CalL => Stencil::new(g, 0, mode, |i| {
            let k = curvatures(g, i);
            (k.mean * (k.mean - g.c_o) - k.gauss) * 2.0
        }),
        OperatorKind::P => Stencil::new(g, -2, mode, |i| {
            let k = curvatures(g, i);
            k.dnu2 - k.hc * k.hc * 2.0
        }),
        OperatorKind::Pstar => Stencil::new(g, 2, mode, |i| {
            let k = curvatures(g, i);
            k.dnu2 - k.mean * k.hc * 4.0 - k.inv_z2 * 2.0
        }),
        OperatorKind::F => unreachable!("F is a composition"),
    }
}

/// A discretized operator on a uniform grid produced by `resample`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    kind: OperatorKind,
    mode: u32,
    bc_apex: ApexBc,
    bc_outer: OuterBc,
    sigma: Vec<f64>,
    grid: Arc<GridData>,
    /// For F this is `P* + 2/z²`.
    stencil: Stencil,
    /// The inner P of F.
    inner: Option<Stencil>,
}

fn check_grid(curve: &ProfileCurve, mode: u32, apex: ApexBc) -> Result<Arc<GridData>> {
    let grid = curve.grid_arc()?;
    match apex {
        ApexBc::None => {
            return Err(MembraneError::BoundaryCondition(
                "grid contains the apex; use Regular or Vanishing".into(),
            ))
        }
        ApexBc::Regular if mode > 0 => {
            return Err(MembraneError::BoundaryCondition(format!(
                "mode {mode} needs f(0) = 0 (Vanishing), not Regular"
            )))
        }
        ApexBc::Vanishing if mode == 0 => {
            return Err(MembraneError::BoundaryCondition(
                "mode 0 uses the Regular apex closure".into(),
            ))
        }
        _ => {}
    }
    if !curve.in_half_space() {
        return Err(MembraneError::HalfSpaceExit {
            sigma: curve.sigma_end(),
        });
    }
    Ok(grid)
}

/// Assemble L, 𝓛, P or P* for Fourier mode `mode`.
pub fn assemble(
    curve: &ProfileCurve,
    kind: OperatorKind,
    mode: u32,
    bc_apex: ApexBc,
    bc_outer: OuterBc,
) -> Result<DiscreteOperator> {
    if kind == OperatorKind::F {
        return Err(crate::error::invalid("kind", "use assemble_f for F"));
    }
    let grid = check_grid(curve, mode, bc_apex)?;
    let stencil = stencil_for(&grid, kind, mode);
    Ok(DiscreteOperator {
        kind,
        mode,
        bc_apex,
        bc_outer,
        sigma: curve.sigma().to_vec(),
        grid,
        stencil,
        inner: None,
    })
}

/// Default apex closure for a mode.
pub fn apex_bc_for(mode: u32) -> ApexBc {
    if mode == 0 {
        ApexBc::Regular
    } else {
        ApexBc::Vanishing
    }
}

/// Assemble `F = ½ (P* + 2/z²) ∘ P` acting on the full grid.
///
/// The intermediate `P[f]` gets its end values by extrapolation from the
/// interior: an even quartic fit at the apex for mode 0 (zero for m ≥ 1)
/// and a cubic fit at the rim.
pub fn assemble_f(curve: &ProfileCurve, mode: u32) -> Result<DiscreteOperator> {
    let bc_apex = apex_bc_for(mode);
    let grid = check_grid(curve, mode, bc_apex)?;
    let interior = grid.n - 1;
    if interior < MIN_F_INTERIOR {
        return Err(MembraneError::GridTooCoarse {
            interior,
            minimum: MIN_F_INTERIOR,
        });
    }
    let g = &grid;
    let outer = Stencil::new(g, 2, mode, |i| {
        let k = curvatures(g, i);
        k.dnu2 - k.mean * k.hc * 4.0
    });
    let inner = stencil_for(g, OperatorKind::P, mode);
    Ok(DiscreteOperator {
        kind: OperatorKind::F,
        mode,
        bc_apex,
        bc_outer: OuterBc::Free,
        sigma: curve.sigma().to_vec(),
        grid: grid.clone(),
        stencil: outer,
        inner: Some(inner),
    })
}

impl DiscreteOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }
    pub fn mode(&self) -> u32 {
        self.mode
    }
    pub fn bc_apex(&self) -> ApexBc {
        self.bc_apex
    }
    pub fn bc_outer(&self) -> OuterBc {
        self.bc_outer
    }
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
    /// Number of grid nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn step(&self) -> f64 {
        self.grid.h.to_f64()
    }
    pub(crate) fn grid(&self) -> &GridData {
        &self.grid
    }
    pub(crate) fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// Node indices that carry unknowns under the boundary conditions.
    pub fn unknowns(&self) -> Range<usize> {
        let start = usize::from(self.bc_apex == ApexBc::Vanishing);
        let end = match self.bc_outer {
            OuterBc::Dirichlet => self.len() - 1,
            OuterBc::Free => self.len(),
        };
        start..end
    }

    /// Node masses `r w h` (apex `h² w / 8`) making the Dirichlet matrix
    /// symmetric. For F these are the masses of the outer factor.
    pub fn mass(&self) -> Vec<f64> {
        self.stencil.mass.iter().map(|v| v.to_f64()).collect()
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(MembraneError::DimensionMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = BC_TOL * scale;
        if self.bc_outer == OuterBc::Dirichlet && f[f.len() - 1].abs() > tol {
            return Err(MembraneError::BoundaryCondition(format!(
                "Dirichlet data violated: f(σ_end) = {:e}",
                f[f.len() - 1]
            )));
        }
        if self.bc_apex == ApexBc::Vanishing && f[0].abs() > tol {
            return Err(MembraneError::BoundaryCondition(format!(
                "mode {} requires f(0) = 0, got {:e}",
                self.mode, f[0]
            )));
        }
        Ok(())
    }

    /// Full-grid action without boundary checks; eliminated rows are zero.
    pub(crate) fn apply_full<S: Scalar>(&self, f: &[S]) -> Vec<S> {
        let mut out = self.apply_free(f);
        if self.bc_outer == OuterBc::Dirichlet {
            let n = out.len() - 1;
            out[n] = S::zero();
        }
        out
    }

    /// Full-grid action with the one-sided closure kept at the rim.
    pub(crate) fn apply_free<S: Scalar>(&self, f: &[S]) -> Vec<S> {
        let vanishing = self.bc_apex == ApexBc::Vanishing;
        match &self.inner {
            None => self.stencil.apply(f, vanishing),
            Some(p) => {
                let mut g = p.apply(f, vanishing);
                let n = g.len() - 1;
                g[0] = if vanishing {
                    S::zero()
                } else {
                    g[1] * 1.5 - g[2] * 0.6 + g[3] * 0.1
                };
                g[n] = g[n - 1] * 4.0 - g[n - 2] * 6.0 + g[n - 3] * 4.0 - g[n - 4];
                self.stencil
                    .apply(&g, vanishing)
                    .into_iter()
                    .map(|v| v * 0.5)
                    .collect()
            }
        }
    }

    /// Apply to a full-grid vector. Rows removed by the boundary
    /// conditions are returned as zero.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let fd: Vec<Dd> = f.iter().map(|&v| Dd::from(v)).collect();
        Ok(self.apply_full(&fd).into_iter().map(|v| v.to_f64()).collect())
    }

    /// Same as `apply` with double-double input and output.
    pub fn apply_dd(&self, f: &[Dd]) -> Result<Vec<Dd>> {
        let hi: Vec<f64> = f.iter().map(|v| v.to_f64()).collect();
        self.check(&hi)?;
        Ok(self.apply_full(f))
    }

    /// Full-grid matrix, `(n+1) × (n+1)`, before boundary elimination.
    pub fn full_matrix(&self) -> BandMatrix {
        let vanishing = self.bc_apex == ApexBc::Vanishing;
        let q = self.stencil.matrix(vanishing);
        let Some(p) = &self.inner else {
            return q;
        };
        let pm = p.matrix(vanishing);
        let n = self.len() - 1;
        let mut hat = BandMatrix::zeros(n + 1, n + 1, 5, 4);
        for i in 1..n {
            for j in pm.row_cols(i) {
                hat.set(i, j, pm.get(i, j));
            }
        }
        let combine = |hat: &mut BandMatrix, row: usize, parts: &[(usize, f64)]| {
            for &(src, w) in parts {
                for j in pm.row_cols(src) {
                    let v = pm.get(src, j);
                    if v != 0.0 {
                        hat.add(row, j, w * v);
                    }
                }
            }
        };
        if !vanishing {
            combine(&mut hat, 0, &[(1, 1.5), (2, -0.6), (3, 0.1)]);
        }
        combine(
            &mut hat,
            n,
            &[(n - 1, 4.0), (n - 2, -6.0), (n - 3, 4.0), (n - 4, -1.0)],
        );
        let mut f = q.matmul(&hat);
        f.scale(0.5);
        f
    }

    /// Matrix restricted to `unknowns()`.
    pub fn matrix(&self) -> BandMatrix {
        self.full_matrix().restrict(self.unknowns())
    }

    /// Coordinate list of `matrix()` with grid-node indices.
    pub fn write_coo<W: io::Write>(&self, w: W) -> io::Result<()> {
        self.matrix().write_coo(w, self.unknowns().start)
    }
}

/// Identities checked by `identity_suite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    /// `(P + 2/z²)[f] - z 𝓛[f/z]`
    EasyP,
    /// `(P* + 2/z²)[f] - z⁻¹ 𝓛[z f]`
    EasyPstar,
    /// `P*[f/z²] - z⁻² P[f]`
    PPstar,
    /// `∫(g P f - f P* g) dΣ - ∮(g ∂_n f - f ∂_n g - 2 f g ∂_n z / z) ds`
    Adjoint,
    /// `P[ν₃] + 2ν₃/z²`
    PNu3,
    /// `P[q] - 2c_o`
    PQ,
    /// `F[ν₃]`
    FNu3,
    /// `P[ν_r]`, mode 1
    PNuR,
    /// `F[ν_r]`, mode 1
    FNuR,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub id: IdentityId,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n: usize,
    pub mode: u32,
    pub residuals: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn get(&self, id: IdentityId) -> Option<f64> {
        self.residuals.iter().find(|r| r.id == id).map(|r| r.residual)
    }
}

/// Probe functions of σ; mode m ≥ 1 multiplies them by σ^m.
#[derive(Debug, Clone, Copy)]
pub struct Probes {
    pub f: fn(Dd) -> Dd,
    pub g: fn(Dd) -> Dd,
}

fn probe_f(s: Dd) -> Dd {
    let s2 = s * s;
    Dd::ONE + s2 - s2 * s2 * 0.3
}

fn probe_g(s: Dd) -> Dd {
    let s2 = s * s;
    Dd::from(2.0) - s2 + s2 * s2 * 0.25
}

impl Default for Probes {
    fn default() -> Self {
        Probes {
            f: probe_f,
            g: probe_g,
        }
    }
}

/// Nodes with σ below this fraction of σ_end are excluded from the mode
/// m ≥ 1 norms, where `m²/r²` makes the truncation error non-uniform.
pub const OFF_AXIS_FRACTION: f64 = 0.1;

fn max_norm(v: &[Dd], range: Range<usize>) -> f64 {
    v[range].iter().fold(0.0f64, |m, x| m.max(x.to_f64().abs()))
}

/// Evaluate the operator identities with the default probes.
pub fn identity_suite(curve: &ProfileCurve, mode: u32) -> Result<IdentityReport> {
    identity_suite_with(curve, mode, Probes::default())
}

pub fn identity_suite_with(curve: &ProfileCurve, mode: u32, probes: Probes) -> Result<IdentityReport> {
    if mode > 1 {
        return Err(crate::error::invalid("mode", "identities are defined for modes 0 and 1"));
    }
    let bc = apex_bc_for(mode);
    let op = |kind| assemble(curve, kind, mode, bc, OuterBc::Free);
    let p = op(OperatorKind::P)?;
    let ps = op(OperatorKind::Pstar)?;
    let cal = op(OperatorKind::CalL)?;
    let fop = assemble_f(curve, mode)?;
    let g = p.grid();
    let n = g.n;

    let sig: Vec<Dd> = (0..=n).map(|i| g.h * i as f64).collect();
    let ang = |s: Dd| s.powi(mode as i32);
    let f: Vec<Dd> = sig.iter().map(|&s| (probes.f)(s) * ang(s)).collect();
    let gp: Vec<Dd> = sig.iter().map(|&s| (probes.g)(s) * ang(s)).collect();
    let z = &g.z;
    let inv_z2: Vec<Dd> = z.iter().map(|&z| Dd::ONE / (z * z)).collect();

    let range = if mode == 0 {
        0..n + 1
    } else {
        let start = (0..=n)
            .find(|&i| sig[i].to_f64() >= OFF_AXIS_FRACTION * curve.sigma_end())
            .unwrap_or(1);
        start..n + 1
    };

    let zip = |a: &[Dd], b: &[Dd], op: fn(Dd, Dd) -> Dd| -> Vec<Dd> {
        a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect::<Vec<_>>()
    };

    let mut out = Vec::new();
    let pf = p.apply_full(&f);

    // (i)
    let f_over_z = zip(&f, z, |a, b| a / b);
    let lz = cal.apply_full(&f_over_z);
    let r1: Vec<Dd> = (0..=n)
        .map(|i| pf[i] + f[i] * inv_z2[i] * 2.0 - z[i] * lz[i])
        .collect();
    out.push((IdentityId::EasyP, max_norm(&r1, range.clone())));

    // (ii)
    let psf = ps.apply_full(&f);
    let zf = zip(&f, z, |a, b| a * b);
    let lzf = cal.apply_full(&zf);
    let r2: Vec<Dd> = (0..=n)
        .map(|i| psf[i] + f[i] * inv_z2[i] * 2.0 - lzf[i] / z[i])
        .collect();
    out.push((IdentityId::EasyPstar, max_norm(&r2, range.clone())));

    // (iii)
    let f_z2 = zip(&f, &inv_z2, |a, b| a * b);
    let ps_fz2 = ps.apply_full(&f_z2);
    let r3: Vec<Dd> = (0..=n).map(|i| ps_fz2[i] - inv_z2[i] * pf[i]).collect();
    out.push((IdentityId::PPstar, max_norm(&r3, range.clone())));

    if mode == 0 {
        // (iv)
        let psg = ps.apply_full(&gp);
        let integrand: Vec<f64> = (0..=n)
            .map(|i| (gp[i] * pf[i] - f[i] * psg[i]).to_f64())
            .collect();
        let lhs = surface_integral(curve, &integrand, 0)?;
        let h = g.h;
        let dn = |v: &[Dd]| (v[n] * 3.0 - v[n - 1] * 4.0 + v[n - 2]) / (h * 2.0);
        let bnd = gp[n] * dn(&f) - f[n] * dn(&gp) - f[n] * gp[n] * g.sin[n] * 2.0 / z[n];
        let rhs = (bnd * g.r[n] * Dd::PI * 2.0).to_f64();
        out.push((IdentityId::Adjoint, (lhs - rhs).abs()));

        // (v)
        let pnu = p.apply_full(&g.cos);
        let r5: Vec<Dd> = (0..=n).map(|i| pnu[i] + g.cos[i] * inv_z2[i] * 2.0).collect();
        out.push((IdentityId::PNu3, max_norm(&r5, range.clone())));

        // (vi)
        let q: Vec<Dd> = (0..=n)
            .map(|i| z[i] * g.cos[i] - g.r[i] * g.sin[i])
            .collect();
        let pq = p.apply_full(&q);
        let r6: Vec<Dd> = pq.iter().map(|&v| v - g.c_o * 2.0).collect();
        out.push((IdentityId::PQ, max_norm(&r6, range.clone())));

        // (vii)
        let fnu = fop.apply_full(&g.cos);
        out.push((IdentityId::FNu3, max_norm(&fnu, range)));
    } else {
        let nur: Vec<Dd> = g.sin.iter().map(|&s| -s).collect();
        let pnu = p.apply_full(&nur);
        out.push((IdentityId::PNuR, max_norm(&pnu, range.clone())));
        let fnu = fop.apply_full(&nur);
        out.push((IdentityId::FNuR, max_norm(&fnu, range)));
    }

    Ok(IdentityReport {
        n,
        mode,
        residuals: out
            .into_iter()
            .map(|(id, residual)| IdentityResidual { id, residual })
            .collect(),
    })
}

/// Residuals of one identity across grids with the fitted order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub id: IdentityId,
    pub n: Vec<usize>,
    pub residuals: Vec<f64>,
    pub order: f64,
}

/// Least-squares slope of `ln e` against `-ln n`.
pub fn fitted_order(ns: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Run `identity_suite` on `resample(curve, n)` for each `n` and fit orders.
pub fn convergence_study(curve: &ProfileCurve, ns: &[usize], mode: u32) -> Result<Vec<ConvergenceFit>> {
    let reports = ns
        .iter()
        .map(|&n| identity_suite(&crate::profile::resample(curve, n)?, mode))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<IdentityId> = reports[0].residuals.iter().map(|r| r.id).collect();
    Ok(ids
        .into_iter()
        .map(|id| {
            let residuals: Vec<f64> = reports.iter().map(|r| r.get(id).unwrap_or(f64::NAN)).collect();
            ConvergenceFit {
                id,
                n: ns.to_vec(),
                order: fitted_order(ns, &residuals),
                residuals,
            }
        })
        .collect())
}
