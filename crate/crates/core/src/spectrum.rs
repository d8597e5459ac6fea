//! Dirichlet eigenproblems `P[f] + λ ρ f = 0` with `ρ = z⁻²` or `ρ = z²`.
//!
//! The mass-weighted matrix `-D A` is symmetric tridiagonal, so the pencil
//! `(-D A, D ρ)` is solved by Sturm bisection on the scaled matrix and then
//! polished by inverse iteration in double-double.

use std::io;

use serde::{Deserialize, Serialize};

use crate::banded::solve_tridiagonal;
use crate::dd::Dd;
use crate::error::{MembraneError, Result};
use crate::fields::angular_factor;
use crate::io::fmt_f64;
use crate::operators::{DiscreteOperator, OperatorKind, OuterBc};
use crate::profile::ProfileCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// `P[f] + λ f / z² = 0`
    InvZSq,
    /// `P[f] + λ z² f = 0`
    ZSq,
}

impl WeightKind {
    pub fn eval(self, z: Dd) -> Dd {
        match self {
            WeightKind::InvZSq => Dd::ONE / (z * z),
            WeightKind::ZSq => z * z,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    /// Full-grid eigenfunction; eliminated boundary nodes hold zero.
    pub f: Vec<f64>,
    /// `‖P f + λ ρ f‖_∞ / ‖f‖_∞`
    pub residual: f64,
    pub sign_changes: usize,
    #[serde(skip)]
    pub(crate) f_dd: Vec<Dd>,
    #[serde(skip)]
    pub(crate) lambda_dd: Dd,
}

impl EigenPair {
    pub fn f_dd(&self) -> &[Dd] {
        &self.f_dd
    }
}

/// One line of the spectrum report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub mode: u32,
    pub weight: WeightKind,
    pub lambda: f64,
    pub residual: f64,
    pub sign_changes: usize,
}

pub fn spectrum_entries(mode: u32, weight: WeightKind, pairs: &[EigenPair]) -> Vec<SpectrumEntry> {
    pairs
        .iter()
        .map(|p| SpectrumEntry {
            mode,
            weight,
            lambda: p.lambda,
            residual: p.residual,
            sign_changes: p.sign_changes,
        })
        .collect()
}

/// Symmetric pencil on the unknowns: `a` is `-D A`, `b` is `D ρ`.
pub(crate) struct Pencil {
    pub start: usize,
    pub diag: Vec<Dd>,
    pub off: Vec<Dd>,
    pub b: Vec<Dd>,
}

pub(crate) fn pencil(op: &DiscreteOperator, weight: WeightKind) -> Result<Pencil> {
    if op.kind() == OperatorKind::F {
        return Err(crate::error::invalid("op", "the eigenproblem needs a second-order operator"));
    }
    if op.bc_outer() != OuterBc::Dirichlet {
        return Err(MembraneError::BoundaryCondition(
            "the eigenproblem needs the Dirichlet outer closure".into(),
        ));
    }
    let st = op.stencil();
    let g = op.grid();
    let idx = op.unknowns();
    let h = st.h;
    let mut diag = Vec::with_capacity(idx.len());
    let mut b = Vec::with_capacity(idx.len());
    for i in idx.clone() {
        let left = if i == 0 { Dd::ZERO } else { st.flux[i - 1] };
        diag.push((left + st.flux[i]) / h - st.c[i] * st.mass[i]);
        let w = st.mass[i] * weight.eval(g.z[i]);
        if !(w.to_f64() > 0.0 && w.to_f64().is_finite()) {
            return Err(MembraneError::DegenerateWeight { index: i });
        }
        b.push(w);
    }
    let off = idx.clone().skip(1).map(|i| -(st.flux[i - 1] / h)).collect();
    Ok(Pencil {
        start: idx.start,
        diag,
        off,
        b,
    })
}

impl Pencil {
    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Scaled symmetric tridiagonal `B^{-1/2} A B^{-1/2}` in `f64`.
    fn scaled(&self) -> (Vec<f64>, Vec<f64>) {
        let a = (0..self.len()).map(|i| (self.diag[i] / self.b[i]).to_f64()).collect();
        let e = (0..self.len() - 1)
            .map(|i| (self.off[i] / (self.b[i] * self.b[i + 1]).sqrt()).to_f64())
            .collect();
        (a, e)
    }

    fn apply(&self, x: &[Dd]) -> Vec<Dd> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    fn rayleigh(&self, x: &[Dd]) -> Dd {
        let ax = self.apply(x);
        let num: Dd = x.iter().zip(&ax).map(|(&a, &b)| a * b).sum();
        let den: Dd = x.iter().zip(&self.b).map(|(&a, &w)| a * a * w).sum();
        num / den
    }

    fn shifted_solve(&self, shift: Dd, rhs: &[Dd]) -> Option<Vec<Dd>> {
        let d: Vec<Dd> = (0..self.len()).map(|i| self.diag[i] - shift * self.b[i]).collect();
        solve_tridiagonal(&self.off, &d, &self.off, rhs)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(a, e)` below `x`.
fn sturm_count(a: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..a.len() {
        let e2 = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = a[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(a: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..a.len() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    (lo, hi)
}

/// The `k`-th (0-based) eigenvalue by bisection.
fn bisect_eigenvalue(a: &[f64], e: &[f64], k: usize, bounds: (f64, f64)) -> f64 {
    let (mut lo, mut hi) = bounds;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

const MAX_POLISH: usize = 12;

/// Number of Dirichlet eigenvalues of the pencil strictly below `x`.
pub fn count_below(op: &DiscreteOperator, weight: WeightKind, x: f64) -> Result<usize> {
    let p = pencil(op, weight)?;
    let (a, e) = p.scaled();
    Ok(sturm_count(&a, &e, x))
}

/// Lowest `k` eigenpairs, ascending.
pub fn solve_dirichlet_spectrum(
    op: &DiscreteOperator,
    weight: WeightKind,
    k: usize,
) -> Result<Vec<EigenPair>> {
    let p = pencil(op, weight)?;
    let n = p.len();
    if k == 0 || k > n {
        return Err(crate::error::invalid("k", format!("must lie in 1..={n}")));
    }
    let (a, e) = p.scaled();
    let (glo, ghi) = gershgorin(&a, &e);
    let pad = 1e-12 * glo.abs().max(ghi.abs()).max(1.0);
    let bounds = (glo - pad, ghi + pad);
    let ang = angular_factor(op.mode());
    let full = op.len();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let lam0 = bisect_eigenvalue(&a, &e, j, bounds);
        let mut lam = Dd::from(lam0);
        let mut x: Vec<Dd> = (0..n)
            .map(|i| Dd::ONE + ((i as f64) * 0.618).sin() * 0.1)
            .collect();
        let mut converged = false;
        let mut change = f64::INFINITY;
        for it in 0..MAX_POLISH {
            let rhs: Vec<Dd> = (0..n).map(|i| x[i] * p.b[i]).collect();
            let Some(y) = p.shifted_solve(lam, &rhs) else {
                // exact hit: the shift is an eigenvalue to working precision
                lam += Dd::from(lam0.abs().max(1.0) * 1e-28);
                continue;
            };
            let norm = y.iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
            x = y.into_iter().map(|v| v / norm).collect();
            if it >= 1 {
                let next = p.rayleigh(&x);
                change = (next - lam).to_f64().abs();
                lam = next;
                if change <= 1e-26 * lam0.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
        }
        if !converged && !(change <= 1e-20 * lam0.abs().max(1.0)) {
            return Err(MembraneError::ConvergenceFailure {
                what: "inverse iteration".into(),
                iterations: MAX_POLISH,
                residual: change,
            });
        }
        if (lam.to_f64() - lam0).abs() > 1e-6 * lam0.abs().max(1.0) {
            log::warn!("eigenvalue {j}: polish moved {lam0} to {}", lam.to_f64());
        }

        // normalize: Σ b f² times the angular factor is one
        let nrm: Dd = x.iter().zip(&p.b).map(|(&v, &w)| v * v * w).sum::<Dd>() * ang;
        let s = nrm.sqrt();
        let mut f_dd = vec![Dd::ZERO; full];
        for i in 0..n {
            f_dd[p.start + i] = x[i] / s;
        }
        let fmax = f_dd.iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
        if let Some(first) = f_dd.iter().find(|v| v.to_f64().abs() > 1e-8 * fmax) {
            if first.to_f64() < 0.0 {
                f_dd.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let residual = eigen_residual(op, weight, lam, &f_dd);
        let f: Vec<f64> = f_dd.iter().map(|v| v.to_f64()).collect();
        out.push(EigenPair {
            lambda: lam.to_f64(),
            sign_changes: sign_changes(&f[op.unknowns()]),
            residual,
            f,
            f_dd,
            lambda_dd: lam,
        });
    }
    Ok(out)
}

fn eigen_residual(op: &DiscreteOperator, weight: WeightKind, lam: Dd, f: &[Dd]) -> f64 {
    let pf = op.apply_full(f);
    let z = &op.grid().z;
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.to_f64().abs()));
    op.unknowns()
        .map(|i| (pf[i] + lam * weight.eval(z[i]) * f[i]).to_f64().abs())
        .fold(0.0, f64::max)
        / fmax
}

/// Interior sign changes, ignoring entries below `1e-10` of the maximum.
pub fn sign_changes(f: &[f64]) -> usize {
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in f {
        if v.abs() <= 1e-10 * fmax {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Discrete inner product `∫ f g ω ρ dΣ` over the unknowns, where `ω`
/// is the operator's own weight (`z⁻²` for P).
pub fn weighted_inner(op: &DiscreteOperator, weight: WeightKind, f: &[f64], g: &[f64]) -> f64 {
    let st = op.stencil();
    let z = &op.grid().z;
    let s: Dd = op
        .unknowns()
        .map(|i| st.mass[i] * weight.eval(z[i]) * f[i] * g[i])
        .sum();
    s.to_f64() * angular_factor(op.mode())
}

/// `-∫ f P[f] z⁻² dΣ / ∫ f² z⁻² ρ dΣ` on the discrete pencil.
pub fn rayleigh_quotient(op: &DiscreteOperator, f: &[f64], weight: WeightKind) -> Result<f64> {
    let p = pencil(op, weight)?;
    if f.len() != op.len() {
        return Err(MembraneError::DimensionMismatch {
            expected: op.len(),
            got: f.len(),
        });
    }
    op.apply(f)?;
    let x: Vec<Dd> = op.unknowns().map(|i| Dd::from(f[i])).collect();
    let ax = p.apply(&x);
    let num: Dd = x.iter().zip(&ax).map(|(&a, &b)| a * b).sum();
    let den: Dd = x.iter().zip(&p.b).map(|(&a, &w)| a * a * w).sum();
    if den.to_f64() == 0.0 {
        return Err(MembraneError::ZeroDenominator("rayleigh quotient"));
    }
    Ok((num / den).to_f64())
}

/// `‖F[f] - ½ λ (λ - 2) f / z⁴‖_∞` for an `InvZSq` eigenpair.
pub fn fp_consistency(op_f: &DiscreteOperator, pair: &EigenPair, curve: &ProfileCurve) -> Result<f64> {
    if op_f.kind() != OperatorKind::F {
        return Err(crate::error::invalid("op_f", "expected the F operator"));
    }
    if pair.f_dd.len() != op_f.len() || curve.len() != op_f.len() {
        return Err(MembraneError::DimensionMismatch {
            expected: op_f.len(),
            got: pair.f_dd.len(),
        });
    }
    let ff = op_f.apply_full(&pair.f_dd);
    let lam = pair.lambda_dd;
    let c = lam * (lam - 2.0) * 0.5;
    let z = &op_f.grid().z;
    Ok((0..ff.len())
        .map(|i| {
            let z4 = (z[i] * z[i]).powi(2);
            (ff[i] - c * pair.f_dd[i] / z4).to_f64().abs()
        })
        .fold(0.0, f64::max))
}

/// Eigenfunctions as CSV columns `sigma,f1,f2,...`.
pub fn write_eigenfunctions_csv<W: io::Write>(sigma: &[f64], pairs: &[EigenPair], w: W) -> io::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["sigma".to_string()];
    header.extend((1..=pairs.len()).map(|k| format!("f{k}")));
    wr.write_record(&header)?;
    for (i, s) in sigma.iter().enumerate() {
        let mut rec = vec![fmt_f64(*s)];
        rec.extend(pairs.iter().map(|p| fmt_f64(p.f[i])));
        wr.write_record(&rec)?;
    }
    wr.flush()
}
