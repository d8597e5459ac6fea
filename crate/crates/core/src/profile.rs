//! Generating curves of axially symmetric solutions of the reduced membrane
//! equation `H + c_o = -nu3 / z`.
//!
//! Conventions: `r' = cos phi`, `z' = sin phi`, unit normal
//! `nu = (-sin phi cos t, -sin phi sin t, cos phi)`, principal curvatures
//! `kappa_m = phi'` and `kappa_p = sin phi / r`, `2H = kappa_m + kappa_p`.

use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{invalid, MembraneError, Result};
use crate::io::fmt_f64;
use crate::ode::{bisect, Dopri5, Segment};

/// Largest accepted step of the adaptive integrator; keeps the stored
/// samples fine enough for the finite-difference curvature in `fields`.
const H_MAX: f64 = 0.005;
/// `|phi'|` above this aborts the integration.
pub const BLOWUP_BOUND: f64 = 1e6;
/// Event refinement tolerance in sigma.
pub const EVENT_TOL: f64 = 1e-12;
/// `ZApproachesZero` fires when `|z|` drops to this fraction of `|z_hat|`.
pub const Z_FLOOR: f64 = 1e-4;
/// Smallest node count accepted by `resample`.
pub const MIN_NODES: usize = 16;
/// Target sub-step of the double-double resampling integrator.
const RESAMPLE_SUBSTEP: f64 = 2e-4;
const MAX_STEPS: usize = 2_000_000;
/// Ratio of the per-step tolerance to the requested global tolerance.
const LOCAL_TOL_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    c_o: f64,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    c_o: f64,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = MembraneError;
    fn try_from(p: RawParams) -> Result<Self> {
        ModelParams::new(p.c_o, p.a, p.b, p.alpha, p.beta)
    }
}

impl ModelParams {
    pub fn new(c_o: f64, a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !c_o.is_finite() {
            return Err(invalid("c_o", "must be finite"));
        }
        if !b.is_finite() {
            return Err(invalid("b", "must be finite"));
        }
        for (name, v) in [("a", a), ("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(ModelParams {
            c_o,
            a,
            b,
            alpha,
            beta,
        })
    }

    /// `a = alpha = beta = 1`, `b = 0`.
    pub fn with_co(c_o: f64) -> Result<Self> {
        Self::new(c_o, 1.0, 0.0, 1.0, 1.0)
    }

    pub fn c_o(&self) -> f64 {
        self.c_o
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_boundary(&self, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(self.c_o, self.a, self.b, alpha, beta)
    }

    pub fn with_bending(&self, a: f64, b: f64) -> Result<Self> {
        Self::new(self.c_o, a, b, self.alpha, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApexInit {
    z_hat: f64,
}

impl ApexInit {
    pub fn new(z_hat: f64) -> Result<Self> {
        if z_hat == 0.0 || !z_hat.is_finite() {
            return Err(invalid("z_hat", "must be finite and nonzero"));
        }
        Ok(ApexInit { z_hat })
    }

    pub fn z_hat(&self) -> f64 {
        self.z_hat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopKind {
    RPrimeZero,
    PhiReachesMinusPi,
    ZApproachesZero,
    SigmaMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopRule {
    pub kind: StopKind,
    sigma_max: f64,
}

impl StopRule {
    pub fn new(kind: StopKind, sigma_max: f64) -> Result<Self> {
        if !(sigma_max > 0.0 && sigma_max.is_finite()) {
            return Err(invalid("sigma_max", "must be positive and finite"));
        }
        Ok(StopRule { kind, sigma_max })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Event function; every kind starts positive at the apex and the event
    /// is its first zero.
    fn value(&self, y: &[f64; 3], z_hat: f64) -> f64 {
        match self.kind {
            StopKind::RPrimeZero => y[2].cos(),
            StopKind::PhiReachesMinusPi => y[2] + std::f64::consts::PI,
            StopKind::ZApproachesZero => y[1] * z_hat.signum() - Z_FLOOR * z_hat.abs(),
            StopKind::SigmaMax => 1.0,
        }
    }
}

/// Apex slope `phi'(0) = -(1/z_hat + c_o)`.
pub fn apex_slope(c_o: f64, z_hat: f64) -> f64 {
    -(1.0 / z_hat + c_o)
}

/// Default start offset `max(1e-6, 1e-3 min(|z_hat|, 1/(1+|c_o|)))`.
pub fn default_delta(c_o: f64, z_hat: f64) -> f64 {
    (1e-3 * z_hat.abs().min(1.0 / (1.0 + c_o.abs()))).max(1e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApexState {
    pub r: f64,
    pub z: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy)]
struct Series {
    z_hat: f64,
    k: f64,
    c: f64,
}

impl Series {
    fn new(c_o: f64, z_hat: f64) -> Self {
        let k = apex_slope(c_o, z_hat);
        Series {
            z_hat,
            k,
            c: -k * c_o / (4.0 * z_hat),
        }
    }

    fn eval(&self, s: f64) -> [f64; 3] {
        let (k, c) = (self.k, self.c);
        let s2 = s * s;
        [
            s - k * k * s2 * s / 6.0,
            self.z_hat + 0.5 * k * s2 + (0.25 * c - k * k * k / 24.0) * s2 * s2,
            k * s + c * s2 * s,
        ]
    }
}

/// Series state at `sigma = delta`, regularizing the `sin phi / r` term.
pub fn apex_expansion(params: &ModelParams, init: &ApexInit, delta: f64) -> Result<ApexState> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "must be positive"));
    }
    let [r, z, phi] = Series::new(params.c_o, init.z_hat).eval(delta);
    Ok(ApexState { r, z, phi })
}

fn rhs(c_o: f64, y: &[f64; 3]) -> [f64; 3] {
    let (s, c) = y[2].sin_cos();
    [c, s, -2.0 * c / y[1] - s / y[0] - 2.0 * c_o]
}

#[derive(Debug)]
struct DenseProfile {
    delta: f64,
    series: Series,
    segments: Vec<Segment<3>>,
}

impl DenseProfile {
    fn eval(&self, s: f64) -> [f64; 3] {
        if s <= self.delta || self.segments.is_empty() {
            return if s <= 0.0 {
                [0.0, self.series.z_hat, 0.0]
            } else {
                self.series.eval(s)
            };
        }
        let i = self
            .segments
            .partition_point(|seg| seg.t1 < s)
            .min(self.segments.len() - 1);
        self.segments[i].eval(s)
    }
}

/// Uniform-grid geometry in double-double, produced by `resample`.
#[derive(Debug)]
pub(crate) struct GridData {
    pub n: usize,
    pub h: Dd,
    pub c_o: Dd,
    pub k: Dd,
    pub r: Vec<Dd>,
    pub z: Vec<Dd>,
    pub sin: Vec<Dd>,
    pub cos: Vec<Dd>,
    pub rm: Vec<Dd>,
    pub zm: Vec<Dd>,
}

impl GridData {
    /// `kappa_p = sin phi / r`, with the apex limit at node 0.
    pub fn kappa_p(&self, i: usize) -> Dd {
        if i == 0 {
            self.k
        } else {
            self.sin[i] / self.r[i]
        }
    }

    /// `kappa_m = phi'` from the profile ODE.
    pub fn kappa_m(&self, i: usize) -> Dd {
        if i == 0 {
            self.k
        } else {
            -(self.cos[i] * 2.0) / self.z[i] - self.kappa_p(i) - self.c_o * 2.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProfileCurve {
    sigma: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    phi: Vec<f64>,
    event_sigma: Option<f64>,
    event_kind: Option<StopKind>,
    params: ModelParams,
    z_hat: f64,
    apex_slope: f64,
    dense: Option<Arc<DenseProfile>>,
    grid: Option<Arc<GridData>>,
}

impl ProfileCurve {
    /// Wrap externally produced samples. The curve has no dense output, so
    /// it cannot be resampled; quadratures and pointwise fields still work.
    pub fn from_samples(
        sigma: Vec<f64>,
        r: Vec<f64>,
        z: Vec<f64>,
        phi: Vec<f64>,
        params: ModelParams,
    ) -> Result<Self> {
        let n = sigma.len();
        if n < 3 {
            return Err(invalid("sigma", "need at least 3 samples"));
        }
        for len in [r.len(), z.len(), phi.len()] {
            if len != n {
                return Err(MembraneError::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if sigma.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sigma", "must be strictly increasing"));
        }
        if sigma
            .iter()
            .chain(&r)
            .chain(&z)
            .chain(&phi)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("samples", "must be finite"));
        }
        let z_hat = z[0];
        if z_hat == 0.0 {
            return Err(invalid("z", "first sample must be off the plane z = 0"));
        }
        Ok(ProfileCurve {
            apex_slope: apex_slope(params.c_o, z_hat),
            sigma,
            r,
            z,
            phi,
            event_sigma: None,
            event_kind: None,
            params,
            z_hat,
            dense: None,
            grid: None,
        })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn z(&self) -> &[f64] {
        &self.z
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    pub fn event_sigma(&self) -> Option<f64> {
        self.event_sigma
    }
    pub fn event_kind(&self) -> Option<StopKind> {
        self.event_kind
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn z_hat(&self) -> f64 {
        self.z_hat
    }
    pub fn apex_slope(&self) -> f64 {
        self.apex_slope
    }
    pub fn len(&self) -> usize {
        self.sigma.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
    pub fn sigma_end(&self) -> f64 {
        *self.sigma.last().expect("curves are never empty")
    }
    /// True when produced by `resample`.
    pub fn is_uniform(&self) -> bool {
        self.grid.is_some()
    }
    /// Node count minus one on a uniform grid.
    pub fn intervals(&self) -> usize {
        self.sigma.len() - 1
    }
    pub fn has_apex(&self) -> bool {
        self.sigma[0] == 0.0 && self.r[0] == 0.0
    }

    /// Replace `a, b, alpha, beta`; `c_o` is tied to the ODE and must match.
    pub fn with_params(&self, params: ModelParams) -> Result<Self> {
        if params.c_o != self.params.c_o {
            return Err(invalid("c_o", "differs from the value the curve was integrated with"));
        }
        let mut out = self.clone();
        out.params = params;
        Ok(out)
    }

    /// `(r, z, phi)` from the dense output, if available.
    pub fn dense_eval(&self, s: f64) -> Option<[f64; 3]> {
        self.dense.as_ref().map(|d| d.eval(s))
    }

    pub(crate) fn grid_arc(&self) -> Result<Arc<GridData>> {
        self.grid.clone().ok_or(MembraneError::NotUniform)
    }

    /// Sign of `z` is the same at every node.
    pub fn in_half_space(&self) -> bool {
        let s = self.z[0].signum();
        self.z.iter().all(|&z| z.signum() == s && z != 0.0)
    }

    /// Write `sigma,r,z,phi` with 17 significant digits.
    pub fn write_csv<W: io::Write>(&self, w: W) -> io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["sigma", "r", "z", "phi"])?;
        for i in 0..self.len() {
            wr.write_record([
                fmt_f64(self.sigma[i]),
                fmt_f64(self.r[i]),
                fmt_f64(self.z[i]),
                fmt_f64(self.phi[i]),
            ])?;
        }
        wr.flush()
    }
}

/// Integrate from the apex until the stop rule fires.
pub fn integrate_profile(
    params: &ModelParams,
    init: &ApexInit,
    stop: &StopRule,
    tol: f64,
) -> Result<ProfileCurve> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", "must lie in (0, 1)"));
    }
    let c_o = params.c_o;
    let z_hat = init.z_hat;
    let series = Series::new(c_o, z_hat);
    let delta = default_delta(c_o, z_hat);
    let sigma_max = stop.sigma_max;
    if delta >= sigma_max {
        return Err(invalid("sigma_max", "shorter than the apex start offset"));
    }

    let y0 = series.eval(delta);
    // local error control is tightened so the global error tracks `tol`
    let local_tol = (tol * LOCAL_TOL_FACTOR).max(1e-15);
    let mut st = Dopri5::new(move |_, y: &[f64; 3]| rhs(c_o, y), delta, y0, local_tol, H_MAX);
    let mut sigma = vec![0.0, delta];
    let mut ys = vec![[0.0, z_hat, 0.0], y0];
    let mut segments = Vec::new();
    let mut event = None;

    for _ in 0..MAX_STEPS {
        let seg = st.step(sigma_max)?;
        let y1 = seg.end();
        let curv = rhs(c_o, &y1)[2];
        if !curv.is_finite() || curv.abs() > BLOWUP_BOUND {
            return Err(MembraneError::SingularBlowup {
                sigma: seg.t1,
                phi_prime: curv,
            });
        }

        if stop.kind != StopKind::SigmaMax && stop.value(&y1, z_hat) <= 0.0 {
            let s_ev = bisect(|t| stop.value(&seg.eval(t), z_hat), seg.t0, seg.t1, EVENT_TOL);
            let y_ev = seg.eval(s_ev);
            // z may vanish at the event itself (the unit sphere's equator);
            // only a crossing strictly before it leaves the half-space
            if y_ev[1] * z_hat < 0.0 {
                let s_z = bisect(|t| seg.eval(t)[1] * z_hat, seg.t0, s_ev, EVENT_TOL);
                if s_z < s_ev - 1e3 * EVENT_TOL {
                    return Err(MembraneError::HalfSpaceExit { sigma: s_z });
                }
            }
            sigma.push(s_ev);
            ys.push(y_ev);
            segments.push(seg);
            event = Some(s_ev);
            break;
        }
        if y1[1] * z_hat <= 0.0 {
            return Err(MembraneError::HalfSpaceExit { sigma: seg.t1 });
        }
        sigma.push(seg.t1);
        ys.push(y1);
        segments.push(seg);
        if st.t() >= sigma_max {
            break;
        }
    }

    if event.is_none() {
        if st.t() < sigma_max {
            return Err(MembraneError::ConvergenceFailure {
                what: "profile integration".into(),
                iterations: MAX_STEPS,
                residual: st.t(),
            });
        }
        if stop.kind != StopKind::SigmaMax {
            return Err(MembraneError::EventNotFound {
                kind: stop.kind,
                sigma_max,
            });
        }
    }
    log::debug!(
        "integrated c_o={c_o} z_hat={z_hat}: {} steps, end sigma {}",
        segments.len(),
        sigma.last().unwrap()
    );

    Ok(ProfileCurve {
        r: ys.iter().map(|y| y[0]).collect(),
        z: ys.iter().map(|y| y[1]).collect(),
        phi: ys.iter().map(|y| y[2]).collect(),
        sigma,
        event_sigma: event,
        event_kind: event.map(|_| stop.kind),
        params: *params,
        z_hat,
        apex_slope: series.k,
        dense: Some(Arc::new(DenseProfile {
            delta,
            series,
            segments,
        })),
        grid: None,
    })
}

/// Refined event parameter. Idempotent on curves that already end at an
/// event of the same kind.
pub fn locate_event(curve: &ProfileCurve, rule: &StopRule) -> Result<f64> {
    if rule.kind == StopKind::SigmaMax {
        return Ok(rule.sigma_max.min(curve.sigma_end()));
    }
    if curve.event_kind == Some(rule.kind) {
        if let Some(s) = curve.event_sigma {
            return Ok(s);
        }
    }
    let z_hat = curve.z_hat;
    let g = |i: usize| rule.value(&[curve.r[i], curve.z[i], curve.phi[i]], z_hat);
    let not_found = MembraneError::EventNotFound {
        kind: rule.kind,
        sigma_max: curve.sigma_end(),
    };
    let i = (1..curve.len())
        .find(|&i| g(i) <= 0.0 && g(i - 1) > 0.0)
        .ok_or(not_found)?;
    let (a, b) = (curve.sigma[i - 1], curve.sigma[i]);
    Ok(match &curve.dense {
        Some(d) => bisect(|t| rule.value(&d.eval(t), z_hat), a, b, EVENT_TOL),
        None => {
            let (ga, gb) = (g(i - 1), g(i));
            a + (b - a) * ga / (ga - gb)
        }
    })
}

fn rhs_dd(y: &[Dd; 3], two_co: Dd, k: Dd) -> [Dd; 3] {
    let (s, c) = y[2].sin_cos();
    let kp = if y[0].hi() == 0.0 { k } else { s / y[0] };
    [c, s, -(c * 2.0) / y[1] - kp - two_co]
}

fn rk4_dd(y: &[Dd; 3], hs: Dd, two_co: Dd, k: Dd) -> [Dd; 3] {
    let add = |y: &[Dd; 3], a: &[Dd; 3], f: Dd| -> [Dd; 3] {
        [y[0] + a[0] * f, y[1] + a[1] * f, y[2] + a[2] * f]
    };
    let half = hs * 0.5;
    let k1 = rhs_dd(y, two_co, k);
    let k2 = rhs_dd(&add(y, &k1, half), two_co, k);
    let k3 = rhs_dd(&add(y, &k2, half), two_co, k);
    let k4 = rhs_dd(&add(y, &k3, hs), two_co, k);
    let sixth = hs / 6.0;
    std::array::from_fn(|j| y[j] + (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * sixth)
}

/// Re-integrate on `n + 1` uniform nodes over `[0, sigma_end]`.
///
/// The uniform grid is produced by a fixed-step RK4 run in double-double
/// starting at the apex, with node and midpoint values recorded exactly on
/// the grid. Fourth-order operators built on this grid need the geometry to
/// be smooth well below `f64` rounding, which re-evaluating the `f64` dense
/// output cannot provide.
pub fn resample(curve: &ProfileCurve, n: usize) -> Result<ProfileCurve> {
    if n < MIN_NODES {
        return Err(invalid(
            "n",
            format!("need at least {MIN_NODES} intervals, got {n}"),
        ));
    }
    if curve.dense.is_none() && curve.grid.is_none() {
        return Err(invalid(
            "curve",
            "resampling needs an integrated curve (samples carry no ODE data)",
        ));
    }
    let sigma_end = curve.sigma_end();
    let c_o = Dd::from_f64(curve.params.c_o);
    let z_hat = Dd::from_f64(curve.z_hat);
    let k = -(Dd::ONE / z_hat + c_o);
    let two_co = c_o * 2.0;
    let h = Dd::from_f64(sigma_end) / n as f64;

    let mut sub = (h.to_f64() / RESAMPLE_SUBSTEP).ceil() as usize;
    sub = sub.max(2);
    sub += sub % 2;
    let hs = h / sub as f64;

    let mut y = [Dd::ZERO, z_hat, Dd::ZERO];
    let mut r = vec![y[0]];
    let mut z = vec![y[1]];
    let mut phi = vec![y[2]];
    let mut rm = Vec::with_capacity(n);
    let mut zm = Vec::with_capacity(n);
    for _ in 0..n {
        for j in 0..sub {
            y = rk4_dd(&y, hs, two_co, k);
            if j + 1 == sub / 2 {
                rm.push(y[0]);
                zm.push(y[1]);
            }
        }
        r.push(y[0]);
        z.push(y[1]);
        phi.push(y[2]);
    }
    if z.iter().any(|v| v.hi() * z_hat.hi() <= 0.0) {
        return Err(MembraneError::HalfSpaceExit { sigma: sigma_end });
    }
    let (sin, cos): (Vec<Dd>, Vec<Dd>) = phi.iter().map(|p| p.sin_cos()).unzip();

    let hf = sigma_end / n as f64;
    let mut sigma: Vec<f64> = (0..=n).map(|i| i as f64 * hf).collect();
    sigma[n] = sigma_end;

    let grid = GridData {
        n,
        h,
        c_o,
        k,
        r: r.clone(),
        z: z.clone(),
        sin,
        cos,
        rm,
        zm,
    };
    Ok(ProfileCurve {
        sigma,
        r: r.iter().map(|v| v.to_f64()).collect(),
        z: z.iter().map(|v| v.to_f64()).collect(),
        phi: phi.iter().map(|v| v.to_f64()).collect(),
        event_sigma: curve.event_sigma,
        event_kind: curve.event_kind,
        params: curve.params,
        z_hat: curve.z_hat,
        apex_slope: curve.apex_slope,
        dense: curve.dense.clone(),
        grid: Some(Arc::new(grid)),
    })
}
