use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use membrane_core::fields::{flux_scalar, rme_residual, write_fields_csv};
use membrane_core::io::to_json_string;
use membrane_core::operators::{apex_bc_for, ConvergenceFit};
use membrane_core::spectrum::{spectrum_entries, write_eigenfunctions_csv, SpectrumEntry};
use membrane_core::stability::{
    corollary_checks, el_residuals_and_alpha_beta, CorollaryReport, ElReport, StabilityReport,
};
use membrane_core::*;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{parse_range, Command, Common, ScanArgs, SpectrumArgs, StabilityArgs, Surface};

/// Bad input detected before any numerical work.
#[derive(Debug)]
pub struct Validation(pub String);

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

/// Files written by one run; removed again if the run fails.
pub struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = to_json_string(value)?;
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
        let mut w = self.create(name)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            // only succeeds when nothing else was put there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// What the command asks the process to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Unstable,
}

pub fn out_dir(cmd: &Command) -> &Path {
    match cmd {
        Command::Trace(c) | Command::Identities(c) | Command::Energy(c) => &c.surface.out,
        Command::Scan(s) => &s.surface.out,
        Command::Spectrum(s) | Command::Export(s) => &s.common.surface.out,
        Command::Stability(s) => &s.common.surface.out,
    }
}

pub fn run(cmd: &Command, argv: &[String]) -> Result<Status> {
    let start = Instant::now();
    let mut art = Artifacts::new(out_dir(cmd))?;
    match dispatch(cmd, &mut art) {
        Ok(status) => {
            let meta = RunMeta {
                version: env!("CARGO_PKG_VERSION"),
                args: argv.to_vec(),
                artifacts: art.names(),
                elapsed_seconds: start.elapsed().as_secs_f64(),
                finished_unix: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            };
            if let Err(e) = art.json("run_meta.json", &meta) {
                art.discard();
                return Err(e);
            }
            Ok(status)
        }
        Err(e) => {
            art.discard();
            Err(e)
        }
    }
}

#[derive(Serialize)]
struct RunMeta {
    version: &'static str,
    args: Vec<String>,
    artifacts: Vec<String>,
    elapsed_seconds: f64,
    finished_unix: u64,
}

fn dispatch(cmd: &Command, art: &mut Artifacts) -> Result<Status> {
    match cmd {
        Command::Trace(c) => trace(c, art),
        Command::Scan(s) => scan(s, art),
        Command::Identities(c) => identities(c, art),
        Command::Spectrum(s) => spectrum(s, art),
        Command::Stability(s) => stability(s, art),
        Command::Energy(c) => energy(c, art),
        Command::Export(s) => export(s, art),
    }
}

fn model(s: &Surface) -> Result<ModelParams> {
    Ok(ModelParams::new(s.c_o, s.a, s.b, s.alpha, s.beta)?)
}

fn validate(s: &Surface) -> Result<()> {
    if s.n < 16 {
        return Err(Validation(format!("--n must be at least 16, got {}", s.n)).into());
    }
    if !(s.tol > 0.0 && s.tol < 1.0) {
        return Err(Validation(format!("--tol must lie in (0, 1), got {}", s.tol)).into());
    }
    model(s)?;
    StopRule::new(s.stop.into(), s.sigma_max)?;
    Ok(())
}

fn build(z_hat: f64, s: &Surface) -> Result<ProfileCurve> {
    let params = model(s)?;
    let init = ApexInit::new(z_hat)?;
    let stop = StopRule::new(s.stop.into(), s.sigma_max)?;
    let raw = integrate_profile(&params, &init, &stop, s.tol)?;
    Ok(resample(&raw, s.n)?)
}

fn surface(c: &Common) -> Result<ProfileCurve> {
    validate(&c.surface)?;
    ApexInit::new(c.zhat)?;
    build(c.zhat, &c.surface)
}

#[derive(Serialize)]
struct TraceOutput {
    z_hat: f64,
    event: Option<StopKind>,
    event_sigma: Option<f64>,
    intervals: usize,
    in_half_space: bool,
    boundary: BoundaryData,
}

fn trace_output(curve: &ProfileCurve, fields: &FieldTable) -> TraceOutput {
    TraceOutput {
        z_hat: curve.z_hat(),
        event: curve.event_kind(),
        event_sigma: curve.event_sigma(),
        intervals: curve.intervals(),
        in_half_space: curve.in_half_space(),
        boundary: boundary_darboux(curve, fields),
    }
}

fn trace(c: &Common, art: &mut Artifacts) -> Result<Status> {
    let curve = surface(c)?;
    write_trace(&curve, art)?;
    Ok(Status::Ok)
}

fn write_trace(curve: &ProfileCurve, art: &mut Artifacts) -> Result<()> {
    art.csv("profile.csv", |w| curve.write_csv(w))?;
    art.json("boundary.json", &trace_output(curve, &geometric_fields(curve)))
}

#[derive(Serialize)]
struct ScanRow {
    z_hat: f64,
    event: Option<StopKind>,
    sigma_end: Option<f64>,
    r_end: Option<f64>,
    z_end: Option<f64>,
    verdict: Option<Verdict>,
    h_integral: Option<f64>,
    profile: Option<String>,
    error: Option<String>,
}

fn scan(s: &ScanArgs, art: &mut Artifacts) -> Result<Status> {
    validate(&s.surface)?;
    let heights = parse_range(&s.zhat).map_err(Validation)?;
    for &z in &heights {
        ApexInit::new(z)?;
    }
    let results: Vec<(ScanRow, Option<ProfileCurve>)> = heights
        .par_iter()
        .enumerate()
        .map(|(k, &z)| scan_one(k, z, &s.surface))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for (row, curve) in results {
        if let (Some(curve), Some(name)) = (curve, &row.profile) {
            art.csv(name, |w| curve.write_csv(w))?;
        }
        rows.push(row);
    }
    art.json("scan.json", &rows)?;
    Ok(Status::Ok)
}

fn scan_one(k: usize, z_hat: f64, s: &Surface) -> (ScanRow, Option<ProfileCurve>) {
    let mut row = ScanRow {
        z_hat,
        event: None,
        sigma_end: None,
        r_end: None,
        z_end: None,
        verdict: None,
        h_integral: None,
        profile: None,
        error: None,
    };
    let curve = match build(z_hat, s) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return (row, None);
        }
    };
    let n = curve.len() - 1;
    row.event = curve.event_kind();
    row.sigma_end = Some(curve.sigma_end());
    row.r_end = Some(curve.r()[n]);
    row.z_end = Some(curve.z()[n]);
    row.profile = Some(format!("profile_{k:03}.csv"));
    match thmbif_verdict(&curve) {
        Ok(r) => {
            row.verdict = Some(r.verdict);
            row.h_integral = r.h_integral;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    (row, Some(curve))
}

#[derive(Serialize)]
struct IdentityOutput {
    mode: u32,
    n: Vec<usize>,
    fits: Vec<ConvergenceFit>,
}

fn identities(c: &Common, art: &mut Artifacts) -> Result<Status> {
    let curve = surface(c)?;
    write_identities(&curve, c, art)?;
    Ok(Status::Ok)
}

fn write_identities(curve: &ProfileCurve, c: &Common, art: &mut Artifacts) -> Result<()> {
    let n = c.surface.n;
    let ns = vec![n, 2 * n, 4 * n];
    let fits = convergence_study(curve, &ns, c.mode)?;
    art.json(
        "identities.json",
        &IdentityOutput {
            mode: c.mode,
            n: ns,
            fits,
        },
    )
}

fn spectrum(s: &SpectrumArgs, art: &mut Artifacts) -> Result<Status> {
    let curve = surface(&s.common)?;
    write_spectrum(&curve, s, art)?;
    Ok(Status::Ok)
}

fn write_spectrum(curve: &ProfileCurve, s: &SpectrumArgs, art: &mut Artifacts) -> Result<()> {
    let m = s.common.mode;
    let op = assemble(curve, OperatorKind::P, m, apex_bc_for(m), OuterBc::Dirichlet)?;
    let weight: WeightKind = s.weight.into();
    let pairs = solve_dirichlet_spectrum(&op, weight, s.k)?;
    let entries: Vec<SpectrumEntry> = spectrum_entries(m, weight, &pairs);
    art.json("spectrum.json", &entries)?;
    art.csv("eigenfunctions.csv", |w| write_eigenfunctions_csv(curve.sigma(), &pairs, w))
}

#[derive(Serialize)]
struct StabilityOutput {
    params: ModelParams,
    report: StabilityReport,
    corollaries: Option<CorollaryReport>,
    euler_lagrange: Option<ElReport>,
}

fn stability(s: &StabilityArgs, art: &mut Artifacts) -> Result<Status> {
    let curve = surface(&s.common)?;
    let verdict = write_stability(&curve, &s.common.surface, art)?;
    if s.assert_stable && verdict.is_unstable() {
        log::warn!("verdict {verdict:?}");
        return Ok(Status::Unstable);
    }
    Ok(Status::Ok)
}

fn write_stability(curve: &ProfileCurve, s: &Surface, art: &mut Artifacts) -> Result<Verdict> {
    let params = model(s)?;
    let report = thmbif_verdict(curve)?;
    let fields = geometric_fields(curve);
    let verdict = report.verdict;
    art.json(
        "stability.json",
        &StabilityOutput {
            params,
            report,
            corollaries: corollary_checks(curve, &fields, &params).ok(),
            euler_lagrange: el_residuals_and_alpha_beta(curve, &fields, &params).ok(),
        },
    )?;
    Ok(verdict)
}

#[derive(Serialize)]
struct EnergyOutput {
    energies: Energies,
    rme_residual: f64,
    flux_residual: f64,
}

fn energy(c: &Common, art: &mut Artifacts) -> Result<Status> {
    let curve = surface(c)?;
    write_energy(&curve, &c.surface, art)?;
    Ok(Status::Ok)
}

fn write_energy(curve: &ProfileCurve, s: &Surface, art: &mut Artifacts) -> Result<()> {
    let fields = geometric_fields(curve);
    let e = energies(curve, &fields, &model(s)?)?;
    art.json(
        "energies.json",
        &EnergyOutput {
            energies: e,
            rme_residual: rme_residual(curve, &fields),
            flux_residual: flux_scalar(curve, &fields).max_residual,
        },
    )?;
    art.csv("fields.csv", |w| write_fields_csv(curve, &fields, w))
}

fn export(s: &SpectrumArgs, art: &mut Artifacts) -> Result<Status> {
    let curve = surface(&s.common)?;
    write_trace(&curve, art)?;
    write_energy(&curve, &s.common.surface, art)?;
    write_spectrum(&curve, s, art)?;
    write_stability(&curve, &s.common.surface, art)?;
    write_identities(&curve, &s.common, art)?;
    Ok(Status::Ok)
}

/// 2 for bad input, 3 for numerical failures.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Validation>().is_some() {
        return 2;
    }
    match err.downcast_ref::<MembraneError>() {
        Some(
            MembraneError::InvalidParameter { .. }
            | MembraneError::DimensionMismatch { .. }
            | MembraneError::BoundaryCondition(_)
            | MembraneError::NotUniform
            | MembraneError::GridTooCoarse { .. },
        ) => 2,
        _ => 3,
    }
}
