//! Run configuration and the four command drivers behind the binary.
//!
//! Every driver is deterministic in its configuration. Files are written to a
//! temporary sibling and renamed into place.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curvatureflow::{self, Branch, FlowConfig, HaltReason, InitialData, Trajectory};
use crate::curvebuilder::{self, GeneratingCurve};
use crate::error::{Error, Result};
use crate::hypersurface::{self, CurvatureReport, HypersurfaceSample, Tolerances};
use crate::orbits;
use crate::spaceform::{RVec3, SectionPoint, SpaceForm, SpaceKind};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const TRAJECTORY_FILE: &str = "trajectory.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceName {
    Cp2,
    Ch2,
}

impl SpaceName {
    pub fn kind(self) -> SpaceKind {
        match self {
            Self::Cp2 => SpaceKind::Projective,
            Self::Ch2 => SpaceKind::Hyperbolic,
        }
    }
}

impl std::str::FromStr for SpaceName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp2" => Ok(Self::Cp2),
            "ch2" => Ok(Self::Ch2),
            other => Err(Error::Config(format!("unknown space `{other}`, expected cp2 or ch2"))),
        }
    }
}

/// Flat run configuration. Curvatures are in 1/length^2, steps and spans in
/// arc length, angles in radians. `c` has no default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: SpaceName,
    pub c: f64,
    /// Section point, projected onto the model before use.
    #[serde(default = "default_p")]
    pub p: [f64; 3],
    /// Angle of `w` in the section basis at `p`.
    #[serde(default = "default_w_angle")]
    pub w_angle: f64,
    #[serde(default = "default_branch")]
    pub branch: Branch,
    /// Must contain 0, where the curve passes through `p`.
    #[serde(default = "default_t_span")]
    pub t_span: [f64; 2],
    #[serde(default = "default_ode_step")]
    pub ode_step: f64,
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    /// `(n_t, n_theta)`: curve nodes and angles per torus factor.
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Defaults to `1e-3 max(1, |c|)`.
    #[serde(default)]
    pub tol_mult: Option<f64>,
    #[serde(default = "default_curvature_tol")]
    pub curvature_tol: f64,
    #[serde(default = "default_hopf_tol")]
    pub hopf_tol: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_p() -> [f64; 3] {
    DEFAULT_P
}
fn default_w_angle() -> f64 {
    DEFAULT_W_ANGLE
}
fn default_branch() -> Branch {
    Branch::BetaDouble
}
fn default_t_span() -> [f64; 2] {
    [0.0, 0.2]
}
fn default_ode_step() -> f64 {
    curvatureflow::DEFAULT_STEP
}
fn default_ode_tol() -> f64 {
    1e-12
}
fn default_grid() -> [usize; 2] {
    [20, 12]
}
fn default_fd_step() -> f64 {
    1e-4
}
fn default_curvature_tol() -> f64 {
    5e-3
}
fn default_hopf_tol() -> f64 {
    1e-3
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Generic section point used when none is given. The spatial components
/// are scaled by the model radius.
pub const DEFAULT_P: [f64; 3] = [1.0, 0.6, 0.9];
pub const DEFAULT_W_ANGLE: f64 = 1.83;

impl RunConfig {
    pub fn new(space: SpaceName, c: f64) -> Self {
        Self {
            space,
            c,
            p: default_p(),
            w_angle: default_w_angle(),
            branch: default_branch(),
            t_span: default_t_span(),
            ode_step: default_ode_step(),
            ode_tol: default_ode_tol(),
            grid: default_grid(),
            fd_step: default_fd_step(),
            tol_mult: None,
            curvature_tol: default_curvature_tol(),
            hopf_tol: default_hopf_tol(),
            out: default_out(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn space_form(&self) -> Result<SpaceForm> {
        SpaceForm::new(self.space.kind(), self.c).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::for_curvature(self.c);
        if let Some(m) = self.tol_mult {
            t.tol_mult = m;
        }
        t.curvature = self.curvature_tol;
        t.hopf = self.hopf_tol;
        t
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig { step: self.ode_step, ..FlowConfig::default() }
    }

    /// The section point `p`, its spatial part scaled to the model radius.
    pub fn section_point(&self, space: &SpaceForm) -> Result<SectionPoint> {
        let r = space.radius() / 2.0;
        let x = RVec3::new(self.p[0], self.p[1] * r, self.p[2] * r);
        space.section_project(x).map_err(|e| Error::Config(format!("p: {e}")))
    }

    pub fn direction(&self, space: &SpaceForm, p: &SectionPoint) -> RVec3 {
        let [e1, e2] = space.section_basis(p);
        e1 * self.w_angle.cos() + e2 * self.w_angle.sin()
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.space_form()?;
        let p = self.section_point(&space)?;
        orbits::check_regular(&p).map_err(|e| Error::Config(format!("p: {e}")))?;
        let positive = [("ode_step", self.ode_step), ("ode_tol", self.ode_tol), ("fd_step", self.fd_step), ("curvature_tol", self.curvature_tol), ("hopf_tol", self.hopf_tol)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(m) = self.tol_mult {
            if !(m > 0.0) {
                return Err(Error::Config(format!("tol_mult must be positive, got {m}")));
            }
        }
        if !(self.fd_step >= orbits::FD_STEP_RANGE.0 && self.fd_step <= orbits::FD_STEP_RANGE.1) {
            return Err(Error::Config(format!("fd_step {} outside [1e-6, 1e-3]", self.fd_step)));
        }
        let [lo, hi] = self.t_span;
        if !(lo <= 0.0 && hi >= 0.0 && hi > lo) {
            return Err(Error::Config(format!("t_span [{lo}, {hi}] must contain 0 and be nonempty")));
        }
        if self.grid[0] < 3 || self.grid[1] < 3 {
            return Err(Error::Config(format!("grid {:?} must be at least 3 in each direction", self.grid)));
        }
        if !self.w_angle.is_finite() {
            return Err(Error::Config("w_angle must be finite".into()));
        }
        Ok(())
    }
}

/// Initial data, trajectory and generating curve for one configuration.
#[derive(Clone, Debug)]
pub struct Construction {
    pub space: SpaceForm,
    pub p: SectionPoint,
    pub w: RVec3,
    pub init: InitialData,
    pub trajectory: Trajectory,
    pub curve: GeneratingCurve,
}

pub fn construct(cfg: &RunConfig) -> Result<Construction> {
    cfg.validate()?;
    let space = cfg.space_form()?;
    let p = cfg.section_point(&space)?;
    let w = cfg.direction(&space, &p);
    let init = curvatureflow::initial_conditions_from_orbit(&space, &p, &w, cfg.branch, cfg.fd_step)?;
    let span = (cfg.t_span[0], cfg.t_span[1]);
    let trajectory = curvatureflow::integrate_about(init.state, space.c(), span, cfg.ode_tol, &cfg.flow_config())?
        .with_branch(cfg.branch);
    let curve = curvebuilder::reconstruct_curve(&space, &trajectory, &p, &w, &init.xi)?;
    Ok(Construction { space, p, w, init, trajectory, curve })
}

/// Samples `M` over the configured grid and checks it against `traj`.
pub fn verify(cfg: &RunConfig, traj: &Trajectory, curve: &GeneratingCurve) -> Result<(Vec<HypersurfaceSample>, CurvatureReport)> {
    let n_t = cfg.grid[0].min(curve.len());
    let samples = hypersurface::sample_hypersurface(curve, (n_t, cfg.grid[1]), cfg.fd_step)?;
    let report = hypersurface::verify_two_curvatures(&samples, traj, &cfg.tolerances());
    Ok((samples, report))
}

/// Exit code for an error surfaced by a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::NonRegular { .. }
        | Error::InvalidStep(_)
        | Error::InvalidTolerance(_)
        | Error::UnknownFormat(_)
        | Error::GridMismatch(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Writes `bytes` to `path` through a temporary sibling.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

fn write_csv_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `construct`: writes the trajectory and curve files. A halted integration
/// still writes its partial output and returns the numerical-halt code.
pub fn cmd_construct(cfg: &RunConfig) -> Result<i32> {
    let c = construct(cfg)?;
    write_atomic(&cfg.out.join(TRAJECTORY_FILE), &to_json(&c.trajectory)?)?;
    write_atomic(&cfg.out.join(CURVE_FILE), c.curve.to_csv_string()?.as_bytes())?;
    log::info!("{} nodes, halt {:?}", c.trajectory.len(), c.trajectory.halt);
    Ok(if c.trajectory.halt == HaltReason::Completed { EXIT_PASS } else { EXIT_NUMERICAL })
}

/// `verify`: reads the files written by `construct` from `cfg.out` (or the
/// given paths) and writes the report and the sample table.
pub fn cmd_verify(cfg: &RunConfig, trajectory: Option<&Path>, curve: Option<&Path>) -> Result<(i32, CurvatureReport)> {
    cfg.validate()?;
    let space = cfg.space_form()?;
    let tpath = trajectory.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join(TRAJECTORY_FILE));
    let cpath = curve.map(Path::to_path_buf).unwrap_or_else(|| cfg.out.join(CURVE_FILE));
    let traj: Trajectory = serde_json::from_str(&fs::read_to_string(&tpath)?)?;
    if (traj.c - space.c()).abs() > 0.0 {
        return Err(Error::Config(format!("trajectory has c = {}, config has c = {}", traj.c, space.c())));
    }
    let curve = GeneratingCurve::read_csv(&space, traj.branch, &cpath)?;
    let (samples, report) = verify(cfg, &traj, &curve)?;
    write_atomic(&cfg.out.join(REPORT_FILE), &to_json(&report)?)?;
    write_atomic(&cfg.out.join(SAMPLES_FILE), &write_csv_rows(&hypersurface::samples_to_rows(&samples))?)?;
    log::info!("{}", report.diagnostic);
    Ok((if report.pass { EXIT_PASS } else { EXIT_VERIFY_FAILED }, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub w_angle: f64,
    /// `completed`, a halt reason, or `error`.
    pub status: String,
    pub pass: bool,
    pub min_b: f64,
    pub max_spread: f64,
    pub max_double_residual: f64,
    pub max_simple_residual: f64,
    pub max_hopf_residual: f64,
}

/// Evenly spaced directions, rotated by an offset drawn from `seed`.
pub fn sweep_angles(n_dirs: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.random_range(0.0..2.0 * PI / n_dirs as f64);
    (0..n_dirs).map(|k| offset + 2.0 * PI * k as f64 / n_dirs as f64).collect()
}

fn sweep_one(cfg: &RunConfig, index: usize, angle: f64) -> Result<SweepRow> {
    let mut run = cfg.clone();
    run.w_angle = angle;
    run.out = cfg.out.join(format!("dir_{index:02}"));
    let mut row = SweepRow {
        index,
        w_angle: angle,
        status: "error".into(),
        pass: false,
        min_b: 0.0,
        max_spread: f64::NAN,
        max_double_residual: f64::NAN,
        max_simple_residual: f64::NAN,
        max_hopf_residual: f64::NAN,
    };
    let c = match construct(&run) {
        Ok(c) => c,
        Err(e) => {
            log::warn!("direction {index}: {e}");
            return Ok(row);
        }
    };
    row.status = serde_json::to_value(c.trajectory.halt)?.as_str().unwrap_or("error").to_string();
    match verify(&run, &c.trajectory, &c.curve) {
        Ok((_, report)) => {
            row.pass = report.pass && c.trajectory.halt.is_completed();
            row.min_b = report.min_b;
            row.max_spread = report.max_spread;
            row.max_double_residual = report.max_double_residual;
            row.max_simple_residual = report.max_simple_residual;
            row.max_hopf_residual = report.max_hopf_residual;
            write_atomic(&run.out.join(REPORT_FILE), &to_json(&report)?)?;
        }
        Err(e) => {
            log::warn!("direction {index}: {e}");
            row.status = "error".into();
        }
    }
    Ok(row)
}

/// Thread count for sweeps, from `HYPERFORGE_THREADS` when set.
pub fn sweep_threads() -> Option<usize> {
    std::env::var("HYPERFORGE_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0)
}

/// `sweep`: runs the pipeline over `n_dirs` directions at fixed `p`.
pub fn cmd_sweep(cfg: &RunConfig, n_dirs: usize) -> Result<(i32, Vec<SweepRow>)> {
    use rayon::prelude::*;
    if n_dirs < 4 {
        return Err(Error::Config(format!("n_dirs must be at least 4, got {n_dirs}")));
    }
    cfg.validate()?;
    let angles = sweep_angles(n_dirs, cfg.seed);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = sweep_threads() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<SweepRow> =
        pool.install(|| angles.par_iter().enumerate().map(|(k, &a)| sweep_one(cfg, k, a)).collect::<Result<_>>())?;
    write_atomic(&cfg.out.join(SWEEP_FILE), &write_csv_rows(&rows)?)?;
    let code = if rows.iter().all(|r| r.pass) { EXIT_PASS } else { EXIT_VERIFY_FAILED };
    Ok((code, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    JsonMesh,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json-mesh" => Ok(Self::JsonMesh),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Renders a sample table in the requested format.
pub fn export_bytes(rows: &[hypersurface::SampleRow], format: ExportFormat) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::GridMismatch("no samples to export".into()));
    }
    match format {
        ExportFormat::Csv => write_csv_rows(rows),
        ExportFormat::JsonMesh => to_json(&hypersurface::rows_to_mesh(rows)?),
    }
}

/// `export`: converts a sample table written by `verify`.
pub fn cmd_export(input: &Path, format: ExportFormat, output: &Path) -> Result<i32> {
    let rows = hypersurface::read_samples_csv(input)?;
    write_atomic(output, &export_bytes(&rows, format)?)?;
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_requires_c() {
        assert!(RunConfig::from_json(r#"{"space": "cp2"}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"space": "ch2", "c": -4.0}"#).unwrap();
        assert_eq!(cfg, RunConfig::new(SpaceName::Ch2, -4.0));
    }

    #[test]
    fn wrong_sign_is_a_config_error() {
        let e = RunConfig::new(SpaceName::Cp2, -4.0).validate().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }

    #[test]
    fn sweep_angles_are_seeded() {
        assert_eq!(sweep_angles(8, 3), sweep_angles(8, 3));
        assert_ne!(sweep_angles(8, 3), sweep_angles(8, 4));
        let a = sweep_angles(8, 0);
        assert!((a[1] - a[0] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_format() {
        assert!(matches!("obj".parse::<ExportFormat>(), Err(Error::UnknownFormat(_))));
    }
}
