//! Job configuration: a line-based `key = value` format with `[section]`
//! headers, strict validation and file/line diagnostics.
//!
//! Every key has a default, so an empty file is a complete job: the
//! single-edge-notched tension benchmark under saturated moisture at 300 K
//! with the calibrated glass-fiber/epoxy parameter set. Unknown sections or
//! keys are rejected rather than ignored.

use crate::fem::mesh::Geometry;
use crate::fem::{LoadProgram, SolverControls};
use crate::material::{EnvState, FiberDirNormalization, MaterialParams};
use crate::orientation::FiberSpec;
use crate::phasefield::FractureParams;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("config line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl ConfigError {
    fn new(line: usize, msg: impl Into<String>) -> Self {
        Self {
            line,
            msg: msg.into(),
        }
    }
}

/// Output routing shared by all job kinds.
#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub directory: String,
    pub force_csv: String,
    pub point_csv: String,
    pub polar_csv: String,
    /// Write a field snapshot every this many accepted steps (0 = off).
    pub vtk_stride: usize,
    pub vtk_prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: ".".to_string(),
            force_csv: "force_displacement.csv".to_string(),
            point_csv: "point.csv".to_string(),
            polar_csv: "polar.csv".to_string(),
            vtk_stride: 0,
            vtk_prefix: "fields".to_string(),
        }
    }
}

/// Full finite-element fracture job.
#[derive(Debug, Clone)]
pub struct SimJob {
    pub geometry: Geometry,
    pub material: MaterialParams,
    pub env: EnvState,
    /// One fiber specification per region (a single region when the
    /// geometry has no layer splits).
    pub fiber_specs: Vec<FiberSpec>,
    /// Total fiber volume fraction shared by all regions; zero disables
    /// the fiber phase entirely.
    pub v_f_total: f64,
    pub fracture: FractureParams,
    pub load: LoadProgram,
    pub solver: SolverControls,
    pub threads: usize,
    pub output: OutputConfig,
}

impl Default for SimJob {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            material: MaterialParams::default(),
            env: EnvState::new(300.0, 0.01).expect("default environment"),
            fiber_specs: vec![FiberSpec::Random2d {
                n: 100_000,
                seed: 42,
            }],
            v_f_total: 0.5,
            fracture: FractureParams::default(),
            load: LoadProgram::default(),
            solver: SolverControls::default(),
            threads: 0,
            output: OutputConfig::default(),
        }
    }
}

/// Material-point job driving the relaxation and polar-sweep studies.
#[derive(Debug, Clone)]
pub struct PolarJob {
    /// Applied uniaxial stretch magnitude.
    pub lambda: f64,
    /// Load angle of the `point` driver (degrees).
    pub load_angle_deg: f64,
    /// Angle sweep of the `polar` driver (degrees).
    pub angle_start: f64,
    pub angle_stop: f64,
    pub angle_step: f64,
    /// Sample times (s), ascending.
    pub times: Vec<f64>,
    /// Denser time grid used by the `point` driver (defaults to a log grid
    /// from 1e-6 s to 0.1 s).
    pub point_times: Vec<f64>,
    pub material: MaterialParams,
    pub env: EnvState,
    pub fiber_spec: FiberSpec,
    pub v_f_total: f64,
    pub threads: usize,
    pub output: OutputConfig,
}

impl Default for PolarJob {
    fn default() -> Self {
        let point_times: Vec<f64> = (0..=40)
            .map(|i| 1e-6 * 10f64.powf(i as f64 / 8.0))
            .collect();
        Self {
            lambda: 1.008,
            load_angle_deg: 45.0,
            angle_start: 0.0,
            angle_stop: 359.0,
            angle_step: 1.0,
            times: vec![1e-6, 0.005, 0.05, 0.1],
            point_times,
            material: MaterialParams::default(),
            env: EnvState::new(300.0, 0.01).expect("default environment"),
            fiber_spec: FiberSpec::Balanced {
                angle1_deg: 45.0,
                angle2_deg: -45.0,
                w1: 0.5,
                w2: 0.5,
            },
            v_f_total: 0.5,
            threads: 0,
            output: OutputConfig::default(),
        }
    }
}

/// A parsed job: the presence of a `[polar]` section selects the
/// material-point drivers, otherwise the file describes an FE run.
#[derive(Debug, Clone)]
pub enum Job {
    Sim(Box<SimJob>),
    Polar(Box<PolarJob>),
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn tokenize(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(line, "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, "expected `key = value`"))?;
        entries.push(Entry {
            line,
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

fn parse_f64(e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|_| {
        ConfigError::new(
            e.line,
            format!("key `{}`: expected a number, got `{}`", e.key, e.value),
        )
    })
}

fn parse_usize(e: &Entry) -> Result<usize, ConfigError> {
    e.value.parse::<usize>().map_err(|_| {
        ConfigError::new(
            e.line,
            format!("key `{}`: expected a non-negative integer, got `{}`", e.key, e.value),
        )
    })
}

fn parse_f64_list(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    e.value
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::new(e.line, format!("bad number `{}`", t.trim())))
        })
        .collect()
}

/// Fiber specification syntax: `aligned(30)`, `balanced(45, -45, 0.5, 0.5)`,
/// `random2d(100000, 42)` or `angles(30:0.6, 100:0.4)`.
fn parse_fiber_spec(value: &str, line: usize) -> Result<FiberSpec, ConfigError> {
    let value = value.trim();
    let (name, args) = value
        .split_once('(')
        .and_then(|(n, rest)| rest.strip_suffix(')').map(|a| (n.trim(), a.trim())))
        .ok_or_else(|| {
            ConfigError::new(line, format!("bad fiber spec `{value}`: expected name(args)"))
        })?;
    let nums = |s: &str| -> Result<Vec<f64>, ConfigError> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError::new(line, format!("bad number `{}`", t.trim())))
            })
            .collect()
    };
    match name {
        "aligned" => {
            let a = nums(args)?;
            if a.len() != 1 {
                return Err(ConfigError::new(line, "aligned(angle) takes one argument"));
            }
            Ok(FiberSpec::Aligned { angle_deg: a[0] })
        }
        "balanced" => {
            let a = nums(args)?;
            if a.len() != 4 {
                return Err(ConfigError::new(
                    line,
                    "balanced(angle1, angle2, w1, w2) takes four arguments",
                ));
            }
            Ok(FiberSpec::Balanced {
                angle1_deg: a[0],
                angle2_deg: a[1],
                w1: a[2],
                w2: a[3],
            })
        }
        "random2d" => {
            let a = nums(args)?;
            if a.len() != 2 || a[0] < 1.0 || a[1] < 0.0 {
                return Err(ConfigError::new(line, "random2d(n, seed) takes two counts"));
            }
            Ok(FiberSpec::Random2d {
                n: a[0] as usize,
                seed: a[1] as u64,
            })
        }
        "angles" => {
            let mut pairs = Vec::new();
            for tok in args.split(',') {
                let (ang, w) = tok.split_once(':').ok_or_else(|| {
                    ConfigError::new(line, "angles(a1:w1, a2:w2, ...) needs angle:weight pairs")
                })?;
                let ang = ang.trim().parse::<f64>().map_err(|_| {
                    ConfigError::new(line, format!("bad angle `{}`", ang.trim()))
                })?;
                let w = w.trim().parse::<f64>().map_err(|_| {
                    ConfigError::new(line, format!("bad weight `{}`", w.trim()))
                })?;
                pairs.push((ang, w));
            }
            Ok(FiberSpec::Angles(pairs))
        }
        other => Err(ConfigError::new(line, format!("unknown fiber spec `{other}`"))),
    }
}

/// Parses a job file, deciding the job kind by the presence of a `[polar]`
/// section. An empty file is the full-default FE benchmark job.
pub fn parse_config(text: &str) -> Result<Job, ConfigError> {
    let entries = tokenize(text)?;
    if entries.iter().any(|e| e.section == "polar") {
        parse_polar_entries(&entries).map(|j| Job::Polar(Box::new(j)))
    } else {
        parse_sim_entries(&entries).map(|j| Job::Sim(Box::new(j)))
    }
}

/// Parses a configuration for the material-point drivers; files without a
/// `[polar]` section fall back to the default sweep setup.
pub fn parse_polar_config(text: &str) -> Result<PolarJob, ConfigError> {
    parse_polar_entries(&tokenize(text)?)
}

/// Parses a configuration for the FE driver, rejecting `[polar]` files.
pub fn parse_sim_config(text: &str) -> Result<SimJob, ConfigError> {
    let entries = tokenize(text)?;
    if let Some(e) = entries.iter().find(|e| e.section == "polar") {
        return Err(ConfigError::new(
            e.line,
            "this file configures a material-point job; use the point/polar commands",
        ));
    }
    parse_sim_entries(&entries)
}

fn apply_material(
    m: &mut MaterialParams,
    e: &Entry,
) -> Result<bool, ConfigError> {
    let v = || parse_f64(e);
    match e.key.as_str() {
        "mu_eq0" => m.mu_eq0 = v()?,
        "mu_neq0" => m.mu_neq0 = v()?,
        "k_v0" => m.k_v0 = v()?,
        "eps_dot0" => m.eps_dot0 = v()?,
        "delta_h" => m.delta_h = v()?,
        "m" => m.m_exp = v()?,
        "tau0" => m.tau0 = v()?,
        "a_w0" => m.a_w0 = v()?,
        "a_w1" => m.a_w1 = v()?,
        "b" => m.b_exp = v()?,
        "sigma0" => m.sigma0 = v()?,
        "alpha_w" => m.alpha_w = v()?,
        "alpha_theta" => m.alpha_theta = v()?,
        "alpha" => m.alpha = v()?,
        "a1" => m.a1 = v()?,
        "a2" => m.a2 = v()?,
        "a3" => m.a3 = v()?,
        "theta0" => m.theta0 = v()?,
        "fiber_dir_normalization" => {
            m.fiber_dir_normalization = match e.value.as_str() {
                "paper" => FiberDirNormalization::Paper,
                "unimodular" => FiberDirNormalization::Unimodular,
                other => {
                    return Err(ConfigError::new(
                        e.line,
                        format!("fiber_dir_normalization must be `paper` or `unimodular`, got `{other}`"),
                    ))
                }
            }
        }
        _ => return Ok(false),
    }
    Ok(true)
}

fn unknown_key(e: &Entry) -> ConfigError {
    ConfigError::new(
        e.line,
        format!("unknown key `{}` in section [{}]", e.key, e.section),
    )
}

struct FiberBlock {
    v_f: f64,
    spec: Option<FiberSpec>,
    regions: Vec<(f64, f64, FiberSpec)>,
}

impl Default for FiberBlock {
    fn default() -> Self {
        Self {
            v_f: 0.5,
            spec: None,
            regions: Vec::new(),
        }
    }
}

fn apply_fibers(block: &mut FiberBlock, e: &Entry) -> Result<bool, ConfigError> {
    match e.key.as_str() {
        "volume_fraction" => {
            let v = parse_f64(e)?;
            if !(0.0..1.0).contains(&v) {
                return Err(ConfigError::new(
                    e.line,
                    format!("volume_fraction must lie in [0, 1), got {v}"),
                ));
            }
            block.v_f = v;
        }
        "spec" => block.spec = Some(parse_fiber_spec(&e.value, e.line)?),
        "region" => {
            // region = y0, y1, spec(...)
            let mut parts = e.value.splitn(3, ',');
            let y0: f64 = parts
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| ConfigError::new(e.line, "region = y0, y1, spec(...)"))?;
            let y1: f64 = parts
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| ConfigError::new(e.line, "region = y0, y1, spec(...)"))?;
            let spec = parse_fiber_spec(
                parts
                    .next()
                    .ok_or_else(|| ConfigError::new(e.line, "region = y0, y1, spec(...)"))?,
                e.line,
            )?;
            block.regions.push((y0, y1, spec));
        }
        _ => return Ok(false),
    }
    Ok(true)
}

fn apply_output(out: &mut OutputConfig, e: &Entry) -> Result<bool, ConfigError> {
    match e.key.as_str() {
        "directory" => out.directory = e.value.clone(),
        "csv" => out.force_csv = e.value.clone(),
        "point_csv" => out.point_csv = e.value.clone(),
        "polar_csv" => out.polar_csv = e.value.clone(),
        "vtk_stride" => out.vtk_stride = parse_usize(e)?,
        "vtk_prefix" => out.vtk_prefix = e.value.clone(),
        _ => return Ok(false),
    }
    Ok(true)
}

fn finish_env(theta: f64, w_w: f64, line: usize) -> Result<EnvState, ConfigError> {
    EnvState::new(theta, w_w).map_err(|err| ConfigError::new(line, err.to_string()))
}

fn parse_sim_entries(entries: &[Entry]) -> Result<SimJob, ConfigError> {
    let mut job = SimJob::default();
    let mut fibers = FiberBlock::default();
    let (mut theta, mut w_w, mut env_line) = (job.env.theta, job.env.w_w, 0usize);

    for e in entries {
        let handled = match e.section.as_str() {
            "geometry" => match e.key.as_str() {
                "width" => {
                    job.geometry.width = parse_f64(e)?;
                    true
                }
                "height" => {
                    job.geometry.height = parse_f64(e)?;
                    true
                }
                "notch_length" => {
                    job.geometry.notch_length = parse_f64(e)?;
                    true
                }
                "nx" => {
                    job.geometry.nx = parse_usize(e)?;
                    true
                }
                "ny" => {
                    job.geometry.ny = parse_usize(e)?;
                    true
                }
                "thickness" => {
                    job.geometry.thickness = parse_f64(e)?;
                    true
                }
                _ => false,
            },
            "material" => apply_material(&mut job.material, e)?,
            "environment" => match e.key.as_str() {
                "theta" => {
                    theta = parse_f64(e)?;
                    env_line = e.line;
                    true
                }
                "w_w" => {
                    w_w = parse_f64(e)?;
                    env_line = e.line;
                    true
                }
                _ => false,
            },
            "fibers" => apply_fibers(&mut fibers, e)?,
            "fracture" => match e.key.as_str() {
                "g_c" => {
                    job.fracture.g_c = parse_f64(e)?;
                    true
                }
                "l0" => {
                    job.fracture.l0 = parse_f64(e)?;
                    true
                }
                "alpha_hat" => {
                    let v = parse_f64(e)?;
                    if v < 0.0 {
                        return Err(ConfigError::new(e.line, "alpha_hat must be >= 0"));
                    }
                    job.fracture.alpha_hat = v;
                    true
                }
                "k_residual" => {
                    job.fracture.k_residual = parse_f64(e)?;
                    true
                }
                _ => false,
            },
            "loading" => match e.key.as_str() {
                "rate" => {
                    job.load.rate_mm_per_min = parse_f64(e)?;
                    true
                }
                "du" => {
                    job.load.du = parse_f64(e)?;
                    true
                }
                "target" => {
                    job.load.target = parse_f64(e)?;
                    true
                }
                _ => false,
            },
            "solver" => match e.key.as_str() {
                "newton_tol" => {
                    job.solver.newton_tol_rel = parse_f64(e)?;
                    true
                }
                "newton_max_iters" => {
                    job.solver.newton_max_iters = parse_usize(e)?;
                    true
                }
                "staggered_passes" => {
                    job.solver.staggered_passes = parse_usize(e)?;
                    true
                }
                "staggered_tol" => {
                    job.solver.staggered_tol = parse_f64(e)?;
                    true
                }
                "fp_tol" => {
                    job.solver.fp_tol = parse_f64(e)?;
                    true
                }
                "fp_max_iters" => {
                    job.solver.fp_max_iters = parse_usize(e)?;
                    true
                }
                "bisection_max" => {
                    job.solver.bisection_max = parse_usize(e)?;
                    true
                }
                "threads" => {
                    job.threads = parse_usize(e)?;
                    true
                }
                _ => false,
            },
            "output" => apply_output(&mut job.output, e)?,
            "" => {
                return Err(ConfigError::new(
                    e.line,
                    format!("key `{}` outside any [section]", e.key),
                ))
            }
            other => {
                return Err(ConfigError::new(e.line, format!("unknown section [{other}]")))
            }
        };
        if !handled {
            return Err(unknown_key(e));
        }
    }

    job.env = finish_env(theta, w_w, env_line)?;
    job.v_f_total = fibers.v_f;

    // Layered specimens: regions must tile the height contiguously.
    if fibers.regions.is_empty() {
        job.fiber_specs = vec![fibers.spec.unwrap_or_else(|| {
            SimJob::default().fiber_specs[0].clone()
        })];
        job.geometry.region_splits = Vec::new();
    } else {
        let mut regions = fibers.regions;
        regions.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let tol = 1e-9 * job.geometry.height;
        let contiguous = regions[0].0.abs() <= tol
            && (regions.last().unwrap().1 - job.geometry.height).abs() <= tol
            && regions.windows(2).all(|w| (w[0].1 - w[1].0).abs() <= tol);
        if !contiguous {
            return Err(ConfigError::new(
                0,
                "fiber regions must cover [0, height] contiguously".to_string(),
            ));
        }
        job.geometry.region_splits = regions[..regions.len() - 1]
            .iter()
            .map(|r| r.1)
            .collect();
        job.fiber_specs = regions.into_iter().map(|r| r.2).collect();
    }

    job.material
        .validate()
        .map_err(|err| ConfigError::new(0, err.to_string()))?;
    // The shared hygrothermal factor must stay positive for this environment.
    crate::material::hygrothermal_factor(&job.material, &job.env)
        .map_err(|err| ConfigError::new(env_line, err.to_string()))?;
    Ok(job)
}

fn parse_polar_entries(entries: &[Entry]) -> Result<PolarJob, ConfigError> {
    let mut job = PolarJob::default();
    let mut fibers = FiberBlock {
        v_f: job.v_f_total,
        ..FiberBlock::default()
    };
    let (mut theta, mut w_w, mut env_line) = (job.env.theta, job.env.w_w, 0usize);

    for e in entries {
        let handled = match e.section.as_str() {
            "polar" => match e.key.as_str() {
                "lambda" => {
                    let v = parse_f64(e)?;
                    if v <= 1.0 {
                        return Err(ConfigError::new(e.line, "lambda must exceed 1"));
                    }
                    job.lambda = v;
                    true
                }
                "load_angle" => {
                    job.load_angle_deg = parse_f64(e)?;
                    true
                }
                "angle_start" => {
                    job.angle_start = parse_f64(e)?;
                    true
                }
                "angle_stop" => {
                    job.angle_stop = parse_f64(e)?;
                    true
                }
                "angle_step" => {
                    let v = parse_f64(e)?;
                    if v <= 0.0 {
                        return Err(ConfigError::new(e.line, "angle_step must be positive"));
                    }
                    job.angle_step = v;
                    true
                }
                "times" => {
                    let t = parse_f64_list(e)?;
                    if t.is_empty() || t.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(ConfigError::new(e.line, "times must be ascending"));
                    }
                    job.times = t;
                    true
                }
                "point_times" => {
                    let t = parse_f64_list(e)?;
                    if t.is_empty() || t.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(ConfigError::new(e.line, "point_times must be ascending"));
                    }
                    job.point_times = t;
                    true
                }
                _ => false,
            },
            "material" => apply_material(&mut job.material, e)?,
            "environment" => match e.key.as_str() {
                "theta" => {
                    theta = parse_f64(e)?;
                    env_line = e.line;
                    true
                }
                "w_w" => {
                    w_w = parse_f64(e)?;
                    env_line = e.line;
                    true
                }
                _ => false,
            },
            "fibers" => {
                let ok = apply_fibers(&mut fibers, e)?;
                if ok && e.key == "region" {
                    return Err(ConfigError::new(
                        e.line,
                        "material-point jobs take a single fiber spec, not regions",
                    ));
                }
                ok
            }
            "solver" => match e.key.as_str() {
                "threads" => {
                    job.threads = parse_usize(e)?;
                    true
                }
                _ => false,
            },
            "output" => apply_output(&mut job.output, e)?,
            "" => {
                return Err(ConfigError::new(
                    e.line,
                    format!("key `{}` outside any [section]", e.key),
                ))
            }
            other => {
                return Err(ConfigError::new(e.line, format!("unknown section [{other}]")))
            }
        };
        if !handled {
            return Err(unknown_key(e));
        }
    }

    job.env = finish_env(theta, w_w, env_line)?;
    job.v_f_total = fibers.v_f;
    if let Some(spec) = fibers.spec {
        job.fiber_spec = spec;
    }
    job.material
        .validate()
        .map_err(|err| ConfigError::new(0, err.to_string()))?;
    crate::material::hygrothermal_factor(&job.material, &job.env)
        .map_err(|err| ConfigError::new(env_line, err.to_string()))?;
    Ok(job)
}
