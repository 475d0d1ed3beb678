//! Job configuration, output writers, material-point drivers and the
//! command-line interface.

pub mod cli;
pub mod config;
pub mod csvout;
pub mod drivers;
pub mod vtk;

use crate::fem::mesh::{generate_mesh, Mesh};
use crate::fem::{run_load_program, FemError, FieldState, SolveReport, StepContext};
use crate::material::FiberFamily;
use crate::orientation::{build_orientation, decompose_families, OrientationError};
use crate::phasefield::{aniso_tensor, AnisoTensor};
use config::SimJob;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Mesh(#[from] crate::fem::mesh::MeshError),
    #[error(transparent)]
    Orientation(#[from] OrientationError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Driver(#[from] drivers::DriverError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Per-region constitutive inputs derived from a job's fiber block.
pub struct RegionData {
    pub families: Vec<Vec<FiberFamily>>,
    pub aniso: Vec<AnisoTensor>,
}

/// Builds fiber families and crack-resistance tensors for every region.
pub fn build_regions(job: &SimJob) -> Result<RegionData, OrientationError> {
    let mut families = Vec::new();
    let mut aniso = Vec::new();
    for spec in &job.fiber_specs {
        let a = build_orientation(spec)?;
        aniso.push(aniso_tensor(&a, job.fracture.alpha_hat));
        if job.v_f_total > 0.0 {
            families.push(decompose_families(&a, job.v_f_total)?);
        } else {
            families.push(Vec::new());
        }
    }
    Ok(RegionData { families, aniso })
}

fn write_file(path: &Path, content: &str) -> Result<(), RunError> {
    fs::write(path, content).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Outcome of a finite-element run.
pub struct RunOutput {
    pub mesh: Mesh,
    pub fields: FieldState,
    pub report: SolveReport,
    pub force_csv_path: PathBuf,
}

/// Runs a full FE fracture job: mesh generation, staggered load stepping,
/// force CSV and optional VTK snapshots. All file output is byte-identical
/// across worker counts.
pub fn run_sim_job(job: &SimJob, quiet: bool) -> Result<RunOutput, RunError> {
    let mesh = generate_mesh(&job.geometry)?;
    let regions = build_regions(job)?;
    let out_dir = PathBuf::from(&job.output.directory);
    if !out_dir.as_os_str().is_empty() {
        fs::create_dir_all(&out_dir).map_err(|source| RunError::Io {
            path: out_dir.clone(),
            source,
        })?;
    }

    let mut fields = FieldState::new(&mesh);
    let ctx = StepContext {
        mesh: &mesh,
        families: &regions.families,
        aniso: &regions.aniso,
        params: &job.material,
        env: &job.env,
        fracture: &job.fracture,
        dt: 0.0, // set per increment by the driver
        fp_tol: job.solver.fp_tol,
        fp_max_iters: job.solver.fp_max_iters,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.threads)
        .build()
        .expect("thread pool");

    let stride = job.output.vtk_stride;
    let mut vtk_error: Option<RunError> = None;
    let report = pool.install(|| {
        run_load_program(
            &ctx,
            &mut fields,
            &job.load,
            &job.solver,
            |row, snapshot| {
                if !quiet && row.step % 100 == 0 {
                    eprintln!(
                        "step {:6}  u = {:.6} mm  F = {:.3} N  ({} newton)",
                        row.step, row.displacement_mm, row.force_n, row.newton_iters
                    );
                }
                if stride > 0 && row.step % stride == 0 && vtk_error.is_none() {
                    let path =
                        out_dir.join(format!("{}_{:06}.vtk", job.output.vtk_prefix, row.step));
                    if let Err(source) = write_vtk_file(&path, &mesh, snapshot) {
                        vtk_error = Some(source);
                    }
                }
            },
        )
    })?;
    if let Some(e) = vtk_error {
        return Err(e);
    }
    if stride > 0 {
        write_vtk_file(
            &out_dir.join(format!("{}_final.vtk", job.output.vtk_prefix)),
            &mesh,
            &fields,
        )?;
    }

    let force_csv_path = out_dir.join(&job.output.force_csv);
    let file = fs::File::create(&force_csv_path).map_err(|source| RunError::Io {
        path: force_csv_path.clone(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    csvout::write_force_csv(&report, &mut w).map_err(|source| RunError::Io {
        path: force_csv_path.clone(),
        source,
    })?;
    w.flush().map_err(|source| RunError::Io {
        path: force_csv_path.clone(),
        source,
    })?;

    Ok(RunOutput {
        mesh,
        fields,
        report,
        force_csv_path,
    })
}

fn write_vtk_file(path: &Path, mesh: &Mesh, fields: &FieldState) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    vtk::write_vtk(mesh, fields, &mut w).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    w.flush().map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the point driver and writes its CSV.
pub fn run_point_job(job: &config::PolarJob) -> Result<PathBuf, RunError> {
    let rows = pool_install(job.threads, || drivers::run_point(job))?;
    let out_dir = ensure_dir(&job.output.directory)?;
    let path = out_dir.join(&job.output.point_csv);
    write_file(&path, &drivers::point_csv(&rows))?;
    Ok(path)
}

/// Runs the polar sweep and writes its CSV.
pub fn run_polar_job(job: &config::PolarJob) -> Result<PathBuf, RunError> {
    let rows = pool_install(job.threads, || drivers::run_polar(job))?;
    let out_dir = ensure_dir(&job.output.directory)?;
    let path = out_dir.join(&job.output.polar_csv);
    write_file(&path, &drivers::polar_csv(&rows))?;
    Ok(path)
}

fn ensure_dir(dir: &str) -> Result<PathBuf, RunError> {
    let out_dir = PathBuf::from(dir);
    if !out_dir.as_os_str().is_empty() {
        fs::create_dir_all(&out_dir).map_err(|source| RunError::Io {
            path: out_dir.clone(),
            source,
        })?;
    }
    Ok(out_dir)
}

fn pool_install<T>(
    threads: usize,
    f: impl FnOnce() -> Result<T, drivers::DriverError> + Send,
) -> Result<T, RunError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    Ok(pool.install(f)?)
}

/// Writes the undeformed mesh of a job to a VTK file.
pub fn write_mesh_vtk(job: &SimJob, path: &Path) -> Result<(), RunError> {
    let mesh = generate_mesh(&job.geometry)?;
    let fields = FieldState::new(&mesh);
    write_vtk_file(path, &mesh, &fields)
}
