//! 2D plane-strain bilinear-quad finite element layer.
//!
//! The displacement problem is assembled in the spatial configuration
//! (internal forces and tangent stiffness integrated over the deformed
//! isoparametric map), solved by Newton iteration with the
//! perturbation-based spatial tangent. The phase-field problem is linear and
//! solved directly. A staggered driver alternates the two within each load
//! step and records the reaction force on the loaded edge.
//!
//! Element loops run in parallel over disjoint batches; per-element results
//! are merged in fixed element order, so assembled quantities are bitwise
//! independent of the worker count.

pub mod mesh;
pub mod solve;

use crate::integrator::{update_state_adaptive, GaussPointState, IntegratorError, StepControls};
use crate::material::{EnvState, FiberFamily, MaterialError, MaterialParams, StressReport};
use crate::phasefield::{AnisoTensor, FractureParams};
use crate::tangent::{jaumann_tangent_eps, spatial_tangent, TangentError, FD_EPSILON};
use crate::tensor::{dev, frob, Mat3};
use mesh::Mesh;
use rayon::prelude::*;
use solve::{BandedSym, SolveError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("element {elem} inverted during assembly (det j = {det:.3e})")]
    ElementInverted { elem: usize, det: f64 },
    #[error("integrator rejected the step at element {elem}: {source}")]
    StepRejected {
        elem: usize,
        source: IntegratorError,
    },
    #[error("tangent evaluation failed at element {elem}: {source}")]
    Tangent { elem: usize, source: TangentError },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("Newton iteration diverged after {iters} iterations (residual {residual:.3e})")]
    NewtonDiverged { iters: usize, residual: f64 },
    #[error("load step failed after {depth} bisections: {last}")]
    BisectionExhausted { depth: usize, last: Box<FemError> },
}

impl FemError {
    /// Whether halving the load increment is a sensible response.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            FemError::ElementInverted { .. }
                | FemError::StepRejected { .. }
                | FemError::Tangent { .. }
                | FemError::NewtonDiverged { .. }
                | FemError::Solve(_)
        )
    }
}

/// Nodal fields plus per-Gauss-point internal state.
#[derive(Debug, Clone)]
pub struct FieldState {
    /// Nodal displacements, `[u_x0, u_y0, u_x1, ...]` (mm).
    pub u: Vec<f64>,
    /// Nodal phase field in [0, 1].
    pub phi: Vec<f64>,
    /// Internal variables, four entries per element.
    pub gp: Vec<GaussPointState>,
    /// Von Mises stress at each Gauss point from the last committed solve.
    pub gp_vm: Vec<f64>,
    /// Accumulated simulation time (s).
    pub time: f64,
}

impl FieldState {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            u: vec![0.0; 2 * mesh.n_nodes()],
            phi: vec![0.0; mesh.n_nodes()],
            gp: vec![GaussPointState::virgin(); 4 * mesh.n_elems()],
            gp_vm: vec![0.0; 4 * mesh.n_elems()],
            time: 0.0,
        }
    }
}

/// Per-run constants shared by every assembly call.
pub struct StepContext<'a> {
    pub mesh: &'a Mesh,
    /// Fiber families per region label.
    pub families: &'a [Vec<FiberFamily>],
    /// Crack-resistance tensor per region label.
    pub aniso: &'a [AnisoTensor],
    pub params: &'a MaterialParams,
    pub env: &'a EnvState,
    pub fracture: &'a FractureParams,
    /// Time step of the current load increment (s).
    pub dt: f64,
    /// Fixed-point controls for the per-point state update.
    pub fp_tol: f64,
    pub fp_max_iters: usize,
}

impl StepContext<'_> {
    fn step_controls(&self) -> StepControls {
        StepControls {
            dt: self.dt,
            tol: self.fp_tol,
            max_iters: self.fp_max_iters,
        }
    }
}

/// Solver knobs of the staggered driver.
#[derive(Debug, Clone)]
pub struct SolverControls {
    /// Relative drop of the free-residual norm that counts as converged.
    pub newton_tol_rel: f64,
    /// Absolute floor on the free-residual norm (N).
    pub newton_tol_abs: f64,
    pub newton_max_iters: usize,
    /// Staggered passes per load step (1 = single sequential sweep).
    pub staggered_passes: usize,
    /// Infinity-norm change of phi that stops staggered iteration.
    pub staggered_tol: f64,
    /// Maximum load-increment bisections before giving up.
    pub bisection_max: usize,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            newton_tol_rel: 1e-6,
            newton_tol_abs: 1e-8,
            newton_max_iters: 25,
            staggered_passes: 1,
            staggered_tol: 1e-4,
            bisection_max: 8,
            fp_tol: 1e-10,
            fp_max_iters: 50,
        }
    }
}

/// Displacement-controlled load program.
#[derive(Debug, Clone)]
pub struct LoadProgram {
    /// Loading rate (mm/min).
    pub rate_mm_per_min: f64,
    /// Displacement increment per step (mm).
    pub du: f64,
    /// Final applied displacement (mm).
    pub target: f64,
}

impl Default for LoadProgram {
    fn default() -> Self {
        Self {
            rate_mm_per_min: 1.0,
            du: 1e-5,
            target: 0.03,
        }
    }
}

/// One accepted load step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time_s: f64,
    pub displacement_mm: f64,
    pub force_n: f64,
    pub newton_iters: usize,
    pub staggered_iters: usize,
}

/// Accepted-step history of a run.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub rows: Vec<StepRecord>,
}

impl SolveReport {
    pub fn peak_force(&self) -> Option<&StepRecord> {
        self.rows
            .iter()
            .max_by(|a, b| a.force_n.partial_cmp(&b.force_n).unwrap())
    }
}

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;
const GAUSS_PTS: [[f64; 2]; 4] = [
    [-INV_SQRT3, -INV_SQRT3],
    [INV_SQRT3, -INV_SQRT3],
    [INV_SQRT3, INV_SQRT3],
    [-INV_SQRT3, INV_SQRT3],
];

fn shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dndxi = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    (n, dndxi)
}

/// 2x2 Jacobian of the isoparametric map and the mapped shape gradients.
/// Returns `None` when the map inverts.
fn map_gradients(
    coords: &[[f64; 2]; 4],
    dndxi: &[[f64; 2]; 4],
) -> Option<(f64, [[f64; 2]; 4])> {
    let mut j = [[0.0f64; 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += coords[a][r] * dndxi[a][c];
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det <= 0.0 {
        return None;
    }
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    let mut dndx = [[0.0f64; 2]; 4];
    for a in 0..4 {
        // dN/dx_i = sum_j inv[j][i] dN/dxi_j
        for i in 0..2 {
            dndx[a][i] = inv[0][i] * dndxi[a][0] + inv[1][i] * dndxi[a][1];
        }
    }
    Some((det, dndx))
}

struct ElemU {
    fe: [f64; 8],
    ke: Option<[[f64; 8]; 8]>,
    trials: [GaussPointState; 4],
    vm: [f64; 4],
}

fn element_u(
    ctx: &StepContext,
    elem: usize,
    u: &[f64],
    phi: &[f64],
    states: &[GaussPointState],
    with_stiffness: bool,
) -> Result<ElemU, FemError> {
    let conn = ctx.mesh.elems[elem];
    let region = ctx.mesh.regions[elem];
    let families = &ctx.families[region];
    let ctrl = ctx.step_controls();

    let mut x_ref = [[0.0; 2]; 4];
    let mut x_cur = [[0.0; 2]; 4];
    let mut u_e = [[0.0; 2]; 4];
    let mut phi_e = [0.0; 4];
    for (a, &n) in conn.iter().enumerate() {
        x_ref[a] = ctx.mesh.nodes[n];
        u_e[a] = [u[2 * n], u[2 * n + 1]];
        x_cur[a] = [x_ref[a][0] + u_e[a][0], x_ref[a][1] + u_e[a][1]];
        phi_e[a] = phi[n];
    }

    let mut fe = [0.0f64; 8];
    let mut ke = [[0.0f64; 8]; 8];
    let mut trials = [GaussPointState::virgin(); 4];
    let mut vm = [0.0f64; 4];

    for (gp, pt) in GAUSS_PTS.iter().enumerate() {
        let (n, dndxi) = shape(pt[0], pt[1]);
        let (_det_ref, dndx_ref) = map_gradients(&x_ref, &dndxi)
            .ok_or(FemError::ElementInverted { elem, det: 0.0 })?;
        let (det_cur, dndx) = map_gradients(&x_cur, &dndxi).ok_or(FemError::ElementInverted {
            elem,
            det: -1.0,
        })?;

        let mut f2 = [[0.0f64; 2]; 2];
        for a in 0..4 {
            for i in 0..2 {
                for j in 0..2 {
                    f2[i][j] += u_e[a][i] * dndx_ref[a][j];
                }
            }
        }
        f2[0][0] += 1.0;
        f2[1][1] += 1.0;
        let f3 = Mat3::new(
            f2[0][0], f2[0][1], 0.0, f2[1][0], f2[1][1], 0.0, 0.0, 0.0, 1.0,
        );
        let phi_gp: f64 = (0..4).map(|a| n[a] * phi_e[a]).sum();

        let state = &states[4 * elem + gp];
        let (trial, report) = update_state_adaptive(
            &f3,
            state,
            phi_gp,
            families,
            ctx.params,
            ctx.env,
            &ctrl,
        )
        .map_err(|e| match e {
            IntegratorError::Material(m) => FemError::Material(m),
            other => FemError::StepRejected {
                elem,
                source: other,
            },
        })?;

        let dv = det_cur * ctx.mesh.thickness; // unit Gauss weights
        let sigma = report.sigma;
        for a in 0..4 {
            for i in 0..2 {
                fe[2 * a + i] +=
                    (sigma[(i, 0)] * dndx[a][0] + sigma[(i, 1)] * dndx[a][1]) * dv;
            }
        }

        if with_stiffness {
            let c_hat = gauss_tangent(ctx, elem, &f3, state, phi_gp, families, &ctrl, &report)?;
            // Plane-strain sub-block in engineering Voigt order (11, 22, 12),
            // major-symmetrized so the assembled system is symmetric.
            let idx = [(0usize, 0usize), (1, 1), (0, 1)];
            let mut d = [[0.0f64; 3]; 3];
            for (r, &(i, j)) in idx.iter().enumerate() {
                for (c, &(k, l)) in idx.iter().enumerate() {
                    d[r][c] = 0.5 * (c_hat.get(i, j, k, l) + c_hat.get(k, l, i, j));
                }
            }
            for a in 0..4 {
                let ba = [
                    [dndx[a][0], 0.0],
                    [0.0, dndx[a][1]],
                    [dndx[a][1], dndx[a][0]],
                ];
                for b in 0..4 {
                    let bb = [
                        [dndx[b][0], 0.0],
                        [0.0, dndx[b][1]],
                        [dndx[b][1], dndx[b][0]],
                    ];
                    // Geometric part: grad N_a . sigma . grad N_b on the
                    // displacement diagonal.
                    let geo = (dndx[a][0] * (sigma[(0, 0)] * dndx[b][0] + sigma[(0, 1)] * dndx[b][1])
                        + dndx[a][1]
                            * (sigma[(1, 0)] * dndx[b][0] + sigma[(1, 1)] * dndx[b][1]))
                        * dv;
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut kmat = 0.0;
                            for r in 0..3 {
                                for c in 0..3 {
                                    kmat += ba[r][i] * d[r][c] * bb[c][j];
                                }
                            }
                            ke[2 * a + i][2 * b + j] += kmat * dv;
                            if i == j {
                                ke[2 * a + i][2 * b + j] += geo;
                            }
                        }
                    }
                }
            }
        }

        trials[gp] = trial;
        vm[gp] = (1.5f64).sqrt() * frob(&dev(&sigma));
    }

    Ok(ElemU {
        fe,
        ke: with_stiffness.then_some(ke),
        trials,
        vm,
    })
}

/// Spatial tangent at one Gauss point, retrying with smaller perturbations
/// if the default inverts the perturbed element state.
#[allow(clippy::too_many_arguments)]
fn gauss_tangent(
    ctx: &StepContext,
    elem: usize,
    f3: &Mat3,
    state: &GaussPointState,
    phi_gp: f64,
    families: &[FiberFamily],
    ctrl: &StepControls,
    report: &StressReport,
) -> Result<crate::tangent::Tangent4, FemError> {
    let mut eps = FD_EPSILON;
    let mut last_err = None;
    for _ in 0..3 {
        match jaumann_tangent_eps(f3, state, phi_gp, families, ctx.params, ctx.env, ctrl, eps) {
            Ok(c) => return Ok(spatial_tangent(&c, &report.sigma)),
            Err(e) => {
                last_err = Some(e);
                eps *= 0.1;
            }
        }
    }
    Err(FemError::Tangent {
        elem,
        source: last_err.unwrap(),
    })
}

/// Result of one displacement assembly sweep.
pub struct UAssembly {
    /// Raw internal nodal forces (N), before any boundary handling.
    pub f_int: Vec<f64>,
    /// Tangent stiffness, present when assembled with stiffness.
    pub stiffness: Option<BandedSym>,
    /// Evolved internal variables per Gauss point (committed by the caller
    /// only once the step is accepted).
    pub trials: Vec<GaussPointState>,
    /// Von Mises stress per Gauss point.
    pub vm: Vec<f64>,
}

/// Assembles the displacement residual, tangent stiffness and trial internal
/// variables at the given fields.
pub fn assemble_u(
    ctx: &StepContext,
    u: &[f64],
    phi: &[f64],
    states: &[GaussPointState],
) -> Result<UAssembly, FemError> {
    assemble_u_inner(ctx, u, phi, states, true)
}

/// Residual-only sweep (no stiffness), used for convergence checks.
pub fn assemble_u_residual(
    ctx: &StepContext,
    u: &[f64],
    phi: &[f64],
    states: &[GaussPointState],
) -> Result<UAssembly, FemError> {
    assemble_u_inner(ctx, u, phi, states, false)
}

fn assemble_u_inner(
    ctx: &StepContext,
    u: &[f64],
    phi: &[f64],
    states: &[GaussPointState],
    with_stiffness: bool,
) -> Result<UAssembly, FemError> {
    let ne = ctx.mesh.n_elems();
    let per_elem: Result<Vec<ElemU>, FemError> = (0..ne)
        .into_par_iter()
        .map(|e| element_u(ctx, e, u, phi, states, with_stiffness))
        .collect();
    let per_elem = per_elem?;

    // Deterministic reduction: scatter in fixed element order.
    let ndof = 2 * ctx.mesh.n_nodes();
    let mut f_int = vec![0.0; ndof];
    let hb = 2 * ctx.mesh.node_span() + 1;
    let mut k = with_stiffness.then(|| BandedSym::zeros(ndof, hb));
    let mut trials = vec![GaussPointState::virgin(); 4 * ne];
    let mut vm = vec![0.0; 4 * ne];

    for (e, out) in per_elem.into_iter().enumerate() {
        let conn = ctx.mesh.elems[e];
        for a in 0..4 {
            for i in 0..2 {
                f_int[2 * conn[a] + i] += out.fe[2 * a + i];
            }
        }
        if let (Some(k), Some(ke)) = (k.as_mut(), out.ke.as_ref()) {
            for a in 0..4 {
                for i in 0..2 {
                    let gi = 2 * conn[a] + i;
                    for b in 0..4 {
                        for j in 0..2 {
                            let gj = 2 * conn[b] + j;
                            if gi >= gj {
                                // Lower triangle; store the symmetrized value.
                                let v = 0.5 * (ke[2 * a + i][2 * b + j] + ke[2 * b + j][2 * a + i]);
                                k.add(gi, gj, v);
                            }
                        }
                    }
                }
            }
        }
        trials[4 * e..4 * e + 4].copy_from_slice(&out.trials);
        vm[4 * e..4 * e + 4].copy_from_slice(&out.vm);
    }

    Ok(UAssembly {
        f_int,
        stiffness: k,
        trials,
        vm,
    })
}

/// Assembles the linear phase-field system `K phi = b` from the committed
/// history field, integrating over the deformed configuration with the
/// inverse-Jacobian weights of the spatial weak form.
pub fn assemble_phi(
    ctx: &StepContext,
    u: &[f64],
    states: &[GaussPointState],
) -> Result<(BandedSym, Vec<f64>), FemError> {
    let ne = ctx.mesh.n_elems();
    let fp = ctx.fracture;

    struct ElemPhi {
        ke: [[f64; 4]; 4],
        be: [f64; 4],
    }

    let per_elem: Result<Vec<ElemPhi>, FemError> = (0..ne)
        .into_par_iter()
        .map(|elem| {
            let conn = ctx.mesh.elems[elem];
            let aniso = &ctx.aniso[ctx.mesh.regions[elem]].0;
            let mut x_ref = [[0.0; 2]; 4];
            let mut x_cur = [[0.0; 2]; 4];
            for (a, &nid) in conn.iter().enumerate() {
                x_ref[a] = ctx.mesh.nodes[nid];
                x_cur[a] = [
                    x_ref[a][0] + u[2 * nid],
                    x_ref[a][1] + u[2 * nid + 1],
                ];
            }
            let mut ke = [[0.0f64; 4]; 4];
            let mut be = [0.0f64; 4];
            for (gp, pt) in GAUSS_PTS.iter().enumerate() {
                let (n, dndxi) = shape(pt[0], pt[1]);
                let (det_ref, _) = map_gradients(&x_ref, &dndxi)
                    .ok_or(FemError::ElementInverted { elem, det: 0.0 })?;
                let (det_cur, dndx) = map_gradients(&x_cur, &dndxi)
                    .ok_or(FemError::ElementInverted { elem, det: -1.0 })?;
                // Plane strain: J = det F = det(j_cur) / det(j_ref).
                let j_gp = det_cur / det_ref;
                let h = states[4 * elem + gp].history;
                let dv = det_cur * ctx.mesh.thickness / j_gp;
                let mass = (2.0 * h + fp.g_c / fp.l0) * dv;
                let grad = fp.g_c * fp.l0 * dv;
                for a in 0..4 {
                    be[a] += 2.0 * h * n[a] * dv;
                    for b in 0..4 {
                        let ga_adir = [
                            aniso[(0, 0)] * dndx[b][0] + aniso[(0, 1)] * dndx[b][1],
                            aniso[(1, 0)] * dndx[b][0] + aniso[(1, 1)] * dndx[b][1],
                        ];
                        ke[a][b] += mass * n[a] * n[b]
                            + grad * (dndx[a][0] * ga_adir[0] + dndx[a][1] * ga_adir[1]);
                    }
                }
            }
            Ok(ElemPhi { ke, be })
        })
        .collect();
    let per_elem = per_elem?;

    let nn = ctx.mesh.n_nodes();
    let mut k = BandedSym::zeros(nn, ctx.mesh.node_span());
    let mut b = vec![0.0; nn];
    for (e, out) in per_elem.into_iter().enumerate() {
        let conn = ctx.mesh.elems[e];
        for a in 0..4 {
            b[conn[a]] += out.be[a];
            for bb in 0..4 {
                if conn[a] >= conn[bb] {
                    k.add(conn[a], conn[bb], 0.5 * (out.ke[a][bb] + out.ke[bb][a]));
                }
            }
        }
    }
    Ok((k, b))
}

/// Sum of internal-force components over a node set.
pub fn reaction_sum(f_int: &[f64], nodes: &[usize], component: usize) -> f64 {
    nodes.iter().map(|&n| f_int[2 * n + component]).sum()
}

/// Newton solve of the displacement problem under Dirichlet constraints
/// `(dof, value)`. Returns the converged assembly (with trial states and the
/// raw internal forces for reaction recovery) and the iteration count.
pub fn newton_solve_u(
    ctx: &StepContext,
    u: &mut [f64],
    phi: &[f64],
    states: &[GaussPointState],
    constraints: &[(usize, f64)],
    controls: &SolverControls,
) -> Result<(UAssembly, usize), FemError> {
    let ndof = u.len();
    let mut fixed = vec![false; ndof];
    for &(dof, value) in constraints {
        u[dof] = value;
        fixed[dof] = true;
    }

    let free_norm = |f: &[f64]| -> f64 {
        f.iter()
            .zip(&fixed)
            .filter(|(_, &fx)| !fx)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt()
    };

    let mut ref_norm: Option<f64> = None;
    let mut norm = f64::INFINITY;
    for iter in 0..controls.newton_max_iters {
        let res = assemble_u_residual(ctx, u, phi, states)?;
        norm = free_norm(&res.f_int);
        if !norm.is_finite() {
            return Err(FemError::NewtonDiverged {
                iters: iter,
                residual: norm,
            });
        }
        let reference = *ref_norm.get_or_insert(norm);
        if norm <= (controls.newton_tol_rel * reference).max(controls.newton_tol_abs) {
            return Ok((res, iter));
        }
        if norm > 1e4 * reference.max(controls.newton_tol_abs) {
            return Err(FemError::NewtonDiverged {
                iters: iter,
                residual: norm,
            });
        }

        let asm = assemble_u(ctx, u, phi, states)?;
        let mut k = asm.stiffness.expect("stiffness requested");
        let mut rhs: Vec<f64> = asm.f_int.iter().map(|v| -v).collect();
        for &(dof, _) in constraints {
            k.apply_dirichlet(&mut rhs, dof);
        }
        k.factorize()?;
        let delta = k.solve_factorized(&rhs)?;

        // Backtracking on the residual norm: softening branches can throw
        // the full update past the equilibrium path.
        let u_base = u.to_vec();
        let mut scale = 1.0;
        for _ in 0..6 {
            for ((ui, bi), di) in u.iter_mut().zip(&u_base).zip(&delta) {
                *ui = bi + scale * di;
            }
            let probe = assemble_u_residual(ctx, u, phi, states);
            match probe {
                Ok(r) if free_norm(&r.f_int).is_finite() && free_norm(&r.f_int) < norm => break,
                _ if scale > 0.03 => scale *= 0.5,
                _ => break,
            }
        }
    }
    Err(FemError::NewtonDiverged {
        iters: controls.newton_max_iters,
        residual: norm,
    })
}

/// Solves the linear phase-field problem and clamps the result to [0, 1].
pub fn solve_phi(
    ctx: &StepContext,
    u: &[f64],
    states: &[GaussPointState],
) -> Result<Vec<f64>, FemError> {
    let (mut k, b) = assemble_phi(ctx, u, states)?;
    k.factorize()?;
    let mut phi = k.solve_factorized(&b)?;
    for p in phi.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
    Ok(phi)
}

/// Outcome of one accepted staggered load step.
pub struct StagOutcome {
    pub reaction: f64,
    pub newton_iters: usize,
    pub staggered_iters: usize,
}

/// One staggered load step at the given absolute top displacement: Newton
/// solve for u with frozen phi, commit internal variables and history, then
/// the linear phi solve; optionally iterate the pair. Fields are left
/// untouched if the step fails.
pub fn staggered_step(
    ctx: &StepContext,
    fields: &mut FieldState,
    applied: f64,
    controls: &SolverControls,
) -> Result<StagOutcome, FemError> {
    let mesh = ctx.mesh;
    let mut constraints: Vec<(usize, f64)> = Vec::new();
    for &n in &mesh.top {
        constraints.push((2 * n + 1, applied));
    }
    for &n in &mesh.bottom {
        constraints.push((2 * n + 1, 0.0));
    }
    // Pin the bottom-left corner horizontally to remove the rigid mode.
    let pin = *mesh
        .bottom
        .iter()
        .min_by(|&&a, &&b| {
            mesh.nodes[a][0]
                .partial_cmp(&mesh.nodes[b][0])
                .unwrap()
        })
        .expect("bottom set non-empty");
    constraints.push((2 * pin, 0.0));

    let u_backup = fields.u.clone();
    let step_start_states = fields.gp.clone();

    let mut total_newton = 0;
    let mut stag_iters = 0;
    let mut last_asm: Option<UAssembly> = None;
    let mut phi = fields.phi.clone();

    for pass in 0..controls.staggered_passes.max(1) {
        let result = newton_solve_u(
            ctx,
            &mut fields.u,
            &phi,
            &step_start_states,
            &constraints,
            controls,
        );
        let (asm, iters) = match result {
            Ok(ok) => ok,
            Err(e) => {
                fields.u = u_backup;
                return Err(e);
            }
        };
        total_newton += iters;
        stag_iters = pass + 1;

        let new_phi = match solve_phi(ctx, &fields.u, &asm.trials) {
            Ok(p) => p,
            Err(e) => {
                fields.u = u_backup;
                return Err(e);
            }
        };
        let dphi = phi
            .iter()
            .zip(&new_phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        phi = new_phi;
        last_asm = Some(asm);
        if dphi <= controls.staggered_tol {
            break;
        }
    }

    let asm = last_asm.expect("at least one pass");
    let reaction = reaction_sum(&asm.f_int, &mesh.top, 1);
    fields.phi = phi;
    fields.gp = asm.trials;
    fields.gp_vm = asm.vm;
    fields.time += ctx.dt;
    Ok(StagOutcome {
        reaction,
        newton_iters: total_newton,
        staggered_iters: stag_iters,
    })
}

/// Runs a displacement-controlled load program with automatic increment
/// bisection, invoking `on_step` after every accepted step.
#[allow(clippy::too_many_arguments)]
pub fn run_load_program(
    base_ctx: &StepContext,
    fields: &mut FieldState,
    load: &LoadProgram,
    controls: &SolverControls,
    mut on_step: impl FnMut(&StepRecord, &FieldState),
) -> Result<SolveReport, FemError> {
    let mut report = SolveReport::default();
    let secs_per_mm = 60.0 / load.rate_mm_per_min;
    let mut applied = 0.0;
    let mut step = 0usize;

    fn advance(
        base_ctx: &StepContext,
        fields: &mut FieldState,
        controls: &SolverControls,
        applied: &mut f64,
        du: f64,
        secs_per_mm: f64,
        depth: usize,
        out: &mut Vec<(f64, f64, StagOutcome)>,
    ) -> Result<(), FemError> {
        let ctx = StepContext {
            dt: du * secs_per_mm,
            ..*base_ctx
        };
        match staggered_step(&ctx, fields, *applied + du, controls) {
            Ok(outcome) => {
                *applied += du;
                out.push((*applied, fields.time, outcome));
                Ok(())
            }
            Err(e) if e.is_recoverable() && depth < controls.bisection_max => {
                for _ in 0..2 {
                    advance(
                        base_ctx,
                        fields,
                        controls,
                        applied,
                        du / 2.0,
                        secs_per_mm,
                        depth + 1,
                        out,
                    )?;
                }
                Ok(())
            }
            Err(e) if e.is_recoverable() => Err(FemError::BisectionExhausted {
                depth,
                last: Box::new(e),
            }),
            Err(e) => Err(e),
        }
    }

    while applied < load.target - 1e-12 {
        let du = load.du.min(load.target - applied);
        let mut outcomes = Vec::new();
        advance(
            base_ctx,
            fields,
            controls,
            &mut applied,
            du,
            secs_per_mm,
            0,
            &mut outcomes,
        )?;
        for (disp, time_s, outcome) in outcomes {
            step += 1;
            let row = StepRecord {
                step,
                time_s,
                displacement_mm: disp,
                force_n: outcome.reaction,
                newton_iters: outcome.newton_iters,
                staggered_iters: outcome.staggered_iters,
            };
            on_step(&row, fields);
            report.rows.push(row);
        }
    }
    Ok(report)
}
