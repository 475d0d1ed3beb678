//! Consistent tangent moduli by numerical perturbation.
//!
//! The Jaumann tangent is assembled column by column from symmetrized
//! perturbations of the deformation gradient: each perturbation leaves the
//! spin unchanged, so the stress difference divided by the perturbation size
//! is directly a column of the modulus conjugate to the Jaumann rate. The
//! spatial modulus needed by the FE weak form follows from an exact algebraic
//! correction involving the current stress.
//!
//! Internal variables are frozen at their start-of-step values and
//! re-evolved through the same time step inside every perturbed stress
//! evaluation, which makes the tangent consistent with the staggered update.

use crate::integrator::{update_state_adaptive, GaussPointState, IntegratorError, StepControls};
use crate::material::{EnvState, FiberFamily, MaterialParams};
use crate::tensor::Mat3;
use thiserror::Error;

/// Default perturbation size of the deformation-gradient columns.
pub const FD_EPSILON: f64 = 1e-5;

/// Voigt pair ordering used throughout: 11, 22, 33, 12, 23, 13.
pub const VOIGT: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

#[derive(Debug, Error)]
pub enum TangentError {
    #[error("perturbed stress evaluation failed: {0}")]
    PerturbationFailed(#[from] IntegratorError),
}

/// Fourth-order tangent with minor symmetries, stored as a 6x6 Voigt matrix
/// over tensor components (no engineering-shear doubling in storage).
#[derive(Debug, Clone, Copy)]
pub struct Tangent4 {
    pub voigt: [[f64; 6]; 6],
}

impl Tangent4 {
    pub fn zeros() -> Self {
        Self {
            voigt: [[0.0; 6]; 6],
        }
    }

    fn voigt_index(i: usize, j: usize) -> usize {
        match (i.min(j), i.max(j)) {
            (0, 0) => 0,
            (1, 1) => 1,
            (2, 2) => 2,
            (0, 1) => 3,
            (1, 2) => 4,
            (0, 2) => 5,
            _ => unreachable!(),
        }
    }

    /// Full component access, `C_{ijkl}`; minor symmetries are implied by
    /// the storage.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.voigt[Self::voigt_index(i, j)][Self::voigt_index(k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.voigt[Self::voigt_index(i, j)][Self::voigt_index(k, l)] = v;
    }

    /// Double contraction with a symmetric second-order tensor,
    /// `t_ij = C_ijkl d_kl`.
    pub fn contract(&self, d: &Mat3) -> Mat3 {
        let mut t = Mat3::zeros();
        for (row, &(i, j)) in VOIGT.iter().enumerate() {
            let mut s = 0.0;
            for (col, &(k, l)) in VOIGT.iter().enumerate() {
                let w = if k == l { 1.0 } else { 2.0 };
                s += self.voigt[row][col] * w * d[(k, l)];
            }
            t[(i, j)] = s;
            t[(j, i)] = s;
        }
        t
    }
}

/// Computes the Jaumann tangent at a converged step by one-sided finite
/// differences with symmetrized perturbations
/// `F_hat = F + eps/2 (e_k x e_l F + e_l x e_k F)`.
///
/// `state` must be the committed start-of-step state whose update under `F`
/// converged; each perturbed evaluation re-runs that update with the same
/// time step.
pub fn jaumann_tangent(
    f: &Mat3,
    state: &GaussPointState,
    phi: f64,
    families: &[FiberFamily],
    params: &MaterialParams,
    env: &EnvState,
    ctrl: &StepControls,
) -> Result<Tangent4, TangentError> {
    jaumann_tangent_eps(f, state, phi, families, params, env, ctrl, FD_EPSILON)
}

/// [`jaumann_tangent`] with an explicit perturbation size, the fallback the
/// FE assembly uses when the default perturbation inverts an element.
#[allow(clippy::too_many_arguments)]
pub fn jaumann_tangent_eps(
    f: &Mat3,
    state: &GaussPointState,
    phi: f64,
    families: &[FiberFamily],
    params: &MaterialParams,
    env: &EnvState,
    ctrl: &StepControls,
    eps: f64,
) -> Result<Tangent4, TangentError> {
    let (_, base) = update_state_adaptive(f, state, phi, families, params, env, ctrl)?;
    let mut c = Tangent4::zeros();
    for &(k, l) in VOIGT.iter() {
        let mut df = Mat3::zeros();
        for col in 0..3 {
            df[(k, col)] += 0.5 * eps * f[(l, col)];
            df[(l, col)] += 0.5 * eps * f[(k, col)];
        }
        let f_hat = f + df;
        let (_, pert) = update_state_adaptive(&f_hat, state, phi, families, params, env, ctrl)?;
        let dsigma = (pert.sigma - base.sigma) / eps;
        for &(i, j) in VOIGT.iter() {
            c.set(i, j, k, l, 0.5 * (dsigma[(i, j)] + dsigma[(j, i)]));
        }
    }
    Ok(c)
}

/// Converts the Jaumann tangent to the spatial tangent of the FE weak form,
///
/// ```text
/// c_ijkl = C_ijkl - 1/2 (d_ik s_jl + d_il s_jk + s_ik d_jl + s_il d_jk)
///          + s_ij d_kl
/// ```
pub fn spatial_tangent(c_jaumann: &Tangent4, sigma: &Mat3) -> Tangent4 {
    let mut c = Tangent4::zeros();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for &(i, j) in VOIGT.iter() {
        for &(k, l) in VOIGT.iter() {
            let corr = -0.5
                * (delta(i, k) * sigma[(j, l)]
                    + delta(i, l) * sigma[(j, k)]
                    + sigma[(i, k)] * delta(j, l)
                    + sigma[(i, l)] * delta(j, k))
                + sigma[(i, j)] * delta(k, l);
            c.set(i, j, k, l, c_jaumann.get(i, j, k, l) + corr);
        }
    }
    c
}
