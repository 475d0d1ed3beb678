//! Minimal 3x3 tensor algebra for the constitutive and tangent layers.
//!
//! Everything here operates on plain `nalgebra` 3x3 matrices. The routines are
//! deliberately small-scale: deviators, Frobenius norms, matrix exponentials,
//! polar decompositions and symmetric eigendecompositions of second-order
//! tensors. No general N x N linear algebra lives here.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Second-order tensor in 3D (deformation gradients, stresses, ...).
pub type Mat3 = Matrix3<f64>;
/// Vector in 3D (fiber directions, eigenvectors).
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum TensorError {
    /// det(F) is non-positive or numerically singular.
    #[error("degenerate deformation gradient: det = {det:.3e}")]
    DegenerateDeformation { det: f64 },
    /// Input violated the symmetry contract of `sym_eig`.
    #[error("matrix is not symmetric: |A - A^T| = {asym:.3e} relative")]
    NotSymmetric { asym: f64 },
}

/// Sorted eigendecomposition of a symmetric 3x3 tensor.
///
/// Eigenvalues are ordered descending and each eigenvector is normalized with
/// its largest-magnitude component positive, so downstream indexing (fiber
/// families) is reproducible. When eigenvalues are nearly degenerate
/// (gap < ~1e-9) the returned vectors are *an* orthonormal basis of the
/// eigenspace; callers must not rely on how a degenerate space is split.
#[derive(Debug, Clone)]
pub struct SymEig3 {
    /// Eigenvalues, `values[0] >= values[1] >= values[2]`.
    pub values: [f64; 3],
    /// Orthonormal eigenvectors paired with `values`.
    pub vectors: [Vec3; 3],
}

impl SymEig3 {
    /// Rebuilds `sum_i lambda_i n_i (x) n_i`.
    pub fn reconstruct(&self) -> Mat3 {
        let mut a = Mat3::zeros();
        for i in 0..3 {
            a += self.values[i] * self.vectors[i] * self.vectors[i].transpose();
        }
        a
    }
}

/// Deviatoric part `T - tr(T)/3 I`.
pub fn dev(t: &Mat3) -> Mat3 {
    let p = t.trace() / 3.0;
    let mut d = *t;
    d[(0, 0)] -= p;
    d[(1, 1)] -= p;
    d[(2, 2)] -= p;
    d
}

/// Frobenius norm `sqrt(sum_ij T_ij^2)`.
pub fn frob(t: &Mat3) -> f64 {
    t.norm()
}

/// Matrix exponential by scaling-and-squaring with a Pade approximant.
///
/// For a traceless argument the result is unimodular up to rounding,
/// `det(exp(L)) = exp(tr L) = 1`, which is what keeps the internal
/// deformation gradients isochoric under the exponential-map update.
pub fn mat_exp(l: &Mat3) -> Mat3 {
    l.exp()
}

/// Polar decomposition `F = R U` with `R` proper orthogonal and `U` symmetric
/// positive definite, computed through the spectral square root of `F^T F`.
pub fn polar(f: &Mat3) -> Result<(Mat3, Mat3), TensorError> {
    let det = f.determinant();
    if det.is_nan() || det <= 1e-12 {
        return Err(TensorError::DegenerateDeformation { det });
    }
    let c = f.transpose() * f;
    let eig = sym_eig(&sym(&c))?;
    let mut u = Mat3::zeros();
    let mut u_inv = Mat3::zeros();
    for i in 0..3 {
        // C is SPD here, so all eigenvalues are positive.
        let s = eig.values[i].max(0.0).sqrt();
        let nn = eig.vectors[i] * eig.vectors[i].transpose();
        u += s * nn;
        u_inv += nn / s;
    }
    let r = f * u_inv;
    Ok((r, u))
}

/// Cyclic Jacobi diagonalization of a symmetric 3x3 matrix. At this size the
/// sweeps converge quadratically and both the eigenvector orthogonality and
/// the reconstruction error stay at machine precision, which the downstream
/// polar decomposition relies on.
fn jacobi_eig(a0: &Mat3) -> ([f64; 3], Mat3) {
    let mut a = *a0;
    let mut v = Mat3::identity();
    let scale = frob(&a);
    if scale == 0.0 {
        return ([0.0; 3], v);
    }
    for _ in 0..50 {
        let off = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2)).sqrt();
        if off <= 1e-16 * scale {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = if tau >= 0.0 {
                1.0 / (tau + (1.0 + tau * tau).sqrt())
            } else {
                1.0 / (tau - (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let mut j = Mat3::identity();
            j[(p, p)] = c;
            j[(q, q)] = c;
            j[(p, q)] = s;
            j[(q, p)] = -s;
            a = j.transpose() * a * j;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= j;
        }
    }
    ([a[(0, 0)], a[(1, 1)], a[(2, 2)]], v)
}

/// Symmetric eigendecomposition with the `SymEig3` ordering contract.
pub fn sym_eig(a: &Mat3) -> Result<SymEig3, TensorError> {
    let scale = frob(a);
    let asym = frob(&(a - a.transpose()));
    if scale > 0.0 && asym > 1e-10 * scale {
        return Err(TensorError::NotSymmetric { asym: asym / scale });
    }
    let (vals, vecs) = jacobi_eig(&sym(a));
    let mut pairs: Vec<(f64, Vec3)> = (0..3)
        .map(|i| (vals[i], vecs.column(i).into_owned()))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let mut values = [0.0; 3];
    let mut vectors = [Vec3::zeros(); 3];
    for (i, (lam, mut v)) in pairs.into_iter().enumerate() {
        // Deterministic sign: largest-magnitude component made positive.
        let mut k = 0;
        for j in 1..3 {
            if v[j].abs() > v[k].abs() {
                k = j;
            }
        }
        if v[k] < 0.0 {
            v = -v;
        }
        values[i] = lam;
        vectors[i] = v.normalize();
    }
    Ok(SymEig3 { values, vectors })
}

/// Symmetrizes a nearly-symmetric tensor, `(A + A^T)/2`.
pub fn sym(a: &Mat3) -> Mat3 {
    (a + a.transpose()) * 0.5
}

/// Rotation about the z-axis by `angle_rad`, the in-plane rotation used by
/// the 2D drivers and mesh-level fiber specifications.
pub fn rot_z(angle_rad: f64) -> Mat3 {
    let (s, c) = angle_rad.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
