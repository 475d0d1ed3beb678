//! Second-order fiber orientation tensors and their decomposition into
//! principal fiber families.
//!
//! A fiber microstructure is summarized by `A = sum_k w_k a_k (x) a_k`.
//! The eigenvectors of `A` define the principal fiber directions and the
//! eigenvalues distribute the total fiber volume fraction over them, which
//! reduces an arbitrary planar distribution to at most two (three in 3D)
//! discrete families for the constitutive model.

use crate::material::FiberFamily;
use crate::tensor::{sym_eig, Mat3, Vec3};
use thiserror::Error;

/// Eigenvalues below this threshold carry no meaningful fiber content and
/// are dropped instead of becoming zero-weight families.
pub const LAMBDA_MIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum OrientationError {
    #[error("fiber specification contains no fibers")]
    Empty,
    #[error("weights must sum to 1, got {0}")]
    BadWeights(f64),
    #[error("total fiber volume fraction must lie in (0, 1), got {0}")]
    BadVolumeFraction(f64),
}

/// Symmetric, positive semi-definite, unit-trace orientation tensor.
#[derive(Debug, Clone, Copy)]
pub struct OrientationTensor(pub Mat3);

impl OrientationTensor {
    /// In-plane isotropic limit, `diag(1/2, 1/2, 0)`.
    pub fn isotropic_2d() -> Self {
        OrientationTensor(Mat3::from_diagonal(&Vec3::new(0.5, 0.5, 0.0)))
    }
}

/// Planar fiber specification, either an explicit angle list with weights or
/// one of the presets used by the benchmark configurations. Angles are in
/// degrees measured from the x-axis; fibers stay strictly in-plane.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberSpec {
    /// Explicit list of (angle_deg, weight) pairs; weights must sum to 1.
    Angles(Vec<(f64, f64)>),
    /// All fibers share one direction.
    Aligned { angle_deg: f64 },
    /// Two families at the given angles and weights.
    Balanced {
        angle1_deg: f64,
        angle2_deg: f64,
        w1: f64,
        w2: f64,
    },
    /// `n` fibers at seeded uniform angles in [0, 180).
    Random2d { n: usize, seed: u64 },
}

/// SplitMix64 stream; the algorithm is frozen here so that seeded jobs and
/// their golden outputs never drift across releases.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit_dir(angle_deg: f64) -> Vec3 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    Vec3::new(c, s, 0.0)
}

/// Builds the orientation tensor `A = sum_k w_k a_k (x) a_k` from a spec.
pub fn build_orientation(spec: &FiberSpec) -> Result<OrientationTensor, OrientationError> {
    let pairs: Vec<(f64, f64)> = match spec {
        FiberSpec::Angles(list) => {
            if list.is_empty() {
                return Err(OrientationError::Empty);
            }
            let total: f64 = list.iter().map(|(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(OrientationError::BadWeights(total));
            }
            list.clone()
        }
        FiberSpec::Aligned { angle_deg } => vec![(*angle_deg, 1.0)],
        FiberSpec::Balanced {
            angle1_deg,
            angle2_deg,
            w1,
            w2,
        } => {
            let total = w1 + w2;
            if (total - 1.0).abs() > 1e-9 {
                return Err(OrientationError::BadWeights(total));
            }
            vec![(*angle1_deg, *w1), (*angle2_deg, *w2)]
        }
        FiberSpec::Random2d { n, seed } => {
            if *n == 0 {
                return Err(OrientationError::Empty);
            }
            let mut state = *seed;
            let w = 1.0 / *n as f64;
            (0..*n)
                .map(|_| {
                    let u = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
                    (180.0 * u, w)
                })
                .collect()
        }
    };

    let mut a = Mat3::zeros();
    for (angle, w) in pairs {
        let d = unit_dir(angle);
        a += w * d * d.transpose();
    }
    Ok(OrientationTensor(a))
}

/// Decomposes an orientation tensor into principal fiber families carrying
/// the total fiber volume fraction.
///
/// Families with eigenvalues below [`LAMBDA_MIN`] are dropped; the retained
/// fractions are `v_f lambda_i / sum lambda_j`, with the largest family
/// absorbing the rounding residual so the sum is conserved exactly. The
/// matrix fraction is `1 - v_f`.
pub fn decompose_families(
    a: &OrientationTensor,
    v_f_total: f64,
) -> Result<Vec<FiberFamily>, OrientationError> {
    if !(v_f_total > 0.0 && v_f_total < 1.0) {
        return Err(OrientationError::BadVolumeFraction(v_f_total));
    }
    let eig = sym_eig(&a.0).expect("orientation tensor is symmetric");
    let retained: Vec<(f64, Vec3)> = (0..3)
        .filter(|&i| eig.values[i] >= LAMBDA_MIN)
        .map(|i| (eig.values[i], eig.vectors[i]))
        .collect();
    if retained.is_empty() {
        return Err(OrientationError::Empty);
    }
    let lam_sum: f64 = retained.iter().map(|(l, _)| l).sum();
    let mut families: Vec<FiberFamily> = retained
        .iter()
        .map(|(lam, dir)| FiberFamily::new(*dir, v_f_total * lam / lam_sum))
        .collect();
    // Exact volume conservation: the largest family absorbs the rounding.
    let tail: f64 = families[1..].iter().map(|f| f.v_f).sum();
    families[0].v_f = v_f_total - tail;
    Ok(families)
}
