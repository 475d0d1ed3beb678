//! Phase-field fracture ingredients: the quadratic degradation function, the
//! anisotropic crack-resistance tensor, the irreversibility update of the
//! history field and the homogeneous-state closed form used as a
//! verification oracle by the FEM tests.

use crate::orientation::OrientationTensor;
use crate::tensor::Mat3;

/// Fracture parameters of the regularized crack functional.
#[derive(Debug, Clone, Copy)]
pub struct FractureParams {
    /// Critical energy release rate (N/mm).
    pub g_c: f64,
    /// Regularization length scale (mm).
    pub l0: f64,
    /// Anisotropy weight of the crack-resistance tensor.
    pub alpha_hat: f64,
    /// Residual stiffness retained at full damage.
    pub k_residual: f64,
}

impl Default for FractureParams {
    fn default() -> Self {
        Self {
            g_c: 0.19,
            l0: 0.02,
            alpha_hat: 10.0,
            k_residual: 1e-6,
        }
    }
}

/// Anisotropic crack-resistance tensor `A_hat = I + alpha_hat A`. Its
/// eigenvalues are >= 1, so anisotropy can only increase the resistance.
#[derive(Debug, Clone, Copy)]
pub struct AnisoTensor(pub Mat3);

/// Quadratic degradation `g = (1 - phi)^2 + k` and its derivatives. The
/// argument is clamped to [0, 1]; `g(0) = 1 + k`, `g(1) = k`, `g'(1) = 0`.
pub fn degradation(phi: f64, k_residual: f64) -> (f64, f64, f64) {
    let p = phi.clamp(0.0, 1.0);
    let one_m = 1.0 - p;
    (one_m * one_m + k_residual, -2.0 * one_m, 2.0)
}

/// Builds `A_hat = I + alpha_hat A`; `alpha_hat = 0` recovers the isotropic
/// model.
pub fn aniso_tensor(a: &OrientationTensor, alpha_hat: f64) -> AnisoTensor {
    AnisoTensor(Mat3::identity() + alpha_hat * a.0)
}

/// Irreversible history update `H <- max(H, Y)`.
pub fn update_history(h: f64, y: f64) -> f64 {
    h.max(y)
}

/// Closed-form phase field of a homogeneous state with zero gradient,
/// `phi = 2H / (G_c/l0 + 2H)`. Verification oracle only; the FEM assembles
/// the full weak form instead.
pub fn homogeneous_phi(h: f64, fp: &FractureParams) -> f64 {
    2.0 * h / (fp.g_c / fp.l0 + 2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orientation::{build_orientation, FiberSpec};
    use crate::tensor::{frob, sym_eig, Vec3};
    use approx::assert_relative_eq;

    const K: f64 = 1e-6;

    #[test]
    fn degradation_endpoint_conditions() {
        let (g, gp, gpp) = degradation(0.0, K);
        assert_eq!((g, gp, gpp), (1.0 + K, -2.0, 2.0));
        let (g, gp, gpp) = degradation(1.0, K);
        assert_eq!((g, gp, gpp), (K, 0.0, 2.0));
        let (g, gp, _) = degradation(0.5, K);
        assert_eq!((g, gp), (0.25 + K, -1.0));
        // Monotone decrease and clamping.
        assert!(degradation(0.2, K).0 > degradation(0.8, K).0);
        assert_eq!(degradation(-3.0, K).0, 1.0 + K);
        assert_eq!(degradation(7.0, K).0, K);
    }

    #[test]
    fn aniso_tensor_examples() {
        let a = build_orientation(&FiberSpec::Aligned { angle_deg: 30.0 }).unwrap();
        let iso = aniso_tensor(&a, 0.0);
        assert!(frob(&(iso.0 - Mat3::identity())) < 1e-15);

        let half = crate::orientation::OrientationTensor::isotropic_2d();
        let t = aniso_tensor(&half, 10.0);
        assert_relative_eq!(t.0[(0, 0)], 6.0, epsilon = 1e-14);
        assert_relative_eq!(t.0[(1, 1)], 6.0, epsilon = 1e-14);

        let e1 = build_orientation(&FiberSpec::Aligned { angle_deg: 0.0 }).unwrap();
        let t = aniso_tensor(&e1, 10.0);
        assert_relative_eq!(t.0[(0, 0)], 11.0, epsilon = 1e-14);
        assert_relative_eq!(t.0[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn aniso_tensor_eigenvalues_at_least_one() {
        let a = build_orientation(&FiberSpec::Angles(vec![(15.0, 0.6), (70.0, 0.4)])).unwrap();
        let t = aniso_tensor(&a, 7.5);
        let eig = sym_eig(&t.0).unwrap();
        assert!(eig.values[2] >= 1.0 - 1e-12);
        assert!(frob(&(t.0 - t.0.transpose())) < 1e-15);
    }

    #[test]
    fn history_is_a_max() {
        assert_eq!(update_history(2.0, 1.0), 2.0);
        assert_eq!(update_history(1.0, 2.0), 2.0);
        assert_eq!(update_history(0.0, 0.0), 0.0);
    }

    #[test]
    fn homogeneous_phi_closed_form() {
        let fp = FractureParams::default();
        assert_eq!(homogeneous_phi(0.0, &fp), 0.0);
        // H = G_c / (2 l0) = 4.75 MPa balances to phi = 1/2.
        assert_relative_eq!(fp.g_c / (2.0 * fp.l0), 4.75, epsilon = 1e-14);
        assert_relative_eq!(homogeneous_phi(4.75, &fp), 0.5, epsilon = 1e-14);
        assert!(homogeneous_phi(1e12, &fp) > 1.0 - 1e-10);

        // Strictly increasing, range [0, 1).
        let mut prev = -1.0;
        for i in 0..200 {
            let h = 0.1 * i as f64;
            let phi = homogeneous_phi(h, &fp);
            assert!(phi > prev && (0.0..1.0).contains(&phi));
            prev = phi;
        }
    }

    #[test]
    fn aniso_gradient_penalty_direction() {
        // For fibers along e1, the quadratic form on a unit gradient along e1
        // is (1 + alpha) times the form along e2.
        let e1 = build_orientation(&FiberSpec::Aligned { angle_deg: 0.0 }).unwrap();
        let t = aniso_tensor(&e1, 10.0);
        let gx = Vec3::x();
        let gy = Vec3::y();
        let qx = gx.dot(&(t.0 * gx));
        let qy = gy.dot(&(t.0 * gy));
        assert_relative_eq!(qx / qy, 11.0, epsilon = 1e-12);
    }
}
