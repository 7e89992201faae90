use nalgebra::{Matrix6, Vector3};

use crate::spatial::{cross_motion, motion, se3_exp, velocity_transform, MotionVector};

/// Pitch used for helical joints when none is given, in m/rad.
pub const DEFAULT_PITCH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Helical,
}

impl JointKind {
    pub fn name(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Helical => "helical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "revolute" => Some(JointKind::Revolute),
            "prismatic" => Some(JointKind::Prismatic),
            "helical" => Some(JointKind::Helical),
            _ => None,
        }
    }
}

/// One-degree-of-freedom joint about or along a unit axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointType {
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    /// Screw pitch in m/rad, only read for helical joints.
    pub pitch: f64,
}

impl JointType {
    pub fn revolute(axis: Vector3<f64>) -> Self {
        Self {
            kind: JointKind::Revolute,
            axis,
            pitch: DEFAULT_PITCH,
        }
    }

    pub fn prismatic(axis: Vector3<f64>) -> Self {
        Self {
            kind: JointKind::Prismatic,
            axis,
            pitch: DEFAULT_PITCH,
        }
    }

    pub fn helical(axis: Vector3<f64>, pitch: f64) -> Self {
        Self {
            kind: JointKind::Helical,
            axis,
            pitch,
        }
    }

    /// Joint velocity subspace `Γ`, constant in the joint frame.
    pub fn motion_subspace(&self) -> MotionVector {
        let a = self.axis;
        match self.kind {
            JointKind::Revolute => motion(&Vector3::zeros(), &a),
            JointKind::Prismatic => motion(&a, &Vector3::zeros()),
            JointKind::Helical => motion(&(a * self.pitch), &a),
        }
    }

    pub fn is_valid(&self) -> bool {
        (self.axis.norm() - 1.0).abs() <= 1e-12 && self.pitch.is_finite()
    }
}

/// `ⁱX_{λ(i)|i}` and `Γ` at joint position `s`.
///
/// The child frame is displaced from the predecessor frame by `exp(s·Γ)`,
/// so the returned transform is built from `exp(−s·Γ)`.
pub fn jcalc(joint: &JointType, s: f64) -> (Matrix6<f64>, MotionVector) {
    let gamma = joint.motion_subspace();
    (velocity_transform(&se3_exp(&(-s * gamma))), gamma)
}

/// `∂ⁱX_{λ(i)|i}/∂s`.
pub fn jcalc_deriv(joint: &JointType, s: f64) -> Matrix6<f64> {
    let (x, gamma) = jcalc(joint, s);
    -cross_motion(&gamma) * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::skew;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn central_diff(joint: &JointType, s: f64, h: f64) -> Matrix6<f64> {
        (jcalc(joint, s + h).0 - jcalc(joint, s - h).0) / (2.0 * h)
    }

    fn arb_joint() -> impl Strategy<Value = JointType> {
        (0..3usize, 0..3usize, 0.01..0.5f64).prop_map(|(k, ax, pitch)| {
            let axis = Vector3::ith(ax, 1.0);
            match k {
                0 => JointType::revolute(axis),
                1 => JointType::prismatic(axis),
                _ => JointType::helical(axis, pitch),
            }
        })
    }

    #[test]
    fn revolute_z_at_zero() {
        let (x, g) = jcalc(&JointType::revolute(Vector3::z()), 0.0);
        assert_eq!(x, Matrix6::identity());
        assert_eq!(g, MotionVector::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn prismatic_x_translates_backwards() {
        let (x, g) = jcalc(&JointType::prismatic(Vector3::x()), 0.5);
        assert_eq!(g, MotionVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let mut expected = Matrix6::identity();
        expected
            .fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&skew(&Vector3::new(-0.5, 0.0, 0.0)));
        assert_eq!(x, expected);
    }

    #[test]
    fn helical_z_is_screw_motion() {
        let h = 0.2;
        let theta = 0.7;
        let joint = JointType::helical(Vector3::z(), h);
        let (x, g) = jcalc(&joint, theta);
        assert_eq!(g, MotionVector::new(0.0, 0.0, h, 0.0, 0.0, 1.0));
        // ⁱH_{λ|i} rotates by −θ about z and translates by −hθ along z.
        let (s, c) = (-theta).sin_cos();
        let r = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let o = Vector3::new(0.0, 0.0, -h * theta);
        let expected = velocity_transform(&crate::spatial::Pose::new(r, o));
        assert!((x - expected).amax() <= 1e-15);
    }

    #[test]
    fn prismatic_derivative_is_constant() {
        let joint = JointType::prismatic(Vector3::y());
        let d0 = jcalc_deriv(&joint, 0.0);
        let d1 = jcalc_deriv(&joint, 1.3);
        assert!((d0 - d1).amax() <= 1e-15);
    }

    #[test]
    fn revolute_derivative_matches_fd_at_zero() {
        let joint = JointType::revolute(Vector3::z());
        let err = (jcalc_deriv(&joint, 0.0) - central_diff(&joint, 0.0, 1e-6)).amax();
        assert!(err <= 1e-8, "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn derivative_matches_central_difference(joint in arb_joint(), s in -3.0..3.0f64) {
            let err = (jcalc_deriv(&joint, s) - central_diff(&joint, s, 1e-6)).amax();
            prop_assert!(err <= 1e-7, "err {}", err);
        }
    }
}
