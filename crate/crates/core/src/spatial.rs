//! Lie-group and 6D spatial algebra.
//!
//! Twists are stored linear-first, `[v; ω]`, and wrenches force-first,
//! `[f; m]`, so the power pairing between them is the plain dot product.
//! With that ordering the motion cross product reads
//!
//! ```text
//! v× = [ω∧  v∧]
//!      [0   ω∧]
//! ```
//!
//! Poses are kept as `(R, o)` pairs. A velocity transform `ᶜX_D` is built from
//! the pose `ᶜH_D` and maps twists expressed in frame `D` to frame `C`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// 6D twist or acceleration `[linear; angular]`.
pub type MotionVector = Vector6<f64>;
/// 6D wrench or momentum `[force; moment]`.
pub type ForceVector = Vector6<f64>;
/// Velocity transformation `ᶜX_D`.
pub type VelocityTransform = Matrix6<f64>;
/// 6×6 rigid-body (or composite/articulated) inertia.
pub type SpatialInertia = Matrix6<f64>;

/// Below this rotation angle the exponential and logarithm use series expansions.
const SMALL_ANGLE: f64 = 1e-8;

/// Homogeneous transform stored as rotation and origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub origin: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, origin: Vector3<f64>) -> Self {
        Self { rotation, origin }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            origin: Vector3::zeros(),
        }
    }

    pub fn from_translation(origin: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            origin,
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            origin: self.rotation * other.origin + self.origin,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            origin: -(rt * self.origin),
        }
    }

    /// Maps a point expressed in the child frame to the parent frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.origin
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut h = Matrix4::identity();
        h.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        h.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.origin);
        h
    }

    pub fn from_homogeneous(h: &Matrix4<f64>) -> Pose {
        Pose {
            rotation: h.fixed_view::<3, 3>(0, 0).into_owned(),
            origin: h.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    /// `max |RᵀR − I|` plus the distance of `det R` from one.
    pub fn orthogonality_error(&self) -> f64 {
        let e = self.rotation.transpose() * self.rotation - Matrix3::identity();
        e.amax() + (self.rotation.determinant() - 1.0).abs()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.orthogonality_error() <= tol && self.origin.iter().all(|x| x.is_finite())
    }
}

/// `a∧`, the skew-symmetric matrix with `a∧ b = a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inverse of [`skew`] on the skew part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

pub fn linear(v: &Vector6<f64>) -> Vector3<f64> {
    v.fixed_rows::<3>(0).into_owned()
}

pub fn angular(v: &Vector6<f64>) -> Vector3<f64> {
    v.fixed_rows::<3>(3).into_owned()
}

pub fn motion(linear: &Vector3<f64>, angular: &Vector3<f64>) -> MotionVector {
    Vector6::new(
        linear.x, linear.y, linear.z, angular.x, angular.y, angular.z,
    )
}

fn blocks(
    tl: &Matrix3<f64>,
    tr: &Matrix3<f64>,
    bl: &Matrix3<f64>,
    br: &Matrix3<f64>,
) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(tl);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(tr);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(bl);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(br);
    m
}

/// Rotation `exp(ω∧)` together with the left Jacobian `V` used for the
/// translational part of the SE(3) exponential.
fn so3_exp_with_v(omega: &Vector3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let theta2 = omega.norm_squared();
    let theta = theta2.sqrt();
    let w = skew(omega);
    let w2 = w * w;
    let (a, b, c) = if theta < SMALL_ANGLE {
        (
            1.0 - theta2 / 6.0,
            0.5 - theta2 / 24.0,
            1.0 / 6.0 - theta2 / 120.0,
        )
    } else {
        let (s, co) = theta.sin_cos();
        (
            s / theta,
            (1.0 - co) / theta2,
            (theta - s) / (theta2 * theta),
        )
    };
    let i = Matrix3::identity();
    (i + w * a + w2 * b, i + w * b + w2 * c)
}

/// SE(3) exponential of a linear-first twist coordinate vector.
pub fn se3_exp(xi: &Vector6<f64>) -> Pose {
    let (rotation, v) = so3_exp_with_v(&angular(xi));
    Pose {
        rotation,
        origin: v * linear(xi),
    }
}

/// SO(3) exponential (Rodrigues).
pub fn so3_exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    so3_exp_with_v(omega).0
}

/// Principal-branch SE(3) logarithm. Fails when the rotation angle is within
/// `1e-6` of `π`.
pub fn se3_log(p: &Pose) -> Result<Vector6<f64>> {
    let r = &p.rotation;
    let axis_sin = vee(r); // sin(θ)·axis
    let cos_theta = 0.5 * (r.trace() - 1.0);
    let theta = axis_sin.norm().atan2(cos_theta);
    if theta >= std::f64::consts::PI - 1e-6 {
        return Err(Error::LogBranch { angle: theta });
    }
    let theta2 = theta * theta;
    let (scale, d) = if theta < SMALL_ANGLE {
        (1.0 + theta2 / 6.0, 1.0 / 12.0 + theta2 / 720.0)
    } else {
        let (s, c) = theta.sin_cos();
        (theta / s, (1.0 - theta * s / (2.0 * (1.0 - c))) / theta2)
    };
    let omega = axis_sin * scale;
    let w = skew(&omega);
    let v_inv = Matrix3::identity() - w * 0.5 + w * w * d;
    Ok(motion(&(v_inv * p.origin), &omega))
}

/// `ᶜX_D = [R, o∧R; 0, R]` for the pose `ᶜH_D = (R, o)`.
pub fn velocity_transform(p: &Pose) -> VelocityTransform {
    let r = &p.rotation;
    blocks(r, &(skew(&p.origin) * r), &Matrix3::zeros(), r)
}

/// `_C X^D = (ᴰX_C)ᵀ = [R, 0; o∧R, R]` for the pose `ᶜH_D = (R, o)`.
pub fn wrench_transform(p: &Pose) -> Matrix6<f64> {
    let r = &p.rotation;
    blocks(r, &Matrix3::zeros(), &(skew(&p.origin) * r), r)
}

/// Motion cross product `v×`.
pub fn cross_motion(v: &MotionVector) -> Matrix6<f64> {
    let w = skew(&angular(v));
    blocks(&w, &skew(&linear(v)), &Matrix3::zeros(), &w)
}

/// Twist/wrench cross product `v×* = −(v×)ᵀ`.
pub fn cross_force(v: &MotionVector) -> Matrix6<f64> {
    let w = skew(&angular(v));
    blocks(&w, &Matrix3::zeros(), &skew(&linear(v)), &w)
}

/// Matrix `J` with `v ×* f = J v` for a fixed wrench `f`.
///
/// Used to differentiate `v ×* f` with respect to `v` column by column.
pub fn cross_force_jacobian(f: &ForceVector) -> Matrix6<f64> {
    let fs = -skew(&linear(f));
    let ns = -skew(&angular(f));
    blocks(&Matrix3::zeros(), &fs, &fs, &ns)
}

/// Spatial inertia of a rigid body with mass `m`, center of mass `c` and
/// rotational inertia `ic` about the center of mass, all in the body frame.
pub fn rigid_body_inertia(m: f64, c: &Vector3<f64>, ic: &Matrix3<f64>) -> SpatialInertia {
    let cs = skew(c);
    blocks(
        &(Matrix3::identity() * m),
        &(-cs * m),
        &(cs * m),
        &(ic - cs * cs * m),
    )
}

/// Builds a symmetric 6×6 matrix from its 21 upper-triangular entries, row-major.
pub fn symmetric_from_upper(values: &[f64; 21]) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    let mut k = 0;
    for i in 0..6 {
        for j in i..6 {
            m[(i, j)] = values[k];
            m[(j, i)] = values[k];
            k += 1;
        }
    }
    m
}

pub fn upper_triangle(m: &Matrix6<f64>) -> [f64; 21] {
    let mut out = [0.0; 21];
    let mut k = 0;
    for i in 0..6 {
        for j in i..6 {
            out[k] = m[(i, j)];
            k += 1;
        }
    }
    out
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &Matrix6<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Symmetric to `1e-12` (relative to the largest entry) and positive definite.
pub fn is_spd(m: &Matrix6<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= 1e-12 * scale && min_eigenvalue(m) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn arb_vec6(scale: f64) -> impl Strategy<Value = Vector6<f64>> {
        proptest::array::uniform6(-scale..scale).prop_map(Vector6::from)
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (arb_vec6(1.0), proptest::array::uniform3(-2.0..2.0f64)).prop_map(|(xi, o)| {
            let mut p = se3_exp(&xi);
            p.origin = Vector3::from(o);
            p
        })
    }

    // Rodrigues evaluated directly from axis/angle, independent of so3_exp_with_v.
    fn rodrigues(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
        let k = skew(&axis);
        Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(se3_exp(&Vector6::zeros()), Pose::identity());
    }

    #[test]
    fn exp_quarter_turn_about_x() {
        let p = se3_exp(&Vector6::new(0.0, 0.0, 0.0, FRAC_PI_2, 0.0, 0.0));
        let expected = rodrigues(Vector3::x(), FRAC_PI_2);
        assert_relative_eq!(p.rotation, expected, epsilon = 1e-15);
        assert_relative_eq!(
            p.rotation,
            Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
            epsilon = 1e-15
        );
        assert_eq!(p.origin, Vector3::zeros());
    }

    #[test]
    fn log_of_identity_and_pure_translation() {
        assert_eq!(se3_log(&Pose::identity()).unwrap(), Vector6::zeros());
        let xi = Vector6::new(0.1, 0.2, 0.3, 0.0, 0.0, 0.0);
        assert_eq!(se3_log(&se3_exp(&xi)).unwrap(), xi);
    }

    #[test]
    fn log_rejects_half_turn() {
        let p = se3_exp(&Vector6::new(0.0, 0.0, 0.0, 0.0, std::f64::consts::PI, 0.0));
        assert!(matches!(se3_log(&p), Err(Error::LogBranch { .. })));
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let xi = Vector6::new(0.3, -0.2, 0.1, 1e-9, -2e-9, 5e-10);
        let p = se3_exp(&xi);
        assert!(p.is_valid(1e-14));
        assert_relative_eq!(se3_log(&p).unwrap(), xi, epsilon = 1e-15);
    }

    #[test]
    fn pure_translation_velocity_transform() {
        let p = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let x = velocity_transform(&p);
        let expected = blocks(
            &Matrix3::identity(),
            &skew(&Vector3::x()),
            &Matrix3::zeros(),
            &Matrix3::identity(),
        );
        assert_eq!(x, expected);
        assert_eq!(velocity_transform(&Pose::identity()), Matrix6::identity());
        assert_eq!(wrench_transform(&Pose::identity()), Matrix6::identity());
    }

    #[test]
    fn cross_motion_on_angular_basis_vector() {
        let v = Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let c = cross_motion(&v);
        let ez = skew(&Vector3::z());
        assert_eq!(c.fixed_view::<3, 3>(0, 0).into_owned(), ez);
        assert_eq!(c.fixed_view::<3, 3>(3, 3).into_owned(), ez);
        assert_eq!(c.fixed_view::<3, 3>(0, 3).into_owned(), Matrix3::zeros());
        assert_eq!(cross_motion(&Vector6::zeros()), Matrix6::zeros());
        assert_eq!(cross_force(&Vector6::zeros()), Matrix6::zeros());
    }

    #[test]
    fn single_body_newton_euler_matches_cross_force() {
        // A body with mass m at a point offset c from its frame origin,
        // spinning with ω and translating with v. The rate of change of
        // momentum in the body frame is 𝕄a + v ×* 𝕄v; check the linear part
        // against the point-mass formula m(a_c + ω × v_c) with v_c = v + ω × c.
        let m = 2.0;
        let c = Vector3::new(0.1, -0.3, 0.2);
        let inertia = rigid_body_inertia(m, &c, &Matrix3::zeros());
        let v = Vector6::new(0.3, 0.1, -0.2, 0.5, -0.4, 0.7);
        let a = Vector6::zeros();
        let f = inertia * a + cross_force(&v) * (inertia * v);
        let (lin, ang) = (linear(&v), angular(&v));
        let vc = lin + ang.cross(&c);
        // a_c = d/dt v_c (body frame) + ω × v_c with zero body acceleration:
        // d/dt(v + ω×c) = 0 so the force is m ω × v_c.
        let expected = ang.cross(&vc) * m;
        assert_relative_eq!(linear(&f), expected, epsilon = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn exp_log_roundtrip(xi in arb_vec6(1.5)) {
            prop_assume!(angular(&xi).norm() < std::f64::consts::PI - 0.1);
            let back = se3_log(&se3_exp(&xi)).unwrap();
            prop_assert!((back - xi).amax() <= 1e-10);
        }

        #[test]
        fn log_exp_roundtrip(p in arb_pose()) {
            if let Ok(xi) = se3_log(&p) {
                let q = se3_exp(&xi);
                prop_assert!((q.rotation - p.rotation).amax() <= 1e-10);
                prop_assert!((q.origin - p.origin).amax() <= 1e-10);
            }
        }

        #[test]
        fn velocity_transform_is_homomorphism(a in arb_pose(), b in arb_pose()) {
            let lhs = velocity_transform(&a.compose(&b));
            let rhs = velocity_transform(&a) * velocity_transform(&b);
            prop_assert!((lhs - rhs).amax() <= 1e-12);
            let id = velocity_transform(&a) * velocity_transform(&a.inverse());
            prop_assert!((id - Matrix6::identity()).amax() <= 1e-12);
        }

        #[test]
        fn wrench_transform_preserves_power(p in arb_pose(), f in arb_vec6(2.0), v in arb_vec6(2.0)) {
            // ⟨_C X^D f, v_C⟩ = ⟨f, ᴰX_C v_C⟩
            let lhs = (wrench_transform(&p) * f).dot(&v);
            let rhs = f.dot(&(velocity_transform(&p.inverse()) * v));
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()));
            let t = wrench_transform(&p) - velocity_transform(&p.inverse()).transpose();
            prop_assert!(t.amax() <= 1e-12);
        }

        #[test]
        fn cross_products_are_dual(v in arb_vec6(3.0)) {
            prop_assert_eq!(cross_force(&v), -cross_motion(&v).transpose());
        }

        #[test]
        fn cross_motion_is_antisymmetric(a in arb_vec6(3.0), b in arb_vec6(3.0)) {
            let d = cross_motion(&a) * b + cross_motion(&b) * a;
            prop_assert!(d.amax() <= 1e-12);
        }

        #[test]
        fn cross_motion_satisfies_jacobi(a in arb_vec6(2.0), b in arb_vec6(2.0), c in arb_vec6(2.0)) {
            let br = |x: &Vector6<f64>, y: &Vector6<f64>| cross_motion(x) * y;
            let s = br(&a, &br(&b, &c)) + br(&b, &br(&c, &a)) + br(&c, &br(&a, &b));
            prop_assert!(s.amax() <= 1e-10);
        }

        #[test]
        fn cross_force_jacobian_matches_definition(v in arb_vec6(3.0), f in arb_vec6(3.0)) {
            let d = cross_force(&v) * f - cross_force_jacobian(&f) * v;
            prop_assert!(d.amax() <= 1e-12);
        }

        #[test]
        fn upper_triangle_roundtrip(vals in proptest::array::uniform21(-1.0..1.0f64)) {
            let m = symmetric_from_upper(&vals);
            prop_assert_eq!(upper_triangle(&m), vals);
            prop_assert_eq!(m, m.transpose());
        }
    }
}
