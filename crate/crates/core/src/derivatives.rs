//! Derivatives of the extended inverse dynamics with respect to the base pose
//! (left-trivialized), joint positions, base twist and joint velocities.
//!
//! Every sweep reads a workspace produced by one `eidamb` call and never
//! recomputes kinematics. Derivatives with respect to a vector are carried
//! as `6 × k` column blocks per body. Column-wise cross products use
//! `∂v × v_J = −(v_J×)·∂v` and `∂v ×* m = J(m)·∂v`.

use nalgebra::{DMatrix, Matrix3, Matrix6, Matrix6xX, Vector3};

use crate::dynamics::DynamicsWorkspace;
use crate::model::{jcalc_deriv, MultibodyModel};
use crate::spatial::{
    angular, cross_force, cross_force_jacobian, cross_motion, linear, skew, MotionVector,
};

type Cols = Matrix6xX<f64>;

/// Jacobians of `[τ̄_b; τ]`, each with `6 + n_J` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct IdJacobians {
    /// Left-trivialized derivative with respect to `H`, `n × 6`.
    pub dh: DMatrix<f64>,
    pub ds: DMatrix<f64>,
    pub dv: DMatrix<f64>,
    pub dr: DMatrix<f64>,
}

impl IdJacobians {
    /// `[dh | ds | dv | dr]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.dh.nrows();
        let nj = self.ds.ncols();
        let mut out = DMatrix::zeros(n, 12 + 2 * nj);
        out.columns_mut(0, 6).copy_from(&self.dh);
        out.columns_mut(6, nj).copy_from(&self.ds);
        out.columns_mut(6 + nj, 6).copy_from(&self.dv);
        out.columns_mut(12 + nj, nj).copy_from(&self.dr);
        out
    }

    pub fn blocks(&self) -> [&DMatrix<f64>; 4] {
        [&self.dh, &self.ds, &self.dv, &self.dr]
    }
}

/// Left-trivialized derivative of `⁰X_A·w` with respect to `ᴬH₀`, for a
/// vector `w` held fixed in frame `A`.
///
/// `r0a` is `⁰R_A` and `o` is `ᴬo₀`, the origin of `ᴬH₀`.
pub fn dxv_dh(r0a: &Matrix3<f64>, o: &Vector3<f64>, w: &MotionVector) -> Matrix6<f64> {
    let lin = linear(w);
    let ang = angular(w);
    let rt = r0a.transpose();
    let diag = r0a * skew(&ang) * rt;
    let off = r0a * skew(&(lin - o.cross(&ang))) * rt;
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&diag);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&off);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&diag);
    m
}

/// Shared body of the pose, twist and joint-velocity sweeps.
///
/// `dv0` and `dar0` seed the base; with `joint_seed` column `i − 1` of body
/// `i` additionally receives `Γ` and `v_i × Γ`.
fn rate_sweep(
    model: &MultibodyModel,
    ws: &DynamicsWorkspace,
    dv0: Cols,
    dar0: Cols,
    joint_seed: bool,
) -> DMatrix<f64> {
    let nb = model.n_bodies();
    let k = dv0.ncols();
    let mut dv = vec![Cols::zeros(k); nb + 1];
    let mut dar = vec![Cols::zeros(k); nb + 1];
    let mut dbc = vec![Cols::zeros(k); nb + 1];

    let m0 = model.inertia(0);
    let dm0 = m0 * &dv0;
    dbc[0] =
        m0 * &dar0 + cross_force_jacobian(&ws.momentum[0]) * &dv0 + cross_force(&ws.v[0]) * dm0;
    dv[0] = dv0;
    dar[0] = dar0;

    for i in 1..=nb {
        let p = model.parent(i);
        let x = &ws.x_up[i];
        let mut dvi = x * &dv[p];
        if joint_seed {
            let mut c = dvi.column_mut(i - 1);
            c += ws.gamma[i];
        }
        let mut dari = x * &dar[p] - cross_motion(&ws.v_joint[i]) * &dvi;
        if joint_seed {
            let mut c = dari.column_mut(i - 1);
            c += cross_motion(&ws.v[i]) * ws.gamma[i];
        }
        let mi = model.inertia(i);
        let dm = mi * &dvi;
        dbc[i] =
            mi * &dari + cross_force_jacobian(&ws.momentum[i]) * &dvi + cross_force(&ws.v[i]) * dm;
        dv[i] = dvi;
        dar[i] = dari;
    }

    for i in (1..=nb).rev() {
        let p = model.parent(i);
        let up = ws.x_up[i].transpose() * &dbc[i];
        dbc[p] += up;
    }

    let mut out = DMatrix::zeros(6 + nb, k);
    out.rows_mut(0, 6).copy_from(&dbc[0]);
    for i in 1..=nb {
        out.row_mut(5 + i)
            .copy_from(&(ws.gamma[i].transpose() * &dbc[i]));
    }
    out
}

fn pose_seeds(ws: &DynamicsWorkspace) -> (Cols, Cols) {
    let r0a = ws.base_pose_inv.rotation;
    let o = ws.base_pose_inv.inverse().origin;
    let dv0 = dxv_dh(&r0a, &o, &ws.world_twist);
    let dar0 = dxv_dh(&r0a, &o, &ws.gravity);
    (
        Cols::from_column_slice(dv0.as_slice()),
        Cols::from_column_slice(dar0.as_slice()),
    )
}

/// Left-trivialized derivative with respect to `H` holding the inertial-frame
/// base twist `ᴬv_{A,0}` fixed.
pub fn did_dh(model: &MultibodyModel, ws: &DynamicsWorkspace) -> DMatrix<f64> {
    let (dv0, dar0) = pose_seeds(ws);
    rate_sweep(model, ws, dv0, dar0, false)
}

/// Left-trivialized derivative with respect to `H` holding the body-frame
/// base twist `⁰v_{A,0}` fixed, as needed when the state carries the body
/// twist.
pub fn did_dh_body_twist(model: &MultibodyModel, ws: &DynamicsWorkspace) -> DMatrix<f64> {
    let (_, dar0) = pose_seeds(ws);
    rate_sweep(model, ws, Cols::zeros(6), dar0, false)
}

/// Derivative with respect to the base twist.
pub fn did_dv(model: &MultibodyModel, ws: &DynamicsWorkspace) -> DMatrix<f64> {
    rate_sweep(model, ws, Cols::identity(6), Cols::zeros(6), false)
}

/// Derivative with respect to the joint velocities.
pub fn did_dr(model: &MultibodyModel, ws: &DynamicsWorkspace) -> DMatrix<f64> {
    let nj = model.n_joints();
    rate_sweep(model, ws, Cols::zeros(nj), Cols::zeros(nj), true)
}

/// Derivative with respect to the joint positions, with the base and joint
/// accelerations stored in the workspace held fixed.
pub fn did_ds(model: &MultibodyModel, ws: &DynamicsWorkspace) -> DMatrix<f64> {
    let nb = model.n_bodies();
    let nj = nb;
    let zero = Cols::zeros(nj);

    let mut dx = vec![Matrix6::zeros(); nb + 1];
    let mut dv = vec![zero.clone(); nb + 1];
    let mut dar = vec![zero.clone(); nb + 1];
    let mut davp = vec![zero.clone(); nb + 1];
    let mut dbc = vec![zero.clone(); nb + 1];
    let mut dbvp = vec![zero.clone(); nb + 1];

    for i in 1..=nb {
        let p = model.parent(i);
        let x = &ws.x_up[i];
        dx[i] =
            jcalc_deriv(model.joint(i), ws.joint_pos[i - 1]) * model.fixed_velocity_transform(i);
        let c = i - 1;

        let mut dvi = x * &dv[p];
        add_col(&mut dvi, c, &(dx[i] * ws.v[p]));
        let vj_cross = cross_motion(&ws.v_joint[i]);
        let mut dari = x * &dar[p] - vj_cross * &dvi;
        add_col(&mut dari, c, &(dx[i] * ws.a_r[p]));
        let mut davpi = x * &davp[p] - vj_cross * &dvi;
        add_col(&mut davpi, c, &(dx[i] * ws.a_vp[p]));

        let mi = model.inertia(i);
        let dm = mi * &dvi;
        let common = cross_force_jacobian(&ws.momentum[i]) * &dvi + cross_force(&ws.v[i]) * dm;
        dbc[i] = mi * &dari + &common;
        dbvp[i] = mi * &davpi + common;
        dv[i] = dvi;
        dar[i] = dari;
        davp[i] = davpi;
    }

    // ∂𝕄^c_i/∂s_k for every body and joint.
    let mut dmc = vec![vec![Matrix6::zeros(); nj]; nb + 1];
    for i in (1..=nb).rev() {
        let p = model.parent(i);
        let x = ws.x_up[i];
        let xt = x.transpose();
        let dxt = dx[i].transpose();
        for k in 0..nj {
            let term = xt * dmc[i][k] * x;
            dmc[p][k] += term;
        }
        dmc[p][i - 1] += dxt * ws.mc[i] * x + xt * ws.mc[i] * dx[i];

        let up = xt * &dbc[i];
        dbc[p] += up;
        add_col(&mut dbc[p], i - 1, &(dxt * ws.bc[i]));
        let up = xt * &dbvp[i];
        dbvp[p] += up;
        add_col(&mut dbvp[p], i - 1, &(dxt * ws.bvp[i]));
    }

    let mut dmc0_a0 = zero.clone();
    for k in 0..nj {
        dmc0_a0.set_column(k, &(dmc[0][k] * ws.base_acc));
    }

    let mut out = DMatrix::zeros(6 + nb, nj);
    let mut da = vec![zero.clone(); nb + 1];
    let mut df0_rdd = zero.clone();
    for i in 1..=nb {
        let p = model.parent(i);
        let mut dai = ws.x_up[i] * &da[p];
        add_col(&mut dai, i - 1, &(dx[i] * ws.a_base[p]));

        let mut dmc_a = zero.clone();
        let mut df = zero.clone();
        for k in 0..nj {
            dmc_a.set_column(k, &(dmc[i][k] * ws.a_base[i]));
            df.set_column(k, &(dmc[i][k] * ws.gamma[i]));
        }
        let inner = dmc_a + ws.mc[i] * &dai + &dbc[i];
        out.row_mut(5 + i)
            .copy_from(&(ws.gamma[i].transpose() * inner));

        let mut f = ws.mc[i] * ws.gamma[i];
        let mut j = i;
        loop {
            let xt = ws.x_up[j].transpose();
            df = xt * df;
            add_col(&mut df, j - 1, &(dx[j].transpose() * f));
            f = xt * f;
            j = model.parent(j);
            if j == 0 {
                break;
            }
        }
        df0_rdd += df * ws.joint_acc[i - 1];
        da[i] = dai;
    }

    out.rows_mut(0, 6)
        .copy_from(&(dmc0_a0 + df0_rdd + &dbvp[0]));
    out
}

fn add_col(m: &mut Cols, c: usize, v: &MotionVector) {
    let mut col = m.column_mut(c);
    col += v;
}

/// All four Jacobians, with the pose derivative taken at fixed body twist.
pub fn id_jacobians(model: &MultibodyModel, ws: &DynamicsWorkspace) -> IdJacobians {
    IdJacobians {
        dh: did_dh_body_twist(model, ws),
        ds: did_ds(model, ws),
        dv: did_dv(model, ws),
        dr: did_dr(model, ws),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{default_gravity, eidamb, inverse_dynamics};
    use crate::model::{build_test_system, random_model, random_state, SystemState};
    use crate::spatial::{rigid_body_inertia, se3_exp, velocity_transform, Pose};
    use nalgebra::{DVector, Vector6};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = 1e-6;

    struct Point {
        model: MultibodyModel,
        state: SystemState,
        a0: Vector6<f64>,
        rdd: DVector<f64>,
        g: Vector6<f64>,
    }

    impl Point {
        fn new(model: MultibodyModel, seed: u64) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = random_state(seed, &model);
            let n = model.n_joints();
            Self {
                a0: Vector6::from_fn(|_, _| rng.random::<f64>()),
                rdd: DVector::from_fn(n, |_, _| rng.random::<f64>()),
                g: default_gravity(),
                model,
                state,
            }
        }

        fn id(&self, st: &SystemState) -> DVector<f64> {
            inverse_dynamics(&self.model, st, &self.a0, &self.rdd, &self.g).unwrap()
        }

        fn ws(&self) -> DynamicsWorkspace {
            eidamb(&self.model, &self.state, &self.a0, &self.rdd, &self.g)
                .unwrap()
                .1
        }

        /// Central differences of ID̄ along `k` directions produced by `perturb`.
        fn fd(
            &self,
            k: usize,
            perturb: impl Fn(&SystemState, usize, f64) -> SystemState,
        ) -> DMatrix<f64> {
            let n = self.model.n_dof();
            let mut out = DMatrix::zeros(n, k);
            for c in 0..k {
                let plus = self.id(&perturb(&self.state, c, H));
                let minus = self.id(&perturb(&self.state, c, -H));
                out.set_column(c, &((plus - minus) / (2.0 * H)));
            }
            out
        }
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / (1.0 + a.amax())
    }

    fn right_perturb(st: &SystemState, c: usize, d: f64) -> Pose {
        let mut xi = Vector6::zeros();
        xi[c] = d;
        st.base_pose.compose(&se3_exp(&xi))
    }

    fn check_all(p: &Point, tol: f64) {
        let ws = p.ws();
        let nj = p.model.n_joints();

        let fd_h_body = p.fd(6, |st, c, d| SystemState {
            base_pose: right_perturb(st, c, d),
            ..st.clone()
        });
        assert!(rel_err(&did_dh_body_twist(&p.model, &ws), &fd_h_body) <= tol);

        let world = ws.world_twist;
        let fd_h_world = p.fd(6, |st, c, d| {
            let pose = right_perturb(st, c, d);
            SystemState {
                base_twist: velocity_transform(&pose.inverse()) * world,
                base_pose: pose,
                ..st.clone()
            }
        });
        assert!(rel_err(&did_dh(&p.model, &ws), &fd_h_world) <= tol);

        let fd_s = p.fd(nj, |st, c, d| {
            let mut s = st.clone();
            s.joint_pos[c] += d;
            s
        });
        let e = rel_err(&did_ds(&p.model, &ws), &fd_s);
        assert!(e <= tol, "ds {e}");

        let fd_v = p.fd(6, |st, c, d| {
            let mut s = st.clone();
            s.base_twist[c] += d;
            s
        });
        assert!(rel_err(&did_dv(&p.model, &ws), &fd_v) <= tol);

        let fd_r = p.fd(nj, |st, c, d| {
            let mut s = st.clone();
            s.joint_vel[c] += d;
            s
        });
        assert!(rel_err(&did_dr(&p.model, &ws), &fd_r) <= tol);
    }

    #[test]
    fn test_system_matches_central_differences() {
        for seed in 0..5 {
            check_all(&Point::new(build_test_system(), seed), 1e-7);
        }
    }

    #[test]
    fn dxv_dh_zero_and_translation_cases() {
        let r = se3_exp(&Vector6::new(0.1, 0.2, 0.3, 0.4, 0.5, 0.6));
        assert_eq!(
            dxv_dh(&r.rotation, &r.origin, &Vector6::zeros()),
            Matrix6::zeros()
        );
        let v = Vector3::new(1.0, -2.0, 0.5);
        let m = dxv_dh(
            &Matrix3::identity(),
            &Vector3::zeros(),
            &Vector6::new(v.x, v.y, v.z, 0.0, 0.0, 0.0),
        );
        let mut expected = Matrix6::zeros();
        expected.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(&v));
        assert_eq!(m, expected);
    }

    #[test]
    fn pose_derivative_conventions_differ_by_twist_term() {
        let p = Point::new(build_test_system(), 3);
        let ws = p.ws();
        let lhs = did_dh(&p.model, &ws);
        let cm = cross_motion(&ws.v[0]);
        let rhs = did_dh_body_twist(&p.model, &ws)
            + did_dv(&p.model, &ws) * DMatrix::from_column_slice(6, 6, cm.as_slice());
        assert!(rel_err(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn body_twist_pose_derivative_has_zero_translation_columns() {
        let p = Point::new(build_test_system(), 4);
        let dh = did_dh_body_twist(&p.model, &p.ws());
        assert_eq!(dh.columns(0, 3).amax(), 0.0);
    }

    #[test]
    fn zero_twist_and_gravity_give_zero_pose_derivative() {
        let mut p = Point::new(build_test_system(), 6);
        p.state.base_twist = Vector6::zeros();
        p.g = Vector6::zeros();
        let ws = p.ws();
        assert_eq!(did_dh(&p.model, &ws).amax(), 0.0);
    }

    #[test]
    fn single_body_twist_derivative_is_symbolic() {
        let inertia = rigid_body_inertia(
            3.0,
            &Vector3::new(0.2, -0.1, 0.05),
            &Matrix3::from_diagonal(&Vector3::new(0.5, 0.4, 0.3)),
        );
        let model = MultibodyModel::base_only(inertia).unwrap();
        let mut p = Point::new(model, 2);
        let ws = p.ws();
        let v = ws.v[0];
        // d/dv (v ×* 𝕄v) = J(𝕄v) + (v×*)𝕄
        let expected = cross_force_jacobian(&(inertia * v)) + cross_force(&v) * inertia;
        let dv = did_dv(&p.model, &ws);
        assert!((dv - DMatrix::from_column_slice(6, 6, expected.as_slice())).amax() <= 1e-12);

        p.state.base_twist = Vector6::zeros();
        let ws = p.ws();
        assert_eq!(did_dv(&p.model, &ws).amax(), 0.0);
    }

    #[test]
    fn zero_motion_gives_zero_position_derivative() {
        let mut p = Point::new(build_test_system(), 8);
        p.state.base_twist = Vector6::zeros();
        p.state.joint_vel = DVector::zeros(9);
        p.a0 = Vector6::zeros();
        p.rdd = DVector::zeros(9);
        p.g = Vector6::zeros();
        assert_eq!(did_ds(&p.model, &p.ws()).amax(), 0.0);
    }

    #[test]
    fn single_prismatic_joint_position_derivative() {
        // One prismatic joint along x, body with center of mass on the axis,
        // base at rest and gravity along −z: the joint force does not depend
        // on s and the base moment changes by the weight lever arm.
        let base = rigid_body_inertia(5.0, &Vector3::zeros(), &Matrix3::identity());
        let m = 2.0;
        let body = rigid_body_inertia(m, &Vector3::zeros(), &(Matrix3::identity() * 0.1));
        let model = MultibodyModel::new(
            vec![crate::model::Link {
                parent: 0,
                joint: crate::model::JointType::prismatic(Vector3::x()),
                fixed_transform: Pose::identity(),
            }],
            vec![base, body],
        )
        .unwrap();
        let state = SystemState::zero(1);
        let (_, ws) = eidamb(
            &model,
            &state,
            &Vector6::zeros(),
            &DVector::zeros(1),
            &default_gravity(),
        )
        .unwrap();
        let ds = did_ds(&model, &ws);
        // Body force m·g acts at (s, 0, 0): n_y = (s e_x × m g)_y = 9.81·m·s.
        let expected_ny = m * 9.81;
        assert!(ds[(6, 0)].abs() <= 1e-12);
        assert!((ds[(4, 0)] - expected_ny).abs() <= 1e-12, "{}", ds[(4, 0)]);
        assert!(ds.rows(0, 3).amax() <= 1e-12);
    }

    #[test]
    fn rate_jacobians_ignore_accelerations() {
        let p = Point::new(build_test_system(), 10);
        let ws1 = p.ws();
        let ws2 = eidamb(&p.model, &p.state, &(p.a0 * 3.0), &(&p.rdd * -2.0), &p.g)
            .unwrap()
            .1;
        assert_eq!(did_dv(&p.model, &ws1), did_dv(&p.model, &ws2));
        assert_eq!(did_dr(&p.model, &ws1), did_dr(&p.model, &ws2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_models_match_central_differences(seed in any::<u64>(), nb in 0usize..8) {
            check_all(&Point::new(random_model(seed, nb), seed ^ 0x55), 1e-6);
        }

        #[test]
        fn dxv_dh_matches_geometric_difference(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pose = crate::model::random_pose(&mut rng);
            let w = Vector6::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
            let analytic = dxv_dh(&pose.inverse().rotation, &pose.origin, &w);
            for c in 0..6 {
                let mut xi = Vector6::zeros();
                xi[c] = H;
                let plus = velocity_transform(&pose.compose(&se3_exp(&xi)).inverse()) * w;
                let minus = velocity_transform(&pose.compose(&se3_exp(&-xi)).inverse()) * w;
                let fd = (plus - minus) / (2.0 * H);
                prop_assert!((fd - analytic.column(c)).amax() <= 1e-7);
            }
        }
    }
}
