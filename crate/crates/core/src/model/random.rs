use nalgebra::{DVector, Matrix6, Vector3, Vector6};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{JointType, Link, MultibodyModel, SystemState, DEFAULT_PITCH};
use crate::spatial::{min_eigenvalue, se3_exp, Pose, SpatialInertia};

/// Smallest eigenvalue enforced on random inertias.
const INERTIA_MARGIN: f64 = 0.1;

fn uniform6<R: Rng + ?Sized>(rng: &mut R) -> Vector6<f64> {
    Vector6::from_fn(|_, _| rng.random::<f64>())
}

/// `exp` of a 6-vector with uniform `[0, 1]` components.
pub fn random_pose<R: Rng + ?Sized>(rng: &mut R) -> Pose {
    se3_exp(&uniform6(rng))
}

/// Symmetrized uniform `[0, 1]` matrix, shifted along the identity until its
/// smallest eigenvalue is at least 0.1.
pub fn random_inertia<R: Rng + ?Sized>(rng: &mut R) -> SpatialInertia {
    let a = Matrix6::from_fn(|_, _| rng.random::<f64>());
    let mut m = (a + a.transpose()) * 0.5;
    let lmin = min_eigenvalue(&m);
    if lmin < INERTIA_MARGIN {
        m += Matrix6::identity() * (INERTIA_MARGIN - lmin);
    }
    m
}

fn random_joint<R: Rng + ?Sized>(rng: &mut R) -> JointType {
    let axis = Vector3::ith(rng.random_range(0..3), 1.0);
    match rng.random_range(0..3) {
        0 => JointType::revolute(axis),
        1 => JointType::prismatic(axis),
        _ => JointType::helical(axis, DEFAULT_PITCH),
    }
}

/// Redraws every fixed transform and inertia of `model`, keeping its tree
/// and joints.
pub fn random_parameters<R: Rng + ?Sized>(model: &MultibodyModel, rng: &mut R) -> MultibodyModel {
    let xforms = (0..model.n_bodies()).map(|_| random_pose(rng)).collect();
    let inertias = (0..=model.n_bodies())
        .map(|_| random_inertia(rng))
        .collect();
    model
        .with_parameters(xforms, inertias)
        .expect("random parameters satisfy the model invariants")
}

/// Random tree with `n_bodies` bodies. Parents, joint kinds and axes are
/// uniform, placements and inertias follow [`random_pose`] and
/// [`random_inertia`].
pub fn random_model(seed: u64, n_bodies: usize) -> MultibodyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::with_capacity(n_bodies);
    for i in 1..=n_bodies {
        let parent = rng.random_range(0..i);
        let joint = random_joint(&mut rng);
        links.push(Link {
            parent,
            joint,
            fixed_transform: random_pose(&mut rng),
        });
    }
    let inertias = (0..=n_bodies).map(|_| random_inertia(&mut rng)).collect();
    MultibodyModel::new(links, inertias).expect("random model satisfies the model invariants")
}

/// Uniform `[0, 1]` joint positions, velocities and base twist, base pose
/// from [`random_pose`].
pub fn random_state_with<R: Rng + ?Sized>(rng: &mut R, model: &MultibodyModel) -> SystemState {
    let n = model.n_joints();
    let base_pose = random_pose(rng);
    let joint_pos = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let base_twist = uniform6(rng);
    let joint_vel = DVector::from_fn(n, |_, _| rng.random::<f64>());
    SystemState {
        base_pose,
        joint_pos,
        base_twist,
        joint_vel,
    }
}

pub fn random_state(seed: u64, model: &MultibodyModel) -> SystemState {
    random_state_with(&mut ChaCha8Rng::seed_from_u64(seed), model)
}
