//! Kinematic trees, joint models and system states.
//!
//! Bodies are numbered `0..=n_B` with the moving base as body 0 and every
//! parent numbered below its children. Joint `i` connects body `i` to its
//! parent, so joint-space vectors are indexed by `i − 1`.

mod joint;
mod parse;
mod random;

pub use joint::{jcalc, jcalc_deriv, JointKind, JointType, DEFAULT_PITCH};
pub use parse::{load_model, to_document};
pub use random::{
    random_inertia, random_model, random_parameters, random_pose, random_state, random_state_with,
};

use nalgebra::{DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::spatial::{
    is_spd, min_eigenvalue, rigid_body_inertia, so3_exp, velocity_transform, MotionVector, Pose,
    SpatialInertia, VelocityTransform,
};

/// Joint and fixed placement of one non-base body.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub parent: usize,
    pub joint: JointType,
    /// `^{λ(i)|i}H_{λ(i)}`, the constant part of the parent-to-child placement.
    pub fixed_transform: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultibodyModel {
    links: Vec<Link>,
    inertias: Vec<SpatialInertia>,
    fixed_x: Vec<VelocityTransform>,
}

impl MultibodyModel {
    /// Validates topology, joints and inertias. `inertias[0]` is the base.
    pub fn new(links: Vec<Link>, inertias: Vec<SpatialInertia>) -> Result<Self> {
        if inertias.len() != links.len() + 1 {
            return Err(Error::Dimension {
                what: "inertias",
                expected: links.len() + 1,
                got: inertias.len(),
            });
        }
        for (k, link) in links.iter().enumerate() {
            let body = k + 1;
            if link.parent >= body {
                return Err(Error::Topology {
                    body,
                    parent: link.parent,
                });
            }
            if !link.joint.is_valid() {
                return Err(Error::InvalidJoint {
                    body,
                    reason: format!(
                        "axis norm {} must be 1, pitch {} must be finite",
                        link.joint.axis.norm(),
                        link.joint.pitch
                    ),
                });
            }
            if !link.fixed_transform.is_valid(1e-10) {
                return Err(Error::InvalidJoint {
                    body,
                    reason: "fixed transform rotation is not orthonormal".into(),
                });
            }
        }
        for (body, m) in inertias.iter().enumerate() {
            if !is_spd(m) {
                let reason = if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    "not symmetric".to_string()
                } else {
                    format!("min eigenvalue {:e}", min_eigenvalue(m))
                };
                return Err(Error::NonSpdInertia { body, reason });
            }
        }
        let fixed_x = links
            .iter()
            .map(|l| velocity_transform(&l.fixed_transform))
            .collect();
        Ok(Self {
            links,
            inertias,
            fixed_x,
        })
    }

    /// A single free rigid body.
    pub fn base_only(inertia: SpatialInertia) -> Result<Self> {
        Self::new(Vec::new(), vec![inertia])
    }

    /// Number of bodies excluding the base. Equal to the number of joints.
    pub fn n_bodies(&self) -> usize {
        self.links.len()
    }

    pub fn n_joints(&self) -> usize {
        self.links.len()
    }

    /// Size of the generalized velocity, `6 + n_J`.
    pub fn n_dof(&self) -> usize {
        6 + self.links.len()
    }

    /// `λ(i)` for `i ≥ 1`.
    pub fn parent(&self, i: usize) -> usize {
        self.links[i - 1].parent
    }

    pub fn link(&self, i: usize) -> &Link {
        &self.links[i - 1]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joint(&self, i: usize) -> &JointType {
        &self.links[i - 1].joint
    }

    /// `^{λ(i)|i}X_{λ(i)}`.
    pub fn fixed_velocity_transform(&self, i: usize) -> &VelocityTransform {
        &self.fixed_x[i - 1]
    }

    pub fn inertia(&self, i: usize) -> &SpatialInertia {
        &self.inertias[i]
    }

    pub fn inertias(&self) -> &[SpatialInertia] {
        &self.inertias
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (1..=self.n_bodies())
            .filter(|&j| self.parent(j) == i)
            .collect()
    }

    /// Bodies supported by joint `i`, including `i`, in increasing order.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut inside = vec![false; self.n_bodies() + 1];
        inside[i] = true;
        let mut out = vec![i];
        for j in i + 1..=self.n_bodies() {
            if inside[self.parent(j)] {
                inside[j] = true;
                out.push(j);
            }
        }
        out
    }

    /// Same tree and joints with new placements and inertias.
    pub fn with_parameters(
        &self,
        fixed_transforms: Vec<Pose>,
        inertias: Vec<SpatialInertia>,
    ) -> Result<Self> {
        if fixed_transforms.len() != self.n_bodies() {
            return Err(Error::Dimension {
                what: "fixed transforms",
                expected: self.n_bodies(),
                got: fixed_transforms.len(),
            });
        }
        let links = self
            .links
            .iter()
            .zip(fixed_transforms)
            .map(|(l, t)| Link {
                fixed_transform: t,
                ..l.clone()
            })
            .collect();
        Self::new(links, inertias)
    }
}

/// `(H, s, v, r)`: base pose, joint positions, base twist, joint velocities.
///
/// `base_twist` is the twist of the base with respect to the inertial frame,
/// expressed in the base frame, so that `Ḣ = H·v∧`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub base_pose: Pose,
    pub joint_pos: DVector<f64>,
    pub base_twist: MotionVector,
    pub joint_vel: DVector<f64>,
}

impl SystemState {
    /// Identity pose with everything else at zero.
    pub fn zero(n_joints: usize) -> Self {
        Self {
            base_pose: Pose::identity(),
            joint_pos: DVector::zeros(n_joints),
            base_twist: MotionVector::zeros(),
            joint_vel: DVector::zeros(n_joints),
        }
    }

    pub fn check(&self, model: &MultibodyModel) -> Result<()> {
        let n = model.n_joints();
        if self.joint_pos.len() != n {
            return Err(Error::Dimension {
                what: "joint positions",
                expected: n,
                got: self.joint_pos.len(),
            });
        }
        if self.joint_vel.len() != n {
            return Err(Error::Dimension {
                what: "joint velocities",
                expected: n,
                got: self.joint_vel.len(),
            });
        }
        Ok(())
    }
}

/// Nine-joint branched system: three revolute, three prismatic and three
/// helical joints, one of each along x, y and z. The base carries bodies 1,
/// 2 and 7, and bodies 1 and 7 branch again.
pub fn build_test_system() -> MultibodyModel {
    let x = Vector3::x();
    let y = Vector3::y();
    let z = Vector3::z();
    let layout: [(usize, JointType); 9] = [
        (0, JointType::revolute(z)),
        (0, JointType::prismatic(x)),
        (1, JointType::helical(y, 0.1)),
        (1, JointType::revolute(x)),
        (2, JointType::prismatic(y)),
        (3, JointType::helical(z, 0.05)),
        (0, JointType::revolute(y)),
        (7, JointType::prismatic(z)),
        (7, JointType::helical(x, 0.15)),
    ];
    let mut links = Vec::with_capacity(9);
    for (k, &(parent, joint)) in layout.iter().enumerate() {
        let i = (k + 1) as f64;
        let offset = Vector3::new(0.3 + 0.02 * i, 0.1 * (i % 3.0) - 0.1, 0.05 * i);
        let tilt = Vector3::new(0.05 * i, -0.03 * i, 0.02 * i);
        links.push(Link {
            parent,
            joint,
            fixed_transform: Pose::new(so3_exp(&tilt), offset),
        });
    }
    let mut inertias = Vec::with_capacity(10);
    inertias.push(rigid_body_inertia(
        10.0,
        &Vector3::new(0.01, -0.02, 0.03),
        &Matrix3::from_diagonal(&Vector3::new(0.4, 0.5, 0.6)),
    ));
    for k in 1..=9 {
        let i = k as f64;
        let mass = 1.0 + 0.2 * i;
        let com = Vector3::new(0.1 + 0.01 * i, 0.02 * (i % 2.0), -0.03);
        let ic = Matrix3::from_diagonal(&Vector3::new(0.02 + 0.002 * i, 0.03, 0.025 + 0.001 * i));
        inertias.push(rigid_body_inertia(mass, &com, &ic));
    }
    MultibodyModel::new(links, inertias).expect("test system is valid by construction")
}
