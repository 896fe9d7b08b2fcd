//! Kinematic-tree robot models and their JSON description.
//!
//! A model file looks like
//!
//! ```json
//! {
//!   "name": "pendulum",
//!   "gravity": [0, 0, -9.81],
//!   "bodies": [
//!     { "name": "link", "parent": null,
//!       "joint": { "type": "revolute", "axis": [0, 1, 0] },
//!       "placement": { "xyz": [0, 0, 0], "rpy": [0, 0, 0] },
//!       "inertia": [1, 1, 0, 0, 0, 0, 1, 0, 0, 1] }
//!   ],
//!   "contacts": [ { "name": "tip", "body": 0, "offset": [1, 0, 0] } ]
//! }
//! ```
//!
//! `parent` is the index of an earlier body (`null` for the single root).
//! Joint types are `revolute` and `prismatic` (with `axis`) and `planar`, a
//! floating base moving in the x–z plane with coordinates `(x, z, pitch)`.
//! `inertia` is the ten-parameter inertial vector of the body either as a JSON
//! array or as a string of ten whitespace-separated decimals. `placement` is
//! the pose of the joint frame in the parent body frame (roll-pitch-yaw in
//! radians, applied as `Rz(yaw) Ry(pitch) Rx(roll)`).

use super::spatial::Transform;
use super::RbdError;
use crate::inertia::InertialVector;
use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JointType {
    Revolute { axis: Vector3<f64> },
    Prismatic { axis: Vector3<f64> },
    /// Planar floating base in the x–z plane: `(x, z, pitch)`.
    Planar,
}

impl JointType {
    pub fn dofs(&self) -> usize {
        match self {
            JointType::Planar => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub name: String,
    pub parent: Option<usize>,
    pub joint: JointType,
    pub placement: Transform,
    pub inertia: InertialVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactPoint {
    pub name: String,
    pub body: usize,
    pub offset: Vector3<f64>,
}

/// Single-dof joint after expanding planar bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LinkJoint {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Link {
    pub parent: Option<usize>,
    pub joint: LinkJoint,
    pub axis: Vector3<f64>,
    /// `ᴶX_parent` of the joint frame.
    pub placement: Transform,
    /// Body carried by this link, if the link is the last one of its body.
    pub body: Option<usize>,
    pub wrapped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub gravity: Vector3<f64>,
    bodies: Vec<Body>,
    contacts: Vec<ContactPoint>,
    pub(crate) links: Vec<Link>,
    /// Link carrying each body's inertia.
    pub(crate) body_link: Vec<usize>,
}

impl RobotModel {
    pub fn new(
        name: impl Into<String>,
        gravity: Vector3<f64>,
        bodies: Vec<Body>,
        contacts: Vec<ContactPoint>,
    ) -> Result<Self, RbdError> {
        if bodies.is_empty() {
            return Err(RbdError::InvalidModel("model has no bodies".into()));
        }
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(RbdError::NonFiniteData("gravity".into()));
        }
        let mut links: Vec<Link> = Vec::new();
        let mut body_link = Vec::with_capacity(bodies.len());
        for (i, body) in bodies.iter().enumerate() {
            match (i, body.parent) {
                (0, None) => {}
                (0, Some(_)) => return Err(RbdError::InvalidModel("first body must be the root (parent null)".into())),
                (_, None) => return Err(RbdError::InvalidModel(format!("body {i} has no parent; exactly one root allowed"))),
                (_, Some(p)) if p >= i => {
                    return Err(RbdError::InvalidModel(format!("body {i} has parent {p}; parents must precede children")))
                }
                _ => {}
            }
            if !body.inertia.is_finite() {
                return Err(RbdError::NonFiniteData(format!("inertia of body {i} ({})", body.name)));
            }
            let parent_link = body.parent.map(|p| body_link[p]);
            match body.joint {
                JointType::Revolute { axis } | JointType::Prismatic { axis } => {
                    let norm = axis.norm();
                    if !(norm > 0.0) || !norm.is_finite() {
                        return Err(RbdError::InvalidModel(format!("body {i} has a degenerate joint axis")));
                    }
                    let joint = if matches!(body.joint, JointType::Revolute { .. }) {
                        LinkJoint::Revolute
                    } else {
                        LinkJoint::Prismatic
                    };
                    links.push(Link {
                        parent: parent_link,
                        joint,
                        axis: axis / norm,
                        placement: body.placement,
                        body: Some(i),
                        wrapped: false,
                    });
                }
                JointType::Planar => {
                    let base = links.len();
                    links.push(Link {
                        parent: parent_link,
                        joint: LinkJoint::Prismatic,
                        axis: Vector3::x(),
                        placement: body.placement,
                        body: None,
                        wrapped: false,
                    });
                    links.push(Link {
                        parent: Some(base),
                        joint: LinkJoint::Prismatic,
                        axis: Vector3::z(),
                        placement: Transform::identity(),
                        body: None,
                        wrapped: false,
                    });
                    links.push(Link {
                        parent: Some(base + 1),
                        joint: LinkJoint::Revolute,
                        axis: Vector3::y(),
                        placement: Transform::identity(),
                        body: Some(i),
                        wrapped: true,
                    });
                }
            }
            body_link.push(links.len() - 1);
        }
        for (k, c) in contacts.iter().enumerate() {
            if c.body >= bodies.len() {
                return Err(RbdError::InvalidModel(format!("contact {k} refers to missing body {}", c.body)));
            }
            if !c.offset.iter().all(|x| x.is_finite()) {
                return Err(RbdError::NonFiniteData(format!("offset of contact {k}")));
            }
        }
        Ok(RobotModel { name: name.into(), gravity, bodies, contacts, links, body_link })
    }

    pub fn nq(&self) -> usize {
        self.links.len()
    }

    pub fn nv(&self) -> usize {
        self.links.len()
    }

    pub fn num_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn contacts(&self) -> &[ContactPoint] {
        &self.contacts
    }

    pub fn contact_index(&self, name: &str) -> Option<usize> {
        self.contacts.iter().position(|c| c.name == name)
    }

    pub fn body_inertia(&self, body: usize) -> &InertialVector {
        &self.bodies[body].inertia
    }

    pub fn set_body_inertia(&mut self, body: usize, inertia: InertialVector) {
        self.bodies[body].inertia = inertia;
    }

    /// Stacked inertial parameters of all bodies, ten per body.
    pub fn stacked_inertia(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(10 * self.bodies.len(), self.bodies.iter().flat_map(|b| b.inertia.0.iter().copied()))
    }

    /// Configuration coordinates that are angles wrapped to `(−π, π]`.
    pub fn wrapped_coordinates(&self) -> Vec<bool> {
        self.links.iter().map(|l| l.wrapped).collect()
    }

    /// First configuration index of each body's joint.
    pub fn joint_offset(&self, body: usize) -> usize {
        self.body_link[body] + 1 - self.bodies[body].joint.dofs()
    }

    pub(crate) fn link_inertia(&self, link: usize) -> Option<&InertialVector> {
        self.links[link].body.map(|b| &self.bodies[b].inertia)
    }

    pub fn from_json_str(s: &str) -> Result<Self, RbdError> {
        let file: ModelFile = serde_json::from_str(s).map_err(|e| RbdError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        file.into_model()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RbdError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RbdError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            RbdError::Parse(msg) => RbdError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModelFile::from_model(self)).expect("model serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ModelFile {
    #[serde(default)]
    name: String,
    #[serde(default = "default_gravity")]
    gravity: [f64; 3],
    bodies: Vec<BodyFile>,
    #[serde(default)]
    contacts: Vec<ContactFile>,
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyFile {
    #[serde(default)]
    name: String,
    parent: Option<usize>,
    joint: JointFile,
    #[serde(default)]
    placement: PlacementFile,
    inertia: InertiaField,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum JointFile {
    Revolute { axis: [f64; 3] },
    Prismatic { axis: [f64; 3] },
    Planar,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementFile {
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InertiaField {
    Array([f64; 10]),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactFile {
    #[serde(default)]
    name: String,
    body: usize,
    offset: [f64; 3],
}

impl ModelFile {
    fn into_model(self) -> Result<RobotModel, RbdError> {
        let mut bodies = Vec::with_capacity(self.bodies.len());
        for (i, b) in self.bodies.into_iter().enumerate() {
            let inertia = match b.inertia {
                InertiaField::Array(a) => InertialVector::from(a),
                InertiaField::Text(s) => s.parse().map_err(|e| RbdError::Parse(format!("body {i}: {e}")))?,
            };
            let joint = match b.joint {
                JointFile::Revolute { axis } => JointType::Revolute { axis: Vector3::from(axis) },
                JointFile::Prismatic { axis } => JointType::Prismatic { axis: Vector3::from(axis) },
                JointFile::Planar => JointType::Planar,
            };
            let [roll, pitch, yaw] = b.placement.rpy;
            let rot = Rotation3::from_euler_angles(roll, pitch, yaw).into_inner();
            let name = if b.name.is_empty() { format!("body{i}") } else { b.name };
            bodies.push(Body {
                name,
                parent: b.parent,
                joint,
                placement: Transform::from_pose(&rot, &Vector3::from(b.placement.xyz)),
                inertia,
            });
        }
        let contacts = self
            .contacts
            .into_iter()
            .enumerate()
            .map(|(k, c)| ContactPoint {
                name: if c.name.is_empty() { format!("contact{k}") } else { c.name },
                body: c.body,
                offset: Vector3::from(c.offset),
            })
            .collect();
        RobotModel::new(self.name, Vector3::from(self.gravity), bodies, contacts)
    }

    fn from_model(model: &RobotModel) -> Self {
        ModelFile {
            name: model.name.clone(),
            gravity: model.gravity.into(),
            bodies: model
                .bodies
                .iter()
                .map(|b| {
                    let rot = Rotation3::from_matrix_unchecked(b.placement.orientation());
                    let (r, p, y) = rot.euler_angles();
                    BodyFile {
                        name: b.name.clone(),
                        parent: b.parent,
                        joint: match b.joint {
                            JointType::Revolute { axis } => JointFile::Revolute { axis: axis.into() },
                            JointType::Prismatic { axis } => JointFile::Prismatic { axis: axis.into() },
                            JointType::Planar => JointFile::Planar,
                        },
                        placement: PlacementFile { xyz: b.placement.position().into(), rpy: [r, p, y] },
                        inertia: InertiaField::Array(b.inertia.into()),
                    }
                })
                .collect(),
            contacts: model
                .contacts
                .iter()
                .map(|c| ContactFile { name: c.name.clone(), body: c.body, offset: c.offset.into() })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENDULUM: &str = r#"{
        "name": "pendulum",
        "bodies": [
            { "parent": null, "joint": { "type": "revolute", "axis": [0, 1, 0] },
              "inertia": "1 1 0 0 0 0 1 0 0 1" }
        ],
        "contacts": [ { "name": "tip", "body": 0, "offset": [1, 0, 0] } ]
    }"#;

    #[test]
    fn parses_text_and_array_inertia() {
        let m = RobotModel::from_json_str(PENDULUM).unwrap();
        assert_eq!(m.nv(), 1);
        assert_eq!(m.body_inertia(0).mass(), 1.0);
        assert_eq!(m.gravity, Vector3::new(0.0, 0.0, -9.81));
        assert_eq!(m.contact_index("tip"), Some(0));
        let round = RobotModel::from_json_str(&m.to_json().to_string()).unwrap();
        assert_eq!(round.body_inertia(0), m.body_inertia(0));
        assert_eq!(round.nv(), m.nv());
    }

    #[test]
    fn planar_base_expands_to_three_dofs() {
        let s = r#"{ "bodies": [
            { "parent": null, "joint": { "type": "planar" }, "inertia": [1,0,0,0,0.1,0,0.1,0,0,0.1] },
            { "parent": 0, "joint": { "type": "prismatic", "axis": [0,0,-1] }, "inertia": [0.2,0,0,0,0.01,0,0.01,0,0,0.01] }
        ] }"#;
        let m = RobotModel::from_json_str(s).unwrap();
        assert_eq!(m.nq(), 4);
        assert_eq!(m.wrapped_coordinates(), vec![false, false, true, false]);
        assert_eq!(m.joint_offset(0), 0);
        assert_eq!(m.joint_offset(1), 3);
    }

    #[test]
    fn rejects_bad_trees_and_values() {
        let two_roots = r#"{ "bodies": [
            { "parent": null, "joint": { "type": "revolute", "axis": [0,1,0] }, "inertia": [1,0,0,0,1,0,1,0,0,1] },
            { "parent": null, "joint": { "type": "revolute", "axis": [0,1,0] }, "inertia": [1,0,0,0,1,0,1,0,0,1] }
        ] }"#;
        assert!(matches!(RobotModel::from_json_str(two_roots), Err(RbdError::InvalidModel(_))));
        let nan = PENDULUM.replace("\"1 1 0 0 0 0 1 0 0 1\"", "\"NaN 1 0 0 0 0 1 0 0 1\"");
        assert!(matches!(RobotModel::from_json_str(&nan), Err(RbdError::NonFiniteData(_))));
        let broken = "{ \"bodies\": [ }";
        match RobotModel::from_json_str(broken) {
            Err(RbdError::Parse(msg)) => assert!(msg.contains("line 1")),
            other => panic!("{other:?}"),
        }
    }
}
