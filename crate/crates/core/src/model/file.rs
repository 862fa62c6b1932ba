//! JSON model file reader and writer.
//!
//! Schema (all numbers SI, matrices row-major):
//!
//! ```text
//! { "name": str, "gravity": num?, "notes": [str]?, "base_pose": transform?,
//!   "links":  [{ "mass": num, "com": [3], "inertia_com": [9] }],
//!   "joints": [{ "type": "revolute", "omega_space": [3], "point_on_axis": [3],
//!                "parent_to_child_home": transform, "home_pose_space": transform? }],
//!   "platform": { "control_box": link, "bearing_to_arm_base": transform,
//!                 "bearing_to_box": transform, "attitude": [9]? }? }
//! transform = { "rotation": [9], "translation": [3] }
//! ```

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use super::{JointDescription, LinkParams, Model, ModelError, PlatformModel, RobotModel, STANDARD_GRAVITY};
use crate::spatial::{Mat3, RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Report unknown keys as warnings instead of a schema error.
    pub lenient: bool,
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub model: Model,
    pub warnings: Vec<String>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    name: String,
    #[serde(default = "default_gravity")]
    gravity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_pose: Option<TransformDoc>,
    links: Vec<LinkDoc>,
    joints: Vec<JointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    platform: Option<PlatformDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkDoc {
    mass: f64,
    com: [f64; 3],
    inertia_com: [f64; 9],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum JointTypeDoc {
    Revolute,
}

#[derive(Debug, Serialize, Deserialize)]
struct JointDoc {
    #[serde(rename = "type")]
    kind: JointTypeDoc,
    omega_space: [f64; 3],
    point_on_axis: [f64; 3],
    parent_to_child_home: TransformDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    home_pose_space: Option<TransformDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformDoc {
    rotation: [f64; 9],
    translation: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct PlatformDoc {
    control_box: LinkDoc,
    bearing_to_arm_base: TransformDoc,
    bearing_to_box: TransformDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attitude: Option<[f64; 9]>,
}

fn mat3(v: &[f64; 9]) -> Mat3 {
    Mat3::from_row_slice(v)
}

fn mat3_rows(m: &Mat3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
    out
}

fn vec3(v: &[f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

impl From<&TransformDoc> for RigidTransform {
    fn from(t: &TransformDoc) -> Self {
        RigidTransform::new(mat3(&t.rotation), vec3(&t.translation))
    }
}

impl From<&RigidTransform> for TransformDoc {
    fn from(t: &RigidTransform) -> Self {
        TransformDoc {
            rotation: mat3_rows(&t.rotation),
            translation: t.translation.into(),
        }
    }
}

impl From<&LinkDoc> for LinkParams {
    fn from(l: &LinkDoc) -> Self {
        LinkParams::new(l.mass, vec3(&l.com), mat3(&l.inertia_com))
    }
}

impl From<&LinkParams> for LinkDoc {
    fn from(l: &LinkParams) -> Self {
        LinkDoc {
            mass: l.mass,
            com: l.com.into(),
            inertia_com: mat3_rows(&l.inertia_com),
        }
    }
}

fn json_error(err: serde_path_to_error::Error<serde_json::Error>) -> ModelError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    match inner.classify() {
        Category::Data => ModelError::Schema {
            path,
            message: strip_position(&inner.to_string()),
        },
        Category::Syntax | Category::Eof | Category::Io => ModelError::Syntax {
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        },
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Strict parse: unknown keys are schema errors.
pub fn parse_model(bytes: impl AsRef<[u8]>) -> Result<Model, ModelError> {
    parse_model_with(bytes, ParseOptions::default()).map(|p| p.model)
}

pub fn parse_model_with(bytes: impl AsRef<[u8]>, opts: ParseOptions) -> Result<Parsed, ModelError> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_slice(bytes.as_ref());
    let doc: ModelDoc = {
        let mut track = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
        let ignoring = serde_ignored::Deserializer::new(&mut de, &mut track);
        serde_path_to_error::deserialize(ignoring).map_err(json_error)?
    };
    de.end().map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    if let Some(first) = unknown.first() {
        if !opts.lenient {
            return Err(ModelError::Schema {
                path: first.clone(),
                message: "unknown field".into(),
            });
        }
    }
    let warnings = unknown.into_iter().map(|p| format!("ignoring unknown field `{p}`")).collect();
    Ok(Parsed {
        model: build(doc)?,
        warnings,
    })
}

fn build(doc: ModelDoc) -> Result<Model, ModelError> {
    let links = doc.links.iter().map(LinkParams::from).collect();
    let joints = doc
        .joints
        .iter()
        .map(|j| JointDescription {
            omega_space: vec3(&j.omega_space),
            point_on_axis: vec3(&j.point_on_axis),
            parent_to_child_home: (&j.parent_to_child_home).into(),
            home_pose_space: j.home_pose_space.as_ref().map(Into::into),
        })
        .collect();
    let base = doc.base_pose.as_ref().map(Into::into).unwrap_or_default();
    let mut arm = RobotModel::new(doc.name, doc.gravity, base, links, joints)?;
    arm.notes = doc.notes;

    match doc.platform {
        None => Ok(Model::Arm(arm)),
        Some(p) => {
            let attitude = p.attitude.as_ref().map(mat3).unwrap_or_else(Mat3::identity);
            Ok(Model::Platform(PlatformModel::new(
                arm,
                (&p.control_box).into(),
                (&p.bearing_to_arm_base).into(),
                (&p.bearing_to_box).into(),
                attitude,
            )?))
        }
    }
}

/// Writes a model file that [`parse_model`] reads back to identical values.
pub fn serialize_model(model: &Model) -> String {
    let arm = model.arm();
    let base_pose = (arm.base_pose != RigidTransform::identity()).then(|| (&arm.base_pose).into());
    let doc = ModelDoc {
        name: arm.name.clone(),
        gravity: arm.gravity,
        notes: arm.notes.clone(),
        base_pose,
        links: arm.links.iter().map(LinkDoc::from).collect(),
        joints: arm
            .joints
            .iter()
            .map(|j| JointDoc {
                kind: JointTypeDoc::Revolute,
                omega_space: j.space_screw.angular.into(),
                point_on_axis: j.point_on_axis.into(),
                parent_to_child_home: (&j.parent_to_child_home).into(),
                home_pose_space: j.home_pose_space.as_ref().map(Into::into),
            })
            .collect(),
        platform: model.platform().map(|p| PlatformDoc {
            control_box: (&p.control_box).into(),
            bearing_to_arm_base: (&p.bearing_to_arm_base).into(),
            bearing_to_box: (&p.bearing_to_box).into(),
            attitude: (p.platform_attitude.rotation != Mat3::identity())
                .then(|| mat3_rows(&p.platform_attitude.rotation)),
        }),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("model documents always serialize");
    s.push('\n');
    s
}
