//! The `lightfield.json` camera manifest.
//!
//! ```json
//! {
//!   "scene_name": "lone_monk",
//!   "unit": "meters",
//!   "cameras": [{
//!     "name": "cam_0000", "sequence": 0,
//!     "position": [2.0, 0.0, 0.0], "rotation": [w, x, y, z],
//!     "lens": {"type": "equidistant_fisheye", "fov": 3.14159},
//!     "resolution": [2048, 2048], "image": "cam_0000.exr"
//!   }]
//! }
//! ```
//!
//! Rotations are world-from-camera unit quaternions. Fields this crate does
//! not know about are kept and written back unchanged.

mod nerf;

use std::collections::HashSet;
use std::path::{Component, Path};

use nalgebra::{Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::image_io::DepthInterpretation;
use crate::lens::{CameraPose, LensModel, Resolution, Vec3};
use crate::rig::RigLayout;

pub use nerf::{scene_defaults, to_nerf_transforms, NerfError, NerfFrame, NerfTransforms, KNOWN_SCENES};

pub const UNIT_METERS: &str = "meters";
pub const QUATERNION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("{context}: {message}")]
    Schema { context: String, message: String },
    #[error("camera `{camera}`: {reason}")]
    InvalidCamera { camera: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraEntry {
    pub name: String,
    pub sequence: u32,
    pub position: [f64; 3],
    /// `[w, x, y, z]`, world-from-camera.
    pub rotation: [f64; 4],
    pub lens: LensModel,
    pub resolution: [u32; 2],
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CameraEntry {
    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.resolution[0], self.resolution[1])
    }

    pub fn orientation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z))
    }

    pub fn pose(&self) -> CameraPose {
        CameraPose::new(Vec3::from(self.position), self.orientation())
    }

    pub fn set_pose(&mut self, pose: &CameraPose) {
        self.position = pose.position.into();
        let q = pose.orientation;
        self.rotation = [q.w, q.i, q.j, q.k];
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let fail = |reason: String| ConfigError::InvalidCamera {
            camera: self.name.clone(),
            reason,
        };
        let norm = self.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= QUATERNION_TOLERANCE) {
            return Err(fail(format!("rotation quaternion has norm {norm}, expected 1")));
        }
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(fail("position is not finite".into()));
        }
        self.lens.validate().map_err(|e| fail(e.to_string()))?;
        if self.resolution.contains(&0) {
            return Err(fail(format!("resolution {:?} has a zero side", self.resolution)));
        }
        check_relative(&self.image).map_err(|r| fail(format!("image path: {r}")))?;
        if let Some(depth) = &self.depth {
            check_relative(depth).map_err(|r| fail(format!("depth path: {r}")))?;
        }
        Ok(())
    }
}

fn check_relative(path: &str) -> Result<(), String> {
    if path.is_empty() {
        return Err("empty".into());
    }
    if path.starts_with('/') || path.starts_with('\\') {
        return Err(format!("`{path}` is absolute"));
    }
    for c in Path::new(path).components() {
        match c {
            Component::ParentDir => return Err(format!("`{path}` leaves the dataset directory")),
            Component::RootDir | Component::Prefix(_) => return Err(format!("`{path}` is absolute")),
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightfieldConfig {
    pub scene_name: String,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_interpretation: Option<DepthInterpretation>,
    pub cameras: Vec<CameraEntry>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Deserialize)]
struct RawConfig {
    scene_name: String,
    unit: String,
    #[serde(default)]
    depth_interpretation: Option<DepthInterpretation>,
    cameras: Vec<Value>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl LightfieldConfig {
    pub fn from_layout(scene_name: &str, layout: &RigLayout) -> Self {
        let cameras = layout
            .cameras
            .iter()
            .map(|cam| {
                let mut entry = CameraEntry {
                    name: cam.name.clone(),
                    sequence: cam.sequence,
                    position: [0.0; 3],
                    rotation: [1.0, 0.0, 0.0, 0.0],
                    lens: cam.lens,
                    resolution: [cam.resolution.width, cam.resolution.height],
                    image: format!("{}.exr", cam.name),
                    depth: None,
                    extra: Map::new(),
                };
                entry.set_pose(&cam.pose);
                entry
            })
            .collect();
        LightfieldConfig {
            scene_name: scene_name.to_string(),
            unit: UNIT_METERS.to_string(),
            depth_interpretation: None,
            cameras,
            extra: Map::new(),
        }
    }

    pub fn depth_interpretation(&self) -> DepthInterpretation {
        self.depth_interpretation.unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.unit != UNIT_METERS {
            return Err(ConfigError::Invalid(format!(
                "unit must be \"{UNIT_METERS}\", got \"{}\"",
                self.unit
            )));
        }
        let mut seen = HashSet::new();
        for cam in &self.cameras {
            cam.validate()?;
            if !seen.insert(cam.sequence) {
                return Err(ConfigError::InvalidCamera {
                    camera: cam.name.clone(),
                    reason: format!("duplicate sequence number {}", cam.sequence),
                });
            }
        }
        Ok(())
    }
}

/// Parses and validates a manifest.
pub fn parse_config(bytes: &[u8]) -> Result<LightfieldConfig, ConfigError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    let raw: RawConfig = serde_json::from_value(value).map_err(|e| ConfigError::Schema {
        context: "config".into(),
        message: e.to_string(),
    })?;
    let cameras = raw
        .cameras
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let label = match v.get("name").and_then(Value::as_str) {
                Some(name) => format!("camera #{i} `{name}`"),
                None => format!("camera #{i}"),
            };
            serde_json::from_value::<CameraEntry>(v).map_err(|e| ConfigError::Schema {
                context: label,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = LightfieldConfig {
        scene_name: raw.scene_name,
        unit: raw.unit,
        depth_interpretation: raw.depth_interpretation,
        cameras,
        extra: raw.extra,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_config(cfg: &LightfieldConfig) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(cfg).expect("config serializes");
    out.push(b'\n');
    out
}

/// JSON equality that treats numbers by value, so `1` matches `1.0`.
pub fn structurally_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| structurally_equal(p, q))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| structurally_equal(v, w)))
        }
        _ => a == b,
    }
}

/// Odd sequence numbers go to evaluation, even ones to training.
pub fn split_train_eval(cfg: &LightfieldConfig) -> (LightfieldConfig, LightfieldConfig) {
    let (eval, train): (Vec<_>, Vec<_>) = cfg.cameras.iter().cloned().partition(|c| c.sequence % 2 == 1);
    let with = |cameras| LightfieldConfig { cameras, ..cfg.clone() };
    (with(train), with(eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::RigSpec;

    fn sample() -> LightfieldConfig {
        let layout = RigSpec::preset("barbershop-sphere").unwrap().generate().unwrap();
        let mut cfg = LightfieldConfig::from_layout("barbershop", &layout);
        cfg.cameras.truncate(6);
        cfg
    }

    fn camera_json(extra: &str) -> String {
        format!(
            r#"{{"scene_name":"s","unit":"meters","cameras":[{{"name":"c0","sequence":0,
            "position":[0,0,0],"rotation":[1,0,0,0],"lens":{{"type":"rectilinear","focal":18,"sensor_w":36,"sensor_h":36}},
            "resolution":[4,4],"image":"c0.png"{extra}}}]}}"#
        )
    }

    #[test]
    fn round_trip_is_structural_identity() {
        let bytes = emit_config(&sample());
        let parsed = parse_config(&bytes).unwrap();
        assert_eq!(parsed, sample());
        let a: Value = serde_json::from_slice(&bytes).unwrap();
        let b: Value = serde_json::from_slice(&emit_config(&parsed)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_fields_survive() {
        let src = r#"{"scene_name":"s","unit":"meters","renderer":{"engine":"cycles"},"cameras":[{"name":"c0","sequence":0,
            "position":[0,0,0],"rotation":[1,0,0,0],"lens":{"type":"equidistant_fisheye","fov":3.0},
            "resolution":[8,8],"image":"c0.exr","exposure_time":0.01}]}"#;
        let cfg = parse_config(src.as_bytes()).unwrap();
        assert_eq!(cfg.extra["renderer"]["engine"], "cycles");
        assert_eq!(cfg.cameras[0].extra["exposure_time"], 0.01);
        let a: Value = serde_json::from_str(src).unwrap();
        let b: Value = serde_json::from_slice(&emit_config(&cfg)).unwrap();
        assert!(structurally_equal(&a, &b));
        assert!(!structurally_equal(&a, &serde_json::json!({"scene_name": "s"})));
    }

    #[test]
    fn error_kinds_are_distinct() {
        assert!(matches!(parse_config(b"{not json"), Err(ConfigError::Malformed(_))));
        let missing = camera_json("").replace(r#""image":"c0.png""#, r#""depth":"d.exr""#);
        match parse_config(missing.as_bytes()) {
            Err(ConfigError::Schema { context, message }) => {
                assert!(context.contains("c0"), "{context}");
                assert!(message.contains("image"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad_quat = camera_json("").replace("[1,0,0,0]", "[1.1,0,0,0]");
        match parse_config(bad_quat.as_bytes()) {
            Err(ConfigError::InvalidCamera { camera, reason }) => {
                assert_eq!(camera, "c0");
                assert!(reason.contains("norm"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn path_rules() {
        for bad in [r#","depth":"../d.exr""#, r#","depth":"/abs/d.exr""#] {
            assert!(matches!(
                parse_config(camera_json(bad).as_bytes()),
                Err(ConfigError::InvalidCamera { .. })
            ));
        }
        assert!(parse_config(camera_json(r#","depth":"depth/d.exr""#).as_bytes()).is_ok());
    }

    #[test]
    fn duplicate_sequence_and_unit() {
        let mut cfg = sample();
        cfg.cameras[3].sequence = 1;
        assert!(matches!(
            parse_config(&emit_config(&cfg)),
            Err(ConfigError::InvalidCamera { .. })
        ));
        let mut cfg = sample();
        cfg.unit = "feet".into();
        assert!(matches!(parse_config(&emit_config(&cfg)), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn split_by_parity() {
        let (train, eval) = split_train_eval(&sample());
        let seq = |c: &LightfieldConfig| c.cameras.iter().map(|c| c.sequence).collect::<Vec<_>>();
        assert_eq!(seq(&train), vec![0, 2, 4]);
        assert_eq!(seq(&eval), vec![1, 3, 5]);

        let mut one = sample();
        one.cameras.truncate(1);
        let (train, eval) = split_train_eval(&one);
        assert_eq!(train.cameras.len(), 1);
        assert!(eval.cameras.is_empty());
    }

    #[test]
    fn pose_survives_serialization() {
        let layout = RigSpec::preset("lone-monk-sphere").unwrap().generate().unwrap();
        let cfg = parse_config(&emit_config(&LightfieldConfig::from_layout("lone_monk", &layout))).unwrap();
        assert_eq!(cfg.cameras.len(), 642);
        for (cam, entry) in layout.cameras.iter().zip(&cfg.cameras) {
            let pose = entry.pose();
            assert_eq!(pose.position, cam.pose.position);
            assert!(pose.orientation.angle_to(&cam.pose.orientation) < 1e-12);
        }
    }
}
