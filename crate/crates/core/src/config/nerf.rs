//! Conversion to the instant-ngp `transforms.json` layout.
//!
//! instant-ngp cameras look down their −Z axis with +Y up, so the camera Y
//! and Z basis vectors are negated on the way out.

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LightfieldConfig;
use crate::lens::{LensModel, Vec3};

/// Scene names accepted by [`scene_defaults`].
pub const KNOWN_SCENES: [&str; 3] = ["barbershop", "lone_monk", "zen_garden"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NerfError {
    #[error("camera `{0}` does not use a rectilinear lens; reproject the dataset to a rectilinear lens first (e.g. `lfkit reproject --rectilinear 18,36`)")]
    NotRectilinear(String),
    #[error("camera `{0}` has a different lens or resolution than the first camera; all cameras must share one rectilinear lens")]
    MixedLenses(String),
    #[error("config has no cameras")]
    Empty,
    #[error("scene scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("unknown scene `{0}` (known: barbershop, lone_monk, zen_garden)")]
    UnknownScene(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerfFrame {
    pub file_path: String,
    /// Row-major camera-to-world matrix.
    pub transform_matrix: [[f64; 4]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerfTransforms {
    pub camera_angle_x: f64,
    pub frames: Vec<NerfFrame>,
    pub scale: f64,
    pub offset: [f64; 3],
}

impl NerfTransforms {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("transforms serialize");
        out.push(b'\n');
        out
    }
}

/// Scale `1 / (2·max extent)` and the offset that moves the center of the
/// camera bounding box to `(0.5, 0.5, 0.5)`.
pub fn scene_defaults(scene: &str, cfg: &LightfieldConfig) -> Result<(f64, Vec3), NerfError> {
    if !KNOWN_SCENES.contains(&scene) {
        return Err(NerfError::UnknownScene(scene.to_string()));
    }
    if cfg.cameras.is_empty() {
        return Err(NerfError::Empty);
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for cam in &cfg.cameras {
        let p = Vec3::from(cam.position);
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    let extent = (hi - lo).max();
    let scale = if extent > 0.0 { 1.0 / (2.0 * extent) } else { 1.0 };
    let center = (lo + hi) / 2.0;
    Ok((scale, Vec3::repeat(0.5) - center * scale))
}

pub fn to_nerf_transforms(
    cfg: &LightfieldConfig,
    scene_scale: f64,
    scene_offset: Vec3,
) -> Result<NerfTransforms, NerfError> {
    if !(scene_scale > 0.0 && scene_scale.is_finite()) {
        return Err(NerfError::BadScale(scene_scale));
    }
    let first = cfg.cameras.first().ok_or(NerfError::Empty)?;
    let camera_angle_x = match first.lens {
        LensModel::Rectilinear { focal, sensor_w, .. } => 2.0 * (sensor_w / (2.0 * focal)).atan(),
        _ => return Err(NerfError::NotRectilinear(first.name.clone())),
    };

    let flip = Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
    let mut frames = Vec::with_capacity(cfg.cameras.len());
    for cam in &cfg.cameras {
        if !matches!(cam.lens, LensModel::Rectilinear { .. }) {
            return Err(NerfError::NotRectilinear(cam.name.clone()));
        }
        if cam.lens != first.lens || cam.resolution != first.resolution {
            return Err(NerfError::MixedLenses(cam.name.clone()));
        }
        let pose = cam.pose();
        let basis = pose.rotation_matrix() * flip * scene_scale;
        let t = pose.position * scene_scale + scene_offset;
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&basis);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
        let rows = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]));
        frames.push(NerfFrame {
            file_path: cam.image.clone(),
            transform_matrix: rows,
        });
    }
    Ok(NerfTransforms {
        camera_angle_x,
        frames,
        scale: scene_scale,
        offset: scene_offset.into(),
    })
}
