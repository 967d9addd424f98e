//! Projection math for the three supported lens models.
//!
//! Camera space is right-handed with +Z along the optical axis, +X to the
//! right and +Y down, so +Y follows increasing image rows. Pixel coordinates
//! are continuous: `(0, 0)` is the top-left corner of the top-left pixel and
//! pixel centers sit at half-integers.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Rays closer than this to the projection plane have no usable Z-depth.
pub const GRAZING_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LensError {
    #[error("invalid lens parameter: {0}")]
    InvalidParameter(String),
    #[error("ray is at or behind the projection plane (d.z = {dz}); Z-depth is undefined")]
    GrazingRay { dz: f64 },
    #[error("negative depth {0}")]
    NegativeDepth(f64),
}

/// A perfect (distortion-free) lens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LensModel {
    /// `r = f·θ`, with the image circle inscribed in the shorter image side.
    EquidistantFisheye {
        fov: f64,
    },
    Equirectangular {
        h_fov: f64,
        v_fov: f64,
    },
    /// Pinhole projection; focal length and sensor size in millimeters.
    Rectilinear {
        focal: f64,
        sensor_w: f64,
        sensor_h: f64,
    },
}

impl LensModel {
    pub fn fisheye_degrees(fov_deg: f64) -> Self {
        LensModel::EquidistantFisheye {
            fov: fov_deg.to_radians(),
        }
    }

    pub fn full_panorama() -> Self {
        LensModel::Equirectangular { h_fov: TAU, v_fov: PI }
    }

    pub fn rectilinear_square(focal: f64, sensor: f64) -> Self {
        LensModel::Rectilinear {
            focal,
            sensor_w: sensor,
            sensor_h: sensor,
        }
    }

    pub fn validate(&self) -> Result<(), LensError> {
        let bad = |msg: String| Err(LensError::InvalidParameter(msg));
        match *self {
            LensModel::EquidistantFisheye { fov } => {
                if !(fov > 0.0 && fov <= TAU) {
                    return bad(format!("fisheye fov {fov} outside (0, 2π]"));
                }
            }
            LensModel::Equirectangular { h_fov, v_fov } => {
                if !(h_fov > 0.0 && h_fov <= TAU) {
                    return bad(format!("equirectangular h_fov {h_fov} outside (0, 2π]"));
                }
                if !(v_fov > 0.0 && v_fov <= PI) {
                    return bad(format!("equirectangular v_fov {v_fov} outside (0, π]"));
                }
            }
            LensModel::Rectilinear {
                focal,
                sensor_w,
                sensor_h,
            } => {
                if !(focal > 0.0 && focal.is_finite()) {
                    return bad(format!("focal length {focal} must be positive"));
                }
                if !(sensor_w > 0.0 && sensor_h > 0.0 && sensor_w.is_finite() && sensor_h.is_finite()) {
                    return bad(format!("sensor size {sensor_w}x{sensor_h} must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Horizontal field of view of a rectilinear lens, `2·atan(w / 2f)`.
    pub fn horizontal_fov(&self) -> Option<f64> {
        match *self {
            LensModel::Rectilinear { focal, sensor_w, .. } => Some(2.0 * (sensor_w / (2.0 * focal)).atan()),
            LensModel::EquidistantFisheye { fov } => Some(fov),
            LensModel::Equirectangular { h_fov, .. } => Some(h_fov),
        }
    }
}

/// Image resolution in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const fn new(width: u32, height: u32) -> Self {
        Resolution { width, height }
    }

    pub fn square(side: u32) -> Self {
        Resolution::new(side, side)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// `round(dim · scale)` per axis, never below one pixel.
    pub fn scaled(&self, scale: f64) -> Self {
        let dim = |d: u32| ((d as f64 * scale).round() as u32).max(1);
        Resolution::new(dim(self.width), dim(self.height))
    }

    fn dims(&self) -> (f64, f64) {
        (self.width as f64, self.height as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub const fn new(u: f64, v: f64) -> Self {
        PixelCoord { u, v }
    }

    pub fn center_of(x: u32, y: u32) -> Self {
        PixelCoord::new(x as f64 + 0.5, y as f64 + 0.5)
    }

    pub fn distance(&self, other: &PixelCoord) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Position in meters plus world-from-camera orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl CameraPose {
    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        CameraPose { position, orientation }
    }

    /// Pose whose optical axis is `forward`, with roll chosen so that the
    /// image "up" follows world +Z projected onto the image plane. When
    /// `forward` is (anti)parallel to +Z, world +X is used as up instead.
    pub fn looking_along(position: Vec3, forward: Vec3) -> Self {
        CameraPose::new(position, look_rotation(forward))
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.orientation.to_rotation_matrix().into_inner()
    }

    pub fn forward(&self) -> Vec3 {
        self.orientation * Vec3::z()
    }

    pub fn camera_to_world_dir(&self, d: &Vec3) -> Vec3 {
        self.orientation * d
    }

    pub fn world_to_camera_dir(&self, d: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(d)
    }
}

/// World-from-camera rotation with the camera +Z axis along `forward`.
pub fn look_rotation(forward: Vec3) -> UnitQuaternion<f64> {
    let z = forward.normalize();
    let world_up = Vec3::z();
    let mut up = world_up - z * z.dot(&world_up);
    if up.norm() < 1e-6 {
        up = Vec3::x() - z * z.dot(&Vec3::x());
    }
    let up = up.normalize();
    // image rows grow downward, so camera +Y is the negated up vector
    let y = -up;
    let x = y.cross(&z);
    let m = Matrix3::from_columns(&[x, y, z]);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

/// Camera-space unit ray through `p`, or `None` when `p` is outside the
/// lens's valid image region.
pub fn pixel_to_ray(lens: &LensModel, res: Resolution, p: PixelCoord) -> Option<Vec3> {
    let (w, h) = res.dims();
    match *lens {
        LensModel::EquidistantFisheye { fov } => {
            let (cu, cv) = (w / 2.0, h / 2.0);
            let radius = w.min(h) / 2.0;
            let du = p.u - cu;
            let dv = p.v - cv;
            let rho = du.hypot(dv);
            if rho > radius {
                return None;
            }
            let theta = rho / radius * (fov / 2.0);
            let psi = dv.atan2(du);
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = psi.sin_cos();
            Some(Vec3::new(st * cp, st * sp, ct))
        }
        LensModel::Equirectangular { h_fov, v_fov } => {
            let lon = (p.u / w - 0.5) * h_fov;
            let lat = (0.5 - p.v / h) * v_fov;
            let (sl, cl) = lon.sin_cos();
            let (sf, cf) = lat.sin_cos();
            Some(Vec3::new(cf * sl, -sf, cf * cl))
        }
        LensModel::Rectilinear {
            focal,
            sensor_w,
            sensor_h,
        } => {
            let sx = (p.u / w - 0.5) * sensor_w;
            let sy = (p.v / h - 0.5) * sensor_h;
            Some(Vec3::new(sx, sy, focal).normalize())
        }
    }
}

/// Inverse of [`pixel_to_ray`]; `None` when `d` falls outside the lens FoV.
pub fn ray_to_pixel(lens: &LensModel, res: Resolution, d: &Vec3) -> Option<PixelCoord> {
    let (w, h) = res.dims();
    match *lens {
        LensModel::EquidistantFisheye { fov } => {
            let radial = d.x.hypot(d.y);
            let theta = radial.atan2(d.z);
            let half = fov / 2.0;
            if theta > half * (1.0 + 1e-12) {
                return None;
            }
            let radius = w.min(h) / 2.0;
            let rho = theta / half * radius;
            let (cu, cv) = (w / 2.0, h / 2.0);
            if radial == 0.0 {
                return Some(PixelCoord::new(cu, cv));
            }
            Some(PixelCoord::new(cu + rho * d.x / radial, cv + rho * d.y / radial))
        }
        LensModel::Equirectangular { h_fov, v_fov } => {
            let lon = d.x.atan2(d.z);
            let lat = (-d.y).atan2(d.x.hypot(d.z));
            let u = (lon / h_fov + 0.5) * w;
            let v = (0.5 - lat / v_fov) * h;
            in_bounds(u, v, w, h).then(|| PixelCoord::new(u, v))
        }
        LensModel::Rectilinear {
            focal,
            sensor_w,
            sensor_h,
        } => {
            if d.z <= 0.0 {
                return None;
            }
            let sx = focal * d.x / d.z;
            let sy = focal * d.y / d.z;
            let u = (sx / sensor_w + 0.5) * w;
            let v = (sy / sensor_h + 0.5) * h;
            in_bounds(u, v, w, h).then(|| PixelCoord::new(u, v))
        }
    }
}

fn in_bounds(u: f64, v: f64, w: f64, h: f64) -> bool {
    // a hair of slack so rays aimed exactly at the border survive rounding
    let slack_u = w * 1e-12;
    let slack_v = h * 1e-12;
    u >= -slack_u && u <= w + slack_u && v >= -slack_v && v <= h + slack_v
}

/// Euclidean distance along `d` to the point whose camera-space Z is `z`.
pub fn depth_z_to_raylen(z: f64, d: &Vec3) -> Result<f64, LensError> {
    if z < 0.0 {
        return Err(LensError::NegativeDepth(z));
    }
    if d.z <= GRAZING_EPSILON {
        return Err(LensError::GrazingRay { dz: d.z });
    }
    Ok(z / d.z)
}

/// Camera-space Z of the point at distance `t` along `d`. May be negative
/// for backward rays.
pub fn raylen_to_depth_z(t: f64, d: &Vec3) -> f64 {
    t * d.z
}
