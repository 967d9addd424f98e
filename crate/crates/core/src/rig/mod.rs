//! Outward-facing cuboid and spherical camera rigs.

mod hull;
mod icosphere;

pub use hull::{hull_volume as hull_volume_of_points, ConvexHull, HullError};
pub use icosphere::{icosphere, icosphere_vertex_count};

use thiserror::Error;

use crate::lens::{look_rotation, CameraPose, LensError, LensModel, Resolution, Vec3};

/// Cameras closer than this are treated as one physical position.
pub const COLOCATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigError {
    #[error("cuboid needs at least 2 cameras per axis, got {0:?}")]
    TooFewCameras([u32; 3]),
    #[error("cuboid dimensions must be positive, got {0:?}")]
    BadSize([f64; 3]),
    #[error("sphere diameter must be positive, got {0}")]
    BadDiameter(f64),
    #[error("sphere subdivision level {0} is too large")]
    TooManySubdivisions(u32),
    #[error("resolution must be at least 1x1")]
    BadResolution,
    #[error(transparent)]
    Lens(#[from] LensError),
    #[error("all cameras are co-located")]
    AllColocated,
    #[error("rig has fewer than 2 cameras")]
    Empty,
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RigShape {
    /// `size` in meters and cameras per axis, both ordered (X, Y, Z) with Z up.
    Cuboid {
        size: [f64; 3],
        counts: [u32; 3],
    },
    Sphere {
        diameter: f64,
        subdivisions: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigSpec {
    pub shape: RigShape,
    pub center: Vec3,
    pub lens: LensModel,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigCamera {
    pub sequence: u32,
    pub name: String,
    pub pose: CameraPose,
    pub lens: LensModel,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RigLayout {
    pub cameras: Vec<RigCamera>,
}

impl RigLayout {
    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.cameras.iter().map(|c| c.pose.position).collect()
    }
}

/// The six rigs of the published dataset: 180° fisheye at 2048².
pub const PRESETS: [(&str, RigShape); 6] = [
    (
        "barbershop-cuboid",
        RigShape::Cuboid {
            size: [1.0, 3.0, 1.0],
            counts: [10, 30, 10],
        },
    ),
    (
        "barbershop-sphere",
        RigShape::Sphere {
            diameter: 1.45,
            subdivisions: 3,
        },
    ),
    (
        "lone-monk-cuboid",
        RigShape::Cuboid {
            size: [4.0, 4.0, 3.0],
            counts: [21, 21, 16],
        },
    ),
    (
        "lone-monk-sphere",
        RigShape::Sphere {
            diameter: 4.0,
            subdivisions: 3,
        },
    ),
    (
        "zen-garden-cuboid",
        RigShape::Cuboid {
            size: [2.0, 2.0, 1.0],
            counts: [21, 21, 11],
        },
    ),
    (
        "zen-garden-sphere",
        RigShape::Sphere {
            diameter: 1.7,
            subdivisions: 3,
        },
    ),
];

impl RigSpec {
    pub fn dataset_camera(shape: RigShape) -> Self {
        RigSpec {
            shape,
            center: Vec3::zeros(),
            lens: LensModel::fisheye_degrees(180.0),
            resolution: Resolution::square(2048),
        }
    }

    pub fn preset(name: &str) -> Result<Self, RigError> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, shape)| RigSpec::dataset_camera(*shape))
            .ok_or_else(|| RigError::UnknownPreset(name.to_string()))
    }

    pub fn validate(&self) -> Result<(), RigError> {
        self.lens.validate()?;
        if self.resolution.width == 0 || self.resolution.height == 0 {
            return Err(RigError::BadResolution);
        }
        match self.shape {
            RigShape::Cuboid { size, counts } => {
                if counts.iter().any(|&n| n < 2) {
                    return Err(RigError::TooFewCameras(counts));
                }
                if !size.iter().all(|&l| l > 0.0 && l.is_finite()) {
                    return Err(RigError::BadSize(size));
                }
            }
            RigShape::Sphere { diameter, subdivisions } => {
                if !(diameter > 0.0 && diameter.is_finite()) {
                    return Err(RigError::BadDiameter(diameter));
                }
                if subdivisions > 8 {
                    return Err(RigError::TooManySubdivisions(subdivisions));
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<RigLayout, RigError> {
        match self.shape {
            RigShape::Cuboid { .. } => gen_cuboid(self),
            RigShape::Sphere { .. } => gen_sphere(self),
        }
    }
}

/// Expected camera count of a cuboid with `counts` cameras per axis.
pub fn cuboid_camera_count([nx, ny, nz]: [u32; 3]) -> usize {
    let (nx, ny, nz) = (nx as usize, ny as usize, nz as usize);
    2 * (ny * nz + nx * nz + nx * ny)
}

fn push_camera(layout: &mut RigLayout, spec: &RigSpec, pose: CameraPose) {
    let sequence = layout.cameras.len() as u32;
    layout.cameras.push(RigCamera {
        sequence,
        name: format!("cam_{sequence:04}"),
        pose,
        lens: spec.lens,
        resolution: spec.resolution,
    });
}

/// Six inclusive face grids, faces in (+X, −X, +Y, −Y, +Z, −Z) order and
/// row-major within a face (the second in-plane axis is the row). Edge and
/// corner positions appear once per face that touches them.
pub fn gen_cuboid(spec: &RigSpec) -> Result<RigLayout, RigError> {
    spec.validate()?;
    let RigShape::Cuboid { size, counts } = spec.shape else {
        unreachable!("gen_cuboid called with a sphere spec")
    };
    let c = spec.center;
    // grid coordinate i of n along an axis; endpoints are exact so shared
    // edges land on bit-identical positions
    let coord = |axis: usize, i: u32| -> f64 {
        let lo = c[axis] - size[axis] / 2.0;
        let hi = c[axis] + size[axis] / 2.0;
        let n = counts[axis];
        if i == 0 {
            lo
        } else if i == n - 1 {
            hi
        } else {
            lo + i as f64 * (size[axis] / (n - 1) as f64)
        }
    };

    let mut layout = RigLayout::default();
    for axis in 0..3 {
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for positive in [true, false] {
            let mut normal = Vec3::zeros();
            normal[axis] = if positive { 1.0 } else { -1.0 };
            let orientation = look_rotation(normal);
            let plane = coord(axis, if positive { counts[axis] - 1 } else { 0 });
            for row in 0..counts[b] {
                for col in 0..counts[a] {
                    let mut p = Vec3::zeros();
                    p[axis] = plane;
                    p[a] = coord(a, col);
                    p[b] = coord(b, row);
                    push_camera(&mut layout, spec, CameraPose::new(p, orientation));
                }
            }
        }
    }
    Ok(layout)
}

/// Icosphere vertices scaled to the rig sphere, each camera looking
/// radially outward.
pub fn gen_sphere(spec: &RigSpec) -> Result<RigLayout, RigError> {
    spec.validate()?;
    let RigShape::Sphere { diameter, subdivisions } = spec.shape else {
        unreachable!("gen_sphere called with a cuboid spec")
    };
    let (dirs, _) = icosphere(subdivisions);
    let radius = diameter / 2.0;
    let mut layout = RigLayout::default();
    for d in dirs {
        let pose = CameraPose::looking_along(spec.center + d * radius, d);
        push_camera(&mut layout, spec, pose);
    }
    Ok(layout)
}

/// Mean distance from each camera to its nearest neighbour at a non-zero
/// distance; co-located duplicates are skipped.
pub fn mean_nn_distance(layout: &RigLayout) -> Result<f64, RigError> {
    let pts = layout.positions();
    if pts.len() < 2 {
        return Err(RigError::Empty);
    }
    let mut total = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let nearest = pts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| (p - q).norm())
            .filter(|&d| d > COLOCATION_TOLERANCE)
            .fold(f64::INFINITY, f64::min);
        if nearest.is_infinite() {
            return Err(RigError::AllColocated);
        }
        total += nearest;
    }
    Ok(total / pts.len() as f64)
}

/// Convex-hull volume of the camera positions, the rig's immersive
/// interpolation volume estimate for outward-facing 180° cameras.
pub fn hull_volume(layout: &RigLayout) -> Result<f64, RigError> {
    Ok(hull::hull_volume(&layout.positions())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cuboid(size: [f64; 3], counts: [u32; 3]) -> RigSpec {
        RigSpec::dataset_camera(RigShape::Cuboid { size, counts })
    }

    #[test]
    fn preset_counts() {
        let expect = [1400, 642, 2226, 642, 1806, 642];
        for ((name, _), n) in PRESETS.iter().zip(expect) {
            assert_eq!(RigSpec::preset(name).unwrap().generate().unwrap().len(), n, "{name}");
        }
        assert!(matches!(RigSpec::preset("attic"), Err(RigError::UnknownPreset(_))));
    }

    #[test]
    fn icosahedron_rig() {
        let spec = RigSpec::dataset_camera(RigShape::Sphere {
            diameter: 2.0,
            subdivisions: 0,
        });
        assert_eq!(gen_sphere(&spec).unwrap().len(), 12);
    }

    #[test]
    fn sphere_cameras_look_outward() {
        let mut spec = RigSpec::preset("zen-garden-sphere").unwrap();
        spec.center = Vec3::new(1.0, -2.0, 1.5);
        let layout = spec.generate().unwrap();
        for cam in &layout.cameras {
            let r = cam.pose.position - spec.center;
            assert!((r.norm() - 0.85).abs() < 1e-9);
            assert!((cam.pose.forward().dot(&r) - r.norm()).abs() < 1e-9);
            let m = cam.pose.rotation_matrix();
            assert!((m.transpose() * m - nalgebra::Matrix3::identity()).norm() < 1e-9);
            assert!((m.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cuboid_faces_share_rotation_and_lie_on_surface() {
        let spec = cuboid([1.0, 3.0, 1.0], [10, 30, 10]);
        let layout = spec.generate().unwrap();
        let per_face = [300, 300, 100, 100, 300, 300];
        let mut start = 0;
        for (face, n) in per_face.into_iter().enumerate() {
            let cams = &layout.cameras[start..start + n];
            let axis = face / 2;
            let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
            let half = [0.5, 1.5, 0.5];
            for cam in cams {
                assert_eq!(cam.pose.orientation, cams[0].pose.orientation);
                let f = cam.pose.forward();
                assert!((f[axis] - sign).abs() < 1e-12);
                assert!((cam.pose.position[axis] - sign * half[axis]).abs() < 1e-12);
                for k in 0..3 {
                    assert!(cam.pose.position[k].abs() <= half[k] + 1e-12);
                }
            }
            start += n;
        }
        assert_eq!(start, layout.len());
    }

    #[test]
    fn shared_corners_are_bit_identical() {
        let layout = cuboid([4.0, 4.0, 3.0], [21, 21, 16]).generate().unwrap();
        let corner = Vec3::new(2.0, 2.0, 1.5);
        let hits = layout.cameras.iter().filter(|c| c.pose.position == corner).count();
        assert_eq!(hits, 3);
    }

    #[test]
    fn sequence_is_contiguous_and_deterministic() {
        let spec = RigSpec::preset("zen-garden-cuboid").unwrap();
        let a = spec.generate().unwrap();
        assert!(a.cameras.iter().enumerate().all(|(i, c)| c.sequence as usize == i));
        assert_eq!(a, spec.generate().unwrap());
        assert_eq!(a.cameras[0].name, "cam_0000");
    }

    #[test]
    fn spacing_and_volume_of_table_rigs() {
        let lone = RigSpec::preset("lone-monk-cuboid").unwrap().generate().unwrap();
        assert!((mean_nn_distance(&lone).unwrap() - 0.2).abs() < 1e-9);
        assert!((hull_volume(&lone).unwrap() - 48.0).abs() < 48.0 * 1e-6);
        let zen = RigSpec::preset("zen-garden-cuboid").unwrap().generate().unwrap();
        assert!((mean_nn_distance(&zen).unwrap() - 0.1).abs() < 1e-9);
        assert!((hull_volume(&zen).unwrap() - 4.0).abs() < 4.0 * 1e-6);
    }

    #[test]
    fn two_cameras_one_meter_apart() {
        let mut layout = cuboid([1.0; 3], [2; 3]).generate().unwrap();
        layout.cameras.truncate(2);
        layout.cameras[0].pose.position = Vec3::zeros();
        layout.cameras[1].pose.position = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(mean_nn_distance(&layout).unwrap(), 1.0);
        layout.cameras[1].pose.position = Vec3::zeros();
        assert_eq!(mean_nn_distance(&layout), Err(RigError::AllColocated));
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            cuboid([1.0; 3], [1, 5, 5]).generate(),
            Err(RigError::TooFewCameras(_))
        ));
        assert!(matches!(
            cuboid([1.0, 0.0, 1.0], [2; 3]).generate(),
            Err(RigError::BadSize(_))
        ));
        let s = RigSpec::dataset_camera(RigShape::Sphere {
            diameter: -1.0,
            subdivisions: 1,
        });
        assert!(matches!(s.generate(), Err(RigError::BadDiameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn cuboid_count_matches_enumeration(nx in 2u32..12, ny in 2u32..12, nz in 2u32..12) {
            let layout = cuboid([1.0, 2.0, 0.5], [nx, ny, nz]).generate().unwrap();
            // enumerate face grids independently
            let mut expected = 0usize;
            for axis in 0..3 {
                let others: Vec<u32> = [nx, ny, nz].iter().enumerate().filter(|(k, _)| *k != axis).map(|(_, &n)| n).collect();
                for _side in 0..2 {
                    for _ in 0..others[0] { for _ in 0..others[1] { expected += 1; } }
                }
            }
            prop_assert_eq!(layout.len(), expected);
            prop_assert_eq!(cuboid_camera_count([nx, ny, nz]), expected);
            let vol = hull_volume(&layout).unwrap();
            prop_assert!((vol - 1.0).abs() < 1e-6);
        }
    }
}
