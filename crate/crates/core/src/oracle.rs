//! Analytic ray-traced test scene with exact color and depth.
//!
//! Everything is flat-shaded: a checkerboard ground plane at `z = 0` with
//! 1 m cells, one sphere, an optional emissive wall and a constant sky.

use rayon::prelude::*;
use thiserror::Error;

use crate::image_io::{DepthInterpretation, PlenImage};
use crate::lens::{pixel_to_ray, raylen_to_depth_z, CameraPose, LensModel, PixelCoord, Resolution, Vec3};
use crate::reproject::stratified_offsets;

const HIT_EPSILON: f64 = 1e-9;

/// Radiance of the HDR wall, above a Reinhard white point of 5.
pub const WALL_RADIANCE: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("sphere radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("sphere must float above the ground (center.z = {z} <= radius = {radius})")]
    SphereTouchesGround { z: f64, radius: f64 },
    #[error("wall edges must be non-degenerate and perpendicular")]
    BadWall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Ground,
    Sphere,
    Wall,
    Sky,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
    pub color: [f64; 3],
}

/// Emissive rectangle spanned by two perpendicular edges from `corner`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub radiance: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleScene {
    pub checker: [[f64; 3]; 2],
    pub sphere: Sphere,
    pub sky: [f64; 3],
    pub wall: Option<Wall>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHit {
    pub color: [f64; 3],
    /// Distance along the ray, `+∞` for sky.
    pub raylen: f64,
    pub surface: Surface,
}

impl Default for OracleScene {
    fn default() -> Self {
        OracleScene {
            checker: [[0.70, 0.62, 0.50], [0.25, 0.30, 0.38]],
            sphere: Sphere {
                center: Vec3::new(0.6, 0.4, 0.8),
                radius: 0.5,
                color: [0.80, 0.20, 0.15],
            },
            sky: [0.45, 0.60, 0.85],
            wall: Some(Wall {
                corner: Vec3::new(-3.0, 5.0, 0.0),
                edge_u: Vec3::new(6.0, 0.0, 0.0),
                edge_v: Vec3::new(0.0, 0.0, 3.0),
                radiance: [WALL_RADIANCE; 3],
            }),
        }
    }
}

impl OracleScene {
    pub fn validate(&self) -> Result<(), SceneError> {
        let s = &self.sphere;
        if !(s.radius > 0.0) {
            return Err(SceneError::BadRadius(s.radius));
        }
        if s.center.z <= s.radius {
            return Err(SceneError::SphereTouchesGround {
                z: s.center.z,
                radius: s.radius,
            });
        }
        if let Some(w) = &self.wall {
            let (lu, lv) = (w.edge_u.norm(), w.edge_v.norm());
            if lu == 0.0 || lv == 0.0 || w.edge_u.dot(&w.edge_v).abs() > 1e-9 * lu * lv {
                return Err(SceneError::BadWall);
            }
        }
        Ok(())
    }

    /// Every color a ray can return.
    pub fn palette(&self) -> Vec<[f64; 3]> {
        let mut p = vec![self.checker[0], self.checker[1], self.sphere.color, self.sky];
        if let Some(w) = &self.wall {
            p.push(w.radiance);
        }
        p
    }

    pub fn checker_color(&self, x: f64, y: f64) -> [f64; 3] {
        let parity = (x.floor() as i64 + y.floor() as i64).rem_euclid(2);
        self.checker[parity as usize]
    }
}

fn intersect_sphere(s: &Sphere, origin: &Vec3, dir: &Vec3) -> Option<f64> {
    let oc = origin - s.center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - s.radius * s.radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = if b > 0.0 { -b - sq } else { -b + sq };
    let (mut t0, mut t1) = (q, if q != 0.0 { c / q } else { 0.0 });
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    [t0, t1].into_iter().find(|&t| t > HIT_EPSILON)
}

fn intersect_wall(w: &Wall, origin: &Vec3, dir: &Vec3) -> Option<f64> {
    let n = w.edge_u.cross(&w.edge_v);
    let denom = dir.dot(&n);
    if denom == 0.0 {
        return None;
    }
    let t = (w.corner - origin).dot(&n) / denom;
    if t <= HIT_EPSILON {
        return None;
    }
    let rel = origin + dir * t - w.corner;
    let a = rel.dot(&w.edge_u) / w.edge_u.norm_squared();
    let b = rel.dot(&w.edge_v) / w.edge_v.norm_squared();
    ((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)).then_some(t)
}

/// Nearest positive intersection of the ray with the scene.
pub fn trace(scene: &OracleScene, origin: &Vec3, dir: &Vec3) -> TraceHit {
    let mut best = TraceHit {
        color: scene.sky,
        raylen: f64::INFINITY,
        surface: Surface::Sky,
    };
    if dir.z != 0.0 {
        let t = -origin.z / dir.z;
        if t > HIT_EPSILON {
            let p = origin + dir * t;
            best = TraceHit {
                color: scene.checker_color(p.x, p.y),
                raylen: t,
                surface: Surface::Ground,
            };
        }
    }
    if let Some(t) = intersect_sphere(&scene.sphere, origin, dir) {
        if t < best.raylen {
            best = TraceHit {
                color: scene.sphere.color,
                raylen: t,
                surface: Surface::Sphere,
            };
        }
    }
    if let Some(w) = &scene.wall {
        if let Some(t) = intersect_wall(w, origin, dir) {
            if t < best.raylen {
                best = TraceHit {
                    color: w.radiance,
                    raylen: t,
                    surface: Surface::Wall,
                };
            }
        }
    }
    best
}

fn trace_camera_ray(scene: &OracleScene, pose: &CameraPose, cam_dir: &Vec3) -> TraceHit {
    trace(scene, &pose.position, &pose.camera_to_world_dir(cam_dir))
}

/// Renders the scene through `lens` at `pose`, averaging `samples²`
/// stratified rays per pixel. Depth comes from the pixel-center ray and is
/// `+∞` for sky or for points behind the projection plane in Z mode.
pub fn render_oracle(
    scene: &OracleScene,
    pose: &CameraPose,
    lens: &LensModel,
    res: Resolution,
    samples: u32,
    depth_mode: DepthInterpretation,
) -> PlenImage {
    let offsets = stratified_offsets(samples);
    let width = res.width as usize;
    let n = res.pixel_count();
    let mut rgb = vec![[0.0f32; 3]; n];
    let mut depth = vec![f32::INFINITY; n];
    let mut valid = vec![false; n];

    rgb.par_chunks_mut(width)
        .zip(depth.par_chunks_mut(width))
        .zip(valid.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, ((rgb_row, depth_row), valid_row))| {
            for x in 0..width {
                let center = PixelCoord::center_of(x as u32, y as u32);
                let Some(center_dir) = pixel_to_ray(lens, res, center) else {
                    continue;
                };
                let hit = trace_camera_ray(scene, pose, &center_dir);
                depth_row[x] = match depth_mode {
                    DepthInterpretation::Raylen => hit.raylen as f32,
                    DepthInterpretation::Z => {
                        let z = raylen_to_depth_z(hit.raylen, &center_dir);
                        if z > 0.0 {
                            z as f32
                        } else {
                            f32::INFINITY
                        }
                    }
                };

                let mut sum = [0.0f64; 3];
                let mut count = 0u32;
                for (ox, oy) in &offsets {
                    let p = PixelCoord::new(x as f64 + ox, y as f64 + oy);
                    if let Some(d) = pixel_to_ray(lens, res, p) {
                        let c = trace_camera_ray(scene, pose, &d).color;
                        for k in 0..3 {
                            sum[k] += c[k];
                        }
                        count += 1;
                    }
                }
                if count > 0 {
                    rgb_row[x] = sum.map(|s| (s / count as f64) as f32);
                    valid_row[x] = true;
                }
            }
        });

    PlenImage::from_planes(res, rgb, Some(depth), valid).expect("planes sized from resolution")
}

/// Surface hit by each pixel-center ray; `None` outside the lens image.
pub fn render_surface_ids(
    scene: &OracleScene,
    pose: &CameraPose,
    lens: &LensModel,
    res: Resolution,
) -> Vec<Option<Surface>> {
    let width = res.width as usize;
    (0..res.pixel_count())
        .into_par_iter()
        .map(|i| {
            let p = PixelCoord::center_of((i % width) as u32, (i / width) as u32);
            pixel_to_ray(lens, res, p).map(|d| trace_camera_ray(scene, pose, &d).surface)
        })
        .collect()
}

const CLEARANCE_SUBDIV: u32 = 8;

/// `true` for pixels whose center lies at least `margin` pixels from every
/// geometric silhouette (a change of hit surface, the lens image border
/// included). The surface is probed on a grid 8× finer than the image and
/// the search radius is widened by the grid's half-diagonal, so kept
/// pixels are guaranteed clear.
pub fn silhouette_clearance(
    scene: &OracleScene,
    pose: &CameraPose,
    lens: &LensModel,
    res: Resolution,
    margin: f64,
) -> Vec<bool> {
    let f = CLEARANCE_SUBDIV;
    let fine_res = Resolution::new(res.width * f, res.height * f);
    let fine = render_surface_ids(scene, pose, lens, fine_res);
    let (fw, fh) = (fine_res.width as i64, fine_res.height as i64);
    let step = 1.0 / f as f64;
    let radius = margin + step * std::f64::consts::FRAC_1_SQRT_2;
    let reach = (radius / step).ceil() as i64;
    let width = res.width as usize;

    (0..res.pixel_count())
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i % width) as u32, (i / width) as u32);
            let c = PixelCoord::center_of(x, y);
            let Some(d) = pixel_to_ray(lens, res, c) else {
                return false;
            };
            let me = Some(trace_camera_ray(scene, pose, &d).surface);
            // fine cell whose center is nearest the pixel center
            let (cx, cy) = ((c.u / step - 0.5).round() as i64, (c.v / step - 0.5).round() as i64);
            for fy in (cy - reach).max(0)..=(cy + reach).min(fh - 1) {
                for fx in (cx - reach).max(0)..=(cx + reach).min(fw - 1) {
                    let du = (fx as f64 + 0.5) * step - c.u;
                    let dv = (fy as f64 + 0.5) * step - c.v;
                    if du * du + dv * dv <= radius * radius && fine[(fy * fw + fx) as usize] != me {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use std::f64::consts::PI;

    fn scene() -> OracleScene {
        OracleScene::default()
    }

    #[test]
    fn default_scene_is_valid() {
        scene().validate().unwrap();
    }

    #[test]
    fn perpendicular_drop_hits_checker_origin_cell() {
        let hit = trace(&scene(), &Vec3::new(0.1, 0.1, 1.0), &-Vec3::z());
        assert_eq!(hit.surface, Surface::Ground);
        assert!((hit.raylen - 1.0).abs() < 1e-15);
        assert_eq!(hit.color, scene().checker[0]);
        let hit = trace(&scene(), &Vec3::new(1.5, 0.1, 1.0), &-Vec3::z());
        assert_eq!(hit.color, scene().checker[1]);
        let hit = trace(&scene(), &Vec3::new(-0.5, -0.5, 1.0), &-Vec3::z());
        assert_eq!(hit.color, scene().checker[0]);
    }

    #[test]
    fn upward_ray_sees_sky() {
        let hit = trace(
            &scene(),
            &Vec3::new(0.0, -3.0, 1.0),
            &Vec3::new(0.0, -1.0, 1.0).normalize(),
        );
        assert_eq!(hit.surface, Surface::Sky);
        assert_eq!(hit.raylen, f64::INFINITY);
        assert_eq!(hit.color, scene().sky);
    }

    #[test]
    fn ray_through_sphere_center() {
        let s = scene();
        for (from, d) in [(Vec3::new(3.0, 0.4, 0.8), 2.4), (Vec3::new(0.6, 0.4, 7.0), 6.2)] {
            let dir = (s.sphere.center - from).normalize();
            let hit = trace(&s, &from, &dir);
            assert_eq!(hit.surface, Surface::Sphere);
            assert!((hit.raylen - (d - s.sphere.radius)).abs() < 1e-12, "{}", hit.raylen);
        }
    }

    #[test]
    fn wall_is_hdr() {
        let hit = trace(&scene(), &Vec3::new(0.0, 0.0, 1.5), &Vec3::y());
        assert_eq!(hit.surface, Surface::Wall);
        assert!((hit.raylen - 5.0).abs() < 1e-12);
        assert_eq!(hit.color, [WALL_RADIANCE; 3]);
    }

    #[test]
    fn invalid_scenes_rejected() {
        let mut s = scene();
        s.sphere.center.z = 0.3;
        assert!(matches!(s.validate(), Err(SceneError::SphereTouchesGround { .. })));
        s.sphere.radius = 0.0;
        assert!(matches!(s.validate(), Err(SceneError::BadRadius(_))));
    }

    #[test]
    fn sky_only_render_is_uniform() {
        let mut s = scene();
        s.sphere.center = Vec3::new(0.0, 0.0, -50.0);
        s.sphere.radius = 0.1;
        s.wall = None;
        // camera high above the ground looking straight up
        let pose = CameraPose::new(Vec3::new(0.0, 0.0, 10.0), crate::lens::look_rotation(Vec3::z()));
        let lens = LensModel::fisheye_degrees(180.0);
        let img = render_oracle(&s, &pose, &lens, Resolution::square(32), 2, DepthInterpretation::Z);
        for i in 0..img.rgb.len() {
            if img.valid[i] {
                assert_eq!(img.rgb[i], s.sky.map(|v| v as f32));
            }
        }
        assert!(!img.valid[0], "corner lies outside the image circle");
    }

    #[test]
    fn downward_fisheye_center_depth_is_height() {
        let h = 2.75;
        let pose = CameraPose::looking_along(Vec3::new(-2.0, -2.0, h), -Vec3::z());
        let lens = LensModel::fisheye_degrees(180.0);
        let img = render_oracle(
            &scene(),
            &pose,
            &lens,
            Resolution::square(65),
            1,
            DepthInterpretation::Z,
        );
        assert_eq!(img.depth_at(32, 32), Some(h as f32));
        let img = render_oracle(
            &scene(),
            &pose,
            &lens,
            Resolution::square(65),
            1,
            DepthInterpretation::Raylen,
        );
        assert_eq!(img.depth_at(32, 32), Some(h as f32));
    }

    #[test]
    fn single_sample_colors_come_from_palette() {
        let s = scene();
        let palette: Vec<[f32; 3]> = s.palette().iter().map(|c| c.map(|v| v as f32)).collect();
        let pose = CameraPose::new(
            Vec3::new(0.0, -1.0, 1.2),
            UnitQuaternion::from_euler_angles(-PI / 2.0, 0.0, 0.0),
        );
        let img = render_oracle(
            &s,
            &pose,
            &LensModel::full_panorama(),
            Resolution::new(64, 32),
            1,
            DepthInterpretation::Z,
        );
        for (c, ok) in img.rgb.iter().zip(&img.valid) {
            assert!(*ok);
            assert!(palette.contains(c), "{c:?}");
        }
    }

    #[test]
    fn silhouette_clearance_band() {
        // looking straight down at the sphere: its outline is a circle
        let s = scene();
        let c = s.sphere.center;
        let h = 3.0;
        let pose = CameraPose::looking_along(Vec3::new(c.x, c.y, h), -Vec3::z());
        let lens = LensModel::rectilinear_square(18.0, 36.0);
        let res = Resolution::square(128);
        let keep = silhouette_clearance(&s, &pose, &lens, res, 3.0);
        // angular radius of the outline, in pixels from the image center
        let d = h - c.z;
        let alpha = (s.sphere.radius / d).asin();
        let r_px = alpha.tan() * 64.0;
        for y in 0..128 {
            for x in 0..128 {
                let p = PixelCoord::center_of(x, y);
                let dist = ((p.u - 64.0).powi(2) + (p.v - 64.0).powi(2)).sqrt();
                let gap = (dist - r_px).abs();
                if gap < 3.0 {
                    assert!(!keep[(y * 128 + x) as usize], "({x},{y}) gap {gap}");
                }
                if gap > 3.3 {
                    assert!(keep[(y * 128 + x) as usize], "({x},{y}) gap {gap}");
                }
            }
        }
    }
}
