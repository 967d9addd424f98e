//! Incremental 3D convex hull, tolerant of large coplanar point sets such
//! as the face grids of a cuboid rig.

use std::collections::HashSet;

use thiserror::Error;

use crate::lens::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("need at least 4 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("points are {0} (no volume)")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexHull {
    pub points: Vec<Vec3>,
    /// Outward-facing (counter-clockwise from outside) triangles.
    pub faces: Vec<[usize; 3]>,
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    alive: bool,
}

impl Face {
    fn new(v: [usize; 3], pts: &[Vec3], interior: &Vec3) -> Self {
        let [a, b, c] = v;
        let mut normal = (pts[b] - pts[a]).cross(&(pts[c] - pts[a]));
        let len = normal.norm();
        if len > 0.0 {
            normal /= len;
        }
        let mut face = Face {
            v,
            normal,
            offset: normal.dot(&pts[a]),
            alive: true,
        };
        if face.distance(interior) > 0.0 {
            face.v.swap(1, 2);
            face.normal = -face.normal;
            face.offset = -face.offset;
        }
        face
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

impl ConvexHull {
    pub fn build(input: &[Vec3]) -> Result<Self, HullError> {
        let mut pts: Vec<Vec3> = input.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z)));
        pts.dedup();
        if pts.len() < 4 {
            return Err(HullError::TooFewPoints(pts.len()));
        }

        let extent = (0..3)
            .map(|k| {
                let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        let eps = 1e-9 * extent.max(f64::MIN_POSITIVE);

        let [i0, i1, i2, i3] = initial_simplex(&pts, eps)?;
        let interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
        let mut faces: Vec<Face> = [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]]
            .into_iter()
            .map(|v| Face::new(v, &pts, &interior))
            .collect();

        // extreme points first so most of the rest is already inside
        let mut order: Vec<usize> = (0..pts.len()).filter(|i| ![i0, i1, i2, i3].contains(i)).collect();
        order.sort_by(|&a, &b| {
            let da = (pts[a] - interior).norm_squared();
            let db = (pts[b] - interior).norm_squared();
            db.total_cmp(&da).then(a.cmp(&b))
        });

        for p in order {
            let point = pts[p];
            let visible: Vec<usize> = faces
                .iter()
                .enumerate()
                .filter(|(_, f)| f.alive && f.distance(&point) > eps)
                .map(|(i, _)| i)
                .collect();
            if visible.is_empty() {
                continue;
            }
            let mut edges: HashSet<(usize, usize)> = HashSet::new();
            for &fi in &visible {
                let [a, b, c] = faces[fi].v;
                edges.extend([(a, b), (b, c), (c, a)]);
                faces[fi].alive = false;
            }
            let mut horizon: Vec<(usize, usize)> = edges
                .iter()
                .filter(|&&(a, b)| !edges.contains(&(b, a)))
                .copied()
                .collect();
            horizon.sort_unstable();
            for (a, b) in horizon {
                faces.push(Face::new([a, b, p], &pts, &interior));
            }
        }

        let faces = faces.into_iter().filter(|f| f.alive).map(|f| f.v).collect();
        Ok(ConvexHull { points: pts, faces })
    }

    pub fn volume(&self) -> f64 {
        let origin = self.points[self.faces[0][0]];
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (
                    self.points[a] - origin,
                    self.points[b] - origin,
                    self.points[c] - origin,
                );
                pa.dot(&pb.cross(&pc)) / 6.0
            })
            .sum()
    }

    /// Signed distance of `p` to the hull boundary, positive outside.
    pub fn max_face_distance(&self, p: &Vec3) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let n = (self.points[b] - self.points[a])
                    .cross(&(self.points[c] - self.points[a]))
                    .normalize();
                n.dot(&(p - self.points[a]))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn initial_simplex(pts: &[Vec3], eps: f64) -> Result<[usize; 4], HullError> {
    let mut extremes = Vec::with_capacity(6);
    for k in 0..3 {
        let lo = (0..pts.len()).min_by(|&a, &b| pts[a][k].total_cmp(&pts[b][k])).unwrap();
        let hi = (0..pts.len()).max_by(|&a, &b| pts[a][k].total_cmp(&pts[b][k])).unwrap();
        extremes.extend([lo, hi]);
    }
    let mut best = (0, 0, 0.0);
    for &a in &extremes {
        for &b in &extremes {
            let d = (pts[a] - pts[b]).norm_squared();
            if d > best.2 {
                best = (a, b, d);
            }
        }
    }
    let (i0, i1) = (best.0, best.1);
    if best.2.sqrt() <= eps {
        return Err(HullError::Degenerate("co-located"));
    }
    let axis = (pts[i1] - pts[i0]).normalize();
    let line_dist = |p: &Vec3| {
        let r = p - pts[i0];
        (r - axis * r.dot(&axis)).norm()
    };
    let i2 = (0..pts.len())
        .max_by(|&a, &b| line_dist(&pts[a]).total_cmp(&line_dist(&pts[b])))
        .unwrap();
    if line_dist(&pts[i2]) <= eps {
        return Err(HullError::Degenerate("collinear"));
    }
    let normal = (pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0])).normalize();
    let plane_dist = |p: &Vec3| normal.dot(&(p - pts[i0])).abs();
    let i3 = (0..pts.len())
        .max_by(|&a, &b| plane_dist(&pts[a]).total_cmp(&plane_dist(&pts[b])))
        .unwrap();
    if plane_dist(&pts[i3]) <= eps {
        return Err(HullError::Degenerate("coplanar"));
    }
    Ok([i0, i1, i2, i3])
}

/// Volume enclosed by the convex hull of `points`.
pub fn hull_volume(points: &[Vec3]) -> Result<f64, HullError> {
    Ok(ConvexHull::build(points)?.volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn unit_tetrahedron() {
        let pts = [v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.), v(0., 0., 1.)];
        assert!((hull_volume(&pts).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn dense_box_surface_grid() {
        let mut pts = Vec::new();
        for i in 0..=10 {
            for j in 0..=10 {
                for k in 0..=10 {
                    let on_surface = [i, j, k].iter().any(|&c| c == 0 || c == 10);
                    if on_surface {
                        pts.push(v(i as f64 * 0.2, j as f64 * 0.3, k as f64 * 0.1));
                    }
                }
            }
        }
        let vol = hull_volume(&pts).unwrap();
        assert!((vol - 2.0 * 3.0 * 1.0).abs() < 1e-9, "{vol}");
    }

    #[test]
    fn degenerate_inputs() {
        let flat = [
            v(0., 0., 0.),
            v(1., 0., 0.),
            v(0., 1., 0.),
            v(1., 1., 0.),
            v(0.5, 0.2, 0.),
        ];
        assert_eq!(hull_volume(&flat), Err(HullError::Degenerate("coplanar")));
        let line = [v(0., 0., 0.), v(1., 1., 1.), v(2., 2., 2.), v(3., 3., 3.)];
        assert_eq!(hull_volume(&line), Err(HullError::Degenerate("collinear")));
        let dup = [v(1., 1., 1.); 6];
        assert_eq!(hull_volume(&dup), Err(HullError::TooFewPoints(1)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hull_contains_inputs_and_is_order_independent(
            raw in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 5..80)
        ) {
            let pts: Vec<Vec3> = raw.iter().map(|&(x, y, z)| v(x, y, z)).collect();
            let Ok(hull) = ConvexHull::build(&pts) else { return Ok(()); };
            for p in &pts {
                prop_assert!(hull.max_face_distance(p) < 1e-7);
            }
            let mut rev = pts.clone();
            rev.reverse();
            let vol = hull.volume();
            prop_assert!(vol > 0.0 && vol <= 1000.0);
            prop_assert!((hull_volume(&rev).unwrap() - vol).abs() < 1e-9 * vol.max(1.0));
        }
    }
}
