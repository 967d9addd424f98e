//! Lens-swap reprojection with stratified supersampling, and image metrics.
//!
//! Source and destination share one camera pose, so a destination ray is
//! looked up in the source image by direction alone. Depth is never
//! averaged across samples; it follows the pixel-center ray.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::image_io::PlenImage;
use crate::lens::{pixel_to_ray, ray_to_pixel, LensError, LensModel, PixelCoord, Resolution};

pub const MAX_SCALE: f64 = 8.0;

/// Relative depth difference above which neighbouring source pixels are
/// taken to straddle a depth discontinuity.
pub const DEPTH_EDGE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReprojectError {
    #[error("scale {0} outside (0, {MAX_SCALE}]")]
    BadScale(f64),
    #[error("samples must be at least 1")]
    BadSamples,
    #[error(transparent)]
    Lens(#[from] LensError),
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch(Resolution, Resolution),
    #[error("mask has {found} entries, image has {expected} pixels")]
    MaskSize { expected: usize, found: usize },
    #[error("no pixel is valid in both images")]
    NoOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorFilter {
    Nearest,
    #[default]
    Bilinear,
}

impl std::str::FromStr for ColorFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(ColorFilter::Nearest),
            "bilinear" => Ok(ColorFilter::Bilinear),
            other => Err(format!("unknown filter `{other}` (expected nearest or bilinear)")),
        }
    }
}

/// How the depth of the center ray is fetched from the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthFilter {
    /// Value of the source pixel containing the mapped point.
    Nearest,
    /// Cubic over a 4×4 stencil free of depth steps larger than
    /// [`DEPTH_EDGE_THRESHOLD`], else bilinear when the 2×2 taps stay within
    /// it, else nearest.
    #[default]
    EdgeAware,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReprojectParams {
    pub dst_lens: LensModel,
    pub scale: f64,
    pub samples: u32,
    pub filter: ColorFilter,
    pub depth_filter: DepthFilter,
}

impl ReprojectParams {
    pub fn new(dst_lens: LensModel) -> Self {
        ReprojectParams {
            dst_lens,
            scale: 1.0,
            samples: 1,
            filter: ColorFilter::default(),
            depth_filter: DepthFilter::default(),
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_samples(mut self, samples: u32) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_filter(mut self, filter: ColorFilter) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_depth_filter(mut self, depth_filter: DepthFilter) -> Self {
        self.depth_filter = depth_filter;
        self
    }

    pub fn validate(&self) -> Result<(), ReprojectError> {
        if !(self.scale > 0.0 && self.scale <= MAX_SCALE) {
            return Err(ReprojectError::BadScale(self.scale));
        }
        if self.samples == 0 {
            return Err(ReprojectError::BadSamples);
        }
        self.dst_lens.validate()?;
        Ok(())
    }
}

/// Sub-pixel positions of an `s × s` grid at cell centers, row by row.
pub fn stratified_offsets(samples: u32) -> Vec<(f64, f64)> {
    let s = samples.max(1);
    let step = 1.0 / s as f64;
    (0..s)
        .flat_map(|j| (0..s).map(move |i| ((i as f64 + 0.5) * step, (j as f64 + 0.5) * step)))
        .collect()
}

/// Source pixel containing `p`, clamped to the image.
fn containing_pixel(src: &PlenImage, p: PixelCoord) -> (u32, u32) {
    let x = (p.u.floor().max(0.0) as u32).min(src.width() - 1);
    let y = (p.v.floor().max(0.0) as u32).min(src.height() - 1);
    (x, y)
}

/// Up to four bilinear taps `(index, weight)` around `p`, dropping taps
/// with zero weight or outside the image.
fn bilinear_taps(src: &PlenImage, p: PixelCoord) -> impl Iterator<Item = (usize, f64)> + '_ {
    let fx = p.u - 0.5;
    let fy = p.v - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let (w, h) = (src.width() as i64, src.height() as i64);
    let (x0, y0) = (x0 as i64, y0 as i64);
    [
        (x0, y0, (1.0 - tx) * (1.0 - ty)),
        (x0 + 1, y0, tx * (1.0 - ty)),
        (x0, y0 + 1, (1.0 - tx) * ty),
        (x0 + 1, y0 + 1, tx * ty),
    ]
    .into_iter()
    .filter(move |&(x, y, wt)| wt > 0.0 && x >= 0 && y >= 0 && x < w && y < h)
    .map(move |(x, y, wt)| ((y * w + x) as usize, wt))
}

fn fetch_color(src: &PlenImage, p: PixelCoord, filter: ColorFilter) -> Option<[f64; 3]> {
    match filter {
        ColorFilter::Nearest => {
            let (x, y) = containing_pixel(src, p);
            let i = src.index(x, y);
            src.valid[i].then(|| src.rgb[i].map(f64::from))
        }
        ColorFilter::Bilinear => {
            let mut sum = [0.0f64; 3];
            let mut total = 0.0;
            for (i, wt) in bilinear_taps(src, p) {
                if !src.valid[i] {
                    continue;
                }
                let c = src.rgb[i];
                for k in 0..3 {
                    sum[k] += wt * c[k] as f64;
                }
                total += wt;
            }
            (total > 0.0).then(|| sum.map(|s| s / total))
        }
    }
}

fn fetch_depth(src: &PlenImage, depth: &[f32], p: PixelCoord, filter: DepthFilter) -> f32 {
    let (x, y) = containing_pixel(src, p);
    let i = src.index(x, y);
    let nearest = if src.valid[i] { depth[i] } else { f32::INFINITY };
    if filter == DepthFilter::Nearest {
        return nearest;
    }
    if let Some(z) = cubic_depth(src, depth, p) {
        return z as f32;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut total = 0.0;
    for (j, wt) in bilinear_taps(src, p) {
        let z = depth[j] as f64;
        if !src.valid[j] || !z.is_finite() {
            return nearest;
        }
        lo = lo.min(z);
        hi = hi.max(z);
        sum += wt * z;
        total += wt;
    }
    if total == 0.0 || hi - lo > DEPTH_EDGE_THRESHOLD * lo {
        return nearest;
    }
    (sum / total) as f32
}

fn is_step(a: f64, b: f64) -> bool {
    (a - b).abs() > DEPTH_EDGE_THRESHOLD * a.min(b)
}

/// No depth step between horizontally or vertically adjacent taps.
fn continuous(taps: &[[f64; 4]; 4]) -> bool {
    (0..4).all(|j| (0..3).all(|i| !is_step(taps[j][i], taps[j][i + 1]) && !is_step(taps[i][j], taps[i + 1][j])))
}

/// Cubic Lagrange weights on nodes `start..start + 4`, evaluated at `x`.
fn lagrange_weights(start: i64, x: f64) -> [f64; 4] {
    let n = |k: usize| (start + k as i64) as f64;
    std::array::from_fn(|k| (0..4).filter(|&j| j != k).map(|j| (x - n(j)) / (n(k) - n(j))).product())
}

/// Cubic interpolation on the first 4×4 stencil around `p` whose taps all
/// lie on one surface. The centered stencil is tried first, then the ones
/// shifted away from a neighbouring edge. `None` if none qualifies.
fn cubic_depth(src: &PlenImage, depth: &[f32], p: PixelCoord) -> Option<f64> {
    let fx = p.u - 0.5;
    let fy = p.v - 0.5;
    let (x0, y0) = (fx.floor() as i64, fy.floor() as i64);
    let (w, h) = (src.width() as i64, src.height() as i64);
    let tap = |x: i64, y: i64| {
        let idx = (y * w + x) as usize;
        let z = depth[idx] as f64;
        (src.valid[idx] && z.is_finite()).then_some(z)
    };
    let shifts = [-1, -2, 0];
    for sy in shifts.map(|d| y0 + d) {
        for sx in shifts.map(|d| x0 + d) {
            if sx < 0 || sy < 0 || sx + 3 >= w || sy + 3 >= h {
                continue;
            }
            let mut taps = [[0.0; 4]; 4];
            let mut complete = true;
            'scan: for (j, row) in taps.iter_mut().enumerate() {
                for (i, z) in row.iter_mut().enumerate() {
                    match tap(sx + i as i64, sy + j as i64) {
                        Some(v) => *z = v,
                        None => {
                            complete = false;
                            break 'scan;
                        }
                    }
                }
            }
            if !complete || !continuous(&taps) {
                continue;
            }
            let (wx, wy) = (lagrange_weights(sx, fx), lagrange_weights(sy, fy));
            let mut sum = 0.0;
            for (row, wy) in taps.iter().zip(wy) {
                for (z, wx) in row.iter().zip(wx) {
                    sum += wx * wy * z;
                }
            }
            return Some(sum);
        }
    }
    None
}

/// Destination resolution for a given source resolution and scale.
pub fn output_resolution(src: Resolution, scale: f64) -> Resolution {
    src.scaled(scale)
}

/// Re-renders `src` (seen through `src_lens`) as if captured with
/// `params.dst_lens` from the same pose.
pub fn reproject(src: &PlenImage, src_lens: &LensModel, params: &ReprojectParams) -> Result<PlenImage, ReprojectError> {
    params.validate()?;
    src_lens.validate()?;
    let src_res = src.resolution();
    let dst_res = output_resolution(src_res, params.scale);
    let dst_lens = params.dst_lens;
    let offsets = stratified_offsets(params.samples);
    let width = dst_res.width as usize;
    let n = dst_res.pixel_count();

    let mut rgb = vec![[0.0f32; 3]; n];
    let mut valid = vec![false; n];
    let mut depth = src.depth.as_ref().map(|_| vec![f32::INFINITY; n]);
    let src_depth = src.depth.as_deref();

    let to_source =
        |p: PixelCoord| pixel_to_ray(&dst_lens, dst_res, p).and_then(|d| ray_to_pixel(src_lens, src_res, &d));

    let process_row = |y: usize, rgb_row: &mut [[f32; 3]], valid_row: &mut [bool], depth_row: Option<&mut [f32]>| {
        for x in 0..width {
            let mut sum = [0.0f64; 3];
            let mut count = 0u32;
            for (ox, oy) in &offsets {
                let p = PixelCoord::new(x as f64 + ox, y as f64 + oy);
                if let Some(c) = to_source(p).and_then(|sp| fetch_color(src, sp, params.filter)) {
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
        if let (Some(row), Some(src_depth)) = (depth_row, src_depth) {
            for (x, out) in row.iter_mut().enumerate() {
                if !valid_row[x] {
                    continue;
                }
                if let Some(sp) = to_source(PixelCoord::center_of(x as u32, y as u32)) {
                    *out = fetch_depth(src, src_depth, sp, params.depth_filter);
                }
            }
        }
    };

    match depth.as_mut() {
        Some(depth) => rgb
            .par_chunks_mut(width)
            .zip(valid.par_chunks_mut(width))
            .zip(depth.par_chunks_mut(width))
            .enumerate()
            .for_each(|(y, ((r, v), d))| process_row(y, r, v, Some(d))),
        None => rgb
            .par_chunks_mut(width)
            .zip(valid.par_chunks_mut(width))
            .enumerate()
            .for_each(|(y, (r, v))| process_row(y, r, v, None)),
    }

    Ok(PlenImage::from_planes(dst_res, rgb, depth, valid).expect("planes sized from resolution"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageMetrics {
    /// Peak 1.0; `+∞` (serialized as `null`) for identical images.
    pub psnr_db: f64,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Largest depth difference over compared pixels, when both carry depth.
    /// Pixels where both depths are infinite are skipped.
    pub depth_max_abs: Option<f64>,
    pub pixels: usize,
}

/// Error metrics over pixels valid in both images and selected by `mask`.
pub fn compare_images(a: &PlenImage, b: &PlenImage, mask: Option<&[bool]>) -> Result<ImageMetrics, ReprojectError> {
    if a.resolution() != b.resolution() {
        return Err(ReprojectError::DimensionMismatch(a.resolution(), b.resolution()));
    }
    let n = a.rgb.len();
    if let Some(m) = mask {
        if m.len() != n {
            return Err(ReprojectError::MaskSize {
                expected: n,
                found: m.len(),
            });
        }
    }
    let both_depth = a.depth.as_deref().zip(b.depth.as_deref());
    let mut sq = 0.0;
    let mut abs_sum = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut depth_max: f64 = 0.0;
    let mut pixels = 0usize;
    for i in 0..n {
        if !(a.valid[i] && b.valid[i] && mask.map_or(true, |m| m[i])) {
            continue;
        }
        pixels += 1;
        for k in 0..3 {
            let d = (a.rgb[i][k] as f64 - b.rgb[i][k] as f64).abs();
            sq += d * d;
            abs_sum += d;
            max_abs = max_abs.max(d);
        }
        if let Some((da, db)) = both_depth {
            let (za, zb) = (da[i] as f64, db[i] as f64);
            if !(za.is_infinite() && zb.is_infinite() && za == zb) {
                depth_max = depth_max.max((za - zb).abs());
            }
        }
    }
    if pixels == 0 {
        return Err(ReprojectError::NoOverlap);
    }
    let samples = (pixels * 3) as f64;
    let mse = sq / samples;
    let psnr_db = if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() };
    Ok(ImageMetrics {
        psnr_db,
        max_abs,
        mean_abs: abs_sum / samples,
        depth_max_abs: both_depth.map(|_| depth_max),
        pixels,
    })
}

/// Pixels whose centers lie in the centered box covering `fraction` of each
/// image dimension.
pub fn central_region_mask(res: Resolution, fraction: f64) -> Vec<bool> {
    let margin = (1.0 - fraction) / 2.0;
    let (w, h) = (res.width as f64, res.height as f64);
    let (u0, u1) = (margin * w, (1.0 - margin) * w);
    let (v0, v1) = (margin * h, (1.0 - margin) * h);
    (0..res.pixel_count())
        .map(|i| {
            let p = PixelCoord::center_of((i % res.width as usize) as u32, (i / res.width as usize) as u32);
            p.u >= u0 && p.u <= u1 && p.v >= v0 && p.v <= v1
        })
        .collect()
}
