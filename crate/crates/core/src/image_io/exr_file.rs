use std::io::{Cursor, Seek, Write};
use std::path::Path;

use exr::prelude::*;
use std::result::Result;

use super::{check_exists, ImageError, PlenImage};
use crate::lens::Resolution;

const DEPTH_NAMES: [&str; 2] = ["Z", "depth"];

/// Matches `name` exactly or as the last component of a layered channel
/// name such as `ViewLayer.Combined.R`.
fn channel_matches(channel: &Text, name: &str) -> bool {
    let full = channel.to_string();
    let last = full.rsplit('.').next().unwrap_or(&full);
    last.eq_ignore_ascii_case(name)
}

fn find_channel<'a>(channels: &'a [AnyChannel<FlatSamples>], names: &[&str]) -> Option<&'a AnyChannel<FlatSamples>> {
    names
        .iter()
        .find_map(|n| channels.iter().find(|c| channel_matches(&c.name, n)))
}

pub fn read_exr(path: impl AsRef<Path>) -> Result<PlenImage, ImageError> {
    let path = path.as_ref();
    check_exists(path)?;
    let exr_err = |source| ImageError::Exr {
        path: path.to_path_buf(),
        source,
    };
    let image = read()
        .no_deep_data()
        .largest_resolution_level()
        .all_channels()
        .first_valid_layer()
        .all_attributes()
        .from_file(path)
        .map_err(exr_err)?;

    let layer = image.layer_data;
    let size = layer.size;
    let resolution = Resolution::new(size.width() as u32, size.height() as u32);
    let channels = &layer.channel_data.list;

    let missing = |c: &str| ImageError::UnsupportedChannels {
        path: path.to_path_buf(),
        reason: format!(
            "missing {c} channel (found: {})",
            channels
                .iter()
                .map(|c| c.name.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let r = find_channel(channels, &["R"]).ok_or_else(|| missing("R"))?;
    let g = find_channel(channels, &["G"]).ok_or_else(|| missing("G"))?;
    let b = find_channel(channels, &["B"]).ok_or_else(|| missing("B"))?;
    let depth = find_channel(channels, &DEPTH_NAMES);
    let alpha = find_channel(channels, &["A"]);

    let n = resolution.pixel_count();
    let to_vec = |c: &AnyChannel<FlatSamples>| -> Vec<f32> { c.sample_data.values_as_f32().collect() };
    let (r, g, b) = (to_vec(r), to_vec(g), to_vec(b));
    if r.len() != n || g.len() != n || b.len() != n {
        return Err(ImageError::UnsupportedChannels {
            path: path.to_path_buf(),
            reason: "subsampled color channels are not supported".into(),
        });
    }
    let rgb: Vec<[f32; 3]> = (0..n).map(|i| [r[i], g[i], b[i]]).collect();
    let depth = depth.map(to_vec);
    if depth.as_ref().is_some_and(|d| d.len() != n) {
        return Err(ImageError::UnsupportedChannels {
            path: path.to_path_buf(),
            reason: "subsampled depth channel is not supported".into(),
        });
    }

    let valid = match (alpha.map(to_vec), &depth) {
        (Some(a), _) if a.len() == n => a.iter().map(|&a| a > 0.5).collect(),
        (_, Some(d)) => rgb
            .iter()
            .zip(d)
            .map(|(c, &z)| !(c.iter().all(|&v| v == 0.0) && z == f32::INFINITY))
            .collect(),
        _ => vec![true; n],
    };

    PlenImage::from_planes(resolution, rgb, depth, valid)
}

/// Encodes `img` as a ZIP-compressed scanline EXR with half-float R, G, B,
/// A and, when present, Z channels. Invalid pixels become black with
/// zero alpha and infinite depth.
pub fn write_exr_to<W: Write + Seek>(img: &PlenImage, out: W) -> Result<(), ImageError> {
    let n = img.rgb.len();
    let mut planes: [Vec<f16>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut alpha = Vec::with_capacity(n);
    for (c, &ok) in img.rgb.iter().zip(&img.valid) {
        for (plane, &v) in planes.iter_mut().zip(c) {
            plane.push(f16::from_f32(if ok { v } else { 0.0 }));
        }
        alpha.push(f16::from_f32(if ok { 1.0 } else { 0.0 }));
    }
    let [r, g, b] = planes;
    let mut list = SmallVec::<[AnyChannel<FlatSamples>; 4]>::new();
    list.push(AnyChannel::new("R", FlatSamples::F16(r)));
    list.push(AnyChannel::new("G", FlatSamples::F16(g)));
    list.push(AnyChannel::new("B", FlatSamples::F16(b)));
    list.push(AnyChannel::new("A", FlatSamples::F16(alpha)));
    if let Some(depth) = &img.depth {
        let z = depth
            .iter()
            .zip(&img.valid)
            .map(|(&z, &ok)| f16::from_f32(if ok { z } else { f32::INFINITY }))
            .collect();
        list.push(AnyChannel::new("Z", FlatSamples::F16(z)));
    }

    let size = (img.width() as usize, img.height() as usize);
    let layer = Layer::new(
        size,
        LayerAttributes::default(),
        Encoding::SMALL_LOSSLESS,
        AnyChannels::sort(list),
    );
    Image::from_layer(layer)
        .write()
        .to_buffered(out)
        .map_err(|source| ImageError::Exr {
            path: "<buffer>".into(),
            source,
        })
}

pub fn write_exr(img: &PlenImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let mut buf = Cursor::new(Vec::new());
    write_exr_to(img, &mut buf)?;
    std::fs::write(path, buf.into_inner())?;
    Ok(())
}

/// The value an f32 takes after a trip through a half-float channel.
pub fn quantize_to_half(v: f32) -> f32 {
    f16::from_f32(v).to_f32()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image(with_depth: bool) -> PlenImage {
        let res = Resolution::new(7, 5);
        let n = res.pixel_count();
        let rgb = (0..n)
            .map(|i| {
                let f = i as f32;
                [
                    quantize_to_half(f * 0.1),
                    quantize_to_half(f * 1.7),
                    quantize_to_half(100.0 / (f + 1.0)),
                ]
            })
            .collect();
        let valid = (0..n).map(|i| i % 6 != 0).collect();
        let mut img = PlenImage::from_planes(res, rgb, None, vec![true; n]).unwrap();
        img.valid = valid;
        if with_depth {
            img = img
                .with_depth((0..n).map(|i| quantize_to_half(i as f32 * 0.37)).collect())
                .unwrap();
        }
        // invalid pixels are canonicalized on write
        for i in 0..n {
            if !img.valid[i] {
                img.rgb[i] = [0.0; 3];
                if let Some(d) = &mut img.depth {
                    d[i] = f32::INFINITY;
                }
            }
        }
        img
    }

    #[test]
    fn round_trip_with_depth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.exr");
        let img = sample_image(true);
        write_exr(&img, &path).unwrap();
        assert_eq!(read_exr(&path).unwrap(), img);
    }

    #[test]
    fn rgb_only_file_has_no_depth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.exr");
        let img = sample_image(false);
        write_exr(&img, &path).unwrap();
        let back = read_exr(&path).unwrap();
        assert!(back.depth.is_none());
        assert_eq!(back, img);
    }

    #[test]
    fn missing_file_is_distinct_error() {
        let err = read_exr("/nonexistent/x.exr").unwrap_err();
        assert!(matches!(err, ImageError::NotFound(_)));
    }

    #[test]
    fn garbage_file_is_exr_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.exr");
        std::fs::write(&path, b"not an exr").unwrap();
        assert!(matches!(read_exr(&path), Err(ImageError::Exr { .. })));
    }

    fn write_channels(path: &Path, names: &[&str]) {
        let list: SmallVec<[AnyChannel<FlatSamples>; 4]> = names
            .iter()
            .map(|n| AnyChannel::new(*n, FlatSamples::F16(vec![f16::from_f32(0.5); 4])))
            .collect();
        let layer = Layer::new(
            (2, 2),
            LayerAttributes::default(),
            Encoding::UNCOMPRESSED,
            AnyChannels::sort(list),
        );
        Image::from_layer(layer).write().to_file(path).unwrap();
    }

    #[test]
    fn missing_color_channel_is_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gray.exr");
        write_channels(&path, &["Y"]);
        let err = read_exr(&path).unwrap_err();
        assert!(matches!(err, ImageError::UnsupportedChannels { .. }), "{err}");
    }

    #[test]
    fn depth_alias_and_layered_names_are_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layered.exr");
        write_channels(
            &path,
            &["View.Combined.R", "View.Combined.G", "View.Combined.B", "View.depth"],
        );
        let img = read_exr(&path).unwrap();
        assert_eq!(img.depth.as_deref(), Some(&[0.5f32; 4][..]));
        assert_eq!(img.rgb[0], [0.5; 3]);
        assert_eq!(img.valid_count(), 4);
    }
}
