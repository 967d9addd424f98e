use std::io::Write;
use std::path::Path;

use super::{ImageError, PlenImage};

/// Standard sRGB opto-electronic transfer function on `[0, 1]`.
pub fn srgb_encode(linear: f64) -> f64 {
    let c = linear.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_byte(linear: f64) -> u8 {
    // f64::round rounds half away from zero
    (srgb_encode(linear) * 255.0).round() as u8
}

/// Writes an 8-bit sRGB PNG. Invalid pixels get alpha 0; when every pixel is
/// valid the file is plain RGB. Depth is never written.
pub fn write_png_to<W: Write>(img: &PlenImage, out: W) -> Result<(), ImageError> {
    let all_valid = img.valid.iter().all(|v| *v);
    let channels = if all_valid { 3 } else { 4 };
    let mut data = Vec::with_capacity(img.rgb.len() * channels);
    for (c, &ok) in img.rgb.iter().zip(&img.valid) {
        if ok {
            data.extend(c.iter().map(|&v| srgb_to_byte(v as f64)));
        } else {
            data.extend([0, 0, 0]);
        }
        if !all_valid {
            data.push(if ok { 255 } else { 0 });
        }
    }

    let mut encoder = png::Encoder::new(out, img.width(), img.height());
    encoder.set_color(if all_valid {
        png::ColorType::Rgb
    } else {
        png::ColorType::Rgba
    });
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&data)?;
    writer.finish()?;
    Ok(())
}

pub fn write_png(img: &PlenImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let mut buf = Vec::new();
    write_png_to(img, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
