use super::PlenImage;

/// Exposure adjustment followed by optional extended Reinhard compression.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ToneMapParams {
    /// Linear scale is `2^exposure_stops`.
    pub exposure_stops: f64,
    /// Luminance that maps to display white; `None` disables Reinhard.
    pub reinhard_white: Option<f64>,
}

impl ToneMapParams {
    pub fn new(exposure_stops: f64, reinhard_white: Option<f64>) -> Result<Self, String> {
        if let Some(w) = reinhard_white {
            if !(w > 0.0 && w.is_finite()) {
                return Err(format!("reinhard white point must be positive, got {w}"));
            }
        }
        if !exposure_stops.is_finite() {
            return Err(format!("exposure must be finite, got {exposure_stops}"));
        }
        Ok(ToneMapParams {
            exposure_stops,
            reinhard_white,
        })
    }
}

/// Rec. 709 luminance of linear RGB.
pub fn luminance(rgb: [f64; 3]) -> f64 {
    0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2]
}

/// `L·(1 + L/Lw²) / (1 + L)`.
pub fn reinhard_extended(l: f64, white: f64) -> f64 {
    l * (1.0 + l / (white * white)) / (1.0 + l)
}

fn map_pixel(c: [f32; 3], params: &ToneMapParams) -> [f32; 3] {
    let scale = params.exposure_stops.exp2();
    let mut rgb = c.map(|v| v as f64 * scale);
    if let Some(white) = params.reinhard_white {
        let l = luminance(rgb);
        rgb = if l > 0.0 {
            let ratio = reinhard_extended(l, white) / l;
            rgb.map(|v| v * ratio)
        } else {
            [0.0; 3]
        };
    }
    rgb.map(|v| v.clamp(0.0, 1.0) as f32)
}

/// Display-referred copy of `img`, every component in `[0, 1]`. Depth and
/// validity are carried over untouched.
pub fn tonemap(img: &PlenImage, params: &ToneMapParams) -> PlenImage {
    let mut out = img.clone();
    for c in out.rgb.iter_mut() {
        *c = map_pixel(*c, params);
    }
    out
}
