//! 8-bit grayscale rendering of images and error maps.
//!
//! Intensities map `[0, 1]` onto black..white. Signed errors map `[-1, 1]`
//! onto black..white with zero at 128, the nearest 8-bit level to 50% gray.
//! Values outside the range are clamped here and nowhere else.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::sampling::SamplingMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderMode {
    Intensity,
    SignedError,
}

/// Maps one value to a gray level. Halves round up.
pub fn gray_level(v: f64, mode: RenderMode) -> u8 {
    let scaled = match mode {
        RenderMode::Intensity => v.clamp(0.0, 1.0) * 255.0,
        RenderMode::SignedError => 127.5 * (v.clamp(-1.0, 1.0) + 1.0),
    };
    // NaN clamps to NaN and casts to 0
    (scaled + 0.5).floor() as u8
}

pub fn render(values: &Array2<f64>, mode: RenderMode) -> Array2<u8> {
    values.mapv(|v| gray_level(v, mode))
}

/// Retained frequencies white on black, DC at the center.
pub fn render_mask(mask: &SamplingMask) -> Array2<u8> {
    mask.retained().mapv(|b| if b { 255 } else { 0 })
}
