//! Shepp-Logan head phantom.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::kspace::{normalize_image, Image};

/// `(intensity, x0, y0, semi-axis a, semi-axis b, rotation in degrees)` on
/// the `[-1, 1]^2` field of view, with the higher-contrast intensities
/// commonly used for MR work.
const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.0, 0.0, 0.69, 0.92, 0.0),
    (-0.8, 0.0, -0.0184, 0.6624, 0.874, 0.0),
    (-0.2, 0.22, 0.0, 0.11, 0.31, -18.0),
    (-0.2, -0.22, 0.0, 0.16, 0.41, 18.0),
    (0.1, 0.0, 0.35, 0.21, 0.25, 0.0),
    (0.1, 0.0, 0.1, 0.046, 0.046, 0.0),
    (0.1, 0.0, -0.1, 0.046, 0.046, 0.0),
    (0.1, -0.08, -0.605, 0.046, 0.023, 0.0),
    (0.1, 0.0, -0.606, 0.023, 0.023, 0.0),
    (0.1, 0.06, -0.605, 0.023, 0.046, 0.0),
];

/// The 10-ellipse phantom sampled at pixel centers, normalized to `[0, 1]`.
/// Row 0 is the top of the head.
pub fn shepp_logan(dims: GridDims) -> Result<Image> {
    if dims.rows < 16 || dims.cols < 16 {
        return Err(Error::TooSmall(dims));
    }
    let (m, n) = dims.shape();
    let pixels = Array2::from_shape_fn((m, n), |(r, c)| {
        // Symmetric integer numerators keep mirrored pixels exactly mirrored.
        let x = (2 * c as i64 + 1 - n as i64) as f64 / n as f64;
        let y = (m as i64 - 1 - 2 * r as i64) as f64 / m as f64;
        ELLIPSES
            .iter()
            .filter(|&&(_, x0, y0, a, b, deg)| {
                let (s, co) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * co + dy * s;
                let v = -dx * s + dy * co;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            })
            .map(|e| e.0)
            .sum::<f64>()
    });
    Ok(normalize_image(&Image::new(pixels)?))
}
