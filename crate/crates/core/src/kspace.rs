//! Centered-frequency Fourier model of an image.
//!
//! Transforms are unitary in both directions (each carries a `1/sqrt(mn)`
//! factor), so pixel-domain and k-space energies agree and noise levels are
//! comparable across grid sizes. [`KSpaceData`] is stored in centered order:
//! storage row `i` holds row frequency `i - floor(m/2)`, likewise for columns.

use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDims;

/// Imaginary residue (relative to the real part) above which an inverse
/// transform is reported as suspicious.
pub const IMAGINARY_RESIDUE_WARN: f64 = 1e-10;

/// A real-valued image of dimensionless intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pixels: Array2<f64>,
}

impl Image {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        let (rows, cols) = pixels.dim();
        GridDims::new(rows, cols)?;
        Ok(Self { pixels })
    }

    pub fn zeros(dims: GridDims) -> Self {
        Self {
            pixels: Array2::zeros(dims.shape()),
        }
    }

    pub fn dims(&self) -> GridDims {
        let (rows, cols) = self.pixels.dim();
        GridDims { rows, cols }
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.pixels
    }
}

/// Complex measurements on the full centered-frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceData {
    values: Array2<Complex64>,
}

impl KSpaceData {
    /// Wraps values already laid out in centered order.
    pub fn from_centered(values: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = values.dim();
        GridDims::new(rows, cols)?;
        Ok(Self { values })
    }

    pub fn zeros(dims: GridDims) -> Self {
        Self {
            values: Array2::zeros(dims.shape()),
        }
    }

    pub fn dims(&self) -> GridDims {
        let (rows, cols) = self.values.dim();
        GridDims { rows, cols }
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn at(&self, row_freq: i64, col_freq: i64) -> Option<Complex64> {
        self.dims()
            .index_of(row_freq, col_freq)
            .map(|idx| self.values[idx])
    }

    /// Values reordered into standard FFT order (DC at `[0, 0]`).
    pub fn to_natural(&self) -> Array2<Complex64> {
        let (m, n) = self.values.dim();
        Array2::from_shape_fn((m, n), |(k, l)| {
            self.values[((k + m / 2) % m, (l + n / 2) % n)]
        })
    }

    pub(crate) fn from_natural(natural: &Array2<Complex64>) -> Self {
        let (m, n) = natural.dim();
        let values = Array2::from_shape_fn((m, n), |(i, j)| {
            natural[((i + m.div_ceil(2)) % m, (j + n.div_ceil(2)) % n)]
        });
        Self { values }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of each complex sample.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParam {
                name: "sigma",
                reason: format!("must be finite and >= 0, got {sigma}"),
            });
        }
        Ok(Self { sigma, seed })
    }
}

/// Planned unitary 2-D transforms for one grid size, operating in natural
/// (unshifted) order on row-major buffers.
pub(crate) struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Fft2 {
    pub(crate) fn new(dims: GridDims) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows: dims.rows,
            cols: dims.cols,
            row_fwd: planner.plan_fft_forward(dims.cols),
            row_inv: planner.plan_fft_inverse(dims.cols),
            col_fwd: planner.plan_fft_forward(dims.rows),
            col_inv: planner.plan_fft_inverse(dims.rows),
            scale: 1.0 / (dims.len() as f64).sqrt(),
        }
    }

    pub(crate) fn forward(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub(crate) fn inverse(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut Array2<Complex64>, row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.dim(), (self.rows, self.cols));
        let buf = data
            .as_slice_mut()
            .expect("k-space buffers are standard layout");
        row.process(buf);

        let mut transposed = vec![Complex64::default(); buf.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                transposed[c * self.rows + r] = buf[r * self.cols + c];
            }
        }
        col.process(&mut transposed);
        for r in 0..self.rows {
            for c in 0..self.cols {
                buf[r * self.cols + c] = transposed[c * self.rows + r] * self.scale;
            }
        }
    }
}

/// Unitary 2-D DFT of `img`, returned in centered order.
pub fn forward_transform(img: &Image) -> KSpaceData {
    let fft = Fft2::new(img.dims());
    let mut buf = img.pixels.mapv(|v| Complex64::new(v, 0.0));
    fft.forward(&mut buf);
    KSpaceData::from_natural(&buf)
}

/// Inverse of [`forward_transform`], keeping the real part.
///
/// An imaginary residue larger than [`IMAGINARY_RESIDUE_WARN`] times the
/// largest real magnitude is logged as a warning.
pub fn inverse_transform(k: &KSpaceData) -> Image {
    let dims = k.dims();
    let fft = Fft2::new(dims);
    let mut buf = k.to_natural();
    fft.inverse(&mut buf);
    let max_re = buf.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
    let max_im = buf.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if max_im > IMAGINARY_RESIDUE_WARN * max_re && max_im > 0.0 {
        log::warn!(
            "inverse transform on {dims} left imaginary residue {max_im:.3e} (real scale {max_re:.3e})"
        );
    }
    Image {
        pixels: buf.mapv(|z| z.re),
    }
}

/// Adds i.i.d. centered complex Gaussian noise of standard deviation
/// `spec.sigma` to every grid value.
///
/// Real and imaginary parts each get variance `sigma^2 / 2`. The stream is
/// ChaCha20 seeded with `spec.seed` (stream 0), consumed in centered
/// row-major order, real part first.
pub fn add_measurement_noise(k: &KSpaceData, spec: &NoiseSpec) -> KSpaceData {
    if spec.sigma == 0.0 {
        return k.clone();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let scale = spec.sigma / std::f64::consts::SQRT_2;
    let mut values = k.values.clone();
    for v in values.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v += Complex64::new(re * scale, im * scale);
    }
    KSpaceData { values }
}

/// Affine rescale to `[0, 1]`; a constant image maps to all zeros.
pub fn normalize_image(img: &Image) -> Image {
    let (lo, hi) = img
        .pixels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let pixels = if span > 0.0 {
        img.pixels.mapv(|v| (v - lo) / span)
    } else {
        Array2::zeros(img.pixels.dim())
    };
    Image { pixels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn random_image(rows: usize, cols: usize, seed: u64) -> Image {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Image::new(Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>())).unwrap()
    }

    /// Direct double sum over centered frequencies.
    fn brute_dft(img: &Image) -> Array2<Complex64> {
        let d = img.dims();
        let norm = 1.0 / (d.len() as f64).sqrt();
        Array2::from_shape_fn(d.shape(), |(i, j)| {
            let (p, q) = d.freq_of(i, j);
            let mut acc = Complex64::default();
            for ((r, c), &v) in img.pixels().indexed_iter() {
                let phase = -2.0
                    * std::f64::consts::PI
                    * (p as f64 * r as f64 / d.rows as f64 + q as f64 * c as f64 / d.cols as f64);
                acc += Complex64::from_polar(v, phase);
            }
            acc * norm
        })
    }

    #[test]
    fn constant_image_is_dc_only() {
        let img = Image::new(Array2::from_elem((6, 4), 0.3)).unwrap();
        let k = forward_transform(&img);
        let dc = k.at(0, 0).unwrap();
        assert!((dc.re - 0.3 * 24f64.sqrt()).abs() < 1e-12);
        assert!(dc.im.abs() < 1e-12);
        for ((i, j), v) in k.values().indexed_iter() {
            if k.dims().freq_of(i, j) != (0, 0) {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_impulse() {
        let img = Image::new(array![[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let k = forward_transform(&img);
        for v in k.values() {
            assert!((v.norm() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_brute_force_on_small_sizes() {
        for m in 2..=5 {
            for n in 2..=5 {
                let img = random_image(m, n, (m * 10 + n) as u64);
                let fast = forward_transform(&img);
                let slow = brute_dft(&img);
                let err = fast
                    .values()
                    .iter()
                    .zip(slow.iter())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-10, "{m}x{n}: {err}");
            }
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let img = random_image(8, 8, 1);
        let k = forward_transform(&img);
        let e_img: f64 = img.pixels().iter().map(|v| v * v).sum();
        let e_k: f64 = k.values().iter().map(|v| v.norm_sqr()).sum();
        assert!((e_img - e_k).abs() < 1e-12 * e_img);

        let img = random_image(16, 16, 2);
        let back = inverse_transform(&forward_transform(&img));
        let diff: f64 = (back.pixels() - img.pixels())
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let norm: f64 = img.pixels().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-12);
    }

    #[test]
    fn zero_kspace_inverts_to_zero() {
        let dims = GridDims::new(5, 4).unwrap();
        let img = inverse_transform(&KSpaceData::zeros(dims));
        assert!(img.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_impulse_matches_brute_inverse() {
        let dims = GridDims::new(8, 8).unwrap();
        let mut values = Array2::zeros(dims.shape());
        values[dims.index_of(1, 0).unwrap()] = Complex64::new(1.0, 0.0);
        let k = KSpaceData::from_centered(values).unwrap();
        let img = inverse_transform(&k);
        // Hermitian partner is absent, so only the real part survives.
        for ((r, c), &v) in img.pixels().indexed_iter() {
            let mut acc = Complex64::default();
            for ((i, j), z) in k.values().indexed_iter() {
                let (p, q) = dims.freq_of(i, j);
                let phase = 2.0
                    * std::f64::consts::PI
                    * (p as f64 * r as f64 / 8.0 + q as f64 * c as f64 / 8.0);
                acc += z * Complex64::from_polar(1.0, phase);
            }
            assert!((acc.re / 8.0 - v).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let k = forward_transform(&random_image(6, 6, 3));
        let a = add_measurement_noise(&k, &NoiseSpec::new(0.02, 9).unwrap());
        let b = add_measurement_noise(&k, &NoiseSpec::new(0.02, 9).unwrap());
        let c = add_measurement_noise(&k, &NoiseSpec::new(0.02, 10).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(
            add_measurement_noise(&k, &NoiseSpec::new(0.0, 9).unwrap()),
            k
        );
        assert!(NoiseSpec::new(-1.0, 0).is_err());
    }

    #[test]
    fn noise_has_requested_scale() {
        let k = KSpaceData::zeros(GridDims::new(128, 128).unwrap());
        let noisy = add_measurement_noise(&k, &NoiseSpec::new(0.02, 5).unwrap());
        let n = noisy.values().len() as f64;
        let var_re = noisy.values().iter().map(|z| z.re * z.re).sum::<f64>() / n;
        let var = noisy.values().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((var.sqrt() - 0.02).abs() < 0.02 * 0.02);
        assert!((var_re - 0.0002).abs() < 0.0002 * 0.05);
    }

    #[test]
    fn normalization() {
        let img = Image::new(array![[2.0, 4.0], [6.0, 10.0]]).unwrap();
        assert_eq!(
            normalize_image(&img).pixels(),
            &array![[0.0, 0.25], [0.5, 1.0]]
        );
        let flat = Image::new(Array2::from_elem((3, 3), 7.0)).unwrap();
        assert!(normalize_image(&flat).pixels().iter().all(|&v| v == 0.0));
        let unit = Image::new(array![[0.0, 0.5], [0.25, 1.0]]).unwrap();
        assert_eq!(normalize_image(&unit), unit);
    }

    #[test]
    fn centered_layout_round_trip() {
        let dims = GridDims::new(5, 6).unwrap();
        let natural =
            Array2::from_shape_fn(dims.shape(), |(i, j)| Complex64::new(i as f64, j as f64));
        let k = KSpaceData::from_natural(&natural);
        assert_eq!(k.to_natural(), natural);
        // natural index 4 on a length-5 axis is frequency -1
        assert_eq!(k.at(-1, 0).unwrap(), Complex64::new(4.0, 0.0));
    }
}
