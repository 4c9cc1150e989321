//! Total-variation reconstruction from partial Fourier data by ADMM.
//!
//! Minimizes `sum_pixels |Du| + (mu/2) sum_retained |F u - x|^2` over real
//! images `u`, where `D` is the forward-difference gradient with periodic
//! wrap and `F` the unitary DFT. With the split `w = Du` and multiplier
//! `lambda`, one iteration is
//!
//! ```text
//! w      <- shrink2(Du + lambda/beta, 1/beta)
//! u      <- (beta D'D + mu P'P)^-1 (beta D'(w - lambda/beta) + mu P'y)
//! lambda <- lambda + beta (Du - w)
//! ```
//!
//! Both `D'D` and the data term are diagonal in the Fourier basis, so the
//! u-step is an exact pointwise division. Because `u` is real, the data
//! term only sees the Hermitian part of the masked measurements: its
//! Fourier symbol is `(P(k) + P(-k)) / 2`.

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::kspace::{Fft2, Image, KSpaceData};
use crate::sampling::SamplingMask;

/// Missing fields take their defaults when deserialized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Weight of data fidelity.
    pub mu: f64,
    /// Coupling strength of the splitting.
    pub beta: f64,
    pub iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            mu: 1e12,
            beta: 10.0,
            iterations: 100,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        };
        positive("mu", self.mu)?;
        positive("beta", self.beta)?;
        if self.iterations == 0 {
            return Err(Error::InvalidParam {
                name: "iterations",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Horizontal (`dx`) and vertical (`dy`) components per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub dx: Array2<f64>,
    pub dy: Array2<f64>,
}

impl GradientField {
    pub fn zeros(dims: GridDims) -> Self {
        Self {
            dx: Array2::zeros(dims.shape()),
            dy: Array2::zeros(dims.shape()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub u: Array2<f64>,
    pub w: GradientField,
    pub lambda: GradientField,
    pub iteration: usize,
}

/// Forward differences with periodic wrap.
pub fn gradient(u: &Array2<f64>) -> GradientField {
    let (m, n) = u.dim();
    let dx = Array2::from_shape_fn((m, n), |(r, c)| u[(r, (c + 1) % n)] - u[(r, c)]);
    let dy = Array2::from_shape_fn((m, n), |(r, c)| u[((r + 1) % m, c)] - u[(r, c)]);
    GradientField { dx, dy }
}

/// Adjoint of [`gradient`].
pub fn gradient_adjoint(g: &GradientField) -> Array2<f64> {
    let (m, n) = g.dx.dim();
    Array2::from_shape_fn((m, n), |(r, c)| {
        g.dx[(r, (c + n - 1) % n)] - g.dx[(r, c)] + g.dy[((r + m - 1) % m, c)] - g.dy[(r, c)]
    })
}

/// Proximal map of `t |.|_2` on one 2-vector.
pub fn shrink2(v: [f64; 2], t: f64) -> [f64; 2] {
    let r = v[0].hypot(v[1]);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let s = (r - t).max(0.0) / r;
    [s * v[0], s * v[1]]
}

/// [`shrink2`] at every pixel.
pub fn shrink_field(v: &GradientField, t: f64) -> GradientField {
    let mut out = GradientField::zeros(GridDims {
        rows: v.dx.nrows(),
        cols: v.dx.ncols(),
    });
    Zip::from(&mut out.dx)
        .and(&mut out.dy)
        .and(&v.dx)
        .and(&v.dy)
        .for_each(|ox, oy, &x, &y| {
            let [a, b] = shrink2([x, y], t);
            *ox = a;
            *oy = b;
        });
    out
}

fn laplacian_symbol_natural(dims: GridDims) -> Array2<f64> {
    use std::f64::consts::TAU;
    Array2::from_shape_fn(dims.shape(), |(k, l)| {
        4.0 - 2.0 * (TAU * k as f64 / dims.rows as f64).cos()
            - 2.0 * (TAU * l as f64 / dims.cols as f64).cos()
    })
}

/// Eigenvalues of `D'D`, `4 - 2cos(2 pi p/m) - 2cos(2 pi q/n)`, in centered
/// frequency order.
pub fn periodic_laplacian_symbol(dims: GridDims) -> Array2<f64> {
    use std::f64::consts::TAU;
    Array2::from_shape_fn(dims.shape(), |(i, j)| {
        let (p, q) = dims.freq_of(i, j);
        4.0 - 2.0 * (TAU * p as f64 / dims.rows as f64).cos()
            - 2.0 * (TAU * q as f64 / dims.cols as f64).cos()
    })
}

fn mask_natural(mask: &SamplingMask) -> Array2<f64> {
    let (m, n) = mask.retained().dim();
    Array2::from_shape_fn((m, n), |(k, l)| {
        if mask.retained()[((k + m / 2) % m, (l + n / 2) % n)] {
            1.0
        } else {
            0.0
        }
    })
}

fn to_complex(u: &Array2<f64>) -> Array2<Complex64> {
    u.mapv(|v| Complex64::new(v, 0.0))
}

/// Isotropic TV plus weighted squared misfit on the retained frequencies.
pub fn objective_value(
    u: &Image,
    x: &KSpaceData,
    mask: &SamplingMask,
    params: &SolverParams,
) -> Result<f64> {
    let dims = u.dims();
    dims.check_same(x.dims())?;
    dims.check_same(mask.dims())?;
    let g = gradient(u.pixels());
    let tv: f64 = g.dx.iter().zip(g.dy.iter()).map(|(a, b)| a.hypot(*b)).sum();
    let fu = crate::kspace::forward_transform(u);
    let misfit: f64 = Zip::from(fu.values())
        .and(x.values())
        .and(mask.retained())
        .fold(
            0.0,
            |acc, a, b, &keep| if keep { acc + (a - b).norm_sqr() } else { acc },
        );
    Ok(tv + 0.5 * params.mu * misfit)
}

/// Per-iteration diagnostics of a solve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub objective: f64,
    /// l2 norm of `F u - x` over retained frequencies.
    pub fidelity_residual: f64,
}

/// A reconstruction operator `f(X, S)`.
pub trait Reconstructor: Send + Sync {
    fn reconstruct(&self, x: &KSpaceData, mask: &SamplingMask) -> Result<Image>;
}

/// The TV-ADMM reconstruction with fixed parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct TvAdmm {
    pub params: SolverParams,
}

impl TvAdmm {
    pub fn new(params: SolverParams) -> Self {
        Self { params }
    }
}

impl Reconstructor for TvAdmm {
    fn reconstruct(&self, x: &KSpaceData, mask: &SamplingMask) -> Result<Image> {
        reconstruct(x, mask, &self.params)
    }
}

/// Real part of the zero-filled inverse transform. Linear in `x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFilled;

impl Reconstructor for ZeroFilled {
    fn reconstruct(&self, x: &KSpaceData, mask: &SamplingMask) -> Result<Image> {
        x.dims().check_same(mask.dims())?;
        if mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        let dims = x.dims();
        let fft = Fft2::new(dims);
        let mut buf = x.to_natural();
        Zip::from(&mut buf)
            .and(&mask_natural(mask))
            .for_each(|z, &p| *z *= p);
        fft.inverse(&mut buf);
        Image::new(buf.mapv(|z| z.re))
    }
}

/// Runs the full fixed-iteration ADMM solve.
pub fn reconstruct(x: &KSpaceData, mask: &SamplingMask, params: &SolverParams) -> Result<Image> {
    Ok(AdmmProblem::new(x, mask, params)?.solve())
}

/// Precomputed Fourier-domain pieces of one reconstruction problem.
pub struct AdmmProblem {
    dims: GridDims,
    params: SolverParams,
    fft: Fft2,
    symbol: Array2<f64>,
    /// Natural-order mask and measurements.
    mask: Array2<f64>,
    data: Array2<Complex64>,
    /// `(P(k) + P(-k)) / 2`
    mask_sym: Array2<f64>,
    /// Hermitian part of the masked data.
    data_sym: Array2<Complex64>,
}

impl AdmmProblem {
    pub fn new(x: &KSpaceData, mask: &SamplingMask, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        let dims = x.dims();
        dims.check_same(mask.dims())?;
        if mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        let (m, n) = dims.shape();
        let mask_nat = mask_natural(mask);
        let mut data = x.to_natural();
        Zip::from(&mut data)
            .and(&mask_nat)
            .for_each(|z, &p| *z *= p);
        let mirror = |k: usize, l: usize| ((m - k) % m, (n - l) % n);
        let mask_sym = Array2::from_shape_fn((m, n), |(k, l)| {
            0.5 * (mask_nat[(k, l)] + mask_nat[mirror(k, l)])
        });
        let data_sym = Array2::from_shape_fn((m, n), |(k, l)| {
            0.5 * (data[(k, l)] + data[mirror(k, l)].conj())
        });
        Ok(Self {
            dims,
            params: *params,
            fft: Fft2::new(dims),
            symbol: laplacian_symbol_natural(dims),
            mask: mask_nat,
            data,
            mask_sym,
            data_sym,
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    fn real_inverse(&self, mut buf: Array2<Complex64>) -> Array2<f64> {
        self.fft.inverse(&mut buf);
        buf.mapv(|z| z.re)
    }

    /// `u0` is the zero-filled reconstruction; `w0 = lambda0 = 0`.
    pub fn initial_state(&self) -> SolverState {
        SolverState {
            u: self.real_inverse(self.data_sym.clone()),
            w: GradientField::zeros(self.dims),
            lambda: GradientField::zeros(self.dims),
            iteration: 0,
        }
    }

    pub fn w_step(&self, state: &mut SolverState) {
        let beta = self.params.beta;
        let mut v = gradient(&state.u);
        v.dx.zip_mut_with(&state.lambda.dx, |a, &l| *a += l / beta);
        v.dy.zip_mut_with(&state.lambda.dy, |a, &l| *a += l / beta);
        state.w = shrink_field(&v, 1.0 / beta);
    }

    fn tv_rhs(&self, w: &GradientField, lambda: &GradientField) -> Array2<f64> {
        let beta = self.params.beta;
        let mut shifted = w.clone();
        shifted.dx.zip_mut_with(&lambda.dx, |a, &l| *a -= l / beta);
        shifted.dy.zip_mut_with(&lambda.dy, |a, &l| *a -= l / beta);
        gradient_adjoint(&shifted) * beta
    }

    /// Exact solve of the normal equations by pointwise division in the
    /// Fourier basis. Frequencies where the operator vanishes (DC when it is
    /// unmeasured) are set to zero.
    pub fn u_step(&self, state: &mut SolverState) {
        let (beta, mu) = (self.params.beta, self.params.mu);
        let mut hat = to_complex(&self.tv_rhs(&state.w, &state.lambda));
        self.fft.forward(&mut hat);
        Zip::from(&mut hat)
            .and(&self.symbol)
            .and(&self.mask_sym)
            .and(&self.data_sym)
            .for_each(|z, &s, &p, &y| {
                let denom = beta * s + mu * p;
                *z = if denom > 0.0 {
                    (*z + y * mu) / denom
                } else {
                    Complex64::default()
                };
            });
        state.u = self.real_inverse(hat);
    }

    pub fn lambda_step(&self, state: &mut SolverState) {
        let beta = self.params.beta;
        let g = gradient(&state.u);
        Zip::from(&mut state.lambda.dx)
            .and(&g.dx)
            .and(&state.w.dx)
            .for_each(|l, &d, &w| *l += beta * (d - w));
        Zip::from(&mut state.lambda.dy)
            .and(&g.dy)
            .and(&state.w.dy)
            .for_each(|l, &d, &w| *l += beta * (d - w));
    }

    pub fn iterate(&self, state: &mut SolverState) {
        self.w_step(state);
        self.u_step(state);
        self.lambda_step(state);
        state.iteration += 1;
    }

    /// `(beta D'D + mu Re F^-1 P F) u`, evaluated with image-space
    /// differences and the unsymmetrized mask.
    pub fn normal_operator(&self, u: &Array2<f64>) -> Array2<f64> {
        let tv = gradient_adjoint(&gradient(u)) * self.params.beta;
        let mut fu = to_complex(u);
        self.fft.forward(&mut fu);
        fu.zip_mut_with(&self.mask, |z, &p| *z *= p);
        tv + self.real_inverse(fu) * self.params.mu
    }

    /// `beta D'(w - lambda/beta) + mu Re F^-1 P y`.
    pub fn normal_rhs(&self, w: &GradientField, lambda: &GradientField) -> Array2<f64> {
        self.tv_rhs(w, lambda) + self.real_inverse(self.data.clone()) * self.params.mu
    }

    pub fn solve(&self) -> Image {
        let mut state = self.initial_state();
        for _ in 0..self.params.iterations {
            self.iterate(&mut state);
        }
        Image::new(state.u).expect("dims validated")
    }

    pub fn solve_with_diagnostics(
        &self,
        x: &KSpaceData,
        mask: &SamplingMask,
    ) -> Result<(Image, Vec<IterationDiagnostics>)> {
        let mut state = self.initial_state();
        let mut diags = Vec::with_capacity(self.params.iterations);
        for _ in 0..self.params.iterations {
            self.iterate(&mut state);
            let u = Image::new(state.u.clone())?;
            let fu = crate::kspace::forward_transform(&u);
            let residual = Zip::from(fu.values())
                .and(x.values())
                .and(mask.retained())
                .fold(
                    0.0,
                    |acc, a, b, &keep| if keep { acc + (a - b).norm_sqr() } else { acc },
                )
                .sqrt();
            diags.push(IterationDiagnostics {
                iteration: state.iteration,
                objective: objective_value(&u, x, mask, &self.params)?,
                fidelity_residual: residual,
            });
        }
        Ok((Image::new(state.u)?, diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::{forward_transform, inverse_transform};
    use crate::sampling::{
        draw_sampling_set, mask_from_set, Density, SamplingPlan, SamplingScheme,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_array(m: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((m, n), |_| rng.random::<f64>())
    }

    fn blocky(m: usize, n: usize) -> Image {
        Image::new(Array2::from_shape_fn((m, n), |(r, c)| {
            let a = if (m / 4..m / 2).contains(&r) && (n / 4..3 * n / 4).contains(&c) {
                0.8
            } else {
                0.1
            };
            a + if r > 3 * m / 4 && c < n / 3 { 0.5 } else { 0.0 }
        }))
        .unwrap()
    }

    fn rel_l2(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let d: f64 = (a - b).iter().map(|v| v * v).sum::<f64>().sqrt();
        d / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn shrink_cases() {
        assert_eq!(shrink2([0.0, 0.0], 3.0), [0.0, 0.0]);
        let [a, b] = shrink2([3.0, 4.0], 1.0);
        assert!((a - 2.4).abs() < 1e-15 && (b - 3.2).abs() < 1e-15);
        assert_eq!(shrink2([0.5, 0.0], 1.0), [0.0, 0.0]);
    }

    #[test]
    fn shrink_matches_radial_line_search() {
        // The minimizer lies along v; scan its length on a fine grid.
        let (v, t) = ([3.0f64, 4.0f64], 1.0);
        let r = 5.0;
        let obj = |s: f64| t * s + 0.5 * (s - r) * (s - r);
        let best = (0..=500_000)
            .map(|i| i as f64 * 1e-5)
            .min_by(|a, b| obj(*a).total_cmp(&obj(*b)))
            .unwrap();
        let [a, b] = shrink2(v, t);
        assert!((a.hypot(b) - best).abs() < 2e-5);
    }

    #[test]
    fn laplacian_symbol_values() {
        let d = GridDims::new(2, 2).unwrap();
        let s = periodic_laplacian_symbol(d);
        let (i0, j0) = d.index_of(0, 0).unwrap();
        assert_eq!(s[(i0, j0)], 0.0);
        let idx = d.index_of(-1, -1).unwrap(); // frequency (1,1) aliases to (-1,-1) on 2x2
        assert!((s[idx] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_symbol_diagonalizes_dtd() {
        let d = GridDims::new(6, 6).unwrap();
        let u = Image::new(rand_array(6, 6, 3)).unwrap();
        let direct = gradient_adjoint(&gradient(u.pixels()));
        let mut k = forward_transform(&u).values().clone();
        k.zip_mut_with(&periodic_laplacian_symbol(d), |z, &s| *z *= s);
        let via = inverse_transform(&KSpaceData::from_centered(k).unwrap());
        let err = (&direct - via.pixels())
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-10);
    }

    #[test]
    fn adjoint_identity() {
        let u = rand_array(5, 7, 1);
        let g = GradientField {
            dx: rand_array(5, 7, 2),
            dy: rand_array(5, 7, 3),
        };
        let du = gradient(&u);
        let lhs: f64 = (&du.dx * &g.dx).sum() + (&du.dy * &g.dy).sum();
        let rhs: f64 = (&u * &gradient_adjoint(&g)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn objective_cases() {
        let d = GridDims::new(4, 4).unwrap();
        let p = SolverParams::default();
        let zero = Image::zeros(d);
        assert_eq!(
            objective_value(&zero, &KSpaceData::zeros(d), &SamplingMask::full(d), &p).unwrap(),
            0.0
        );

        let flat = Image::new(Array2::from_elem((4, 4), 0.7)).unwrap();
        let x = forward_transform(&flat);
        assert!(objective_value(&flat, &x, &SamplingMask::full(d), &p).unwrap() < 1e-10);
    }

    #[test]
    fn objective_matches_direct_sum() {
        let d = GridDims::new(8, 8).unwrap();
        let u = Image::new(rand_array(8, 8, 5)).unwrap();
        let x = forward_transform(&Image::new(rand_array(8, 8, 6)).unwrap());
        let plan = SamplingPlan::new(SamplingScheme::Radial, d, Density::Single, 2);
        let mask = mask_from_set(&draw_sampling_set(&plan));
        let params = SolverParams {
            mu: 3.0,
            ..Default::default()
        };

        let px = u.pixels();
        let mut tv = 0.0;
        for r in 0..8 {
            for c in 0..8 {
                let gx = px[(r, (c + 1) % 8)] - px[(r, c)];
                let gy = px[((r + 1) % 8, c)] - px[(r, c)];
                tv += (gx * gx + gy * gy).sqrt();
            }
        }
        let mut misfit = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                if !mask.retained()[(i, j)] {
                    continue;
                }
                let (p, q) = d.freq_of(i, j);
                let mut acc = Complex64::default();
                for r in 0..8 {
                    for c in 0..8 {
                        let ph =
                            -std::f64::consts::TAU * (p * r as i64 + q * c as i64) as f64 / 8.0;
                        acc += Complex64::from_polar(px[(r, c)], ph);
                    }
                }
                misfit += (acc / 8.0 - x.values()[(i, j)]).norm_sqr();
            }
        }
        let expect = tv + 1.5 * misfit;
        let got = objective_value(&u, &x, &mask, &params).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn errors() {
        let d = GridDims::new(4, 4).unwrap();
        let x = KSpaceData::zeros(d);
        assert!(matches!(
            reconstruct(&x, &SamplingMask::empty(d), &SolverParams::default()),
            Err(Error::EmptyMask)
        ));
        let other = SamplingMask::full(GridDims::new(4, 5).unwrap());
        assert!(matches!(
            reconstruct(&x, &other, &SolverParams::default()),
            Err(Error::DimsMismatch { .. })
        ));
        let bad = SolverParams {
            beta: 0.0,
            ..Default::default()
        };
        assert!(reconstruct(&x, &SamplingMask::full(d), &bad).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let d = GridDims::new(8, 8).unwrap();
        let plan = SamplingPlan::new(SamplingScheme::Radial, d, Density::Single, 9);
        let mask = mask_from_set(&draw_sampling_set(&plan));
        let problem =
            AdmmProblem::new(&KSpaceData::zeros(d), &mask, &SolverParams::default()).unwrap();
        let mut st = problem.initial_state();
        for _ in 0..10 {
            problem.iterate(&mut st);
            assert!(st.u.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn full_mask_recovers_image() {
        let img = blocky(32, 32);
        let x = forward_transform(&img);
        let out = reconstruct(
            &x,
            &SamplingMask::full(img.dims()),
            &SolverParams::default(),
        )
        .unwrap();
        assert!(rel_l2(out.pixels(), inverse_transform(&x).pixels()) < 1e-3);
    }

    #[test]
    fn u_step_solves_normal_equations() {
        let img = blocky(16, 20);
        let x = forward_transform(&img);
        let plan = SamplingPlan::new(SamplingScheme::Radial, img.dims(), Density::Single, 4);
        let mask = mask_from_set(&draw_sampling_set(&plan));
        let problem = AdmmProblem::new(&x, &mask, &SolverParams::default()).unwrap();
        let mut st = problem.initial_state();
        for _ in 0..5 {
            problem.w_step(&mut st);
            problem.u_step(&mut st);
            let rhs = problem.normal_rhs(&st.w, &st.lambda);
            let res = &problem.normal_operator(&st.u) - &rhs;
            let rel = res.iter().map(|v| v * v).sum::<f64>().sqrt()
                / rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(rel < 1e-8, "{rel}");
            problem.lambda_step(&mut st);
        }
    }

    #[test]
    fn zero_filled_is_linear() {
        let d = GridDims::new(8, 8).unwrap();
        let mask = mask_from_set(&draw_sampling_set(&SamplingPlan::new(
            SamplingScheme::Horizontal,
            d,
            Density::Single,
            1,
        )));
        let a = forward_transform(&Image::new(rand_array(8, 8, 1)).unwrap());
        let b = forward_transform(&Image::new(rand_array(8, 8, 2)).unwrap());
        let sum = KSpaceData::from_centered(a.values() + b.values()).unwrap();
        let fa = ZeroFilled.reconstruct(&a, &mask).unwrap();
        let fb = ZeroFilled.reconstruct(&b, &mask).unwrap();
        let fs = ZeroFilled.reconstruct(&sum, &mask).unwrap();
        let err = (fs.pixels() - fa.pixels() - fb.pixels())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-12);
    }

    #[test]
    fn diagnostics_track_iterations() {
        let img = blocky(16, 16);
        let x = forward_transform(&img);
        let mask = SamplingMask::full(img.dims());
        let params = SolverParams {
            iterations: 7,
            ..Default::default()
        };
        let problem = AdmmProblem::new(&x, &mask, &params).unwrap();
        let (out, diags) = problem.solve_with_diagnostics(&x, &mask).unwrap();
        assert_eq!(diags.len(), 7);
        assert_eq!(diags[6].iteration, 7);
        assert_eq!(out, problem.solve());
    }
}
