//! Jackknife and bootstrap error images for a reconstruction operator.
//!
//! For a measured line set `S` with fixed part `T`:
//!
//! ```text
//! jackknife  d = c * 2 * sum_{i in S\T} ( f(X, S\{i}) - f(X, S) )
//! bootstrap  e = (3/k) * sum_{j=1..k}   ( f(X~, R_j)  - f(X~, I) )
//! ```
//!
//! where `X~` is synthesized full data consistent with `f(X, S)` and the
//! `R_j` are fresh draws of `T` plus `l` uniform lines. Replicate
//! reconstructions run in parallel; the sums are always accumulated in
//! replicate order so results do not depend on the schedule.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::kspace::{add_measurement_noise, forward_transform, Image, KSpaceData, NoiseSpec};
use crate::sampling::{
    derive_seed, draw_bootstrap_set, leave_one_out, mask_from_set, LineSet, SamplingMask,
    SamplingPlan,
};
use crate::tv::Reconstructor;

pub const JACKKNIFE_FACTOR: f64 = 2.0;
pub const BOOTSTRAP_FACTOR: f64 = 3.0;

/// Replicates at or above this count are summed with compensation.
const COMPENSATED_SUM_THRESHOLD: usize = 100;
/// Replicates reconstructed per parallel batch; bounds peak memory.
const BATCH: usize = 32;

/// Signed per-pixel error estimate, in image intensity units. Never clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMap {
    values: Array2<f64>,
}

impl ErrorMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (rows, cols) = values.dim();
        GridDims::new(rows, cols)?;
        Ok(Self { values })
    }

    pub fn zeros(dims: GridDims) -> Self {
        Self {
            values: Array2::zeros(dims.shape()),
        }
    }

    /// `a - b`, pixelwise.
    pub fn difference(a: &Image, b: &Image) -> Result<Self> {
        a.dims().check_same(b.dims())?;
        Ok(Self {
            values: a.pixels() - b.pixels(),
        })
    }

    pub fn dims(&self) -> GridDims {
        let (rows, cols) = self.values.dim();
        GridDims { rows, cols }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JackknifeConfig {
    /// Calibration constant multiplying the jackknife sum.
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for JackknifeConfig {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

impl JackknifeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c > 0.0 && self.c.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParam {
                name: "c",
                reason: format!("must be finite and > 0, got {}", self.c),
            })
        }
    }
}

/// How `f(X~, I)` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullReconMode {
    /// Run the reconstruction on the synthesized full data.
    #[default]
    Solve,
    /// Reuse `f(X, S)`, which `X~` reproduces up to solver tolerance.
    Shortcut,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub k: usize,
    pub seed: u64,
    #[serde(default)]
    pub full_recon_mode: FullReconMode,
    /// When set, each replicate re-measures `X~` with fresh complex
    /// Gaussian noise of this standard deviation. Off by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate_noise: Option<f64>,
}

impl BootstrapConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            full_recon_mode: FullReconMode::Solve,
            replicate_noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParam {
                name: "k",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(sigma) = self.replicate_noise {
            NoiseSpec::new(sigma, 0)?;
        }
        Ok(())
    }
}

/// Running pixelwise sum in a fixed order, Neumaier-compensated when asked.
struct OrderedSum {
    sum: Array2<f64>,
    comp: Option<Array2<f64>>,
}

impl OrderedSum {
    fn new(dims: GridDims, compensated: bool) -> Self {
        Self {
            sum: Array2::zeros(dims.shape()),
            comp: compensated.then(|| Array2::zeros(dims.shape())),
        }
    }

    fn add(&mut self, term: &Array2<f64>) {
        match &mut self.comp {
            None => self.sum += term,
            Some(comp) => Zip::from(&mut self.sum)
                .and(comp)
                .and(term)
                .for_each(|s, c, &x| {
                    let t = *s + x;
                    if s.abs() >= x.abs() {
                        *c += (*s - t) + x;
                    } else {
                        *c += (x - t) + *s;
                    }
                    *s = t;
                }),
        }
    }

    fn finish(self) -> Array2<f64> {
        match self.comp {
            None => self.sum,
            Some(comp) => self.sum + comp,
        }
    }
}

/// Computes `count` replicate differences in parallel batches and feeds them
/// to `sink` in index order.
fn for_each_replicate<F>(
    count: usize,
    replicate: F,
    mut sink: impl FnMut(usize, Array2<f64>),
) -> Result<()>
where
    F: Fn(usize) -> Result<Array2<f64>> + Sync,
{
    let mut start = 0;
    while start < count {
        let end = (start + BATCH).min(count);
        let batch: Vec<Result<Array2<f64>>> =
            (start..end).into_par_iter().map(&replicate).collect();
        for (offset, diff) in batch.into_iter().enumerate() {
            sink(start + offset, diff?);
        }
        start = end;
    }
    Ok(())
}

fn check_set<R: Reconstructor + ?Sized>(x: &KSpaceData, s: &LineSet, _: &R) -> Result<()> {
    x.dims().check_same(s.dims())
}

/// The leave-one-out differences `f(X, S\{i}) - f(X, S)` in sorted line
/// order.
pub fn jackknife_differences<R: Reconstructor + ?Sized>(
    x: &KSpaceData,
    s: &LineSet,
    recon: &R,
) -> Result<Vec<ErrorMap>> {
    check_set(x, s, recon)?;
    let reduced = leave_one_out(s);
    if reduced.is_empty() {
        return Ok(Vec::new());
    }
    let base = recon.reconstruct(x, &mask_from_set(s))?;
    let mut out = Vec::with_capacity(reduced.len());
    for_each_replicate(
        reduced.len(),
        |i| {
            Ok(recon
                .reconstruct(x, &mask_from_set(&reduced[i].1))?
                .into_pixels()
                - base.pixels())
        },
        |_, d| out.push(ErrorMap { values: d }),
    )?;
    Ok(out)
}

/// Jackknife error image. When every drawn line is also fixed the sum is
/// empty and the zero map is returned (with a warning).
pub fn jackknife_map<R: Reconstructor + ?Sized>(
    x: &KSpaceData,
    s: &LineSet,
    recon: &R,
    cfg: &JackknifeConfig,
) -> Result<ErrorMap> {
    cfg.validate()?;
    check_set(x, s, recon)?;
    let reduced = leave_one_out(s);
    if reduced.is_empty() {
        log::warn!("jackknife: no removable lines (S \\ T is empty); returning the zero map");
        return Ok(ErrorMap::zeros(x.dims()));
    }
    let base = recon.reconstruct(x, &mask_from_set(s))?;
    let mut acc = OrderedSum::new(x.dims(), reduced.len() >= COMPENSATED_SUM_THRESHOLD);
    for_each_replicate(
        reduced.len(),
        |i| {
            Ok(recon
                .reconstruct(x, &mask_from_set(&reduced[i].1))?
                .into_pixels()
                - base.pixels())
        },
        |_, d| acc.add(&d),
    )?;
    let scale = cfg.c * JACKKNIFE_FACTOR;
    Ok(ErrorMap {
        values: acc.finish() * scale,
    })
}

/// Full data `X~` with `f(X~, I) = recon`, taken as the forward transform of
/// the reconstruction (exact in the large-`mu` limit).
pub fn synthesize_full_data(recon: &Image) -> KSpaceData {
    forward_transform(recon)
}

/// The pieces shared by every bootstrap replicate.
struct BootstrapBase {
    synthesized: KSpaceData,
    full: Image,
}

fn bootstrap_base<R: Reconstructor + ?Sized>(
    x: &KSpaceData,
    s: &LineSet,
    recon: &R,
    mode: FullReconMode,
) -> Result<BootstrapBase> {
    check_set(x, s, recon)?;
    let base = recon.reconstruct(x, &mask_from_set(s))?;
    let synthesized = synthesize_full_data(&base);
    let full = match mode {
        FullReconMode::Solve => recon.reconstruct(&synthesized, &SamplingMask::full(x.dims()))?,
        FullReconMode::Shortcut => base,
    };
    Ok(BootstrapBase { synthesized, full })
}

fn replicate_data<'a>(
    base: &'a BootstrapBase,
    cfg: &BootstrapConfig,
    j: usize,
) -> std::borrow::Cow<'a, KSpaceData> {
    match cfg.replicate_noise {
        Some(sigma) if sigma > 0.0 => {
            let spec = NoiseSpec {
                sigma,
                seed: derive_seed(cfg.seed, (1u64 << 32) + j as u64),
            };
            std::borrow::Cow::Owned(add_measurement_noise(&base.synthesized, &spec))
        }
        _ => std::borrow::Cow::Borrowed(&base.synthesized),
    }
}

/// Bootstrap error image over caller-supplied replicate sets `R_1..R_k`.
///
/// [`bootstrap_map`] draws the sets from a [`SamplingPlan`]; this entry
/// point exists for replaying recorded sets and for tests.
pub fn bootstrap_map_with_sets<R: Reconstructor + ?Sized>(
    x: &KSpaceData,
    s: &LineSet,
    sets: &[LineSet],
    recon: &R,
    mode: FullReconMode,
) -> Result<ErrorMap> {
    if sets.is_empty() {
        return Err(Error::InvalidParam {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    for set in sets {
        x.dims().check_same(set.dims())?;
    }
    let base = bootstrap_base(x, s, recon, mode)?;
    let cfg = BootstrapConfig::new(sets.len(), 0);
    accumulate_bootstrap(&base, sets.len(), &cfg, |j| mask_from_set(&sets[j]), recon)
}

fn accumulate_bootstrap<R: Reconstructor + ?Sized>(
    base: &BootstrapBase,
    k: usize,
    cfg: &BootstrapConfig,
    mask_of: impl Fn(usize) -> SamplingMask + Sync,
    recon: &R,
) -> Result<ErrorMap> {
    let dims = base.full.dims();
    let mut acc = OrderedSum::new(dims, k >= COMPENSATED_SUM_THRESHOLD);
    for_each_replicate(
        k,
        |j| {
            Ok(recon
                .reconstruct(&replicate_data(base, cfg, j), &mask_of(j))?
                .into_pixels()
                - base.full.pixels())
        },
        |_, d| acc.add(&d),
    )?;
    Ok(ErrorMap {
        values: acc.finish() * (BOOTSTRAP_FACTOR / k as f64),
    })
}

/// Bootstrap error image with `cfg.k` replicate sets drawn from `plan`.
pub fn bootstrap_map<R: Reconstructor + ?Sized>(
    x: &KSpaceData,
    s: &LineSet,
    plan: &SamplingPlan,
    recon: &R,
    cfg: &BootstrapConfig,
) -> Result<ErrorMap> {
    cfg.validate()?;
    plan.check_matches(s)?;
    let base = bootstrap_base(x, s, recon, cfg.full_recon_mode)?;
    accumulate_bootstrap(
        &base,
        cfg.k,
        cfg,
        |j| mask_from_set(&draw_bootstrap_set(plan, cfg.seed, j)),
        recon,
    )
}

/// The replicate differences `f(X~, R_j) - f(X~, I)`, for mode analysis.
pub fn bootstrap_differences<R: Reconstructor + ?Sized>(
    x: &KSpaceData,
    s: &LineSet,
    plan: &SamplingPlan,
    recon: &R,
    cfg: &BootstrapConfig,
) -> Result<Vec<ErrorMap>> {
    cfg.validate()?;
    plan.check_matches(s)?;
    let base = bootstrap_base(x, s, recon, cfg.full_recon_mode)?;
    let mut out = Vec::with_capacity(cfg.k);
    for_each_replicate(
        cfg.k,
        |j| {
            let mask = mask_from_set(&draw_bootstrap_set(plan, cfg.seed, j));
            Ok(recon
                .reconstruct(&replicate_data(&base, cfg, j), &mask)?
                .into_pixels()
                - base.full.pixels())
        },
        |_, d| out.push(ErrorMap { values: d }),
    )?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMode {
    pub singular_value: f64,
    /// Unit pixelwise norm, or all zeros when `singular_value` is zero.
    pub map: ErrorMap,
}

/// Principal error modes, singular values non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeStack {
    pub modes: Vec<ErrorMode>,
}

/// Principal components of a stack of difference maps.
///
/// The stack is centered on its mean map, then decomposed through the
/// eigenproblem of whichever Gram matrix (replicates or pixels) is smaller.
/// Singular values below `1e-12` of the stack's Frobenius norm count as
/// zero.
pub fn error_modes(differences: &[ErrorMap], top_r: usize) -> Result<ModeStack> {
    let first = differences.first().ok_or(Error::EmptyStack)?;
    let dims = first.dims();
    for d in differences {
        dims.check_same(d.dims())?;
    }
    let reps = differences.len();
    let pixels = dims.len();

    let mut mean = Array2::<f64>::zeros(dims.shape());
    for d in differences {
        mean += &d.values;
    }
    mean /= reps as f64;
    let scale = differences
        .iter()
        .map(|d| d.values.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();

    let a = DMatrix::from_fn(reps, pixels, |i, p| {
        let (r, c) = (p / dims.cols, p % dims.cols);
        differences[i].values[(r, c)] - mean[(r, c)]
    });

    let take = top_r.min(reps.min(pixels));
    let zero_tol = 1e-12 * scale;
    let (eig, by_rows) = if reps <= pixels {
        (SymmetricEigen::new(&a * a.transpose()), true)
    } else {
        (SymmetricEigen::new(a.transpose() * &a), false)
    };
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let modes = order
        .into_iter()
        .take(take)
        .map(|idx| {
            let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
            if sigma <= zero_tol {
                return ErrorMode {
                    singular_value: 0.0,
                    map: ErrorMap::zeros(dims),
                };
            }
            let v = eig.eigenvectors.column(idx);
            let flat = if by_rows {
                a.transpose() * v / sigma
            } else {
                v.into_owned()
            };
            let values = Array2::from_shape_fn(dims.shape(), |(r, c)| flat[r * dims.cols + c]);
            ErrorMode {
                singular_value: sigma,
                map: ErrorMap { values },
            }
        })
        .collect();
    Ok(ModeStack { modes })
}

/// Least-squares calibration constant `sum(a b) / sum(b^2)` with
/// `a = |actual|_2`, `b = |estimated|_2` per training pair.
pub fn calibrate(training: &[(ErrorMap, ErrorMap)]) -> Result<f64> {
    if training.is_empty() {
        return Err(Error::DegenerateTraining("empty training set"));
    }
    let (mut ab, mut bb) = (0.0, 0.0);
    for (actual, estimated) in training {
        actual.dims().check_same(estimated.dims())?;
        let (a, b) = (actual.l2_norm(), estimated.l2_norm());
        ab += a * b;
        bb += b * b;
    }
    if bb == 0.0 {
        return Err(Error::DegenerateTraining(
            "every estimated map has zero norm",
        ));
    }
    if ab == 0.0 {
        return Err(Error::DegenerateTraining("every actual map has zero norm"));
    }
    Ok(ab / bb)
}
