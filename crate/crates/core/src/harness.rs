//! Ground-truth validation of the error estimates: actual error maps,
//! agreement metrics, and single or batched end-to-end experiments.
//!
//! All randomness in an experiment comes from its master seed through
//! [`derive_seed`] substreams: 0 for measurement noise, 1 for the sampling
//! set, and the bootstrap's configurable `stream` (default 2) for the
//! bootstrap redraws.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::errbars::{
    bootstrap_map, jackknife_map, BootstrapConfig, ErrorMap, FullReconMode, JackknifeConfig,
    BOOTSTRAP_FACTOR, JACKKNIFE_FACTOR,
};
use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::io::{load_image, save_map, save_raster, MapSidecar};
use crate::kspace::{
    add_measurement_noise, forward_transform, normalize_image, Image, KSpaceData, NoiseSpec,
};
use crate::phantom::shepp_logan;
use crate::render::{render, render_mask, RenderMode};
use crate::sampling::{
    derive_seed, draw_sampling_set, mask_from_set, Density, LineSet, SamplingPlan, SamplingScheme,
};
use crate::tv::{SolverParams, TvAdmm};

pub const NOISE_STREAM: u64 = 0;
pub const SAMPLING_STREAM: u64 = 1;
pub const DEFAULT_BOOTSTRAP_STREAM: u64 = 2;

/// `original - recon`, signed and unclamped.
pub fn actual_error(original: &Image, recon: &Image) -> Result<ErrorMap> {
    ErrorMap::difference(original, recon)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementMetrics {
    /// Pearson correlation of `|actual|` with `|estimated|`; 0 when either
    /// is constant (see `pearson_degenerate`).
    pub pearson_abs: f64,
    /// `|estimated|_2 / |actual|_2`; infinite when `actual` is zero.
    pub ratio_l2: f64,
    /// Fraction of pixels with `|actual| <= 3 * box3(|estimated|)`.
    pub coverage: f64,
    pub pearson_degenerate: bool,
    pub zero_actual: bool,
}

/// 3x3 mean over the neighbors that lie inside the grid.
fn box_blur3(a: &Array2<f64>) -> Array2<f64> {
    let (m, n) = a.dim();
    Array2::from_shape_fn((m, n), |(r, c)| {
        let (mut sum, mut count) = (0.0, 0.0);
        for rr in r.saturating_sub(1)..=(r + 1).min(m - 1) {
            for cc in c.saturating_sub(1)..=(c + 1).min(n - 1) {
                sum += a[(rr, cc)];
                count += 1.0;
            }
        }
        sum / count
    })
}

pub fn agreement_metrics(actual: &ErrorMap, estimated: &ErrorMap) -> Result<AgreementMetrics> {
    actual.dims().check_same(estimated.dims())?;
    let a = actual.values().mapv(f64::abs);
    let e = estimated.values().mapv(f64::abs);
    let count = a.len() as f64;

    let (ma, me) = (a.sum() / count, e.sum() / count);
    let (mut sab, mut saa, mut see) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(e.iter()) {
        let (dx, dy) = (x - ma, y - me);
        sab += dx * dy;
        saa += dx * dx;
        see += dy * dy;
    }
    let pearson_degenerate = saa == 0.0 || see == 0.0;
    let pearson_abs = if pearson_degenerate {
        0.0
    } else {
        sab / (saa * see).sqrt()
    };

    let actual_norm = actual.l2_norm();
    let zero_actual = actual_norm == 0.0;
    let ratio_l2 = if zero_actual {
        f64::INFINITY
    } else {
        estimated.l2_norm() / actual_norm
    };

    let blurred = box_blur3(&e);
    let covered = a
        .iter()
        .zip(blurred.iter())
        .filter(|(&x, &b)| x <= 3.0 * b)
        .count();
    Ok(AgreementMetrics {
        pearson_abs,
        ratio_l2,
        coverage: covered as f64 / count,
        pearson_degenerate,
        zero_actual,
    })
}

/// Where the ground-truth image comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageSource {
    Phantom { rows: usize, cols: usize },
    File(PathBuf),
}

impl ImageSource {
    pub fn load(&self) -> Result<Image> {
        match self {
            ImageSource::Phantom { rows, cols } => shepp_logan(GridDims::new(*rows, *cols)?),
            ImageSource::File(path) => load_image(path),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSettings {
    pub k: usize,
    #[serde(default)]
    pub full_recon_mode: FullReconMode,
    /// Substream of the master seed used for the redraws.
    #[serde(default = "default_bootstrap_stream")]
    pub stream: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate_noise: Option<f64>,
}

fn default_bootstrap_stream() -> u64 {
    DEFAULT_BOOTSTRAP_STREAM
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            k: 1000,
            full_recon_mode: FullReconMode::Solve,
            stream: DEFAULT_BOOTSTRAP_STREAM,
            replicate_noise: None,
        }
    }
}

fn default_sigma() -> f64 {
    0.02
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub input: ImageSource,
    pub scheme: SamplingScheme,
    #[serde(default)]
    pub density: Density,
    /// Overrides the default number of random lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_draws: Option<usize>,
    /// Measure every row instead of drawing a subset. Diagnostic only; the
    /// scheme is treated as horizontal.
    #[serde(default)]
    pub full_sampling: bool,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jackknife: Option<JackknifeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSettings>,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Radial 1x sampling of a phantom with both estimators at the default
    /// settings (`sigma = 0.02`, `mu = 1e12`, `beta = 10`, 100 iterations,
    /// `k = 1000`).
    pub fn full_scale(input: ImageSource, seed: u64) -> Self {
        Self {
            id: None,
            input,
            scheme: SamplingScheme::Radial,
            density: Density::Single,
            num_draws: None,
            full_sampling: false,
            noise_sigma: default_sigma(),
            solver: SolverParams::default(),
            jackknife: Some(JackknifeConfig::default()),
            bootstrap: Some(BootstrapSettings::default()),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        NoiseSpec::new(self.noise_sigma, 0)?;
        if let Some(j) = &self.jackknife {
            j.validate()?;
        }
        if let Some(b) = &self.bootstrap {
            BootstrapConfig::new(b.k, 0).validate()?;
        }
        if self.num_draws == Some(0) {
            return Err(Error::InvalidParam {
                name: "num_draws",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn seeds(&self) -> SeedRecord {
        SeedRecord {
            master: self.seed,
            noise: derive_seed(self.seed, NOISE_STREAM),
            sampling: derive_seed(self.seed, SAMPLING_STREAM),
            bootstrap: self.bootstrap.map(|b| derive_seed(self.seed, b.stream)),
        }
    }

    fn scheme_used(&self) -> SamplingScheme {
        if self.full_sampling {
            SamplingScheme::Horizontal
        } else {
            self.scheme
        }
    }

    pub fn sampling_plan(&self, dims: GridDims) -> Result<SamplingPlan> {
        let plan = SamplingPlan::new(
            self.scheme_used(),
            dims,
            self.density,
            self.seeds().sampling,
        );
        match self.num_draws {
            Some(l) => plan.with_num_draws(l),
            None => Ok(plan),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub noise: u64,
    pub sampling: u64,
    pub bootstrap: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportMetrics {
    pub jackknife: Option<AgreementMetrics>,
    pub bootstrap: Option<AgreementMetrics>,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub seeds: SeedRecord,
    pub lines: LineSet,
    pub original: Image,
    pub reconstruction: Image,
    pub actual_error: ErrorMap,
    pub jackknife: Option<ErrorMap>,
    pub bootstrap: Option<ErrorMap>,
    pub metrics: ReportMetrics,
    pub timings: Vec<StageTiming>,
}

struct Stopwatch(Vec<StageTiming>);

impl Stopwatch {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.0.push(StageTiming {
            stage,
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Full noisy k-space of an already normalized `original`, as measured by
/// `run_experiment` for this spec.
pub fn measured_data(spec: &ExperimentSpec, original: &Image) -> Result<KSpaceData> {
    let noise = NoiseSpec::new(spec.noise_sigma, spec.seeds().noise)?;
    Ok(add_measurement_noise(&forward_transform(original), &noise))
}

/// Normalize, measure with noise, sample, reconstruct, estimate errors and
/// score the estimates against the known original.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate().map_err(|e| e.in_stage("validate"))?;
    let seeds = spec.seeds();
    let mut clock = Stopwatch(Vec::new());

    let original = clock.run("load", || Ok(normalize_image(&spec.input.load()?)))?;
    let dims = original.dims();
    let measured = clock.run("measure", || measured_data(spec, &original))?;
    let plan = spec.sampling_plan(dims).map_err(|e| e.in_stage("sample"))?;
    let lines = clock.run("sample", || {
        Ok(if spec.full_sampling {
            LineSet::full_horizontal(dims)
        } else {
            draw_sampling_set(&plan)
        })
    })?;
    let solver = TvAdmm::new(spec.solver);
    let reconstruction = clock.run("reconstruct", || {
        crate::tv::reconstruct(&measured, &mask_from_set(&lines), &spec.solver)
    })?;
    let actual = actual_error(&original, &reconstruction).map_err(|e| e.in_stage("reconstruct"))?;

    let jackknife = match &spec.jackknife {
        Some(cfg) => Some(clock.run("jackknife", || {
            jackknife_map(&measured, &lines, &solver, cfg)
        })?),
        None => None,
    };
    let bootstrap = match &spec.bootstrap {
        Some(b) => Some(clock.run("bootstrap", || {
            let cfg = BootstrapConfig {
                k: b.k,
                seed: seeds
                    .bootstrap
                    .expect("bootstrap seed derived when enabled"),
                full_recon_mode: b.full_recon_mode,
                replicate_noise: b.replicate_noise,
            };
            bootstrap_map(&measured, &lines, &plan, &solver, &cfg)
        })?),
        None => None,
    };
    let metrics = clock.run("metrics", || {
        Ok(ReportMetrics {
            jackknife: jackknife
                .as_ref()
                .map(|j| agreement_metrics(&actual, j))
                .transpose()?,
            bootstrap: bootstrap
                .as_ref()
                .map(|b| agreement_metrics(&actual, b))
                .transpose()?,
        })
    })?;

    Ok(ExperimentReport {
        spec: spec.clone(),
        seeds,
        lines,
        original,
        reconstruction,
        actual_error: actual,
        jackknife,
        bootstrap,
        metrics,
        timings: clock.0,
    })
}

/// Runs every spec (in parallel), keeping input order. A failing spec leaves
/// its error in place and does not stop the others.
pub fn run_batch(specs: &[ExperimentSpec]) -> Vec<Result<ExperimentReport>> {
    specs.par_iter().map(run_experiment).collect()
}

/// The spec id, or `spec-NNN` from its batch position.
pub fn spec_label(spec: &ExperimentSpec, index: usize) -> String {
    spec.id
        .clone()
        .unwrap_or_else(|| format!("spec-{index:03}"))
}

const TIMED_STAGES: [&str; 7] = [
    "load",
    "measure",
    "sample",
    "reconstruct",
    "jackknife",
    "bootstrap",
    "metrics",
];

/// One CSV row per spec. Failed specs carry their error message and empty
/// metric cells.
pub fn batch_summary_csv(specs: &[ExperimentSpec], results: &[Result<ExperimentReport>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "spec_id",
        "scheme",
        "density",
        "sigma",
        "k",
        "lines",
        "pearson_abs_jackknife",
        "pearson_abs_bootstrap",
        "ratio_l2_jackknife",
        "ratio_l2_bootstrap",
        "coverage_jackknife",
        "coverage_bootstrap",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(TIMED_STAGES.iter().map(|s| format!("seconds_{s}")));
    header.push("error".into());
    w.write_record(&header).expect("in-memory write");

    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, (spec, result)) in specs.iter().zip(results).enumerate() {
        let mut row = vec![
            spec_label(spec, i),
            spec.scheme_used().to_string(),
            spec.density.to_string(),
            spec.noise_sigma.to_string(),
            spec.bootstrap.map(|b| b.k.to_string()).unwrap_or_default(),
        ];
        match result {
            Ok(rep) => {
                let (j, b) = (rep.metrics.jackknife, rep.metrics.bootstrap);
                row.push(rep.lines.len().to_string());
                row.push(num(j.map(|m| m.pearson_abs)));
                row.push(num(b.map(|m| m.pearson_abs)));
                row.push(num(j.map(|m| m.ratio_l2)));
                row.push(num(b.map(|m| m.ratio_l2)));
                row.push(num(j.map(|m| m.coverage)));
                row.push(num(b.map(|m| m.coverage)));
                for stage in TIMED_STAGES {
                    row.push(num(rep
                        .timings
                        .iter()
                        .find(|t| t.stage == stage)
                        .map(|t| t.seconds)));
                }
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 7 + TIMED_STAGES.len()));
                row.push(e.to_string());
            }
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}

impl ExperimentReport {
    fn provenance(&self, estimator: &str) -> serde_json::Value {
        let mut v = serde_json::json!({
            "spec_id": self.spec.id,
            "scheme": self.lines.scheme(),
            "density": self.spec.density,
            "noise_sigma": self.spec.noise_sigma,
            "seeds": self.seeds,
            "solver": self.spec.solver,
            "estimator": estimator,
            "lines": self.lines.len(),
        });
        match estimator {
            "jackknife" => {
                v["factor"] = JACKKNIFE_FACTOR.into();
                v["c"] = self.spec.jackknife.map(|j| j.c).into();
            }
            "bootstrap" => {
                v["factor"] = BOOTSTRAP_FACTOR.into();
                v["k"] = self.spec.bootstrap.map(|b| b.k).into();
                v["full_recon_mode"] =
                    serde_json::to_value(self.spec.bootstrap.map(|b| b.full_recon_mode)).unwrap();
            }
            _ => {}
        }
        v
    }

    /// Panels as `(name, values, render mode)` in display order.
    pub fn panels(&self) -> Vec<(&'static str, &Array2<f64>, RenderMode)> {
        let mut out = vec![
            ("original", self.original.pixels(), RenderMode::Intensity),
            (
                "reconstruction",
                self.reconstruction.pixels(),
                RenderMode::Intensity,
            ),
            (
                "actual_error",
                self.actual_error.values(),
                RenderMode::SignedError,
            ),
        ];
        if let Some(j) = &self.jackknife {
            out.push(("jackknife", j.values(), RenderMode::SignedError));
        }
        if let Some(b) = &self.bootstrap {
            out.push(("bootstrap", b.values(), RenderMode::SignedError));
        }
        out
    }

    /// Summary document: spec, seeds, metrics, timings.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "seeds": self.seeds,
            "dims": self.original.dims(),
            "lines": self.lines.len(),
            "metrics": self.metrics,
            "timings": self.timings,
        })
    }

    /// Writes one `.f32` + sidecar and one rendered `.pgm` per panel, the
    /// line set, the mask, `metrics.json` and `report.json` into `dir`.
    pub fn write_to(&self, dir: &Path, force: bool) -> Result<()> {
        for (name, values, mode) in self.panels() {
            let side = MapSidecar::new(self.original.dims(), name, self.provenance(name));
            save_map(values, dir.join(format!("{name}.f32")), &side, force)?;
            save_raster(
                &render(values, mode),
                dir.join(format!("{name}.pgm")),
                force,
            )?;
        }
        save_raster(
            &render_mask(&mask_from_set(&self.lines)),
            dir.join("mask.pgm"),
            force,
        )?;
        write_json(
            &dir.join("lines.json"),
            &serde_json::to_value(&self.lines).unwrap(),
            force,
        )?;
        write_json(
            &dir.join("metrics.json"),
            &serde_json::to_value(&self.metrics).unwrap(),
            force,
        )?;
        write_json(&dir.join("report.json"), &self.summary_json(), force)
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value, force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(Error::WouldOverwrite(path.to_owned()));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
