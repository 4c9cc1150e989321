//! Line-based k-space sampling: random radial rays or horizontal rows, the
//! fixed low-frequency band, leave-one-out sets and bootstrap redraws.
//!
//! Every random draw comes from ChaCha20 keyed by an explicit seed. The
//! measured set uses stream 0 of its seed; bootstrap replicate `j`
//! (zero-based) uses stream `j + 1` of the bootstrap seed.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{round_half_away, GridDims};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    Radial,
    Horizontal,
}

/// Number of random lines relative to the baseline rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Density {
    #[default]
    #[serde(rename = "1x")]
    Single,
    #[serde(rename = "2x")]
    Double,
}

impl std::fmt::Display for SamplingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplingScheme::Radial => "radial",
            SamplingScheme::Horizontal => "horizontal",
        })
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Density::Single => "1x",
            Density::Double => "2x",
        })
    }
}

/// One sampling line: a ray at `angle` radians from the origin, or a full
/// k-space row at centered frequency `row`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineId {
    Angle(f64),
    Row(i64),
}

impl Ord for LineId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (LineId::Angle(a), LineId::Angle(b)) => a.total_cmp(b),
            (LineId::Row(a), LineId::Row(b)) => a.cmp(b),
            (LineId::Angle(_), LineId::Row(_)) => Ordering::Less,
            (LineId::Row(_), LineId::Angle(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for LineId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for LineId {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for LineId {}

impl std::fmt::Display for LineId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LineId::Angle(a) => write!(f, "angle {a}"),
            LineId::Row(r) => write!(f, "row {r}"),
        }
    }
}

impl LineId {
    fn validate(&self, scheme: SamplingScheme, dims: GridDims) -> Result<()> {
        let ok = match (scheme, self) {
            (SamplingScheme::Radial, LineId::Angle(a)) => (0.0..TAU).contains(a),
            (SamplingScheme::Horizontal, LineId::Row(r)) => dims.row_freqs().contains(r),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidLine {
                line: format!("{self} ({scheme})"),
                dims,
            })
        }
    }
}

/// A measured (or hypothetical) set of lines: the fixed band plus the
/// distinct random draws. Both lists are kept sorted and duplicate-free;
/// they may overlap, and the effective set is their union.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLineSet")]
pub struct LineSet {
    scheme: SamplingScheme,
    dims: GridDims,
    fixed: Vec<LineId>,
    drawn: Vec<LineId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct RawLineSet {
    scheme: SamplingScheme,
    dims: GridDims,
    fixed: Vec<LineId>,
    drawn: Vec<LineId>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawLineSet> for LineSet {
    type Error = Error;

    fn try_from(raw: RawLineSet) -> Result<Self> {
        let mut set = LineSet::new(raw.scheme, raw.dims, raw.fixed, raw.drawn)?;
        set.seed = raw.seed;
        Ok(set)
    }
}

fn sorted_unique(mut lines: Vec<LineId>) -> Vec<LineId> {
    lines.sort();
    lines.dedup();
    lines
}

impl LineSet {
    pub fn new(
        scheme: SamplingScheme,
        dims: GridDims,
        fixed: Vec<LineId>,
        drawn: Vec<LineId>,
    ) -> Result<Self> {
        for line in fixed.iter().chain(&drawn) {
            line.validate(scheme, dims)?;
        }
        Ok(Self {
            scheme,
            dims,
            fixed: sorted_unique(fixed),
            drawn: sorted_unique(drawn),
            seed: None,
        })
    }

    /// Every row of the grid as fixed lines: the fully sampled set `I`.
    pub fn full_horizontal(dims: GridDims) -> Self {
        Self {
            scheme: SamplingScheme::Horizontal,
            dims,
            fixed: dims.row_freqs().map(LineId::Row).collect(),
            drawn: Vec::new(),
            seed: None,
        }
    }

    pub fn scheme(&self) -> SamplingScheme {
        self.scheme
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn fixed(&self) -> &[LineId] {
        &self.fixed
    }

    pub fn drawn(&self) -> &[LineId] {
        &self.drawn
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `fixed ∪ drawn`, sorted.
    pub fn effective(&self) -> Vec<LineId> {
        sorted_unique(self.fixed.iter().chain(&self.drawn).copied().collect())
    }

    pub fn len(&self) -> usize {
        self.effective().len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty() && self.drawn.is_empty()
    }

    /// Drawn lines that are not also fixed, i.e. the removable ones.
    pub fn removable(&self) -> Vec<LineId> {
        self.drawn
            .iter()
            .filter(|l| self.fixed.binary_search(l).is_err())
            .copied()
            .collect()
    }

    fn without(&self, line: LineId) -> Self {
        Self {
            drawn: self.drawn.iter().filter(|&&l| l != line).copied().collect(),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub scheme: SamplingScheme,
    pub dims: GridDims,
    /// Number of independent uniform draws, before deduplication.
    pub num_draws: usize,
    pub density: Density,
    pub seed: u64,
}

impl SamplingPlan {
    /// Plan with the default number of draws for the scheme and density.
    pub fn new(scheme: SamplingScheme, dims: GridDims, density: Density, seed: u64) -> Self {
        Self {
            scheme,
            dims,
            num_draws: default_num_draws(scheme, dims, density),
            density,
            seed,
        }
    }

    pub fn with_num_draws(mut self, num_draws: usize) -> Result<Self> {
        if num_draws == 0 {
            return Err(Error::InvalidParam {
                name: "num_draws",
                reason: "must be at least 1".into(),
            });
        }
        self.num_draws = num_draws;
        Ok(self)
    }

    /// Checks that `set` could have been drawn from this plan.
    pub fn check_matches(&self, set: &LineSet) -> Result<()> {
        if set.scheme != self.scheme {
            return Err(Error::PlanMismatch(format!(
                "plan scheme {} vs set scheme {}",
                self.scheme, set.scheme
            )));
        }
        if set.dims != self.dims {
            return Err(Error::PlanMismatch(format!(
                "plan dims {} vs set dims {}",
                self.dims, set.dims
            )));
        }
        Ok(())
    }
}

/// Default number of random lines: `(m+n)/5` rays or `m/4` rows, doubled for
/// [`Density::Double`], rounded half away from zero. Never less than one.
pub fn default_num_draws(scheme: SamplingScheme, dims: GridDims, density: Density) -> usize {
    let factor = match density {
        Density::Single => 1.0,
        Density::Double => 2.0,
    };
    let raw = match scheme {
        SamplingScheme::Radial => factor * (dims.rows + dims.cols) as f64 / 5.0,
        SamplingScheme::Horizontal => factor * dims.rows as f64 / 4.0,
    };
    round_half_away(raw).max(1) as usize
}

/// The always-sampled lines: none for rays, and rows `|r| <= round(sqrt(2m))`
/// for horizontal sampling, dropping rows that fall off the grid.
pub fn fixed_subset(scheme: SamplingScheme, dims: GridDims) -> Vec<LineId> {
    match scheme {
        SamplingScheme::Radial => Vec::new(),
        SamplingScheme::Horizontal => {
            let half = round_half_away((2.0 * dims.rows as f64).sqrt());
            (-half..=half)
                .filter(|r| dims.row_freqs().contains(r))
                .map(LineId::Row)
                .collect()
        }
    }
}

fn draw_line(scheme: SamplingScheme, dims: GridDims, rng: &mut ChaCha20Rng) -> LineId {
    match scheme {
        SamplingScheme::Radial => {
            let a = rng.random::<f64>() * TAU;
            LineId::Angle(if a < TAU { a } else { 0.0 })
        }
        SamplingScheme::Horizontal => LineId::Row(rng.random_range(dims.row_freqs())),
    }
}

fn draw_with(plan: &SamplingPlan, rng: &mut ChaCha20Rng) -> LineSet {
    let drawn = (0..plan.num_draws)
        .map(|_| draw_line(plan.scheme, plan.dims, rng))
        .collect();
    LineSet {
        scheme: plan.scheme,
        dims: plan.dims,
        fixed: sorted_unique(fixed_subset(plan.scheme, plan.dims)),
        drawn: sorted_unique(drawn),
        seed: None,
    }
}

/// Child seed for substream `stream` of `seed`: the first `u64` of
/// ChaCha20 keyed by `seed` on that stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Draws the measured set `S`: the fixed band plus `plan.num_draws` uniform
/// lines, deduplicated.
pub fn draw_sampling_set(plan: &SamplingPlan) -> LineSet {
    let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
    let mut set = draw_with(plan, &mut rng);
    set.seed = Some(plan.seed);
    set
}

/// Bootstrap replicate `index` (zero-based) drawn from stream `index + 1`
/// of `seed`.
pub fn draw_bootstrap_set(plan: &SamplingPlan, seed: u64, index: usize) -> LineSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    draw_with(plan, &mut rng)
}

pub fn draw_bootstrap_sets(plan: &SamplingPlan, k: usize, seed: u64) -> Vec<LineSet> {
    (0..k).map(|j| draw_bootstrap_set(plan, seed, j)).collect()
}

/// Grid pixels covered by a line, as sorted centered `(row, col)`
/// frequencies.
///
/// Rays are marched from the origin in half-pixel steps out to
/// `sqrt(ceil(m/2)^2 + ceil(n/2)^2)`, rounding each point to the nearest
/// pixel and dropping points off the grid.
pub fn line_pixels(line: LineId, dims: GridDims) -> Vec<(i64, i64)> {
    match line {
        LineId::Row(r) => {
            if !dims.row_freqs().contains(&r) {
                return Vec::new();
            }
            dims.col_freqs().map(|c| (r, c)).collect()
        }
        LineId::Angle(theta) => {
            let hr = dims.rows.div_ceil(2) as f64;
            let hc = dims.cols.div_ceil(2) as f64;
            let r_max = (hr * hr + hc * hc).sqrt();
            let steps = (2.0 * r_max).floor() as i64;
            let (s, c) = theta.sin_cos();
            let mut pixels: Vec<(i64, i64)> = (0..=steps)
                .map(|k| {
                    let t = 0.5 * k as f64;
                    (round_half_away(t * s), round_half_away(t * c))
                })
                .filter(|&(p, q)| dims.index_of(p, q).is_some())
                .collect();
            pixels.sort_unstable();
            pixels.dedup();
            pixels
        }
    }
}

/// Retained frequencies over the centered grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    retained: Array2<bool>,
}

impl SamplingMask {
    pub fn empty(dims: GridDims) -> Self {
        Self {
            retained: Array2::from_elem(dims.shape(), false),
        }
    }

    pub fn full(dims: GridDims) -> Self {
        Self {
            retained: Array2::from_elem(dims.shape(), true),
        }
    }

    /// Wraps a boolean grid in centered order.
    pub fn from_centered(retained: Array2<bool>) -> Result<Self> {
        let (rows, cols) = retained.dim();
        GridDims::new(rows, cols)?;
        Ok(Self { retained })
    }

    pub fn dims(&self) -> GridDims {
        let (rows, cols) = self.retained.dim();
        GridDims { rows, cols }
    }

    pub fn retained(&self) -> &Array2<bool> {
        &self.retained
    }

    pub fn is_retained(&self, row_freq: i64, col_freq: i64) -> bool {
        self.dims()
            .index_of(row_freq, col_freq)
            .is_some_and(|idx| self.retained[idx])
    }

    pub fn count(&self) -> usize {
        self.retained.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &SamplingMask) -> bool {
        self.retained
            .iter()
            .zip(other.retained.iter())
            .all(|(&a, &b)| !a || b)
    }
}

pub fn mask_from_set(set: &LineSet) -> SamplingMask {
    let dims = set.dims;
    let mut mask = SamplingMask::empty(dims);
    for line in set.fixed.iter().chain(&set.drawn) {
        for (p, q) in line_pixels(*line, dims) {
            if let Some(idx) = dims.index_of(p, q) {
                mask.retained[idx] = true;
            }
        }
    }
    mask
}

/// One `(removed, S \ {removed})` pair per removable line, in sorted order.
/// Fixed lines are never removed.
pub fn leave_one_out(set: &LineSet) -> Vec<(LineId, LineSet)> {
    set.removable()
        .into_iter()
        .map(|line| (line, set.without(line)))
        .collect()
}
