use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of an image and of its k-space grid.
///
/// Frequencies along an axis of length `m` run over
/// `-floor(m/2) ..= ceil(m/2) - 1`; for even `m` that is `-m/2 ..= m/2 - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims")]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Deserialize)]
struct RawDims {
    rows: usize,
    cols: usize,
}

impl TryFrom<RawDims> for GridDims {
    type Error = Error;

    fn try_from(raw: RawDims) -> Result<Self> {
        GridDims::new(raw.rows, raw.cols)
    }
}

impl GridDims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidDims { rows, cols });
        }
        Ok(Self { rows, cols })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_freqs(&self) -> RangeInclusive<i64> {
        centered_range(self.rows)
    }

    pub fn col_freqs(&self) -> RangeInclusive<i64> {
        centered_range(self.cols)
    }

    /// Storage index of a centered frequency pair, or `None` off the grid.
    pub fn index_of(&self, row_freq: i64, col_freq: i64) -> Option<(usize, usize)> {
        if !self.row_freqs().contains(&row_freq) || !self.col_freqs().contains(&col_freq) {
            return None;
        }
        Some((
            (row_freq + (self.rows / 2) as i64) as usize,
            (col_freq + (self.cols / 2) as i64) as usize,
        ))
    }

    /// Centered frequency pair held at a storage index.
    pub fn freq_of(&self, row: usize, col: usize) -> (i64, i64) {
        (
            row as i64 - (self.rows / 2) as i64,
            col as i64 - (self.cols / 2) as i64,
        )
    }

    pub(crate) fn check_same(&self, other: GridDims) -> Result<()> {
        if *self != other {
            return Err(Error::DimsMismatch {
                expected: *self,
                found: other,
            });
        }
        Ok(())
    }
}

impl fmt::Display for GridDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl std::str::FromStr for GridDims {
    type Err = Error;

    /// Parses `ROWSxCOLS`, e.g. `378x284`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected dimensions like 64x64, got `{s}`"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        GridDims::new(rows, cols)
    }
}

fn centered_range(len: usize) -> RangeInclusive<i64> {
    let lo = -((len / 2) as i64);
    let hi = len.div_ceil(2) as i64 - 1;
    lo..=hi
}

/// Nearest integer with halves rounded away from zero.
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}
