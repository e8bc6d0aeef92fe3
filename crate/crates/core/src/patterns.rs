//! DMD modulation sequences.
//!
//! Three families are supported:
//!
//! * i.i.d. random binary masks,
//! * per-block binarized Sylvester–Hadamard codes, identical in every block,
//! * pixel-wise scanning, which turns on one mirror per group per capture.
//!
//! Hadamard codes skip the all-ones row, so every emitted pattern has
//! exactly half of each block's mirrors turned on. Codes are reshaped into
//! the block in row-major order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::model::GeometryConfig;

/// A binary mirror-state mask at DMD resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmdPattern {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl DmdPattern {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        check_dim("pattern data length", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, on: bool) -> Self {
        Self {
            rows,
            cols,
            data: vec![on; rows * cols],
        }
    }

    /// Builds a pattern from 0/1 values.
    pub fn from_bits(rows: usize, cols: usize, bits: &[u8]) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Invalid(format!("pattern value {b} is not binary")));
        }
        Self::new(rows, cols, bits.iter().map(|&b| b == 1).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    RandomBinary,
    Hadamard,
    PixelScan,
}

impl PatternKind {
    pub fn name(self) -> &'static str {
        match self {
            PatternKind::RandomBinary => "random-binary",
            PatternKind::Hadamard => "hadamard",
            PatternKind::PixelScan => "pixel-scan",
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-binary" | "random" => Ok(PatternKind::RandomBinary),
            "hadamard" => Ok(PatternKind::Hadamard),
            "pixel-scan" | "scan" => Ok(PatternKind::PixelScan),
            other => Err(Error::Config(format!("unknown pattern kind '{other}'"))),
        }
    }
}

/// An ordered list of equally sized patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSequence {
    patterns: Vec<DmdPattern>,
    kind: PatternKind,
    seed: Option<u64>,
}

impl PatternSequence {
    pub fn new(patterns: Vec<DmdPattern>, kind: PatternKind, seed: Option<u64>) -> Result<Self> {
        let first = patterns
            .first()
            .ok_or_else(|| Error::Invalid("pattern sequence is empty".into()))?;
        let shape = first.shape();
        if patterns.iter().any(|p| p.shape() != shape) {
            return Err(Error::Invalid("pattern sizes differ".into()));
        }
        Ok(Self {
            patterns,
            kind,
            seed,
        })
    }

    pub fn patterns(&self) -> &[DmdPattern] {
        &self.patterns
    }

    pub fn get(&self, t: usize) -> &DmdPattern {
        &self.patterns[t]
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn shape(&self) -> (usize, usize) {
        self.patterns[0].shape()
    }

    /// Keeps the first `count` patterns.
    pub fn truncated(mut self, count: usize) -> Result<Self> {
        if count == 0 || count > self.patterns.len() {
            return Err(Error::Config(format!(
                "cannot keep {count} of {} patterns",
                self.patterns.len()
            )));
        }
        self.patterns.truncate(count);
        Ok(self)
    }
}

pub fn random_binary_sequence(
    geometry: &GeometryConfig,
    count: usize,
    density: f64,
    seed: u64,
) -> Result<PatternSequence> {
    geometry.validate()?;
    if count == 0 {
        return Err(Error::Config("pattern count must be at least 1".into()));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::Config(format!(
            "density {density} must lie strictly inside (0, 1)"
        )));
    }
    let (rows, cols) = geometry.dmd_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = (0..count)
        .map(|_| DmdPattern {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_bool(density)).collect(),
        })
        .collect();
    PatternSequence::new(patterns, PatternKind::RandomBinary, Some(seed))
}

/// Entry (row, col) of the Sylvester–Hadamard matrix of any power-of-two order.
#[inline]
pub fn sylvester_entry(row: usize, col: usize) -> i8 {
    if (row & col).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Binary block code for pattern `t`: row `t + 1` of the Hadamard matrix,
/// mapped by h ↦ (1 + h) / 2.
pub fn hadamard_block_code(block_len: usize, t: usize) -> Vec<bool> {
    (0..block_len)
        .map(|j| sylvester_entry(t + 1, j) > 0)
        .collect()
}

pub fn hadamard_sequence(geometry: &GeometryConfig, count: usize) -> Result<PatternSequence> {
    geometry.validate()?;
    let block_len = geometry.block_rows * geometry.block_cols;
    if !block_len.is_power_of_two() || block_len < 2 {
        return Err(Error::Config(format!(
            "hadamard codes need a power-of-two block size, got {block_len}"
        )));
    }
    if count == 0 || count > block_len - 1 {
        return Err(Error::Config(format!(
            "hadamard sequence length {count} must be in 1..={}",
            block_len - 1
        )));
    }
    let (rows, cols) = geometry.dmd_shape();
    let (br, bc) = (geometry.block_rows, geometry.block_cols);
    let patterns = (0..count)
        .map(|t| {
            let code = hadamard_block_code(block_len, t);
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    data.push(code[(r % br) * bc + (c % bc)]);
                }
            }
            DmdPattern { rows, cols, data }
        })
        .collect();
    PatternSequence::new(patterns, PatternKind::Hadamard, None)
}

/// Splits `len` into `groups` contiguous ranges; the last range absorbs the remainder.
pub fn group_bounds(len: usize, groups: usize) -> Result<Vec<(usize, usize)>> {
    if groups == 0 || groups > len {
        return Err(Error::Config(format!(
            "{groups} groups do not fit into {len} mirrors"
        )));
    }
    let size = len / groups;
    Ok((0..groups)
        .map(|g| {
            let start = g * size;
            let end = if g + 1 == groups { len } else { start + size };
            (start, end)
        })
        .collect())
}

/// Mirror (row, col) turned on for group `(row_range, col_range)` in capture `p`,
/// or `None` when the group has fewer than `p + 1` mirrors.
pub fn scan_position(
    (r0, r1): (usize, usize),
    (c0, c1): (usize, usize),
    p: usize,
) -> Option<(usize, usize)> {
    let width = c1 - c0;
    let r = r0 + p / width;
    (r < r1).then(|| (r, c0 + p % width))
}

pub fn pixel_scan_sequence(
    geometry: &GeometryConfig,
    groups_rows: usize,
    groups_cols: usize,
) -> Result<PatternSequence> {
    geometry.validate()?;
    let (rows, cols) = geometry.dmd_shape();
    let row_groups = group_bounds(rows, groups_rows)?;
    let col_groups = group_bounds(cols, groups_cols)?;
    let max_h = row_groups.iter().map(|(a, b)| b - a).max().unwrap_or(0);
    let max_w = col_groups.iter().map(|(a, b)| b - a).max().unwrap_or(0);
    let length = max_h * max_w;
    let patterns = (0..length)
        .map(|p| {
            let mut data = vec![false; rows * cols];
            for &rg in &row_groups {
                for &cg in &col_groups {
                    if let Some((r, c)) = scan_position(rg, cg, p) {
                        data[r * cols + c] = true;
                    }
                }
            }
            DmdPattern { rows, cols, data }
        })
        .collect();
    PatternSequence::new(patterns, PatternKind::PixelScan, None)
}
