//! On-disk formats.
//!
//! All binary headers are little-endian.
//!
//! | format | layout |
//! |--------|--------|
//! | map (`FPCS`) | magic, version `u32`, n_sensor `u64`, n_dmd `u64`, nnz `u64`, then nnz × (`u64` i, `u64` j, `f64` w) in canonical order |
//! | patterns (`FPAT`) | magic, version `u32`, rows `u64`, cols `u64`, count `u64`, kind `u32`, flags `u32` (bit 0: seed present), seed `u64`, then per pattern ⌈rows·cols/8⌉ bytes, row-major, most significant bit first |
//! | float raster (`FPFR`) | magic, version `u32`, rows `u32`, cols `u32`, then rows·cols `f32`, row-major |
//!
//! Text companions: map triplets (`i j w` per line after a `#` header),
//! plain PBM (`P1`, 1 = mirror on) for patterns, and 16-bit binary PGM
//! (`P5`, big-endian) for display rasters.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::patterns::{DmdPattern, PatternKind, PatternSequence};
use crate::sparse::SparseMap;

pub const MAP_MAGIC: &[u8; 4] = b"FPCS";
pub const PATTERN_MAGIC: &[u8; 4] = b"FPAT";
pub const RASTER_MAGIC: &[u8; 4] = b"FPFR";
pub const FORMAT_VERSION: u32 = 1;

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_usize(r: &mut impl Read) -> Result<usize> {
    usize::try_from(read_u64(r)?).map_err(|_| Error::Format("count overflows usize".into()))
}

fn expect_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let found: [u8; 4] = read_array(r)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

pub fn write_map(map: &SparseMap, w: &mut impl Write) -> Result<()> {
    w.write_all(MAP_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(map.n_sensor() as u64).to_le_bytes())?;
    w.write_all(&(map.n_dmd() as u64).to_le_bytes())?;
    w.write_all(&(map.nnz() as u64).to_le_bytes())?;
    for (i, j, wt) in map.entries() {
        w.write_all(&(i as u64).to_le_bytes())?;
        w.write_all(&(j as u64).to_le_bytes())?;
        w.write_all(&wt.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a map; shapes are flat until [`SparseMap::with_shapes`] is applied.
pub fn read_map(r: &mut impl Read) -> Result<SparseMap> {
    expect_header(r, MAP_MAGIC)?;
    let n_sensor = read_usize(r)?;
    let n_dmd = read_usize(r)?;
    let nnz = read_usize(r)?;
    let mut entries = Vec::with_capacity(nnz.min(1 << 24));
    let mut last: Option<(usize, usize)> = None;
    for _ in 0..nnz {
        let i = read_usize(r)?;
        let j = read_usize(r)?;
        let w = f64::from_le_bytes(read_array(r)?);
        if last.is_some_and(|l| l >= (i, j)) {
            return Err(Error::Format("map entries are not in canonical order".into()));
        }
        last = Some((i, j));
        entries.push((i, j, w));
    }
    SparseMap::from_triplets(n_sensor, n_dmd, entries)
}

pub fn write_map_text(map: &SparseMap, w: &mut impl Write) -> Result<()> {
    writeln!(w, "# {} {}", map.n_sensor(), map.n_dmd())?;
    for (i, j, wt) in map.entries() {
        writeln!(w, "{i} {j} {wt:e}")?;
    }
    Ok(())
}

pub fn read_map_text(r: impl BufRead) -> Result<SparseMap> {
    let mut dims: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    let bad = |line: &str| Error::Format(format!("bad map line '{line}'"));
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let mut it = rest.split_whitespace().map(str::parse::<usize>);
            if let (Some(Ok(a)), Some(Ok(b))) = (it.next(), it.next()) {
                dims = Some((a, b));
            }
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let i = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(trimmed))?;
        let j = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(trimmed))?;
        let w = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(trimmed))?;
        entries.push((i, j, w));
    }
    let (n_sensor, n_dmd) = dims.ok_or_else(|| Error::Format("missing '# n_sensor n_dmd' header".into()))?;
    SparseMap::from_triplets(n_sensor, n_dmd, entries)
}

fn kind_code(kind: PatternKind) -> u32 {
    match kind {
        PatternKind::RandomBinary => 0,
        PatternKind::Hadamard => 1,
        PatternKind::PixelScan => 2,
    }
}

fn kind_from_code(code: u32) -> Result<PatternKind> {
    match code {
        0 => Ok(PatternKind::RandomBinary),
        1 => Ok(PatternKind::Hadamard),
        2 => Ok(PatternKind::PixelScan),
        other => Err(Error::Format(format!("unknown pattern kind code {other}"))),
    }
}

pub fn write_patterns(seq: &PatternSequence, w: &mut impl Write) -> Result<()> {
    let (rows, cols) = seq.shape();
    w.write_all(PATTERN_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    w.write_all(&(seq.len() as u64).to_le_bytes())?;
    w.write_all(&kind_code(seq.kind()).to_le_bytes())?;
    w.write_all(&u32::from(seq.seed().is_some()).to_le_bytes())?;
    w.write_all(&seq.seed().unwrap_or(0).to_le_bytes())?;
    let mut packed = vec![0u8; (rows * cols).div_ceil(8)];
    for p in seq.patterns() {
        packed.iter_mut().for_each(|b| *b = 0);
        for (k, &on) in p.mask().iter().enumerate() {
            if on {
                packed[k / 8] |= 0x80 >> (k % 8);
            }
        }
        w.write_all(&packed)?;
    }
    Ok(())
}

pub fn read_patterns(r: &mut impl Read) -> Result<PatternSequence> {
    expect_header(r, PATTERN_MAGIC)?;
    let rows = read_usize(r)?;
    let cols = read_usize(r)?;
    let count = read_usize(r)?;
    let kind = kind_from_code(read_u32(r)?)?;
    let flags = read_u32(r)?;
    let seed = read_u64(r)?;
    let mut packed = vec![0u8; (rows * cols).div_ceil(8)];
    let mut patterns = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut packed)?;
        let mask = (0..rows * cols)
            .map(|k| packed[k / 8] & (0x80 >> (k % 8)) != 0)
            .collect();
        patterns.push(DmdPattern::new(rows, cols, mask)?);
    }
    PatternSequence::new(patterns, kind, (flags & 1 == 1).then_some(seed))
}

/// Plain-text PBM; 1 marks a mirror that is on.
pub fn write_pbm(pattern: &DmdPattern, w: &mut impl Write) -> Result<()> {
    writeln!(w, "P1")?;
    writeln!(w, "{} {}", pattern.cols(), pattern.rows())?;
    for r in 0..pattern.rows() {
        let line: Vec<&str> = (0..pattern.cols())
            .map(|c| if pattern.get(r, c) { "1" } else { "0" })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_raster(frame: &Frame, w: &mut impl Write) -> Result<()> {
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} too large")));
    w.write_all(RASTER_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dim(frame.rows())?.to_le_bytes())?;
    w.write_all(&dim(frame.cols())?.to_le_bytes())?;
    for &v in frame.data() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raster(r: &mut impl Read) -> Result<Frame> {
    expect_header(r, RASTER_MAGIC)?;
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(f32::from_le_bytes(read_array(r)?) as f64);
    }
    Frame::new(rows, cols, data)
}

/// 16-bit binary PGM; values are clamped to `[0, peak]` and scaled to 65535.
pub fn write_pgm16(frame: &Frame, peak: f64, w: &mut impl Write) -> Result<()> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Invalid(format!("display peak {peak}")));
    }
    write!(w, "P5\n{} {}\n65535\n", frame.cols(), frame.rows())?;
    for &v in frame.data() {
        let level = ((v / peak).clamp(0.0, 1.0) * 65535.0).round() as u16;
        w.write_all(&level.to_be_bytes())?;
    }
    Ok(())
}

pub fn save_map(map: &SparseMap, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_map(map, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_map(path: &Path) -> Result<SparseMap> {
    read_map(&mut BufReader::new(File::open(path)?))
}

pub fn save_patterns(seq: &PatternSequence, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_patterns(seq, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_patterns(path: &Path) -> Result<PatternSequence> {
    read_patterns(&mut BufReader::new(File::open(path)?))
}

pub fn save_raster(frame: &Frame, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_raster(frame, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_raster(path: &Path) -> Result<Frame> {
    read_raster(&mut BufReader::new(File::open(path)?))
}
