//! Analog catalogs: storage, subsampling, temporal exclusion and file I/O.
//!
//! The `.anacat` layout is
//!
//! ```text
//! b"ANACAT01"                 8 bytes magic
//! header_len: u64 LE          8 bytes
//! header: JSON (UTF-8)        header_len bytes
//! states: f64 LE, row-major   L * D * 8 bytes
//! times: i64 LE               L * 8 bytes, only when has_times
//! ```
//!
//! with header fields `schema_version`, `L`, `D`, `dtype` (always `"f64"`),
//! `has_times` and `metadata`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::neighbors::Neighbor;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ANACAT01";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogMetadata {
    pub name: String,
    pub units: String,
    /// Free-form provenance (generator settings, grid shape, ...).
    #[serde(default)]
    pub extra: serde_json::Value,
}

/// An `L x D` matrix of states with optional strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    data: Vec<f64>,
    dim: usize,
    times: Option<Vec<i64>>,
    pub metadata: CatalogMetadata,
}

impl Catalog {
    pub fn new(
        data: Vec<f64>,
        dim: usize,
        times: Option<Vec<i64>>,
        metadata: CatalogMetadata,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("catalog dimension must be at least 1"));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "catalog needs a positive multiple of {dim} values, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at flat index {i}")));
        }
        let len = data.len() / dim;
        if let Some(t) = &times {
            if t.len() != len {
                return Err(Error::invalid(format!(
                    "{} timestamps for {len} states",
                    t.len()
                )));
            }
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("timestamps must be strictly increasing"));
            }
        }
        Ok(Catalog {
            data,
            dim,
            times,
            metadata,
        })
    }

    /// Build from rows; all rows must share the same length.
    pub fn from_rows(rows: &[Vec<f64>], times: Option<Vec<i64>>, metadata: CatalogMetadata) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.len(),
            });
        }
        Catalog::new(rows.concat(), dim, times, metadata)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn times(&self) -> Option<&[i64]> {
        self.times.as_deref()
    }

    /// Timestamp of row `i`; the row index when the catalog has no times.
    pub fn time_of(&self, i: usize) -> i64 {
        match &self.times {
            Some(t) => t[i],
            None => i as i64,
        }
    }

    /// Catalog restricted to `indices`, which must be valid and ascending.
    pub fn select_rows(&self, indices: &[usize]) -> Catalog {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let times = self.times.as_ref().map(|t| indices.iter().map(|&i| t[i]).collect());
        Catalog {
            data,
            dim: self.dim,
            times,
            metadata: self.metadata.clone(),
        }
    }

    /// Random subset of `size` distinct rows, kept in source order.
    ///
    /// Catalogs without timestamps gain the source row indices as times so that
    /// exclusion rules keep referring to the original time axis.
    pub fn subsample_without_replacement(&self, size: usize, seed: u64) -> Result<Catalog> {
        if size > self.len() {
            return Err(Error::TooLarge {
                requested: size,
                available: self.len(),
            });
        }
        if size == 0 {
            return Err(Error::invalid("subsample size must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, self.len(), size).into_vec();
        picked.sort_unstable();
        let mut sub = self.select_rows(&picked);
        if sub.times.is_none() {
            sub.times = Some(picked.iter().map(|&i| i as i64).collect());
        }
        Ok(sub)
    }

    /// Read a CSV file with one state per row, optionally preceded by a time column.
    /// A first line that does not parse as numbers is treated as a header.
    pub fn from_csv(path: impl AsRef<Path>, leading_time_column: bool) -> Result<Catalog> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut rows = Vec::new();
        let mut times = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::invalid(format!("{path:?} line {}: {e}", line + 1))),
            };
            if leading_time_column {
                let (t, rest) = values
                    .split_first()
                    .ok_or_else(|| Error::invalid(format!("{path:?} line {}: empty row", line + 1)))?;
                if t.fract() != 0.0 {
                    return Err(Error::invalid(format!("{path:?} line {}: non-integer time {t}", line + 1)));
                }
                times.push(*t as i64);
                rows.push(rest.to_vec());
            } else {
                rows.push(values);
            }
        }
        let metadata = CatalogMetadata {
            name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            ..Default::default()
        };
        Catalog::from_rows(&rows, leading_time_column.then_some(times), metadata)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    #[serde(rename = "L")]
    len: u64,
    #[serde(rename = "D")]
    dim: u64,
    dtype: String,
    has_times: bool,
    metadata: CatalogMetadata,
}

pub fn save_catalog(c: &Catalog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_catalog(c, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_catalog<W: Write>(c: &Catalog, w: &mut W) -> std::io::Result<()> {
    let header = Header {
        schema_version: SCHEMA_VERSION,
        len: c.len() as u64,
        dim: c.dim as u64,
        dtype: "f64".into(),
        has_times: c.times.is_some(),
        metadata: c.metadata.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in &c.data {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(t) = &c.times {
        for v in t {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    parse_catalog(&bytes)
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Decode an in-memory `.anacat` image.
pub fn parse_catalog(bytes: &[u8]) -> Result<Catalog> {
    if bytes.len() < 16 {
        return Err(format_err(bytes.len(), "file shorter than the fixed preamble"));
    }
    if &bytes[..8] != MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let header_end = 16usize
        .checked_add(usize::try_from(header_len).map_err(|_| format_err(8, "header length overflow"))?)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| format_err(8, format!("header length {header_len} exceeds file size")))?;
    let header: Header = serde_json::from_slice(&bytes[16..header_end])
        .map_err(|e| format_err(16 + e.column().saturating_sub(1), format!("header: {e}")))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(format_err(16, format!("unsupported schema_version {}", header.schema_version)));
    }
    if header.dtype != "f64" {
        return Err(format_err(16, format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.len == 0 || header.dim == 0 {
        return Err(format_err(16, format!("empty catalog (L={}, D={})", header.len, header.dim)));
    }
    let n_values = header
        .len
        .checked_mul(header.dim)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| format_err(16, "L*D overflows"))?;
    let payload = n_values
        .checked_mul(8)
        .and_then(|p| p.checked_add(if header.has_times { header.len as usize * 8 } else { 0 }))
        .ok_or_else(|| format_err(16, "payload size overflows"))?;
    let expected_end = header_end
        .checked_add(payload)
        .ok_or_else(|| format_err(16, "payload size overflows"))?;
    if bytes.len() < expected_end {
        return Err(format_err(bytes.len(), format!("truncated payload: expected {expected_end} bytes")));
    }
    if bytes.len() > expected_end {
        return Err(format_err(expected_end, "trailing bytes after payload"));
    }
    let mut offset = header_end;
    let data: Vec<f64> = bytes[offset..offset + n_values * 8]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    offset += n_values * 8;
    let times = header.has_times.then(|| {
        bytes[offset..expected_end]
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect::<Vec<_>>()
    });
    Catalog::new(data, header.dim as usize, times, header.metadata).map_err(|e| format_err(header_end, e.to_string()))
}

/// Temporal-independence rules applied to candidate analogs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionPolicy {
    /// Candidates strictly closer than this (in time units) to the target are dropped.
    pub min_target_gap: i64,
    /// Keep a single random member of each run of time-adjacent candidates.
    pub dedup_neighbor_runs: bool,
    pub rng_seed: u64,
}

impl Default for ExclusionPolicy {
    fn default() -> Self {
        ExclusionPolicy {
            min_target_gap: 36,
            dedup_neighbor_runs: true,
            rng_seed: 0,
        }
    }
}

impl ExclusionPolicy {
    pub fn none() -> Self {
        ExclusionPolicy {
            min_target_gap: 0,
            dedup_neighbor_runs: false,
            rng_seed: 0,
        }
    }

    /// Whether a single catalog time passes the target-gap rule.
    pub fn admits(&self, candidate_time: i64, target_time: Option<i64>) -> bool {
        match target_time {
            Some(t) => candidate_time.abs_diff(t) >= self.min_target_gap.max(0) as u64,
            None => true,
        }
    }
}

fn mix_seed(seed: u64, salt: i64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (salt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Filter candidates by the target-gap rule and, optionally, collapse runs of
/// time-adjacent candidates to one randomly chosen member.
///
/// `time_of` maps a catalog index to its timestamp. The output is sorted by
/// `(distance, index)`.
pub fn apply_exclusion<T: Fn(usize) -> i64>(
    candidates: &[Neighbor],
    target_time: Option<i64>,
    time_of: T,
    policy: &ExclusionPolicy,
) -> Vec<Neighbor> {
    let mut kept: Vec<(i64, Neighbor)> = candidates
        .iter()
        .map(|n| (time_of(n.index), *n))
        .filter(|(t, _)| policy.admits(*t, target_time))
        .collect();
    if policy.dedup_neighbor_runs && kept.len() > 1 {
        kept.sort_by_key(|(t, n)| (*t, n.index));
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(policy.rng_seed, target_time.unwrap_or(i64::MIN)));
        let mut survivors = Vec::with_capacity(kept.len());
        let mut start = 0;
        for i in 1..=kept.len() {
            if i == kept.len() || kept[i].0 != kept[i - 1].0 + 1 {
                let run = &kept[start..i];
                survivors.push(*run.choose(&mut rng).expect("runs are non-empty"));
                start = i;
            }
        }
        kept = survivors;
    }
    let mut out: Vec<Neighbor> = kept.into_iter().map(|(_, n)| n).collect();
    out.sort_by(Neighbor::cmp_by_distance);
    out
}
