//! Binary on-disk cache for structure-constant tensors.
//!
//! Layout (little endian): magic `SUNT`, `u32` version, one tag byte
//! (`f`, `d` or `z`), `u64` N, `u64` entry count, then per entry three `u64`
//! zero-based indices followed by the value (one `f64`, or real and
//! imaginary parts for `z`). Entries are stored in `(m, n, s)` order.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::basis::GeneratorBasis;
use crate::error::CacheError;
use crate::sparse::Scalar;
use crate::structure::{d_nonzeros, f_nonzeros, merge_z, Layout, MaterializedTensors, SparseTensor3, TensorKind};

pub const MAGIC: [u8; 4] = *b"SUNT";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: u64 = 4 + 4 + 1 + 8 + 8;

type CacheResult<T> = std::result::Result<T, CacheError>;

/// Values that can be stored in a cache file.
pub trait CacheValue: Scalar {
    const WIDTH: usize;
    fn write_le(&self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl CacheValue for f64 {
    const WIDTH: usize = 8;

    fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
}

impl CacheValue for Complex64 {
    const WIDTH: usize = 16;

    fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        Complex64::new(
            f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            f64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        )
    }
}

fn entry_bytes<V: CacheValue>() -> u64 {
    24 + V::WIDTH as u64
}

/// `su{N}_{tag}.sunt` inside `dir`.
pub fn cache_path(dir: &Path, n: usize, kind: TensorKind) -> PathBuf {
    dir.join(format!("su{n}_{}.sunt", kind.tag()))
}

fn io_err(path: &Path, source: std::io::Error) -> CacheError {
    CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a tensor atomically (temp file, then rename).
pub fn save<V: CacheValue>(path: &Path, tensor: &SparseTensor3<V>) -> CacheResult<()> {
    if tensor.layout() != Layout::Lexicographic {
        return Err(CacheError::UnsortedTensor);
    }
    let tmp = path.with_extension("sunt.tmp");
    let file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(HEADER_BYTES as usize);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.push(tensor.kind().tag() as u8);
    header.extend_from_slice(&(tensor.n() as u64).to_le_bytes());
    header.extend_from_slice(&(tensor.nnz() as u64).to_le_bytes());
    w.write_all(&header).map_err(|e| io_err(&tmp, e))?;

    let mut buf = Vec::with_capacity(1 << 16);
    for (idx, v) in tensor.iter() {
        for i in idx {
            buf.extend_from_slice(&(i as u64).to_le_bytes());
        }
        v.write_le(&mut buf);
        if buf.len() >= (1 << 16) - 64 {
            w.write_all(&buf).map_err(|e| io_err(&tmp, e))?;
            buf.clear();
        }
    }
    w.write_all(&buf).map_err(|e| io_err(&tmp, e))?;
    w.flush().map_err(|e| io_err(&tmp, e))?;
    drop(w);
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Reads a tensor and checks it against the expected `N` and kind, the
/// closed-form entry count, index bounds and ordering.
pub fn load<V: CacheValue>(path: &Path, n: usize, kind: TensorKind) -> CacheResult<SparseTensor3<V>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let file_len = file.metadata().map_err(|e| io_err(path, e))?.len();
    let mut r = BufReader::new(file);
    let truncated = |expected: u64| CacheError::Truncated {
        path: path.to_path_buf(),
        expected,
        found: file_len,
    };

    if file_len < HEADER_BYTES {
        // Still report a wrong magic if enough bytes are there to see it.
        if file_len >= 4 {
            let mut magic = [0u8; 4];
            r.read_exact(&mut magic).map_err(|e| io_err(path, e))?;
            if magic != MAGIC {
                return Err(CacheError::BadMagic {
                    path: path.to_path_buf(),
                    found: magic,
                });
            }
        }
        return Err(truncated(HEADER_BYTES));
    }
    let mut header = [0u8; HEADER_BYTES as usize];
    r.read_exact(&mut header).map_err(|e| io_err(path, e))?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(CacheError::BadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CacheError::UnsupportedVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let tag = header[8];
    let found_kind = TensorKind::from_tag(tag as char).ok_or(CacheError::UnknownTag {
        path: path.to_path_buf(),
        tag,
    })?;
    if found_kind != kind {
        return Err(CacheError::TagMismatch {
            path: path.to_path_buf(),
            expected: kind.tag(),
            found: found_kind.tag(),
        });
    }
    let stored_n = u64::from_le_bytes(header[9..17].try_into().unwrap()) as usize;
    if stored_n != n {
        return Err(CacheError::DimensionMismatch {
            path: path.to_path_buf(),
            expected: n,
            found: stored_n,
        });
    }
    let count = u64::from_le_bytes(header[17..25].try_into().unwrap());
    let expected_count = kind.expected_nnz(n);
    if count != expected_count {
        return Err(CacheError::Integrity {
            path: path.to_path_buf(),
            detail: format!("entry count {count}, closed form gives {expected_count}"),
        });
    }
    let expected_len = HEADER_BYTES + count * entry_bytes::<V>();
    if file_len != expected_len {
        if file_len < expected_len {
            return Err(truncated(expected_len));
        }
        return Err(CacheError::Integrity {
            path: path.to_path_buf(),
            detail: format!("{} trailing bytes", file_len - expected_len),
        });
    }

    let m = (n * n - 1) as u64;
    let mut indices = Vec::with_capacity(count as usize);
    let mut values = Vec::with_capacity(count as usize);
    let width = entry_bytes::<V>() as usize;
    let mut entry = vec![0u8; width];
    for e in 0..count {
        r.read_exact(&mut entry).map_err(|err| io_err(path, err))?;
        let mut idx = [0u32; 3];
        for (a, slot) in idx.iter_mut().enumerate() {
            let raw = u64::from_le_bytes(entry[8 * a..8 * a + 8].try_into().unwrap());
            if raw >= m {
                return Err(CacheError::Integrity {
                    path: path.to_path_buf(),
                    detail: format!("entry {e}: index {raw} out of range for M = {m}"),
                });
            }
            *slot = raw as u32;
        }
        if let Some(prev) = indices.last() {
            if *prev >= idx {
                return Err(CacheError::Integrity {
                    path: path.to_path_buf(),
                    detail: format!("entry {e}: indices not strictly increasing"),
                });
            }
        }
        let v = V::read_le(&entry[24..]);
        if !v.modulus().is_finite() {
            return Err(CacheError::Integrity {
                path: path.to_path_buf(),
                detail: format!("entry {e}: non-finite value"),
            });
        }
        indices.push(idx);
        values.push(v);
    }
    Ok(SparseTensor3::from_parts(
        n,
        kind,
        indices,
        values,
        Layout::Lexicographic,
    ))
}

/// What [`ensure`] did for each tensor.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CacheReport {
    pub written: Vec<PathBuf>,
    pub reused: Vec<PathBuf>,
}

/// Makes sure valid cache files for the requested kinds exist for `N` in
/// `dir`. Files that already load cleanly are left untouched; missing or
/// damaged files are regenerated.
pub fn ensure(dir: &Path, n: usize, kinds: &[TensorKind]) -> crate::error::Result<CacheReport> {
    let basis = GeneratorBasis::new(n)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut report = CacheReport::default();
    let mut missing = Vec::new();
    for &kind in kinds {
        let path = cache_path(dir, n, kind);
        let valid = match kind {
            TensorKind::Z => load::<Complex64>(&path, n, kind).is_ok(),
            _ => load::<f64>(&path, n, kind).is_ok(),
        };
        if valid {
            report.reused.push(path);
        } else {
            if path.exists() {
                log::warn!("{} failed validation, regenerating", path.display());
            }
            missing.push((kind, path));
        }
    }
    if missing.is_empty() {
        return Ok(report);
    }
    let f = f_nonzeros(&basis).sort_lexicographic();
    let d = d_nonzeros(&basis).sort_lexicographic();
    for (kind, path) in missing {
        match kind {
            TensorKind::F => save(&path, &f)?,
            TensorKind::D => save(&path, &d)?,
            TensorKind::Z => save(&path, &merge_z(f.clone(), d.clone()))?,
        }
        log::info!("wrote {}", path.display());
        report.written.push(path);
    }
    Ok(report)
}

/// Loads `f` and `z` for the materialized pipeline. Missing files are
/// generated first; a file that exists but fails validation is an error
/// (run the `cache` subcommand to repair it).
pub fn load_materialized(dir: &Path, n: usize) -> crate::error::Result<MaterializedTensors> {
    let missing: Vec<TensorKind> = [TensorKind::F, TensorKind::Z]
        .into_iter()
        .filter(|&k| !cache_path(dir, n, k).exists())
        .collect();
    if !missing.is_empty() {
        ensure(dir, n, &missing)?;
    }
    let f = load::<f64>(&cache_path(dir, n, TensorKind::F), n, TensorKind::F)?;
    let z = load::<Complex64>(&cache_path(dir, n, TensorKind::Z), n, TensorKind::Z)?;
    Ok(MaterializedTensors { f, z })
}
