//! The EMB1 binary embedding format.
//!
//! ```text
//! bytes 0..4    magic "EMB1"
//! bytes 4..8    version, u32 LE (1)
//! bytes 8..12   rows, u32 LE
//! bytes 12..16  dim, u32 LE
//! then rows*dim f32 LE, row-major
//! ```
//!
//! Labels live in an optional sidecar next to the data file with the
//! extension replaced by `.labels`, one UTF-8 label per `\n`-terminated line.

use std::fs;
use std::path::{Path, PathBuf};

use negbias_core::{validate, EmbeddingMatrix};

use crate::error::{io_err, Error, Result};

pub const MAGIC: [u8; 4] = *b"EMB1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * matrix.data().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.dim() as u32).to_le_bytes());
    for v in matrix.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses EMB1 bytes without checking row norms.
pub fn decode(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if word(4) != VERSION {
        return Err(Error::UnsupportedVersion(word(4)));
    }
    let (rows, dim) = (word(8) as usize, word(12) as usize);
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes(bytes.len() - expected));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(EmbeddingMatrix::from_raw(rows, dim, data, None)?)
}

pub fn labels_path(path: &Path) -> PathBuf {
    path.with_extension("labels")
}

fn read_labels(path: &Path, rows: usize) -> Result<Option<Vec<String>>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    let labels: Vec<String> = text.lines().map(str::to_owned).collect();
    if labels.len() != rows {
        return Err(Error::LabelCount {
            path: path.to_owned(),
            labels: labels.len(),
            rows,
        });
    }
    Ok(Some(labels))
}

/// Reads an EMB1 file and its sidecar labels, if any, and validates the result.
pub fn read(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let matrix = decode(&fs::read(path).map_err(io_err(path))?)?;
    let labels = read_labels(&labels_path(path), matrix.rows())?;
    let matrix = matrix.with_labels(labels)?;
    validate(&matrix)?;
    Ok(matrix)
}

/// Writes the matrix and, when it carries labels, the sidecar.
pub fn write(path: impl AsRef<Path>, matrix: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(matrix)).map_err(io_err(path))?;
    if let Some(labels) = matrix.labels() {
        let sidecar = labels_path(path);
        let mut text = String::new();
        for l in labels {
            text.push_str(l);
            text.push('\n');
        }
        fs::write(&sidecar, text).map_err(io_err(&sidecar))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingMatrix {
        EmbeddingMatrix::new(2, 2, vec![1.0, 0.0, 0.0, -1.0], None).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..4], b"EMB1");
        assert_eq!(bytes[4..8], [1, 0, 0, 0]);
        assert_eq!(bytes[8..12], [2, 0, 0, 0]);
        assert_eq!(bytes[12..16], [2, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(bytes[28..32], (-1.0f32).to_le_bytes());
    }

    #[test]
    fn decode_rejects_malformed_input() {
        let good = encode(&sample());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::BadMagic(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode(&bad), Err(Error::UnsupportedVersion(2))));
        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(Error::Truncated {
                expected: 32,
                actual: 31
            })
        ));
        assert!(matches!(decode(&good[..7]), Err(Error::Truncated { .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(Error::TrailingBytes(1))));
        assert_eq!(decode(&good).unwrap(), sample());
    }

    #[test]
    fn sidecar_sits_next_to_the_data() {
        assert_eq!(
            labels_path(Path::new("out/selected.emb")),
            Path::new("out/selected.labels")
        );
    }
}
