//! Null score tensor and its on-disk cache.
//!
//! Cache layout (all little-endian):
//!
//! ```text
//! b"UBENULL1"
//! u64 n, u64 m, u64 R, u64 d, u64 seed
//! n·m·R f64 values in (i, j, r) order, r fastest
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Result, UbeError};

const MAGIC: &[u8; 8] = b"UBENULL1";

/// `σ_ijr` for every group `i`, category `j` and rotation `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullScores {
    pub n: usize,
    pub m: usize,
    pub rotations: usize,
    pub dim: usize,
    pub seed: u64,
    values: Vec<f64>,
}

impl NullScores {
    /// Build from per-rotation score rows, each indexed `[j * n + i]`.
    pub fn from_rotation_rows(
        n: usize,
        m: usize,
        dim: usize,
        seed: u64,
        rows: &[Vec<f64>],
    ) -> Self {
        let rotations = rows.len();
        let mut values = vec![0.0; n * m * rotations];
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n * m);
            for j in 0..m {
                for i in 0..n {
                    values[(i * m + j) * rotations + r] = row[j * n + i];
                }
            }
        }
        NullScores {
            n,
            m,
            rotations,
            dim,
            seed,
            values,
        }
    }

    /// The `R` null scores of pair `(i, j)`.
    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.m + j) * self.rotations;
        &self.values[start..start + self.rotations]
    }

    pub fn matches(&self, n: usize, m: usize, rotations: usize, dim: usize, seed: u64) -> bool {
        (self.n, self.m, self.rotations, self.dim, self.seed) == (n, m, rotations, dim, seed)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for x in [self.n, self.m, self.rotations, self.dim] {
            w.write_all(&(x as u64).to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, 0)?;
        if &magic != MAGIC {
            return Err(UbeError::format(None, "not a null-score cache file"));
        }
        let mut header = [0u64; 5];
        for (k, h) in header.iter_mut().enumerate() {
            let mut buf = [0u8; 8];
            read_exact(&mut r, &mut buf, 8 + 8 * k as u64)?;
            *h = u64::from_le_bytes(buf);
        }
        let [n, m, rotations, dim, seed] = header;
        let count = n
            .checked_mul(m)
            .and_then(|x| x.checked_mul(rotations))
            .ok_or_else(|| UbeError::format(None, "cache header overflows"))?
            as usize;
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for k in 0..count {
            read_exact(&mut r, &mut buf, 48 + 8 * k as u64)?;
            values.push(f64::from_le_bytes(buf));
        }
        Ok(NullScores {
            n: n as usize,
            m: m as usize,
            rotations: rotations as usize,
            dim: dim as usize,
            seed,
            values,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => UbeError::TruncatedFile { offset },
        _ => UbeError::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        // n = 2, m = 3, two rotations
        let rows = vec![
            (0..6).map(|x| x as f64).collect::<Vec<_>>(),
            (0..6).map(|x| 10.0 + x as f64).collect(),
        ];
        let mut rows = rows;
        rows[1][5] = f64::NEG_INFINITY;
        let nulls = NullScores::from_rotation_rows(2, 3, 4, 99, &rows);
        // pair (i=1, j=2) is row index j*n+i = 5
        assert_eq!(nulls.pair(1, 2), &[5.0, f64::NEG_INFINITY]);
        assert_eq!(nulls.pair(0, 1), &[2.0, 12.0]);

        let mut buf = Vec::new();
        nulls.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 5 * 8 + 12 * 8);
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(NullScores::read_from(&buf[..]).unwrap(), nulls);
        assert!(matches!(
            NullScores::read_from(&buf[..buf.len() - 3]),
            Err(UbeError::TruncatedFile { .. })
        ));
    }
}
