//! Space-separated text vectors (GloVe, fastText `.vec`).

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::RawEmbedding;
use crate::{Result, UbeError};

/// Whether the first line carries a `<vocab_count> <dim>` header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextHeader {
    Expected,
    Absent,
    /// A first line consisting of exactly two integers is a header.
    #[default]
    Auto,
}

pub fn load_text_vectors(path: impl AsRef<Path>, header: TextHeader) -> Result<RawEmbedding> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let raw = read_text_vectors(BufReader::with_capacity(1 << 20, file), header)?;
    raw.log_stats(&path.display().to_string());
    Ok(raw)
}

pub fn read_text_vectors<R: BufRead>(reader: R, header: TextHeader) -> Result<RawEmbedding> {
    let mut raw: Option<RawEmbedding> = None;
    let mut header_dim = None;
    let mut vector = Vec::new();

    for (index, line) in reader.split(b'\n').enumerate() {
        let lineno = index + 1;
        let line = line?;
        let line = String::from_utf8_lossy(&line);
        let line = line.trim_end_matches(['\r', ' ', '\t']);
        if line.is_empty() {
            continue;
        }

        if lineno == 1 {
            let parsed = parse_header(line);
            match (header, parsed) {
                (TextHeader::Expected, None) => {
                    return Err(UbeError::format(1, "expected \"<vocab_count> <dim>\" header"));
                }
                (TextHeader::Expected | TextHeader::Auto, Some((_, dim))) => {
                    if dim == 0 {
                        return Err(UbeError::format(1, "header dimension must be positive"));
                    }
                    header_dim = Some(dim);
                    continue;
                }
                _ => {}
            }
        }

        let mut fields = line.split(' ');
        let token = fields.next().unwrap_or_default();
        vector.clear();
        for field in fields {
            let x: f32 = field.parse().map_err(|_| {
                UbeError::format(lineno, format!("non-numeric component {field:?}"))
            })?;
            vector.push(x);
        }
        let raw = match &mut raw {
            Some(raw) => raw,
            None => {
                if vector.is_empty() {
                    return Err(UbeError::format(lineno, "line has no vector components"));
                }
                if let Some(dim) = header_dim {
                    if dim != vector.len() {
                        return Err(UbeError::format(
                            lineno,
                            format!("header declares dim {dim}, line has {}", vector.len()),
                        ));
                    }
                }
                raw.insert(RawEmbedding::new(vector.len())?)
            }
        };
        if vector.len() != raw.dim() {
            return Err(UbeError::format(
                lineno,
                format!("expected {} components, found {}", raw.dim(), vector.len()),
            ));
        }
        raw.push(token.to_string(), &vector);
    }

    match (raw, header_dim) {
        (Some(raw), _) => Ok(raw),
        (None, Some(dim)) => RawEmbedding::new(dim),
        (None, None) => Err(UbeError::format(None, "no vectors found")),
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_ascii_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Some((a.parse().ok()?, b.parse().ok()?)),
        _ => None,
    }
}

/// Write `raw` as text. `f32` values use the shortest representation that
/// parses back to the same bits.
pub fn write_text_vectors<W: Write>(raw: &RawEmbedding, mut writer: W, header: bool) -> Result<()> {
    if header {
        writeln!(writer, "{} {}", raw.len(), raw.dim())?;
    }
    for (token, vector) in raw.iter() {
        write!(writer, "{token}")?;
        for x in vector {
            write!(writer, " {x}")?;
        }
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}
