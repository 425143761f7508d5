//! The word2vec binary format.
//!
//! ```text
//! <vocab_count> <dim>\n
//! <token> <dim little-endian f32>[\n]   (vocab_count times)
//! ```

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use super::RawEmbedding;
use crate::{Result, UbeError};

pub fn load_word2vec_binary(path: impl AsRef<Path>) -> Result<RawEmbedding> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let raw = read_word2vec_binary(BufReader::with_capacity(1 << 20, file))?;
    raw.log_stats(&path.display().to_string());
    Ok(raw)
}

pub fn read_word2vec_binary<R: BufRead>(mut reader: R) -> Result<RawEmbedding> {
    let mut header = Vec::new();
    let mut offset = reader.read_until(b'\n', &mut header)? as u64;
    if header.last() != Some(&b'\n') {
        return Err(UbeError::format(1, "missing header line"));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| UbeError::format(1, "header is not ASCII"))?;
    let mut fields = header.split_ascii_whitespace();
    let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(c), Some(d), None) => (parse_header_int(c)?, parse_header_int(d)?),
        _ => {
            return Err(UbeError::format(
                1,
                format!("expected \"<vocab_count> <dim>\", found {:?}", header.trim_end()),
            ))
        }
    };
    let mut raw = RawEmbedding::new(dim)?;

    let mut token = Vec::new();
    let mut bytes = vec![0u8; dim * 4];
    let mut vector = vec![0f32; dim];
    for _ in 0..count {
        offset += skip_newlines(&mut reader)?;
        let start = offset;
        token.clear();
        let n = reader.read_until(b' ', &mut token)?;
        offset += n as u64;
        if token.pop() != Some(b' ') {
            return Err(UbeError::TruncatedFile { offset: start });
        }
        reader.read_exact(&mut bytes).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => UbeError::TruncatedFile { offset: start },
            _ => UbeError::Io(e),
        })?;
        offset += bytes.len() as u64;
        for (dst, chunk) in vector.iter_mut().zip(bytes.chunks_exact(4)) {
            *dst = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        raw.push(String::from_utf8_lossy(&token).into_owned(), &vector);
    }
    Ok(raw)
}

fn parse_header_int(field: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| UbeError::format(1, format!("invalid header field {field:?}")))
}

fn skip_newlines<R: BufRead>(reader: &mut R) -> io::Result<u64> {
    let mut skipped = 0;
    loop {
        let buf = reader.fill_buf()?;
        let n = buf.iter().take_while(|&&b| b == b'\n').count();
        let exhausted = n < buf.len() || buf.is_empty();
        reader.consume(n);
        skipped += n as u64;
        if exhausted {
            return Ok(skipped);
        }
    }
}

pub fn write_word2vec_binary<W: Write>(raw: &RawEmbedding, mut writer: W) -> Result<()> {
    writeln!(writer, "{} {}", raw.len(), raw.dim())?;
    for (token, vector) in raw.iter() {
        writer.write_all(token.as_bytes())?;
        writer.write_all(b" ")?;
        for x in vector {
            writer.write_all(&x.to_le_bytes())?;
        }
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
