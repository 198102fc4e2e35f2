//! The SPF1 binary embedding container.
//!
//! Layout, all integers little-endian:
//!
//! | bytes          | content                                   |
//! |----------------|-------------------------------------------|
//! | 4              | magic `SPF1`                              |
//! | 4              | `u32` version, currently 1                |
//! | 4              | `u32` frame count T                       |
//! | 4              | `u32` dimension d                         |
//! | 1              | normalized flag (0 or 1)                  |
//! | 3              | reserved, zero                            |
//! | 4·T·d          | `f32` components, row-major               |
//! | 4              | `u32` metadata length n                   |
//! | n              | UTF-8 JSON metadata object                |
//!
//! Unknown metadata keys are accepted and ignored. Components are widened
//! to `f64` on read and narrowed to `f32` on write.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EmbeddingSequence;

pub const MAGIC: [u8; 4] = *b"SPF1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Serialize, Deserialize)]
struct Metadata {
    fps: Option<f64>,
    source_tag: String,
}

pub fn encode_embeddings(seq: &EmbeddingSequence) -> Result<Vec<u8>> {
    let frames = u32::try_from(seq.frame_count())
        .map_err(|_| Error::domain("too many frames for SPF1"))?;
    let dim = u32::try_from(seq.dim()).map_err(|_| Error::domain("dimension too large for SPF1"))?;
    let meta = serde_json::to_vec(&Metadata {
        fps: seq.fps(),
        source_tag: seq.source_tag().to_owned(),
    })?;
    let meta_len =
        u32::try_from(meta.len()).map_err(|_| Error::domain("metadata too large for SPF1"))?;

    let mut out = Vec::with_capacity(HEADER_LEN + 4 * seq.as_flat().len() + 4 + meta.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&frames.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.push(u8::from(seq.is_normalized()));
    out.extend_from_slice(&[0; 3]);
    for &v in seq.as_flat() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out.extend_from_slice(&meta_len.to_le_bytes());
    out.extend_from_slice(&meta);
    Ok(out)
}

fn truncated(what: &str) -> Error {
    Error::Io(io::Error::new(
        io::ErrorKind::UnexpectedEof,
        format!("truncated SPF1 data: missing {what}"),
    ))
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(truncated(what));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8], what: &str) -> Result<u32> {
    let b = take(bytes, 4, what)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

pub fn decode_embeddings(mut bytes: &[u8]) -> Result<EmbeddingSequence> {
    let magic = take(&mut bytes, 4, "magic")?;
    if magic != MAGIC {
        return Err(Error::format(format!("bad magic {magic:?}, expected SPF1")));
    }
    let version = take_u32(&mut bytes, "version")?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported SPF1 version {version}")));
    }
    let frames = take_u32(&mut bytes, "frame count")? as usize;
    let dim = take_u32(&mut bytes, "dimension")? as usize;
    let flags = take(&mut bytes, 4, "flags")?;
    let normalized = match flags[0] {
        0 => false,
        1 => true,
        other => return Err(Error::format(format!("invalid normalized flag {other}"))),
    };
    if flags[1..] != [0, 0, 0] {
        return Err(Error::format("reserved header bytes must be zero"));
    }
    if frames < 2 || dim < 1 {
        return Err(Error::domain(format!(
            "SPF1 header declares {frames}x{dim}; need at least 2 frames and 1 dimension"
        )));
    }
    let payload_len = frames
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("payload size overflows"))?;
    let payload = take(&mut bytes, payload_len, "embedding payload")?;
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let meta_len = take_u32(&mut bytes, "metadata length")? as usize;
    let meta_bytes = take(&mut bytes, meta_len, "metadata")?;
    if !bytes.is_empty() {
        return Err(Error::format(format!("{} trailing bytes after metadata", bytes.len())));
    }
    let meta: Metadata = serde_json::from_slice(meta_bytes)
        .map_err(|e| Error::format(format!("metadata is not valid JSON: {e}")))?;

    let seq = EmbeddingSequence::from_flat(frames, dim, data, meta.fps, meta.source_tag)?;
    if normalized {
        seq.assume_normalized()
    } else {
        Ok(seq)
    }
}

pub fn write_embedding_file(seq: &EmbeddingSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_embeddings(seq)?)?;
    Ok(())
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingSequence> {
    decode_embeddings(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingSequence {
        EmbeddingSequence::from_rows(
            vec![vec![0.25, -1.5, 3.0], vec![1.0, 0.0, -0.125]],
            Some(24.0),
            "siglip",
        )
        .unwrap()
    }

    #[test]
    fn round_trip_identity() {
        let seq = sample();
        let bytes = encode_embeddings(&seq).unwrap();
        let back = decode_embeddings(&bytes).unwrap();
        assert_eq!(back, seq);
        assert_eq!(encode_embeddings(&back).unwrap(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_embeddings(&sample()).unwrap();
        assert_eq!(&bytes[0..4], &[0x53, 0x50, 0x46, 0x31]);
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &[0, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &0.25f32.to_le_bytes());
        let meta_at = HEADER_LEN + 4 * 6;
        let meta_len = u32::from_le_bytes(bytes[meta_at..meta_at + 4].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), meta_at + 4 + meta_len);
        let meta: serde_json::Value = serde_json::from_slice(&bytes[meta_at + 4..]).unwrap();
        assert_eq!(meta["source_tag"], "siglip");
        assert_eq!(meta["fps"], 24.0);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut bytes = encode_embeddings(&sample()).unwrap();
        bytes[3] = b'0';
        assert!(matches!(decode_embeddings(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncation_is_io_error() {
        let bytes = encode_embeddings(&sample()).unwrap();
        for cut in [2, 10, HEADER_LEN + 5, bytes.len() - 1] {
            match decode_embeddings(&bytes[..cut]) {
                Err(Error::Io(e)) => assert_eq!(e.kind(), io::ErrorKind::UnexpectedEof),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn too_few_frames_is_domain_error() {
        let mut bytes = encode_embeddings(&sample()).unwrap();
        bytes[8..12].copy_from_slice(&1u32.to_le_bytes());
        assert!(matches!(decode_embeddings(&bytes), Err(Error::Domain(_))));
    }

    #[test]
    fn payload_size_for_81_by_1152() {
        let rows: Vec<Vec<f64>> = (0..81)
            .map(|k| (0..1152).map(|c| ((k * 1152 + c) % 7) as f64 - 3.0 + 0.5).collect())
            .collect();
        let seq = EmbeddingSequence::from_rows(rows, None, "siglip").unwrap();
        let bytes = encode_embeddings(&seq).unwrap();
        let payload_end = HEADER_LEN + 4 * 81 * 1152;
        let meta_len =
            u32::from_le_bytes(bytes[payload_end..payload_end + 4].try_into().unwrap()) as usize;
        assert_eq!(bytes.len() - HEADER_LEN - 4 - meta_len, 373_248);
    }

    #[test]
    fn accepts_extra_metadata_keys() {
        let seq = sample();
        let mut bytes = encode_embeddings(&seq).unwrap();
        let meta_at = HEADER_LEN + 4 * 6;
        let meta = br#"{"fps":24.0,"source_tag":"siglip","preprocess":"center-crop"}"#;
        bytes.truncate(meta_at);
        bytes.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        bytes.extend_from_slice(meta);
        assert_eq!(decode_embeddings(&bytes).unwrap(), seq);
    }
}
