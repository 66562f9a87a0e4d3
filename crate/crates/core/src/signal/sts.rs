//! `.sts` recording container.
//!
//! Little-endian layout:
//!
//! ```text
//! "STSQ1"            5 bytes
//! version            u8 (= 1)
//! N, T, D            u32 each
//! sample_rate        f64
//! N channel names    u16 byte length + UTF-8
//! N·T·D samples      f32, ordered [channel][epoch][sample]
//! ```

use std::path::Path;

use super::Recording;
use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, ByteReader};

const MAGIC: &[u8; 5] = b"STSQ1";
const VERSION: u8 = 1;

pub fn encode_recording(rec: &Recording) -> Vec<u8> {
    let mut out = Vec::with_capacity(30 + rec.values().len() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for dim in [rec.n_channels(), rec.n_epochs(), rec.samples_per_epoch()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend_from_slice(&rec.sample_rate().to_le_bytes());
    for name in rec.channel_names() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for v in rec.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_recording(bytes: &[u8], origin: &str) -> Result<Recording> {
    let mut r = ByteReader::new(bytes, origin);
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::BadMagic {
            path: origin.to_string(),
            expected: "STSQ1",
        });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            format: "sts",
            version: version.into(),
        });
    }
    let n = r.u32()? as usize;
    let t = r.u32()? as usize;
    let d = r.u32()? as usize;
    let sample_rate = r.f64()?;
    let mut names = Vec::with_capacity(n.min(4096));
    for _ in 0..n {
        let len = r.u16()? as usize;
        let raw = r.take(len)?;
        let name = std::str::from_utf8(raw).map_err(|_| Error::Parse {
            file: origin.to_string(),
            line: 0,
            msg: "channel name is not UTF-8".into(),
        })?;
        names.push(name.to_string());
    }
    let count = n
        .checked_mul(t)
        .and_then(|x| x.checked_mul(d))
        .ok_or_else(|| Error::InvalidInput("recording dimensions overflow".into()))?;
    let payload = r.rest();
    if payload.len() != count * 4 {
        return Err(Error::Truncated {
            what: format!("{origin} sample payload ({n}x{t}x{d})"),
            expected: count * 4,
            found: payload.len(),
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Recording::new(names, t, d, sample_rate, values)
}

pub fn load_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_recording(&bytes, &path.display().to_string())
}

pub fn write_recording(path: impl AsRef<Path>, rec: &Recording) -> Result<()> {
    write_atomic(path.as_ref(), &encode_recording(rec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Recording {
        let values: Vec<f32> = (0..24).map(|i| i as f32 * 0.5 - 3.0).collect();
        Recording::new(vec!["C3".into(), "C4".into()], 3, 4, 200.0, values).unwrap()
    }

    #[test]
    fn decodes_well_formed_file() {
        let rec = small();
        let bytes = encode_recording(&rec);
        let back = decode_recording(&bytes, "mem").unwrap();
        assert_eq!(back.n_channels(), 2);
        assert_eq!(back.n_epochs(), 3);
        assert_eq!(back.samples_per_epoch(), 4);
        assert_eq!(back, rec);
        assert_eq!(back.epoch(1, 2), &rec.values()[20..24]);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = encode_recording(&small());
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(
            decode_recording(&bytes, "mem"),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn truncated_header() {
        let bytes = encode_recording(&small());
        assert!(matches!(
            decode_recording(&bytes[..12], "mem"),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_recording(&small());
        bytes[0] = b'X';
        assert!(matches!(
            decode_recording(&bytes, "mem"),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn nan_names_channel_and_epoch() {
        let mut bytes = encode_recording(&small());
        // channel 1, epoch 2, sample 1 -> flat index 21
        let header = bytes.len() - 24 * 4;
        let at = header + 21 * 4;
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode_recording(&bytes, "mem") {
            Err(Error::NonFiniteSample {
                channel,
                name,
                epoch,
            }) => {
                assert_eq!((channel, name.as_str(), epoch), (1, "C4", 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn byte_exact_round_trip() {
        let bytes = encode_recording(&small());
        let again = encode_recording(&decode_recording(&bytes, "mem").unwrap());
        assert_eq!(bytes, again);
    }
}
