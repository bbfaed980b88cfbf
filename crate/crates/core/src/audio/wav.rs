//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads 16- and 24-bit integer PCM and 32-bit IEEE float, including the
//! `WAVE_FORMAT_EXTENSIBLE` wrapper around those. Integer samples map to
//! `[-1, 1)` by dividing by `2^(bits-1)`.

use alloc::string::ToString;
use alloc::vec::Vec;

use super::RawAudio;
use crate::error::invalid;
use crate::{Error, Result};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

impl WavEncoding {
    fn bytes_per_sample(self) -> usize {
        match self {
            WavEncoding::Pcm16 => 2,
            WavEncoding::Pcm24 => 3,
            WavEncoding::Float32 => 4,
        }
    }
}

fn decode_err(offset: usize, reason: &str) -> Error {
    Error::Decode {
        offset,
        reason: reason.to_string(),
    }
}

fn u16_at(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| decode_err(at, "unexpected end of header"))
}

fn u32_at(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| decode_err(at, "unexpected end of header"))
}

struct Format {
    channels: usize,
    sample_rate: u32,
    encoding: WavEncoding,
}

fn parse_fmt(b: &[u8], start: usize, size: usize) -> Result<Format> {
    if size < 16 {
        return Err(decode_err(start, "fmt chunk shorter than 16 bytes"));
    }
    let mut tag = u16_at(b, start)?;
    let channels = u16_at(b, start + 2)? as usize;
    let sample_rate = u32_at(b, start + 4)?;
    let bits = u16_at(b, start + 14)?;
    if tag == FORMAT_EXTENSIBLE {
        if size < 40 {
            return Err(decode_err(
                start,
                "extensible fmt chunk shorter than 40 bytes",
            ));
        }
        // First two bytes of the sub-format GUID carry the real tag.
        tag = u16_at(b, start + 24)?;
    }
    let encoding = match (tag, bits) {
        (FORMAT_PCM, 16) => WavEncoding::Pcm16,
        (FORMAT_PCM, 24) => WavEncoding::Pcm24,
        (FORMAT_FLOAT, 32) => WavEncoding::Float32,
        (FORMAT_PCM, _) | (FORMAT_FLOAT, _) => {
            return Err(invalid!(
                "unsupported bit depth {bits} for format tag {tag:#06x}"
            ))
        }
        (other, _) => return Err(Error::UnsupportedEncoding(other)),
    };
    if channels == 0 {
        return Err(decode_err(start + 2, "zero channels"));
    }
    if sample_rate == 0 {
        return Err(decode_err(start + 4, "zero sample rate"));
    }
    Ok(Format {
        channels,
        sample_rate,
        encoding,
    })
}

/// Decodes a complete WAV file held in memory.
pub fn decode_wav(bytes: &[u8]) -> Result<RawAudio> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(decode_err(0, "not a RIFF/WAVE container"));
    }
    let mut format: Option<Format> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4)? as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if body + size > bytes.len() {
                    return Err(decode_err(bytes.len(), "truncated fmt chunk"));
                }
                format = Some(parse_fmt(bytes, body, size)?);
            }
            b"data" => {
                let fmt = format
                    .as_ref()
                    .ok_or_else(|| decode_err(pos, "data chunk before fmt chunk"))?;
                let available = bytes.len() - body;
                if size > available {
                    return Err(decode_err(
                        bytes.len(),
                        "truncated data chunk: declared length exceeds file",
                    ));
                }
                let frame_bytes = fmt.channels * fmt.encoding.bytes_per_sample();
                if size % frame_bytes != 0 {
                    return Err(decode_err(
                        body + size - size % frame_bytes,
                        "truncated data chunk: partial sample frame",
                    ));
                }
                return Ok(decode_samples(&bytes[body..body + size], fmt));
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Err(decode_err(
        bytes.len(),
        if format.is_some() {
            "missing data chunk"
        } else {
            "missing fmt chunk"
        },
    ))
}

fn decode_samples(data: &[u8], fmt: &Format) -> RawAudio {
    let width = fmt.encoding.bytes_per_sample();
    let frames = data.len() / (width * fmt.channels);
    let mut channels = alloc::vec![Vec::with_capacity(frames); fmt.channels];
    for (i, chunk) in data.chunks_exact(width).enumerate() {
        let value = match fmt.encoding {
            WavEncoding::Pcm16 => i16::from_le_bytes([chunk[0], chunk[1]]) as f64 / 32768.0,
            WavEncoding::Pcm24 => {
                // Sign-extend via the top byte of an i32.
                let v = i32::from_le_bytes([0, chunk[0], chunk[1], chunk[2]]) >> 8;
                v as f64 / 8_388_608.0
            }
            WavEncoding::Float32 => {
                f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64
            }
        };
        channels[i % fmt.channels].push(value);
    }
    RawAudio {
        channels,
        sample_rate: fmt.sample_rate,
    }
}

fn encode(raw: &RawAudio, encoding: WavEncoding) -> Result<Vec<u8>> {
    let n_ch = raw.channels.len();
    if n_ch == 0 || n_ch > u16::MAX as usize {
        return Err(invalid!("cannot encode {n_ch} channels"));
    }
    let frames = raw.frames();
    if raw.channels.iter().any(|c| c.len() != frames) {
        return Err(invalid!("channels have unequal lengths"));
    }
    let width = encoding.bytes_per_sample();
    let data_len = frames * n_ch * width;
    let (tag, bits) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 16u16),
        WavEncoding::Pcm24 => (FORMAT_PCM, 24),
        WavEncoding::Float32 => (FORMAT_FLOAT, 32),
    };
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&(n_ch as u16).to_le_bytes());
    out.extend_from_slice(&raw.sample_rate.to_le_bytes());
    out.extend_from_slice(&(raw.sample_rate * (n_ch * width) as u32).to_le_bytes());
    out.extend_from_slice(&((n_ch * width) as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for i in 0..frames {
        for ch in &raw.channels {
            let s = ch[i];
            match encoding {
                WavEncoding::Pcm16 => {
                    let v = libm::round(s.clamp(-1.0, 1.0) * 32768.0).clamp(-32768.0, 32767.0);
                    out.extend_from_slice(&(v as i16).to_le_bytes());
                }
                WavEncoding::Pcm24 => {
                    let v = libm::round(s.clamp(-1.0, 1.0) * 8_388_608.0)
                        .clamp(-8_388_608.0, 8_388_607.0) as i32;
                    out.extend_from_slice(&v.to_le_bytes()[..3]);
                }
                WavEncoding::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
            }
        }
    }
    Ok(out)
}

/// Encodes as 32-bit float WAV. Lossless for values representable as `f32`.
pub fn encode_wav_f32(raw: &RawAudio) -> Result<Vec<u8>> {
    encode(raw, WavEncoding::Float32)
}

/// Encodes as 16-bit PCM, rounding to the nearest step without dither.
pub fn encode_wav_pcm16(raw: &RawAudio) -> Result<Vec<u8>> {
    encode(raw, WavEncoding::Pcm16)
}
