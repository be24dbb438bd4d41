//! `.fcf` file layout: a raw little-endian header, the entropy-coded
//! payload, and a CRC-32 of everything before it. See `docs/format.md`.

use crate::chain::{self, ChainStream};
use crate::entropy;
use crate::error::{Error, Result};
use crate::mask::MaskSpec;

pub const MAGIC: &[u8; 4] = b"FLWC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 47;
const CRC_LEN: usize = 4;
/// Largest image the container accepts, in pixels.
pub const MAX_PIXELS: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub width: u32,
    pub height: u32,
    pub spacing: u16,
    pub offset: u16,
    /// Quantisation levels, 2..=65536.
    pub k: u32,
    /// Per-channel (u, v) range.
    pub min: [f32; 2],
    pub max: [f32; 2],
    pub n_starts: u32,
    pub n_symbols: u32,
    pub n_segments: u32,
}

impl Header {
    pub fn mask_spec(&self) -> Result<MaskSpec> {
        MaskSpec::from_grid(usize::from(self.spacing), usize::from(self.offset))
    }

    fn grid_dims(&self) -> Result<(usize, usize)> {
        Ok(self.mask_spec()?.grid_dims(self.width as usize, self.height as usize))
    }

    /// Quantised values stored per channel.
    pub fn values_per_channel(&self) -> Result<usize> {
        Ok(self
            .mask_spec()?
            .point_count(self.width as usize, self.height as usize)
            + self.n_segments as usize)
    }

    fn code_width(&self) -> usize {
        if self.k <= 256 {
            1
        } else {
            2
        }
    }

    /// Exact decoded payload size implied by the counts.
    pub fn payload_len(&self) -> Result<usize> {
        let chain = chain::body_len(self.n_starts as usize, self.n_symbols as usize);
        Ok(chain + 2 * self.values_per_channel()? * self.code_width())
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::corrupt(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("zero dimension {}x{}", self.width, self.height));
        }
        if u64::from(self.width) * u64::from(self.height) > MAX_PIXELS {
            return bad(format!("{}x{} exceeds {MAX_PIXELS} pixels", self.width, self.height));
        }
        if !(2..=65536).contains(&self.k) {
            return bad(format!("quantisation levels {} out of range", self.k));
        }
        for c in 0..2 {
            if !(self.min[c].is_finite() && self.max[c].is_finite() && self.min[c] <= self.max[c]) {
                return bad(format!("channel {c} range [{}, {}] invalid", self.min[c], self.max[c]));
            }
        }
        if self.spacing == 0 || self.offset >= self.spacing {
            return bad(format!("mask grid spacing {} offset {}", self.spacing, self.offset));
        }
        Ok(())
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.spacing.to_le_bytes());
        out.extend_from_slice(&self.offset.to_le_bytes());
        out.extend_from_slice(&((self.k - 1) as u16).to_le_bytes());
        for c in 0..2 {
            out.extend_from_slice(&self.min[c].to_le_bytes());
            out.extend_from_slice(&self.max[c].to_le_bytes());
        }
        out.extend_from_slice(&self.n_starts.to_le_bytes());
        out.extend_from_slice(&self.n_symbols.to_le_bytes());
        out.extend_from_slice(&self.n_segments.to_le_bytes());
    }

    fn read(b: &[u8]) -> Self {
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let u16_at = |i: usize| u16::from_le_bytes(b[i..i + 2].try_into().unwrap());
        let f32_at = |i: usize| f32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        Header {
            width: u32_at(5),
            height: u32_at(9),
            spacing: u16_at(13),
            offset: u16_at(15),
            k: u32::from(u16_at(17)) + 1,
            min: [f32_at(19), f32_at(27)],
            max: [f32_at(23), f32_at(31)],
            n_starts: u32_at(35),
            n_symbols: u32_at(39),
            n_segments: u32_at(43),
        }
    }
}

/// Everything after the header: the chain code and the quantised values,
/// channel by channel (grid points in raster order, then segment averages).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub chain: ChainStream,
    pub codes: [Vec<u32>; 2],
}

fn check_consistent(h: &Header, p: &Payload) -> Result<()> {
    h.validate().map_err(|e| Error::InvalidParams(e.to_string()))?;
    let inconsistent = |m: String| Err(Error::InvalidParams(m));
    if h.n_starts as usize != p.chain.starts.len() || h.n_symbols as usize != p.chain.symbols.len() {
        return inconsistent("chain counts disagree with the header".into());
    }
    let per_channel = h.values_per_channel()?;
    for (c, codes) in p.codes.iter().enumerate() {
        if codes.len() != per_channel {
            return inconsistent(format!(
                "channel {c} has {} codes, header implies {per_channel}",
                codes.len()
            ));
        }
        if let Some(&q) = codes.iter().find(|&&q| q >= h.k) {
            return inconsistent(format!("code {q} not below k = {}", h.k));
        }
    }
    Ok(())
}

/// Median edge detector: planar prediction clamped to the range of the
/// left and upper neighbours.
fn med(left: u32, up: u32, up_left: u32) -> u32 {
    let (lo, hi) = (left.min(up), left.max(up));
    if up_left >= hi {
        lo
    } else if up_left <= lo {
        hi
    } else {
        left + up - up_left
    }
}

fn predict(codes: &[u32], i: usize, cols: usize) -> u32 {
    match (i % cols, i / cols) {
        (0, 0) => 0,
        (_, 0) => codes[i - 1],
        (0, _) => codes[i - cols],
        _ => med(codes[i - 1], codes[i - cols], codes[i - cols - 1]),
    }
}

/// Bijection on `0..k` taking the wrapped prediction error to small values.
fn zigzag(q: u32, pred: u32, k: u32) -> u32 {
    let r = i64::from((q + k - pred) % k);
    let s = if r > i64::from((k - 1) / 2) { r - i64::from(k) } else { r };
    if s >= 0 {
        (2 * s) as u32
    } else {
        (-2 * s - 1) as u32
    }
}

fn unzigzag(z: u32, pred: u32, k: u32) -> u32 {
    let s = if z.is_multiple_of(2) {
        i64::from(z / 2)
    } else {
        -i64::from(z / 2) - 1
    };
    (i64::from(pred) + s).rem_euclid(i64::from(k)) as u32
}

/// Replaces the grid-point codes (the first `cols · rows` entries) by
/// prediction residuals; segment averages are stored as they are.
fn to_residuals(codes: &[u32], cols: usize, rows: usize, k: u32) -> Vec<u32> {
    let n = cols * rows;
    let mut out = codes.to_vec();
    for i in 0..n {
        out[i] = zigzag(codes[i], predict(codes, i, cols), k);
    }
    out
}

fn from_residuals(stored: &mut [u32], cols: usize, rows: usize, k: u32) {
    for i in 0..cols * rows {
        let pred = predict(stored, i, cols);
        stored[i] = unzigzag(stored[i], pred, k);
    }
}

pub fn pack(header: &Header, payload: &Payload) -> Result<Vec<u8>> {
    check_consistent(header, payload)?;
    let mut raw = Vec::with_capacity(header.payload_len()?);
    chain::write_body(&payload.chain, &mut raw)?;
    let (cols, rows) = header.grid_dims()?;
    for codes in &payload.codes {
        for q in to_residuals(codes, cols, rows, header.k) {
            if header.code_width() == 1 {
                raw.push(q as u8);
            } else {
                raw.extend_from_slice(&(q as u16).to_le_bytes());
            }
        }
    }
    debug_assert_eq!(raw.len(), header.payload_len()?);

    let mut out = Vec::with_capacity(HEADER_LEN + raw.len() + 16);
    header.write(&mut out);
    out.extend_from_slice(&entropy::entropy_encode(&raw));
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn unpack(bytes: &[u8]) -> Result<(Header, Payload)> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN + CRC_LEN {
        return Err(Error::corrupt("file shorter than header"));
    }
    if bytes[4] != VERSION {
        return Err(Error::VersionMismatch(bytes[4]));
    }
    let (body, crc) = bytes.split_at(bytes.len() - CRC_LEN);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(Error::corrupt("checksum mismatch"));
    }
    let header = Header::read(&body[..HEADER_LEN]);
    header.validate()?;
    let expected = header.payload_len()?;
    let raw = entropy::entropy_decode_bounded(&body[HEADER_LEN..], expected)?;
    if raw.len() != expected {
        return Err(Error::corrupt(format!(
            "payload is {} bytes, header implies {expected}",
            raw.len()
        )));
    }
    let chain_len = chain::body_len(header.n_starts as usize, header.n_symbols as usize);
    let chain = chain::read_body(&raw[..chain_len], header.n_starts as usize, header.n_symbols as usize)
        .map_err(|e| Error::corrupt(e.to_string()))?;
    let per_channel = header.values_per_channel()?;
    let mut rest = &raw[chain_len..];
    let mut codes = [Vec::with_capacity(per_channel), Vec::with_capacity(per_channel)];
    for channel in &mut codes {
        for _ in 0..per_channel {
            let q = if header.code_width() == 1 {
                let q = u32::from(rest[0]);
                rest = &rest[1..];
                q
            } else {
                let q = u32::from(u16::from_le_bytes([rest[0], rest[1]]));
                rest = &rest[2..];
                q
            };
            if q >= header.k {
                return Err(Error::corrupt(format!("code {q} not below k = {}", header.k)));
            }
            channel.push(q);
        }
    }
    let (cols, rows) = header.grid_dims()?;
    for channel in &mut codes {
        from_residuals(channel, cols, rows, header.k);
    }
    Ok((header, Payload { chain, codes }))
}
