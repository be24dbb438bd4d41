//! Lossless payload coding: an adaptive binary arithmetic coder driven by
//! an order-1 byte-context model, with a stored fallback for data it cannot
//! shrink.
//!
//! Stream layout: one mode byte (0 = stored, 1 = order-1 arithmetic), the
//! decoded length as an unsigned LEB128 varint, then the body.

use crate::error::{Error, Result};

const MODE_STORED: u8 = 0;
const MODE_ORDER1: u8 = 1;

/// A payload coder selectable by its mode byte.
pub trait EntropyBackend {
    fn mode(&self) -> u8;
    fn encode_body(&self, data: &[u8]) -> Vec<u8>;
    fn decode_body(&self, body: &[u8], len: usize) -> Result<Vec<u8>>;
}

pub struct Stored;

impl EntropyBackend for Stored {
    fn mode(&self) -> u8 {
        MODE_STORED
    }

    fn encode_body(&self, data: &[u8]) -> Vec<u8> {
        data.to_vec()
    }

    fn decode_body(&self, body: &[u8], len: usize) -> Result<Vec<u8>> {
        if body.len() != len {
            return Err(Error::corrupt(format!(
                "stored body is {} bytes, header says {len}",
                body.len()
            )));
        }
        Ok(body.to_vec())
    }
}

pub struct Order1Arithmetic;

impl EntropyBackend for Order1Arithmetic {
    fn mode(&self) -> u8 {
        MODE_ORDER1
    }

    fn encode_body(&self, data: &[u8]) -> Vec<u8> {
        let mut model = Order1Model::new();
        let mut enc = Encoder::new();
        for &byte in data {
            model.encode_byte(&mut enc, byte);
        }
        enc.finish()
    }

    fn decode_body(&self, body: &[u8], len: usize) -> Result<Vec<u8>> {
        let mut model = Order1Model::new();
        let mut dec = Decoder::new(body);
        let mut out = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            out.push(model.decode_byte(&mut dec));
            if dec.overrun > MAX_OVERRUN {
                return Err(Error::corrupt("arithmetic decoder ran past the end of its input"));
            }
        }
        Ok(out)
    }
}

// Zero bytes a legitimate stream may need beyond its end (the flush writes
// at least one of the four bytes the decoder preloads).
const MAX_OVERRUN: usize = 3;

/// Adaptive probability with a count-controlled learning rate.
#[derive(Clone, Copy)]
struct BitModel {
    /// P(bit = 1) scaled to 2^32.
    p: u32,
    n: u32,
}

const RATE_LIMIT: u32 = 60;

impl BitModel {
    const INIT: BitModel = BitModel { p: 1 << 31, n: 0 };

    #[inline]
    fn p16(&self) -> u32 {
        (self.p >> 16).clamp(1, 65535)
    }

    #[inline]
    fn update(&mut self, bit: u32) {
        let target: i64 = if bit == 1 { u32::MAX as i64 } else { 0 };
        let delta = (target - self.p as i64) * 2 / (2 * self.n as i64 + 3);
        self.p = (self.p as i64 + delta) as u32;
        if self.n < RATE_LIMIT {
            self.n += 1;
        }
    }
}

/// Bitwise order-1 model: the previous byte and the bits of the current
/// byte seen so far select one of 256 × 255 adaptive probabilities.
struct Order1Model {
    table: Vec<BitModel>,
    prev: usize,
}

impl Order1Model {
    fn new() -> Self {
        Self {
            table: vec![BitModel::INIT; 256 * 256],
            prev: 0,
        }
    }

    fn encode_byte(&mut self, enc: &mut Encoder, byte: u8) {
        let base = self.prev << 8;
        let mut node = 1usize;
        for i in (0..8).rev() {
            let bit = u32::from((byte >> i) & 1);
            let m = &mut self.table[base | node];
            enc.encode(bit, m.p16());
            m.update(bit);
            node = (node << 1) | bit as usize;
        }
        self.prev = byte as usize;
    }

    fn decode_byte(&mut self, dec: &mut Decoder) -> u8 {
        let base = self.prev << 8;
        let mut node = 1usize;
        for _ in 0..8 {
            let m = &mut self.table[base | node];
            let bit = dec.decode(m.p16());
            m.update(bit);
            node = (node << 1) | bit as usize;
        }
        let byte = (node & 0xff) as u8;
        self.prev = byte as usize;
        byte
    }
}

/// Carry-less binary arithmetic coder over a 32-bit interval.
struct Encoder {
    x1: u32,
    x2: u32,
    out: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Self {
            x1: 0,
            x2: u32::MAX,
            out: Vec::new(),
        }
    }

    #[inline]
    fn split(x1: u32, x2: u32, p16: u32) -> u32 {
        x1 + ((u64::from(x2 - x1) * u64::from(p16)) >> 16) as u32
    }

    /// Codes `bit` where `p16` is P(bit = 1) in units of 2^-16.
    #[inline]
    fn encode(&mut self, bit: u32, p16: u32) {
        let xmid = Self::split(self.x1, self.x2, p16);
        if bit == 1 {
            self.x2 = xmid;
        } else {
            self.x1 = xmid + 1;
        }
        while (self.x1 ^ self.x2) & 0xff00_0000 == 0 {
            self.out.push((self.x2 >> 24) as u8);
            self.x1 <<= 8;
            self.x2 = (self.x2 << 8) | 0xff;
        }
    }

    /// Emits the shortest byte prefix that, zero-extended, lies in
    /// `[x1, x2]`.
    fn finish(mut self) -> Vec<u8> {
        for n in 1..=4u32 {
            let mask = if n == 4 { 0 } else { u32::MAX >> (8 * n) };
            let Some(c) = self.x1.checked_add(mask).map(|v| v & !mask) else {
                continue;
            };
            if c <= self.x2 {
                for i in 0..n {
                    self.out.push((c >> (24 - 8 * i)) as u8);
                }
                return self.out;
            }
        }
        unreachable!("x1 itself is always a valid 4-byte flush")
    }
}

struct Decoder<'a> {
    x1: u32,
    x2: u32,
    x: u32,
    input: &'a [u8],
    pos: usize,
    overrun: usize,
}

impl<'a> Decoder<'a> {
    fn new(input: &'a [u8]) -> Self {
        let mut d = Self {
            x1: 0,
            x2: u32::MAX,
            x: 0,
            input,
            pos: 0,
            overrun: 0,
        };
        for _ in 0..4 {
            d.x = (d.x << 8) | d.next_byte();
        }
        d
    }

    #[inline]
    fn next_byte(&mut self) -> u32 {
        let b = self.input.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        if self.pos > self.input.len() {
            self.overrun += 1;
        }
        u32::from(b)
    }

    #[inline]
    fn decode(&mut self, p16: u32) -> u32 {
        let xmid = Encoder::split(self.x1, self.x2, p16);
        let bit = if self.x <= xmid {
            self.x2 = xmid;
            1
        } else {
            self.x1 = xmid + 1;
            0
        };
        while (self.x1 ^ self.x2) & 0xff00_0000 == 0 {
            self.x1 <<= 8;
            self.x2 = (self.x2 << 8) | 0xff;
            self.x = (self.x << 8) | self.next_byte();
        }
        bit
    }
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn get_varint(data: &[u8]) -> Result<(u64, usize)> {
    let mut v = 0u64;
    for (i, &b) in data.iter().enumerate().take(10) {
        v |= u64::from(b & 0x7f) << (7 * i);
        if b & 0x80 == 0 {
            return Ok((v, i + 1));
        }
    }
    Err(Error::corrupt("bad length varint"))
}

/// Compresses `data`, falling back to stored mode when coding would expand it.
pub fn entropy_encode(data: &[u8]) -> Vec<u8> {
    let coded = if data.is_empty() {
        None
    } else {
        Some(Order1Arithmetic.encode_body(data))
    };
    let (mode, body) = match coded {
        Some(body) if body.len() < data.len() => (MODE_ORDER1, body),
        _ => (MODE_STORED, data.to_vec()),
    };
    let mut out = Vec::with_capacity(body.len() + 11);
    out.push(mode);
    put_varint(&mut out, data.len() as u64);
    out.extend_from_slice(&body);
    out
}

/// Inverse of [`entropy_encode`].
pub fn entropy_decode(stream: &[u8]) -> Result<Vec<u8>> {
    entropy_decode_bounded(stream, usize::MAX)
}

/// [`entropy_decode`] refusing streams that declare more than `max_len`
/// decoded bytes.
pub fn entropy_decode_bounded(stream: &[u8], max_len: usize) -> Result<Vec<u8>> {
    let (&mode, rest) = stream
        .split_first()
        .ok_or_else(|| Error::corrupt("empty entropy stream"))?;
    let (len, used) = get_varint(rest)?;
    let len = usize::try_from(len).map_err(|_| Error::corrupt("length overflows"))?;
    if len > max_len {
        return Err(Error::corrupt(format!("declared length {len} exceeds limit {max_len}")));
    }
    let body = &rest[used..];
    match mode {
        MODE_STORED => Stored.decode_body(body, len),
        MODE_ORDER1 => Order1Arithmetic.decode_body(body, len),
        m => Err(Error::corrupt(format!("unknown entropy mode {m}"))),
    }
}
