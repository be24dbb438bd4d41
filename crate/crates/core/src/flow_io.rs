//! Dense flow fields, the Middlebury `.flo` interchange format and the
//! Middlebury colour-wheel visualisation.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `.flo` tag; the little-endian bytes of the float 202021.25.
pub const FLO_MAGIC: &[u8; 4] = b"PIEH";

/// Magnitudes above this are the conventional "unknown flow" marker.
pub const UNKNOWN_FLOW_THRESHOLD: f64 = 1e9;

/// A `width × height` grid of 2-D flow vectors stored as two planar channels
/// in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<T> {
    width: usize,
    height: usize,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> FlowField<T> {
    pub fn new(width: usize, height: usize, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParams(format!(
                "flow field dimensions must be positive, got {width}x{height}"
            )));
        }
        let n = width * height;
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidParams(format!(
                "channel lengths {}/{} do not match {width}x{height}",
                u.len(),
                v.len()
            )));
        }
        if let Some(index) = u.iter().chain(v.iter()).position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue { index: index % n });
        }
        Ok(Self {
            width,
            height,
            u,
            v,
        })
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if the dimensions are zero or `f` yields non-finite values.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (T, T)) -> Self {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self::new(width, height, u, v).expect("from_fn produced an invalid field")
    }

    pub fn constant(width: usize, height: usize, u: T, v: T) -> Self {
        Self::from_fn(width, height, |_, _| (u, v))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    /// Channel 0 is `u`, channel 1 is `v`.
    pub fn channel(&self, c: usize) -> &[T] {
        match c {
            0 => &self.u,
            1 => &self.v,
            _ => panic!("flow fields have two channels, asked for {c}"),
        }
    }

    pub fn at(&self, x: usize, y: usize) -> (T, T) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn into_channels(self) -> (Vec<T>, Vec<T>) {
        (self.u, self.v)
    }

    /// Element-wise conversion to another scalar type.
    pub fn cast<S: Scalar>(&self) -> FlowField<S> {
        let conv = |c: &[T]| c.iter().map(|&x| S::from_f64_lossy(x.to_f64_lossy())).collect();
        FlowField {
            width: self.width,
            height: self.height,
            u: conv(&self.u),
            v: conv(&self.v),
        }
    }

    /// Swaps the x and y axes. The flow components are swapped as well so
    /// that the result is the geometric transpose of the motion.
    pub fn transpose(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut u = Vec::with_capacity(w * h);
        let mut v = Vec::with_capacity(w * h);
        for x in 0..w {
            for y in 0..h {
                let i = y * w + x;
                u.push(self.v[i]);
                v.push(self.u[i]);
            }
        }
        FlowField {
            width: h,
            height: w,
            u,
            v,
        }
    }

    pub fn max_magnitude(&self) -> T {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(&a, &b)| a.hypot(b))
            .fold(T::zero(), T::max)
    }
}

fn le_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses a `.flo` byte stream.
pub fn read_flow(bytes: &[u8]) -> Result<FlowField<f32>> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedStream("missing tag"));
    }
    if &bytes[..4] != FLO_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < 12 {
        return Err(Error::TruncatedStream("missing dimensions"));
    }
    let width = le_u32(bytes, 4) as usize;
    let height = le_u32(bytes, 8) as usize;
    if width == 0 || height == 0 {
        return Err(Error::InvalidParams(format!(
            "flow file declares {width}x{height}"
        )));
    }
    let n = width
        .checked_mul(height)
        .ok_or(Error::TruncatedStream("dimensions overflow"))?;
    let body = &bytes[12..];
    if body.len() / 8 < n {
        return Err(Error::TruncatedStream("flow data shorter than declared"));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for (i, px) in body.chunks_exact(8).take(n).enumerate() {
        let a = f32::from_le_bytes(px[..4].try_into().unwrap());
        let b = f32::from_le_bytes(px[4..].try_into().unwrap());
        let bad = |x: f32| !x.is_finite() || f64::from(x).abs() > UNKNOWN_FLOW_THRESHOLD;
        if bad(a) || bad(b) {
            return Err(Error::NonFiniteValue { index: i });
        }
        u.push(a);
        v.push(b);
    }
    FlowField::new(width, height, u, v)
}

/// Serialises a field in `.flo` layout.
pub fn write_flow(field: &FlowField<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * field.len());
    out.extend_from_slice(FLO_MAGIC);
    out.extend_from_slice(&(field.width as u32).to_le_bytes());
    out.extend_from_slice(&(field.height as u32).to_le_bytes());
    for (a, b) in field.u.iter().zip(&field.v) {
        out.extend_from_slice(&a.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    out
}

pub fn load_flo(path: impl AsRef<Path>) -> Result<FlowField<f32>> {
    read_flow(&std::fs::read(path)?)
}

pub fn save_flo(path: impl AsRef<Path>, field: &FlowField<f32>) -> Result<()> {
    std::fs::write(path, write_flow(field))?;
    Ok(())
}

/// 8-bit interleaved RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Binary PPM (P6).
    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)
    }
}

// Segment lengths of the Middlebury colour wheel.
const RY: usize = 15;
const YG: usize = 6;
const GC: usize = 4;
const CB: usize = 11;
const BM: usize = 13;
const MR: usize = 6;

fn color_wheel() -> Vec<[f64; 3]> {
    let mut wheel = Vec::with_capacity(RY + YG + GC + CB + BM + MR);
    let ramp = |i: usize, n: usize| 255.0 * i as f64 / n as f64;
    for i in 0..RY {
        wheel.push([255.0, ramp(i, RY), 0.0]);
    }
    for i in 0..YG {
        wheel.push([255.0 - ramp(i, YG), 255.0, 0.0]);
    }
    for i in 0..GC {
        wheel.push([0.0, 255.0, ramp(i, GC)]);
    }
    for i in 0..CB {
        wheel.push([0.0, 255.0 - ramp(i, CB), 255.0]);
    }
    for i in 0..BM {
        wheel.push([ramp(i, BM), 0.0, 255.0]);
    }
    for i in 0..MR {
        wheel.push([255.0, 0.0, 255.0 - ramp(i, MR)]);
    }
    wheel
}

/// Colour-codes a flow vector already normalised by the display range.
pub(crate) fn flow_color(wheel: &[[f64; 3]], fx: f64, fy: f64) -> [u8; 3] {
    let ncols = wheel.len();
    let rad = fx.hypot(fy);
    let a = (-fy).atan2(-fx) / std::f64::consts::PI;
    let fk = (a + 1.0) / 2.0 * (ncols - 1) as f64;
    let k0 = (fk.floor() as usize).min(ncols - 1);
    let k1 = (k0 + 1) % ncols;
    let f = fk - k0 as f64;
    let mut px = [0u8; 3];
    for (c, out) in px.iter_mut().enumerate() {
        let col0 = wheel[k0][c] / 255.0;
        let col1 = wheel[k1][c] / 255.0;
        let mut col = (1.0 - f) * col0 + f * col1;
        if rad <= 1.0 {
            col = 1.0 - rad * (1.0 - col);
        } else {
            col *= 0.75;
        }
        *out = (255.0 * col).floor().clamp(0.0, 255.0) as u8;
    }
    px
}

/// Middlebury colour coding: hue from direction, saturation from magnitude
/// relative to `max_magnitude` (defaults to the field's largest vector).
/// Zero flow is white; vectors beyond the range are darkened.
pub fn visualize<T: Scalar>(field: &FlowField<T>, max_magnitude: Option<f64>) -> RgbImage {
    let wheel = color_wheel();
    let maxrad = max_magnitude.unwrap_or_else(|| field.max_magnitude().to_f64_lossy());
    let scale = if maxrad > 0.0 { 1.0 / maxrad } else { 0.0 };
    let mut data = Vec::with_capacity(3 * field.len());
    for (a, b) in field.u.iter().zip(&field.v) {
        let px = flow_color(&wheel, a.to_f64_lossy() * scale, b.to_f64_lossy() * scale);
        data.extend_from_slice(&px);
    }
    RgbImage {
        width: field.width,
        height: field.height,
        data,
    }
}
