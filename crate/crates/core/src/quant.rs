//! Uniform scalar quantisation with both range endpoints preserved.

use crate::error::{Error, Result};
use crate::flow_io::FlowField;
use crate::scalar::Scalar;

fn check_levels(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 levels, got {k}")));
    }
    Ok(())
}

/// Interval width `a = (max - min) / (k - 1)`, in double precision.
pub fn step(min: f64, max: f64, k: u32) -> f64 {
    (max - min) / f64::from(k - 1)
}

/// Maps `x ∈ [min, max]` to `floor((x - min) / a + 1/2)`.
///
/// A degenerate range (`min == max`) always yields 0. Values outside the
/// range by more than `1e-6 (max - min)` are rejected.
pub fn quantise<T: Scalar>(x: T, min: T, max: T, k: u32) -> Result<u32> {
    check_levels(k)?;
    let (x, lo, hi) = (x.to_f64_lossy(), min.to_f64_lossy(), max.to_f64_lossy());
    let out_of_range = || Error::OutOfRange {
        value: x,
        min: lo,
        max: hi,
    };
    if lo.is_nan() || hi.is_nan() || lo > hi || !x.is_finite() {
        return Err(out_of_range());
    }
    if lo == hi {
        if (x - lo).abs() > 1e-6 * lo.abs().max(1.0) {
            return Err(out_of_range());
        }
        return Ok(0);
    }
    let slack = 1e-6 * (hi - lo);
    if x < lo - slack || x > hi + slack {
        return Err(out_of_range());
    }
    // (x - min) / a with the multiplication first: ties stay exact.
    let q = ((x - lo) * f64::from(k - 1) / (hi - lo) + 0.5).floor();
    Ok(q.clamp(0.0, f64::from(k - 1)) as u32)
}

/// Reconstruction level `min + a q`; the top level returns `max` itself so
/// the range never shrinks under repeated quantisation.
pub fn dequantise<T: Scalar>(q: u32, min: T, max: T, k: u32) -> Result<T> {
    check_levels(k)?;
    if q >= k {
        return Err(Error::OutOfRange {
            value: f64::from(q),
            min: 0.0,
            max: f64::from(k - 1),
        });
    }
    if q == 0 {
        return Ok(min);
    }
    if q == k - 1 {
        return Ok(max);
    }
    let (lo, hi) = (min.to_f64_lossy(), max.to_f64_lossy());
    Ok(T::from_f64_lossy(lo + step(lo, hi, k) * f64::from(q)))
}

/// Exact extrema of channel `c` (0 = u, 1 = v).
pub fn channel_range<T: Scalar>(field: &FlowField<T>, c: usize) -> (T, T) {
    let data = field.channel(c);
    data.iter()
        .skip(1)
        .fold((data[0], data[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Per-channel quantisation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelQuant<T> {
    pub min: T,
    pub max: T,
    pub k: u32,
}

impl<T: Scalar> ChannelQuant<T> {
    pub fn of_channel(field: &FlowField<T>, c: usize, k: u32) -> Self {
        let (min, max) = channel_range(field, c);
        Self { min, max, k }
    }

    pub fn quantise(&self, x: T) -> Result<u32> {
        quantise(x, self.min, self.max, self.k)
    }

    pub fn dequantise(&self, q: u32) -> Result<T> {
        dequantise(q, self.min, self.max, self.k)
    }

    /// Quantise then dequantise, clamping into range first.
    pub fn snap(&self, x: T) -> T {
        let x = x.max(self.min).min(self.max);
        self.dequantise(self.quantise(x).expect("clamped value in range"))
            .expect("quantiser output in range")
    }
}

/// Replaces every value by its reconstruction under per-channel uniform
/// quantisation with `k` levels over the channel's own range.
pub fn snap_field<T: Scalar>(field: &FlowField<T>, k: u32) -> Result<FlowField<T>> {
    check_levels(k)?;
    let qu = ChannelQuant::of_channel(field, 0, k);
    let qv = ChannelQuant::of_channel(field, 1, k);
    let u = field.u().iter().map(|&x| qu.snap(x)).collect();
    let v = field.v().iter().map(|&x| qv.snap(x)).collect();
    FlowField::new(field.width(), field.height(), u, v)
}
