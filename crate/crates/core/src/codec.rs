//! End-to-end encoder/decoder and rate-distortion evaluation.

use std::io::Write;

use rayon::prelude::*;

use crate::chain::{decode_edges, encode_edges};
use crate::container::{self, Header, Payload};
use crate::detector::{detect_edges, DetectorParams};
use crate::error::{Error, Result};
use crate::flow_io::FlowField;
use crate::inpaint::{solve, InpaintProblem, SolverConfig};
use crate::mask::{build_mask, segment_averages, MaskSpec};
use crate::quant::{channel_range, snap_field, ChannelQuant};
use crate::scalar::Scalar;

/// Levels of the 8-bit reference representation inputs are snapped to.
pub const REFERENCE_LEVELS: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeParams {
    pub detector: DetectorParams,
    /// Target fraction of pixels on the mask grid, in (0, 1].
    pub density: f64,
    /// Quantisation levels for stored values.
    pub k: u32,
    pub solver: SolverConfig,
    /// Snap the input to its 8-bit representation before encoding.
    pub snap_input: bool,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self {
            detector: DetectorParams::default(),
            density: 0.01,
            k: 64,
            solver: SolverConfig::default(),
            snap_input: true,
        }
    }
}

/// The field the codec actually compresses: the input snapped to 256
/// levels per channel (or the input itself when snapping is off).
pub fn reference_field(field: &FlowField<f32>, params: &EncodeParams) -> Result<FlowField<f32>> {
    if params.snap_input {
        snap_field(field, REFERENCE_LEVELS)
    } else {
        Ok(field.clone())
    }
}

/// The field expressed in units of its 8-bit code step per channel, which
/// is the scale the detector thresholds refer to.
pub fn code_space<T: Scalar>(field: &FlowField<T>) -> FlowField<f64> {
    let scale = |c: usize| {
        let (lo, hi) = channel_range(field, c);
        let (lo, hi) = (lo.to_f64_lossy(), hi.to_f64_lossy());
        let a = (hi - lo) / f64::from(REFERENCE_LEVELS - 1);
        (lo, if a > 0.0 { a } else { 1.0 })
    };
    let (su, sv) = (scale(0), scale(1));
    let w = field.width();
    FlowField::from_fn(w, field.height(), |x, y| {
        let (u, v) = field.at(x, y);
        ((u.to_f64_lossy() - su.0) / su.1, (v.to_f64_lossy() - sv.0) / sv.1)
    })
}

pub fn encode(field: &FlowField<f32>, params: &EncodeParams) -> Result<Vec<u8>> {
    if !(2..=65536).contains(&params.k) {
        return Err(Error::InvalidParams(format!("k must lie in 2..=65536, got {}", params.k)));
    }
    let reference = reference_field(field, params)?;
    let (w, h) = (reference.width(), reference.height());
    if w > 65536 || h > 65536 || (w * h) as u64 > container::MAX_PIXELS {
        return Err(Error::InvalidParams(format!(
            "{w}x{h} exceeds 65536 pixels per side or {} in total",
            container::MAX_PIXELS
        )));
    }
    let work = reference.cast::<f64>();

    let edges = detect_edges(&code_space(&work), &params.detector)?;
    let chain = encode_edges(&edges);
    let spec = MaskSpec::from_density(params.density)?;
    if spec.spacing() > usize::from(u16::MAX) {
        return Err(Error::InvalidParams(format!("density {} too small", params.density)));
    }
    let layout = build_mask(w, h, &spec, &edges);
    let averages = segment_averages(&work, &layout);

    let quant: [ChannelQuant<f64>; 2] = [0, 1].map(|c| ChannelQuant::of_channel(&work, c, params.k));
    let mut codes = [Vec::new(), Vec::new()];
    for (c, q) in quant.iter().enumerate() {
        let data = work.channel(c);
        for &p in &layout.points {
            codes[c].push(q.quantise(data[p])?);
        }
        for avg in &averages {
            let x = if c == 0 { avg.0 } else { avg.1 };
            codes[c].push(q.quantise(x.clamp(q.min, q.max))?);
        }
    }

    let (min_u, max_u) = channel_range(&reference, 0);
    let (min_v, max_v) = channel_range(&reference, 1);
    let header = Header {
        width: w as u32,
        height: h as u32,
        spacing: spec.spacing() as u16,
        offset: spec.offset() as u16,
        k: params.k,
        min: [min_u, min_v],
        max: [max_u, max_v],
        n_starts: chain.starts.len() as u32,
        n_symbols: chain.symbols.len() as u32,
        n_segments: layout.segments.len() as u32,
    };
    container::pack(&header, &Payload { chain, codes })
}

pub fn decode(bytes: &[u8]) -> Result<FlowField<f32>> {
    decode_with(bytes, &SolverConfig::default())
}

pub fn decode_with(bytes: &[u8], solver: &SolverConfig) -> Result<FlowField<f32>> {
    let (header, payload) = container::unpack(bytes)?;
    let (w, h) = (header.width as usize, header.height as usize);
    let edges = decode_edges(&payload.chain, w, h)?;
    let layout = build_mask(w, h, &header.mask_spec()?, &edges);
    if layout.segments.len() != header.n_segments as usize {
        return Err(Error::corrupt(format!(
            "edges imply {} isolated segments, header stores {}",
            layout.segments.len(),
            header.n_segments
        )));
    }
    let quant: [ChannelQuant<f64>; 2] = [0, 1].map(|c| ChannelQuant {
        min: f64::from(header.min[c]),
        max: f64::from(header.max[c]),
        k: header.k,
    });
    let mut known = Vec::with_capacity(layout.value_count());
    for (i, p) in layout.known_pixels().enumerate() {
        let u = quant[0].dequantise(payload.codes[0][i])?;
        let v = quant[1].dequantise(payload.codes[1][i])?;
        known.push((p, [u, v]));
    }
    let problem = InpaintProblem::new(edges, known)?;
    Ok(solve(&problem, solver)?.cast())
}

/// Maps a value to the (unclamped) 8-bit code grid of a reference channel.
/// A constant reference channel uses unit steps.
fn code_of(x: f64, min: f64, max: f64) -> f64 {
    let a = (max - min) / f64::from(REFERENCE_LEVELS - 1);
    let a = if a > 0.0 { a } else { 1.0 };
    ((x - min) / a + 0.5).floor()
}

/// PSNR in 8-bit code space of the reference, peak 255; `+∞` for a perfect
/// reconstruction.
pub fn psnr<T: Scalar, S: Scalar>(reference: &FlowField<T>, reconstruction: &FlowField<S>) -> Result<f64> {
    if (reference.width(), reference.height()) != (reconstruction.width(), reconstruction.height()) {
        return Err(Error::DimensionMismatch(
            reference.width(),
            reference.height(),
            reconstruction.width(),
            reconstruction.height(),
        ));
    }
    let mut sq = 0.0;
    for c in 0..2 {
        let (lo, hi) = channel_range(reference, c);
        let (lo, hi) = (lo.to_f64_lossy(), hi.to_f64_lossy());
        for (&r, &x) in reference.channel(c).iter().zip(reconstruction.channel(c)) {
            let d = code_of(r.to_f64_lossy(), lo, hi) - code_of(x.to_f64_lossy(), lo, hi);
            sq += d * d;
        }
    }
    let mse = sq / (2 * reference.len()) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// One evaluated parameter combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub density: f64,
    pub k: u32,
    pub t_high: f64,
    pub t_low: f64,
    pub compressed_bytes: usize,
    /// `2 · width · height / compressed_bytes`: relative to the 8-bit,
    /// two-channel reference.
    pub ratio: f64,
    pub psnr_db: f64,
}

/// Encodes, decodes and scores `field` under `params`.
pub fn evaluate(field: &FlowField<f32>, params: &EncodeParams) -> Result<RatePoint> {
    let reference = reference_field(field, params)?;
    let bytes = encode(field, params)?;
    let recon = decode_with(&bytes, &params.solver)?;
    Ok(RatePoint {
        density: params.density,
        k: params.k,
        t_high: params.detector.t_high,
        t_low: params.detector.t_low,
        compressed_bytes: bytes.len(),
        ratio: (2 * field.len()) as f64 / bytes.len() as f64,
        psnr_db: psnr(&reference, &recon)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub densities: Vec<f64>,
    pub levels: Vec<u32>,
    /// `(t_high, t_low)` pairs.
    pub thresholds: Vec<(f64, f64)>,
    pub sigma: f64,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            densities: vec![0.002, 0.005, 0.01, 0.02, 0.05],
            levels: vec![16, 32, 64, 128, 256],
            thresholds: vec![(4.0, 2.0), (8.0, 4.0), (16.0, 8.0)],
            sigma: 0.5,
        }
    }
}

impl ParamGrid {
    pub fn params(&self, solver: SolverConfig) -> Result<Vec<EncodeParams>> {
        let mut out = Vec::new();
        for &density in &self.densities {
            for &k in &self.levels {
                for &(t_high, t_low) in &self.thresholds {
                    out.push(EncodeParams {
                        detector: DetectorParams::new(self.sigma, t_high, t_low)?,
                        density,
                        k,
                        solver,
                        snap_input: true,
                    });
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParams("empty parameter grid".into()));
        }
        Ok(out)
    }
}

/// Every evaluated grid point plus the selected point per target ratio.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub points: Vec<RatePoint>,
    pub curve: Vec<RatePoint>,
}

/// Best grid point (highest PSNR) among those reaching `target`.
pub fn select(points: &[RatePoint], target: f64) -> Result<RatePoint> {
    points
        .iter()
        .filter(|p| p.ratio >= target)
        .max_by(|a, b| {
            a.psnr_db
                .total_cmp(&b.psnr_db)
                .then(a.ratio.total_cmp(&b.ratio))
        })
        .copied()
        .ok_or(Error::NoFeasiblePoint { target })
}

/// Evaluates every grid combination in parallel, in grid order.
pub fn evaluate_grid(field: &FlowField<f32>, grid: &ParamGrid, solver: SolverConfig) -> Result<Vec<RatePoint>> {
    grid.params(solver)?
        .par_iter()
        .map(|p| evaluate(field, p))
        .collect()
}

/// Grid search: evaluates all combinations in parallel, then picks the best
/// point for each target ratio.
pub fn sweep(
    field: &FlowField<f32>,
    targets: &[f64],
    grid: &ParamGrid,
    solver: SolverConfig,
) -> Result<Sweep> {
    let points = evaluate_grid(field, grid, solver)?;
    let curve = targets
        .iter()
        .map(|&t| select(&points, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { points, curve })
}

pub const CSV_HEADER: &str = "density,k,t1,t2,bytes,ratio,psnr_db";

pub fn write_csv<W: Write>(mut w: W, points: &[RatePoint]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        let psnr = if p.psnr_db.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.4}", p.psnr_db)
        };
        writeln!(
            w,
            "{},{},{},{},{},{:.4},{}",
            p.density, p.k, p.t_high, p.t_low, p.compressed_bytes, p.ratio, psnr
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_identical_is_infinite() {
        let f = FlowField::<f32>::from_fn(5, 4, |x, y| (x as f32, y as f32 * 2.0));
        assert_eq!(psnr(&f, &f).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_full_scale_error_is_zero_db() {
        let a = FlowField::<f64>::new(2, 1, vec![0.0, 255.0], vec![0.0, 255.0]).unwrap();
        let b = FlowField::<f64>::new(2, 1, vec![255.0, 0.0], vec![255.0, 0.0]).unwrap();
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psnr_single_code_error() {
        let a = FlowField::<f64>::from_fn(10, 10, |x, y| ((x + 10 * y) as f64 * 255.0 / 99.0, 0.0));
        let mut u = a.u().to_vec();
        // Shift one value by exactly one code step.
        u[37] += 1.0 * 255.0 / 255.0 * (255.0 / 255.0);
        let b = FlowField::new(10, 10, u, a.v().to_vec()).unwrap();
        let expect = 10.0 * (255.0f64 * 255.0 * 200.0).log10();
        assert!((psnr(&a, &b).unwrap() - expect).abs() < 1e-9);
        assert!((expect - 71.14).abs() < 0.01);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = FlowField::<f32>::constant(2, 2, 0.0, 0.0);
        let b = FlowField::<f32>::constant(2, 3, 0.0, 0.0);
        assert!(matches!(psnr(&a, &b), Err(Error::DimensionMismatch(2, 2, 2, 3))));
    }

    #[test]
    fn constant_field_roundtrips_exactly() {
        let f = FlowField::<f32>::constant(20, 12, 1.25, -0.5);
        let p = EncodeParams {
            density: 0.01,
            k: 256,
            ..Default::default()
        };
        let bytes = encode(&f, &p).unwrap();
        let out = decode(&bytes).unwrap();
        assert_eq!(psnr(&f, &out).unwrap(), f64::INFINITY);
        assert_eq!(encode(&f, &p).unwrap(), bytes);
    }

    #[test]
    fn selection_prefers_psnr_among_feasible() {
        let mk = |ratio, psnr_db| RatePoint {
            density: 0.01,
            k: 16,
            t_high: 4.0,
            t_low: 2.0,
            compressed_bytes: 1,
            ratio,
            psnr_db,
        };
        let pts = [mk(100.0, 30.0), mk(50.0, 45.0), mk(200.0, 28.0)];
        assert_eq!(select(&pts, 80.0).unwrap().psnr_db, 30.0);
        assert_eq!(select(&pts, 10.0).unwrap().psnr_db, 45.0);
        assert!(matches!(select(&pts, 500.0), Err(Error::NoFeasiblePoint { .. })));
    }

    #[test]
    fn csv_layout() {
        let p = RatePoint {
            density: 0.005,
            k: 64,
            t_high: 4.0,
            t_low: 2.0,
            compressed_bytes: 321,
            ratio: 408.3,
            psnr_db: f64::INFINITY,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[p]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "density,k,t1,t2,bytes,ratio,psnr_db\n0.005,64,4,2,321,408.3000,inf\n");
    }
}
