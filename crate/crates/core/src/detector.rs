//! Marr-Hildreth edge detection with hysteresis on the between-pixel lattices.

use crate::edges::{Dir, EdgeSet, Edgel};
use crate::error::{Error, Result};
use crate::flow_io::FlowField;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Gaussian pre-smoothing standard deviation in pixels.
    pub sigma: f64,
    /// Seed threshold on the across-edgel gradient magnitude.
    pub t_high: f64,
    /// Continuation threshold; must be strictly below `t_high`.
    pub t_low: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            t_high: 4.0,
            t_low: 2.0,
        }
    }
}

impl DetectorParams {
    pub fn new(sigma: f64, t_high: f64, t_low: f64) -> Result<Self> {
        let p = Self {
            sigma,
            t_high,
            t_low,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.t_low.is_finite() || !self.t_high.is_finite() || self.t_low >= self.t_high {
            return Err(Error::InvalidParams(format!(
                "thresholds need t_low < t_high, got {} and {}",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }
}

/// Half-sample symmetric reflection of `i` into `0..n`.
fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - 1 - m) as usize
    } else {
        m as usize
    }
}

/// Sampled Gaussian truncated at `ceil(3 sigma)` taps per side, normalised
/// to unit sum. Index `r` of the result is offset `r - radius`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

fn smooth_channel<T: Scalar>(src: &[T], width: usize, height: usize, kernel: &[f64]) -> Vec<T> {
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0f64; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let xi = mirror(x as isize + t as isize - radius, width);
                acc += w * row[xi].to_f64_lossy();
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = Vec::with_capacity(src.len());
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                let yi = mirror(y as isize + t as isize - radius, height);
                acc += w * tmp[yi * width + x];
            }
            out.push(T::from_f64_lossy(acc));
        }
    }
    out
}

/// Separable Gaussian smoothing of both channels with mirrored boundaries.
pub fn gaussian_smooth<T: Scalar>(field: &FlowField<T>, sigma: f64) -> FlowField<T> {
    assert!(sigma > 0.0, "sigma must be positive");
    let kernel = gaussian_kernel(sigma);
    let (w, h) = (field.width(), field.height());
    let u = smooth_channel(field.u(), w, h, &kernel);
    let v = smooth_channel(field.v(), w, h, &kernel);
    FlowField::new(w, h, u, v).expect("smoothing preserves validity")
}

/// 5-point Laplacian with reflecting boundaries: out-of-domain neighbours
/// mirror the centre and contribute nothing.
pub fn laplacian<T: Scalar>(c: &[T], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            let centre = c[p].to_f64_lossy();
            let mut acc = 0.0;
            if x > 0 {
                acc += c[p - 1].to_f64_lossy() - centre;
            }
            if x + 1 < width {
                acc += c[p + 1].to_f64_lossy() - centre;
            }
            if y > 0 {
                acc += c[p - width].to_f64_lossy() - centre;
            }
            if y + 1 < height {
                acc += c[p + width].to_f64_lossy() - centre;
            }
            out[p] = acc;
        }
    }
    out
}

/// Intermediate results of [`detect_edges`], exposed for inspection.
#[derive(Debug, Clone)]
pub struct Detection {
    /// All zero-crossing edgels before thresholding.
    pub candidates: EdgeSet,
    /// Pooled across-edgel gradient magnitude on the vertical lattice.
    pub vertical_gradient: Vec<f64>,
    /// Pooled across-edgel gradient magnitude on the horizontal lattice.
    pub horizontal_gradient: Vec<f64>,
    /// Edgels kept by hysteresis.
    pub edges: EdgeSet,
}

impl Detection {
    pub fn gradient(&self, e: Edgel) -> f64 {
        match e {
            Edgel::Vertical(i, j) => {
                self.vertical_gradient[j * self.edges.vertical_dims().0 + i]
            }
            Edgel::Horizontal(i, j) => self.horizontal_gradient[j * self.edges.width() + i],
        }
    }
}

fn crosses(a: f64, b: f64) -> bool {
    // Zero is its own sign class, so an exact zero next to a non-zero value
    // counts as a crossing but two zeros do not.
    let sign = |x: f64| {
        if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        }
    };
    sign(a) != sign(b)
}

pub fn detect_edges<T: Scalar>(field: &FlowField<T>, params: &DetectorParams) -> Result<EdgeSet> {
    Ok(detect_edges_traced(field, params)?.edges)
}

/// [`detect_edges`] returning candidates and gradients as well.
pub fn detect_edges_traced<T: Scalar>(
    field: &FlowField<T>,
    params: &DetectorParams,
) -> Result<Detection> {
    params.validate()?;
    let (w, h) = (field.width(), field.height());
    let smooth = gaussian_smooth(field, params.sigma);
    let lu = laplacian(smooth.u(), w, h);
    let lv = laplacian(smooth.v(), w, h);
    let su = smooth.u();
    let sv = smooth.v();

    let mut candidates = EdgeSet::empty(w, h);
    let mut vertical_gradient = vec![0.0; w.saturating_sub(1) * h];
    let mut horizontal_gradient = vec![0.0; w * h.saturating_sub(1)];

    let consider = |a: usize, b: usize| -> (bool, f64) {
        let cand = crosses(lu[a], lu[b]) || crosses(lv[a], lv[b]);
        let gu = su[b].to_f64_lossy() - su[a].to_f64_lossy();
        let gv = sv[b].to_f64_lossy() - sv[a].to_f64_lossy();
        (cand, gu.hypot(gv))
    };
    for j in 0..h {
        for i in 0..w.saturating_sub(1) {
            let p = j * w + i;
            let (cand, g) = consider(p, p + 1);
            vertical_gradient[j * (w - 1) + i] = g;
            candidates.set_vertical(i, j, cand);
        }
    }
    for j in 0..h.saturating_sub(1) {
        for i in 0..w {
            let p = j * w + i;
            let (cand, g) = consider(p, p + w);
            horizontal_gradient[j * w + i] = g;
            candidates.set_horizontal(i, j, cand);
        }
    }

    let mut det = Detection {
        edges: EdgeSet::empty(w, h),
        candidates,
        vertical_gradient,
        horizontal_gradient,
    };
    hysteresis(&mut det, params);
    Ok(det)
}

fn hysteresis(det: &mut Detection, params: &DetectorParams) {
    let mut stack: Vec<Edgel> = det
        .candidates
        .edgels()
        .filter(|&e| det.gradient(e) > params.t_high)
        .collect();
    for &e in &stack {
        det.edges.set(e, true);
    }
    while let Some(e) = stack.pop() {
        for (vx, vy) in EdgeSet::endpoints(e) {
            for d in Dir::ALL {
                let Some(n) = det.candidates.edgel_at(vx, vy, d) else {
                    continue;
                };
                if det.candidates.get(n) && !det.edges.get(n) && det.gradient(n) > params.t_low {
                    det.edges.set(n, true);
                    stack.push(n);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_field(contrast: f64) -> FlowField<f64> {
        FlowField::from_fn(8, 8, |x, _| (if x < 4 { 0.0 } else { contrast }, 0.0))
    }

    /// Dense direct 1-D convolution with explicit mirror padding, independent
    /// of the separable implementation.
    fn dense_convolve_row(row: &[f64], sigma: f64) -> Vec<f64> {
        let r = (3.0 * sigma).ceil() as isize;
        let n = row.len() as isize;
        let mut padded = Vec::new();
        for i in -r..n + r {
            let mut k = i;
            while k < 0 || k >= n {
                k = if k < 0 { -k - 1 } else { 2 * n - k - 1 };
            }
            padded.push(row[k as usize]);
        }
        let weights: Vec<f64> = (-r..=r)
            .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        (0..row.len())
            .map(|i| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w / total * padded[i + t])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn kernel_is_normalised_and_truncated() {
        let k = gaussian_kernel(0.5);
        assert_eq!(k.len(), 5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[4]);
        assert_eq!(gaussian_kernel(1.2).len(), 2 * 4 + 1);
    }

    #[test]
    fn constant_field_is_unchanged() {
        let f = FlowField::<f64>::constant(5, 4, 2.5, -1.0);
        let s = gaussian_smooth(&f, 0.7);
        assert!(s.u().iter().all(|&x| (x - 2.5).abs() < 1e-12));
        assert!(s.v().iter().all(|&x| (x + 1.0).abs() < 1e-12));
    }

    #[test]
    fn impulse_matches_dense_convolution() {
        let f = FlowField::<f64>::new(3, 1, vec![0.0, 1.0, 0.0], vec![0.0; 3]).unwrap();
        let s = gaussian_smooth(&f, 0.5);
        let oracle = dense_convolve_row(&[0.0, 1.0, 0.0], 0.5);
        for (a, b) in s.u().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-14);
        }
        // Centre value is the centre kernel weight: 1 / (1 + 2e^-2 + 2e^-8).
        let centre = 1.0 / (1.0 + 2.0 * (-2.0f64).exp() + 2.0 * (-8.0f64).exp());
        assert!((s.u()[1] - centre).abs() < 1e-14);
    }

    #[test]
    fn symmetric_input_gives_symmetric_output() {
        let row = [0.0, 3.0, 1.0, 7.0, 1.0, 3.0, 0.0];
        let f = FlowField::<f64>::new(7, 1, row.to_vec(), vec![0.0; 7]).unwrap();
        let s = gaussian_smooth(&f, 1.0);
        for i in 0..7 {
            assert!((s.u()[i] - s.u()[6 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_no_edges() {
        let f = FlowField::<f64>::constant(8, 8, 3.0, 1.0);
        assert!(detect_edges(&f, &DetectorParams::default()).unwrap().is_empty());
    }

    #[test]
    fn step_edge_is_found() {
        let e = detect_edges(&step_field(10.0), &DetectorParams::default()).unwrap();
        for j in 0..8 {
            for i in 0..7 {
                assert_eq!(e.vertical(i, j), i == 3, "vertical edgel ({i},{j})");
            }
        }
        assert_eq!(e.horizontal_bits().iter().filter(|&&b| b).count(), 0);
    }

    #[test]
    fn high_seed_threshold_suppresses_everything() {
        let p = DetectorParams::new(0.5, 100.0, 2.0).unwrap();
        assert!(detect_edges(&step_field(10.0), &p).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DetectorParams::new(0.0, 4.0, 2.0).is_err());
        assert!(DetectorParams::new(0.5, 2.0, 2.0).is_err());
        assert!(DetectorParams::new(0.5, 2.0, 4.0).is_err());
    }

    #[test]
    fn mirror_folds_repeatedly() {
        assert_eq!(mirror(-1, 3), 0);
        assert_eq!(mirror(-2, 3), 1);
        assert_eq!(mirror(3, 3), 2);
        assert_eq!(mirror(4, 3), 1);
        assert_eq!(mirror(-2, 1), 0);
        assert_eq!(mirror(2, 1), 0);
    }
}
