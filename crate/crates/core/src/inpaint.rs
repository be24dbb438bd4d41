//! Edge-aware homogeneous diffusion inpainting.
//!
//! Unknown pixels satisfy the 5-point Laplace equation; neighbours outside
//! the image or across an edgel are dropped from the stencil (zero flux),
//! and known pixels are eliminated into the right-hand side. Each connected
//! component of the edgel-blocked pixel graph yields an independent SPD
//! block, solved separately with conjugate gradients.

use crate::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::flow_io::FlowField;
use crate::mask::label_components;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct InpaintProblem<T> {
    edges: EdgeSet,
    known: Vec<Option<[T; 2]>>,
}

impl<T: Scalar> InpaintProblem<T> {
    /// `known` maps raster pixel indices to fixed flow values; later entries
    /// override earlier ones.
    pub fn new(edges: EdgeSet, known: impl IntoIterator<Item = (usize, [T; 2])>) -> Result<Self> {
        let n = edges.width() * edges.height();
        let mut slots = vec![None; n];
        for (p, val) in known {
            if p >= n {
                return Err(Error::InvalidParams(format!("known pixel {p} outside {n}-pixel grid")));
            }
            slots[p] = Some(val);
        }
        Ok(Self { edges, known: slots })
    }

    pub fn width(&self) -> usize {
        self.edges.width()
    }

    pub fn height(&self) -> usize {
        self.edges.height()
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn known(&self, p: usize) -> Option<[T; 2]> {
        self.known[p]
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|k| k.is_some()).count()
    }

    /// Swaps the image axes (and the two flow channels).
    pub fn transpose(&self) -> Self {
        let (w, h) = (self.width(), self.height());
        let mut known = vec![None; w * h];
        for (p, k) in self.known.iter().enumerate() {
            if let Some([a, b]) = *k {
                let (x, y) = (p % w, p / w);
                known[x * h + y] = Some([b, a]);
            }
        }
        Self {
            edges: self.edges.transpose(),
            known,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once `‖r‖₂ ≤ tol · ‖r₀‖₂`.
    pub rel_residual_tol: f64,
    /// Per-block iteration cap; `None` means `10 · width · height`.
    pub max_iterations: Option<usize>,
    /// Diagonal (Jacobi) preconditioning.
    pub jacobi: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_residual_tol: 1e-5,
            max_iterations: None,
            jacobi: false,
        }
    }
}

/// Reduced system over the unknown pixels, `A x = b` per channel.
///
/// Unknowns are grouped by connected component; `blocks[c]` is the index
/// range of component `c`'s unknowns and no row couples two blocks.
#[derive(Debug, Clone)]
pub struct LinearSystem<T> {
    /// Pixel index of every unknown.
    pub unknowns: Vec<usize>,
    /// Number of open neighbours (the diagonal of `A`).
    pub diag: Vec<T>,
    /// CSR structure of the `-1` off-diagonal entries.
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub rhs: [Vec<T>; 2],
    pub blocks: Vec<std::ops::Range<usize>>,
    /// Per channel and block, the range of known values coupled into the
    /// block. The exact block solution lies inside it.
    pub bounds: [Vec<(T, T)>; 2],
}

impl<T: Scalar> LinearSystem<T> {
    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }

    /// `y = A x` restricted to the rows (and columns) in `range`.
    fn apply(&self, range: &std::ops::Range<usize>, x: &[T], y: &mut [T]) {
        let base = range.start;
        for (local, row) in range.clone().enumerate() {
            let mut acc = self.diag[row] * x[local];
            for &c in &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]] {
                acc = acc - x[c - base];
            }
            y[local] = acc;
        }
    }
}

/// Builds the reduced system, failing if a component has no known pixel.
pub fn assemble<T: Scalar>(problem: &InpaintProblem<T>) -> Result<LinearSystem<T>> {
    let edges = &problem.edges;
    let comps = label_components(edges);
    let n = problem.known.len();

    let mut has_known = vec![false; comps.count()];
    for (p, k) in problem.known.iter().enumerate() {
        if k.is_some() {
            has_known[comps.labels[p] as usize] = true;
        }
    }
    if let Some(c) = has_known.iter().position(|&k| !k) {
        return Err(Error::Underdetermined {
            pixel: comps.first_pixel[c],
        });
    }

    // Order unknowns by component, raster order inside each.
    let mut per_comp: Vec<Vec<usize>> = vec![Vec::new(); comps.count()];
    for p in 0..n {
        if problem.known[p].is_none() {
            per_comp[comps.labels[p] as usize].push(p);
        }
    }
    let mut unknowns = Vec::new();
    let mut blocks = Vec::new();
    for pixels in per_comp {
        if pixels.is_empty() {
            continue;
        }
        let start = unknowns.len();
        unknowns.extend(pixels);
        blocks.push(start..unknowns.len());
    }
    let mut index = vec![usize::MAX; n];
    for (i, &p) in unknowns.iter().enumerate() {
        index[p] = i;
    }

    let m = unknowns.len();
    let mut diag = Vec::with_capacity(m);
    let mut row_ptr = Vec::with_capacity(m + 1);
    let mut cols = Vec::with_capacity(4 * m);
    let mut rhs = [vec![T::zero(); m], vec![T::zero(); m]];
    let empty = (T::infinity(), T::neg_infinity());
    let mut bounds = [vec![empty; blocks.len()], vec![empty; blocks.len()]];
    let mut block_of = vec![0; m];
    for (b, range) in blocks.iter().enumerate() {
        block_of[range.clone()].fill(b);
    }
    row_ptr.push(0);
    for (i, &p) in unknowns.iter().enumerate() {
        let mut deg = 0usize;
        for q in edges.open_neighbors(p) {
            deg += 1;
            match problem.known[q] {
                Some(k) => {
                    for c in 0..2 {
                        rhs[c][i] = rhs[c][i] + k[c];
                        let (lo, hi) = &mut bounds[c][block_of[i]];
                        *lo = lo.min(k[c]);
                        *hi = hi.max(k[c]);
                    }
                }
                None => cols.push(index[q]),
            }
        }
        diag.push(T::from_f64_lossy(deg as f64));
        row_ptr.push(cols.len());
    }
    Ok(LinearSystem {
        unknowns,
        diag,
        row_ptr,
        cols,
        rhs,
        blocks,
        bounds,
    })
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Convergence record of one channel.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelStats {
    /// Total CG iterations over all blocks.
    pub iterations: usize,
    /// Largest final relative residual over all blocks.
    pub worst_relative_residual: f64,
}

fn cg_block<T: Scalar>(
    sys: &LinearSystem<T>,
    range: &std::ops::Range<usize>,
    b: &[T],
    x: &mut [T],
    tol: f64,
    max_iter: usize,
    jacobi: bool,
) -> Result<(usize, f64)> {
    let m = range.len();
    x.iter_mut().for_each(|v| *v = T::zero());
    let mut r = b.to_vec();
    let r0 = dot(&r, &r).sqrt().to_f64_lossy();
    if r0 == 0.0 {
        return Ok((0, 0.0));
    }
    let precondition = |r: &[T], z: &mut [T]| {
        if jacobi {
            for (i, (zi, &ri)) in z.iter_mut().zip(r).enumerate() {
                *zi = ri / sys.diag[range.start + i];
            }
        } else {
            z.copy_from_slice(r);
        }
    };
    let mut z = vec![T::zero(); m];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); m];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        sys.apply(range, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..m {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt().to_f64_lossy() / r0;
        if rel <= tol {
            return Ok((it, rel));
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::MaxIterationsExceeded {
        iterations: max_iter,
        relative_residual: rel,
    })
}

fn solve_channel<T: Scalar>(
    sys: &LinearSystem<T>,
    c: usize,
    config: &SolverConfig,
    max_iter: usize,
) -> Result<(Vec<T>, ChannelStats)> {
    let mut x = vec![T::zero(); sys.len()];
    let mut stats = ChannelStats::default();
    for (b, block) in sys.blocks.iter().enumerate() {
        let (it, rel) = cg_block(
            sys,
            block,
            &sys.rhs[c][block.clone()],
            &mut x[block.clone()],
            config.rel_residual_tol,
            max_iter,
            config.jacobi,
        )?;
        // Projecting onto the boundary range never moves an iterate away
        // from the exact solution.
        let (lo, hi) = sys.bounds[c][b];
        for v in &mut x[block.clone()] {
            *v = v.max(lo).min(hi);
        }
        stats.iterations += it;
        stats.worst_relative_residual = stats.worst_relative_residual.max(rel);
    }
    Ok((x, stats))
}

/// Reconstructs the full field. Known pixels are copied verbatim.
pub fn solve<T: Scalar>(problem: &InpaintProblem<T>, config: &SolverConfig) -> Result<FlowField<T>> {
    Ok(solve_traced(problem, config)?.0)
}

/// [`solve`] plus per-channel convergence statistics.
pub fn solve_traced<T: Scalar>(
    problem: &InpaintProblem<T>,
    config: &SolverConfig,
) -> Result<(FlowField<T>, [ChannelStats; 2])> {
    if config.rel_residual_tol.is_nan() || config.rel_residual_tol <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "residual tolerance must be positive, got {}",
            config.rel_residual_tol
        )));
    }
    let sys = assemble(problem)?;
    let (w, h) = (problem.width(), problem.height());
    let max_iter = config.max_iterations.unwrap_or(10 * w * h);
    let (ru, rv) = rayon::join(
        || solve_channel(&sys, 0, config, max_iter),
        || solve_channel(&sys, 1, config, max_iter),
    );
    let ((xu, su), (xv, sv)) = (ru?, rv?);
    log::debug!(
        "inpaint {w}x{h}: {} unknowns in {} blocks, CG iterations u={} v={}, worst residual {:.2e}/{:.2e}",
        sys.len(),
        sys.blocks.len(),
        su.iterations,
        sv.iterations,
        su.worst_relative_residual,
        sv.worst_relative_residual
    );

    let mut u = vec![T::zero(); w * h];
    let mut v = vec![T::zero(); w * h];
    for (p, k) in problem.known.iter().enumerate() {
        if let Some([a, b]) = *k {
            u[p] = a;
            v[p] = b;
        }
    }
    for (i, &p) in sys.unknowns.iter().enumerate() {
        u[p] = xu[i];
        v[p] = xv[i];
    }
    Ok((FlowField::new(w, h, u, v)?, [su, sv]))
}

/// Largest problem [`solve_direct_oracle`] accepts.
pub const ORACLE_MAX_PIXELS: usize = 4096;

/// Dense Gaussian-elimination reference solve of the same discretisation,
/// built straight from the stencil definition. Meant for tests.
pub fn solve_direct_oracle<T: Scalar>(problem: &InpaintProblem<T>) -> Result<FlowField<T>> {
    let (w, h) = (problem.width(), problem.height());
    let n = w * h;
    if n > ORACLE_MAX_PIXELS {
        return Err(Error::InvalidParams(format!(
            "direct oracle limited to {ORACLE_MAX_PIXELS} pixels, got {n}"
        )));
    }
    let unknown: Vec<usize> = (0..n).filter(|&p| problem.known[p].is_none()).collect();
    let mut col = vec![usize::MAX; n];
    for (i, &p) in unknown.iter().enumerate() {
        col[p] = i;
    }
    let m = unknown.len();
    // Augmented matrix [A | b_u | b_v], row-major.
    let stride = m + 2;
    let mut a = vec![0.0f64; m * stride];
    for (i, &p) in unknown.iter().enumerate() {
        let (x, y) = (p % w, p / w);
        let mut neigh = Vec::with_capacity(4);
        if x > 0 && !problem.edges.vertical(x - 1, y) {
            neigh.push(p - 1);
        }
        if x + 1 < w && !problem.edges.vertical(x, y) {
            neigh.push(p + 1);
        }
        if y > 0 && !problem.edges.horizontal(x, y - 1) {
            neigh.push(p - w);
        }
        if y + 1 < h && !problem.edges.horizontal(x, y) {
            neigh.push(p + w);
        }
        a[i * stride + i] = neigh.len() as f64;
        for q in neigh {
            match problem.known[q] {
                Some([ku, kv]) => {
                    a[i * stride + m] += ku.to_f64_lossy();
                    a[i * stride + m + 1] += kv.to_f64_lossy();
                }
                None => a[i * stride + col[q]] -= 1.0,
            }
        }
    }
    for k in 0..m {
        let piv = (k..m)
            .max_by(|&r, &s| a[r * stride + k].abs().total_cmp(&a[s * stride + k].abs()))
            .unwrap();
        if a[piv * stride + k].abs() < 1e-9 {
            return Err(Error::Underdetermined { pixel: unknown[k] });
        }
        if piv != k {
            for j in 0..stride {
                a.swap(k * stride + j, piv * stride + j);
            }
        }
        let d = a[k * stride + k];
        for r in k + 1..m {
            let f = a[r * stride + k] / d;
            if f != 0.0 {
                for j in k..stride {
                    a[r * stride + j] -= f * a[k * stride + j];
                }
            }
        }
    }
    let mut sol = vec![[0.0f64; 2]; m];
    for k in (0..m).rev() {
        for c in 0..2 {
            let mut s = a[k * stride + m + c];
            for j in k + 1..m {
                s -= a[k * stride + j] * sol[j][c];
            }
            sol[k][c] = s / a[k * stride + k];
        }
    }
    let mut u = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    for p in 0..n {
        let [a, b] = match problem.known[p] {
            Some(k) => k,
            None => sol[col[p]].map(T::from_f64_lossy),
        };
        u[p] = a;
        v[p] = b;
    }
    FlowField::new(w, h, u, v)
}
