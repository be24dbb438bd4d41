//! Regular-grid inpainting mask and isolated-segment bookkeeping.

use crate::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::flow_io::FlowField;
use crate::scalar::Scalar;

/// Regular mask grid derived from a target density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    spacing: usize,
    offset: usize,
}

impl MaskSpec {
    /// `spacing = max(1, round(1 / sqrt(density)))`, `offset = spacing / 2`.
    pub fn from_density(density: f64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "mask density must lie in (0, 1], got {density}"
            )));
        }
        let spacing = ((1.0 / density.sqrt()).round() as usize).max(1);
        Ok(Self {
            spacing,
            offset: spacing / 2,
        })
    }

    pub fn from_grid(spacing: usize, offset: usize) -> Result<Self> {
        if spacing == 0 || offset >= spacing {
            return Err(Error::InvalidParams(format!(
                "invalid mask grid: spacing {spacing}, offset {offset}"
            )));
        }
        Ok(Self { spacing, offset })
    }

    pub fn spacing(&self) -> usize {
        self.spacing
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Raster indices of the grid points inside a `width × height` image.
    pub fn points(&self, width: usize, height: usize) -> Vec<usize> {
        let mut pts = Vec::new();
        for y in (self.offset..height).step_by(self.spacing) {
            for x in (self.offset..width).step_by(self.spacing) {
                pts.push(y * width + x);
            }
        }
        pts
    }

    /// Grid columns and rows inside a `width × height` image.
    pub fn grid_dims(&self, width: usize, height: usize) -> (usize, usize) {
        let n = |len: usize| {
            if self.offset >= len {
                0
            } else {
                (len - self.offset).div_ceil(self.spacing)
            }
        };
        (n(width), n(height))
    }

    pub fn point_count(&self, width: usize, height: usize) -> usize {
        let (cols, rows) = self.grid_dims(width, height);
        cols * rows
    }
}

/// Connected components of the pixel graph in which 4-neighbours are
/// joined unless an edgel separates them.
#[derive(Debug, Clone)]
pub struct Components {
    /// Component id per pixel; ids are assigned in raster order of each
    /// component's first pixel.
    pub labels: Vec<u32>,
    /// First (raster-minimal) pixel of every component.
    pub first_pixel: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.first_pixel.len()
    }
}

pub fn label_components(edges: &EdgeSet) -> Components {
    let n = edges.width() * edges.height();
    let mut labels = vec![u32::MAX; n];
    let mut first_pixel = Vec::new();
    let mut stack = Vec::new();
    for p in 0..n {
        if labels[p] != u32::MAX {
            continue;
        }
        let id = first_pixel.len() as u32;
        first_pixel.push(p);
        labels[p] = id;
        stack.push(p);
        while let Some(q) = stack.pop() {
            for r in edges.open_neighbors(q) {
                if labels[r] == u32::MAX {
                    labels[r] = id;
                    stack.push(r);
                }
            }
        }
    }
    Components {
        labels,
        first_pixel,
    }
}

/// A component containing no grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    /// Raster index of the segment's first pixel; the decoder places the
    /// stored average there.
    pub first: usize,
    pub pixels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MaskLayout {
    /// Grid points in raster order.
    pub points: Vec<usize>,
    /// Isolated segments ordered by first pixel.
    pub segments: Vec<Segment>,
}

impl MaskLayout {
    /// Pixels receiving a stored value: grid points then segment seeds.
    pub fn known_pixels(&self) -> impl Iterator<Item = usize> + '_ {
        self.points
            .iter()
            .copied()
            .chain(self.segments.iter().map(|s| s.first))
    }

    pub fn value_count(&self) -> usize {
        self.points.len() + self.segments.len()
    }
}

/// Grid points plus the components they miss. Depends only on the
/// dimensions, the grid and the edges.
pub fn build_mask(width: usize, height: usize, spec: &MaskSpec, edges: &EdgeSet) -> MaskLayout {
    assert_eq!((edges.width(), edges.height()), (width, height));
    let points = spec.points(width, height);
    let comps = label_components(edges);
    let mut covered = vec![false; comps.count()];
    for &p in &points {
        covered[comps.labels[p] as usize] = true;
    }
    let mut segments: Vec<Segment> = comps
        .first_pixel
        .iter()
        .enumerate()
        .filter(|&(c, _)| !covered[c])
        .map(|(_, &first)| Segment {
            first,
            pixels: Vec::new(),
        })
        .collect();
    let mut slot = vec![usize::MAX; comps.count()];
    let mut next = 0;
    for (c, &cov) in covered.iter().enumerate() {
        if !cov {
            slot[c] = next;
            next += 1;
        }
    }
    for (p, &l) in comps.labels.iter().enumerate() {
        let s = slot[l as usize];
        if s != usize::MAX {
            segments[s].pixels.push(p);
        }
    }
    MaskLayout { points, segments }
}

/// Mean flow over every isolated segment.
pub fn segment_averages<T: Scalar>(field: &FlowField<T>, layout: &MaskLayout) -> Vec<(T, T)> {
    layout
        .segments
        .iter()
        .map(|s| {
            let n = s.pixels.len() as f64;
            let mean = |c: &[T]| {
                T::from_f64_lossy(s.pixels.iter().map(|&p| c[p].to_f64_lossy()).sum::<f64>() / n)
            };
            (mean(field.u()), mean(field.v()))
        })
        .collect()
}
