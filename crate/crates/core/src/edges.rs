//! Between-pixel edge lattices.
//!
//! Pixel `(x, y)` has its top-left corner at dual vertex `(x, y)`; dual
//! vertices range over `0..=width × 0..=height`. A vertical edgel `(i, j)`
//! separates pixels `(i, j)` and `(i + 1, j)` and joins vertices
//! `(i + 1, j)`–`(i + 1, j + 1)`. A horizontal edgel `(i, j)` separates
//! `(i, j)` and `(i, j + 1)` and joins `(i, j + 1)`–`(i + 1, j + 1)`.

use std::io::Write;

/// Compass direction of travel on the dual lattice (y grows downwards).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Up,
    Right,
    Down,
    Left,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Right, Dir::Down, Dir::Left];

    pub fn left(self) -> Dir {
        match self {
            Dir::Up => Dir::Left,
            Dir::Left => Dir::Down,
            Dir::Down => Dir::Right,
            Dir::Right => Dir::Up,
        }
    }

    pub fn right(self) -> Dir {
        match self {
            Dir::Up => Dir::Right,
            Dir::Right => Dir::Down,
            Dir::Down => Dir::Left,
            Dir::Left => Dir::Up,
        }
    }

    pub fn reverse(self) -> Dir {
        self.left().left()
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Dir::Up => (0, -1),
            Dir::Right => (1, 0),
            Dir::Down => (0, 1),
            Dir::Left => (-1, 0),
        }
    }
}

/// Identifies one edgel on either lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edgel {
    Vertical(usize, usize),
    Horizontal(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    width: usize,
    height: usize,
    /// `(width - 1) × height`, raster order.
    vertical: Vec<bool>,
    /// `width × (height - 1)`, raster order.
    horizontal: Vec<bool>,
}

impl EdgeSet {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            vertical: vec![false; width.saturating_sub(1) * height],
            horizontal: vec![false; width * height.saturating_sub(1)],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vertical_dims(&self) -> (usize, usize) {
        (self.width.saturating_sub(1), self.height)
    }

    pub fn horizontal_dims(&self) -> (usize, usize) {
        (self.width, self.height.saturating_sub(1))
    }

    /// Is there an edge between pixel `(i, j)` and `(i + 1, j)`?
    pub fn vertical(&self, i: usize, j: usize) -> bool {
        self.vertical[j * (self.width - 1) + i]
    }

    /// Is there an edge between pixel `(i, j)` and `(i, j + 1)`?
    pub fn horizontal(&self, i: usize, j: usize) -> bool {
        self.horizontal[j * self.width + i]
    }

    pub fn set_vertical(&mut self, i: usize, j: usize, on: bool) {
        let w = self.width - 1;
        self.vertical[j * w + i] = on;
    }

    pub fn set_horizontal(&mut self, i: usize, j: usize, on: bool) {
        let w = self.width;
        self.horizontal[j * w + i] = on;
    }

    pub fn get(&self, e: Edgel) -> bool {
        match e {
            Edgel::Vertical(i, j) => self.vertical(i, j),
            Edgel::Horizontal(i, j) => self.horizontal(i, j),
        }
    }

    pub fn set(&mut self, e: Edgel, on: bool) {
        match e {
            Edgel::Vertical(i, j) => self.set_vertical(i, j, on),
            Edgel::Horizontal(i, j) => self.set_horizontal(i, j, on),
        }
    }

    pub fn count(&self) -> usize {
        self.vertical.iter().chain(&self.horizontal).filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn vertical_bits(&self) -> &[bool] {
        &self.vertical
    }

    pub fn horizontal_bits(&self) -> &[bool] {
        &self.horizontal
    }

    /// All set edgels, vertical lattice first, each in raster order.
    pub fn edgels(&self) -> impl Iterator<Item = Edgel> + '_ {
        let (vw, _) = self.vertical_dims();
        let w = self.width;
        let vert = self
            .vertical
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| Edgel::Vertical(k % vw, k / vw));
        let horiz = self
            .horizontal
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| Edgel::Horizontal(k % w, k / w));
        vert.chain(horiz)
    }

    /// Whether pixels `a` and `b` (4-neighbours, raster indices) are
    /// separated by an edgel.
    pub fn separates(&self, a: usize, b: usize) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (x, y) = (lo % self.width, lo / self.width);
        if hi == lo + 1 && x + 1 < self.width {
            self.vertical(x, y)
        } else if hi == lo + self.width {
            self.horizontal(x, y)
        } else {
            panic!("pixels {a} and {b} are not 4-neighbours")
        }
    }

    /// Raster indices of the 4-neighbours of pixel `p` not cut off by an
    /// edgel. Out-of-domain neighbours are omitted.
    pub fn open_neighbors(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        let (w, h) = (self.width, self.height);
        let (x, y) = (p % w, p / w);
        let left = (x > 0 && !self.vertical(x - 1, y)).then(|| p - 1);
        let right = (x + 1 < w && !self.vertical(x, y)).then(|| p + 1);
        let up = (y > 0 && !self.horizontal(x, y - 1)).then(|| p - w);
        let down = (y + 1 < h && !self.horizontal(x, y)).then(|| p + w);
        [up, left, right, down].into_iter().flatten()
    }

    /// The edgel leaving dual vertex `(vx, vy)` in direction `d`, if the
    /// lattice has one there (regardless of whether it is set).
    pub fn edgel_at(&self, vx: usize, vy: usize, d: Dir) -> Option<Edgel> {
        let (w, h) = (self.width, self.height);
        match d {
            Dir::Up | Dir::Down => {
                if vx == 0 || vx >= w {
                    return None;
                }
                let j = match d {
                    Dir::Up => vy.checked_sub(1)?,
                    _ => vy,
                };
                (j < h).then_some(Edgel::Vertical(vx - 1, j))
            }
            Dir::Left | Dir::Right => {
                if vy == 0 || vy >= h {
                    return None;
                }
                let i = match d {
                    Dir::Left => vx.checked_sub(1)?,
                    _ => vx,
                };
                (i < w).then_some(Edgel::Horizontal(i, vy - 1))
            }
        }
    }

    /// Whether the set edgel leaving `(vx, vy)` in direction `d` exists.
    pub fn has(&self, vx: usize, vy: usize, d: Dir) -> bool {
        self.edgel_at(vx, vy, d).is_some_and(|e| self.get(e))
    }

    pub fn degree(&self, vx: usize, vy: usize) -> usize {
        Dir::ALL.iter().filter(|&&d| self.has(vx, vy, d)).count()
    }

    /// Both dual-vertex endpoints of an edgel.
    pub fn endpoints(e: Edgel) -> [(usize, usize); 2] {
        match e {
            Edgel::Vertical(i, j) => [(i + 1, j), (i + 1, j + 1)],
            Edgel::Horizontal(i, j) => [(i, j + 1), (i + 1, j + 1)],
        }
    }

    /// Swaps axes: vertical edgels become horizontal ones and vice versa.
    pub fn transpose(&self) -> Self {
        let mut t = EdgeSet::empty(self.height, self.width);
        for e in self.edgels() {
            match e {
                Edgel::Vertical(i, j) => t.set_horizontal(j, i, true),
                Edgel::Horizontal(i, j) => t.set_vertical(j, i, true),
            }
        }
        t
    }

    /// Writes the two lattices as binary PGM images (white = edgel).
    pub fn write_pgm<W: Write>(&self, mut vertical: W, mut horizontal: W) -> std::io::Result<()> {
        let dump = |w: &mut W, (cols, rows): (usize, usize), bits: &[bool]| {
            write!(w, "P5\n{cols} {rows}\n255\n")?;
            let px: Vec<u8> = bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
            w.write_all(&px)
        };
        dump(&mut vertical, self.vertical_dims(), &self.vertical)?;
        dump(&mut horizontal, self.horizontal_dims(), &self.horizontal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_geometry() {
        let mut e = EdgeSet::empty(4, 3);
        assert_eq!(e.vertical_dims(), (3, 3));
        assert_eq!(e.horizontal_dims(), (4, 2));
        e.set_vertical(1, 2, true);
        // joins vertices (2,2)-(2,3)
        assert!(e.has(2, 2, Dir::Down));
        assert!(e.has(2, 3, Dir::Up));
        assert!(!e.has(2, 3, Dir::Down));
        assert!(e.separates(9, 10));
        e.set_horizontal(3, 0, true);
        assert!(e.has(3, 1, Dir::Right));
        assert!(e.has(4, 1, Dir::Left));
        assert!(e.separates(3, 7));
        assert_eq!(e.edgels().count(), 2);
    }

    #[test]
    fn boundary_vertices_have_no_lattice_edgels() {
        let e = EdgeSet::empty(3, 3);
        assert_eq!(e.edgel_at(0, 1, Dir::Up), None);
        assert_eq!(e.edgel_at(1, 0, Dir::Up), None);
        assert_eq!(e.edgel_at(1, 0, Dir::Left), None);
        assert_eq!(e.edgel_at(3, 1, Dir::Right), None);
        assert_eq!(e.edgel_at(1, 3, Dir::Down), None);
        assert_eq!(e.edgel_at(1, 0, Dir::Down), Some(Edgel::Vertical(0, 0)));
    }

    #[test]
    fn degenerate_dimensions() {
        let e = EdgeSet::empty(1, 5);
        assert!(e.vertical_bits().is_empty());
        assert_eq!(e.horizontal_bits().len(), 4);
        assert_eq!(e.open_neighbors(2).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn transpose_swaps_lattices() {
        let mut e = EdgeSet::empty(5, 3);
        e.set_vertical(3, 1, true);
        e.set_horizontal(0, 1, true);
        let t = e.transpose();
        assert_eq!((t.width(), t.height()), (3, 5));
        assert!(t.horizontal(1, 3));
        assert!(t.vertical(1, 0));
        assert_eq!(t.transpose(), e);
    }
}
