//! Chain-code representation of an [`EdgeSet`].
//!
//! Every start element anchors a dual vertex (its reference point is the
//! pixel up-left of that vertex) and lists the arms leaving it. Each arm not
//! yet covered by an earlier chain is walked until no unvisited edgel
//! continues it; at every vertex the walk emits a turn symbol relative to
//! the current heading, preferring straight, then left, then right.
//!
//! Junction starts (types 1-4) are emitted for every vertex of degree three
//! or more, in raster order; a crossing emits type 1 followed by type 2.
//! Once those are walked only simple paths and cycles remain, each anchored
//! by a type 5 (arm up) or type 6 (arm left) start at a path end when one
//! points that way, otherwise at the component's raster-last vertex.
//! The decoder replays the same arm order and skips arms it has already
//! reconstructed, so no extra bookkeeping is stored.

use std::collections::{HashSet, VecDeque};

use crate::edges::{Dir, EdgeSet, Edgel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StartKind {
    /// Vertical run with a branch to the left.
    BranchLeft = 1,
    /// Vertical run with a branch to the right.
    BranchRight = 2,
    /// Horizontal run with a branch upwards.
    BranchUp = 3,
    /// Horizontal run with a branch downwards.
    BranchDown = 4,
    /// Single chain leaving the anchor upwards.
    IsolatedVertical = 5,
    /// Single chain leaving the anchor to the left.
    IsolatedHorizontal = 6,
}

impl StartKind {
    pub fn arms(self) -> &'static [Dir] {
        match self {
            StartKind::BranchLeft => &[Dir::Up, Dir::Down, Dir::Left],
            StartKind::BranchRight => &[Dir::Up, Dir::Down, Dir::Right],
            StartKind::BranchUp => &[Dir::Left, Dir::Right, Dir::Up],
            StartKind::BranchDown => &[Dir::Left, Dir::Right, Dir::Down],
            StartKind::IsolatedVertical => &[Dir::Up],
            StartKind::IsolatedHorizontal => &[Dir::Left],
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => StartKind::BranchLeft,
            2 => StartKind::BranchRight,
            3 => StartKind::BranchUp,
            4 => StartKind::BranchDown,
            5 => StartKind::IsolatedVertical,
            6 => StartKind::IsolatedHorizontal,
            _ => return None,
        })
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    fn junction_missing(missing: Dir) -> Self {
        match missing {
            Dir::Right => StartKind::BranchLeft,
            Dir::Left => StartKind::BranchRight,
            Dir::Down => StartKind::BranchUp,
            Dir::Up => StartKind::BranchDown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StartElement {
    pub kind: StartKind,
    /// Reference pixel; the anchor vertex is `(x + 1, y + 1)`.
    pub x: u32,
    pub y: u32,
}

impl StartElement {
    fn at_vertex(kind: StartKind, vx: usize, vy: usize) -> Self {
        debug_assert!(vx >= 1 && vy >= 1);
        Self {
            kind,
            x: (vx - 1) as u32,
            y: (vy - 1) as u32,
        }
    }

    pub fn vertex(&self) -> (usize, usize) {
        (self.x as usize + 1, self.y as usize + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Symbol {
    Straight = 0,
    Left = 1,
    Right = 2,
    End = 3,
}

impl Symbol {
    fn from_bits(b: u8) -> Self {
        match b & 3 {
            0 => Symbol::Straight,
            1 => Symbol::Left,
            2 => Symbol::Right,
            _ => Symbol::End,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainStream {
    pub starts: Vec<StartElement>,
    pub symbols: Vec<Symbol>,
}

impl ChainStream {
    pub fn chain_count(&self) -> usize {
        self.symbols.iter().filter(|&&s| s == Symbol::End).count()
    }
}

struct Encoder<'a> {
    edges: &'a EdgeSet,
    visited: EdgeSet,
    out: ChainStream,
}

impl Encoder<'_> {
    fn unvisited(&self, vx: usize, vy: usize, d: Dir) -> Option<Edgel> {
        self.edges
            .edgel_at(vx, vy, d)
            .filter(|&e| self.edges.get(e) && !self.visited.get(e))
    }

    /// Emits `kind` at `(vx, vy)` if any of its arms is still open and walks
    /// the open ones.
    fn emit(&mut self, kind: StartKind, vx: usize, vy: usize) {
        if kind.arms().iter().all(|&d| self.unvisited(vx, vy, d).is_none()) {
            return;
        }
        self.out.starts.push(StartElement::at_vertex(kind, vx, vy));
        for &arm in kind.arms() {
            if let Some(e) = self.unvisited(vx, vy, arm) {
                self.walk(vx, vy, arm, e);
            }
        }
    }

    fn walk(&mut self, mut vx: usize, mut vy: usize, mut heading: Dir, first: Edgel) {
        self.visited.set(first, true);
        loop {
            let (dx, dy) = heading.delta();
            vx = vx.wrapping_add_signed(dx);
            vy = vy.wrapping_add_signed(dy);
            let next = [
                (Symbol::Straight, heading),
                (Symbol::Left, heading.left()),
                (Symbol::Right, heading.right()),
            ]
            .into_iter()
            .find_map(|(s, d)| self.unvisited(vx, vy, d).map(|e| (s, d, e)));
            match next {
                Some((sym, d, e)) => {
                    self.out.symbols.push(sym);
                    self.visited.set(e, true);
                    heading = d;
                }
                None => {
                    self.out.symbols.push(Symbol::End);
                    return;
                }
            }
        }
    }

    fn junctions(&mut self) {
        let (w, h) = (self.edges.width(), self.edges.height());
        for vy in 0..=h {
            for vx in 0..=w {
                match self.edges.degree(vx, vy) {
                    4 => {
                        self.emit(StartKind::BranchLeft, vx, vy);
                        self.emit(StartKind::BranchRight, vx, vy);
                    }
                    3 => {
                        let missing = Dir::ALL
                            .into_iter()
                            .find(|&d| !self.edges.has(vx, vy, d))
                            .unwrap();
                        self.emit(StartKind::junction_missing(missing), vx, vy);
                    }
                    _ => {}
                }
            }
        }
    }

    /// Collects the vertices of the unvisited component containing `seed`.
    fn component_vertices(&self, seed: Edgel) -> Vec<(usize, usize)> {
        let mut seen_edgels = HashSet::from([seed]);
        let mut seen_vertices = HashSet::new();
        let mut vertices = Vec::new();
        let mut queue: VecDeque<(usize, usize)> = EdgeSet::endpoints(seed).into_iter().collect();
        while let Some(v) = queue.pop_front() {
            if !seen_vertices.insert(v) {
                continue;
            }
            vertices.push(v);
            for d in Dir::ALL {
                if let Some(e) = self.unvisited(v.0, v.1, d) {
                    if seen_edgels.insert(e) {
                        queue.extend(EdgeSet::endpoints(e));
                    }
                }
            }
        }
        vertices
    }

    fn isolated(&mut self) {
        let all: Vec<Edgel> = self.edges.edgels().collect();
        for e in all {
            if self.visited.get(e) {
                continue;
            }
            // Every vertex here has degree <= 2: the component is a simple
            // path or cycle.
            let mut verts = self.component_vertices(e);
            verts.sort_by_key(|&(x, y)| (y, x));
            let open = |enc: &Self, v: (usize, usize)| {
                Dir::ALL
                    .into_iter()
                    .filter(|&d| enc.unvisited(v.0, v.1, d).is_some())
                    .collect::<Vec<_>>()
            };
            let end = verts.iter().find_map(|&v| match open(self, v).as_slice() {
                [Dir::Up] => Some((StartKind::IsolatedVertical, v)),
                [Dir::Left] => Some((StartKind::IsolatedHorizontal, v)),
                _ => None,
            });
            match end {
                Some((kind, (vx, vy))) => self.emit(kind, vx, vy),
                None => {
                    let (vx, vy) = *verts.last().unwrap();
                    self.emit(StartKind::IsolatedVertical, vx, vy);
                    self.emit(StartKind::IsolatedHorizontal, vx, vy);
                }
            }
        }
    }
}

/// Chain-codes every edgel of `edges`.
pub fn encode_edges(edges: &EdgeSet) -> ChainStream {
    let mut enc = Encoder {
        edges,
        visited: EdgeSet::empty(edges.width(), edges.height()),
        out: ChainStream::default(),
    };
    enc.junctions();
    enc.isolated();
    debug_assert_eq!(&enc.visited, edges);
    enc.out
}

/// The start elements [`encode_edges`] would emit.
pub fn extract_starts(edges: &EdgeSet) -> Vec<StartElement> {
    encode_edges(edges).starts
}

/// Rebuilds the edge set a [`ChainStream`] describes on a `width × height`
/// pixel grid.
pub fn decode_edges(stream: &ChainStream, width: usize, height: usize) -> Result<EdgeSet> {
    let mut edges = EdgeSet::empty(width, height);
    let mut symbols = stream.symbols.iter();
    for (n, start) in stream.starts.iter().enumerate() {
        let (cx, cy) = start.vertex();
        if cx > width || cy > height {
            return Err(Error::malformed(format!("start {n} anchored outside the lattice")));
        }
        let mut walked = false;
        for &arm in start.kind.arms() {
            let first = edges
                .edgel_at(cx, cy, arm)
                .ok_or_else(|| Error::malformed(format!("start {n}: arm {arm:?} leaves the lattice")))?;
            if edges.get(first) {
                continue;
            }
            walked = true;
            edges.set(first, true);
            let (mut vx, mut vy, mut heading) = (cx, cy, arm);
            loop {
                let (dx, dy) = heading.delta();
                vx = vx.wrapping_add_signed(dx);
                vy = vy.wrapping_add_signed(dy);
                let sym = symbols
                    .next()
                    .ok_or_else(|| Error::malformed("symbol stream exhausted mid-chain"))?;
                heading = match sym {
                    Symbol::End => break,
                    Symbol::Straight => heading,
                    Symbol::Left => heading.left(),
                    Symbol::Right => heading.right(),
                };
                let e = edges
                    .edgel_at(vx, vy, heading)
                    .ok_or_else(|| Error::malformed("chain walks off the lattice"))?;
                if edges.get(e) {
                    return Err(Error::malformed("chain revisits an edgel"));
                }
                edges.set(e, true);
            }
        }
        if !walked {
            return Err(Error::malformed(format!("start {n} has no open arm")));
        }
    }
    if symbols.next().is_some() {
        return Err(Error::malformed("trailing symbols after the last chain"));
    }
    Ok(edges)
}

const KIND_BITS: u32 = 3;
const COORD_BITS: u32 = 16;
/// Bits per packed start element.
pub const START_BITS: usize = (KIND_BITS + 2 * COORD_BITS) as usize;

struct BitWriter<'a> {
    out: &'a mut Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl<'a> BitWriter<'a> {
    fn new(out: &'a mut Vec<u8>) -> Self {
        Self { out, acc: 0, nbits: 0 }
    }

    fn put(&mut self, value: u32, bits: u32) {
        self.acc = (self.acc << bits) | u64::from(value);
        self.nbits += bits;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.out.push((self.acc >> self.nbits) as u8);
        }
    }

    fn finish(mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put(0, pad);
        }
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    fn get(&mut self, bits: u32) -> u32 {
        let mut v = 0u32;
        for _ in 0..bits {
            let byte = self.data[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | u32::from(bit);
            self.pos += 1;
        }
        v
    }
}

/// Byte length of the packed start and symbol sections.
pub fn body_len(n_starts: usize, n_symbols: usize) -> usize {
    (n_starts * START_BITS).div_ceil(8) + n_symbols.div_ceil(4)
}

/// Appends the packed starts (3-bit kind, 16-bit x, 16-bit y, MSB first,
/// byte-padded) followed by the symbols (2 bits each, four per byte).
pub fn write_body(stream: &ChainStream, out: &mut Vec<u8>) -> Result<()> {
    let mut w = BitWriter::new(out);
    for s in &stream.starts {
        if s.x > u32::from(u16::MAX) || s.y > u32::from(u16::MAX) {
            return Err(Error::malformed(format!(
                "reference point ({}, {}) exceeds 16-bit coordinates",
                s.x, s.y
            )));
        }
        w.put(u32::from(s.kind.code()), KIND_BITS);
        w.put(s.x, COORD_BITS);
        w.put(s.y, COORD_BITS);
    }
    w.finish();
    let mut w = BitWriter::new(out);
    for &sym in &stream.symbols {
        w.put(sym as u32, 2);
    }
    w.finish();
    Ok(())
}

/// Inverse of [`write_body`]; `data` must hold exactly the body.
pub fn read_body(data: &[u8], n_starts: usize, n_symbols: usize) -> Result<ChainStream> {
    let start_bytes = (n_starts.checked_mul(START_BITS))
        .ok_or_else(|| Error::malformed("start count overflows"))?
        .div_ceil(8);
    if data.len() != start_bytes + n_symbols.div_ceil(4) {
        return Err(Error::malformed(format!(
            "body is {} bytes, counts imply {}",
            data.len(),
            start_bytes + n_symbols.div_ceil(4)
        )));
    }
    let mut r = BitReader { data: &data[..start_bytes], pos: 0 };
    let mut starts = Vec::with_capacity(n_starts);
    for _ in 0..n_starts {
        let code = r.get(KIND_BITS) as u8;
        let kind = StartKind::from_code(code)
            .ok_or_else(|| Error::malformed(format!("unknown start kind {code}")))?;
        let x = r.get(COORD_BITS);
        let y = r.get(COORD_BITS);
        starts.push(StartElement { kind, x, y });
    }
    let sym_bytes = &data[start_bytes..];
    let symbols = (0..n_symbols)
        .map(|i| Symbol::from_bits(sym_bytes[i / 4] >> (6 - 2 * (i % 4))))
        .collect();
    Ok(ChainStream { starts, symbols })
}

/// Self-describing serialisation: start and symbol counts (u32 LE) then
/// the packed body.
pub fn serialize_chainstream(stream: &ChainStream) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + body_len(stream.starts.len(), stream.symbols.len()));
    out.extend_from_slice(&(stream.starts.len() as u32).to_le_bytes());
    out.extend_from_slice(&(stream.symbols.len() as u32).to_le_bytes());
    write_body(stream, &mut out)?;
    Ok(out)
}

pub fn deserialize_chainstream(bytes: &[u8]) -> Result<ChainStream> {
    if bytes.len() < 8 {
        return Err(Error::malformed("missing chain-stream counts"));
    }
    let n_starts = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let n_symbols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    read_body(&bytes[8..], n_starts, n_symbols)
}
