//! Synthetic fields and random instances shared by the integration tests.

#![allow(dead_code)]

use flowcodec::mask::label_components;
use flowcodec::{EdgeSet, Flow32, FlowField, InpaintProblem64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 8×8 two-region step: u jumps from 0 to 10 between columns 3 and 4.
pub fn step_field() -> Flow32 {
    FlowField::from_fn(8, 8, |x, _| if x < 4 { (0.0, 0.0) } else { (10.0, 0.0) })
}

/// 256×256 field with a disc, a slanted half-plane and a background, each
/// carrying its own linear ramp in both channels.
pub fn three_regions() -> Flow32 {
    FlowField::from_fn(256, 256, |x, y| {
        let (xf, yf) = (x as f32, y as f32);
        let (dx, dy) = (xf - 90.0, yf - 100.0);
        if dx * dx + dy * dy < 50.0 * 50.0 {
            (-3.0 + 0.02 * yf, 2.0 + 0.01 * xf)
        } else if xf + 0.3 * yf > 190.0 {
            (4.0 - 0.01 * yf, -2.0 + 0.015 * xf)
        } else {
            (1.0 + 0.01 * xf, -0.005 * yf)
        }
    })
}

/// 64×64 version of [`three_regions`] used for the frozen fixtures.
pub fn three_regions_small() -> Flow32 {
    FlowField::from_fn(64, 64, |x, y| {
        let (xf, yf) = (x as f32, y as f32);
        let (dx, dy) = (xf - 22.0, yf - 25.0);
        if dx * dx + dy * dy < 12.5 * 12.5 {
            (-3.0 + 0.08 * yf, 2.0 + 0.04 * xf)
        } else if xf + 0.3 * yf > 47.5 {
            (4.0 - 0.04 * yf, -2.0 + 0.06 * xf)
        } else {
            (1.0 + 0.04 * xf, -0.02 * yf)
        }
    })
}

/// Sintel-sized (1024×436) scene: two ellipses, a ground plane and a
/// background, all with affine motion.
pub fn sintel_like() -> Flow32 {
    FlowField::from_fn(1024, 436, |x, y| {
        let (xf, yf) = (x as f32, y as f32);
        let inside = |cx: f32, cy: f32, rx: f32, ry: f32| {
            ((xf - cx) / rx).powi(2) + ((yf - cy) / ry).powi(2) < 1.0
        };
        if inside(300.0, 200.0, 120.0, 90.0) {
            (-6.0 + 0.01 * yf, 3.0 + 0.004 * xf)
        } else if inside(700.0, 260.0, 80.0, 140.0) {
            (8.0 - 0.02 * (yf - 260.0), -1.5 + 0.01 * (xf - 700.0))
        } else if yf > 360.0 + 0.05 * xf {
            (0.5 + 0.004 * xf, 2.5 + 0.01 * yf)
        } else {
            (1.0 + 0.003 * (xf - 512.0), -0.8 + 0.003 * (yf - 218.0))
        }
    })
}

pub fn random_field(rng: &mut impl Rng, w: usize, h: usize, scale: f32) -> Flow32 {
    FlowField::from_fn(w, h, |_, _| {
        (rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale))
    })
}

/// Every edgel set independently with probability `p`.
pub fn random_edges(rng: &mut impl Rng, w: usize, h: usize, p: f64) -> EdgeSet {
    let mut e = EdgeSet::empty(w, h);
    let (vw, vh) = e.vertical_dims();
    for j in 0..vh {
        for i in 0..vw {
            e.set_vertical(i, j, rng.gen_bool(p));
        }
    }
    let (hw, hh) = e.horizontal_dims();
    for j in 0..hh {
        for i in 0..hw {
            e.set_horizontal(i, j, rng.gen_bool(p));
        }
    }
    e
}

/// Random problem in which every component holds at least one known pixel.
pub fn random_problem(rng: &mut impl Rng) -> InpaintProblem64 {
    let w = rng.gen_range(2..=32);
    let h = rng.gen_range(2..=32);
    let p = rng.gen_range(0.0..0.15);
    let edges = random_edges(rng, w, h, p);
    let density = rng.gen_range(0.05..=0.30);
    let mut known: Vec<Option<[f64; 2]>> = (0..w * h)
        .map(|_| rng.gen_bool(density).then(|| [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]))
        .collect();
    let comps = label_components(&edges);
    let mut has_known = vec![false; comps.count()];
    for (p, k) in known.iter().enumerate() {
        if k.is_some() {
            has_known[comps.labels[p] as usize] = true;
        }
    }
    for (c, &first) in comps.first_pixel.iter().enumerate() {
        if !has_known[c] {
            known[first] = Some([rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)]);
        }
    }
    let known = known.into_iter().enumerate().filter_map(|(p, k)| k.map(|k| (p, k)));
    InpaintProblem64::new(edges, known).unwrap()
}
