//! Randomised invariants across the codec stages.

mod common;

use flowcodec::chain::{decode_edges, deserialize_chainstream, encode_edges, serialize_chainstream};
use flowcodec::container::unpack;
use flowcodec::detector::detect_edges_traced;
use flowcodec::inpaint::solve_direct_oracle;
use flowcodec::mask::label_components;
use flowcodec::{
    decode, dequantise, detect_edges, encode, psnr, quantise, read_flow, write_flow, DetectorParams,
    EncodeParams, FlowField, InpaintProblem64, SolverConfig,
};
use proptest::prelude::*;

fn tight() -> SolverConfig {
    SolverConfig {
        rel_residual_tol: 1e-11,
        ..SolverConfig::default()
    }
}

fn max_diff(a: &FlowField<f64>, b: &FlowField<f64>) -> f64 {
    (0..2)
        .flat_map(|c| a.channel(c).iter().zip(b.channel(c)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flo_roundtrip_is_bit_exact(seed in any::<u64>(), w in 1usize..20, h in 1usize..20) {
        let f = common::random_field(&mut common::rng(seed), w, h, 1e4);
        let back = read_flow(&write_flow(&f)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn chain_code_is_lossless(seed in any::<u64>(), w in 1usize..40, h in 1usize..40, p in 0.0f64..0.5) {
        let e = common::random_edges(&mut common::rng(seed), w, h, p);
        let stream = encode_edges(&e);
        prop_assert_eq!(stream.symbols.iter().filter(|s| **s == flowcodec::Symbol::End).count(), stream.chain_count());
        prop_assert_eq!(&decode_edges(&stream, w, h).unwrap(), &e);
        let bytes = serialize_chainstream(&stream).unwrap();
        prop_assert_eq!(deserialize_chainstream(&bytes).unwrap(), stream);
    }

    #[test]
    fn quantisation_is_idempotent_and_monotone(
        lo in -1e6f64..1e6, span in 1e-6f64..1e6, k in 2u32..=1024, a in 0.0f64..=1.0, b in 0.0f64..=1.0
    ) {
        let hi = lo + span;
        let (x, y) = (lo + a.min(b) * span, lo + a.max(b) * span);
        let (qx, qy) = (quantise(x.min(hi), lo, hi, k).unwrap(), quantise(y.min(hi), lo, hi, k).unwrap());
        prop_assert!(qx <= qy);
        prop_assert!(qy < k);
        prop_assert_eq!(quantise(dequantise(qx, lo, hi, k).unwrap(), lo, hi, k).unwrap(), qx);
    }

    #[test]
    fn solver_matches_oracle_when_converged(seed in any::<u64>()) {
        let p = common::random_problem(&mut common::rng(seed));
        let cg = flowcodec::solve(&p, &tight()).unwrap();
        let direct = solve_direct_oracle(&p).unwrap();
        prop_assert!(max_diff(&cg, &direct) < 1e-7);
    }

    #[test]
    fn solver_obeys_maximum_principle(seed in any::<u64>()) {
        let p = common::random_problem(&mut common::rng(seed));
        let out = flowcodec::solve(&p, &SolverConfig::default()).unwrap();
        let comps = label_components(p.edges());
        let mut ranges = vec![[(f64::INFINITY, f64::NEG_INFINITY); 2]; comps.count()];
        for q in 0..p.width() * p.height() {
            if let Some(k) = p.known(q) {
                let r = &mut ranges[comps.labels[q] as usize];
                for c in 0..2 {
                    r[c] = (r[c].0.min(k[c]), r[c].1.max(k[c]));
                }
            }
        }
        for q in 0..p.width() * p.height() {
            let r = ranges[comps.labels[q] as usize];
            for (c, (lo, hi)) in r.into_iter().enumerate() {
                let x = out.channel(c)[q];
                prop_assert!(lo <= x && x <= hi);
            }
        }
    }

    #[test]
    fn solver_commutes_with_transpose(seed in any::<u64>()) {
        let p = common::random_problem(&mut common::rng(seed));
        let a = flowcodec::solve(&p, &tight()).unwrap().transpose();
        let b = flowcodec::solve(&p.transpose(), &tight()).unwrap();
        prop_assert!(max_diff(&a, &b) < 1e-7);
    }

    #[test]
    fn solver_is_linear_in_known_values(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut rng = common::rng(seed);
        let p = common::random_problem(&mut rng);
        let n = p.width() * p.height();
        let other: Vec<Option<[f64; 2]>> = (0..n)
            .map(|q| p.known(q).map(|_| [rand::Rng::gen_range(&mut rng, -5.0..5.0), rand::Rng::gen_range(&mut rng, -5.0..5.0)]))
            .collect();
        let q_problem = InpaintProblem64::new(
            p.edges().clone(),
            (0..n).filter_map(|q| other[q].map(|k| (q, k))),
        ).unwrap();
        let mix = InpaintProblem64::new(
            p.edges().clone(),
            (0..n).filter_map(|q| p.known(q).map(|k| {
                let o = other[q].unwrap();
                (q, [k[0] + alpha * o[0], k[1] + alpha * o[1]])
            })),
        ).unwrap();
        let x = flowcodec::solve(&p, &tight()).unwrap();
        let y = flowcodec::solve(&q_problem, &tight()).unwrap();
        let z = flowcodec::solve(&mix, &tight()).unwrap();
        let expect = FlowField::from_fn(p.width(), p.height(), |i, j| {
            let (a, b) = (x.at(i, j), y.at(i, j));
            (a.0 + alpha * b.0, a.1 + alpha * b.1)
        });
        prop_assert!(max_diff(&z, &expect) < 1e-6);
    }

    #[test]
    fn detector_keeps_subset_of_candidates(seed in any::<u64>(), w in 2usize..24, h in 2usize..24) {
        let f = common::random_field(&mut common::rng(seed), w, h, 8.0).cast::<f64>();
        let d = detect_edges_traced(&f, &DetectorParams::default()).unwrap();
        for e in d.edges.edgels() {
            prop_assert!(d.candidates.get(e));
            prop_assert!(d.gradient(e) > 2.0);
        }
    }

    #[test]
    fn detector_ignores_global_offset(seed in any::<u64>(), w in 2usize..24, h in 2usize..24, shift in -4i32..4) {
        let f = common::random_field(&mut common::rng(seed), w, h, 8.0).cast::<f64>();
        let s = f64::from(shift) * 0.5;
        let g = FlowField::from_fn(w, h, |x, y| {
            let (u, v) = f.at(x, y);
            (u + s, v + s)
        });
        let params = DetectorParams::default();
        prop_assert_eq!(detect_edges(&f, &params).unwrap(), detect_edges(&g, &params).unwrap());
    }

    #[test]
    fn detector_commutes_with_transpose(seed in any::<u64>(), w in 2usize..24, h in 2usize..24) {
        let f = common::random_field(&mut common::rng(seed), w, h, 8.0).cast::<f64>();
        let params = DetectorParams::default();
        prop_assert_eq!(
            detect_edges(&f, &params).unwrap().transpose(),
            detect_edges(&f.transpose(), &params).unwrap()
        );
    }

    #[test]
    fn unpack_never_panics_on_garbage(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = unpack(&bytes);
        let _ = decode(&bytes);
    }

    #[test]
    fn decode_survives_corruption_behind_a_valid_checksum(pos in any::<usize>(), val in any::<u8>()) {
        // With the checksum recomputed, corruption reaches the payload parser.
        let mut bytes = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/three_regions_small.fcf")).unwrap();
        let body_len = bytes.len() - 4;
        let i = pos % body_len;
        bytes[i] = val;
        let crc = crc32fast_hash(&bytes[..body_len]);
        bytes[body_len..].copy_from_slice(&crc.to_le_bytes());
        let _ = decode(&bytes);
    }
}

/// Bitwise CRC-32 (IEEE), independent of the library's checksum code.
fn crc32fast_hash(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &b in data {
        crc ^= u32::from(b);
        for _ in 0..8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

#[test]
fn codec_is_deterministic() {
    let f = common::three_regions_small();
    let p = EncodeParams::default();
    assert_eq!(encode(&f, &p).unwrap(), encode(&f, &p).unwrap());
    let bytes = encode(&f, &p).unwrap();
    assert_eq!(decode(&bytes).unwrap(), decode(&bytes).unwrap());
}

#[test]
fn codec_beats_mean_predictor() {
    let mut rng = common::rng(11);
    let fields = [
        common::three_regions_small(),
        common::step_field(),
        common::random_field(&mut rng, 24, 17, 3.0),
    ];
    for f in &fields {
        let params = EncodeParams::default();
        let reference = flowcodec::codec::reference_field(f, &params).unwrap();
        let out = decode(&encode(f, &params).unwrap()).unwrap();
        let n = reference.len() as f32;
        let (mu, mv) = (reference.u().iter().sum::<f32>() / n, reference.v().iter().sum::<f32>() / n);
        let mean = FlowField::constant(f.width(), f.height(), mu, mv);
        let ours = psnr(&reference, &out).unwrap();
        let trivial = psnr(&reference, &mean).unwrap();
        assert!(ours >= trivial, "{ours} < {trivial}");
    }
}

#[test]
fn file_size_grows_with_levels() {
    let f = common::three_regions();
    for density in [0.005, 0.02] {
        let sizes: Vec<usize> = [16, 32, 64, 128, 256]
            .iter()
            .map(|&k| encode(&f, &EncodeParams { density, k, ..EncodeParams::default() }).unwrap().len())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
    }
}

#[test]
fn sweep_selection_and_infeasibility() {
    let f = common::three_regions_small();
    let grid = flowcodec::ParamGrid {
        densities: vec![0.02],
        levels: vec![64],
        thresholds: vec![(4.0, 2.0)],
        sigma: 0.5,
    };
    let s = flowcodec::sweep(&f, &[1.0, 10.0], &grid, SolverConfig::default()).unwrap();
    assert_eq!(s.points.len(), 1);
    assert_eq!(s.curve, vec![s.points[0]; 2]);

    let tiny = common::random_field(&mut common::rng(5), 16, 16, 1.0);
    assert!(matches!(
        flowcodec::sweep(&tiny, &[1e6], &flowcodec::ParamGrid::default(), SolverConfig::default()),
        Err(flowcodec::Error::NoFeasiblePoint { .. })
    ));
}
