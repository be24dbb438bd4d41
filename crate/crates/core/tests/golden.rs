//! Frozen encoder output and reconstruction. Set `FLOWCODEC_REGENERATE_FIXTURES=1`
//! to rewrite the fixtures after an intentional format or solver change.

mod common;

use std::path::PathBuf;

use flowcodec::flow_io::{load_flo, save_flo};
use flowcodec::{decode, encode, EncodeParams};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn params() -> EncodeParams {
    EncodeParams {
        density: 0.02,
        k: 64,
        ..EncodeParams::default()
    }
}

#[test]
fn golden_fixture() {
    let field = common::three_regions_small();
    let bytes = encode(&field, &params()).unwrap();
    let recon = decode(&bytes).unwrap();
    if std::env::var_os("FLOWCODEC_REGENERATE_FIXTURES").is_some() {
        std::fs::create_dir_all(fixture("")).unwrap();
        std::fs::write(fixture("three_regions_small.fcf"), &bytes).unwrap();
        save_flo(fixture("three_regions_small_decoded.flo"), &recon).unwrap();
    }
    let frozen = std::fs::read(fixture("three_regions_small.fcf")).unwrap();
    assert_eq!(bytes, frozen, "encoder output changed");
    let frozen_recon = load_flo(fixture("three_regions_small_decoded.flo")).unwrap();
    let decoded = decode(&frozen).unwrap();
    assert!(
        decoded.u().iter().zip(frozen_recon.u()).all(|(a, b)| a.to_bits() == b.to_bits())
            && decoded.v().iter().zip(frozen_recon.v()).all(|(a, b)| a.to_bits() == b.to_bits()),
        "reconstruction changed"
    );
}
