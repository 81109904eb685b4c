//! Flow on disk: FlowPack containers, Middlebury `.flo` files, and provider
//! directories that any tracker can read back bit-exactly.
//!
//! ```bash
//! cargo run --example flow_files
//! ```

use std::fmt::Write;

use mft::backend::{FlowProvider, FlowRequest};
use mft::chain::Schedule;
use mft::geometry::ImageExtent;
use mft::io::flo::{read_flo, write_flo};
use mft::io::flowpack::{read_flowpack, write_flowpack, FlowPack, HEADER_LEN};
use mft::io::provider_dir::{emit_provider_dir, read_manifest, required_pairs, FileProvider, FlowLayout};
use mft::synth::{gt_flow, OracleProvider, SceneSpec};

pub fn run_example() -> mft::Result<String> {
    let dir = tempfile::tempdir().map_err(|e| mft::Error::Usage(e.to_string()))?;
    let mut out = String::new();

    let scene = SceneSpec::translating(ImageExtent::new(16, 12)?, 6, 0.5, 1.0)?;
    let bundle = gt_flow(&scene, 2, 5)?;

    let pack_path = dir.path().join("pair.mftflow");
    let pack = FlowPack::from_bundle(&bundle);
    write_flowpack(&pack, &pack_path)?;
    let size = std::fs::metadata(&pack_path).map(|m| m.len()).unwrap_or(0);
    writeln!(
        out,
        "FlowPack: mask {:#07b}, {size} bytes ({HEADER_LEN}-byte header)",
        pack.mask()
    )
    .unwrap();
    assert_eq!(read_flowpack(&pack_path)?.to_bundle()?, bundle);

    let flo_path = dir.path().join("pair.flo");
    write_flo(&bundle.flow, &flo_path)?;
    assert_eq!(read_flo(&flo_path)?, bundle.flow);
    writeln!(
        out,
        ".flo: {} bytes, flow only",
        std::fs::metadata(&flo_path).map(|m| m.len()).unwrap_or(0)
    )
    .unwrap();

    // A provider directory holds exactly the pairs the schedules will ask for.
    let pairs = required_pairs(scene.frames(), &[Schedule::Logarithmic], 5);
    let provider_dir = dir.path().join("provider");
    let oracle = OracleProvider::new(scene);
    emit_provider_dir(&oracle, &provider_dir, &pairs, FlowLayout::FloWithSidecar)?;
    let manifest = read_manifest(&provider_dir)?;
    writeln!(
        out,
        "provider dir: {}x{}, {} frames, kind {}, {} pairs",
        manifest.width,
        manifest.height,
        manifest.frames,
        manifest.kind,
        pairs.len()
    )
    .unwrap();

    let files = FileProvider::open(&provider_dir, None)?;
    let exact = pairs.iter().all(|&(i, j)| {
        let r = FlowRequest::new(i, j);
        files.provide(r).ok() == oracle.provide(r).ok()
    });
    writeln!(out, "read back bit-exact: {exact}").unwrap();
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
