//! Directories of precomputed flows that act as a [`FlowProvider`].
//!
//! ```text
//! dir/manifest.toml              width, height, frames, kind
//! dir/flow_00001_00002.mftflow   full pack, or
//! dir/flow_00001_00002.flo       flow, with the .mftflow holding only scalars
//! ```
//!
//! Packs carry variance and occlusion directly, or certainty for matcher
//! output; certainty is converted with the provider's adapter config.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{
    adapt_correspondence, AdapterConfig, BackendError, FlowProvider, FlowRequest, MatcherSource, ProviderKind,
};
use crate::chain::Schedule;
use crate::geometry::{FlowBundle, ImageExtent};

use super::flo::{read_flo, write_flo};
use super::flowpack::{read_flowpack, write_flowpack, FlowPack};
use super::{read_text, write_atomic, IoError, Result};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub kind: ProviderKind,
}

impl Manifest {
    pub fn extent(&self) -> Result<ImageExtent> {
        Ok(ImageExtent::new(self.width, self.height)?)
    }
}

pub fn pack_path(dir: &Path, i: usize, j: usize) -> PathBuf {
    dir.join(format!("flow_{i:05}_{j:05}.mftflow"))
}

pub fn flo_path(dir: &Path, i: usize, j: usize) -> PathBuf {
    dir.join(format!("flow_{i:05}_{j:05}.flo"))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let m: Manifest =
        toml::from_str(&read_text(&path)?).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))?;
    m.extent()?;
    if m.frames < 1 {
        return Err(IoError::Config(format!("{}: frames must be >= 1", path.display())));
    }
    Ok(m)
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    write_atomic(
        &dir.join(MANIFEST),
        toml::to_string(m).expect("manifest serializes").as_bytes(),
    )
}

/// Reads flows from a provider directory on demand.
#[derive(Debug, Clone)]
pub struct FileProvider {
    dir: PathBuf,
    manifest: Manifest,
    extent: ImageExtent,
    adapter: Option<AdapterConfig>,
}

impl FileProvider {
    /// `adapter` is needed only when the packs hold certainty.
    pub fn open(dir: &Path, adapter: Option<AdapterConfig>) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        if let Some(a) = &adapter {
            a.validate().map_err(|e| IoError::Config(e.to_string()))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            extent: manifest.extent()?,
            manifest,
            adapter,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn load_pack(&self, r: FlowRequest) -> std::result::Result<FlowPack, BackendError> {
        let (i, j) = (r.source_frame, r.target_frame);
        let pack_file = pack_path(&self.dir, i, j);
        let flo_file = flo_path(&self.dir, i, j);
        if !pack_file.exists() {
            return Err(BackendError::MissingPair {
                source_frame: i,
                target_frame: j,
            });
        }
        let mut pack = read_flowpack(&pack_file)?;
        if pack.u.is_none() {
            if !flo_file.exists() {
                return Err(BackendError::MissingPlane {
                    source_frame: i,
                    target_frame: j,
                    plane: "flow",
                });
            }
            let flow = read_flo(&flo_file)?;
            if flow.extent() != pack.extent {
                return Err(BackendError::ExtentMismatch {
                    expected: pack.extent,
                    actual: flow.extent(),
                });
            }
            let (u, v) = flow.into_channels();
            pack.u = Some(u);
            pack.v = Some(v);
        }
        if pack.extent != self.extent {
            return Err(BackendError::ExtentMismatch {
                expected: self.extent,
                actual: pack.extent,
            });
        }
        Ok(pack)
    }
}

impl FlowProvider for FileProvider {
    fn extent(&self) -> ImageExtent {
        self.extent
    }

    fn frames(&self) -> usize {
        self.manifest.frames
    }

    fn kind(&self) -> ProviderKind {
        self.manifest.kind
    }

    fn provide(&self, r: FlowRequest) -> std::result::Result<FlowBundle, BackendError> {
        r.validate(self.frames())?;
        let pack = self.load_pack(r)?;
        let missing = |plane| BackendError::MissingPlane {
            source_frame: r.source_frame,
            target_frame: r.target_frame,
            plane,
        };
        if pack.variance.is_some() && pack.occlusion.is_some() {
            return Ok(pack.to_bundle()?);
        }
        if pack.certainty.is_none() {
            return Err(missing(if pack.variance.is_none() {
                "variance"
            } else {
                "occlusion"
            }));
        }
        let adapter = self.adapter.as_ref().ok_or(BackendError::MissingCertaintyThreshold)?;
        adapt_correspondence(pack.to_correspondence()?, adapter)
    }
}

/// Frame pairs a schedule touches over a sequence, sorted.
pub fn required_pairs(frames: usize, schedules: &[Schedule], max_candidates: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for j in 2..=frames {
        for s in schedules {
            for d in s.deltas(j, max_candidates).expect("j >= 2") {
                out.insert((j - d, j));
            }
        }
    }
    out
}

/// How flow is laid out in an emitted directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowLayout {
    /// Everything in one `.mftflow` per pair.
    #[default]
    Pack,
    /// `.flo` flow plus a scalar-only `.mftflow` sidecar.
    FloWithSidecar,
}

fn write_pair(dir: &Path, i: usize, j: usize, mut pack: FlowPack, layout: FlowLayout) -> Result<()> {
    if layout == FlowLayout::FloWithSidecar {
        let flow = pack.flow()?;
        write_flo(&flow, &flo_path(dir, i, j))?;
        pack.u = None;
        pack.v = None;
    }
    write_flowpack(&pack, &pack_path(dir, i, j))
}

fn emit<F>(dir: &Path, manifest: &Manifest, pairs: &BTreeSet<(usize, usize)>, layout: FlowLayout, make: F) -> Result<()>
where
    F: Fn(FlowRequest) -> Result<FlowPack> + Sync,
{
    std::fs::create_dir_all(dir).map_err(|e| super::os_error(dir, e))?;
    pairs
        .par_iter()
        .try_for_each(|&(i, j)| write_pair(dir, i, j, make(FlowRequest::new(i, j))?, layout))?;
    write_manifest(dir, manifest)
}

fn backend(e: BackendError) -> IoError {
    IoError::Config(e.to_string())
}

/// Writes the bundles of `provider` for `pairs`, plus a manifest.
pub fn emit_provider_dir<P: FlowProvider + ?Sized>(
    provider: &P,
    dir: &Path,
    pairs: &BTreeSet<(usize, usize)>,
    layout: FlowLayout,
) -> Result<()> {
    let e = provider.extent();
    let manifest = Manifest {
        width: e.width(),
        height: e.height(),
        frames: provider.frames(),
        kind: provider.kind(),
    };
    emit(dir, &manifest, pairs, layout, |r| {
        Ok(FlowPack::from_bundle(&provider.provide(r).map_err(backend)?))
    })
}

/// Writes raw matcher output (flow and certainty) for `pairs`.
pub fn emit_matcher_dir<S: MatcherSource + ?Sized>(
    source: &S,
    dir: &Path,
    pairs: &BTreeSet<(usize, usize)>,
    layout: FlowLayout,
) -> Result<()> {
    let e = source.extent();
    let manifest = Manifest {
        width: e.width(),
        height: e.height(),
        frames: source.frames(),
        kind: ProviderKind::WideBaselineMatcher,
    };
    emit(dir, &manifest, pairs, layout, |r| {
        Ok(FlowPack::from_correspondence(&source.correspond(r).map_err(backend)?))
    })
}
