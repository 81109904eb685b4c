//! FlowPack: a binary container for flow and per-pixel scalar planes.
//!
//! ```text
//! offset  size  content
//! 0       8     b"MFTFLOW1"
//! 8       4     width  (u32 LE)
//! 12      4     height (u32 LE)
//! 16      4     plane mask (u32 LE): bit 0 u, 1 v, 2 variance, 3 occlusion, 4 certainty
//! 20      ...   planes in bit order, each width*height f32 LE, row-major
//! ```
//!
//! Flow planes come as a pair: both or neither. A pack with no flow planes is
//! a scalar sidecar for a `.flo` file.

use std::path::Path;

use crate::backend::Correspondence;
use crate::geometry::{FieldRole, FlowBundle, FlowField, ImageExtent, ScalarField};

use super::{read_bytes, write_atomic, IoError, Result};

pub const MAGIC: &[u8; 8] = b"MFTFLOW1";
pub const HEADER_LEN: usize = 20;

pub const PLANE_U: u32 = 1 << 0;
pub const PLANE_V: u32 = 1 << 1;
pub const PLANE_VARIANCE: u32 = 1 << 2;
pub const PLANE_OCCLUSION: u32 = 1 << 3;
pub const PLANE_CERTAINTY: u32 = 1 << 4;
const KNOWN_PLANES: u32 = 0b1_1111;

/// Raw planes of one pack. Absent planes are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPack {
    pub extent: ImageExtent,
    pub u: Option<Vec<f32>>,
    pub v: Option<Vec<f32>>,
    pub variance: Option<Vec<f32>>,
    pub occlusion: Option<Vec<f32>>,
    pub certainty: Option<Vec<f32>>,
}

impl FlowPack {
    pub fn empty(extent: ImageExtent) -> Self {
        Self {
            extent,
            u: None,
            v: None,
            variance: None,
            occlusion: None,
            certainty: None,
        }
    }

    pub fn from_bundle(b: &FlowBundle) -> Self {
        Self {
            extent: b.extent(),
            u: Some(b.flow.u().to_vec()),
            v: Some(b.flow.v().to_vec()),
            variance: Some(b.variance.values().to_vec()),
            occlusion: Some(b.occlusion.values().to_vec()),
            certainty: None,
        }
    }

    pub fn from_correspondence(c: &Correspondence) -> Self {
        Self {
            extent: c.flow.extent(),
            u: Some(c.flow.u().to_vec()),
            v: Some(c.flow.v().to_vec()),
            certainty: Some(c.certainty.values().to_vec()),
            ..Self::empty(c.flow.extent())
        }
    }

    pub fn mask(&self) -> u32 {
        self.planes()
            .iter()
            .fold(0, |m, (bit, p)| if p.is_some() { m | bit } else { m })
    }

    fn planes(&self) -> [(u32, &Option<Vec<f32>>); 5] {
        [
            (PLANE_U, &self.u),
            (PLANE_V, &self.v),
            (PLANE_VARIANCE, &self.variance),
            (PLANE_OCCLUSION, &self.occlusion),
            (PLANE_CERTAINTY, &self.certainty),
        ]
    }

    fn missing(&self, what: &str) -> IoError {
        IoError::MaskMismatch(format!("pack with mask {:#07b} has no {what} plane", self.mask()))
    }

    pub fn flow(&self) -> Result<FlowField> {
        match (&self.u, &self.v) {
            (Some(u), Some(v)) => Ok(FlowField::new(self.extent, u.clone(), v.clone())?),
            _ => Err(self.missing("flow")),
        }
    }

    pub fn scalar(&self, role: FieldRole) -> Result<ScalarField> {
        let (plane, name) = match role {
            FieldRole::Variance => (&self.variance, "variance"),
            FieldRole::Occlusion => (&self.occlusion, "occlusion"),
            FieldRole::Certainty => (&self.certainty, "certainty"),
        };
        let values = plane.as_ref().ok_or_else(|| self.missing(name))?;
        Ok(ScalarField::new(self.extent, role, values.clone())?)
    }

    /// Flow, variance and occlusion as a bundle.
    pub fn to_bundle(&self) -> Result<FlowBundle> {
        Ok(FlowBundle::new(
            self.flow()?,
            self.scalar(FieldRole::Variance)?,
            self.scalar(FieldRole::Occlusion)?,
        )?)
    }

    pub fn to_correspondence(&self) -> Result<Correspondence> {
        Ok(Correspondence {
            flow: self.flow()?,
            certainty: self.scalar(FieldRole::Certainty)?,
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let n = self.extent.len();
        let mut out = Vec::with_capacity(HEADER_LEN + self.mask().count_ones() as usize * n * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&dim(self.extent.width())?.to_le_bytes());
        out.extend_from_slice(&dim(self.extent.height())?.to_le_bytes());
        check_mask(self.mask())?;
        out.extend_from_slice(&self.mask().to_le_bytes());
        for (_, plane) in self.planes() {
            if let Some(values) = plane {
                if values.len() != n {
                    return Err(IoError::MaskMismatch(format!(
                        "plane has {} values, extent needs {n}",
                        values.len()
                    )));
                }
                for x in values {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(IoError::BadMagic {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(&bytes[..bytes.len().min(8)]).into_owned(),
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(IoError::TruncatedFile {
                expected: HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let (width, height, mask) = (word(8), word(12), word(16));
        check_mask(mask)?;
        let planes = mask.count_ones();
        let overflow = IoError::ExtentOverflow {
            width: width as u64,
            height: height as u64,
            planes,
        };
        let body = (width as u64)
            .checked_mul(height as u64)
            .and_then(|n| n.checked_mul(planes as u64 * 4))
            .and_then(|b| b.checked_add(HEADER_LEN as u64))
            .filter(|&b| usize::try_from(b).is_ok())
            .ok_or(overflow)?;
        if (bytes.len() as u64) < body {
            return Err(IoError::TruncatedFile {
                expected: body,
                actual: bytes.len() as u64,
            });
        }
        if bytes.len() as u64 > body {
            return Err(IoError::MaskMismatch(format!(
                "mask declares {planes} planes ({body} bytes) but the file has {} bytes",
                bytes.len()
            )));
        }
        let extent = ImageExtent::new(width as usize, height as usize)?;
        let n = extent.len();
        let mut pack = Self::empty(extent);
        let mut offset = HEADER_LEN;
        let mut take = |bit: u32| {
            (mask & bit != 0).then(|| {
                let plane = bytes[offset..offset + 4 * n]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect();
                offset += 4 * n;
                plane
            })
        };
        pack.u = take(PLANE_U);
        pack.v = take(PLANE_V);
        pack.variance = take(PLANE_VARIANCE);
        pack.occlusion = take(PLANE_OCCLUSION);
        pack.certainty = take(PLANE_CERTAINTY);
        Ok(pack)
    }
}

fn dim(d: usize) -> Result<u32> {
    u32::try_from(d).map_err(|_| IoError::ExtentOverflow {
        width: d as u64,
        height: d as u64,
        planes: 0,
    })
}

fn check_mask(mask: u32) -> Result<()> {
    if mask & !KNOWN_PLANES != 0 {
        return Err(IoError::MaskMismatch(format!("unknown plane bits in mask {mask:#x}")));
    }
    if (mask & PLANE_U == 0) != (mask & PLANE_V == 0) {
        return Err(IoError::MaskMismatch(format!(
            "mask {mask:#07b} has only one flow component"
        )));
    }
    if mask == 0 {
        return Err(IoError::MaskMismatch("mask has no planes".into()));
    }
    Ok(())
}

pub fn read_flowpack(path: &Path) -> Result<FlowPack> {
    FlowPack::decode(&read_bytes(path)?)
}

pub fn write_flowpack(pack: &FlowPack, path: &Path) -> Result<()> {
    write_atomic(path, &pack.encode()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ext(w: usize, h: usize) -> ImageExtent {
        ImageExtent::new(w, h).unwrap()
    }

    #[test]
    fn flow_only_size() {
        let pack = FlowPack::from_bundle(&FlowBundle::identity(ext(2, 2)));
        let flow_only = FlowPack {
            variance: None,
            occlusion: None,
            ..pack
        };
        let bytes = flow_only.encode().unwrap();
        // 20-byte header (magic, width, height, mask) + 2 planes of 2x2 f32
        assert_eq!(bytes.len(), 20 + 2 * 2 * 2 * 4);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = FlowPack::from_bundle(&FlowBundle::identity(ext(1, 1)))
            .encode()
            .unwrap();
        bytes[7] = b'2';
        assert!(matches!(FlowPack::decode(&bytes), Err(IoError::BadMagic { .. })));
        assert!(matches!(FlowPack::decode(b"PIEH"), Err(IoError::BadMagic { .. })));
    }

    #[test]
    fn truncation_and_trailing_data() {
        let bytes = FlowPack::from_bundle(&FlowBundle::identity(ext(3, 2)))
            .encode()
            .unwrap();
        assert!(matches!(
            FlowPack::decode(&bytes[..bytes.len() - 1]),
            Err(IoError::TruncatedFile { .. })
        ));
        assert!(matches!(
            FlowPack::decode(&bytes[..12]),
            Err(IoError::TruncatedFile { .. })
        ));
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0; 4]);
        assert!(matches!(FlowPack::decode(&longer), Err(IoError::MaskMismatch(_))));
    }

    #[test]
    fn mask_validation() {
        let mut bytes = FlowPack::from_bundle(&FlowBundle::identity(ext(1, 1)))
            .encode()
            .unwrap();
        bytes[16] = 0b1_1110;
        assert!(matches!(FlowPack::decode(&bytes), Err(IoError::MaskMismatch(_))));
        bytes[16] = 0b10_0011;
        assert!(matches!(FlowPack::decode(&bytes), Err(IoError::MaskMismatch(_))));
    }

    #[test]
    fn huge_extent_overflows() {
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&KNOWN_PLANES.to_le_bytes());
        let err = FlowPack::decode(&bytes).unwrap_err();
        assert!(
            matches!(err, IoError::ExtentOverflow { .. } | IoError::TruncatedFile { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn sidecar_without_flow() {
        let pack = FlowPack {
            certainty: Some(vec![0.5; 4]),
            ..FlowPack::empty(ext(2, 2))
        };
        let back = FlowPack::decode(&pack.encode().unwrap()).unwrap();
        assert_eq!(back, pack);
        assert!(matches!(back.flow(), Err(IoError::MaskMismatch(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.mftflow");
        let pack = FlowPack::from_bundle(&FlowBundle::identity(ext(4, 3)));
        write_flowpack(&pack, &path).unwrap();
        assert_eq!(
            read_flowpack(&path).unwrap().to_bundle().unwrap(),
            FlowBundle::identity(ext(4, 3))
        );
    }

    fn finite_f32() -> impl Strategy<Value = f32> {
        prop_oneof![
            Just(f32::MAX),
            Just(f32::MIN),
            Just(f32::MIN_POSITIVE),
            Just(-0.0f32),
            Just(1e-45f32),
            any::<f32>().prop_filter("finite", |x| x.is_finite()),
        ]
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(w in 1usize..6, h in 1usize..6, mask in 0u32..32, seed in proptest::collection::vec(finite_f32(), 150)) {
            let mask = if mask & 0b11 == 0b01 || mask & 0b11 == 0b10 { mask | 0b11 } else { mask };
            prop_assume!(mask != 0);
            let n = w * h;
            let plane = |k: usize| Some(seed[k * n..(k + 1) * n].to_vec());
            let mut pack = FlowPack::empty(ext(w, h));
            if mask & PLANE_U != 0 { pack.u = plane(0); }
            if mask & PLANE_V != 0 { pack.v = plane(1); }
            if mask & PLANE_VARIANCE != 0 { pack.variance = plane(2); }
            if mask & PLANE_OCCLUSION != 0 { pack.occlusion = plane(3); }
            if mask & PLANE_CERTAINTY != 0 { pack.certainty = plane(4); }
            let bytes = pack.encode().unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + mask.count_ones() as usize * n * 4);
            let back = FlowPack::decode(&bytes).unwrap();
            prop_assert_eq!(back.encode().unwrap(), bytes);
        }
    }
}
