//! Middlebury `.flo`: `b"PIEH"`, i32 LE width and height, then interleaved
//! f32 LE `(u, v)` pairs in row-major order.

use std::path::Path;

use crate::geometry::{FlowField, ImageExtent};

use super::{read_bytes, write_atomic, IoError, Result};

pub const MAGIC: &[u8; 4] = b"PIEH";
const HEADER_LEN: usize = 12;

pub fn encode_flo(flow: &FlowField) -> Result<Vec<u8>> {
    let e = flow.extent();
    let dim = |d: usize| {
        i32::try_from(d).map_err(|_| IoError::ExtentOverflow {
            width: e.width() as u64,
            height: e.height() as u64,
            planes: 2,
        })
    };
    let mut out = Vec::with_capacity(HEADER_LEN + e.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&dim(e.width())?.to_le_bytes());
    out.extend_from_slice(&dim(e.height())?.to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(IoError::BadMagic {
            expected: "PIEH".into(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(IoError::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let word = |o: usize| i32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let (w, h) = (word(4), word(8));
    let overflow = || IoError::ExtentOverflow {
        width: w as u64,
        height: h as u64,
        planes: 2,
    };
    if w <= 0 || h <= 0 {
        return Err(overflow());
    }
    let need = (w as u64 * h as u64)
        .checked_mul(8)
        .and_then(|b| b.checked_add(HEADER_LEN as u64))
        .filter(|&b| usize::try_from(b).is_ok())
        .ok_or_else(overflow)?;
    if (bytes.len() as u64) < need {
        return Err(IoError::TruncatedFile {
            expected: need,
            actual: bytes.len() as u64,
        });
    }
    let extent = ImageExtent::new(w as usize, h as usize)?;
    let mut u = Vec::with_capacity(extent.len());
    let mut v = Vec::with_capacity(extent.len());
    for pair in bytes[HEADER_LEN..need as usize].chunks_exact(8) {
        u.push(f32::from_le_bytes(pair[..4].try_into().expect("4 bytes")));
        v.push(f32::from_le_bytes(pair[4..].try_into().expect("4 bytes")));
    }
    Ok(FlowField::new(extent, u, v)?)
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    decode_flo(&read_bytes(path)?)
}

pub fn write_flo(flow: &FlowField, path: &Path) -> Result<()> {
    write_atomic(path, &encode_flo(flow)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FlowBundle;
    use crate::io::flowpack::FlowPack;
    use proptest::prelude::*;

    #[test]
    fn one_pixel_is_twenty_bytes() {
        let f = FlowField::new(ImageExtent::new(1, 1).unwrap(), vec![0.5], vec![-0.5]).unwrap();
        let bytes = encode_flo(&f).unwrap();
        assert_eq!(bytes.len(), 20);
        assert_eq!(&bytes[12..16], &0.5f32.to_le_bytes());
        assert_eq!(&bytes[16..20], &(-0.5f32).to_le_bytes());
        assert_eq!(decode_flo(&bytes).unwrap(), f);
    }

    #[test]
    fn flowpack_is_not_flo() {
        let pack = FlowPack::from_bundle(&FlowBundle::identity(ImageExtent::new(2, 2).unwrap()));
        assert!(matches!(
            decode_flo(&pack.encode().unwrap()),
            Err(IoError::BadMagic { .. })
        ));
    }

    #[test]
    fn truncated() {
        let f = FlowField::zeros(ImageExtent::new(3, 3).unwrap());
        let bytes = encode_flo(&f).unwrap();
        assert!(matches!(
            decode_flo(&bytes[..bytes.len() - 3]),
            Err(IoError::TruncatedFile { .. })
        ));
        assert!(matches!(decode_flo(&bytes[..6]), Err(IoError::TruncatedFile { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.flo");
        let f = FlowField::constant(ImageExtent::new(5, 2).unwrap(), 1.25, -3.0).unwrap();
        write_flo(&f, &path).unwrap();
        assert_eq!(read_flo(&path).unwrap(), f);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_identical(w in 1usize..7, h in 1usize..7, vals in proptest::collection::vec(
            prop_oneof![Just(f32::MAX), Just(f32::MIN), Just(-0.0f32), Just(1e-45f32), -1e6f32..1e6f32], 72)) {
            let n = w * h;
            let f = FlowField::new(ImageExtent::new(w, h).unwrap(), vals[..n].to_vec(), vals[n..2 * n].to_vec()).unwrap();
            let bytes = encode_flo(&f).unwrap();
            let back = decode_flo(&bytes).unwrap();
            prop_assert_eq!(encode_flo(&back).unwrap(), bytes);
        }
    }
}
