//! Plugging in your own flow backend: anything that can answer "flow,
//! variance and occlusion from frame i to frame j" can be tracked.
//!
//! This one is a toy: a camera panning right at 2 px/frame, whose flow
//! estimate gets noisier with the frame gap and which cannot see the right
//! border strip.
//!
//! ```bash
//! cargo run --example custom_provider
//! ```

use std::fmt::Write;

use mft::backend::{FlowProvider, FlowRequest, ProviderKind};
use mft::chain::{track, ChainConfig};
use mft::geometry::{FieldRole, FlowBundle, FlowField, ImageExtent, Point, ScalarField};

struct Pan {
    extent: ImageExtent,
    frames: usize,
}

impl FlowProvider for Pan {
    fn extent(&self) -> ImageExtent {
        self.extent
    }

    fn frames(&self) -> usize {
        self.frames
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::ConsecutiveFlow
    }

    fn provide(&self, r: FlowRequest) -> mft::backend::Result<FlowBundle> {
        r.validate(self.frames)?;
        let gap = (r.target_frame - r.source_frame) as f32;
        let e = self.extent;
        let mut occlusion = vec![0.0; e.len()];
        for y in 0..e.height() {
            for x in 0..e.width() {
                if x as f32 + 2.0 * gap > (e.width() - 1) as f32 {
                    occlusion[e.index(x, y)] = 1.0;
                }
            }
        }
        Ok(FlowBundle::new(
            FlowField::constant(e, 2.0 * gap, 0.0)?,
            ScalarField::constant(e, FieldRole::Variance, 0.1 * gap * gap)?,
            ScalarField::new(e, FieldRole::Occlusion, occlusion)?,
        )?)
    }
}

pub fn run_example() -> mft::Result<String> {
    let provider = Pan {
        extent: ImageExtent::new(40, 8)?,
        frames: 10,
    };
    let cfg = ChainConfig::new(0.02);
    let states = track(provider.frames, &provider, &cfg)?;

    let mut out = String::new();
    for x in [3.0, 15.0, 30.0] {
        let q = Point::new(x, 4.0);
        write!(out, "x={x:>4}:").unwrap();
        for s in &states[1..] {
            let p = s.sample_position(q)?;
            let mark = if s.is_occluded(q, cfg.occlusion_threshold)? {
                "*"
            } else {
                ""
            };
            write!(out, " {:.0}{mark}", p.x).unwrap();
        }
        writeln!(out, "  sigma={:.2}", states.last().expect("states").sample_variance(q)?).unwrap();
    }
    out.push_str("(* = occluded)\n");
    Ok(out)
}

fn main() -> mft::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
