//! Line-oriented text formats for predicted tracks and ground truth.
//!
//! Track file:
//!
//! ```text
//! # mft-tracks v1 width=64 height=64 frames=48
//! # query <id> <x> <y>
//! <id> <frame> <x> <y> <visible 0|1> <source a|b> <variance>
//! ```
//!
//! Ground-truth file:
//!
//! ```text
//! # mft-gt v1 width=64 height=64 frames=48
//! <id> <frame> <x> <y> <visible 0|1>
//! ```
//!
//! Frames are 1-based, complete and ascending per point; points appear in id
//! order of first appearance. Floats are written in shortest round-trip form,
//! so reading a file back yields bit-identical values.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{ImageExtent, Point};
use crate::tracks::{GroundTruth, GtTrack, Observation, Track, TrackPoint, TrackSet};

use super::{read_text, write_atomic, IoError, Result};

const TRACKS_MAGIC: &str = "mft-tracks";
const GT_MAGIC: &str = "mft-gt";

fn header(magic: &str, extent: ImageExtent, frames: usize) -> String {
    format!(
        "# {magic} v1 width={} height={} frames={frames}\n",
        extent.width(),
        extent.height()
    )
}

pub fn format_tracks(set: &TrackSet) -> String {
    let mut out = header(TRACKS_MAGIC, set.extent, set.frames);
    for t in &set.tracks {
        writeln!(out, "# query {} {} {}", t.id, t.query.x, t.query.y).expect("string write");
    }
    for t in &set.tracks {
        for (f, p) in t.points.iter().enumerate() {
            writeln!(
                out,
                "{} {} {} {} {} {} {}",
                t.id,
                f + 1,
                p.position.x,
                p.position.y,
                u8::from(p.visible),
                p.source,
                p.variance
            )
            .expect("string write");
        }
    }
    out
}

pub fn format_gt(gt: &GroundTruth) -> String {
    let mut out = header(GT_MAGIC, gt.extent, gt.frames);
    for t in &gt.tracks {
        for (f, p) in t.points.iter().enumerate() {
            writeln!(
                out,
                "{} {} {} {} {}",
                t.id,
                f + 1,
                p.position.x,
                p.position.y,
                u8::from(p.visible)
            )
            .expect("string write");
        }
    }
    out
}

struct Parser<'a> {
    path: &'a str,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> IoError {
        IoError::Parse {
            path: self.path.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn field<T: std::str::FromStr>(&self, s: Option<&str>, name: &str) -> Result<T> {
        let s = s.ok_or_else(|| self.err(format!("missing {name}")))?;
        s.parse().map_err(|_| self.err(format!("bad {name} {s:?}")))
    }

    fn flag(&self, s: Option<&str>) -> Result<bool> {
        match s {
            Some("1") => Ok(true),
            Some("0") => Ok(false),
            other => Err(self.err(format!("visible flag must be 0 or 1, got {other:?}"))),
        }
    }

    fn header(&self, line: Option<&str>, magic: &str) -> Result<(ImageExtent, usize)> {
        let line = line.ok_or_else(|| self.err("empty file"))?;
        let mut words = line.split_whitespace();
        if words.next() != Some("#") || words.next() != Some(magic) || words.next() != Some("v1") {
            return Err(self.err(format!("expected `# {magic} v1` header")));
        }
        let (mut w, mut h, mut n) = (None, None, None);
        for kv in words {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| self.err(format!("bad header field {kv:?}")))?;
            let v: usize = self.field(Some(v), k)?;
            match k {
                "width" => w = Some(v),
                "height" => h = Some(v),
                "frames" => n = Some(v),
                _ => return Err(self.err(format!("unknown header field {k:?}"))),
            }
        }
        let (w, h, n) = match (w, h, n) {
            (Some(w), Some(h), Some(n)) if n >= 1 => (w, h, n),
            _ => return Err(self.err("header needs width, height and frames >= 1")),
        };
        let extent = ImageExtent::new(w, h).map_err(|e| self.err(e.to_string()))?;
        Ok((extent, n))
    }

    fn no_more(&self, words: &mut std::str::SplitWhitespace<'_>) -> Result<()> {
        match words.next() {
            None => Ok(()),
            Some(x) => Err(self.err(format!("unexpected trailing field {x:?}"))),
        }
    }
}

/// Collects `(id, frame, value)` rows into per-id sequences, checking order.
struct Grouper<T> {
    frames: usize,
    groups: Vec<(u64, Vec<T>)>,
}

impl<T> Grouper<T> {
    fn push(&mut self, p: &Parser<'_>, id: u64, frame: usize, value: T) -> Result<()> {
        match self.groups.last_mut() {
            Some((last, seq)) if *last == id => {
                if frame != seq.len() + 1 {
                    return Err(p.err(format!("point {id}: expected frame {}, got {frame}", seq.len() + 1)));
                }
                seq.push(value);
            }
            _ => {
                self.close(p)?;
                if self.groups.iter().any(|(g, _)| *g == id) {
                    return Err(p.err(format!("point {id} appears in two separate runs")));
                }
                if frame != 1 {
                    return Err(p.err(format!("point {id}: first frame must be 1, got {frame}")));
                }
                self.groups.push((id, vec![value]));
            }
        }
        if frame > self.frames {
            return Err(p.err(format!("frame {frame} beyond declared {}", self.frames)));
        }
        Ok(())
    }

    fn close(&self, p: &Parser<'_>) -> Result<()> {
        if let Some((id, seq)) = self.groups.last() {
            if seq.len() != self.frames {
                return Err(p.err(format!("point {id} has {} of {} frames", seq.len(), self.frames)));
            }
        }
        Ok(())
    }
}

pub fn parse_tracks(text: &str, path: &str) -> Result<TrackSet> {
    let mut p = Parser { path, line: 1 };
    let mut lines = text.lines();
    let (extent, frames) = p.header(lines.next(), TRACKS_MAGIC)?;
    let mut queries = std::collections::HashMap::new();
    let mut g = Grouper {
        frames,
        groups: Vec::new(),
    };
    for line in lines {
        p.line += 1;
        let mut w = line.split_whitespace();
        match w.clone().next() {
            None => continue,
            Some("#") => {
                w.next();
                if w.next() == Some("query") {
                    let id: u64 = p.field(w.next(), "id")?;
                    let q = Point::new(p.field(w.next(), "x")?, p.field(w.next(), "y")?);
                    p.no_more(&mut w)?;
                    queries.insert(id, q);
                }
                continue;
            }
            _ => {}
        }
        let id: u64 = p.field(w.next(), "id")?;
        let frame: usize = p.field(w.next(), "frame")?;
        let position = Point::new(p.field(w.next(), "x")?, p.field(w.next(), "y")?);
        let visible = p.flag(w.next())?;
        let source = p.field(w.next(), "source")?;
        let variance = p.field(w.next(), "variance")?;
        p.no_more(&mut w)?;
        g.push(
            &p,
            id,
            frame,
            TrackPoint {
                position,
                visible,
                variance,
                source,
            },
        )?;
    }
    g.close(&p)?;
    let tracks = g
        .groups
        .into_iter()
        .map(|(id, points)| Track {
            id,
            query: queries.get(&id).copied().unwrap_or(points[0].position),
            points,
        })
        .collect();
    Ok(TrackSet { extent, frames, tracks })
}

pub fn parse_gt(text: &str, path: &str) -> Result<GroundTruth> {
    let mut p = Parser { path, line: 1 };
    let mut lines = text.lines();
    let (extent, frames) = p.header(lines.next(), GT_MAGIC)?;
    let mut g = Grouper {
        frames,
        groups: Vec::new(),
    };
    for line in lines {
        p.line += 1;
        let mut w = line.split_whitespace();
        if matches!(w.clone().next(), None | Some("#")) {
            continue;
        }
        let id: u64 = p.field(w.next(), "id")?;
        let frame: usize = p.field(w.next(), "frame")?;
        let position = Point::new(p.field(w.next(), "x")?, p.field(w.next(), "y")?);
        let visible = p.flag(w.next())?;
        p.no_more(&mut w)?;
        g.push(&p, id, frame, Observation::new(position, visible))?;
    }
    g.close(&p)?;
    let tracks = g
        .groups
        .into_iter()
        .map(|(id, points)| GtTrack {
            id,
            query: points[0].position,
            points,
        })
        .collect();
    Ok(GroundTruth { extent, frames, tracks })
}

pub fn write_tracks(set: &TrackSet, path: &Path) -> Result<()> {
    write_atomic(path, format_tracks(set).as_bytes())
}

pub fn read_tracks(path: &Path) -> Result<TrackSet> {
    parse_tracks(&read_text(path)?, &path.display().to_string())
}

pub fn write_gt(gt: &GroundTruth, path: &Path) -> Result<()> {
    write_atomic(path, format_gt(gt).as_bytes())
}

pub fn read_gt(path: &Path) -> Result<GroundTruth> {
    parse_gt(&read_text(path)?, &path.display().to_string())
}
