//! Analytic scenes: an affinely moving background plus rigid objects layered
//! on top of it (later objects are nearer to the camera).
//!
//! Scene files are TOML. Motions can be given per frame or as a constant
//! per-frame rate:
//!
//! ```toml
//! width = 64
//! height = 64
//! frames = 48
//!
//! [background]
//! # x' = a x + b y + tx,  y' = c x + d y + ty, applied once per frame
//! step = [1.0, 0.0, 0.25, 0.0, 1.0, 0.0]
//! # or: frames = [[a, b, tx, c, d, ty], ...]   (one per frame)
//!
//! [[objects]]
//! shape = "rectangle"        # or "ellipse"
//! center = [10.0, 20.0]
//! size = [12.0, 8.0]         # full width and height
//! [objects.motion]
//! velocity = [2.0, 0.0]      # px / frame
//! angular_velocity = 0.0     # rad / frame, about the shape center
//! scale_rate = 1.0           # scale multiplier per frame
//! # or: frames = [{ translation = [0, 0], rotation = 0, scale = 1 }, ...]
//! ```

use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::{ImageExtent, Point};

/// Row-major 2×3 affine map `x' = m0 x + m1 y + m2`, `y' = m3 x + m4 y + m5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Affine(pub [f64; 6]);

impl Affine {
    pub const IDENTITY: Affine = Affine([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    pub fn translation(tx: f64, ty: f64) -> Self {
        Affine([1.0, 0.0, tx, 0.0, 1.0, ty])
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.0;
        Point::new(m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5])
    }

    pub fn det(&self) -> f64 {
        self.0[0] * self.0[4] - self.0[1] * self.0[3]
    }

    pub fn inverse(&self) -> Option<Affine> {
        let det = self.det();
        if !det.is_finite() || det.abs() < 1e-12 {
            return None;
        }
        let [a, b, tx, c, d, ty] = self.0;
        let ia = d / det;
        let ib = -b / det;
        let ic = -c / det;
        let id = a / det;
        Some(Affine([ia, ib, -(ia * tx + ib * ty), ic, id, -(ic * tx + id * ty)]))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Affine) -> Affine {
        let [a, b, tx, c, d, ty] = self.0;
        let [e, f, ux, g, h, uy] = other.0;
        Affine([
            a * e + b * g,
            a * f + b * h,
            a * ux + b * uy + tx,
            c * e + d * g,
            c * f + d * h,
            c * ux + d * uy + ty,
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { center: [f64; 2], size: [f64; 2] },
    Ellipse { center: [f64; 2], size: [f64; 2] },
}

impl Shape {
    pub fn center(&self) -> Point {
        match self {
            Shape::Rectangle { center, .. } | Shape::Ellipse { center, .. } => Point::new(center[0], center[1]),
        }
    }

    fn size(&self) -> [f64; 2] {
        match self {
            Shape::Rectangle { size, .. } | Shape::Ellipse { size, .. } => *size,
        }
    }

    /// Point-in-shape test in reference coordinates. Boundaries are inside.
    pub fn contains(&self, q: Point) -> bool {
        let c = self.center();
        let [w, h] = self.size();
        let dx = (q.x - c.x) / (0.5 * w);
        let dy = (q.y - c.y) / (0.5 * h);
        match self {
            Shape::Rectangle { .. } => dx.abs() <= 1.0 && dy.abs() <= 1.0,
            Shape::Ellipse { .. } => dx * dx + dy * dy <= 1.0,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let [w, h] = self.size();
        let c = self.center();
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite() && c.is_finite()) {
            return Err(SynthError::InvalidScene(format!(
                "shape needs positive finite size, got {w}x{h}"
            )));
        }
        Ok(())
    }
}

/// Similarity about the shape center at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    #[serde(default)]
    pub translation: [f64; 2],
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for RigidMotion {
    fn default() -> Self {
        Self {
            translation: [0.0, 0.0],
            rotation: 0.0,
            scale: 1.0,
        }
    }
}

impl RigidMotion {
    /// Reference → image map: `x = c + t + s R (q - c)`.
    pub fn to_affine(&self, center: Point) -> Affine {
        let (sin, cos) = self.rotation.sin_cos();
        let a = self.scale * cos;
        let b = -self.scale * sin;
        let c = self.scale * sin;
        let d = self.scale * cos;
        let tx = center.x + self.translation[0] - (a * center.x + b * center.y);
        let ty = center.y + self.translation[1] - (c * center.x + d * center.y);
        Affine([a, b, tx, c, d, ty])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub shape: Shape,
    /// One motion per frame, frame 1 first.
    pub motion: Vec<RigidMotion>,
}

/// A validated scene with every per-frame transform resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    extent: ImageExtent,
    frames: usize,
    background: Vec<Affine>,
    objects: Vec<ObjectSpec>,
    // cached reference → image maps and inverses, [layer][frame-1]
    forward: Vec<Vec<Affine>>,
    inverse: Vec<Vec<Affine>>,
}

/// Which surface a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Background,
    Object(usize),
}

impl SceneSpec {
    pub fn new(
        extent: ImageExtent,
        frames: usize,
        background: Vec<Affine>,
        objects: Vec<ObjectSpec>,
    ) -> Result<Self, SynthError> {
        if frames < 1 {
            return Err(SynthError::InvalidScene("a scene needs at least one frame".into()));
        }
        if background.len() != frames {
            return Err(SynthError::InvalidScene(format!(
                "background has {} transforms for {frames} frames",
                background.len()
            )));
        }
        let mut forward = Vec::with_capacity(objects.len() + 1);
        forward.push(background.clone());
        for (k, obj) in objects.iter().enumerate() {
            obj.shape.validate()?;
            if obj.motion.len() != frames {
                return Err(SynthError::InvalidScene(format!(
                    "object {k} has {} motions for {frames} frames",
                    obj.motion.len()
                )));
            }
            if obj
                .motion
                .iter()
                .any(|m| !(m.scale > 0.0) || !m.rotation.is_finite() || m.translation.iter().any(|t| !t.is_finite()))
            {
                return Err(SynthError::InvalidScene(format!(
                    "object {k} has a non-finite or non-positive motion"
                )));
            }
            let c = obj.shape.center();
            forward.push(obj.motion.iter().map(|m| m.to_affine(c)).collect());
        }
        let mut inverse = Vec::with_capacity(forward.len());
        for (layer, maps) in forward.iter().enumerate() {
            let mut inv = Vec::with_capacity(maps.len());
            for (t, m) in maps.iter().enumerate() {
                let i = m.is_finite().then(|| m.inverse()).flatten().ok_or_else(|| {
                    SynthError::InvalidScene(format!("layer {layer} frame {} transform is not invertible", t + 1))
                })?;
                inv.push(i);
            }
            inverse.push(inv);
        }
        Ok(Self {
            extent,
            frames,
            background,
            objects,
            forward,
            inverse,
        })
    }

    /// A scene where nothing moves.
    pub fn static_scene(extent: ImageExtent, frames: usize) -> Result<Self, SynthError> {
        Self::new(extent, frames, vec![Affine::IDENTITY; frames], Vec::new())
    }

    /// Background translating by `(dx, dy)` per frame, no objects.
    pub fn translating(extent: ImageExtent, frames: usize, dx: f64, dy: f64) -> Result<Self, SynthError> {
        let bg = (0..frames)
            .map(|t| Affine::translation(dx * t as f64, dy * t as f64))
            .collect();
        Self::new(extent, frames, bg, Vec::new())
    }

    pub fn extent(&self) -> ImageExtent {
        self.extent
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn background(&self) -> &[Affine] {
        &self.background
    }

    pub fn objects(&self) -> &[ObjectSpec] {
        &self.objects
    }

    fn layer_slot(layer: Layer) -> usize {
        match layer {
            Layer::Background => 0,
            Layer::Object(k) => k + 1,
        }
    }

    /// Reference → image map of a layer at 1-based frame `t`.
    pub fn layer_transform(&self, layer: Layer, t: usize) -> Affine {
        self.forward[Self::layer_slot(layer)][t - 1]
    }

    /// Topmost layer covering image point `x` at frame `t`.
    pub fn layer_at(&self, x: Point, t: usize) -> Layer {
        for (k, obj) in self.objects.iter().enumerate().rev() {
            let q = self.inverse[k + 1][t - 1].apply(x);
            if obj.shape.contains(q) {
                return Layer::Object(k);
            }
        }
        Layer::Background
    }

    /// Moves the surface point seen at `x` in frame `i` to frame `j`.
    pub fn transfer(&self, layer: Layer, x: Point, i: usize, j: usize) -> Point {
        let slot = Self::layer_slot(layer);
        let q = self.inverse[slot][i - 1].apply(x);
        self.forward[slot][j - 1].apply(q)
    }
}

// ---------------------------------------------------------------------------
// Scene file format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    #[serde(default)]
    pub background: BackgroundFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<ObjectFile>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Affine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<Affine>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectFile {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub motion: MotionFile,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<RigidMotion>>,
}

impl MotionFile {
    fn resolve(&self, frames: usize) -> Result<Vec<RigidMotion>, SynthError> {
        let rate_given = self.velocity.is_some() || self.angular_velocity.is_some() || self.scale_rate.is_some();
        match (&self.frames, rate_given) {
            (Some(_), true) => Err(SynthError::InvalidScene(
                "object motion takes either per-frame `frames` or rates, not both".into(),
            )),
            (Some(list), false) => Ok(list.clone()),
            (None, _) => {
                let v = self.velocity.unwrap_or([0.0, 0.0]);
                let w = self.angular_velocity.unwrap_or(0.0);
                let s = self.scale_rate.unwrap_or(1.0);
                Ok((0..frames)
                    .map(|t| {
                        let t = t as f64;
                        RigidMotion {
                            translation: [v[0] * t, v[1] * t],
                            rotation: w * t,
                            scale: s.powf(t),
                        }
                    })
                    .collect())
            }
        }
    }
}

impl BackgroundFile {
    fn resolve(&self, frames: usize) -> Result<Vec<Affine>, SynthError> {
        match (&self.step, &self.frames) {
            (Some(_), Some(_)) => Err(SynthError::InvalidScene(
                "background takes either `step` or `frames`, not both".into(),
            )),
            (None, Some(list)) => Ok(list.clone()),
            (step, None) => {
                let step = step.unwrap_or(Affine::IDENTITY);
                let mut out = Vec::with_capacity(frames);
                let mut acc = Affine::IDENTITY;
                for _ in 0..frames {
                    out.push(acc);
                    acc = step.compose(&acc);
                }
                Ok(out)
            }
        }
    }
}

impl SceneFile {
    pub fn resolve(&self) -> Result<SceneSpec, SynthError> {
        let extent = ImageExtent::new(self.width, self.height).map_err(|e| SynthError::InvalidScene(e.to_string()))?;
        let background = self.background.resolve(self.frames)?;
        let objects = self
            .objects
            .iter()
            .map(|o| {
                Ok(ObjectSpec {
                    shape: o.shape,
                    motion: o.motion.resolve(self.frames)?,
                })
            })
            .collect::<Result<Vec<_>, SynthError>>()?;
        SceneSpec::new(extent, self.frames, background, objects)
    }
}

impl SceneSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let file: SceneFile = toml::from_str(text).map_err(|e| SynthError::SceneFormat(e.to_string()))?;
        file.resolve()
    }

    /// Serializes with every transform written out per frame.
    pub fn to_toml_string(&self) -> Result<String, SynthError> {
        let file = SceneFile {
            width: self.extent.width(),
            height: self.extent.height(),
            frames: self.frames,
            background: BackgroundFile {
                step: None,
                frames: Some(self.background.clone()),
            },
            objects: self
                .objects
                .iter()
                .map(|o| ObjectFile {
                    shape: o.shape,
                    motion: MotionFile {
                        frames: Some(o.motion.clone()),
                        ..Default::default()
                    },
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| SynthError::SceneFormat(e.to_string()))
    }
}
