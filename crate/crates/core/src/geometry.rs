//! Dense fields over a common image domain and the sub-pixel primitives the
//! rest of the crate builds on.
//!
//! Coordinates put pixel centers on the integer lattice: `x` is the column,
//! `y` the row, origin at the top-left pixel. A field with extent `w × h`
//! can be sampled anywhere in `[0, w-1] × [0, h-1]`; a point can be advanced
//! by a flow anywhere inside the pixel footprint `[-0.5, w-0.5) × [-0.5, h-0.5)`
//! (the half-pixel rim samples the border pixel).

use std::fmt;

use thiserror::Error;

/// Slack allowed when a coordinate is a rounding error away from the lattice edge.
pub const SAMPLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("image extent must be at least 1x1, got {width}x{height}")]
    EmptyExtent { width: usize, height: usize },
    #[error("point ({x}, {y}) is outside the {width}x{height} domain")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("{role} field value {value} at index {index} is outside its valid range")]
    RoleRange { role: FieldRole, index: usize, value: f32 },
    #[error("expected a {expected} field, got {actual}")]
    RoleMismatch { expected: FieldRole, actual: FieldRole },
    #[error("extent mismatch: {expected} vs {actual}")]
    ExtentMismatch { expected: ImageExtent, actual: ImageExtent },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ImageExtent {
    width: usize,
    height: usize,
}

impl ImageExtent {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyExtent { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index of the pixel at column `x`, row `y`.
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Pixel center of a row-major index.
    #[inline]
    pub fn pixel_center(&self, index: usize) -> Point {
        Point::new((index % self.width) as f64, (index / self.width) as f64)
    }

    /// Iterates pixel centers in row-major order.
    pub fn pixel_centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.pixel_center(i))
    }
}

impl fmt::Display for ImageExtent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// True iff `p` lies on the sampleable lattice `[0, w-1] × [0, h-1]`.
pub fn in_bounds(p: Point, extent: ImageExtent) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x <= (extent.width - 1) as f64 && p.y <= (extent.height - 1) as f64
}

/// True iff `p` lies inside the pixel footprint `[-0.5, w-0.5) × [-0.5, h-0.5)`.
pub fn in_footprint(p: Point, extent: ImageExtent) -> bool {
    p.x >= -0.5 && p.y >= -0.5 && p.x < extent.width as f64 - 0.5 && p.y < extent.height as f64 - 0.5
}

/// What a scalar field measures. Each role carries its own value range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldRole {
    /// Flow-error variance, `>= 0`.
    Variance,
    /// Matcher certainty, in `[0, 1]`.
    Certainty,
    /// Occlusion score, in `[0, 1]`.
    Occlusion,
}

impl FieldRole {
    pub fn admits(&self, value: f32) -> bool {
        match self {
            FieldRole::Variance => value >= 0.0 && !value.is_nan(),
            FieldRole::Certainty | FieldRole::Occlusion => (0.0..=1.0).contains(&value),
        }
    }
}

impl fmt::Display for FieldRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldRole::Variance => "variance",
            FieldRole::Certainty => "certainty",
            FieldRole::Occlusion => "occlusion",
        })
    }
}

/// A single-channel dense field with a declared role.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    extent: ImageExtent,
    role: FieldRole,
    values: Vec<f32>,
}

impl ScalarField {
    pub fn new(extent: ImageExtent, role: FieldRole, values: Vec<f32>) -> Result<Self> {
        check_len(extent, values.len())?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !role.admits(**v)) {
            if !value.is_finite() && role != FieldRole::Variance {
                return Err(GeometryError::NonFinite { index });
            }
            return Err(GeometryError::RoleRange { role, index, value });
        }
        Ok(Self { extent, role, values })
    }

    pub fn constant(extent: ImageExtent, role: FieldRole, value: f32) -> Result<Self> {
        Self::new(extent, role, vec![value; extent.len()])
    }

    pub fn extent(&self) -> ImageExtent {
        self.extent
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.values[self.extent.index(x, y)]
    }

    pub fn sample(&self, p: Point) -> Result<f64> {
        sample_bilinear(&self.values, self.extent, p)
    }
}

/// Dense two-channel displacement field between two frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    extent: ImageExtent,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(extent: ImageExtent, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        check_len(extent, u.len())?;
        check_len(extent, v.len())?;
        for channel in [&u, &v] {
            if let Some(index) = channel.iter().position(|x| !x.is_finite()) {
                return Err(GeometryError::NonFinite { index });
            }
        }
        Ok(Self { extent, u, v })
    }

    pub fn zeros(extent: ImageExtent) -> Self {
        Self {
            extent,
            u: vec![0.0; extent.len()],
            v: vec![0.0; extent.len()],
        }
    }

    pub fn constant(extent: ImageExtent, du: f32, dv: f32) -> Result<Self> {
        Self::new(extent, vec![du; extent.len()], vec![dv; extent.len()])
    }

    pub fn extent(&self) -> ImageExtent {
        self.extent
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn into_channels(self) -> (Vec<f32>, Vec<f32>) {
        (self.u, self.v)
    }

    /// Displacement at `p`, bilinear on each channel. `p` must be on the lattice.
    pub fn sample(&self, p: Point) -> Result<(f64, f64)> {
        Ok((
            sample_bilinear(&self.u, self.extent, p)?,
            sample_bilinear(&self.v, self.extent, p)?,
        ))
    }
}

fn check_len(extent: ImageExtent, actual: usize) -> Result<()> {
    if actual != extent.len() {
        return Err(GeometryError::LengthMismatch {
            expected: extent.len(),
            actual,
        });
    }
    Ok(())
}

/// Everything a flow provider reports for one frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBundle {
    pub flow: FlowField,
    pub variance: ScalarField,
    pub occlusion: ScalarField,
}

/// Step quantities of a bundle sampled at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleSample {
    pub du: f64,
    pub dv: f64,
    pub variance: f64,
    pub occlusion: f64,
}

impl FlowBundle {
    pub fn new(flow: FlowField, variance: ScalarField, occlusion: ScalarField) -> Result<Self> {
        let extent = flow.extent();
        for (field, role) in [(&variance, FieldRole::Variance), (&occlusion, FieldRole::Occlusion)] {
            if field.extent() != extent {
                return Err(GeometryError::ExtentMismatch {
                    expected: extent,
                    actual: field.extent(),
                });
            }
            if field.role() != role {
                return Err(GeometryError::RoleMismatch {
                    expected: role,
                    actual: field.role(),
                });
            }
        }
        Ok(Self {
            flow,
            variance,
            occlusion,
        })
    }

    /// Zero flow, zero variance, zero occlusion.
    pub fn identity(extent: ImageExtent) -> Self {
        Self {
            flow: FlowField::zeros(extent),
            variance: ScalarField {
                extent,
                role: FieldRole::Variance,
                values: vec![0.0; extent.len()],
            },
            occlusion: ScalarField {
                extent,
                role: FieldRole::Occlusion,
                values: vec![0.0; extent.len()],
            },
        }
    }

    pub fn extent(&self) -> ImageExtent {
        self.flow.extent()
    }

    /// Samples all four channels at a footprint point, clamping the half-pixel
    /// rim onto the lattice.
    pub fn sample(&self, p: Point) -> Result<BundleSample> {
        let extent = self.extent();
        let q = clamp_to_lattice(p, extent)?;
        let (du, dv) = self.flow.sample(q)?;
        Ok(BundleSample {
            du,
            dv,
            variance: self.variance.sample(q)?,
            occlusion: self.occlusion.sample(q)?,
        })
    }
}

fn clamp_to_lattice(p: Point, extent: ImageExtent) -> Result<Point> {
    if !p.is_finite() || !in_footprint(p, extent) {
        return Err(out_of_bounds(p, extent));
    }
    Ok(Point::new(
        p.x.clamp(0.0, (extent.width - 1) as f64),
        p.y.clamp(0.0, (extent.height - 1) as f64),
    ))
}

fn out_of_bounds(p: Point, extent: ImageExtent) -> GeometryError {
    GeometryError::OutOfBounds {
        x: p.x,
        y: p.y,
        width: extent.width,
        height: extent.height,
    }
}

/// Bilinear interpolation of a row-major plane at a lattice point.
///
/// Returns the stored value bit-exactly at integer coordinates, and is exact
/// on constant neighbourhoods (the lerp form never mixes equal values).
pub fn sample_bilinear(values: &[f32], extent: ImageExtent, p: Point) -> Result<f64> {
    let max_x = (extent.width - 1) as f64;
    let max_y = (extent.height - 1) as f64;
    if !p.is_finite()
        || p.x < -SAMPLE_TOLERANCE
        || p.y < -SAMPLE_TOLERANCE
        || p.x > max_x + SAMPLE_TOLERANCE
        || p.y > max_y + SAMPLE_TOLERANCE
    {
        return Err(out_of_bounds(p, extent));
    }
    let x = p.x.clamp(0.0, max_x);
    let y = p.y.clamp(0.0, max_y);

    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
    let y1 = if fy > 0.0 { y0 + 1 } else { y0 };

    let at = |xx: usize, yy: usize| values[extent.index(xx, yy)] as f64;
    let v00 = at(x0, y0);
    let v10 = at(x1, y0);
    let v01 = at(x0, y1);
    let v11 = at(x1, y1);

    let top = v00 + (v10 - v00) * fx;
    let bottom = v01 + (v11 - v01) * fx;
    Ok(top + (bottom - top) * fy)
}

/// Moves `p` by the flow sampled at `p`.
///
/// Fails with [`GeometryError::OutOfBounds`] when `p` is outside the pixel
/// footprint; the caller decides what that means for the track.
pub fn advance_point(p: Point, flow: &FlowField) -> Result<Point> {
    let q = clamp_to_lattice(p, flow.extent())?;
    let (du, dv) = flow.sample(q)?;
    Ok(p.offset(du, dv))
}
