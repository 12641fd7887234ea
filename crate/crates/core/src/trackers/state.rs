use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box; `(x, y)` is the top-left corner in continuous pixel
/// coordinates where pixel `i` spans `[i, i+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || ![x, y, width, height].iter().all(|v| v.is_finite()) {
            return Err(Error::arg(format!(
                "bounding box must be finite with positive size, got ({x}, {y}, {width}, {height})"
            )));
        }
        Ok(Self {
            x,
            y,
            width,
            height,
        })
    }

    pub fn from_center(center: (f64, f64), size: (f64, f64)) -> Self {
        Self {
            x: center.0 - size.0 / 2.0,
            y: center.1 - size.1 / 2.0,
            width: size.0,
            height: size.1,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Target position, relative scale, and the base (initial) size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub position: (f64, f64),
    pub scale: f64,
    /// Initial `(width, height)` in pixels.
    pub base_size: (f64, f64),
}

impl TargetState {
    pub fn new(position: (f64, f64), scale: f64, base_size: (f64, f64)) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::state(format!("scale must be positive, got {scale}")));
        }
        if !(base_size.0 > 0.0 && base_size.1 > 0.0) {
            return Err(Error::state("base size must be positive"));
        }
        Ok(Self {
            position,
            scale,
            base_size,
        })
    }

    pub fn from_bbox(b: &BoundingBox) -> Result<Self> {
        Self::new(b.center(), 1.0, (b.width, b.height))
    }

    pub fn current_size(&self) -> (f64, f64) {
        (self.base_size.0 * self.scale, self.base_size.1 * self.scale)
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::from_center(self.position, self.current_size())
    }
}
