//! Polarizer orientations in degrees.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A polarizer orientation in degrees, normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct AngleDeg(f64);

impl AngleDeg {
    pub const ZERO: AngleDeg = AngleDeg(0.0);

    pub fn new(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(invalid("angle", format!("{degrees} is not finite")));
        }
        Ok(Self(normalize(degrees)))
    }

    /// Panics on non-finite input; meant for literals and internal arithmetic.
    pub fn deg(degrees: f64) -> Self {
        Self::new(degrees).expect("finite angle")
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    pub fn rotated(self, by: f64) -> Self {
        Self::deg(self.0 + by)
    }
}

fn normalize(degrees: f64) -> f64 {
    let v = degrees.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if v >= 360.0 {
        0.0
    } else {
        v
    }
}

impl From<AngleDeg> for f64 {
    fn from(a: AngleDeg) -> f64 {
        a.0
    }
}

impl TryFrom<f64> for AngleDeg {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl std::fmt::Display for AngleDeg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Folded difference between two orientations, in `[0, 180)`.
///
/// The circular distance on the 360° circle, reduced mod 180. Adding 180° to
/// one argument maps the result `d` to either `d` or `180 − d`; both describe
/// the same relative orientation of two polarizer axes.
pub fn fold_angle_diff(x: AngleDeg, y: AngleDeg) -> f64 {
    let d = (x.0 - y.0).abs();
    let circular = d.min(360.0 - d);
    let folded = circular % 180.0;
    if folded >= 180.0 {
        0.0
    } else {
        folded
    }
}

/// The five orientations entering the strong inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleConfig {
    pub a: AngleDeg,
    pub b: AngleDeg,
    pub a_prime: AngleDeg,
    pub b_prime: AngleDeg,
    pub r: AngleDeg,
}

impl AngleConfig {
    pub fn new(a: f64, b: f64, a_prime: f64, b_prime: f64, r: f64) -> Result<Self> {
        Ok(Self {
            a: AngleDeg::new(a)?,
            b: AngleDeg::new(b)?,
            a_prime: AngleDeg::new(a_prime)?,
            b_prime: AngleDeg::new(b_prime)?,
            r: AngleDeg::new(r)?,
        })
    }

    /// `a = 0`, `b = 120°`, `a′ = b′ = r = 240°`: three coplanar axes at
    /// 120° to each other with the primed settings along `r`.
    pub fn triangle_120() -> Self {
        Self::new(0.0, 120.0, 240.0, 240.0, 240.0).expect("finite")
    }

    pub fn rotated(&self, by: f64) -> Self {
        Self {
            a: self.a.rotated(by),
            b: self.b.rotated(by),
            a_prime: self.a_prime.rotated(by),
            b_prime: self.b_prime.rotated(by),
            r: self.r.rotated(by),
        }
    }

    pub fn as_array(&self) -> [AngleDeg; 5] {
        [self.a, self.b, self.a_prime, self.b_prime, self.r]
    }
}

impl Default for AngleConfig {
    fn default() -> Self {
        Self::triangle_120()
    }
}
