//! Positions and loudspeaker layouts.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Rotation3, Vector3};

use crate::error::{invalid, Error, Result};

/// Separation in meters below which two points are treated as coincident.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-9;

/// Cartesian point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Spherical coordinates: radius, colatitude from +z, azimuth from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spherical {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Position {
    pub const ORIGIN: Position = Position::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(r * st * cp, r * st * sp, r * ct)
    }

    pub fn to_spherical(self) -> Spherical {
        let rho = self.x.hypot(self.y);
        let r = rho.hypot(self.z);
        Spherical {
            r,
            theta: rho.atan2(self.z),
            phi: self.y.atan2(self.x),
        }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn distance(self, other: Position) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Position) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Angle between the two vectors in radians.
    pub fn angle_to(self, other: Position) -> f64 {
        let c = self.dot(other) / (self.norm() * other.norm());
        c.clamp(-1.0, 1.0).acos()
    }

    pub fn rotated(self, rotation: &Rotation3<f64>) -> Self {
        (rotation * Vector3::from(self)).into()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<Position> for Vector3<f64> {
    fn from(p: Position) -> Self {
        Vector3::new(p.x, p.y, p.z)
    }
}

impl From<Vector3<f64>> for Position {
    fn from(v: Vector3<f64>) -> Self {
        Position::new(v.x, v.y, v.z)
    }
}

impl From<[f64; 3]> for Position {
    fn from(a: [f64; 3]) -> Self {
        Position::new(a[0], a[1], a[2])
    }
}

impl Add for Position {
    type Output = Position;
    fn add(self, o: Position) -> Position {
        Position::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Position {
    type Output = Position;
    fn sub(self, o: Position) -> Position {
        Position::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Position {
    type Output = Position;
    fn neg(self) -> Position {
        Position::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Position {
    type Output = Position;
    fn mul(self, s: f64) -> Position {
        Position::new(self.x * s, self.y * s, self.z * s)
    }
}

const TDESIGN_121: &str = include_str!("../data/tdesign121_r1.5.txt");

/// Loudspeaker positions, each treated as a point source.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<Position>,
    pub label: String,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<Position>, label: impl Into<String>) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("positions", "array needs at least one loudspeaker"));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(invalid(
                "positions",
                format!("loudspeaker {i} is not finite"),
            ));
        }
        for (i, a) in positions.iter().enumerate() {
            for (j, b) in positions.iter().enumerate().skip(i + 1) {
                if a.distance(*b) <= COINCIDENCE_TOLERANCE {
                    return Err(Error::Coincident(format!("loudspeakers {i} and {j}")));
                }
            }
        }
        Ok(Self {
            positions,
            label: label.into(),
        })
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Fibonacci-spiral layout of `count` points on a sphere of `radius`.
    pub fn fibonacci(count: usize, radius: f64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("{radius} must be positive")));
        }
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let positions = (0..count)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                Position::from_spherical(radius, z.clamp(-1.0, 1.0).acos(), golden * i as f64)
            })
            .collect();
        Self::new(positions, format!("fibonacci-{count}"))
    }

    /// Bundled 121-point spherical 10-design, scaled to `radius`.
    pub fn tdesign121(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("{radius} must be positive")));
        }
        let base = Self::parse_point_file(TDESIGN_121)?;
        let positions = base
            .positions
            .iter()
            .map(|p| *p * (radius / p.norm()))
            .collect();
        Self::new(positions, "tdesign-121")
    }

    /// Parses `x y z` rows (meters, whitespace separated). `#` starts a
    /// comment; blank lines are ignored.
    pub fn parse_point_file(text: &str) -> Result<Self> {
        let mut positions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected 3 coordinates, found {}", fields.len()),
                });
            }
            let mut xyz = [0.0; 3];
            for (slot, field) in xyz.iter_mut().zip(&fields) {
                *slot = field.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    reason: format!("`{field}`: {e}"),
                })?;
                if !slot.is_finite() {
                    return Err(Error::Parse {
                        line: i + 1,
                        reason: format!("`{field}` is not finite"),
                    });
                }
            }
            positions.push(Position::from(xyz));
        }
        if positions.is_empty() {
            return Err(invalid("positions", "point file contains no loudspeakers"));
        }
        Self::new(positions, "point-file")
    }

    /// Inverse of [`ArrayGeometry::parse_point_file`]; coordinates are written
    /// with 17 significant digits so a reload is exact.
    pub fn to_point_file(&self) -> String {
        let mut out = format!("# {} ({} loudspeakers)\n", self.label, self.len());
        for p in &self.positions {
            let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
        }
        out
    }

    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        Self {
            positions: self.positions.iter().map(|p| p.rotated(rotation)).collect(),
            label: self.label.clone(),
        }
    }

    /// Largest deviation of `|r_l|` from the mean radius.
    pub fn radius_spread(&self) -> f64 {
        let radii: Vec<f64> = self.positions.iter().map(|p| p.norm()).collect();
        let max = radii.iter().cloned().fold(f64::MIN, f64::max);
        let min = radii.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }

    pub fn mean_radius(&self) -> f64 {
        self.positions.iter().map(|p| p.norm()).sum::<f64>() / self.len() as f64
    }
}
