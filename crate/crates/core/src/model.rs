//! Domain types shared by every module: process parameters, points of `R^d`,
//! identity reports and the unit-sphere Kelvin inversion.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use crate::error::{domain, Result};

/// Dimension and stability index of a `d`-dimensional isotropic stable process.
///
/// Only `d >= 2` and `0 < alpha < 2` are representable; construction through
/// [`StableParams::new`] is the single validation site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    d: usize,
    alpha: f64,
}

impl StableParams {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        let params = Self { d, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return domain(format!("dimension must satisfy d >= 2, got d = {}", self.d));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return domain(format!("stability index must satisfy 0 < alpha < 2, got alpha = {}", self.alpha));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `d` as a float, for use in exponents.
    pub fn df(&self) -> f64 {
        self.d as f64
    }

    /// Rejects points whose length differs from `d`.
    pub fn check_point(&self, name: &str, p: &Point) -> Result<()> {
        if p.dim() != self.d {
            return domain(format!("point {name} has {} coordinates but d = {}", p.dim(), self.d));
        }
        Ok(())
    }
}

/// A point of `R^d`, stored as a dense coordinate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Point(vec![0.0; d])
    }

    /// `scale * e_1` in dimension `d`.
    pub fn on_axis(d: usize, scale: f64) -> Self {
        let mut c = vec![0.0; d];
        c[0] = scale;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        // hypot-style accumulation is unnecessary at the magnitudes used here
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    /// Direction `x / |x|`; the origin has no direction.
    pub fn unit(&self) -> Result<Point> {
        let n = self.norm();
        if n == 0.0 {
            return domain("the origin has no direction");
        }
        Ok(self.scaled(1.0 / n))
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        self.scaled(s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A centred ball `{|y| < r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    r: f64,
}

impl BallSpec {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("radius must be positive and finite, got r = {r}"));
        }
        Ok(Self { r })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }
}

/// Floor for the relative-error denominator.
pub const REL_ERR_FLOOR: f64 = 1e-300;

/// Outcome of comparing two independently computed sides of an identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl IdentityReport {
    /// Builds the report and fills in the derived error fields and verdict.
    pub fn new(name: impl Into<String>, params: Vec<(String, String)>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = abs_err / rhs.abs().max(REL_ERR_FLOOR);
        let pass = if rhs == 0.0 { abs_err <= tol } else { rel_err <= tol };
        Self { name: name.into(), params, lhs, rhs, abs_err, rel_err, tol, pass: pass && lhs.is_finite() && rhs.is_finite() }
    }

    /// Report with an absolute-error verdict, for quantities compared against a
    /// statistical or grid-bias budget rather than a relative tolerance.
    pub fn absolute(name: impl Into<String>, params: Vec<(String, String)>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut r = Self::new(name, params, lhs, rhs, tol);
        r.pass = r.abs_err <= tol && lhs.is_finite() && rhs.is_finite();
        r
    }
}

/// Inversion through the unit sphere, `x / |x|^2`.
pub fn kelvin_invert(x: &Point) -> Result<Point> {
    let n2 = x.norm_sq();
    if n2 == 0.0 {
        return domain("Kelvin inversion is undefined at the origin");
    }
    Ok(x.scaled(1.0 / n2))
}

/// Shorthand for building `IdentityReport::params` lists.
pub(crate) fn kv(k: &str, v: impl fmt::Display) -> (String, String) {
    (k.to_string(), v.to_string())
}
