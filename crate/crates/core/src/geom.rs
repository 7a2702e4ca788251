//! Small planar geometry kit: points, vectors, axis-aligned rectangles and
//! symmetric 2x2 tensors (permeabilities).

use crate::scalar::{real, Scalar};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

/// A displacement of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn midpoint(a: Self, b: Self) -> Self {
        let half = real::<T>(0.5);
        Self::new((a.x + b.x) * half, (a.y + b.y) * half)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Vec2<T>;
    fn sub(self, o: Self) -> Vec2<T> {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Add<Vec2<T>> for Point2<T> {
    type Output = Point2<T>;
    fn add(self, v: Vec2<T>) -> Point2<T> {
        Point2::new(self.x + v.x, self.y + v.y)
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Vec2<T>;
    fn add(self, o: Self) -> Vec2<T> {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Vec2<T>;
    fn sub(self, o: Self) -> Vec2<T> {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Vec2<T>;
    fn mul(self, s: T) -> Vec2<T> {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Vec2<T>;
    fn neg(self) -> Vec2<T> {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Symmetric 2x2 tensor, used for permeabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tensor2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Scalar> Tensor2<T> {
    pub fn new(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diagonal(xx: T, yy: T) -> Self {
        Self::new(xx, T::zero(), yy)
    }

    pub fn isotropic(l: T) -> Self {
        Self::diagonal(l, l)
    }

    pub fn identity() -> Self {
        Self::isotropic(T::one())
    }

    /// Strict positive definiteness (the only admissible permeabilities).
    pub fn is_spd(&self) -> bool {
        self.xx > T::zero() && self.xx * self.yy - self.xy * self.xy > T::zero()
    }

    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// Quadratic form `v' T v`.
    pub fn quad(&self, v: Vec2<T>) -> T {
        v.dot(self.apply(v))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }
}
