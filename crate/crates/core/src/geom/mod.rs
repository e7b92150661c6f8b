//! Computational geometry in `R^d`: balls, boxes, capsules, annuli,
//! enlargements, cylindrical shells, minimal enclosing balls and curve covers.
//!
//! All containment and distance comparisons use the absolute tolerance
//! `S::EPS_GEO` with closed-set semantics: a point exactly on a boundary
//! (within tolerance) counts as inside.

mod cover;
mod meb;
mod shell;

pub use cover::{chain_gap, cover_chain, Curve};
pub use meb::{min_enclosing_ball, min_enclosing_ball_of_balls};
pub use shell::{shell_axial_offset, shell_to_sphere_distance, CylindricalShell};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of `R^d`. Coordinates must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(transparent)]
pub struct Point<S: Scalar> {
    pub coords: Vec<S>,
}

impl<S: Scalar> Point<S> {
    pub fn new(coords: Vec<S>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![S::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> S {
        self.coords
            .iter()
            .fold(S::zero(), |a, &c| a + c * c)
            .sqrt()
    }

    pub fn dist(&self, other: &Point<S>) -> S {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(S::zero(), |a, (&x, &y)| a + (x - y) * (x - y))
            .sqrt()
    }

    pub fn add_scaled(&self, dir: &[S], t: S) -> Point<S> {
        Point::new(
            self.coords
                .iter()
                .zip(dir)
                .map(|(&c, &d)| c + t * d)
                .collect(),
        )
    }

    pub fn dot(&self, other: &[S]) -> S {
        self.coords
            .iter()
            .zip(other)
            .fold(S::zero(), |a, (&x, &y)| a + x * y)
    }
}

/// Distance from `x` to the segment `[a, b]` (any dimension).
pub fn dist_point_segment<S: Scalar>(x: &Point<S>, a: &Point<S>, b: &Point<S>) -> S {
    let mut ab2 = S::zero();
    let mut apab = S::zero();
    for i in 0..x.dim() {
        let d = b.coords[i] - a.coords[i];
        ab2 = ab2 + d * d;
        apab = apab + (x.coords[i] - a.coords[i]) * d;
    }
    if ab2 == S::zero() {
        return x.dist(a);
    }
    let t = (apab / ab2).max(S::zero()).min(S::one());
    let mut acc = S::zero();
    for i in 0..x.dim() {
        let p = a.coords[i] + t * (b.coords[i] - a.coords[i]);
        let d = x.coords[i] - p;
        acc = acc + d * d;
    }
    acc.sqrt()
}

/// Distance between segments `[p1, q1]` and `[p2, q2]`.
///
/// Standard clamped-quadratic closest-point computation; valid in any
/// dimension and for degenerate (point) segments.
pub fn dist_segment_segment<S: Scalar>(
    p1: &Point<S>,
    q1: &Point<S>,
    p2: &Point<S>,
    q2: &Point<S>,
) -> S {
    let dim = p1.dim();
    let sub = |a: &Point<S>, b: &Point<S>| -> Vec<S> {
        (0..dim).map(|i| a.coords[i] - b.coords[i]).collect()
    };
    let dot = |a: &[S], b: &[S]| -> S {
        a.iter()
            .zip(b)
            .fold(S::zero(), |acc, (&x, &y)| acc + x * y)
    };
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(&d1, &d1);
    let e = dot(&d2, &d2);
    let f = dot(&d2, &r);
    let eps = S::EPS_GEO * S::EPS_GEO;
    let zero = S::zero();
    let one = S::one();
    let (mut s, mut t);
    if a <= eps && e <= eps {
        return p1.dist(p2);
    }
    if a <= eps {
        s = zero;
        t = (f / e).max(zero).min(one);
    } else {
        let c = dot(&d1, &r);
        if e <= eps {
            t = zero;
            s = (-c / a).max(zero).min(one);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            s = if denom != zero {
                ((b * f - c * e) / denom).max(zero).min(one)
            } else {
                zero
            };
            t = (b * s + f) / e;
            if t < zero {
                t = zero;
                s = (-c / a).max(zero).min(one);
            } else if t > one {
                t = one;
                s = ((b - c) / a).max(zero).min(one);
            }
        }
    }
    let c1 = p1.add_scaled(&d1, s);
    let c2 = p2.add_scaled(&d2, t);
    c1.dist(&c2)
}

/// Closed ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ball<S: Scalar> {
    pub center: Point<S>,
    pub radius: S,
}

impl<S: Scalar> Ball<S> {
    pub fn new(center: Point<S>, radius: S) -> Self {
        debug_assert!(radius >= S::zero());
        Ball { center, radius }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Closed-ball membership within `EPS_GEO`.
    pub fn contains(&self, x: &Point<S>) -> bool {
        self.center.dist(x) <= self.radius + S::EPS_GEO
    }

    /// Same test, but reports dimension mismatches instead of panicking.
    pub fn try_contains(&self, x: &Point<S>) -> Result<bool> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.contains(x))
    }

    pub fn volume(&self) -> S {
        unit_ball_volume::<S>(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    /// Largest distance from the origin to a point of the ball.
    pub fn bounding_radius(&self) -> S {
        self.center.norm() + self.radius
    }
}

/// Volume of the unit ball in dimension `d`, via v_d = v_{d-2} * 2π/d.
pub fn unit_ball_volume<S: Scalar>(d: usize) -> S {
    let two_pi = S::from_f64(std::f64::consts::TAU);
    let mut values = [S::one(), S::from_f64(2.0)];
    if d < 2 {
        return values[d];
    }
    let mut k = 2;
    loop {
        let v = values[k % 2] * two_pi / S::from_f64(k as f64);
        values[k % 2] = v;
        if k == d {
            return v;
        }
        k += 1;
    }
}

/// Axis-aligned box given by opposite corners `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Aabb<S: Scalar> {
    pub lo: Point<S>,
    pub hi: Point<S>,
}

impl<S: Scalar> Aabb<S> {
    pub fn new(lo: Point<S>, hi: Point<S>) -> Self {
        debug_assert!(lo.coords.iter().zip(&hi.coords).all(|(&a, &b)| a <= b));
        Aabb { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, x: &Point<S>) -> bool {
        x.coords.iter().enumerate().all(|(i, &c)| {
            c >= self.lo.coords[i] - S::EPS_GEO && c <= self.hi.coords[i] + S::EPS_GEO
        })
    }

    pub fn volume(&self) -> S {
        self.lo
            .coords
            .iter()
            .zip(&self.hi.coords)
            .fold(S::one(), |a, (&l, &h)| a * (h - l))
    }

    pub fn dist_to_point(&self, x: &Point<S>) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim() {
            let c = x.coords[i];
            let d = if c < self.lo.coords[i] {
                self.lo.coords[i] - c
            } else if c > self.hi.coords[i] {
                c - self.hi.coords[i]
            } else {
                S::zero()
            };
            acc = acc + d * d;
        }
        acc.sqrt()
    }

    /// Largest distance from `x` to a point of the box (farthest corner).
    pub fn max_dist_to_point(&self, x: &Point<S>) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim() {
            let a = (x.coords[i] - self.lo.coords[i]).abs();
            let b = (x.coords[i] - self.hi.coords[i]).abs();
            let d = a.max(b);
            acc = acc + d * d;
        }
        acc.sqrt()
    }

    pub fn bounding_radius(&self) -> S {
        self.max_dist_to_point(&Point::origin(self.dim()))
    }
}

/// Oriented segment with endpoints `a`, `b`; degenerate segments allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Segment<S: Scalar> {
    pub a: Point<S>,
    pub b: Point<S>,
}

impl<S: Scalar> Segment<S> {
    pub fn new(a: Point<S>, b: Point<S>) -> Self {
        Segment { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn length(&self) -> S {
        self.a.dist(&self.b)
    }

    pub fn dist_to_point(&self, x: &Point<S>) -> S {
        dist_point_segment(x, &self.a, &self.b)
    }

    pub fn point_at(&self, t: S) -> Point<S> {
        Point::new(
            self.a
                .coords
                .iter()
                .zip(&self.b.coords)
                .map(|(&p, &q)| p + t * (q - p))
                .collect(),
        )
    }
}

/// One of the primitive shapes regions are built from. Every primitive is
/// bounded, has a closed-form volume and decidable membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive<S: Scalar> {
    Ball(Ball<S>),
    Box(Aabb<S>),
    /// Enlargement of a segment by `radius` (a stadium/capsule).
    Capsule { seg: Segment<S>, radius: S },
    /// Closed spherical shell `inner <= |x - center| <= outer`.
    Annulus {
        center: Point<S>,
        inner: S,
        outer: S,
    },
    /// A ball with disjoint closed balls removed from its interior.
    BallWithHoles { outer: Ball<S>, holes: Vec<Ball<S>> },
}

impl<S: Scalar> Primitive<S> {
    pub fn dim(&self) -> usize {
        match self {
            Primitive::Ball(b) => b.dim(),
            Primitive::Box(b) => b.dim(),
            Primitive::Capsule { seg, .. } => seg.dim(),
            Primitive::Annulus { center, .. } => center.dim(),
            Primitive::BallWithHoles { outer, .. } => outer.dim(),
        }
    }

    pub fn contains(&self, x: &Point<S>) -> bool {
        match self {
            Primitive::Ball(b) => b.contains(x),
            Primitive::Box(b) => b.contains(x),
            Primitive::Capsule { seg, radius } => seg.dist_to_point(x) <= *radius + S::EPS_GEO,
            Primitive::Annulus {
                center,
                inner,
                outer,
            } => {
                let d = center.dist(x);
                d >= *inner - S::EPS_GEO && d <= *outer + S::EPS_GEO
            }
            Primitive::BallWithHoles { outer, holes } => {
                outer.contains(x) && holes.iter().all(|h| !h.contains(x))
            }
        }
    }

    pub fn volume(&self) -> S {
        match self {
            Primitive::Ball(b) => b.volume(),
            Primitive::Box(b) => b.volume(),
            Primitive::Capsule { seg, radius } => {
                let d = seg.dim();
                let cross = unit_ball_volume::<S>(d - 1) * radius.powi((d - 1) as i32);
                let caps = unit_ball_volume::<S>(d) * radius.powi(d as i32);
                cross * seg.length() + caps
            }
            Primitive::Annulus {
                center,
                inner,
                outer,
            } => {
                let d = center.dim();
                unit_ball_volume::<S>(d) * (outer.powi(d as i32) - inner.powi(d as i32))
            }
            Primitive::BallWithHoles { outer, holes } => holes
                .iter()
                .fold(outer.volume(), |acc, h| acc - h.volume()),
        }
    }

    /// Largest distance from the origin to a point of the primitive.
    pub fn bounding_radius(&self) -> S {
        match self {
            Primitive::Ball(b) => b.bounding_radius(),
            Primitive::Box(b) => b.bounding_radius(),
            Primitive::Capsule { seg, radius } => seg.a.norm().max(seg.b.norm()) + *radius,
            Primitive::Annulus { center, outer, .. } => center.norm() + *outer,
            Primitive::BallWithHoles { outer, .. } => outer.bounding_radius(),
        }
    }

    /// Range of distances `|x - c|` achieved over the primitive. Exact for
    /// every shape; used for annulus intersection tests.
    pub fn dist_range_to(&self, c: &Point<S>) -> (S, S) {
        match self {
            Primitive::Ball(b) => {
                let d = b.center.dist(c);
                ((d - b.radius).max(S::zero()), d + b.radius)
            }
            Primitive::Box(b) => (b.dist_to_point(c), b.max_dist_to_point(c)),
            Primitive::Capsule { seg, radius } => {
                let lo = (seg.dist_to_point(c) - *radius).max(S::zero());
                let hi = seg.a.dist(c).max(seg.b.dist(c)) + *radius;
                (lo, hi)
            }
            Primitive::Annulus {
                center,
                inner,
                outer,
            } => {
                let d = center.dist(c);
                let lo = if d > *outer {
                    d - *outer
                } else if d >= *inner {
                    S::zero()
                } else {
                    *inner - d
                };
                (lo, d + *outer)
            }
            Primitive::BallWithHoles { outer, .. } => {
                // Holes can only shrink the set; the outer range is an
                // enclosing interval, fine for the conservative tests below.
                let d = outer.center.dist(c);
                ((d - outer.radius).max(S::zero()), d + outer.radius)
            }
        }
    }

    fn fits_inside_ball(&self, ball: &Ball<S>) -> bool {
        let (_, hi) = self.dist_range_to(&ball.center);
        hi <= ball.radius + S::EPS_GEO
    }

    /// Whether the two primitives intersect.
    ///
    /// Exact for all pairs except those involving `BallWithHoles`, where the
    /// test is conservative: it may report an intersection for a shape that
    /// in fact sits entirely inside the union of several holes.
    pub fn intersects(&self, other: &Primitive<S>) -> bool {
        use Primitive::*;
        match (self, other) {
            (BallWithHoles { outer, holes }, o) | (o, BallWithHoles { outer, holes }) => {
                if !Primitive::Ball(outer.clone()).intersects(o) {
                    return false;
                }
                !holes.iter().any(|h| o.fits_inside_ball(h))
            }
            (Annulus { center, inner, outer }, o) | (o, Annulus { center, inner, outer }) => {
                let (lo, hi) = o.dist_range_to(center);
                lo <= *outer + S::EPS_GEO && hi >= *inner - S::EPS_GEO
            }
            (Ball(a), Ball(b)) => a.center.dist(&b.center) <= a.radius + b.radius + S::EPS_GEO,
            (Ball(a), Box(b)) | (Box(b), Ball(a)) => {
                b.dist_to_point(&a.center) <= a.radius + S::EPS_GEO
            }
            (Ball(a), Capsule { seg, radius }) | (Capsule { seg, radius }, Ball(a)) => {
                seg.dist_to_point(&a.center) <= a.radius + *radius + S::EPS_GEO
            }
            (Box(a), Box(b)) => (0..a.dim()).all(|i| {
                a.lo.coords[i] <= b.hi.coords[i] + S::EPS_GEO
                    && b.lo.coords[i] <= a.hi.coords[i] + S::EPS_GEO
            }),
            (Box(b), Capsule { seg, radius }) | (Capsule { seg, radius }, Box(b)) => {
                dist_segment_box(seg, b) <= *radius + S::EPS_GEO
            }
            (
                Capsule { seg: s1, radius: r1 },
                Capsule { seg: s2, radius: r2 },
            ) => dist_segment_segment(&s1.a, &s1.b, &s2.a, &s2.b) <= *r1 + *r2 + S::EPS_GEO,
        }
    }
}

/// Distance from a segment to a box. `d(p(t), box)` is convex in `t`, so a
/// ternary search converges to the minimum.
fn dist_segment_box<S: Scalar>(seg: &Segment<S>, b: &Aabb<S>) -> S {
    let mut lo = S::zero();
    let mut hi = S::one();
    let third = S::from_f64(1.0 / 3.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) * third;
        let m2 = hi - (hi - lo) * third;
        if b.dist_to_point(&seg.point_at(m1)) <= b.dist_to_point(&seg.point_at(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    b.dist_to_point(&seg.point_at(lo.half() + hi.half()))
}

/// A bounded region: a finite union of primitives.
///
/// The volume is the sum of primitive volumes, so construction rejects
/// overlapping primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(transparent)]
pub struct Region<S: Scalar> {
    prims: Vec<Primitive<S>>,
}

impl<S: Scalar> Region<S> {
    pub fn new(prims: Vec<Primitive<S>>) -> Result<Self> {
        if prims.is_empty() {
            return Err(Error::EmptyInput("region needs at least one primitive"));
        }
        let dim = prims[0].dim();
        for p in &prims {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        for i in 0..prims.len() {
            for j in i + 1..prims.len() {
                if prims[i].intersects(&prims[j]) {
                    return Err(Error::InvalidInput(format!(
                        "region primitives {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Region { prims })
    }

    pub fn ball(center: Point<S>, radius: S) -> Self {
        Region {
            prims: vec![Primitive::Ball(Ball::new(center, radius))],
        }
    }

    pub fn primitives(&self) -> &[Primitive<S>] {
        &self.prims
    }

    pub fn dim(&self) -> usize {
        self.prims[0].dim()
    }

    pub fn contains(&self, x: &Point<S>) -> bool {
        self.prims.iter().any(|p| p.contains(x))
    }

    pub fn volume(&self) -> S {
        self.prims
            .iter()
            .fold(S::zero(), |a, p| a + p.volume())
    }

    pub fn bounding_radius(&self) -> S {
        self.prims
            .iter()
            .map(|p| p.bounding_radius())
            .fold(S::zero(), |a, b| a.max(b))
    }

    pub fn intersects(&self, other: &Region<S>) -> bool {
        self.prims
            .iter()
            .any(|a| other.prims.iter().any(|b| a.intersects(b)))
    }
}

/// Inputs accepted by [`enlarge`].
pub enum Enlargeable<'a, S: Scalar> {
    Point(&'a Point<S>),
    Segment(&'a Segment<S>),
    Ball(&'a Ball<S>),
}

/// The `r`-enlargement `{x : d(x, a) <= r}` as an exact primitive:
/// point -> ball, segment -> capsule, ball -> ball.
pub fn enlarge<S: Scalar>(a: Enlargeable<'_, S>, r: S) -> Result<Primitive<S>> {
    if r <= S::zero() {
        return Err(Error::InvalidInput("enlargement radius must be > 0".into()));
    }
    Ok(match a {
        Enlargeable::Point(p) => Primitive::Ball(Ball::new(p.clone(), r)),
        Enlargeable::Segment(s) => Primitive::Capsule {
            seg: s.clone(),
            radius: r,
        },
        Enlargeable::Ball(b) => Primitive::Ball(Ball::new(b.center.clone(), b.radius + r)),
    })
}
