//! Cylindrical shells around an axis segment, and the two right-triangle
//! identities used when routing growth past a sphere boundary.

use serde::{Deserialize, Serialize};

use super::{Point, Segment};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The set of points at exact distance `radius` from the axis line whose
/// axial projection falls on the axis segment (closed interval).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CylindricalShell<S: Scalar> {
    pub axis: Segment<S>,
    pub radius: S,
}

impl<S: Scalar> CylindricalShell<S> {
    pub fn new(axis: Segment<S>, radius: S) -> Result<Self> {
        if radius <= S::zero() {
            return Err(Error::InvalidInput("shell radius must be > 0".into()));
        }
        Ok(CylindricalShell { axis, radius })
    }

    /// Axial coordinate and distance-to-axis-line of `x`, relative to the
    /// axis direction (axial coordinate 0 at `axis.a`).
    fn cylinder_coords(&self, x: &Point<S>) -> (S, S) {
        let dim = x.dim();
        let len = self.axis.length();
        let dir: Vec<S> = (0..dim)
            .map(|i| (self.axis.b.coords[i] - self.axis.a.coords[i]) / len)
            .collect();
        let rel: Vec<S> = (0..dim)
            .map(|i| x.coords[i] - self.axis.a.coords[i])
            .collect();
        let t = rel
            .iter()
            .zip(&dir)
            .fold(S::zero(), |a, (&r, &d)| a + r * d);
        let mut perp2 = S::zero();
        for i in 0..dim {
            let p = rel[i] - t * dir[i];
            perp2 = perp2 + p * p;
        }
        (t, perp2.sqrt())
    }

    pub fn contains(&self, x: &Point<S>) -> bool {
        let (t, rho) = self.cylinder_coords(x);
        t >= -S::EPS_GEO
            && t <= self.axis.length() + S::EPS_GEO
            && (rho - self.radius).abs() <= S::EPS_GEO
    }

    /// Distance from `x` to the shell.
    pub fn dist_to_point(&self, x: &Point<S>) -> S {
        let (t, rho) = self.cylinder_coords(x);
        let radial = (rho - self.radius).abs();
        let len = self.axis.length();
        let axial = if t < S::zero() {
            -t
        } else if t > len {
            t - len
        } else {
            S::zero()
        };
        (radial * radial + axial * axial).sqrt()
    }
}

/// Distance from the shell of radius `shell_r` sitting at axial coordinate
/// `sphere_r - depth` to the sphere of radius `sphere_r` around the origin:
/// `sphere_r - sqrt((sphere_r - depth)^2 + shell_r^2)`.
///
/// Requires `0 <= shell_r <= depth <= sphere_r`; the result is then at least
/// `depth - shell_r`.
pub fn shell_to_sphere_distance<S: Scalar>(sphere_r: S, depth: S, shell_r: S) -> Result<S> {
    if !(S::zero() <= shell_r && shell_r <= depth && depth <= sphere_r) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= shell_r <= depth <= sphere_r, got shell_r={shell_r}, depth={depth}, sphere_r={sphere_r}"
        )));
    }
    let axial = sphere_r - depth;
    Ok(sphere_r - (axial * axial + shell_r * shell_r).sqrt())
}

/// Axial coordinate `b` such that the shell of radius `shell_r` at `b` is at
/// distance `size + 2 * pad` from the axis point `next`:
/// `b = next - sqrt((size + 2 pad)^2 - shell_r^2)`.
///
/// Requires `shell_r < size + 2 * pad` so the right triangle exists.
pub fn shell_axial_offset<S: Scalar>(size: S, shell_r: S, pad: S, next: S) -> Result<S> {
    let reach = size + pad + pad;
    if shell_r >= reach {
        return Err(Error::InvalidInput(format!(
            "shell radius {shell_r} must be smaller than the reach {reach}"
        )));
    }
    Ok(next - (reach * reach - shell_r * shell_r).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_sphere_distance_examples() {
        // degenerate: shell collapses to the point at axial coordinate r2
        let d: f64 = shell_to_sphere_distance(10.0, 0.0, 0.0).unwrap();
        assert!(d.abs() < 1e-12);

        let d = shell_to_sphere_distance(10.0, 6.0, 2.0).unwrap();
        assert!((d - (10.0 - 20.0f64.sqrt())).abs() < 1e-12);
        assert!(d >= 4.0); // >= depth - shell_r

        let d = shell_to_sphere_distance(10.0, 6.0, 6.0).unwrap();
        assert!((d - (10.0 - 52.0f64.sqrt())).abs() < 1e-12);
        assert!(d >= 0.0);
    }

    #[test]
    fn shell_sphere_distance_rejects_bad_chain() {
        assert!(shell_to_sphere_distance::<f64>(10.0, 6.0, 7.0).is_err());
        assert!(shell_to_sphere_distance::<f64>(10.0, 11.0, 2.0).is_err());
    }

    #[test]
    fn shell_axial_offset_examples() {
        let b = shell_axial_offset(1.0, 0.25, 0.005, 5.0).unwrap();
        assert!((b - (5.0 - (1.01f64 * 1.01 - 0.0625).sqrt())).abs() < 1e-12);
        assert!((b - 4.021430).abs() < 1e-5);
        // the defining equation: d(shell at b, axis point 5) = size + 2 pad
        let check = ((5.0 - b) * (5.0 - b) + 0.25 * 0.25f64).sqrt();
        assert!((check - 1.01).abs() < 1e-12);

        // shell_r = 0 collapses to an axis point
        let b: f64 = shell_axial_offset(1.0, 0.0, 0.005, 5.0).unwrap();
        assert!((b - (5.0 - 1.01)).abs() < 1e-12);
    }

    #[test]
    fn shell_axial_offset_sits_between_bounds() {
        // with pad <= shell_r^2 / (8 size) and 2 shell_r <= size:
        // a <= b <= a + shell_r / 2 where a = next - (size - 2 pad)
        let (size, shell_r, pad, next) = (1.0, 0.25, 0.005, 5.0);
        let a = next - (size - 2.0 * pad);
        let b = shell_axial_offset(size, shell_r, pad, next).unwrap();
        assert!((a - 4.01f64).abs() < 1e-12);
        assert!(a <= b && b <= a + shell_r / 2.0);
    }

    #[test]
    fn shell_membership_and_distance() {
        let axis = Segment::new(Point::<f64>::new(vec![0.0, 0.0, 0.0]), Point::new(vec![4.0, 0.0, 0.0]));
        let sh = CylindricalShell::new(axis, 1.0).unwrap();
        assert!(sh.contains(&Point::new(vec![2.0, 1.0, 0.0])));
        assert!(sh.contains(&Point::new(vec![0.0, 0.0, 1.0])));
        assert!(!sh.contains(&Point::new(vec![2.0, 0.5, 0.0])));
        assert!(!sh.contains(&Point::new(vec![5.0, 1.0, 0.0])));
        let d = sh.dist_to_point(&Point::new(vec![5.0, 1.0, 0.0]));
        assert!((d - 1.0).abs() < 1e-12);
        let d = sh.dist_to_point(&Point::new(vec![2.0, 0.0, 0.0]));
        assert!((d - 1.0).abs() < 1e-12);
    }
}
