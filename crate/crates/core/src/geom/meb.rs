//! Minimal enclosing balls of point sets and of ball sets.

use super::{Ball, Point};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimal enclosing ball of a nonempty finite point set (Welzl's algorithm
/// with move-to-front, exact small-case circumsphere solves).
pub fn min_enclosing_ball<S: Scalar>(points: &[Point<S>]) -> Result<Ball<S>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("min_enclosing_ball of no points"));
    }
    let dim = points[0].dim();
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
    }
    let balls: Vec<Ball<S>> = points
        .iter()
        .map(|p| Ball::new(p.clone(), S::zero()))
        .collect();
    min_enclosing_ball_of_balls(&balls)
}

/// Minimal enclosing ball of a nonempty finite set of balls. Points are the
/// radius-zero special case.
pub fn min_enclosing_ball_of_balls<S: Scalar>(balls: &[Ball<S>]) -> Result<Ball<S>> {
    if balls.is_empty() {
        return Err(Error::EmptyInput("min_enclosing_ball of no balls"));
    }
    let dim = balls[0].dim();
    for b in balls {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.dim(),
            });
        }
    }
    let mut work: Vec<Ball<S>> = balls.to_vec();
    // deterministic shuffle: Welzl's recursion is expected-linear on a
    // random order, and a fixed seed keeps results reproducible
    let mut state = 0x8f1b_bcdc_u64 ^ (balls.len() as u64);
    for i in (1..work.len()).rev() {
        state = state
            .wrapping_mul(0x5851_f42d_4c95_7f2d)
            .wrapping_add(0x1405_7b7e_f767_814f);
        work.swap(i, (state >> 33) as usize % (i + 1));
    }
    let mut best = welzl(&mut work, &mut Vec::new(), dim);
    if !contains_all(&best, balls) {
        // Welzl can mis-handle rare ball (nonzero radius) configurations;
        // fall back to exhaustive support-set search, which is exact.
        if let Some(b) = exhaustive(balls, dim) {
            best = b;
        }
    }
    debug_assert!(contains_all(&best, balls));
    Ok(best)
}

fn slack<S: Scalar>() -> S {
    S::EPS_GEO * S::from_f64(100.0)
}

fn contains_ball<S: Scalar>(outer: &Ball<S>, inner: &Ball<S>) -> bool {
    outer.center.dist(&inner.center) + inner.radius <= outer.radius + slack::<S>()
}

fn contains_all<S: Scalar>(outer: &Ball<S>, balls: &[Ball<S>]) -> bool {
    balls.iter().all(|b| contains_ball(outer, b))
}

fn welzl<S: Scalar>(work: &mut [Ball<S>], support: &mut Vec<Ball<S>>, dim: usize) -> Ball<S> {
    if work.is_empty() || support.len() == dim + 1 {
        return ball_of_support(support, dim);
    }
    let candidate = work[0].clone();
    let d = welzl(&mut work[1..], support, dim);
    if contains_ball(&d, &candidate) {
        return d;
    }
    support.push(candidate);
    let d = welzl(&mut work[1..], support, dim);
    support.pop();
    d
}

/// Smallest ball with every support ball internally tangent (i.e. touching
/// the enclosing sphere). Falls back to the best pairwise hull when the
/// tangency system is degenerate.
fn ball_of_support<S: Scalar>(support: &[Ball<S>], dim: usize) -> Ball<S> {
    match support.len() {
        // sentinel "empty" ball that contains nothing
        0 => Ball {
            center: Point::origin(dim),
            radius: -S::one(),
        },
        1 => support[0].clone(),
        2 => hull_of_two(&support[0], &support[1]),
        _ => tangent_ball(support).unwrap_or_else(|| {
            // degenerate support: the true support is a strict subset
            let mut best: Option<Ball<S>> = None;
            for i in 0..support.len() {
                for j in i + 1..support.len() {
                    let h = hull_of_two(&support[i], &support[j]);
                    if contains_all(&h, support)
                        && best.as_ref().map_or(true, |b| h.radius < b.radius)
                    {
                        best = Some(h);
                    }
                }
            }
            best.unwrap_or_else(|| support[0].clone())
        }),
    }
}

/// Minimal ball containing two balls.
fn hull_of_two<S: Scalar>(a: &Ball<S>, b: &Ball<S>) -> Ball<S> {
    let d = a.center.dist(&b.center);
    if d + a.radius <= b.radius {
        return b.clone();
    }
    if d + b.radius <= a.radius {
        return a.clone();
    }
    let radius = (d + a.radius + b.radius).half();
    // center sits on the segment, shifted toward the larger ball
    let t = (radius - a.radius) / d;
    let dir: Vec<S> = a
        .center
        .coords
        .iter()
        .zip(&b.center.coords)
        .map(|(&x, &y)| y - x)
        .collect();
    Ball::new(a.center.add_scaled(&dir, t), radius)
}

/// Solve for the ball with all k support balls internally tangent:
/// |c - c_i| = R - r_i. The center lies in the affine hull of the support
/// centers; eliminating the quadratic terms pairwise leaves a linear system
/// whose solution is affine in R, and the base tangency equation then gives a
/// quadratic in R.
fn tangent_ball<S: Scalar>(support: &[Ball<S>]) -> Option<Ball<S>> {
    let k = support.len();
    let dim = support[0].dim();
    let c0 = &support[0].center;
    let r0 = support[0].radius;
    let m = k - 1;
    // rows: 2 (c_i - c_0) . (c - c_0) = const_i + lin_i * R
    // with c - c_0 = sum_j lambda_j (c_j - c_0)
    let basis: Vec<Vec<S>> = (1..k)
        .map(|i| {
            (0..dim)
                .map(|t| support[i].center.coords[t] - c0.coords[t])
                .collect()
        })
        .collect();
    let dot = |a: &[S], b: &[S]| -> S {
        a.iter()
            .zip(b)
            .fold(S::zero(), |acc, (&x, &y)| acc + x * y)
    };
    let two = S::from_f64(2.0);
    let mut mat = vec![vec![S::zero(); m]; m];
    let mut rhs_const = vec![S::zero(); m];
    let mut rhs_lin = vec![S::zero(); m];
    for i in 0..m {
        for j in 0..m {
            mat[i][j] = two * dot(&basis[i], &basis[j]);
        }
        let ri = support[i + 1].radius;
        // |c_i - c_0|^2 + (r_i^2 - r_0^2) ... derived from
        // |c - c_i|^2 - |c - c_0|^2 = (R - r_i)^2 - (R - r_0)^2
        rhs_const[i] = dot(&basis[i], &basis[i]) - (ri * ri - r0 * r0);
        rhs_lin[i] = -two * (ri - r0);
    }
    let u = solve(&mat, &rhs_const)?;
    let v = solve(&mat, &rhs_lin)?;
    // c(R) = c0 + sum (u_j + R v_j) basis_j; plug into |c - c0| = R - r0
    let mut quad_a = S::zero();
    let mut quad_b = S::zero();
    let mut quad_c = S::zero();
    for i in 0..m {
        for j in 0..m {
            let g = dot(&basis[i], &basis[j]);
            quad_a = quad_a + v[i] * v[j] * g;
            quad_b = quad_b + (u[i] * v[j] + v[i] * u[j]) * g;
            quad_c = quad_c + u[i] * u[j] * g;
        }
    }
    // |c - c0|^2 = (R - r0)^2
    quad_a = quad_a - S::one();
    quad_b = quad_b + two * r0;
    quad_c = quad_c - r0 * r0;
    let mut candidates = Vec::new();
    if quad_a.abs() < S::EPS_GEO {
        if quad_b.abs() > S::EPS_GEO {
            candidates.push(-quad_c / quad_b);
        }
    } else {
        let disc = quad_b * quad_b - S::from_f64(4.0) * quad_a * quad_c;
        if disc < S::zero() {
            return None;
        }
        let root = disc.sqrt();
        candidates.push((-quad_b + root) / (two * quad_a));
        candidates.push((-quad_b - root) / (two * quad_a));
    }
    let max_r = support
        .iter()
        .map(|b| b.radius)
        .fold(S::zero(), |a, b| a.max(b));
    let mut best: Option<Ball<S>> = None;
    for radius in candidates {
        if !radius.is_finite() || radius < max_r - slack::<S>() {
            continue;
        }
        let mut center = c0.clone();
        for j in 0..m {
            center = center.add_scaled(&basis[j], u[j] + radius * v[j]);
        }
        let ball = Ball::new(center, radius.max(max_r));
        if contains_all(&ball, support) && best.as_ref().map_or(true, |b| ball.radius < b.radius) {
            best = Some(ball);
        }
    }
    best
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve<S: Scalar>(mat: &[Vec<S>], rhs: &[S]) -> Option<Vec<S>> {
    let n = rhs.len();
    let mut a: Vec<Vec<S>> = mat.to_vec();
    let mut b: Vec<S> = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < S::EPS_GEO * S::from_f64(1e-3) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Exact exhaustive search over support subsets of size <= dim + 1.
fn exhaustive<S: Scalar>(balls: &[Ball<S>], dim: usize) -> Option<Ball<S>> {
    let n = balls.len();
    let mut best: Option<Ball<S>> = None;
    let mut subset = Vec::new();
    fn rec<S: Scalar>(
        balls: &[Ball<S>],
        start: usize,
        left: usize,
        subset: &mut Vec<Ball<S>>,
        dim: usize,
        best: &mut Option<Ball<S>>,
    ) {
        if !subset.is_empty() {
            let cand = ball_of_support(subset, dim);
            if cand.radius >= S::zero()
                && contains_all(&cand, balls)
                && best.as_ref().map_or(true, |b| cand.radius < b.radius)
            {
                *best = Some(cand);
            }
        }
        if left == 0 || start == balls.len() {
            return;
        }
        for i in start..balls.len() {
            subset.push(balls[i].clone());
            rec(balls, i + 1, left - 1, subset, dim, best);
            subset.pop();
        }
    }
    rec(balls, 0, (dim + 1).min(n), &mut subset, dim, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point<f64> {
        Point::new(coords.to_vec())
    }

    #[test]
    fn single_ball_is_its_own_meb() {
        let b = Ball::new(pt(&[1.0, 2.0]), 0.5);
        let m = min_enclosing_ball_of_balls(&[b.clone()]).unwrap();
        assert_eq!(m, b);
    }

    #[test]
    fn equilateral_triangle_circumcircle() {
        let h = 3.0f64.sqrt() / 2.0;
        let pts = [pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, h])];
        let m = min_enclosing_ball(&pts).unwrap();
        assert!((m.radius - 1.0 / 3.0f64.sqrt()).abs() < 1e-9);
        assert!((m.center.coords[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_points_diameter() {
        let m = min_enclosing_ball(&[pt(&[0.0, 0.0]), pt(&[2.0, 0.0])]).unwrap();
        assert!((m.radius - 1.0).abs() < 1e-12);
        assert!((m.center.coords[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nested_ball_is_ignored() {
        let outer = Ball::new(pt(&[0.0, 0.0]), 3.0);
        let inner = Ball::new(pt(&[1.0, 0.0]), 0.5);
        let m = min_enclosing_ball_of_balls(&[outer.clone(), inner]).unwrap();
        assert!((m.radius - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_disjoint_balls() {
        let a = Ball::new(pt(&[-2.0, 0.0]), 1.0);
        let b = Ball::new(pt(&[2.0, 0.0]), 1.0);
        let m = min_enclosing_ball_of_balls(&[a, b]).unwrap();
        assert!((m.radius - 3.0).abs() < 1e-9);
        assert!(m.center.coords[0].abs() < 1e-9);
    }

    #[test]
    fn three_balls_symmetric() {
        let h = 3.0f64.sqrt() / 2.0;
        let balls = [
            Ball::new(pt(&[0.0, 0.0]), 0.25),
            Ball::new(pt(&[1.0, 0.0]), 0.25),
            Ball::new(pt(&[0.5, h]), 0.25),
        ];
        let m = min_enclosing_ball_of_balls(&balls).unwrap();
        assert!((m.radius - (1.0 / 3.0f64.sqrt() + 0.25)).abs() < 1e-9);
    }

    #[test]
    fn meb_is_idempotent() {
        let pts = [
            pt(&[0.1, 0.4]),
            pt(&[2.0, -0.3]),
            pt(&[1.0, 1.7]),
            pt(&[0.3, 1.0]),
        ];
        let m = min_enclosing_ball(&pts).unwrap();
        for p in &pts {
            assert!(m.contains(p));
        }
        let again = min_enclosing_ball_of_balls(&[m.clone()]).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn collinear_points() {
        let pts = [pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[3.0, 0.0])];
        let m = min_enclosing_ball(&pts).unwrap();
        assert!((m.radius - 1.5).abs() < 1e-9);
        assert!((m.center.coords[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(min_enclosing_ball::<f64>(&[]).is_err());
    }

    #[test]
    fn meb_3d_simplex() {
        // regular tetrahedron vertices
        let t = [
            Point::new(vec![1.0, 1.0, 1.0]),
            Point::new(vec![1.0, -1.0, -1.0]),
            Point::new(vec![-1.0, 1.0, -1.0]),
            Point::new(vec![-1.0, -1.0, 1.0]),
        ];
        let m = min_enclosing_ball(&t).unwrap();
        assert!((m.radius - 3.0f64.sqrt()).abs() < 1e-9);
        assert!(m.center.norm() < 1e-9);
    }
}
