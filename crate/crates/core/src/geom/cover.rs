//! Chains of ball centers covering a curve enlargement.

use super::Point;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Curve input for [`cover_chain`]: either a polyline to be walked, or an
/// already-ordered point set that must satisfy the chain condition
/// `d({c_0..c_{i-1}}, c_i) <= size - 2 * precision`.
pub enum Curve<'a, S: Scalar> {
    Polyline(&'a [Point<S>]),
    Chain(&'a [Point<S>]),
}

/// Ordered ball centers along the curve, starting at `start`.
///
/// Consecutive-set gaps are at most `size - 2 * precision`, and the balls
/// `B(c_i, size - precision)` cover the enlargement of the curve by
/// `size - 2 * precision`. The walk spacing is tightened to
/// `2 * sqrt(precision * (2 size - 3 precision))` where that is smaller, which
/// is what makes the coverage exact for straight pieces (right-triangle bound)
/// and at vertices (every vertex joins the chain).
pub fn cover_chain<S: Scalar>(
    curve: Curve<'_, S>,
    start: &Point<S>,
    size: S,
    precision: S,
) -> Result<Vec<Point<S>>> {
    let two = S::from_f64(2.0);
    if precision <= S::zero() || precision >= size / two {
        return Err(Error::InvalidInput(format!(
            "precision must lie in (0, size/2), got precision={precision}, size={size}"
        )));
    }
    let gap = size - two * precision;
    match curve {
        Curve::Chain(points) => {
            if points.is_empty() {
                return Err(Error::EmptyInput("cover_chain of empty point set"));
            }
            if points[0].dist(start) > S::EPS_GEO {
                return Err(Error::InvalidInput("chain must start at the start point".into()));
            }
            for i in 1..points.len() {
                let d = (0..i)
                    .map(|j| points[j].dist(&points[i]))
                    .fold(S::infinity(), |a, b| a.min(b));
                if d > gap + S::EPS_GEO {
                    return Err(Error::InvalidInput(format!(
                        "chain condition violated at point {i}: set distance {d} > {gap}"
                    )));
                }
            }
            Ok(points.to_vec())
        }
        Curve::Polyline(vertices) => {
            if vertices.is_empty() {
                return Err(Error::EmptyInput("cover_chain of empty polyline"));
            }
            let three = S::from_f64(3.0);
            let cover_gap = two * (precision * (two * size - three * precision)).sqrt();
            let spacing = gap.min(cover_gap);
            let (seg_idx, t0) = locate_on_polyline(vertices, start)?;
            let mut chain = vec![start.clone()];
            walk(vertices, seg_idx, t0, true, spacing, &mut chain);
            walk(vertices, seg_idx, t0, false, spacing, &mut chain);
            Ok(chain)
        }
    }
}

/// Largest chain-condition gap of an ordered chain (0 for a single point).
pub fn chain_gap<S: Scalar>(chain: &[Point<S>]) -> S {
    let mut worst = S::zero();
    for i in 1..chain.len() {
        let d = (0..i)
            .map(|j| chain[j].dist(&chain[i]))
            .fold(S::infinity(), |a, b| a.min(b));
        worst = worst.max(d);
    }
    worst
}

fn locate_on_polyline<S: Scalar>(vertices: &[Point<S>], x: &Point<S>) -> Result<(usize, S)> {
    if vertices.len() == 1 {
        if vertices[0].dist(x) <= S::EPS_GEO {
            return Ok((0, S::zero()));
        }
        return Err(Error::InvalidInput("start point not on the polyline".into()));
    }
    let loose = S::from_f64(1e-9);
    for i in 0..vertices.len() - 1 {
        let a = &vertices[i];
        let b = &vertices[i + 1];
        let len = a.dist(b);
        if len == S::zero() {
            continue;
        }
        let dir: Vec<S> = (0..a.dim())
            .map(|k| (b.coords[k] - a.coords[k]) / len)
            .collect();
        let t = (0..a.dim())
            .map(|k| (x.coords[k] - a.coords[k]) * dir[k])
            .fold(S::zero(), |acc, v| acc + v)
            .max(S::zero())
            .min(len);
        if a.add_scaled(&dir, t).dist(x) <= loose {
            return Ok((i, t));
        }
    }
    Err(Error::InvalidInput("start point not on the polyline".into()))
}

/// Emit points from `(seg, t0)` toward the end (`forward`) or the start,
/// spaced at most `spacing` apart along arclength, including every vertex.
fn walk<S: Scalar>(
    vertices: &[Point<S>],
    seg: usize,
    t0: S,
    forward: bool,
    spacing: S,
    out: &mut Vec<Point<S>>,
) {
    let mut emit = |p: Point<S>| {
        if out.last().map_or(true, |q| q.dist(&p) > S::EPS_GEO) {
            out.push(p);
        }
    };
    let segment_points = |a: &Point<S>, b: &Point<S>, from: S, out: &mut dyn FnMut(Point<S>)| {
        let len = a.dist(b);
        let remain = if forward { len - from } else { from };
        if remain <= S::zero() {
            return;
        }
        let steps = (remain / spacing).to_f64().ceil().max(1.0) as usize;
        let step = remain / S::from_f64(steps as f64);
        let dir: Vec<S> = (0..a.dim())
            .map(|k| (b.coords[k] - a.coords[k]) / len)
            .collect();
        for s in 1..=steps {
            let t = if forward {
                from + step * S::from_f64(s as f64)
            } else {
                from - step * S::from_f64(s as f64)
            };
            out(a.add_scaled(&dir, t));
        }
    };
    if vertices.len() < 2 {
        return;
    }
    if forward {
        let mut from = t0;
        for i in seg..vertices.len() - 1 {
            segment_points(&vertices[i], &vertices[i + 1], from, &mut emit);
            from = S::zero();
        }
    } else {
        let mut from = t0;
        for i in (0..=seg).rev() {
            segment_points(&vertices[i], &vertices[i + 1], from, &mut emit);
            from = vertices[i].dist(&vertices[i + 1]);
            if i == 0 {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(x: f64, y: f64) -> Point<f64> {
        Point::new(vec![x, y])
    }

    #[test]
    fn single_point_chain() {
        let c0 = p2(0.5, 0.5);
        let chain = cover_chain(Curve::Polyline(&[c0.clone()]), &c0, 1.0, 0.2).unwrap();
        assert_eq!(chain, vec![c0]);
    }

    #[test]
    fn segment_chain_gaps() {
        let verts = [p2(0.0, 0.0), p2(3.0, 0.0)];
        let chain = cover_chain(Curve::Polyline(&verts), &verts[0], 1.0, 0.2).unwrap();
        assert_eq!(chain.len(), 6);
        assert!(chain_gap(&chain) <= 0.6 + 1e-12);
        assert_eq!(chain[0], p2(0.0, 0.0));
    }

    #[test]
    fn start_in_the_middle_walks_both_ways() {
        let verts = [p2(0.0, 0.0), p2(3.0, 0.0)];
        let start = p2(1.2, 0.0);
        let chain = cover_chain(Curve::Polyline(&verts), &start, 1.0, 0.2).unwrap();
        assert_eq!(chain[0], start);
        assert!(chain.iter().any(|p| p.coords[0] < 0.01));
        assert!(chain.iter().any(|p| p.coords[0] > 2.99));
        assert!(chain_gap(&chain) <= 0.6 + 1e-12);
    }

    #[test]
    fn precision_must_be_below_half_size() {
        let verts = [p2(0.0, 0.0), p2(3.0, 0.0)];
        assert!(cover_chain(Curve::Polyline(&verts), &verts[0], 1.0, 0.5).is_err());
        assert!(cover_chain(Curve::Polyline(&verts), &verts[0], 1.0, 0.0).is_err());
    }

    #[test]
    fn start_must_lie_on_curve() {
        let verts = [p2(0.0, 0.0), p2(3.0, 0.0)];
        assert!(cover_chain(Curve::Polyline(&verts), &p2(1.0, 1.0), 1.0, 0.2).is_err());
    }

    #[test]
    fn explicit_chain_is_validated() {
        let good = [p2(0.0, 0.0), p2(0.5, 0.0), p2(0.5, 0.5)];
        let chain = cover_chain(Curve::Chain(&good), &good[0], 1.0, 0.2).unwrap();
        assert_eq!(chain.len(), 3);
        let bad = [p2(0.0, 0.0), p2(2.0, 0.0)];
        assert!(cover_chain(Curve::Chain(&bad), &bad[0], 1.0, 0.2).is_err());
    }

    /// Grid-sampled coverage oracle: every sample of the curve enlargement by
    /// `size - 2 precision` lies in some ball `B(c_i, size - precision)`.
    fn assert_covers(verts: &[Point<f64>], chain: &[Point<f64>], size: f64, precision: f64, pitch: f64) {
        let reach = size - 2.0 * precision;
        let (mut lo, mut hi) = (vec![f64::MAX; 2], vec![f64::MIN; 2]);
        for v in verts {
            for k in 0..2 {
                lo[k] = lo[k].min(v.coords[k] - reach);
                hi[k] = hi[k].max(v.coords[k] + reach);
            }
        }
        let dist_to_polyline = |x: &Point<f64>| -> f64 {
            if verts.len() == 1 {
                return verts[0].dist(x);
            }
            (0..verts.len() - 1)
                .map(|i| super::super::dist_point_segment(x, &verts[i], &verts[i + 1]))
                .fold(f64::INFINITY, f64::min)
        };
        let nx = ((hi[0] - lo[0]) / pitch).ceil() as usize;
        let ny = ((hi[1] - lo[1]) / pitch).ceil() as usize;
        let mut checked = 0usize;
        for ix in 0..=nx {
            for iy in 0..=ny {
                let x = Point::new(vec![lo[0] + ix as f64 * pitch, lo[1] + iy as f64 * pitch]);
                if dist_to_polyline(&x) > reach {
                    continue;
                }
                checked += 1;
                let covered = chain.iter().any(|c| c.dist(&x) <= size - precision);
                assert!(covered, "uncovered sample at {:?}", x.coords);
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn segment_coverage_oracle() {
        let verts = [p2(0.0, 0.0), p2(3.0, 0.0)];
        let chain = cover_chain(Curve::Polyline(&verts), &verts[0], 1.0, 0.2).unwrap();
        assert_covers(&verts, &chain, 1.0, 0.2, 0.05);
    }

    #[test]
    fn l_shape_coverage_oracle() {
        let verts = [p2(0.0, 0.0), p2(2.0, 0.0), p2(2.0, 2.0)];
        let chain = cover_chain(Curve::Polyline(&verts), &verts[0], 1.0, 0.1).unwrap();
        assert!(chain_gap(&chain) <= 0.8 + 1e-12);
        assert_covers(&verts, &chain, 1.0, 0.1, 0.025);
    }
}
