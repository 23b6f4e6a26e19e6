use crate::world::Vec3;
use crate::{Error, Result};

/// Distance from `p` to the infinite line through `a` and `b`; plain
/// point distance when `a` and `b` coincide.
pub fn perpendicular_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len = ab.norm();
    if len < 1e-12 {
        return (p - a).norm();
    }
    (p - a).cross(&ab).norm() / len
}

/// Indices retained by Ramer-Douglas-Peucker simplification, ascending.
///
/// A span keeps its farthest interior point (the first one on ties) when
/// that distance is strictly greater than `epsilon`, then both halves are
/// simplified in turn. Endpoints are always kept.
pub fn rdp_keyframes(points: &[Vec3], epsilon: f64) -> Result<Vec<usize>> {
    if points.len() < 2 {
        return Err(Error::Annotation(format!(
            "RDP needs at least 2 points, got {}",
            points.len()
        )));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Annotation(format!("epsilon must be > 0, got {epsilon}")));
    }
    let n = points.len();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (&points[lo], &points[hi]);
        let mut best = (lo, -1.0f64);
        for (i, p) in points.iter().enumerate().take(hi).skip(lo + 1) {
            let d = perpendicular_distance(p, a, b);
            if d > best.1 {
                best = (i, d);
            }
        }
        if best.1 > epsilon {
            keep[best.0] = true;
            stack.push((best.0, hi));
            stack.push((lo, best.0));
        }
    }
    Ok((0..n).filter(|&i| keep[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent reference: the textbook recursion returning point lists.
    fn reference(points: &[Vec3], offset: usize, eps: f64) -> Vec<usize> {
        let n = points.len();
        if n <= 2 {
            return (offset..offset + n).collect();
        }
        let (a, b) = (points[0], points[n - 1]);
        let mut idx = 0;
        let mut dmax = -1.0;
        for (i, p) in points.iter().enumerate().take(n - 1).skip(1) {
            let d = perpendicular_distance(p, &a, &b);
            if d > dmax {
                dmax = d;
                idx = i;
            }
        }
        if dmax > eps {
            let mut left = reference(&points[..=idx], offset, eps);
            let right = reference(&points[idx..], offset + idx, eps);
            left.pop();
            left.extend(right);
            left
        } else {
            vec![offset, offset + n - 1]
        }
    }

    #[test]
    fn collinear_keeps_endpoints() {
        let pts: Vec<Vec3> = (0..50).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.5)).collect();
        for eps in [1e-6, 0.1, 10.0] {
            assert_eq!(rdp_keyframes(&pts, eps).unwrap(), vec![0, 49]);
        }
    }

    #[test]
    fn square_wave_keeps_corners() {
        // 0,0 -> 0,1 -> 1,1 -> 1,0 -> 2,0 -> 2,1 ...
        let mut pts = Vec::new();
        for k in 0..6 {
            let x = k as f64;
            let (y0, y1) = if k % 2 == 0 { (0.0, 1.0) } else { (1.0, 0.0) };
            pts.push(Vec3::new(x, y0, 0.0));
            pts.push(Vec3::new(x, y1, 0.0));
        }
        // Corners sit 1/sqrt(5) off the chords spanning two columns.
        let got = rdp_keyframes(&pts, 0.4).unwrap();
        assert_eq!(got, (0..pts.len()).collect::<Vec<_>>());
        assert_eq!(got, reference(&pts, 0, 0.4));
        assert_eq!(rdp_keyframes(&pts, 0.5).unwrap(), reference(&pts, 0, 0.5));
    }

    #[test]
    fn large_epsilon_keeps_endpoints() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 3.0, 0.0),
            Vec3::new(-2.0, 1.0, 4.0),
            Vec3::new(5.0, 0.0, 0.0),
        ];
        assert_eq!(rdp_keyframes(&pts, 100.0).unwrap(), vec![0, 3]);
    }

    #[test]
    fn degenerate_endpoints_use_point_distance() {
        let a = Vec3::new(1.0, 1.0, 1.0);
        let p = Vec3::new(1.0, 4.0, 5.0);
        assert_eq!(perpendicular_distance(&p, &a, &a), 5.0);
        let pts = vec![a, p, a];
        assert_eq!(rdp_keyframes(&pts, 1.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rdp_keyframes(&[Vec3::zeros()], 0.1).is_err());
        assert!(rdp_keyframes(&[Vec3::zeros(), Vec3::x()], 0.0).is_err());
    }

    #[test]
    fn matches_reference_on_random_walks() {
        use rand::Rng;
        let mut rng = crate::seed::rng(&[17]);
        for _ in 0..200 {
            let n = rng.random_range(2..120);
            let mut p = Vec3::zeros();
            let pts: Vec<Vec3> = (0..n)
                .map(|_| {
                    p += Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    p
                })
                .collect();
            let eps = rng.random_range(0.05..3.0);
            assert_eq!(rdp_keyframes(&pts, eps).unwrap(), reference(&pts, 0, eps));
        }
    }
}
