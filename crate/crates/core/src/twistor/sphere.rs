//! Points of the twistor sphere, unit quaternions, and quasi-uniform grids.

use rand::Rng;
use rand_distr::StandardNormal;

pub type Point = [f64; 3];
/// `q0 + q1 i + q2 j + q3 k`.
pub type Quaternion = [f64; 4];

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Point) -> Point {
    let r = norm(a);
    [a[0] / r, a[1] / r, a[2] / r]
}

pub fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Angle between two unit vectors.
pub fn angle(a: &Point, b: &Point) -> f64 {
    // atan2 keeps precision near 0 and π.
    norm(&cross(a, b)).atan2(dot(a, b))
}

pub fn qmul(p: &Quaternion, q: &Quaternion) -> Quaternion {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

pub fn qconj(q: &Quaternion) -> Quaternion {
    [q[0], -q[1], -q[2], -q[3]]
}

/// `Ad_g L = g⁻¹ L g` for `L = aI + bJ + cK` and `g` acting by left multiplication.
///
/// With this convention `⟨V^L, g ξ⟩ = ⟨V^{Ad_g L}, ξ⟩`.
pub fn adjoint(g: &Quaternion, l: &Point) -> Point {
    let r = qmul(&qmul(&qconj(g), &[0.0, l[0], l[1], l[2]]), g);
    [r[1], r[2], r[3]]
}

/// A unit quaternion `g` with `Ad_g from = to`.
pub fn rotation_between(from: &Point, to: &Point) -> Quaternion {
    // Ad_g is conjugation by q = ḡ; q = (1 + f·t, f × t) normalized rotates f to t.
    let (f, t) = (normalize(from), normalize(to));
    let c = dot(&f, &t);
    let q = if c < -1.0 + 1e-12 {
        let (u, _) = tangent_frame(&f);
        [0.0, u[0], u[1], u[2]]
    } else {
        let x = cross(&f, &t);
        let r = (2.0 * (1.0 + c)).sqrt();
        [r / 2.0, x[0] / r, x[1] / r, x[2] / r]
    };
    qconj(&q)
}

/// Rotation by `theta` about the unit `axis` (right-handed).
pub fn rotate_about(axis: &Point, theta: f64, p: &Point) -> Point {
    let (s, c) = theta.sin_cos();
    let k = axis;
    let kxp = cross(k, p);
    let kp = dot(k, p);
    [
        p[0] * c + kxp[0] * s + k[0] * kp * (1.0 - c),
        p[1] * c + kxp[1] * s + k[1] * kp * (1.0 - c),
        p[2] * c + kxp[2] * s + k[2] * kp * (1.0 - c),
    ]
}

/// Orthonormal `(u, v)` with `(u, v, axis)` a right-handed frame.
pub fn tangent_frame(axis: &Point) -> (Point, Point) {
    let a = normalize(axis);
    let seed = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = normalize(&cross(&seed, &a));
    let v = cross(&a, &u);
    (u, v)
}

/// Fibonacci lattice of `count` points, symmetric about `axis`, preceded by `axis` and `−axis`.
pub fn fibonacci_grid(count: usize, axis: &Point) -> Vec<Point> {
    let a = normalize(axis);
    let (u, v) = tangent_frame(&a);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(count + 2);
    out.push(a);
    out.push([-a[0], -a[1], -a[2]]);
    for k in 0..count {
        let z = 1.0 - (2 * k + 1) as f64 / count as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = (golden * k as f64).sin_cos();
        out.push([
            r * c * u[0] + r * s * v[0] + z * a[0],
            r * c * u[1] + r * s * v[1] + z * a[1],
            r * c * u[2] + r * s * v[2] + z * a[2],
        ]);
    }
    out
}

pub fn random_point<R: Rng>(rng: &mut R) -> Point {
    loop {
        let p: Point = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if norm(&p) > 1e-6 {
            return normalize(&p);
        }
    }
}

pub fn random_unit_quaternion<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let q: Quaternion =
            [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let r = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-6 {
            return [q[0] / r, q[1] / r, q[2] / r, q[3] / r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_units() {
        let (i, j, k) = ([0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(qmul(&i, &j), k);
        assert_eq!(qmul(&j, &k), i);
        assert_eq!(qmul(&k, &i), j);
        assert_eq!(qmul(&i, &i), [-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rotation_between_hits_target() {
        let targets = [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.3, -0.4, 0.5], [1.0, 0.0, 0.0]];
        for t in targets {
            let g = rotation_between(&[1.0, 0.0, 0.0], &t);
            let image = adjoint(&g, &[1.0, 0.0, 0.0]);
            let t = normalize(&t);
            assert!((0..3).all(|r| (image[r] - t[r]).abs() < 1e-12), "{image:?} vs {t:?}");
        }
    }

    #[test]
    fn grid_is_balanced() {
        let axis = normalize(&[1.0, 2.0, -0.5]);
        let grid = fibonacci_grid(2000, &axis);
        assert_eq!(grid.len(), 2002);
        let mean: Point = (0..3).map(|r| grid[2..].iter().map(|p| p[r]).sum::<f64>() / 2000.0).collect::<Vec<_>>().try_into().unwrap();
        assert!(norm(&mean) < 1e-3);
        assert!(grid.iter().all(|p| (norm(p) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rotation_preserves_axis() {
        let axis = normalize(&[0.2, 0.3, 0.9]);
        let p = rotate_about(&axis, 1.1, &axis);
        assert!((0..3).all(|r| (p[r] - axis[r]).abs() < 1e-14));
        let q = rotate_about(&axis, 0.7, &[1.0, 0.0, 0.0]);
        assert!((dot(&q, &axis) - axis[0]).abs() < 1e-14);
    }
}
