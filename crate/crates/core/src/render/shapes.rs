//! Parametric solids in their local frame: ray intersection, point
//! containment and bounds.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed solid described in object-local coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Box with its two large faces normal to local z.
    Slab {
        thickness: f64,
        half_width: f64,
        half_height: f64,
    },
    /// Sphere centered on the local origin.
    Sphere { radius: f64 },
    /// Biconvex lens: intersection of two balls. The front vertex sits at
    /// `z = -thickness/2`, the back vertex at `z = +thickness/2`.
    Lens {
        front_radius: f64,
        back_radius: f64,
        thickness: f64,
    },
    /// Surface of revolution: a closed `(r, z)` polygon revolved about local z.
    Sor { profile: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Hit {
    pub t: f64,
    pub normal: Vector3<f64>,
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Shape::Slab {
                thickness,
                half_width,
                half_height,
            } => {
                positive("slab thickness", *thickness)?;
                positive("slab half_width", *half_width)?;
                positive("slab half_height", *half_height)
            }
            Shape::Sphere { radius } => positive("sphere radius", *radius),
            Shape::Lens {
                front_radius,
                back_radius,
                thickness,
            } => {
                positive("lens front_radius", *front_radius)?;
                positive("lens back_radius", *back_radius)?;
                positive("lens thickness", *thickness)?;
                if *thickness > 2.0 * front_radius.min(*back_radius) {
                    return Err(Error::invalid(format!(
                        "lens thickness {thickness} exceeds the smaller cap diameter"
                    )));
                }
                Ok(())
            }
            Shape::Sor { profile } => validate_profile(profile),
        }
    }

    /// Radius of a local-origin-centered sphere enclosing the solid.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Slab {
                thickness,
                half_width,
                half_height,
            } => (half_width.powi(2) + half_height.powi(2) + (thickness / 2.0).powi(2)).sqrt(),
            Shape::Sphere { radius } => *radius,
            Shape::Lens {
                front_radius,
                back_radius,
                thickness,
            } => {
                let rim = lens_rim_radius(*front_radius, *back_radius, *thickness);
                (rim * rim + (thickness / 2.0).powi(2)).sqrt()
            }
            Shape::Sor { profile } => profile
                .iter()
                .map(|[r, z]| (r * r + z * z).sqrt())
                .fold(0.0, f64::max),
        }
    }

    pub(crate) fn contains(&self, p: &Point3<f64>) -> bool {
        match self {
            Shape::Slab {
                thickness,
                half_width,
                half_height,
            } => p.x.abs() < *half_width && p.y.abs() < *half_height && p.z.abs() < thickness / 2.0,
            Shape::Sphere { radius } => p.coords.norm_squared() < radius * radius,
            Shape::Lens {
                front_radius,
                back_radius,
                thickness,
            } => {
                let (c1, c2) = lens_centers(*front_radius, *back_radius, *thickness);
                (p - c1).norm_squared() < front_radius * front_radius
                    && (p - c2).norm_squared() < back_radius * back_radius
            }
            Shape::Sor { profile } => {
                point_in_polygon(profile, (p.x * p.x + p.y * p.y).sqrt(), p.z)
            }
        }
    }

    /// Nearest surface crossing with `t > t_min` along `origin + t * dir`.
    /// The returned normal is unit length with arbitrary orientation.
    pub(crate) fn hit(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<Hit> {
        match self {
            Shape::Slab {
                thickness,
                half_width,
                half_height,
            } => hit_box(
                origin,
                dir,
                [*half_width, *half_height, thickness / 2.0],
                t_min,
            ),
            Shape::Sphere { radius } => {
                hit_sphere(origin, dir, &Point3::origin(), *radius, t_min, |_| true)
            }
            Shape::Lens {
                front_radius,
                back_radius,
                thickness,
            } => {
                let (c1, c2) = lens_centers(*front_radius, *back_radius, *thickness);
                let r1sq = front_radius * front_radius;
                let r2sq = back_radius * back_radius;
                let slack = 1e-9;
                let a = hit_sphere(origin, dir, &c1, *front_radius, t_min, |p| {
                    (p - c2).norm_squared() <= r2sq * (1.0 + slack)
                });
                let b = hit_sphere(origin, dir, &c2, *back_radius, t_min, |p| {
                    (p - c1).norm_squared() <= r1sq * (1.0 + slack)
                });
                nearest(a, b)
            }
            Shape::Sor { profile } => hit_sor(origin, dir, profile, t_min),
        }
    }
}

fn nearest(a: Option<Hit>, b: Option<Hit>) -> Option<Hit> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if a.t <= b.t { a } else { b }),
        (a, None) => a,
        (None, b) => b,
    }
}

fn lens_centers(r1: f64, r2: f64, thickness: f64) -> (Point3<f64>, Point3<f64>) {
    (
        Point3::new(0.0, 0.0, -thickness / 2.0 + r1),
        Point3::new(0.0, 0.0, thickness / 2.0 - r2),
    )
}

/// Radius of the circle where the two lens caps meet.
fn lens_rim_radius(r1: f64, r2: f64, thickness: f64) -> f64 {
    let (c1, c2) = lens_centers(r1, r2, thickness);
    // Solve |(rho, z) - c1| = r1 and |(rho, z) - c2| = r2 for rho.
    let d = c2.z - c1.z;
    if d.abs() < 1e-15 {
        return r1.min(r2);
    }
    let z = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d) + c1.z;
    (r1 * r1 - (z - c1.z).powi(2)).max(0.0).sqrt()
}

/// Stable real roots of `a t^2 + b t + c = 0`, ascending.
fn solve_quadratic(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a.abs() < 1e-14 {
        if b.abs() < 1e-14 {
            return None;
        }
        let t = -c / b;
        return Some((t, t));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (t0, t1) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some(if t0 <= t1 { (t0, t1) } else { (t1, t0) })
}

fn hit_sphere(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    center: &Point3<f64>,
    radius: f64,
    t_min: f64,
    accept: impl Fn(&Point3<f64>) -> bool,
) -> Option<Hit> {
    let oc = origin - center;
    let (t0, t1) = solve_quadratic(
        dir.norm_squared(),
        2.0 * oc.dot(dir),
        oc.norm_squared() - radius * radius,
    )?;
    [t0, t1].into_iter().find_map(|t| {
        if t <= t_min {
            return None;
        }
        let p = origin + dir * t;
        accept(&p).then(|| Hit {
            t,
            normal: (p - center) / radius,
        })
    })
}

fn hit_box(origin: &Point3<f64>, dir: &Vector3<f64>, half: [f64; 3], t_min: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for axis in 0..3 {
        if dir[axis].abs() < 1e-15 {
            continue;
        }
        for sign in [-1.0, 1.0] {
            let t = (sign * half[axis] - origin[axis]) / dir[axis];
            if t <= t_min || best.is_some_and(|b| b.t <= t) {
                continue;
            }
            let p = origin + dir * t;
            let inside_face = (0..3)
                .filter(|&a| a != axis)
                .all(|a| p[a].abs() <= half[a] * (1.0 + 1e-12));
            if inside_face {
                let mut normal = Vector3::zeros();
                normal[axis] = sign;
                best = Some(Hit { t, normal });
            }
        }
    }
    best
}

fn hit_sor(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    profile: &[[f64; 2]],
    t_min: f64,
) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    let n = profile.len();
    for i in 0..n {
        let [r0, z0] = profile[i];
        let [r1, z1] = profile[(i + 1) % n];
        if r0 == 0.0 && r1 == 0.0 {
            // segment on the axis revolves to nothing
            continue;
        }
        let cand = if z0 == z1 {
            hit_annulus(origin, dir, z0, r0.min(r1), r0.max(r1), t_min)
        } else {
            hit_frustum(origin, dir, [r0, z0], [r1, z1], t_min)
        };
        if let Some(h) = cand {
            if best.is_none_or(|b| h.t < b.t) {
                best = Some(h);
            }
        }
    }
    best
}

fn hit_annulus(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    z: f64,
    r_lo: f64,
    r_hi: f64,
    t_min: f64,
) -> Option<Hit> {
    if dir.z.abs() < 1e-15 {
        return None;
    }
    let t = (z - origin.z) / dir.z;
    if t <= t_min {
        return None;
    }
    let p = origin + dir * t;
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    (rho >= r_lo && rho <= r_hi).then(|| Hit {
        t,
        normal: Vector3::z(),
    })
}

/// Cone frustum swept by the segment `a -> b` (with `a.z != b.z`).
fn hit_frustum(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    a: [f64; 2],
    b: [f64; 2],
    t_min: f64,
) -> Option<Hit> {
    let [r0, z0] = a;
    let [r1, z1] = b;
    let slope = (r1 - r0) / (z1 - z0);
    let (z_lo, z_hi) = (z0.min(z1), z0.max(z1));
    // x^2 + y^2 = (r0 + slope (z - z0))^2 along the ray
    let q = r0 + slope * (origin.z - z0);
    let s = slope * dir.z;
    let qa = dir.x * dir.x + dir.y * dir.y - s * s;
    let qb = 2.0 * (origin.x * dir.x + origin.y * dir.y - q * s);
    let qc = origin.x * origin.x + origin.y * origin.y - q * q;
    let (t0, t1) = solve_quadratic(qa, qb, qc)?;
    [t0, t1].into_iter().find_map(|t| {
        if t <= t_min {
            return None;
        }
        let p = origin + dir * t;
        if p.z < z_lo || p.z > z_hi {
            return None;
        }
        let rho = r0 + slope * (p.z - z0);
        if rho < 0.0 {
            return None;
        }
        let normal = Vector3::new(p.x, p.y, -slope * rho);
        let len = normal.norm();
        let normal = if len > 1e-15 {
            normal / len
        } else {
            Vector3::z()
        };
        Some(Hit { t, normal })
    })
}

fn point_in_polygon(poly: &[[f64; 2]], r: f64, z: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let [ri, zi] = poly[i];
        let [rj, zj] = poly[j];
        if (zi > z) != (zj > z) {
            let r_cross = ri + (z - zi) / (zj - zi) * (rj - ri);
            if r < r_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn validate_profile(profile: &[[f64; 2]]) -> Result<()> {
    if profile.len() < 3 {
        return Err(Error::invalid("SOR profile needs at least 3 vertices"));
    }
    if profile
        .iter()
        .any(|[r, z]| !r.is_finite() || !z.is_finite() || *r < 0.0)
    {
        return Err(Error::invalid(
            "SOR profile vertices must be finite with r >= 0",
        ));
    }
    let n = profile.len();
    let area: f64 = (0..n)
        .map(|i| {
            let [a0, a1] = profile[i];
            let [b0, b1] = profile[(i + 1) % n];
            a0 * b1 - b0 * a1
        })
        .sum::<f64>()
        * 0.5;
    if area.abs() < 1e-12 {
        return Err(Error::invalid("SOR profile encloses no area"));
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let s1 = (profile[i], profile[(i + 1) % n]);
            let s2 = (profile[j], profile[(j + 1) % n]);
            if segments_intersect(s1, s2) {
                return Err(Error::invalid(format!(
                    "SOR profile self-intersects at segments {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

fn segments_intersect(s1: ([f64; 2], [f64; 2]), s2: ([f64; 2], [f64; 2])) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
        p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    }
    let (p1, p2) = s1;
    let (p3, p4) = s2;
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cylinder(r: f64, h: f64) -> Shape {
        Shape::Sor {
            profile: vec![[0.0, -h], [r, -h], [r, h], [0.0, h]],
        }
    }

    #[test]
    fn sphere_hit_from_outside() {
        let s = Shape::Sphere { radius: 1.0 };
        let h = s
            .hit(&Point3::new(0.0, 0.0, -5.0), &Vector3::z(), 1e-9)
            .unwrap();
        assert!((h.t - 4.0).abs() < 1e-12);
        assert!((h.normal - -Vector3::z()).norm() < 1e-12);
        let h2 = s
            .hit(&Point3::new(0.0, 0.0, -1.0), &Vector3::z(), 1e-9)
            .unwrap();
        assert!((h2.t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sor_cylinder_matches_analytic() {
        let s = cylinder(1.0, 2.0);
        // side entry along x
        let h = s
            .hit(&Point3::new(-5.0, 0.3, 0.5), &Vector3::x(), 1e-9)
            .unwrap();
        let expected = 5.0 - (1.0f64 - 0.09).sqrt();
        assert!((h.t - expected).abs() < 1e-12);
        assert!(h.normal.z.abs() < 1e-12);
        // cap entry along z
        let h = s
            .hit(&Point3::new(0.2, 0.1, -5.0), &Vector3::z(), 1e-9)
            .unwrap();
        assert!((h.t - 3.0).abs() < 1e-12);
        assert!(s.contains(&Point3::new(0.5, 0.5, 1.9)));
        assert!(!s.contains(&Point3::new(0.8, 0.8, 0.0)));
    }

    #[test]
    fn sor_cone_apex() {
        let cone = Shape::Sor {
            profile: vec![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        let h = cone
            .hit(&Point3::new(-3.0, 0.0, 0.5), &Vector3::x(), 1e-9)
            .unwrap();
        assert!((h.t - 2.5).abs() < 1e-12);
        let n = h.normal;
        // outward cone normal is (-1, 0, -1)/sqrt2 up to sign
        assert!((n.x.abs() - n.z.abs()).abs() < 1e-12);
    }

    #[test]
    fn lens_vertices_and_rim() {
        let lens = Shape::Lens {
            front_radius: 2.0,
            back_radius: 3.0,
            thickness: 0.6,
        };
        lens.validate().unwrap();
        let h = lens
            .hit(&Point3::new(0.0, 0.0, -5.0), &Vector3::z(), 1e-9)
            .unwrap();
        assert!((h.t - 4.7).abs() < 1e-12);
        let h = lens
            .hit(&Point3::new(0.0, 0.0, 0.0), &Vector3::z(), 1e-9)
            .unwrap();
        assert!((h.t - 0.3).abs() < 1e-12);
        assert!(lens.contains(&Point3::origin()));
        assert!(!lens.contains(&Point3::new(0.0, 0.0, 0.31)));
        let rim = lens_rim_radius(2.0, 3.0, 0.6);
        assert!(rim > 0.5 && rim < 2.0);
        assert!(lens.bounding_radius() >= rim);
    }

    #[test]
    fn box_faces() {
        let slab = Shape::Slab {
            thickness: 0.5,
            half_width: 2.0,
            half_height: 1.0,
        };
        let h = slab
            .hit(&Point3::new(0.3, 0.2, -3.0), &Vector3::z(), 1e-9)
            .unwrap();
        assert!((h.t - 2.75).abs() < 1e-12);
        assert_eq!(h.normal, -Vector3::z());
        assert!(slab
            .hit(&Point3::new(3.0, 0.2, -3.0), &Vector3::z(), 1e-9)
            .is_none());
    }

    #[test]
    fn profile_validation() {
        assert!(cylinder(1.0, 1.0).validate().is_ok());
        let bowtie = Shape::Sor {
            profile: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        assert!(bowtie.validate().is_err());
        let negative = Shape::Sor {
            profile: vec![[-1.0, 0.0], [1.0, 1.0], [1.0, 0.0]],
        };
        assert!(negative.validate().is_err());
        assert!(Shape::Sphere { radius: 0.0 }.validate().is_err());
        assert!(Shape::Lens {
            front_radius: 1.0,
            back_radius: 1.0,
            thickness: 3.0
        }
        .validate()
        .is_err());
    }
}
