//! Planar geometry of oriented boxes: corner extraction, convex hulls,
//! minimum-area bounding rectangles, and footprint overlap areas.
//!
//! One angle convention holds everywhere: a rectangle is symmetric under
//! rotation by pi, so orientations are stored in `[-pi/2, pi/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// One building as an oriented box: center `(x, y)`, footprint extents `l`
/// (along the box's local x axis) and `w`, height `h`, yaw angle `a`.
///
/// `h = 0` marks the flat 2D-box case. `a` is kept folded in `[-pi/2, pi/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub x: f64,
    pub y: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub a: f64,
}

impl Cuboid {
    /// Builds a validated box; folds `a` into `[-pi/2, pi/2)`.
    pub fn new(x: f64, y: f64, l: f64, w: f64, h: f64, a: f64) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y), ("l", l), ("w", w), ("h", h), ("a", a)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("cuboid {name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("l", l), ("w", w), ("h", h)] {
            if v < 0.0 {
                return Err(Error::invalid(format!(
                    "cuboid {name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(Cuboid {
            x,
            y,
            l,
            w,
            h,
            a: normalize_angle(a)?,
        })
    }

    /// Footprint area `l * w`.
    pub fn area(&self) -> f64 {
        self.l * self.w
    }

    /// The four footprint corners in counter-clockwise order.
    pub fn footprint_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.a.sin_cos();
        let (hl, hw) = (self.l / 2.0, self.w / 2.0);
        // Local corners (+,+), (-,+), (-,-), (+,-): counter-clockwise winding.
        [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]]
            .map(|[u, v]| [self.x + u * c - v * s, self.y + u * s + v * c])
    }

    /// The eight 3D corners: footprint at `z = 0`, then the same four at `z = h`.
    pub fn corners_3d(&self) -> [[f64; 3]; 8] {
        let f = self.footprint_corners();
        let mut out = [[0.0; 3]; 8];
        for (i, [px, py]) in f.iter().copied().enumerate() {
            out[i] = [px, py, 0.0];
            out[i + 4] = [px, py, self.h];
        }
        out
    }
}

/// Folds an angle into `[-pi/2, pi/2)`, preserving its value modulo pi.
/// Already-folded angles pass through bit-exactly, so re-normalizing a
/// stored value never drifts.
pub fn normalize_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::invalid(format!("angle must be finite, got {a}")));
    }
    if (-FRAC_PI_2..FRAC_PI_2).contains(&a) {
        return Ok(a);
    }
    let mut r = a.rem_euclid(PI);
    if r >= FRAC_PI_2 {
        r -= PI;
    }
    Ok(r)
}

/// Size of an angle difference under period-pi symmetry, in `[0, pi/2]`.
pub fn angle_gap(d: f64) -> f64 {
    let d = d.rem_euclid(PI);
    d.min(PI - d)
}

/// Minimum bounding rectangle of two boxes' footprint corners combined
/// (flat result; the caller decides what height a merged box gets).
pub fn union_mbr(a: &Cuboid, b: &Cuboid) -> Result<Cuboid> {
    let mut pts = a.footprint_corners().to_vec();
    pts.extend(b.footprint_corners());
    min_bounding_rect(&pts)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull in counter-clockwise order, collinear boundary points dropped.
/// Degenerate inputs collapse to a single point or a two-point segment.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| {
        (p[0], p[1])
            .partial_cmp(&(q[0], q[1]))
            .expect("finite coordinates")
    });
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    // Each chain ends where the other begins.
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area oriented rectangle containing all points, as a flat `Cuboid`
/// (`h = 0`). Canonical form: `l >= w` and angle in `[-pi/2, pi/2)`; among
/// equal-area candidates the angle closest to axis-aligned wins.
///
/// The optimum shares a direction with some hull edge, so candidates are the
/// hull edge directions (rotating calipers).
pub fn min_bounding_rect(points: &[[f64; 2]]) -> Result<Cuboid> {
    if points.is_empty() {
        return Err(Error::invalid(
            "minimum bounding rectangle needs at least one point",
        ));
    }
    for p in points {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::invalid(format!(
                "non-finite point ({}, {})",
                p[0], p[1]
            )));
        }
    }
    let hull = convex_hull(points);
    if hull.len() == 1 {
        return Cuboid::new(hull[0][0], hull[0][1], 0.0, 0.0, 0.0, 0.0);
    }
    let edges = if hull.len() == 2 { 1 } else { hull.len() };
    let mut best: Option<(f64, Cuboid)> = None;
    for i in 0..edges {
        let p = hull[i];
        let q = hull[(i + 1) % hull.len()];
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            continue;
        }
        let (c, s) = (dx / len, dy / len);
        let (mut ulo, mut uhi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in &hull {
            let u = r[0] * c + r[1] * s;
            let v = -r[0] * s + r[1] * c;
            ulo = ulo.min(u);
            uhi = uhi.max(u);
            vlo = vlo.min(v);
            vhi = vhi.max(v);
        }
        let (du, dv) = (uhi - ulo, vhi - vlo);
        let (mu, mv) = ((ulo + uhi) / 2.0, (vlo + vhi) / 2.0);
        let center = [mu * c - mv * s, mu * s + mv * c];
        let cand = canonical_rect(center, du, dv, dy.atan2(dx))?;
        let area = du * dv;
        best = Some(match best {
            None => (area, cand),
            Some((best_area, best_cand)) => {
                let tol = 1e-12 * best_area.max(1.0);
                if area < best_area - tol {
                    (area, cand)
                } else if area <= best_area + tol && angle_before(cand.a, best_cand.a) {
                    (best_area.min(area), cand)
                } else {
                    (best_area, best_cand)
                }
            }
        });
    }
    Ok(best.expect("hull has at least one edge").1)
}

fn canonical_rect(center: [f64; 2], du: f64, dv: f64, angle: f64) -> Result<Cuboid> {
    let (l, w, a) = if du >= dv {
        (du, dv, angle)
    } else {
        (dv, du, angle + FRAC_PI_2)
    };
    Cuboid::new(center[0], center[1], l, w, 0.0, a)
}

/// Tie order for equal-area rectangles: smaller magnitude first, negative
/// before positive at equal magnitude. Both angles are already normalized.
fn angle_before(a: f64, b: f64) -> bool {
    (a.abs(), a) < (b.abs(), b)
}

/// Area of the intersection of two footprints (both convex). Symmetric;
/// zero-area boxes contribute zero overlap and are legal.
pub fn overlap_area(p: &Cuboid, q: &Cuboid) -> f64 {
    if p.area() == 0.0 || q.area() == 0.0 {
        return 0.0;
    }
    let clip = p.footprint_corners();
    let mut poly = q.footprint_corners().to_vec();
    for i in 0..4 {
        poly = clip_half_plane(&poly, clip[i], clip[(i + 1) % 4]);
        if poly.is_empty() {
            return 0.0;
        }
    }
    polygon_area(&poly)
}

/// Keeps the part of `poly` on the counter-clockwise (left) side of `a -> b`.
fn clip_half_plane(poly: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let (dc, dn) = (side(cur), side(nxt));
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push([cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])]);
        }
    }
    out
}

/// Shoelace area of a simple polygon, any winding. Fewer than 3 vertices
/// enclose nothing.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice.abs() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    fn sorted(points: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
        let mut v = points;
        v.sort_by(|p, q| (p[0], p[1]).partial_cmp(&(q[0], q[1])).unwrap());
        v
    }

    fn assert_points_close(got: Vec<[f64; 2]>, want: Vec<[f64; 2]>, tol: f64) {
        let (got, want) = (sorted(got), sorted(want));
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert_close(g[0], w[0], tol);
            assert_close(g[1], w[1], tol);
        }
    }

    fn random_cuboid(rng: &mut ChaCha8Rng) -> Cuboid {
        Cuboid::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.1..4.0),
            rng.gen_range(0.1..4.0),
            rng.gen_range(0.0..3.0),
            rng.gen_range(-4.0..4.0),
        )
        .unwrap()
    }

    #[test]
    fn angle_folds_into_half_open_interval() {
        assert_close(normalize_angle(0.0).unwrap(), 0.0, 0.0);
        assert_close(normalize_angle(PI).unwrap(), 0.0, 1e-12);
        assert_close(normalize_angle(3.0 * PI / 4.0).unwrap(), -PI / 4.0, 1e-12);
        assert_close(normalize_angle(-FRAC_PI_2).unwrap(), -FRAC_PI_2, 0.0);
        assert_close(normalize_angle(FRAC_PI_2).unwrap(), -FRAC_PI_2, 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let a = rng.gen_range(-10.0..10.0);
            let r = normalize_angle(a).unwrap();
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&r), "{r} out of range");
            let diff = (a - r).rem_euclid(PI);
            assert!(diff < 1e-9 || (PI - diff) < 1e-9, "{r} not congruent to {a}");
        }
    }

    #[test]
    fn angle_rejects_non_finite() {
        assert!(normalize_angle(f64::NAN).is_err());
        assert!(normalize_angle(f64::INFINITY).is_err());
        assert!(Cuboid::new(0.0, 0.0, 1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn cuboid_rejects_negative_extents() {
        assert!(Cuboid::new(0.0, 0.0, -1.0, 1.0, 1.0, 0.0).is_err());
        assert!(Cuboid::new(0.0, 0.0, 1.0, -1.0, 1.0, 0.0).is_err());
        assert!(Cuboid::new(0.0, 0.0, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(Cuboid::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn corners_of_axis_aligned_square() {
        let c = Cuboid::new(0.0, 0.0, 2.0, 2.0, 0.0, 0.0).unwrap();
        assert_points_close(
            c.footprint_corners().to_vec(),
            vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
            0.0,
        );
    }

    #[test]
    fn corners_of_square_rotated_quarter_pi() {
        let c = Cuboid::new(0.0, 0.0, 2.0, 2.0, 0.0, PI / 4.0).unwrap();
        let r = 2f64.sqrt();
        assert_points_close(
            c.footprint_corners().to_vec(),
            vec![[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]],
            1e-12,
        );
    }

    #[test]
    fn corners_of_zero_extent_box_coincide() {
        let c = Cuboid::new(3.0, 4.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        for p in c.footprint_corners() {
            assert_eq!(p, [3.0, 4.0]);
        }
    }

    #[test]
    fn corners_3d_lift_the_footprint() {
        let c = Cuboid::new(0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let pts = c.corners_3d();
        for i in 0..4 {
            assert_eq!(pts[i][2], 0.0);
            assert_eq!(pts[i + 4][2], 1.0);
            assert_eq!([pts[i][0], pts[i][1]], [pts[i + 4][0], pts[i + 4][1]]);
            assert_eq!(pts[i][0].abs(), 0.5);
            assert_eq!(pts[i][1].abs(), 0.5);
        }

        let flat = Cuboid::new(1.0, 2.0, 3.0, 1.0, 0.0, 0.3).unwrap();
        let pts = flat.corners_3d();
        for i in 0..4 {
            assert_eq!(pts[i], pts[i + 4]);
        }
    }

    #[test]
    fn hull_strips_interior_and_collinear_points() {
        let hull = convex_hull(&[
            [0.0, 0.0],
            [2.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [2.0, 2.0],
            [0.0, 2.0],
            [0.0, 0.0],
        ]);
        assert_points_close(
            hull,
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]],
            0.0,
        );
    }

    #[test]
    fn hull_of_collinear_points_is_a_segment() {
        let hull = convex_hull(&[[0.0, 0.0], [1.0, 1.0], [3.0, 3.0], [2.0, 2.0]]);
        assert_points_close(hull, vec![[0.0, 0.0], [3.0, 3.0]], 0.0);
    }

    #[test]
    fn mbr_of_unit_square_corners() {
        let r = min_bounding_rect(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_close(r.x, 0.5, 1e-12);
        assert_close(r.y, 0.5, 1e-12);
        assert_close(r.l, 1.0, 1e-12);
        assert_close(r.w, 1.0, 1e-12);
        assert_close(r.a, 0.0, 1e-12);
    }

    #[test]
    fn mbr_of_two_box_union_spans_both() {
        let a = Cuboid::new(0.0, 0.0, 2.0, 1.0, 0.0, 0.0).unwrap();
        let b = Cuboid::new(3.0, 0.0, 2.0, 1.0, 0.0, 0.0).unwrap();
        let mut pts = a.footprint_corners().to_vec();
        pts.extend(b.footprint_corners());
        let r = min_bounding_rect(&pts).unwrap();
        assert_close(r.x, 1.5, 1e-12);
        assert_close(r.y, 0.0, 1e-12);
        assert_close(r.l, 5.0, 1e-12);
        assert_close(r.w, 1.0, 1e-12);
        assert_close(r.a, 0.0, 1e-12);
    }

    #[test]
    fn mbr_is_idempotent_on_rectangle_corners() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = random_cuboid(&mut rng);
            let r = min_bounding_rect(&c.footprint_corners()).unwrap();
            assert_close(r.area(), c.area(), 1e-9 * c.area().max(1.0));
            // The recovered angle agrees modulo the square's quarter-turn slack.
            if (c.l - c.w).abs() > 1e-6 {
                let diff = (r.a - c.a).rem_euclid(FRAC_PI_2);
                assert!(diff < 1e-7 || FRAC_PI_2 - diff < 1e-7, "angle {} vs {}", r.a, c.a);
            }
        }
    }

    #[test]
    fn mbr_of_single_point_and_segment_degenerates() {
        let p = min_bounding_rect(&[[2.0, -1.0]]).unwrap();
        assert_eq!((p.x, p.y, p.l, p.w), (2.0, -1.0, 0.0, 0.0));

        let s = min_bounding_rect(&[[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]).unwrap();
        assert_close(s.l, 8f64.sqrt(), 1e-12);
        assert_close(s.w, 0.0, 1e-12);
        assert_close(s.a, PI / 4.0, 1e-12);
    }

    #[test]
    fn mbr_rejects_empty_and_non_finite_input() {
        assert!(min_bounding_rect(&[]).is_err());
        assert!(min_bounding_rect(&[[f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn mbr_contains_every_input_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.gen_range(1..=16);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
                .collect();
            let r = min_bounding_rect(&pts).unwrap();
            let (s, c) = r.a.sin_cos();
            for p in &pts {
                let (dx, dy) = (p[0] - r.x, p[1] - r.y);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                assert!(u.abs() <= r.l / 2.0 + 1e-9, "u {} exceeds {}", u, r.l / 2.0);
                assert!(v.abs() <= r.w / 2.0 + 1e-9, "v {} exceeds {}", v, r.w / 2.0);
            }
        }
    }

    #[test]
    fn mbr_area_beats_angle_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(3..=16);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
                .collect();
            let r = min_bounding_rect(&pts).unwrap();
            assert!(r.area() <= sweep_min_area(&pts, 1e-3) + 1e-6);
        }
    }

    // Independent oracle: bounding-box area minimized over a dense angle grid.
    fn sweep_min_area(pts: &[[f64; 2]], step: f64) -> f64 {
        let mut best = f64::INFINITY;
        let mut theta = 0.0;
        while theta < PI {
            let (s, c) = theta.sin_cos();
            let (mut ulo, mut uhi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in pts {
                let u = p[0] * c + p[1] * s;
                let v = -p[0] * s + p[1] * c;
                ulo = ulo.min(u);
                uhi = uhi.max(u);
                vlo = vlo.min(v);
                vhi = vhi.max(v);
            }
            best = best.min((uhi - ulo) * (vhi - vlo));
            theta += step;
        }
        best
    }

    #[test]
    fn overlap_of_identical_unit_squares_is_one() {
        let c = Cuboid::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_close(overlap_area(&c, &c), 1.0, 1e-12);
    }

    #[test]
    fn overlap_of_disjoint_squares_is_zero() {
        let a = Cuboid::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let b = Cuboid::new(10.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(overlap_area(&a, &b), 0.0);
    }

    #[test]
    fn overlap_of_half_shifted_square_is_half() {
        let a = Cuboid::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let b = Cuboid::new(0.5, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_close(overlap_area(&a, &b), 0.5, 1e-12);
    }

    #[test]
    fn overlap_matches_monte_carlo_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let a = Cuboid::new(0.1, -0.2, 1.6, 0.9, 0.0, 0.4).unwrap();
        let b = Cuboid::new(0.5, 0.1, 1.1, 1.3, 0.0, -0.7).unwrap();
        let exact = overlap_area(&a, &b);

        // Sample uniformly inside a's footprint; the hit fraction scales its area.
        let (s, c) = a.a.sin_cos();
        let n = 1_000_000;
        let mut hits = 0u32;
        for _ in 0..n {
            let u = rng.gen_range(-a.l / 2.0..a.l / 2.0);
            let v = rng.gen_range(-a.w / 2.0..a.w / 2.0);
            let p = [a.x + u * c - v * s, a.y + u * s + v * c];
            let (sb, cb) = b.a.sin_cos();
            let (dx, dy) = (p[0] - b.x, p[1] - b.y);
            let ub = dx * cb + dy * sb;
            let vb = -dx * sb + dy * cb;
            if ub.abs() <= b.l / 2.0 && vb.abs() <= b.w / 2.0 {
                hits += 1;
            }
        }
        let estimate = a.area() * hits as f64 / n as f64;
        assert_close(exact, estimate, 1e-2);
    }

    #[test]
    fn overlap_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let a = random_cuboid(&mut rng);
            let b = random_cuboid(&mut rng);
            let ab = overlap_area(&a, &b);
            let ba = overlap_area(&b, &a);
            assert_close(ab, ba, 1e-12);
            assert!(ab >= 0.0);
            assert!(ab <= a.area().min(b.area()) + 1e-9);
        }
    }

    #[test]
    fn zero_area_boxes_overlap_nothing() {
        let flat = Cuboid::new(0.0, 0.0, 2.0, 0.0, 0.0, 0.0).unwrap();
        let point = Cuboid::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let square = Cuboid::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(overlap_area(&flat, &square), 0.0);
        assert_eq!(overlap_area(&point, &square), 0.0);
        assert_eq!(overlap_area(&square, &point), 0.0);
    }

    #[test]
    fn angle_gap_folds_to_quarter_turn() {
        assert_eq!(angle_gap(0.0), 0.0);
        assert_close(angle_gap(PI), 0.0, 1e-12);
        assert_close(angle_gap(3.0 * PI / 4.0), PI / 4.0, 1e-12);
        assert_close(angle_gap(-0.3), 0.3, 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..500 {
            let g = angle_gap(rng.gen_range(-10.0..10.0));
            assert!((0.0..=FRAC_PI_2).contains(&g));
        }
    }

    #[test]
    fn union_mbr_spans_both_boxes() {
        let a = Cuboid::new(0.0, 0.0, 2.0, 1.0, 0.0, 0.0).unwrap();
        let b = Cuboid::new(3.0, 0.0, 2.0, 1.0, 0.0, 0.0).unwrap();
        let m = union_mbr(&a, &b).unwrap();
        assert_close(m.x, 1.5, 1e-12);
        assert_close(m.l, 5.0, 1e-12);
        assert_close(m.w, 1.0, 1e-12);
        assert_close(m.a, 0.0, 1e-12);
    }

    #[test]
    fn polygon_area_of_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(polygon_area(&sq), 1.0);
        let cw: Vec<[f64; 2]> = sq.iter().rev().copied().collect();
        assert_eq!(polygon_area(&cw), 1.0);
        assert_eq!(polygon_area(&sq[..2]), 0.0);
    }
}
