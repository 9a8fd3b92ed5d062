//! Icosahedral quadrature on the unit sphere.
//!
//! Every face of a unit icosahedron is split into `(order - 1)^2` congruent
//! planar triangles with equidistant nodes along each edge. Nodes are
//! projected radially onto the sphere and become the ordinates. The weight of
//! an ordinate is the spherical area of its dual cell, the polygon through the
//! (projected) centroids of the triangles that share the node. The twelve
//! icosahedron vertices own pentagonal cells, every other node a hexagonal one.
//!
//! The icosahedron is oriented with a vertex at the north pole `(0, 0, 1)` and
//! one of that vertex's edges in the `x-z` half plane with `x > 0`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

const FOUR_PI: f64 = 4.0 * PI;

/// Nodes closer than this are the same ordinate (shared face edges).
const DEDUP_TOL: f64 = 1e-9;

/// Tolerances applied when validating externally supplied sets.
const LOAD_NORM_TOL: f64 = 1e-9;
const LOAD_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    order: Option<usize>,
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

/// Number of ordinates of the icosahedral set of the given order.
pub fn icosahedron_point_count(order: usize) -> usize {
    10 * (order - 1) * (order - 1) + 2
}

impl QuadratureSet {
    /// Wraps raw ordinates and weights after validating unit norms,
    /// positive weights and the `4π` weight sum.
    pub fn new(points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("quadrature set is empty".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for (q, (p, &w)) in points.iter().zip(&weights).enumerate() {
            validate_entry(p, w).map_err(|msg| Error::InvalidArgument(format!("ordinate {q}: {msg}")))?;
        }
        check_weight_sum(&weights).map_err(Error::InvalidArgument)?;
        let order = infer_order(points.len());
        Ok(Self {
            order,
            points,
            weights,
        })
    }

    /// Subdivision order, when the point count matches an icosahedral set.
    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Discrete integral `Σ_q w_q f(Ω_q)`.
    pub fn integrate(&self, f: impl Fn(Vec3) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    /// Largest in-plane direction component, `max_q max(|Ω_x|, |Ω_y|)`.
    pub fn max_planar_component(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0, f64::max)
    }
}

fn validate_entry(p: &Vec3, w: f64) -> std::result::Result<(), String> {
    if !(p.iter().all(|c| c.is_finite()) && w.is_finite()) {
        return Err("non-finite entry".into());
    }
    let norm = vec3::norm(p);
    if (norm - 1.0).abs() > LOAD_NORM_TOL {
        return Err(format!("point norm {norm} is not 1"));
    }
    if w <= 0.0 {
        return Err(format!("weight {w} is not positive"));
    }
    Ok(())
}

fn check_weight_sum(weights: &[f64]) -> std::result::Result<(), String> {
    let sum: f64 = weights.iter().sum();
    if ((sum - FOUR_PI) / FOUR_PI).abs() > LOAD_SUM_TOL {
        return Err(format!("weights sum to {sum}, expected 4π"));
    }
    Ok(())
}

fn infer_order(n: usize) -> Option<usize> {
    if n < 12 || (n - 2) % 10 != 0 {
        return None;
    }
    let k = (n - 2) / 10;
    let r = (k as f64).sqrt().round() as usize;
    (r * r == k).then_some(r + 1)
}

/// Vertices and faces of the unit icosahedron in the canonical orientation.
fn icosahedron() -> ([Vec3; 12], [[usize; 3]; 20]) {
    // Ring latitude atan(1/2): sin = 1/sqrt(5), cos = 2/sqrt(5).
    let s = 1.0 / 5f64.sqrt();
    let c = 2.0 * s;
    let mut v = [[0.0; 3]; 12];
    v[0] = [0.0, 0.0, 1.0];
    for k in 0..5 {
        let up = 2.0 * PI * k as f64 / 5.0;
        let lo = 2.0 * PI * (k as f64 + 0.5) / 5.0;
        v[1 + k] = [c * up.cos(), c * up.sin(), s];
        v[6 + k] = [c * lo.cos(), c * lo.sin(), -s];
    }
    v[11] = [0.0, 0.0, -1.0];

    let mut f = [[0; 3]; 20];
    for k in 0..5 {
        let (u0, u1) = (1 + k, 1 + (k + 1) % 5);
        let (l0, l1) = (6 + k, 6 + (k + 1) % 5);
        f[4 * k] = [0, u0, u1];
        f[4 * k + 1] = [u0, l0, u1];
        f[4 * k + 2] = [u1, l0, l1];
        f[4 * k + 3] = [l0, 11, l1];
    }
    (v, f)
}

/// Projected nodes and unnormalized dual-cell areas.
fn dual_cells(order: usize) -> (Vec<Vec3>, Vec<f64>) {
    let n = order - 1;
    let (verts, faces) = icosahedron();

    let mut nodes: Vec<Vec3> = Vec::with_capacity(icosahedron_point_count(order));
    // Global indices of nodes lying on face boundaries; interior nodes are never shared.
    let mut boundary: Vec<usize> = Vec::new();
    // Each small triangle as (global node ids, projected planar centroid).
    let mut triangles: Vec<([usize; 3], Vec3)> = Vec::with_capacity(20 * n * n);

    let local = |a: usize, b: usize| -> usize { a * (n + 1) - a * (a.saturating_sub(1)) / 2 + b };
    for face in &faces {
        let [v0, v1, v2] = face.map(|i| verts[i]);
        let planar = |a: usize, b: usize| -> Vec3 {
            let (wa, wb, w0) = (a as f64, b as f64, (n - a - b) as f64);
            let inv = 1.0 / n as f64;
            [0, 1, 2].map(|d| (w0 * v0[d] + wa * v1[d] + wb * v2[d]) * inv)
        };

        let mut ids = vec![usize::MAX; (n + 1) * (n + 2) / 2];
        for a in 0..=n {
            for b in 0..=(n - a) {
                let p = vec3::normalized(&planar(a, b));
                let on_edge = a == 0 || b == 0 || a + b == n;
                let id = if on_edge {
                    match boundary
                        .iter()
                        .copied()
                        .find(|&g| vec3::dist(&nodes[g], &p) < DEDUP_TOL)
                    {
                        Some(g) => g,
                        None => {
                            nodes.push(p);
                            boundary.push(nodes.len() - 1);
                            nodes.len() - 1
                        }
                    }
                } else {
                    nodes.push(p);
                    nodes.len() - 1
                };
                ids[local(a, b)] = id;
            }
        }

        let centroid = |tri: [(usize, usize); 3]| -> Vec3 {
            let pts = tri.map(|(a, b)| planar(a, b));
            vec3::normalized(&[0, 1, 2].map(|d| (pts[0][d] + pts[1][d] + pts[2][d]) / 3.0))
        };
        for a in 0..n {
            for b in 0..(n - a) {
                let up = [(a, b), (a + 1, b), (a, b + 1)];
                triangles.push((up.map(|(x, y)| ids[local(x, y)]), centroid(up)));
                if a + b + 1 < n {
                    let down = [(a + 1, b), (a + 1, b + 1), (a, b + 1)];
                    triangles.push((down.map(|(x, y)| ids[local(x, y)]), centroid(down)));
                }
            }
        }
    }

    debug_assert_eq!(nodes.len(), icosahedron_point_count(order));

    let mut cells: Vec<Vec<Vec3>> = vec![Vec::with_capacity(6); nodes.len()];
    for (tri, c) in &triangles {
        for &g in tri {
            cells[g].push(*c);
        }
    }

    let weights: Vec<f64> = nodes
        .iter()
        .zip(cells.iter_mut())
        .map(|(node, corners)| {
            debug_assert!(corners.len() == 5 || corners.len() == 6);
            sort_around(node, corners);
            spherical_polygon_area(corners)
        })
        .collect();
    (nodes, weights)
}

/// Builds the icosahedral quadrature of the given order (`order >= 2`).
pub fn build_icosahedron_quadrature(order: usize) -> Result<QuadratureSet> {
    if order < 2 {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be at least 2, got {order}"
        )));
    }
    let (points, mut weights) = dual_cells(order);
    // the dual cells tile the sphere up to rounding; make the sum exact
    let scale = FOUR_PI / weights.iter().sum::<f64>();
    for w in &mut weights {
        *w *= scale;
    }
    Ok(QuadratureSet {
        order: Some(order),
        points,
        weights,
    })
}

/// Orders polygon corners counter-clockwise around `center` (seen from outside).
fn sort_around(center: &Vec3, corners: &mut [Vec3]) {
    let helper = if center[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = vec3::normalized(&vec3::cross(&helper, center));
    let e2 = vec3::cross(center, &e1);
    corners.sort_by(|a, b| {
        let ta = vec3::dot(a, &e2).atan2(vec3::dot(a, &e1));
        let tb = vec3::dot(b, &e2).atan2(vec3::dot(b, &e1));
        ta.total_cmp(&tb)
    });
}

/// Area of a convex spherical polygon: sum of interior angles minus `(n - 2)π`.
pub fn spherical_polygon_area(corners: &[Vec3]) -> f64 {
    let n = corners.len();
    let angle_sum: f64 = (0..n)
        .map(|i| {
            let v = &corners[i];
            let prev = &corners[(i + n - 1) % n];
            let next = &corners[(i + 1) % n];
            // tangent directions of the great-circle arcs leaving v
            let t1 = vec3::sub(next, &vec3::scale(v, vec3::dot(next, v)));
            let t2 = vec3::sub(prev, &vec3::scale(v, vec3::dot(prev, v)));
            let sin = vec3::norm(&vec3::cross(&t1, &t2));
            sin.atan2(vec3::dot(&t1, &t2))
        })
        .sum();
    angle_sum - (n as f64 - 2.0) * PI
}

/// Reads a quadrature file: one ordinate per line, columns `x y z w`;
/// lines starting with `#` are comments.
pub fn load_quadrature(path: impl AsRef<Path>) -> Result<QuadratureSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let load_err = |line: usize, msg: String| Error::Load {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        last_line = line;
        let vals = raw
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| load_err(line, format!("parse failure: {e}")))?;
        if vals.len() != 4 {
            return Err(load_err(line, format!("expected 4 entries, found {}", vals.len())));
        }
        let p = [vals[0], vals[1], vals[2]];
        validate_entry(&p, vals[3]).map_err(|msg| load_err(line, msg))?;
        points.push(p);
        weights.push(vals[3]);
    }
    if points.is_empty() {
        return Err(load_err(1, "no quadrature points".into()));
    }
    check_weight_sum(&weights).map_err(|msg| load_err(last_line, msg))?;
    Ok(QuadratureSet {
        order: infer_order(points.len()),
        points,
        weights,
    })
}

/// Writes the set in the four-column text format read by [`load_quadrature`],
/// after the given `#` comment lines.
pub fn export_quadrature(q: &QuadratureSet, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(q.len() * 96);
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    for (p, w) in q.points.iter().zip(&q.weights) {
        writeln!(out, "{:.16e} {:.16e} {:.16e} {:.16e}", p[0], p[1], p[2], w).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts_match_geodesic_formula() {
        for (order, n) in [(2, 12), (3, 42), (4, 92), (5, 162), (15, 1962)] {
            let q = build_icosahedron_quadrature(order).unwrap();
            assert_eq!(q.len(), n, "order {order}");
            assert_eq!(q.order(), Some(order));
        }
    }

    #[test]
    fn rejects_order_below_two() {
        assert!(matches!(
            build_icosahedron_quadrature(1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(build_icosahedron_quadrature(0).is_err());
    }

    #[test]
    fn north_pole_is_an_ordinate() {
        for order in 2..=6 {
            let q = build_icosahedron_quadrature(order).unwrap();
            assert!(q
                .points()
                .iter()
                .any(|p| vec3::dist(p, &[0.0, 0.0, 1.0]) < 1e-12));
        }
    }

    #[test]
    fn orientation_puts_a_pole_edge_in_xz_plane() {
        let q = build_icosahedron_quadrature(2).unwrap();
        let ring = q
            .points()
            .iter()
            .find(|p| p[1].abs() < 1e-15 && p[0] > 0.0 && p[2] > 0.0)
            .expect("pole neighbour with y = 0, x > 0");
        assert!((ring[2] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn vertex_cells_are_pentagons_with_larger_share_at_order_two() {
        // all 12 cells are congruent pentagons: weight 4π/12 each
        let q = build_icosahedron_quadrature(2).unwrap();
        for &w in q.weights() {
            assert!((w - FOUR_PI / 12.0).abs() < 1e-13);
        }
    }

    #[test]
    fn unnormalized_dual_cells_tile_the_sphere() {
        // the renormalization factor should be a rounding-level correction
        for order in [2, 3, 5, 9] {
            let (_, raw) = dual_cells(order);
            let sum: f64 = raw.iter().sum();
            assert!(((sum - FOUR_PI) / FOUR_PI).abs() < 1e-12, "order {order}: {sum}");
        }
    }

    #[test]
    fn spherical_octant_area() {
        let octant = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!((spherical_polygon_area(&octant) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn new_rejects_bad_sets() {
        let pole = vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        assert!(QuadratureSet::new(pole.clone(), vec![2.0 * PI, 2.0 * PI]).is_ok());
        assert!(QuadratureSet::new(pole.clone(), vec![PI, 2.0 * PI]).is_err());
        assert!(QuadratureSet::new(pole.clone(), vec![4.0 * PI, 0.0]).is_err());
        assert!(QuadratureSet::new(vec![[0.0, 0.0, 0.5]], vec![FOUR_PI]).is_err());
        assert!(QuadratureSet::new(vec![], vec![]).is_err());
    }

    #[test]
    fn export_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q4.txt");
        let q = build_icosahedron_quadrature(4).unwrap();
        export_quadrature(&q, &path, &["config-hash: abc".into()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config-hash: abc\n"));
        let back = load_quadrature(&path).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn load_reports_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "# c\n0 0 1 6.283185307179586\n0 0 -1 x\n").unwrap();
        match load_quadrature(&path) {
            Err(Error::Load { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&path, "0 0 1 1.0\n0 0 -1 1.0\n").unwrap();
        assert!(load_quadrature(&path).is_err());
        fs::write(&path, "0 0 2 6.283185307179586\n0 0 -1 6.283185307179586\n").unwrap();
        assert!(load_quadrature(&path).is_err());
        fs::write(&path, "0 0 1 6.283185307179586\n0 0 -1 6.283185307179586\n").unwrap();
        assert_eq!(load_quadrature(&path).unwrap().len(), 2);
    }

    #[test]
    fn construction_is_deterministic() {
        for order in 2..=5 {
            let a = build_icosahedron_quadrature(order).unwrap();
            let b = build_icosahedron_quadrature(order).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn set_is_centrally_symmetric() {
        for order in 2..=6 {
            let q = build_icosahedron_quadrature(order).unwrap();
            for (p, w) in q.points().iter().zip(q.weights()) {
                let (k, _) = q
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(k, o)| (k, vec3::dist(o, &vec3::scale(p, -1.0))))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(vec3::dist(&q.points()[k], &vec3::scale(p, -1.0)) < 1e-12);
                assert!((q.weights()[k] - w).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn odd_moments_vanish_and_second_moments_are_isotropic() {
        for order in 2..=6 {
            let q = build_icosahedron_quadrature(order).unwrap();
            for d in 0..3 {
                assert!(q.integrate(|p| p[d]).abs() < 1e-13);
                assert!(q.integrate(|p| p[d].powi(3)).abs() < 1e-13);
                assert!((q.integrate(|p| p[d] * p[d]) - FOUR_PI / 3.0).abs() < 1e-12, "order {order}");
            }
            assert!(q.integrate(|p| p[0] * p[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn quadrature_error_of_smooth_integrand_shrinks_with_order() {
        // ∫ exp(z) dΩ = 2π (e - 1/e)
        let exact = 2.0 * PI * (1f64.exp() - (-1f64).exp());
        let errs: Vec<f64> = (2..=8)
            .map(|o| (build_icosahedron_quadrature(o).unwrap().integrate(|p| p[2].exp()) - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[6] < 1e-3 * exact);
    }

    #[test]
    fn infers_order_from_count() {
        assert_eq!(infer_order(12), Some(2));
        assert_eq!(infer_order(162), Some(5));
        assert_eq!(infer_order(13), None);
        assert_eq!(infer_order(2), None);
    }
}
