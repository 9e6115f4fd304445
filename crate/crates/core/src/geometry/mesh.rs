use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::family::DiskSolution;
use crate::metric::Vec3;

/// Triangulated surface with area-weighted unit vertex normals.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub normals: Vec<Vec3>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&k| k >= vertices.len())) {
            return Err(Error::InvalidArgument(format!("triangle {t:?} indexes past the vertex list")));
        }
        let normals = vertex_normals(&vertices, &triangles);
        Ok(Self { vertices, triangles, normals })
    }

    /// Nodes of the polar grid as vertices (pole first), a fan around the pole
    /// and each quad `(a, b, c, d)` split into `(a, b, c)` and `(a, c, d)`.
    pub fn from_solution(sol: &DiskSolution) -> Self {
        let grid = sol.grid();
        let vertices: Vec<Vec3> = (0..grid.n_nodes()).map(|k| sol.node_position(k)).collect();
        let nt = grid.ntheta() as isize;
        let mut triangles = Vec::with_capacity(2 * grid.n_nodes());
        for j in 0..nt {
            triangles.push([0, grid.index(1, j), grid.index(1, j + 1)]);
        }
        for i in 1..grid.nr() {
            for j in 0..nt {
                let a = grid.index(i, j);
                let b = grid.index(i + 1, j);
                let c = grid.index(i + 1, j + 1);
                let d = grid.index(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let normals = vertex_normals(&vertices, &triangles);
        Self { vertices, triangles, normals }
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| 0.5 * self.cross(t).norm()).sum()
    }

    fn cross(&self, t: &[usize; 3]) -> Vec3 {
        let [a, b, c] = t.map(|k| self.vertices[k]);
        (b - a).cross(&(c - a))
    }

    /// Every undirected edge with the number of triangles using it.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    /// Edges are shared by at most two triangles, and interior edges are
    /// traversed in opposite directions by their two triangles.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut directed = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                if directed.insert((t[k], t[(k + 1) % 3]), ()).is_some() {
                    return false;
                }
            }
        }
        self.edge_counts().values().all(|&c| c <= 2)
    }

    /// No edge of a triangle crosses another triangle it shares no vertex with.
    pub fn is_embedded(&self) -> bool {
        let n = self.triangles.len();
        if n < 2 {
            return true;
        }
        let (lo, hi) = bounds(&self.vertices);
        let extent = (hi - lo).max().max(1e-300);
        let mean_edge = self.triangles.iter().map(|t| (self.vertices[t[1]] - self.vertices[t[0]]).norm()).sum::<f64>()
            / n as f64;
        let cell = (2.0 * mean_edge).max(extent * 1e-6);
        let key = |x: &Vec3| -> [i64; 3] { std::array::from_fn(|k| ((x[k] - lo[k]) / cell).floor() as i64) };
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut boxes = Vec::with_capacity(n);
        for (ti, t) in self.triangles.iter().enumerate() {
            let pts = t.map(|k| self.vertices[k]);
            let bmin = pts[0].inf(&pts[1]).inf(&pts[2]);
            let bmax = pts[0].sup(&pts[1]).sup(&pts[2]);
            let (a, b) = (key(&bmin), key(&bmax));
            for x in a[0]..=b[0] {
                for y in a[1]..=b[1] {
                    for z in a[2]..=b[2] {
                        buckets.entry([x, y, z]).or_default().push(ti);
                    }
                }
            }
            boxes.push((bmin, bmax));
        }
        let tol = 1e-12 * extent;
        for cell_tris in buckets.values() {
            for (ia, &ta) in cell_tris.iter().enumerate() {
                for &tb in &cell_tris[ia + 1..] {
                    let (sa, sb) = (&self.triangles[ta], &self.triangles[tb]);
                    if sa.iter().any(|k| sb.contains(k)) {
                        continue;
                    }
                    let (amin, amax) = boxes[ta];
                    let (bmin, bmax) = boxes[tb];
                    if (0..3).any(|k| amax[k] < bmin[k] - tol || bmax[k] < amin[k] - tol) {
                        continue;
                    }
                    if self.triangles_cross(sa, sb, tol) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn triangles_cross(&self, a: &[usize; 3], b: &[usize; 3], tol: f64) -> bool {
        let ta = a.map(|k| self.vertices[k]);
        let tb = b.map(|k| self.vertices[k]);
        (0..3).any(|k| segment_hits_triangle(&ta[k], &ta[(k + 1) % 3], &tb, tol))
            || (0..3).any(|k| segment_hits_triangle(&tb[k], &tb[(k + 1) % 3], &ta, tol))
    }
}

fn bounds(v: &[Vec3]) -> (Vec3, Vec3) {
    v.iter().fold((v[0], v[0]), |(lo, hi), x| (lo.inf(x), hi.sup(x)))
}

fn vertex_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for t in triangles {
        let [a, b, c] = t.map(|k| vertices[k]);
        let n = (b - a).cross(&(c - a));
        for &k in t {
            acc[k] += n;
        }
    }
    acc.into_iter()
        .map(|n| if n.norm() > 0.0 { n.normalize() } else { Vec3::z() })
        .collect()
}

fn segment_hits_triangle(p: &Vec3, q: &Vec3, tri: &[Vec3; 3], tol: f64) -> bool {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let nn = n.norm();
    if nn == 0.0 {
        return false;
    }
    let n = n / nn;
    let dp = n.dot(&(p - tri[0]));
    let dq = n.dot(&(q - tri[0]));
    if dp.abs() <= tol && dq.abs() <= tol {
        return coplanar_segment_hits(p, q, tri, &n, tol);
    }
    if (dp > tol && dq > tol) || (dp < -tol && dq < -tol) || (dp - dq).abs() <= tol {
        return false;
    }
    let s = dp / (dp - dq);
    let x = p + (q - p) * s;
    inside_triangle(&x, tri, &n, tol)
}

fn inside_triangle(x: &Vec3, tri: &[Vec3; 3], n: &Vec3, tol: f64) -> bool {
    (0..3).all(|k| (tri[(k + 1) % 3] - tri[k]).cross(&(x - tri[k])).dot(n) > tol * (tri[(k + 1) % 3] - tri[k]).norm())
}

fn coplanar_segment_hits(p: &Vec3, q: &Vec3, tri: &[Vec3; 3], n: &Vec3, tol: f64) -> bool {
    if inside_triangle(p, tri, n, tol) || inside_triangle(q, tri, n, tol) {
        return true;
    }
    (0..3).any(|k| {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let d1 = (b - a).cross(&(p - a)).dot(n);
        let d2 = (b - a).cross(&(q - a)).dot(n);
        let d3 = (q - p).cross(&(a - p)).dot(n);
        let d4 = (q - p).cross(&(b - p)).dot(n);
        let e = tol * (b - a).norm().max((q - p).norm());
        ((d1 > e && d2 < -e) || (d1 < -e && d2 > e)) && ((d3 > e && d4 < -e) || (d3 < -e && d4 > e))
    })
}

/// OBJ text: `v x y z` lines with 17 significant digits, then 1-based `f` lines.
pub fn write_obj(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn export_obj(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    fs::write(path, write_obj(mesh))?;
    Ok(())
}

/// Reads `v` and `f` lines; other records are ignored and normals recomputed.
pub fn import_obj(path: &Path) -> Result<SurfaceMesh> {
    let text = fs::read_to_string(path)?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let bad = || Error::InvalidArgument(format!("{}:{}: malformed OBJ record", path.display(), ln + 1));
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|x| x.parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
                if c.len() < 3 {
                    return Err(bad());
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|x| x.split('/').next().unwrap_or("").parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                if idx.len() != 3 || idx.contains(&0) {
                    return Err(bad());
                }
                triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, triangles)
}
