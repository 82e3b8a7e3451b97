//! Structured polar triangulations of disks and annuli.
//!
//! Nodes are numbered ring by ring (the disk center first), so every
//! triangle couples nodes at most `n_theta + 1` indices apart and the
//! finite-element matrices are banded.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("degenerate mesh parameters: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Inner,
    Outer,
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarMesh {
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Radii of the node circles, increasing; starts at 0 for a disk.
    pub radii: Vec<f64>,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_tags: Vec<BoundaryTag>,
}

/// Uniformly spaced radial rings.
pub fn build_polar_mesh(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Result<PolarMesh, MeshError> {
    if !(r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
        return Err(MeshError::Degenerate(format!(
            "need 0 <= r_in < r_out, got r_in={r_in}, r_out={r_out}"
        )));
    }
    if n_r < 3 {
        return Err(MeshError::Degenerate(format!("need n_r >= 3, got {n_r}")));
    }
    let radii = (0..=n_r)
        .map(|k| {
            if k == n_r {
                r_out
            } else {
                r_in + (r_out - r_in) * k as f64 / n_r as f64
            }
        })
        .collect();
    PolarMesh::from_radii(radii, n_theta)
}

/// Rings whose spacing grows geometrically by `ratio` away from `r_in`
/// (capped at `max_spacing`), followed by uniform rings of that spacing.
pub fn graded_radii(r_in: f64, r_out: f64, first_spacing: f64, ratio: f64, max_spacing: f64) -> Result<Vec<f64>, MeshError> {
    if !(r_in >= 0.0 && r_out > r_in && first_spacing > 0.0 && ratio >= 1.0 && max_spacing >= first_spacing) {
        return Err(MeshError::Degenerate(format!(
            "invalid grading: r_in={r_in}, r_out={r_out}, first={first_spacing}, ratio={ratio}, max={max_spacing}"
        )));
    }
    let mut radii = vec![r_in];
    let mut h = first_spacing;
    let mut r = r_in;
    while h < max_spacing && r + h < r_out {
        r += h;
        radii.push(r);
        h = (h * ratio).min(max_spacing);
    }
    // Uniform remainder with spacing at most max_spacing.
    let rest = r_out - r;
    let steps = (rest / max_spacing).ceil().max(1.0) as usize;
    for k in 1..=steps {
        radii.push(if k == steps { r_out } else { r + rest * k as f64 / steps as f64 });
    }
    Ok(radii)
}

impl PolarMesh {
    /// Mesh with node circles at `radii` (strictly increasing; a leading 0
    /// makes a disk with a single center node) and `n_theta` sectors.
    pub fn from_radii(radii: Vec<f64>, n_theta: usize) -> Result<Self, MeshError> {
        if n_theta < 3 {
            return Err(MeshError::Degenerate(format!("need n_theta >= 3, got {n_theta}")));
        }
        if radii.len() < 2 || radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) || !radii.iter().all(|r| r.is_finite()) {
            return Err(MeshError::Degenerate(
                "radii must be finite, non-negative and strictly increasing".into(),
            ));
        }
        let disk = radii[0] == 0.0;
        let n_r = radii.len() - 1;
        let first_ring = usize::from(disk);
        let rings = &radii[first_ring..];

        let mut nodes = Vec::with_capacity(first_ring + rings.len() * n_theta);
        let mut tags = Vec::with_capacity(nodes.capacity());
        if disk {
            nodes.push([0.0, 0.0]);
            tags.push(BoundaryTag::Interior);
        }
        for (k, &r) in rings.iter().enumerate() {
            let tag = if k + 1 == rings.len() {
                BoundaryTag::Outer
            } else if k == 0 && !disk {
                BoundaryTag::Inner
            } else {
                BoundaryTag::Interior
            };
            for j in 0..n_theta {
                let theta = 2.0 * PI * j as f64 / n_theta as f64;
                let (s, c) = theta.sin_cos();
                nodes.push([r * c, r * s]);
                tags.push(tag);
            }
        }

        let ring_node = |k: usize, j: usize| first_ring + k * n_theta + j % n_theta;
        let mut triangles = Vec::new();
        if disk {
            for j in 0..n_theta {
                triangles.push([0, ring_node(0, j), ring_node(0, j + 1)]);
            }
        }
        for k in 0..rings.len() - 1 {
            for j in 0..n_theta {
                let a = ring_node(k, j);
                let b = ring_node(k + 1, j);
                let c = ring_node(k + 1, j + 1);
                let d = ring_node(k, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        Ok(Self {
            r_in: radii[0],
            r_out: *radii.last().expect("at least two radii"),
            n_r,
            n_theta,
            radii,
            nodes,
            triangles,
            boundary_tags: tags,
        })
    }

    pub fn is_disk(&self) -> bool {
        self.r_in == 0.0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Largest radial spacing.
    pub fn radial_spacing(&self) -> f64 {
        self.radii.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_tags[node] != BoundaryTag::Interior
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.is_boundary(i))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.is_boundary(i))
    }

    pub fn node_radius(&self, node: usize) -> f64 {
        let [x, y] = self.nodes[node];
        x.hypot(y)
    }

    /// Signed area (positive for counter-clockwise vertices).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Index of the node on ring `k` (counting the disk center as ring 0)
    /// at angular position `j`.
    pub fn ring_node(&self, k: usize, j: usize) -> usize {
        if self.is_disk() {
            if k == 0 {
                0
            } else {
                1 + (k - 1) * self.n_theta + j % self.n_theta
            }
        } else {
            k * self.n_theta + j % self.n_theta
        }
    }

    /// `(ring, angular index)` of a node; the disk center is `(0, 0)`.
    pub fn ring_position(&self, node: usize) -> (usize, usize) {
        if self.is_disk() {
            if node == 0 {
                (0, 0)
            } else {
                (1 + (node - 1) / self.n_theta, (node - 1) % self.n_theta)
            }
        } else {
            (node / self.n_theta, node % self.n_theta)
        }
    }

    /// Largest index distance between two nodes sharing a triangle.
    pub fn bandwidth(&self) -> usize {
        self.triangles
            .iter()
            .map(|t| {
                let lo = t.iter().min().expect("three vertices");
                let hi = t.iter().max().expect("three vertices");
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    /// Evaluates the piecewise-affine interpolant of nodal `values` at `p`.
    /// Points between a boundary chord and its circle use the affine
    /// extension of the adjacent triangle. Returns `None` outside
    /// `r_in ≤ |p| ≤ r_out`.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        let r = p[0].hypot(p[1]);
        let last = self.radii.len() - 1;
        if r < self.r_in * (1.0 - 1e-12) || r > self.r_out * (1.0 + 1e-12) {
            return None;
        }
        let k = match self.radii.partition_point(|&ri| ri <= r) {
            0 => 0,
            i => (i - 1).min(last - 1),
        };
        let mut theta = p[1].atan2(p[0]);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let j = ((theta / (2.0 * PI) * self.n_theta as f64).floor() as usize).min(self.n_theta - 1);

        let candidates: Vec<[usize; 3]> = if self.is_disk() && k == 0 {
            vec![[0, self.ring_node(1, j), self.ring_node(1, j + 1)]]
        } else {
            let a = self.ring_node(k, j);
            let b = self.ring_node(k + 1, j);
            let c = self.ring_node(k + 1, j + 1);
            let d = self.ring_node(k, j + 1);
            vec![[a, b, c], [a, c, d]]
        };
        let mut best: Option<(f64, f64)> = None;
        for tri in candidates {
            let lambda = self.barycentric(tri, p);
            let worst = lambda.iter().copied().fold(f64::INFINITY, f64::min);
            let v = lambda[0] * values[tri[0]] + lambda[1] * values[tri[1]] + lambda[2] * values[tri[2]];
            if best.is_none_or(|(w, _)| worst > w) {
                best = Some((worst, v));
            }
        }
        best.map(|(_, v)| v)
    }

    fn barycentric(&self, tri: [usize; 3], p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = tri.map(|i| self.nodes[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}
