//! Homology generators by tree–cotree decomposition of the coarse triangulation.

use super::complex::TriComplex;
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::VecDeque;

/// A 1-chain: edge ids with orientation ±1 relative to the canonical half-edge.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Cycle {
    pub edges: Vec<(usize, f64)>,
}

impl Cycle {
    pub fn from_half_edges(c: &TriComplex, hes: impl IntoIterator<Item = usize>) -> Cycle {
        Cycle { edges: hes.into_iter().map(|he| (c.edge_of[he], c.he_orientation(he))).collect() }
    }

    /// Boundary as vertex multiplicities; zero for closed cycles.
    pub fn boundary(&self, c: &TriComplex) -> Vec<f64> {
        let mut b = vec![0.0; c.num_vertices];
        for &(e, s) in &self.edges {
            let he = c.edge_he[e];
            b[c.he_end(he)] += s;
            b[c.he_start(he)] -= s;
        }
        b
    }
}

pub(crate) struct TreeCotree {
    /// Half-edge from the parent into each vertex (`usize::MAX` at the root).
    parent_he: Vec<usize>,
    pub generators: Vec<usize>,
    pub cotree_order: Vec<(usize, usize)>,
    in_tree: Vec<bool>,
}

impl TreeCotree {
    pub fn new(c: &TriComplex) -> TreeCotree {
        let corners = c.vertex_corners();
        let mut parent_he = vec![usize::MAX; c.num_vertices];
        let mut seen = vec![false; c.num_vertices];
        let mut in_tree = vec![false; c.num_edges()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(f, k) in &corners[u] {
                let he = 3 * f + k;
                let w = c.he_end(he);
                if !seen[w] {
                    seen[w] = true;
                    parent_he[w] = he;
                    in_tree[c.edge_of[he]] = true;
                    queue.push_back(w);
                }
            }
        }
        // dual spanning tree over edges not in the primal tree
        let mut in_cotree = vec![false; c.num_edges()];
        let mut fseen = vec![false; c.num_faces()];
        let mut cotree_order = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        fseen[0] = true;
        while let Some(f) = queue.pop_front() {
            for k in 0..3 {
                let he = 3 * f + k;
                let e = c.edge_of[he];
                if in_tree[e] {
                    continue;
                }
                let g = c.twin[he] / 3;
                if !fseen[g] {
                    fseen[g] = true;
                    in_cotree[e] = true;
                    cotree_order.push((g, e));
                    queue.push_back(g);
                }
            }
        }
        let generators = (0..c.num_edges()).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
        TreeCotree { parent_he, generators, cotree_order, in_tree }
    }

    /// Half-edges from the root to `v`.
    pub fn path_from_root(&self, c: &TriComplex, mut v: usize) -> Vec<usize> {
        let mut hes = Vec::new();
        while self.parent_he[v] != usize::MAX {
            let he = self.parent_he[v];
            hes.push(he);
            v = c.he_start(he);
        }
        hes.reverse();
        hes
    }

    /// Closed loop through generator `e`, traversing it along its canonical half-edge.
    pub fn generator_loop(&self, c: &TriComplex, e: usize) -> Vec<usize> {
        let he = c.edge_he[e];
        let mut hes = self.path_from_root(c, c.he_start(he));
        hes.push(he);
        let back: Vec<usize> = self.path_from_root(c, c.he_end(he)).into_iter().rev().map(|h| c.twin[h]).collect();
        hes.extend(back);
        hes
    }

    /// The closed cochain dual to generator `j`: one on it, zero on the other
    /// generators and the tree, and fixed on the cotree by closedness.
    pub fn dual_cocycle(&self, c: &TriComplex, j: usize) -> Vec<f64> {
        let mut val = vec![0.0; c.num_edges()];
        let mut known: Vec<bool> = self.in_tree.clone();
        for &g in &self.generators {
            known[g] = true;
        }
        val[self.generators[j]] = 1.0;
        for &(f, e) in self.cotree_order.iter().rev() {
            let mut sum = 0.0;
            let mut coeff = 0.0;
            for k in 0..3 {
                let he = 3 * f + k;
                let ek = c.edge_of[he];
                if ek == e && !known[e] {
                    coeff += c.he_orientation(he);
                } else {
                    sum += c.he_orientation(he) * val[ek];
                }
            }
            val[e] = -sum / coeff;
            known[e] = true;
        }
        val
    }
}

/// Rows of the returned matrix express `a_1..a_g, b_1..b_g` in the given cycles,
/// with `a_i · b_j = δ_ij` and all other pairings zero.
pub fn symplectic_basis(intersection: &DMatrix<f64>) -> DMatrix<f64> {
    let n = intersection.nrows();
    let form = |x: &[f64], y: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * intersection[(i, j)] * y[j];
            }
        }
        s
    };
    let mut rest: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    while !rest.is_empty() {
        let x = rest.remove(0);
        let pos = rest.iter().position(|y| form(&x, y).abs() > 0.5).expect("nondegenerate intersection form");
        let mut y = rest.remove(pos);
        let s = form(&x, &y);
        y.iter_mut().for_each(|v| *v /= s);
        for z in rest.iter_mut() {
            let (zy, zx) = (form(z, &y), form(z, &x));
            for i in 0..n {
                z[i] += -zy * x[i] + zx * y[i];
            }
        }
        a.push(x);
        b.push(y);
    }
    let rows: Vec<Vec<f64>> = a.into_iter().chain(b).collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}
