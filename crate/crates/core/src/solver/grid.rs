//! Regular grids on probability simplices with Freudenthal-triangulation
//! interpolation, and their product over the two agents.
//!
//! With two local states the simplex is a segment and the scheme reduces to
//! linear interpolation, so the product grid interpolates bilinearly.

use std::collections::HashMap;

use crate::belief::{Belief, BeliefPair};

/// Snap cumulative coordinates this close to an integer before flooring.
const SNAP: f64 = 1e-9;

/// Belief grid `{k / M : k ∈ ℕⁿ, Σk = M}` for one agent.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    states: usize,
    subdivisions: u32,
    nodes: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl SimplexGrid {
    /// `resolution` is the number of nodes along each edge (at least 2).
    pub fn new(states: usize, resolution: usize) -> Self {
        assert!(resolution >= 2, "grid resolution must be at least 2");
        assert!(states >= 1);
        let subdivisions = (resolution - 1) as u32;
        let mut nodes = Vec::new();
        let mut current = vec![0u32; states];
        compositions(subdivisions, 0, &mut current, &mut nodes);
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        Self {
            states,
            subdivisions,
            nodes,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn subdivisions(&self) -> u32 {
        self.subdivisions
    }

    pub fn node_belief(&self, node: usize) -> Belief {
        let m = self.subdivisions as f64;
        Belief::new(self.nodes[node].iter().map(|&k| k as f64 / m).collect())
            .expect("grid node is a distribution")
    }

    pub fn node_index(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    /// Vertices and barycentric weights of the Freudenthal simplex that
    /// contains `belief`. Zero-weight vertices are dropped; weights sum to 1.
    pub fn stencil(&self, belief: &Belief) -> Vec<(usize, f64)> {
        let n = self.states;
        if n == 1 {
            return vec![(0, 1.0)];
        }
        let m = self.subdivisions as f64;
        let w = belief.weights();
        // Cumulative coordinates x_i = M Σ_{j≥i} b_j, x_0 = M.
        let mut x = vec![0.0; n];
        let mut acc = 0.0;
        for i in (1..n).rev() {
            acc += w[i];
            x[i] = (m * acc).clamp(0.0, m);
        }
        x[0] = m;
        let mut base = vec![0i64; n];
        let mut frac = vec![0.0; n];
        for i in 0..n {
            let r = x[i].round();
            let v = if (x[i] - r).abs() < SNAP {
                r
            } else {
                x[i].floor()
            };
            base[i] = v as i64;
            frac[i] = if (x[i] - r).abs() < SNAP {
                0.0
            } else {
                x[i] - v
            };
        }
        let mut order: Vec<usize> = (1..n).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));

        let mut out = Vec::with_capacity(n);
        let mut vertex = base.clone();
        let push = |vertex: &[i64], weight: f64, out: &mut Vec<(usize, f64)>| {
            if weight <= 0.0 {
                return;
            }
            let counts: Vec<u32> = (0..n)
                .map(|i| {
                    let next = if i + 1 < n { vertex[i + 1] } else { 0 };
                    (vertex[i] - next) as u32
                })
                .collect();
            let node = self
                .node_index(&counts)
                .expect("Freudenthal vertex lies on the grid");
            out.push((node, weight));
        };
        push(&vertex, 1.0 - frac[order[0]], &mut out);
        for k in 0..order.len() {
            vertex[order[k]] += 1;
            let next = if k + 1 < order.len() {
                frac[order[k + 1]]
            } else {
                0.0
            };
            push(&vertex, frac[order[k]] - next, &mut out);
        }
        out
    }

    /// Grid node carrying the largest interpolation weight.
    pub fn nearest(&self, belief: &Belief) -> usize {
        let stencil = self.stencil(belief);
        let mut best = stencil[0];
        for &(node, weight) in &stencil[1..] {
            if weight > best.1 {
                best = (node, weight);
            }
        }
        best.0
    }
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        compositions(remaining - k, pos + 1, current, out);
    }
}

/// Product of the two agents' simplex grids. Node `(i1, i2)` is stored at
/// index `i1 * len2 + i2`.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    pub grids: [SimplexGrid; 2],
    pub resolution: usize,
}

impl ProductGrid {
    pub fn new(states: [usize; 2], resolution: usize) -> Self {
        Self {
            grids: [
                SimplexGrid::new(states[0], resolution),
                SimplexGrid::new(states[1], resolution),
            ],
            resolution,
        }
    }

    pub fn len(&self) -> usize {
        self.grids[0].len() * self.grids[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn flat(&self, i1: usize, i2: usize) -> usize {
        i1 * self.grids[1].len() + i2
    }

    pub fn node_pair(&self, node: usize) -> BeliefPair {
        let n2 = self.grids[1].len();
        BeliefPair::new(
            self.grids[0].node_belief(node / n2),
            self.grids[1].node_belief(node % n2),
        )
    }

    pub fn stencil(&self, pair: &BeliefPair) -> Vec<(usize, f64)> {
        let s1 = self.grids[0].stencil(&pair.0[0]);
        let s2 = self.grids[1].stencil(&pair.0[1]);
        let mut out = Vec::with_capacity(s1.len() * s2.len());
        for &(i1, w1) in &s1 {
            for &(i2, w2) in &s2 {
                out.push((self.flat(i1, i2), w1 * w2));
            }
        }
        out
    }

    pub fn nearest(&self, pair: &BeliefPair) -> usize {
        self.flat(
            self.grids[0].nearest(&pair.0[0]),
            self.grids[1].nearest(&pair.0[1]),
        )
    }

    /// Node index of the pair of point masses at `(x1, x2)`.
    pub fn delta_node(&self, x1: usize, x2: usize) -> usize {
        let corner = |grid: &SimplexGrid, x: usize| {
            let mut counts = vec![0u32; grid.states];
            counts[x] = grid.subdivisions;
            grid.node_index(&counts)
                .expect("simplex corner is a grid node")
        };
        self.flat(corner(&self.grids[0], x1), corner(&self.grids[1], x2))
    }

    pub fn interpolate(&self, values: &[f64], pair: &BeliefPair) -> f64 {
        self.stencil(pair)
            .iter()
            .map(|&(node, w)| w * values[node])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn node_counts() {
        assert_eq!(SimplexGrid::new(2, 201).len(), 201);
        assert_eq!(SimplexGrid::new(3, 5).len() as u64, binomial(4 + 2, 2));
        assert_eq!(SimplexGrid::new(4, 4).len() as u64, binomial(3 + 3, 3));
    }

    #[test]
    fn nodes_reproduce_themselves() {
        for states in 2..=4 {
            let grid = SimplexGrid::new(states, 4);
            for node in 0..grid.len() {
                let stencil = grid.stencil(&grid.node_belief(node));
                assert_eq!(stencil, vec![(node, 1.0)]);
            }
        }
    }

    #[test]
    fn segment_is_linear() {
        let grid = SimplexGrid::new(2, 11);
        let b = Belief::new(vec![0.63, 0.37]).unwrap();
        let stencil = grid.stencil(&b);
        assert_eq!(stencil.len(), 2);
        let attack: f64 = stencil
            .iter()
            .map(|&(n, w)| w * grid.node_belief(n)[1])
            .sum();
        assert!((attack - 0.37).abs() < 1e-12);
    }

    fn random_belief(raw: &[f64]) -> Belief {
        let sum: f64 = raw.iter().sum();
        Belief::new(raw.iter().map(|r| r / sum).collect()).unwrap()
    }

    proptest! {
        // Barycentric weights reproduce the query point and sum to one.
        #[test]
        fn stencil_reproduces_point(raw in prop::collection::vec(0.01f64..1.0, 2..5), res in 2usize..9) {
            let b = random_belief(&raw);
            let grid = SimplexGrid::new(b.len(), res);
            let stencil = grid.stencil(&b);
            prop_assert!(stencil.len() <= b.len());
            let total: f64 = stencil.iter().map(|s| s.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for x in 0..b.len() {
                let rebuilt: f64 = stencil.iter().map(|&(n, w)| w * grid.node_belief(n)[x]).sum();
                prop_assert!((rebuilt - b[x]).abs() < 1e-9);
            }
        }

        // Affine functions of the belief are interpolated exactly by the product grid.
        #[test]
        fn product_grid_exact_on_multilinear(a in 0.0f64..1.0, b in 0.0f64..1.0, res in 2usize..30) {
            let grid = ProductGrid::new([2, 2], res);
            let f = |p: &BeliefPair| 3.0 + 2.0 * p.0[0][1] - 5.0 * p.0[1][1] + 7.0 * p.0[0][1] * p.0[1][1];
            let values: Vec<f64> = (0..grid.len()).map(|n| f(&grid.node_pair(n))).collect();
            let pair = BeliefPair::new(Belief::new(vec![1.0 - a, a]).unwrap(), Belief::new(vec![1.0 - b, b]).unwrap());
            prop_assert!((grid.interpolate(&values, &pair) - f(&pair)).abs() < 1e-9);
        }
    }

    #[test]
    fn delta_nodes() {
        let grid = ProductGrid::new([2, 3], 5);
        let node = grid.delta_node(1, 2);
        assert_eq!(grid.node_pair(node), BeliefPair::deltas([2, 3], 1, 2));
    }

    #[test]
    fn nearest_on_segment() {
        let grid = SimplexGrid::new(2, 11);
        let b = Belief::new(vec![0.66, 0.34]).unwrap();
        let node = grid.nearest(&b);
        assert!((grid.node_belief(node)[1] - 0.3).abs() < 1e-12);
    }
}
