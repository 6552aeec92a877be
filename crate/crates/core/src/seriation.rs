//! Matrix reordering: average-linkage clustering of row (and column) vectors
//! followed by optimal leaf ordering, plus stable single-key sorts.
//!
//! Orderings are returned as permutations; matrix values are never moved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::MetricMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriationError {
    #[error("key index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("matrix is empty")]
    EmptyMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reordering {
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

/// Global reordering. Symmetric matrices get one shared permutation.
pub fn reorder_global(matrix: &MetricMatrix) -> Result<Reordering, SeriationError> {
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(SeriationError::EmptyMatrix);
    }
    let row_perm = order_vectors(&matrix.values);
    let col_perm = if matrix.symmetric {
        row_perm.clone()
    } else {
        let cols: Vec<Vec<f64>> = (0..matrix.n_cols())
            .map(|c| matrix.values.iter().map(|r| r[c]).collect())
            .collect();
        order_vectors(&cols)
    };
    Ok(Reordering { row_perm, col_perm })
}

/// Leaf order for a set of observation vectors.
pub fn order_vectors(vectors: &[Vec<f64>]) -> Vec<usize> {
    let n = vectors.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(&vectors[i], &vectors[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let tree = average_linkage(&dist);
    optimal_leaf_order(&tree, &dist)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            // NaN cells contribute nothing rather than poisoning the tree.
            if d.is_nan() { 0.0 } else { d * d }
        })
        .sum::<f64>()
        .sqrt()
}

/// Binary dendrogram: leaves are `0..n`, internal node `n + k` is the k-th merge.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub n_leaves: usize,
    /// `(left, right, height)` per merge.
    pub merges: Vec<(usize, usize, f64)>,
}

impl Dendrogram {
    fn root(&self) -> usize {
        if self.merges.is_empty() {
            0
        } else {
            self.n_leaves + self.merges.len() - 1
        }
    }

    fn children(&self, node: usize) -> Option<(usize, usize)> {
        (node >= self.n_leaves).then(|| {
            let (l, r, _) = self.merges[node - self.n_leaves];
            (l, r)
        })
    }

    /// Leaves under `node` in left-to-right order.
    pub fn leaves(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }
}

/// UPGMA over a full distance matrix. Ties pick the pair with the smallest
/// cluster indices; the child containing the smaller leaf goes left.
pub fn average_linkage(dist: &[Vec<f64>]) -> Dendrogram {
    let n = dist.len();
    // Active clusters: (node id, size, min leaf).
    let mut active: Vec<(usize, usize, usize)> = (0..n).map(|i| (i, 1, i)).collect();
    let mut d: Vec<Vec<f64>> = dist.to_vec();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let mut best = (0, 1);
        let mut best_d = f64::INFINITY;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                if d[a][b] < best_d {
                    best_d = d[a][b];
                    best = (a, b);
                }
            }
        }
        let (a, b) = best;
        let (ida, sa, ma) = active[a];
        let (idb, sb, mb) = active[b];
        let (left, right) = if ma <= mb { (ida, idb) } else { (idb, ida) };
        let node = n + merges.len();
        merges.push((left, right, best_d));

        // Merged cluster replaces slot a; slot b is removed.
        for k in 0..active.len() {
            if k != a && k != b {
                let v = (d[a][k] * sa as f64 + d[b][k] * sb as f64) / (sa + sb) as f64;
                d[a][k] = v;
                d[k][a] = v;
            }
        }
        active[a] = (node, sa + sb, ma.min(mb));
        active.remove(b);
        d.remove(b);
        for row in &mut d {
            row.remove(b);
        }
    }

    Dendrogram { n_leaves: n, merges }
}

/// Optimal leaf ordering: flips subtrees to minimise the summed distance
/// between adjacent leaves, keeping every cluster contiguous.
pub fn optimal_leaf_order(tree: &Dendrogram, dist: &[Vec<f64>]) -> Vec<usize> {
    let n = tree.n_leaves;
    if n <= 2 {
        return (0..n).collect();
    }
    // best[a][b]: minimal path cost over the subtree rooted at lca(a, b)
    // starting at leaf a and ending at leaf b; choice[a][b] the inner pair.
    let mut best = vec![vec![f64::INFINITY; n]; n];
    let mut choice = vec![vec![(usize::MAX, usize::MAX); n]; n];
    for (i, row) in best.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    // Leaves under each node id.
    let mut leaves_of: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    for &(l, r, _) in &tree.merges {
        let left = leaves_of[l].clone();
        let right = leaves_of[r].clone();
        let left_ends = ends(tree, &leaves_of, l);
        let right_ends = ends(tree, &leaves_of, r);

        // For each start a in L and each inner right leaf m:
        //   via[a][m] = min_k best[a][k] + dist[k][m], k an end partner of a in L.
        for &a in &left {
            let partners: &[usize] = &left_ends[&a];
            for &m in &right {
                let mut vbest = f64::INFINITY;
                let mut vk = usize::MAX;
                for &k in partners {
                    let c = best[a][k] + dist[k][m];
                    if c < vbest {
                        vbest = c;
                        vk = k;
                    }
                }
                for &b in &right_ends[&m] {
                    let c = vbest + best[m][b];
                    if c < best[a][b] {
                        best[a][b] = c;
                        best[b][a] = c;
                        choice[a][b] = (vk, m);
                        choice[b][a] = (m, vk);
                    }
                }
            }
        }
        let mut merged = left;
        merged.extend(right);
        leaves_of.push(merged);
    }

    let root = tree.root();
    let (l, r) = tree.children(root).expect("n > 2 has a root merge");
    let mut start = (usize::MAX, usize::MAX);
    let mut cost = f64::INFINITY;
    for &a in &leaves_of[l] {
        for &b in &leaves_of[r] {
            if best[a][b] < cost {
                cost = best[a][b];
                start = (a, b);
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    unwind(start.0, start.1, &choice, &mut out);
    out
}

/// For every leaf `a` under `node`, the leaves it may pair with as the two
/// ends of an ordering of that subtree (leaves on the other side of `node`).
fn ends(tree: &Dendrogram, leaves_of: &[Vec<usize>], node: usize) -> std::collections::HashMap<usize, Vec<usize>> {
    let mut out = std::collections::HashMap::new();
    match tree.children(node) {
        None => {
            out.insert(node, vec![node]);
        }
        Some((l, r)) => {
            for &a in &leaves_of[l] {
                out.insert(a, leaves_of[r].clone());
            }
            for &b in &leaves_of[r] {
                out.insert(b, leaves_of[l].clone());
            }
        }
    }
    out
}

fn unwind(a: usize, b: usize, choice: &[Vec<(usize, usize)>], out: &mut Vec<usize>) {
    if a == b {
        out.push(a);
        return;
    }
    let (k, m) = choice[a][b];
    unwind(a, k, choice, out);
    unwind(m, b, choice, out);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Key is a row; the columns are permuted.
    Row,
    /// Key is a column; the rows are permuted.
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

/// Stable sort of the opposite axis by the values in one row or column.
pub fn sort_local(
    matrix: &MetricMatrix,
    axis: Axis,
    key_index: usize,
    direction: Direction,
) -> Result<Vec<usize>, SeriationError> {
    let (key, len): (Vec<f64>, usize) = match axis {
        Axis::Row => (
            matrix.values.get(key_index).cloned().unwrap_or_default(),
            matrix.n_rows(),
        ),
        Axis::Col => (
            matrix.values.iter().filter_map(|r| r.get(key_index).copied()).collect(),
            matrix.n_cols(),
        ),
    };
    if key_index >= len {
        return Err(SeriationError::IndexOutOfRange { index: key_index, len });
    }
    let mut perm: Vec<usize> = (0..key.len()).collect();
    match direction {
        Direction::Asc => perm.sort_by(|&i, &j| key[i].total_cmp(&key[j])),
        Direction::Desc => perm.sort_by(|&i, &j| key[j].total_cmp(&key[i])),
    }
    Ok(perm)
}
