//! One-to-one mapping between two vertex sets.
//!
//! [`hungarian`] maximises the summed similarity of the mapping (Kuhn-Munkres,
//! dense O(n^3) with potentials). A zero entry means "no edge": such pairs are
//! never part of a result. Among optimal mappings the lexicographically
//! smallest pair list is returned, so results do not depend on solver
//! internals. [`greedy`] is the order-dependent baseline.

use std::collections::VecDeque;

/// Optimal totals that differ by less than this are treated as equal.
pub const TIE_EPSILON: f64 = 1e-9;

/// Dense similarity matrix; rows are the X vertices, columns the Y vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    /// Panics if rows are ragged or a value lies outside `[0, 1]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged similarity matrix");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!((0.0..=1.0).contains(&value), "similarity {value} outside [0, 1]");
        self.values[row * self.cols + col] = value;
    }

    /// Copy with rows and columns reordered: entry `(i, j)` of the result is
    /// entry `(row_order[i], col_order[j])` of `self`.
    pub fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, self.cols);
        for (i, &r) in row_order.iter().enumerate() {
            for (j, &c) in col_order.iter().enumerate() {
                m.values[i * self.cols + j] = self.get(r, c);
            }
        }
        m
    }
}

/// A one-to-one mapping with its objective value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_similarity: f64,
}

impl Assignment {
    fn from_pairs(matrix: &SimilarityMatrix, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let total_similarity = pairs.iter().map(|&(i, j)| matrix.get(i, j)).sum();
        Self {
            pairs,
            total_similarity,
        }
    }
}

/// Maximum-similarity one-to-one assignment.
pub fn hungarian(matrix: &SimilarityMatrix) -> Assignment {
    let mut pairs = Vec::new();
    for component in components(matrix) {
        match (component.rows.as_slice(), component.cols.as_slice()) {
            ([r], [c]) => pairs.push((*r, *c)),
            _ => pairs.extend(solve_component(matrix, &component)),
        }
    }
    Assignment::from_pairs(matrix, pairs)
}

/// Scans rows in `x_order`; each takes its best still-free column with
/// positive similarity, ties going to the lowest column index.
pub fn greedy(matrix: &SimilarityMatrix, x_order: &[usize]) -> Assignment {
    let mut taken = vec![false; matrix.cols()];
    let mut pairs = Vec::new();
    for &i in x_order {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..matrix.cols() {
            let v = matrix.get(i, j);
            if taken[j] || v <= 0.0 {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
            pairs.push((i, j));
        }
    }
    Assignment::from_pairs(matrix, pairs)
}

/// Connected component of the positive-edge bipartite graph.
struct Component {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

fn components(matrix: &SimilarityMatrix) -> Vec<Component> {
    let (n_rows, n_cols) = (matrix.rows(), matrix.cols());
    let mut parent: Vec<usize> = (0..n_rows + n_cols).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut has_edge = vec![false; n_rows + n_cols];
    for i in 0..n_rows {
        for j in 0..n_cols {
            if matrix.get(i, j) > 0.0 {
                has_edge[i] = true;
                has_edge[n_rows + j] = true;
                let (a, b) = (find(&mut parent, i), find(&mut parent, n_rows + j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Component> = Default::default();
    for v in (0..n_rows + n_cols).filter(|&v| has_edge[v]) {
        let root = find(&mut parent, v);
        let entry = by_root.entry(root).or_insert_with(|| Component {
            rows: Vec::new(),
            cols: Vec::new(),
        });
        if v < n_rows {
            entry.rows.push(v);
        } else {
            entry.cols.push(v - n_rows);
        }
    }
    by_root.into_values().collect()
}

/// Solves one component on a square matrix of size `rows + cols`: real row
/// `i` may pair with real columns or its own private "unmatched" column, real
/// column `j` with real rows or its own private "unmatched" row. Forbidden
/// cells cost more than any feasible perfect matching.
fn solve_component(matrix: &SimilarityMatrix, comp: &Component) -> Vec<(usize, usize)> {
    let (nr, nc) = (comp.rows.len(), comp.cols.len());
    let n = nr + nc;
    let forbidden = (n + 1) as f64;
    let mut cost = vec![forbidden; n * n];
    for (a, &r) in comp.rows.iter().enumerate() {
        for (b, &c) in comp.cols.iter().enumerate() {
            let v = matrix.get(r, c);
            if v > 0.0 {
                cost[a * n + b] = -v;
            }
        }
        cost[a * n + nc + a] = 0.0;
    }
    for b in 0..nc {
        cost[(nr + b) * n + b] = 0.0;
        for a in 0..nr {
            cost[(nr + b) * n + nc + a] = 0.0;
        }
    }

    let (mut row_to_col, u, v) = min_cost_assignment(&cost, n);
    let tight = |i: usize, j: usize| cost[i * n + j] < forbidden && cost[i * n + j] - u[i] - v[j] <= TIE_EPSILON;

    // Walk real rows in ascending index order and fix each to the smallest
    // column that still admits a perfect matching on tight edges.
    let mut col_to_row = vec![0usize; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    let mut fixed = vec![false; n];
    for a in 0..nr {
        let candidates = (0..nc).chain(std::iter::once(nc + a));
        for b in candidates {
            if !tight(a, b) {
                continue;
            }
            if row_to_col[a] == b || reroute(a, b, &mut row_to_col, &mut col_to_row, &fixed, n, &tight) {
                fixed[a] = true;
                break;
            }
        }
        debug_assert!(fixed[a], "current match is always a valid candidate");
    }

    (0..nr)
        .filter(|&a| row_to_col[a] < nc)
        .map(|a| (comp.rows[a], comp.cols[row_to_col[a]]))
        .collect()
}

/// Tries to move row `a` onto column `target` by re-matching the row that
/// currently holds `target` along an alternating path of tight edges that
/// ends at `a`'s current column. Fixed rows are never displaced.
fn reroute(
    a: usize,
    target: usize,
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
    fixed: &[bool],
    n: usize,
    tight: &dyn Fn(usize, usize) -> bool,
) -> bool {
    let freed = row_to_col[a];
    let start = col_to_row[target];
    if fixed[start] {
        return false;
    }
    // BFS over rows needing a new column; `via[col]` remembers the row that reached it.
    let mut via = vec![usize::MAX; n];
    let mut queue = VecDeque::from([start]);
    let mut visited_row = vec![false; n];
    visited_row[start] = true;
    let mut end = None;
    'search: while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if c == target || via[c] != usize::MAX || !tight(r, c) {
                continue;
            }
            via[c] = r;
            if c == freed {
                end = Some(c);
                break 'search;
            }
            let next = col_to_row[c];
            if next == a || fixed[next] || visited_row[next] {
                continue;
            }
            visited_row[next] = true;
            queue.push_back(next);
        }
    }
    let Some(mut c) = end else {
        return false;
    };
    loop {
        let r = via[c];
        let prev = row_to_col[r];
        row_to_col[r] = c;
        col_to_row[c] = r;
        if r == start {
            break;
        }
        c = prev;
    }
    row_to_col[a] = target;
    col_to_row[target] = a;
    true
}

/// Classic O(n^3) Hungarian method with row/column potentials on a square
/// cost matrix. Returns the row-to-column matching and the final potentials.
fn min_cost_assignment(cost: &[f64], n: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}
