//! Compressed sparse rows and symmetric LDLᵀ solvers: a profile solver with
//! reverse Cuthill–McKee ordering and a multifrontal solver with nested
//! dissection.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given sorted, deduplicated column lists.
    pub fn from_rows(nrows: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in rows {
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix {
            nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_raw(
        nrows: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(row_ptr.len(), nrows + 1);
        assert_eq!(col_idx.len(), values.len());
        CsrMatrix {
            nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in a {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix::from_raw(n, row_ptr, col_idx, values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn row_parts_mut(&mut self, range: std::ops::Range<usize>) -> (&[usize], &mut [f64]) {
        (&self.col_idx[range.clone()], &mut self.values[range])
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.nrows]; self.nrows];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        a
    }
}

/// Reverse Cuthill–McKee ordering; `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree, &visited);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>], blocked: &[bool]) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = vec![start];
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX && !blocked[w] {
                level[w] = level[v] + 1;
                if level[w] > depth {
                    depth = level[w];
                    last.clear();
                }
                if level[w] == depth {
                    last.push(w);
                }
                queue.push_back(w);
            }
        }
    }
    (depth, last)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize], blocked: &[bool]) -> usize {
    let mut current = seed;
    let (mut depth, mut frontier) = bfs_levels(current, adj, blocked);
    for _ in 0..8 {
        let candidate = *frontier.iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let (d, f) = bfs_levels(candidate, adj, blocked);
        if d <= depth {
            break;
        }
        current = candidate;
        depth = d;
        frontier = f;
    }
    current
}

/// LDLᵀ factorization of a symmetric matrix stored by rows of its lower
/// profile, without pivoting.
#[derive(Debug, Clone)]
pub struct ProfileLdlt {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-14;

impl ProfileLdlt {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = rcm_ordering(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                first[new] = first[new].min(inv[j]);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i]));
        }
        let mut lower = vec![0.0; start[n]];
        let mut diag = vec![0.0; n];
        let mut scale = 0.0f64;
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jj = inv[j];
                if jj < new {
                    lower[start[new] + jj - first[new]] += v;
                } else if jj == new {
                    diag[new] += v;
                    scale = scale.max(v.abs());
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = lower.split_at_mut(start[i]);
            let row_i = &mut rest[..i - fi];
            // row_i holds t_j = L_ij D_j while it is being formed
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &done[start[j]..start[j] + (j - fj)];
                let s = dot(&row_i[lo - fi..j - fi], &row_j[lo - fj..j - fj]);
                row_i[j - fi] -= s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let t = row_i[j - fi];
                let l = t / diag[j];
                d -= t * l;
                row_i[j - fi] = l;
            }
            if !(d.abs() > PIVOT_TOL * scale.max(f64::MIN_POSITIVE)) || !d.is_finite() {
                return Err(Error::Singular {
                    row: perm[i],
                    pivot: d,
                });
            }
            diag[i] = d;
        }
        Ok(ProfileLdlt {
            perm,
            first,
            start,
            lower,
            diag,
        })
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    /// Stored profile entries below the diagonal.
    pub fn profile_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        let mut z: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            z[i] -= dot(row, &z[fi..i]);
        }
        for (zi, di) in z.iter_mut().zip(&self.diag) {
            *zi /= di;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = z[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (zj, l) in z[fi..i].iter_mut().zip(row) {
                *zj -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Nested-dissection ordering from BFS level-structure separators;
/// `perm[new] = old`.
pub fn nested_dissection_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let mut work = Dissection {
        adj: &adj,
        region: vec![0; n],
        level: vec![usize::MAX; n],
        next_region: 1,
        order: Vec::with_capacity(n),
    };
    work.dissect((0..n).collect(), 0);
    work.order
}

const LEAF_SIZE: usize = 64;

struct Dissection<'a> {
    adj: &'a [Vec<usize>],
    region: Vec<usize>,
    level: Vec<usize>,
    next_region: usize,
    order: Vec<usize>,
}

impl Dissection<'_> {
    /// BFS inside region `id`; returns (depth, a deepest node, visited).
    fn bfs(&mut self, start: usize, id: usize, visited: &mut Vec<usize>) -> (usize, usize) {
        for &v in visited.iter() {
            self.level[v] = usize::MAX;
        }
        visited.clear();
        self.level[start] = 0;
        visited.push(start);
        let mut head = 0;
        while head < visited.len() {
            let v = visited[head];
            head += 1;
            let lv = self.level[v];
            for &w in &self.adj[v] {
                if self.region[w] == id && self.level[w] == usize::MAX {
                    self.level[w] = lv + 1;
                    visited.push(w);
                }
            }
        }
        let last = *visited.last().unwrap();
        (self.level[last], last)
    }

    fn relabel(&mut self, nodes: &[usize]) -> usize {
        let id = self.next_region;
        self.next_region += 1;
        for &v in nodes {
            self.region[v] = id;
        }
        id
    }

    fn dissect(&mut self, nodes: Vec<usize>, id: usize) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend(nodes);
            return;
        }
        let mut visited = Vec::with_capacity(nodes.len());
        let seed = *nodes
            .iter()
            .min_by_key(|&&v| {
                (
                    self.adj[v]
                        .iter()
                        .filter(|&&w| self.region[w] == id)
                        .count(),
                    v,
                )
            })
            .unwrap();
        let (mut depth, mut far) = self.bfs(seed, id, &mut visited);
        let mut root = seed;
        for _ in 0..4 {
            let (d, f) = self.bfs(far, id, &mut visited);
            if d <= depth {
                break;
            }
            root = far;
            depth = d;
            far = f;
        }
        let (depth, _) = self.bfs(root, id, &mut visited);

        if visited.len() < nodes.len() {
            let comp = visited.clone();
            for &v in &visited {
                self.level[v] = usize::MAX;
            }
            let ca = self.relabel(&comp);
            let rest: Vec<usize> = nodes
                .into_iter()
                .filter(|&v| self.region[v] == id)
                .collect();
            let cb = self.relabel(&rest);
            self.dissect(comp, ca);
            self.dissect(rest, cb);
            return;
        }
        if depth < 2 {
            for &v in &visited {
                self.level[v] = usize::MAX;
            }
            self.order.extend(nodes);
            return;
        }
        let mid = depth / 2;
        let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
        for &v in &nodes {
            let lv = self.level[v];
            if lv < mid {
                left.push(v);
            } else if lv > mid {
                right.push(v);
            } else if self.adj[v]
                .iter()
                .any(|&w| self.region[w] == id && self.level[w] == mid + 1)
            {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        for &v in &visited {
            self.level[v] = usize::MAX;
        }
        let la = self.relabel(&left);
        let lb = self.relabel(&right);
        self.relabel(&sep);
        self.dissect(left, la);
        self.dissect(right, lb);
        self.order.extend(sep);
    }
}

/// Ordering, elimination tree and supernode structure of a sparsity pattern.
#[derive(Debug, Clone)]
pub struct SymbolicLdlt {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    perm: Vec<usize>,
    /// For every stored entry of the input: (supernode, front row, front
    /// column) when it lies in the lower triangle of the permuted matrix,
    /// `usize::MAX` as supernode otherwise.
    scatter: Vec<(usize, u32, u32)>,
    starts: Vec<usize>,
    rows: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// For each child supernode, positions of its update rows in the parent.
    child_map: Vec<Vec<usize>>,
}

impl SymbolicLdlt {
    pub fn analyze(a: &CsrMatrix) -> Self {
        Self::analyze_with(a, nested_dissection_ordering(a))
    }

    pub fn analyze_with(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = a.nrows();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // strictly-lower pattern by column of the permuted matrix
        let mut lower: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut upper_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, _) in a.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pi > pj {
                    lower[pj].push(pi);
                    upper_rows[pi].push(pj);
                }
            }
        }

        let mut parent = vec![usize::MAX; n];
        let mut ancestor = vec![usize::MAX; n];
        for k in 0..n {
            for &i0 in &upper_rows[k] {
                let mut i = i0;
                while i != usize::MAX && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == usize::MAX {
                        parent[i] = k;
                        break;
                    }
                    i = next;
                }
            }
        }
        drop(upper_rows);

        let mut col_children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            if parent[j] != usize::MAX {
                col_children[parent[j]].push(j);
            }
        }
        let mut structs: Vec<Vec<usize>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut s = std::mem::take(&mut lower[j]);
            for &c in &col_children[j] {
                s.extend(structs[c].iter().copied().filter(|&i| i > j));
            }
            s.sort_unstable();
            s.dedup();
            structs.push(s);
        }

        // fundamental supernodes, then relaxed merging along the chain
        let mut starts = vec![0];
        for j in 1..n {
            if !(parent[j - 1] == j && structs[j - 1].len() == structs[j].len() + 1) {
                starts.push(j);
            }
        }
        starts.push(n);
        let mut merged = vec![0];
        let mut true_size: usize = 0;
        let (mut g0, mut g1) = (0, starts.get(1).copied().unwrap_or(0));
        for j in g0..g1 {
            true_size += structs[j].len() + 1;
        }
        for w in starts.windows(2).skip(1) {
            let (c1, c2) = (w[0], w[1]);
            let mut next_true = 0;
            for j in c1..c2 {
                next_true += structs[j].len() + 1;
            }
            let tail = structs[c2 - 1].len();
            let merged_size: usize = (g0..c2).map(|j| c2 - j + tail).sum();
            let width = c2 - g0;
            let chained = parent[g1 - 1] == c1;
            let total_true = true_size + next_true;
            if chained && (width <= 8 || (merged_size - total_true) * 5 <= total_true) {
                g1 = c2;
                true_size = total_true;
            } else {
                merged.push(c1);
                g0 = c1;
                g1 = c2;
                true_size = next_true;
            }
        }
        if n > 0 {
            merged.push(n);
        }
        let starts = if n == 0 { vec![0] } else { merged };
        let ns = starts.len() - 1;
        let mut owner = vec![0; n];
        let mut rows = Vec::with_capacity(ns);
        for s in 0..ns {
            let (c0, c1) = (starts[s], starts[s + 1]);
            for o in &mut owner[c0..c1] {
                *o = s;
            }
            let mut r: Vec<usize> = (c0..c1).collect();
            r.extend_from_slice(&structs[c1 - 1]);
            rows.push(r);
        }
        drop(structs);

        let mut children = vec![Vec::new(); ns];
        let mut child_map = vec![Vec::new(); ns];
        let mut local = vec![usize::MAX; n];
        let mut parents = vec![usize::MAX; ns];
        for s in 0..ns {
            let last = starts[s + 1] - 1;
            if parent[last] != usize::MAX {
                let p = owner[parent[last]];
                parents[s] = p;
                children[p].push(s);
            }
        }
        for p in 0..ns {
            for (pos, &r) in rows[p].iter().enumerate() {
                local[r] = pos;
            }
            for &c in &children[p] {
                let k = starts[c + 1] - starts[c];
                child_map[c] = rows[c][k..].iter().map(|&r| local[r]).collect();
            }
            for &r in &rows[p] {
                local[r] = usize::MAX;
            }
        }

        let mut scatter = vec![(usize::MAX, 0u32, 0u32); a.nnz()];
        let mut front_pos: Vec<usize> = vec![0; n];
        for s in 0..ns {
            for (pos, &r) in rows[s].iter().enumerate() {
                if pos < starts[s + 1] - starts[s] {
                    front_pos[r] = pos;
                }
            }
        }
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                let (pi, pj) = (inv[i], inv[j]);
                if pi >= pj {
                    let s = owner[pj];
                    let row_pos = rows[s].binary_search(&pi).expect("entry inside front");
                    scatter[k] = (s, row_pos as u32, front_pos[pj] as u32);
                }
            }
        }

        SymbolicLdlt {
            n,
            row_ptr: a.row_ptr.clone(),
            col_idx: a.col_idx.clone(),
            perm,
            scatter,
            starts,
            rows,
            children,
            child_map,
        }
    }

    /// True if `a` has exactly the analyzed pattern.
    pub fn matches(&self, a: &CsrMatrix) -> bool {
        a.nrows() == self.n && a.row_ptr == self.row_ptr && a.col_idx == self.col_idx
    }

    pub fn num_supernodes(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn factor(self: &std::sync::Arc<Self>, a: &CsrMatrix) -> Result<MultifrontalLdlt> {
        if !self.matches(a) {
            return Err(Error::Dimension(
                "matrix pattern differs from the analyzed one".into(),
            ));
        }
        let ns = self.num_supernodes();
        let scale = (0..self.n).fold(0.0f64, |m, i| m.max(a.get(i, i).abs()));
        // entries of A grouped per supernode
        let mut entries: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); ns];
        for (k, &(s, r, c)) in self.scatter.iter().enumerate() {
            if s != usize::MAX {
                entries[s].push((r, c, a.values[k]));
            }
        }
        let mut diag = vec![0.0; self.n];
        let mut factors = Vec::with_capacity(ns);
        let mut pending: Vec<Option<Vec<f64>>> = (0..ns).map(|_| None).collect();
        for s in 0..ns {
            let c0 = self.starts[s];
            let k = self.starts[s + 1] - c0;
            let m = self.rows[s].len();
            let mut front = vec![0.0; m * m];
            for &(r, c, v) in &entries[s] {
                front[r as usize * m + c as usize] += v;
            }
            for &child in &self.children[s] {
                let u = pending[child].take().expect("child update");
                let map = &self.child_map[child];
                let mu = map.len();
                for a_ in 0..mu {
                    let ra = map[a_] * m;
                    let urow = &u[a_ * mu..a_ * mu + a_ + 1];
                    for (b, v) in urow.iter().enumerate() {
                        front[ra + map[b]] += v;
                    }
                }
            }
            let mut w = vec![0.0; m * k];
            for p in 0..k {
                for i in p..m {
                    let s_ip = dot(&front[i * m..i * m + p], &w[p * k..p * k + p]);
                    front[i * m + p] -= s_ip;
                }
                let d = front[p * m + p];
                if !(d.abs() > PIVOT_TOL * scale.max(f64::MIN_POSITIVE)) || !d.is_finite() {
                    return Err(Error::Singular {
                        row: self.perm[c0 + p],
                        pivot: d,
                    });
                }
                diag[c0 + p] = d;
                for i in p..m {
                    w[i * k + p] = front[i * m + p];
                    front[i * m + p] /= d;
                }
            }
            let mut l = vec![0.0; m * k];
            for i in 0..m {
                l[i * k..i * k + k].copy_from_slice(&front[i * m..i * m + k]);
            }
            let mu = m - k;
            if mu > 0 {
                let mut u = vec![0.0; mu * mu];
                for a_ in 0..mu {
                    let ia = k + a_;
                    let la = &l[ia * k..ia * k + k];
                    for b in 0..=a_ {
                        let ib = k + b;
                        u[a_ * mu + b] = front[ia * m + ib] - dot(la, &w[ib * k..ib * k + k]);
                    }
                }
                pending[s] = Some(u);
            }
            factors.push(l);
        }
        Ok(MultifrontalLdlt {
            symbolic: std::sync::Arc::clone(self),
            diag,
            factors,
        })
    }
}

/// Supernodal multifrontal LDLᵀ without pivoting.
#[derive(Debug, Clone)]
pub struct MultifrontalLdlt {
    symbolic: std::sync::Arc<SymbolicLdlt>,
    diag: Vec<f64>,
    /// Per supernode, row-major `rows × width` unit-lower columns.
    factors: Vec<Vec<f64>>,
}

impl MultifrontalLdlt {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        std::sync::Arc::new(SymbolicLdlt::analyze(a)).factor(a)
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    /// Stored factor entries, diagonal blocks included.
    pub fn factor_size(&self) -> usize {
        self.factors.iter().map(Vec::len).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let sym = &self.symbolic;
        let n = self.dimension();
        let mut x: Vec<f64> = sym.perm.iter().map(|&old| b[old]).collect();
        for (s, l) in self.factors.iter().enumerate() {
            let c0 = sym.starts[s];
            let k = sym.starts[s + 1] - c0;
            let rows = &sym.rows[s];
            for p in 0..k {
                let y = x[c0 + p];
                for (i, &r) in rows.iter().enumerate().skip(p + 1) {
                    x[r] -= l[i * k + p] * y;
                }
            }
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= d;
        }
        for (s, l) in self.factors.iter().enumerate().rev() {
            let c0 = sym.starts[s];
            let k = sym.starts[s + 1] - c0;
            let rows = &sym.rows[s];
            for p in (0..k).rev() {
                let mut acc = 0.0;
                for (i, &r) in rows.iter().enumerate().skip(p + 1) {
                    acc += l[i * k + p] * x[r];
                }
                x[c0 + p] -= acc;
            }
        }
        let mut out = vec![0.0; n];
        for (new, &old) in sym.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// Direct solver that reuses the symbolic analysis while the pattern is
/// unchanged.
#[derive(Debug, Default)]
pub struct SymmetricSolver {
    symbolic: Option<std::sync::Arc<SymbolicLdlt>>,
}

impl SymmetricSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != a.nrows() {
            return Err(Error::Dimension(format!(
                "rhs has {} entries for {} rows",
                b.len(),
                a.nrows()
            )));
        }
        if a.nrows() == 0 {
            return Ok(Vec::new());
        }
        let symbolic = match &self.symbolic {
            Some(s) if s.matches(a) => std::sync::Arc::clone(s),
            _ => {
                let s = std::sync::Arc::new(SymbolicLdlt::analyze(a));
                self.symbolic = Some(std::sync::Arc::clone(&s));
                s
            }
        };
        Ok(symbolic.factor(a)?.solve(b))
    }
}

/// Solve A x = b for symmetric A.
pub fn solve_symmetric(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SymmetricSolver::new().solve(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn laplacian_grid(nx: usize, ny: usize, shift: f64) -> CsrMatrix {
        let n = nx * ny;
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                a[k][k] = 4.0 + shift;
                if i > 0 {
                    a[k][k - 1] = -1.0;
                }
                if i + 1 < nx {
                    a[k][k + 1] = -1.0;
                }
                if j > 0 {
                    a[k][k - nx] = -1.0;
                }
                if j + 1 < ny {
                    a[k][k + nx] = -1.0;
                }
            }
        }
        CsrMatrix::from_dense(&a)
    }

    #[test]
    fn solves_grid_laplacian() {
        let a = laplacian_grid(13, 9, 0.1);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let x: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.mul_vec(&x);
        let y = solve_symmetric(&a, &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_without_zero_pivots() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let x = solve_symmetric(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            solve_symmetric(&a, &[1.0, 1.0]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn rcm_reduces_profile_of_scrambled_grid() {
        let a = laplacian_grid(30, 30, 0.0);
        let n = a.nrows();
        let mut scrambled: Vec<usize> = (0..n).collect();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for i in (1..n).rev() {
            scrambled.swap(i, rng.gen_range(0..=i));
        }
        let bad = ProfileLdlt::factor_with(&a, scrambled)
            .unwrap()
            .profile_size();
        let good = ProfileLdlt::factor(&a).unwrap();
        assert!(
            good.profile_size() * 5 < bad,
            "{} vs {bad}",
            good.profile_size()
        );
        let mut perm = rcm_ordering(&a);
        perm.sort_unstable();
        assert_eq!(perm, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn multifrontal_matches_profile() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for (nx, ny) in [(1, 1), (3, 2), (20, 17), (41, 40)] {
            let a = laplacian_grid(nx, ny, 0.05);
            let b: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x1 = ProfileLdlt::factor(&a).unwrap().solve(&b);
            let x2 = MultifrontalLdlt::factor(&a).unwrap().solve(&b);
            for (p, q) in x1.iter().zip(&x2) {
                assert!((p - q).abs() < 1e-10, "{nx}x{ny}");
            }
            let mut perm = nested_dissection_ordering(&a);
            perm.sort_unstable();
            assert_eq!(perm, (0..a.nrows()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn multifrontal_reports_singular() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            MultifrontalLdlt::factor(&a),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn disconnected_components() {
        let a = CsrMatrix::from_dense(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 3.0, 1.0],
            vec![0.0, 1.0, 3.0],
        ]);
        let x = solve_symmetric(&a, &[2.0, 4.0, 4.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
