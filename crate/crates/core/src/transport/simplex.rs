//! Transportation simplex (MODI / stepping-stone) on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite supply/demand graph with
//! exactly `m + n − 1` cells. With integer costs the dual potentials and
//! reduced costs are integers held exactly in `f64`, so the optimality test
//! is a sign check with no tolerance.

use crate::{Error, Result};

const MAX_PIVOTS: usize = 5_000_000;

pub(crate) struct Solution {
    pub cost: f64,
    pub flows: Vec<(usize, usize, f64)>,
}

struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// Basic-cell ids incident to each node; rows are `0..m`, columns `m..m+n`.
    adj: Vec<Vec<usize>>,
}

impl Basis {
    fn push(&mut self, i: usize, j: usize, x: f64) {
        let id = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(x);
        self.adj[i].push(id);
        self.adj[self.m + j].push(id);
    }

    fn other(&self, id: usize, node: usize) -> usize {
        let (i, j) = self.cells[id];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    fn potentials(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            for &id in &self.adj[node] {
                let next = self.other(id, node);
                if pot[next].is_nan() {
                    let (i, j) = self.cells[id];
                    let c = cost[i * n + j];
                    pot[next] = c - pot[node];
                    stack.push(next);
                }
            }
        }
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Basic cells on the tree path from column node `m + j` to row `i`,
    /// in order.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.m + self.n];
        let target = self.m + j;
        let mut stack = vec![i];
        parent[i] = usize::MAX - 1;
        while let Some(node) = stack.pop() {
            if node == target {
                break;
            }
            for &id in &self.adj[node] {
                let next = self.other(id, node);
                if parent[next] == usize::MAX {
                    parent[next] = id;
                    stack.push(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = target;
        while node != i {
            let id = parent[node];
            out.push(id);
            node = self.other(id, node);
        }
        out
    }

    fn replace(&mut self, leaving: usize, i: usize, j: usize) {
        let (li, lj) = self.cells[leaving];
        self.adj[li].retain(|&c| c != leaving);
        self.adj[self.m + lj].retain(|&c| c != leaving);
        self.cells[leaving] = (i, j);
        self.flow[leaving] = 0.0;
        self.adj[i].push(leaving);
        self.adj[self.m + j].push(leaving);
    }
}

/// North-west corner start: exactly `m + n − 1` cells, degenerate zeros
/// included, forming a spanning tree.
fn north_west(supply: &[f64], demand: &[f64]) -> Basis {
    let (m, n) = (supply.len(), demand.len());
    let mut basis = Basis {
        m,
        n,
        cells: Vec::with_capacity(m + n - 1),
        flow: Vec::with_capacity(m + n - 1),
        adj: vec![Vec::new(); m + n],
    };
    let mut a = supply.to_vec();
    let mut b = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        if i == m - 1 && j == n - 1 {
            basis.push(i, j, a[i].max(0.0));
            break;
        }
        let x = a[i].min(b[j]).max(0.0);
        basis.push(i, j, x);
        a[i] -= x;
        b[j] -= x;
        if j == n - 1 || (i < m - 1 && a[i] <= b[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64], integral: bool) -> Result<Solution> {
    let (m, n) = (supply.len(), demand.len());
    assert_eq!(cost.len(), m * n);
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty transport problem".into()));
    }
    let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let threshold = if integral { -0.5 } else { -1e-12 * cmax.max(1.0) };

    let mut basis = north_west(supply, demand);
    let mut is_basic = vec![false; m * n];
    for &(i, j) in &basis.cells {
        is_basic[i * n + j] = true;
    }

    let mut degenerate_run = 0usize;
    for _ in 0..MAX_PIVOTS {
        let (u, v) = basis.potentials(cost);
        let bland = degenerate_run > m + n;
        let mut entering = None;
        let mut best = threshold;
        'scan: for i in 0..m {
            for j in 0..n {
                if is_basic[i * n + j] {
                    continue;
                }
                let r = cost[i * n + j] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let flows = basis
                .cells
                .iter()
                .zip(&basis.flow)
                .filter(|(_, &x)| x > 0.0)
                .map(|(&(i, j), &x)| (i, j, x))
                .collect::<Vec<_>>();
            let cost = flows.iter().map(|&(i, j, x)| x * cost[i * n + j]).sum();
            return Ok(Solution { cost, flows });
        };

        // Cells on the cycle alternate −, +, −, … starting next to column ej.
        let path = basis.path(ei, ej);
        let mut leaving = usize::MAX;
        let mut theta = f64::INFINITY;
        for &id in path.iter().step_by(2) {
            let x = basis.flow[id];
            let (i, j) = basis.cells[id];
            let better = x < theta
                || (x == theta && {
                    let (li, lj) = basis.cells[leaving];
                    i * n + j < li * n + lj
                });
            if better {
                theta = x;
                leaving = id;
            }
        }
        for (k, &id) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flow[id] -= theta;
            } else {
                basis.flow[id] += theta;
            }
        }
        let (li, lj) = basis.cells[leaving];
        is_basic[li * n + lj] = false;
        is_basic[ei * n + ej] = true;
        basis.replace(leaving, ei, ej);
        basis.flow[leaving] = theta;
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
    }
    Err(Error::Unsupported(format!(
        "transport simplex did not converge within {MAX_PIVOTS} pivots"
    )))
}
