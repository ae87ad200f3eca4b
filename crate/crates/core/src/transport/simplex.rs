//! Transportation simplex on a spanning-tree basis.
//!
//! The basis is a spanning tree of the bipartite graph of sources and sinks
//! with `n + m − 1` cells. Each pivot prices every cell with the node
//! potentials of the tree, brings in the most negative reduced cost (ties to
//! the lexicographically smallest cell) and removes the blocking cell of the
//! cycle it closes (ties again lexicographic). After a long run of zero-step
//! pivots the pricing switches to Bland's rule, which cannot cycle.

use crate::{Error, Result};

pub struct Solution {
    /// Basic cells `(i, j, flow)`.
    pub basis: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub pivots: usize,
    /// Whether the final basis carries a basic cell with zero flow.
    pub degenerate: bool,
}

const DEGENERATE_STREAK: usize = 50;

pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Solution> {
    let (n, m) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), n * m);
    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let price_tol = 1e-12 * scale;
    let flow_tol = 1e-14;

    // North-west corner start: a staircase of n + m − 1 cells.
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(n + m - 1);
    {
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]).max(0.0);
            basis.push((i, j, x));
            s[i] -= x;
            d[j] -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if j == m - 1 || (i < n - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    debug_assert_eq!(basis.len(), n + m - 1);

    let max_pivots = 50 * (n + m) * (n + m) + 1000;
    let mut streak = 0;
    let mut pivots = 0;
    let (mut u, mut v) = (vec![0.0; n], vec![0.0; m]);
    loop {
        potentials(n, m, &basis, cost, &mut u, &mut v);
        let bland = streak >= DEGENERATE_STREAK;
        let mut entering: Option<(usize, usize, f64)> = None;
        'price: for i in 0..n {
            for j in 0..m {
                let r = cost[i * m + j] - u[i] - v[j];
                if r < -price_tol && entering.is_none_or(|(_, _, best)| r < best) {
                    entering = Some((i, j, r));
                    if bland {
                        break 'price;
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numeric(format!(
                "transport simplex exceeded {max_pivots} pivots"
            )));
        }

        // Cycle: entering cell, then the tree path from column ej back to row ei.
        let path = tree_path(n, m, &basis, ei, ej);
        // Cells on the path alternate −, +, −, … starting next to the entering cell.
        let mut leave: Option<usize> = None;
        for (k, &b) in path.iter().enumerate() {
            if k % 2 == 0 {
                let (bi, bj, f) = basis[b];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let (li, lj, lf) = basis[l];
                        f < lf || (f == lf && (bi, bj) < (li, lj))
                    }
                };
                if better {
                    leave = Some(b);
                }
            }
        }
        let leave = leave.expect("a cycle has a decreasing cell");
        let theta = basis[leave].2.max(0.0);
        for (k, &b) in path.iter().enumerate() {
            let f = &mut basis[b].2;
            if k % 2 == 0 {
                *f = (*f - theta).max(0.0);
            } else {
                *f += theta;
            }
        }
        streak = if theta <= flow_tol { streak + 1 } else { 0 };
        basis[leave] = (ei, ej, theta);
    }
    let degenerate = basis.iter().any(|&(_, _, f)| f <= flow_tol);
    Ok(Solution {
        basis,
        u,
        v,
        pivots,
        degenerate,
    })
}

/// Solves `u[i] + v[j] = c[i][j]` over the tree with `u[0] = 0`.
fn potentials(
    n: usize,
    m: usize,
    basis: &[(usize, usize, f64)],
    cost: &[f64],
    u: &mut [f64],
    v: &mut [f64],
) {
    let adj = adjacency(n, m, basis);
    let mut seen = vec![false; n + m];
    let mut stack = vec![0usize];
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = stack.pop() {
        for &b in &adj[node] {
            let (i, j, _) = basis[b];
            let c = cost[i * m + j];
            let other = if node < n { n + j } else { i };
            if seen[other] {
                continue;
            }
            seen[other] = true;
            if node < n {
                v[j] = c - u[i];
            } else {
                u[i] = c - v[j];
            }
            stack.push(other);
        }
    }
    debug_assert!(seen.iter().all(|&s| s), "basis is not spanning");
}

/// Node ids: rows `0..n`, columns `n..n + m`; each entry lists basis cells.
fn adjacency(n: usize, m: usize, basis: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n + m];
    for (b, &(i, j, _)) in basis.iter().enumerate() {
        adj[i].push(b);
        adj[n + j].push(b);
    }
    adj
}

/// Basis cells on the tree path from column `col` to row `row`, in order.
fn tree_path(
    n: usize,
    m: usize,
    basis: &[(usize, usize, f64)],
    row: usize,
    col: usize,
) -> Vec<usize> {
    let adj = adjacency(n, m, basis);
    let start = n + col;
    let mut via: Vec<Option<usize>> = vec![None; n + m];
    let mut seen = vec![false; n + m];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        for &b in &adj[node] {
            let (i, j, _) = basis[b];
            let other = if node < n { n + j } else { i };
            if !seen[other] {
                seen[other] = true;
                via[other] = Some(b);
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = row;
    while node != start {
        let b = via[node].expect("tree connects every row and column");
        path.push(b);
        let (i, j, _) = basis[b];
        node = if node < n { n + j } else { i };
    }
    path.reverse();
    path
}
