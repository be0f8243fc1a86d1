//! Reachability on small directed graphs given as adjacency lists.

use std::collections::VecDeque;

fn reach_count(adj: &[Vec<usize>], start: usize) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count
}

/// True if every vertex reaches every other one. The empty graph and the
/// single vertex are strongly connected.
pub(crate) fn strongly_connected(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if n <= 1 {
        return true;
    }
    if reach_count(adj, 0) != n {
        return false;
    }
    let mut rev = vec![Vec::new(); n];
    for (u, outs) in adj.iter().enumerate() {
        for &v in outs {
            rev[v].push(u);
        }
    }
    reach_count(&rev, 0) == n
}

/// Adjacency of the positive entries of a square matrix, ignoring the diagonal.
pub(crate) fn positive_pattern(rows: &[Vec<f64>]) -> Vec<Vec<usize>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|&(j, &v)| j != i && v > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}
