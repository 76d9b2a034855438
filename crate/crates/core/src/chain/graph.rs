//! Structural (graph) properties of nonnegative matrices.

use std::collections::VecDeque;

/// Adjacency of the directed graph `i -> j` iff `adj(i, j)`.
pub(crate) fn strongly_connected(n: usize, adj: impl Fn(usize, usize) -> bool) -> bool {
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let edge = if forward { adj(u, v) } else { adj(v, u) };
                if edge && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of a strongly connected digraph: gcd of `level(u) + 1 - level(v)`
/// over all edges, with BFS levels from vertex 0.
pub(crate) fn period(n: usize, adj: impl Fn(usize, usize) -> bool) -> usize {
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adj(u, v) && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for u in 0..n {
        for v in 0..n {
            if adj(u, v) && level[u] != usize::MAX && level[v] != usize::MAX {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_periods() {
        // 3-cycle
        let adj = |u: usize, v: usize| v == (u + 1) % 3;
        assert!(strongly_connected(3, adj));
        assert_eq!(period(3, adj), 3);
        // 3-cycle plus a 2-cycle sharing vertex 0 -> gcd(3, 2) = 1
        let adj2 = |u: usize, v: usize| v == (u + 1) % 3 || (u == 1 && v == 0);
        assert_eq!(period(3, adj2), 1);
    }

    #[test]
    fn disconnected() {
        assert!(!strongly_connected(2, |u, v| u == v));
    }
}
