//! Progressive edge-growth construction of IRA-style parity-check
//! matrices: a dual-diagonal parity part (full rank by construction) and
//! information columns whose edges are placed to maximize local girth.

use rand::Rng;

use super::alist::SparseMatrix;
use crate::rng;

/// Builds an `(n - k) x n` parity-check matrix. Columns `0..k` carry
/// information bits with `info_degree` edges each; columns `k..n` form the
/// dual-diagonal accumulator. Ties between equally good checks are broken
/// by a ChaCha stream keyed by `seed`.
pub fn construct(n: usize, k: usize, info_degree: usize, seed: u64) -> SparseMatrix {
    assert!(k < n, "need at least one parity bit");
    let m = n - k;
    assert!(info_degree <= m, "info degree exceeds the number of checks");
    let mut rng = rng::root(seed);
    let mut var_checks: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut check_vars: Vec<Vec<usize>> = vec![Vec::new(); m];

    for j in 0..m {
        let v = k + j;
        let mut checks = vec![j];
        if j + 1 < m {
            checks.push(j + 1);
        }
        for c in checks {
            var_checks[v].push(c);
            check_vars[c].push(v);
        }
    }

    for v in 0..k {
        for edge in 0..info_degree {
            let candidates: Vec<usize> = if edge == 0 {
                (0..m).collect()
            } else {
                farthest_checks(v, &var_checks, &check_vars)
            };
            let min_deg = candidates.iter().map(|&c| check_vars[c].len()).min().expect("candidates");
            let best: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| check_vars[c].len() == min_deg)
                .collect();
            let c = best[rng.random_range(0..best.len())];
            var_checks[v].push(c);
            check_vars[c].push(v);
        }
    }
    SparseMatrix::from_columns(m, var_checks)
}

/// Checks at maximal distance from variable `v` in the current graph (or
/// unreachable from it), excluding its current neighbours.
fn farthest_checks(v: usize, var_checks: &[Vec<usize>], check_vars: &[Vec<usize>]) -> Vec<usize> {
    let m = check_vars.len();
    let not_adjacent = |c: &usize| !var_checks[v].contains(c);
    let mut check_seen = vec![false; m];
    let mut var_seen = vec![false; var_checks.len()];
    var_seen[v] = true;
    let mut frontier = vec![v];
    let mut reached = 0usize;
    loop {
        let mut layer = Vec::new();
        for &u in &frontier {
            for &c in &var_checks[u] {
                if !check_seen[c] {
                    check_seen[c] = true;
                    layer.push(c);
                }
            }
        }
        if layer.is_empty() {
            // the tree stopped growing; unreached checks are infinitely far
            return (0..m).filter(|&c| !check_seen[c]).collect();
        }
        reached += layer.len();
        if reached == m {
            let deepest: Vec<usize> = layer.into_iter().filter(not_adjacent).collect();
            return if deepest.is_empty() {
                (0..m).filter(not_adjacent).collect()
            } else {
                deepest
            };
        }
        let mut next = Vec::new();
        for &c in &layer {
            for &u in &check_vars[c] {
                if !var_seen[u] {
                    var_seen[u] = true;
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
}
