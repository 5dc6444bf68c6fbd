//! Exact transportation simplex.
//!
//! Dense bipartite instances, northwest-corner start, Bland's pivoting rule
//! (first negative reduced cost in row-major arc order, lexicographically
//! smallest leaving arc), which terminates without cycling and makes
//! degenerate-optimum selection reproducible. Potentials are recomputed from
//! the basis tree each pivot.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("supply and demand masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("instance too large: {0} x {1} arcs")]
    SizeOverflow(usize, usize),
    #[error("pivot limit {0} exceeded")]
    PivotLimit(usize),
    #[error("empty marginal")]
    Empty,
}

pub struct SimplexSolution {
    /// Positive optimal flows as (source, sink, mass).
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub potentials_u: Vec<f64>,
    pub potentials_v: Vec<f64>,
    /// Most negative reduced cost at termination; `>= -eps` certifies
    /// optimality of the returned flows.
    pub min_reduced_cost: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy)]
struct BasisArc {
    i: usize,
    j: usize,
    flow: f64,
}

/// Solve `min sum c_ij x_ij` over nonnegative couplings of `a` and `b`.
pub fn transportation_simplex(
    a: &[f64],
    b: &[f64],
    cost: &dyn Fn(usize, usize) -> f64,
) -> Result<SimplexSolution, SimplexError> {
    let m = a.len();
    let n = b.len();
    if m == 0 || n == 0 {
        return Err(SimplexError::Empty);
    }
    if m.saturating_mul(n) > 25_000_000 {
        return Err(SimplexError::SizeOverflow(m, n));
    }
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    if (sum_a - sum_b).abs() > 1e-9 * sum_a.abs().max(1.0) {
        return Err(SimplexError::MassMismatch(sum_a, sum_b));
    }
    // absorb rounding drift into the demand side
    let scale = sum_a / sum_b;
    let b: Vec<f64> = b.iter().map(|x| x * scale).collect();

    // northwest-corner start: m + n - 1 arcs forming a spanning tree
    let mut basis: Vec<BasisArc> = Vec::with_capacity(m + n - 1);
    {
        let (mut i, mut j) = (0, 0);
        let mut rem_a = a[0];
        let mut rem_b = b[0];
        loop {
            let q = rem_a.min(rem_b).max(0.0);
            basis.push(BasisArc { i, j, flow: q });
            rem_a -= q;
            rem_b -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (rem_a < rem_b || j == n - 1) && i < m - 1 {
                i += 1;
                rem_a = a[i];
            } else {
                j += 1;
                rem_b = b[j];
            }
        }
    }
    debug_assert_eq!(basis.len(), m + n - 1);

    let cost_scale = {
        let mut s: f64 = 1.0;
        for i in 0..m {
            for j in 0..n {
                s = s.max(cost(i, j).abs());
            }
        }
        s
    };
    let eps = 1e-12 * cost_scale;

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    let mut parent_arc = vec![usize::MAX; m + n];
    let mut visited = vec![false; m + n];
    let mut order: Vec<usize> = Vec::with_capacity(m + n);

    let pivot_limit = 2000 * (m + n) + 10_000;
    let mut pivots = 0;

    loop {
        // rebuild tree structure and potentials (BFS from row 0)
        for l in adj.iter_mut() {
            l.clear();
        }
        for (id, arc) in basis.iter().enumerate() {
            adj[arc.i].push(id);
            adj[m + arc.j].push(id);
        }
        for p in parent_arc.iter_mut() {
            *p = usize::MAX;
        }
        for f in visited.iter_mut() {
            *f = false;
        }
        order.clear();
        visited[0] = true;
        u[0] = 0.0;
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let node = order[head];
            head += 1;
            for &id in &adj[node] {
                let arc = basis[id];
                let other = if node == arc.i { m + arc.j } else { arc.i };
                if !visited[other] {
                    visited[other] = true;
                    parent_arc[other] = id;
                    if other >= m {
                        v[other - m] = cost(arc.i, arc.j) - u[arc.i];
                    } else {
                        u[other] = cost(arc.i, arc.j) - v[node - m];
                    }
                    order.push(other);
                }
            }
        }

        // Bland: first arc with negative reduced cost in row-major order
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if cost(i, j) - u[i] - v[j] < -eps {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let (ei, ej) = match entering {
            None => {
                let mut min_reduced = f64::INFINITY;
                for i in 0..m {
                    for j in 0..n {
                        min_reduced = min_reduced.min(cost(i, j) - u[i] - v[j]);
                    }
                }
                let flows: Vec<(usize, usize, f64)> = basis
                    .iter()
                    .filter(|arc| arc.flow > 1e-15)
                    .map(|arc| (arc.i, arc.j, arc.flow))
                    .collect();
                let cost_total: f64 = flows.iter().map(|&(i, j, q)| q * cost(i, j)).sum();
                return Ok(SimplexSolution {
                    flows,
                    cost: cost_total,
                    potentials_u: u,
                    potentials_v: v,
                    min_reduced_cost: min_reduced,
                    pivots,
                });
            }
            Some(e) => e,
        };

        pivots += 1;
        if pivots > pivot_limit {
            return Err(SimplexError::PivotLimit(pivot_limit));
        }

        // tree path between the entering endpoints: root paths spliced at
        // the lowest common ancestor
        let path_to_root = |start: usize| -> Vec<usize> {
            let mut arcs = Vec::new();
            let mut node = start;
            while parent_arc[node] != usize::MAX {
                let id = parent_arc[node];
                arcs.push(id);
                let arc = basis[id];
                node = if node == arc.i { m + arc.j } else { arc.i };
            }
            arcs
        };
        let mut up_row = path_to_root(ei);
        let mut up_col = path_to_root(m + ej);
        while let (Some(&x), Some(&y)) = (up_row.last(), up_col.last()) {
            if x == y {
                up_row.pop();
                up_col.pop();
            } else {
                break;
            }
        }
        // cycle path ordered from the entering column back to the entering
        // row; arcs at even positions lose flow
        let mut path = up_col;
        path.extend(up_row.iter().rev());
        debug_assert!(path.len() % 2 == 1);

        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (pos, &id) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let arc = basis[id];
                let replace = leaving == usize::MAX
                    || arc.flow < theta
                    || (arc.flow == theta
                        && (arc.i, arc.j) < (basis[leaving].i, basis[leaving].j));
                if replace {
                    theta = arc.flow;
                    leaving = id;
                }
            }
        }
        let theta = theta.max(0.0);
        for (pos, &id) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[id].flow = (basis[id].flow - theta).max(0.0);
            } else {
                basis[id].flow += theta;
            }
        }
        basis[leaving] = BasisArc {
            i: ei,
            j: ej,
            flow: theta,
        };
    }
}
