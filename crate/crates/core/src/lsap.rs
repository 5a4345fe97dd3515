//! Rectangular linear assignment (Hungarian algorithm with potentials).
//!
//! `O(n^2 m)` for an `n x m` cost matrix with `n <= m`; taller matrices are
//! solved on their transpose.

/// Minimum-cost assignment of rows to distinct columns.
///
/// Returns, for every row, the column it is assigned to. When there are more
/// rows than columns the surplus rows get `None`.
pub fn solve(costs: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = costs.len();
    if n == 0 {
        return Vec::new();
    }
    let m = costs[0].len();
    debug_assert!(costs.iter().all(|row| row.len() == m), "ragged cost matrix");
    if m == 0 {
        return vec![None; n];
    }
    if n <= m {
        solve_wide(n, m, |i, j| costs[i][j])
            .into_iter()
            .map(Some)
            .collect()
    } else {
        let cols = solve_wide(m, n, |i, j| costs[j][i]);
        let mut rows = vec![None; n];
        for (col, row) in cols.into_iter().enumerate() {
            rows[row] = Some(col);
        }
        rows
    }
}

/// Sum of the selected entries.
pub fn assignment_cost(costs: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| costs[i][j]))
        .sum()
}

fn solve_wide(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based potentials; column 0 is the virtual start column
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=m {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}
