//! Minimum-cost perfect matching by the shortest augmenting path method,
//! keeping row and column potentials along the way.

/// Optimal matching of a square cost matrix given row-major.
pub struct Assignment {
    /// `col_of[i]` is the column matched to row `i`.
    pub col_of: Vec<usize>,
    /// Row potentials `u` and column potentials `v` with `u[i] + v[j] ≤ c[i][j]`
    /// and equality on matched pairs.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn solve(n: usize, cost: &[f64]) -> Assignment {
    debug_assert_eq!(cost.len(), n * n);
    // One-based arrays with a virtual column 0 holding the row being inserted.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
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
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    Assignment {
        col_of,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    }
}
