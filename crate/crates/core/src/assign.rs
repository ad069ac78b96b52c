//! Exact minimum-cost assignment.
//!
//! Small dense instances only (loop counts are capped at 32), solved with the
//! classic potentials/augmenting-path formulation in O(n^3). Rectangular
//! problems are padded to square with a dummy cost high enough that real
//! pairings are always preferred; rows left on dummy columns come back as
//! unmatched.

/// Dummy cost for padded cells. Must exceed any achievable real pair cost
/// (type-mismatch penalties plus grid distances stay far below this).
const DUMMY_COST: f64 = 1e12;

/// Solves the square assignment problem for `cost[i][j]` (row `i` to column
/// `j`), returning the matched column per row. All rows of `cost` must have
/// the same length as the number of rows.
fn solve_square(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-indexed potentials formulation; index 0 is the sentinel column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[j] = row on column j
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Exact minimum-cost matching for a (possibly rectangular) cost matrix.
/// Returns, per row, the matched column (or `None` when the row is left
/// unmatched because columns ran out), plus the total cost over real pairs.
pub fn min_cost_matching(cost: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    let side = rows.max(cols);
    let square: Vec<Vec<f64>> = (0..side)
        .map(|i| {
            (0..side)
                .map(|j| {
                    if i < rows && j < cols {
                        cost[i][j]
                    } else {
                        DUMMY_COST
                    }
                })
                .collect()
        })
        .collect();
    let row_to_col = solve_square(&square);
    let mut out = vec![None; rows];
    let mut total = 0.0;
    for i in 0..rows {
        let j = row_to_col[i];
        if j < cols {
            out[i] = Some(j);
            total += cost[i][j];
        }
    }
    (out, total)
}
