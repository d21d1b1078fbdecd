//! Minimum-cost linear sum assignment on dense rectangular matrices.
//!
//! Shortest-augmenting-path Hungarian method with dual potentials. Every row
//! is matched when `rows <= cols`, otherwise every column; the result is the
//! complete matching of the smaller side with minimum total cost.

use crate::mat::DenseMatrix;

/// Returns `(row, col)` pairs sorted by row index.
///
/// Costs must be finite. Maximum-similarity matching is obtained by negating
/// the similarity matrix before calling.
pub fn linear_sum_assignment(cost: &DenseMatrix) -> Vec<(usize, usize)> {
    if cost.rows() == 0 || cost.cols() == 0 {
        return Vec::new();
    }
    let transposed = cost.rows() > cost.cols();
    let (n, m) = if transposed {
        (cost.cols(), cost.rows())
    } else {
        (cost.rows(), cost.cols())
    };
    let at = |i: usize, j: usize| -> f64 {
        if transposed {
            cost.get(j, i)
        } else {
            cost.get(i, j)
        }
    };

    // 1-based arrays; index 0 is the virtual unmatched column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched_row = vec![0usize; m + 1]; // matched_row[j] = row occupying column j
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_to[j] {
                    min_to[j] = cur;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the found path.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut pairs = Vec::with_capacity(n);
    for j in 1..=m {
        let i = matched_row[j];
        if i != 0 {
            if transposed {
                pairs.push((j - 1, i - 1));
            } else {
                pairs.push((i - 1, j - 1));
            }
        }
    }
    pairs.sort_unstable_by_key(|&(r, _)| r);
    pairs
}
