//! Linear assignment by the Hungarian algorithm (shortest augmenting path
//! with potentials, O(n³)), used to resolve the permutation ambiguity
//! between estimated and true components.

use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;

/// Maximum-score perfect assignment on a square score matrix.
///
/// Returns `perm` with `perm[row] = column`, maximizing the total score.
pub fn hungarian_max(score: &Mat) -> Vec<usize> {
    assert_eq!(score.rows(), score.cols(), "assignment needs a square matrix");
    let n = score.rows();
    let mut max = f64::NEG_INFINITY;
    for &v in score.data() {
        if v > max {
            max = v;
        }
    }
    let cost = Mat::from_fn(n, n, |i, j| max - score[(i, j)]);
    hungarian_min(&cost)
}

/// Minimum-cost perfect assignment; `perm[row] = column`.
pub fn hungarian_min(cost: &Mat) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols());
    // Potentials u (rows), v (columns) and the matching from the classic
    // shortest-augmenting-path formulation; indices are 1-based internally
    // with 0 as the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut match_col = vec![0usize; n + 1]; // match_col[col] = row assigned (1-based)

    for i in 1..=n {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
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
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        if match_col[j] > 0 {
            perm[match_col[j] - 1] = j - 1;
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_max(score: &Mat) -> (Vec<usize>, f64) {
        let n = score.rows();
        let mut indices: Vec<usize> = (0..n).collect();
        let mut best_perm = indices.clone();
        let mut best = f64::NEG_INFINITY;
        permute(&mut indices, 0, &mut |perm| {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| score[(i, j)]).sum();
            if total > best {
                best = total;
                best_perm = perm.to_vec();
            }
        });
        (best_perm, best)
    }

    fn permute(xs: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == xs.len() {
            f(xs);
            return;
        }
        for i in k..xs.len() {
            xs.swap(k, i);
            permute(xs, k + 1, f);
            xs.swap(k, i);
        }
    }

    #[test]
    fn simple_diagonal_case() {
        let score = Mat::from_vec(3, 3, vec![9.0, 1.0, 1.0, 1.0, 9.0, 1.0, 1.0, 1.0, 9.0]);
        assert_eq!(hungarian_max(&score), vec![0, 1, 2]);
    }

    #[test]
    fn permuted_case() {
        let score = Mat::from_vec(3, 3, vec![0.1, 0.9, 0.0, 0.8, 0.0, 0.2, 0.0, 0.1, 0.95]);
        assert_eq!(hungarian_max(&score), vec![1, 0, 2]);
    }

    #[test]
    fn matches_brute_force_up_to_six() {
        use crate::rng;
        for n in 2..=6usize {
            for seed in 0..30u64 {
                let score = rng::normal_matrix(n, n, 1000 * n as u64 + seed);
                let perm = hungarian_max(&score);
                // Bijection check.
                let mut seen = vec![false; n];
                for &j in &perm {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
                let total: f64 = perm.iter().enumerate().map(|(i, &j)| score[(i, j)]).sum();
                let (_, best) = brute_force_max(&score);
                assert!(
                    (total - best).abs() < 1e-9,
                    "n={n} seed={seed}: hungarian {total} vs brute {best}"
                );
            }
        }
    }

    #[test]
    fn ties_still_produce_a_bijection() {
        let score = Mat::from_vec(4, 4, vec![1.0; 16]);
        let perm = hungarian_max(&score);
        let mut seen = vec![false; 4];
        for &j in &perm {
            assert!(!seen[j]);
            seen[j] = true;
        }
    }
}
