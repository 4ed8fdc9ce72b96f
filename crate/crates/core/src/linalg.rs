//! Dense kernels: Householder QR with column pivoting and Cholesky.

/// Householder QR with column pivoting of an `m x n` matrix given as columns.
///
/// Column `perm[j]` of the input is column `j` of `Q R`.
pub(crate) struct PivotedQr {
    m: usize,
    /// Householder vectors, one per elimination step, each of length `m - k`.
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, column-major `n x n` (only `k <= j` used).
    r: Vec<Vec<f64>>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factors `columns`. A diagonal entry `|R_kk| <= rel_tol * ||A||_F`
    /// ends the numerical rank.
    pub(crate) fn new(columns: Vec<Vec<f64>>, rel_tol: f64) -> Self {
        let n = columns.len();
        let m = columns.first().map_or(0, Vec::len);
        let mut a = columns;
        let frob = a.iter().flat_map(|c| c.iter()).map(|v| v * v).sum::<f64>().sqrt();
        let tol = rel_tol * frob;

        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(n.min(m));
        let steps = n.min(m);
        let mut rank = steps;

        for k in 0..steps {
            // Pivot: remaining column with the largest trailing norm.
            let mut best = k;
            let mut best_norm = -1.0;
            for (j, col) in a.iter().enumerate().skip(k) {
                let norm: f64 = col[k..].iter().map(|v| v * v).sum();
                if norm > best_norm {
                    best_norm = norm;
                    best = j;
                }
            }
            a.swap(k, best);
            perm.swap(k, best);

            let x = &a[k][k..];
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= tol {
                rank = k;
                // Remaining columns are numerically zero below row k.
                break;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();

            a[k][k] = alpha;
            for e in a[k][k + 1..].iter_mut() {
                *e = 0.0;
            }
            if vnorm2 > 0.0 {
                let scale = 2.0 / vnorm2;
                for col in a.iter_mut().skip(k + 1) {
                    let tail = &mut col[k..];
                    let dot: f64 = v.iter().zip(tail.iter()).map(|(p, q)| p * q).sum();
                    let f = scale * dot;
                    for (t, vi) in tail.iter_mut().zip(&v) {
                        *t -= f * vi;
                    }
                }
            }
            reflectors.push(v);
        }

        let r = a
            .into_iter()
            .map(|mut col| {
                col.truncate(n.min(m));
                col
            })
            .collect();
        Self {
            m,
            reflectors,
            r,
            perm,
            rank,
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.rank
    }

    /// Input column indices left out of the numerical rank.
    pub(crate) fn deficient_columns(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    fn apply_qt(&self, y: &mut [f64]) {
        debug_assert_eq!(y.len(), self.m);
        for (k, v) in self.reflectors.iter().enumerate() {
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            let tail = &mut y[k..];
            let dot: f64 = v.iter().zip(tail.iter()).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= f * vi;
            }
        }
    }

    /// Least-squares solution for a full-rank factorization, in input column
    /// order. Returns `None` when the matrix is rank deficient.
    pub(crate) fn solve(&self, y: &[f64]) -> Option<Vec<f64>> {
        let n = self.perm.len();
        if self.rank < n {
            return None;
        }
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = qty[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                s -= self.r[j][i] * zj;
            }
            z[i] = s / self.r[i][i];
        }
        let mut beta = vec![0.0; n];
        for (k, &orig) in self.perm.iter().enumerate() {
            beta[orig] = z[k];
        }
        Some(beta)
    }
}

/// Cholesky factor of a symmetric positive-definite row-major `n x n` matrix.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !s.is_finite() || s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the Cholesky factor `L`.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}
