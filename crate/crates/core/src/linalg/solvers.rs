use std::collections::VecDeque;

use super::{dot, norm2, SparseMatrix};
use crate::error::{FemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Cg,
    Lu,
}

/// Diagnostics of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// CG iterations (0 for LU).
    pub iterations: usize,
    /// ||b - A x||_2 / ||b||_2 (absolute when b = 0).
    pub residual: f64,
    pub unknowns: usize,
}

pub(crate) fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.spmv(x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (q - p) * (q - p))
        .sum::<f64>()
        .sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// Cheap symmetry guard: checks up to 32 evenly spaced rows.
fn spot_check_spd(a: &SparseMatrix) -> Result<()> {
    let n = a.nrows();
    let scale = a.max_abs();
    let step = (n / 32).max(1);
    for i in (0..n).step_by(step) {
        if !(a.get(i, i) > 0.0) {
            return Err(FemError::invalid(format!(
                "CG needs an SPD matrix; diagonal entry {i} is {}",
                a.get(i, i)
            )));
        }
        for (j, v) in a.row(i) {
            if (v - a.get(j, i)).abs() > 1e-10 * scale {
                return Err(FemError::invalid(format!(
                    "CG needs a symmetric matrix; a[{i}][{j}] != a[{j}][{i}]"
                )));
            }
        }
    }
    Ok(())
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when ||b - A x|| <= tol ||b||. On failure the error carries the
/// iterate with the smallest residual seen.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(FemError::DimensionMismatch(format!(
            "cg_solve: matrix {:?}, rhs {}",
            a.shape(),
            b.len()
        )));
    }
    let report = |iterations, residual| SolveReport {
        method: SolveMethod::Cg,
        iterations,
        residual,
        unknowns: n,
    };
    let b_norm = norm2(b);
    if n == 0 || b_norm == 0.0 {
        return Ok((vec![0.0; n], report(0, 0.0)));
    }
    spot_check_spd(a)?;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut best = (1.0, x.clone());

    for it in 1..=maxit {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::invalid("CG breakdown: matrix is not positive definite"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / b_norm;
        if rel <= tol {
            return Ok((x, report(it, rel)));
        }
        if rel < best.0 {
            best = (rel, x.clone());
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NotConverged {
        iterations: maxit,
        residual: best.0,
        best: best.1,
    })
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern; returns
/// `order[new] = old`.
fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    // BFS levels from `start` restricted to unvisited nodes
    let bfs = |start: usize, visited: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = visited.to_vec();
        seen[start] = true;
        let mut levels = vec![vec![start]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    };

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let mut depth = bfs(start, &visited).len();
        for _ in 0..8 {
            let levels = bfs(start, &visited);
            let candidate = *levels
                .last()
                .unwrap()
                .iter()
                .min_by_key(|&&v| (degree[v], v))
                .unwrap();
            let d = bfs(candidate, &visited).len();
            if d > depth {
                depth = d;
                start = candidate;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Partial-pivoted LU of a bandwidth-reduced permutation of A.
///
/// The matrix is reordered by reverse Cuthill-McKee and factored in band
/// storage, so the cost is O(n kl (kl + ku)) rather than O(n^3); a matrix
/// without exploitable structure degenerates to the dense factorization.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    /// order[new] = old
    order: Vec<usize>,
    band: Vec<f64>,
    pivots: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(FemError::DimensionMismatch(format!(
                "LU needs a square matrix, got {:?}",
                a.shape()
            )));
        }
        let order = reverse_cuthill_mckee(a);
        let mut position = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let (mut kl, mut ku) = (0, 0);
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (position[i], position[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (position[i], position[j]);
            band[pi * width + pj + kl - pi] += v;
        }
        let threshold = 1e-14 * a.max_abs();

        let last_col = |k: usize| (k + kl + ku).min(n.saturating_sub(1));
        let mut pivots = vec![0; n];
        for k in 0..n {
            let at = |i: usize, j: usize| i * width + j + kl - i;
            let last_row = (k + kl).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&x, &y| band[at(x, k)].abs().total_cmp(&band[at(y, k)].abs()))
                .unwrap();
            let pivot = band[at(p, k)];
            if !(pivot.abs() > threshold) {
                return Err(FemError::SingularMatrix { row: order[k], pivot });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col(k) {
                    band.swap(at(k, j), at(p, j));
                }
            }
            for i in k + 1..=last_row {
                let l = band[at(i, k)] / pivot;
                band[at(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col(k) {
                        band[at(i, j)] -= l * band[at(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            width,
            order,
            band,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth after reordering.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(FemError::DimensionMismatch(format!(
                "rhs of length {} for a {n}x{n} factorization",
                b.len()
            )));
        }
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        let at = |i: usize, j: usize| i * w + j + kl - i;
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            y.swap(k, self.pivots[k]);
            let yk = y[k];
            if yk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    y[i] -= self.band[at(i, k)] * yk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.band[at(i, j)] * y[j];
            }
            y[i] = s / self.band[at(i, i)];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = y[new];
        }
        Ok(x)
    }
}

/// Factor and solve in one go.
pub fn lu_solve(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let lu = LuFactor::new(a)?;
    let x = lu.solve(b)?;
    let residual = relative_residual(a, &x, b);
    Ok((
        x,
        SolveReport {
            method: SolveMethod::Lu,
            iterations: 0,
            residual,
            unknowns: a.nrows(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_spd(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>();
            }
            a[i][i] += 1.0;
        }
        SparseMatrix::from_dense(&a)
    }

    #[test]
    fn cg_identity_one_iteration() {
        let b = vec![3.0, -1.0, 0.5, 2.0];
        let (x, rep) = cg_solve(&SparseMatrix::identity(4), &b, 1e-10, 40).unwrap();
        assert_eq!(x, b);
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn cg_reduced_worked_example() {
        let a = SparseMatrix::from_dense(&[
            vec![10.0, -5.0, 0.0, 0.0],
            vec![-5.0, 10.0, -5.0, 0.0],
            vec![0.0, -5.0, 10.0, -5.0],
            vec![0.0, 0.0, -5.0, 10.0],
        ]);
        let b = [24.0 / 5.0, -1.0 / 5.0, -1.0 / 5.0, 24.0 / 5.0];
        let (x, _) = cg_solve(&a, &b, 1e-14, 40).unwrap();
        for (xi, e) in x.iter().zip([23.0 / 25.0, 22.0 / 25.0, 22.0 / 25.0, 23.0 / 25.0]) {
            assert!((xi - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_matches_lu_on_random_spd() {
        let a = random_spd(50, 7);
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x_cg, rep) = cg_solve(&a, &b, 1e-13, 500).unwrap();
        let (x_lu, lrep) = lu_solve(&a, &b).unwrap();
        assert!(rep.residual <= 1e-13);
        assert!(lrep.residual <= 1e-10);
        for (p, q) in x_cg.iter().zip(&x_lu) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_reports_non_convergence_with_best_iterate() {
        let a = random_spd(30, 3);
        let b = vec![1.0; 30];
        match cg_solve(&a, &b, 1e-14, 2) {
            Err(FemError::NotConverged { iterations, best, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(best.len(), 30);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn cg_rejects_nonsymmetric() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 2.0]]);
        assert!(cg_solve(&a, &[1.0, 1.0], 1e-10, 10).is_err());
    }

    #[test]
    fn lu_diagonal() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let (x, _) = lu_solve(&a, &[2.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn lu_needs_pivoting() {
        // zero leading diagonal, as in saddle-point systems
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]]);
        let b = [1.0, 2.0, 3.0];
        let (_, rep) = lu_solve(&a, &b).unwrap();
        assert!(rep.residual < 1e-14);
    }

    #[test]
    fn lu_detects_singular() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(LuFactor::new(&a), Err(FemError::SingularMatrix { .. })));
    }

    #[test]
    fn lu_random_diagonally_dominant() {
        for seed in 0..5u64 {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let n = 40;
            let mut trip = Vec::new();
            for i in 0..n {
                let mut row_sum = 0.0;
                for _ in 0..4 {
                    let j = rng.gen_range(0..n);
                    if j != i {
                        let v: f64 = rng.gen_range(-1.0..1.0);
                        row_sum += v.abs();
                        trip.push((i, j, v));
                    }
                }
                trip.push((i, i, row_sum + 1.0));
            }
            let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, rep) = lu_solve(&a, &b).unwrap();
            assert!(rep.residual <= 1e-10, "seed {seed}: {}", rep.residual);
        }
    }

    #[test]
    fn rcm_shrinks_bandwidth_of_shuffled_tridiagonal() {
        let n = 60;
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((perm[i], perm[i], 4.0));
            if i + 1 < n {
                trip.push((perm[i], perm[i + 1], -1.0));
                trip.push((perm[i + 1], perm[i], -1.5));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
        let lu = LuFactor::new(&a).unwrap();
        assert_eq!(lu.bandwidths(), (1, 1));
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = lu.solve(&b).unwrap();
        assert!(relative_residual(&a, &x, &b) < 1e-14);
    }
}
