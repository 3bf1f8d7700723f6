use std::collections::VecDeque;

use super::sparse::{CsrMatrix, Scalar};
use crate::error::{Error, Result};

/// Lower and upper bandwidth of a sparse matrix.
pub fn bandwidth<T: Scalar>(a: &CsrMatrix<T>) -> (usize, usize) {
    let mut lower = 0;
    let mut upper = 0;
    for (i, j, _) in a.triplets() {
        if i > j {
            lower = lower.max(i - j);
        } else {
            upper = upper.max(j - i);
        }
    }
    (lower, upper)
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity graph.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from a pseudo-peripheral node of minimum degree
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let start = pseudo_peripheral(seed, &adj);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
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

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>]) -> usize {
    let mut current = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(current, adj);
        let far = level
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != usize::MAX)
            .max_by_key(|&(i, &l)| (l, std::cmp::Reverse(adj[i].len()), std::cmp::Reverse(i)))
            .map(|(i, &l)| (i, l))
            .unwrap();
        if far.1 <= ecc {
            break;
        }
        ecc = far.1;
        current = far.0;
    }
    current
}

/// LU factorization with partial pivoting in band storage.
///
/// Row `i` stores columns `i - kl ..= i + ku + kl`, the extra `kl` upper
/// diagonals holding the fill produced by row interchanges. A pivot row is
/// only swapped in when its entry is strictly larger in modulus, so
/// column-diagonally-dominant matrices factor without interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<T>,
    pivots: Vec<usize>,
    perm: Option<Vec<usize>>,
}

impl<T: Scalar> BandedLu<T> {
    /// Factors `a`, reordering with reverse Cuthill-McKee when that narrows the band.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                actual: a.ncols(),
            });
        }
        let (l0, u0) = bandwidth(a);
        let perm = reverse_cuthill_mckee(a);
        let permuted = a.permute_symmetric(&perm);
        let (l1, u1) = bandwidth(&permuted);
        if l1 + u1 < l0 + u0 {
            let mut lu = Self::factor_natural(&permuted)?;
            lu.perm = Some(perm);
            Ok(lu)
        } else {
            Self::factor_natural(a)
        }
    }

    /// Factors `a` in its given ordering.
    pub fn factor_natural(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let (kl, ku) = bandwidth(a);
        let width = 2 * kl + ku + 1;
        let mut band = vec![T::zero(); n * width];
        for (i, j, v) in a.triplets() {
            band[i * width + (j + kl - i)] = v;
        }
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            band,
            pivots: vec![0; n],
            perm: None,
        };
        lu.decompose()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn decompose(&mut self) -> Result<()> {
        let n = self.n;
        let scale = self.band.iter().fold(0.0f64, |m, v| m.max(v.modulus()));
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.band[self.idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let m = self.band[self.idx(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 || best <= f64::EPSILON * 1e-3 * scale || !best.is_finite() {
                return Err(Error::Singular { row: k });
            }
            self.pivots[k] = p;
            let last_col = (k + self.ku + self.kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.band.swap(a, b);
                }
            }
            let pivot = self.band[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                if self.band[ik] == T::zero() {
                    continue;
                }
                let l = self.band[ik] / pivot;
                self.band[ik] = l;
                for j in k + 1..=last_col {
                    let kj = self.band[self.idx(k, j)];
                    if kj != T::zero() {
                        let ij = self.idx(i, j);
                        self.band[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: b.len(),
            });
        }
        let mut x: Vec<T> = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        self.solve_natural(&mut x);
        if let Some(p) = &self.perm {
            let mut out = vec![T::zero(); self.n];
            for (new, &old) in p.iter().enumerate() {
                out[old] = x[new];
            }
            x = out;
        }
        Ok(x)
    }

    fn solve_natural(&self, x: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk == T::zero() {
                continue;
            }
            for i in k + 1..=(k + self.kl).min(n - 1) {
                let l = self.band[self.idx(i, k)];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + self.ku + self.kl).min(n - 1) {
                s -= self.band[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.band[self.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn tridiag(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_tridiagonal() {
        let a = tridiag(10);
        let x_true: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = BandedLu::factor(&a).unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn pivots_when_needed() {
        // zero leading diagonal forces an interchange
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0), (1, 2, 2.0), (2, 1, 3.0), (2, 2, 1.0)],
        );
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = BandedLu::factor_natural(&a).unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn complex_solve_and_rcm() {
        // scrambled path graph: RCM must recover a narrow band
        let n = 12;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 5) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((scramble[i], scramble[i], Complex64::new(3.0, 1.0)));
            if i + 1 < n {
                t.push((scramble[i], scramble[i + 1], Complex64::new(-1.0, 0.5)));
                t.push((scramble[i + 1], scramble[i], Complex64::new(-1.0, -0.25)));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let perm = reverse_cuthill_mckee(&a);
        let (l, u) = bandwidth(&a.permute_symmetric(&perm));
        assert_eq!((l, u), (1, 1));
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.mul_vec(&x_true);
        let x = BandedLu::factor(&a).unwrap().solve(&b).unwrap();
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(BandedLu::factor(&a), Err(Error::Singular { .. })));
    }
}
