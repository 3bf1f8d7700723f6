//! Positive matrix semigroups `exp(tQ)` on ℝⁿ: ideals are coordinate
//! subsets, irreducibility is strong connectivity and the principal pair is
//! the Perron pair of `−Q`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_eigenvalues, sort_by_real_part};

/// Largest dimension for exhaustive ideal enumeration.
pub const BRUTE_FORCE_CAP: usize = 6;

/// Square matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetznerGenerator {
    q: DMatrix<f64>,
}

impl MetznerGenerator {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n {
            return Err(Error::invalid("generator must be a nonempty square matrix"));
        }
        for i in 0..n {
            for j in 0..n {
                let v = q[(i, j)];
                if !v.is_finite() {
                    return Err(Error::invalid(format!("entry ({i}, {j}) is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(Error::invalid(format!("off-diagonal entry ({i}, {j}) = {v} is negative")));
                }
            }
        }
        Ok(MetznerGenerator { q })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("generator rows must all have length n"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.q.row(i).iter().copied().collect()).collect()
    }

    /// `D Q D⁻¹` for a positive diagonal `D`.
    pub fn similar(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.n() || d.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("scaling must be a positive vector of length n"));
        }
        Self::new(DMatrix::from_fn(self.n(), self.n(), |i, j| d[i] * self.q[(i, j)] / d[j]))
    }

    /// `reach[i][j]`: `exp(tQ)[j][i] > 0` for `t > 0`, i.e. `j` is reachable
    /// from `i` along edges `i → j` with `Q[j][i] > 0`.
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let n = self.n();
        (0..n).map(|s| bfs(n, s, |i, j| self.q[(j, i)] > 0.0)).collect()
    }
}

fn bfs(n: usize, start: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && i != j && edge(i, j) {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Coordinates `B` of the closed ideal `{u : u|_B = 0}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdealMask {
    pub zero_on: Vec<usize>,
}

impl IdealMask {
    pub fn from_bits(n: usize, bits: u64) -> Self {
        IdealMask {
            zero_on: (0..n).filter(|&i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn is_trivial(&self, n: usize) -> bool {
        self.zero_on.is_empty() || self.zero_on.len() == n
    }

    /// `S I_B ⊆ I_B`, i.e. `S[i][j] = 0` for `i ∈ B`, `j ∉ B`.
    pub fn is_invariant(&self, s: &DMatrix<f64>) -> bool {
        let n = s.nrows();
        let mut in_b = vec![false; n];
        self.zero_on.iter().for_each(|&i| in_b[i] = true);
        (0..n).all(|i| !in_b[i] || (0..n).all(|j| in_b[j] || s[(i, j)] == 0.0))
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with the degree 13 Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm1 > theta13 {
        (norm1 / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = DMatrix::<f64>::identity(n, n);
    let b = PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * inner_u;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `exp(tQ)` with entries of magnitude at most 1e-14 snapped to exact zero
/// where the generator graph has no path.
pub fn semigroup(q: &MetznerGenerator, t: f64) -> DMatrix<f64> {
    let mut s = expm(&(q.matrix() * t));
    if t == 0.0 {
        return s;
    }
    let reach = q.reachability();
    let n = q.n();
    for i in 0..n {
        for j in 0..n {
            if !reach[j][i] && s[(i, j)].abs() <= 1e-14 {
                s[(i, j)] = 0.0;
            }
        }
    }
    s
}

/// Strong connectivity of the graph with edges `i → j` whenever `Q[j][i] > 0`.
pub fn is_irreducible(q: &MetznerGenerator) -> bool {
    let n = q.n();
    let forward = bfs(n, 0, |i, j| q.matrix()[(j, i)] > 0.0);
    let backward = bfs(n, 0, |i, j| q.matrix()[(i, j)] > 0.0);
    forward.iter().chain(&backward).all(|&b| b)
}

/// Nontrivial ideals left invariant by `exp(Q)`, by enumerating all masks.
pub fn invariant_ideals(q: &MetznerGenerator) -> Result<Vec<IdealMask>> {
    let n = q.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::DimensionCap {
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let s = semigroup(q, 1.0);
    Ok((1..(1u64 << n) - 1)
        .map(|bits| IdealMask::from_bits(n, bits))
        .filter(|m| m.is_invariant(&s))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovingReport {
    pub t_samples: Vec<f64>,
    /// `exp(tQ)` entrywise positive at each sample.
    pub positive: Vec<bool>,
    pub improving: bool,
    pub irreducible: bool,
    /// Basis-vector check `exp(tQ) e_j ≫ 0` for all `j`; present for `n ≤ 6`.
    pub exhaustive: Option<bool>,
    pub agrees: bool,
}

/// Whether `exp(tQ) ≫ 0` at every sample, compared with irreducibility.
pub fn positivity_improving_equiv(q: &MetznerGenerator, t_samples: &[f64]) -> Result<ImprovingReport> {
    if t_samples.is_empty() || t_samples.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("sample times must be positive"));
    }
    let n = q.n();
    let mats: Vec<DMatrix<f64>> = t_samples.iter().map(|&t| semigroup(q, t)).collect();
    let positive: Vec<bool> = mats.iter().map(|s| s.iter().all(|&v| v > 0.0)).collect();
    let improving = positive.iter().all(|&p| p);
    let exhaustive = (n <= BRUTE_FORCE_CAP).then(|| {
        mats.iter().all(|s| {
            (0..n).all(|j| {
                let mut e = nalgebra::DVector::zeros(n);
                e[j] = 1.0;
                (s * e).iter().all(|&v| v > 0.0)
            })
        })
    });
    let irreducible = is_irreducible(q);
    Ok(ImprovingReport {
        t_samples: t_samples.to_vec(),
        positive,
        improving,
        irreducible,
        agrees: improving == irreducible && exhaustive.is_none_or(|e| e == improving),
        exhaustive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointPositivityReport {
    pub x: usize,
    pub t_grid: Vec<f64>,
    /// Some `(t, e_j)` with `(exp(tQ) e_j)(x) ≠ 0`.
    pub hypothesis: bool,
    /// Row `x` of `exp(tQ)` positive at every grid time.
    pub conclusion: bool,
    pub holds: bool,
}

/// Brute-force instance of the point positivity theorem at coordinate `x`.
pub fn point_positivity_theorem(q: &MetznerGenerator, x: usize, t_grid: &[f64]) -> Result<PointPositivityReport> {
    if x >= q.n() {
        return Err(Error::invalid(format!("coordinate {x} out of range")));
    }
    if !is_irreducible(q) {
        return Err(Error::invalid("the theorem needs an irreducible generator"));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("grid times must be positive"));
    }
    let mats: Vec<DMatrix<f64>> = t_grid.iter().map(|&t| semigroup(q, t)).collect();
    let hypothesis = mats.iter().any(|s| (0..q.n()).any(|j| s[(x, j)] != 0.0));
    let conclusion = mats.iter().all(|s| (0..q.n()).all(|j| s[(x, j)] > 0.0));
    Ok(PointPositivityReport {
        x,
        t_grid: t_grid.to_vec(),
        hypothesis,
        conclusion,
        holds: !hypothesis || conclusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronReport {
    /// Smallest real part in the spectrum of `A = −Q`.
    pub lambda1: f64,
    pub lambda1_imag: f64,
    pub spectrum: Vec<Complex64>,
    pub algebraic_multiplicity: usize,
    pub geometric_multiplicity: usize,
    pub simple: bool,
    /// Unit null vector of `A − λ₁`, oriented to a nonnegative sum.
    pub vector: Vec<f64>,
    pub vector_positive: bool,
    /// `Re λ₂ − λ₁` over eigenvalues outside the λ₁ cluster.
    pub gap: Option<f64>,
    pub irreducible: bool,
}

pub fn perron_report(q: &MetznerGenerator) -> PerronReport {
    let n = q.n();
    let a = -q.matrix().clone();
    let mut spectrum = complex_eigenvalues(a.map(|v| Complex64::new(v, 0.0)));
    sort_by_real_part(&mut spectrum);
    let l1 = spectrum[0];
    let scale = l1.norm().max(1.0);
    let cluster: Vec<Complex64> = spectrum.iter().copied().filter(|z| (z - l1).norm() <= 1e-6 * scale).collect();
    let algebraic_multiplicity = cluster.len();
    let lambda1 = cluster.iter().map(|z| z.re).sum::<f64>() / cluster.len() as f64;
    let lambda1_imag = cluster.iter().map(|z| z.im).sum::<f64>() / cluster.len() as f64;
    let gap = spectrum
        .iter()
        .filter(|z| (*z - l1).norm() > 1e-6 * scale)
        .map(|z| z.re - lambda1)
        .next();

    let shifted = &a - DMatrix::<f64>::identity(n, n) * lambda1;
    let svd = shifted.clone().svd(true, true);
    let anorm = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let geometric_multiplicity = svd.singular_values.iter().filter(|&&s| s <= 1e-9 * anorm).count().max(1);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map_or(0, |p| p.0);
    let mut vector: Vec<f64> = v_t.row(k).iter().copied().collect();
    if vector.iter().sum::<f64>() < 0.0 {
        vector.iter_mut().for_each(|v| *v = -*v);
    }
    let nrm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    vector.iter_mut().for_each(|v| *v /= nrm);
    let vector_positive = vector.iter().all(|&v| v > 0.0);
    PerronReport {
        lambda1,
        lambda1_imag,
        spectrum,
        algebraic_multiplicity,
        geometric_multiplicity,
        simple: algebraic_multiplicity == 1 && geometric_multiplicity == 1,
        vector,
        vector_positive,
        gap,
        irreducible: is_irreducible(q),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchaeferReport {
    /// `v ∧ k u → v`, equivalently `supp v ⊆ supp u`.
    pub converges: bool,
    /// `supp u` is every coordinate.
    pub quasi_interior: bool,
    /// `max |v − v ∧ k u|` at `k = 1, 10, 100, …`.
    pub sequence: Vec<f64>,
}

pub fn schaefer_approx_check(u: &[f64], v: &[f64]) -> Result<SchaeferReport> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            actual: v.len(),
        });
    }
    if u.iter().chain(v).any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::invalid("both vectors must be nonnegative and finite"));
    }
    let converges = u.iter().zip(v).all(|(&a, &b)| b == 0.0 || a > 0.0);
    let sequence = (0..8)
        .map(|p| {
            let k = 10f64.powi(p);
            u.iter().zip(v).map(|(&a, &b)| (b - b.min(k * a)).abs()).fold(0.0, f64::max)
        })
        .collect();
    Ok(SchaeferReport {
        converges,
        quasi_interior: u.iter().all(|&a| a > 0.0),
        sequence,
    })
}

/// Seeded generator: off-diagonal entries are zero with probability `sparsity`
/// and otherwise uniform in `[0.1, 2]`; diagonal entries uniform in `[−3, 0]`.
pub fn random_metzner(n: usize, sparsity: f64, rng: &mut impl Rng) -> MetznerGenerator {
    let q = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -rng.gen_range(0.0..3.0)
        } else if rng.gen_bool(sparsity) {
            0.0
        } else {
            rng.gen_range(0.1..2.0)
        }
    });
    MetznerGenerator::new(q).expect("construction keeps off-diagonals nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gen(rows: &[&[f64]]) -> MetznerGenerator {
        MetznerGenerator::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// `exp(Q) = e^{−s} Σ (Q + sI)^k / k!` with a nonnegative series.
    fn taylor_expm(q: &DMatrix<f64>) -> DMatrix<f64> {
        let n = q.nrows();
        let s = (0..n).map(|i| -q[(i, i)]).fold(0.0, f64::max);
        let p = q + DMatrix::<f64>::identity(n, n) * s;
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..200 {
            term = &term * &p / k as f64;
            sum += &term;
        }
        sum * (-s).exp()
    }

    #[test]
    fn expm_matches_closed_forms() {
        let e = expm(&(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]) * 3.0));
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]));
        for t in [0.01, 1.0, 10.0] {
            let e = expm(&(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]) * t));
            let (p, m) = ((1.0 + (-2.0 * t).exp()) / 2.0, (1.0 - (-2.0 * t).exp()) / 2.0);
            assert!((e[(0, 0)] - p).abs() < 1e-14 && (e[(0, 1)] - m).abs() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let q = random_metzner(5, 0.3, &mut rng);
            let diff = expm(q.matrix()) - taylor_expm(q.matrix());
            assert!(diff.amax() < 1e-12);
        }
    }

    #[test]
    fn triangular_generator_is_reducible() {
        let q = gen(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(!is_irreducible(&q));
        let ideals = invariant_ideals(&q).unwrap();
        assert_eq!(ideals, vec![IdealMask { zero_on: vec![1] }]);
        let r = positivity_improving_equiv(&q, &[0.01, 1.0, 10.0]).unwrap();
        assert!(!r.improving && r.agrees);
        let p = perron_report(&q);
        assert_eq!(p.lambda1, 0.0);
        assert_eq!(p.algebraic_multiplicity, 2);
        assert_eq!(p.geometric_multiplicity, 1);
        assert!(!p.simple);
        assert!(point_positivity_theorem(&q, 0, &[1.0]).is_err());
    }

    #[test]
    fn symmetric_pair() {
        let q = gen(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        assert!(is_irreducible(&q));
        assert!(invariant_ideals(&q).unwrap().is_empty());
        let r = positivity_improving_equiv(&q, &[0.01, 1.0, 10.0]).unwrap();
        assert!(r.improving && r.agrees && r.exhaustive == Some(true));
        let p = perron_report(&q);
        assert!(p.lambda1.abs() < 1e-14 && p.simple && p.vector_positive);
        assert!((p.gap.unwrap() - 2.0).abs() < 1e-12);
        let s = 0.5f64.sqrt();
        assert!(p.vector.iter().all(|v| (v - s).abs() < 1e-12));
        assert!(point_positivity_theorem(&q, 0, &[0.1, 1.0]).unwrap().holds);
    }

    #[test]
    fn cycle_and_blocks() {
        let n = 4;
        let q = MetznerGenerator::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -1.0
            } else if j == (i + 1) % n {
                1.0
            } else {
                0.0
            }
        }))
        .unwrap();
        assert!(is_irreducible(&q));
        assert!(invariant_ideals(&q).unwrap().is_empty());
        for x in 0..n {
            let r = point_positivity_theorem(&q, x, &[0.1, 1.0]).unwrap();
            assert!(r.hypothesis && r.conclusion);
        }
        let block = gen(&[
            &[-1.0, 1.0, 0.0, 0.0],
            &[1.0, -1.0, 0.0, 0.0],
            &[0.0, 0.0, -2.0, 2.0],
            &[0.0, 0.0, 2.0, -2.0],
        ]);
        assert!(!is_irreducible(&block));
        let r = positivity_improving_equiv(&block, &[1.0]).unwrap();
        assert!(!r.improving && r.agrees);
        assert_eq!(semigroup(&block, 5.0)[(0, 3)], 0.0);
    }

    #[test]
    fn similarity_keeps_verdict() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q = random_metzner(5, 0.6, &mut rng);
            let d: Vec<f64> = (0..5).map(|_| rng.gen_range(0.1..10.0)).collect();
            assert_eq!(is_irreducible(&q), is_irreducible(&q.similar(&d).unwrap()));
        }
    }

    #[test]
    fn perron_vector_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = loop {
            let q = random_metzner(5, 0.4, &mut rng);
            if is_irreducible(&q) {
                break q;
            }
        };
        let p = perron_report(&q);
        assert!(p.simple && p.vector_positive && p.gap.unwrap() > 0.0);
        let s = taylor_expm(q.matrix());
        let mut v = nalgebra::DVector::from_element(5, 1.0);
        for _ in 0..2000 {
            v = &s * v;
            v /= v.norm();
        }
        for (a, b) in v.iter().zip(&p.vector) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn schaefer_examples() {
        assert!(schaefer_approx_check(&[1.0; 3], &[0.3, 0.0, 5.0]).unwrap().converges);
        let r = schaefer_approx_check(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(!r.converges && !r.quasi_interior && r.sequence.iter().all(|&d| d == 1.0));
        let r = schaefer_approx_check(&[1.0, 2.0, 0.0], &[0.0, 4.0, 0.0]).unwrap();
        assert!(r.converges && !r.quasi_interior);
        assert_eq!(*r.sequence.last().unwrap(), 0.0);
        assert!(schaefer_approx_check(&[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(MetznerGenerator::from_rows(&[vec![0.0, -1.0], vec![0.0, 0.0]]).is_err());
        assert!(MetznerGenerator::from_rows(&[vec![0.0, 1.0]]).is_err());
        assert!(invariant_ideals(&random_metzner(7, 0.5, &mut ChaCha8Rng::seed_from_u64(0))).is_err());
    }
}
