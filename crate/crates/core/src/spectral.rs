//! Eigendecomposition of the sector Hamiltonian.

use crate::scalar::{real, Real};
use crate::sector::{build_hamiltonian, QuantumState, SectorParams, Tridiagonal};

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues ascending with orthonormal eigenvectors.
///
/// `vectors[a]` is the eigenvector for `values[a]`; each is sign-fixed so its
/// largest-magnitude component is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Groups indices whose consecutive eigenvalue gaps fall below `tol`.
    pub fn clusters(&self, tol: T) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (a, &e) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some(c) if e - self.values[*c.last().unwrap()] < tol => c.push(a),
                _ => out.push(vec![a]),
            }
        }
        out
    }

    /// Max over eigenpairs of `‖H v − E v‖`.
    pub fn max_residual(&self, h: &Tridiagonal<T>) -> T {
        let d = self.dim();
        let mut worst = T::zero();
        for (e, v) in self.values.iter().zip(&self.vectors) {
            let mut r2 = T::zero();
            for i in 0..d {
                let mut hv = h.diag[i] * v[i];
                if i > 0 {
                    hv += h.off[i - 1] * v[i - 1];
                }
                if i + 1 < d {
                    hv += h.off[i] * v[i + 1];
                }
                let r = hv - *e * v[i];
                r2 += r * r;
            }
            worst = worst.max(r2.sqrt());
        }
        worst
    }

    /// Max over pairs of `|v_a·v_b − δ_ab|`.
    pub fn max_orthonormality_defect(&self) -> T {
        let mut worst = T::zero();
        for a in 0..self.dim() {
            for b in a..self.dim() {
                let dot: T = self.vectors[a].iter().zip(&self.vectors[b]).map(|(x, y)| *x * *y).sum();
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Symmetric tridiagonal eigensolver: implicit QL with Wilkinson shifts,
/// accumulating the rotations into the eigenvector matrix.
pub fn diagonalize<T: Real>(h: &Tridiagonal<T>) -> SpectralDecomposition<T> {
    let n = h.dim();
    let mut d = h.diag.clone();
    let mut e: Vec<T> = h.off.iter().copied().chain(std::iter::once(T::zero())).collect();
    // z[i][k]: component i of eigenvector k
    let mut z: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|k| if i == k { T::one() } else { T::zero() }).collect())
        .collect();
    let two = T::lit(2.0);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                // practically unreachable for symmetric input; leave the block as is
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut v: Vec<T> = (0..n).map(|i| z[i][k]).collect();
            let pivot = v
                .iter()
                .copied()
                .fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
            if pivot < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    SpectralDecomposition { values, vectors }
}

/// Lowest eigenvector of `H(delta)` as a normalized state at `t = 0`.
pub fn ground_state<T: Real>(params: &SectorParams<T>, delta: T) -> QuantumState<T> {
    let spec = diagonalize(&build_hamiltonian(params, delta));
    QuantumState::new(spec.vectors[0].iter().map(|&x| real(x)).collect(), T::zero())
}
