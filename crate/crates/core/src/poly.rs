//! Complex polynomials in the form used by rapidity extraction: coefficients
//! ordered from the leading term down, `p(z) = c[0] z^n + c[1] z^{n−1} + … + c[n]`.

use crate::scalar::{real, Cplx, Real};

const MAX_QR_ITERATIONS_PER_ROOT: usize = 60;

/// Elementary symmetric polynomials `e_0 = 1, e_1, …, e_n` of `values`.
pub fn elementary_symmetric<T: Real>(values: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let mut e = vec![real(T::zero()); values.len() + 1];
    e[0] = real(T::one());
    for (j, v) in values.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            let prev = e[k - 1];
            e[k] += *v * prev;
        }
    }
    e
}

/// Horner evaluation, also returning the derivative.
pub fn eval_with_derivative<T: Real>(coeffs: &[Cplx<T>], z: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
    let mut p = real(T::zero());
    let mut dp = real(T::zero());
    for c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a monic polynomial `z^n + c[1] z^{n−1} + … + c[n]` (the leading
/// `1` is implicit: pass `c[1..]`), via the eigenvalues of its companion
/// matrix followed by `polish` Newton steps on the polynomial itself.
pub fn monic_roots<T: Real>(lower: &[Cplx<T>], polish: usize) -> Vec<Cplx<T>> {
    let n = lower.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-lower[0]];
    }
    // Upper Hessenberg companion: first row −c, unit subdiagonal.
    let mut h = vec![vec![real(T::zero()); n]; n];
    for (j, c) in lower.iter().enumerate() {
        h[0][j] = -*c;
    }
    for i in 1..n {
        h[i][i - 1] = real(T::one());
    }
    let mut roots = hessenberg_eigenvalues(h);
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(real(T::one()));
    coeffs.extend_from_slice(lower);
    for r in roots.iter_mut() {
        for _ in 0..polish {
            let (p, dp) = eval_with_derivative(&coeffs, *r);
            if dp.norm() == T::zero() {
                break;
            }
            let next = *r - p / dp;
            if !crate::scalar::is_finite_c(&next) {
                break;
            }
            // accept only non-worsening steps; near-multiple roots can overshoot
            if eval_with_derivative(&coeffs, next).0.norm() <= p.norm() {
                *r = next;
            }
        }
    }
    roots
}

/// Eigenvalues of a complex upper Hessenberg matrix by single-shift QR with
/// Wilkinson shifts and deflation from the bottom.
fn hessenberg_eigenvalues<T: Real>(mut h: Vec<Vec<Cplx<T>>>) -> Vec<Cplx<T>> {
    let n = h.len();
    let mut eig = vec![real(T::zero()); n];
    let mut hi = n; // active block is [0, hi)
    let mut iter = 0usize;
    while hi > 0 {
        if hi == 1 {
            eig[0] = h[0][0];
            break;
        }
        // find the start of the unreduced trailing block
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[lo - 1][lo - 1].l1_norm() + h[lo][lo].l1_norm();
            let s = if s == T::zero() { T::one() } else { s };
            if h[lo][lo - 1].l1_norm() <= T::epsilon() * s {
                h[lo][lo - 1] = real(T::zero());
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eig[hi - 1] = h[hi - 1][hi - 1];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        let shift = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[hi - 1][hi - 1] + real(h[hi - 1][hi - 2].norm() * T::lit(0.75))
        } else if iter > MAX_QR_ITERATIONS_PER_ROOT * n {
            // give up refining this block; take the diagonal as-is
            for k in lo..hi {
                eig[k] = h[k][k];
            }
            hi = lo;
            iter = 0;
            continue;
        } else {
            wilkinson_shift(
                h[hi - 2][hi - 2],
                h[hi - 2][hi - 1],
                h[hi - 1][hi - 2],
                h[hi - 1][hi - 1],
            )
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    eig
}

/// Eigenvalue of the trailing 2×2 block closest to its bottom-right entry.
fn wilkinson_shift<T: Real>(a: Cplx<T>, b: Cplx<T>, c: Cplx<T>, d: Cplx<T>) -> Cplx<T> {
    let half = T::lit(0.5);
    let tr = (a + d) * half;
    let det = a * d - b * c;
    let disc = (tr * tr - det).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR step `H − σI = QR, H ← RQ + σI` on the block
/// `[lo, hi)` using Givens rotations. Rotations are applied to the full rows
/// and columns of the block only; eigenvalues are all we need.
fn qr_sweep<T: Real>(h: &mut [Vec<Cplx<T>>], lo: usize, hi: usize, shift: Cplx<T>) {
    for k in lo..hi {
        h[k][k] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi - 1 {
        let (x, y) = (h[k][k], h[k + 1][k]);
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == T::zero() {
            (real(T::one()), real(T::zero()))
        } else {
            (x / r, y / r)
        };
        // G = [[c*, s*], [−s, c]] zeros h[k+1][k]
        for j in k..hi {
            let (u, v) = (h[k][j], h[k + 1][j]);
            h[k][j] = c.conj() * u + s.conj() * v;
            h[k + 1][j] = -s * u + c * v;
        }
        rots.push((c, s));
    }
    for (idx, (c, s)) in rots.into_iter().enumerate() {
        let k = lo + idx;
        // right-multiply by G^H
        let top = (k + 2).min(hi);
        for row in h.iter_mut().take(top).skip(lo) {
            let (u, v) = (row[k], row[k + 1]);
            row[k] = u * c + v * s;
            row[k + 1] = -u * s.conj() + v * c.conj();
        }
    }
    for k in lo..hi {
        h[k][k] += shift;
    }
}
