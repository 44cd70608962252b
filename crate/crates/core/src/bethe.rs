//! Bethe-ansatz representation of sector states.
//!
//! A state is written as `Π_α B(λ_α)|0⟩` with `B(λ) = b† − g S⁺/λ` and the
//! vacuum annihilated by `b` and `S⁻`. Expanding the product gives amplitudes
//! proportional to the elementary symmetric polynomials of `μ_α = 1/λ_α`, so
//! going from amplitudes back to rapidities is a polynomial root problem.

use crate::error::{Error, Result};
use crate::poly::{elementary_symmetric, monic_roots};
use crate::scalar::{ln_factorial, real, vec_norm, Cplx, Real};
use crate::sector::{build_hamiltonian, check_dim, sector_dimension, QuantumState, SectorParams};

/// `|λ_α − λ_β|` (in units of g) below which the Bethe equations are treated as singular.
pub const COLLISION_TOL: f64 = 1e-10;
/// Leading amplitude below this fraction of the state norm counts as zero.
pub const LEADING_AMPLITUDE_TOL: f64 = 1e-12;
/// `|μ| < DIVERGENCE_TOL · (max|μ| + 1)` marks `λ = 1/μ` as infinite.
pub const DIVERGENCE_TOL: f64 = 1e-8;
const NEWTON_POLISH_STEPS: usize = 2;

/// One rapidity. `AtInfinity` is the pure photon creator `B(∞) = b†`;
/// `AtZero` is the limit `λ B(λ) → −g S⁺`, which appears when the state has
/// no all-bosonic component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Root<T> {
    Finite(Cplx<T>),
    AtInfinity,
    AtZero,
}

impl<T: Real> Root<T> {
    pub fn value(&self) -> Option<Cplx<T>> {
        match self {
            Root::Finite(z) => Some(*z),
            _ => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        !matches!(self, Root::Finite(_))
    }
}

/// Unordered set of `M` rapidities.
#[derive(Debug, Clone, PartialEq)]
pub struct RapiditySet<T> {
    pub roots: Vec<Root<T>>,
    /// Conditioning estimate of the extraction: 1-norm of the monic
    /// coefficient vector in `μ`. `1` for sets built directly from values.
    pub condition: T,
}

impl<T: Real> RapiditySet<T> {
    pub fn from_values(values: &[Cplx<T>]) -> Self {
        Self {
            roots: values.iter().map(|&z| Root::Finite(z)).collect(),
            condition: T::one(),
        }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn diverged(&self) -> Vec<bool> {
        self.roots.iter().map(Root::is_diverged).collect()
    }

    pub fn diverged_count(&self) -> usize {
        self.roots.iter().filter(|r| r.is_diverged()).count()
    }

    /// All values, or an error if any root is not finite.
    pub fn finite_values(&self) -> Result<Vec<Cplx<T>>> {
        match self.diverged_count() {
            0 => Ok(self.roots.iter().filter_map(Root::value).collect()),
            n => Err(Error::NonFiniteRoot(n)),
        }
    }
}

/// Bethe-equation values `f_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheResidual<T> {
    pub f: Vec<Cplx<T>>,
    pub max_abs: T,
}

/// Log-magnitudes of the basis weights `w_k = g^k sqrt((M−k)!) sqrt(k! (2S)!/(2S−k)!)`,
/// so that `ψ_k = (−1)^k w_k e_k(μ)` for a Bethe product.
fn ln_weights<T: Real>(params: &SectorParams<T>) -> Vec<T> {
    let (m, two_s) = (params.excitations(), params.two_s());
    let ln_g = params.coupling().ln();
    let half = T::lit(0.5);
    (0..sector_dimension(params))
        .map(|k| {
            half * (ln_factorial::<T>(m - k) + ln_factorial::<T>(k) + ln_factorial::<T>(two_s)
                - ln_factorial::<T>(two_s - k))
                + T::from_usize_exact(k) * ln_g
        })
        .collect()
}

/// Signed weights `(−1)^k w_k` divided by a common scale `exp(shift)`.
fn scaled_weights<T: Real>(params: &SectorParams<T>) -> (Vec<T>, T) {
    let lw = ln_weights(params);
    let shift = lw.iter().copied().fold(T::neg_infinity(), T::max);
    let w = lw
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let mag = (l - shift).exp();
            if k % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    (w, shift)
}

/// `Π_{μ ∈ inv} B(1/μ) (S⁺)^raised |0⟩`, up to the common positive factor
/// `exp(shift)` from [`scaled_weights`]. Requires `inv.len() + raised = M`.
fn product_amplitudes<T: Real>(inv: &[Cplx<T>], raised: usize, params: &SectorParams<T>, w: &[T]) -> Vec<Cplx<T>> {
    debug_assert_eq!(inv.len() + raised, params.excitations());
    let e = elementary_symmetric(inv);
    // (S⁺)^s contributes (−g)^{−s} relative to w_k
    let pre = (-params.coupling()).powi(-(raised as i32));
    let mut psi = vec![real(T::zero()); w.len()];
    for (i, ei) in e.iter().enumerate() {
        let k = i + raised;
        psi[k] = *ei * (w[k] * pre);
    }
    psi
}

fn inverses<T: Real>(lambdas: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
    lambdas
        .iter()
        .enumerate()
        .map(|(a, l)| {
            if l.norm() == T::zero() {
                Err(Error::ZeroRapidity(a))
            } else {
                Ok(l.inv())
            }
        })
        .collect()
}

fn check_count<T: Real>(lambdas: &RapiditySet<T>, params: &SectorParams<T>) -> Result<()> {
    check_dim(params.excitations(), lambdas.len())
}

/// Normalized Bethe state `Π_α B(λ_α)|0⟩`, together with the norm of the
/// unnormalized product.
pub fn bethe_amplitudes<T: Real>(lambdas: &RapiditySet<T>, params: &SectorParams<T>) -> Result<(QuantumState<T>, T)> {
    params.require_rapidities()?;
    check_count(lambdas, params)?;
    let inv = inverses(&lambdas.finite_values()?)?;
    let (w, shift) = scaled_weights(params);
    let psi = product_amplitudes(&inv, 0, params, &w);
    let n = vec_norm(&psi);
    if n == T::zero() || !n.is_finite() {
        return Err(Error::NullState);
    }
    let state = QuantumState::new(psi.iter().map(|a| a / n).collect(), T::zero());
    Ok((state, n * shift.exp()))
}

/// Rapidities of the Bethe product proportional to `state`.
///
/// The coefficients `e_k(μ) ∝ (−1)^k ψ_k / w_k` define the polynomial
/// `Σ_k (−1)^k e_k μ^{M−k} = Π_α (μ − μ_α)`; its roots are found from the
/// companion matrix and polished by Newton steps.
pub fn extract_rapidities<T: Real>(state: &QuantumState<T>, params: &SectorParams<T>) -> Result<RapiditySet<T>> {
    params.require_rapidities()?;
    let m = params.excitations();
    check_dim(m + 1, state.dim())?;
    let norm = state.norm();
    if norm == T::zero() {
        return Err(Error::NullState);
    }
    let (w, _) = scaled_weights(params);
    let lead = state
        .amplitudes
        .iter()
        .position(|a| a.norm() > T::lit(LEADING_AMPLITUDE_TOL) * norm)
        .ok_or(Error::NullState)?;
    let c: Vec<Cplx<T>> = (lead..=m).map(|k| state.amplitudes[k] / w[k]).collect();
    // c_k ∝ e_k(μ); the monic polynomial carries alternating signs
    let lower: Vec<Cplx<T>> = c[1..]
        .iter()
        .enumerate()
        .map(|(i, x)| if i % 2 == 0 { -x / c[0] } else { x / c[0] })
        .collect();
    let condition = T::one() + lower.iter().map(|z| z.norm()).sum::<T>();
    let mus = monic_roots(&lower, NEWTON_POLISH_STEPS);
    let scale = mus.iter().map(|z| z.norm()).fold(T::zero(), T::max) + T::one();
    let mut roots: Vec<Root<T>> = vec![Root::AtZero; lead];
    roots.extend(mus.into_iter().map(|mu| {
        if mu.norm() < T::lit(DIVERGENCE_TOL) * scale {
            Root::AtInfinity
        } else {
            Root::Finite(mu.inv())
        }
    }));
    Ok(RapiditySet { roots, condition })
}

/// Finite values with collision and zero checks applied.
pub(crate) fn checked_values<T: Real>(
    lambdas: &RapiditySet<T>,
    params: &SectorParams<T>,
    tol: T,
) -> Result<Vec<Cplx<T>>> {
    let vals = lambdas.finite_values()?;
    let g = params.coupling();
    for (a, la) in vals.iter().enumerate() {
        if la.norm() < tol * g {
            return Err(Error::ZeroRapidity(a));
        }
        for (b, lb) in vals.iter().enumerate().skip(a + 1) {
            let distance = (la - lb).norm();
            if distance < tol * g {
                return Err(Error::RootCollision {
                    a,
                    b,
                    distance: distance.as_f64(),
                });
            }
        }
    }
    Ok(vals)
}

/// `f_α = −2g²S/λ_α + λ_α − Δ + Σ_{β≠α} 2g²/(λ_α − λ_β)` on already-checked values.
pub(crate) fn residual_values<T: Real>(vals: &[Cplx<T>], params: &SectorParams<T>, delta: T) -> Vec<Cplx<T>> {
    let g2 = params.coupling() * params.coupling();
    let two = T::lit(2.0);
    let two_g2_s = two * g2 * params.spin();
    vals.iter()
        .enumerate()
        .map(|(a, &la)| {
            let pair: Cplx<T> = vals
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(_, &lb)| (la - lb).inv() * (two * g2))
                .fold(real(T::zero()), |acc, x| acc + x);
            -la.inv() * two_g2_s + la - delta + pair
        })
        .collect()
}

pub fn bethe_residual<T: Real>(
    lambdas: &RapiditySet<T>,
    params: &SectorParams<T>,
    delta: T,
) -> Result<BetheResidual<T>> {
    check_count(lambdas, params)?;
    let vals = checked_values(lambdas, params, T::lit(COLLISION_TOL))?;
    let f = residual_values(&vals, params, delta);
    let max_abs = f.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    Ok(BetheResidual { f, max_abs })
}

/// `E = Δ(M − S) − Σ_α λ_α`; real when the set is on-shell.
pub fn bethe_energy<T: Real>(lambdas: &RapiditySet<T>, params: &SectorParams<T>, delta: T) -> Result<Cplx<T>> {
    let vals = lambdas.finite_values()?;
    let base = delta * (T::from_usize_exact(params.excitations()) - params.spin());
    Ok(vals.iter().fold(real(base), |acc, l| acc - l))
}

/// Relative defect of the off-shell action of `H` on a Bethe state:
///
/// `H|λ⟩ = [E + Σ_α f_α]|λ⟩ + g Σ_α (f_α/λ_α) Π_{β≠α} B(λ_β) S⁺|0⟩`,
///
/// returned as `‖lhs − rhs‖ / ‖lhs‖`.
pub fn offshell_identity_check<T: Real>(lambdas: &RapiditySet<T>, params: &SectorParams<T>, delta: T) -> Result<T> {
    params.require_rapidities()?;
    check_count(lambdas, params)?;
    let vals = checked_values(lambdas, params, T::lit(COLLISION_TOL))?;
    let inv = inverses(&vals)?;
    let (w, _) = scaled_weights(params);
    let psi = product_amplitudes(&inv, 0, params, &w);
    let h = build_hamiltonian(params, delta);
    let lhs = h.apply(&psi)?;

    let f = residual_values(&vals, params, delta);
    let energy = bethe_energy(lambdas, params, delta)?;
    let diag = f.iter().fold(energy, |acc, x| acc + x);
    let mut rhs: Vec<Cplx<T>> = psi.iter().map(|a| a * diag).collect();
    let g = params.coupling();
    for a in 0..vals.len() {
        let rest: Vec<Cplx<T>> = inv
            .iter()
            .enumerate()
            .filter(|(b, _)| *b != a)
            .map(|(_, z)| *z)
            .collect();
        let phi = product_amplitudes(&rest, 1, params, &w);
        let coef = f[a] * inv[a] * g;
        for (r, p) in rhs.iter_mut().zip(&phi) {
            *r += coef * p;
        }
    }
    let diff: Vec<Cplx<T>> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    let denom = vec_norm(&lhs);
    if denom == T::zero() {
        return Ok(vec_norm(&diff));
    }
    Ok(vec_norm(&diff) / denom)
}

/// Newton refinement settings for the static Bethe equations.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    /// Convergence threshold on `max|f_α|`, in units of g.
    pub tol: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-12),
            max_iterations: 100,
        }
    }
}

/// Solves `f_α = 0` by Newton iteration with the analytic Jacobian
/// `∂f_α/∂λ_α = 1 + 2g²S/λ_α² − Σ_{β≠α} 2g²/(λ_α−λ_β)²`,
/// `∂f_α/∂λ_β = 2g²/(λ_α−λ_β)²`. Returns the refined set and the number of
/// Newton updates taken.
pub fn refine_static_roots<T: Real>(
    lambdas: &RapiditySet<T>,
    params: &SectorParams<T>,
    delta: T,
) -> Result<(RapiditySet<T>, usize)> {
    refine_static_roots_with(lambdas, params, delta, NewtonOptions::default())
}

pub fn refine_static_roots_with<T: Real>(
    lambdas: &RapiditySet<T>,
    params: &SectorParams<T>,
    delta: T,
    opts: NewtonOptions<T>,
) -> Result<(RapiditySet<T>, usize)> {
    check_count(lambdas, params)?;
    let collision = T::lit(COLLISION_TOL);
    let g = params.coupling();
    let g2 = g * g;
    let two = T::lit(2.0);
    let two_g2_s = two * g2 * params.spin();
    let mut vals = checked_values(lambdas, params, collision)?;
    let n = vals.len();
    let mut residual = T::infinity();
    for iter in 0..=opts.max_iterations {
        let f = residual_values(&vals, params, delta);
        residual = f.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        if residual < opts.tol * g {
            let set = RapiditySet {
                roots: vals.into_iter().map(Root::Finite).collect(),
                condition: lambdas.condition,
            };
            return Ok((set, iter));
        }
        if iter == opts.max_iterations {
            break;
        }
        let mut jac = vec![vec![real(T::zero()); n]; n];
        for a in 0..n {
            let mut diag = real(T::one()) + (vals[a] * vals[a]).inv() * two_g2_s;
            for b in 0..n {
                if b != a {
                    let d = vals[a] - vals[b];
                    let t = (d * d).inv() * (two * g2);
                    jac[a][b] = t;
                    diag -= t;
                }
            }
            jac[a][a] = diag;
        }
        let step = solve_linear(jac, f.iter().map(|z| -z).collect()).ok_or(Error::SingularJacobian)?;
        for (v, s) in vals.iter_mut().zip(&step) {
            *v += s;
        }
        let set = RapiditySet::from_values(&vals);
        vals = checked_values(&set, params, collision)?;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: residual.as_f64(),
    })
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub(crate) fn solve_linear<T: Real>(mut a: Vec<Vec<Cplx<T>>>, mut b: Vec<Cplx<T>>) -> Option<Vec<Cplx<T>>> {
    let n = b.len();
    let scale = a.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())?;
        if a[piv][col].norm() <= T::epsilon() * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                let sub = a[col][k] * factor;
                a[row][k] -= sub;
            }
            let sub = b[col] * factor;
            b[row] -= sub;
        }
    }
    let mut x = vec![real(T::zero()); n];
    for row in (0..n).rev() {
        let acc = (row + 1..n).fold(b[row], |acc, k| acc - a[row][k] * x[k]);
        x[row] = acc / a[row][row];
    }
    Some(x)
}
