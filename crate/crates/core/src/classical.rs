//! Classical rapidity dynamics.
//!
//! The Schrödinger evolution of a sector state is equivalent to the motion of
//! its rapidities under `i λ̇_α / λ_α = f_α({λ})`. With `λ_α = 2x_α²` the same
//! flow becomes a first-order system in `x` whose second time derivative is a
//! Newtonian force from a complexified BC-type Inozemtsev potential.

use crate::bethe::{checked_values, residual_values, RapiditySet, Root, COLLISION_TOL};
use crate::error::{Error, HaltReason, Result};
use crate::propagator::DriveProtocol;
use crate::scalar::{cplx, minus_i, real, Cplx, Real};
use crate::sector::{build_hamiltonian, SectorParams};

/// `λ̇_α = −i λ_α f_α({λ})` at detuning `delta`.
pub fn rapidity_flow<T: Real>(lambdas: &RapiditySet<T>, params: &SectorParams<T>, delta: T) -> Result<Vec<Cplx<T>>> {
    crate::sector::check_dim(params.excitations(), lambdas.len())?;
    let vals = checked_values(lambdas, params, T::lit(COLLISION_TOL))?;
    Ok(flow_values(&vals, params, delta))
}

fn flow_values<T: Real>(vals: &[Cplx<T>], params: &SectorParams<T>, delta: T) -> Vec<Cplx<T>> {
    let f = residual_values(vals, params, delta);
    vals.iter().zip(&f).map(|(l, f)| minus_i::<T>() * l * f).collect()
}

/// Settings for [`integrate_flow`].
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Spacing of the uniform output grid; stroboscopic times are always added.
    pub output_dt: Option<T>,
    /// Halt when two rapidities (or one and the origin) come closer than this, in units of g.
    pub collision_tol: T,
    /// Halt when a rapidity exceeds this modulus, in units of g.
    pub blowup: T,
    /// Halt when the step size falls below this fraction of the span.
    pub min_step_fraction: T,
    /// Upper bound on the step. `None` derives it from the Hamiltonian norm so
    /// that linearized oscillations about a stationary set stay inside the
    /// stability region of the method.
    pub max_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            output_dt: None,
            collision_tol: T::lit(1e-8),
            blowup: T::lit(1e6),
            min_step_fraction: T::lit(1e-14),
            max_step: None,
            max_steps: 50_000_000,
        }
    }
}

/// Sampled rapidity tracks. Each index `α` is one continuous track.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory<T> {
    pub times: Vec<T>,
    pub lambdas: Vec<RapiditySet<T>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub min_step: T,
}

impl<T: Real> ClassicalTrajectory<T> {
    /// Sample closest to time `t`.
    pub fn at(&self, t: T) -> Option<&RapiditySet<T>> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - t).abs().partial_cmp(&(*b.1 - t).abs()).unwrap())?
            .0;
        self.lambdas.get(idx)
    }
}

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct FlowSystem<'a, T> {
    params: &'a SectorParams<T>,
    drive: &'a DriveProtocol<T>,
    opts: FlowOptions<T>,
}

impl<T: Real> FlowSystem<'_, T> {
    fn guard(&self, y: &[Cplx<T>]) -> Option<HaltReason> {
        let g = self.params.coupling();
        let tol = self.opts.collision_tol * g;
        for (a, la) in y.iter().enumerate() {
            if !crate::scalar::is_finite_c(la) || la.norm() > self.opts.blowup * g {
                return Some(HaltReason::BlowUp);
            }
            if la.norm() < tol {
                return Some(HaltReason::ZeroRapidity);
            }
            if y[a + 1..].iter().any(|lb| (la - lb).norm() < tol) {
                return Some(HaltReason::Collision);
            }
        }
        None
    }

    fn rhs(&self, t: T, y: &[Cplx<T>]) -> std::result::Result<Vec<Cplx<T>>, HaltReason> {
        if let Some(reason) = self.guard(y) {
            return Err(reason);
        }
        Ok(flow_values(y, self.params, self.drive.delta(t)))
    }
}

/// Adaptive Dormand-Prince 5(4) integration of the rapidity flow from `t = 0`
/// to `t_final` (which may be negative), sampled on the output grid and at every
/// stroboscopic time in between.
pub fn integrate_flow<T: Real>(
    initial: &RapiditySet<T>,
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    t_final: T,
    opts: FlowOptions<T>,
) -> Result<ClassicalTrajectory<T>> {
    integrate_flow_between(initial, params, drive, T::zero(), t_final, opts)
}

/// [`integrate_flow`] over an arbitrary interval `[t_start, t_final]`.
pub fn integrate_flow_between<T: Real>(
    initial: &RapiditySet<T>,
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    t_start: T,
    t_final: T,
    opts: FlowOptions<T>,
) -> Result<ClassicalTrajectory<T>> {
    crate::sector::check_dim(params.excitations(), initial.len())?;
    let y0 = checked_values(initial, params, T::lit(COLLISION_TOL))?;
    let sys = FlowSystem { params, drive, opts };
    if let Some(reason) = sys.guard(&y0) {
        return Err(Error::FlowHalted {
            reason,
            time: t_start.as_f64(),
        });
    }
    let outputs = output_times(drive, t_start, t_final, opts.output_dt);
    let span = (t_final - t_start).abs();
    let dir = if t_final >= t_start { T::one() } else { -T::one() };

    let mut traj = ClassicalTrajectory {
        times: vec![t_start],
        lambdas: vec![RapiditySet::from_values(&y0)],
        accepted_steps: 0,
        rejected_steps: 0,
        min_step: T::infinity(),
    };
    if span == T::zero() {
        return Ok(traj);
    }
    let halt = |reason, t: T| Error::FlowHalted {
        reason,
        time: t.as_f64(),
    };

    let mut y = y0;
    let mut t = t_start;
    let h_max = opts.max_step.unwrap_or_else(|| stable_step(params, drive));
    let mut h = (span * T::lit(1e-4)).min(h_max);
    let min_step = span * opts.min_step_fraction;
    let n = y.len();
    let mut k: Vec<Vec<Cplx<T>>> = vec![vec![real(T::zero()); n]; 7];
    let mut stage = vec![real(T::zero()); n];
    let mut steps = 0usize;

    for &target in &outputs {
        while (target - t) * dir > T::zero() {
            let remaining = (target - t).abs();
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            if h < min_step {
                return Err(halt(HaltReason::StepUnderflow, t));
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(halt(HaltReason::StepUnderflow, t));
            }
            let hs = h_try * dir;
            k[0] = sys.rhs(t, &y).map_err(|r| halt(r, t))?;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = DP_A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (hs * T::lit(a));
                        }
                    }
                    stage[i] = acc;
                }
                let ts = t + hs * T::lit(DP_C[s]);
                match sys.rhs(ts, &stage) {
                    Ok(v) => k[s] = v,
                    Err(_) => {
                        // a stage crossed a singular surface: shrink and retry
                        traj.rejected_steps += 1;
                        h = h_try * T::lit(0.25);
                        if h < min_step {
                            let reason = sys.guard(&stage).unwrap_or(HaltReason::StepUnderflow);
                            return Err(halt(reason, t));
                        }
                        break;
                    }
                }
                if s == 6 {
                    // stage 6 evaluated at the 5th-order solution
                    let mut err = T::zero();
                    let mut y5 = vec![real(T::zero()); n];
                    for i in 0..n {
                        let mut hi = y[i];
                        let mut diff = real(T::zero());
                        for j in 0..7 {
                            hi += k[j][i] * (hs * T::lit(DP_B5[j]));
                            diff += k[j][i] * (hs * T::lit(DP_B5[j] - DP_B4[j]));
                        }
                        let sc = opts.atol + opts.rtol * y[i].norm().max(hi.norm());
                        err = err.max(diff.norm() / sc);
                        y5[i] = hi;
                    }
                    if err <= T::one() {
                        t = if last { target } else { t + hs };
                        y = y5;
                        traj.accepted_steps += 1;
                        traj.min_step = traj.min_step.min(h_try);
                        if let Some(reason) = sys.guard(&y) {
                            traj.times.push(t);
                            traj.lambdas.push(RapiditySet::from_values(&y));
                            return Err(halt(reason, t));
                        }
                    } else {
                        traj.rejected_steps += 1;
                    }
                    let factor = if err == T::zero() {
                        T::lit(5.0)
                    } else {
                        (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
                    };
                    let proposed = h_try * factor;
                    // a step clipped to hit an output time says little about the natural step
                    h = if last && err <= T::one() {
                        h.max(proposed)
                    } else {
                        proposed
                    }
                    .min(h_max);
                }
            }
        }
        traj.times.push(target);
        traj.lambdas.push(RapiditySet::from_values(&y));
    }
    Ok(traj)
}

/// `1.5 / ‖H‖_F` at the largest detuning reached; the Frobenius norm bounds
/// half the spread of level spacings that set the linearized frequencies.
fn stable_step<T: Real>(params: &SectorParams<T>, drive: &DriveProtocol<T>) -> T {
    let reach = drive.delta0.abs();
    let norm = build_hamiltonian(params, reach)
        .norm()
        .max(build_hamiltonian(params, -reach).norm());
    if norm > T::zero() {
        T::lit(1.5) / norm
    } else {
        T::infinity()
    }
}

/// Sorted output instants strictly after `t_start`, ending at `t_final`.
fn output_times<T: Real>(drive: &DriveProtocol<T>, t_start: T, t_final: T, dt: Option<T>) -> Vec<T> {
    let (lo, hi) = if t_final >= t_start {
        (t_start, t_final)
    } else {
        (t_final, t_start)
    };
    let mut out = vec![t_final];
    if let Some(dt) = dt.filter(|d| *d > T::zero()) {
        let mut j = 1usize;
        loop {
            let t = t_start + (t_final - t_start).signum() * dt * T::from_usize_exact(j);
            if t <= lo || t >= hi {
                break;
            }
            out.push(t);
            j += 1;
        }
    }
    if drive.omega > T::zero() {
        let first = (lo / drive.period()).ceil().max(T::zero()).to_usize().unwrap_or(0);
        let mut p = first;
        loop {
            let t = drive.cycle_time(p);
            if t >= hi {
                break;
            }
            if t > lo {
                out.push(t);
            }
            p += 1;
        }
    }
    let forward = t_final >= t_start;
    out.sort_by(|a, b| {
        if forward {
            a.partial_cmp(b).unwrap()
        } else {
            b.partial_cmp(a).unwrap()
        }
    });
    let eps = T::lit(1e-12) * (hi - lo).max(T::one());
    out.dedup_by(|a, b| (*a - *b).abs() <= eps);
    out
}

/// Optimal assignment of `other` onto `reference` minimizing the total
/// displacement. Returns `perm` with `other[perm[i]]` matched to
/// `reference[i]`, and the largest matched distance. Exhaustive for up to 8
/// roots, greedy beyond.
pub fn pair_roots<T: Real>(reference: &[Cplx<T>], other: &[Cplx<T>]) -> (Vec<usize>, T) {
    assert_eq!(reference.len(), other.len(), "pairing requires equal-size sets");
    let n = reference.len();
    let cost = |i: usize, j: usize| (reference[i] - other[j]).norm();
    let best = if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = perm.clone();
        let mut best_cost = T::infinity();
        permute(&mut perm, 0, &mut |p| {
            let c: T = p.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
            if c < best_cost {
                best_cost = c;
                best = p.to_vec();
            }
        });
        best
    } else {
        let mut used = vec![false; n];
        (0..n)
            .map(|i| {
                let j = (0..n)
                    .filter(|&j| !used[j])
                    .min_by(|&a, &b| cost(i, a).partial_cmp(&cost(i, b)).unwrap())
                    .unwrap();
                used[j] = true;
                j
            })
            .collect()
    };
    let max = best
        .iter()
        .enumerate()
        .map(|(i, &j)| cost(i, j))
        .fold(T::zero(), T::max);
    (best, max)
}

fn permute(v: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Reorders `next` so index `α` continues the track of `prev[α]`. Diverged
/// roots are kept in place at the end of the finite ones.
pub fn continue_tracks<T: Real>(prev: &RapiditySet<T>, next: &RapiditySet<T>) -> RapiditySet<T> {
    let (Ok(a), Ok(b)) = (prev.finite_values(), next.finite_values()) else {
        return next.clone();
    };
    if a.len() != b.len() {
        return next.clone();
    }
    let (perm, _) = pair_roots(&a, &b);
    RapiditySet {
        roots: perm.iter().map(|&j| Root::Finite(b[j])).collect(),
        condition: next.condition,
    }
}

/// `x_α = sqrt(λ_α / 2)` on the principal branch (`Re x ≥ 0`, and `Im x ≥ 0`
/// when `Re x = 0`).
pub fn x_variables<T: Real>(lambdas: &RapiditySet<T>) -> Result<Vec<Cplx<T>>> {
    let half = T::lit(0.5);
    Ok(lambdas
        .finite_values()?
        .into_iter()
        .map(|l| {
            let x = (l * half).sqrt();
            if x.re == T::zero() && x.im < T::zero() {
                -x
            } else {
                x
            }
        })
        .collect())
}

fn check_x<T: Real>(x: &[Cplx<T>], params: &SectorParams<T>) -> Result<()> {
    crate::sector::check_dim(params.excitations(), x.len())?;
    let tol = T::lit(COLLISION_TOL) * params.coupling().sqrt();
    for (a, xa) in x.iter().enumerate() {
        if xa.norm() < tol {
            return Err(Error::ZeroRapidity(a));
        }
        for (b, xb) in x.iter().enumerate().skip(a + 1) {
            let distance = (xa - xb).norm().min((xa + xb).norm());
            if distance < tol {
                return Err(Error::RootCollision {
                    a,
                    b,
                    distance: distance.as_f64(),
                });
            }
        }
    }
    Ok(())
}

/// First-order flow in `x`:
/// `ẋ_α = i g²S/(2x_α) + iΔx_α/2 − i x_α³ − (i g²/4) Σ_{β≠α} [1/(x_α+x_β) + 1/(x_α−x_β)]`.
///
/// This is the rapidity flow under `λ = 2x²`, so `λ̇_α = 4 x_α ẋ_α`.
pub fn x_flow<T: Real>(x: &[Cplx<T>], params: &SectorParams<T>, delta: T) -> Result<Vec<Cplx<T>>> {
    check_x(x, params)?;
    let g2 = params.coupling() * params.coupling();
    let s = params.spin();
    let two = T::lit(2.0);
    let i = cplx(T::zero(), T::one());
    Ok(x.iter()
        .enumerate()
        .map(|(a, &xa)| {
            let pair = x
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .fold(real(T::zero()), |acc, (_, &xb)| acc + (xa + xb).inv() + (xa - xb).inv());
            i * (xa.inv() * (g2 * s / two) + xa * (delta / two) - xa * xa * xa - pair * (g2 / T::lit(4.0)))
        })
        .collect())
}

/// `γ(t) = (M − 1 − S) g² + Δ²/4 − iΔ̇/2`, the quadratic coefficient of the
/// Inozemtsev potential generated by the `x` flow.
pub fn gamma<T: Real>(params: &SectorParams<T>, delta: T, delta_dot: T) -> Cplx<T> {
    let g2 = params.coupling() * params.coupling();
    let m = T::from_usize_exact(params.excitations());
    let re = (m - T::one() - params.spin()) * g2 + delta * delta / T::lit(4.0);
    cplx(re, -delta_dot / T::lit(2.0))
}

/// Per-particle potentials
/// `V_α = (g⁴/16) Σ_{β≠α} [(x_α−x_β)^{−2} + (x_α+x_β)^{−2}] + x_α⁶/2 − Δx_α⁴/2 + γx_α²/2 + g⁴S²/(8x_α²)`.
pub fn inozemtsev_potential<T: Real>(
    x: &[Cplx<T>],
    params: &SectorParams<T>,
    delta: T,
    delta_dot: T,
) -> Result<Vec<Cplx<T>>> {
    check_x(x, params)?;
    let g = params.coupling();
    let g4 = g * g * g * g;
    let s = params.spin();
    let gam = gamma(params, delta, delta_dot);
    let half = T::lit(0.5);
    Ok(x.iter()
        .enumerate()
        .map(|(a, &xa)| {
            let pair = x
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .fold(real(T::zero()), |acc, (_, &xb)| {
                    let (m, p) = (xa - xb, xa + xb);
                    acc + (m * m).inv() + (p * p).inv()
                });
            let x2 = xa * xa;
            let x4 = x2 * x2;
            pair * (g4 / T::lit(16.0)) + x4 * x2 * half - x4 * (delta * half)
                + gam * x2 * half
                + x2.inv() * (g4 * s * s / T::lit(8.0))
        })
        .collect())
}

/// `F_α = −∂V_α/∂x_α`.
pub fn inozemtsev_force<T: Real>(
    x: &[Cplx<T>],
    params: &SectorParams<T>,
    delta: T,
    delta_dot: T,
) -> Result<Vec<Cplx<T>>> {
    check_x(x, params)?;
    let g = params.coupling();
    let g4 = g * g * g * g;
    let s = params.spin();
    let gam = gamma(params, delta, delta_dot);
    let two = T::lit(2.0);
    Ok(x.iter()
        .enumerate()
        .map(|(a, &xa)| {
            let pair = x
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .fold(real(T::zero()), |acc, (_, &xb)| {
                    let (m, p) = (xa - xb, xa + xb);
                    acc + (m * m * m).inv() + (p * p * p).inv()
                });
            let x2 = xa * xa;
            let x3 = x2 * xa;
            let grad = x3 * x2 * T::lit(3.0) - x3 * (two * delta) + gam * xa
                - x3.inv() * (g4 * s * s / T::lit(4.0))
                - pair * (g4 / T::lit(8.0));
            -grad
        })
        .collect())
}
