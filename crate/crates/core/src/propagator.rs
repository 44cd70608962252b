//! Fixed-step RK4 propagation of `i dψ/dt = H(Δ(t)) ψ` with stroboscopic
//! sampling at `t_p = 2πp/ω`.

use crate::bethe::RapiditySet;
use crate::error::{Error, Result};
use crate::scalar::{minus_i, real, Cplx, Real};
use crate::sector::{
    boson_number, build_hamiltonian, energy_expectation, sector_dimension, QuantumState, SectorParams,
};
use crate::spectral::ground_state;

/// Norm defect at a cycle boundary beyond which a run is aborted.
pub const NORM_FAILURE_TOL: f64 = 1e-6;
pub const DEFAULT_STEPS_PER_CYCLE: usize = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveForm {
    /// `Δ(t) = Δ₀ cos(ωt)`
    Cosine,
    /// `Δ(t) = Δ₀`
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProtocol<T> {
    pub delta0: T,
    pub omega: T,
    pub form: DriveForm,
}

impl<T: Real> DriveProtocol<T> {
    pub fn cosine(delta0: T, omega: T) -> Self {
        Self {
            delta0,
            omega,
            form: DriveForm::Cosine,
        }
    }

    pub fn constant(delta0: T, omega: T) -> Self {
        Self {
            delta0,
            omega,
            form: DriveForm::Constant,
        }
    }

    /// The cosine drive described by `params`.
    pub fn from_params(params: &SectorParams<T>) -> Self {
        Self::cosine(params.delta0(), params.omega())
    }

    pub fn delta(&self, t: T) -> T {
        match self.form {
            DriveForm::Cosine => self.delta0 * (self.omega * t).cos(),
            DriveForm::Constant => self.delta0,
        }
    }

    pub fn delta_dot(&self, t: T) -> T {
        match self.form {
            DriveForm::Cosine => -self.delta0 * self.omega * (self.omega * t).sin(),
            DriveForm::Constant => T::zero(),
        }
    }

    pub fn period(&self) -> T {
        T::TAU() / self.omega
    }

    /// `t_p = 2πp/ω`, computed directly rather than accumulated.
    pub fn cycle_time(&self, p: usize) -> T {
        T::TAU() * T::from_usize_exact(p) / self.omega
    }
}

/// Snapshot at a stroboscopic time.
#[derive(Debug, Clone, PartialEq)]
pub struct StroboscopicRecord<T> {
    pub p: usize,
    pub t_p: T,
    pub state: QuantumState<T>,
    pub boson_number: T,
    /// `⟨ψ|H(Δ(t_p))|ψ⟩`.
    pub mean_energy: T,
    /// Filled by rapidity extraction, if requested.
    pub rapidities: Option<RapiditySet<T>>,
    /// Instantaneous eigenbasis populations, if requested.
    pub weights: Option<Vec<T>>,
}

/// Within-cycle observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample<T> {
    pub t: T,
    pub boson_number: T,
    pub mean_energy: T,
    pub norm_defect: T,
}

/// `H(Δ) − c(Δ)·1 = Δ·pattern + off`; the identity shift only changes the
/// global phase.
struct Generator<T> {
    pattern: Vec<T>,
    off: Vec<T>,
}

impl<T: Real> Generator<T> {
    fn new(params: &SectorParams<T>, centered: bool) -> Self {
        let h1 = build_hamiltonian(params, T::one());
        let mut pattern = h1.diag;
        if centered {
            let mean = pattern.iter().copied().sum::<T>() / T::from_usize_exact(pattern.len());
            pattern.iter_mut().for_each(|x| *x -= mean);
        }
        Self { pattern, off: h1.off }
    }

    /// `out = −i H(Δ) v`.
    fn rhs(&self, delta: T, v: &[Cplx<T>], out: &mut [Cplx<T>]) {
        let d = v.len();
        let mi = minus_i::<T>();
        for k in 0..d {
            let mut acc = v[k] * (delta * self.pattern[k]);
            if k > 0 {
                acc += v[k - 1] * self.off[k - 1];
            }
            if k + 1 < d {
                acc += v[k + 1] * self.off[k];
            }
            out[k] = acc * mi;
        }
    }
}

struct Rk4<T> {
    k1: Vec<Cplx<T>>,
    k2: Vec<Cplx<T>>,
    k3: Vec<Cplx<T>>,
    k4: Vec<Cplx<T>>,
    tmp: Vec<Cplx<T>>,
}

impl<T: Real> Rk4<T> {
    fn new(d: usize) -> Self {
        let z = vec![real(T::zero()); d];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn advance(&mut self, gen: &Generator<T>, drive: &DriveProtocol<T>, psi: &mut [Cplx<T>], t: T, dt: T) {
        let half = dt * T::lit(0.5);
        let (d_start, d_mid, d_end) = (drive.delta(t), drive.delta(t + half), drive.delta(t + dt));
        gen.rhs(d_start, psi, &mut self.k1);
        for (o, (p, k)) in self.tmp.iter_mut().zip(psi.iter().zip(&self.k1)) {
            *o = p + k * half;
        }
        gen.rhs(d_mid, &self.tmp, &mut self.k2);
        for (o, (p, k)) in self.tmp.iter_mut().zip(psi.iter().zip(&self.k2)) {
            *o = p + k * half;
        }
        gen.rhs(d_mid, &self.tmp, &mut self.k3);
        for (o, (p, k)) in self.tmp.iter_mut().zip(psi.iter().zip(&self.k3)) {
            *o = p + k * dt;
        }
        gen.rhs(d_end, &self.tmp, &mut self.k4);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for k in 0..psi.len() {
            psi[k] += (self.k1[k] + self.k2[k] * two + self.k3[k] * two + self.k4[k]) * sixth;
        }
    }
}

/// Energy reference of the generator. `TraceShifted` integrates
/// `H − (tr H/d)·1`, which changes only the global phase of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    Plain,
    TraceShifted,
}

/// One classical RK4 step of `i dψ/dt = H(Δ(t)) ψ` from `t` to `t + dt`.
pub fn step<T: Real>(
    state: &QuantumState<T>,
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    t: T,
    dt: T,
) -> QuantumState<T> {
    step_in_gauge(state, params, drive, t, dt, Gauge::Plain)
}

/// [`step`] with an explicit choice of energy reference.
pub fn step_in_gauge<T: Real>(
    state: &QuantumState<T>,
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    t: T,
    dt: T,
    gauge: Gauge,
) -> QuantumState<T> {
    let gen = Generator::new(params, gauge == Gauge::TraceShifted);
    let mut rk = Rk4::new(state.dim());
    let mut psi = state.amplitudes.clone();
    rk.advance(&gen, drive, &mut psi, t, dt);
    QuantumState::new(psi, t + dt)
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub steps_per_cycle: usize,
    /// Emit a [`TimeSample`] every `stride` steps (and at `t = 0`).
    pub sample_stride: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            steps_per_cycle: DEFAULT_STEPS_PER_CYCLE,
            sample_stride: None,
        }
    }
}

/// Propagates the ground state of `H(Δ(0))` for `cycles` drive periods and
/// returns the `cycles + 1` stroboscopic records.
pub fn run<T: Real>(
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    cycles: usize,
    steps_per_cycle: usize,
) -> Result<Vec<StroboscopicRecord<T>>> {
    run_with(
        params,
        drive,
        cycles,
        RunOptions {
            steps_per_cycle,
            sample_stride: None,
        },
        |_| {},
    )
}

/// [`run`] from an explicit initial state, with optional within-cycle sampling.
///
/// The integration uses the trace-shifted generator `H − (tr H/d)·1`, which
/// alters only the global phase of the stored states while keeping the RK4
/// stability polynomial close to unit modulus.
pub fn run_from<T: Real>(
    initial: &QuantumState<T>,
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    cycles: usize,
    opts: RunOptions,
    mut observer: impl FnMut(&TimeSample<T>),
) -> Result<Vec<StroboscopicRecord<T>>> {
    if opts.steps_per_cycle == 0 {
        return Err(Error::InvalidParams("steps_per_cycle must be positive".into()));
    }
    crate::sector::check_dim(sector_dimension(params), initial.dim())?;
    let gen = Generator::new(params, true);
    let mut rk = Rk4::new(initial.dim());
    let mut psi = initial.amplitudes.clone();
    let dt = drive.period() / T::from_usize_exact(opts.steps_per_cycle);

    let sample = |psi: &[Cplx<T>], t: T| -> Result<TimeSample<T>> {
        let s = QuantumState::new(psi.to_vec(), t);
        Ok(TimeSample {
            t,
            boson_number: boson_number(&s, params)?,
            mean_energy: energy_expectation(&s, &build_hamiltonian(params, drive.delta(t)))?,
            norm_defect: s.norm() - T::one(),
        })
    };
    let record = |psi: &[Cplx<T>], p: usize| -> Result<StroboscopicRecord<T>> {
        let t_p = drive.cycle_time(p);
        let state = QuantumState::new(psi.to_vec(), t_p);
        Ok(StroboscopicRecord {
            p,
            t_p,
            boson_number: boson_number(&state, params)?,
            mean_energy: energy_expectation(&state, &build_hamiltonian(params, drive.delta(t_p)))?,
            state,
            rapidities: None,
            weights: None,
        })
    };

    let mut records = Vec::with_capacity(cycles + 1);
    records.push(record(&psi, 0)?);
    if opts.sample_stride.is_some() {
        observer(&sample(&psi, T::zero())?);
    }
    for p in 0..cycles {
        let t_start = drive.cycle_time(p);
        for j in 0..opts.steps_per_cycle {
            let t = t_start + T::from_usize_exact(j) * dt;
            rk.advance(&gen, drive, &mut psi, t, dt);
            if let Some(stride) = opts.sample_stride {
                let done = j + 1;
                if stride > 0 && done % stride == 0 && done != opts.steps_per_cycle {
                    observer(&sample(&psi, t + dt)?);
                }
            }
        }
        let rec = record(&psi, p + 1)?;
        let defect = (rec.state.norm() - T::one()).abs();
        if defect > T::lit(NORM_FAILURE_TOL) || !defect.is_finite() {
            return Err(Error::NormFailure {
                cycle: p + 1,
                defect: defect.as_f64(),
            });
        }
        if opts.sample_stride.is_some() {
            observer(&sample(&psi, rec.t_p)?);
        }
        records.push(rec);
    }
    Ok(records)
}

/// Like [`run`], with within-cycle samples delivered to `observer`.
pub fn run_with<T: Real>(
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    cycles: usize,
    opts: RunOptions,
    observer: impl FnMut(&TimeSample<T>),
) -> Result<Vec<StroboscopicRecord<T>>> {
    let initial = ground_state(params, drive.delta(T::zero()));
    run_from(&initial, params, drive, cycles, opts, observer)
}

/// Largest stroboscopic-state deviation `‖ψ_N(t_p) − ψ_2N(t_p)‖` between runs
/// at `steps_per_cycle` and twice that resolution.
pub fn convergence_check<T: Real>(
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
    cycles: usize,
    steps_per_cycle: usize,
) -> Result<T> {
    let coarse = run(params, drive, cycles, steps_per_cycle)?;
    let fine = run(params, drive, cycles, 2 * steps_per_cycle)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| {
            let diff: Vec<Cplx<T>> = a
                .state
                .amplitudes
                .iter()
                .zip(&b.state.amplitudes)
                .map(|(x, y)| x - y)
                .collect();
            crate::scalar::vec_norm(&diff)
        })
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, inner};
    use crate::spectral::diagonalize;

    fn reference_sector(omega: f64) -> SectorParams<f64> {
        SectorParams::new(12, 4, 1.0, 5.0, omega).unwrap()
    }

    #[test]
    fn drive_hits_amplitude_at_cycle_times() {
        let d = DriveProtocol::<f64>::cosine(5.0, 3.57);
        assert_eq!(d.delta(0.0), 5.0);
        for p in [1, 10, 4000] {
            assert!((d.delta(d.cycle_time(p)) - 5.0).abs() < 1e-11);
        }
        assert_eq!(DriveProtocol::<f64>::constant(2.0, 1.0).delta_dot(0.3), 0.0);
    }

    #[test]
    fn scalar_phase_step() {
        // S = 0, M = 0: one state with energy 0; S = 1/2, M = 0: energy −Δ/2
        let p = SectorParams::<f64>::from_spin(0.5, 0, 1.0, 3.0, 1.0).unwrap();
        let drive = DriveProtocol::constant(3.0, 1.0);
        let s = QuantumState::from_real(&[1.0], 0.0);
        let dt = 1e-2;
        let out = step(&s, &p, &drive, 0.0, dt);
        let exact = cplx(0.0, 1.5 * dt).exp();
        assert!((out.amplitudes[0] - exact).norm() < 1e-11);
        assert!((out.time - dt).abs() < 1e-16);
    }

    #[test]
    fn constant_hamiltonian_matches_spectral_propagator() {
        let p = SectorParams::<f64>::new(12, 4, 1.0, 0.0, 1.0).unwrap();
        let drive = DriveProtocol::cosine(0.0, 1.0);
        let h = build_hamiltonian(&p, 0.0);
        let spec = diagonalize(&h);
        let amps: Vec<_> = (0..5).map(|k| cplx(1.0 / (k as f64 + 1.0), 0.3 * k as f64)).collect();
        let s = QuantumState::new(amps, 0.0).normalized().unwrap();
        let dt = 1e-3;
        let out = step(&s, &p, &drive, 0.0, dt);
        // exp(−iHdt) via the eigenbasis
        let mut exact = vec![cplx(0.0, 0.0); 5];
        for (e, v) in spec.values.iter().zip(&spec.vectors) {
            let vc: Vec<_> = v.iter().map(|&x| real(x)).collect();
            let c = inner(&vc, &s.amplitudes) * cplx(0.0, -e * dt).exp();
            for k in 0..5 {
                exact[k] += c * v[k];
            }
        }
        for k in 0..5 {
            assert!((out.amplitudes[k] - exact[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn single_step_norm_defect() {
        let p = reference_sector(3.57);
        let drive = DriveProtocol::from_params(&p);
        let s = ground_state(&p, 5.0);
        // the trace-shifted generator used by `run` keeps RK4 within 1e-12
        let out = step_in_gauge(&s, &p, &drive, 0.0, 1e-3, Gauge::TraceShifted);
        assert!((out.norm() - 1.0).abs() <= 1e-12, "{}", out.norm() - 1.0);
        let plain = step(&s, &p, &drive, 0.0, 1e-3);
        assert!((plain.norm() - 1.0).abs() <= 1e-10);
        let overlap = inner(&out.amplitudes, &plain.amplitudes).norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_cycles_gives_initial_ground_state() {
        let p = reference_sector(3.57);
        let recs = run(&p, &DriveProtocol::from_params(&p), 0, 2000).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].p, 0);
        assert!((recs[0].boson_number - 3.2).abs() < 0.1);
    }

    #[test]
    fn undriven_ground_state_is_stationary() {
        let p = SectorParams::<f64>::new(12, 4, 1.0, 0.0, 2.0).unwrap();
        let recs = run(&p, &DriveProtocol::from_params(&p), 5, 2000).unwrap();
        let first = &recs[0].state.amplitudes;
        for r in &recs {
            let overlap = inner(first, &r.state.amplitudes).norm() / r.state.norm();
            assert!((overlap - 1.0).abs() < 1e-10);
            assert!((r.boson_number / r.state.norm().powi(2) - recs[0].boson_number).abs() < 1e-10);
        }
    }

    #[test]
    fn record_times_are_exact() {
        let p = reference_sector(3.68);
        let d = DriveProtocol::from_params(&p);
        let recs = run(&p, &d, 3, 2000).unwrap();
        for r in &recs {
            assert_eq!(r.t_p, std::f64::consts::TAU * r.p as f64 / 3.68);
        }
    }

    #[test]
    fn coarse_steps_trigger_norm_failure() {
        let p = reference_sector(3.57);
        let err = run(&p, &DriveProtocol::from_params(&p), 5, 8).unwrap_err();
        assert!(matches!(err, Error::NormFailure { .. }), "{err:?}");
    }

    #[test]
    fn observer_sees_samples() {
        let p = reference_sector(3.57);
        let mut n = 0;
        run_with(
            &p,
            &DriveProtocol::from_params(&p),
            2,
            RunOptions {
                steps_per_cycle: 2000,
                sample_stride: Some(200),
            },
            |_| n += 1,
        )
        .unwrap();
        assert_eq!(n, 1 + 2 * 10);
    }

    #[test]
    fn adiabatic_following() {
        let p = reference_sector(0.01);
        let d = DriveProtocol::from_params(&p);
        let steps_per_cycle = 200_000;
        let dt = d.period() / steps_per_cycle as f64;
        let mut psi = ground_state(&p, 5.0);
        let mut worst: f64 = 1.0;
        for j in 0..10 * steps_per_cycle {
            psi = step_in_gauge(&psi, &p, &d, j as f64 * dt, dt, Gauge::TraceShifted);
            if j % 10_000 == 9_999 {
                let t = (j + 1) as f64 * dt;
                let g = ground_state(&p, d.delta(t));
                worst = worst.min(inner(&g.amplitudes, &psi.amplitudes).norm_sqr() / psi.norm().powi(2));
            }
        }
        assert!(worst > 0.999, "overlap {worst}");
    }
}
