//! Cycle-averaged eigenstate populations and their Boltzmann comparison.

use crate::error::{Error, Result};
use crate::propagator::{DriveProtocol, StroboscopicRecord};
use crate::scalar::{inner, real, Cplx, Real};
use crate::sector::{build_hamiltonian, check_dim, QuantumState, SectorParams};
use crate::spectral::{diagonalize, SpectralDecomposition};

/// Relative eigenvalue gap below which eigenstates are merged into one cluster.
pub const DEGENERACY_TOL: f64 = 1e-10;
const FIT_MAX_ITERATIONS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution<T> {
    /// `c_α`, non-negative and summing to one.
    pub c: Vec<T>,
    pub eigenvalues: Vec<T>,
    /// `Σ_α c_α E_α`.
    pub mean_energy: T,
    /// Number of cycles averaged.
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannFit<T> {
    /// Inverse temperature; negative for population inversion.
    pub beta: T,
    /// `e^{−βE_α}/Z`.
    pub weights: Vec<T>,
    /// `Σ_α |c_α − c^B_α|`.
    pub l1_distance: T,
    /// `Σ_α c_α ln(c_α / c^B_α)`; reported alongside the L1 distance as a
    /// log-scale view of the tail mismatch.
    pub kl_divergence: T,
}

/// Populations of `state` (normalized on the fly) in the eigenbasis of
/// `spectrum`, with near-degenerate clusters replaced by their mean so the
/// result does not depend on the basis chosen inside a cluster.
pub fn instantaneous_weights<T: Real>(state: &QuantumState<T>, spectrum: &SpectralDecomposition<T>) -> Result<Vec<T>> {
    check_dim(spectrum.dim(), state.dim())?;
    let norm2 = state.norm().powi(2);
    if norm2 == T::zero() {
        return Err(Error::NullState);
    }
    let mut w: Vec<T> = spectrum
        .vectors
        .iter()
        .map(|v| {
            let vc: Vec<Cplx<T>> = v.iter().map(|&x| real(x)).collect();
            inner(&vc, &state.amplitudes).norm_sqr() / norm2
        })
        .collect();
    let width = spectrum.values.iter().fold(T::zero(), |m, e| m.max(e.abs()));
    for cluster in spectrum.clusters(T::lit(DEGENERACY_TOL) * width.max(T::one())) {
        if cluster.len() > 1 {
            let total: T = cluster.iter().map(|&a| w[a]).sum();
            let share = total / T::from_usize_exact(cluster.len());
            cluster.iter().for_each(|&a| w[a] = share);
        }
    }
    Ok(w)
}

/// `c_α = (1/P) Σ_{p=1..P} |⟨ψ(t_p)|α⟩|²` in a single eigenbasis. Records with
/// `p = 0` (the undriven initial state) are skipped.
pub fn cycle_weights<T: Real>(
    records: &[StroboscopicRecord<T>],
    spectrum: &SpectralDecomposition<T>,
) -> Result<WeightDistribution<T>> {
    let driven: Vec<&StroboscopicRecord<T>> = records.iter().filter(|r| r.p > 0).collect();
    if driven.is_empty() {
        return Err(Error::EmptyAverage);
    }
    let d = spectrum.dim();
    let mut c = vec![T::zero(); d];
    for r in &driven {
        for (acc, w) in c.iter_mut().zip(instantaneous_weights(&r.state, spectrum)?) {
            *acc += w;
        }
    }
    let n = T::from_usize_exact(driven.len());
    c.iter_mut().for_each(|x| *x /= n);
    Ok(finish(c, spectrum.values.clone(), driven.len()))
}

/// Per-record eigenbasis variant: diagonalizes `H(Δ(t_p))` at every record.
/// Eigenvalues in the result are averaged over records. Useful when sampling
/// off the stroboscopic grid, where `Δ(t_p)` varies.
pub fn cycle_weights_instantaneous<T: Real>(
    records: &[StroboscopicRecord<T>],
    params: &SectorParams<T>,
    drive: &DriveProtocol<T>,
) -> Result<WeightDistribution<T>> {
    let driven: Vec<&StroboscopicRecord<T>> = records.iter().filter(|r| r.p > 0).collect();
    if driven.is_empty() {
        return Err(Error::EmptyAverage);
    }
    let d = driven[0].state.dim();
    let mut c = vec![T::zero(); d];
    let mut energies = vec![T::zero(); d];
    for r in &driven {
        let spec = diagonalize(&build_hamiltonian(params, drive.delta(r.state.time)));
        for (acc, w) in c.iter_mut().zip(instantaneous_weights(&r.state, &spec)?) {
            *acc += w;
        }
        for (acc, e) in energies.iter_mut().zip(&spec.values) {
            *acc += *e;
        }
    }
    let n = T::from_usize_exact(driven.len());
    c.iter_mut().for_each(|x| *x /= n);
    energies.iter_mut().for_each(|x| *x /= n);
    Ok(finish(c, energies, driven.len()))
}

fn finish<T: Real>(c: Vec<T>, eigenvalues: Vec<T>, cycles: usize) -> WeightDistribution<T> {
    let mean_energy = c.iter().zip(&eigenvalues).map(|(w, e)| *w * *e).sum();
    WeightDistribution {
        c,
        eigenvalues,
        mean_energy,
        cycles,
    }
}

/// Boltzmann weights at `beta`, evaluated relative to the spectral edge that
/// keeps every exponent non-positive.
pub fn boltzmann_weights<T: Real>(energies: &[T], beta: T) -> Vec<T> {
    let reference = if beta >= T::zero() {
        energies.iter().copied().fold(T::infinity(), T::min)
    } else {
        energies.iter().copied().fold(T::neg_infinity(), T::max)
    };
    let w: Vec<T> = energies.iter().map(|&e| (-beta * (e - reference)).exp()).collect();
    let z: T = w.iter().copied().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Mean energy and variance of the Boltzmann distribution at `beta`.
fn boltzmann_moments<T: Real>(energies: &[T], beta: T) -> (T, T) {
    let w = boltzmann_weights(energies, beta);
    let mean: T = w.iter().zip(energies).map(|(p, e)| *p * *e).sum();
    let var: T = w
        .iter()
        .zip(energies)
        .map(|(p, e)| *p * (*e - mean) * (*e - mean))
        .sum();
    (mean, var)
}

/// Mean Boltzmann energy as a function of `beta`.
pub fn boltzmann_mean_energy<T: Real>(energies: &[T], beta: T) -> T {
    boltzmann_moments(energies, beta).0
}

/// Inverse temperature whose Boltzmann distribution has the same mean energy
/// as `weights`. The map `β ↦ ⟨E⟩_β` is strictly decreasing, so the root is
/// bracketed by doubling and then located by safeguarded Newton steps.
pub fn fit_boltzmann<T: Real>(weights: &WeightDistribution<T>) -> Result<BoltzmannFit<T>> {
    let energies = &weights.eigenvalues;
    let target = weights.mean_energy;
    let lo_e = energies.iter().copied().fold(T::infinity(), T::min);
    let hi_e = energies.iter().copied().fold(T::neg_infinity(), T::max);
    let width = hi_e - lo_e;
    if !(target > lo_e) {
        return Err(Error::SaturatedFit { positive: true });
    }
    if !(target < hi_e) {
        return Err(Error::SaturatedFit { positive: false });
    }
    let tol = T::lit(1e-12) * width;
    let mean0 = boltzmann_mean_energy(energies, T::zero());
    let beta = if (mean0 - target).abs() <= tol {
        T::zero()
    } else {
        // bracket [a, b] with mean(a) > target > mean(b)
        let sign = if target < mean0 { T::one() } else { -T::one() };
        let mut step = sign / width;
        let (mut a, mut b) = (T::zero(), step);
        while (boltzmann_mean_energy(energies, b) - target) * sign > T::zero() {
            a = b;
            step = step * T::lit(2.0);
            b = b + step;
            if !b.is_finite() {
                return Err(Error::SaturatedFit {
                    positive: sign > T::zero(),
                });
            }
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let mut x = (a + b) * T::lit(0.5);
        for _ in 0..FIT_MAX_ITERATIONS {
            let (m, var) = boltzmann_moments(energies, x);
            let r = m - target;
            if r.abs() <= tol {
                break;
            }
            if r > T::zero() {
                a = x;
            } else {
                b = x;
            }
            let newton = if var > T::zero() { x + r / var } else { T::nan() };
            x = if newton > a && newton < b {
                newton
            } else {
                (a + b) * T::lit(0.5)
            };
            if b - a <= T::epsilon() * x.abs().max(T::one()) {
                break;
            }
        }
        x
    };
    let fitted = boltzmann_weights(energies, beta);
    let l1_distance = weights.c.iter().zip(&fitted).map(|(c, b)| (*c - *b).abs()).sum();
    let kl_divergence = weights
        .c
        .iter()
        .zip(&fitted)
        .filter(|(c, _)| **c > T::zero())
        .map(|(c, b)| *c * (*c / *b).ln())
        .sum();
    Ok(BoltzmannFit {
        beta,
        weights: fitted,
        l1_distance,
        kl_divergence,
    })
}

/// One entry of a cross-frequency comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunDistance<T> {
    pub omega: T,
    pub l1_distance: T,
}

/// Frequencies ordered by L1 distance to their Boltzmann fit, closest first;
/// ties keep ascending frequency order.
pub fn compare_runs<T: Real>(fits: &[(T, BoltzmannFit<T>)]) -> Vec<RunDistance<T>> {
    let mut out: Vec<RunDistance<T>> = fits
        .iter()
        .map(|(omega, f)| RunDistance {
            omega: *omega,
            l1_distance: f.l1_distance,
        })
        .collect();
    out.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap_or(std::cmp::Ordering::Equal));
    out.sort_by(|a, b| {
        a.l1_distance
            .partial_cmp(&b.l1_distance)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    fn dist(c: Vec<f64>, e: Vec<f64>) -> WeightDistribution<f64> {
        finish(c, e, 1)
    }

    fn record(p: usize, amps: Vec<Cplx<f64>>) -> StroboscopicRecord<f64> {
        StroboscopicRecord {
            p,
            t_p: 0.0,
            state: QuantumState::new(amps, 0.0),
            boson_number: 0.0,
            mean_energy: 0.0,
            rapidities: None,
            weights: None,
        }
    }

    fn spectrum() -> SpectralDecomposition<f64> {
        let p = SectorParams::new(12, 4, 1.0, 5.0, 3.57).unwrap();
        diagonalize(&build_hamiltonian(&p, 5.0))
    }

    #[test]
    fn eigenvector_gives_indicator() {
        let spec = spectrum();
        let amps = spec.vectors[2].iter().map(|&x| real(x)).collect();
        let w = cycle_weights(&[record(1, amps)], &spec).unwrap();
        for (a, c) in w.c.iter().enumerate() {
            let expect = if a == 2 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-12);
        }
        assert!((w.mean_energy - spec.values[2]).abs() < 1e-10);
    }

    #[test]
    fn weights_sum_to_one_and_ignore_phases() {
        let spec = spectrum();
        let amps: Vec<_> = (0..5).map(|k| cplx(0.3 + k as f64, -0.2 * k as f64)).collect();
        let phased: Vec<_> = amps.iter().map(|a| a * cplx(0.0, 1.1).exp()).collect();
        let a = cycle_weights(
            &[record(0, amps.clone()), record(1, amps.clone()), record(2, phased)],
            &spec,
        )
        .unwrap();
        assert_eq!(a.cycles, 2);
        assert!((a.c.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let b = cycle_weights(&[record(1, amps)], &spec).unwrap();
        for (x, y) in a.c.iter().zip(&b.c) {
            assert!((x - y).abs() < 1e-14);
        }
        // flipping eigenvector signs changes nothing
        let mut flipped = spec.clone();
        flipped
            .vectors
            .iter_mut()
            .for_each(|v| v.iter_mut().for_each(|x| *x = -*x));
        let amps: Vec<_> = (0..5).map(|k| cplx(0.3 + k as f64, -0.2 * k as f64)).collect();
        let c = cycle_weights(&[record(1, amps)], &flipped).unwrap();
        for (x, y) in c.c.iter().zip(&b.c) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_average_is_an_error() {
        let spec = spectrum();
        assert!(matches!(cycle_weights(&[], &spec), Err(Error::EmptyAverage)));
        let amps = vec![real(1.0); 5];
        assert!(matches!(
            cycle_weights(&[record(0, amps)], &spec),
            Err(Error::EmptyAverage)
        ));
    }

    #[test]
    fn degenerate_cluster_is_merged() {
        let spec = SpectralDecomposition {
            values: vec![0.0, 1.0, 1.0],
            vectors: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        };
        let s = QuantumState::from_real(&[0.0, 1.0, 0.0], 0.0);
        let w = instantaneous_weights(&s, &spec).unwrap();
        assert_eq!(w, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn infinite_temperature_point() {
        let e = vec![-3.0, -1.0, 0.5, 4.0];
        let mean = e.iter().sum::<f64>() / 4.0;
        let fit = fit_boltzmann(&dist(vec![0.25; 4], e)).unwrap();
        assert!(fit.beta.abs() < 1e-12);
        assert!(fit.weights.iter().all(|w| (w - 0.25).abs() < 1e-12));
        assert!(fit.l1_distance < 1e-12);
        let _ = mean;
    }

    #[test]
    fn two_level_fit() {
        let fit = fit_boltzmann(&dist(vec![0.75, 0.25], vec![0.0, 1.0])).unwrap();
        assert!((fit.beta - 3f64.ln()).abs() < 1e-10);
        assert!((fit.beta - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn near_ground_state_mean_gives_large_beta() {
        let e = vec![0.0, 1.0, 2.0];
        let w = WeightDistribution {
            c: vec![1.0 - 2e-9, 1e-9, 1e-9],
            eigenvalues: e,
            mean_energy: 3e-9,
            cycles: 1,
        };
        let fit = fit_boltzmann(&w).unwrap();
        assert!(fit.beta > 15.0);
        assert!(fit.weights[0] > 1.0 - 1e-8);
    }

    #[test]
    fn saturated_fits() {
        let w = WeightDistribution {
            c: vec![1.0, 0.0],
            eigenvalues: vec![0.0, 1.0],
            mean_energy: 0.0,
            cycles: 1,
        };
        assert!(matches!(fit_boltzmann(&w), Err(Error::SaturatedFit { positive: true })));
        let w = WeightDistribution {
            c: vec![0.0, 1.0],
            eigenvalues: vec![0.0, 1.0],
            mean_energy: 1.0,
            cycles: 1,
        };
        assert!(matches!(
            fit_boltzmann(&w),
            Err(Error::SaturatedFit { positive: false })
        ));
    }

    #[test]
    fn inverted_population_has_negative_beta() {
        let w = dist(vec![0.1, 0.2, 0.7], vec![-1.0, 0.0, 2.0]);
        let fit = fit_boltzmann(&w).unwrap();
        assert!(fit.beta < 0.0);
        let m = boltzmann_mean_energy(&w.eigenvalues, fit.beta);
        assert!((m - w.mean_energy).abs() < 1e-8 * 3.0);
    }

    #[test]
    fn mean_energy_map_is_decreasing() {
        let e = spectrum().values;
        let betas: Vec<f64> = (0..100).map(|i| -2.0 + 4.0 * i as f64 / 99.0).collect();
        for w in betas.windows(2) {
            assert!(boltzmann_mean_energy(&e, w[1]) < boltzmann_mean_energy(&e, w[0]));
        }
    }

    #[test]
    fn comparison_ordering() {
        let fit = |l1: f64| BoltzmannFit {
            beta: 0.0,
            weights: vec![],
            l1_distance: l1,
            kl_divergence: 0.0,
        };
        let order = compare_runs(&[(3.57, fit(0.4)), (3.68, fit(0.05)), (3.75, fit(0.3))]);
        assert_eq!(order[0].omega, 3.68);
        assert_eq!(compare_runs(&[(1.0, fit(0.2))]).len(), 1);
        let ties = compare_runs(&[(3.0, fit(0.1)), (1.0, fit(0.1)), (2.0, fit(0.1))]);
        assert_eq!(ties.iter().map(|r| r.omega).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
    }
}
