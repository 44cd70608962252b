//! Fast randomized invariant checks, run by `tavis selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bethe::{bethe_amplitudes, extract_rapidities, offshell_identity_check, refine_static_roots, RapiditySet};
use crate::classical::{inozemtsev_force, inozemtsev_potential, pair_roots, rapidity_flow};
use crate::scalar::{cplx, inner};
use crate::sector::{build_hamiltonian, QuantumState, SectorParams};
use crate::spectral::{diagonalize, ground_state};
use crate::C64;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst.is_finite() && worst < tol,
        detail: format!("worst {worst:.3e} (tol {tol:.0e})"),
    }
}

fn random_roots(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..m)
            .map(|_| cplx(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)))
            .collect();
        let separated = v
            .iter()
            .enumerate()
            .all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).norm() > 0.3) && a.norm() > 0.3);
        if separated {
            return v;
        }
    }
}

fn sector() -> SectorParams<f64> {
    SectorParams::from_spin(6.0, 4, 1.0, 5.0, 3.57).expect("valid sector")
}

/// Runs every check with the given seed.
pub fn run_selftest(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = sector();
    let mut out = Vec::new();

    let spectrum = diagonalize(&build_hamiltonian(&params, 5.0));
    let h = build_hamiltonian(&params, 5.0);
    out.push(outcome("spectral residual", spectrum.max_residual(&h), 1e-10));
    out.push(outcome(
        "eigenvector orthonormality",
        spectrum.max_orthonormality_defect(),
        1e-12,
    ));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let roots = RapiditySet::from_values(&random_roots(&mut rng, 4));
        let back = bethe_amplitudes(&roots, &params).and_then(|(s, _)| extract_rapidities(&s, &params));
        let d = match back.and_then(|b| b.finite_values()) {
            Ok(b) => pair_roots(&roots.finite_values().unwrap_or_default(), &b).1,
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(d);
    }
    out.push(outcome("rapidity round trip", worst, 1e-8));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let roots = RapiditySet::from_values(&random_roots(&mut rng, 4));
        let delta = rng.gen_range(-6.0..6.0);
        worst = worst.max(offshell_identity_check(&roots, &params, delta).unwrap_or(f64::INFINITY));
    }
    out.push(outcome("off-shell identity", worst, 1e-9));

    let ground = ground_state(&params, 5.0);
    let stationary = extract_rapidities(&ground, &params)
        .and_then(|r| refine_static_roots(&r, &params, 5.0))
        .and_then(|(r, _)| rapidity_flow(&r, &params, 5.0))
        .map(|f| f.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    out.push(outcome("eigenstate roots are stationary", stationary, 1e-9));

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x: Vec<C64> = random_roots(&mut rng, 4).iter().map(|z| z.sqrt()).collect();
        let delta = rng.gen_range(-6.0..6.0);
        let ddot = rng.gen_range(-6.0..6.0);
        let force = match inozemtsev_force(&x, &params, delta, ddot) {
            Ok(f) => f,
            Err(_) => {
                worst = f64::INFINITY;
                continue;
            }
        };
        let h = 1e-5;
        for a in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[a] += h;
            xm[a] -= h;
            let vp = inozemtsev_potential(&xp, &params, delta, ddot).map(|v| v[a]);
            let vm = inozemtsev_potential(&xm, &params, delta, ddot).map(|v| v[a]);
            let d = match (vp, vm) {
                (Ok(p), Ok(m)) => (force[a] + (p - m) / (2.0 * h)).norm() / (1.0 + force[a].norm()),
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
        }
    }
    out.push(outcome("force is minus the potential gradient", worst, 1e-5));

    let amps: Vec<C64> = (0..5)
        .map(|_| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let state = QuantumState::new(amps, 0.0).normalized().expect("nonzero state");
    let total: f64 = spectrum
        .vectors
        .iter()
        .map(|v| inner(&QuantumState::from_real(v, 0.0).amplitudes, &state.amplitudes).norm_sqr())
        .sum();
    out.push(outcome("eigenbasis completeness", (total - 1.0).abs(), 1e-12));

    out
}
