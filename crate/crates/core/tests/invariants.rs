use num_complex::Complex64;
use proptest::prelude::*;
use tavis::classical::pair_roots;
use tavis::propagator::{step_in_gauge, Gauge};
use tavis::{
    bethe_amplitudes, bethe_energy, build_hamiltonian, diagonalize, energy_expectation, extract_rapidities,
    offshell_identity_check, rapidity_flow, Drive, Rapidities, Sector, State,
};

fn sector() -> Sector {
    Sector::from_spin(6.0, 4, 1.0, 5.0, 3.57).unwrap()
}

fn separated(v: &[Complex64], gap: f64) -> bool {
    v.iter()
        .enumerate()
        .all(|(i, a)| a.norm() > gap && v[i + 1..].iter().all(|b| (a - b).norm() > gap))
}

fn roots(m: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), m)
        .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect::<Vec<_>>())
        .prop_filter("separated roots", |v| separated(v, 0.2))
}

fn amplitudes(d: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d)
        .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect::<Vec<_>>())
        .prop_filter("leading amplitude", |v| {
            v[0].norm() > 1e-3 && v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn state_round_trip(amps in amplitudes(5)) {
        let p = sector();
        let psi = State::new(amps, 0.0).normalized().unwrap();
        let roots = extract_rapidities(&psi, &p).unwrap();
        let (back, _) = bethe_amplitudes(&roots, &p).unwrap();
        let overlap: Complex64 = psi.amplitudes.iter().zip(&back.amplitudes).map(|(a, b)| a.conj() * b).sum();
        prop_assert!(overlap.norm() > 1.0 - 1e-10, "overlap {}", overlap.norm());
    }

    #[test]
    fn roots_round_trip(v in roots(4)) {
        let p = sector();
        let (psi, _) = bethe_amplitudes(&Rapidities::from_values(&v), &p).unwrap();
        let back = extract_rapidities(&psi, &p).unwrap().finite_values().unwrap();
        prop_assert!(pair_roots(&v, &back).1 < 1e-8);
    }

    #[test]
    fn amplitudes_ignore_root_order(v in roots(4), shift in 1usize..4) {
        let p = sector();
        let mut w = v.clone();
        w.rotate_left(shift);
        w.swap(0, 1);
        let (a, na) = bethe_amplitudes(&Rapidities::from_values(&v), &p).unwrap();
        let (b, nb) = bethe_amplitudes(&Rapidities::from_values(&w), &p).unwrap();
        prop_assert!((na - nb).abs() < 1e-10 * na);
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn offshell_identity(v in roots(4), delta in -8.0..8.0f64) {
        let defect = offshell_identity_check(&Rapidities::from_values(&v), &sector(), delta).unwrap();
        prop_assert!(defect < 1e-9, "defect {defect}");
    }

    #[test]
    fn offshell_identity_other_sectors(v in roots(3), two_s in 3usize..9, delta in -4.0..4.0f64) {
        let p = Sector::new(two_s, 3, 0.6, delta, 1.0).unwrap();
        prop_assert!(offshell_identity_check(&Rapidities::from_values(&v), &p, delta).unwrap() < 1e-9);
    }

    #[test]
    fn flow_reproduces_schrodinger(v in roots(4), delta in -6.0..6.0f64) {
        // d/dt of the unnormalized Bethe vector along the flow equals −i(H − E_B)ψ
        // up to a multiple of ψ, so the projected velocity matches −iHψ.
        let p = sector();
        let set = Rapidities::from_values(&v);
        let lam_dot = rapidity_flow(&set, &p, delta).unwrap();
        let h = 1e-6;
        let fwd: Vec<Complex64> = v.iter().zip(&lam_dot).map(|(l, d)| l + d * h).collect();
        let bwd: Vec<Complex64> = v.iter().zip(&lam_dot).map(|(l, d)| l - d * h).collect();
        let (psi, _) = bethe_amplitudes(&set, &p).unwrap();
        let (pf, _) = bethe_amplitudes(&Rapidities::from_values(&fwd), &p).unwrap();
        let (pb, _) = bethe_amplitudes(&Rapidities::from_values(&bwd), &p).unwrap();
        // compare directions only: normalized states pick up a phase that we remove
        let hpsi = build_hamiltonian(&p, delta).apply(&psi.amplitudes).unwrap();
        let align = |s: &State| {
            let o: Complex64 = psi.amplitudes.iter().zip(&s.amplitudes).map(|(a, b)| a.conj() * b).sum();
            s.amplitudes.iter().map(|z| z * (o.conj() / o.norm())).collect::<Vec<_>>()
        };
        let (af, ab) = (align(&pf), align(&pb));
        let vel: Vec<Complex64> = af.iter().zip(&ab).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let e: Complex64 = psi.amplitudes.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
        let target: Vec<Complex64> = hpsi.iter().zip(&psi.amplitudes).map(|(hp, ps)| (hp - ps * e) * Complex64::new(0.0, -1.0)).collect();
        let scale = 1.0 + target.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in vel.iter().zip(&target) {
            prop_assert!((a - b).norm() < 1e-5 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn rk4_step_preserves_norm_and_energy_when_undriven(amps in amplitudes(5), dt in 1e-4..1e-3f64) {
        let p = sector();
        let drive = Drive::constant(5.0, 3.57);
        let psi = State::new(amps, 0.0).normalized().unwrap();
        let h = build_hamiltonian(&p, 5.0);
        let e0 = energy_expectation(&psi, &h).unwrap();
        let next = step_in_gauge(&psi, &p, &drive, 0.0, dt, Gauge::TraceShifted);
        prop_assert!((next.norm() - 1.0).abs() < 1e-12);
        prop_assert!((energy_expectation(&next, &h).unwrap() - e0).abs() < 1e-10 * (1.0 + e0.abs()));
    }
}

#[test]
fn every_eigenstate_is_on_shell() {
    for &(two_s, m, delta) in &[(12usize, 4usize, 5.0), (12, 4, -2.0), (6, 3, 0.7), (8, 5, 1.5)] {
        let p = Sector::new(two_s, m, 1.0, delta, 1.0).unwrap();
        let spec = diagonalize(&build_hamiltonian(&p, delta));
        for (e, vec) in spec.values.iter().zip(&spec.vectors) {
            let set = extract_rapidities(&State::from_real(vec, 0.0), &p).unwrap();
            let eb = bethe_energy(&set, &p, delta).unwrap();
            assert!(
                (eb.re - e).abs() < 1e-8 * e.abs().max(1.0) && eb.im.abs() < 1e-8 * e.abs().max(1.0),
                "{eb} vs {e}"
            );
        }
    }
}
