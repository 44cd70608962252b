use num_complex::Complex64;
use tavis::classical::{integrate_flow_between, pair_roots};
use tavis::{
    extract_rapidities, ground_state, inozemtsev_force, integrate_flow, refine_static_roots, x_flow, x_variables,
    Drive, Error, FlowOptions, HaltReason, Rapidities, Sector,
};

fn sector(omega: f64) -> Sector {
    Sector::from_spin(6.0, 4, 1.0, 5.0, omega).unwrap()
}

fn onshell(p: &Sector, delta: f64) -> Rapidities {
    let set = extract_rapidities(&ground_state(p, delta), p).unwrap();
    refine_static_roots(&set, p, delta).unwrap().0
}

fn offshell_start() -> Rapidities {
    Rapidities::from_values(&[
        Complex64::new(5.9, -1.7),
        Complex64::new(7.1, -0.4),
        Complex64::new(6.4, 0.9),
        Complex64::new(7.3, 2.4),
    ])
}

#[test]
fn onshell_roots_stay_put_without_drive() {
    let p = sector(3.57);
    let drive = Drive::constant(5.0, 3.57);
    let start = onshell(&p, 5.0);
    let opts = FlowOptions {
        output_dt: Some(1.0),
        ..FlowOptions::default()
    };
    let traj = integrate_flow(&start, &p, &drive, 100.0, opts).unwrap();
    let v0 = start.finite_values().unwrap();
    let worst = traj
        .lambdas
        .iter()
        .map(|s| pair_roots(&v0, &s.finite_values().unwrap()).1)
        .fold(0.0, f64::max);
    assert!(*traj.times.last().unwrap() == 100.0);
    assert!(worst < 1e-8, "drift {worst}");
}

#[test]
fn driven_flow_is_time_reversible() {
    let p = sector(3.57);
    let drive = Drive::cosine(5.0, 3.57);
    let start = onshell(&p, 5.0);
    let t1 = drive.cycle_time(1);
    let opts = FlowOptions {
        rtol: 1e-12,
        atol: 1e-14,
        ..FlowOptions::default()
    };
    let fwd = integrate_flow(&start, &p, &drive, t1, opts).unwrap();
    let back = integrate_flow_between(fwd.lambdas.last().unwrap(), &p, &drive, t1, 0.0, opts).unwrap();
    assert_eq!(*back.times.last().unwrap(), 0.0);
    let d = pair_roots(
        &start.finite_values().unwrap(),
        &back.lambdas.last().unwrap().finite_values().unwrap(),
    )
    .1;
    assert!(d < 1e-7, "{d}");
}

/// Second differences of x along an integrated constant-Δ trajectory.
fn trajectory_acceleration_error(dt: f64) -> f64 {
    let p = sector(3.57);
    let delta = 5.0;
    let drive = Drive::constant(delta, 3.57);
    let opts = FlowOptions {
        rtol: 1e-13,
        atol: 1e-15,
        output_dt: Some(dt),
        ..FlowOptions::default()
    };
    let traj = integrate_flow(&offshell_start(), &p, &drive, 0.05, opts).unwrap();
    let xs: Vec<Vec<Complex64>> = traj.lambdas.iter().map(|s| x_variables(s).unwrap()).collect();
    let mut worst = 0.0f64;
    for i in 1..xs.len() - 1 {
        let f = inozemtsev_force(&xs[i], &p, delta, 0.0).unwrap();
        for a in 0..xs[i].len() {
            let acc = (xs[i + 1][a] - 2.0 * xs[i][a] + xs[i - 1][a]) / (dt * dt);
            worst = worst.max((acc - f[a]).norm() / (1.0 + f[a].norm()));
        }
    }
    worst
}

#[test]
fn trajectory_acceleration_matches_force() {
    let coarse = trajectory_acceleration_error(2e-3);
    let fine = trajectory_acceleration_error(1e-3);
    assert!(fine < 5e-3, "{fine}");
    let ratio = coarse / fine;
    assert!(
        (3.0..5.0).contains(&ratio),
        "second-order convergence expected, ratio {ratio}"
    );
}

#[test]
fn flow_derivative_matches_force() {
    let p = sector(3.57);
    let x = x_variables(&offshell_start()).unwrap();
    for delta in [-3.0, 0.0, 5.0] {
        let v = x_flow(&x, &p, delta).unwrap();
        let f = inozemtsev_force(&x, &p, delta, 0.0).unwrap();
        let err = |h: f64| {
            let xp: Vec<Complex64> = x.iter().zip(&v).map(|(a, b)| a + b * h).collect();
            let xm: Vec<Complex64> = x.iter().zip(&v).map(|(a, b)| a - b * h).collect();
            let (vp, vm) = (x_flow(&xp, &p, delta).unwrap(), x_flow(&xm, &p, delta).unwrap());
            (0..x.len())
                .map(|a| ((vp[a] - vm[a]) / (2.0 * h) - f[a]).norm() / (1.0 + f[a].norm()))
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-4), err(5e-5));
        assert!(e2 < 1e-6, "delta={delta}: {e2}");
        assert!((3.0..5.0).contains(&(e1 / e2)), "delta={delta}: ratio {}", e1 / e2);
    }
}

#[test]
fn colliding_start_halts_with_diagnostic() {
    let p = sector(3.57);
    let drive = Drive::cosine(5.0, 3.57);
    let z = Complex64::new(6.7, 0.66);
    let start = Rapidities::from_values(&[
        z,
        z + Complex64::new(5e-9, 0.0),
        Complex64::new(6.7, -2.1),
        Complex64::new(6.7, 2.1),
    ]);
    match integrate_flow(&start, &p, &drive, 1.0, FlowOptions::default()) {
        Err(Error::FlowHalted {
            reason: HaltReason::Collision,
            time,
        }) => assert_eq!(time, 0.0),
        other => panic!("expected a collision halt, got {other:?}"),
    }
}

#[test]
fn excessive_growth_halts_with_diagnostic() {
    let p = sector(3.57);
    let drive = Drive::cosine(5.0, 3.57);
    let opts = FlowOptions {
        blowup: 8.0,
        ..FlowOptions::default()
    };
    match integrate_flow(&offshell_start(), &p, &drive, 50.0, opts) {
        Err(Error::FlowHalted {
            reason: HaltReason::BlowUp,
            time,
        }) => assert!(time > 0.0),
        other => panic!("expected a blow-up halt, got {other:?}"),
    }
}
