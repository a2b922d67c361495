use dispersive_vdw::experiments::{make_datum, DatumSpec};
use dispersive_vdw::integrate::{
    picard_solve, solve_full, solve_reduced, IntegratorConfig, Scheme, TerminalStatus,
};
use dispersive_vdw::normalform::{NormalFormSetting, ReducedState};
use dispersive_vdw::{Error, Grid, PressureLaw, State, SystemKind, SystemSpec};

fn final_state(spec: &SystemSpec, law: PressureLaw, d: &State, dt: f64, scheme: Scheme) -> State {
    let mut cfg = IntegratorConfig::new(dt, 0.02).unwrap();
    cfg.scheme = scheme;
    cfg.store_every = usize::MAX;
    let tr = solve_full(spec, law, d, &cfg).unwrap();
    assert_eq!(tr.status, TerminalStatus::Completed);
    tr.states.last().unwrap().clone()
}

fn observed_order(scheme: Scheme) -> f64 {
    let g = Grid::with_modes(8).unwrap();
    let law = PressureLaw::P1;
    let spec = SystemSpec::new(SystemKind::Regularized, 0.2, true, 0.2f64.sqrt()).unwrap();
    let d = make_datum(g, &DatumSpec::new(5, 0.15, law, false)).unwrap();
    let reference = final_state(&spec, law, &d, 1e-5 / 4.0, Scheme::ExpRk2);
    let err = |dt: f64| final_state(&spec, law, &d, dt, scheme).sub(&reference).h1_l2();
    let (e1, e2, e3) = (err(2e-4), err(1e-4), err(5e-5));
    ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0
}

#[test]
fn midpoint_scheme_is_second_order() {
    let p = observed_order(Scheme::ExpRk2);
    assert!((p - 2.0).abs() < 0.2, "order {p}");
}

#[test]
fn euler_scheme_is_first_order() {
    let p = observed_order(Scheme::ExpEuler);
    assert!((p - 1.0).abs() < 0.2, "order {p}");
}

#[test]
fn picard_contraction_weakens_with_horizon() {
    let eps: f64 = 0.1;
    let setting = NormalFormSetting::plain(eps, PressureLaw::P0, 0.0).unwrap();
    let g = Grid::with_modes(8).unwrap();
    let d = make_datum(g, &DatumSpec::new(3, 0.15, PressureLaw::P0, false)).unwrap();
    let ratios: Vec<f64> = [0.05, 0.1, 0.2, 0.4]
        .iter()
        .map(|c| {
            let (_, rep) = picard_solve(&setting, &d.u1, &d.u2, c * eps * eps, 50).unwrap();
            assert!(rep.converged);
            rep.contraction_ratios[0]
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] < w[1]), "{ratios:?}");
}

#[test]
fn reduced_solver_rejects_coarse_steps() {
    let setting = NormalFormSetting::plain(0.1, PressureLaw::P0, 0.0).unwrap();
    let g = Grid::with_modes(8).unwrap();
    let d = make_datum(g, &DatumSpec::new(1, 0.1, PressureLaw::P0, false)).unwrap();
    let cfg = IntegratorConfig::new(0.01, 0.1).unwrap();
    assert!(solve_reduced(&setting, &ReducedState::from_fields(d, 0.0), &cfg).is_err());
}

#[test]
fn nonzero_mean_datum_is_rejected() {
    let g = Grid::with_modes(8).unwrap();
    let mut d = make_datum(g, &DatumSpec::new(1, 0.1, PressureLaw::P0, false)).unwrap();
    d.u1.set_mode(0, dispersive_vdw::C64::new(0.01, 0.0));
    let spec = SystemSpec::new(SystemKind::Regularized, 0.1, true, 1.0).unwrap();
    let cfg = IntegratorConfig::new(1e-4, 1e-3).unwrap();
    assert!(matches!(
        solve_full(&spec, PressureLaw::P0, &d, &cfg),
        Err(Error::NonZeroMean(_))
    ));
}

/// The unrescaled regularized system is linearly unstable for `ε|k| < 2`, so
/// a fixed threshold is crossed, and crossed sooner from larger data.
#[test]
fn blowup_time_decreases_with_datum_size() {
    let g = Grid::with_modes(8).unwrap();
    let spec = SystemSpec::new(SystemKind::Regularized, 0.5, false, 1.0).unwrap();
    let mut times = vec![];
    for target in [0.02, 0.05, 0.1] {
        let d = make_datum(g, &DatumSpec::new(9, target, PressureLaw::P0, false)).unwrap();
        let mut cfg = IntegratorConfig::new(1e-3, 50.0).unwrap();
        cfg.blowup_threshold = 0.5;
        let tr = solve_full(&spec, PressureLaw::P0, &d, &cfg).unwrap();
        let t = tr.status.blowup_time().expect("threshold crossed");
        let last = tr.diagnostics.last().unwrap().proxy();
        assert!((last - 0.5).abs() < 0.5 * 2e-3, "proxy at detection {last}");
        times.push(t);
    }
    assert!(times.windows(2).all(|w| w[0] > w[1]), "{times:?}");
}

#[test]
fn energy_drift_shrinks_with_step() {
    let g = Grid::with_modes(8).unwrap();
    let law = PressureLaw::P2;
    let spec = SystemSpec::new(SystemKind::Regularized, 0.2, true, 0.2f64.powf(0.25)).unwrap();
    let d = make_datum(g, &DatumSpec::new(2, 0.15, law, false)).unwrap();
    let drift = |dt: f64| {
        let tr = solve_full(&spec, law, &d, &IntegratorConfig::new(dt, 0.05).unwrap()).unwrap();
        let e0 = tr.diagnostics[0].energy;
        tr.diagnostics
            .iter()
            .map(|x| (x.energy - e0).abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (drift(1e-4), drift(5e-5));
    assert!(b < a / 3.0 && a < 1e-6, "{a:e} {b:e}");
}
