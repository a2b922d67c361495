//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p dispersive-vdw --test acceptance -- --nocapture`.

use std::time::Instant;

use rayon::prelude::*;

use dispersive_vdw::experiments::{
    continuation_schedule, energy_inequality, growth_experiment, lemma_m_suite,
    make_datum, scaling_sweep, DatumSpec, SweepTiming,
};
use dispersive_vdw::integrate::{
    picard_solve, setting_for, solve_full, solve_reduced, IntegratorConfig, Scheme, TerminalStatus,
};
use dispersive_vdw::jets::{
    choose_n, f_n, ibp_once_p2, implicit_residual, verify_fn_bound, IbpCoefficients,
};
use dispersive_vdw::normalform::{
    additive_remainder, cancellation_residual, full_to_reduced, reduced_to_full,
    NormalFormSetting, ReducedState,
};
use dispersive_vdw::spectral::random_field;
use dispersive_vdw::{Grid, PressureLaw, SpectralField, State, SystemKind, SystemSpec, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const SWEEP_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

fn criterion_1() -> Outcome {
    let r = lemma_m_suite(1, 64, &[0.0, 1.0, 2.0]).unwrap();
    outcome(
        r.passed && r.max_residual() < 1e-10,
        format!(
            "multiplier identities on {} fields, K=64: max residual {:.2e} (antiderivative {:.1e}, inverse {:.1e}, second {:.1e}, sobolev {:.1e}, pointwise {:.1e})",
            r.n_fields,
            r.max_residual(),
            r.antiderivative,
            r.derivative_inverse,
            r.second_derivative,
            r.sobolev_equality,
            r.pointwise
        ),
    )
}

fn criterion_2() -> Outcome {
    let g = Grid::with_modes(64).unwrap();
    let plain = NormalFormSetting::plain(0.1, PressureLaw::P0, 0.0).unwrap();
    let conj = NormalFormSetting::modified(0.1, 0.2).unwrap();
    let (mut wp, mut wc) = (0.0f64, 0.0f64);
    for seed in 0..100 {
        let st = State::new(random_field(g, seed, 64), random_field(g, seed + 500, 64)).unwrap();
        wp = wp.max(cancellation_residual(&plain, &st));
        wc = wc.max(cancellation_residual(&conj, &st));
    }
    outcome(
        wp < 1e-12 && wc < 1e-12,
        format!("100 states, K=64: plain {wp:.2e}, conjugated {wc:.2e} (< 1e-12)"),
    )
}

/// Relative energy drift and mean drift of one conservation run.
fn conservation_run(kind: SystemKind, law: PressureLaw, amp: f64, dt: f64) -> (f64, f64) {
    let g = Grid::with_modes(16).unwrap();
    let conj = kind == SystemKind::Modified;
    let datum = make_datum(g, &DatumSpec::new(7, 0.15, law, conj)).unwrap();
    let spec = SystemSpec::new(kind, 0.05, true, amp).unwrap();
    let mut cfg = IntegratorConfig::new(dt, 0.2).unwrap();
    cfg.store_every = 100;
    let tr = solve_full(&spec, law, &datum, &cfg).unwrap();
    assert_eq!(tr.status, TerminalStatus::Completed);
    let e0 = tr.diagnostics[0].energy;
    let drift = tr
        .diagnostics
        .iter()
        .map(|d| (d.energy - e0).abs())
        .fold(0.0, f64::max)
        / e0.abs().max(1.0);
    let m0 = &tr.states[0];
    let mean = tr
        .states
        .iter()
        .map(|s| {
            (s.u1.mean() - m0.u1.mean())
                .norm()
                .max((s.u2.mean() - m0.u2.mean()).norm())
        })
        .fold(0.0, f64::max);
    (drift, mean)
}

fn criterion_3() -> Outcome {
    let eps: f64 = 0.05;
    let cases = [
        (SystemKind::Regularized, PressureLaw::P1, eps.powf(0.5)),
        (SystemKind::Regularized, PressureLaw::P2, eps.powf(0.25)),
        (SystemKind::Modified, PressureLaw::P0, 0.2),
    ];
    let dt = 5e-6;
    let res: Vec<_> = cases
        .par_iter()
        .map(|&(k, l, a)| {
            let (d1, m1) = conservation_run(k, l, a, dt);
            let (d2, m2) = conservation_run(k, l, a, dt / 2.0);
            (k, l, d1, d2, m1.max(m2))
        })
        .collect();
    let mut pass = true;
    let mut parts = vec![];
    for (k, l, d1, d2, m) in res {
        let order = (d1 / d2).log2();
        let ok = d1 < 1e-6 && m < 1e-12 && order >= 1.8;
        pass &= ok;
        parts.push(format!(
            "{k}-{l}: drift {d1:.2e}, order {order:.2}, mean {m:.1e}{}",
            if ok { "" } else { " [violated]" }
        ));
    }
    outcome(pass, format!("eps=0.05, t_end=0.2: {}", parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let g = Grid::with_modes(16).unwrap();
    let mut pass = true;
    let mut parts = vec![];
    for eps in [0.1f64, 0.05] {
        let cases = [
            (SystemKind::Regularized, PressureLaw::P0, 1.0),
            (SystemKind::Regularized, PressureLaw::P1, eps.sqrt()),
            (SystemKind::Regularized, PressureLaw::P2, eps.powf(0.25)),
            (SystemKind::Modified, PressureLaw::P0, 0.2),
        ];
        for (kind, law, a) in cases {
            let spec = SystemSpec::new(kind, eps, true, a).unwrap();
            let setting = setting_for(&spec, law).unwrap();
            let d = make_datum(g, &DatumSpec::new(3, 0.15, law, kind == SystemKind::Modified))
                .unwrap();
            let tf = 0.1 * eps * eps;
            let dt = tf / 200.0;
            let cfg = IntegratorConfig::new(dt, tf).unwrap();
            let full = solve_full(&spec, law, &d, &cfg).unwrap();
            let red = solve_reduced(&setting, &full_to_reduced(&setting, &d, 0.0), &cfg).unwrap();
            let back = reduced_to_full(&setting, red.states.last().unwrap());
            let f = full.states.last().unwrap();
            let err = (&back.u1 - &f.u1).h1().max((&back.u2 - &f.u2).l2());
            let tol = (10.0 * dt).max(1e-7);
            pass &= err < tol;
            parts.push(format!("{kind}-{law}@{eps}: {err:.1e}"));
        }
    }
    outcome(
        pass,
        format!("H1xL2 discrepancy at t=0.1eps^2 vs max(10dt,1e-7): {}", parts.join(", ")),
    )
}

/// `f_{n}` by literal recursion `f_{n} = f'_{n-1} f`, each derivative the
/// first Taylor coefficient of a polynomial in `z`, extracted on a circle.
fn literal_f(u: &SpectralField, n: usize) -> SpectralField {
    fn f0(u: &SpectralField) -> SpectralField {
        let g = *u.grid();
        let k = g.n_modes() as i64;
        let mut out = SpectralField::zeros(g);
        for a in -k..=k {
            for b in -k..=k {
                for c in -k..=k {
                    let s = a + b + c;
                    if s != 0 && s.abs() <= k {
                        let v = out.mode(s) + u.mode(a) * u.mode(b) * u.mode(c);
                        out.set_mode(s, v);
                    }
                }
            }
        }
        out
    }
    if n == 0 {
        return f0(u);
    }
    let h = f0(u);
    let m = 2 * n + 3;
    let r = u.l2() / h.l2().max(1e-300);
    let mut acc = SpectralField::zeros(*u.grid());
    for j in 0..m {
        let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
        let val = literal_f(&(u + &h.scale(z)), n - 1);
        acc.axpy(1.0 / (z * m as f64), &val);
    }
    acc
}

fn reduced_reference(
    setting: &NormalFormSetting,
    law: PressureLaw,
    conj: bool,
    dt: f64,
) -> (Vec<f64>, Vec<SpectralField>, Vec<SpectralField>) {
    let g = Grid::with_modes(4).unwrap();
    let mut ds = DatumSpec::new(3, 0.15, law, conj);
    ds.mode_band = (1, 3);
    let d = make_datum(g, &ds).unwrap();
    let cfg = IntegratorConfig::new(dt, 0.01).unwrap();
    let tr = solve_reduced(setting, &ReducedState::from_fields(d, 0.0), &cfg).unwrap();
    let w1 = tr.states.iter().map(|s| s.w1.clone()).collect();
    let r1 = tr
        .states
        .iter()
        .map(|s| additive_remainder(setting, s))
        .collect();
    (tr.times, w1, r1)
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    // jets against the literal recursion
    let g = Grid::with_modes(4).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let u = random_field(g, 40 + seed, 4).remove_mean().scale_real(0.6);
        for n in 0..=4 {
            let a = f_n(&u, n).unwrap();
            let b = literal_f(&u, n);
            worst = worst.max((&a - &b).l2() / b.l2().max(1.0));
        }
    }
    pass &= worst < 1e-10;
    parts.push(format!("jets vs literal recursion (n<=4) {worst:.1e}"));
    // implicit representations along reduced trajectories
    let eps = 0.1;
    let dt = 1e-5;
    let tol = 5.0 * dt + 1e-8;
    for conj in [false, true] {
        let lam = 0.5;
        let setting = NormalFormSetting::new(eps, conj, PressureLaw::P0, lam).unwrap();
        let (t, w1, r1) = reduced_reference(&setting, PressureLaw::P0, conj, dt);
        for n in [1, 2] {
            let mut co = IbpCoefficients::new(n, lam, eps, 2.0).unwrap();
            if conj {
                co = co.conjugate_orientation();
            }
            let res = implicit_residual(&t, &w1, &r1, &co).unwrap();
            pass &= res < tol;
            parts.push(format!(
                "{} n={n} residual {res:.1e}",
                if conj { "modified" } else { "plain" }
            ));
        }
    }
    let setting = NormalFormSetting::plain(eps, PressureLaw::P2, 0.25).unwrap();
    let (t, w1, r1) = reduced_reference(&setting, PressureLaw::P2, false, dt);
    let res = ibp_once_p2(&t, &w1, &r1, 0.25, eps).unwrap();
    pass &= res < tol;
    parts.push(format!("p2 single IBP residual {res:.1e} (tol {tol:.1e})"));
    // printed bound on f_n over random fields
    let g = Grid::with_modes(16).unwrap();
    let mut ratio: f64 = 0.0;
    let mut corrected: f64 = 0.0;
    for seed in 0..50 {
        let u = random_field(g, 900 + seed, 8).remove_mean();
        for n in 1..=6 {
            let r = verify_fn_bound(&u, n).unwrap();
            ratio = ratio.max(r.ratio);
            corrected = corrected.max(r.degree_corrected_ratio);
        }
    }
    let bound_ok = ratio <= 1.0;
    pass &= bound_ok;
    parts.push(format!(
        "f_n bound: worst norm/bound {ratio:.3}{} (with factor 2n+3: {corrected:.3})",
        if bound_ok { "" } else { " [violated]" }
    ));
    outcome(pass, parts.join("; "))
}

fn order_condition(c_lambda: f64, eps: f64, n: usize) -> bool {
    (2 * n + 1) as f64 * c_lambda.powf(2.0 * (n + 1) as f64) <= eps
}

fn criterion_6() -> Outcome {
    let worked = [(0.1, 2usize), (1e-3, 6), (0.9, 1)];
    let mut pass = true;
    let mut parts = vec![];
    for (eps, want) in worked {
        let n = choose_n(0.5, eps, 1.0).unwrap();
        pass &= n == want;
        parts.push(format!("eps={eps}: {n}"));
    }
    let mut checked = 0;
    for i in 1..50 {
        let cl = i as f64 / 50.0;
        for e in [0.5, 0.1, 1e-2, 1e-3, 1e-5, 1e-8] {
            let n = choose_n(cl, e, 1.0).unwrap();
            pass &= order_condition(cl, e, n) && (n == 1 || !order_condition(cl, e, n - 1));
            checked += 1;
        }
    }
    outcome(
        pass,
        format!("c*lambda=0.5 {}; condition and minimality on {checked} pairs", parts.join(", ")),
    )
}

fn criterion_7() -> Outcome {
    let datum = DatumSpec::new(7, 0.15, PressureLaw::P0, false);
    let timing = SweepTiming {
        dt_coeff: 0.01,
        dt_power: 2.0,
        t_end_coeff: 100.0,
        t_end_power: 2.0,
        rho_max: 1.0,
        scheme: Scheme::ExpRk2,
    };
    let r = scaling_sweep(
        SystemKind::Regularized,
        PressureLaw::P0,
        0.0,
        &SWEEP_EPS,
        16,
        datum,
        timing,
    )
    .unwrap();
    let rows: Vec<String> = r
        .rows
        .iter()
        .map(|row| {
            format!(
                "eps={} {} max proxy {:.3}",
                row.epsilon, row.outcome.status, row.outcome.max_proxy
            )
        })
        .collect();
    match r.fit {
        Some(f) => outcome(
            (f.slope - 2.0).abs() <= 0.4,
            format!("slope {:.3} (residual {:.2e}); {}", f.slope, f.residual, rows.join(", ")),
        ),
        None => outcome(false, format!("{} up to t_end=100eps^2; {}", r.note, rows.join(", "))),
    }
}

fn criterion_8() -> Outcome {
    let mut jobs = vec![];
    for &eps in &SWEEP_EPS {
        jobs.push((SystemKind::Regularized, PressureLaw::P1, eps, eps.powf(0.5)));
        jobs.push((SystemKind::Regularized, PressureLaw::P2, eps, eps.powf(0.25)));
        jobs.push((SystemKind::Modified, PressureLaw::P0, eps, 0.2));
    }
    let results: Vec<(String, bool, bool, f64)> = jobs
        .par_iter()
        .map(|&(kind, law, eps, amp)| {
            let g = Grid::with_modes(16).unwrap();
            let conj = kind == SystemKind::Modified;
            let d = make_datum(g, &DatumSpec::new(11, 0.15, law, conj)).unwrap();
            let spec = SystemSpec::new(kind, eps, true, amp).unwrap();
            let setting = setting_for(&spec, law).unwrap();
            let mut cfg = IntegratorConfig::new(0.1 * eps * eps, 0.5).unwrap();
            cfg.store_every = 10;
            let tr = solve_full(&spec, law, &d, &cfg).unwrap();
            let bounded = tr.status == TerminalStatus::Completed;
            let ineq = tr.states.iter().zip(&tr.times).all(|(s, &t)| {
                let w = full_to_reduced(&setting, s, t);
                energy_inequality(law, conj, eps, amp, &w).is_none_or(|e| e.holds)
            });
            (format!("{kind}-{law}@{eps}"), bounded, ineq, tr.max_proxy())
        })
        .collect();
    let pass = results.iter().all(|r| r.1 && r.2);
    let worst = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !(r.1 && r.2))
        .map(|r| r.0.as_str())
        .collect();
    outcome(
        pass,
        format!(
            "{} runs to t_end=0.5, max proxy {worst:.3}; failures: {}",
            results.len(),
            if failed.is_empty() { "none".into() } else { failed.join(", ") }
        ),
    )
}

fn criterion_9() -> Outcome {
    let rows = growth_experiment(PressureLaw::P0, 0.0, &[1, 2, 4, 8]).unwrap();
    let mut pass = true;
    let mut parts = vec![];
    for r in &rows {
        let rel = (r.measured - r.predicted).abs() / r.predicted;
        pass &= rel < 0.01;
        parts.push(format!("k={} {:.6} vs {:.6}", r.k, r.measured, r.predicted));
    }
    let hyp = growth_experiment(PressureLaw::P0, 1.0, &[1, 2, 4, 8]).unwrap();
    let h = hyp.iter().map(|r| r.measured.abs()).fold(0.0, f64::max);
    pass &= h < 1e-6;
    outcome(pass, format!("{}; hyperbolic max rate {h:.1e}", parts.join(", ")))
}

fn criterion_10() -> Outcome {
    let mut pass = true;
    let mut parts = vec![];
    for eps in [0.1f64, 0.05] {
        let setting = NormalFormSetting::plain(eps, PressureLaw::P0, 0.0).unwrap();
        let g = Grid::with_modes(8).unwrap();
        let d = make_datum(g, &DatumSpec::new(3, 0.15, PressureLaw::P0, false)).unwrap();
        let tf = 0.1 * eps * eps;
        let (traj, rep) = picard_solve(&setting, &d.u1, &d.u2, tf, 50).unwrap();
        let dt = tf / (traj.len() - 1) as f64;
        let cfg = IntegratorConfig::new(dt, tf).unwrap();
        let st = solve_reduced(&setting, &ReducedState::from_fields(d, 0.0), &cfg).unwrap();
        let err = traj
            .iter()
            .zip(&st.states)
            .map(|(a, b)| (&a.w1 - &b.w1).h1().max((&a.w2 - &b.w2).l2()))
            .fold(0.0, f64::max);
        let ratio = rep.contraction_ratios.iter().cloned().fold(0.0, f64::max);
        let ok = rep.converged && ratio < 1.0 && err < (5.0 * dt).max(1e-7);
        pass &= ok;
        parts.push(format!(
            "eps={eps}: {} iterates, max ratio {ratio:.1e}, vs stepper {err:.1e}",
            rep.iterates
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_11() -> Outcome {
    let s = continuation_schedule(0.5, 0.01, 0.5, 1.0, 1.0).unwrap();
    let exact = s.time_sequence[0] == 0.02 && s.rho_sequence[1] == 0.72 && s.j_star == 11;
    outcome(
        exact && s.bracketing_holds,
        format!(
            "T0={} rho1={} j={}; bracketing {} (first radius above 2rho at k={:?}, rho_j={:.4})",
            s.time_sequence[0],
            s.rho_sequence[1],
            s.j_star,
            if s.bracketing_holds { "holds" } else { "fails" },
            s.first_violation,
            s.rho_sequence[s.j_star]
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance_suite() {
    let criteria: [Criterion; 11] = [
        ("multiplier identities", criterion_1),
        ("key cancellation", criterion_2),
        ("conservation", criterion_3),
        ("transform consistency", criterion_4),
        ("jets and IBP", criterion_5),
        ("IBP order selection", criterion_6),
        ("short-time scaling", criterion_7),
        ("O(1) boundedness", criterion_8),
        ("elliptic growth", criterion_9),
        ("Picard iteration", criterion_10),
        ("continuation arithmetic", criterion_11),
    ];
    let mut failed = vec![];
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = run();
        let line = format!(
            "{} {:>2} {name}: {} [{:.2} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        println!("{line}");
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
