use std::f64::consts::PI;

use ilc_core::config::{DeletedRows, InitialInput, Mode, PlantParams, SystemKind, TrajectorySpec};
use ilc_core::{
    analytic_first_order_response, discretize_zoh, explicit_model_iterations, geometric_sum,
    load_config, make_second_order, write_config, DiscreteStateSpace, ExperimentConfig,
    FastForward, FirstOrderFeedbackSpec, GainMatrix, LawKind, LearningLaw, LearningProblem,
    LiftedSystem, Phase, Trajectory,
};
use nalgebra::{DMatrix, DVector, RowDVector};
use proptest::prelude::*;

fn plant_strategy() -> impl Strategy<Value = DiscreteStateSpace> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..1.0, n * n),
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
                0.1f64..0.95,
                Just(n),
            )
        })
        .prop_filter_map("needs a non-zero first Markov parameter", |(a, b, c, radius, n)| {
            let mut a = DMatrix::from_row_slice(n, n, &a);
            let rho = a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
            if rho > 0.0 {
                a *= radius / rho;
            }
            let b = DVector::from_vec(b);
            let c = RowDVector::from_vec(c);
            let cb = (&c * &b)[0];
            (cb.abs() > 0.05).then(|| DiscreteStateSpace::new(a, b, c, 0.01).unwrap())
        })
}

fn law_strategy() -> impl Strategy<Value = LawKind> {
    prop::sample::select(LawKind::ALL.to_vec())
}

fn markov(dss: &DiscreteStateSpace, count: usize) -> Vec<f64> {
    let mut x = dss.bd().clone();
    (0..count)
        .map(|_| {
            let h = (dss.c() * &x)[0];
            x = dss.ad() * &x;
            h
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn lifted_output_matches_simulation(
        plant in plant_strategy(),
        n in 1usize..30,
        seed in prop::collection::vec(-2.0f64..2.0, 30),
        x0 in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let lifted = LiftedSystem::build(&plant, n).unwrap();
        let u = DVector::from_column_slice(&seed[..n]);
        let x0 = DVector::from_column_slice(&x0[..plant.order()]);
        let y = lifted.output(&Trajectory::input(u.clone(), 0.01), &x0).unwrap();
        let sim = plant.simulate(u.as_slice(), &x0).unwrap();
        let scale = sim.amax().max(1.0);
        prop_assert!((y.values() - &sim).amax() <= 1e-12 * scale);
    }

    #[test]
    fn toeplitz_entries_are_markov_parameters(plant in plant_strategy(), n in 1usize..25, d in 0usize..3) {
        prop_assume!(d < n);
        let lifted = LiftedSystem::build(&plant, n).unwrap().delete_rows(d).unwrap();
        let h = markov(&plant, n);
        for i in 0..n - d {
            for j in 0..n {
                let expected = if j <= i + d { h[i + d - j] } else { 0.0 };
                prop_assert!((lifted.p()[(i, j)] - expected).abs() <= 1e-14 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn output_is_linear_in_input(
        plant in plant_strategy(),
        u in prop::collection::vec(-1.0f64..1.0, 12),
        v in prop::collection::vec(-1.0f64..1.0, 12),
        alpha in -3.0f64..3.0,
    ) {
        let lifted = LiftedSystem::build(&plant, 12).unwrap();
        let zero = DVector::zeros(plant.order());
        let out = |w: DVector<f64>| lifted.output(&Trajectory::input(w, 0.01), &zero).unwrap().into_values();
        let u = DVector::from_vec(u);
        let v = DVector::from_vec(v);
        let combined = out(&u * alpha + &v);
        let separate = out(u) * alpha + out(v);
        prop_assert!((combined - &separate).amax() <= 1e-12 * separate.amax().max(1.0));
    }

    #[test]
    fn geometric_sum_matches_direct_summation(
        lambdas in prop::collection::vec(-0.999f64..0.999, 1..20),
        n in 0usize..300,
    ) {
        let sums = geometric_sum(&lambdas, n).unwrap();
        for (l, s) in lambdas.iter().zip(&sums) {
            let direct: f64 = (0..=n).map(|m| l.powi(m as i32)).sum();
            prop_assert!((s - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{l} {n}: {s} vs {direct}");
        }
    }

    #[test]
    fn fast_forward_equals_explicit(
        plant in plant_strategy(),
        kind in law_strategy(),
        gain in 0.05f64..1.5,
        n_iter in prop::sample::select(vec![0usize, 1, 7, 50, 100]),
        horizon in 3usize..30,
        seed in prop::collection::vec(-1.0f64..1.0, 60),
    ) {
        let lifted = LiftedSystem::build(&plant, horizon).unwrap();
        let law = LearningLaw::new(kind, gain).unwrap();
        let ff = match FastForward::new(&lifted, law) {
            Ok(ff) => ff,
            // gains too large for this plant diverge and are rejected up front
            Err(_) => return Ok(()),
        };
        let u0 = Trajectory::input(DVector::from_column_slice(&seed[..horizon]), 0.01);
        let e0 = Trajectory::new(DVector::from_column_slice(&seed[30..30 + horizon]), 1, 0.01);
        let fast = ff.advance(&u0, &e0, n_iter).unwrap();
        let g = ff.iteration_matrix().clone();
        let slow = explicit_model_iterations(ff.gain(), &g, &u0, &e0, n_iter);
        let du = (fast.input.values() - slow.input.values()).norm();
        let de = (fast.error.values() - slow.error.values()).norm();
        prop_assert!(du <= 1e-8 * slow.input.values().norm().max(1.0), "input {du:e}");
        prop_assert!(de <= 1e-8 * slow.error.values().norm().max(1.0), "error {de:e}");
    }

    #[test]
    fn partial_isometry_gain_preserves_norm(plant in plant_strategy(), n in 2usize..25, e in prop::collection::vec(-1.0f64..1.0, 25)) {
        let lifted = LiftedSystem::build(&plant, n).unwrap();
        let sigma_min = lifted.singular_values().min();
        prop_assume!(sigma_min > 1e-8 * lifted.singular_values().max());
        let gain = GainMatrix::build(LearningLaw::new(LawKind::PartialIsometry, 1.0).unwrap(), &lifted).unwrap();
        let e = DVector::from_column_slice(&e[..n]);
        let le = gain.matrix() * &e;
        prop_assert!((le.norm() - e.norm()).abs() <= 1e-10 * e.norm().max(1.0));
    }

    #[test]
    fn small_gain_contracts_error(plant in plant_strategy(), kind in law_strategy(), n in 2usize..25, e in prop::collection::vec(-1.0f64..1.0, 25)) {
        let lifted = LiftedSystem::build(&plant, n).unwrap();
        let sigma_max = lifted.singular_values().max();
        // below 2 / sigma^2 (or 2 / sigma) every eigenvalue lies in (-1, 1]
        let phi = match kind {
            LawKind::PTranspose => 1.0 / (sigma_max * sigma_max),
            LawKind::PartialIsometry => 1.0 / sigma_max,
            LawKind::NormOptimal => 1.0,
        };
        let gain = GainMatrix::build(LearningLaw::new(kind, phi).unwrap(), &lifted).unwrap();
        let g = gain.iteration_matrix(&lifted).unwrap();
        let e = DVector::from_column_slice(&e[..n]);
        prop_assert!((&g * &e).norm() <= e.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn pseudo_inverse_is_minimum_norm(plant in plant_strategy(), n in 3usize..20, d in 0usize..2, y in prop::collection::vec(-1.0f64..1.0, 20), z in prop::collection::vec(-1.0f64..1.0, 20)) {
        let lifted = LiftedSystem::build(&plant, n).unwrap().delete_rows(d).unwrap();
        let sv = lifted.singular_values();
        prop_assume!(sv.min() > 1e-6 * sv.max());
        let x0 = DVector::zeros(plant.order());
        let yd = Trajectory::new(DVector::from_column_slice(&y[..n - d]), 1 + d, 0.01);
        let u = lifted.pseudo_inverse_input(&yd, &x0).unwrap();
        let reached = lifted.output(&u, &x0).unwrap();
        prop_assert!((reached.values() - yd.values()).amax() <= 1e-8 * (1.0 + sv.max() / sv.min()));
        if d > 0 {
            // adding a null-space component of P_D never shortens the input
            let p = lifted.p();
            let w = DVector::from_column_slice(&z[..n]);
            let projector = p.transpose() * (p * p.transpose()).try_inverse().unwrap() * p;
            let null_part = &w - projector * &w;
            let other = u.values() + &null_part;
            prop_assert!(other.norm() + 1e-9 >= u.values().norm());
        }
    }

    #[test]
    fn first_order_oracle(a in -1.0f64..6.0, k in 0.5f64..10.0, y0 in -2.0f64..2.0, cmds in prop::collection::vec(-2.0f64..2.0, 100)) {
        let spec = FirstOrderFeedbackSpec::new(a, k, y0).unwrap();
        let t = 0.01;
        let dss = discretize_zoh(&spec.closed_loop(), t).unwrap();
        let y = dss.simulate(&cmds, &DVector::from_element(1, y0)).unwrap();
        for step in [1usize, 2, 17, 50, 99, 100] {
            let analytic = analytic_first_order_response(&spec, |tau| cmds[((tau / t).floor() as usize).min(99)], step as f64 * t);
            prop_assert!((y[step - 1] - analytic).abs() <= 1e-8);
        }
    }
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    let plant = |third: bool| {
        (0.05f64..2.0, 1.0f64..80.0, 0.5f64..20.0).prop_map(move |(z, w, a)| PlantParams {
            damping_ratio: z,
            natural_frequency: w,
            real_pole: third.then_some(a),
        })
    };
    any::<bool>().prop_flat_map(move |third| {
        (
            (plant(third), plant(third), 1e-4f64..0.1, 1usize..200, prop::option::of(0usize..3)),
            (-5.0f64..5.0, -50.0f64..50.0, 0.5f64..4.0, law_strategy(), 0.01f64..10.0),
            (
                prop::sample::select(vec![
                    InitialInput::DesiredOutput,
                    InitialInput::Zero,
                    InitialInput::File("inputs/u0.txt".into()),
                ]),
                prop::option::of(prop::collection::vec(-1.0f64..1.0, if third { 3 } else { 2 })),
                prop::sample::select(vec![Mode::Model, Mode::World, Mode::Hybrid]),
                0usize..500,
                0usize..500,
            ),
            (prop::collection::vec(1usize..300, 0..4), -3.0f64..3.0, any::<bool>()),
        )
            .prop_map(move |((model, world, t, horizon, d), (amp, freq, p, law, gain), (u0, x0, mode, mc, wc), (cands, slope, plot))| {
                ExperimentConfig {
                    system_kind: if third { SystemKind::ThirdOrder } else { SystemKind::SecondOrder },
                    model,
                    world,
                    sample_period: t,
                    horizon,
                    deleted_rows: match d {
                        Some(d) if d < horizon => DeletedRows::Fixed(d),
                        _ => DeletedRows::Auto,
                    },
                    trajectory: TrajectorySpec {
                        amplitude_coefficient: amp,
                        angular_frequency_coefficient: freq,
                        exponent: p,
                    },
                    law_kind: law,
                    gain,
                    initial_input: u0,
                    initial_state: x0,
                    mode,
                    model_count: mc,
                    world_count: wc,
                    switch_candidates: cands,
                    slope_factor: slope,
                    output_csv: "runs/out.csv".into(),
                    output_plot: plot.then(|| "runs/out.svg".into()),
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn config_round_trip(config in config_strategy()) {
        config.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        write_config(&config, &path).unwrap();
        prop_assert_eq!(load_config(&path).unwrap(), config);
    }
}

#[test]
fn model_iterations_with_exact_model_never_increase() {
    let plant = discretize_zoh(&make_second_order(0.5, 37.0).unwrap(), 0.01).unwrap();
    let lifted = LiftedSystem::build(&plant, 100).unwrap();
    let desired = Trajectory::new(
        DVector::from_fn(100, |k, _| PI * (1.0 - (20.0 * PI * (k + 1) as f64 * 0.01).cos()).powi(2)),
        1,
        0.01,
    );
    for kind in LawKind::ALL {
        let problem = LearningProblem::new(
            lifted.clone(),
            lifted.clone(),
            LearningLaw::new(kind, 1.0).unwrap(),
            desired.clone(),
            DVector::zeros(2),
        )
        .unwrap();
        let u0 = Trajectory::input(desired.values().clone(), 0.01);
        let model = problem.run_iterations(&u0, 60, Phase::Model).unwrap();
        let world = problem.run_iterations(&u0, 60, Phase::World).unwrap();
        for (m, w) in model.records.iter().zip(&world.records) {
            assert!((m.rms - w.rms).abs() <= 1e-9 * m.rms.max(1.0), "{kind}");
        }
        assert!(model.rms_curve().windows(2).all(|w| w[1] <= w[0]), "{kind}");
    }
}
