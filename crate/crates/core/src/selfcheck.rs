//! Runtime oracle checks behind `ilc check`.
//!
//! Each check recomputes a known property of the library on the bundled
//! plants (and on seeded random plants) and reports pass or fail with the
//! measured quantity.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::engine::{FastForward, Phase};
use crate::error::Result;
use crate::experiment::{figure_data, history_csv, FigureId};
use crate::laws::{GainMatrix, LawKind, LearningLaw};
use crate::lifted::{LiftedSystem, Trajectory};
use crate::lti::{
    analytic_first_order_response, discretize_zoh, sampled_zeros, DiscreteStateSpace,
    FirstOrderFeedbackSpec,
};
use crate::switch::to_db;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name, passed, detail },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn relative(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn bundled() -> Result<[ExperimentConfig; 2]> {
    Ok([
        ExperimentConfig::preset("second_order_fig3")?,
        ExperimentConfig::preset("third_order_fig5")?,
    ])
}

fn fast_forward_equivalence() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for config in bundled()? {
        let problem = config.build_problem()?;
        let u0 = config.initial_input_trajectory()?;
        let e0 = problem.model_error(&u0)?;
        for kind in LawKind::ALL {
            let ff = FastForward::new(problem.model(), LearningLaw::new(kind, 1.0)?)?;
            for n in [1, 7, 50, 100] {
                let fast = ff.advance(&u0, &e0, n)?;
                let slow = ff.explicit(&u0, &e0, n)?;
                worst = worst
                    .max(relative(fast.input.values(), slow.input.values()))
                    .max(relative(fast.error.values(), slow.error.values()));
            }
        }
    }
    Ok((worst <= 1e-8, format!("max relative deviation {worst:.2e} (limit 1e-8)")))
}

/// Random stable SISO plant of order 1 to 4 with spectral radius below 0.95.
pub fn random_stable_plant(rng: &mut impl Rng) -> Result<DiscreteStateSpace> {
    let order = rng.gen_range(1..=4);
    let mut a = DMatrix::from_fn(order, order, |_, _| rng.gen_range(-1.0..1.0));
    let radius = a
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max);
    let target = rng.gen_range(0.2..0.95);
    if radius > 0.0 {
        a *= target / radius;
    }
    let b = DVector::from_fn(order, |_, _| rng.gen_range(-1.0..1.0));
    let c = RowDVector::from_fn(order, |_, _| rng.gen_range(-1.0..1.0));
    DiscreteStateSpace::new(a, b, c, 0.01)
}

fn eigenvalue_identity_error(sys: &LiftedSystem, kind: LawKind, gain: f64) -> Result<(f64, f64)> {
    let l = GainMatrix::build(LearningLaw::new(kind, gain)?, sys)?;
    let g = l.iteration_matrix(sys)?;
    let asym = (&g - g.transpose()).abs().max();
    let mut actual: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
    let mut expected: Vec<f64> = sys
        .singular_values()
        .iter()
        .map(|&s| kind.model_eigenvalue(gain, s))
        .collect();
    actual.sort_by(f64::total_cmp);
    expected.sort_by(f64::total_cmp);
    let err = actual
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((err, asym))
}

fn eigenvalue_identities() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11C);
    let mut systems = Vec::new();
    for _ in 0..20 {
        let plant = random_stable_plant(&mut rng)?;
        let horizon = rng.gen_range(2..=40);
        systems.push(LiftedSystem::build(&plant, horizon)?);
    }
    for config in bundled()? {
        let d = config.resolved_deleted_rows()?;
        systems.push(LiftedSystem::build(&config.model_discrete()?, config.horizon)?.delete_rows(d)?);
    }
    let (mut worst, mut worst_asym): (f64, f64) = (0.0, 0.0);
    for sys in &systems {
        for kind in LawKind::ALL {
            let (err, asym) = eigenvalue_identity_error(sys, kind, 1.0)?;
            worst = worst.max(err);
            worst_asym = worst_asym.max(asym);
        }
    }
    Ok((
        worst <= 1e-8 && worst_asym <= 1e-10,
        format!(
            "{} systems: eigenvalue error {worst:.2e} (limit 1e-8), asymmetry {worst_asym:.2e} (limit 1e-10)",
            systems.len()
        ),
    ))
}

fn discretization_oracle() -> Result<(bool, String)> {
    let spec = FirstOrderFeedbackSpec::new(3.0, 5.0, 0.4)?;
    let t = 0.02;
    let dss = discretize_zoh(&spec.closed_loop(), t)?;
    let commands: Vec<f64> = (0..100).map(|k| (0.37 * k as f64).sin() + 0.5).collect();
    let x0 = DVector::from_element(1, spec.initial_output);
    let sampled = dss.simulate(&commands, &x0)?;
    let command = |tau: f64| commands[((tau / t).floor() as usize).min(99)];
    let worst = (1..=100)
        .map(|k| (sampled[k - 1] - analytic_first_order_response(&spec, command, k as f64 * t)).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-8, format!("max deviation over 100 samples {worst:.2e} (limit 1e-8)")))
}

fn nonminimum_phase_detection() -> Result<(bool, String)> {
    let [second, third] = bundled()?;
    let z2 = sampled_zeros(&second.model_discrete()?)?;
    let z3 = sampled_zeros(&third.model_discrete()?)?;
    let outside: Vec<_> = z3.iter().filter(|z| z.norm() > 1.0).collect();
    let passed = outside.len() == 1
        && outside[0].re < 0.0
        && outside[0].im.abs() < 1e-9
        && z2.iter().all(|z| z.norm() <= 1.0);
    Ok((
        passed,
        format!("third-order zeros {z3:.4?}, second-order zeros {z2:.4?}"),
    ))
}

fn stable_inverse() -> Result<(bool, String)> {
    let config = ExperimentConfig::preset("third_order_fig5")?;
    let plant = config.model_discrete()?;
    let x0 = config.initial_state_vector();
    let full = LiftedSystem::build(&plant, config.horizon)?;
    let deleted = full.delete_rows(1)?;
    let desired_full = Trajectory::new(
        DVector::from_iterator(
            config.horizon,
            (1..=config.horizon).map(|k| config.trajectory.value(k as f64 * config.sample_period)),
        ),
        1,
        config.sample_period,
    );
    let exact = full.exact_inverse_input(&desired_full, &x0)?;
    let desired = crate::config::build_desired_trajectory(&config)?;
    let stable = deleted.pseudo_inverse_input(&desired, &x0)?;
    let ratio = exact.values().amax() / stable.values().amax();
    Ok((ratio >= 10.0, format!("max|u| ratio full/deleted {ratio:.3e} (limit 10)")))
}

fn figure_qualitative() -> Result<(bool, String)> {
    let mut failures = Vec::new();
    for kind in LawKind::ALL {
        let data = figure_data(FigureId::Fig3, kind, 50)?;
        let model_curve = data.model.rms_curve();
        if model_curve[..=100].windows(2).any(|w| w[1] > w[0]) {
            failures.push(format!("{kind}: model curve rises"));
        }
        if data.report.r_world_n <= data.report.r_model_n {
            failures.push(format!("{kind}: no jump at switch"));
        }
        let hybrid10 = data.hybrid.records[data.hybrid.switch_index.unwrap_or(0) + 10].rms;
        if hybrid10 >= data.world.records[10].rms {
            failures.push(format!("{kind}: hybrid not below world-only after 10 runs"));
        }
    }
    let detail = if failures.is_empty() {
        "monotone model curves, jump at switch, hybrid below world-only for all laws".to_string()
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}

fn figure_spot_values() -> Result<(bool, String)> {
    let data = figure_data(FigureId::Fig3, LawKind::PTranspose, 50)?;
    let start = data.hybrid.switch_index.unwrap_or(0);
    let world0 = to_db(data.world.records[0].rms)?;
    let hybrid0 = to_db(data.hybrid.records[start].rms)?;
    let hybrid10 = to_db(data.hybrid.records[start + 10].rms)?;
    let passed = (13.0..=18.0).contains(&world0) && hybrid0 < 7.0 && (hybrid10 + 2.0).abs() <= 3.0;
    Ok((
        passed,
        format!("world start {world0:.2} dB, hybrid world start {hybrid0:.2} dB, after 10 world runs {hybrid10:.2} dB"),
    ))
}

fn switch_consistency() -> Result<(bool, String)> {
    let config = ExperimentConfig::preset("second_order_fig3")?;
    let mut same = config.clone();
    same.world = same.model;
    let u0 = config.initial_input_trajectory()?;
    let mut worst: f64 = 0.0;
    let problem = same.build_problem()?;
    for n in [1, 10, 50] {
        let r = problem.evaluate_switch(&u0, n, 1.0)?;
        worst = worst.max(r.jump.abs()).max((r.world_slope - r.model_slope).abs());
    }
    let paper = config.build_problem()?.evaluate_switch(&u0, 50, 1.0)?;
    Ok((
        worst <= 1e-9 && paper.jump > 0.0 && paper.world_slope > 0.0,
        format!(
            "model = world deviation {worst:.2e}; second-order pair at 50: jump {:.4}, world slope {:.4}",
            paper.jump, paper.world_slope
        ),
    ))
}

fn determinism() -> Result<(bool, String)> {
    let a = figure_data(FigureId::Fig3, LawKind::PTranspose, 50)?;
    let b = figure_data(FigureId::Fig3, LawKind::PTranspose, 50)?;
    let same = [(&a.model, &b.model), (&a.world, &b.world), (&a.hybrid, &b.hybrid)]
        .iter()
        .all(|(x, y)| history_csv(x) == history_csv(y));
    Ok((same, "fig3 p_transpose switch 50 computed twice".to_string()))
}

/// Median wall time of `f` over `rounds` rounds of `reps` calls each.
fn median_seconds(rounds: usize, reps: usize, mut f: impl FnMut()) -> f64 {
    let mut samples: Vec<f64> = (0..rounds)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..reps {
                f();
            }
            start.elapsed().as_secs_f64() / reps as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn fast_forward_timing() -> Result<(bool, String)> {
    let config = ExperimentConfig::preset("second_order_fig3")?;
    let problem = config.build_problem()?;
    let u0 = config.initial_input_trajectory()?;
    let e0 = problem.model_error(&u0)?;
    let ff = problem.fast_forwarder()?;
    let start = ff.start(&u0, &e0)?;
    let fast = median_seconds(15, 200, || {
        std::hint::black_box(ff.advance_from(&start, 100).ok());
    });
    let slow = median_seconds(15, 10, || {
        std::hint::black_box(ff.explicit(&u0, &e0, 100).ok());
    });
    let ratio = fast / slow;
    Ok((
        ratio < 0.01,
        format!(
            "n = 100: fast-forward {:.2} us, explicit {:.2} us, ratio {:.3}% (limit 1%)",
            fast * 1e6,
            slow * 1e6,
            ratio * 100.0
        ),
    ))
}

fn contraction() -> Result<(bool, String)> {
    let mut config = ExperimentConfig::preset("second_order_fig3")?;
    config.world = config.model;
    let problem = config.build_problem()?;
    let history = problem.run_iterations(&config.initial_input_trajectory()?, 100, Phase::Model)?;
    let rises = history.rms_curve().windows(2).filter(|w| w[1] > w[0]).count();
    Ok((rises == 0, format!("{rises} increases over 100 model iterations")))
}

/// Runs every check in a fixed order.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        outcome("fast-forward equals explicit iteration", fast_forward_equivalence()),
        outcome("law eigenvalue identities", eigenvalue_identities()),
        outcome("zero-order-hold discretization oracle", discretization_oracle()),
        outcome("non-minimum-phase zero detection", nonminimum_phase_detection()),
        outcome("stable inverse boundedness", stable_inverse()),
        outcome("model iterations contract", contraction()),
        outcome("figure 3 curve ordering", figure_qualitative()),
        outcome("figure 3(a) spot values", figure_spot_values()),
        outcome("switch advisor consistency", switch_consistency()),
        outcome("deterministic figure output", determinism()),
        outcome("fast-forward timing", fast_forward_timing()),
    ]
}
