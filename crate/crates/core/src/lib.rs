//! Iterative learning control over lifted finite-time models.
//!
//! The crate builds lifted Toeplitz models of sampled SISO plants, forms
//! the P-transpose, partial-isometry and norm-optimal learning gains, runs
//! learning iterations against a model and a (simulated) world, and jumps
//! ahead any number of model iterations in closed form using the
//! eigendecomposition of the symmetric model iteration matrix. Plants with
//! a sampled zero outside the unit circle are handled by deleting leading
//! error rows and using minimum-norm inverses.

pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod laws;
pub mod lifted;
pub mod lti;
pub mod plot;
pub mod selfcheck;
pub mod switch;

pub use config::{build_desired_trajectory, load_config, write_config, ExperimentConfig};

pub use engine::{
    explicit_model_iterations, fast_forward, geometric_sum, spectral_decompose, FastForward,
    IterationHistory, IterationRecord, LearningProblem, ModalStart, ModelState, Phase, SpectralDecomposition,
};
pub use error::{IlcError, Result};
pub use experiment::{
    reproduce_figure, run_experiment, simulate_experiment, FigureArtifacts, FigureId, RunArtifacts,
    RunSummary, CSV_HEADER,
};
pub use laws::{stability_metrics, GainMatrix, LawKind, LearningLaw, StabilityMetrics};
pub use lifted::{LiftedSystem, Trajectory};
pub use lti::{
    analytic_first_order_response, discretize_zoh, make_second_order, make_third_order,
    sampled_zeros, ContinuousStateSpace, DiscreteStateSpace, FirstOrderFeedbackSpec,
};
pub use switch::{rms, to_db, SwitchReport};
