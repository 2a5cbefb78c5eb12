//! Model, world and hybrid learning iterations, and the closed-form
//! fast-forward of model iterations through the eigendecomposition of the
//! symmetric model iteration matrix.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{IlcError, Result};
use crate::laws::{GainMatrix, LearningLaw};
use crate::lifted::{LiftedSystem, Trajectory};
use crate::switch::{rms, to_db};

/// Largest tolerated `|G - G^T|` entry for a model iteration matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Slack on `|lambda| < 1` before an eigenvalue is treated as divergent.
pub const UNIT_EIGENVALUE_SLACK: f64 = 1e-12;


#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Model,
    World,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Model => "model",
            Phase::World => "world",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Iteration index within its phase.
    pub iteration: usize,
    pub phase: Phase,
    pub input: Trajectory,
    pub error: Trajectory,
    pub rms: f64,
    /// `None` once the error is exactly zero.
    pub rms_db: Option<f64>,
    /// World runs consumed up to and including this record.
    pub hardware_runs: usize,
}

impl IterationRecord {
    fn new(
        iteration: usize,
        phase: Phase,
        input: Trajectory,
        error: Trajectory,
        hardware_runs: usize,
    ) -> Result<Self> {
        let rms = rms(&error)?;
        Ok(Self {
            iteration,
            phase,
            input,
            error,
            rms,
            rms_db: to_db(rms).ok(),
            hardware_runs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationHistory {
    pub records: Vec<IterationRecord>,
    pub law: LearningLaw,
    /// Index into `records` of the first world record after a model phase.
    pub switch_index: Option<usize>,
}

impl IterationHistory {
    pub fn rms_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rms).collect()
    }

    pub fn phase_records(&self, phase: Phase) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("history always holds the initial run")
    }
}

/// `G = M diag(lambda) M^T` with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvectors: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues);
        scaled * self.eigenvectors.transpose()
    }

    /// Coordinates of `v` in the eigenvector basis, `M^T v`. Norm preserving.
    pub fn to_modal(&self, v: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(v)
    }

    pub fn from_modal(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * v
    }
}

pub fn spectral_decompose(iteration_matrix: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if !iteration_matrix.is_square() {
        return Err(IlcError::Dimension {
            what: "iteration matrix columns",
            expected: iteration_matrix.nrows(),
            got: iteration_matrix.ncols(),
        });
    }
    let transpose = iteration_matrix.transpose();
    let asymmetry = (iteration_matrix - &transpose).abs().max();
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(IlcError::NotSymmetric { asymmetry });
    }
    let symmetric = (iteration_matrix + transpose) * 0.5;
    let eig = SymmetricEigen::new(symmetric);
    Ok(SpectralDecomposition {
        eigenvectors: eig.eigenvectors,
        eigenvalues: eig.eigenvalues,
    })
}

/// Writes `1 + lambda + ... + lambda^(n-1)` for every eigenvalue into `out`,
/// given `deltas[i] = 1 - lambda_i`.
///
/// The closed form `(1 - lambda^n) / (1 - lambda)` is evaluated by binary
/// powering on `1 - lambda^k` directly (`1 - ab = (1 - a) + a (1 - b)`), so
/// the numerator never cancels, including for eigenvalues next to 1. All
/// eigenvalues advance in lockstep so the loop vectorizes.
fn partial_sums(deltas: &[f64], n: usize, out: &mut [f64]) {
    let mut base = deltas.to_vec(); // 1 - lambda^(2^i)
    out.fill(0.0); // 1 - lambda^(bits consumed)
    let mut bits = n;
    while bits > 0 {
        if bits & 1 == 1 {
            for (acc, b) in out.iter_mut().zip(&base) {
                *acc += b * (1.0 - *acc);
            }
        }
        bits >>= 1;
        if bits > 0 {
            for b in base.iter_mut() {
                *b *= 2.0 - *b;
            }
        }
    }
    for (acc, delta) in out.iter_mut().zip(deltas) {
        *acc = if *delta == 0.0 { n as f64 } else { *acc / delta };
    }
}

/// `sum_{m=0}^{power_count} lambda_i^m` for each eigenvalue, in closed form.
pub fn geometric_sum(eigenvalues: &[f64], power_count: usize) -> Result<Vec<f64>> {
    eigenvalues
        .iter()
        .map(|&lambda| {
            if lambda.is_nan() || lambda.abs() >= 1.0 + UNIT_EIGENVALUE_SLACK {
                return Err(IlcError::DivergentSum { eigenvalue: lambda });
            }
            Ok(1.0 - lambda)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|deltas| {
            let mut out = vec![0.0; deltas.len()];
            partial_sums(&deltas, power_count + 1, &mut out);
            out
        })
}

/// Result of advancing the model iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub input: Trajectory,
    pub error: Trajectory,
}

/// Initial run expressed for fast-forwarding: `u_0`, `e_0` and the modal
/// error `e'_0 = M^T e_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalStart {
    input: Trajectory,
    error: Trajectory,
    modal_error: DVector<f64>,
}

impl ModalStart {
    pub fn input(&self) -> &Trajectory {
        &self.input
    }

    pub fn error(&self) -> &Trajectory {
        &self.error
    }

    pub fn modal_error(&self) -> &DVector<f64> {
        &self.modal_error
    }
}

/// Cached decomposition for one (model, law) pair.
///
/// Once an initial run has been mapped to modal coordinates, the state
/// after any number of model iterations costs one dense matrix-vector
/// product plus one structured Toeplitz product.
#[derive(Debug, Clone)]
pub struct FastForward {
    model: LiftedSystem,
    gain: GainMatrix,
    iteration_matrix: DMatrix<f64>,
    decomposition: SpectralDecomposition,
    /// `L M`, so the input update is one product in modal coordinates.
    gain_modal: DMatrix<f64>,
    /// `1 - lambda_i`
    deltas: Vec<f64>,
}

impl FastForward {
    pub fn new(model: &LiftedSystem, law: LearningLaw) -> Result<Self> {
        let gain = GainMatrix::build(law, model)?;
        Self::from_gain(model, gain)
    }

    pub fn from_gain(model: &LiftedSystem, gain: GainMatrix) -> Result<Self> {
        let iteration_matrix = gain.iteration_matrix(model)?;
        let decomposition = spectral_decompose(&iteration_matrix)?;
        if let Some(lambda) = decomposition
            .eigenvalues
            .iter()
            .copied()
            .find(|l| l.is_nan() || l.abs() >= 1.0 + UNIT_EIGENVALUE_SLACK)
        {
            return Err(IlcError::DivergentIteration { eigenvalue: lambda });
        }
        let gain_modal = gain.matrix() * decomposition.eigenvectors();
        let deltas = decomposition.eigenvalues.iter().map(|l| 1.0 - l).collect();
        Ok(Self {
            deltas,
            model: model.clone(),
            gain,
            iteration_matrix,
            decomposition,
            gain_modal,
        })
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    pub fn iteration_matrix(&self) -> &DMatrix<f64> {
        &self.iteration_matrix
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    fn check(&self, input: &Trajectory, error: &Trajectory) -> Result<()> {
        if input.len() != self.gain.input_len() {
            return Err(IlcError::Dimension {
                what: "input history",
                expected: self.gain.input_len(),
                got: input.len(),
            });
        }
        if error.len() != self.gain.error_len() {
            return Err(IlcError::Dimension {
                what: "error history",
                expected: self.gain.error_len(),
                got: error.len(),
            });
        }
        Ok(())
    }

    /// Maps an initial run to modal coordinates, `e'_0 = M^T e_0`.
    pub fn start(&self, input: &Trajectory, error: &Trajectory) -> Result<ModalStart> {
        self.check(input, error)?;
        Ok(ModalStart {
            input: input.clone(),
            error: error.clone(),
            modal_error: self.decomposition.to_modal(error.values()),
        })
    }

    /// Modal error after `n` iterations, `e'_n = diag(lambda)^n e'_0`.
    pub fn modal_error(&self, start: &ModalStart, n: usize) -> DVector<f64> {
        let exponent = n as i32;
        start
            .modal_error
            .zip_map(&self.decomposition.eigenvalues, |e, l| e * l.powi(exponent))
    }

    /// State after `n` model iterations.
    ///
    /// `u_n = u_0 + L M S e'_0` where `S` sums the eigenvalue powers 0
    /// through n-1, so the result equals `n` explicit updates. The error
    /// follows from telescoping the model error recursion,
    /// `e_n = e_0 - P_M (u_n - u_0)`, evaluated with the Toeplitz structure
    /// of `P_M`; it agrees with `M e'_n`.
    pub fn advance_from(&self, start: &ModalStart, n: usize) -> Result<ModelState> {
        if n == 0 {
            return Ok(ModelState {
                input: start.input.clone(),
                error: start.error.clone(),
            });
        }
        let mut summed = DVector::zeros(self.deltas.len());
        partial_sums(&self.deltas, n, summed.as_mut_slice());
        summed.component_mul_assign(&start.modal_error);
        let mut delta = DVector::zeros(self.gain.input_len());
        delta.gemv(1.0, &self.gain_modal, &summed, 0.0);
        let mut next_error = self.model.toeplitz_product(&delta)?;
        next_error.neg_mut();
        next_error += start.error.values();
        delta += start.input.values();
        Ok(ModelState {
            input: Trajectory::new(delta, start.input.start_step(), start.input.sample_period()),
            error: Trajectory::new(
                next_error,
                start.error.start_step(),
                start.error.sample_period(),
            ),
        })
    }

    /// [`FastForward::start`] followed by [`FastForward::advance_from`].
    pub fn advance(&self, input: &Trajectory, error: &Trajectory, n: usize) -> Result<ModelState> {
        let start = self.start(input, error)?;
        self.advance_from(&start, n)
    }

    /// Model errors `e_0, ..., e_{count-1}` with matching inputs, stepping
    /// in modal coordinates (one diagonal scaling per iteration).
    pub fn modal_iterations(
        &self,
        input: &Trajectory,
        error: &Trajectory,
        count: usize,
    ) -> Result<Vec<ModelState>> {
        self.check(input, error)?;
        let mut out = Vec::with_capacity(count);
        let mut modal = self.decomposition.to_modal(error.values());
        let mut u = input.values().clone();
        for j in 0..count {
            let e = if j == 0 {
                error.values().clone()
            } else {
                self.decomposition.from_modal(&modal)
            };
            out.push(ModelState {
                input: Trajectory::new(u.clone(), input.start_step(), input.sample_period()),
                error: Trajectory::new(e, error.start_step(), error.sample_period()),
            });
            u.gemv(1.0, &self.gain_modal, &modal, 1.0);
            modal.component_mul_assign(&self.decomposition.eigenvalues);
        }
        Ok(out)
    }

    /// The same state as [`FastForward::advance`], by `n` explicit
    /// applications of `e <- (I - P L) e` and `u <- u + L e`.
    pub fn explicit(&self, input: &Trajectory, error: &Trajectory, n: usize) -> Result<ModelState> {
        self.check(input, error)?;
        Ok(explicit_model_iterations(
            &self.gain,
            &self.iteration_matrix,
            input,
            error,
            n,
        ))
    }
}

/// `n` model iterations by direct matrix-vector products.
pub fn explicit_model_iterations(
    gain: &GainMatrix,
    iteration_matrix: &DMatrix<f64>,
    input: &Trajectory,
    error: &Trajectory,
    n: usize,
) -> ModelState {
    let mut u = input.values().clone();
    let mut e = error.values().clone();
    let mut scratch = DVector::zeros(e.len());
    for _ in 0..n {
        u.gemv(1.0, gain.matrix(), &e, 1.0);
        scratch.gemv(1.0, iteration_matrix, &e, 0.0);
        std::mem::swap(&mut e, &mut scratch);
    }
    ModelState {
        input: Trajectory::new(u, input.start_step(), input.sample_period()),
        error: Trajectory::new(e, error.start_step(), error.sample_period()),
    }
}

/// One-shot fast-forward without keeping the decomposition.
pub fn fast_forward(
    model: &LiftedSystem,
    law: LearningLaw,
    input: &Trajectory,
    error: &Trajectory,
    n: usize,
) -> Result<ModelState> {
    FastForward::new(model, law)?.advance(input, error, n)
}

/// A world plant, the designer's model of it, a law and a desired output.
///
/// The gain is always built from the model. The decomposition used for
/// fast-forwarding is computed on first use and then shared.
#[derive(Debug)]
pub struct LearningProblem {
    world: LiftedSystem,
    model: LiftedSystem,
    law: LearningLaw,
    desired: Trajectory,
    initial_state: DVector<f64>,
    gain: GainMatrix,
    fast_forward: OnceLock<FastForward>,
}

impl LearningProblem {
    pub fn new(
        world: LiftedSystem,
        model: LiftedSystem,
        law: LearningLaw,
        desired: Trajectory,
        initial_state: DVector<f64>,
    ) -> Result<Self> {
        if world.horizon() != model.horizon() {
            return Err(IlcError::Dimension {
                what: "world horizon",
                expected: model.horizon(),
                got: world.horizon(),
            });
        }
        if world.deleted_rows() != model.deleted_rows() {
            return Err(IlcError::Dimension {
                what: "world deleted rows",
                expected: model.deleted_rows(),
                got: world.deleted_rows(),
            });
        }
        model.check_output(desired.len(), "desired output")?;
        for sys in [&world, &model] {
            if sys.source().order() != initial_state.len() {
                return Err(IlcError::Dimension {
                    what: "initial state",
                    expected: sys.source().order(),
                    got: initial_state.len(),
                });
            }
        }
        let gain = GainMatrix::build(law, &model)?;
        Ok(Self {
            world,
            model,
            law,
            desired,
            initial_state,
            gain,
            fast_forward: OnceLock::new(),
        })
    }

    pub fn world(&self) -> &LiftedSystem {
        &self.world
    }

    pub fn model(&self) -> &LiftedSystem {
        &self.model
    }

    pub fn law(&self) -> LearningLaw {
        self.law
    }

    pub fn desired(&self) -> &Trajectory {
        &self.desired
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.initial_state
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    pub fn fast_forwarder(&self) -> Result<&FastForward> {
        if let Some(ff) = self.fast_forward.get() {
            return Ok(ff);
        }
        let ff = FastForward::from_gain(&self.model, self.gain.clone())?;
        Ok(self.fast_forward.get_or_init(|| ff))
    }

    pub fn model_error(&self, input: &Trajectory) -> Result<Trajectory> {
        self.model
            .tracking_error(&self.desired, input, &self.initial_state)
    }

    pub fn world_error(&self, input: &Trajectory) -> Result<Trajectory> {
        self.world
            .tracking_error(&self.desired, input, &self.initial_state)
    }

    /// `count` learning iterations after the initial run.
    ///
    /// In the model phase errors are propagated with `I - P_M L_M`; in the
    /// world phase each input is applied to the world and its true error
    /// measured.
    pub fn run_iterations(
        &self,
        initial_input: &Trajectory,
        count: usize,
        phase: Phase,
    ) -> Result<IterationHistory> {
        let mut records = Vec::with_capacity(count + 1);
        match phase {
            Phase::Model => {
                let iteration_matrix = self.gain.iteration_matrix(&self.model)?;
                let mut input = initial_input.clone();
                let mut error = self.model_error(&input)?;
                for j in 0..=count {
                    if j > 0 {
                        let next_input = self.gain.update_input(&input, &error)?;
                        let next_error = &iteration_matrix * error.values();
                        input = next_input;
                        error = Trajectory::new(next_error, error.start_step(), error.sample_period());
                    }
                    records.push(IterationRecord::new(
                        j,
                        Phase::Model,
                        input.clone(),
                        error.clone(),
                        0,
                    )?);
                }
            }
            Phase::World => {
                self.world_phase(initial_input, count, 0, &mut records)?;
            }
        }
        Ok(IterationHistory {
            records,
            law: self.law,
            switch_index: None,
        })
    }

    fn world_phase(
        &self,
        initial_input: &Trajectory,
        count: usize,
        iteration_offset: usize,
        records: &mut Vec<IterationRecord>,
    ) -> Result<()> {
        let mut input = initial_input.clone();
        for j in 0..=count {
            if j > 0 {
                let previous = records.last().expect("pushed on previous pass");
                input = self.gain.update_input(&previous.input, &previous.error)?;
            }
            let error = self.world_error(&input)?;
            records.push(IterationRecord::new(
                j + iteration_offset,
                Phase::World,
                input.clone(),
                error,
                j + 1,
            )?);
        }
        Ok(())
    }

    /// Model iterations 0 to `model_count - 1`, then the model input
    /// `u_{M, model_count}` is applied to the world as its initial run,
    /// followed by `world_count` world iterations.
    pub fn run_hybrid(
        &self,
        initial_input: &Trajectory,
        model_count: usize,
        world_count: usize,
    ) -> Result<IterationHistory> {
        let mut records = Vec::with_capacity(model_count + world_count + 1);
        let switch_input = if model_count == 0 {
            initial_input.clone()
        } else {
            let ff = self.fast_forwarder()?;
            let initial_error = self.model_error(initial_input)?;
            for (j, state) in ff
                .modal_iterations(initial_input, &initial_error, model_count)?
                .into_iter()
                .enumerate()
            {
                records.push(IterationRecord::new(
                    j,
                    Phase::Model,
                    state.input,
                    state.error,
                    0,
                )?);
            }
            let advanced = ff.advance(initial_input, &initial_error, model_count)?;
            if cfg!(debug_assertions) {
                let explicit = ff.explicit(initial_input, &initial_error, model_count)?;
                let diff = (advanced.input.values() - explicit.input.values()).norm();
                let scale = explicit.input.values().norm().max(1.0);
                debug_assert!(diff <= 1e-8 * scale, "fast-forward drifted from explicit loop: {diff:e}");
            }
            advanced.input
        };
        let switch_index = records.len();
        self.world_phase(&switch_input, world_count, 0, &mut records)?;
        Ok(IterationHistory {
            records,
            law: self.law,
            switch_index: Some(switch_index),
        })
    }
}
