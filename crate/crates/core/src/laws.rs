//! Learning gain matrices for the three model-based laws and convergence
//! metrics of the resulting iteration matrix `I - P L`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};

use crate::error::{IlcError, Result};
use crate::lifted::{LiftedSystem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawKind {
    /// `L = phi P^T`
    PTranspose,
    /// `L = phi V U^T` where `P = U S V^T`
    PartialIsometry,
    /// `L = (phi I + P^T P)^-1 P^T`
    NormOptimal,
}

impl LawKind {
    pub const ALL: [LawKind; 3] = [
        LawKind::PTranspose,
        LawKind::PartialIsometry,
        LawKind::NormOptimal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LawKind::PTranspose => "p_transpose",
            LawKind::PartialIsometry => "partial_isometry",
            LawKind::NormOptimal => "norm_optimal",
        }
    }

    /// Eigenvalue of `I - P L` on the singular direction with singular value `sigma`,
    /// when `L` is built from the same `P`.
    pub fn model_eigenvalue(self, gain: f64, sigma: f64) -> f64 {
        match self {
            LawKind::PTranspose => 1.0 - gain * sigma * sigma,
            LawKind::PartialIsometry => 1.0 - gain * sigma,
            LawKind::NormOptimal => gain / (gain + sigma * sigma),
        }
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LawKind {
    type Err = IlcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "p_transpose" => Ok(LawKind::PTranspose),
            "partial_isometry" => Ok(LawKind::PartialIsometry),
            "norm_optimal" => Ok(LawKind::NormOptimal),
            other => Err(IlcError::config(
                "law.kind",
                format!("unknown law `{other}` (expected p_transpose, partial_isometry or norm_optimal)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningLaw {
    kind: LawKind,
    gain: f64,
}

impl LearningLaw {
    pub fn new(kind: LawKind, gain: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(IlcError::invalid("gain", gain, "must be positive"));
        }
        Ok(Self { kind, gain })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }
}

/// `L` of size `N x (N - d)`, built from a model lifted system.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    l: DMatrix<f64>,
    law: LearningLaw,
}

impl GainMatrix {
    /// Builds `L` from the (possibly row-deleted) model matrix.
    ///
    /// For the partial isometry law on a deleted model the SVD is taken of
    /// the deleted matrix itself, which keeps `I - P_D L_D` symmetric.
    pub fn build(law: LearningLaw, model: &LiftedSystem) -> Result<Self> {
        let p = model.p();
        let phi = law.gain();
        let l = match law.kind() {
            LawKind::PTranspose => p.transpose() * phi,
            LawKind::PartialIsometry => {
                let svd = p.clone().svd(true, true);
                let u = svd.u.expect("requested U");
                let v_t = svd.v_t.expect("requested V^T");
                v_t.tr_mul(&u.transpose()) * phi
            }
            LawKind::NormOptimal => {
                let n = p.ncols();
                let normal = DMatrix::identity(n, n) * phi + p.tr_mul(p);
                let chol = normal
                    .cholesky()
                    .ok_or(IlcError::invalid("gain", phi, "normal matrix not positive definite"))?;
                chol.solve(&p.transpose())
            }
        };
        Ok(Self { l, law })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn law(&self) -> LearningLaw {
        self.law
    }

    /// Length of the input histories this gain produces.
    pub fn input_len(&self) -> usize {
        self.l.nrows()
    }

    /// Length of the error histories this gain consumes.
    pub fn error_len(&self) -> usize {
        self.l.ncols()
    }

    /// `u_{j+1} = u_j + L e_j`.
    pub fn update_input(&self, input: &Trajectory, error: &Trajectory) -> Result<Trajectory> {
        if input.len() != self.input_len() {
            return Err(IlcError::Dimension {
                what: "input history",
                expected: self.input_len(),
                got: input.len(),
            });
        }
        if error.len() != self.error_len() {
            return Err(IlcError::Dimension {
                what: "error history",
                expected: self.error_len(),
                got: error.len(),
            });
        }
        let mut next = input.values().clone();
        next.gemv(1.0, &self.l, error.values(), 1.0);
        Ok(Trajectory::new(next, input.start_step(), input.sample_period()))
    }

    /// `I - P L` for a plant (model or world) with the same row deletion.
    pub fn iteration_matrix(&self, plant: &LiftedSystem) -> Result<DMatrix<f64>> {
        if plant.p().ncols() != self.input_len() {
            return Err(IlcError::Dimension {
                what: "plant input dimension",
                expected: self.input_len(),
                got: plant.p().ncols(),
            });
        }
        if plant.output_len() != self.error_len() {
            return Err(IlcError::Dimension {
                what: "plant output dimension",
                expected: self.error_len(),
                got: plant.output_len(),
            });
        }
        let m = self.error_len();
        Ok(DMatrix::identity(m, m) - plant.p() * &self.l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMetrics {
    pub spectral_radius: f64,
    pub max_singular_value: f64,
    pub eigenvalues: Vec<Complex<f64>>,
}

impl StabilityMetrics {
    /// Error norm decreases every iteration.
    pub fn monotone(&self) -> bool {
        self.max_singular_value < 1.0
    }

    /// Error converges to zero for every initial error.
    pub fn asymptotic(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

pub fn stability_metrics(iteration_matrix: &DMatrix<f64>) -> Result<StabilityMetrics> {
    if !iteration_matrix.is_square() {
        return Err(IlcError::Dimension {
            what: "iteration matrix columns",
            expected: iteration_matrix.nrows(),
            got: iteration_matrix.ncols(),
        });
    }
    if iteration_matrix.is_empty() {
        return Err(IlcError::EmptyInput);
    }
    let eigenvalues: Vec<Complex<f64>> = iteration_matrix
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    let spectral_radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let max_singular_value = iteration_matrix.singular_values().max();
    Ok(StabilityMetrics {
        spectral_radius,
        max_singular_value,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::DiscreteStateSpace;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, DVector, RowDVector};

    fn scalar_system(p: f64) -> LiftedSystem {
        let dss = DiscreteStateSpace::new(
            DMatrix::from_element(1, 1, 0.3),
            DVector::from_element(1, p),
            RowDVector::from_element(1, 1.0),
            0.1,
        )
        .unwrap();
        LiftedSystem::build(&dss, 1).unwrap()
    }

    #[test]
    fn parses_law_names() {
        for kind in LawKind::ALL {
            assert_eq!(kind.as_str().parse::<LawKind>().unwrap(), kind);
        }
        assert!("p-type".parse::<LawKind>().is_err());
        assert!(LearningLaw::new(LawKind::PTranspose, 0.0).is_err());
    }

    #[test]
    fn scalar_p_transpose() {
        let sys = scalar_system(0.8);
        let law = LearningLaw::new(LawKind::PTranspose, 0.5).unwrap();
        let gain = GainMatrix::build(law, &sys).unwrap();
        assert_relative_eq!(gain.matrix()[(0, 0)], 0.4);
        let g = gain.iteration_matrix(&sys).unwrap();
        assert_relative_eq!(g[(0, 0)], 1.0 - 0.5 * 0.64, epsilon = 1e-15);

        let u = Trajectory::input(DVector::from_element(1, 2.0), 0.1);
        let e = Trajectory::new(DVector::from_element(1, 3.0), 1, 0.1);
        let next = gain.update_input(&u, &e).unwrap();
        assert_relative_eq!(next.values()[0], 2.0 + 0.4 * 3.0);
        let zero = Trajectory::zeros(1, 1, 0.1);
        assert_eq!(gain.update_input(&u, &zero).unwrap(), u);
        assert!(gain
            .update_input(&u, &Trajectory::zeros(2, 1, 0.1))
            .is_err());
    }

    #[test]
    fn tiny_gain_approaches_identity() {
        let dss = DiscreteStateSpace::new(
            dmatrix![0.5, 0.1; 0.0, 0.2],
            DVector::from_vec(vec![1.0, 0.5]),
            RowDVector::from_vec(vec![1.0, 1.0]),
            0.1,
        )
        .unwrap();
        let sys = LiftedSystem::build(&dss, 6).unwrap();
        for kind in LawKind::ALL {
            let gain = GainMatrix::build(LearningLaw::new(kind, 1e-9).unwrap(), &sys).unwrap();
            let g = gain.iteration_matrix(&sys).unwrap();
            let expected = if kind == LawKind::NormOptimal {
                // (phi I + P^T P)^-1 P^T tends to P^-1 as phi -> 0
                DMatrix::zeros(6, 6)
            } else {
                DMatrix::identity(6, 6)
            };
            assert!((g - expected).abs().max() < 1e-6, "{kind}");
        }
    }

    #[test]
    fn metrics_boundary_cases() {
        let id = stability_metrics(&DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(id.spectral_radius, 1.0, epsilon = 1e-14);
        assert_relative_eq!(id.max_singular_value, 1.0, epsilon = 1e-14);
        assert!(!id.monotone() && !id.asymptotic());

        let zero = stability_metrics(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(zero.spectral_radius, 0.0);
        assert_eq!(zero.max_singular_value, 0.0);
        assert!(zero.monotone() && zero.asymptotic());

        assert!(stability_metrics(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn iteration_matrix_dimension_check() {
        let sys = scalar_system(1.0);
        let gain = GainMatrix::build(LearningLaw::new(LawKind::PTranspose, 1.0).unwrap(), &sys)
            .unwrap();
        let dss = sys.source().clone();
        let longer = LiftedSystem::build(&dss, 2).unwrap();
        assert!(gain.iteration_matrix(&longer).is_err());
    }
}
