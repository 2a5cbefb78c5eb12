//! Finite-horizon lifted description `y = P u + Abar x(0)` of a sampled
//! plant, leading-row deletion, and stable-inverse inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{IlcError, Result};
use crate::lti::DiscreteStateSpace;

/// Relative singular-value cutoff used for numerical rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A sampled signal over part of a finite horizon.
///
/// `start_step` is the time index of the first entry, so an error history
/// with one deleted row starts at step 2. Input histories start at step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: DVector<f64>,
    start_step: usize,
    sample_period: f64,
}

impl Trajectory {
    pub fn new(values: DVector<f64>, start_step: usize, sample_period: f64) -> Self {
        Self {
            values,
            start_step,
            sample_period,
        }
    }

    /// An input history `u(0), ..., u(N-1)`.
    pub fn input(values: DVector<f64>, sample_period: f64) -> Self {
        Self::new(values, 0, sample_period)
    }

    pub fn zeros(len: usize, start_step: usize, sample_period: f64) -> Self {
        Self::new(DVector::zeros(len), start_step, sample_period)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start_step(&self) -> usize {
        self.start_step
    }

    /// Index of the last sample; `None` for an empty trajectory.
    pub fn final_step(&self) -> Option<usize> {
        (self.start_step + self.values.len()).checked_sub(1)
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// `(k, t_k, value)` triples.
    pub fn samples(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| {
            let k = self.start_step + i;
            (k, k as f64 * self.sample_period, *v)
        })
    }
}

/// The lifted input-output map over `horizon` steps, with the first
/// `deleted_rows` output rows removed.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    p: DMatrix<f64>,
    markov: Vec<f64>,
    abar: DMatrix<f64>,
    horizon: usize,
    deleted_rows: usize,
    source: DiscreteStateSpace,
}

impl LiftedSystem {
    /// Assembles the Toeplitz matrix of Markov parameters and the stacked
    /// initial-condition map `[CA; CA^2; ...; CA^N]`.
    pub fn build(dss: &DiscreteStateSpace, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(IlcError::EmptyHorizon);
        }
        let n = dss.order();
        let markov = dss.markov_parameters(horizon);
        let p = DMatrix::from_fn(horizon, horizon, |k, i| {
            if k >= i {
                markov[k - i]
            } else {
                0.0
            }
        });
        let mut abar = DMatrix::zeros(horizon, n);
        let mut row = dss.c() * dss.ad();
        for k in 0..horizon {
            abar.set_row(k, &row);
            row = &row * dss.ad();
        }
        Ok(Self {
            p,
            markov,
            abar,
            horizon,
            deleted_rows: 0,
            source: dss.clone(),
        })
    }

    /// Drops the first `d` output rows. The input stays full length.
    pub fn delete_rows(&self, d: usize) -> Result<Self> {
        if self.deleted_rows != 0 {
            return Err(IlcError::AlreadyDeleted(self.deleted_rows));
        }
        if d >= self.horizon {
            return Err(IlcError::DegenerateDeletion {
                deleted: d,
                horizon: self.horizon,
            });
        }
        let rows = self.horizon - d;
        Ok(Self {
            p: self.p.rows(d, rows).into_owned(),
            markov: self.markov.clone(),
            abar: self.abar.rows(d, rows).into_owned(),
            horizon: self.horizon,
            deleted_rows: d,
            source: self.source.clone(),
        })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Markov parameters `CB, CAB, ..., CA^(N-1)B` defining the diagonals of `P`.
    pub fn markov_parameters(&self) -> &[f64] {
        &self.markov
    }

    /// `P x` from the Toeplitz structure, without touching the dense matrix.
    pub fn toeplitz_product(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x.len())?;
        let d = self.deleted_rows;
        let rows = self.output_len();
        let mut y = DVector::zeros(rows);
        let out = y.as_mut_slice();
        // column i contributes x[i] * h[r + d - i] to every row r >= i - d
        for (i, xi) in x.iter().enumerate() {
            let first_row = i.saturating_sub(d);
            let lag = first_row + d - i;
            let len = rows - first_row;
            for (acc, h) in out[first_row..].iter_mut().zip(&self.markov[lag..lag + len]) {
                *acc += xi * h;
            }
        }
        Ok(y)
    }

    pub fn abar(&self) -> &DMatrix<f64> {
        &self.abar
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn deleted_rows(&self) -> usize {
        self.deleted_rows
    }

    /// Number of output rows, `N - d`.
    pub fn output_len(&self) -> usize {
        self.horizon - self.deleted_rows
    }

    pub fn sample_period(&self) -> f64 {
        self.source.sample_period()
    }

    pub fn source(&self) -> &DiscreteStateSpace {
        &self.source
    }

    /// First time step present in output and error histories.
    pub fn output_start_step(&self) -> usize {
        1 + self.deleted_rows
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.horizon {
            return Err(IlcError::Dimension {
                what: "input history",
                expected: self.horizon,
                got: len,
            });
        }
        Ok(())
    }

    fn check_state(&self, x0: &DVector<f64>) -> Result<()> {
        if x0.len() != self.source.order() {
            return Err(IlcError::Dimension {
                what: "initial state",
                expected: self.source.order(),
                got: x0.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_output(&self, len: usize, what: &'static str) -> Result<()> {
        if len != self.output_len() {
            return Err(IlcError::Dimension {
                what,
                expected: self.output_len(),
                got: len,
            });
        }
        Ok(())
    }

    /// `P u + Abar x0`.
    pub fn output(&self, input: &Trajectory, initial_state: &DVector<f64>) -> Result<Trajectory> {
        self.check_input(input.len())?;
        self.check_state(initial_state)?;
        let y = &self.p * input.values() + &self.abar * initial_state;
        Ok(Trajectory::new(
            y,
            self.output_start_step(),
            self.sample_period(),
        ))
    }

    /// Tracking error `y* - P u - Abar x0`.
    pub fn tracking_error(
        &self,
        desired: &Trajectory,
        input: &Trajectory,
        initial_state: &DVector<f64>,
    ) -> Result<Trajectory> {
        self.check_output(desired.len(), "desired output")?;
        let y = self.output(input, initial_state)?;
        Ok(Trajectory::new(
            desired.values() - y.values(),
            self.output_start_step(),
            self.sample_period(),
        ))
    }

    /// Singular values of `P`, largest first.
    pub fn singular_values(&self) -> DVector<f64> {
        self.p.clone().svd(false, false).singular_values
    }

    /// Minimum-norm input `P^+ (y* - Abar x0)` computed from the SVD.
    ///
    /// Callers should delete at least as many rows as the plant has sampled
    /// zeros outside the unit circle; otherwise `P` is numerically rank
    /// deficient and the call fails.
    pub fn pseudo_inverse_input(
        &self,
        desired: &Trajectory,
        initial_state: &DVector<f64>,
    ) -> Result<Trajectory> {
        self.check_output(desired.len(), "desired output")?;
        self.check_state(initial_state)?;
        let rhs = desired.values() - &self.abar * initial_state;
        let svd = self.p.clone().svd(true, true);
        let sigma_max = svd.singular_values.max();
        let cutoff = RANK_TOLERANCE * sigma_max;
        let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
        let rows = self.output_len();
        if rank < rows {
            return Err(IlcError::RankDeficient {
                rank,
                required: rows,
            });
        }
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let mut coeffs = u.tr_mul(&rhs);
        coeffs.component_div_assign(&svd.singular_values);
        let input = v_t.tr_mul(&coeffs);
        Ok(Trajectory::input(input, self.sample_period()))
    }

    /// Exact inverse of the square (undeleted) system by forward substitution.
    ///
    /// For plants with a sampled zero outside the unit circle this input
    /// grows geometrically along the horizon.
    pub fn exact_inverse_input(
        &self,
        desired: &Trajectory,
        initial_state: &DVector<f64>,
    ) -> Result<Trajectory> {
        if self.deleted_rows != 0 {
            return Err(IlcError::Dimension {
                what: "rows of square system",
                expected: self.horizon,
                got: self.output_len(),
            });
        }
        self.check_output(desired.len(), "desired output")?;
        self.check_state(initial_state)?;
        let rhs = desired.values() - &self.abar * initial_state;
        let input = self
            .p
            .solve_lower_triangular(&rhs)
            .ok_or(IlcError::SingularSystem)?;
        Ok(Trajectory::input(input, self.sample_period()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{discretize_zoh, make_second_order};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, RowDVector};

    fn half_plant() -> DiscreteStateSpace {
        DiscreteStateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(1, 1.0),
            RowDVector::from_element(1, 1.0),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn single_step_horizon() {
        let ls = LiftedSystem::build(&half_plant(), 1).unwrap();
        assert_eq!(ls.p(), &dmatrix![1.0]);
        assert_eq!(ls.abar(), &dmatrix![0.5]);
        assert_eq!(
            LiftedSystem::build(&half_plant(), 0),
            Err(IlcError::EmptyHorizon)
        );
    }

    #[test]
    fn scalar_toeplitz_and_deletion() {
        let ls = LiftedSystem::build(&half_plant(), 3).unwrap();
        assert_eq!(
            ls.p(),
            &dmatrix![1.0, 0.0, 0.0; 0.5, 1.0, 0.0; 0.25, 0.5, 1.0]
        );
        assert_eq!(ls.delete_rows(0).unwrap(), ls);
        let d = ls.delete_rows(1).unwrap();
        assert_eq!(d.p(), &dmatrix![0.5, 1.0, 0.0; 0.25, 0.5, 1.0]);
        assert_eq!(d.abar(), &dmatrix![0.25; 0.125]);
        assert_eq!(d.deleted_rows(), 1);
        assert_eq!(ls.deleted_rows(), 0);
        assert!(matches!(
            ls.delete_rows(3),
            Err(IlcError::DegenerateDeletion { .. })
        ));
        assert!(matches!(d.delete_rows(1), Err(IlcError::AlreadyDeleted(1))));
    }

    #[test]
    fn output_indexing_and_dimensions() {
        let ls = LiftedSystem::build(&half_plant(), 3).unwrap();
        let x0 = DVector::from_element(1, 2.0);
        let u = Trajectory::input(DVector::from_vec(vec![1.0, -1.0, 0.5]), 0.1);
        let full = ls.output(&u, &x0).unwrap();
        let deleted = ls.delete_rows(1).unwrap().output(&u, &x0).unwrap();
        assert_eq!(full.start_step(), 1);
        assert_eq!(deleted.start_step(), 2);
        assert_eq!(deleted.final_step(), Some(3));
        assert_eq!(deleted.values().as_slice(), &full.values().as_slice()[1..]);

        let short = Trajectory::input(DVector::zeros(2), 0.1);
        assert!(matches!(
            ls.output(&short, &x0),
            Err(IlcError::Dimension { .. })
        ));
        let zero = ls
            .output(&Trajectory::input(DVector::zeros(3), 0.1), &DVector::zeros(1))
            .unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matches_recursion_on_second_order_example() {
        let dss = discretize_zoh(&make_second_order(0.5, 37.0).unwrap(), 0.01).unwrap();
        let ls = LiftedSystem::build(&dss, 100).unwrap();
        let u: Vec<f64> = (0..100).map(|k| (0.37 * k as f64).sin() + 0.01 * k as f64).collect();
        let x0 = DVector::from_vec(vec![0.3, -0.2]);
        let sim = dss.simulate(&u, &x0).unwrap();
        let lifted = ls
            .output(&Trajectory::input(DVector::from_vec(u), 0.01), &x0)
            .unwrap();
        assert_relative_eq!(sim, lifted.values().clone(), epsilon = 1e-10);

        let ux = DVector::from_fn(100, |k, _| (0.11 * k as f64).cos());
        for sys in [ls.clone(), ls.delete_rows(3).unwrap()] {
            let dense = sys.p() * &ux;
            let structured = sys.toeplitz_product(&ux).unwrap();
            assert_relative_eq!(dense, structured, epsilon = 1e-12);
        }
    }

    #[test]
    fn square_pseudo_inverse_is_exact() {
        let ls = LiftedSystem::build(&half_plant(), 3).unwrap();
        let desired = Trajectory::new(DVector::from_vec(vec![1.0, 2.0, 3.0]), 1, 0.1);
        let x0 = DVector::from_element(1, 1.0);
        let u = ls.pseudo_inverse_input(&desired, &x0).unwrap();
        let exact = ls.exact_inverse_input(&desired, &x0).unwrap();
        assert_relative_eq!(u.values().clone(), exact.values().clone(), epsilon = 1e-12);
        let err = ls.tracking_error(&desired, &u, &x0).unwrap();
        assert!(err.values().norm() < 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let degenerate = DiscreteStateSpace::new(
            DMatrix::from_element(1, 1, 0.0),
            DVector::from_element(1, 0.0),
            RowDVector::from_element(1, 1.0),
            0.1,
        )
        .unwrap();
        let ls = LiftedSystem::build(&degenerate, 3).unwrap();
        assert!(matches!(
            ls.pseudo_inverse_input(&Trajectory::new(DVector::zeros(3), 1, 0.1), &DVector::zeros(1)),
            Err(IlcError::RankDeficient { rank: 0, required: 3 })
        ));
    }
}
