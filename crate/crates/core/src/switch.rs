//! RMS bookkeeping and the model-to-world switch test.
//!
//! For a candidate switch iteration `n` four RMS values are compared:
//! the model error after `n` and `n + 1` model iterations, and the world
//! error when `u_{M,n}` is applied to the world before and after one world
//! learning update. Only the last two cost world runs.

use crate::engine::LearningProblem;
use crate::error::{IlcError, Result};
use crate::lifted::Trajectory;

/// `sqrt(e^T e / len)` over the error history.
pub fn rms(error: &Trajectory) -> Result<f64> {
    if error.is_empty() {
        return Err(IlcError::EmptyInput);
    }
    Ok((error.values().norm_squared() / error.len() as f64).sqrt())
}

/// `20 log10(value)`.
pub fn to_db(value: f64) -> Result<f64> {
    if value > 0.0 {
        Ok(20.0 * value.log10())
    } else {
        Err(IlcError::UndefinedDb(value))
    }
}

/// Number of world runs consumed by one switch evaluation.
pub const WORLD_RUNS_PER_EVALUATION: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchReport {
    pub candidate_n: usize,
    pub r_model_n: f64,
    pub r_model_n1: f64,
    pub r_world_n: f64,
    pub r_world_n1: f64,
    pub model_slope: f64,
    pub world_slope: f64,
    pub jump: f64,
    pub slope_factor: f64,
    pub recommend_switch: bool,
}

impl SwitchReport {
    pub fn from_rms(
        candidate_n: usize,
        r_model_n: f64,
        r_model_n1: f64,
        r_world_n: f64,
        r_world_n1: f64,
        slope_factor: f64,
    ) -> Self {
        let model_slope = r_model_n - r_model_n1;
        let world_slope = r_world_n - r_world_n1;
        Self {
            candidate_n,
            r_model_n,
            r_model_n1,
            r_world_n,
            r_world_n1,
            model_slope,
            world_slope,
            jump: r_world_n - r_model_n,
            slope_factor,
            recommend_switch: world_slope >= slope_factor * model_slope,
        }
    }

    pub const CSV_HEADER: &'static str = "candidate_n,r_model_n,r_model_n1,r_world_n,r_world_n1,model_slope,world_slope,jump,slope_factor,recommend_switch";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
            self.candidate_n,
            self.r_model_n,
            self.r_model_n1,
            self.r_world_n,
            self.r_world_n1,
            self.model_slope,
            self.world_slope,
            self.jump,
            self.slope_factor,
            self.recommend_switch
        )
    }
}

impl LearningProblem {
    /// Evaluates switching to world iterations after `candidate_n` model
    /// iterations started from `initial_input`.
    pub fn evaluate_switch(
        &self,
        initial_input: &Trajectory,
        candidate_n: usize,
        slope_factor: f64,
    ) -> Result<SwitchReport> {
        if candidate_n == 0 {
            return Err(IlcError::invalid(
                "candidate_n",
                0.0,
                "switch candidate must be at least 1",
            ));
        }
        if !slope_factor.is_finite() {
            return Err(IlcError::invalid("slope_factor", slope_factor, "must be finite"));
        }
        let ff = self.fast_forwarder()?;
        let initial_error = self.model_error(initial_input)?;

        // model side: fast-forward to n, then one explicit step
        let at_n = ff.advance(initial_input, &initial_error, candidate_n)?;
        let next_error = ff.iteration_matrix() * at_n.error.values();
        let r_model_n = rms(&at_n.error)?;
        let r_model_n1 = rms(&Trajectory::new(
            next_error,
            at_n.error.start_step(),
            at_n.error.sample_period(),
        ))?;

        // world side: two runs
        let world_error = self.world_error(&at_n.input)?;
        let updated = self.gain().update_input(&at_n.input, &world_error)?;
        let world_error_next = self.world_error(&updated)?;

        Ok(SwitchReport::from_rms(
            candidate_n,
            r_model_n,
            r_model_n1,
            rms(&world_error)?,
            rms(&world_error_next)?,
            slope_factor,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn traj(v: &[f64]) -> Trajectory {
        Trajectory::new(DVector::from_row_slice(v), 1, 0.01)
    }

    #[test]
    fn rms_examples() {
        assert_relative_eq!(rms(&traj(&[3.0, 4.0])).unwrap(), (12.5f64).sqrt());
        assert_eq!(rms(&traj(&[0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_relative_eq!(rms(&traj(&[-2.5; 7])).unwrap(), 2.5, epsilon = 1e-15);
        assert_eq!(rms(&traj(&[])), Err(IlcError::EmptyInput));
    }

    #[test]
    fn db_examples() {
        assert_eq!(to_db(1.0).unwrap(), 0.0);
        assert_relative_eq!(to_db(10.0).unwrap(), 20.0);
        assert_relative_eq!(to_db(0.1).unwrap(), -20.0);
        assert!(matches!(to_db(0.0), Err(IlcError::UndefinedDb(_))));
        assert!(to_db(-1.0).is_err());
    }

    #[test]
    fn report_arithmetic() {
        let r = SwitchReport::from_rms(50, 0.5, 0.45, 2.0, 1.2, 1.0);
        assert_relative_eq!(r.model_slope, 0.05, epsilon = 1e-15);
        assert_relative_eq!(r.world_slope, 0.8, epsilon = 1e-15);
        assert_relative_eq!(r.jump, 1.5);
        assert!(r.recommend_switch);
        let r = SwitchReport::from_rms(50, 0.5, 0.45, 2.0, 1.99, 1.0);
        assert!(!r.recommend_switch);
    }
}
