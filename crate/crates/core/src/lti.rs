//! Single-input single-output LTI plants: construction of the example
//! transfer functions, zero-order-hold discretization, discrete simulation,
//! sampled zeros, and the analytic first-order closed-loop response.

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{IlcError, Result};

/// Continuous-time plant `dx/dt = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousStateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
}

impl ContinuousStateSpace {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(IlcError::Dimension {
                what: "state dimension",
                expected: 1,
                got: 0,
            });
        }
        check_dims(&a, b.len(), c.len())?;
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Evaluates `C (sI - A)^-1 B` at a complex frequency.
    pub fn transfer_function(&self, s: Complex<f64>) -> Option<Complex<f64>> {
        let n = self.order();
        let resolvent = DMatrix::<Complex<f64>>::identity(n, n) * s
            - self.a.map(|v| Complex::new(v, 0.0));
        let b = self.b.map(|v| Complex::new(v, 0.0));
        let x = resolvent.lu().solve(&b)?;
        Some(
            self.c
                .iter()
                .zip(x.iter())
                .map(|(c, x)| x * *c)
                .sum::<Complex<f64>>(),
        )
    }

    pub fn dc_gain(&self) -> Option<f64> {
        self.transfer_function(Complex::new(0.0, 0.0)).map(|g| g.re)
    }

    pub fn poles(&self) -> Vec<Complex<f64>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

/// Sampled plant `x(k+1) = Ad x(k) + Bd u(k)`, `y(k) = C x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateSpace {
    ad: DMatrix<f64>,
    bd: DVector<f64>,
    c: RowDVector<f64>,
    sample_period: f64,
}

impl DiscreteStateSpace {
    pub fn new(
        ad: DMatrix<f64>,
        bd: DVector<f64>,
        c: RowDVector<f64>,
        sample_period: f64,
    ) -> Result<Self> {
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(IlcError::invalid(
                "sample_period",
                sample_period,
                "must be positive",
            ));
        }
        if ad.nrows() == 0 {
            return Err(IlcError::Dimension {
                what: "state dimension",
                expected: 1,
                got: 0,
            });
        }
        check_dims(&ad, bd.len(), c.len())?;
        Ok(Self {
            ad,
            bd,
            c,
            sample_period,
        })
    }

    pub fn ad(&self) -> &DMatrix<f64> {
        &self.ad
    }

    pub fn bd(&self) -> &DVector<f64> {
        &self.bd
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn order(&self) -> usize {
        self.ad.nrows()
    }

    /// First `count` Markov parameters `C Ad^k Bd`, k = 0..count.
    pub fn markov_parameters(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut x = self.bd.clone();
        for _ in 0..count {
            out.push(self.c.dot(&x.transpose()));
            x = &self.ad * x;
        }
        out
    }

    /// Number of steps between an input change and the first output response.
    ///
    /// Returns `None` when the first `order` Markov parameters all vanish,
    /// which for an order-n system means the transfer function is zero.
    pub fn relative_degree(&self) -> Option<usize> {
        let n = self.order();
        let markov = self.markov_parameters(n);
        let scale = self.c.norm() * self.bd.norm() * self.ad.norm().max(1.0).powi(n as i32);
        if scale == 0.0 {
            return None;
        }
        markov
            .iter()
            .position(|m| m.abs() > 1e-13 * scale)
            .map(|k| k + 1)
    }

    /// Runs the state recursion and returns `y(1), ..., y(N)`.
    pub fn simulate(&self, input: &[f64], initial_state: &DVector<f64>) -> Result<DVector<f64>> {
        if input.is_empty() {
            return Err(IlcError::EmptyInput);
        }
        if initial_state.len() != self.order() {
            return Err(IlcError::Dimension {
                what: "initial state",
                expected: self.order(),
                got: initial_state.len(),
            });
        }
        let mut x = initial_state.clone();
        let mut next = DVector::zeros(self.order());
        let mut y = DVector::zeros(input.len());
        for (k, u) in input.iter().enumerate() {
            next.gemv(1.0, &self.ad, &x, 0.0);
            next.axpy(*u, &self.bd, 1.0);
            std::mem::swap(&mut x, &mut next);
            y[k] = self.c.dot(&x.transpose());
        }
        Ok(y)
    }
}

fn check_dims(a: &DMatrix<f64>, b_len: usize, c_len: usize) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(IlcError::Dimension {
            what: "state matrix columns",
            expected: n,
            got: a.ncols(),
        });
    }
    if b_len != n {
        return Err(IlcError::Dimension {
            what: "input vector",
            expected: n,
            got: b_len,
        });
    }
    if c_len != n {
        return Err(IlcError::Dimension {
            what: "output vector",
            expected: n,
            got: c_len,
        });
    }
    Ok(())
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(IlcError::invalid(name, value, "must be positive"))
    }
}

/// Controllable canonical realization of `numerator / (s^n + d1 s^(n-1) + ... + dn)`
/// with a constant numerator.
fn companion(denominator: &[f64], numerator: f64) -> ContinuousStateSpace {
    let n = denominator.len();
    let mut a = DMatrix::zeros(n, n);
    for (j, d) in denominator.iter().enumerate() {
        a[(0, j)] = -d;
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    let mut c = RowDVector::zeros(n);
    c[n - 1] = numerator;
    ContinuousStateSpace { a, b, c }
}

/// `wn^2 / (s^2 + 2 zeta wn s + wn^2)`.
pub fn make_second_order(damping_ratio: f64, natural_frequency: f64) -> Result<ContinuousStateSpace> {
    let zeta = positive("damping_ratio", damping_ratio)?;
    let wn = positive("natural_frequency", natural_frequency)?;
    Ok(companion(&[2.0 * zeta * wn, wn * wn], wn * wn))
}

/// `(a / (s + a)) * wn^2 / (s^2 + 2 zeta wn s + wn^2)`.
pub fn make_third_order(
    real_pole: f64,
    damping_ratio: f64,
    natural_frequency: f64,
) -> Result<ContinuousStateSpace> {
    let a = positive("real_pole", real_pole)?;
    let zeta = positive("damping_ratio", damping_ratio)?;
    let wn = positive("natural_frequency", natural_frequency)?;
    let w2 = wn * wn;
    let zw = 2.0 * zeta * wn;
    Ok(companion(&[a + zw, zw * a + w2, a * w2], a * w2))
}

/// Zero-order-hold equivalent, from one exponential of the augmented
/// matrix `[[A, B], [0, 0]] T`.
pub fn discretize_zoh(css: &ContinuousStateSpace, sample_period: f64) -> Result<DiscreteStateSpace> {
    let t = positive("sample_period", sample_period)?;
    let n = css.order();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(css.a() * t));
    aug.view_mut((0, n), (n, 1)).copy_from(&(css.b() * t));
    let phi = aug.exp();
    let ad = phi.view((0, 0), (n, n)).into_owned();
    let bd = phi.view((0, n), (n, 1)).column(0).into_owned();
    DiscreteStateSpace::new(ad, bd, css.c().clone(), t)
}

/// Finite transmission zeros of the sampled plant.
///
/// These are the finite generalized eigenvalues of the pencil
/// `([Ad, Bd; C, 0], blockdiag(I, 0))`. The pencil is solved through a
/// shift-and-invert transform `K = (M - s N)^-1 N`: every finite eigenvalue
/// `z` maps to `1 / (z - s)` and the infinite ones map to zero, so the
/// `n - r` largest eigenvalues of `K` (r = relative degree) carry the zeros.
pub fn sampled_zeros(dss: &DiscreteStateSpace) -> Result<Vec<Complex<f64>>> {
    let n = dss.order();
    let r = dss.relative_degree().ok_or(IlcError::SingularSystem)?;
    let finite = n - r;
    if finite == 0 {
        return Ok(Vec::new());
    }

    // Zeros are invariant to scaling B and C, so normalise both for conditioning.
    let b = dss.bd() / dss.bd().norm();
    let c = dss.c() / dss.c().norm();
    let mut pencil_m = DMatrix::zeros(n + 1, n + 1);
    pencil_m.view_mut((0, 0), (n, n)).copy_from(dss.ad());
    pencil_m.view_mut((0, n), (n, 1)).copy_from(&b);
    pencil_m.view_mut((n, 0), (1, n)).copy_from(&c);
    let mut pencil_n = DMatrix::zeros(n + 1, n + 1);
    pencil_n.view_mut((0, 0), (n, n)).fill_with_identity();

    const SHIFTS: [f64; 6] = [0.618_033_988_7, -1.324_717_957_2, 2.773_502_691_9, -0.412_310_562_6, 1.732_050_807_6, -5.099_019_513_6];
    let mut best: Option<(f64, DMatrix<f64>, f64)> = None;
    for &shift in &SHIFTS {
        let shifted = &pencil_m - &pencil_n * shift;
        let sv = shifted.singular_values();
        let cond = sv.min() / sv.max();
        if best.as_ref().is_none_or(|(c, _, _)| cond > *c) {
            best = Some((cond, shifted, shift));
        }
        if cond > 1e-6 {
            break;
        }
    }
    let (cond, shifted, shift) = best.expect("shift list is non-empty");
    if cond < 1e-14 {
        return Err(IlcError::SingularSystem);
    }
    let transformed = shifted
        .lu()
        .solve(&pencil_n)
        .ok_or(IlcError::SingularSystem)?;
    let mut mu: Vec<Complex<f64>> = transformed.complex_eigenvalues().iter().copied().collect();
    mu.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let mut zeros: Vec<Complex<f64>> = mu
        .into_iter()
        .take(finite)
        .map(|m| Complex::new(shift, 0.0) + m.inv())
        .collect();
    zeros.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    Ok(zeros)
}

/// Proportional feedback around the first-order plant `dy/dt + a y = u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderFeedbackSpec {
    pub plant_pole: f64,
    pub proportional_gain: f64,
    pub initial_output: f64,
}

impl FirstOrderFeedbackSpec {
    pub fn new(plant_pole: f64, proportional_gain: f64, initial_output: f64) -> Result<Self> {
        let rate = plant_pole + proportional_gain;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(IlcError::invalid(
                "plant_pole + proportional_gain",
                rate,
                "closed loop must be stable",
            ));
        }
        Ok(Self {
            plant_pole,
            proportional_gain,
            initial_output,
        })
    }

    pub fn closed_loop_rate(&self) -> f64 {
        self.plant_pole + self.proportional_gain
    }

    /// Closed loop `dy/dt = -(a + k) y + k y*` as a one-state system driven by `y*`.
    pub fn closed_loop(&self) -> ContinuousStateSpace {
        ContinuousStateSpace {
            a: DMatrix::from_element(1, 1, -self.closed_loop_rate()),
            b: DVector::from_element(1, self.proportional_gain),
            c: RowDVector::from_element(1, 1.0),
        }
    }
}

/// Output of the first-order closed loop at time `t`, as the homogeneous
/// term plus the weighted convolution of past commands, integrated by
/// adaptive Simpson quadrature.
pub fn analytic_first_order_response<F>(spec: &FirstOrderFeedbackSpec, command: F, t: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let rate = spec.closed_loop_rate();
    let homogeneous = (-rate * t).exp() * spec.initial_output;
    if t <= 0.0 {
        return homogeneous;
    }
    let k = spec.proportional_gain;
    let integrand = |tau: f64| (-rate * tau).exp() * k * command(t - tau);
    homogeneous + adaptive_simpson(&integrand, 0.0, t, 1e-10)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

const MAX_DEPTH: u32 = 52;
/// Levels always bisected before the error estimate is trusted, so that a
/// jump in a piecewise command cannot hide between the five sample points.
const MIN_DEPTH: u32 = 8;

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let converged = MAX_DEPTH - depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol;
    if depth == 0 || converged {
        return left + right + delta / 15.0;
    }
    let sub_tol = (tol * 0.5).max(1e-16);
    simpson_step(f, a, m, fa, flm, fm, left, sub_tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, sub_tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(a: f64) -> ContinuousStateSpace {
        ContinuousStateSpace::new(
            DMatrix::from_element(1, 1, a),
            DVector::from_element(1, 1.0),
            RowDVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn second_order_poles_and_gain() {
        let css = make_second_order(0.5, 37.0).unwrap();
        let mut poles = css.poles();
        poles.sort_by(|a, b| a.im.total_cmp(&b.im));
        let wd = 37.0 * 0.75f64.sqrt();
        assert_relative_eq!(poles[0].re, -18.5, epsilon = 1e-9);
        assert_relative_eq!(poles[0].im, -wd, epsilon = 1e-9);
        assert_relative_eq!(poles[1].im, wd, epsilon = 1e-9);
        assert_relative_eq!(css.dc_gain().unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(css.order(), 2);
    }

    #[test]
    fn critically_damped_has_repeated_pole() {
        let css = make_second_order(1.0, 1.0).unwrap();
        for p in css.poles() {
            assert!((p - Complex::new(-1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn third_order_poles() {
        let css = make_third_order(8.8, 0.5, 37.0).unwrap();
        let poles = css.poles();
        assert_eq!(poles.len(), 3);
        assert!(poles.iter().any(|p| (p - Complex::new(-8.8, 0.0)).norm() < 1e-8));
        for p in poles.iter().filter(|p| p.im.abs() > 1.0) {
            // roots of s^2 + 37 s + 1369
            let residual = p * p + p * 37.0 + Complex::new(1369.0, 0.0);
            assert!(residual.norm() < 1e-8, "{residual}");
        }
        assert_relative_eq!(css.dc_gain().unwrap(), 1.0, epsilon = 1e-12);
        let world = make_third_order(8.8, 0.5, 44.4).unwrap();
        assert_relative_eq!(world.dc_gain().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(matches!(
            make_second_order(0.0, 37.0),
            Err(IlcError::InvalidParameter { name: "damping_ratio", .. })
        ));
        assert!(make_second_order(0.5, -1.0).is_err());
        assert!(make_third_order(0.0, 0.5, 37.0).is_err());
        assert!(make_third_order(8.8, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn zoh_scalar_closed_form() {
        let d = discretize_zoh(&scalar(-5.0), 0.1).unwrap();
        assert_relative_eq!(d.ad()[(0, 0)], (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(d.bd()[0], (1.0 - (-0.5f64).exp()) / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn zoh_integrator() {
        let css = ContinuousStateSpace::new(
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![1.0, 2.0]),
            RowDVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let d = discretize_zoh(&css, 0.3).unwrap();
        assert_relative_eq!(d.ad().clone(), DMatrix::identity(2, 2), epsilon = 1e-15);
        assert_relative_eq!(d.bd()[1], 0.6, epsilon = 1e-15);
        assert!(discretize_zoh(&css, 0.0).is_err());
    }

    #[test]
    fn second_order_step_response_matches_closed_form() {
        let (zeta, wn, t) = (0.5f64, 37.0f64, 0.01);
        let d = discretize_zoh(&make_second_order(zeta, wn).unwrap(), t).unwrap();
        let y = d.simulate(&[1.0; 100], &DVector::zeros(2)).unwrap();
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        for k in 1..=100 {
            let tk = k as f64 * t;
            let exact = 1.0
                - (-zeta * wn * tk).exp()
                    * ((wd * tk).cos() + zeta / (1.0 - zeta * zeta).sqrt() * (wd * tk).sin());
            assert!((y[k - 1] - exact).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn simulate_pulse_gives_markov_parameters() {
        let d = discretize_zoh(&make_second_order(0.5, 37.0).unwrap(), 0.01).unwrap();
        let mut u = vec![0.0; 10];
        u[0] = 1.0;
        let y = d.simulate(&u, &DVector::zeros(2)).unwrap();
        for (yk, mk) in y.iter().zip(d.markov_parameters(10)) {
            assert_relative_eq!(*yk, mk, epsilon = 1e-15);
        }
        let zero = d.simulate(&[0.0; 5], &DVector::zeros(2)).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        assert!(matches!(
            d.simulate(&u, &DVector::zeros(3)),
            Err(IlcError::Dimension { .. })
        ));
    }

    #[test]
    fn first_order_homogeneous_and_steady_state() {
        let spec = FirstOrderFeedbackSpec::new(2.0, 3.0, 1.0).unwrap();
        let y = analytic_first_order_response(&spec, |_| 0.0, 0.7);
        assert_relative_eq!(y, (-5.0f64 * 0.7).exp(), epsilon = 1e-12);

        let spec = FirstOrderFeedbackSpec::new(2.0, 3.0, 0.0).unwrap();
        let y = analytic_first_order_response(&spec, |_| 4.0, 20.0);
        assert_relative_eq!(y, 3.0 * 4.0 / 5.0, epsilon = 1e-9);

        assert!(FirstOrderFeedbackSpec::new(1.0, -2.0, 0.0).is_err());
    }

    #[test]
    fn sampled_zero_counts() {
        let second = discretize_zoh(&make_second_order(0.5, 37.0).unwrap(), 0.01).unwrap();
        let z = sampled_zeros(&second).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z[0].norm() < 1.0);

        let third = discretize_zoh(&make_third_order(8.8, 0.5, 37.0).unwrap(), 0.01).unwrap();
        let z = sampled_zeros(&third).unwrap();
        assert_eq!(z.len(), 2);
        let outside: Vec<_> = z.iter().filter(|z| z.norm() > 1.0).collect();
        assert_eq!(outside.len(), 1);
        assert!(outside[0].re < -1.0 && outside[0].im.abs() < 1e-9);

        let first = discretize_zoh(&scalar(-3.0), 0.01).unwrap();
        assert!(sampled_zeros(&first).unwrap().is_empty());
    }

    #[test]
    fn zero_transfer_function_is_singular() {
        let d = DiscreteStateSpace::new(
            DMatrix::identity(2, 2) * 0.5,
            DVector::from_vec(vec![1.0, 0.0]),
            RowDVector::from_vec(vec![0.0, 1.0]),
            0.1,
        )
        .unwrap();
        assert_eq!(sampled_zeros(&d), Err(IlcError::SingularSystem));
    }
}
