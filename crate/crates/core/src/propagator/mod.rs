//! The restricted propagator `U[a](x″, t″; x′, t′)`.
//!
//! Completing the square in the measurement weight turns the monitored
//! problem into a driven oscillator with complex frequency,
//!
//! ```text
//! U[a] = exp{ −λ∫a² } · √(m / (2πiħ D(t″))) · exp{ (i/ħ) S_cl },   λ = 2/(TΔa²)
//! ```
//!
//! where `S_cl` is the action `∫ [½mq̇² − ½m w̃² q² + F q] dt` of the
//! classical path through `x′` and `x″`.  Everything is assembled in the log
//! domain: at realistic parameters `λ∫a²` and `Im S_cl / ħ` are far outside
//! the range of `f64` exponentials.

pub mod closed_form;
pub mod prefactor;
pub mod window;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::quad::gauss_legendre8_points;
use crate::records::{self, Forcing, MeasurementRecord};
use crate::trapmodel::{
    derive_frequency_coefficients, effective_frequency, Axis, EffectiveFrequencySpec, Frequency,
    MeasurementConfig, TrapParameters,
};

pub use closed_form::{
    closed_form_prefactor, reconcile, zero_free_windows, ClosedFormPrefactor, Reconciliation,
    TypoEntry, TYPO_LEDGER,
};
pub use prefactor::{
    fluctuation_prefactor_robust, fluctuation_prefactor_single, FSource, Prefactor,
    DEFAULT_CAUSTIC_THRESHOLD,
};
pub use window::{Route, Stepping, WindowIntegrals, WindowOptions};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub x_start: f64,
    pub x_end: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl BoundaryConditions {
    pub fn new(x_start: f64, x_end: f64, t_start: f64, t_end: f64) -> Result<Self> {
        let bc = BoundaryConditions {
            x_start,
            x_end,
            t_start,
            t_end,
        };
        bc.validate()?;
        Ok(bc)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x_start.is_finite() || !self.x_end.is_finite() {
            return Err(Error::invalid("boundary", "positions must be finite"));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::invalid(
                "boundary",
                format!(
                    "need t_end > t_start, got [{}, {}]",
                    self.t_start, self.t_end
                ),
            ));
        }
        Ok(())
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    fn check_against(&self, meas: &MeasurementConfig) -> Result<()> {
        let slack = 1e-9 * meas.duration();
        if (self.t_start - meas.t_start).abs() > slack || (self.t_end - meas.t_end).abs() > slack {
            return Err(Error::invalid(
                "boundary",
                format!(
                    "times [{}, {}] differ from the measurement window [{}, {}]",
                    self.t_start, self.t_end, meas.t_start, meas.t_end
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    pub tol: f64,
    pub stepping: Stepping,
    pub caustic_threshold: f64,
    pub samples_per_period: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            tol: 1e-10,
            stepping: Stepping::default(),
            caustic_threshold: DEFAULT_CAUSTIC_THRESHOLD,
            samples_per_period: 16,
        }
    }
}

impl PropagationOptions {
    pub fn with_tol(tol: f64) -> Self {
        PropagationOptions {
            tol,
            ..Default::default()
        }
    }

    pub fn window_options(&self) -> WindowOptions {
        WindowOptions {
            ode: OdeOptions::with_tol(self.tol),
            stepping: self.stepping,
            samples_per_period: self.samples_per_period,
        }
    }
}

/// The classical path on the solver's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSolution {
    pub grid: Vec<f64>,
    pub q: Vec<C64>,
    pub q_dot: Vec<C64>,
    pub q_ddot: Vec<C64>,
    /// `S_cl` from the boundary formula `(m/2)[q q̇] + ½∫F q`.
    pub action: C64,
    /// Initial velocity selected by the boundary conditions.
    pub initial_velocity: C64,
    pub window: WindowIntegrals,
}

fn boundary_action(mass: f64, bc: &BoundaryConditions, wi: &WindowIntegrals) -> (C64, C64, C64) {
    let (h0, h0d) = wi.h0();
    let (h1, h1d) = wi.h1();
    let (qp, qpd) = wi.particular();
    let (j0, j1, jp) = wi.overlaps();
    let x1 = bc.x_start;
    let c = (bc.x_end - x1 * h0 - qp) / h1;
    let v_end = x1 * h0d + c * h1d + qpd;
    let action = 0.5 * mass * (bc.x_end * v_end - x1 * c) + 0.5 * (x1 * j0 + c * j1 + jp);
    (action, c, v_end)
}

/// Solves `m q̈ + m w̃² q = F` with `q(t′) = x′`, `q(t″) = x″` by superposing
/// two homogeneous solutions and one particular solution.
pub fn classical_trajectory(
    freq: &dyn Frequency,
    forcing: &Forcing,
    mass: f64,
    bc: &BoundaryConditions,
    opts: &PropagationOptions,
) -> Result<ClassicalSolution> {
    bc.validate()?;
    let mut steps: Vec<(f64, window::WindowState)> = vec![(bc.t_start, window::initial_state())];
    let mut tracker = window::ArgTracker::default();
    let state = window::integrate_direct(
        freq,
        forcing,
        mass,
        bc.window(),
        window::initial_state(),
        &mut tracker,
        &OdeOptions::with_tol(opts.tol),
        |s| steps.push((s.t1, s.y1)),
    )?;
    let wi = WindowIntegrals {
        t_start: bc.t_start,
        t_end: bc.t_end,
        state,
        d_arg: tracker.arg(),
        d_peak: tracker.peak(),
        route: Route::Direct,
    };
    prefactor::check_conjugate(&wi, opts.caustic_threshold)?;
    let (action, c, _) = boundary_action(mass, bc, &wi);
    let x1 = bc.x_start;
    let mut sol = ClassicalSolution {
        grid: Vec::with_capacity(steps.len()),
        q: Vec::with_capacity(steps.len()),
        q_dot: Vec::with_capacity(steps.len()),
        q_ddot: Vec::with_capacity(steps.len()),
        action,
        initial_velocity: c,
        window: wi,
    };
    for (t, y) in steps {
        let q = x1 * y[0] + c * y[2] + y[4];
        let qd = x1 * y[1] + c * y[3] + y[5];
        sol.grid.push(t);
        sol.q.push(q);
        sol.q_dot.push(qd);
        sol.q_ddot.push(forcing.eval(t) / mass - freq.w2(t) * q);
    }
    Ok(sol)
}

/// `S_cl = ∫ [½m q̇² − ½m w̃² q² + F q] dt` by eight-point Gauss–Legendre on
/// every solver step, with `q` from quintic Hermite interpolation.
pub fn classical_action(
    sol: &ClassicalSolution,
    freq: &dyn Frequency,
    forcing: &Forcing,
    mass: f64,
) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for i in 0..sol.grid.len().saturating_sub(1) {
        let (a, b) = (sol.grid[i], sol.grid[i + 1]);
        let end0 = [sol.q[i], sol.q_dot[i], sol.q_ddot[i]];
        let end1 = [sol.q[i + 1], sol.q_dot[i + 1], sol.q_ddot[i + 1]];
        for (t, w) in gauss_legendre8_points(a, b) {
            let (q, qd) = ode::hermite5(a, b, end0, end1, t);
            let lag = 0.5 * mass * qd * qd - 0.5 * mass * freq.w2(t) * q * q + forcing.eval(t) * q;
            total += w * lag;
        }
    }
    total
}

/// One axis of a monitored-trap problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisScenario {
    pub params: TrapParameters,
    pub axis: Axis,
    pub measurement: MeasurementConfig,
    pub record: MeasurementRecord,
    pub boundary: BoundaryConditions,
}

impl AxisScenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.measurement.validate()?;
        self.boundary.validate()?;
        self.boundary.check_against(&self.measurement)?;
        self.record.check_window(&self.measurement)
    }

    pub fn effective_frequency(&self) -> Result<EffectiveFrequencySpec> {
        let coeffs = derive_frequency_coefficients(&self.params, self.axis)?;
        Ok(effective_frequency(
            &coeffs,
            &self.measurement,
            &self.params,
        ))
    }

    pub fn forcing(&self) -> Forcing {
        records::forcing(&self.record, &self.measurement, &self.params)
    }

    /// The same problem with the measurement switched off.
    pub fn unmeasured(&self) -> AxisScenario {
        let mut s = self.clone();
        s.measurement.resolution = f64::INFINITY;
        s
    }
}

/// How `S_cl` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMethod {
    /// Lagrangian quadrature over the dense classical path.
    Quadrature,
    /// `(m/2)[q q̇] + ½∫F q` from period-stepped window integrals.
    BoundaryFormula,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorResult {
    /// `ln U`, on the branch fixed by following `D` from `t′`.
    pub log_amplitude: C64,
    pub action: C64,
    /// `i S_cl / ħ`.
    pub action_term: C64,
    /// Log of the fluctuation prefactor.
    pub prefactor_term: C64,
    /// `−(2/(TΔa²)) ∫ a² dt`.
    pub record_term: f64,
    pub prefactor: Prefactor,
    pub method: ActionMethod,
    pub route: Route,
}

impl PropagatorResult {
    fn assemble(
        record_term: f64,
        action: C64,
        hbar: f64,
        prefactor: Prefactor,
        method: ActionMethod,
        route: Route,
    ) -> Self {
        let action_term = C64::new(0.0, 1.0) * action / hbar;
        let prefactor_term = prefactor.log_value;
        PropagatorResult {
            log_amplitude: record_term + action_term + prefactor_term,
            action,
            action_term,
            prefactor_term,
            record_term,
            prefactor,
            method,
            route,
        }
    }

    pub fn log_modulus(&self) -> f64 {
        self.log_amplitude.re
    }

    /// Phase reduced to `(−π, π]`.
    pub fn phase(&self) -> f64 {
        let w = self.log_amplitude.im - 2.0 * PI * self.winding() as f64;
        if w <= -PI {
            w + 2.0 * PI
        } else {
            w
        }
    }

    /// Whole turns removed by [`phase`](Self::phase).
    pub fn winding(&self) -> i64 {
        (self.log_amplitude.im / (2.0 * PI)).round() as i64
    }
}

pub fn restricted_propagator(
    scenario: &AxisScenario,
    opts: &PropagationOptions,
) -> Result<PropagatorResult> {
    scenario.validate()?;
    let spec = scenario.effective_frequency()?;
    let forcing = scenario.forcing();
    let record_term = records::record_term(&scenario.record, &scenario.measurement);
    let mass = scenario.params.mass;
    let hbar = scenario.params.hbar;
    let bc = &scenario.boundary;

    let wopts = opts.window_options();
    let stepped = match (wopts.stepping, spec.period()) {
        (Stepping::Auto(min), Some(p)) => {
            ((bc.t_end - bc.t_start) / p).floor() >= min.max(1) as f64
        }
        _ => false,
    };
    if stepped {
        let wi = window::window_integrals(&spec, &forcing, mass, bc.window(), &wopts)?;
        prefactor::check_conjugate(&wi, opts.caustic_threshold)?;
        let (action, _, _) = boundary_action(mass, bc, &wi);
        let pf = prefactor::prefactor_from_window(mass, hbar, &wi);
        Ok(PropagatorResult::assemble(
            record_term,
            action,
            hbar,
            pf,
            ActionMethod::BoundaryFormula,
            wi.route,
        ))
    } else {
        let sol = classical_trajectory(&spec, &forcing, mass, bc, opts)?;
        let action = classical_action(&sol, &spec, &forcing, mass);
        let pf = prefactor::prefactor_from_window(mass, hbar, &sol.window);
        Ok(PropagatorResult::assemble(
            record_term,
            action,
            hbar,
            pf,
            ActionMethod::Quadrature,
            Route::Direct,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{render, RecordSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn harmonic(w0: f64) -> EffectiveFrequencySpec {
        EffectiveFrequencySpec::constant(w0 * w0)
    }

    #[test]
    fn homogeneous_zero_boundary_gives_zero_path() {
        let bc = BoundaryConditions::new(0.0, 0.0, 0.0, 1.0).unwrap();
        let sol = classical_trajectory(
            &harmonic(1.2),
            &Forcing::zero(0.0, 1.0),
            1.0,
            &bc,
            &Default::default(),
        )
        .unwrap();
        assert!(sol.q.iter().all(|q| q.norm() == 0.0));
        assert_eq!(sol.action, c(0.0, 0.0));
        assert_eq!(
            classical_action(&sol, &harmonic(1.2), &Forcing::zero(0.0, 1.0), 1.0),
            c(0.0, 0.0)
        );
    }

    #[test]
    fn harmonic_boundary_value_problem() {
        let (w0, m) = (1.4, 2.0);
        let (x1, x2, t1, t2) = (0.3, -0.8, 0.5, 2.1);
        let bc = BoundaryConditions::new(x1, x2, t1, t2).unwrap();
        let fz = Forcing::zero(t1, t2);
        let sol = classical_trajectory(
            &harmonic(w0),
            &fz,
            m,
            &bc,
            &PropagationOptions::with_tol(1e-12),
        )
        .unwrap();
        let big_t: f64 = t2 - t1;
        for (t, q) in sol.grid.iter().zip(&sol.q) {
            let exact =
                (x2 * (w0 * (t - t1)).sin() + x1 * (w0 * (t2 - t)).sin()) / (w0 * big_t).sin();
            assert!((q - exact).norm() < 1e-9, "t = {t}");
        }
        let exact_s = m * w0 / (2.0 * (w0 * big_t).sin())
            * ((x1 * x1 + x2 * x2) * (w0 * big_t).cos() - 2.0 * x1 * x2);
        let quad = classical_action(&sol, &harmonic(w0), &fz, m);
        assert!(
            (quad - exact_s).norm() < 1e-9 * exact_s.abs(),
            "{quad} vs {exact_s}"
        );
        assert!((sol.action - exact_s).norm() < 1e-9 * exact_s.abs());
    }

    #[test]
    fn free_particle_action() {
        let bc = BoundaryConditions::new(1.0, 3.5, 0.0, 2.0).unwrap();
        let fz = Forcing::zero(0.0, 2.0);
        let sol = classical_trajectory(&harmonic(0.0), &fz, 3.0, &bc, &Default::default()).unwrap();
        let exact = 3.0 * 2.5 * 2.5 / (2.0 * 2.0);
        assert!((classical_action(&sol, &harmonic(0.0), &fz, 3.0) - exact).norm() < 1e-10);
    }

    #[test]
    fn conjugate_point_at_half_period() {
        let bc = BoundaryConditions::new(0.2, 0.5, 0.0, PI / 1.5).unwrap();
        let r = classical_trajectory(
            &harmonic(1.5),
            &Forcing::zero(0.0, PI / 1.5),
            1.0,
            &bc,
            &Default::default(),
        );
        assert!(matches!(r, Err(Error::ConjugatePoint { .. })), "{r:?}");
    }

    #[test]
    fn forced_complex_problem_satisfies_boundary_values_and_shooting() {
        let spec = EffectiveFrequencySpec {
            u_tilde: c(0.4, -0.1),
            v: 0.7,
            drive_omega: 2.0,
        };
        let (t1, t2) = (0.2, 2.3);
        let forcing = Forcing {
            t_start: t1,
            dt: (t2 - t1) / 6.0,
            values: (0..7).map(|k| c(0.0, -0.3 * (k as f64).sin())).collect(),
        };
        let bc = BoundaryConditions::new(0.4, -0.2, t1, t2).unwrap();
        let sol = classical_trajectory(
            &spec,
            &forcing,
            1.7,
            &bc,
            &PropagationOptions::with_tol(1e-12),
        )
        .unwrap();
        assert!((sol.q[0] - 0.4).norm() < 1e-14);
        assert!((sol.q.last().unwrap() - (-0.2)).norm() < 1e-9);
        // Independent shooting from (x′, q̇(t′)).
        let rhs = |t: f64, y: &[C64; 2]| [y[1], forcing.eval(t) / 1.7 - spec.w2(t) * y[0]];
        let mut shots = Vec::new();
        ode::integrate(
            rhs,
            t1,
            [c(0.4, 0.0), sol.initial_velocity],
            t2,
            &forcing.knots(),
            &OdeOptions::with_tol(1e-12),
            |s| shots.push((s.t1, s.y1[0])),
        )
        .unwrap();
        let (t_end, q_end) = *shots.last().unwrap();
        assert_eq!(t_end, t2);
        assert!((q_end - (-0.2)).norm() < 1e-8);
        // The two action evaluations agree.
        let quad = classical_action(&sol, &spec, &forcing, 1.7);
        assert!(
            ((quad - sol.action) / sol.action).norm() < 1e-8,
            "{quad} vs {}",
            sol.action
        );
    }

    fn barium_like() -> AxisScenario {
        // Dimensionless trap with p = 0.4 − 0.1i, q = 0.35.
        let params = TrapParameters::new(1.0, 1.0, 1.0, 0.4, 0.7, 2.0)
            .unwrap()
            .with_hbar(1.0)
            .unwrap();
        let measurement = MeasurementConfig::new(0.1, 1.1, (4.0f64 / (0.1 * 1.0)).sqrt()).unwrap();
        let record = render(
            &RecordSpec::Sinusoid {
                amplitude: 1.5,
                omega: 0.9,
                phase: 0.2,
            },
            &measurement,
            41,
        )
        .unwrap();
        AxisScenario {
            params,
            axis: Axis::X,
            measurement,
            record,
            boundary: BoundaryConditions::new(0.3, -0.4, 0.1, 1.1).unwrap(),
        }
    }

    #[test]
    fn log_amplitude_is_the_sum_of_its_parts() {
        let s = barium_like();
        let r = restricted_propagator(&s, &Default::default()).unwrap();
        assert_eq!(
            r.log_amplitude,
            r.record_term + r.action_term + r.prefactor_term
        );
        assert!(r.phase() > -PI && r.phase() <= PI);
        assert!((r.phase() + 2.0 * PI * r.winding() as f64 - r.log_amplitude.im).abs() < 1e-12);
        assert_eq!(r.method, ActionMethod::Quadrature);
    }

    #[test]
    fn zero_record_and_boundaries_leave_only_the_prefactor() {
        let mut s = barium_like();
        s.record = render(&RecordSpec::Constant { amplitude: 0.0 }, &s.measurement, 5).unwrap();
        s.boundary.x_start = 0.0;
        s.boundary.x_end = 0.0;
        let r = restricted_propagator(&s, &Default::default()).unwrap();
        assert_eq!(r.record_term, 0.0);
        assert_eq!(r.action, c(0.0, 0.0));
        assert_eq!(r.log_amplitude, r.prefactor_term);
    }

    #[test]
    fn window_mismatch_is_rejected() {
        let mut s = barium_like();
        s.boundary.t_end = 1.2;
        assert!(matches!(
            restricted_propagator(&s, &Default::default()),
            Err(Error::InvalidParameter {
                field: "boundary",
                ..
            })
        ));
    }

    #[test]
    fn stepped_and_direct_routes_agree() {
        let params = TrapParameters::new(1.0, 1.0, 1.0, 0.4, 0.7, 2.0)
            .unwrap()
            .with_hbar(1.0)
            .unwrap();
        let window = (0.1, 0.1 + 24.0 * PI + 0.7);
        let measurement = MeasurementConfig::new(window.0, window.1, 30.0).unwrap();
        let record = render(
            &RecordSpec::Sinusoid {
                amplitude: 2.0,
                omega: 0.05,
                phase: 0.0,
            },
            &measurement,
            4,
        )
        .unwrap();
        let s = AxisScenario {
            params,
            axis: Axis::X,
            measurement,
            record,
            boundary: BoundaryConditions::new(0.3, 0.1, window.0, window.1).unwrap(),
        };
        let opts = PropagationOptions {
            tol: 1e-12,
            stepping: Stepping::Auto(8),
            ..Default::default()
        };
        let stepped = restricted_propagator(&s, &opts).unwrap();
        let direct = restricted_propagator(
            &s,
            &PropagationOptions {
                stepping: Stepping::Never,
                ..opts
            },
        )
        .unwrap();
        assert_eq!(stepped.method, ActionMethod::BoundaryFormula);
        assert_eq!(direct.method, ActionMethod::Quadrature);
        let d = (stepped.log_amplitude - direct.log_amplitude).norm();
        assert!(
            d < 1e-7 * direct.log_amplitude.norm(),
            "{} vs {}",
            stepped.log_amplitude,
            direct.log_amplitude
        );
    }
}
