//! Everything the propagator needs from one sweep over the window `[t′, t″]`.
//!
//! Two homogeneous solutions `h₀` (`h₀(t′)=1, ḣ₀(t′)=0`) and `h₁`
//! (`h₁(t′)=0, ḣ₁(t′)=1`), the forced solution `qₚ` with zero initial data,
//! and the forcing overlaps `∫F h₀`, `∫F h₁`, `∫F qₚ`.  `h₁` is the
//! Gelfand–Yaglom function `D`; its argument is followed continuously.
//!
//! Windows spanning many drive periods are crossed one period at a time with
//! a precomputed one-period propagator instead of integrating every cycle.

use num_complex::Complex64;

use crate::error::Result;
use crate::ode::{self, OdeOptions, Step};
use crate::records::Forcing;
use crate::trapmodel::Frequency;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// How to cross windows of a periodic frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// Period stepping once the window holds at least this many periods.
    Auto(usize),
    Never,
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping::Auto(64)
    }
}

/// Which path produced a set of window integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    PeriodStepped { periods: u64 },
}

/// Continuous argument of a complex curve sampled in order.
///
/// Consecutive samples are joined by chords; a chord through the origin
/// counts as a positive half-turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgTracker {
    last: C64,
    turns: i64,
    started: bool,
    peak_sqr: f64,
}

impl Default for ArgTracker {
    fn default() -> Self {
        ArgTracker {
            last: ZERO,
            turns: 0,
            started: false,
            peak_sqr: 0.0,
        }
    }
}

fn principal_arg(z: C64) -> f64 {
    if z.im == 0.0 && z.re < 0.0 {
        std::f64::consts::PI
    } else {
        z.im.atan2(z.re)
    }
}

impl ArgTracker {
    #[inline]
    pub fn push(&mut self, z: C64) {
        let n2 = z.norm_sqr();
        if n2 > self.peak_sqr {
            self.peak_sqr = n2;
        }
        if !self.started {
            if n2 > 0.0 {
                self.last = z;
                self.started = true;
            }
            return;
        }
        let a = self.last;
        let same_side =
            (a.re > 0.0 && z.re > 0.0) || (a.im > 0.0 && z.im > 0.0) || (a.im < 0.0 && z.im < 0.0);
        if !same_side {
            let total = principal_arg(a) + 2.0 * std::f64::consts::PI * self.turns as f64;
            let step = principal_arg(z * a.conj());
            let new_total = total + step;
            self.turns =
                ((new_total - principal_arg(z)) / (2.0 * std::f64::consts::PI)).round() as i64;
        }
        self.last = z;
    }

    /// Unwrapped argument of the last sample.
    pub fn arg(&self) -> f64 {
        principal_arg(self.last) + 2.0 * std::f64::consts::PI * self.turns as f64
    }

    pub fn peak(&self) -> f64 {
        self.peak_sqr.sqrt()
    }
}

/// `[h₀, ḣ₀, h₁, ḣ₁, qₚ, q̇ₚ, ∫Fh₀, ∫Fh₁, ∫Fqₚ]`
pub type WindowState = [C64; 9];

pub fn initial_state() -> WindowState {
    [ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowIntegrals {
    pub t_start: f64,
    pub t_end: f64,
    pub state: WindowState,
    /// Unwrapped `arg D(t″)`.
    pub d_arg: f64,
    /// Largest `|D|` seen along the window.
    pub d_peak: f64,
    pub route: Route,
}

impl WindowIntegrals {
    pub fn h0(&self) -> (C64, C64) {
        (self.state[0], self.state[1])
    }
    pub fn h1(&self) -> (C64, C64) {
        (self.state[2], self.state[3])
    }
    pub fn particular(&self) -> (C64, C64) {
        (self.state[4], self.state[5])
    }
    pub fn overlaps(&self) -> (C64, C64, C64) {
        (self.state[6], self.state[7], self.state[8])
    }
}

fn rhs<'a>(
    freq: &'a dyn Frequency,
    forcing: &'a Forcing,
    inv_mass: f64,
    origin: f64,
) -> impl FnMut(f64, &WindowState) -> WindowState + 'a {
    let forced = !forcing.is_zero();
    move |tau, y| {
        let w2 = freq.w2(origin + tau);
        if forced {
            let f = forcing.eval_local(origin, tau);
            [
                y[1],
                -w2 * y[0],
                y[3],
                -w2 * y[2],
                y[5],
                -w2 * y[4] + f * inv_mass,
                f * y[0],
                f * y[2],
                f * y[4],
            ]
        } else {
            [
                y[1],
                -w2 * y[0],
                y[3],
                -w2 * y[2],
                ZERO,
                ZERO,
                ZERO,
                ZERO,
                ZERO,
            ]
        }
    }
}

/// Time over which the homogeneous solutions change by O(1): the window
/// length or `1/√max|w̃²|` sampled over the first period, whichever is shorter.
fn time_scale(freq: &dyn Frequency, a: f64, span: f64) -> f64 {
    let look = freq.period().map_or(span, |p| p.min(span));
    let w2max = (0..=32)
        .map(|k| freq.w2(a + look * k as f64 / 32.0).norm())
        .fold(0.0, f64::max);
    if w2max > 0.0 {
        span.min(w2max.sqrt().recip())
    } else {
        span
    }
}

/// Magnitudes the window components reach within one time scale.
fn window_floor(freq: &dyn Frequency, forcing: &Forcing, mass: f64, a: f64, span: f64) -> [f64; 9] {
    let tc = time_scale(freq, a, span);
    let fmax = forcing.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let fm = fmax / mass;
    [
        1.0,
        1.0 / tc,
        tc,
        1.0,
        fm * tc * tc,
        fm * tc,
        fmax * tc,
        fmax * tc * tc,
        fmax * fm * tc.powi(3),
    ]
}

/// Integrates the window system over `[a, b]` from `state`, stopping at
/// forcing knots.  `on_step` sees every accepted step.
///
/// Time inside the integrator is measured from `a`: forced components start
/// at zero and would otherwise drown in the roundoff of `t − a`.
pub fn integrate_direct<O: FnMut(&Step<9>)>(
    freq: &dyn Frequency,
    forcing: &Forcing,
    mass: f64,
    (a, b): (f64, f64),
    state: WindowState,
    tracker: &mut ArgTracker,
    opts: &OdeOptions,
    mut on_step: O,
) -> Result<WindowState> {
    let span = b - a;
    let knots: Vec<f64> = forcing.knots().into_iter().map(|k| k - a).collect();
    let floor = window_floor(freq, forcing, mass, a, span);
    ode::integrate_with_floor(
        rhs(freq, forcing, 1.0 / mass, a),
        0.0,
        state,
        span,
        &knots,
        &floor,
        opts,
        |s| {
            tracker.push(s.y1[2]);
            on_step(&Step {
                t0: a + s.t0,
                t1: if s.t1 == span { b } else { a + s.t1 },
                ..*s
            });
        },
    )
}

/// One drive period `[t₀, t₀ + P]` of the homogeneous and unit-forced
/// problems, with the moments needed to step linear forcing across it.
#[derive(Debug, Clone)]
struct OnePeriod {
    /// Fundamental matrix at `P`: `[[φ₀, φ₁], [φ̇₀, φ̇₁]]`.
    monodromy: [[C64; 2]; 2],
    /// `(φ₀(τⱼ), φ₁(τⱼ))` at `τⱼ = jP/G`, `j = 1..=G`.
    table: Vec<(C64, C64)>,
    /// Responses `(u, u̇)(P)` to `F = 1` and `F = τ`.
    u0_end: (C64, C64),
    u1_end: (C64, C64),
    /// `∫φ₀, ∫φ₁` and `∫τφ₀, ∫τφ₁`.
    r0: (C64, C64),
    r1: (C64, C64),
    /// `∫u₀, ∫u₁, ∫τu₀, ∫τu₁`.
    d: [C64; 4],
}

fn one_period(
    freq: &dyn Frequency,
    mass: f64,
    t0: f64,
    period: f64,
    samples: usize,
    opts: &OdeOptions,
) -> Result<OnePeriod> {
    let inv_m = 1.0 / mass;
    // Integrated in τ = t − t₀ so that small offsets carry no roundoff from t₀.
    let rhs = |tau: f64, y: &[C64; 16]| -> [C64; 16] {
        let w2 = freq.w2(t0 + tau);
        [
            y[1],
            -w2 * y[0],
            y[3],
            -w2 * y[2],
            y[5],
            -w2 * y[4] + inv_m,
            y[7],
            -w2 * y[6] + tau * inv_m,
            y[0],
            y[2],
            tau * y[0],
            tau * y[2],
            y[4],
            y[6],
            tau * y[4],
            tau * y[6],
        ]
    };
    let mut init = [ZERO; 16];
    init[0] = ONE;
    init[3] = ONE;
    let stops: Vec<f64> = (1..samples)
        .map(|j| period * j as f64 / samples as f64)
        .collect();
    let mut table = Vec::with_capacity(samples);
    let tc = time_scale(freq, t0, period);
    let im = inv_m;
    let floor = [
        1.0,
        1.0 / tc,
        tc,
        1.0,
        im * tc * tc,
        im * tc,
        im * tc.powi(3),
        im * tc * tc,
        tc,
        tc * tc,
        tc * tc,
        tc.powi(3),
        im * tc.powi(3),
        im * tc.powi(4),
        im * tc.powi(4),
        im * tc.powi(5),
    ];
    let end = ode::integrate_with_floor(rhs, 0.0, init, period, &stops, &floor, opts, |s| {
        if stops.contains(&s.t1) {
            table.push((s.y1[0], s.y1[2]));
        }
    })?;
    table.push((end[0], end[2]));
    Ok(OnePeriod {
        monodromy: [[end[0], end[2]], [end[1], end[3]]],
        table,
        u0_end: (end[4], end[5]),
        u1_end: (end[6], end[7]),
        r0: (end[8], end[9]),
        r1: (end[10], end[11]),
        d: [end[12], end[13], end[14], end[15]],
    })
}

#[derive(Debug, Clone, Copy)]
pub struct WindowOptions {
    pub ode: OdeOptions,
    pub stepping: Stepping,
    /// Samples of `D` per period for argument tracking when stepping.
    pub samples_per_period: usize,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            ode: OdeOptions::default(),
            stepping: Stepping::default(),
            samples_per_period: 16,
        }
    }
}

pub fn window_integrals(
    freq: &dyn Frequency,
    forcing: &Forcing,
    mass: f64,
    window: (f64, f64),
    opts: &WindowOptions,
) -> Result<WindowIntegrals> {
    let (a, b) = window;
    let periods = match (opts.stepping, freq.period()) {
        (Stepping::Auto(min), Some(p)) => {
            let n = ((b - a) / p).floor();
            if n >= min.max(1) as f64 {
                Some((p, n as u64))
            } else {
                None
            }
        }
        _ => None,
    };
    let mut tracker = ArgTracker::default();
    let (state, route) = match periods {
        None => (
            integrate_direct(
                freq,
                forcing,
                mass,
                window,
                initial_state(),
                &mut tracker,
                &opts.ode,
                |_| {},
            )?,
            Route::Direct,
        ),
        Some((p, n)) => (
            step_periods(freq, forcing, mass, window, p, n, &mut tracker, opts)?,
            Route::PeriodStepped { periods: n },
        ),
    };
    Ok(WindowIntegrals {
        t_start: a,
        t_end: b,
        state,
        d_arg: tracker.arg(),
        d_peak: tracker.peak(),
        route,
    })
}

#[allow(clippy::too_many_arguments)]
fn step_periods(
    freq: &dyn Frequency,
    forcing: &Forcing,
    mass: f64,
    (a, b): (f64, f64),
    period: f64,
    n: u64,
    tracker: &mut ArgTracker,
    opts: &WindowOptions,
) -> Result<WindowState> {
    let fine = OdeOptions {
        rtol: opts.ode.rtol.min(1e-13),
        ..opts.ode
    };
    let g = opts.samples_per_period.max(2);
    let data = one_period(freq, mass, a, period, g, &fine)?;
    let m = data.monodromy;
    let forced = !forcing.is_zero();

    let mut y = initial_state();
    for k in 0..n {
        let tk = a + k as f64 * period;
        let tk1 = a + (k + 1) as f64 * period;
        let seg = forcing.segment(tk);
        if forced && forcing.segment(tk1) != seg {
            y = integrate_direct(
                freq,
                forcing,
                mass,
                (tk, tk1),
                y,
                tracker,
                &opts.ode,
                |_| {},
            )?;
            continue;
        }
        let (h0, h0d, h1, h1d, qp, qpd) = (y[0], y[1], y[2], y[3], y[4], y[5]);
        for &(p0, p1) in &data.table {
            tracker.push(p0 * h1 + p1 * h1d);
        }
        if forced {
            let fk = forcing.eval(tk);
            let sk = forcing.slope(seg);
            let dot = |r: (C64, C64), x: C64, xd: C64| r.0 * x + r.1 * xd;
            y[6] += fk * dot(data.r0, h0, h0d) + sk * dot(data.r1, h0, h0d);
            y[7] += fk * dot(data.r0, h1, h1d) + sk * dot(data.r1, h1, h1d);
            y[8] += fk * dot(data.r0, qp, qpd)
                + sk * dot(data.r1, qp, qpd)
                + fk * fk * data.d[0]
                + fk * sk * (data.d[1] + data.d[2])
                + sk * sk * data.d[3];
            y[4] = m[0][0] * qp + m[0][1] * qpd + fk * data.u0_end.0 + sk * data.u1_end.0;
            y[5] = m[1][0] * qp + m[1][1] * qpd + fk * data.u0_end.1 + sk * data.u1_end.1;
        }
        y[0] = m[0][0] * h0 + m[0][1] * h0d;
        y[1] = m[1][0] * h0 + m[1][1] * h0d;
        y[2] = m[0][0] * h1 + m[0][1] * h1d;
        y[3] = m[1][0] * h1 + m[1][1] * h1d;
    }
    let tn = a + n as f64 * period;
    if b - tn > 1e-12 * period {
        y = integrate_direct(freq, forcing, mass, (tn, b), y, tracker, &opts.ode, |_| {})?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trapmodel::EffectiveFrequencySpec;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tracker_counts_half_turns_through_origin() {
        let mut t = ArgTracker::default();
        for x in [1.0, 0.5, -0.5, -1.0, -0.2, 0.3, 1.0] {
            t.push(c(x, 0.0));
        }
        assert!((t.arg() - 2.0 * PI).abs() < 1e-15, "{}", t.arg());
    }

    #[test]
    fn tracker_follows_circles() {
        let mut t = ArgTracker::default();
        let n = 200;
        for k in 0..=3 * n {
            let th = -2.0 * PI * k as f64 / n as f64;
            t.push(C64::from_polar(2.0, th));
        }
        assert!((t.arg() + 6.0 * PI).abs() < 1e-9, "{}", t.arg());
        assert!((t.peak() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_window_matches_closed_form() {
        let w0: f64 = 1.7;
        let freq = EffectiveFrequencySpec::constant(w0 * w0);
        let fz = Forcing::zero(0.3, 2.1);
        let wi = window_integrals(&freq, &fz, 1.0, (0.3, 2.1), &WindowOptions::default()).unwrap();
        let t = 1.8;
        assert!((wi.h0().0 - (w0 * t).cos()).norm() < 1e-9);
        assert!((wi.h1().0 - (w0 * t).sin() / w0).norm() < 1e-9);
        assert!((wi.h1().1 - (w0 * t).cos()).norm() < 1e-9);
        // ω₀T ≈ 3.06 < π: no caustic passed yet.
        assert!(wi.d_arg.abs() < 1e-6, "{}", wi.d_arg);
        assert_eq!(wi.route, Route::Direct);
    }

    #[test]
    fn caustic_adds_half_turn() {
        let freq = EffectiveFrequencySpec::constant(1.0);
        let fz = Forcing::zero(0.0, 4.0);
        let wi = window_integrals(&freq, &fz, 1.0, (0.0, 4.0), &WindowOptions::default()).unwrap();
        assert!((wi.d_arg - PI).abs() < 1e-6, "{}", wi.d_arg);
    }

    fn paul(v: f64, damping: f64) -> EffectiveFrequencySpec {
        EffectiveFrequencySpec {
            u_tilde: c(0.2, -damping),
            v,
            drive_omega: 2.0,
        }
    }

    #[test]
    fn period_stepping_matches_direct_integration() {
        let freq = paul(0.9, 0.02);
        let window = (0.4, 0.4 + 40.0 * PI + 1.3);
        // Forcing with a knot every ~9 periods.
        let n = 15;
        let dt = (window.1 - window.0) / (n - 1) as f64;
        let values = (0..n)
            .map(|k| c((k as f64 * 0.7).sin(), 0.3 * (k as f64).cos()))
            .collect();
        let forcing = Forcing {
            t_start: window.0,
            dt,
            values,
        };
        let mut opts = WindowOptions::default();
        opts.ode.rtol = 1e-12;
        let stepped = window_integrals(
            &freq,
            &forcing,
            1.3,
            window,
            &WindowOptions {
                stepping: Stepping::Auto(4),
                ..opts
            },
        )
        .unwrap();
        let direct = window_integrals(
            &freq,
            &forcing,
            1.3,
            window,
            &WindowOptions {
                stepping: Stepping::Never,
                ..opts
            },
        )
        .unwrap();
        assert_eq!(stepped.route, Route::PeriodStepped { periods: 40 });
        for i in 0..9 {
            let (s, d) = (stepped.state[i], direct.state[i]);
            assert!(
                (s - d).norm() < 1e-8 * d.norm().max(1.0),
                "component {i}: {s} vs {d}"
            );
        }
        assert!(
            (stepped.d_arg - direct.d_arg).abs() < 1e-8,
            "{} {}",
            stepped.d_arg,
            direct.d_arg
        );
        assert!(
            direct.d_arg > 2.0 * PI,
            "several caustics expected, got {}",
            direct.d_arg
        );
    }
}
