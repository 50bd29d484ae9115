//! The Gaussian-fluctuation prefactor `√(m / (2πiħ D(t″)))`.
//!
//! `D` solves `D̈ + w̃²(t) D = 0` with `D(t′) = 0`, `Ḋ(t′) = 1`.  For any
//! solution `f` of the same equation that has no zero on the window,
//! `D(t″) = f(t′) f(t″) ∫ f⁻² dt`, which is the single-solution form.  Both
//! are provided; the `D` route is immune to zeros of `f`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mathieu::SeriesFrequency;
use crate::ode::{self, OdeOptions};
use crate::quad;
use crate::records::Forcing;
use crate::trapmodel::Frequency;

use super::window::{self, ArgTracker, WindowIntegrals, WindowOptions};

type C64 = Complex64;

/// A prefactor held as its logarithm on a continuous branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactor {
    pub log_value: C64,
    /// The function under the root (`D(t″)` or its single-solution form).
    pub d: C64,
    /// Unwrapped argument of `d`, followed from `t′`.
    pub d_arg: f64,
}

impl Prefactor {
    pub fn from_d(mass: f64, hbar: f64, d: C64, d_arg: f64) -> Self {
        let log_value = 0.5
            * C64::new(
                (mass / (2.0 * PI * hbar)).ln() - d.norm().ln(),
                -0.5 * PI - d_arg,
            );
        Prefactor {
            log_value,
            d,
            d_arg,
        }
    }

    pub fn value(&self) -> C64 {
        self.log_value.exp()
    }

    /// Number of caustics passed, read off the accumulated argument of `D`.
    pub fn caustics(&self) -> i64 {
        (self.d_arg / PI).round() as i64
    }
}

/// Relative size of `|D(t″)|` below which the window ends on a caustic.
pub const DEFAULT_CAUSTIC_THRESHOLD: f64 = 1e-9;

pub(crate) fn check_conjugate(wi: &WindowIntegrals, threshold: f64) -> Result<()> {
    let d = wi.h1().0.norm();
    let ratio = if wi.d_peak > 0.0 { d / wi.d_peak } else { 0.0 };
    if ratio <= threshold {
        return Err(Error::ConjugatePoint {
            t_end: wi.t_end,
            ratio,
        });
    }
    Ok(())
}

pub(crate) fn prefactor_from_window(mass: f64, hbar: f64, wi: &WindowIntegrals) -> Prefactor {
    Prefactor::from_d(mass, hbar, wi.h1().0, wi.d_arg)
}

/// Prefactor from the `D` function, branch fixed by following `arg D` from `t′`.
pub fn fluctuation_prefactor_robust(
    mass: f64,
    hbar: f64,
    freq: &dyn Frequency,
    window: (f64, f64),
    opts: &WindowOptions,
    caustic_threshold: f64,
) -> Result<Prefactor> {
    let fz = Forcing::zero(window.0, window.1);
    let wi = window::window_integrals(freq, &fz, mass, window, opts)?;
    check_conjugate(&wi, caustic_threshold)?;
    Ok(prefactor_from_window(mass, hbar, &wi))
}

/// Where the single solution `f` comes from.
pub enum FSource<'a> {
    /// A truncated cosine series in `ωt/2`.
    Series(&'a SeriesFrequency),
    /// Numeric solution of `f̈ + w̃² f = 0` from `(f, ḟ)` at `t′`.
    Ode {
        freq: &'a dyn Frequency,
        init: (C64, C64),
    },
}

/// Relative size of `|f|` treated as a zero of `f`.
const ZERO_THRESHOLD: f64 = 1e-8;

struct ZeroWatch {
    last: Option<C64>,
    last_t: f64,
    peak: f64,
}

impl ZeroWatch {
    /// True when the last sample is already close to a zero.
    fn near_zero(&self) -> bool {
        self.last.is_some_and(|f| f.norm() < 1e-3 * self.peak)
    }

    fn push(&mut self, t: f64, f: C64) -> Result<()> {
        self.last_t = t;
        self.peak = self.peak.max(f.norm());
        if f.norm() <= ZERO_THRESHOLD * self.peak {
            return Err(Error::CausticOnWindow { t });
        }
        if let Some(prev) = self.last {
            if (f * prev.conj()).arg().abs() > 0.5 * PI {
                return Err(Error::CausticOnWindow { t });
            }
        }
        self.last = Some(f);
        Ok(())
    }
}

/// The single-solution prefactor `√(m / (2πiħ f(t′) f(t″) ∫ f⁻² dt))`.
///
/// The branch follows `f(t′) f(t) ∫_{t′}^{t} f⁻²` continuously from `t = t′`,
/// which coincides with following `D`.
pub fn fluctuation_prefactor_single(
    mass: f64,
    hbar: f64,
    source: &FSource,
    window: (f64, f64),
    tol: f64,
) -> Result<Prefactor> {
    let (a, b) = window;
    if !(b > a) {
        return Err(Error::invalid(
            "window",
            format!("need t'' > t', got [{a}, {b}]"),
        ));
    }
    let mut watch = ZeroWatch {
        last: None,
        last_t: a,
        peak: 0.0,
    };
    let mut tracker = ArgTracker::default();
    let q = match source {
        FSource::Series(sf) => {
            let period = 2.0 * PI / sf.drive_omega;
            let pieces = (512.0 * ((b - a) / period).max(1.0)).ceil() as usize;
            let fa = sf.f(a);
            watch.push(a, fa)?;
            let mut integral = C64::new(0.0, 0.0);
            let mut q = C64::new(0.0, 0.0);
            for k in 1..=pieces {
                let lo = a + (b - a) * (k - 1) as f64 / pieces as f64;
                let hi = a + (b - a) * k as f64 / pieces as f64;
                let fh = sf.f(hi);
                watch.push(hi, fh)?;
                integral += quad::integrate_adaptive(|t| sf.f(t).powi(-2), lo, hi, tol)?;
                q = fa * fh * integral;
                tracker.push(q);
            }
            q
        }
        FSource::Ode { freq, init } => {
            if init.0 == C64::new(0.0, 0.0) {
                return Err(Error::CausticOnWindow { t: a });
            }
            let rhs = |t: f64, y: &[C64; 3]| [y[1], -freq.w2(t) * y[0], y[0].powi(-2)];
            let fa = init.0;
            watch.push(a, fa)?;
            let mut failure = None;
            let end = ode::integrate(
                rhs,
                a,
                [init.0, init.1, C64::new(0.0, 0.0)],
                b,
                &[],
                &OdeOptions::with_tol(tol),
                |s| {
                    if failure.is_none() {
                        if let Err(e) = watch.push(s.t1, s.y1[0]) {
                            failure = Some(e);
                        }
                        tracker.push(fa * s.y1[0] * s.y1[2]);
                    }
                },
            );
            if let Some(e) = failure {
                return Err(e);
            }
            match end {
                Ok(end) => fa * end[0] * end[2],
                // The integrand 1/f² blows up as f approaches a zero.
                Err(_) if watch.near_zero() => {
                    return Err(Error::CausticOnWindow { t: watch.last_t })
                }
                Err(e) => return Err(e),
            }
        }
    };
    Ok(Prefactor::from_d(mass, hbar, q, tracker.arg()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathieu::mathieu_series;
    use crate::trapmodel::{dimensionless, EffectiveFrequencySpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn harmonic_log(mass: f64, hbar: f64, w0: f64, t: f64) -> C64 {
        // √(mω₀ / (2πiħ sin ω₀T)), principal branch for ω₀T < π
        (C64::new(mass * w0 / (2.0 * PI * hbar * (w0 * t).sin()), 0.0) / c(0.0, 1.0))
            .sqrt()
            .ln()
    }

    #[test]
    fn harmonic_prefactor_both_routes() {
        let w0: f64 = 1.3;
        let freq = EffectiveFrequencySpec::constant(w0 * w0);
        let (a, b) = (0.2, 1.1);
        let exact = harmonic_log(2.0, 0.7, w0, b - a);
        let robust = fluctuation_prefactor_robust(
            2.0,
            0.7,
            &freq,
            (a, b),
            &WindowOptions {
                ode: OdeOptions::with_tol(1e-13),
                ..Default::default()
            },
            DEFAULT_CAUSTIC_THRESHOLD,
        )
        .unwrap();
        assert!(
            (robust.log_value - exact).norm() < 1e-10 * exact.norm(),
            "{} {}",
            robust.log_value,
            exact
        );
        // f = cos ω₀(t − t₀) with t₀ inside the window.
        let t0 = 0.5;
        let init = (
            c((w0 * (a - t0)).cos(), 0.0),
            c(-w0 * (w0 * (a - t0)).sin(), 0.0),
        );
        let single = fluctuation_prefactor_single(
            2.0,
            0.7,
            &FSource::Ode { freq: &freq, init },
            (a, b),
            1e-13,
        )
        .unwrap();
        assert!(
            (single.log_value - exact).norm() < 1e-10 * exact.norm(),
            "{} {}",
            single.log_value,
            exact
        );
    }

    #[test]
    fn free_particle_limit() {
        let freq = EffectiveFrequencySpec::constant(0.0);
        let p = fluctuation_prefactor_robust(
            1.0,
            1.0,
            &freq,
            (0.0, 2.5),
            &WindowOptions::default(),
            1e-9,
        )
        .unwrap();
        let exact = (C64::new(1.0 / (2.0 * PI * 2.5), 0.0) / c(0.0, 1.0)).sqrt();
        assert!((p.value() - exact).norm() < 1e-12);
        let small = EffectiveFrequencySpec::constant(1e-10);
        let q = fluctuation_prefactor_robust(
            1.0,
            1.0,
            &small,
            (0.0, 2.5),
            &WindowOptions::default(),
            1e-9,
        )
        .unwrap();
        assert!((q.value() - exact).norm() < 1e-9);
    }

    #[test]
    fn single_form_detects_zero_of_f() {
        let freq = EffectiveFrequencySpec::constant(1.0);
        let r = fluctuation_prefactor_single(
            1.0,
            1.0,
            &FSource::Ode {
                freq: &freq,
                init: (c(1.0, 0.0), c(0.0, 0.0)),
            },
            (0.0, 2.0),
            1e-10,
        );
        assert!(matches!(r, Err(Error::CausticOnWindow { .. })), "{r:?}");
        let spec = EffectiveFrequencySpec {
            u_tilde: c(0.3, -0.01),
            v: 0.8,
            drive_omega: 2.0,
        };
        let sf = SeriesFrequency {
            coeffs: mathieu_series(&dimensionless(&spec).unwrap(), 2).unwrap(),
            drive_omega: 2.0,
        };
        // The two-term series vanishes at ωt/2 = π/2.
        let r = fluctuation_prefactor_single(1.0, 1.0, &FSource::Series(&sf), (1.0, 2.0), 1e-10);
        assert!(matches!(r, Err(Error::CausticOnWindow { .. })), "{r:?}");
    }

    #[test]
    fn conjugate_point_reported() {
        let freq = EffectiveFrequencySpec::constant(1.0);
        let r = fluctuation_prefactor_robust(
            1.0,
            1.0,
            &freq,
            (0.0, PI),
            &WindowOptions::default(),
            1e-9,
        );
        assert!(matches!(r, Err(Error::ConjugatePoint { .. })), "{r:?}");
    }

    #[test]
    fn series_source_agrees_with_its_own_frequency() {
        let spec = EffectiveFrequencySpec {
            u_tilde: c(0.3, -0.01),
            v: 0.8,
            drive_omega: 2.0,
        };
        let sf = SeriesFrequency {
            coeffs: mathieu_series(&dimensionless(&spec).unwrap(), 2).unwrap(),
            drive_omega: 2.0,
        };
        for window in [(0.1, 0.35), (-0.3, 0.3), (1.7, 2.6)] {
            let single =
                fluctuation_prefactor_single(1.0, 1.0, &FSource::Series(&sf), window, 1e-12)
                    .unwrap();
            let robust = fluctuation_prefactor_robust(
                1.0,
                1.0,
                &sf,
                window,
                &WindowOptions {
                    ode: OdeOptions::with_tol(1e-12),
                    ..Default::default()
                },
                1e-9,
            )
            .unwrap();
            let rel = ((single.value() - robust.value()) / robust.value()).norm();
            assert!(rel < 1e-8, "{window:?}: {rel}");
        }
    }
}
