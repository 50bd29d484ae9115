//! Closed-form prefactor for the two-term solution
//! `f(t) = cos(ωt/2) + α cos(3ωt/2)`.
//!
//! With `z = e^{iωt}` the antiderivative of `f⁻²` is elementary, and the
//! prefactor reads
//!
//! ```text
//! √(C / (B₁ B₂)),   C  = (3α − 1)(3α² + 2α − 1) ωm / (8παħ)
//!                   B₁ = −4 [atan w(t″) − atan w(t′)] / √(3α² − 1 + 2α) + A₂ + A₃ + A₄
//!                   B₂ = f(t′) f(t″)
//! ```
//!
//! with `w(t) = (2zα + 1 − α) / √(3α² − 1 + 2α)` and the rational terms
//! `A₂, A₃, A₄` below.  The published form of this expression contains
//! misprints; [`TYPO_LEDGER`] lists every place where the implementation
//! departs from the printed text and why.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mathieu::{mathieu_series, SeriesFrequency};
use crate::ode::OdeOptions;
use crate::propagator::prefactor::{
    fluctuation_prefactor_robust, Prefactor, DEFAULT_CAUSTIC_THRESHOLD,
};
use crate::propagator::window::{Stepping, WindowOptions};
use crate::trapmodel::DimensionlessParams;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypoEntry {
    pub printed: &'static str,
    pub implemented: &'static str,
    pub reason: &'static str,
}

pub const TYPO_LEDGER: &[TypoEntry] = &[
    TypoEntry {
        printed: "1/sqrt(3 alpha^2 - i + 2 alpha) multiplying the arctangent difference",
        implemented: "1/sqrt(3 alpha^2 - 1 + 2 alpha)",
        reason: "the arctangent arguments carry sqrt(3 alpha^2 - 1 + 2 alpha); differentiating \
                 the arctangent only reproduces 1/f^2 with the same radicand in the prefactor",
    },
    TypoEntry {
        printed:
            "last bracket: alpha/2 (e^{3iwt'/2 + 3iwt''} + ...) e^{-3iw(t'+t'')/2} + (...)/2, \
                  which expands to f(t'') - f(t')",
        implemented: "f(t') * f(t'')",
        reason: "the single-solution prefactor needs the product of the endpoint values; the \
                 difference vanishes for symmetric windows and has the wrong dimension count",
    },
    TypoEntry {
        printed: "-4 arctan(w(t'')) + 4 arctan(w(t')) with principal arctangents",
        implemented: "the same difference accumulated continuously along [t', t'']",
        reason: "w(t) moves on a circle in the complex plane and can cross the arctangent branch \
                 cuts; the principal values then jump by pi and the bracket loses its meaning as \
                 an integral of 1/f^2",
    },
];

fn radical(alpha: C64) -> C64 {
    (3.0 * alpha * alpha - 1.0 + 2.0 * alpha).sqrt()
}

fn atan_arg(alpha: C64, omega: f64, t: f64, rad: C64) -> C64 {
    let z = C64::new(0.0, omega * t).exp();
    (2.0 * z * alpha + 1.0 - alpha) / rad
}

/// Steps used to follow the arctangent along the window.
const ARCTAN_STEPS: usize = 512;

/// `atan w(t₂) − atan w(t₁)` accumulated continuously from `t₁` to `t₂`.
pub fn arctan_difference(alpha: C64, omega: f64, t1: f64, t2: f64) -> C64 {
    let rad = radical(alpha);
    let mut prev = atan_arg(alpha, omega, t1, rad).atan();
    let mut total = C64::new(0.0, 0.0);
    for k in 1..=ARCTAN_STEPS {
        let t = t1 + (t2 - t1) * k as f64 / ARCTAN_STEPS as f64;
        let v = atan_arg(alpha, omega, t, rad).atan();
        let mut d = v - prev;
        d.re -= PI * (d.re / PI).round();
        total += d;
        prev = v;
    }
    total
}

/// The arctangent part of `B₁`: `−4 [atan w(t₂) − atan w(t₁)] / √(3α² − 1 + 2α)`.
pub fn arctan_combination(alpha: C64, omega: f64, t1: f64, t2: f64) -> C64 {
    -4.0 * arctan_difference(alpha, omega, t1, t2) / radical(alpha)
}

fn two_term_f(alpha: C64, omega: f64, t: f64) -> C64 {
    (0.5 * omega * t).cos() + alpha * (1.5 * omega * t).cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormPrefactor {
    /// Principal square root of [`squared`](Self::squared).
    pub value: C64,
    pub squared: C64,
    /// `B₁`, proportional to `∫ f⁻² dt`.
    pub bracket: C64,
    /// `B₂ = f(t′) f(t″)`.
    pub endpoint_product: C64,
    /// The endpoint bracket as printed, `f(t″) − f(t′)`.
    pub printed_endpoint_bracket: C64,
}

impl ClosedFormPrefactor {
    /// `∫ f⁻² dt` implied by the bracket.
    pub fn integral(&self, alpha: C64, omega: f64) -> C64 {
        let k = 8.0 * alpha
            / (C64::new(0.0, 2.0 * omega)
                * (3.0 * alpha - 1.0)
                * (3.0 * alpha * alpha + 2.0 * alpha - 1.0));
        k * self.bracket
    }
}

pub fn closed_form_prefactor(
    alpha: C64,
    omega: f64,
    mass: f64,
    hbar: f64,
    (t1, t2): (f64, f64),
) -> Result<ClosedFormPrefactor> {
    if alpha == C64::new(0.0, 0.0) {
        return Err(Error::invalid("alpha", "the closed form divides by alpha"));
    }
    if !(t2 > t1) {
        return Err(Error::invalid(
            "window",
            format!("need t'' > t', got [{t1}, {t2}]"),
        ));
    }
    let e = |t: f64, k: f64| C64::new(0.0, k * omega * t).exp();
    let (z1, z2) = (e(t1, 1.0), e(t2, 1.0));
    let a = alpha;

    let a1 = arctan_combination(a, omega, t1, t2);
    let a2 = (a + 1.0) * (z2 - z1) / ((z2 + 1.0) * a * (z1 + 1.0));
    let den = (-a * z2 * z2 - z2 + z2 * a - a) * (-a * z1 * z1 - z1 + z1 * a - a);
    let a3 = (z2 * z1 * z1 - 2.0 * z1 * z1 + z1 - z2 - z1 * z2 * z2 + 2.0 * z2 * z2) * a * a / den;
    let a4 = (-z2 * z1 * z1 + z2 + z1 * z2 * z2 - z1) * a / den;
    let bracket = a1 + a2 + a3 + a4;

    let f1 = two_term_f(a, omega, t1);
    let f2 = two_term_f(a, omega, t2);
    let endpoint_product = f1 * f2;

    // As printed, expanded: α/2·(e^{3iωt′/2+3iωt″} + e^{3iωt′/2} − e^{3iωt″/2+3iωt′} − e^{3iωt″/2})·e^{−3iω(t′+t″)/2}
    //                     + ½(e^{3iωt′/2+2iωt″} + e^{3iωt′/2+iωt″} − e^{3iωt″/2+2iωt′} − e^{3iωt″/2+iωt′})·e^{−3iω(t′+t″)/2}
    let damp = C64::new(0.0, -1.5 * omega * (t1 + t2)).exp();
    let x = |k1: f64, k2: f64| C64::new(0.0, omega * (k1 * t1 + k2 * t2)).exp();
    let printed_endpoint_bracket =
        0.5 * a * (x(1.5, 3.0) + x(1.5, 0.0) - x(3.0, 1.5) - x(0.0, 1.5)) * damp
            + 0.5 * (x(1.5, 2.0) + x(1.5, 1.0) - x(2.0, 1.5) - x(1.0, 1.5)) * damp;

    let c = (3.0 * a - 1.0) * (3.0 * a * a + 2.0 * a - 1.0) * omega * mass / (8.0 * PI * a * hbar);
    let squared = c / (bracket * endpoint_product);
    Ok(ClosedFormPrefactor {
        value: squared.sqrt(),
        squared,
        bracket,
        endpoint_product,
        printed_endpoint_bracket,
    })
}

/// Closed form against the `D`-function prefactor of the two-term `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconciliation {
    pub window: (f64, f64),
    pub closed: ClosedFormPrefactor,
    pub robust: Prefactor,
    /// Relative difference of the squared prefactors, which carry no branch.
    pub rel_diff: f64,
}

/// Evaluates both prefactors for `f = cos(ωt/2) + α cos(3ωt/2)` on `window`.
pub fn reconcile(
    params: &DimensionlessParams,
    omega: f64,
    mass: f64,
    hbar: f64,
    window: (f64, f64),
    tol: f64,
) -> Result<Reconciliation> {
    let freq = SeriesFrequency {
        coeffs: mathieu_series(params, 2)?,
        drive_omega: omega,
    };
    let closed = closed_form_prefactor(params.alpha, omega, mass, hbar, window)?;
    let opts = WindowOptions {
        ode: OdeOptions::with_tol(tol),
        stepping: Stepping::Never,
        ..Default::default()
    };
    let robust =
        fluctuation_prefactor_robust(mass, hbar, &freq, window, &opts, DEFAULT_CAUSTIC_THRESHOLD)?;
    let r2 = robust.value() * robust.value();
    Ok(Reconciliation {
        window,
        closed,
        robust,
        rel_diff: ((closed.squared - r2) / r2).norm(),
    })
}

/// Three windows inside one drive period on which the two-term `f` stays
/// well away from zero.
pub fn zero_free_windows(alpha: C64, omega: f64) -> Vec<(f64, f64)> {
    let period = 2.0 * PI / omega;
    let n = 4096;
    let samples: Vec<f64> = (0..=n)
        .map(|k| two_term_f(alpha, omega, period * k as f64 / n as f64).norm())
        .collect();
    let peak = samples.iter().cloned().fold(0.0, f64::max);
    // Longest run of samples with |f| above a tenth of its peak.
    let (mut best, mut start) = ((0, 0), None);
    for (k, v) in samples.iter().enumerate() {
        match (v > &(0.1 * peak), start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                if k - s > best.1 - best.0 {
                    best = (s, k);
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if n + 1 - s > best.1 - best.0 {
            best = (s, n);
        }
    }
    let t = |k: usize| period * k as f64 / n as f64;
    let (a, b) = (t(best.0), t(best.1));
    let len = b - a;
    vec![
        (a + 0.05 * len, a + 0.35 * len),
        (a + 0.3 * len, a + 0.9 * len),
        (a + 0.02 * len, a + 0.98 * len),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_adaptive;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bracket_is_the_integral_of_inverse_square() {
        let omega = 2.0;
        for alpha in [c(0.3, 0.0), c(-2.62, -2.81e-11), c(-0.2, 0.0), c(0.5, 0.3)] {
            for w in [(0.1, 0.35), (-0.35, 0.3), (0.45, 1.5), (1.65, 2.7)] {
                let cf = closed_form_prefactor(alpha, omega, 1.0, 1.0, w).unwrap();
                let direct =
                    integrate_adaptive(|t| two_term_f(alpha, omega, t).powi(-2), w.0, w.1, 1e-13)
                        .unwrap();
                let got = cf.integral(alpha, omega);
                assert!(
                    ((got - direct) / direct).norm() < 1e-10,
                    "{alpha} {w:?}: {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn printed_endpoint_bracket_is_a_difference() {
        let (alpha, omega) = (c(0.4, 0.1), 2.0);
        let cf = closed_form_prefactor(alpha, omega, 1.0, 1.0, (0.2, 0.9)).unwrap();
        let diff = two_term_f(alpha, omega, 0.9) - two_term_f(alpha, omega, 0.2);
        assert!((cf.printed_endpoint_bracket - diff).norm() < 1e-14);
        assert!(
            (cf.endpoint_product - two_term_f(alpha, omega, 0.9) * two_term_f(alpha, omega, 0.2))
                .norm()
                < 1e-14
        );
    }

    #[test]
    fn arctan_part_is_odd_under_swap_for_real_alpha() {
        let alpha = c(0.3, 0.0);
        let forward = arctan_combination(alpha, 2.0, 0.1, 0.4);
        let backward = arctan_combination(alpha, 2.0, 0.4, 0.1);
        assert!(
            (forward.re + backward.re).abs() < 1e-13,
            "{forward} {backward}"
        );
    }

    #[test]
    fn short_window_growth_rate() {
        // √T · prefactor → √(m / (2πiħ f(t′)²·f(t′)⁻²)) = √(m/(2πiħ)) as T → 0.
        let alpha = c(-2.62, -2.81e-11);
        let limit = (c(1.0 / (2.0 * PI), 0.0) / c(0.0, 1.0)).sqrt();
        let mut last_err = f64::INFINITY;
        for t in [1e-2, 1e-3, 1e-4] {
            let cf = closed_form_prefactor(alpha, 2.0, 1.0, 1.0, (0.2, 0.2 + t)).unwrap();
            let scaled = cf.value * t.sqrt();
            let err = (scaled - limit).norm().min((scaled + limit).norm());
            assert!(err < last_err, "{t}: {err}");
            last_err = err;
        }
        assert!(last_err < 1e-3, "{last_err}");
    }

    #[test]
    fn matches_the_d_function_prefactor_on_zero_free_windows() {
        for (p, q) in [
            (c(0.3, -0.01), 0.5),
            (c(-0.2, 0.0), 0.8),
            (c(0.109, -1.5e-11), 0.55),
        ] {
            let params = DimensionlessParams::new(p, q).unwrap();
            for w in zero_free_windows(params.alpha, 2.0) {
                let r = reconcile(&params, 2.0, 1.0, 1.0, w, 1e-12).unwrap();
                assert!(r.rel_diff < 1e-8, "{p} {q} {w:?}: {}", r.rel_diff);
            }
        }
    }

    #[test]
    fn ledger_is_populated() {
        assert!(TYPO_LEDGER.len() >= 3);
        assert!(TYPO_LEDGER.iter().any(|e| e.printed.contains("- i +")));
    }
}
