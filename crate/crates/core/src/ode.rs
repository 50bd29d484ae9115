//! Adaptive Dormand–Prince 5(4) integration of small complex linear systems.
//!
//! The state is a fixed-size array of complex numbers.  Each component's error
//! is measured against the largest modulus that component has reached so
//! far, so the same relative tolerance works for SI quantities of wildly
//! different size.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks one from the derivative size.
    pub first_step: Option<f64>,
    /// Upper bound on the step; `None` means unbounded.
    pub max_step: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(rtol: f64) -> Self {
        OdeOptions {
            rtol,
            ..Default::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            max_steps: 50_000_000,
            first_step: None,
            max_step: None,
        }
    }
}

/// One accepted step, with derivatives at both ends for Hermite dense output.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [C64; N],
    pub y1: [C64; N],
    pub f0: [C64; N],
    pub f1: [C64; N],
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const N: usize>(y: &[C64; N], h: f64, terms: &[(f64, &[C64; N])]) -> [C64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            if *c != 0.0 {
                acc += *c * k[i];
            }
        }
        *o += h * acc;
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`, landing exactly on every
/// point of `stops` that lies strictly inside the span.  `on_step` sees every
/// accepted step in order.  Returns the state at `t1`.
pub fn integrate<const N: usize, F, O>(
    rhs: F,
    t0: f64,
    y0: [C64; N],
    t1: f64,
    stops: &[f64],
    opts: &OdeOptions,
    on_step: O,
) -> Result<[C64; N]>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
    O: FnMut(&Step<N>),
{
    integrate_with_floor(rhs, t0, y0, t1, stops, &[0.0; N], opts, on_step)
}

/// As [`integrate`], but component `i` is never judged against a magnitude
/// below `floor[i]`.
///
/// Components that start at zero and grow like a power of `t − t0` need this:
/// the embedded error estimate is then a fixed fraction of the value at every
/// step size and pure relative control never accepts a step.
#[allow(clippy::too_many_arguments)]
pub fn integrate_with_floor<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [C64; N],
    t1: f64,
    stops: &[f64],
    floor: &[f64; N],
    opts: &OdeOptions,
    mut on_step: O,
) -> Result<[C64; N]>
where
    F: FnMut(f64, &[C64; N]) -> [C64; N],
    O: FnMut(&Step<N>),
{
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::invalid(
            "span",
            format!("need t1 > t0, got [{t0}, {t1}]"),
        ));
    }
    if !(opts.rtol > 0.0) {
        return Err(Error::invalid(
            "tol",
            format!("must be > 0, got {}", opts.rtol),
        ));
    }

    let mut targets: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|&s| s > t0 && s < t1)
        .collect();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup();
    targets.push(t1);

    let mut scale = *floor;
    let note_scale = |y: &[C64; N], scale: &mut [f64; N]| {
        for (s, v) in scale.iter_mut().zip(y) {
            *s = s.max(v.norm());
        }
    };
    note_scale(&y0, &mut scale);

    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y);
    let mut h = match opts.first_step {
        Some(h) => h,
        None => initial_step(&y, &f, t1 - t0, opts.rtol),
    };
    let mut steps = 0usize;

    for &target in &targets {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::ToleranceNotMet { t, step: h });
            }
            if let Some(hmax) = opts.max_step {
                h = h.min(hmax);
            }
            let remaining = target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let hs = if last { remaining } else { h };

            let k1 = f;
            let k2 = rhs(t + C2 * hs, &combine(&y, hs, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * hs, &combine(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                t + C4 * hs,
                &combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                t + C5 * hs,
                &combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                t + hs,
                &combine(
                    &y,
                    hs,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = combine(
                &y,
                hs,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if last { target } else { t + hs };
            let k7 = rhs(t_new, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.rtol * scale[i].max(y_new[i].norm()) + 1e-300;
                err = err.max(e.norm() / sc);
            }
            steps += 1;

            if err <= 1.0 {
                on_step(&Step {
                    t0: t,
                    t1: t_new,
                    y0: y,
                    y1: y_new,
                    f0: k1,
                    f1: k7,
                });
                t = t_new;
                y = y_new;
                f = k7;
                note_scale(&y, &mut scale);
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    h = hs * fac;
                } else {
                    h = h.max(hs * fac.min(1.0));
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if !(h > (t.abs().max(1e-300)) * 1e-15) || !h.is_finite() {
                return Err(Error::ToleranceNotMet { t, step: h });
            }
        }
    }
    Ok(y)
}

fn initial_step<const N: usize>(y: &[C64; N], f: &[C64; N], span: f64, rtol: f64) -> f64 {
    let ynorm = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let fnorm = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let guess = if fnorm > 0.0 && ynorm > 0.0 {
        0.01 * ynorm / fnorm
    } else {
        1e-3 * span
    };
    (guess * rtol.powf(0.2) * 10.0).min(span).max(span * 1e-12)
}

/// Quintic Hermite interpolation on one step from value, first and second
/// derivative at both ends.  Returns `(y, y')` at `t`.
pub fn hermite5(t0: f64, t1: f64, end0: [C64; 3], end1: [C64; 3], t: f64) -> (C64, C64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let y = h0 * end0[0]
        + h * h1 * end0[1]
        + h * h * h2 * end0[2]
        + h * h * h3 * end1[2]
        + h * h4 * end1[1]
        + h5 * end1[0];
    let dy = (d0 * end0[0] + d5 * end1[0]) / h
        + d1 * end0[1]
        + d4 * end1[1]
        + h * (d2 * end0[2] + d3 * end1[2]);
    (y, dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn harmonic_oscillator_one_period() {
        let w = 3.0;
        let rhs = |_t: f64, y: &[C64; 2]| [y[1], -w * w * y[0]];
        let t1 = 2.0 * std::f64::consts::PI / w;
        let y = integrate(
            rhs,
            0.0,
            [c(1.0), c(0.0)],
            t1,
            &[],
            &OdeOptions::with_tol(1e-12),
            |_| {},
        )
        .unwrap();
        assert!((y[0] - 1.0).norm() < 1e-10, "{:?}", y);
        assert!(y[1].norm() < 1e-9, "{:?}", y);
    }

    #[test]
    fn complex_growth_rate() {
        let lam = C64::new(-0.3, 2.0);
        let rhs = |_t: f64, y: &[C64; 1]| [lam * y[0]];
        let y = integrate(
            rhs,
            0.0,
            [c(1.0)],
            2.0,
            &[],
            &OdeOptions::with_tol(1e-12),
            |_| {},
        )
        .unwrap();
        let exact = (lam * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn lands_on_stops() {
        let rhs = |_t: f64, y: &[C64; 1]| [y[0]];
        let mut ends = Vec::new();
        integrate(
            rhs,
            0.0,
            [c(1.0)],
            1.0,
            &[0.25, 0.5, 0.75, 2.0],
            &OdeOptions::with_tol(1e-8),
            |s| ends.push(s.t1),
        )
        .unwrap();
        for stop in [0.25, 0.5, 0.75, 1.0] {
            assert!(ends.contains(&stop), "missing stop {stop}");
        }
        assert!(ends.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn degenerate_span_rejected() {
        let rhs = |_t: f64, y: &[C64; 1]| [y[0]];
        assert!(integrate(rhs, 1.0, [c(1.0)], 1.0, &[], &OdeOptions::default(), |_| {}).is_err());
    }

    #[test]
    fn step_budget_exhaustion_is_reported() {
        let rhs = |_t: f64, y: &[C64; 2]| [y[1], -1e6 * y[0]];
        let opts = OdeOptions {
            max_steps: 10,
            ..OdeOptions::with_tol(1e-12)
        };
        let r = integrate(rhs, 0.0, [c(1.0), c(0.0)], 10.0, &[], &opts, |_| {});
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
    }

    #[test]
    fn hermite_reproduces_quintic() {
        let p = |t: f64| C64::new(1.0 + t - 2.0 * t.powi(3) + 0.5 * t.powi(5), -t.powi(4));
        let dp = |t: f64| C64::new(1.0 - 6.0 * t * t + 2.5 * t.powi(4), -4.0 * t.powi(3));
        let ddp = |t: f64| C64::new(-12.0 * t + 10.0 * t.powi(3), -12.0 * t * t);
        let (a, b) = (0.3, 1.7);
        for t in [0.3, 0.55, 1.0, 1.42, 1.7] {
            let (y, dy) = hermite5(a, b, [p(a), dp(a), ddp(a)], [p(b), dp(b), ddp(b)], t);
            assert!((y - p(t)).norm() < 1e-13);
            assert!((dy - dp(t)).norm() < 1e-12);
        }
    }
}
