//! Dormand–Prince 5(4) with the standard fourth-order dense output.

use super::EngineError;
use crate::operators::{ComplexMatrix, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

// The generator is autonomous, so the stage times c_i are not needed.
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

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combine(out: &mut ComplexMatrix, base: &ComplexMatrix, h: f64, terms: &[(f64, &ComplexMatrix)]) {
    let o = out.as_mut_slice();
    o.copy_from_slice(base.as_slice());
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let hc = h * c;
        for (dst, &src) in o.iter_mut().zip(k.as_slice()) {
            *dst += src * hc;
        }
    }
}

fn scaled_rms(err: &ComplexMatrix, y0: &ComplexMatrix, y1: &ComplexMatrix, rtol: f64, atol: f64) -> f64 {
    let n = err.as_slice().len() as f64;
    let sum: f64 = err
        .as_slice()
        .iter()
        .zip(y0.as_slice().iter().zip(y1.as_slice()))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrates `dy/dt = f(y)` from `t0` to `t_end`, calling `on_sample(i, t,
/// y)` for every entry of the ascending `samples` (all within `[t0, t_end]`)
/// using the continuous extension. Returns `y(t_end)`.
pub(crate) fn integrate<F, S>(
    mut f: F,
    y0: &ComplexMatrix,
    t0: f64,
    t_end: f64,
    samples: &[f64],
    ctrl: StepControl,
    mut on_sample: S,
) -> Result<(ComplexMatrix, IntegratorStats), EngineError>
where
    F: FnMut(&ComplexMatrix, &mut ComplexMatrix),
    S: FnMut(usize, f64, &ComplexMatrix) -> Result<(), EngineError>,
{
    let d = y0.dim();
    let zero = || ComplexMatrix::zeros(d);
    let mut stats = IntegratorStats::default();
    let mut next_sample = 0;

    let mut y = y0.clone();
    let mut t = t0;
    while next_sample < samples.len() && samples[next_sample] <= t0 {
        on_sample(next_sample, samples[next_sample], &y)?;
        next_sample += 1;
    }
    if t_end <= t0 {
        return Ok((y, stats));
    }

    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (zero(), zero(), zero(), zero(), zero(), zero(), zero());
    let mut stage = zero();
    let mut y_new = zero();
    let mut err = zero();
    let origin = zero();

    f(&y, &mut k1);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, &y, &k1, t_end - t0, ctrl, &mut stats);
    let mut reject_streak = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= ctrl.max_steps {
            return Err(EngineError::MaxSteps { t, max_steps: ctrl.max_steps });
        }
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(EngineError::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        combine(&mut stage, &y, h, &[(A21, &k1)]);
        f(&stage, &mut k2);
        combine(&mut stage, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(&stage, &mut k3);
        combine(&mut stage, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(&stage, &mut k4);
        combine(&mut stage, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(&stage, &mut k5);
        combine(&mut stage, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(&stage, &mut k6);
        combine(&mut y_new, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(&y_new, &mut k7);
        stats.evaluations += 6;

        combine(&mut err, &origin, h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        let e = scaled_rms(&err, &y, &y_new, ctrl.rtol, ctrl.atol);

        if e <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            if next_sample < samples.len() && samples[next_sample] <= t_new {
                // Continuous extension over [t, t + h].
                let ydiff = &y_new - &y;
                let mut bspl = ComplexMatrix::zeros(d);
                combine(&mut bspl, &origin, h, &[(1.0, &k1)]);
                bspl = &bspl - &ydiff;
                let mut c4 = ComplexMatrix::zeros(d);
                combine(&mut c4, &ydiff, h, &[(-1.0, &k7)]);
                c4 = &c4 - &bspl;
                let mut c5 = ComplexMatrix::zeros(d);
                combine(&mut c5, &origin, h, &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)]);
                while next_sample < samples.len() && samples[next_sample] <= t_new {
                    let ts = samples[next_sample];
                    let s = ((ts - t) / h).clamp(0.0, 1.0);
                    let s1 = 1.0 - s;
                    let yi = if ts == t_new {
                        y_new.clone()
                    } else {
                        let mut yi = y.clone();
                        let w2 = s;
                        let w3 = s * s1;
                        let w4 = s * s1 * s;
                        let w5 = s * s1 * s * s1;
                        for ((((o, &a), &b), &cc), &dd) in yi
                            .as_mut_slice()
                            .iter_mut()
                            .zip(ydiff.as_slice())
                            .zip(bspl.as_slice())
                            .zip(c4.as_slice())
                            .zip(c5.as_slice())
                        {
                            *o += a * w2 + b * w3 + cc * w4 + dd * w5;
                        }
                        yi
                    };
                    on_sample(next_sample, ts, &yi)?;
                    next_sample += 1;
                }
            }
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            let fac = if e == 0.0 { 10.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 10.0) };
            h *= if reject_streak { fac.min(1.0) } else { fac };
            reject_streak = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * e.powf(-0.2)).clamp(0.2, 1.0);
            reject_streak = true;
        }
    }
    Ok((y, stats))
}

fn initial_step<F>(
    f: &mut F,
    y: &ComplexMatrix,
    f0: &ComplexMatrix,
    span: f64,
    ctrl: StepControl,
    stats: &mut IntegratorStats,
) -> f64
where
    F: FnMut(&ComplexMatrix, &mut ComplexMatrix),
{
    let norm = |v: &ComplexMatrix| {
        let n = v.as_slice().len() as f64;
        let s: f64 = v
            .as_slice()
            .iter()
            .zip(y.as_slice())
            .map(|(a, b): (&C64, &C64)| (a.norm() / (ctrl.atol + ctrl.rtol * b.norm())).powi(2))
            .sum();
        (s / n).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let mut y1 = ComplexMatrix::zeros(y.dim());
    combine(&mut y1, y, h0, &[(1.0, f0)]);
    let mut f1 = ComplexMatrix::zeros(y.dim());
    f(&y1, &mut f1);
    stats.evaluations += 1;
    let d2 = norm(&(&f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctrl(rtol: f64, atol: f64) -> StepControl {
        StepControl { rtol, atol, max_steps: 1_000_000 }
    }

    #[test]
    fn exponential_decay_with_dense_output() {
        // dy/dt = −y on a 1×1 "matrix".
        let y0 = ComplexMatrix::identity(1);
        let samples: Vec<f64> = (0..=40).map(|i| i as f64 * 0.125).collect();
        let mut seen = Vec::new();
        let (y, stats) = integrate(
            |y, out| out[(0, 0)] = -y[(0, 0)],
            &y0,
            0.0,
            5.0,
            &samples,
            ctrl(1e-10, 1e-12),
            |_, t, y| {
                seen.push((t, y[(0, 0)].re));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), samples.len());
        for (t, v) in seen {
            assert!((v - (-t).exp()).abs() < 1e-9, "t={t}: {v}");
        }
        assert!((y[(0, 0)].re - (-5.0f64).exp()).abs() < 1e-10);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn rotation_stays_on_circle() {
        // dy/dt = i y
        let y0 = ComplexMatrix::identity(1);
        let (y, _) = integrate(
            |y, out| out[(0, 0)] = C64::new(0.0, 1.0) * y[(0, 0)],
            &y0,
            0.0,
            20.0,
            &[],
            ctrl(1e-10, 1e-12),
            |_, _, _| Ok(()),
        )
        .unwrap();
        let expected = C64::new(0.0, 20.0).exp();
        assert!((y[(0, 0)] - expected).norm() < 1e-8);
    }

    #[test]
    fn step_budget_is_enforced() {
        let y0 = ComplexMatrix::identity(1);
        let res = integrate(
            |y, out| out[(0, 0)] = C64::new(0.0, 100.0) * y[(0, 0)],
            &y0,
            0.0,
            100.0,
            &[],
            StepControl { rtol: 1e-10, atol: 1e-12, max_steps: 50 },
            |_, _, _| Ok(()),
        );
        assert!(matches!(res, Err(EngineError::MaxSteps { .. })));
    }
}
