//! Adaptive Dormand-Prince 5(4) integrator for complex vector ODEs `y' = f(t, y)`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{numerical, Result};
use crate::operator::ZERO;

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

// 5th-order weights minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step guess; 0 selects a heuristic.
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, h_init: 0.0, h_min: 1e-12, max_steps: 10_000_000 }
    }
}

/// Reusable integrator state; holds stage buffers and the step-size controller.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    opts: OdeOptions,
    h: f64,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
    /// `k[0]` holds `f(t, y)` for the current point.
    fsal_valid: bool,
    steps: usize,
}

impl Dopri5 {
    pub fn new(dim: usize, opts: OdeOptions) -> Self {
        let z = || vec![ZERO; dim];
        Dopri5 { opts, h: opts.h_init, k: [z(), z(), z(), z(), z(), z(), z()], tmp: z(), y_new: z(), fsal_valid: false, steps: 0 }
    }

    pub fn options(&self) -> &OdeOptions {
        &self.opts
    }

    /// Resizes buffers and forgets the cached derivative (call after `y` is changed externally).
    pub fn reset(&mut self, dim: usize) {
        for k in &mut self.k {
            k.resize(dim, ZERO);
        }
        self.tmp.resize(dim, ZERO);
        self.y_new.resize(dim, ZERO);
        self.fsal_valid = false;
    }

    pub fn invalidate(&mut self) {
        self.fsal_valid = false;
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps
    }

    fn stages<F>(&mut self, f: &mut F, t: f64, y: &[Complex64], h: f64)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f(t + h, tmp, k6);
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        f(t + h, y_new, k7);
    }

    fn error_norm(&self, y: &[Complex64], h: f64) -> f64 {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(self.y_new[i].norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        libm::sqrt(acc / y.len().max(1) as f64)
    }

    fn initial_step(&self, y: &[Complex64], span: f64) -> f64 {
        if self.opts.h_init > 0.0 {
            return self.opts.h_init;
        }
        let d0 = libm::sqrt(y.iter().map(|z| z.norm_sqr()).sum::<f64>());
        let d1 = libm::sqrt(self.k[0].iter().map(|z| z.norm_sqr()).sum::<f64>());
        let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span.abs())
    }

    /// Takes one accepted step from `(t, y)` of length at most `h_max`; `y` is
    /// overwritten and the step length is returned.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [Complex64], h_max: f64) -> Result<f64>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        if !self.fsal_valid {
            f(t, y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(y, h_max);
        }
        loop {
            let h = self.h.min(h_max);
            if h < self.opts.h_min && h < h_max {
                return Err(numerical!("step size underflow (h={h:e}) at t={t}"));
            }
            self.stages(f, t, y, h);
            let err = self.error_norm(y, h);
            if !err.is_finite() {
                self.h = h * 0.1;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.steps += 1;
                if self.steps > self.opts.max_steps {
                    return Err(numerical!("exceeded {} integration steps at t={t}", self.opts.max_steps));
                }
                // Keep the controller's proposal unless the step was clipped by h_max.
                if h >= self.h {
                    self.h = h * factor;
                } else if factor < 1.0 {
                    self.h = h * factor;
                }
                return Ok(h);
            }
            self.h = h * factor.min(1.0);
        }
    }

    /// Single unchecked step of fixed length `h` from `(t, y0)` into `out`.
    /// `k1` must equal `f(t, y0)` (the derivative stored by the last accepted step's start).
    pub fn trial_step<F>(&mut self, f: &mut F, t: f64, y0: &[Complex64], k1: &[Complex64], h: f64, out: &mut [Complex64])
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        self.k[0].copy_from_slice(k1);
        self.stages(f, t, y0, h);
        out.copy_from_slice(&self.y_new);
        self.fsal_valid = false;
    }

    /// `f(t0, y0)` at the start of the step just accepted by [`step`](Self::step).
    pub fn last_start_derivative(&self) -> &[Complex64] {
        &self.k[6]
    }

    /// Derivative at the current point if cached.
    pub fn current_derivative(&self) -> Option<&[Complex64]> {
        self.fsal_valid.then_some(&self.k[0][..])
    }

    /// Integrates from `t` to `t_end`, landing exactly on `t_end`.
    pub fn integrate<F>(&mut self, f: &mut F, t: f64, y: &mut [Complex64], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let mut t = t;
        while t < t_end {
            let h = self.step(f, t, y, t_end - t)?;
            t = if t_end - (t + h) <= 1e-12 * t_end.abs().max(1.0) { t_end } else { t + h };
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase() {
        // y' = -i w y
        let w = 3.0;
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = Complex64::new(0.0, -w) * y[0];
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut s = Dopri5::new(1, OdeOptions::default());
        s.integrate(&mut f, 0.0, &mut y, 10.0).unwrap();
        let exact = Complex64::new(0.0, -w * 10.0).exp();
        assert!((y[0] - exact).norm() < 1e-7, "{:?}", y[0]);
    }

    #[test]
    fn time_dependent_decay() {
        // y' = -t y, y(0)=1 -> exp(-t^2/2)
        let mut f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = y[0] * (-t);
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut s = Dopri5::new(1, OdeOptions::default());
        s.integrate(&mut f, 0.0, &mut y, 3.0).unwrap();
        assert!((y[0].re - libm::exp(-4.5)).abs() < 1e-9);
    }

    #[test]
    fn respects_step_limit() {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = y[0];
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut s = Dopri5::new(1, OdeOptions::default());
        let h = s.step(&mut f, 0.0, &mut y, 1e-3).unwrap();
        assert!(h <= 1e-3);
    }
}
