//! Embedded Dormand-Prince 5(4) integrator with step-size control.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `0` selects one from the first derivative.
    pub h0: f64,
    /// Smallest step tried after failed right-hand side evaluations or
    /// rejected steps before giving up.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h0: 0.0,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    /// Tolerances multiplied by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.rtol *= factor;
        self.atol *= factor;
        self
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Right-hand side `dy/dt = f(t, y)` written into the output slice.
pub trait Rhs {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self(t, y, dy)
    }
}

/// Stepper holding the current state. Each call to [`Integrator::step`]
/// performs one accepted step.
pub struct Integrator<'a, F: Rhs + ?Sized> {
    f: &'a F,
    opts: OdeOptions,
    t: f64,
    y: Vec<f64>,
    h: f64,
    steps: usize,
    k: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a, F: Rhs + ?Sized> Integrator<'a, F> {
    pub fn new(f: &'a F, t0: f64, y0: &[f64], opts: OdeOptions) -> Result<Self> {
        let n = y0.len();
        let mut k = vec![vec![0.0; n]; 7];
        f.eval(t0, y0, &mut k[0])?;
        let h = if opts.h0 > 0.0 {
            opts.h0
        } else {
            let ny = y0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let nd = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let h = if nd > 0.0 { 0.01 * (ny.max(1e-3) / nd) } else { 1e-3 };
            h.min(opts.h_max).min(0.1).max(opts.h_min)
        };
        Ok(Self {
            f,
            opts,
            t: t0,
            y: y0.to_vec(),
            h,
            steps: 0,
            k,
            scratch: vec![0.0; n],
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Derivative at the current state.
    pub fn derivative(&self) -> &[f64] {
        &self.k[0]
    }

    /// Fifth-order stages for a step of size `h` from the current state;
    /// returns the solution and the error estimate norm.
    fn attempt(&mut self, h: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.scratch[i] = self.y[i] + h * acc;
            }
            let (_, tail) = self.k.split_at_mut(s);
            self.f.eval(self.t + C[s] * h, &self.scratch, &mut tail[0])?;
        }
        let mut y5 = vec![0.0; n];
        let mut err = 0.0;
        for i in 0..n {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * self.k[s][i];
                s4 += B4[s] * self.k[s][i];
            }
            y5[i] = self.y[i] + h * s5;
            let sc = self.opts.atol + self.opts.rtol * self.y[i].abs().max(y5[i].abs());
            let e = h * (s5 - s4) / sc;
            err += e * e;
        }
        Ok((y5, (err / n as f64).sqrt()))
    }

    /// Single fifth-order step of size `h` without error control, used to
    /// locate events inside the last step.
    pub fn trial(&self, h: f64) -> Result<Vec<f64>> {
        let n = self.y.len();
        let mut k = self.k.clone();
        let mut tmp = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * k[j][i];
                }
                tmp[i] = self.y[i] + h * acc;
            }
            let (_, tail) = k.split_at_mut(s);
            self.f.eval(self.t + C[s] * h, &tmp, &mut tail[0])?;
        }
        Ok((0..n)
            .map(|i| self.y[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>())
            .collect())
    }

    /// One accepted step that does not pass `t_limit` (in the direction of
    /// integration, which is always increasing `t`). Right-hand side
    /// failures shrink the step; once it falls below `h_min` the last
    /// failure is returned and the state is left at the last accepted
    /// point.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        if self.steps >= self.opts.max_steps {
            return Err(Error::NoReturn(format!(
                "step budget of {} exhausted",
                self.opts.max_steps
            )));
        }
        let remaining = t_limit - self.t;
        if !(remaining > 0.0) {
            return Err(Error::InvalidArgument(
                "step limit is not ahead of the current time".into(),
            ));
        }
        let mut h = self.h.min(self.opts.h_max).min(remaining);
        loop {
            let clipped = h >= remaining;
            let h_try = if clipped { remaining } else { h };
            match self.attempt(h_try) {
                Ok((y5, err)) if err <= 1.0 && y5.iter().all(|v| v.is_finite()) => {
                    self.t = if clipped { t_limit } else { self.t + h_try };
                    self.y = y5;
                    // first-same-as-last: stage 7 was evaluated at the new point
                    self.k.swap(0, 6);
                    self.steps += 1;
                    let grow = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !clipped || grow < 1.0 {
                        self.h = (h_try * grow).min(self.opts.h_max);
                    }
                    return Ok(());
                }
                Ok((_, err)) => {
                    let shrink = if err.is_finite() {
                        (0.9 * err.powf(-0.2)).clamp(0.1, 0.5)
                    } else {
                        0.25
                    };
                    h = h_try * shrink;
                    if h < self.opts.h_min {
                        return Err(Error::StepSizeUnderflow { t: self.t });
                    }
                }
                Err(e) => {
                    h = 0.5 * h_try;
                    if h < self.opts.h_min {
                        self.h = self.opts.h_min.max(h);
                        return Err(e);
                    }
                }
            }
        }
    }
}

/// Bisection for the root of `g` on `[lo, hi]` given `g(lo) * g(hi) <= 0`,
/// to an interval width of `tol`. Evaluation failures count as being on
/// the `hi` side.
pub fn bisect<G>(mut g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    G: FnMut(f64) -> Option<f64>,
{
    let s_lo = g(lo).map(f64::signum).unwrap_or(1.0);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match g(mid) {
            Some(0.0) => return mid,
            Some(v) if v.signum() == s_lo => lo = mid,
            _ => hi = mid,
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy[0] = -y[0];
            Ok(())
        };
        let mut it = Integrator::new(&f, 0.0, &[1.0], OdeOptions::default()).unwrap();
        while it.t() < 2.0 {
            it.step(2.0).unwrap();
        }
        assert_eq!(it.t(), 2.0);
        assert!((it.y()[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let tau = 2.0 * std::f64::consts::PI;
        let mut it = Integrator::new(&f, 0.0, &[1.0, 0.0], OdeOptions::default()).unwrap();
        while it.t() < tau {
            it.step(tau).unwrap();
        }
        assert!((it.y()[0] - 1.0).abs() < 1e-8 && it.y()[1].abs() < 1e-8);
    }

    #[test]
    fn failures_shrink_to_boundary() {
        // dy/dt = 1 defined only for y < 1
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            if y[0] >= 1.0 {
                return Err(Error::InvalidArgument("outside".into()));
            }
            dy[0] = 1.0;
            Ok(())
        };
        let mut it = Integrator::new(&f, 0.0, &[0.0], OdeOptions::default()).unwrap();
        let err = loop {
            if let Err(e) = it.step(10.0) {
                break e;
            }
        };
        assert!(matches!(err, Error::InvalidArgument(_)));
        assert!(it.y()[0] < 1.0 && it.y()[0] > 1.0 - 1e-10);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| Some(x * x - 2.0), 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }
}
