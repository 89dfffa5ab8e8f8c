use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth time window `sin^4(pi (t - t0) / T)` on `[t0, t0 + T]`, zero
/// elsewhere (three continuous derivatives).
pub fn window(t: f64, t0: f64, duration: f64) -> (f64, f64) {
    let s = (t - t0) / duration;
    if !(0.0..=1.0).contains(&s) {
        return (0.0, 0.0);
    }
    let (sn, cs) = (PI * s).sin_cos();
    (sn.powi(4), 4.0 * sn.powi(3) * cs * PI / duration)
}

/// Dirichlet data `g(t, theta)` on the outer rim.
#[derive(Clone)]
pub enum BoundaryProfile {
    /// `amplitude W(t) cos(m theta)`, times `sin(omega (t - t0))` when a
    /// carrier frequency is given.
    WindowedMultipole {
        amplitude: f64,
        m: u32,
        t_start: f64,
        duration: f64,
        carrier: Option<f64>,
    },
    /// User function returning `(g, g_t)`.
    Closure(Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>),
}

impl fmt::Debug for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryProfile::WindowedMultipole {
                amplitude,
                m,
                t_start,
                duration,
                carrier,
            } => f
                .debug_struct("WindowedMultipole")
                .field("amplitude", amplitude)
                .field("m", m)
                .field("t_start", t_start)
                .field("duration", duration)
                .field("carrier", carrier)
                .finish(),
            BoundaryProfile::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

impl BoundaryProfile {
    pub fn multipole(amplitude: f64, m: u32, duration: f64) -> Self {
        BoundaryProfile::WindowedMultipole {
            amplitude,
            m,
            t_start: 0.0,
            duration,
            carrier: None,
        }
    }

    /// `(g, g_t)` at time `t` and angle `theta`.
    pub fn eval(&self, t: f64, theta: f64) -> (f64, f64) {
        match self {
            BoundaryProfile::WindowedMultipole {
                amplitude,
                m,
                t_start,
                duration,
                carrier,
            } => {
                let (w, wt) = window(t, *t_start, *duration);
                let ang = (*m as f64 * theta).cos();
                let (c, ct) = match carrier {
                    Some(om) => {
                        let (s, c) = (om * (t - t_start)).sin_cos();
                        (s, om * c)
                    }
                    None => (1.0, 0.0),
                };
                (amplitude * w * c * ang, amplitude * (wt * c + w * ct) * ang)
            }
            BoundaryProfile::Closure(f) => f(t, theta),
        }
    }

    /// Time interval outside which the profile vanishes, if known.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            BoundaryProfile::WindowedMultipole { t_start, duration, .. } => Some((*t_start, t_start + duration)),
            BoundaryProfile::Closure(_) => None,
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        match self {
            BoundaryProfile::WindowedMultipole {
                amplitude,
                m,
                t_start,
                duration,
                carrier,
            } => BoundaryProfile::WindowedMultipole {
                amplitude: alpha * amplitude,
                m: *m,
                t_start: *t_start,
                duration: *duration,
                carrier: *carrier,
            },
            BoundaryProfile::Closure(f) => {
                let f = f.clone();
                BoundaryProfile::Closure(Arc::new(move |t, th| {
                    let (g, gt) = f(t, th);
                    (alpha * g, alpha * gt)
                }))
            }
        }
    }
}

/// Gaussian bump `amplitude exp(-|x - center|^2 / width^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

impl Gaussian {
    pub fn value_and_gradient(&self, x: &[f64; 2]) -> (f64, [f64; 2]) {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let w2 = self.width * self.width;
        let v = self.amplitude * (-(dx * dx + dy * dy) / w2).exp();
        (v, [-2.0 * dx / w2 * v, -2.0 * dy / w2 * v])
    }
}

/// Initial data `(phi0, phi1)` for `u` and `u_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorPulse {
    pub displacement: Option<Gaussian>,
    pub velocity: Option<Gaussian>,
}

impl InteriorPulse {
    /// Pure displacement pulse with zero initial velocity.
    pub fn displacement(center: [f64; 2], width: f64, amplitude: f64) -> Self {
        Self {
            displacement: Some(Gaussian {
                center,
                width,
                amplitude,
            }),
            velocity: None,
        }
    }

    /// `(phi0, grad phi0, phi1)` at `x`.
    pub fn eval(&self, x: &[f64; 2]) -> (f64, [f64; 2], f64) {
        let (u, du) = self
            .displacement
            .map(|g| g.value_and_gradient(x))
            .unwrap_or((0.0, [0.0; 2]));
        let ut = self.velocity.map(|g| g.value_and_gradient(x).0).unwrap_or(0.0);
        (u, du, ut)
    }

    /// Smallest width present, used for resolution checks.
    pub fn shortest_scale(&self) -> f64 {
        let a = self.displacement.map(|g| g.width).unwrap_or(f64::INFINITY);
        let b = self.velocity.map(|g| g.width).unwrap_or(f64::INFINITY);
        a.min(b)
    }

    /// Wavelength `pi * width` of the narrowest Gaussian, where its spectrum
    /// has fallen to `1/e`, and the radius of its center.
    pub fn shortest_wavelength(&self) -> (f64, f64) {
        [self.displacement, self.velocity]
            .into_iter()
            .flatten()
            .map(|g| (std::f64::consts::PI * g.width, g.center[0].hypot(g.center[1])))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }
}

/// Excitation of a wave run.
#[derive(Clone, Debug)]
pub enum SourceSpec {
    BoundaryDirichlet(BoundaryProfile),
    InteriorPulse(InteriorPulse),
}

impl SourceSpec {
    pub fn boundary(&self) -> Option<&BoundaryProfile> {
        match self {
            SourceSpec::BoundaryDirichlet(p) => Some(p),
            SourceSpec::InteriorPulse(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::BoundaryDirichlet(BoundaryProfile::WindowedMultipole { duration, .. }) => {
                if !(*duration > 0.0) {
                    return Err(Error::validation("source.duration", "window duration must be positive"));
                }
                Ok(())
            }
            SourceSpec::BoundaryDirichlet(BoundaryProfile::Closure(_)) => Ok(()),
            SourceSpec::InteriorPulse(p) => {
                if !(p.shortest_scale() > 0.0) {
                    return Err(Error::validation("source.width", "pulse width must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// `H^1` norm squared of the boundary data on the rim `r = radius` over
/// `[0, t_end]`: the integral of `g^2 + g_t^2 + (g_theta / r)^2` with
/// respect to arc length and time. The angular derivative is spectral,
/// the time derivative a centered difference of the sampled data.
pub fn boundary_h1_norm_sq(profile: &BoundaryProfile, radius: f64, t_end: f64, n_t: usize, n_theta: usize) -> f64 {
    let dt = t_end / n_t as f64;
    let dth = 2.0 * PI / n_theta as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n_theta);
    let inv = planner.plan_fft_inverse(n_theta);
    let sample_row = |t: f64| -> Vec<f64> { (0..n_theta).map(|j| profile.eval(t, j as f64 * dth).0).collect() };
    let mut total = 0.0;
    for k in 0..=n_t {
        let t = k as f64 * dt;
        let row = sample_row(t);
        let prev = sample_row(t - dt);
        let next = sample_row(t + dt);
        let mut spec: Vec<Complex<f64>> = row.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fwd.process(&mut spec);
        for (m, c) in spec.iter_mut().enumerate() {
            let freq = if m <= n_theta / 2 {
                m as f64
            } else {
                m as f64 - n_theta as f64
            };
            let freq = if 2 * m == n_theta { 0.0 } else { freq };
            *c *= Complex::new(0.0, freq);
        }
        inv.process(&mut spec);
        let mut slice = 0.0;
        for j in 0..n_theta {
            let g = row[j];
            let gt = (next[j] - prev[j]) / (2.0 * dt);
            let gth = spec[j].re / n_theta as f64;
            slice += (g * g + gt * gt + (gth / radius).powi(2)) * radius * dth;
        }
        let w = if k == 0 || k == n_t { 0.5 } else { 1.0 };
        total += w * slice * dt;
    }
    total
}
