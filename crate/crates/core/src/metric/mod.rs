//! Lorentzian metrics `g^{jk}(x)` with time-independent coefficients.

mod axisym;
mod families;
mod flow;
mod tensor;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use axisym::axisym_reduce;
pub use families::{
    acoustic_metric, gordon_metric, minkowski, profile_flow, profile_metric, radial_zeros_flow, slow_medium_metric,
    vortex_metric, Bump, CustomModel, Perturbed, Scaled, PROFILE_R0, PROFILE_R1, PROFILE_ZEROS_MINUS,
    PROFILE_ZEROS_PLUS,
};
pub use flow::{
    radial_profile_flow, vortex_flow, AffineField, FlowSpec, FnField, Jacobian, RadialFunction, RadialProfile,
    Reversed, ScalarField, VelocityField, PROFILE_SAMPLES,
};
pub use tensor::{MetricTensor, MAX_DIM};

/// Region of space where a metric may be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Everywhere,
    /// All points except the origin.
    Punctured,
    /// `r_min <= |x| <= r_max`.
    Annulus {
        r_min: f64,
        r_max: f64,
    },
    /// Axis-aligned box, bounds per coordinate.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

const DOMAIN_SLACK: f64 = 1e-12;

impl Domain {
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::outside(x, "non-finite coordinate"));
        }
        match self {
            Domain::Everywhere => Ok(()),
            Domain::Punctured => {
                if norm(x) <= 1e-14 {
                    Err(Error::outside(x, "origin is excluded"))
                } else {
                    Ok(())
                }
            }
            Domain::Annulus { r_min, r_max } => {
                let r = norm(x);
                let slack = DOMAIN_SLACK * (1.0 + r_max);
                if r < r_min - slack || r > r_max + slack {
                    Err(Error::outside(x, format!("radius {r} outside [{r_min}, {r_max}]")))
                } else {
                    Ok(())
                }
            }
            Domain::Box { lo, hi } => {
                for (k, v) in x.iter().enumerate() {
                    let slack = DOMAIN_SLACK * (1.0 + hi[k].abs().max(lo[k].abs()));
                    if *v < lo[k] - slack || *v > hi[k] + slack {
                        return Err(Error::outside(
                            x,
                            format!("coordinate {k} = {v} outside [{}, {}]", lo[k], hi[k]),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pointwise evaluator of a metric family.
///
/// Implementations only have to supply `components`; `derivative` may return
/// `None`, in which case [`SpacetimeMetric`] falls back to central
/// differences.
pub trait MetricModel: Send + Sync + fmt::Debug {
    fn n_space(&self) -> usize;

    fn components(&self, x: &[f64]) -> Result<MetricTensor>;

    /// `d g^{jk} / d x_p` for spatial index `p` (0-based).
    fn derivative(&self, _x: &[f64], _p: usize) -> Option<Result<MetricTensor>> {
        None
    }

    fn family(&self) -> &str;

    /// The medium this metric was built from, when there is one.
    fn flow(&self) -> Option<&FlowSpec> {
        None
    }
}

/// A metric family bound to its domain of validity.
#[derive(Clone, Debug)]
pub struct SpacetimeMetric {
    model: Arc<dyn MetricModel>,
    domain: Domain,
    fd_step: Option<f64>,
}

impl SpacetimeMetric {
    pub fn new(model: Arc<dyn MetricModel>, domain: Domain) -> Self {
        Self {
            model,
            domain,
            fd_step: None,
        }
    }

    pub fn from_model<M: MetricModel + 'static>(model: M, domain: Domain) -> Self {
        Self::new(Arc::new(model), domain)
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        Self { domain, ..self.clone() }
    }

    /// Forces finite-difference derivatives with a fixed step.
    pub fn with_fd_step(&self, h: f64) -> Self {
        Self {
            fd_step: Some(h),
            ..self.clone()
        }
    }

    pub fn n_space(&self) -> usize {
        self.model.n_space()
    }

    pub fn family(&self) -> &str {
        self.model.family()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn model(&self) -> &Arc<dyn MetricModel> {
        &self.model
    }

    pub fn flow(&self) -> Option<&FlowSpec> {
        self.model.flow()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_space() {
            return Err(Error::DimensionMismatch {
                expected: self.n_space(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `[g^{jk}(x)]`, checked against the domain.
    pub fn eval(&self, x: &[f64]) -> Result<MetricTensor> {
        self.check_dim(x)?;
        self.domain.check(x)?;
        self.model.components(x)
    }

    /// Evaluation without the domain check; used by difference stencils
    /// that straddle the domain edge.
    pub fn eval_unchecked(&self, x: &[f64]) -> Result<MetricTensor> {
        self.check_dim(x)?;
        self.model.components(x)
    }

    /// Default finite-difference step `1e-5 (1 + |x|)`.
    pub fn default_fd_step(x: &[f64]) -> f64 {
        1e-5 * (1.0 + norm(x))
    }

    /// `d g^{jk} / d x_p`, analytic when the family provides it.
    pub fn deriv(&self, x: &[f64], p: usize) -> Result<MetricTensor> {
        self.check_dim(x)?;
        self.domain.check(x)?;
        if self.fd_step.is_none() {
            if let Some(d) = self.model.derivative(x, p) {
                return d;
            }
        }
        let h = self.fd_step.unwrap_or_else(|| Self::default_fd_step(x));
        self.deriv_fd(x, p, h)
    }

    /// Central difference `(g(x + h e_p) - g(x - h e_p)) / 2h`.
    pub fn deriv_fd(&self, x: &[f64], p: usize, h: f64) -> Result<MetricTensor> {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[p] += h;
        xm[p] -= h;
        let gp = self.eval_unchecked(&xp)?;
        let gm = self.eval_unchecked(&xm)?;
        Ok(gp.sub(&gm).scaled(0.5 / h))
    }

    /// `Delta(x) = det[g^{jk}(x)]_{j,k=1..n}`.
    pub fn spatial_det(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.spatial_det())
    }

    /// Gradient of `Delta`, by the Jacobi formula for n = 2 and central
    /// differences otherwise.
    pub fn delta_gradient(&self, x: &[f64]) -> Result<[f64; 3]> {
        let n = self.n_space();
        let mut grad = [0.0; 3];
        if n == 2 {
            let g = self.eval(x)?;
            for (p, gp) in grad.iter_mut().enumerate().take(2) {
                let d = self.deriv(x, p)?;
                *gp = d.get(1, 1) * g.get(2, 2) + g.get(1, 1) * d.get(2, 2) - 2.0 * g.get(1, 2) * d.get(1, 2);
            }
        } else {
            let h = Self::default_fd_step(x);
            for (p, gp) in grad.iter_mut().enumerate().take(n) {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[p] += h;
                xm[p] -= h;
                *gp = (self.eval_unchecked(&xp)?.spatial_det() - self.eval_unchecked(&xm)?.spatial_det()) / (2.0 * h);
            }
        }
        Ok(grad)
    }

    /// Multiplies every component by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self::new(
            Arc::new(Scaled {
                base: self.model.clone(),
                alpha,
            }),
            self.domain.clone(),
        )
    }
}

/// Pointwise hyperbolicity diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperbolicityReport {
    /// `g^{00} > 0`.
    pub g00_positive: bool,
    /// The spatial quadratic form is negative definite.
    pub spatial_negative_definite: bool,
    /// `g_{00} > 0`, i.e. the time direction is time-like.
    pub lower_g00_positive: bool,
    /// Exactly one positive and `n` negative eigenvalues.
    pub lorentzian: bool,
    /// `(-1)^n g > 0`.
    pub volume_sign_ok: bool,
    /// Negative definiteness and `g_{00} > 0` agree, as they must.
    pub flags_agree: bool,
}

impl HyperbolicityReport {
    pub fn all_true(&self) -> bool {
        self.g00_positive
            && self.spatial_negative_definite
            && self.lower_g00_positive
            && self.lorentzian
            && self.volume_sign_ok
            && self.flags_agree
    }
}

pub fn validate_hyperbolicity(metric: &SpacetimeMetric, x: &[f64]) -> Result<HyperbolicityReport> {
    let g = metric.eval(x)?;
    let lower = g.inverse().ok_or_else(|| Error::SingularMetric { point: x.to_vec() })?;
    let n = g.n_space();
    let spatial = g.spatial_eigenvalues();
    let spatial_negative_definite = spatial.iter().all(|&l| l < 0.0);
    let ev = g.eigenvalues();
    let lorentzian = ev.iter().filter(|&&l| l > 0.0).count() == 1 && ev.iter().filter(|&&l| l < 0.0).count() == n;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let lower_g00_positive = lower.get(0, 0) > 0.0;
    Ok(HyperbolicityReport {
        g00_positive: g.get(0, 0) > 0.0,
        spatial_negative_definite,
        lower_g00_positive,
        lorentzian,
        volume_sign_ok: sign / g.det() > 0.0,
        flags_agree: spatial_negative_definite == lower_g00_positive,
    })
}

/// Covariant metric `[g_{jk}] = [g^{jk}]^{-1}` and the residual
/// `max |G G^{-1} - I|`.
pub fn lower_metric(metric: &SpacetimeMetric, x: &[f64]) -> Result<(MetricTensor, f64)> {
    let g = metric.eval(x)?;
    let lower = g.inverse().ok_or_else(|| Error::SingularMetric { point: x.to_vec() })?;
    let prod = g.matmul(&lower);
    let d = g.dim();
    let mut residual: f64 = 0.0;
    for j in 0..d {
        for k in 0..d {
            let target = if j == k { 1.0 } else { 0.0 };
            residual = residual.max((prod.get(j, k) - target).abs());
        }
    }
    Ok((lower, residual))
}
