use std::fmt;
use std::sync::Arc;

use super::flow::{radial_profile_flow, vortex_flow, FlowSpec, Jacobian, RadialFunction};
use super::{norm, Domain, MetricModel, MetricTensor, SpacetimeMetric};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct Minkowski {
    n: usize,
}

impl MetricModel for Minkowski {
    fn n_space(&self) -> usize {
        self.n
    }

    fn components(&self, _x: &[f64]) -> Result<MetricTensor> {
        Ok(MetricTensor::minkowski(self.n))
    }

    fn derivative(&self, _x: &[f64], _p: usize) -> Option<Result<MetricTensor>> {
        Some(Ok(MetricTensor::zeros(self.n)))
    }

    fn family(&self) -> &str {
        "minkowski"
    }
}

pub fn minkowski(n_space: usize) -> SpacetimeMetric {
    SpacetimeMetric::from_model(Minkowski { n: n_space }, Domain::Everywhere)
}

/// Velocity, refraction index and density at a point, plus their
/// derivatives along one coordinate when those are analytic.
struct FlowSample {
    w: [f64; 3],
    n: f64,
    rho: f64,
}

struct FlowDerivative {
    dw: [f64; 3],
    dn: f64,
    drho: f64,
}

fn sample(flow: &FlowSpec, x: &[f64]) -> Result<FlowSample> {
    flow.check_at(x)?;
    Ok(FlowSample {
        w: flow.velocity.value(x)?,
        n: flow.n_index.value(x),
        rho: flow.density.value(x),
    })
}

fn sample_derivative(flow: &FlowSpec, x: &[f64], p: usize) -> Option<Result<FlowDerivative>> {
    let jac: Jacobian = match flow.velocity.jacobian(x)? {
        Ok(j) => j,
        Err(e) => return Some(Err(e)),
    };
    let dn = flow.n_index.gradient(x)?[p];
    let drho = flow.density.gradient(x)?[p];
    Some(Ok(FlowDerivative {
        dw: [jac[0][p], jac[1][p], jac[2][p]],
        dn,
        drho,
    }))
}

#[derive(Clone, Debug)]
struct Gordon {
    flow: FlowSpec,
}

impl Gordon {
    /// Four-velocity `(gamma, gamma w / c)`.
    fn four_velocity(&self, x: &[f64], s: &FlowSample) -> Result<([f64; 4], f64)> {
        let c = self.flow.c;
        let nsp = self.flow.n_space();
        let u2: f64 = s.w[..nsp].iter().map(|w| (w / c) * (w / c)).sum();
        if u2 >= 1.0 {
            return Err(Error::outside(
                x,
                format!("flow speed |w|/c = {} is not below 1", u2.sqrt()),
            ));
        }
        let gamma = 1.0 / (1.0 - u2).sqrt();
        let mut v = [gamma, 0.0, 0.0, 0.0];
        for j in 0..nsp {
            v[j + 1] = gamma * s.w[j] / c;
        }
        Ok((v, gamma))
    }
}

impl MetricModel for Gordon {
    fn n_space(&self) -> usize {
        self.flow.n_space()
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        let s = sample(&self.flow, x)?;
        let (v, _) = self.four_velocity(x, &s)?;
        let nsp = self.n_space();
        let k = s.n * s.n - 1.0;
        let mut g = MetricTensor::minkowski(nsp);
        for j in 0..=nsp {
            for m in j..=nsp {
                g.set(j, m, g.get(j, m) + k * v[j] * v[m]);
            }
        }
        Ok(g)
    }

    fn derivative(&self, x: &[f64], p: usize) -> Option<Result<MetricTensor>> {
        let d = match sample_derivative(&self.flow, x, p)? {
            Ok(d) => d,
            Err(e) => return Some(Err(e)),
        };
        Some((|| {
            let s = sample(&self.flow, x)?;
            let (v, gamma) = self.four_velocity(x, &s)?;
            let nsp = self.n_space();
            let c = self.flow.c;
            let u_du: f64 = (0..nsp).map(|j| (s.w[j] / c) * (d.dw[j] / c)).sum();
            let dgamma = gamma.powi(3) * u_du;
            let mut dv = [dgamma, 0.0, 0.0, 0.0];
            for j in 0..nsp {
                dv[j + 1] = dgamma * s.w[j] / c + gamma * d.dw[j] / c;
            }
            let k = s.n * s.n - 1.0;
            let dk = 2.0 * s.n * d.dn;
            let mut g = MetricTensor::zeros(nsp);
            for j in 0..=nsp {
                for m in j..=nsp {
                    g.set(j, m, dk * v[j] * v[m] + k * (dv[j] * v[m] + v[j] * dv[m]));
                }
            }
            Ok(g)
        })())
    }

    fn family(&self) -> &str {
        "gordon"
    }

    fn flow(&self) -> Option<&FlowSpec> {
        Some(&self.flow)
    }
}

/// `g^{jk} = eta^{jk} + (n^2 - 1) v^j v^k` with `v` the four-velocity of
/// the medium. Points with `|w| >= c` are rejected at evaluation.
pub fn gordon_metric(flow: FlowSpec) -> Result<SpacetimeMetric> {
    flow.validate()?;
    Ok(SpacetimeMetric::from_model(Gordon { flow }, Domain::Everywhere))
}

#[derive(Clone, Debug)]
struct SlowMedium {
    flow: FlowSpec,
}

impl MetricModel for SlowMedium {
    fn n_space(&self) -> usize {
        self.flow.n_space()
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        let s = sample(&self.flow, x)?;
        let nsp = self.n_space();
        let mut g = MetricTensor::minkowski(nsp);
        g.set(0, 0, s.n * s.n);
        for j in 0..nsp {
            g.set(0, j + 1, (s.n * s.n - 1.0) * s.w[j] / self.flow.c);
        }
        Ok(g)
    }

    fn derivative(&self, x: &[f64], p: usize) -> Option<Result<MetricTensor>> {
        let d = match sample_derivative(&self.flow, x, p)? {
            Ok(d) => d,
            Err(e) => return Some(Err(e)),
        };
        Some(sample(&self.flow, x).map(|s| {
            let nsp = self.n_space();
            let mut g = MetricTensor::zeros(nsp);
            let dk = 2.0 * s.n * d.dn;
            g.set(0, 0, dk);
            for j in 0..nsp {
                let v = (dk * s.w[j] + (s.n * s.n - 1.0) * d.dw[j]) / self.flow.c;
                g.set(0, j + 1, v);
            }
            g
        }))
    }

    fn family(&self) -> &str {
        "slow_medium"
    }

    fn flow(&self) -> Option<&FlowSpec> {
        Some(&self.flow)
    }
}

/// Slowly moving medium: `g^{00} = n^2`, `g^{0j} = (n^2 - 1) w_j / c`,
/// spatial block `-delta`.
pub fn slow_medium_metric(flow: FlowSpec) -> Result<SpacetimeMetric> {
    flow.validate()?;
    Ok(SpacetimeMetric::from_model(SlowMedium { flow }, Domain::Everywhere))
}

#[derive(Clone, Debug)]
struct Acoustic {
    flow: FlowSpec,
}

impl MetricModel for Acoustic {
    fn n_space(&self) -> usize {
        self.flow.n_space()
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        let s = sample(&self.flow, x)?;
        let nsp = self.n_space();
        let c = self.flow.c;
        let k = 1.0 / (s.rho * c);
        let mut g = MetricTensor::zeros(nsp);
        g.set(0, 0, k);
        for j in 0..nsp {
            g.set(0, j + 1, k * s.w[j]);
            for m in j..nsp {
                let delta = if j == m { c * c } else { 0.0 };
                g.set(j + 1, m + 1, k * (s.w[j] * s.w[m] - delta));
            }
        }
        Ok(g)
    }

    fn derivative(&self, x: &[f64], p: usize) -> Option<Result<MetricTensor>> {
        let d = match sample_derivative(&self.flow, x, p)? {
            Ok(d) => d,
            Err(e) => return Some(Err(e)),
        };
        Some(sample(&self.flow, x).map(|s| {
            let nsp = self.n_space();
            let c = self.flow.c;
            let k = 1.0 / (s.rho * c);
            let dk = -k * d.drho / s.rho;
            let mut g = MetricTensor::zeros(nsp);
            g.set(0, 0, dk);
            for j in 0..nsp {
                g.set(0, j + 1, dk * s.w[j] + k * d.dw[j]);
                for m in j..nsp {
                    let delta = if j == m { c * c } else { 0.0 };
                    let v = dk * (s.w[j] * s.w[m] - delta) + k * (d.dw[j] * s.w[m] + s.w[j] * d.dw[m]);
                    g.set(j + 1, m + 1, v);
                }
            }
            g
        }))
    }

    fn family(&self) -> &str {
        "acoustic"
    }

    fn flow(&self) -> Option<&FlowSpec> {
        Some(&self.flow)
    }
}

/// Acoustic metric of a fluid with velocity `v`, sound speed `c` and density
/// `rho`: `(rho c)^{-1} [[1, v], [v, -c^2 I + v v^T]]`.
pub fn acoustic_metric(flow: FlowSpec) -> Result<SpacetimeMetric> {
    flow.validate()?;
    Ok(SpacetimeMetric::from_model(Acoustic { flow }, Domain::Everywhere))
}

/// Acoustic metric of the vortex `(A/r) r_hat + (B/r) theta_hat`.
pub fn vortex_metric(a: f64, b: f64) -> Result<SpacetimeMetric> {
    Ok(acoustic_metric(vortex_flow(a, b)?)?.with_domain(Domain::Punctured))
}

/// Radii where the shipped radial profile has `A = 1` and `A = -1`.
pub const PROFILE_ZEROS_PLUS: [f64; 1] = [0.9];
pub const PROFILE_ZEROS_MINUS: [f64; 2] = [1.4, 2.2];
pub const PROFILE_R1: f64 = 0.5;
pub const PROFILE_R0: f64 = 3.0;

/// Radial flow `A(r) r_hat + B(r) theta_hat` on `[r1, r0]` with
/// `A(r) = -1 + c (r - gamma) prod_k (r - z_k)` over `zeros_minus` and
/// `B(r) = 1 + (r0 - r)/2`. `gamma` and `c` are fixed by `A(r0) = 0` and
/// `A(zero_plus) = 1`, so the ergosphere is `r = r0`.
pub fn radial_zeros_flow(zero_plus: f64, zeros_minus: &[f64], r1: f64, r0: f64) -> Result<FlowSpec> {
    let p = |r: f64| zeros_minus.iter().map(|z| r - z).product::<f64>();
    let (p0, p1) = (p(r0), p(zero_plus));
    // c p0 (r0 - gamma) = 1 and c p1 (b1 - gamma) = 2
    let den = 2.0 * p0 - p1;
    if p0 == 0.0 || p1 == 0.0 || den == 0.0 {
        return Err(Error::InvalidProfile {
            radius: zero_plus,
            reason: "zeros of A + 1 and A - 1 must be distinct and differ from r0".into(),
        });
    }
    let gamma = (2.0 * p0 * r0 - p1 * zero_plus) / den;
    let c = 1.0 / (p0 * (r0 - gamma));
    let mut roots = zeros_minus.to_vec();
    roots.push(gamma);
    let a = RadialFunction::from_roots(-1.0, c, &roots);
    let b = RadialFunction::Polynomial(vec![1.0 + 0.5 * r0, -0.5]);
    radial_profile_flow(a, b, r1, r0)
}

/// The shipped profile: `A - 1` vanishes at 0.9, `A + 1` at 1.4 and 2.2, on
/// `[0.5, 3]`.
pub fn profile_flow() -> Result<FlowSpec> {
    radial_zeros_flow(PROFILE_ZEROS_PLUS[0], &PROFILE_ZEROS_MINUS, PROFILE_R1, PROFILE_R0)
}

/// Acoustic metric of [`profile_flow`] on the annulus `0.5 <= r <= 3.3`.
pub fn profile_metric() -> Result<SpacetimeMetric> {
    Ok(acoustic_metric(profile_flow()?)?.with_domain(Domain::Annulus {
        r_min: PROFILE_R1,
        r_max: 3.3,
    }))
}

/// `alpha` times another metric.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub base: Arc<dyn MetricModel>,
    pub alpha: f64,
}

impl MetricModel for Scaled {
    fn n_space(&self) -> usize {
        self.base.n_space()
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        Ok(self.base.components(x)?.scaled(self.alpha))
    }

    fn derivative(&self, x: &[f64], p: usize) -> Option<Result<MetricTensor>> {
        self.base.derivative(x, p).map(|d| d.map(|g| g.scaled(self.alpha)))
    }

    fn family(&self) -> &str {
        self.base.family()
    }

    fn flow(&self) -> Option<&FlowSpec> {
        self.base.flow()
    }
}

/// Smooth bump `amplitude * psi(|x - center| / radius)` added to one
/// component `g^{jk}` (and its mirror), with
/// `psi(s) = exp(1 - 1 / (1 - s^2))` for `s < 1` and zero beyond.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub component: (usize, usize),
}

impl Bump {
    /// Largest distance from the origin reached by the support.
    pub fn reach(&self) -> f64 {
        norm(&self.center) + self.radius
    }

    /// Smallest distance from the origin reached by the support.
    pub fn inner_reach(&self) -> f64 {
        (norm(&self.center) - self.radius).max(0.0)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, [f64; 3]) {
        let r2: f64 =
            x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (self.radius * self.radius);
        if r2 >= 1.0 {
            return (0.0, [0.0; 3]);
        }
        let q = 1.0 - r2;
        let psi = (1.0 - 1.0 / q).exp();
        let mut grad = [0.0; 3];
        for (p, gp) in grad.iter_mut().enumerate().take(x.len()) {
            *gp = psi * (-2.0 / (q * q)) * (x[p] - self.center[p]) / (self.radius * self.radius);
        }
        (self.amplitude * psi, grad.map(|v| self.amplitude * v))
    }
}

/// A base metric plus compactly supported bumps.
#[derive(Clone, Debug)]
pub struct Perturbed {
    pub base: Arc<dyn MetricModel>,
    pub bumps: Vec<Bump>,
}

impl MetricModel for Perturbed {
    fn n_space(&self) -> usize {
        self.base.n_space()
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        let mut g = self.base.components(x)?;
        for b in &self.bumps {
            let (v, _) = b.value_and_gradient(x);
            let (j, k) = b.component;
            g.set(j, k, g.get(j, k) + v);
        }
        Ok(g)
    }

    fn derivative(&self, x: &[f64], p: usize) -> Option<Result<MetricTensor>> {
        let base = self.base.derivative(x, p)?;
        Some(base.map(|mut g| {
            for b in &self.bumps {
                let (_, grad) = b.value_and_gradient(x);
                let (j, k) = b.component;
                g.set(j, k, g.get(j, k) + grad[p]);
            }
            g
        }))
    }

    fn family(&self) -> &str {
        self.base.family()
    }

    fn flow(&self) -> Option<&FlowSpec> {
        self.base.flow()
    }
}

type ComponentFn = dyn Fn(&[f64]) -> Result<MetricTensor> + Send + Sync;
type DerivativeFn = dyn Fn(&[f64], usize) -> Result<MetricTensor> + Send + Sync;

/// Metric given by user closures.
#[derive(Clone)]
pub struct CustomModel {
    n: usize,
    name: String,
    f: Arc<ComponentFn>,
    df: Option<Arc<DerivativeFn>>,
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomModel({}, n = {})", self.name, self.n)
    }
}

impl CustomModel {
    pub fn new(
        n: usize,
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> Result<MetricTensor> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            name: name.into(),
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn with_derivative(
        mut self,
        df: impl Fn(&[f64], usize) -> Result<MetricTensor> + Send + Sync + 'static,
    ) -> Self {
        self.df = Some(Arc::new(df));
        self
    }
}

impl MetricModel for CustomModel {
    fn n_space(&self) -> usize {
        self.n
    }

    fn components(&self, x: &[f64]) -> Result<MetricTensor> {
        (self.f)(x)
    }

    fn derivative(&self, x: &[f64], p: usize) -> Option<Result<MetricTensor>> {
        self.df.as_ref().map(|df| df(x, p))
    }

    fn family(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{AffineField, ScalarField};

    fn uniform(w: &[f64]) -> FlowSpec {
        FlowSpec::new(Arc::new(AffineField::uniform(w.len(), w)))
    }

    fn close(g: &MetricTensor, rows: &[&[f64]], tol: f64) -> bool {
        rows.iter()
            .enumerate()
            .all(|(j, row)| row.iter().enumerate().all(|(k, v)| (g.get(j, k) - v).abs() <= tol))
    }

    #[test]
    fn gordon_unit_index_is_flat() {
        let m = gordon_metric(uniform(&[0.3, -0.2])).unwrap();
        let g = m.eval(&[1.0, 2.0]).unwrap();
        assert!(close(
            &g,
            &[&[1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, -1.0]],
            0.0
        ));
    }

    #[test]
    fn gordon_rest_frame() {
        let flow = uniform(&[0.0, 0.0]).with_index(ScalarField::Constant(2.0));
        let g = gordon_metric(flow).unwrap().eval(&[0.0, 0.0]).unwrap();
        assert!(close(
            &g,
            &[&[4.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, -1.0]],
            1e-15
        ));
    }

    #[test]
    fn gordon_on_ergosphere() {
        let flow = uniform(&[0.5, 0.0]).with_index(ScalarField::Constant(2.0));
        let g = gordon_metric(flow).unwrap().eval(&[0.0, 0.0]).unwrap();
        assert!(close(
            &g,
            &[&[5.0, 2.0, 0.0], &[2.0, 0.0, 0.0], &[0.0, 0.0, -1.0]],
            1e-14
        ));
        assert!(g.spatial_det().abs() < 1e-14);
    }

    #[test]
    fn gordon_rejects_superluminal_flow() {
        let m = gordon_metric(uniform(&[1.0, 0.0]).with_index(ScalarField::Constant(2.0))).unwrap();
        assert!(matches!(
            m.eval(&[0.0, 0.0]),
            Err(Error::EvaluationOutsideDomain { .. })
        ));
    }

    #[test]
    fn slow_medium_example() {
        let flow = uniform(&[1.0, 0.0]).with_index(ScalarField::Constant(2.0));
        let m = slow_medium_metric(flow).unwrap();
        let g = m.eval(&[0.0, 0.0]).unwrap();
        assert!(close(
            &g,
            &[&[4.0, 3.0, 0.0], &[3.0, -1.0, 0.0], &[0.0, 0.0, -1.0]],
            0.0
        ));
        assert_eq!(g.spatial_det(), 1.0);
    }

    #[test]
    fn acoustic_vortex_example() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let g = m.eval(&[1.0, 0.0]).unwrap();
        assert!(close(
            &g,
            &[&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]],
            1e-15
        ));
        assert!((g.spatial_det() + 1.0).abs() < 1e-15);
        assert!(m.spatial_det(&[2.0f64.sqrt(), 0.0]).unwrap().abs() < 1e-15);
        assert!((m.spatial_det(&[2.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn acoustic_at_rest() {
        let g = acoustic_metric(uniform(&[0.0, 0.0]))
            .unwrap()
            .eval(&[0.0, 0.0])
            .unwrap();
        assert_eq!(g, MetricTensor::minkowski(2));
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = Bump {
            center: vec![0.0, 0.0],
            radius: 0.5,
            amplitude: 0.3,
            component: (0, 0),
        };
        assert_eq!(b.value_and_gradient(&[0.6, 0.0]).0, 0.0);
        assert!((b.value_and_gradient(&[0.0, 0.0]).0 - 0.3).abs() < 1e-15);
        assert_eq!(b.reach(), 0.5);
    }

    fn check_derivatives(m: &SpacetimeMetric, x: &[f64]) {
        for p in 0..m.n_space() {
            let exact = m.deriv(x, p).unwrap();
            let approx = m.deriv_fd(x, p, 1e-5).unwrap();
            let err = exact.sub(&approx).max_abs();
            assert!(err < 1e-7 * (1.0 + exact.max_abs()), "p = {p}: {err:e}");
        }
    }

    #[test]
    fn analytic_derivatives_agree_with_differences() {
        let rotating = FlowSpec::new(Arc::new(AffineField {
            n: 2,
            matrix: [[0.1, -0.2, 0.0], [0.2, 0.05, 0.0], [0.0; 3]],
            offset: [0.1, 0.0, 0.0],
        }))
        .with_index(ScalarField::Constant(1.5));
        check_derivatives(&gordon_metric(rotating.clone()).unwrap(), &[0.4, -0.3]);
        check_derivatives(&slow_medium_metric(rotating.clone()).unwrap(), &[0.4, -0.3]);
        check_derivatives(&acoustic_metric(rotating).unwrap(), &[0.4, -0.3]);
        check_derivatives(&vortex_metric(-1.0, 1.0).unwrap(), &[0.8, 0.5]);
        let bumped = SpacetimeMetric::from_model(
            Perturbed {
                base: vortex_metric(-1.0, 1.0).unwrap().model().clone(),
                bumps: vec![Bump {
                    center: vec![0.0, 0.0],
                    radius: 0.6,
                    amplitude: 0.2,
                    component: (0, 0),
                }],
            },
            Domain::Punctured,
        );
        check_derivatives(&bumped, &[0.3, 0.2]);
    }
}
