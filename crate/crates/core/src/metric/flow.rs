use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Spatial Jacobian `J[i][p] = d v_i / d x_p`, padded to 3x3.
pub type Jacobian = [[f64; 3]; 3];

/// A steady velocity field `x -> w(x)`.
pub trait VelocityField: Send + Sync + fmt::Debug {
    fn n_space(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<[f64; 3]>;

    /// Analytic Jacobian, if the field provides one.
    fn jacobian(&self, _x: &[f64]) -> Option<Result<Jacobian>> {
        None
    }
}

/// Scalar function of `r` together with its derivative.
#[derive(Clone)]
pub enum RadialFunction {
    /// `sum_k c_k r^k`.
    Polynomial(Vec<f64>),
    /// `c / r`.
    Reciprocal(f64),
    /// User function returning `(f(r), f'(r))`.
    Closure(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFunction::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            RadialFunction::Reciprocal(c) => f.debug_tuple("Reciprocal").field(c).finish(),
            RadialFunction::Closure(_) => f.write_str("Closure(..)"),
        }
    }
}

impl RadialFunction {
    pub fn constant(c: f64) -> Self {
        RadialFunction::Polynomial(vec![c])
    }

    /// `offset + scale * prod_k (r - roots[k])`, expanded into monomials.
    pub fn from_roots(offset: f64, scale: f64, roots: &[f64]) -> Self {
        let mut coeffs = vec![scale];
        for &z in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= z * c;
            }
            coeffs = next;
        }
        coeffs[0] += offset;
        RadialFunction::Polynomial(coeffs)
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        match self {
            RadialFunction::Polynomial(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for &ck in c.iter().rev() {
                    d = d * r + v;
                    v = v * r + ck;
                }
                (v, d)
            }
            RadialFunction::Reciprocal(c) => (c / r, -c / (r * r)),
            RadialFunction::Closure(f) => f(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn negated(&self) -> Self {
        match self {
            RadialFunction::Polynomial(c) => RadialFunction::Polynomial(c.iter().map(|v| -v).collect()),
            RadialFunction::Reciprocal(c) => RadialFunction::Reciprocal(-c),
            RadialFunction::Closure(f) => {
                let f = f.clone();
                RadialFunction::Closure(Arc::new(move |r| {
                    let (v, d) = f(r);
                    (-v, -d)
                }))
            }
        }
    }
}

fn planar_radius(x: &[f64]) -> Result<f64> {
    let r = x[0].hypot(x[1]);
    if r <= 1e-300 || !r.is_finite() {
        return Err(Error::outside(x, "velocity field is singular at r = 0"));
    }
    Ok(r)
}

/// Velocity `A(r) r_hat + B(r) theta_hat` in the plane.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub a: RadialFunction,
    pub b: RadialFunction,
}

impl RadialProfile {
    pub fn vortex(a: f64, b: f64) -> Self {
        Self {
            a: RadialFunction::Reciprocal(a),
            b: RadialFunction::Reciprocal(b),
        }
    }
}

impl VelocityField for RadialProfile {
    fn n_space(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Result<[f64; 3]> {
        let r = planar_radius(x)?;
        let (c, s) = (x[0] / r, x[1] / r);
        let f = self.a.value(r);
        let g = self.b.value(r);
        Ok([f * c - g * s, f * s + g * c, 0.0])
    }

    fn jacobian(&self, x: &[f64]) -> Option<Result<Jacobian>> {
        let r = match planar_radius(x) {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        let (c, s) = (x[0] / r, x[1] / r);
        let (f, fp) = self.a.eval(r);
        let (g, gp) = self.b.eval(r);
        let mut j = [[0.0; 3]; 3];
        j[0][0] = fp * c * c + f * s * s / r - gp * c * s + g * c * s / r;
        j[0][1] = fp * s * c - f * c * s / r - gp * s * s - g * c * c / r;
        j[1][0] = fp * c * s - f * c * s / r + gp * c * c + g * s * s / r;
        j[1][1] = fp * s * s + f * c * c / r + gp * s * c - g * c * s / r;
        Some(Ok(j))
    }
}

/// `w(x) = M x + w0`; covers uniform streams and linear gradient flows.
#[derive(Clone, Debug)]
pub struct AffineField {
    pub n: usize,
    pub matrix: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl AffineField {
    pub fn uniform(n: usize, w: &[f64]) -> Self {
        let mut offset = [0.0; 3];
        offset[..n].copy_from_slice(&w[..n]);
        Self {
            n,
            matrix: [[0.0; 3]; 3],
            offset,
        }
    }

    /// `alpha * x`.
    pub fn radial_linear(n: usize, alpha: f64) -> Self {
        let mut matrix = [[0.0; 3]; 3];
        for (j, row) in matrix.iter_mut().enumerate().take(n) {
            row[j] = alpha;
        }
        Self {
            n,
            matrix,
            offset: [0.0; 3],
        }
    }
}

impl VelocityField for AffineField {
    fn n_space(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> Result<[f64; 3]> {
        let mut w = self.offset;
        for (j, wj) in w.iter_mut().enumerate().take(self.n) {
            *wj += (0..self.n).map(|k| self.matrix[j][k] * x[k]).sum::<f64>();
        }
        Ok(w)
    }

    fn jacobian(&self, _x: &[f64]) -> Option<Result<Jacobian>> {
        Some(Ok(self.matrix))
    }
}

/// Velocity given by a closure, without analytic derivatives.
#[derive(Clone)]
pub struct FnField {
    pub n: usize,
    pub f: Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField(n = {})", self.n)
    }
}

impl VelocityField for FnField {
    fn n_space(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> Result<[f64; 3]> {
        Ok((self.f)(x))
    }
}

/// `-w` for an existing field.
#[derive(Clone, Debug)]
pub struct Reversed(pub Arc<dyn VelocityField>);

impl VelocityField for Reversed {
    fn n_space(&self) -> usize {
        self.0.n_space()
    }

    fn value(&self, x: &[f64]) -> Result<[f64; 3]> {
        let w = self.0.value(x)?;
        Ok([-w[0], -w[1], -w[2]])
    }

    fn jacobian(&self, x: &[f64]) -> Option<Result<Jacobian>> {
        self.0.jacobian(x).map(|j| {
            j.map(|mut m| {
                for row in m.iter_mut() {
                    for v in row.iter_mut() {
                        *v = -*v;
                    }
                }
                m
            })
        })
    }
}

/// Scalar coefficient such as the refraction index or the density.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Function {
        value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        gradient: Option<Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>>,
    },
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            ScalarField::Function { gradient, .. } => {
                write!(f, "Function(analytic gradient: {})", gradient.is_some())
            }
        }
    }
}

impl ScalarField {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Function { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Option<[f64; 3]> {
        match self {
            ScalarField::Constant(_) => Some([0.0; 3]),
            ScalarField::Function { gradient, .. } => gradient.as_ref().map(|g| g(x)),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarField::Constant(c) => Some(*c),
            ScalarField::Function { .. } => None,
        }
    }
}

/// Description of a moving medium: velocity, refraction index, density and
/// the propagation speed `c`.
#[derive(Clone, Debug)]
pub struct FlowSpec {
    pub velocity: Arc<dyn VelocityField>,
    pub n_index: ScalarField,
    pub density: ScalarField,
    pub c: f64,
}

impl FlowSpec {
    pub fn new(velocity: Arc<dyn VelocityField>) -> Self {
        Self {
            velocity,
            n_index: ScalarField::Constant(1.0),
            density: ScalarField::Constant(1.0),
            c: 1.0,
        }
    }

    pub fn with_index(mut self, n_index: ScalarField) -> Self {
        self.n_index = n_index;
        self
    }

    pub fn with_density(mut self, density: ScalarField) -> Self {
        self.density = density;
        self
    }

    pub fn with_speed(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn n_space(&self) -> usize {
        self.velocity.n_space()
    }

    /// The same medium flowing in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self {
            velocity: Arc::new(Reversed(self.velocity.clone())),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wave speed must be positive, got {}",
                self.c
            )));
        }
        if let Some(n) = self.n_index.as_constant() {
            if !(n >= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "refraction index must be >= 1, got {n}"
                )));
            }
        }
        if let Some(rho) = self.density.as_constant() {
            if !(rho > 0.0) {
                return Err(Error::InvalidArgument(format!("density must be positive, got {rho}")));
            }
        }
        Ok(())
    }

    /// Pointwise check of the scalar invariants `n >= 1`, `rho > 0`.
    pub fn check_at(&self, x: &[f64]) -> Result<()> {
        let n = self.n_index.value(x);
        if !(n >= 1.0) {
            return Err(Error::outside(x, format!("refraction index {n} < 1")));
        }
        let rho = self.density.value(x);
        if !(rho > 0.0) {
            return Err(Error::outside(x, format!("density {rho} <= 0")));
        }
        Ok(())
    }
}

/// Vortex flow `v = (A/r) r_hat + (B/r) theta_hat` with `rho = c = 1`.
pub fn vortex_flow(a: f64, b: f64) -> Result<FlowSpec> {
    if a == 0.0 && b == 0.0 {
        return Err(Error::InvalidArgument("vortex needs (A, B) != (0, 0)".into()));
    }
    Ok(FlowSpec::new(Arc::new(RadialProfile::vortex(a, b))))
}

/// Number of samples used to validate radial profiles.
pub const PROFILE_SAMPLES: usize = 1000;

/// Flow `A(r) r_hat + B(r) theta_hat`, validated by dense sampling on
/// `[r1, r0]`: `B > 0`, `A^2 + B^2 = 1` at `r0` and `A^2 + B^2 > 1` below it.
pub fn radial_profile_flow(a: RadialFunction, b: RadialFunction, r1: f64, r0: f64) -> Result<FlowSpec> {
    if !(r1 > 0.0 && r0 > r1) {
        return Err(Error::InvalidProfile {
            radius: r1,
            reason: format!("need 0 < r1 < r0, got r1 = {r1}, r0 = {r0}"),
        });
    }
    let speed2 = |r: f64| {
        let (av, bv) = (a.value(r), b.value(r));
        av * av + bv * bv
    };
    let edge = speed2(r0) - 1.0;
    if edge.abs() > 1e-9 {
        return Err(Error::InvalidProfile {
            radius: r0,
            reason: format!("A^2 + B^2 - 1 = {edge:e} at r0, expected 0"),
        });
    }
    for i in 0..=PROFILE_SAMPLES {
        let r = r1 + (r0 - r1) * i as f64 / PROFILE_SAMPLES as f64;
        let bv = b.value(r);
        if !(bv > 0.0) {
            return Err(Error::InvalidProfile {
                radius: r,
                reason: format!("B(r) = {bv} is not positive"),
            });
        }
        if i < PROFILE_SAMPLES && !(speed2(r) > 1.0) {
            return Err(Error::InvalidProfile {
                radius: r,
                reason: format!("A^2 + B^2 = {} is not above 1", speed2(r)),
            });
        }
    }
    Ok(FlowSpec::new(Arc::new(RadialProfile { a, b })))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(f: &dyn VelocityField, x: &[f64]) -> Jacobian {
        let h = 1e-6;
        let mut j = [[0.0; 3]; 3];
        for p in 0..f.n_space() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[p] += h;
            xm[p] -= h;
            let vp = f.value(&xp).unwrap();
            let vm = f.value(&xm).unwrap();
            for i in 0..f.n_space() {
                j[i][p] = (vp[i] - vm[i]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn vortex_values() {
        let v = RadialProfile::vortex(1.0, 0.0).value(&[2.0, 0.0]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15 && v[1].abs() < 1e-15);
        let v = RadialProfile::vortex(0.0, 1.0).value(&[0.0, 2.0]).unwrap();
        assert!((v[0] + 0.5).abs() < 1e-15 && v[1].abs() < 1e-15);
        let v = RadialProfile::vortex(1.0, 1.0).value(&[1.0, 0.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vortex_singular_at_origin() {
        assert!(matches!(
            RadialProfile::vortex(1.0, 1.0).value(&[0.0, 0.0]),
            Err(Error::EvaluationOutsideDomain { .. })
        ));
    }

    #[test]
    fn radial_jacobian_matches_differences() {
        let field = RadialProfile {
            a: RadialFunction::from_roots(-1.0, 0.7, &[1.4, 2.2, 3.1]),
            b: RadialFunction::Polynomial(vec![2.5, -0.5]),
        };
        for &x in &[[1.3, 0.4], [-0.8, 2.0], [0.1, -1.7]] {
            let exact = field.jacobian(&x).unwrap().unwrap();
            let approx = fd_jacobian(&field, &x);
            for i in 0..2 {
                for p in 0..2 {
                    assert!((exact[i][p] - approx[i][p]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn polynomial_from_roots() {
        let f = RadialFunction::from_roots(-1.0, 2.0, &[1.0, 3.0]);
        assert!((f.value(1.0) + 1.0).abs() < 1e-14);
        assert!((f.value(3.0) + 1.0).abs() < 1e-14);
        let (v, d) = f.eval(2.0);
        assert!((v - (-1.0 - 2.0)).abs() < 1e-14);
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn profile_rejects_bad_edge() {
        let err =
            radial_profile_flow(RadialFunction::constant(0.0), RadialFunction::constant(2.0), 0.5, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidProfile { .. }));
    }

    #[test]
    fn profile_reports_violating_radius() {
        // A^2 + B^2 = 1 + (r - 1)(r - 0.7) drops below 1 on (0.7, 1).
        let a = RadialFunction::Closure(Arc::new(|r: f64| {
            let s = 1.0 + (r - 1.0) * (r - 0.7) - 0.25;
            (s.sqrt(), (2.0 * r - 1.7) / (2.0 * s.sqrt()))
        }));
        let b = RadialFunction::constant(0.5);
        match radial_profile_flow(a, b, 0.5, 1.0) {
            Err(Error::InvalidProfile { radius, .. }) => {
                assert!((0.7..1.0).contains(&radius), "radius {radius}")
            }
            other => panic!("expected InvalidProfile, got {other:?}"),
        }
    }
}
