use serde::{Deserialize, Serialize};

use super::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::metric::{MetricTensor, SpacetimeMetric};

/// `|Delta|` below which a point counts as lying on the ergosphere.
pub const TOL_ERGO: f64 = 1e-8;
/// Largest characteristic residual accepted by [`classify_hole`].
pub const TOL_CHAR: f64 = 1e-6;

/// The two families of characteristic curves in the ergoregion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    pub const BOTH: [Family; 2] = [Family::Plus, Family::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Family::Plus => 1.0,
            Family::Minus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Minus => "minus",
        }
    }
}

/// Real null covectors of the spatial block at one point, unit length and
/// oriented forward (`sum_j g^{0j} xi_j > 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullDirectionPair {
    pub xi_plus: [f64; 2],
    pub xi_minus: [f64; 2],
    /// `(g^{12})^2 - g^{11} g^{22} = -Delta`.
    pub discriminant: f64,
}

/// Unit tangents `f+`, `f-` of the two characteristic families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FramePair {
    pub f_plus: [f64; 2],
    pub f_minus: [f64; 2],
    /// True on the ergosphere, where both frames coincide.
    pub degenerate: bool,
}

impl FramePair {
    pub fn get(&self, family: Family) -> [f64; 2] {
        match family {
            Family::Plus => self.f_plus,
            Family::Minus => self.f_minus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoleKind {
    BlackHole,
    WhiteHole,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleClass {
    pub kind: HoleKind,
    /// Smallest `|sum_j g^{j0} nu_j|` over the samples.
    pub margin: f64,
    pub residual: f64,
}

/// Cone condition on an inner boundary curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerCondition {
    /// Every forward characteristic projection crosses the curve out of
    /// the ergoregion.
    A,
    /// Every forward characteristic projection crosses into the ergoregion.
    B,
    Neither,
}

/// Spatial block, time-space coupling and `Delta` of a 2D metric.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Block {
    pub m: [[f64; 2]; 2],
    pub d: [f64; 2],
    pub g00: f64,
    pub delta: f64,
}

impl Block {
    pub fn of(g: &MetricTensor) -> Self {
        let m = [[g.get(1, 1), g.get(1, 2)], [g.get(1, 2), g.get(2, 2)]];
        Self {
            m,
            d: [g.get(0, 1), g.get(0, 2)],
            g00: g.get(0, 0),
            delta: m[0][0] * m[1][1] - m[0][1] * m[0][1],
        }
    }

    pub fn apply(&self, v: &[f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn quad(&self, v: &[f64; 2]) -> f64 {
        dot(v, &self.apply(v))
    }

    pub fn scale(&self) -> f64 {
        self.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Eigenpairs `(l1, e1), (l2, e2)` with `l1 >= l2`.
    pub fn eigen(&self) -> ((f64, [f64; 2]), (f64, [f64; 2])) {
        let (a, b, c) = (self.m[0][0], self.m[0][1], self.m[1][1]);
        let mean = 0.5 * (a + c);
        let rad = (0.5 * (a - c)).hypot(b);
        let (l1, l2) = (mean + rad, mean - rad);
        // eigenvector of l1, picking the better conditioned formula
        let e1 = if b == 0.0 && a >= c {
            [1.0, 0.0]
        } else if b == 0.0 {
            [0.0, 1.0]
        } else if a >= c {
            normalize(&[l1 - c, b])
        } else {
            normalize(&[b, l1 - a])
        };
        let e2 = [-e1[1], e1[0]];
        ((l1, e1), (l2, e2))
    }

    /// Unit null covector of the (nearly) rank-one block: the eigenvector
    /// of the eigenvalue of smallest magnitude.
    pub fn kernel(&self) -> [f64; 2] {
        let ((l1, e1), (l2, e2)) = self.eigen();
        if l1.abs() <= l2.abs() {
            e1
        } else {
            e2
        }
    }
}

pub(crate) fn dot(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn normalize(v: &[f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn check_planar(metric: &SpacetimeMetric) -> Result<()> {
    if metric.n_space() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: metric.n_space(),
        });
    }
    Ok(())
}

/// Labeled characteristic frames over a planar metric.
///
/// At a point of the ergoregion the two null lines of the spatial block
/// carry forward velocities `V = M xi` (with `xi` oriented so that
/// `g^{0j} xi_j > 0`). These bound a wedge containing `d = (g^{01}, g^{02})`.
/// `f+` is the edge on the side `chirality` of `d` and `f-` is minus the
/// other edge, so the `+` family runs forward in time and the `-` family
/// backward. The chirality is fixed once from an ergosphere point, where
/// both frames must equal the tangent pointing into the ergoregion.
#[derive(Clone, Debug)]
pub struct FrameField {
    metric: SpacetimeMetric,
    chirality: f64,
    tol_ergo: f64,
}

impl FrameField {
    pub fn new(metric: SpacetimeMetric, chirality: f64) -> Result<Self> {
        check_planar(&metric)?;
        if chirality != 1.0 && chirality != -1.0 {
            return Err(Error::InvalidArgument(format!(
                "chirality must be +1 or -1, got {chirality}"
            )));
        }
        Ok(Self {
            metric,
            chirality,
            tol_ergo: TOL_ERGO,
        })
    }

    pub fn with_tol_ergo(mut self, tol: f64) -> Self {
        self.tol_ergo = tol;
        self
    }

    /// Chirality read off at the ergosphere point `y`.
    pub fn from_ergosphere_point(metric: &SpacetimeMetric, y: &[f64; 2]) -> Result<Self> {
        check_planar(metric)?;
        let t_in = inward_tangent(metric, y)?;
        let blk = Block::of(&metric.eval(y)?);
        let c = cross(&blk.d, &t_in);
        if c == 0.0 {
            return Err(Error::FrameDiscontinuity { point: y.to_vec() });
        }
        Self::new(metric.clone(), c.signum())
    }

    /// Locates the ergosphere along the radial probe through `x` and reads
    /// the chirality there.
    pub fn from_probe(metric: &SpacetimeMetric, x: &[f64; 2]) -> Result<Self> {
        check_planar(metric)?;
        let y = ergosphere_on_ray(metric, x)?;
        Self::from_ergosphere_point(metric, &y)
    }

    pub fn metric(&self) -> &SpacetimeMetric {
        &self.metric
    }

    pub fn chirality(&self) -> f64 {
        self.chirality
    }

    pub fn tol_ergo(&self) -> f64 {
        self.tol_ergo
    }

    /// Frames and forward null covectors at `x`.
    pub fn analyze(&self, x: &[f64; 2]) -> Result<(FramePair, NullDirectionPair)> {
        let blk = Block::of(&self.metric.eval(x)?);
        if blk.delta > self.tol_ergo {
            return Err(Error::NoRealCharacteristics { delta: blk.delta });
        }
        if blk.delta.abs() <= self.tol_ergo {
            let t = inward_tangent(&self.metric, x)?;
            let mut b = [t[1], -t[0]];
            if dot(&blk.d, &b) < 0.0 {
                b = [-b[0], -b[1]];
            }
            return Ok((
                FramePair {
                    f_plus: t,
                    f_minus: t,
                    degenerate: true,
                },
                NullDirectionPair {
                    xi_plus: b,
                    xi_minus: b,
                    discriminant: -blk.delta,
                },
            ));
        }
        let ((l1, e1), (l2, e2)) = blk.eigen();
        let (p, q) = (l1.max(0.0).sqrt(), (-l2).max(0.0).sqrt());
        let mut edges = [[0.0; 2]; 2];
        let mut covs = [[0.0; 2]; 2];
        for (k, s) in [1.0, -1.0].iter().enumerate() {
            let mut xi = normalize(&[q * e1[0] + s * p * e2[0], q * e1[1] + s * p * e2[1]]);
            if dot(&blk.d, &xi) < 0.0 {
                xi = [-xi[0], -xi[1]];
            }
            covs[k] = xi;
            edges[k] = normalize(&blk.apply(&xi));
        }
        let sides = [cross(&blk.d, &edges[0]).signum(), cross(&blk.d, &edges[1]).signum()];
        if sides[0] == sides[1] || sides[0] == 0.0 {
            return Err(Error::FrameDiscontinuity { point: x.to_vec() });
        }
        let (ip, im) = if sides[0] == self.chirality { (0, 1) } else { (1, 0) };
        Ok((
            FramePair {
                f_plus: edges[ip],
                f_minus: [-edges[im][0], -edges[im][1]],
                degenerate: false,
            },
            NullDirectionPair {
                xi_plus: covs[ip],
                xi_minus: covs[im],
                discriminant: -blk.delta,
            },
        ))
    }

    pub fn frames(&self, x: &[f64; 2]) -> Result<FramePair> {
        Ok(self.analyze(x)?.0)
    }

    pub fn null_covectors(&self, x: &[f64; 2]) -> Result<NullDirectionPair> {
        Ok(self.analyze(x)?.1)
    }

    pub fn direction(&self, x: &[f64; 2], family: Family) -> Result<[f64; 2]> {
        Ok(self.frames(x)?.get(family))
    }

    /// Unit forward velocities `dx/ds` of the two null bicharacteristics
    /// through `x` with `xi_0 = 0`, in `(plus, minus)` order.
    pub fn forward_velocities(&self, x: &[f64; 2]) -> Result<([f64; 2], [f64; 2])> {
        let f = self.frames(x)?;
        Ok((f.f_plus, [-f.f_minus[0], -f.f_minus[1]]))
    }
}

/// Tangent of the degenerate characteristic direction at an ergosphere
/// point, oriented towards decreasing `Delta`.
fn inward_tangent(metric: &SpacetimeMetric, y: &[f64; 2]) -> Result<[f64; 2]> {
    let blk = Block::of(&metric.eval(y)?);
    let b = blk.kernel();
    let t = [-b[1], b[0]];
    let grad = metric.delta_gradient(y)?;
    let s = t[0] * grad[0] + t[1] * grad[1];
    let gn = grad[0].hypot(grad[1]);
    if !(s.abs() > 1e-12 * gn.max(1e-300)) {
        return Err(Error::FrameDiscontinuity { point: y.to_vec() });
    }
    Ok(if s < 0.0 { t } else { [-t[0], -t[1]] })
}

/// Bisects `Delta` along the ray from the origin through `x` to a point
/// with `|Delta| <= TOL_ERGO`, marching outward from ergoregion points and
/// inward from points outside.
pub fn ergosphere_on_ray(metric: &SpacetimeMetric, x: &[f64; 2]) -> Result<[f64; 2]> {
    let r0 = x[0].hypot(x[1]);
    if r0 == 0.0 {
        return Err(Error::ErgosphereNotFound { point: x.to_vec() });
    }
    let dir = [x[0] / r0, x[1] / r0];
    let delta = |r: f64| -> Option<f64> {
        let p = [r * dir[0], r * dir[1]];
        metric.eval(&p).ok().map(|g| g.spatial_det())
    };
    let d0 = delta(r0).ok_or_else(|| Error::ErgosphereNotFound { point: x.to_vec() })?;
    if d0.abs() <= TOL_ERGO {
        return Ok(*x);
    }
    let factor: f64 = if d0 < 0.0 { 1.01 } else { 1.0 / 1.01 };
    let (mut a, mut fa) = (r0, d0);
    let mut bracket = None;
    for _ in 0..4000 {
        let b = a * factor;
        match delta(b) {
            Some(fb) if fb.signum() != fa.signum() || fb == 0.0 => {
                bracket = Some((a, fa, b));
                break;
            }
            Some(fb) => {
                a = b;
                fa = fb;
            }
            None => break,
        }
    }
    let (mut lo, flo, mut hi) = bracket.ok_or_else(|| Error::ErgosphereNotFound { point: x.to_vec() })?;
    let mut best = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = delta(mid).ok_or_else(|| Error::ErgosphereNotFound { point: x.to_vec() })?;
        best = mid;
        if fm.abs() <= TOL_ERGO * 1e-3 || (hi - lo).abs() <= 1e-15 * mid {
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = [best * dir[0], best * dir[1]];
    let d = delta(best).unwrap_or(f64::INFINITY);
    if d.abs() > TOL_ERGO {
        return Err(Error::ErgosphereNotFound { point: x.to_vec() });
    }
    Ok(y)
}

/// Forward null covectors at `x` with labels taken from the radial probe.
pub fn spatial_null_covectors(metric: &SpacetimeMetric, x: &[f64; 2]) -> Result<NullDirectionPair> {
    check_planar(metric)?;
    let blk = Block::of(&metric.eval(x)?);
    if blk.delta > TOL_ERGO {
        return Err(Error::NoRealCharacteristics { delta: blk.delta });
    }
    FrameField::from_probe(metric, x)?.null_covectors(x)
}

/// Frames at `x` with labels taken from the radial probe.
pub fn char_frames(metric: &SpacetimeMetric, x: &[f64; 2]) -> Result<FramePair> {
    check_planar(metric)?;
    let blk = Block::of(&metric.eval(x)?);
    if blk.delta > TOL_ERGO {
        return Err(Error::NoRealCharacteristics { delta: blk.delta });
    }
    FrameField::from_probe(metric, x)?.frames(x)
}

/// Unit covector `b` spanning the null space of the spatial block at an
/// ergosphere point, signed so that it points along `grad Delta`.
pub fn ergosphere_null_covector(metric: &SpacetimeMetric, y: &[f64; 2], tol_ergo: f64) -> Result<[f64; 2]> {
    check_planar(metric)?;
    let blk = Block::of(&metric.eval(y)?);
    if blk.delta.abs() >= tol_ergo {
        return Err(Error::NotOnErgosphere { delta: blk.delta });
    }
    let ((l1, _), (l2, _)) = blk.eigen();
    if l1.abs().max(l2.abs()) <= 1e-12 * (1.0 + blk.g00.abs()) {
        return Err(Error::DegenerateRank { point: y.to_vec() });
    }
    let b = blk.kernel();
    let grad = metric.delta_gradient(y)?;
    Ok(if b[0] * grad[0] + b[1] * grad[1] < 0.0 {
        [-b[0], -b[1]]
    } else {
        b
    })
}

fn curve_blocks(metric: &SpacetimeMetric, curve: &ClosedCurve) -> Result<Vec<Block>> {
    check_planar(metric)?;
    curve.points().iter().map(|p| Ok(Block::of(&metric.eval(p)?))).collect()
}

/// Largest `|sum g^{jk} nu_j nu_k|` over the unit outward normals.
pub fn characteristic_residual(curve: &ClosedCurve, metric: &SpacetimeMetric) -> Result<f64> {
    let blocks = curve_blocks(metric, curve)?;
    Ok(blocks
        .iter()
        .zip(curve.outward_normals())
        .map(|(b, n)| b.quad(&n).abs())
        .fold(0.0, f64::max))
}

/// Black or white hole according to the sign of `sum_j g^{j0} nu_j`.
pub fn classify_hole(curve: &ClosedCurve, metric: &SpacetimeMetric, tol_char: f64) -> Result<HoleClass> {
    let residual = characteristic_residual(curve, metric)?;
    if residual > tol_char {
        return Err(Error::NotCharacteristic { residual });
    }
    let blocks = curve_blocks(metric, curve)?;
    let s: Vec<f64> = blocks
        .iter()
        .zip(curve.outward_normals())
        .map(|(b, n)| dot(&b.d, &n))
        .collect();
    let margin = s.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let kind = if s.iter().all(|&v| v > 0.0) {
        HoleKind::WhiteHole
    } else if s.iter().all(|&v| v < 0.0) {
        HoleKind::BlackHole
    } else {
        return Err(Error::MixedSign);
    };
    Ok(HoleClass { kind, margin, residual })
}

/// Nonzero root `xi_0 = -2 (g^{00})^{-1} sum_j g^{0j} xi_j` of the full
/// characteristic equation for a spatial null covector (the other root is
/// zero).
pub fn time_root_at_null(metric: &SpacetimeMetric, y: &[f64; 2], xi: &[f64; 2]) -> Result<f64> {
    check_planar(metric)?;
    let blk = Block::of(&metric.eval(y)?);
    let norm2 = dot(xi, xi);
    let residual = blk.quad(xi).abs();
    if residual > 1e-8 * blk.scale().max(1.0) * norm2 {
        return Err(Error::NotCharacteristic { residual });
    }
    let s = dot(&blk.d, xi);
    if s == 0.0 || s.abs() <= 1e-14 * norm2.sqrt() * blk.d[0].hypot(blk.d[1]) {
        return Err(Error::ZeroRoot { point: y.to_vec() });
    }
    Ok(-2.0 * s / blk.g00)
}

/// The root of the characteristic equation for which the bicharacteristic
/// runs forward, `dx_0/ds = 2 (g^{00} xi_0 + sum_j g^{0j} xi_j) > 0`.
pub fn forward_time_root(metric: &SpacetimeMetric, y: &[f64; 2], xi: &[f64; 2]) -> Result<f64> {
    let root = time_root_at_null(metric, y, xi)?;
    let blk = Block::of(&metric.eval(y)?);
    Ok(if dot(&blk.d, xi) > 0.0 { 0.0 } else { root })
}

/// Cone condition on the inner curve `s1`.
///
/// `N` is taken as the unit normal of `s1` pointing out of the ergoregion,
/// i.e. into the region enclosed by `s1`; the test compares it with the
/// forward velocities of both null bicharacteristics at every sample.
pub fn inner_boundary_condition(metric: &SpacetimeMetric, s1: &ClosedCurve) -> Result<InnerCondition> {
    check_planar(metric)?;
    let blocks = curve_blocks(metric, s1)?;
    for (b, p) in blocks.iter().zip(s1.points()) {
        if !(b.delta < -TOL_ERGO) {
            return Err(Error::NotInErgoregion { point: p.to_vec() });
        }
    }
    let field = FrameField::from_probe(metric, &s1.points()[0])?;
    let mut all_pos = true;
    let mut all_neg = true;
    for (p, n) in s1.points().iter().zip(s1.outward_normals()) {
        let n = [-n[0], -n[1]];
        let (vp, vm) = field.forward_velocities(p)?;
        for v in [vp, vm] {
            let s = dot(&v, &n);
            all_pos &= s > 0.0;
            all_neg &= s < 0.0;
        }
    }
    Ok(if all_pos {
        InnerCondition::A
    } else if all_neg {
        InnerCondition::B
    } else {
        InnerCondition::Neither
    })
}

/// Range of `(n^2 - 1)^{1/2} (v . N)` over `s1` for a Gordon metric, with
/// `v = gamma w / c` and `N` oriented as in [`inner_boundary_condition`];
/// `None` for other families.
pub fn gordon_inner_range(metric: &SpacetimeMetric, s1: &ClosedCurve) -> Result<Option<(f64, f64)>> {
    if metric.family() != "gordon" {
        return Ok(None);
    }
    let flow = match metric.flow() {
        Some(f) => f,
        None => return Ok(None),
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (p, n) in s1.points().iter().zip(s1.outward_normals()) {
        let w = flow.velocity.value(p)?;
        let beta2 = (w[0] * w[0] + w[1] * w[1]) / (flow.c * flow.c);
        if beta2 >= 1.0 {
            return Err(Error::InvalidArgument(format!("flow is not subluminal at {p:?}")));
        }
        let gamma = 1.0 / (1.0 - beta2).sqrt();
        let n_index = flow.n_index.value(p);
        let k = (n_index * n_index - 1.0).max(0.0).sqrt() * gamma / flow.c * (-(w[0] * n[0] + w[1] * n[1]));
        lo = lo.min(k);
        hi = hi.max(k);
    }
    Ok(Some((lo, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{minkowski, vortex_metric};

    const S2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn vortex_null_covectors_at_unit_point() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let p = spatial_null_covectors(&m, &[1.0, 0.0]).unwrap();
        assert!((p.xi_plus[0] - 1.0).abs() < 1e-12 && p.xi_plus[1].abs() < 1e-12);
        assert!(p.xi_minus[0].abs() < 1e-12 && (p.xi_minus[1] - 1.0).abs() < 1e-12);
        assert!((p.discriminant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minkowski_has_no_characteristics() {
        assert!(matches!(
            char_frames(&minkowski(2), &[0.3, 0.2]),
            Err(Error::NoRealCharacteristics { .. })
        ));
    }

    #[test]
    fn ergosphere_covector_and_frames() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let y = [S2, 0.0];
        let b = ergosphere_null_covector(&m, &y, TOL_ERGO).unwrap();
        assert!((b[0] - 1.0 / S2).abs() < 1e-12 && (b[1] - 1.0 / S2).abs() < 1e-12);
        let f = char_frames(&m, &y).unwrap();
        assert!(f.degenerate);
        assert!((f.f_plus[0] + 1.0 / S2).abs() < 1e-12 && (f.f_plus[1] - 1.0 / S2).abs() < 1e-12);
        assert_eq!(f.f_plus, f.f_minus);
        let scaled = ergosphere_null_covector(&m.scaled(3.0), &y, TOL_ERGO).unwrap();
        assert!((scaled[0] - b[0]).abs() < 1e-12);
    }

    #[test]
    fn off_ergosphere_point_is_rejected() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        assert!(matches!(
            ergosphere_null_covector(&m, &[1.0, 0.0], TOL_ERGO),
            Err(Error::NotOnErgosphere { .. })
        ));
    }

    #[test]
    fn frames_separate_inside_ergoregion() {
        let m = vortex_metric(1.0, 2.0).unwrap();
        let f = char_frames(&m, &[0.0, 1.5]).unwrap();
        assert!(!f.degenerate);
        assert!(cross(&f.f_plus, &f.f_minus).abs() > 1e-3);
    }

    #[test]
    fn vortex_frames_follow_polar_formulas() {
        // (7.3)/(7.4)-type fields: f+ ~ (A^2 - r^2, AB + r sqrt(D)),
        // f- ~ (-1, (r^2 - B^2) / (AB + r sqrt(D))) in (r_hat, theta_hat)
        let (a, b) = (1.0, 1.0);
        let m = vortex_metric(a, b).unwrap();
        let field = FrameField::from_probe(&m, &[0.7, 0.0]).unwrap();
        for &(r, th) in &[(0.5f64, 0.3f64), (0.9, 2.0), (1.2, -1.0)] {
            let (s, c) = th.sin_cos();
            let x = [r * c, r * s];
            let rd = (a * a + b * b - r * r).sqrt();
            let den = a * b + r * rd;
            let fp = normalize(&[a * a - r * r, den]);
            let fm = normalize(&[-1.0, (r * r - b * b) / den]);
            let f = field.frames(&x).unwrap();
            let to_polar = |v: [f64; 2]| [v[0] * c + v[1] * s, -v[0] * s + v[1] * c];
            let (gp, gm) = (to_polar(f.f_plus), to_polar(f.f_minus));
            assert!(
                (gp[0] - fp[0]).abs() < 1e-10 && (gp[1] - fp[1]).abs() < 1e-10,
                "{gp:?} {fp:?}"
            );
            assert!(
                (gm[0] - fm[0]).abs() < 1e-10 && (gm[1] - fm[1]).abs() < 1e-10,
                "{gm:?} {fm:?}"
            );
        }
    }

    #[test]
    fn horizon_circle_classification() {
        let white = vortex_metric(1.0, 1.0).unwrap();
        let c = ClosedCurve::circle(1.0, 128, 0.0).unwrap();
        assert!(characteristic_residual(&c, &white).unwrap() < 1e-8);
        let k = classify_hole(&c, &white, TOL_CHAR).unwrap();
        assert_eq!(k.kind, HoleKind::WhiteHole);
        assert!((k.margin - 1.0).abs() < 1e-10);
        let black = vortex_metric(-1.0, 1.0).unwrap();
        assert_eq!(classify_hole(&c, &black, TOL_CHAR).unwrap().kind, HoleKind::BlackHole);
        let radial = vortex_metric(1.0, 0.0).unwrap();
        assert_eq!(classify_hole(&c, &radial, TOL_CHAR).unwrap().kind, HoleKind::WhiteHole);
    }

    #[test]
    fn ergosphere_circle_is_not_characteristic() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let c = ClosedCurve::circle(S2, 64, 0.0).unwrap();
        let res = characteristic_residual(&c, &m).unwrap();
        assert!(res > 0.1);
        assert!(matches!(
            classify_hole(&c, &m, TOL_CHAR),
            Err(Error::NotCharacteristic { .. })
        ));
    }

    #[test]
    fn time_root_example() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let y = [S2, 0.0];
        let b = [1.0 / S2, 1.0 / S2];
        let r = time_root_at_null(&m, &y, &b).unwrap();
        assert!((r + 2.0).abs() < 1e-12);
        let flipped = time_root_at_null(&m, &y, &[-b[0], -b[1]]).unwrap();
        assert!((flipped - 2.0).abs() < 1e-12);
        let g = m.eval(&y).unwrap();
        assert!(g.quadratic(&[r, b[0], b[1]]).abs() < 1e-10);
        assert_eq!(forward_time_root(&m, &y, &b).unwrap(), 0.0);
    }

    #[test]
    fn inner_conditions_for_vortices() {
        let s1 = ClosedCurve::circle(0.5, 64, 0.0).unwrap();
        let white = vortex_metric(1.0, 1.0).unwrap();
        assert_eq!(inner_boundary_condition(&white, &s1).unwrap(), InnerCondition::B);
        let black = vortex_metric(-1.0, 1.0).unwrap();
        assert_eq!(inner_boundary_condition(&black, &s1).unwrap(), InnerCondition::A);
        let outside = ClosedCurve::circle(2.0, 64, 0.0).unwrap();
        assert!(matches!(
            inner_boundary_condition(&white, &outside),
            Err(Error::NotInErgoregion { .. })
        ));
    }
}
