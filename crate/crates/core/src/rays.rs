//! Null bicharacteristics of the full metric and planar characteristic
//! orbits `dx/dsigma = f(x)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, Block, Family, FrameField};
use crate::metric::SpacetimeMetric;
use crate::ode::{bisect, Integrator, OdeOptions};

/// Point of the cotangent bundle `(x0, x; xi0, xi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x0: f64,
    pub x: Vec<f64>,
    pub xi0: f64,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x0: f64, x: &[f64], xi0: f64, xi: &[f64]) -> Self {
        Self {
            x0,
            x: x.to_vec(),
            xi0,
            xi: xi.to_vec(),
        }
    }

    fn full_covector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.xi.len() + 1);
        v.push(self.xi0);
        v.extend_from_slice(&self.xi);
        v
    }
}

/// `H = sum_{j,k=0..n} g^{jk}(x) xi_j xi_k`.
pub fn hamiltonian(metric: &SpacetimeMetric, p: &PhasePoint) -> Result<f64> {
    if p.x.len() != metric.n_space() || p.xi.len() != metric.n_space() {
        return Err(Error::DimensionMismatch {
            expected: metric.n_space(),
            got: p.x.len(),
        });
    }
    Ok(metric.eval(&p.x)?.quadratic(&p.full_covector()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayTermination {
    LeftDomain,
    MaxSteps,
    ReachedTime,
    ReachedParameter,
    StagnationDetected,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayOptions {
    pub ode: OdeOptions,
    pub tol_null: f64,
    /// Stop when `x0` reaches this value.
    pub target_x0: Option<f64>,
    /// Newton projection of the spatial covector onto `H = 0` every this
    /// many steps (`xi0` is never touched).
    pub project_every: Option<usize>,
    pub max_steps: usize,
}

impl Default for RayOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            tol_null: 1e-8,
            target_x0: None,
            project_every: None,
            max_steps: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub s: f64,
    pub point: PhasePoint,
    pub h_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPath {
    pub samples: Vec<RaySample>,
    pub termination: RayTermination,
}

impl RayPath {
    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.h_residual).fold(0.0, f64::max)
    }

    /// Largest `|xi0(s) - xi0(0)|`.
    pub fn xi0_drift(&self) -> f64 {
        let first = self.samples[0].point.xi0;
        self.samples
            .iter()
            .map(|s| (s.point.xi0 - first).abs())
            .fold(0.0, f64::max)
    }

    pub fn spatial_points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.point.x.clone()).collect()
    }

    /// Columns `s, x0, x1.., xi0, xi1.., H_residual`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.samples.first().map(|s| s.point.x.len()).unwrap_or(2);
        let mut head = vec!["s".to_string(), "x0".to_string()];
        head.extend((1..=n).map(|j| format!("x{j}")));
        head.push("xi0".into());
        head.extend((1..=n).map(|j| format!("xi{j}")));
        head.push("H_residual".into());
        writeln!(w, "{}", head.join(","))?;
        for s in &self.samples {
            let mut row = vec![s.s, s.point.x0];
            row.extend(&s.point.x);
            row.push(s.point.xi0);
            row.extend(&s.point.xi);
            row.push(s.h_residual);
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Right-hand side of the Hamiltonian system with `xi0` frozen. State
/// layout: `[x0, x_1..x_n, xi_1..xi_n]`.
fn ray_rhs(metric: &SpacetimeMetric, xi0: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
    let n = metric.n_space();
    let x = &y[1..=n];
    let mut xi = vec![xi0];
    xi.extend_from_slice(&y[n + 1..]);
    let g = metric.eval(x)?;
    for j in 0..=n {
        let mut s = 0.0;
        for (k, v) in xi.iter().enumerate() {
            s += g.get(j, k) * v;
        }
        dy[j] = 2.0 * s;
    }
    for p in 0..n {
        dy[n + 1 + p] = -metric.deriv(x, p)?.quadratic(&xi);
    }
    Ok(())
}

fn state_point(n: usize, xi0: f64, y: &[f64]) -> PhasePoint {
    PhasePoint {
        x0: y[0],
        x: y[1..=n].to_vec(),
        xi0,
        xi: y[n + 1..].to_vec(),
    }
}

/// One Newton step moving the spatial covector onto `H = 0`.
fn project_spatial(metric: &SpacetimeMetric, xi0: f64, y: &mut [f64]) -> Result<()> {
    let n = metric.n_space();
    let g = metric.eval(&y[1..=n])?;
    let mut xi = vec![xi0];
    xi.extend_from_slice(&y[n + 1..]);
    let h = g.quadratic(&xi);
    let mut grad = vec![0.0; n];
    for (p, gp) in grad.iter_mut().enumerate() {
        *gp = 2.0 * (0..=n).map(|k| g.get(p + 1, k) * xi[k]).sum::<f64>();
    }
    let g2: f64 = grad.iter().map(|v| v * v).sum();
    if g2 > 0.0 {
        for p in 0..n {
            y[n + 1 + p] -= h * grad[p] / g2;
        }
    }
    Ok(())
}

/// Adaptive integration of the null bicharacteristic through `p0`. A step
/// whose end point violates the null constraint by more than `tol_null` is
/// retried with a smaller maximal step.
pub fn integrate_ray(metric: &SpacetimeMetric, p0: &PhasePoint, s_max: f64, opts: &RayOptions) -> Result<RayPath> {
    const RETRIES: usize = 8;
    let n = metric.n_space();
    let h0 = hamiltonian(metric, p0)?;
    if h0.abs() > opts.tol_null {
        return Err(Error::ConstraintDrift {
            residual: h0.abs(),
            s: 0.0,
        });
    }
    let xi0 = p0.xi0;
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| ray_rhs(metric, xi0, y, dy);
    let residual_of = |y: &[f64]| -> Result<f64> { Ok(hamiltonian(metric, &state_point(n, xi0, y))?.abs()) };
    let mut y0 = vec![p0.x0];
    y0.extend_from_slice(&p0.x);
    y0.extend_from_slice(&p0.xi);
    let mut ode = opts.ode;
    ode.max_steps = usize::MAX;
    let mut it = Integrator::new(&rhs, 0.0, &y0, ode)?;
    let mut samples = vec![RaySample {
        s: 0.0,
        point: p0.clone(),
        h_residual: h0.abs(),
    }];
    let mut termination = RayTermination::ReachedParameter;
    let mut steps = 0usize;
    let mut retries = 0usize;
    while it.t() < s_max {
        if steps >= opts.max_steps {
            termination = RayTermination::MaxSteps;
            break;
        }
        let (prev_t, prev_y) = (it.t(), it.y().to_vec());
        match it.step(s_max) {
            Ok(()) => {}
            Err(Error::EvaluationOutsideDomain { .. }) | Err(Error::SingularMetric { .. }) => {
                termination = RayTermination::LeftDomain;
                break;
            }
            Err(e) => return Err(e),
        }
        let mut y = it.y().to_vec();
        if let Some(k) = opts.project_every {
            if k > 0 && (steps + 1).is_multiple_of(k) {
                project_spatial(metric, xi0, &mut y)?;
                it = Integrator::new(&rhs, it.t(), &y, ode)?;
            }
        }
        let res = residual_of(&y)?;
        if res > opts.tol_null {
            if retries < RETRIES {
                retries += 1;
                ode.h_max = 0.25 * (it.t() - prev_t);
                it = Integrator::new(&rhs, prev_t, &prev_y, ode)?;
                continue;
            }
            if res > 10.0 * opts.tol_null {
                return Err(Error::ConstraintDrift {
                    residual: res,
                    s: it.t(),
                });
            }
        }
        retries = 0;
        steps += 1;
        if let Some(target) = opts.target_x0 {
            if (prev_y[0] - target) * (y[0] - target) <= 0.0 && y[0] != prev_y[0] {
                let sub = Integrator::new(&rhs, prev_t, &prev_y, ode)?;
                let hit = bisect(
                    |h| sub.trial(h).ok().map(|y| y[0] - target),
                    0.0,
                    it.t() - prev_t,
                    1e-13,
                );
                let y = sub.trial(hit)?;
                samples.push(RaySample {
                    s: prev_t + hit,
                    h_residual: residual_of(&y)?,
                    point: state_point(n, xi0, &y),
                });
                termination = RayTermination::ReachedTime;
                break;
            }
        }
        samples.push(RaySample {
            s: it.t(),
            point: state_point(n, xi0, &y),
            h_residual: res,
        });
        if it.derivative().iter().all(|v| v.abs() < 1e-14) {
            termination = RayTermination::StagnationDetected;
            break;
        }
    }
    Ok(RayPath { samples, termination })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitTermination {
    LeftErgoregion,
    LeftDomain,
    SigmaLimit,
    ConvergedToCycle,
    StagnationDetected,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitOptions {
    pub ode: OdeOptions,
    /// Stop once two successive full turns about the origin return to radii
    /// within this distance.
    pub cycle_tol: Option<f64>,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions {
                h_min: 1e-10,
                ..OdeOptions::default()
            },
            cycle_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarOrbit {
    pub family: Family,
    pub sigma: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    /// Time `x0` accumulated along the lifted forward null bicharacteristic.
    pub x0_lift: Vec<f64>,
    pub termination: OrbitTermination,
}

impl PlanarOrbit {
    /// Columns `sigma, x1, x2, r, theta, family`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sigma,x1,x2,r,theta,family")?;
        for (s, p) in self.sigma.iter().zip(&self.points) {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s,
                p[0],
                p[1],
                p[0].hypot(p[1]),
                p[1].atan2(p[0]),
                self.family.name()
            )?;
        }
        Ok(())
    }

    /// Arc length along the samples.
    pub fn arc_length(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in self.points.windows(2) {
            acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            out.push(acc);
        }
        out
    }
}

/// Integrates `dx/dsigma = f^{family}(x)` from `x_start` with the given
/// frame field. The orbit stops on leaving the ergoregion (the last sample
/// lies within about `h_min` of the boundary), at `sigma_max`, or when
/// successive turns agree to `cycle_tol`.
pub fn planar_orbit(
    field: &FrameField,
    x_start: &[f64; 2],
    family: Family,
    sigma_max: f64,
    opts: &OrbitOptions,
) -> Result<PlanarOrbit> {
    field.frames(x_start)?;
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let f = field.direction(&[y[0], y[1]], family)?;
        dy[0] = f[0];
        dy[1] = f[1];
        Ok(())
    };
    let mut it = Integrator::new(&rhs, 0.0, x_start, opts.ode)?;
    let mut sigma = vec![0.0];
    let mut points = vec![*x_start];
    let mut termination = OrbitTermination::SigmaLimit;
    let mut winding = 0.0;
    let mut turn_radii: Vec<f64> = Vec::new();
    while it.t() < sigma_max {
        let prev = [it.y()[0], it.y()[1]];
        match it.step(sigma_max) {
            Ok(()) => {}
            Err(Error::NoRealCharacteristics { .. }) => {
                termination = OrbitTermination::LeftErgoregion;
                break;
            }
            Err(Error::EvaluationOutsideDomain { .. }) | Err(Error::SingularMetric { .. }) => {
                termination = OrbitTermination::LeftDomain;
                break;
            }
            Err(Error::StepSizeUnderflow { .. }) => {
                termination = OrbitTermination::StagnationDetected;
                break;
            }
            Err(e) => return Err(e),
        }
        let p = [it.y()[0], it.y()[1]];
        sigma.push(it.t());
        points.push(p);
        if let Some(tol) = opts.cycle_tol {
            let before = winding;
            winding += crate::geometry::cross(&prev, &p).atan2(dot(&prev, &p));
            let tau = 2.0 * std::f64::consts::PI;
            if (winding / tau).trunc() != (before / tau).trunc() {
                turn_radii.push(p[0].hypot(p[1]));
                let k = turn_radii.len();
                if k >= 2 && (turn_radii[k - 1] - turn_radii[k - 2]).abs() < tol {
                    termination = OrbitTermination::ConvergedToCycle;
                    break;
                }
            }
        }
    }
    let x0_lift = accumulate_lift(field, &points, &sigma, family)?;
    Ok(PlanarOrbit {
        family,
        sigma,
        points,
        x0_lift,
        termination,
    })
}

/// [`planar_orbit`] with frame labels taken from the radial probe through
/// `x_start`.
pub fn integrate_planar_orbit(
    metric: &SpacetimeMetric,
    x_start: &[f64; 2],
    family: Family,
    sigma_max: f64,
    opts: &OrbitOptions,
) -> Result<PlanarOrbit> {
    let blk = Block::of(&metric.eval(x_start)?);
    if blk.delta > crate::geometry::TOL_ERGO {
        return Err(Error::NoRealCharacteristics { delta: blk.delta });
    }
    let field = FrameField::from_probe(metric, x_start)?;
    planar_orbit(&field, x_start, family, sigma_max, opts)
}

/// Per-sample lift of an orbit to its forward null bicharacteristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftSample {
    pub sigma: f64,
    /// `dx0/ds = 2 sum_j g^{0j} xi_j`, positive for forward rays.
    pub dx0_ds: f64,
    /// `dsigma/ds`, the projection of `dx/ds` on the orbit tangent.
    pub dsigma_ds: f64,
    /// Sign of `dsigma/dx0`.
    pub sign: f64,
}

fn lift_at(field: &FrameField, x: &[f64; 2], family: Family) -> Result<(f64, f64, f64)> {
    let (frames, covs) = field.analyze(x)?;
    let blk = Block::of(&field.metric().eval(x)?);
    let xi = match family {
        Family::Plus => covs.xi_plus,
        Family::Minus => covs.xi_minus,
    };
    let dx0 = 2.0 * dot(&blk.d, &xi);
    if !(dx0 > 0.0) {
        return Err(Error::ZeroTimeRate { point: x.to_vec() });
    }
    let v = blk.apply(&xi);
    let ds = 2.0 * dot(&v, &frames.get(family));
    let sign = if frames.degenerate { family.sign() } else { ds.signum() };
    Ok((dx0, ds, sign))
}

fn accumulate_lift(field: &FrameField, points: &[[f64; 2]], sigma: &[f64], family: Family) -> Result<Vec<f64>> {
    let mut rates = Vec::with_capacity(points.len());
    for p in points {
        let (dx0, ds, _) = lift_at(field, p, family)?;
        rates.push(if ds != 0.0 { dx0 / ds } else { f64::NAN });
    }
    let mut out = vec![0.0; points.len()];
    for i in 1..points.len() {
        let (a, b) = (rates[i - 1], rates[i]);
        let avg = match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a,
            (false, true) => b,
            (false, false) => 0.0,
        };
        out[i] = out[i - 1] + avg * (sigma[i] - sigma[i - 1]);
    }
    Ok(out)
}

/// Time rates along the orbit: one family advances `sigma` with `x0`, the
/// other against it.
pub fn lift_time_direction(field: &FrameField, orbit: &PlanarOrbit) -> Result<Vec<LiftSample>> {
    orbit
        .points
        .iter()
        .zip(&orbit.sigma)
        .map(|(p, &s)| {
            let (dx0_ds, dsigma_ds, sign) = lift_at(field, p, orbit.family)?;
            Ok(LiftSample {
                sigma: s,
                dx0_ds,
                dsigma_ds,
                sign,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{minkowski, vortex_metric};

    #[test]
    fn hamiltonian_examples() {
        let m = minkowski(2);
        assert_eq!(
            hamiltonian(&m, &PhasePoint::new(0.0, &[0.0, 0.0], 1.0, &[1.0, 0.0])).unwrap(),
            0.0
        );
        assert_eq!(
            hamiltonian(&m, &PhasePoint::new(0.0, &[0.0, 0.0], 2.0, &[1.0, 0.0])).unwrap(),
            3.0
        );
        let v = vortex_metric(1.0, 1.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = hamiltonian(&v, &PhasePoint::new(0.0, &[2f64.sqrt(), 0.0], -2.0, &[s, s])).unwrap();
        assert!(h.abs() < 1e-14);
    }

    #[test]
    fn minkowski_ray_is_straight() {
        let m = minkowski(2);
        let p0 = PhasePoint::new(0.0, &[0.0, 0.0], 1.0, &[-1.0, 0.0]);
        let path = integrate_ray(&m, &p0, 3.0, &RayOptions::default()).unwrap();
        let last = path.samples.last().unwrap();
        assert!((last.s - 3.0).abs() < 1e-14);
        assert!((last.point.x[0] - 6.0).abs() < 1e-10 && last.point.x[1].abs() < 1e-14);
        assert!((last.point.x0 - 6.0).abs() < 1e-10);
        assert_eq!(path.max_residual(), 0.0);
        assert_eq!(path.xi0_drift(), 0.0);
    }

    #[test]
    fn ray_stops_at_target_time() {
        let m = minkowski(2);
        let p0 = PhasePoint::new(0.0, &[0.0, 0.0], 1.0, &[0.0, -1.0]);
        let opts = RayOptions {
            target_x0: Some(1.0),
            ..RayOptions::default()
        };
        let path = integrate_ray(&m, &p0, 10.0, &opts).unwrap();
        assert_eq!(path.termination, RayTermination::ReachedTime);
        assert!((path.samples.last().unwrap().point.x0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_null_start_is_rejected() {
        let m = minkowski(2);
        let p0 = PhasePoint::new(0.0, &[0.0, 0.0], 2.0, &[1.0, 0.0]);
        assert!(matches!(
            integrate_ray(&m, &p0, 1.0, &RayOptions::default()),
            Err(Error::ConstraintDrift { .. })
        ));
    }

    #[test]
    fn vortex_orbits_approach_horizon() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        for &(r0, up) in &[(1.3, false), (0.7, true)] {
            let o = integrate_planar_orbit(&m, &[r0, 0.0], Family::Plus, 4.0, &OrbitOptions::default()).unwrap();
            let radii: Vec<f64> = o.points.iter().map(|p| p[0].hypot(p[1])).collect();
            for w in radii.windows(2) {
                if up {
                    assert!(w[1] >= w[0] - 1e-12);
                } else {
                    assert!(w[1] <= w[0] + 1e-12);
                }
            }
            let last = *radii.last().unwrap();
            assert!((last - 1.0).abs() < (r0 - 1.0f64).abs());
        }
    }

    #[test]
    fn orbit_on_horizon_stays_there() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let o = integrate_planar_orbit(&m, &[1.0, 0.0], Family::Plus, 10.0, &OrbitOptions::default()).unwrap();
        for p in &o.points {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn minus_family_leaves_through_inner_region() {
        let m = vortex_metric(1.0, 1.0)
            .unwrap()
            .with_domain(crate::metric::Domain::Annulus { r_min: 0.3, r_max: 3.0 });
        let o = integrate_planar_orbit(&m, &[1.2, 0.0], Family::Minus, 10.0, &OrbitOptions::default()).unwrap();
        assert_eq!(o.termination, OrbitTermination::LeftDomain);
        let last = o.points.last().unwrap();
        assert!((last[0].hypot(last[1]) - 0.3).abs() < 1e-8);
    }

    #[test]
    fn time_rates_split_by_family() {
        let m = vortex_metric(1.0, 1.0).unwrap();
        let field = FrameField::from_probe(&m, &[1.0, 0.0]).unwrap();
        for fam in Family::BOTH {
            let o = planar_orbit(&field, &[0.0, 1.2], fam, 0.3, &OrbitOptions::default()).unwrap();
            let lift = lift_time_direction(&field, &o).unwrap();
            assert!(lift.iter().all(|l| l.sign == fam.sign() && l.dx0_ds > 0.0));
            let dx0 = o.x0_lift.last().unwrap();
            assert!(dx0 * fam.sign() > 0.0);
        }
    }
}
