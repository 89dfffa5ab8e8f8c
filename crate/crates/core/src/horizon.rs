//! Ergosphere loci and horizons found as limit cycles of the planar
//! characteristic flows.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    characteristic_residual, classify_hole, cross, dot, gordon_inner_range, inner_boundary_condition, ClosedCurve,
    Family, FrameField, HoleClass, InnerCondition, TOL_CHAR,
};
use crate::metric::SpacetimeMetric;
use crate::ode::{bisect, Integrator, OdeOptions};

/// Roots of `Delta` along `n_angles` radial probes in `[r_lo, r_hi]`.
pub fn ergosphere_locus(metric: &SpacetimeMetric, r_lo: f64, r_hi: f64, n_angles: usize) -> Result<ClosedCurve> {
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return Err(Error::InvalidArgument(format!("bad search annulus [{r_lo}, {r_hi}]")));
    }
    let mut pts = Vec::with_capacity(n_angles);
    for k in 0..n_angles {
        let th = 2.0 * PI * k as f64 / n_angles as f64;
        let (s, c) = th.sin_cos();
        let delta = |r: f64| metric.spatial_det(&[r * c, r * s]);
        let (d_lo, d_hi) = (delta(r_lo)?, delta(r_hi)?);
        if d_lo * d_hi > 0.0 {
            return Err(Error::NoSignChange { angle: th });
        }
        let r = bisect(|r| delta(r).ok(), r_lo, r_hi, 1e-14);
        pts.push([r * c, r * s]);
    }
    ClosedCurve::new(pts)
}

/// Ray `theta = theta0`, `r in [r_lo, r_hi]`, crossed by orbits of one
/// family integrated with `sigma` increasing (`direction = 1`) or
/// decreasing (`direction = -1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareSection {
    pub theta0: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub family: Family,
    pub direction: f64,
}

impl PoincareSection {
    pub fn new(theta0: f64, r_lo: f64, r_hi: f64, family: Family, direction: f64) -> Self {
        Self {
            theta0,
            r_lo,
            r_hi,
            family,
            direction,
        }
    }

    pub fn point(&self, r: f64) -> [f64; 2] {
        let (s, c) = self.theta0.sin_cos();
        [r * c, r * s]
    }

    /// `f . theta_hat` at radius `r`, signed by the integration direction.
    pub fn angular_speed(&self, field: &FrameField, r: f64) -> Result<f64> {
        let f = field.direction(&self.point(r), self.family)?;
        let (s, c) = self.theta0.sin_cos();
        Ok(self.direction * dot(&f, &[-s, c]))
    }
}

/// Smallest `|f . theta_hat|` accepted on a section.
pub const MIN_TRANSVERSALITY: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnOptions {
    pub ode: OdeOptions,
    /// Cap on the orbit length between crossings; `None` uses
    /// `1e3 * 2 r_hi`.
    pub sigma_budget: Option<f64>,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions {
                h_min: 1e-10,
                ..OdeOptions::default()
            },
            sigma_budget: None,
        }
    }
}

/// First return to the section: radius and orbit length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnCrossing {
    pub r: f64,
    pub sigma: f64,
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

pub fn return_crossing(
    field: &FrameField,
    section: &PoincareSection,
    r: f64,
    opts: &ReturnOptions,
) -> Result<ReturnCrossing> {
    let (family, dir) = (section.family, section.direction);
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let f = field.direction(&[y[0], y[1]], family)?;
        dy[0] = dir * f[0];
        dy[1] = dir * f[1];
        Ok(())
    };
    let orient = section.angular_speed(field, r)?.signum();
    let budget = opts.sigma_budget.unwrap_or(2e3 * section.r_hi);
    let mut it = Integrator::new(&rhs, 0.0, &section.point(r), opts.ode)?;
    let target = 2.0 * PI;
    let mut phi = 0.0;
    let mut prev_angle = section.theta0;
    while it.t() < budget {
        let (prev_t, prev_phi, prev_y) = (it.t(), phi, it.y().to_vec());
        if let Err(e) = it.step(budget) {
            return Err(Error::NoReturn(format!("orbit from r = {r} stopped: {e}")));
        }
        let y = it.y();
        let angle = y[1].atan2(y[0]);
        phi += orient * wrap(angle - prev_angle);
        prev_angle = angle;
        if phi < -PI {
            return Err(Error::NoReturn(format!("orbit from r = {r} reversed its winding")));
        }
        if phi >= target {
            let sub = Integrator::new(&rhs, prev_t, &prev_y, opts.ode)?;
            let start_angle = prev_y[1].atan2(prev_y[0]);
            let h = bisect(
                |h| {
                    sub.trial(h)
                        .ok()
                        .map(|y| prev_phi + orient * wrap(y[1].atan2(y[0]) - start_angle) - target)
                },
                0.0,
                it.t() - prev_t,
                1e-12,
            );
            let y = sub.trial(h)?;
            // project onto the section ray
            let (s, c) = section.theta0.sin_cos();
            return Ok(ReturnCrossing {
                r: y[0] * c + y[1] * s,
                sigma: prev_t + h,
            });
        }
    }
    Err(Error::NoReturn(format!(
        "orbit from r = {r} exhausted the budget {budget}"
    )))
}

/// Radius of the first return crossing of the orbit started at radius `r`.
pub fn return_map(field: &FrameField, section: &PoincareSection, r: f64, opts: &ReturnOptions) -> Result<f64> {
    Ok(return_crossing(field, section, r, opts)?.r)
}

/// Closed characteristic curve found as a fixed point of the return map.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitCycle {
    pub family: Family,
    /// Direction of `sigma` in which the cycle was found.
    pub direction: f64,
    pub section_angle: f64,
    pub fixed_r: f64,
    pub period_sigma: f64,
    /// `P'(r*)` of the return map for increasing `sigma`.
    pub stability: f64,
    pub fixed_point_residual: f64,
    pub closure_gap: f64,
    pub char_residual: f64,
    pub curve: ClosedCurve,
}

impl LimitCycle {
    pub fn is_attracting(&self) -> bool {
        self.stability.abs() < 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleSearch {
    pub theta0: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub n_scan: usize,
    pub tol_cycle: f64,
    pub curve_samples: usize,
    pub fd_step: f64,
    pub dedupe: f64,
    pub ret: ReturnOptions,
}

impl CycleSearch {
    pub fn new(r_lo: f64, r_hi: f64) -> Self {
        Self {
            theta0: 0.0,
            r_lo,
            r_hi,
            n_scan: 64,
            tol_cycle: 1e-8,
            curve_samples: 512,
            fd_step: 1e-5,
            dedupe: 1e-6,
            ret: ReturnOptions::default(),
        }
    }
}

fn scan_radii(cfg: &CycleSearch) -> Vec<f64> {
    let n = cfg.n_scan.max(2);
    (0..n)
        .map(|k| cfg.r_lo + (cfg.r_hi - cfg.r_lo) * (k as f64 + 0.5) / n as f64)
        .collect()
}

/// Section angle where the flow crosses the ray transversally at every scan
/// radius inside the ergoregion, trying `theta0 + k pi/7`.
fn transverse_angle(field: &FrameField, cfg: &CycleSearch, family: Family) -> Option<f64> {
    let radii = scan_radii(cfg);
    (0..14).map(|k| cfg.theta0 + k as f64 * PI / 7.0).find(|&th| {
        let sec = PoincareSection::new(th, cfg.r_lo, cfg.r_hi, family, 1.0);
        radii.iter().all(|&r| match sec.angular_speed(field, r) {
            Ok(w) => w.abs() >= MIN_TRANSVERSALITY,
            Err(_) => true,
        })
    })
}

/// Illinois iteration on a bracketed sign change of `g`.
fn refine_root<G: Fn(f64) -> Option<f64>>(
    g: G,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    tol: f64,
) -> Option<f64> {
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = match g(c) {
            Some(v) => v,
            None => {
                // fall back to bisection when the secant point has no return
                let m = 0.5 * (a + b);
                let fm = g(m)?;
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                    fb = fm;
                }
                continue;
            }
        };
        if fc.abs() < tol * 1e-3 {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fa.abs().min(fb.abs()) < tol * 1e-3 {
            break;
        }
    }
    Some(if fa.abs() < fb.abs() { a } else { b })
}

fn cycle_curve(
    field: &FrameField,
    section: &PoincareSection,
    r: f64,
    period: f64,
    samples: usize,
    opts: &ReturnOptions,
) -> Result<(ClosedCurve, f64)> {
    let (family, dir) = (section.family, section.direction);
    let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let f = field.direction(&[y[0], y[1]], family)?;
        dy[0] = dir * f[0];
        dy[1] = dir * f[1];
        Ok(())
    };
    let start = section.point(r);
    let mut it = Integrator::new(&rhs, 0.0, &start, opts.ode)?;
    let mut pts = vec![start];
    for k in 1..=samples {
        let s_k = period * k as f64 / samples as f64;
        while it.t() < s_k {
            it.step(s_k)?;
        }
        pts.push([it.y()[0], it.y()[1]]);
    }
    let end = pts.pop().unwrap();
    let gap = (end[0] - start[0]).hypot(end[1] - start[1]);
    if dir < 0.0 {
        pts.reverse();
        pts.rotate_right(1);
    }
    Ok((ClosedCurve::new(pts)?, gap))
}

/// Fixed points of the return map for one family and `sigma` direction.
pub fn find_cycles_on_section(
    field: &FrameField,
    section: &PoincareSection,
    cfg: &CycleSearch,
) -> Result<Vec<LimitCycle>> {
    let radii = scan_radii(cfg);
    let g = |r: f64| return_map(field, section, r, &cfg.ret).ok().map(|p| p - r);
    let values: Vec<Option<f64>> = radii.par_iter().map(|&r| g(r)).collect();
    let mut roots = Vec::new();
    for k in 0..radii.len() - 1 {
        if let (Some(fa), Some(fb)) = (values[k], values[k + 1]) {
            if fa == 0.0 {
                roots.push(radii[k]);
            } else if fa * fb < 0.0 {
                if let Some(r) = refine_root(g, radii[k], fa, radii[k + 1], fb, cfg.tol_cycle) {
                    roots.push(r);
                }
            }
        }
    }
    let mut out = Vec::new();
    for r in roots {
        let crossing = match return_crossing(field, section, r, &cfg.ret) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let residual = (crossing.r - r).abs();
        if residual > cfg.tol_cycle {
            continue;
        }
        let h = cfg.fd_step;
        let (Some(gp), Some(gm)) = (g(r + h), g(r - h)) else {
            continue;
        };
        let slope = 1.0 + (gp - gm) / (2.0 * h);
        let stability = if section.direction > 0.0 { slope } else { 1.0 / slope };
        let (curve, closure_gap) = cycle_curve(field, section, r, crossing.sigma, cfg.curve_samples, &cfg.ret)?;
        let char_residual = characteristic_residual(&curve, field.metric())?;
        out.push(LimitCycle {
            family: section.family,
            direction: section.direction,
            section_angle: section.theta0,
            fixed_r: r,
            period_sigma: crossing.sigma,
            stability,
            fixed_point_residual: residual,
            closure_gap,
            char_residual,
            curve,
        });
    }
    Ok(out)
}

/// Limit cycles of both families, scanned in both `sigma` directions and
/// deduplicated per family.
pub fn find_limit_cycles(field: &FrameField, cfg: &CycleSearch) -> Result<Vec<LimitCycle>> {
    let mut all: Vec<LimitCycle> = Vec::new();
    for family in Family::BOTH {
        let Some(theta0) = transverse_angle(field, cfg, family) else {
            continue;
        };
        for direction in [1.0, -1.0] {
            let sec = PoincareSection::new(theta0, cfg.r_lo, cfg.r_hi, family, direction);
            for c in find_cycles_on_section(field, &sec, cfg)? {
                let dup = all
                    .iter()
                    .any(|o| o.family == c.family && (o.fixed_r - c.fixed_r).abs() < cfg.dedupe);
                if !dup {
                    all.push(c);
                }
            }
        }
    }
    all.sort_by(|a, b| {
        (a.family.sign() < 0.0)
            .cmp(&(b.family.sign() < 0.0))
            .then(a.fixed_r.total_cmp(&b.fixed_r))
    });
    Ok(all)
}

#[derive(Clone, Debug)]
pub struct HorizonConfig {
    /// Annulus probed for the ergosphere.
    pub r_min: f64,
    pub r_max: f64,
    pub n_angles: usize,
    /// Cycle window; the upper end defaults to just inside the smallest
    /// ergosphere radius.
    pub window: Option<(f64, f64)>,
    pub search: CycleSearch,
    pub inner_curve: Option<ClosedCurve>,
}

impl HorizonConfig {
    pub fn new(r_min: f64, r_max: f64) -> Self {
        Self {
            r_min,
            r_max,
            n_angles: 256,
            window: None,
            search: CycleSearch::new(r_min, r_max),
            inner_curve: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HorizonReport {
    pub ergosphere: ClosedCurve,
    pub cycles: Vec<LimitCycle>,
    pub classes: Vec<Option<HoleClass>>,
    pub inner_condition: Option<InnerCondition>,
    /// Range of `sqrt(n^2 - 1) (v . N)` over the inner curve, Gordon only.
    pub gordon_inner: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub fixed_r: f64,
    pub period_sigma: f64,
    pub stability: f64,
    pub family: Family,
    pub class: Option<crate::geometry::HoleKind>,
    pub margin: Option<f64>,
    pub char_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub ergosphere: Vec<[f64; 2]>,
    pub cycles: Vec<CycleSummary>,
    pub inner_condition: Option<InnerCondition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gordon_inner: Option<[f64; 2]>,
}

impl HorizonReport {
    pub fn to_json(&self) -> ReportJson {
        ReportJson {
            ergosphere: self.ergosphere.points().to_vec(),
            cycles: self
                .cycles
                .iter()
                .zip(&self.classes)
                .map(|(c, k)| CycleSummary {
                    fixed_r: c.fixed_r,
                    period_sigma: c.period_sigma,
                    stability: c.stability,
                    family: c.family,
                    class: k.map(|k| k.kind),
                    margin: k.map(|k| k.margin),
                    char_residual: c.char_residual,
                })
                .collect(),
            inner_condition: self.inner_condition,
            gordon_inner: self.gordon_inner.map(|(a, b)| [a, b]),
        }
    }
}

/// Ergosphere, horizons of both families with their black/white class, and
/// the cone condition on the inner curve when one is given.
pub fn horizon_report(metric: &SpacetimeMetric, cfg: &HorizonConfig) -> Result<HorizonReport> {
    let ergosphere = ergosphere_locus(metric, cfg.r_min, cfg.r_max, cfg.n_angles)?;
    let r_ergo = ergosphere.radii().fold(f64::INFINITY, f64::min);
    let (lo, hi) = cfg.window.unwrap_or((cfg.r_min, r_ergo * (1.0 - 1e-6)));
    let mut search = cfg.search;
    search.r_lo = lo;
    search.r_hi = hi;
    let y = ergosphere.points()[0];
    let field = FrameField::from_ergosphere_point(metric, &y)?;
    let cycles = find_limit_cycles(&field, &search)?;
    let classes = cycles
        .iter()
        .map(|c| classify_hole(&c.curve, metric, TOL_CHAR).ok())
        .collect();
    let (inner_condition, gordon_inner) = match &cfg.inner_curve {
        Some(s1) => (
            Some(inner_boundary_condition(metric, s1)?),
            gordon_inner_range(metric, s1)?,
        ),
        None => (None, None),
    };
    Ok(HorizonReport {
        ergosphere,
        cycles,
        classes,
        inner_condition,
        gordon_inner,
    })
}

/// Orientation check used by tests and reports: positive when the curve
/// winds counterclockwise about the origin.
pub fn winding_sign(curve: &ClosedCurve) -> f64 {
    let p = curve.points();
    cross(&p[0], &p[1]).signum()
}
