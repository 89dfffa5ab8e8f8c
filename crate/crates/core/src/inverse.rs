//! Dirichlet-to-Neumann traces and the nonuniqueness experiments: metric
//! changes hidden behind a black-hole horizon, and gradient flows whose
//! sign cannot be read from boundary data.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HoleKind;
use crate::horizon::{horizon_report, HorizonConfig};
use crate::metric::{
    slow_medium_metric, validate_hyperbolicity, vortex_flow, AffineField, Bump, FlowSpec, Perturbed, ScalarField,
    SpacetimeMetric,
};
use crate::wave::{boundary_h1_norm_sq, first_order_reduce, AnnularGrid, BoundaryProfile, SolverConfig, WaveSolver};

/// `Lambda f` at every angle of the outer rim for the current state:
/// `sum_{j,k} g^{jk} u_j nu_k (-g^{rr})^{-1/2}` with the outward normal
/// `nu = r_hat`, `nu_0 = 0`.
pub fn dn_values(solver: &WaveSolver) -> Result<Vec<f64>> {
    let g = solver.grid();
    let (nr, nt) = (g.nr, g.ntheta);
    let (ut, ur, uth) = solver.derivatives();
    let nodes = &solver.operator().nodes;
    (0..nt)
        .map(|j| {
            let k = nr * nt + j;
            let c = &nodes[k];
            if !(c.grr < 0.0) {
                return Err(Error::NormalizationDomainError { theta: g.theta(j) });
            }
            Ok((c.g0r * ut[k] + c.grr * ur[k] + c.grt * uth[k]) / (-c.grr).sqrt())
        })
        .collect()
}

/// Sampled `Lambda f` on the outer rim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnTrace {
    pub forcing_id: String,
    pub norm_h1: f64,
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    /// One row per time.
    pub values: Vec<Vec<f64>>,
}

impl DnTrace {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over common samples.
    pub fn max_difference(&self, other: &DnTrace) -> Result<f64> {
        if self.times.len() != other.times.len() || self.thetas.len() != other.thetas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len() * self.thetas.len(),
                got: other.times.len() * other.thetas.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Columns `t, theta, lambda`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,theta,lambda")?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (th, v) in self.thetas.iter().zip(row) {
                writeln!(w, "{t},{th},{v}")?;
            }
        }
        Ok(())
    }
}

/// Timing and excitation shared by the forward runs of an experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSettings {
    pub t_end: f64,
    pub record_interval: f64,
    pub solver: SolverConfig,
    pub profile: BoundaryProfile,
    pub forcing_id: String,
}

impl ExperimentSettings {
    /// `W(t) cos(2 theta)` with a window of duration 1.
    pub fn multipole(t_end: f64) -> Self {
        Self {
            t_end,
            record_interval: 0.05,
            solver: SolverConfig::default(),
            profile: BoundaryProfile::multipole(1.0, 2, 1.0),
            forcing_id: "multipole_m2".into(),
        }
    }

    fn norm_h1(&self, grid: &AnnularGrid) -> f64 {
        let end = self
            .profile
            .support()
            .map(|s| s.1)
            .unwrap_or(self.t_end)
            .min(self.t_end);
        boundary_h1_norm_sq(&self.profile, grid.r_max, end, 400, 128).sqrt()
    }
}

fn boundary_solver(metric: &SpacetimeMetric, grid: &AnnularGrid, settings: &ExperimentSettings) -> Result<WaveSolver> {
    let op = Arc::new(first_order_reduce(metric, grid)?);
    let mut s = WaveSolver::new(op, settings.solver.clone()).with_boundary(settings.profile.clone());
    s.set_initial_with(0.0, |_| (0.0, [0.0; 2], 0.0));
    Ok(s)
}

/// Forward run with boundary forcing, recording the trace at every record
/// time.
pub fn dn_trace(metric: &SpacetimeMetric, grid: &AnnularGrid, settings: &ExperimentSettings) -> Result<DnTrace> {
    let mut solver = boundary_solver(metric, grid, settings)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    solver.advance(settings.t_end, settings.record_interval, |s| {
        times.push(s.state.t);
        values.push(dn_values(s)?);
        Ok(())
    })?;
    Ok(DnTrace {
        forcing_id: settings.forcing_id.clone(),
        norm_h1: settings.norm_h1(grid),
        times,
        thetas: (0..grid.ntheta).map(|j| grid.theta(j)).collect(),
        values,
    })
}

/// Differences between two forward runs sharing grid, forcing and step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDifference {
    pub nr: usize,
    pub ntheta: usize,
    pub h: f64,
    /// `max_t max_{r > exterior_radius} |u1 - u2|`.
    pub exterior: f64,
    /// `max_t max_{r < interior_radius} |u1 - u2|`.
    pub interior: f64,
    pub dn: f64,
}

/// Runs both metrics in lock step with a common time step.
pub fn paired_run(
    m1: &SpacetimeMetric,
    m2: &SpacetimeMetric,
    grid: &AnnularGrid,
    settings: &ExperimentSettings,
    exterior_radius: f64,
    interior_radius: f64,
) -> Result<(PairDifference, DnTrace, DnTrace)> {
    let mut s1 = boundary_solver(m1, grid, settings)?;
    let mut s2 = boundary_solver(m2, grid, settings)?;
    let dt_max = s1.max_dt().min(s2.max_dt());
    let substeps = (settings.record_interval / dt_max).ceil().max(1.0) as usize;
    let dt = settings.record_interval / substeps as f64;
    let n_records = (settings.t_end / settings.record_interval - 1e-9).ceil().max(0.0) as usize;
    let nt = grid.ntheta;
    let thetas: Vec<f64> = (0..nt).map(|j| grid.theta(j)).collect();
    let mut traces = [
        DnTrace {
            forcing_id: settings.forcing_id.clone(),
            norm_h1: settings.norm_h1(grid),
            times: Vec::new(),
            thetas: thetas.clone(),
            values: Vec::new(),
        },
        DnTrace {
            forcing_id: settings.forcing_id.clone(),
            norm_h1: settings.norm_h1(grid),
            times: Vec::new(),
            thetas,
            values: Vec::new(),
        },
    ];
    let mut diff = PairDifference {
        nr: grid.nr,
        ntheta: nt,
        h: grid.dr(),
        exterior: 0.0,
        interior: 0.0,
        dn: 0.0,
    };
    for rec in 0..=n_records {
        if rec > 0 {
            let advance = |s: &mut WaveSolver| -> Result<()> {
                for _ in 0..substeps {
                    s.step(dt)?;
                }
                Ok(())
            };
            let (a, b) = rayon::join(|| advance(&mut s1), || advance(&mut s2));
            a?;
            b?;
            let t = rec as f64 * settings.record_interval;
            s1.state.t = t;
            s2.state.t = t;
        }
        for (trace, s) in traces.iter_mut().zip([&s1, &s2]) {
            trace.times.push(s.state.t);
            trace.values.push(dn_values(s)?);
        }
        for i in 0..=grid.nr {
            let r = grid.radius(i);
            let row = i * nt..(i + 1) * nt;
            let d = s1.state.u[row.clone()]
                .iter()
                .zip(&s2.state.u[row])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if r > exterior_radius {
                diff.exterior = diff.exterior.max(d);
            }
            if r < interior_radius {
                diff.interior = diff.interior.max(d);
            }
        }
    }
    let [t1, t2] = traces;
    diff.dn = t1.max_difference(&t2)?;
    Ok((diff, t1, t2))
}

/// Least-squares slope of `ln(value)` against `ln(h)`.
pub fn fitted_order(h: &[f64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(h, v)| (h.ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Compactly supported change of the metric hidden inside the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub bump: Bump,
    /// Required gap between the support and the horizon, in radial cells of
    /// the coarsest grid.
    pub margin_cells: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonuniquenessReport {
    pub horizon_radius: f64,
    pub exterior_radius: f64,
    pub interior_radius: f64,
    pub grids: Vec<PairDifference>,
    pub exterior_order: f64,
    pub dn_order: f64,
    /// Finest interior difference over finest exterior difference.
    pub interior_ratio: f64,
    pub passed: bool,
    /// Boundary traces of both metrics on the finest grid.
    #[serde(skip)]
    pub finest_traces: Option<(DnTrace, DnTrace)>,
}

/// Horizon radius of the black hole bounded by `metric` inside the grid.
pub fn black_hole_radius(metric: &SpacetimeMetric, grid: &AnnularGrid) -> Result<f64> {
    let report = horizon_report(metric, &HorizonConfig::new(grid.r_min, grid.r_max))
        .map_err(|e| Error::NotABlackHole(e.to_string()))?;
    report
        .cycles
        .iter()
        .zip(&report.classes)
        .find(|(_, k)| k.is_some_and(|k| k.kind == HoleKind::BlackHole))
        .map(|(c, _)| c.curve.radii().fold(f64::INFINITY, f64::min))
        .ok_or_else(|| Error::NotABlackHole("no characteristic cycle satisfies the black-hole sign condition".into()))
}

/// The perturbed metric must stay Lorentzian with `g^{00} > 0` on every node
/// the bump touches.
fn check_signature(metric: &SpacetimeMetric, grid: &AnnularGrid, bump: &Bump) -> Result<()> {
    for i in 0..=grid.nr {
        let r = grid.radius(i);
        if r < bump.inner_reach() || r > bump.reach() {
            continue;
        }
        for j in 0..grid.ntheta {
            let x = grid.point(i, j);
            let h = validate_hyperbolicity(metric, &x)?;
            if !(h.g00_positive && h.lorentzian) {
                return Err(Error::InvalidArgument(format!(
                    "perturbed metric loses its Lorentzian signature at {x:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Forward runs of `base` and of `base` plus the perturbation on each grid.
/// The differences outside the horizon and in the boundary trace should
/// vanish at the discretization order while the interior difference stays.
pub fn nonuniqueness_experiment(
    base: &SpacetimeMetric,
    perturbation: &PerturbationSpec,
    grids: &[AnnularGrid],
    settings: &ExperimentSettings,
    exterior_radius: f64,
) -> Result<NonuniquenessReport> {
    let coarse = grids
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty grid schedule".into()))?;
    let r_h = black_hole_radius(base, coarse)?;
    let limit = r_h - perturbation.margin_cells * coarse.dr();
    if perturbation.bump.reach() > limit {
        return Err(Error::PerturbationLeak {
            reach: perturbation.bump.reach(),
            limit,
        });
    }
    let perturbed = SpacetimeMetric::from_model(
        Perturbed {
            base: base.model().clone(),
            bumps: vec![perturbation.bump.clone()],
        },
        base.domain().clone(),
    );
    for g in grids {
        check_signature(&perturbed, g, &perturbation.bump)?;
    }
    let interior_radius = limit;
    let mut rows = Vec::new();
    let mut finest_traces = None;
    for g in grids {
        let (d, t1, t2) = paired_run(base, &perturbed, g, settings, exterior_radius, interior_radius)?;
        rows.push(d);
        finest_traces = Some((t1, t2));
    }
    let h: Vec<f64> = rows.iter().map(|d| d.h).collect();
    let ext: Vec<f64> = rows.iter().map(|d| d.exterior).collect();
    let dn: Vec<f64> = rows.iter().map(|d| d.dn).collect();
    let exterior_order = fitted_order(&h, &ext);
    let dn_order = fitted_order(&h, &dn);
    let last = rows.last().unwrap();
    let interior_ratio = last.interior / last.exterior;
    let in_band = |p: f64| (p - 2.0).abs() <= 0.3;
    Ok(NonuniquenessReport {
        horizon_radius: r_h,
        exterior_radius,
        interior_radius,
        grids: rows,
        exterior_order,
        dn_order,
        interior_ratio,
        passed: in_band(exterior_order) && in_band(dn_order) && interior_ratio > 100.0,
        finest_traces,
    })
}

/// Scalar potential `b` with its gradient.
#[derive(Clone)]
pub struct Potential {
    pub value: Arc<dyn Fn(&[f64; 2]) -> f64 + Send + Sync>,
    pub flow: Arc<dyn crate::metric::VelocityField>,
}

impl Potential {
    /// `b = beta (r0^2 - r^2)`, gradient `-2 beta x`.
    pub fn quadratic(beta: f64, r0: f64) -> Self {
        Self {
            value: Arc::new(move |x| beta * (r0 * r0 - x[0] * x[0] - x[1] * x[1])),
            flow: Arc::new(AffineField::radial_linear(2, -2.0 * beta)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientPairReport {
    pub grids: Vec<PairDifference>,
    pub dn_order: f64,
    pub control: Vec<PairDifference>,
    /// `|d_{k+1} / d_k - 1|` for the control differences.
    pub control_changes: Vec<f64>,
    pub passed: bool,
    /// Boundary traces for `+grad b` and `-grad b` on the finest grid.
    #[serde(skip)]
    pub finest_traces: Option<(DnTrace, DnTrace)>,
}

fn slow_pair(flow: FlowSpec, n_index: f64) -> Result<(SpacetimeMetric, SpacetimeMetric)> {
    let flow = flow.with_index(ScalarField::Constant(n_index));
    Ok((slow_medium_metric(flow.clone())?, slow_medium_metric(flow.reversed())?))
}

/// Boundary traces of the slow medium moving with `+grad b` and `-grad b`,
/// and of a rotating control flow `(B / r) theta_hat` against its reverse.
pub fn gradient_flow_pair(
    potential: &Potential,
    n_index: f64,
    control_b: f64,
    grids: &[AnnularGrid],
    settings: &ExperimentSettings,
) -> Result<GradientPairReport> {
    for g in grids {
        for j in 0..g.ntheta {
            let v = (potential.value)(&g.point(g.nr, j));
            if v.abs() > 1e-12 {
                return Err(Error::BoundaryPotentialNonzero { value: v.abs() });
            }
        }
    }
    let (plus, minus) = slow_pair(FlowSpec::new(potential.flow.clone()), n_index)?;
    let (c_plus, c_minus) = slow_pair(vortex_flow(0.0, control_b)?, n_index)?;
    let mut rows = Vec::new();
    let mut control = Vec::new();
    let mut finest_traces = None;
    for g in grids {
        let ext = g.r_min;
        let (d, t1, t2) = paired_run(&plus, &minus, g, settings, ext, 0.0)?;
        rows.push(d);
        finest_traces = Some((t1, t2));
        control.push(paired_run(&c_plus, &c_minus, g, settings, ext, 0.0)?.0);
    }
    let h: Vec<f64> = rows.iter().map(|d| d.h).collect();
    let dn: Vec<f64> = rows.iter().map(|d| d.dn).collect();
    let dn_order = fitted_order(&h, &dn);
    let control_changes: Vec<f64> = control.windows(2).map(|w| (w[1].dn / w[0].dn - 1.0).abs()).collect();
    let passed = (dn_order - 2.0).abs() <= 0.3 && control_changes.iter().all(|&c| c < 0.2);
    Ok(GradientPairReport {
        grids: rows,
        dn_order,
        control,
        control_changes,
        passed,
        finest_traces,
    })
}
