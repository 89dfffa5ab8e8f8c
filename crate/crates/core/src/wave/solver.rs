use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::AnnularGrid;
use super::operator::{cfl_dt, OperatorBundle};
use super::source::{BoundaryProfile, InteriorPulse};
use crate::error::{Error, Result};

/// Treatment of the inner rim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerBoundary {
    /// Outflow when every characteristic leaves through the rim, otherwise
    /// homogeneous Dirichlet.
    Auto,
    /// Quadratic extrapolation of `u` and `pi` from the interior.
    Outflow,
    /// `u = 0`.
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Kreiss-Oliger dissipation coefficient.
    pub ko_epsilon: f64,
    pub inner: InnerBoundary,
    pub cfl_safety: f64,
    /// Nodes with `r > exterior_radius` count as exterior.
    pub exterior_radius: f64,
    /// Nodes with `r < interior_radius` count as interior.
    pub interior_radius: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ko_epsilon: 0.02,
            inner: InnerBoundary::Auto,
            cfl_safety: 0.4,
            exterior_radius: f64::INFINITY,
            interior_radius: 0.0,
        }
    }
}

/// Interior source term `f(t, x)` of `L u = f`, `x` Cartesian.
pub type Forcing = Arc<dyn Fn(f64, &[f64; 2]) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub total: f64,
    pub exterior: f64,
    pub interior: f64,
    /// Power flowing into the domain through the outer rim.
    pub boundary_flux: f64,
}

/// Discrete field pair `(u, pi)` with its energy history.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub pi: Vec<f64>,
    pub t: f64,
    pub steps: usize,
    pub energy_history: Vec<EnergyRecord>,
    pub boundary_flux_log: Vec<(f64, f64)>,
}

/// Node-wise derivative fields of a state.
struct Derived {
    ut: Vec<f64>,
    ur: Vec<f64>,
    uth: Vec<f64>,
}

/// Method-of-lines RK4 integrator for the wave equation on an annulus.
pub struct WaveSolver {
    op: Arc<OperatorBundle>,
    config: SolverConfig,
    outflow: bool,
    dt_limit: f64,
    outer: Option<BoundaryProfile>,
    inner_data: Option<BoundaryProfile>,
    forcing: Option<Forcing>,
    pub state: WaveState,
    scratch_u: Vec<f64>,
    scratch_pi: Vec<f64>,
    acc_u: Vec<f64>,
    acc_pi: Vec<f64>,
    k_u: Vec<f64>,
    k_pi: Vec<f64>,
    fr: Vec<f64>,
    fth: Vec<f64>,
}

impl WaveSolver {
    pub fn new(op: Arc<OperatorBundle>, config: SolverConfig) -> Self {
        let n = op.grid.len();
        let outflow = match config.inner {
            InnerBoundary::Auto => op.inner_rim_is_outflow(),
            InnerBoundary::Outflow => true,
            InnerBoundary::Dirichlet => false,
        };
        let dt_limit = cfl_dt(&op, config.cfl_safety);
        Self {
            op,
            config,
            outflow,
            dt_limit,
            outer: None,
            inner_data: None,
            forcing: None,
            state: WaveState {
                u: vec![0.0; n],
                pi: vec![0.0; n],
                t: 0.0,
                steps: 0,
                energy_history: Vec::new(),
                boundary_flux_log: Vec::new(),
            },
            scratch_u: vec![0.0; n],
            scratch_pi: vec![0.0; n],
            acc_u: vec![0.0; n],
            acc_pi: vec![0.0; n],
            k_u: vec![0.0; n],
            k_pi: vec![0.0; n],
            fr: vec![0.0; n],
            fth: vec![0.0; n],
        }
    }

    pub fn with_boundary(mut self, profile: BoundaryProfile) -> Self {
        self.outer = Some(profile);
        self
    }

    /// Dirichlet data on the inner rim, used only when the rim is not an
    /// outflow boundary. Defaults to zero.
    pub fn with_inner_data(mut self, profile: BoundaryProfile) -> Self {
        self.inner_data = Some(profile);
        self
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn grid(&self) -> &AnnularGrid {
        &self.op.grid
    }

    pub fn operator(&self) -> &OperatorBundle {
        &self.op
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn boundary_profile(&self) -> Option<&BoundaryProfile> {
        self.outer.as_ref()
    }

    /// True when the inner rim uses outflow extrapolation.
    pub fn inner_is_outflow(&self) -> bool {
        self.outflow
    }

    /// Largest admissible step.
    pub fn max_dt(&self) -> f64 {
        self.dt_limit
    }

    /// Sets `u`, `u_t` from a function of the Cartesian point returning
    /// `(u, grad u, u_t)`, then applies the boundary conditions at `t`.
    pub fn set_initial_with<F>(&mut self, t: f64, f: F)
    where
        F: Fn(&[f64; 2]) -> (f64, [f64; 2], f64) + Sync,
    {
        let g = self.op.grid;
        let nodes = &self.op.nodes;
        let nt = g.ntheta;
        self.state
            .u
            .par_iter_mut()
            .zip(self.state.pi.par_iter_mut())
            .enumerate()
            .for_each(|(k, (u, pi))| {
                let (i, j) = (k / nt, k % nt);
                let x = g.point(i, j);
                let (v, grad, vt) = f(&x);
                let (s, c) = g.theta(j).sin_cos();
                let r = g.radius(i);
                let vr = grad[0] * c + grad[1] * s;
                let vth = r * (-grad[0] * s + grad[1] * c);
                let co = &nodes[k];
                *u = v;
                *pi = co.s * (co.g00 * vt + co.g0r * vr + co.g0t * vth);
            });
        self.state.t = t;
        self.state.steps = 0;
        self.state.energy_history.clear();
        self.state.boundary_flux_log.clear();
        let (mut u, mut pi) = (std::mem::take(&mut self.state.u), std::mem::take(&mut self.state.pi));
        self.apply_boundary(&mut u, &mut pi, t);
        self.state.u = u;
        self.state.pi = pi;
    }

    pub fn set_pulse(&mut self, pulse: &InteriorPulse) {
        self.set_initial_with(0.0, |x| pulse.eval(x));
    }

    /// One RK4 step of size `dt`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let limit = self.max_dt();
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-9) {
            return Err(Error::CflViolation { dt, limit });
        }
        let t0 = self.state.t;
        let n = self.op.grid.len();
        let mut su = std::mem::take(&mut self.scratch_u);
        let mut spi = std::mem::take(&mut self.scratch_pi);
        let mut au = std::mem::take(&mut self.acc_u);
        let mut api = std::mem::take(&mut self.acc_pi);
        let mut ku = std::mem::take(&mut self.k_u);
        let mut kpi = std::mem::take(&mut self.k_pi);

        au.copy_from_slice(&self.state.u);
        api.copy_from_slice(&self.state.pi);
        let stages = [(0.0, 0.5, 1.0), (0.5, 0.5, 2.0), (0.5, 1.0, 2.0), (1.0, 0.0, 1.0)];
        su.copy_from_slice(&self.state.u);
        spi.copy_from_slice(&self.state.pi);
        for (stage, &(c_eval, c_next, weight)) in stages.iter().enumerate() {
            self.rhs(&su, &spi, t0 + c_eval * dt, &mut ku, &mut kpi);
            let w = weight * dt / 6.0;
            for k in 0..n {
                au[k] += w * ku[k];
                api[k] += w * kpi[k];
            }
            if stage < 3 {
                let u0 = &self.state.u;
                let p0 = &self.state.pi;
                for k in 0..n {
                    su[k] = u0[k] + c_next * dt * ku[k];
                    spi[k] = p0[k] + c_next * dt * kpi[k];
                }
                self.apply_boundary(&mut su, &mut spi, t0 + c_next * dt);
            }
        }
        self.apply_boundary(&mut au, &mut api, t0 + dt);
        std::mem::swap(&mut self.state.u, &mut au);
        std::mem::swap(&mut self.state.pi, &mut api);
        self.state.t = t0 + dt;
        self.state.steps += 1;

        self.scratch_u = su;
        self.scratch_pi = spi;
        self.acc_u = au;
        self.acc_pi = api;
        self.k_u = ku;
        self.k_pi = kpi;

        if !self.state.u.iter().chain(&self.state.pi).all(|v| v.is_finite()) {
            return Err(Error::NonFiniteField {
                t: self.state.t,
                step: self.state.steps,
            });
        }
        Ok(())
    }

    /// Advances to `t_end` with a uniform step no larger than the CFL
    /// limit that divides `record_interval`, recording the energy at
    /// every multiple of `record_interval` and calling `observer` there.
    pub fn advance<F>(&mut self, t_end: f64, record_interval: f64, observer: F) -> Result<f64>
    where
        F: FnMut(&WaveSolver) -> Result<()>,
    {
        self.advance_capped(t_end, record_interval, f64::INFINITY, observer)
    }

    /// [`WaveSolver::advance`] with the step additionally capped by
    /// `dt_cap`, so that runs on different metrics can share a step.
    pub fn advance_capped<F>(&mut self, t_end: f64, record_interval: f64, dt_cap: f64, mut observer: F) -> Result<f64>
    where
        F: FnMut(&WaveSolver) -> Result<()>,
    {
        if !(record_interval > 0.0) {
            return Err(Error::InvalidArgument("record interval must be positive".into()));
        }
        let substeps = (record_interval / self.max_dt().min(dt_cap)).ceil().max(1.0) as usize;
        let dt = record_interval / substeps as f64;
        let t_start = self.state.t;
        let n_records = ((t_end - t_start) / record_interval - 1e-9).ceil().max(0.0) as usize;
        self.record();
        observer(self)?;
        for rec in 1..=n_records {
            for _ in 0..substeps {
                self.step(dt)?;
            }
            // keep the clock on the record lattice
            self.state.t = t_start + rec as f64 * record_interval;
            self.record();
            observer(self)?;
        }
        Ok(dt)
    }

    pub fn record(&mut self) {
        let e = self.energy();
        self.state.boundary_flux_log.push((e.t, e.boundary_flux));
        self.state.energy_history.push(e);
    }

    fn compute_derived(&self, u: &[f64], pi: &[f64], out: &mut Derived) {
        let g = &self.op.grid;
        let nt = g.ntheta;
        let nr = g.nr;
        let inv2dr = 0.5 / g.dr();
        let inv2dth = 0.5 / g.dtheta();
        out.ut
            .par_chunks_mut(nt)
            .zip(out.ur.par_chunks_mut(nt))
            .zip(out.uth.par_chunks_mut(nt))
            .enumerate()
            .for_each(|(i, ((ut, ur), uth))| {
                let row = &u[i * nt..(i + 1) * nt];
                for j in 0..nt {
                    let k = i * nt + j;
                    let d_r = if i == 0 {
                        (-3.0 * u[k] + 4.0 * u[k + nt] - u[k + 2 * nt]) * inv2dr
                    } else if i == nr {
                        (3.0 * u[k] - 4.0 * u[k - nt] + u[k - 2 * nt]) * inv2dr
                    } else {
                        (u[k + nt] - u[k - nt]) * inv2dr
                    };
                    let jp = if j + 1 == nt { 0 } else { j + 1 };
                    let jm = if j == 0 { nt - 1 } else { j - 1 };
                    let d_th = (row[jp] - row[jm]) * inv2dth;
                    ur[j] = d_r;
                    uth[j] = d_th;
                    ut[j] = self.op.terms[k][3] * pi[k] - self.op.terms[k][0] * d_r - self.op.terms[k][1] * d_th;
                }
            });
    }

    fn rhs(&mut self, u: &[f64], pi: &[f64], t: f64, du: &mut [f64], dpi: &mut [f64]) {
        let op = &self.op;
        let g = op.grid;
        let nt = g.ntheta;
        let nr = g.nr;
        let dr = g.dr();
        let dth = g.dtheta();
        let inv_dr2 = 1.0 / (dr * dr);
        let inv_dth2 = 1.0 / (dth * dth);
        let inv2dr = 0.5 / dr;
        let inv2dth = 0.5 / dth;
        let ntp = nt as isize;
        let wrap = |j: isize| -> usize {
            if j < 0 {
                (j + ntp) as usize
            } else if j >= ntp {
                (j - ntp) as usize
            } else {
                j as usize
            }
        };

        // nodal fluxes beta^r pi + S h^{rt} u_t and beta^t pi + S h^{rt} u_r
        self.fr
            .par_chunks_mut(nt)
            .zip(self.fth.par_chunks_mut(nt))
            .enumerate()
            .for_each(|(i, (fr, fth))| {
                let row = i * nt;
                for j in 0..nt {
                    let k = row + j;
                    let d_r = if i == 0 {
                        (-3.0 * u[k] + 4.0 * u[k + nt] - u[k + 2 * nt]) * inv2dr
                    } else if i == nr {
                        (3.0 * u[k] - 4.0 * u[k - nt] + u[k - 2 * nt]) * inv2dr
                    } else {
                        (u[k + nt] - u[k - nt]) * inv2dr
                    };
                    let d_th = (u[row + wrap(j as isize + 1)] - u[row + wrap(j as isize - 1)]) * inv2dth;
                    let [br, bt, shrt, _] = op.terms[k];
                    fr[j] = br * pi[k] + shrt * d_th;
                    fth[j] = bt * pi[k] + shrt * d_r;
                }
            });

        let eps16 = self.config.ko_epsilon / 16.0;
        let fr = &self.fr;
        let fth = &self.fth;
        let forcing = self.forcing.as_ref();
        du.par_chunks_mut(nt)
            .zip(dpi.par_chunks_mut(nt))
            .enumerate()
            .for_each(|(i, (du_row, dpi_row))| {
                if i == 0 || i == nr {
                    du_row.fill(0.0);
                    dpi_row.fill(0.0);
                    return;
                }
                let r = g.radius(i);
                let ko_r = if i >= 2 && i + 2 <= nr { eps16 / dr } else { 0.0 };
                let ko_t = eps16 / (r * dth);
                let row = i * nt;
                for j in 0..nt {
                    let k = row + j;
                    let kp = row + wrap(j as isize + 1);
                    let km = row + wrap(j as isize - 1);
                    let kpp = row + wrap(j as isize + 2);
                    let kmm = row + wrap(j as isize - 2);
                    let (a_p, a_m) = (op.a_half[k], op.a_half[k - nt]);
                    let (b_p, b_m) = (op.b_half[k], op.b_half[km]);
                    let radial = (a_p * (u[k + nt] - u[k]) - a_m * (u[k] - u[k - nt])) * inv_dr2
                        + (fr[k + nt] - fr[k - nt]) * inv2dr;
                    let angular =
                        (b_p * (u[kp] - u[k]) - b_m * (u[k] - u[km])) * inv_dth2 + (fth[kp] - fth[km]) * inv2dth;
                    let mut rhs_pi = -(radial + angular);
                    if let Some(f) = forcing {
                        rhs_pi += op.nodes[k].s * f(t, &g.point(i, j));
                    }
                    let [br, bt, _, inv_sg] = op.terms[k];
                    let d_r = (u[k + nt] - u[k - nt]) * inv2dr;
                    let d_th = (u[kp] - u[km]) * inv2dth;
                    let mut rhs_u = inv_sg * pi[k] - br * d_r - bt * d_th;

                    let d4t = |v: &[f64]| v[kpp] - 4.0 * v[kp] + 6.0 * v[k] - 4.0 * v[km] + v[kmm];
                    rhs_u -= ko_t * d4t(u);
                    rhs_pi -= ko_t * d4t(pi);
                    if ko_r > 0.0 {
                        let d4r =
                            |v: &[f64]| v[k + 2 * nt] - 4.0 * v[k + nt] + 6.0 * v[k] - 4.0 * v[k - nt] + v[k - 2 * nt];
                        rhs_u -= ko_r * d4r(u);
                        rhs_pi -= ko_r * d4r(pi);
                    }
                    du_row[j] = rhs_u;
                    dpi_row[j] = rhs_pi;
                }
            });
    }

    fn apply_boundary(&self, u: &mut [f64], pi: &mut [f64], t: f64) {
        let g = &self.op.grid;
        let nt = g.ntheta;
        let nr = g.nr;
        let dr = g.dr();
        let dth = g.dtheta();
        let nodes = &self.op.nodes;

        let dirichlet = |u: &mut [f64], pi: &mut [f64], i: usize, profile: Option<&BoundaryProfile>| {
            let base = i * nt;
            let mut gt = vec![0.0; nt];
            for j in 0..nt {
                let (v, vt) = profile.map(|p| p.eval(t, g.theta(j))).unwrap_or((0.0, 0.0));
                u[base + j] = v;
                gt[j] = vt;
            }
            for j in 0..nt {
                let k = base + j;
                let jp = if j + 1 == nt { 0 } else { j + 1 };
                let jm = if j == 0 { nt - 1 } else { j - 1 };
                let ur = if i == 0 {
                    (-3.0 * u[k] + 4.0 * u[k + nt] - u[k + 2 * nt]) / (2.0 * dr)
                } else {
                    (3.0 * u[k] - 4.0 * u[k - nt] + u[k - 2 * nt]) / (2.0 * dr)
                };
                let uth = (u[base + jp] - u[base + jm]) / (2.0 * dth);
                let c = &nodes[k];
                pi[k] = c.s * (c.g00 * gt[j] + c.g0r * ur + c.g0t * uth);
            }
        };
        dirichlet(u, pi, nr, self.outer.as_ref());
        if self.outflow {
            for j in 0..nt {
                u[j] = 3.0 * (u[j + nt] - u[j + 2 * nt]) + u[j + 3 * nt];
                pi[j] = 3.0 * (pi[j + nt] - pi[j + 2 * nt]) + pi[j + 3 * nt];
            }
        } else {
            dirichlet(u, pi, 0, self.inner_data.as_ref());
        }
    }

    /// Energy of the current state split by region, plus the power entering
    /// through the outer rim.
    pub fn energy(&self) -> EnergyRecord {
        self.energy_of(&self.state.u, &self.state.pi, self.state.t)
    }

    /// Energy of an arbitrary field pair on this solver's grid and metric.
    pub fn energy_of(&self, u: &[f64], pi: &[f64], t: f64) -> EnergyRecord {
        let n = self.op.grid.len();
        let mut d = Derived {
            ut: vec![0.0; n],
            ur: vec![0.0; n],
            uth: vec![0.0; n],
        };
        self.compute_derived(u, pi, &mut d);
        let g = &self.op.grid;
        let nt = g.ntheta;
        let nr = g.nr;
        let cell = g.dr() * g.dtheta();
        let nodes = &self.op.nodes;
        let rows: Vec<f64> = (0..g.rows())
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..nt {
                    let k = i * nt + j;
                    s += energy_density(&nodes[k], pi[k], d.ur[k], d.uth[k]) * nodes[k].s;
                }
                let w = if i == 0 || i == nr { 0.5 } else { 1.0 };
                w * s * cell
            })
            .collect();
        let mut total = 0.0;
        let mut exterior = 0.0;
        let mut interior = 0.0;
        for (i, e) in rows.iter().enumerate() {
            let r = g.radius(i);
            total += e;
            if r > self.config.exterior_radius {
                exterior += e;
            }
            if r < self.config.interior_radius {
                interior += e;
            }
        }
        let mut flux = 0.0;
        for j in 0..nt {
            let k = nr * nt + j;
            let c = &nodes[k];
            let current = c.s * (c.g0r * d.ut[k] + c.grr * d.ur[k] + c.grt * d.uth[k]);
            flux -= current * d.ut[k] * g.dtheta();
        }
        EnergyRecord {
            t,
            total,
            exterior,
            interior,
            boundary_flux: flux,
        }
    }

    /// `u_t` and `(u_r, u_theta)` at every node of the current state.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.op.grid.len();
        let mut d = Derived {
            ut: vec![0.0; n],
            ur: vec![0.0; n],
            uth: vec![0.0; n],
        };
        self.compute_derived(&self.state.u, &self.state.pi, &mut d);
        (d.ut, d.ur, d.uth)
    }
}

/// `(g00 u_t + Hu)^2 + (Hu)^2 - g^{ab} u_a u_b` with `Hu = g^{0a} u_a`.
#[inline]
fn energy_density(c: &super::operator::PolarCoefficients, pi: f64, ur: f64, uth: f64) -> f64 {
    let lead = pi / c.s;
    let hu = c.g0r * ur + c.g0t * uth;
    lead * lead + hu * hu - (c.grr * ur * ur + 2.0 * c.grt * ur * uth + c.gtt * uth * uth)
}

/// Largest exterior energy over the recorded history relative to the
/// first recorded total energy.
pub fn trapping_metric(state: &WaveState) -> Result<f64> {
    let first = state.energy_history.first().ok_or(Error::ZeroEnergy)?;
    if !(first.total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let peak = state.energy_history.iter().map(|e| e.exterior).fold(0.0f64, f64::max);
    Ok(peak / first.total)
}
