use rayon::prelude::*;

use super::grid::AnnularGrid;
use crate::error::{Error, Result};
use crate::metric::{MetricTensor, SpacetimeMetric};

/// Polar contravariant components at one point together with the volume
/// weight `S = r sqrt|g|`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolarCoefficients {
    pub g00: f64,
    pub g0r: f64,
    pub g0t: f64,
    pub grr: f64,
    pub grt: f64,
    pub gtt: f64,
    pub s: f64,
}

impl PolarCoefficients {
    pub fn from_cartesian(g: &MetricTensor, r: f64, theta: f64) -> Self {
        let (sn, cs) = theta.sin_cos();
        let rh = [cs, sn];
        let th = [-sn, cs];
        let d = g.time_space();
        let m = |a: &[f64; 2], b: &[f64; 2]| {
            let mut s = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    s += a[j] * g.spatial(j, k) * b[k];
                }
            }
            s
        };
        Self {
            g00: g.get(0, 0),
            g0r: d[0] * rh[0] + d[1] * rh[1],
            g0t: (d[0] * th[0] + d[1] * th[1]) / r,
            grr: m(&rh, &rh),
            grt: m(&rh, &th) / r,
            gtt: m(&th, &th) / (r * r),
            s: r * g.sqrt_abs_g(),
        }
    }

    pub fn at(metric: &SpacetimeMetric, r: f64, theta: f64) -> Result<Self> {
        let (sn, cs) = theta.sin_cos();
        let x = [r * cs, r * sn];
        let g = metric.eval(&x)?;
        if g.inverse().is_none() || !(g.get(0, 0) > 0.0) {
            return Err(Error::SingularMetric { point: x.to_vec() });
        }
        Ok(Self::from_cartesian(&g, r, theta))
    }

    /// `h^{ab} = g^{ab} - g^{a0} g^{0b} / g^{00}`, negative definite for
    /// any Lorentzian metric with `g^{00} > 0`.
    pub fn h_rr(&self) -> f64 {
        self.grr - self.g0r * self.g0r / self.g00
    }

    pub fn h_rt(&self) -> f64 {
        self.grt - self.g0r * self.g0t / self.g00
    }

    pub fn h_tt(&self) -> f64 {
        self.gtt - self.g0t * self.g0t / self.g00
    }

    /// Largest characteristic speed over unit spatial directions (in the
    /// Euclidean sense), from the roots `s` of
    /// `g00 s^2 - 2 (g^{0j} n_j) s + g^{jk} n_j n_k = 0`.
    pub fn max_speed(&self, r: f64) -> f64 {
        let mut best: f64 = 0.0;
        const DIRECTIONS: usize = 32;
        for k in 0..DIRECTIONS {
            let phi = std::f64::consts::PI * k as f64 / DIRECTIONS as f64;
            // polar components of the covector n = cos(phi) r_hat + sin(phi) theta_hat
            let nr = phi.cos();
            let nt = phi.sin() * r;
            let b = self.g0r * nr + self.g0t * nt;
            let c = self.grr * nr * nr + 2.0 * self.grt * nr * nt + self.gtt * nt * nt;
            let disc = (b * b - self.g00 * c).max(0.0).sqrt();
            best = best
                .max(((b + disc) / self.g00).abs())
                .max(((b - disc) / self.g00).abs());
        }
        best
    }
}

/// Coefficient arrays realizing the wave operator on an annular grid.
///
/// With `S = r sqrt|g|`, `pi = S (g^{00} u_t + g^{0a} u_a)`, the shift
/// `beta^a = g^{a0} / g^{00}` and `h^{ab} = g^{ab} - g^{a0} g^{0b} / g^{00}`
/// the equation becomes
/// `u_t = pi / (S g^{00}) - beta^a u_a`,
/// `pi_t = -d_a(beta^a pi + S h^{ab} u_b) + S f`.
/// The `h^{rr}` and `h^{tt}` parts use compact three-point stencils with
/// coefficients at half nodes; advection and the mixed term use centered
/// differences of nodal fluxes.
#[derive(Clone, Debug)]
pub struct OperatorBundle {
    pub grid: AnnularGrid,
    pub nodes: Vec<PolarCoefficients>,
    /// `S h^{rr}` at `(r_{i+1/2}, theta_j)`, `i = 0..nr`.
    pub a_half: Vec<f64>,
    /// `S h^{tt}` at `(r_i, theta_{j+1/2})`.
    pub b_half: Vec<f64>,
    /// Per-node `(beta^r, beta^t, S h^{rt}, 1 / (S g^{00}))`.
    pub terms: Vec<[f64; 4]>,
    /// Largest characteristic speed at each node.
    pub speed: Vec<f64>,
}

/// Precomputes every metric-dependent array used by the solver.
pub fn first_order_reduce(metric: &SpacetimeMetric, grid: &AnnularGrid) -> Result<OperatorBundle> {
    grid.validate()?;
    if metric.n_space() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: metric.n_space(),
        });
    }
    let nt = grid.ntheta;
    let dr = grid.dr();
    let dth = grid.dtheta();
    let nodes: Vec<PolarCoefficients> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            PolarCoefficients::at(metric, grid.radius(i), grid.theta(j))
        })
        .collect::<Result<_>>()?;
    let a_half: Vec<f64> = (0..grid.nr * nt)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            let r = grid.r_min + (i as f64 + 0.5) * dr;
            PolarCoefficients::at(metric, r, grid.theta(j)).map(|c| c.s * c.h_rr())
        })
        .collect::<Result<_>>()?;
    let b_half: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            PolarCoefficients::at(metric, grid.radius(i), (j as f64 + 0.5) * dth).map(|c| c.s * c.h_tt())
        })
        .collect::<Result<_>>()?;
    let speed = nodes
        .iter()
        .enumerate()
        .map(|(k, c)| c.max_speed(grid.radius(k / nt)))
        .collect();
    let terms = nodes
        .iter()
        .map(|c| [c.g0r / c.g00, c.g0t / c.g00, c.s * c.h_rt(), 1.0 / (c.s * c.g00)])
        .collect();
    Ok(OperatorBundle {
        grid: *grid,
        nodes,
        a_half,
        b_half,
        terms,
        speed,
    })
}

impl OperatorBundle {
    /// Radial characteristic speeds `dr/dt` at node `(0, j)`: roots of
    /// `g00 s^2 - 2 g^{0r} s + g^{rr} = 0`.
    pub fn radial_speeds(&self, i: usize, j: usize) -> (f64, f64) {
        let c = &self.nodes[self.grid.idx(i, j)];
        let disc = (c.g0r * c.g0r - c.g00 * c.grr).max(0.0).sqrt();
        ((c.g0r - disc) / c.g00, (c.g0r + disc) / c.g00)
    }

    /// True when every characteristic at the inner rim moves towards
    /// smaller radii, so that no boundary condition may be imposed there.
    pub fn inner_rim_is_outflow(&self) -> bool {
        (0..self.grid.ntheta).all(|j| self.radial_speeds(0, j).1 < 0.0)
    }

    /// Advisory resolution check: at least 8 points across the shortest
    /// wavelength the scenario excites, measured with the larger of the
    /// radial and azimuthal spacings at `radius`.
    pub fn check_resolution(&self, shortest_wavelength: f64, radius: f64) -> Result<()> {
        let r = radius.clamp(self.grid.r_min, self.grid.r_max);
        let h = self.grid.dr().max(r * self.grid.dtheta());
        let ppw = shortest_wavelength / h;
        if ppw < 8.0 {
            return Err(Error::GridTooCoarse(format!(
                "{ppw:.2} points per wavelength {shortest_wavelength} (need 8)"
            )));
        }
        Ok(())
    }
}

/// `safety * min_nodes(local cell size / max characteristic speed)`.
pub fn cfl_dt(bundle: &OperatorBundle, safety: f64) -> f64 {
    let g = &bundle.grid;
    let dr = g.dr();
    let dth = g.dtheta();
    let mut dt = f64::INFINITY;
    for i in 0..g.rows() {
        let h = dr.min(g.radius(i) * dth);
        for j in 0..g.ntheta {
            let s = bundle.speed[g.idx(i, j)];
            if s > 0.0 {
                dt = dt.min(h / s);
            }
        }
    }
    safety * dt
}
