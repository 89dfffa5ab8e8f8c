use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::ClosedCurve;
use crate::horizon::HorizonConfig;
use crate::inverse::{ExperimentSettings, PerturbationSpec, Potential};
use crate::metric::{
    acoustic_metric, gordon_metric, minkowski, radial_zeros_flow, slow_medium_metric, vortex_flow, AffineField, Bump,
    Domain, FlowSpec, RadialFunction, RadialProfile, ScalarField, SpacetimeMetric,
};
use crate::wave::{AnnularGrid, BoundaryProfile, InnerBoundary, InteriorPulse, RunSchedule, SolverConfig, SourceSpec};

/// Metric families accepted in `metric.family`.
pub const FAMILIES: [&str; 6] = [
    "vortex",
    "acoustic",
    "gordon",
    "slow_medium",
    "radial_profile",
    "minkowski",
];

/// Flow kinds accepted in `metric.flow.kind`.
pub const FLOW_KINDS: [&str; 3] = ["vortex", "rotation", "radial_gradient"];

/// A scenario file. Every section rejects unknown keys.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Subcommand run when none is given explicitly.
    pub command: Option<String>,
    pub metric: MetricSection,
    pub grid: Option<GridSection>,
    pub source: Option<SourceSection>,
    pub wave: Option<WaveSection>,
    pub horizon_search: Option<HorizonSection>,
    pub rays: Option<RaysSection>,
    pub experiment: Option<ExperimentSection>,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    pub family: String,
    /// Vortex coefficients of `(A/r) r_hat + (B/r) theta_hat`.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub flow: Option<FlowSection>,
    pub n_index: Option<f64>,
    pub c: Option<f64>,
    pub density: Option<f64>,
    pub zeros_plus: Option<Vec<f64>>,
    pub zeros_minus: Option<Vec<f64>>,
    pub r1: Option<f64>,
    pub r0: Option<f64>,
    /// Annulus `[r_min, r_max]` on which the metric may be evaluated.
    pub domain: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub omega: Option<f64>,
    pub beta: Option<f64>,
    pub r0: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nr: usize,
    pub ntheta: usize,
    pub r_min: f64,
    pub r_max: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> u32 {
    2
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// `boundary_multipole` or `pulse`.
    pub kind: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "two")]
    pub m: u32,
    #[serde(default = "one")]
    pub duration: f64,
    #[serde(default)]
    pub t_start: f64,
    pub carrier: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub width: Option<f64>,
    /// Put the pulse in `u_t` instead of `u`.
    #[serde(default)]
    pub velocity: bool,
}

fn record_default() -> f64 {
    0.05
}

fn ko_default() -> f64 {
    0.02
}

fn cfl_default() -> f64 {
    0.4
}

fn inner_default() -> String {
    "auto".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub t_end: f64,
    #[serde(default = "record_default")]
    pub record_interval: f64,
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "ko_default")]
    pub ko_epsilon: f64,
    #[serde(default = "cfl_default")]
    pub cfl_safety: f64,
    /// `auto`, `outflow` or `dirichlet`.
    #[serde(default = "inner_default")]
    pub inner: String,
    pub exterior_radius: Option<f64>,
    pub interior_radius: Option<f64>,
}

fn n_angles_default() -> usize {
    256
}

fn n_scan_default() -> usize {
    64
}

fn tol_cycle_default() -> f64 {
    1e-8
}

fn curve_samples_default() -> usize {
    512
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "n_angles_default")]
    pub n_angles: usize,
    pub window: Option<[f64; 2]>,
    #[serde(default = "n_scan_default")]
    pub n_scan: usize,
    #[serde(default = "tol_cycle_default")]
    pub tol_cycle: f64,
    #[serde(default = "curve_samples_default")]
    pub curve_samples: usize,
    /// Radius of a circle on which the inner cone condition is checked.
    pub inner_curve_radius: Option<f64>,
}

fn sigma_default() -> f64 {
    20.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaysSection {
    /// Start radii on the positive x axis.
    pub starts: Vec<f64>,
    #[serde(default = "sigma_default")]
    pub sigma_max: f64,
    /// Parameter length of the full bicharacteristics launched from each
    /// start.
    #[serde(default = "ray_length_default")]
    pub s_max: f64,
}

fn ray_length_default() -> f64 {
    0.2
}

fn margin_default() -> f64 {
    2.0
}

fn factor_default() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSection {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
    pub component: [usize; 2],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `nonuniqueness` or `gradient_pair`.
    pub kind: String,
    /// Radial cell counts; `ntheta = ntheta_factor * nr`.
    pub grid_schedule: Vec<usize>,
    #[serde(default = "factor_default")]
    pub ntheta_factor: usize,
    pub t_end: f64,
    #[serde(default = "record_default")]
    pub record_interval: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "two")]
    pub m: u32,
    #[serde(default = "one")]
    pub duration: f64,
    pub exterior_radius: Option<f64>,
    pub bump: Option<BumpSection>,
    #[serde(default = "margin_default")]
    pub margin_cells: f64,
    /// Vortex strength of the non-gradient control flow.
    pub control_b: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub dir: Option<String>,
    /// `json` or `csv`.
    pub format: Option<String>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    /// Multiplies the integrator tolerances and the cycle tolerance.
    #[serde(default = "one")]
    pub scale: f64,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

fn parse_error(path: String, message: String) -> Error {
    let join = |field: &str| {
        if path.is_empty() || path == "." {
            field.to_string()
        } else if path == field || path.ends_with(&format!(".{field}")) {
            path.clone()
        } else {
            format!("{path}.{field}")
        }
    };
    let quoted = |rest: &str| rest.split('`').next().unwrap_or_default().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        return Error::UnknownKey(join(&quoted(rest)));
    }
    if let Some(rest) = message.strip_prefix("missing field `") {
        return Error::validation(join(&quoted(rest)), "required key is missing");
    }
    Error::Parse { path, message }
}

/// Parses and validates a scenario from TOML text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| Error::Parse {
        path: String::new(),
        message: e.message().to_string(),
    })?;
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        parse_error(path, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads `path` and parses it with [`parse_config_str`].
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

fn require(value: Option<f64>, key: &str) -> Result<f64> {
    value.ok_or_else(|| Error::validation(key, "required key is missing"))
}

fn finite(value: f64, key: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(key, format!("must be finite, got {value}")))
    }
}

fn positive(value: f64, key: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::validation(key, format!("must be positive, got {value}")))
    }
}

/// Number of sign changes of `f` on a fine sampling of `[lo, hi]`.
fn sign_changes(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> usize {
    let n = 4000;
    let mut count = 0;
    let mut prev = f(lo);
    for k in 1..=n {
        let v = f(lo + (hi - lo) * k as f64 / n as f64);
        if prev * v < 0.0 {
            count += 1;
        }
        if v != 0.0 {
            prev = v;
        }
    }
    count
}

impl MetricSection {
    fn check_unused(&self, allowed: &[&str]) -> Result<()> {
        let present = [
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("flow", self.flow.is_some()),
            ("n_index", self.n_index.is_some()),
            ("c", self.c.is_some()),
            ("density", self.density.is_some()),
            ("zeros_plus", self.zeros_plus.is_some()),
            ("zeros_minus", self.zeros_minus.is_some()),
            ("r1", self.r1.is_some()),
            ("r0", self.r0.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(Error::validation(
                    format!("metric.{key}"),
                    format!("not used by family `{}`", self.family),
                ));
            }
        }
        Ok(())
    }

    fn flow_spec(&self) -> Result<FlowSpec> {
        let f = self
            .flow
            .as_ref()
            .ok_or_else(|| Error::validation("metric.flow", format!("family `{}` needs a flow", self.family)))?;
        let spec = match f.kind.as_str() {
            "vortex" => {
                let a = finite(require(f.a, "metric.flow.a")?, "metric.flow.a")?;
                let b = finite(require(f.b, "metric.flow.b")?, "metric.flow.b")?;
                vortex_flow(a, b).map_err(|e| Error::validation("metric.flow", e.to_string()))?
            }
            "rotation" => {
                let omega = finite(require(f.omega, "metric.flow.omega")?, "metric.flow.omega")?;
                FlowSpec::new(Arc::new(RadialProfile {
                    a: RadialFunction::constant(0.0),
                    b: RadialFunction::Polynomial(vec![0.0, omega]),
                }))
            }
            "radial_gradient" => {
                let beta = finite(require(f.beta, "metric.flow.beta")?, "metric.flow.beta")?;
                require(f.r0, "metric.flow.r0")?;
                FlowSpec::new(Arc::new(AffineField::radial_linear(2, -2.0 * beta)))
            }
            other => {
                return Err(Error::validation(
                    "metric.flow.kind",
                    format!("unknown flow kind `{other}`; allowed: {}", FLOW_KINDS.join(", ")),
                ))
            }
        };
        let mut spec = spec;
        if let Some(n) = self.n_index {
            if !(n >= 1.0) {
                return Err(Error::validation("metric.n_index", format!("must be >= 1, got {n}")));
            }
            spec = spec.with_index(ScalarField::Constant(n));
        }
        if let Some(c) = self.c {
            spec = spec.with_speed(positive(c, "metric.c")?);
        }
        if let Some(rho) = self.density {
            spec = spec.with_density(ScalarField::Constant(positive(rho, "metric.density")?));
        }
        Ok(spec)
    }

    /// Potential `b` of a `radial_gradient` flow.
    pub fn potential(&self) -> Result<Potential> {
        match &self.flow {
            Some(f) if f.kind == "radial_gradient" => Ok(Potential::quadratic(
                require(f.beta, "metric.flow.beta")?,
                require(f.r0, "metric.flow.r0")?,
            )),
            _ => Err(Error::validation(
                "metric.flow.kind",
                "a gradient-pair experiment needs a `radial_gradient` flow",
            )),
        }
    }

    pub fn build(&self) -> Result<SpacetimeMetric> {
        let metric = match self.family.as_str() {
            "vortex" => {
                self.check_unused(&["a", "b"])?;
                let a = finite(require(self.a, "metric.a")?, "metric.a")?;
                let b = finite(require(self.b, "metric.b")?, "metric.b")?;
                crate::metric::vortex_metric(a, b).map_err(|e| Error::validation("metric", e.to_string()))?
            }
            "acoustic" => {
                self.check_unused(&["flow", "c", "density"])?;
                acoustic_metric(self.flow_spec()?)?.with_domain(Domain::Punctured)
            }
            "gordon" => {
                self.check_unused(&["flow", "n_index", "c"])?;
                gordon_metric(self.flow_spec()?)?.with_domain(Domain::Punctured)
            }
            "slow_medium" => {
                self.check_unused(&["flow", "n_index", "c"])?;
                slow_medium_metric(self.flow_spec()?)?.with_domain(Domain::Punctured)
            }
            "radial_profile" => {
                self.check_unused(&["zeros_plus", "zeros_minus", "r1", "r0"])?;
                let plus = self
                    .zeros_plus
                    .as_ref()
                    .ok_or_else(|| Error::validation("metric.zeros_plus", "required key is missing"))?;
                let minus = self
                    .zeros_minus
                    .as_ref()
                    .ok_or_else(|| Error::validation("metric.zeros_minus", "required key is missing"))?;
                if plus.len() != 1 {
                    return Err(Error::validation(
                        "metric.zeros_plus",
                        format!("exactly one zero of A - 1 is supported, got {}", plus.len()),
                    ));
                }
                let r1 = positive(require(self.r1, "metric.r1")?, "metric.r1")?;
                let r0 = positive(require(self.r0, "metric.r0")?, "metric.r0")?;
                for (key, zs) in [("metric.zeros_plus", plus), ("metric.zeros_minus", minus)] {
                    if let Some(z) = zs.iter().find(|z| !(**z > r1 && **z < r0)) {
                        return Err(Error::validation(key, format!("zero {z} lies outside ({r1}, {r0})")));
                    }
                }
                let flow = radial_zeros_flow(plus[0], minus, r1, r0)
                    .map_err(|e| Error::validation("metric.zeros_minus", e.to_string()))?;
                let a = |r: f64| flow.velocity.value(&[r, 0.0]).map(|w| w[0]).unwrap_or(f64::NAN);
                let found = (
                    sign_changes(|r| a(r) - 1.0, r1, r0),
                    sign_changes(|r| a(r) + 1.0, r1, r0),
                );
                if found != (plus.len(), minus.len()) {
                    return Err(Error::validation(
                        "metric.zeros_minus",
                        format!(
                            "profile has {} zeros of A - 1 and {} of A + 1, expected {} and {}",
                            found.0,
                            found.1,
                            plus.len(),
                            minus.len()
                        ),
                    ));
                }
                acoustic_metric(flow)?
            }
            "minkowski" => {
                self.check_unused(&[])?;
                minkowski(2)
            }
            other => {
                return Err(Error::validation(
                    "metric.family",
                    format!("unknown family `{other}`; allowed: {}", FAMILIES.join(", ")),
                ))
            }
        };
        Ok(match self.domain {
            Some([lo, hi]) => {
                if !(lo > 0.0 && hi > lo) {
                    return Err(Error::validation(
                        "metric.domain",
                        format!("need 0 < r_min < r_max, got [{lo}, {hi}]"),
                    ));
                }
                metric.with_domain(Domain::Annulus { r_min: lo, r_max: hi })
            }
            None => match self.family.as_str() {
                "radial_profile" => metric.with_domain(Domain::Annulus {
                    r_min: self.r1.unwrap_or_default(),
                    r_max: 1.1 * self.r0.unwrap_or_default(),
                }),
                _ => metric,
            },
        })
    }
}

impl GridSection {
    pub fn build(&self) -> Result<AnnularGrid> {
        AnnularGrid::new(self.nr, self.ntheta, self.r_min, self.r_max)
    }
}

impl SourceSection {
    pub fn build(&self) -> Result<SourceSpec> {
        let spec = match self.kind.as_str() {
            "boundary_multipole" => {
                if self.center.is_some() || self.width.is_some() || self.velocity {
                    return Err(Error::validation(
                        "source.center",
                        "center, width and velocity apply to `pulse` sources only",
                    ));
                }
                SourceSpec::BoundaryDirichlet(BoundaryProfile::WindowedMultipole {
                    amplitude: finite(self.amplitude, "source.amplitude")?,
                    m: self.m,
                    t_start: finite(self.t_start, "source.t_start")?,
                    duration: self.duration,
                    carrier: self.carrier,
                })
            }
            "pulse" => {
                let center = self
                    .center
                    .ok_or_else(|| Error::validation("source.center", "required key is missing"))?;
                let width = positive(require(self.width, "source.width")?, "source.width")?;
                let g = crate::wave::Gaussian {
                    center,
                    width,
                    amplitude: finite(self.amplitude, "source.amplitude")?,
                };
                SourceSpec::InteriorPulse(if self.velocity {
                    InteriorPulse {
                        displacement: None,
                        velocity: Some(g),
                    }
                } else {
                    InteriorPulse {
                        displacement: Some(g),
                        velocity: None,
                    }
                })
            }
            other => {
                return Err(Error::validation(
                    "source.kind",
                    format!("unknown source kind `{other}`; allowed: boundary_multipole, pulse"),
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl WaveSection {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let inner = match self.inner.as_str() {
            "auto" => InnerBoundary::Auto,
            "outflow" => InnerBoundary::Outflow,
            "dirichlet" => InnerBoundary::Dirichlet,
            other => {
                return Err(Error::validation(
                    "wave.inner",
                    format!("unknown inner boundary `{other}`; allowed: auto, outflow, dirichlet"),
                ))
            }
        };
        if !(self.ko_epsilon >= 0.0) {
            return Err(Error::validation("wave.ko_epsilon", "must be non-negative"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::validation("wave.cfl_safety", "must lie in (0, 1]"));
        }
        Ok(SolverConfig {
            ko_epsilon: self.ko_epsilon,
            inner,
            cfl_safety: self.cfl_safety,
            exterior_radius: self.exterior_radius.unwrap_or(f64::INFINITY),
            interior_radius: self.interior_radius.unwrap_or(0.0),
        })
    }

    pub fn schedule(&self) -> Result<RunSchedule> {
        positive(self.t_end, "wave.t_end")?;
        positive(self.record_interval, "wave.record_interval")?;
        Ok(RunSchedule {
            t_end: self.t_end,
            record_interval: self.record_interval,
            probes: self.probes.clone(),
            snapshot_times: self.snapshot_times.clone(),
        })
    }
}

impl HorizonSection {
    pub fn build(&self, tol_scale: f64) -> Result<HorizonConfig> {
        positive(self.r_min, "horizon_search.r_min")?;
        if !(self.r_max > self.r_min) {
            return Err(Error::validation("horizon_search.r_max", "must exceed r_min"));
        }
        if self.n_angles < 8 {
            return Err(Error::validation("horizon_search.n_angles", "need at least 8 angles"));
        }
        let mut cfg = HorizonConfig::new(self.r_min, self.r_max);
        cfg.n_angles = self.n_angles;
        if let Some([lo, hi]) = self.window {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::validation("horizon_search.window", "need 0 < lo < hi"));
            }
            cfg.window = Some((lo, hi));
        }
        cfg.search.n_scan = self.n_scan.max(2);
        cfg.search.tol_cycle = positive(self.tol_cycle, "horizon_search.tol_cycle")? * tol_scale;
        cfg.search.curve_samples = self.curve_samples.max(16);
        cfg.search.ret.ode = cfg.search.ret.ode.scaled(tol_scale);
        if let Some(r) = self.inner_curve_radius {
            cfg.inner_curve = Some(ClosedCurve::circle(
                positive(r, "horizon_search.inner_curve_radius")?,
                256,
                0.0,
            )?);
        }
        Ok(cfg)
    }
}

impl ExperimentSection {
    pub fn grids(&self, grid: &GridSection) -> Result<Vec<AnnularGrid>> {
        if self.grid_schedule.len() < 2 {
            return Err(Error::validation("experiment.grid_schedule", "need at least two grids"));
        }
        if self.grid_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "experiment.grid_schedule",
                "cell counts must increase",
            ));
        }
        if self.ntheta_factor == 0 {
            return Err(Error::validation("experiment.ntheta_factor", "must be at least 1"));
        }
        self.grid_schedule
            .iter()
            .map(|&n| AnnularGrid::new(n, self.ntheta_factor * n, grid.r_min, grid.r_max))
            .collect()
    }

    pub fn settings(&self) -> Result<ExperimentSettings> {
        positive(self.t_end, "experiment.t_end")?;
        positive(self.record_interval, "experiment.record_interval")?;
        positive(self.duration, "experiment.duration")?;
        let mut s = ExperimentSettings::multipole(self.t_end);
        s.record_interval = self.record_interval;
        s.profile = BoundaryProfile::multipole(self.amplitude, self.m, self.duration);
        s.forcing_id = format!("multipole_m{}", self.m);
        Ok(s)
    }

    pub fn perturbation(&self) -> Result<PerturbationSpec> {
        let b = self
            .bump
            .as_ref()
            .ok_or_else(|| Error::validation("experiment.bump", "required for a nonuniqueness experiment"))?;
        positive(b.radius, "experiment.bump.radius")?;
        if b.component.iter().any(|&c| c > 2) {
            return Err(Error::validation(
                "experiment.bump.component",
                "indices must be 0, 1 or 2",
            ));
        }
        if !(self.margin_cells >= 2.0) {
            return Err(Error::validation(
                "experiment.margin_cells",
                "margin must be at least 2 cells",
            ));
        }
        Ok(PerturbationSpec {
            bump: Bump {
                center: b.center.to_vec(),
                radius: b.radius,
                amplitude: finite(b.amplitude, "experiment.bump.amplitude")?,
                component: (b.component[0], b.component[1]),
            },
            margin_cells: self.margin_cells,
        })
    }
}

impl ScenarioConfig {
    /// Checks every section that is present against its module's
    /// preconditions.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::validation("name", "must not be empty"));
        }
        if let Some(c) = &self.command {
            super::Command::parse(c).map_err(|_| {
                Error::validation(
                    "command",
                    format!("unknown command `{c}`; allowed: {}", super::COMMANDS.join(", ")),
                )
            })?;
        }
        self.metric.build()?;
        if let Some(g) = &self.grid {
            g.build()?;
        }
        if let Some(s) = &self.source {
            s.build()?;
        }
        if let Some(w) = &self.wave {
            w.solver_config()?;
            w.schedule()?;
        }
        if let Some(h) = &self.horizon_search {
            h.build(1.0)?;
        }
        if let Some(r) = &self.rays {
            if r.starts.is_empty() {
                return Err(Error::validation("rays.starts", "need at least one start radius"));
            }
            positive(r.sigma_max, "rays.sigma_max")?;
            positive(r.s_max, "rays.s_max")?;
            if let Some(x) = r.starts.iter().find(|x| !(**x > 0.0)) {
                return Err(Error::validation(
                    "rays.starts",
                    format!("start radius {x} is not positive"),
                ));
            }
        }
        if let Some(e) = &self.experiment {
            let grid = self
                .grid
                .as_ref()
                .ok_or_else(|| Error::validation("grid", "an experiment needs the [grid] annulus"))?;
            e.grids(grid)?;
            e.settings()?;
            match e.kind.as_str() {
                "nonuniqueness" => {
                    e.perturbation()?;
                    positive(
                        require(e.exterior_radius, "experiment.exterior_radius")?,
                        "experiment.exterior_radius",
                    )?;
                }
                "gradient_pair" => {
                    self.metric.potential()?;
                    if self.metric.family != "slow_medium" {
                        return Err(Error::validation(
                            "metric.family",
                            "a gradient pair uses the slow_medium family",
                        ));
                    }
                    require(e.control_b, "experiment.control_b")?;
                }
                other => {
                    return Err(Error::validation(
                        "experiment.kind",
                        format!("unknown experiment `{other}`; allowed: nonuniqueness, gradient_pair"),
                    ))
                }
            }
        }
        if let Some(f) = &self.outputs.format {
            if f != "json" && f != "csv" {
                return Err(Error::validation(
                    "outputs.format",
                    format!("unknown format `{f}`; allowed: csv, json"),
                ));
            }
        }
        positive(self.tolerances.scale, "tolerances.scale")?;
        Ok(())
    }
}
