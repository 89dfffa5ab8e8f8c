use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{Family, FrameField};
use crate::horizon::{ergosphere_locus, horizon_report, HorizonReport};
use crate::inverse::{gradient_flow_pair, nonuniqueness_experiment, DnTrace};
use crate::metric::Domain;
use crate::rays::{integrate_ray, lift_time_direction, planar_orbit, OrbitOptions, PhasePoint, RayOptions};
use crate::wave::{run_scenario, trapping_metric};

/// Subcommands that run a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ergosphere,
    Rays,
    Horizon,
    Classify,
    Wave,
    DnCompare,
    GaugeTest,
}

pub const COMMANDS: [&str; 7] = [
    "ergosphere",
    "rays",
    "horizon",
    "classify",
    "wave",
    "dn-compare",
    "gauge-test",
];

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Ergosphere,
        Command::Rays,
        Command::Horizon,
        Command::Classify,
        Command::Wave,
        Command::DnCompare,
        Command::GaugeTest,
    ];

    pub fn name(self) -> &'static str {
        COMMANDS[Self::ALL.iter().position(|c| *c == self).unwrap()]
    }

    pub fn parse(s: &str) -> Result<Self> {
        COMMANDS
            .iter()
            .position(|c| *c == s)
            .map(|k| Self::ALL[k])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command `{s}`")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Encoding of the report file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    /// Flattened `key,value` rows.
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::validation(
                "format",
                format!("unknown format `{s}`; allowed: csv, json"),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Multiplies every integrator and cycle tolerance.
    pub tol_scale: f64,
    /// Overrides `outputs.format` when set.
    pub format: Option<Format>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            tol_scale: 1.0,
            format: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// The run finished but an experiment missed its pass criterion.
    Failed,
    NumericalError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub command: Command,
    pub status: RunStatus,
    /// Sorted by path; `manifest.json` itself is not listed.
    pub files: Vec<FileRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

pub struct RunArtifacts {
    pub manifest: Manifest,
    pub dir: PathBuf,
    /// Report of the command, `Null` after a numerical error.
    pub report: Value,
}

impl RunArtifacts {
    pub fn exit_code(&self) -> i32 {
        match self.manifest.status {
            RunStatus::Ok => 0,
            _ => 2,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Checks every file listed in a manifest against its recorded size and
/// hash.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: "manifest.json".into(),
        message: e.to_string(),
    })?;
    for f in &manifest.files {
        let bytes = fs::read(dir.join(&f.path))?;
        if bytes.len() as u64 != f.bytes || sha256_hex(&bytes) != f.sha256 {
            return Err(Error::InvalidArgument(format!(
                "{} does not match its manifest entry",
                f.path
            )));
        }
    }
    Ok(manifest)
}

fn error_kind(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or("Error")
        .to_string()
}

/// Flattens a JSON value into `key,value` rows with dotted key paths.
pub fn flatten_json(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(&key(k), v, out)),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .for_each(|(k, v)| walk(&key(&k.to_string()), v, out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            Value::Null => out.push((prefix.to_string(), String::new())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut text = String::from("key,value\n");
    for (k, v) in rows {
        text.push_str(&format!("{k},{v}\n"));
    }
    text
}

/// Files produced by a command, keyed by name so the write order is fixed.
#[derive(Default)]
struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
    log: Vec<String>,
}

impl Outputs {
    fn csv(&mut self, name: String, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.insert(name, buf);
        Ok(())
    }

    fn trace(&mut self, name: &str, trace: &DnTrace) -> Result<()> {
        self.csv(name.to_string(), |w| trace.write_csv(w))
    }

    fn log(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }
}

struct Outcome {
    report: Value,
    passed: bool,
}

/// Configuration the command needs beyond what `validate` checks.
fn check_requirements(cfg: &ScenarioConfig, cmd: Command) -> Result<()> {
    let need = |present: bool, key: &str| {
        if present {
            Ok(())
        } else {
            Err(Error::validation(
                key,
                format!("command `{cmd}` needs a [{key}] section"),
            ))
        }
    };
    let experiment_kind = cfg.experiment.as_ref().map(|e| e.kind.as_str());
    match cmd {
        Command::Ergosphere | Command::Horizon | Command::Classify => {
            need(cfg.horizon_search.is_some(), "horizon_search")
        }
        Command::Rays => {
            need(cfg.horizon_search.is_some(), "horizon_search")?;
            need(cfg.rays.is_some(), "rays")
        }
        Command::Wave => {
            if experiment_kind.is_some() {
                return Ok(());
            }
            need(cfg.grid.is_some(), "grid")?;
            need(cfg.source.is_some(), "source")?;
            need(cfg.wave.is_some(), "wave")
        }
        Command::DnCompare | Command::GaugeTest => {
            let want = if cmd == Command::DnCompare {
                "nonuniqueness"
            } else {
                "gradient_pair"
            };
            if experiment_kind != Some(want) {
                return Err(Error::validation(
                    "experiment.kind",
                    format!("command `{cmd}` needs an experiment of kind `{want}`"),
                ));
            }
            Ok(())
        }
    }
}

fn report_of(rep: &HorizonReport) -> Value {
    let mut v = serde_json::to_value(rep.to_json()).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        // the curve goes to its own CSV file
        map.remove("ergosphere");
        map.insert(
            "ergosphere_summary".into(),
            json!({
                "n_points": rep.ergosphere.len(),
                "mean_radius": rep.ergosphere.mean_radius(),
                "min_radius": rep.ergosphere.radii().fold(f64::INFINITY, f64::min),
                "max_radius": rep.ergosphere.radii().fold(0.0, f64::max),
            }),
        );
    }
    v
}

fn run_ergosphere(cfg: &ScenarioConfig, tol: f64, out: &mut Outputs) -> Result<Outcome> {
    let metric = cfg.metric.build()?;
    let h = cfg.horizon_search.as_ref().unwrap().build(tol)?;
    let curve = ergosphere_locus(&metric, h.r_min, h.r_max, h.n_angles)?;
    out.csv("ergosphere.csv".into(), |w| curve.write_csv(w))?;
    let mean = curve.mean_radius();
    out.log(format!("ergosphere points={} mean_radius={mean}", curve.len()));
    Ok(Outcome {
        report: json!({
            "n_points": curve.len(),
            "mean_radius": mean,
            "min_radius": curve.radii().fold(f64::INFINITY, f64::min),
            "max_radius": curve.radii().fold(0.0, f64::max),
            "max_deviation_from_mean": curve.max_radial_deviation(mean),
        }),
        passed: true,
    })
}

fn run_rays(cfg: &ScenarioConfig, tol: f64, out: &mut Outputs) -> Result<Outcome> {
    let h = cfg.horizon_search.as_ref().unwrap().build(tol)?;
    let mut metric = cfg.metric.build()?;
    if !matches!(metric.domain(), Domain::Annulus { .. }) {
        // orbits stop at the search annulus instead of running into r = 0
        metric = metric.with_domain(Domain::Annulus {
            r_min: h.r_min,
            r_max: h.r_max,
        });
    }
    let rays = cfg.rays.as_ref().unwrap();
    let curve = ergosphere_locus(&metric, h.r_min, h.r_max, h.n_angles)?;
    let field = FrameField::from_ergosphere_point(&metric, &curve.points()[0])?;
    let orbit_opts = OrbitOptions {
        ode: OrbitOptions::default().ode.scaled(tol),
        ..OrbitOptions::default()
    };
    let ray_opts = RayOptions {
        ode: RayOptions::default().ode.scaled(tol),
        ..RayOptions::default()
    };
    let mut orbits = Vec::new();
    for (k, &r) in rays.starts.iter().enumerate() {
        let x = [r, 0.0];
        let covs = field.null_covectors(&x)?;
        for family in Family::BOTH {
            let orbit = planar_orbit(&field, &x, family, rays.sigma_max, &orbit_opts)?;
            let lift = lift_time_direction(&field, &orbit)?;
            let violations = lift.iter().filter(|l| l.sign != family.sign()).count();
            out.csv(format!("orbit_{k}_{}.csv", family.name()), |w| orbit.write_csv(w))?;
            let xi = match family {
                Family::Plus => covs.xi_plus,
                Family::Minus => [-covs.xi_minus[0], -covs.xi_minus[1]],
            };
            let path = integrate_ray(&metric, &PhasePoint::new(0.0, &x, 0.0, &xi), rays.s_max, &ray_opts)?;
            out.csv(format!("ray_{k}_{}.csv", family.name()), |w| path.write_csv(w))?;
            let end = orbit.points.last().copied().unwrap_or(x);
            out.log(format!(
                "orbit start={r} family={} samples={} violations={violations}",
                family.name(),
                orbit.points.len()
            ));
            orbits.push(json!({
                "start_radius": r,
                "family": family.name(),
                "samples": orbit.points.len(),
                "termination": orbit.termination,
                "end_radius": end[0].hypot(end[1]),
                "lift_samples": lift.len(),
                "time_sign_violations": violations,
                "ray_max_null_residual": path.max_residual(),
                "ray_xi0_drift": path.xi0_drift(),
                "ray_termination": path.termination,
            }));
        }
    }
    Ok(Outcome {
        report: json!({ "orbits": orbits }),
        passed: true,
    })
}

fn run_horizon(cfg: &ScenarioConfig, tol: f64, out: &mut Outputs, classify_only: bool) -> Result<Outcome> {
    let metric = cfg.metric.build()?;
    let h = cfg.horizon_search.as_ref().unwrap().build(tol)?;
    let rep = horizon_report(&metric, &h)?;
    out.log(format!("horizon cycles={}", rep.cycles.len()));
    if classify_only {
        let cycles: Vec<Value> = rep
            .cycles
            .iter()
            .zip(&rep.classes)
            .map(|(c, k)| {
                json!({
                    "fixed_r": c.fixed_r,
                    "family": c.family,
                    "class": k.map(|k| k.kind),
                    "margin": k.map(|k| k.margin),
                })
            })
            .collect();
        let mut report = json!({ "cycles": cycles, "inner_condition": rep.inner_condition });
        if let Some((lo, hi)) = rep.gordon_inner {
            report["gordon_inner"] = json!([lo, hi]);
        }
        return Ok(Outcome { report, passed: true });
    }
    out.csv("ergosphere.csv".into(), |w| rep.ergosphere.write_csv(w))?;
    for (k, c) in rep.cycles.iter().enumerate() {
        out.csv(format!("cycle_{k}.csv"), |w| c.curve.write_csv(w))?;
    }
    Ok(Outcome {
        report: report_of(&rep),
        passed: true,
    })
}

fn run_wave(cfg: &ScenarioConfig, out: &mut Outputs, dir: &Path) -> Result<Outcome> {
    let metric = cfg.metric.build()?;
    let grid = cfg.grid.as_ref().unwrap().build()?;
    let source = cfg.source.as_ref().unwrap().build()?;
    let wave = cfg.wave.as_ref().unwrap();
    let solver = wave.solver_config()?;
    let run = run_scenario(&metric, grid, solver.clone(), &source, None, &wave.schedule()?)?;
    // artifacts are staged in memory so they join the sorted manifest
    let staging = tempfile_dir(dir)?;
    for path in run.write_artifacts(&staging)? {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.files.insert(name, fs::read(&path)?);
    }
    fs::remove_dir_all(&staging)?;
    let last = run.state.energy_history.last().cloned();
    let mut report = json!({
        "nr": run.grid.nr,
        "ntheta": run.grid.ntheta,
        "dt": run.dt,
        "steps": run.state.steps,
        "t_final": run.state.t,
        "final_energy": last.map(|e| json!({
            "total": e.total, "exterior": e.exterior, "interior": e.interior,
        })),
    });
    if solver.exterior_radius.is_finite() {
        report["trapping_metric"] = json!(trapping_metric(&run.state)?);
    }
    out.log(format!("wave steps={} dt={}", run.state.steps, run.dt));
    Ok(Outcome { report, passed: true })
}

fn tempfile_dir(dir: &Path) -> Result<PathBuf> {
    let staging = dir.join(".staging");
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    Ok(staging)
}

fn run_nonuniqueness(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<Outcome> {
    let e = cfg.experiment.as_ref().unwrap();
    let metric = cfg.metric.build()?;
    let grids = e.grids(cfg.grid.as_ref().unwrap())?;
    let settings = e.settings()?;
    let rep = nonuniqueness_experiment(
        &metric,
        &e.perturbation()?,
        &grids,
        &settings,
        e.exterior_radius.unwrap(),
    )?;
    if let Some((base, pert)) = &rep.finest_traces {
        out.trace("dn_base.csv", base)?;
        out.trace("dn_perturbed.csv", pert)?;
    }
    out.log(format!(
        "nonuniqueness exterior_order={} dn_order={} interior_ratio={} passed={}",
        rep.exterior_order, rep.dn_order, rep.interior_ratio, rep.passed
    ));
    Ok(Outcome {
        report: serde_json::to_value(&rep).unwrap_or(Value::Null),
        passed: rep.passed,
    })
}

fn run_gradient(cfg: &ScenarioConfig, out: &mut Outputs) -> Result<Outcome> {
    let e = cfg.experiment.as_ref().unwrap();
    let grids = e.grids(cfg.grid.as_ref().unwrap())?;
    let settings = e.settings()?;
    let potential = cfg.metric.potential()?;
    let n_index = cfg.metric.n_index.unwrap_or(1.0);
    let rep = gradient_flow_pair(&potential, n_index, e.control_b.unwrap(), &grids, &settings)?;
    if let Some((plus, minus)) = &rep.finest_traces {
        out.trace("dn_plus.csv", plus)?;
        out.trace("dn_minus.csv", minus)?;
    }
    out.log(format!(
        "gradient_pair dn_order={} control_changes={:?} passed={}",
        rep.dn_order, rep.control_changes, rep.passed
    ));
    Ok(Outcome {
        report: serde_json::to_value(&rep).unwrap_or(Value::Null),
        passed: rep.passed,
    })
}

/// Runs `cmd` on `cfg` and writes the report, data files, `run.log` and
/// `manifest.json` into `opts.out_dir`.
///
/// Configuration errors are returned before anything is written. A
/// numerical failure still produces a manifest carrying the error record.
pub fn run_command(cfg: &ScenarioConfig, cmd: Command, opts: &RunOptions) -> Result<RunArtifacts> {
    cfg.validate()?;
    check_requirements(cfg, cmd)?;
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(Error::validation("tol_scale", "must be positive"));
    }
    let format = match opts.format {
        Some(f) => f,
        None => cfg
            .outputs
            .format
            .as_deref()
            .map(Format::parse)
            .transpose()?
            .unwrap_or_default(),
    };
    let tol = opts.tol_scale * cfg.tolerances.scale;
    let dir = opts.out_dir.clone();
    fs::create_dir_all(&dir)?;

    let mut out = Outputs::default();
    out.log(format!("scenario={} command={cmd} tol_scale={tol}", cfg.name));
    let experiment = cfg.experiment.as_ref().map(|e| e.kind.as_str());
    let result = match (cmd, experiment) {
        (Command::Ergosphere, _) => run_ergosphere(cfg, tol, &mut out),
        (Command::Rays, _) => run_rays(cfg, tol, &mut out),
        (Command::Horizon, _) => run_horizon(cfg, tol, &mut out, false),
        (Command::Classify, _) => run_horizon(cfg, tol, &mut out, true),
        (Command::Wave, Some("nonuniqueness")) | (Command::DnCompare, _) => run_nonuniqueness(cfg, &mut out),
        (Command::Wave, Some(_)) | (Command::GaugeTest, _) => run_gradient(cfg, &mut out),
        (Command::Wave, None) => run_wave(cfg, &mut out, &dir),
    };
    let (status, report, error) = match result {
        Ok(o) => {
            let status = if o.passed { RunStatus::Ok } else { RunStatus::Failed };
            (status, o.report, None)
        }
        Err(e) => {
            out.log(format!("error kind={} message={e}", error_kind(&e)));
            let record = ErrorRecord {
                kind: error_kind(&e),
                message: e.to_string(),
            };
            (RunStatus::NumericalError, Value::Null, Some(record))
        }
    };
    if status != RunStatus::NumericalError {
        let stem = match cmd {
            Command::Wave if experiment.is_some() => "experiment",
            _ => cmd.name(),
        };
        let wrapped = json!({ "scenario": cfg.name, "command": cmd, "status": status, "report": report });
        match format {
            Format::Json => {
                let text = serde_json::to_string_pretty(&wrapped).map_err(std::io::Error::other)? + "\n";
                out.files.insert(format!("{stem}.json"), text.into_bytes());
            }
            Format::Csv => {
                out.files
                    .insert(format!("{stem}.csv"), flatten_json(&wrapped).into_bytes());
            }
        }
    }
    out.log(format!(
        "status={}",
        serde_json::to_value(status).unwrap().as_str().unwrap_or("")
    ));
    out.files
        .insert("run.log".into(), (out.log.join("\n") + "\n").into_bytes());

    let mut files = Vec::new();
    for (name, bytes) in &out.files {
        fs::write(dir.join(name), bytes)?;
        files.push(FileRecord {
            path: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        scenario: cfg.name.clone(),
        command: cmd,
        status,
        files,
        error,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n";
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunArtifacts { manifest, dir, report })
}

/// The scenario's own default command, `horizon` when none is set.
pub fn default_command(cfg: &ScenarioConfig) -> Command {
    cfg.command
        .as_deref()
        .and_then(|c| Command::parse(c).ok())
        .unwrap_or(Command::Horizon)
}
