use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::grid::AnnularGrid;
use super::operator::first_order_reduce;
use super::solver::{EnergyRecord, Forcing, SolverConfig, WaveSolver, WaveState};
use super::source::SourceSpec;
use crate::error::{Error, Result};
use crate::metric::SpacetimeMetric;

/// Output schedule of a wave run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSchedule {
    pub t_end: f64,
    pub record_interval: f64,
    pub probes: Vec<[f64; 2]>,
    /// Field snapshots are taken at the first record time at or after each
    /// entry.
    pub snapshot_times: Vec<f64>,
}

impl RunSchedule {
    pub fn new(t_end: f64, record_interval: f64) -> Self {
        Self {
            t_end,
            record_interval,
            probes: Vec::new(),
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Sidecar describing a binary snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotMeta {
    #[serde(rename = "Nr")]
    pub nr: usize,
    #[serde(rename = "Ntheta")]
    pub ntheta: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub t: f64,
}

pub struct RunOutput {
    pub grid: AnnularGrid,
    pub state: WaveState,
    pub dt: f64,
    pub probe_series: Vec<Vec<(f64, f64)>>,
    pub snapshots: Vec<Snapshot>,
}

/// Builds the solver for `metric` on `grid`, excites it with `source` and
/// advances to `schedule.t_end`, sampling probes and snapshots at record
/// times.
pub fn run_scenario(
    metric: &SpacetimeMetric,
    grid: AnnularGrid,
    config: SolverConfig,
    source: &SourceSpec,
    forcing: Option<Forcing>,
    schedule: &RunSchedule,
) -> Result<RunOutput> {
    source.validate()?;
    let op = Arc::new(first_order_reduce(metric, &grid)?);
    let mut solver = WaveSolver::new(op, config);
    if let Some(f) = forcing {
        solver = solver.with_forcing(f);
    }
    match source {
        SourceSpec::BoundaryDirichlet(p) => {
            solver = solver.with_boundary(p.clone());
            solver.set_initial_with(0.0, |_| (0.0, [0.0; 2], 0.0));
        }
        SourceSpec::InteriorPulse(p) => {
            let (wavelength, radius) = p.shortest_wavelength();
            solver.operator().check_resolution(wavelength, radius)?;
            solver.set_pulse(p);
        }
    }
    for p in &schedule.probes {
        if grid.interpolate(&solver.state.u, p).is_none() {
            return Err(Error::validation(
                "probes",
                format!("probe {p:?} lies outside the grid"),
            ));
        }
    }
    let mut probe_series = vec![Vec::new(); schedule.probes.len()];
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = schedule.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let tol = 1e-9 * schedule.record_interval;
    let dt = solver.advance(schedule.t_end, schedule.record_interval, |s| {
        let t = s.state.t;
        for (series, p) in probe_series.iter_mut().zip(&schedule.probes) {
            series.push((t, grid.interpolate(&s.state.u, p).unwrap_or(f64::NAN)));
        }
        while pending.last().is_some_and(|&ts| ts <= t + tol) {
            pending.pop();
            snapshots.push(Snapshot {
                t,
                u: s.state.u.clone(),
            });
        }
        Ok(())
    })?;
    Ok(RunOutput {
        grid,
        state: solver.state,
        dt,
        probe_series,
        snapshots,
    })
}

pub fn write_energy_csv<W: Write>(history: &[EnergyRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,E_total,E_exterior,E_interior,boundary_flux")?;
    for e in history {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.t, e.total, e.exterior, e.interior, e.boundary_flux
        )?;
    }
    Ok(())
}

impl RunOutput {
    pub fn snapshot_meta(&self, t: f64) -> SnapshotMeta {
        SnapshotMeta {
            nr: self.grid.nr,
            ntheta: self.grid.ntheta,
            r_min: self.grid.r_min,
            r_max: self.grid.r_max,
            t,
        }
    }

    /// Writes `energy.csv`, `probe_<k>.csv` and `snapshot_<k>.bin` with a
    /// `.json` sidecar into `dir`; returns the written paths in order.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let path = dir.join("energy.csv");
        let mut buf = Vec::new();
        write_energy_csv(&self.state.energy_history, &mut buf)?;
        fs::write(&path, buf)?;
        out.push(path);
        for (k, series) in self.probe_series.iter().enumerate() {
            let path = dir.join(format!("probe_{k}.csv"));
            let mut buf = Vec::new();
            writeln!(buf, "t,u")?;
            for (t, u) in series {
                writeln!(buf, "{t},{u}")?;
            }
            fs::write(&path, buf)?;
            out.push(path);
        }
        for (k, snap) in self.snapshots.iter().enumerate() {
            let path = dir.join(format!("snapshot_{k}.bin"));
            let bytes: Vec<u8> = snap.u.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(&path, bytes)?;
            out.push(path);
            let path = dir.join(format!("snapshot_{k}.json"));
            let meta = serde_json::to_string_pretty(&self.snapshot_meta(snap.t)).map_err(std::io::Error::other)?;
            fs::write(&path, meta + "\n")?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Reads a snapshot written by [`RunOutput::write_artifacts`].
pub fn read_snapshot(bin: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(bin)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} is not a whole number of f64 values",
            bin.display()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::minkowski;
    use crate::wave::InteriorPulse;

    #[test]
    fn zero_data_stays_zero() {
        let m = minkowski(2);
        let grid = AnnularGrid::new(16, 32, 0.5, 1.5).unwrap();
        let src = SourceSpec::BoundaryDirichlet(crate::wave::BoundaryProfile::multipole(0.0, 2, 1.0));
        let out = run_scenario(
            &m,
            grid,
            SolverConfig::default(),
            &src,
            None,
            &RunSchedule::new(0.5, 0.1),
        )
        .unwrap();
        assert!(out.state.u.iter().all(|&v| v == 0.0));
        assert!(out.state.energy_history.iter().all(|e| e.total == 0.0));
    }

    #[test]
    fn artifacts_round_trip() {
        let m = minkowski(2);
        let grid = AnnularGrid::new(16, 192, 0.5, 1.5).unwrap();
        let src = SourceSpec::InteriorPulse(InteriorPulse::displacement([1.0, 0.0], 0.5, 1.0));
        let mut sched = RunSchedule::new(0.2, 0.1);
        sched.probes.push([1.2, 0.0]);
        sched.snapshot_times.push(0.1);
        let out = run_scenario(&m, grid, SolverConfig::default(), &src, None, &sched).unwrap();
        assert_eq!(out.probe_series[0].len(), 3);
        let dir = tempfile::tempdir().unwrap();
        let files = out.write_artifacts(dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let back = read_snapshot(&dir.path().join("snapshot_0.bin")).unwrap();
        assert_eq!(back, out.snapshots[0].u);
        let meta = fs::read_to_string(dir.path().join("snapshot_0.json")).unwrap();
        assert!(meta.contains("\"Nr\": 16") && meta.contains("\"Ntheta\": 192"));
    }
}
