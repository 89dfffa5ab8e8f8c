//! Finite-difference solution of the wave equation on a polar annulus.

mod grid;
mod operator;
mod run;
mod solver;
mod source;

pub use grid::AnnularGrid;
pub use operator::{cfl_dt, first_order_reduce, OperatorBundle, PolarCoefficients};
pub use run::{read_snapshot, run_scenario, write_energy_csv, RunOutput, RunSchedule, Snapshot, SnapshotMeta};
pub use solver::{trapping_metric, EnergyRecord, Forcing, InnerBoundary, SolverConfig, WaveSolver, WaveState};
pub use source::{boundary_h1_norm_sq, window, BoundaryProfile, Gaussian, InteriorPulse, SourceSpec};
