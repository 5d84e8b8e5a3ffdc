//! Configuration files, curve CSVs, VTK snapshots and config-driven runs.

pub mod config;
pub mod csv;
pub mod run;
pub mod vtk;

pub use config::{parse_config, read_config, MeshSource, OutputFormats, OutputOptions, RunConfig};
pub use csv::{read_curve, write_curve, CurveRecord};
pub use run::{exit_code, prepare, run, run_prepared, RunReport};
pub use vtk::{read_vtk, write_vtk, VtkGrid};
