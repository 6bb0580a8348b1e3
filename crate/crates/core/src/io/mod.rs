//! Market-data files, parameter files, reports and run configuration.

pub mod config;
pub mod fixtures;
pub mod report;
pub mod surface_file;

pub use surface_file::{parse_surface, parse_surface_str, serialize_surface, write_surface, StrikeMode, SurfaceFile};
