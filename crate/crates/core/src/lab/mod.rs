//! Experiment sweeps, fits and plots.

pub mod config;
pub mod fit;
pub mod plot;
pub mod sweep;
pub mod table;

pub use config::{ExperimentConfig, Mode, Preset, SymbolConfig};
pub use fit::{apply_floor, bound_check, fit_power_law, BoundCheck, PowerLawFit};
pub use plot::{emit_plot, PlotSummary};
pub use sweep::{
    run_edge_sweep, run_gapwatch, run_hausdorff_sweep, run_quasires_sweep, run_sweep, FitSummary, SweepResult,
};
pub use table::Table;
