//! Experiment configuration, Monte Carlo runs, figure reproduction and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod figures;
pub mod run;
pub mod table;

pub use config::{Connectivity, ExperimentConfig, ExperimentKind, TopologyKind};
pub use figures::{figure_tables, reproduce_figure, Scale};
pub use run::run;
pub use table::{fmt_num, Cell, ResultTable};
