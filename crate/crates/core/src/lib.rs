//! Linear coherent estimation with spatial collaboration in wireless sensor
//! networks.
//!
//! Sensors observe a scalar `theta` through gains `h` and noise of variance
//! `sigma^2`, share observations with their neighbors in a collaboration
//! [`Topology`](topology::Topology), and transmit linear combinations of what
//! they know over a coherent multiple-access channel with gains `g` and noise
//! variance `xi^2`. The crate covers:
//!
//! * [`topology`]: Q-cliques, nearest-neighbor graphs and random geometric graphs.
//! * [`gains`]: gain distributions and the [`SensorField`](gains::SensorField).
//! * [`snapshot`]: optimal and equal energy allocation for one snapshot.
//! * [`asymptotic`]: large-network limits for Q-clique networks.
//! * [`ouprocess`]: periodic sampling and filtering of an Ornstein–Uhlenbeck process.
//! * [`harness`]: seeded Monte Carlo experiments and the `collabsense` CLI.
//!
//! ```
//! use collabsense::gains::SensorField;
//! use collabsense::snapshot::{equal_ea, evaluate, optimal_ea};
//! use collabsense::topology::q_clique;
//!
//! let topo = q_clique(4, 2).unwrap();
//! let field = SensorField::new(vec![1.0; 4], vec![1.0; 4], 1.0, 1.0, 1.0).unwrap();
//! let opt = optimal_ea(&field, &topo, 1.0).unwrap();
//! let eq = evaluate(&field, &equal_ea(&field, &topo, 1.0).unwrap()).unwrap();
//! assert!(opt.fisher >= eq.fisher - 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotic;
pub mod error;
pub mod gains;
pub mod harness;
mod linalg;
pub mod ouprocess;
pub mod rng;
pub mod snapshot;
pub mod topology;

pub use error::{Error, Result};
pub use gains::{GainModel, SensorField};
pub use ouprocess::OUSamplingScheme;
pub use snapshot::{CollaborationMatrix, SnapshotMetrics, Strategy};
pub use topology::Topology;
