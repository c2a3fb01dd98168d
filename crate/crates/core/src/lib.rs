//! Temporal network growth as a marked self-exciting point process.
//!
//! Events arrive according to an exponential Hawkes ground process and each
//! event carries a mark: the nodes and edges it adds to a growing network.
//! The mark distribution depends on the whole network so far, while the
//! ground intensity depends only on past event times, so the likelihood is
//! available in closed form and simulation works by thinning.
//!
//! * [`dynet`]: the evolving network, change statistics and summary statistics.
//! * [`kernel`]: the exponential ground intensity and its compensator.
//! * [`markmodel`]: BA, change-statistic, block and latent-space mark models.
//! * [`process`]: simulation and stability diagnostics.
//! * [`estimate`]: likelihood, maximum likelihood fitting and replication studies.
//! * [`gof`]: time-rescaled residuals and Kolmogorov-Smirnov tests.
//! * [`ingest`]: event-stream files and contact-list conversion.
//! * [`cli`]: configuration and the command implementations behind the binary.

pub mod cli;
pub mod dynet;
pub mod estimate;
pub mod gof;
pub mod ingest;
pub mod kernel;
pub mod markmodel;
pub mod optim;
pub mod process;

pub use dynet::{DynamicNetwork, Edge, EventRecord, Mark, NodeId};
pub use kernel::GroundParams;
pub use markmodel::{ActivityMode, EdgeScope, MarkModelSpec, MarkVariant, NodeAux};
pub use process::{simulate, ModelSpec, Realization};
