//! Age of Incorrect Information (AoII) and Cost of Actuation Update (CoAU)
//! for a symmetric N-state Markov source observed through an erasure channel.
//!
//! * [`model`], [`policy`]: source, channel and the four sampling policies
//!   (RS, CARS, SARS, TARS) plus the randomized actuation rule.
//! * [`sim`]: slot-level Monte Carlo with seeded, replayable streams.
//! * [`analytic`]: closed-form long-run metrics.
//! * [`optimize`]: budget-constrained sampling and actuation optima.
//! * [`oracle`]: exact stationary analysis of the truncated joint chain and
//!   exhaustive grid searches, independent of the closed forms.

pub mod analytic;
pub mod error;
pub mod exec;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{ChannelParams, SourceParams, TrajectoryState};
pub use policy::{ActuationPolicy, PolicyKind, SamplingPolicy};
pub use rng::RandomStream;
