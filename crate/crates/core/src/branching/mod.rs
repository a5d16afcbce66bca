//! Particle approximation of the measure-valued diffusion.
//!
//! At resolution `n` each atom carries mass `1/n`, moves with the generator
//! and branches at rate `c n` (binary laws) or `c n^{p-1}` (stable laws).

pub mod cloud;
pub mod gw;
pub mod replicas;
pub mod triplet;

pub use cloud::{step_cloud, CloudStepper, ParticleCloud, StepEvents};
pub use gw::{conditioned_samples, gw_monte_carlo, gw_survival_recursion, GWOracle};
pub use replicas::{run_replicas, MarkedBall, ReplicaConfig, ReplicaOutcome, ReplicaStats, SupportQuantiles};
pub use triplet::{BranchingTriplet, OffspringLaw, OffspringMode, DEFAULT_K_MAX};
