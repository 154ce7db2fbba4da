//! Bees-algorithm guided service discovery and QoS selection over a simulated
//! peer-to-peer network of service registries.
//!
//! The crate is layered bottom-up:
//!
//! - [`taxonomy`]: concept tree and Wu–Palmer similarity between business
//!   domains.
//! - [`optimizer`]: generic Bees Algorithm engine, GA baseline and benchmark
//!   functions.
//! - [`network`]: registries, services, peer adjacency, probe accounting and
//!   the network file format.
//! - [`qos`]: attribute normalization, weighted scoring and nearest-level
//!   selection.
//! - [`discovery`]: bees-guided registry discovery, the exhaustive sweep and a
//!   GA-driven variant.
//! - [`substitution`]: failure substitution backed by a TTL equivalence cache.
//! - [`scenario`]: scenario files and JSON-lines run reports used by the CLI.

pub mod discovery;
pub mod network;
pub mod optimizer;
pub mod qos;
pub mod scenario;
pub mod substitution;
pub mod taxonomy;

pub use discovery::{
    discover_and_select, discover_registry, exhaustive_discover, DiscoveryError, DiscoveryQuery,
    DiscoveryResult, DiscoveryTrace, StopReason,
};
pub use network::{NetworkError, PeerNetwork, RegistryId, ServiceDescriptor, ServiceId};
pub use optimizer::{bees_optimize, ga_optimize, BeesParams, GaParams, OptimizationReport};
pub use qos::{nearest_qos_service, QosError, QosWeights};
pub use substitution::{substitute, EquivalenceCache, SubstitutionError};
pub use taxonomy::{ConceptId, Taxonomy, TaxonomyError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used by every stochastic component.
pub type SimRng = ChaCha8Rng;

/// Deterministic, platform-independent RNG for `seed`.
pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
