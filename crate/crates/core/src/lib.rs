//! Graph matching by structural-inconsistency reduction.
//!
//! Each graph is turned into a dissimilarity matrix built from truncated
//! heat-diffusion wavelets. A soft correspondence (a doubly stochastic
//! transport plan) is then optimised for the Gromov-Wasserstein objective
//! with KL mirror descent and Sinkhorn projections, and a hard
//! correspondence is read off the final plan.
//!
//! ```
//! use sigma::graph::{self, Graph, Permutation};
//! use sigma::matcher::{blended_truth_plan, sigma_match, InitStrategy, MatchConfig};
//!
//! let g = Graph::unweighted(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 4), (1, 5), (4, 5)])?;
//! let (h, truth) = graph::permute(&g, &Permutation::random(6, 7))?;
//! let cfg = MatchConfig {
//!     init: InitStrategy::Plan(blended_truth_plan(&truth, 0.9)?),
//!     ..MatchConfig::default()
//! };
//! let result = sigma_match(&cfg, &g, &h)?;
//! assert!(result.index_pairs().iter().all(|&(i, j)| truth.apply(i) == j));
//! # Ok::<(), sigma::Error>(())
//! ```

pub mod cli;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod inconsistency;
pub mod matcher;
pub mod oracle;
pub mod report;
pub mod sweep;
pub mod transport;

pub use diffusion::{DissimilarityPair, WaveletParams};
pub use error::{Error, Result};
pub use graph::{Graph, NoiseSpec, Permutation};
pub use matcher::{sigma_match, InitStrategy, MatchConfig, MatchResult};
pub use transport::TransportPlan;
