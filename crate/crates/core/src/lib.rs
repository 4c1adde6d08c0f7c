//! Spread blow-up embeddings.
//!
//! The crate covers the whole pipeline: regularity testing and exact-density
//! sparsification of super-regular pairs, uniform and Markov-chain perfect
//! matching samplers with exact pin probabilities, the randomized two-phase
//! blow-up embedding, star partitions of reduced graphs, the Hamilton-cycle
//! power blueprint machinery, and empirical vertex-spread certification.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitset;
pub mod blowup;
pub mod classes;
pub mod error;
pub mod exact;
pub mod flow;
pub mod graph;
pub mod hamilton;
pub mod instances;
pub mod matchings;
pub mod reduced;
pub mod regularity;
pub mod rng;
pub mod spreadstat;

pub use bitset::BitSet;
pub use classes::ClassSystem;
pub use error::{Error, Result, Stage};
pub use graph::{sample_bipartite, sample_gnp, BipartitePair, Graph, Ratio};
pub use rng::RngState;
