//! Hierarchical organization of tag-annotated photo collections.
//!
//! Images are treated as documents over their auto-tags. A pLSA model finds
//! latent topics, each image is assigned its dominant topic (or Null), topics
//! are named through Lin similarity in a hypernym taxonomy, and externally
//! produced category scores are attached within the chosen topic.

pub mod categories;
pub mod coherence;
pub mod corpus;
pub mod error;
pub mod naming;
pub mod pipeline;
pub mod plsa;
pub mod synthetic;
pub mod tagging;
pub mod taxonomy;

pub use error::{Error, Result};
