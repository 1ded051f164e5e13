//! Core algorithms for anomalous-behavior detection on attributed behavior graphs.
//!
//! A behavior graph has network entities as nodes and individual behaviors
//! (flows, e-mails) as edges. Detection runs in three stages:
//!
//! 1. [`homology`] builds a Vietoris–Rips filtration over edge attributes,
//!    picks out the persistent structures and pulls the attributes of the
//!    edges inside them toward their common mean.
//! 2. [`embed`] embeds every edge explicitly with a two-layer edge
//!    convolution that keeps the edge's own representation apart from the
//!    aggregate of its neighbors, weighting each neighbor by the cosine
//!    similarity of the two outer endpoints.
//! 3. [`train`] fits the network with a focal loss and Adam, and scores it.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, parsers and the command line live in the `phogad`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod embed;
pub mod error;
pub mod features;
pub mod graph;
pub mod homology;
pub mod linalg;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use graph::{BehaviorGraph, EdgeAdjacencyIndex, EdgeId, Label, NodeId};
