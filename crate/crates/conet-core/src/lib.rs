//! Name-based content networking over an OpenFlow 1.0 domain.
//!
//! The crate has three layers:
//!
//! * protocol primitives — [`naming`], [`wire`], [`ictp`];
//! * the network elements — [`node`] (edge nodes and switches), [`nrs`]
//!   (the controller), [`cache`] (the external cache server), and the
//!   controller's [`northbound`] HTTP interface;
//! * a deterministic discrete-event harness, [`sim`], that wires the
//!   elements into a two-switch testbed and reproduces the three-phase
//!   caching experiment.

pub mod cache;
pub mod ictp;
pub mod naming;
pub mod node;
pub mod northbound;
pub mod nrs;
pub mod sim;
pub mod time;
pub mod trie;
pub mod wire;

pub use naming::ContentName;
pub use wire::{ConetHeader, ConetPacket, DomainTag, PacketFormat};
