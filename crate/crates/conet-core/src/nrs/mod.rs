//! The Name Routing System: the logically centralized controller that
//! resolves names, allocates domain tags, and drives the switches.

mod controller;
mod messages;

pub use controller::{
    content_cookie, is_content_cookie, ControlTopology, Controller, ControllerEffect,
    ControllerMode, RibEntry, TagMap, CONTENT_COOKIE_KIND, DATA_PRIORITY, MAC_COOKIE, MAC_PRIORITY,
    ORIGIN_PRIORITY, REDIRECT_PRIORITY,
};
pub use messages::{
    decode_control, encode_control, ControlCodecError, ControlMessage, FibExportEntry, NameCount,
    NodeKind, RouteInfo, EXPERIMENTER_ID, EXPERIMENTER_TYPE,
};

use crate::naming::ContentName;
use crate::node::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NrsError {
    #[error("no route covers {0}")]
    NoRoute(ContentName),
    #[error("tag space exhausted")]
    TagSpaceExhausted,
    #[error("{0} is not a registered cache")]
    UnknownCache(NodeId),
}
