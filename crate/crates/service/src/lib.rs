//! HTTP service exchanging `rexp.REXP` payloads: fetch stored objects and
//! call registered functions with protobuf-encoded argument lists.

pub mod http;
pub mod registry;
pub mod store;

pub use http::{router, serve, AppState, ServerHandle, PROTOBUF_CONTENT_TYPE};
pub use registry::{CallError, Registry};
pub use store::ObjectStore;
