//! HTTP API, mock feed service and command-line entry points.

pub mod api;
pub mod cli;
pub mod error;
pub mod feed;

pub use api::{router, AppState};
pub use error::{ApiError, ApiFailure};
