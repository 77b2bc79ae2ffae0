pub mod bertini;
pub mod dvr;
pub mod error;
pub mod field;
pub mod intalg;
pub mod linalg;
pub mod logalg;
pub mod monoid;
pub mod serde_util;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
