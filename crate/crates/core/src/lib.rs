//! Query-by-example discovery of project-join views over collections of
//! tables that carry no key or join metadata.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod index;
pub mod query;
pub mod search;
pub mod selection;
pub mod signals;

#[cfg(test)]
mod testutil;

pub use error::{NifflerError, Result};
