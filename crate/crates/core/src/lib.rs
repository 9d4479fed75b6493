//! Key-insulated mutual authentication for low-cost RFID tags.
//!
//! The [`protocol`] module holds the tag and server state machines,
//! [`channel`] drives sessions over an adversarial channel, [`games`] runs
//! the privacy experiments and [`cost`] evaluates the timing model.

pub mod bits;
pub mod channel;
pub mod cost;
pub mod db;
pub mod error;
pub mod games;
pub mod hash;
pub mod meter;
pub mod prng;
pub mod protocol;

pub use bits::BitString;
pub use error::{Error, Result};
pub use hash::{HashFn, HashSpec, HashVariant};
pub use prng::Prng;
