//! KIMAP algorithms and the tag/server state machines.
//!
//! One session is four flights:
//!
//! 1. server → tag: challenge `x^s`
//! 2. tag → server: nonce `x^t`
//! 3. server → tag: broadcast of `(σ, δ)` candidates, one per stored key
//! 4. tag → server: `σ'`
//!
//! The tag never sends an identifier; the server learns which record it
//! talked to by matching `σ'` against the candidates it prepared.

mod algorithms;
mod messages;
mod server;
mod tag;

pub use algorithms::{
    auth_server_tag, auth_tag_msg, derive_slot, key_update, partial_key, session_key, SlotMaterial,
};
pub use messages::{
    AuthOutcome, AuthResult, BroadcastAuth, Challenge, KeySlot, MasterKey, ServerAuthCandidate,
    TagAuth, TagLabel, TagNonce, TagOutcome,
};
pub use server::{keygen, PendingCandidate, PendingSession, Server, TagRecord, DESYNC_STRIKES};
pub use tag::{Tag, TagSnapshot};
