use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;

/// Server-only master secret `SK*`.
///
/// Deliberately not `Serialize`; the key database writes it through
/// [`MasterKey::bits`] into its own file.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey(BitString);

impl MasterKey {
    pub fn new(bits: BitString) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterKey({} bits)", self.0.len())
    }
}

/// Flight 1: the server's random challenge `x^s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub x_s: BitString,
}

/// Flight 2: the tag's random nonce `x^t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagNonce {
    pub x_t: BitString,
}

/// One `(σ, δ)` pair of the server broadcast.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerAuthCandidate {
    pub sigma: BitString,
    pub delta: BitString,
}

/// Flight 3: one candidate per registered key slot, in shuffled order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastAuth {
    pub candidates: Vec<ServerAuthCandidate>,
}

/// Flight 4: the tag's `σ'`, real or (on the failure path) random.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagAuth {
    pub sigma_prime: BitString,
}

/// Opaque server-side tag identifier. Never sent on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagLabel(String);

impl TagLabel {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which stored key a server candidate was built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeySlot {
    Current,
    /// The unconfirmed next key left behind by a session that ended without
    /// a valid `σ'`.
    Recovery,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum AuthOutcome {
    Accepted { label: TagLabel, slot: KeySlot },
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuthResult {
    #[serde(flatten)]
    pub outcome: AuthOutcome,
    pub key_updated: bool,
}

impl AuthResult {
    pub fn rejected() -> Self {
        Self {
            outcome: AuthOutcome::Rejected,
            key_updated: false,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self.outcome, AuthOutcome::Accepted { .. })
    }

    pub fn label(&self) -> Option<&TagLabel> {
        match &self.outcome {
            AuthOutcome::Accepted { label, .. } => Some(label),
            AuthOutcome::Rejected => None,
        }
    }

    pub fn slot(&self) -> Option<KeySlot> {
        match &self.outcome {
            AuthOutcome::Accepted { slot, .. } => Some(*slot),
            AuthOutcome::Rejected => None,
        }
    }
}

/// What the tag did with the broadcast.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagOutcome {
    Updated,
    NotUpdated,
}
