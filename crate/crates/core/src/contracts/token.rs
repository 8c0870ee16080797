use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ContractEngine, ContractError};
use crate::ledger::{AccountId, Tick};

/// Content hash identifying a physical artwork.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArtworkRef(pub [u8; 32]);

impl ArtworkRef {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        ArtworkRef(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for ArtworkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for ArtworkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArtworkRef({self})")
    }
}

impl Serialize for ArtworkRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ArtworkRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(ArtworkRef(out))
    }
}

/// Non-fungible ownership record for one painting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnershipToken {
    pub token_id: u64,
    pub artwork_ref: ArtworkRef,
    pub owner: AccountId,
    /// Every owner in order, starting with the minter.
    pub provenance: Vec<(Tick, AccountId)>,
    /// Set while an auction lot holds the token.
    pub locked: bool,
}

impl ContractEngine {
    pub fn mint_token(
        &mut self,
        minter: AccountId,
        artwork_ref: ArtworkRef,
        now: Tick,
    ) -> Result<OwnershipToken, ContractError> {
        self.ledger.balance(minter)?;
        if self.tokens.iter().any(|t| t.artwork_ref == artwork_ref) {
            return Err(ContractError::DuplicateArtwork(artwork_ref));
        }
        let token = OwnershipToken {
            token_id: self.tokens.len() as u64,
            artwork_ref,
            owner: minter,
            provenance: vec![(now, minter)],
            locked: false,
        };
        self.tokens.push(token.clone());
        Ok(token)
    }

    pub(super) fn transfer_token(&mut self, token_id: u64, to: AccountId, now: Tick) -> Result<(), ContractError> {
        let token = self
            .tokens
            .get_mut(token_id as usize)
            .ok_or(ContractError::UnknownToken(token_id))?;
        token.owner = to;
        token.provenance.push((now, to));
        Ok(())
    }
}
