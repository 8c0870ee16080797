//! Contract state machines executed against the [`Ledger`].
//!
//! [`ContractEngine`] owns the ledger plus the contract state: the ownership
//! token registry, English auction lots with per-lot escrow, shop orders with
//! per-order escrow, and the investor loan book. Each public operation is a
//! single transaction: on error neither the ledger nor contract state moves.

mod auction;
mod loans;
mod shop;
mod token;

use serde::{Deserialize, Serialize};

use crate::ledger::{AccountId, Ledger, LedgerError, TokenAmount};

pub use auction::{AuctionLot, Bid, LotState, SettlementReport};
pub use loans::LoanRecord;
pub use shop::{ItemKind, OrderOutcome, OrderState, ShopOrder};
pub use token::{ArtworkRef, OwnershipToken};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContractError {
    #[error("artwork {0} already minted")]
    DuplicateArtwork(ArtworkRef),
    #[error("unknown token {0}")]
    UnknownToken(u64),
    #[error("unknown lot {0}")]
    UnknownLot(u64),
    #[error("unknown order {0}")]
    UnknownOrder(u64),
    #[error("account does not own the token")]
    NotOwner,
    #[error("token is locked by an active auction")]
    TokenLocked,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("auction is closed for bidding")]
    AuctionClosed,
    #[error("bid below reserve or minimum increment (minimum {minimum})")]
    BidTooLow { minimum: TokenAmount },
    #[error("seller cannot bid on own lot")]
    SelfBid,
    #[error("insufficient funds: need {needed}, have {available}")]
    InsufficientFunds {
        needed: TokenAmount,
        available: TokenAmount,
    },
    #[error("lot is not open")]
    NotOpen,
    #[error("lot is not in the created state")]
    NotCreated,
    #[error("auction cannot close before its close time")]
    TooEarly,
    #[error("order has no items")]
    EmptyOrder,
    #[error("order is not awaiting a response")]
    NotProposed,
    #[error("order is not accepted")]
    NotAccepted,
    #[error("order deadline has not passed")]
    NotExpired,
    #[error("order already reached a terminal state")]
    OrderTerminal,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

impl ContractError {
    /// Stable machine-readable error name, used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::DuplicateArtwork(_) => "DuplicateArtwork",
            ContractError::UnknownToken(_) => "UnknownToken",
            ContractError::UnknownLot(_) => "UnknownLot",
            ContractError::UnknownOrder(_) => "UnknownOrder",
            ContractError::NotOwner => "NotOwner",
            ContractError::TokenLocked => "TokenLocked",
            ContractError::InvalidParameter(_) => "InvalidParameter",
            ContractError::AuctionClosed => "AuctionClosed",
            ContractError::BidTooLow { .. } => "BidTooLow",
            ContractError::SelfBid => "SelfBid",
            ContractError::InsufficientFunds { .. } => "InsufficientFunds",
            ContractError::NotOpen => "NotOpen",
            ContractError::NotCreated => "NotCreated",
            ContractError::TooEarly => "TooEarly",
            ContractError::EmptyOrder => "EmptyOrder",
            ContractError::NotProposed => "NotProposed",
            ContractError::NotAccepted => "NotAccepted",
            ContractError::NotExpired => "NotExpired",
            ContractError::OrderTerminal => "OrderTerminal",
            ContractError::Ledger(LedgerError::InsufficientFunds { .. }) => "InsufficientFunds",
            ContractError::Ledger(LedgerError::UnknownAccount(_)) => "UnknownAccount",
            ContractError::Ledger(_) => "LedgerError",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractConfig {
    /// Account that receives auction platform fees.
    pub platform: AccountId,
    /// Platform fee in basis points of the hammer price.
    pub platform_fee_bps: u16,
}

pub const DEFAULT_PLATFORM_FEE_BPS: u16 = 250;

#[derive(Clone, Debug)]
pub struct ContractEngine {
    ledger: Ledger,
    config: ContractConfig,
    tokens: Vec<OwnershipToken>,
    lots: Vec<AuctionLot>,
    orders: Vec<ShopOrder>,
    loans: Vec<LoanRecord>,
}

impl ContractEngine {
    pub fn new(ledger: Ledger, config: ContractConfig) -> Result<Self, ContractError> {
        ledger.balance(config.platform)?;
        if config.platform_fee_bps > 10_000 {
            return Err(ContractError::InvalidParameter("platform fee above 100%"));
        }
        Ok(ContractEngine {
            ledger,
            config,
            tokens: Vec::new(),
            lots: Vec::new(),
            orders: Vec::new(),
            loans: Vec::new(),
        })
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Direct ledger access for genesis funding and plain wallet payments.
    pub fn ledger_mut(&mut self) -> &mut Ledger {
        &mut self.ledger
    }

    pub fn config(&self) -> &ContractConfig {
        &self.config
    }

    pub fn tokens(&self) -> &[OwnershipToken] {
        &self.tokens
    }

    pub fn token(&self, token_id: u64) -> Result<&OwnershipToken, ContractError> {
        self.tokens
            .get(token_id as usize)
            .ok_or(ContractError::UnknownToken(token_id))
    }

    pub fn lots(&self) -> &[AuctionLot] {
        &self.lots
    }

    pub fn lot(&self, lot_id: u64) -> Result<&AuctionLot, ContractError> {
        self.lots
            .get(lot_id as usize)
            .ok_or(ContractError::UnknownLot(lot_id))
    }

    pub fn orders(&self) -> &[ShopOrder] {
        &self.orders
    }

    pub fn order(&self, order_id: u64) -> Result<&ShopOrder, ContractError> {
        self.orders
            .get(order_id as usize)
            .ok_or(ContractError::UnknownOrder(order_id))
    }

    pub fn loans(&self) -> &[LoanRecord] {
        &self.loans
    }

    /// Runs `f` over the engine as one transaction: contract state and ledger
    /// are restored together when `f` fails.
    pub fn atomically<T, E>(&mut self, f: impl FnOnce(&mut ContractEngine) -> Result<T, E>) -> Result<T, E> {
        let cp = self.ledger.checkpoint();
        let saved = (
            self.tokens.clone(),
            self.lots.clone(),
            self.orders.clone(),
            self.loans.clone(),
        );
        let out = f(self);
        if out.is_err() {
            self.ledger.rollback(cp);
            (self.tokens, self.lots, self.orders, self.loans) = saved;
        }
        out
    }

    fn funds_check(&self, account: AccountId, needed: TokenAmount) -> Result<(), ContractError> {
        let available = self.ledger.balance(account)?;
        if available < needed {
            return Err(ContractError::InsufficientFunds { needed, available });
        }
        Ok(())
    }

    /// Lists every escrow account whose balance differs from the amount its
    /// contract says is locked. Empty when the escrow invariant holds.
    pub fn escrow_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for lot in &self.lots {
            let expected = match (lot.state, &lot.highest) {
                (LotState::Open, Some(b)) => b.amount,
                _ => TokenAmount::ZERO,
            };
            let held = self.ledger.balance(lot.escrow).unwrap_or(TokenAmount::ZERO);
            if held != expected {
                out.push(format!("lot {} escrow holds {held}, expected {expected}", lot.lot_id));
            }
        }
        for order in &self.orders {
            let expected = if order.state == OrderState::Accepted {
                order.amount
            } else {
                TokenAmount::ZERO
            };
            let held = self.ledger.balance(order.escrow).unwrap_or(TokenAmount::ZERO);
            if held != expected {
                out.push(format!("order {} escrow holds {held}, expected {expected}", order.order_id));
            }
        }
        out
    }
}
