//! English auction with escrowed bids.
//!
//! Each accepted bid is moved into the lot's escrow account and the bidder it
//! displaces is refunded in the same transaction, so the escrow always holds
//! exactly the current highest bid. A new bid must reach both the reserve and
//! `highest + min_increment`; with a positive increment two accepted bids can
//! never tie.

use serde::{Deserialize, Serialize};

use super::{ContractEngine, ContractError};
use crate::ledger::{AccountId, EventCategory, FeePolicy, Posting, Tick, TokenAmount};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LotState {
    Created,
    Open,
    Settled,
    Unsold,
    Cancelled,
}

impl LotState {
    pub fn is_terminal(self) -> bool {
        matches!(self, LotState::Settled | LotState::Unsold | LotState::Cancelled)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bid {
    pub bidder: AccountId,
    pub amount: TokenAmount,
    pub time: Tick,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionLot {
    pub lot_id: u64,
    pub token_id: u64,
    pub seller: AccountId,
    pub reserve: TokenAmount,
    pub min_increment: TokenAmount,
    pub duration: Tick,
    pub open_time: Option<Tick>,
    pub close_time: Option<Tick>,
    pub state: LotState,
    pub bids: Vec<Bid>,
    pub highest: Option<Bid>,
    pub platform_fee_bps: u16,
    pub escrow: AccountId,
}

impl AuctionLot {
    /// Smallest amount the next bid must reach; never below one base unit.
    pub fn minimum_bid(&self) -> TokenAmount {
        let floor = self.reserve.max(TokenAmount::from_base(1));
        match &self.highest {
            Some(h) => h
                .amount
                .checked_add(self.min_increment)
                .unwrap_or(TokenAmount::from_base(u128::MAX))
                .max(floor),
            None => floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub lot_id: u64,
    pub token_id: u64,
    pub winner: Option<AccountId>,
    pub price: TokenAmount,
    pub platform_fee: TokenAmount,
    pub seller_proceeds: TokenAmount,
}

impl ContractEngine {
    /// Registers a lot in the `Created` state and locks the token.
    pub fn create_auction(
        &mut self,
        token_id: u64,
        seller: AccountId,
        reserve: TokenAmount,
        min_increment: TokenAmount,
        duration: Tick,
    ) -> Result<AuctionLot, ContractError> {
        if duration == 0 {
            return Err(ContractError::InvalidParameter("auction duration must be positive"));
        }
        if min_increment.is_zero() {
            return Err(ContractError::InvalidParameter("minimum increment must be positive"));
        }
        let token = self.token(token_id)?;
        if token.owner != seller {
            return Err(ContractError::NotOwner);
        }
        if token.locked {
            return Err(ContractError::TokenLocked);
        }
        self.atomically(|eng| {
            let lot_id = eng.lots.len() as u64;
            let escrow = eng.ledger.create_account(&format!("escrow/lot/{lot_id}"))?;
            eng.tokens[token_id as usize].locked = true;
            let lot = AuctionLot {
                lot_id,
                token_id,
                seller,
                reserve,
                min_increment,
                duration,
                open_time: None,
                close_time: None,
                state: LotState::Created,
                bids: Vec::new(),
                highest: None,
                platform_fee_bps: eng.config.platform_fee_bps,
                escrow,
            };
            eng.lots.push(lot.clone());
            Ok(lot)
        })
    }

    /// Moves a `Created` lot to `Open`; bidding runs over `[now, now + duration)`.
    pub fn start_auction(&mut self, lot_id: u64, now: Tick) -> Result<AuctionLot, ContractError> {
        let lot = self.lot_mut(lot_id)?;
        if lot.state != LotState::Created {
            return Err(ContractError::NotCreated);
        }
        lot.state = LotState::Open;
        lot.open_time = Some(now);
        lot.close_time = Some(now + lot.duration);
        Ok(lot.clone())
    }

    pub fn cancel_auction(&mut self, lot_id: u64) -> Result<AuctionLot, ContractError> {
        let lot = self.lot_mut(lot_id)?;
        if lot.state != LotState::Created {
            return Err(ContractError::NotCreated);
        }
        lot.state = LotState::Cancelled;
        let (token_id, lot) = (lot.token_id, lot.clone());
        self.tokens[token_id as usize].locked = false;
        Ok(lot)
    }

    /// Creates and immediately opens a lot.
    pub fn open_auction(
        &mut self,
        token_id: u64,
        seller: AccountId,
        reserve: TokenAmount,
        min_increment: TokenAmount,
        duration: Tick,
        now: Tick,
    ) -> Result<AuctionLot, ContractError> {
        self.atomically(|eng| {
            let lot = eng.create_auction(token_id, seller, reserve, min_increment, duration)?;
            eng.start_auction(lot.lot_id, now)
        })
    }

    pub fn place_bid(
        &mut self,
        lot_id: u64,
        bidder: AccountId,
        amount: TokenAmount,
        time: Tick,
    ) -> Result<Bid, ContractError> {
        let lot = self.lot(lot_id)?;
        match lot.state {
            LotState::Open => {}
            LotState::Created => return Err(ContractError::NotOpen),
            _ => return Err(ContractError::AuctionClosed),
        }
        let (open, close) = (lot.open_time.unwrap_or(0), lot.close_time.unwrap_or(0));
        if time >= close {
            return Err(ContractError::AuctionClosed);
        }
        if time < open {
            return Err(ContractError::NotOpen);
        }
        if bidder == lot.seller {
            return Err(ContractError::SelfBid);
        }
        let minimum = lot.minimum_bid();
        if amount < minimum {
            return Err(ContractError::BidTooLow { minimum });
        }
        let fee = self.ledger.fee_for(EventCategory::EscrowLock);
        self.funds_check(bidder, amount.checked_add(fee).map_err(ContractError::from)?)?;

        let escrow = lot.escrow;
        let previous = lot.highest.clone();
        self.atomically(|eng| {
            let memo = format!("lot {lot_id} bid");
            eng.ledger.post(Posting {
                from: bidder,
                to: escrow,
                amount,
                category: EventCategory::EscrowLock,
                time,
                memo: &memo,
                fee: FeePolicy::Schedule,
            })?;
            if let Some(prev) = &previous {
                let memo = format!("lot {lot_id} outbid refund");
                eng.ledger.post(Posting {
                    from: escrow,
                    to: prev.bidder,
                    amount: prev.amount,
                    category: EventCategory::EscrowRelease,
                    time,
                    memo: &memo,
                    fee: FeePolicy::Waived,
                })?;
            }
            let bid = Bid { bidder, amount, time };
            let lot = eng.lot_mut(lot_id)?;
            lot.bids.push(bid.clone());
            lot.highest = Some(bid.clone());
            Ok(bid)
        })
    }

    /// Settles or withdraws a lot whose bidding window has elapsed.
    ///
    /// With a winner, the escrow pays the full price to the seller (`Sale`)
    /// and the seller pays the platform its basis-point cut (`PlatformFee`),
    /// so the seller nets `price - fee` and the platform receives `fee`.
    pub fn close_auction(&mut self, lot_id: u64, time: Tick) -> Result<SettlementReport, ContractError> {
        let lot = self.lot(lot_id)?;
        if lot.state != LotState::Open {
            return Err(ContractError::NotOpen);
        }
        if time < lot.close_time.unwrap_or(0) {
            return Err(ContractError::TooEarly);
        }
        let lot = lot.clone();
        self.atomically(|eng| {
            let report = match &lot.highest {
                None => {
                    eng.lot_mut(lot_id)?.state = LotState::Unsold;
                    SettlementReport {
                        lot_id,
                        token_id: lot.token_id,
                        winner: None,
                        price: TokenAmount::ZERO,
                        platform_fee: TokenAmount::ZERO,
                        seller_proceeds: TokenAmount::ZERO,
                    }
                }
                Some(win) => {
                    let (net, fee) = win.amount.split_bps(lot.platform_fee_bps)?;
                    let memo = format!("lot {lot_id} sale");
                    eng.ledger.post(Posting {
                        from: lot.escrow,
                        to: lot.seller,
                        amount: win.amount,
                        category: EventCategory::Sale,
                        time,
                        memo: &memo,
                        fee: FeePolicy::Waived,
                    })?;
                    if !fee.is_zero() {
                        let memo = format!("lot {lot_id} platform fee");
                        eng.ledger.post(Posting {
                            from: lot.seller,
                            to: eng.config.platform,
                            amount: fee,
                            category: EventCategory::PlatformFee,
                            time,
                            memo: &memo,
                            fee: FeePolicy::Waived,
                        })?;
                    }
                    eng.transfer_token(lot.token_id, win.bidder, time)?;
                    eng.lot_mut(lot_id)?.state = LotState::Settled;
                    SettlementReport {
                        lot_id,
                        token_id: lot.token_id,
                        winner: Some(win.bidder),
                        price: win.amount,
                        platform_fee: fee,
                        seller_proceeds: net,
                    }
                }
            };
            eng.tokens[lot.token_id as usize].locked = false;
            Ok(report)
        })
    }

    fn lot_mut(&mut self, lot_id: u64) -> Result<&mut AuctionLot, ContractError> {
        self.lots
            .get_mut(lot_id as usize)
            .ok_or(ContractError::UnknownLot(lot_id))
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::ArtworkRef;
    use super::*;

    fn open(f: &mut Fixture, reserve: u64, incr: u64) -> u64 {
        let t = f.engine.mint_token(f.robot, ArtworkRef::of_bytes(b"painting"), 0).unwrap();
        f.engine
            .open_auction(t.token_id, f.robot, tokens(reserve), tokens(incr), 100, 10)
            .unwrap()
            .lot_id
    }

    #[test]
    fn owner_opens_lot() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 10, 1);
        let lot = f.engine.lot(lot).unwrap();
        assert_eq!(lot.state, LotState::Open);
        assert_eq!((lot.open_time, lot.close_time), (Some(10), Some(110)));
        assert!(f.engine.token(lot.token_id).unwrap().locked);
    }

    #[test]
    fn non_owner_cannot_open_and_locked_token_cannot_reopen() {
        let mut f = fixture(Default::default());
        let t = f.engine.mint_token(f.robot, ArtworkRef::of_bytes(b"p"), 0).unwrap();
        assert_eq!(
            f.engine.open_auction(t.token_id, f.alice, tokens(1), tokens(1), 10, 0),
            Err(ContractError::NotOwner)
        );
        f.engine.open_auction(t.token_id, f.robot, tokens(1), tokens(1), 10, 0).unwrap();
        assert_eq!(
            f.engine.open_auction(t.token_id, f.robot, tokens(1), tokens(1), 10, 0),
            Err(ContractError::TokenLocked)
        );
        assert_eq!(f.engine.lots().len(), 1);
    }

    #[test]
    fn reserve_boundary_and_strict_increment() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 10, 1);
        f.engine.place_bid(lot, f.alice, tokens(10), 20).unwrap();
        assert!(matches!(
            f.engine.place_bid(lot, f.bob, tokens(10), 21),
            Err(ContractError::BidTooLow { .. })
        ));
        f.engine.place_bid(lot, f.bob, tokens(11), 21).unwrap();
    }

    #[test]
    fn below_reserve_is_too_low() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 10, 1);
        assert_eq!(
            f.engine.place_bid(lot, f.alice, tokens(9), 20),
            Err(ContractError::BidTooLow { minimum: tokens(10) })
        );
    }

    #[test]
    fn bidding_window_is_half_open() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 1, 1);
        assert_eq!(f.engine.place_bid(lot, f.alice, tokens(5), 110), Err(ContractError::AuctionClosed));
        f.engine.place_bid(lot, f.alice, tokens(5), 109).unwrap();
    }

    #[test]
    fn seller_cannot_bid_and_broke_bidder_rejected() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 1, 1);
        assert_eq!(f.engine.place_bid(lot, f.robot, tokens(5), 20), Err(ContractError::SelfBid));
        assert!(matches!(
            f.engine.place_bid(lot, f.alice, tokens(5000), 20),
            Err(ContractError::InsufficientFunds { .. })
        ));
    }

    #[test]
    fn outbid_bidder_is_refunded_minus_fees() {
        let fee = TokenAmount::from_base(7);
        let mut f = fixture(fee);
        let lot = open(&mut f, 1, 1);
        let start = f.engine.ledger().balance(f.alice).unwrap();
        f.engine.place_bid(lot, f.alice, tokens(5), 20).unwrap();
        f.engine.place_bid(lot, f.bob, tokens(6), 21).unwrap();
        assert_eq!(f.engine.ledger().balance(f.alice).unwrap(), start.checked_sub(fee).unwrap());
        let escrow = f.engine.lot(lot).unwrap().escrow;
        assert_eq!(f.engine.ledger().balance(escrow).unwrap(), tokens(6));
        assert!(f.engine.escrow_violations().is_empty());
    }

    #[test]
    fn unsold_lot_keeps_owner_and_unlocks() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 1, 1);
        assert_eq!(f.engine.close_auction(lot, 50), Err(ContractError::TooEarly));
        let r = f.engine.close_auction(lot, 110).unwrap();
        assert_eq!(r.winner, None);
        let l = f.engine.lot(lot).unwrap();
        assert_eq!(l.state, LotState::Unsold);
        let t = f.engine.token(l.token_id).unwrap();
        assert_eq!(t.owner, f.robot);
        assert!(!t.locked);
        assert_eq!(f.engine.close_auction(lot, 120), Err(ContractError::NotOpen));
    }

    #[test]
    fn settlement_splits_platform_fee() {
        let mut f = fixture(Default::default());
        let lot = open(&mut f, 1, 1);
        let robot_before = f.engine.ledger().balance(f.robot).unwrap();
        f.engine.place_bid(lot, f.alice, tokens(100), 20).unwrap();
        let r = f.engine.close_auction(lot, 110).unwrap();
        assert_eq!(r.winner, Some(f.alice));
        assert_eq!(r.seller_proceeds, TokenAmount::parse_tokens("97.5").unwrap());
        assert_eq!(r.platform_fee, TokenAmount::parse_tokens("2.5").unwrap());
        let robot_after = f.engine.ledger().balance(f.robot).unwrap();
        assert_eq!(robot_after.checked_sub(robot_before).unwrap(), r.seller_proceeds);
        assert_eq!(f.engine.ledger().balance(f.platform).unwrap(), r.platform_fee);
        let l = f.engine.lot(lot).unwrap();
        assert_eq!(f.engine.ledger().balance(l.escrow).unwrap(), TokenAmount::ZERO);
        let t = f.engine.token(l.token_id).unwrap();
        assert_eq!(t.owner, f.alice);
        assert_eq!(t.provenance.len(), 2);
    }

    #[test]
    fn cancel_only_from_created() {
        let mut f = fixture(Default::default());
        let t = f.engine.mint_token(f.robot, ArtworkRef::of_bytes(b"c"), 0).unwrap();
        let lot = f.engine.create_auction(t.token_id, f.robot, tokens(1), tokens(1), 5).unwrap();
        assert_eq!(f.engine.place_bid(lot.lot_id, f.alice, tokens(1), 0), Err(ContractError::NotOpen));
        f.engine.cancel_auction(lot.lot_id).unwrap();
        assert!(!f.engine.token(t.token_id).unwrap().locked);
        assert_eq!(f.engine.start_auction(lot.lot_id, 0), Err(ContractError::NotCreated));
    }
}
