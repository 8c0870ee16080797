//! Supply orders between the robot and an art shop.
//!
//! Proposed → {Accepted, Rejected}; Accepted → {Fulfilled, Refunded}. The
//! buyer's payment sits in a per-order escrow account from acceptance until
//! the order reaches a terminal state. A fulfilment attempt after the
//! deadline refunds the buyer instead.

use serde::{Deserialize, Serialize};

use super::{ContractEngine, ContractError};
use crate::ledger::{AccountId, EventCategory, FeePolicy, Posting, Tick, TokenAmount};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Canvas,
    Paint,
    Brush,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderState {
    Proposed,
    Accepted,
    Rejected,
    Fulfilled,
    Refunded,
}

impl OrderState {
    pub fn is_terminal(self) -> bool {
        matches!(self, OrderState::Rejected | OrderState::Fulfilled | OrderState::Refunded)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShopOrder {
    pub order_id: u64,
    pub buyer: AccountId,
    pub shop: AccountId,
    pub composition: Vec<(ItemKind, u32)>,
    pub amount: TokenAmount,
    pub state: OrderState,
    pub deadline: Tick,
    pub escrow: AccountId,
}

/// Result of a fulfilment attempt. `delivered` is empty when the order was
/// refunded instead.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderOutcome {
    pub order: ShopOrder,
    pub delivered: Vec<(ItemKind, u32)>,
}

impl ContractEngine {
    pub fn propose_order(
        &mut self,
        buyer: AccountId,
        shop: AccountId,
        composition: Vec<(ItemKind, u32)>,
        amount: TokenAmount,
        deadline: Tick,
    ) -> Result<ShopOrder, ContractError> {
        if composition.iter().all(|&(_, q)| q == 0) {
            return Err(ContractError::EmptyOrder);
        }
        if amount.is_zero() {
            return Err(ContractError::InvalidParameter("order amount must be positive"));
        }
        self.ledger.balance(shop)?;
        let fee = self.ledger.fee_for(EventCategory::SupplyPurchase);
        self.funds_check(buyer, amount.checked_add(fee)?)?;
        self.atomically(|eng| {
            let order_id = eng.orders.len() as u64;
            let escrow = eng.ledger.create_account(&format!("escrow/order/{order_id}"))?;
            let order = ShopOrder {
                order_id,
                buyer,
                shop,
                composition: composition.into_iter().filter(|&(_, q)| q > 0).collect(),
                amount,
                state: OrderState::Proposed,
                deadline,
                escrow,
            };
            eng.orders.push(order.clone());
            Ok(order)
        })
    }

    /// Shop's answer. Accepting moves the payment into escrow; the buyer
    /// pays the network fee of that transfer.
    pub fn shop_respond(&mut self, order_id: u64, accept: bool, now: Tick) -> Result<ShopOrder, ContractError> {
        let order = self.order(order_id)?.clone();
        if order.state != OrderState::Proposed {
            return Err(ContractError::NotProposed);
        }
        self.atomically(|eng| {
            if accept {
                let memo = format!("order {order_id} payment");
                eng.ledger.post(Posting {
                    from: order.buyer,
                    to: order.escrow,
                    amount: order.amount,
                    category: EventCategory::SupplyPurchase,
                    time: now,
                    memo: &memo,
                    fee: FeePolicy::Schedule,
                })?;
            }
            let o = eng.order_mut(order_id)?;
            o.state = if accept { OrderState::Accepted } else { OrderState::Rejected };
            Ok(o.clone())
        })
    }

    pub fn fulfill_order(&mut self, order_id: u64, now: Tick) -> Result<OrderOutcome, ContractError> {
        let order = self.order(order_id)?.clone();
        if order.state != OrderState::Accepted {
            return Err(ContractError::NotAccepted);
        }
        if now > order.deadline {
            let order = self.refund_order(&order, now)?;
            return Ok(OrderOutcome { order, delivered: Vec::new() });
        }
        self.atomically(|eng| {
            let memo = format!("order {order_id} delivered");
            eng.ledger.post(Posting {
                from: order.escrow,
                to: order.shop,
                amount: order.amount,
                category: EventCategory::SupplyPurchase,
                time: now,
                memo: &memo,
                fee: FeePolicy::Waived,
            })?;
            let o = eng.order_mut(order_id)?;
            o.state = OrderState::Fulfilled;
            Ok(OrderOutcome { order: o.clone(), delivered: order.composition.clone() })
        })
    }

    /// Deadline enforcement: an unanswered proposal lapses to `Rejected`, an
    /// accepted but undelivered order is refunded.
    pub fn expire_order(&mut self, order_id: u64, now: Tick) -> Result<ShopOrder, ContractError> {
        let order = self.order(order_id)?.clone();
        if order.state.is_terminal() {
            return Err(ContractError::OrderTerminal);
        }
        if now <= order.deadline {
            return Err(ContractError::NotExpired);
        }
        match order.state {
            OrderState::Proposed => {
                let o = self.order_mut(order_id)?;
                o.state = OrderState::Rejected;
                Ok(o.clone())
            }
            _ => self.refund_order(&order, now),
        }
    }

    fn refund_order(&mut self, order: &ShopOrder, now: Tick) -> Result<ShopOrder, ContractError> {
        self.atomically(|eng| {
            let memo = format!("order {} refund", order.order_id);
            eng.ledger.post(Posting {
                from: order.escrow,
                to: order.buyer,
                amount: order.amount,
                category: EventCategory::EscrowRelease,
                time: now,
                memo: &memo,
                fee: FeePolicy::Waived,
            })?;
            let o = eng.order_mut(order.order_id)?;
            o.state = OrderState::Refunded;
            Ok(o.clone())
        })
    }

    fn order_mut(&mut self, order_id: u64) -> Result<&mut ShopOrder, ContractError> {
        self.orders
            .get_mut(order_id as usize)
            .ok_or(ContractError::UnknownOrder(order_id))
    }
}
