//! Zero-interest investor loans, repaid greedily in registration order.

use serde::{Deserialize, Serialize};

use super::{ContractEngine, ContractError};
use crate::ledger::{AccountId, EventCategory, FeePolicy, LedgerEvent, Posting, Tick, TokenAmount};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoanRecord {
    pub investor: AccountId,
    pub principal: TokenAmount,
    pub repaid: TokenAmount,
}

impl LoanRecord {
    pub fn outstanding(&self) -> TokenAmount {
        self.principal.saturating_sub(self.repaid)
    }

    pub fn is_settled(&self) -> bool {
        self.repaid == self.principal
    }
}

impl ContractEngine {
    pub fn record_loan(&mut self, investor: AccountId, principal: TokenAmount) -> Result<&LoanRecord, ContractError> {
        self.ledger.balance(investor)?;
        self.loans.push(LoanRecord { investor, principal, repaid: TokenAmount::ZERO });
        Ok(self.loans.last().expect("just pushed"))
    }

    pub fn outstanding_loans(&self) -> TokenAmount {
        self.loans
            .iter()
            .fold(TokenAmount::ZERO, |acc, l| acc.checked_add(l.outstanding()).unwrap_or(acc))
    }

    /// Pays up to `available` toward outstanding loans, oldest first. Network
    /// fees are charged on top of `available`, one per payment.
    pub fn repay_loans(
        &mut self,
        payer: AccountId,
        available: TokenAmount,
        now: Tick,
    ) -> Result<Vec<LedgerEvent>, ContractError> {
        let fee = self.ledger.fee_for(EventCategory::LoanRepayment);
        let mut plan = Vec::new();
        let mut left = available;
        let mut cost = TokenAmount::ZERO;
        for (i, loan) in self.loans.iter().enumerate() {
            if left.is_zero() {
                break;
            }
            let pay = loan.outstanding().min(left);
            if pay.is_zero() {
                continue;
            }
            left = left.checked_sub(pay)?;
            cost = cost.checked_add(pay)?.checked_add(fee)?;
            plan.push((i, pay));
        }
        if plan.is_empty() {
            return Ok(Vec::new());
        }
        self.funds_check(payer, cost)?;
        self.atomically(|eng| {
            let mut events = Vec::with_capacity(plan.len());
            for (i, pay) in plan {
                let memo = format!("loan {i} repayment");
                let investor = eng.loans[i].investor;
                events.push(eng.ledger.post(Posting {
                    from: payer,
                    to: investor,
                    amount: pay,
                    category: EventCategory::LoanRepayment,
                    time: now,
                    memo: &memo,
                    fee: FeePolicy::Schedule,
                })?);
                let loan = &mut eng.loans[i];
                loan.repaid = loan.repaid.checked_add(pay)?;
            }
            Ok(events)
        })
    }
}
