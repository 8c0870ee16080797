//! Token accounting substrate.
//!
//! A [`Ledger`] holds integer balances keyed by [`AccountId`] and an
//! append-only log of [`LedgerEvent`]s. Every balance change goes through the
//! log, so replaying the log reconstructs the exact state. Transfer fees are
//! paid into an explicit fee-sink account, which keeps total supply constant
//! once genesis minting is sealed.

mod amount;
pub mod log;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use amount::{as_tokens, ParseAmountError, TokenAmount, BASE_UNITS_PER_TOKEN};

/// Simulation timestamp in scheduler ticks.
pub type Tick = u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("account label {0:?} already exists")]
    DuplicateAccount(String),
    #[error("unknown account {0}")]
    UnknownAccount(AccountId),
    #[error("genesis is sealed; minting is no longer allowed")]
    GenesisSealed,
    #[error("insufficient funds in {account}: need {needed}, have {available}")]
    InsufficientFunds {
        account: AccountId,
        needed: TokenAmount,
        available: TokenAmount,
    },
    #[error("transfer amount must be positive")]
    ZeroAmount,
    #[error("transfer source and destination are the same account")]
    SelfTransfer,
    #[error("token arithmetic overflow")]
    Overflow,
    #[error("corrupt event log: {0}")]
    CorruptLog(String),
}

/// Opaque 20-byte account identifier, rendered as hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountId([u8; 20]);

impl AccountId {
    /// Source address of genesis mint events.
    pub const MINT: AccountId = AccountId([0; 20]);

    /// Derives the id for `label` under a ledger `nonce`.
    pub fn derive(nonce: u64, label: &str) -> AccountId {
        let mut hasher = Sha256::new();
        hasher.update(b"easel/account/");
        hasher.update(nonce.to_be_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut id = [0u8; 20];
        id.copy_from_slice(&digest[..20]);
        AccountId(id)
    }

    pub const fn from_bytes(bytes: [u8; 20]) -> Self {
        AccountId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountId({self})")
    }
}

impl FromStr for AccountId {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.strip_prefix("0x").unwrap_or(s);
        let mut id = [0u8; 20];
        hex::decode_to_slice(raw, &mut id)
            .map_err(|_| LedgerError::CorruptLog(format!("bad account id {s:?}")))?;
        Ok(AccountId(id))
    }
}

impl Serialize for AccountId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AccountId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a balance change was for. These map one-to-one onto the markers of
/// the wallet balance chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventCategory {
    Funding,
    Sale,
    SupplyPurchase,
    NetworkFee,
    PlatformFee,
    LoanRepayment,
    EscrowLock,
    EscrowRelease,
    Internal,
}

impl EventCategory {
    pub const ALL: [EventCategory; 9] = [
        EventCategory::Funding,
        EventCategory::Sale,
        EventCategory::SupplyPurchase,
        EventCategory::NetworkFee,
        EventCategory::PlatformFee,
        EventCategory::LoanRepayment,
        EventCategory::EscrowLock,
        EventCategory::EscrowRelease,
        EventCategory::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventCategory::Funding => "Funding",
            EventCategory::Sale => "Sale",
            EventCategory::SupplyPurchase => "SupplyPurchase",
            EventCategory::NetworkFee => "NetworkFee",
            EventCategory::PlatformFee => "PlatformFee",
            EventCategory::LoanRepayment => "LoanRepayment",
            EventCategory::EscrowLock => "EscrowLock",
            EventCategory::EscrowRelease => "EscrowRelease",
            EventCategory::Internal => "Internal",
        }
    }
}

impl fmt::Display for EventCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventCategory {
    type Err = LedgerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| LedgerError::CorruptLog(format!("unknown category {s:?}")))
    }
}

/// One immutable, balance-affecting record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub seq: u64,
    pub time: Tick,
    pub from: AccountId,
    pub to: AccountId,
    pub amount: TokenAmount,
    pub fee: TokenAmount,
    pub category: EventCategory,
    pub memo: String,
}

impl LedgerEvent {
    pub fn is_mint(&self) -> bool {
        self.from == AccountId::MINT
    }

    pub fn touches(&self, account: AccountId, fee_sink: AccountId) -> bool {
        self.from == account || self.to == account || (account == fee_sink && !self.fee.is_zero())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerConfig {
    /// Genesis nonce mixed into every derived account id.
    pub nonce: u64,
    /// Flat fee charged to the payer per event category.
    pub fee_schedule: BTreeMap<EventCategory, TokenAmount>,
}

/// Whether a posting pays the scheduled category fee.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeePolicy {
    Schedule,
    /// Contract custody moves (escrow payouts and refunds) carry no fee.
    Waived,
}

/// A fully specified transfer request.
#[derive(Clone, Debug)]
pub struct Posting<'a> {
    pub from: AccountId,
    pub to: AccountId,
    pub amount: TokenAmount,
    pub category: EventCategory,
    pub time: Tick,
    pub memo: &'a str,
    pub fee: FeePolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TimelineEntry {
    pub seq: u64,
    pub time: Tick,
    pub balance: TokenAmount,
    pub category: EventCategory,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Checkpoint {
    log_len: usize,
    created_len: usize,
    sealed: bool,
}

#[derive(Clone, Debug)]
pub struct Ledger {
    nonce: u64,
    fee_sink: AccountId,
    fee_schedule: BTreeMap<EventCategory, TokenAmount>,
    accounts: BTreeMap<AccountId, TokenAmount>,
    labels: BTreeMap<String, AccountId>,
    created: Vec<(Option<String>, AccountId)>,
    log: Vec<LedgerEvent>,
    sealed: bool,
}

pub const FEE_SINK_LABEL: &str = "fee-sink";

impl Ledger {
    pub fn new(config: LedgerConfig) -> Self {
        let fee_sink = AccountId::derive(config.nonce, FEE_SINK_LABEL);
        let mut ledger = Ledger {
            nonce: config.nonce,
            fee_sink,
            fee_schedule: config.fee_schedule,
            accounts: BTreeMap::new(),
            labels: BTreeMap::new(),
            created: Vec::new(),
            log: Vec::new(),
            sealed: false,
        };
        ledger.accounts.insert(fee_sink, TokenAmount::ZERO);
        ledger.labels.insert(FEE_SINK_LABEL.to_string(), fee_sink);
        ledger
    }

    pub fn nonce(&self) -> u64 {
        self.nonce
    }

    pub fn fee_sink(&self) -> AccountId {
        self.fee_sink
    }

    pub fn fee_for(&self, category: EventCategory) -> TokenAmount {
        self.fee_schedule.get(&category).copied().unwrap_or_default()
    }

    pub fn fee_schedule(&self) -> &BTreeMap<EventCategory, TokenAmount> {
        &self.fee_schedule
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn log(&self) -> &[LedgerEvent] {
        &self.log
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.log.last().map(|e| e.seq)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (AccountId, TokenAmount)> + '_ {
        self.accounts.iter().map(|(k, v)| (*k, *v))
    }

    pub fn account(&self, label: &str) -> Option<AccountId> {
        self.labels.get(label).copied()
    }

    pub fn label_of(&self, id: AccountId) -> Option<&str> {
        self.labels
            .iter()
            .find(|(_, v)| **v == id)
            .map(|(k, _)| k.as_str())
    }

    pub fn create_account(&mut self, label: &str) -> Result<AccountId, LedgerError> {
        if self.labels.contains_key(label) {
            return Err(LedgerError::DuplicateAccount(label.to_string()));
        }
        let id = AccountId::derive(self.nonce, label);
        if id == AccountId::MINT || self.accounts.contains_key(&id) {
            return Err(LedgerError::DuplicateAccount(label.to_string()));
        }
        self.accounts.insert(id, TokenAmount::ZERO);
        self.labels.insert(label.to_string(), id);
        self.created.push((Some(label.to_string()), id));
        Ok(id)
    }

    pub fn balance(&self, id: AccountId) -> Result<TokenAmount, LedgerError> {
        self.accounts
            .get(&id)
            .copied()
            .ok_or(LedgerError::UnknownAccount(id))
    }

    /// Total held across every account, fee sink and escrows included.
    pub fn total_supply(&self) -> TokenAmount {
        TokenAmount::from_base(self.accounts.values().map(|a| a.base_units()).sum())
    }

    /// Closes the genesis phase. Also happens implicitly on the first
    /// non-mint posting.
    pub fn seal_genesis(&mut self) {
        self.sealed = true;
    }

    pub fn mint(
        &mut self,
        to: AccountId,
        amount: TokenAmount,
        category: EventCategory,
        time: Tick,
        memo: &str,
    ) -> Result<LedgerEvent, LedgerError> {
        if self.sealed {
            return Err(LedgerError::GenesisSealed);
        }
        let current = self.balance(to)?;
        let next = current.checked_add(amount)?;
        self.accounts.insert(to, next);
        Ok(self.append(time, AccountId::MINT, to, amount, TokenAmount::ZERO, category, memo))
    }

    /// Transfers with the scheduled category fee and an empty memo.
    pub fn transfer(
        &mut self,
        from: AccountId,
        to: AccountId,
        amount: TokenAmount,
        category: EventCategory,
        time: Tick,
    ) -> Result<LedgerEvent, LedgerError> {
        self.post(Posting {
            from,
            to,
            amount,
            category,
            time,
            memo: "",
            fee: FeePolicy::Schedule,
        })
    }

    /// Applies a posting atomically: either every balance moves or none do.
    pub fn post(&mut self, p: Posting<'_>) -> Result<LedgerEvent, LedgerError> {
        if p.amount.is_zero() {
            return Err(LedgerError::ZeroAmount);
        }
        if p.from == p.to {
            return Err(LedgerError::SelfTransfer);
        }
        let fee = match p.fee {
            FeePolicy::Schedule => self.fee_for(p.category),
            FeePolicy::Waived => TokenAmount::ZERO,
        };
        self.apply_debit_credit(p.from, p.to, p.amount, fee)?;
        Ok(self.append(p.time, p.from, p.to, p.amount, fee, p.category, p.memo))
    }

    /// Debits `amount + fee` from `from`, credits `amount` to `to` and `fee`
    /// to the fee sink. All new balances are computed before any is stored.
    fn apply_debit_credit(
        &mut self,
        from: AccountId,
        to: AccountId,
        amount: TokenAmount,
        fee: TokenAmount,
    ) -> Result<(), LedgerError> {
        let needed = amount.checked_add(fee)?;
        let mut staged: BTreeMap<AccountId, TokenAmount> = BTreeMap::new();
        for id in [from, to, self.fee_sink] {
            staged.insert(id, self.balance(id)?);
        }
        let available = staged[&from];
        if available < needed {
            return Err(LedgerError::InsufficientFunds {
                account: from,
                needed,
                available,
            });
        }
        staged.insert(from, available.checked_sub(needed)?);
        staged.insert(to, staged[&to].checked_add(amount)?);
        staged.insert(self.fee_sink, staged[&self.fee_sink].checked_add(fee)?);
        self.sealed = true;
        self.accounts.extend(staged);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn append(
        &mut self,
        time: Tick,
        from: AccountId,
        to: AccountId,
        amount: TokenAmount,
        fee: TokenAmount,
        category: EventCategory,
        memo: &str,
    ) -> LedgerEvent {
        let event = LedgerEvent {
            seq: self.log.len() as u64,
            time,
            from,
            to,
            amount,
            fee,
            category,
            memo: memo.to_string(),
        };
        self.log.push(event.clone());
        event
    }

    pub(crate) fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            log_len: self.log.len(),
            created_len: self.created.len(),
            sealed: self.sealed,
        }
    }

    /// Undoes every posting and account creation made since `cp`. Only used
    /// to abort a multi-step contract transaction before it commits.
    pub(crate) fn rollback(&mut self, cp: Checkpoint) {
        while self.log.len() > cp.log_len {
            let e = self.log.pop().expect("log longer than checkpoint");
            let sub = |m: &mut BTreeMap<AccountId, TokenAmount>, id, v: TokenAmount| {
                let b = m.get_mut(&id).expect("account present during rollback");
                *b = b.checked_sub(v).expect("rollback restores a prior state");
            };
            sub(&mut self.accounts, e.to, e.amount);
            if !e.is_mint() {
                sub(&mut self.accounts, self.fee_sink, e.fee);
                let b = self.accounts.get_mut(&e.from).expect("payer present");
                *b = b
                    .checked_add(e.amount)
                    .and_then(|b| b.checked_add(e.fee))
                    .expect("rollback restores a prior state");
            }
        }
        for (label, id) in self.created.drain(cp.created_len..) {
            self.accounts.remove(&id);
            if let Some(label) = label {
                self.labels.remove(&label);
            }
        }
        self.sealed = cp.sealed;
    }

    /// Runs `f` as one all-or-nothing transaction over the ledger.
    pub fn atomically<T, E>(&mut self, f: impl FnOnce(&mut Ledger) -> Result<T, E>) -> Result<T, E> {
        let cp = self.checkpoint();
        let out = f(self);
        if out.is_err() {
            self.rollback(cp);
        }
        out
    }

    /// Per-event balance history of one account, in log order.
    pub fn balance_timeline(&self, account: AccountId) -> Result<Vec<TimelineEntry>, LedgerError> {
        self.balance(account)?;
        let mut balance = TokenAmount::ZERO;
        let mut out = Vec::new();
        for e in &self.log {
            if !e.touches(account, self.fee_sink) {
                continue;
            }
            if e.to == account {
                balance = balance.checked_add(e.amount)?;
            }
            if account == self.fee_sink && !e.is_mint() {
                balance = balance.checked_add(e.fee)?;
            }
            if e.from == account {
                balance = balance.checked_sub(e.amount.checked_add(e.fee)?)?;
            }
            out.push(TimelineEntry {
                seq: e.seq,
                time: e.time,
                balance,
                category: e.category,
            });
        }
        Ok(out)
    }

    /// SHA-256 over sorted `(account, balance)` pairs with non-zero balance,
    /// followed by the last sequence number.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for (id, bal) in &self.accounts {
            if bal.is_zero() {
                continue;
            }
            hasher.update(id.as_bytes());
            hasher.update(bal.base_units().to_be_bytes());
        }
        match self.last_seq() {
            Some(seq) => {
                hasher.update([1u8]);
                hasher.update(seq.to_be_bytes());
            }
            None => hasher.update([0u8]),
        }
        hasher.finalize().into()
    }

    /// Rebuilds a ledger from its event log. Account labels are not part of
    /// the log, so the result addresses accounts by id only.
    pub fn replay(config: LedgerConfig, log: &[LedgerEvent]) -> Result<Ledger, LedgerError> {
        let mut ledger = Ledger::new(config);
        let corrupt = |e: &LedgerEvent, why: &str| {
            LedgerError::CorruptLog(format!("event {}: {why}", e.seq))
        };
        for (i, e) in log.iter().enumerate() {
            if e.seq != i as u64 {
                return Err(corrupt(e, &format!("expected seq {i}")));
            }
            if let Some(prev) = ledger.log.last() {
                if e.time < prev.time {
                    return Err(corrupt(e, "time moves backwards"));
                }
            }
            if e.to == AccountId::MINT {
                return Err(corrupt(e, "transfer into the mint address"));
            }
            ledger.ensure_account(e.to);
            if e.is_mint() {
                if !e.fee.is_zero() {
                    return Err(corrupt(e, "mint carries a fee"));
                }
                ledger
                    .mint(e.to, e.amount, e.category, e.time, &e.memo)
                    .map_err(|err| corrupt(e, &err.to_string()))?;
            } else {
                if !ledger.accounts.contains_key(&e.from) {
                    return Err(corrupt(e, "debit from an account with no history"));
                }
                ledger
                    .replay_posting(e)
                    .map_err(|err| corrupt(e, &err.to_string()))?;
            }
        }
        Ok(ledger)
    }

    fn ensure_account(&mut self, id: AccountId) {
        if let std::collections::btree_map::Entry::Vacant(slot) = self.accounts.entry(id) {
            slot.insert(TokenAmount::ZERO);
            self.created.push((None, id));
        }
    }

    fn replay_posting(&mut self, e: &LedgerEvent) -> Result<(), LedgerError> {
        if e.amount.is_zero() {
            return Err(LedgerError::ZeroAmount);
        }
        if e.from == e.to {
            return Err(LedgerError::SelfTransfer);
        }
        self.apply_debit_credit(e.from, e.to, e.amount, e.fee)?;
        self.append(e.time, e.from, e.to, e.amount, e.fee, e.category, &e.memo);
        Ok(())
    }
}
