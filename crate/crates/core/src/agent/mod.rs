//! The robot's paint → auction → collect → restock → repay loop.
//!
//! [`Simulation`] is a discrete-event scheduler and the single writer over
//! the contract engine. Events are ordered by `(tick, sequence)`; bids from
//! outside (the gateway) go through [`Simulation::submit_bid`], the same path
//! the scripted bidders use.

mod scenario;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contracts::{
    ArtworkRef, Bid, ContractConfig, ContractEngine, ContractError, LotState, OrderState, SettlementReport,
};
use crate::ledger::{
    log::{encode_log, log_hash},
    AccountId, EventCategory, FeePolicy, Ledger, LedgerConfig, LedgerError, Posting, Tick, TokenAmount,
};
use crate::pipeline::{resolve_topic, run_pipeline, PipelineError, PipelineOutput, PipelineSummary};
use crate::topic::{FixtureTranslations, FixtureTrends, StrokeFont, Topic, TopicError};

pub use scenario::{
    AuctionConfig, BidderConfig, Inventory, InvestorConfig, RobotConfig, Scenario, SessionConfig, ShopConfig, Strategy,
    DEFAULT_HORIZON,
};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("out of supplies: {0:?}")]
    OutOfSupplies(Inventory),
    #[error("stage {0:?} does not permit production")]
    NotReady(Stage),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("deadlock at tick {tick}: {diagnostic}")]
    Deadlock { tick: Tick, diagnostic: String },
    #[error("unknown session")]
    UnknownSession,
    #[error("writing artifacts: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Stage {
    Funding,
    Producing,
    Auctioning,
    Settling,
    Restocking,
    Repaying,
    Idle,
}

impl Stage {
    /// Edges of the lifecycle graph.
    pub fn can_follow(self, prev: Stage) -> bool {
        use Stage::*;
        matches!(
            (prev, self),
            (Funding, Producing)
                | (Funding, Idle)
                | (Producing, Auctioning)
                | (Auctioning, Settling)
                | (Settling, Restocking | Repaying | Producing | Idle)
                | (Restocking, Repaying | Producing | Idle)
                | (Repaying, Producing | Idle)
                | (Idle, Producing)
        )
    }

    fn permits_production(self) -> bool {
        Stage::Producing.can_follow(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgentState {
    pub wallet: AccountId,
    pub inventory: Inventory,
    pub stage: Stage,
    pub paintings_completed: u32,
    pub canvases_acquired: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BidderAgent {
    pub label: String,
    pub account: AccountId,
    pub budget: TokenAmount,
    pub strategy: Strategy,
    pub reaction: Tick,
    pub jitter: Tick,
    /// Sum of winning prices so far.
    pub spent: TokenAmount,
}

#[derive(Clone, Debug)]
pub struct PaintingRecord {
    pub index: u32,
    pub produced_at: Tick,
    pub token_id: u64,
    pub lot_id: u64,
    pub output: PipelineOutput,
    pub settlement: Option<SettlementReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    StartProduction,
    CloseLot(u64),
    BidderWake { bidder: usize, lot: u64 },
    ShopRespond(u64),
    ShopDeliver(u64),
    OrderDeadline(u64),
}

/// What the last call to [`Simulation::step`] did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Processed(Tick),
    Finished,
}

pub struct Simulation {
    scenario: Scenario,
    engine: ContractEngine,
    state: AgentState,
    bidders: Vec<BidderAgent>,
    sessions: BTreeMap<String, AccountId>,
    investors: Vec<AccountId>,
    shop: AccountId,
    queue: BinaryHeap<Reverse<(Tick, u64, Event)>>,
    next_seq: u64,
    now: Tick,
    rng: ChaCha8Rng,
    font: StrokeFont,
    trends: FixtureTrends,
    translations: FixtureTranslations,
    stage_trace: Vec<(Tick, Stage)>,
    paintings: Vec<PaintingRecord>,
    current_lot: Option<u64>,
    order_in_flight: Option<u64>,
}

impl Simulation {
    /// Genesis: creates and funds every account, then the investors lend to
    /// the robot at tick 0.
    pub fn new(scenario: Scenario) -> Result<Simulation, AgentError> {
        scenario.validate()?;
        let mut ledger = Ledger::new(LedgerConfig { nonce: scenario.seed, fee_schedule: scenario.fee_schedule()? });
        let wallet = ledger.create_account(&scenario.robot.label)?;
        let shop = ledger.create_account(&scenario.shop.label)?;
        let platform = ledger.create_account(&scenario.auction.platform_label)?;
        if !scenario.robot.initial_balance.is_zero() {
            ledger.mint(wallet, scenario.robot.initial_balance, EventCategory::Funding, 0, "robot genesis")?;
        }
        let mut investors = Vec::new();
        for inv in &scenario.investors {
            let id = ledger.create_account(&inv.label)?;
            if !inv.balance.is_zero() {
                ledger.mint(id, inv.balance, EventCategory::Funding, 0, "investor genesis")?;
            }
            investors.push(id);
        }
        let mut bidders = Vec::new();
        for b in &scenario.bidders {
            let id = ledger.create_account(&b.label)?;
            if !b.balance.is_zero() {
                ledger.mint(id, b.balance, EventCategory::Internal, 0, "bidder genesis")?;
            }
            bidders.push(BidderAgent {
                label: b.label.clone(),
                account: id,
                budget: b.budget,
                strategy: b.strategy.clone(),
                reaction: b.reaction,
                jitter: b.jitter,
                spent: TokenAmount::ZERO,
            });
        }
        let mut sessions = BTreeMap::new();
        for s in &scenario.sessions {
            let id = ledger.create_account(&s.label)?;
            if !s.balance.is_zero() {
                ledger.mint(id, s.balance, EventCategory::Internal, 0, "session genesis")?;
            }
            sessions.insert(s.token.clone(), id);
        }
        ledger.seal_genesis();

        let config = ContractConfig { platform, platform_fee_bps: scenario.auction.platform_fee_bps };
        let mut engine = ContractEngine::new(ledger, config)?;
        for (inv, &id) in scenario.investors.iter().zip(&investors) {
            if inv.loan.is_zero() {
                continue;
            }
            engine.atomically(|eng| {
                eng.ledger_mut().post(Posting {
                    from: id,
                    to: wallet,
                    amount: inv.loan,
                    category: EventCategory::Funding,
                    time: 0,
                    memo: &format!("loan from {}", inv.label),
                    fee: FeePolicy::Schedule,
                })?;
                eng.record_loan(id, inv.loan).map(|_| ())
            })?;
        }

        let state = AgentState {
            wallet,
            inventory: scenario.robot.inventory,
            stage: Stage::Funding,
            paintings_completed: 0,
            canvases_acquired: 0,
        };
        let font = match &scenario.font {
            Some(path) => StrokeFont::load(path)?,
            None => StrokeFont::builtin(),
        };
        let mut sim = Simulation {
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            scenario,
            engine,
            state,
            bidders,
            sessions,
            investors,
            shop,
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
            font,
            trends: FixtureTrends::builtin(),
            translations: FixtureTranslations::builtin(),
            stage_trace: vec![(0, Stage::Funding)],
            paintings: Vec::new(),
            current_lot: None,
            order_in_flight: None,
        };
        sim.schedule(0, Event::StartProduction);
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn engine(&self) -> &ContractEngine {
        &self.engine
    }

    pub fn ledger(&self) -> &Ledger {
        self.engine.ledger()
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    pub fn bidders(&self) -> &[BidderAgent] {
        &self.bidders
    }

    pub fn investors(&self) -> &[AccountId] {
        &self.investors
    }

    pub fn session_account(&self, token: &str) -> Option<AccountId> {
        self.sessions.get(token).copied()
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn stage_trace(&self) -> &[(Tick, Stage)] {
        &self.stage_trace
    }

    pub fn paintings(&self) -> &[PaintingRecord] {
        &self.paintings
    }

    pub fn painting_for_lot(&self, lot_id: u64) -> Option<&PaintingRecord> {
        self.paintings.iter().find(|p| p.lot_id == lot_id)
    }

    pub fn next_event_tick(&self) -> Option<Tick> {
        self.queue.peek().map(|Reverse((t, _, _))| *t)
    }

    /// True once every painting is produced and nothing is left to happen.
    pub fn is_finished(&self) -> bool {
        self.queue.is_empty()
    }

    fn schedule(&mut self, tick: Tick, event: Event) {
        self.queue.push(Reverse((tick, self.next_seq, event)));
        self.next_seq += 1;
    }

    fn enter(&mut self, stage: Stage) {
        if self.state.stage != stage {
            debug_assert!(stage.can_follow(self.state.stage), "{:?} -> {stage:?}", self.state.stage);
            self.state.stage = stage;
            self.stage_trace.push((self.now, stage));
        }
    }

    fn reaction_delay(&mut self, bidder: usize) -> Tick {
        let b = &self.bidders[bidder];
        let (base, jitter) = (b.reaction, b.jitter);
        base + if jitter > 0 { self.rng.random_range(0..=jitter) } else { 0 }
    }

    /// Processes the next queued event.
    pub fn step(&mut self) -> Result<StepOutcome, AgentError> {
        let Some(Reverse((tick, _, event))) = self.queue.pop() else {
            return Ok(StepOutcome::Finished);
        };
        if tick > self.scenario.horizon {
            self.queue.push(Reverse((tick, 0, event)));
            return Err(self.deadlock("next event lies beyond the horizon"));
        }
        self.now = self.now.max(tick);
        match event {
            Event::StartProduction => self.on_start_production()?,
            Event::CloseLot(lot) => self.on_close(lot)?,
            Event::BidderWake { bidder, lot } => self.on_bidder_wake(bidder, lot)?,
            Event::ShopRespond(order) => self.on_shop_respond(order)?,
            Event::ShopDeliver(order) => self.on_shop_deliver(order)?,
            Event::OrderDeadline(order) => self.on_order_deadline(order)?,
        }
        Ok(StepOutcome::Processed(tick))
    }

    /// Processes every event due at or before `tick`, then moves the clock
    /// there. Used for paced runs.
    pub fn advance_to(&mut self, tick: Tick) -> Result<(), AgentError> {
        while self.next_event_tick().is_some_and(|t| t <= tick) {
            self.step()?;
        }
        self.now = self.now.max(tick.min(self.scenario.horizon));
        Ok(())
    }

    /// Runs until the queue drains. The target must have been reached.
    pub fn run(&mut self) -> Result<RunReport, AgentError> {
        while let StepOutcome::Processed(_) = self.step()? {}
        self.finish()
    }

    /// Final report; a deadlock if the run ended short of its target.
    pub fn finish(&self) -> Result<RunReport, AgentError> {
        if self.state.paintings_completed < self.scenario.target_paintings || self.current_lot.is_some() {
            return Err(self.deadlock("no enabled event left before the target was reached"));
        }
        Ok(self.report())
    }

    fn deadlock(&self, why: &str) -> AgentError {
        let balance = self.ledger().balance(self.state.wallet).unwrap_or_default();
        AgentError::Deadlock {
            tick: self.now,
            diagnostic: format!(
                "{why}; stage {:?}, paintings {}/{}, inventory {:?}, balance {}, order in flight {:?}, outstanding loans {}",
                self.state.stage,
                self.state.paintings_completed,
                self.scenario.target_paintings,
                self.state.inventory,
                balance.to_token_string(),
                self.order_in_flight,
                self.engine.outstanding_loans().to_token_string(),
            ),
        }
    }

    fn has_supplies(&self) -> bool {
        let inv = &self.state.inventory;
        inv.canvases >= 1
            && inv.paint_units >= self.scenario.robot.paint_per_painting.max(1)
            && inv.brushes >= self.scenario.robot.brushes_per_painting.max(1)
    }

    fn on_start_production(&mut self) -> Result<(), AgentError> {
        if self.state.paintings_completed >= self.scenario.target_paintings || self.current_lot.is_some() {
            return Ok(());
        }
        if !self.has_supplies() {
            self.enter(Stage::Idle);
            return Ok(());
        }
        self.run_cycle().map(|_| ())
    }

    /// Paints the next topic, mints its token and opens the auction, all at
    /// the current tick. Nothing changes if any step fails.
    pub fn run_cycle(&mut self) -> Result<&PaintingRecord, AgentError> {
        if !self.state.stage.permits_production() {
            return Err(AgentError::NotReady(self.state.stage));
        }
        if !self.has_supplies() {
            return Err(AgentError::OutOfSupplies(self.state.inventory));
        }
        let index = self.state.paintings_completed;
        let topics = &self.scenario.topics;
        let query = &topics[index as usize % topics.len()];
        let topic = resolve_topic(query, &self.trends, &self.translations)?;
        let output = self.paint(&topic, index)?;

        let now = self.now;
        let wallet = self.state.wallet;
        let auction = self.scenario.auction.clone();
        let mut art = output.painted.to_pbm();
        art.extend_from_slice(&index.to_be_bytes());
        let (token_id, lot) = self.engine.atomically(|eng| -> Result<_, AgentError> {
            let gas = eng.ledger().fee_for(EventCategory::NetworkFee);
            let token = eng.mint_token(wallet, ArtworkRef::of_bytes(&art), now)?;
            pay_gas(eng, wallet, gas, now, &format!("mint token {}", token.token_id))?;
            let lot = eng.open_auction(token.token_id, wallet, auction.reserve, auction.min_increment, auction.duration, now)?;
            pay_gas(eng, wallet, gas, now, &format!("list lot {}", lot.lot_id))?;
            Ok((token.token_id, lot))
        })?;

        let inv = &mut self.state.inventory;
        inv.canvases -= 1;
        inv.paint_units -= self.scenario.robot.paint_per_painting;
        inv.brushes -= self.scenario.robot.brushes_per_painting;
        self.state.paintings_completed += 1;
        self.current_lot = Some(lot.lot_id);
        self.enter(Stage::Producing);
        self.enter(Stage::Auctioning);

        let close = lot.close_time.expect("open lot has a close time");
        self.schedule(close, Event::CloseLot(lot.lot_id));
        for i in 0..self.bidders.len() {
            let at = match self.bidders[i].strategy {
                Strategy::Sniper { delay } => close.saturating_sub(delay.max(1)).max(now),
                _ => now + self.reaction_delay(i),
            };
            self.schedule(at, Event::BidderWake { bidder: i, lot: lot.lot_id });
        }
        self.paintings.push(PaintingRecord {
            index,
            produced_at: now,
            token_id,
            lot_id: lot.lot_id,
            output,
            settlement: None,
        });
        Ok(self.paintings.last().expect("just pushed"))
    }

    fn paint(&self, topic: &Topic, index: u32) -> Result<PipelineOutput, AgentError> {
        let seed = self.scenario.seed.wrapping_add(u64::from(index));
        Ok(run_pipeline(topic, &self.scenario.pipeline, &self.font, seed)?)
    }

    /// Places a bid for `bidder` at the current tick through the contract,
    /// then lets the scripted bidders react.
    pub fn submit_bid(&mut self, bidder: AccountId, lot_id: u64, amount: TokenAmount) -> Result<Bid, AgentError> {
        let bid = self.engine.place_bid(lot_id, bidder, amount, self.now)?;
        for i in 0..self.bidders.len() {
            if self.bidders[i].account == bidder || matches!(self.bidders[i].strategy, Strategy::Sniper { .. }) {
                continue;
            }
            let at = self.now + self.reaction_delay(i);
            self.schedule(at, Event::BidderWake { bidder: i, lot: lot_id });
        }
        Ok(bid)
    }

    /// Bid through a session token, as the gateway does.
    pub fn submit_session_bid(&mut self, token: &str, lot_id: u64, amount: TokenAmount) -> Result<Bid, AgentError> {
        let account = self.session_account(token).ok_or(AgentError::UnknownSession)?;
        self.submit_bid(account, lot_id, amount)
    }

    /// Amount still available to a bidder for `lot_id`: budget minus what
    /// it has won and what it has locked on other lots.
    fn headroom(&self, bidder: usize, lot_id: u64) -> TokenAmount {
        let b = &self.bidders[bidder];
        let locked_elsewhere = self
            .engine
            .lots()
            .iter()
            .filter(|l| l.lot_id != lot_id && l.state == LotState::Open)
            .filter_map(|l| l.highest.as_ref().filter(|h| h.bidder == b.account))
            .fold(TokenAmount::ZERO, |acc, h| acc.checked_add(h.amount).unwrap_or(acc));
        b.budget.saturating_sub(b.spent).saturating_sub(locked_elsewhere)
    }

    fn on_bidder_wake(&mut self, bidder: usize, lot_id: u64) -> Result<(), AgentError> {
        let lot = self.engine.lot(lot_id)?;
        let account = self.bidders[bidder].account;
        if lot.state != LotState::Open || self.now >= lot.close_time.unwrap_or(0) {
            return Ok(());
        }
        if lot.highest.as_ref().is_some_and(|h| h.bidder == account) {
            return Ok(());
        }
        let minimum = lot.minimum_bid();
        let headroom = self.headroom(bidder, lot_id);
        let (amount, cap) = match &self.bidders[bidder].strategy {
            Strategy::Sniper { .. } => (minimum, headroom),
            Strategy::Incremental { step } => {
                let raised = match &lot.highest {
                    Some(h) => h.amount.checked_add(*step)?.max(minimum),
                    None => minimum,
                };
                (raised, headroom)
            }
            Strategy::Limit { max } => (minimum, headroom.min(*max)),
        };
        if amount > cap {
            return Ok(());
        }
        match self.submit_bid(account, lot_id, amount) {
            Ok(_) => Ok(()),
            // A bidder that cannot afford the fee simply stays out.
            Err(AgentError::Contract(ContractError::InsufficientFunds { .. })) => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn on_close(&mut self, lot_id: u64) -> Result<(), AgentError> {
        let report = self.engine.close_auction(lot_id, self.now)?;
        self.enter(Stage::Settling);
        self.current_lot = None;
        if let Some(winner) = report.winner {
            if let Some(b) = self.bidders.iter_mut().find(|b| b.account == winner) {
                b.spent = b.spent.checked_add(report.price)?;
            }
        }
        if let Some(p) = self.paintings.iter_mut().find(|p| p.lot_id == lot_id) {
            p.settlement = Some(report.clone());
        }

        if let Some((composition, amount)) = self.restock_policy() {
            let deadline = self.now + self.scenario.shop.deadline;
            match self.engine.propose_order(self.state.wallet, self.shop, composition, amount, deadline) {
                Ok(order) => {
                    self.order_in_flight = Some(order.order_id);
                    self.enter(Stage::Restocking);
                    self.schedule(self.now + self.scenario.shop.response_delay, Event::ShopRespond(order.order_id));
                    self.schedule(deadline + 1, Event::OrderDeadline(order.order_id));
                }
                Err(ContractError::InsufficientFunds { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }

        if report.winner.is_some() {
            if let Some(pay) = self.repayment_policy() {
                let events = self.engine.repay_loans(self.state.wallet, pay, self.now)?;
                if !events.is_empty() {
                    self.enter(Stage::Repaying);
                }
            }
        }

        if self.state.paintings_completed < self.scenario.target_paintings && self.has_supplies() {
            self.schedule(self.now, Event::StartProduction);
        } else {
            self.enter(Stage::Idle);
        }
        Ok(())
    }

    /// Supply bundle to order: only when the canvas counter has reached one
    /// and no order is pending.
    pub fn restock_policy(&self) -> Option<(Vec<(crate::contracts::ItemKind, u32)>, TokenAmount)> {
        if self.state.inventory.canvases == 1 && self.order_in_flight.is_none() {
            Some((self.scenario.shop.bundle.composition(), self.scenario.shop.bundle_price))
        } else {
            None
        }
    }

    /// How much to put toward the loans: the balance above the reserve
    /// floor, less one repayment fee per open loan, capped at what is owed.
    pub fn repayment_policy(&self) -> Option<TokenAmount> {
        let outstanding = self.engine.outstanding_loans();
        if outstanding.is_zero() {
            return None;
        }
        let balance = self.ledger().balance(self.state.wallet).ok()?;
        let open_loans = self.engine.loans().iter().filter(|l| !l.is_settled()).count() as u128;
        let fees = self.ledger().fee_for(EventCategory::LoanRepayment).checked_mul(open_loans).ok()?;
        let surplus = balance.saturating_sub(self.scenario.reserve_floor()).saturating_sub(fees);
        let pay = surplus.min(outstanding);
        (!pay.is_zero()).then_some(pay)
    }

    fn on_shop_respond(&mut self, order_id: u64) -> Result<(), AgentError> {
        if self.engine.order(order_id)?.state != OrderState::Proposed {
            return Ok(());
        }
        let accept = self.scenario.shop.accepts;
        let order = match self.engine.shop_respond(order_id, accept, self.now) {
            Ok(o) => o,
            // The buyer can no longer pay; the shop turns the order down.
            Err(ContractError::Ledger(LedgerError::InsufficientFunds { .. })) => {
                self.engine.shop_respond(order_id, false, self.now)?
            }
            Err(e) => return Err(e.into()),
        };
        if order.state == OrderState::Accepted {
            self.schedule(self.now + self.scenario.shop.delivery_delay, Event::ShopDeliver(order_id));
        } else {
            self.order_in_flight = None;
        }
        Ok(())
    }

    fn on_shop_deliver(&mut self, order_id: u64) -> Result<(), AgentError> {
        if self.engine.order(order_id)?.state != OrderState::Accepted {
            return Ok(());
        }
        let outcome = self.engine.fulfill_order(order_id, self.now)?;
        for &(kind, qty) in &outcome.delivered {
            self.state.inventory.add(kind, qty);
            if kind == crate::contracts::ItemKind::Canvas {
                self.state.canvases_acquired += qty;
            }
        }
        self.order_in_flight = None;
        self.resume_if_idle();
        Ok(())
    }

    fn on_order_deadline(&mut self, order_id: u64) -> Result<(), AgentError> {
        if self.engine.order(order_id)?.state.is_terminal() {
            return Ok(());
        }
        self.engine.expire_order(order_id, self.now)?;
        self.order_in_flight = None;
        Ok(())
    }

    fn resume_if_idle(&mut self) {
        if self.state.stage == Stage::Idle
            && self.current_lot.is_none()
            && self.state.paintings_completed < self.scenario.target_paintings
            && self.has_supplies()
        {
            self.schedule(self.now, Event::StartProduction);
        }
    }

    pub fn report(&self) -> RunReport {
        let ledger = self.ledger();
        let closure = economic_closure(ledger, self.state.wallet);
        RunReport {
            seed: self.scenario.seed,
            end_tick: self.now,
            final_stage: self.state.stage,
            paintings_completed: self.state.paintings_completed,
            inventory: self.state.inventory,
            wallet: self.state.wallet,
            final_balance: ledger.balance(self.state.wallet).unwrap_or_default(),
            log_sha256: hex::encode(log_hash(ledger.log())),
            events: ledger.log().len(),
            sales: self.paintings.iter().filter(|p| p.settlement.as_ref().is_some_and(|s| s.winner.is_some())).count(),
            loans: self
                .engine
                .loans()
                .iter()
                .map(|l| LoanSummary { investor: l.investor, principal: l.principal, repaid: l.repaid })
                .collect(),
            paintings: self
                .paintings
                .iter()
                .map(|p| PaintingSummary {
                    index: p.index,
                    produced_at: p.produced_at,
                    token_id: p.token_id,
                    lot_id: p.lot_id,
                    winner: p.settlement.as_ref().and_then(|s| s.winner),
                    price: p.settlement.as_ref().map(|s| s.price).unwrap_or_default(),
                    pipeline: p.output.summary(),
                })
                .collect(),
            closure,
        }
    }

    /// Robot wallet balance history as `time,balance,category` rows.
    pub fn timeline_csv(&self) -> Result<String, AgentError> {
        let mut out = String::from("time,balance,category\n");
        for e in self.ledger().balance_timeline(self.state.wallet)? {
            out.push_str(&format!("{},{},{}\n", e.time, e.balance, e.category));
        }
        Ok(out)
    }

    /// Event log, wallet timeline and per-painting artifacts.
    pub fn write_bundle(&self, dir: &Path) -> Result<(), AgentError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("events.log"), encode_log(self.ledger().log()))?;
        fs::write(dir.join("timeline.csv"), self.timeline_csv()?)?;
        for p in &self.paintings {
            p.output.write_artifacts(&dir.join(format!("painting-{}", p.index)))?;
        }
        Ok(())
    }
}

fn pay_gas(eng: &mut ContractEngine, wallet: AccountId, gas: TokenAmount, now: Tick, memo: &str) -> Result<(), AgentError> {
    if gas.is_zero() {
        return Ok(());
    }
    let sink = eng.ledger().fee_sink();
    eng.ledger_mut().post(Posting {
        from: wallet,
        to: sink,
        amount: gas,
        category: EventCategory::NetworkFee,
        time: now,
        memo,
        fee: FeePolicy::Waived,
    })?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoanSummary {
    pub investor: AccountId,
    pub principal: TokenAmount,
    pub repaid: TokenAmount,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaintingSummary {
    pub index: u32,
    pub produced_at: Tick,
    pub token_id: u64,
    pub lot_id: u64,
    pub winner: Option<AccountId>,
    pub price: TokenAmount,
    pub pipeline: PipelineSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub end_tick: Tick,
    pub final_stage: Stage,
    pub paintings_completed: u32,
    pub inventory: Inventory,
    pub wallet: AccountId,
    pub final_balance: TokenAmount,
    pub log_sha256: String,
    pub events: usize,
    pub sales: usize,
    pub loans: Vec<LoanSummary>,
    pub paintings: Vec<PaintingSummary>,
    pub closure: ClosureTerms,
}

/// The robot wallet's flows, summed by kind straight from the event log.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClosureTerms {
    pub funding: TokenAmount,
    pub sales: TokenAmount,
    pub refunds: TokenAmount,
    pub platform_fees: TokenAmount,
    /// Explicit network-fee postings plus the fee field of every posting the
    /// wallet paid.
    pub network_fees: TokenAmount,
    pub supplies: TokenAmount,
    pub repayments: TokenAmount,
    /// Flows in a category the identity does not name.
    pub other_in: TokenAmount,
    pub other_out: TokenAmount,
    pub final_balance: TokenAmount,
}

impl ClosureTerms {
    /// `final == funding + sales + refunds - platform - network - supplies - repayments`,
    /// exactly, with nothing left over in other categories.
    pub fn holds(&self) -> bool {
        let inflow = self.funding.base_units() + self.sales.base_units() + self.refunds.base_units();
        let outflow = self.platform_fees.base_units()
            + self.network_fees.base_units()
            + self.supplies.base_units()
            + self.repayments.base_units();
        self.other_in.is_zero() && self.other_out.is_zero() && inflow.checked_sub(outflow) == Some(self.final_balance.base_units())
    }
}

pub fn economic_closure(ledger: &Ledger, wallet: AccountId) -> ClosureTerms {
    let mut t = ClosureTerms { final_balance: ledger.balance(wallet).unwrap_or_default(), ..Default::default() };
    let add = |acc: &mut TokenAmount, v: TokenAmount| *acc = TokenAmount::from_base(acc.base_units() + v.base_units());
    for e in ledger.log() {
        if e.to == wallet {
            match e.category {
                EventCategory::Funding => add(&mut t.funding, e.amount),
                EventCategory::Sale => add(&mut t.sales, e.amount),
                EventCategory::EscrowRelease => add(&mut t.refunds, e.amount),
                _ => add(&mut t.other_in, e.amount),
            }
        }
        if e.from == wallet {
            add(&mut t.network_fees, e.fee);
            match e.category {
                EventCategory::PlatformFee => add(&mut t.platform_fees, e.amount),
                EventCategory::NetworkFee => add(&mut t.network_fees, e.amount),
                EventCategory::SupplyPurchase => add(&mut t.supplies, e.amount),
                EventCategory::LoanRepayment => add(&mut t.repayments, e.amount),
                _ => add(&mut t.other_out, e.amount),
            }
        }
    }
    t
}
