//! Randomized workloads paired with independent reference models.
//!
//! Each checker returns `Err(description)` on the first disagreement so the
//! same code drives the proptest suites and the acceptance binary.

#![allow(dead_code)]

use std::collections::BTreeMap;

use easel_core::agent::{Simulation, Stage};
use easel_core::contracts::{
    ArtworkRef, ContractConfig, ContractEngine, ContractError, ItemKind, LotState, OrderState,
};
use easel_core::ledger::{
    AccountId, EventCategory, FeePolicy, Ledger, LedgerConfig, LedgerError, Posting, TokenAmount,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn base(n: u128) -> TokenAmount {
    TokenAmount::from_base(n)
}

fn random_fees(rng: &mut ChaCha8Rng) -> BTreeMap<EventCategory, TokenAmount> {
    EventCategory::ALL
        .iter()
        .map(|&c| (c, base(if rng.random_bool(0.5) { rng.random_range(0..20) } else { 0 })))
        .collect()
}

/// Random transfers over `accounts` funded accounts, mirrored on a signed
/// integer model. Checks after every operation that the ledger agrees with
/// the model, total supply is unchanged, and the model never observes a
/// negative balance. Returns the number of accepted transfers.
pub fn ledger_conservation(seed: u64, accounts: usize, ops: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = LedgerConfig { nonce: seed, fee_schedule: random_fees(&mut rng) };
    let mut ledger = Ledger::new(config.clone());
    let sink = ledger.fee_sink();
    let mut model: BTreeMap<AccountId, i128> = BTreeMap::new();
    model.insert(sink, 0);
    let mut ids = Vec::new();
    for i in 0..accounts {
        let id = ledger.create_account(&format!("acct-{i}")).map_err(|e| e.to_string())?;
        let amount = rng.random_range(1..2_000u128);
        ledger
            .mint(id, base(amount), EventCategory::Funding, 0, "")
            .map_err(|e| e.to_string())?;
        model.insert(id, amount as i128);
        ids.push(id);
    }
    ledger.seal_genesis();
    let supply = ledger.total_supply();
    let stranger = AccountId::derive(seed ^ 0xdead, "stranger");
    let mut accepted = 0;

    for step in 0..ops {
        let from = if rng.random_bool(0.01) { stranger } else { ids[rng.random_range(0..ids.len())] };
        let to = if rng.random_bool(0.05) { from } else { ids[rng.random_range(0..ids.len())] };
        let amount: u128 = match rng.random_range(0..10) {
            0 => 0,
            1 => rng.random_range(1_000..5_000),
            _ => rng.random_range(1..200),
        };
        let category = EventCategory::ALL[rng.random_range(0..EventCategory::ALL.len())];
        let waived = rng.random_bool(0.2);
        let fee = if waived { 0 } else { config.fee_schedule[&category].base_units() as i128 };
        let log_len = ledger.log().len();
        let result = ledger.post(Posting {
            from,
            to,
            amount: base(amount),
            category,
            time: step as u64 + 1,
            memo: "",
            fee: if waived { FeePolicy::Waived } else { FeePolicy::Schedule },
        });

        let expected: Result<(), &str> = if amount == 0 {
            Err("ZeroAmount")
        } else if from == to {
            Err("SelfTransfer")
        } else if !model.contains_key(&from) {
            Err("UnknownAccount")
        } else if model[&from] < amount as i128 + fee {
            Err("InsufficientFunds")
        } else {
            Ok(())
        };
        match (&expected, &result) {
            (Ok(()), Ok(_)) => {
                *model.get_mut(&from).unwrap() -= amount as i128 + fee;
                *model.get_mut(&to).unwrap() += amount as i128;
                *model.get_mut(&sink).unwrap() += fee;
                accepted += 1;
            }
            (Err(kind), Err(err)) => {
                let actual = match err {
                    LedgerError::ZeroAmount => "ZeroAmount",
                    LedgerError::SelfTransfer => "SelfTransfer",
                    LedgerError::UnknownAccount(_) => "UnknownAccount",
                    LedgerError::InsufficientFunds { .. } => "InsufficientFunds",
                    _ => "other",
                };
                if actual != *kind {
                    return Err(format!("step {step}: expected {kind}, got {err}"));
                }
                if ledger.log().len() != log_len {
                    return Err(format!("step {step}: rejected posting grew the log"));
                }
            }
            _ => return Err(format!("step {step}: model {expected:?} vs ledger {result:?}")),
        }
        if let Some((id, b)) = model.iter().find(|(_, b)| **b < 0) {
            return Err(format!("step {step}: account {id} went negative ({b})"));
        }
        for (id, want) in &model {
            let got = ledger.balance(*id).map_err(|e| e.to_string())?;
            if got.base_units() as i128 != *want {
                return Err(format!("step {step}: {id} ledger {got} model {want}"));
            }
        }
        if ledger.total_supply() != supply {
            return Err(format!("step {step}: supply changed"));
        }
    }
    let replayed = Ledger::replay(config, ledger.log()).map_err(|e| e.to_string())?;
    if replayed.state_hash() != ledger.state_hash() {
        return Err("replay state hash differs".into());
    }
    Ok(accepted)
}

#[derive(Debug, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub winner: Option<AccountId>,
    pub price: TokenAmount,
    pub balances: Vec<TokenAmount>,
}

/// One random auction: bidders with random budgets submit bids at random
/// times, some outside the bidding window and some by the seller. The
/// engine's settlement and final balances are compared against a direct
/// fold over the schedule.
pub fn auction_oracle(seed: u64) -> Result<AuctionOutcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fee = rng.random_range(0..5u128);
    let bps = [0u16, 250, 1000, 10_000][rng.random_range(0..4)];
    let mut fees = BTreeMap::new();
    fees.insert(EventCategory::EscrowLock, base(fee));
    let mut ledger = Ledger::new(LedgerConfig { nonce: seed, fee_schedule: fees });
    let seller = ledger.create_account("seller").unwrap();
    let platform = ledger.create_account("platform").unwrap();
    let n_bidders = rng.random_range(1..6);
    let mut bidders = Vec::new();
    let mut budget = Vec::new();
    for i in 0..n_bidders {
        let id = ledger.create_account(&format!("bidder-{i}")).unwrap();
        let b = rng.random_range(1..300u128);
        ledger.mint(id, base(b), EventCategory::Funding, 0, "").unwrap();
        bidders.push(id);
        budget.push(b);
    }
    ledger.seal_genesis();
    let mut eng = ContractEngine::new(ledger, ContractConfig { platform, platform_fee_bps: bps })
        .map_err(|e| e.to_string())?;
    let token = eng.mint_token(seller, ArtworkRef::of_bytes(&seed.to_be_bytes()), 0).unwrap();
    let reserve = rng.random_range(0..100u128);
    let incr = rng.random_range(1..20u128);
    let (open, duration) = (10u64, rng.random_range(1..50u64));
    let close = open + duration;
    let lot = eng
        .open_auction(token.token_id, seller, base(reserve), base(incr), duration, open)
        .map_err(|e| e.to_string())?;

    let mut schedule: Vec<(u64, Option<usize>, u128)> = (0..rng.random_range(0..30))
        .map(|_| {
            let t = rng.random_range(open - 2..close + 3);
            let who = if rng.random_bool(0.05) { None } else { Some(rng.random_range(0..n_bidders)) };
            (t, who, rng.random_range(0..320u128))
        })
        .collect();
    schedule.sort_by_key(|s| s.0);

    // Reference fold.
    let mut bal: Vec<i128> = budget.iter().map(|&b| b as i128).collect();
    let mut highest: Option<(usize, u128)> = None;
    let mut accepted = 0;
    for &(t, who, amount) in &schedule {
        let bidder = who.map(|i| bidders[i]).unwrap_or(seller);
        let res = eng.place_bid(lot.lot_id, bidder, base(amount), t);
        let accept = t >= open
            && t < close
            && who.is_some()
            && amount >= reserve.max(1)
            && highest.is_none_or(|(_, h)| amount >= h + incr)
            && bal[who.unwrap()] >= amount as i128 + fee as i128;
        if accept != res.is_ok() {
            return Err(format!("bid {amount} at {t} by {who:?}: oracle {accept}, engine {res:?}"));
        }
        if accept {
            let i = who.unwrap();
            bal[i] -= amount as i128 + fee as i128;
            if let Some((p, h)) = highest {
                bal[p] += h as i128;
            }
            highest = Some((i, amount));
            accepted += 1;
        }
        if !eng.escrow_violations().is_empty() {
            return Err(format!("escrow violated: {:?}", eng.escrow_violations()));
        }
    }
    if eng.close_auction(lot.lot_id, close - 1) != Err(ContractError::TooEarly) {
        return Err("close before close_time did not fail".into());
    }
    let report = eng.close_auction(lot.lot_id, close).map_err(|e| e.to_string())?;
    let lot_after = eng.lot(lot.lot_id).unwrap();
    let escrow_left = eng.ledger().balance(lot_after.escrow).unwrap();
    if !escrow_left.is_zero() {
        return Err(format!("escrow left {escrow_left}"));
    }
    let (winner, price) = match highest {
        Some((i, h)) => (Some(bidders[i]), h),
        None => (None, 0),
    };
    // Seller share rounds down; the remainder goes to the platform.
    let want_fee = price - price * (10_000 - bps as u128) / 10_000;
    if report.winner != winner || report.price != base(price) {
        return Err(format!("settlement {report:?}, oracle winner {winner:?} price {price}"));
    }
    if let Some(w) = winner {
        if report.platform_fee != base(want_fee) || report.seller_proceeds != base(price - want_fee) {
            return Err(format!("fee split {report:?}, oracle fee {want_fee}"));
        }
        if lot_after.state != LotState::Settled || eng.token(token.token_id).unwrap().owner != w {
            return Err("token not transferred to winner".into());
        }
    } else if lot_after.state != LotState::Unsold || eng.token(token.token_id).unwrap().owner != seller {
        return Err("unsold lot changed ownership".into());
    }
    if eng.ledger().balance(seller).unwrap() != base(price - want_fee)
        || eng.ledger().balance(platform).unwrap() != base(want_fee)
    {
        return Err("seller/platform balances disagree".into());
    }
    let mut balances = Vec::new();
    for (i, id) in bidders.iter().enumerate() {
        let got = eng.ledger().balance(*id).unwrap();
        if got.base_units() as i128 != bal[i] {
            return Err(format!("bidder {i}: engine {got}, oracle {}", bal[i]));
        }
        // Every bid that did not win is returned in full; only fees are lost.
        let lost_fees = eng
            .ledger()
            .log()
            .iter()
            .filter(|e| e.from == *id)
            .map(|e| e.fee.base_units())
            .sum::<u128>();
        let won = if winner == Some(*id) { price } else { 0 };
        if budget[i] - got.base_units() != lost_fees + won {
            return Err(format!("bidder {i} net delta is not fees plus winning price"));
        }
        balances.push(got);
    }
    if eng.lot(lot.lot_id).unwrap().bids.len() != accepted {
        return Err("bid history length mismatch".into());
    }
    Ok(AuctionOutcome { winner, price: base(price), balances })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderOp {
    Propose,
    Accept,
    Reject,
    Fulfill,
    /// Moves the clock past the deadline and tries to expire the order.
    Timeout,
}

pub const ORDER_OPS: [OrderOp; 5] =
    [OrderOp::Propose, OrderOp::Accept, OrderOp::Reject, OrderOp::Fulfill, OrderOp::Timeout];

#[derive(Clone)]
struct OrderNode {
    engine: ContractEngine,
    buyer: AccountId,
    shop: AccountId,
    now: u64,
    state: Option<OrderState>,
    trace: Vec<OrderOp>,
}

const DEADLINE: u64 = 100;
const PRICE: u128 = 1_000;

/// Exhaustively explores every sequence of order operations up to `depth`
/// on a single order and checks each step against the declared state
/// machine. Returns the number of sequences visited.
pub fn shop_model_check(depth: usize) -> Result<usize, String> {
    let mut fees = BTreeMap::new();
    fees.insert(EventCategory::SupplyPurchase, base(3));
    let mut ledger = Ledger::new(LedgerConfig { nonce: 9, fee_schedule: fees });
    let buyer = ledger.create_account("buyer").unwrap();
    let shop = ledger.create_account("shop").unwrap();
    let platform = ledger.create_account("platform").unwrap();
    ledger.mint(buyer, base(5_000), EventCategory::Funding, 0, "").unwrap();
    ledger.seal_genesis();
    let engine = ContractEngine::new(ledger, ContractConfig { platform, platform_fee_bps: 0 }).unwrap();
    let root = OrderNode { engine, buyer, shop, now: 1, state: None, trace: Vec::new() };
    let mut visited = 0;
    explore(root, depth, &mut visited)?;
    Ok(visited)
}

fn explore(node: OrderNode, depth: usize, visited: &mut usize) -> Result<(), String> {
    *visited += 1;
    if depth == 0 {
        return Ok(());
    }
    for op in ORDER_OPS {
        let mut next = node.clone();
        next.trace.push(op);
        step(&mut next, op).map_err(|e| format!("{:?}: {e}", next.trace))?;
        explore(next, depth - 1, visited)?;
    }
    Ok(())
}

fn step(n: &mut OrderNode, op: OrderOp) -> Result<(), String> {
    use OrderState::*;
    let before = n.state;
    let late = n.now > DEADLINE;
    if op == OrderOp::Timeout && !late {
        n.now = DEADLINE + 1;
    }
    let late = late || op == OrderOp::Timeout;
    let id = 0;
    let got: Result<OrderState, ContractError> = match (op, before) {
        (OrderOp::Propose, None) => n
            .engine
            .propose_order(n.buyer, n.shop, vec![(ItemKind::Canvas, 3)], base(PRICE), DEADLINE)
            .map(|o| o.state),
        (OrderOp::Propose, Some(_)) => Ok(before.unwrap()),
        (_, None) => Err(ContractError::UnknownOrder(id)),
        (OrderOp::Accept, _) => n.engine.shop_respond(id, true, n.now).map(|o| o.state),
        (OrderOp::Reject, _) => n.engine.shop_respond(id, false, n.now).map(|o| o.state),
        (OrderOp::Fulfill, _) => n.engine.fulfill_order(id, n.now).map(|o| o.order.state),
        (OrderOp::Timeout, _) => n.engine.expire_order(id, n.now).map(|o| o.state),
    };
    let expected: Option<OrderState> = match (op, before) {
        (OrderOp::Propose, None) => Some(Proposed),
        (OrderOp::Propose, Some(s)) => Some(s),
        (_, None) => None,
        (OrderOp::Accept, Some(Proposed)) => Some(Accepted),
        (OrderOp::Reject, Some(Proposed)) => Some(Rejected),
        (OrderOp::Fulfill, Some(Accepted)) => Some(if late { Refunded } else { Fulfilled }),
        (OrderOp::Timeout, Some(Proposed)) => Some(Rejected),
        (OrderOp::Timeout, Some(Accepted)) => Some(Refunded),
        _ => None,
    };
    match (expected, &got) {
        (Some(want), Ok(s)) if want == *s => {}
        (None, Err(_)) => {}
        _ => return Err(format!("{op:?} from {before:?}: expected {expected:?}, got {got:?}")),
    }
    if let Some(s) = expected {
        if let Some(b) = before {
            if b.is_terminal() && b != s {
                return Err(format!("left terminal state {b:?}"));
            }
        }
        n.state = Some(s);
    }

    let Some(state) = n.state else { return Ok(()) };
    let order = n.engine.order(id).map_err(|e| e.to_string())?;
    if order.state != state {
        return Err(format!("engine state {:?}, model {state:?}", order.state));
    }
    let escrow = order.escrow;
    let held = n.engine.ledger().balance(escrow).unwrap().base_units();
    let want_held = if state == Accepted { PRICE } else { 0 };
    if held != want_held {
        return Err(format!("escrow holds {held} in {state:?}"));
    }
    let log = n.engine.ledger().log();
    let locks = log.iter().filter(|e| e.to == escrow).count();
    let releases = log.iter().filter(|e| e.from == escrow).count();
    let was_accepted = locks == 1;
    if locks > 1 || releases > 1 {
        return Err(format!("escrow locked {locks}x, released {releases}x"));
    }
    if state.is_terminal() && was_accepted != (releases == 1) {
        return Err("terminal order did not release its escrow exactly once".into());
    }
    let buyer_bal = n.engine.ledger().balance(n.buyer).unwrap().base_units();
    let want_buyer = match (state, was_accepted) {
        (Fulfilled, _) | (Accepted, _) => 5_000 - PRICE - 3,
        (Refunded, _) => 5_000 - 3,
        _ => 5_000,
    };
    if buyer_bal != want_buyer {
        return Err(format!("buyer balance {buyer_bal} in {state:?}"));
    }
    Ok(())
}

/// Lifecycle edges written out independently of the library.
pub fn allowed(a: Stage, b: Stage) -> bool {
    use Stage::*;
    let edges = [
        (Funding, Producing),
        (Funding, Idle),
        (Producing, Auctioning),
        (Auctioning, Settling),
        (Settling, Restocking),
        (Settling, Repaying),
        (Settling, Producing),
        (Settling, Idle),
        (Restocking, Repaying),
        (Restocking, Producing),
        (Restocking, Idle),
        (Repaying, Producing),
        (Repaying, Idle),
        (Idle, Producing),
    ];
    edges.contains(&(a, b))
}

/// Invariants every run must satisfy, finished or not.
pub fn check_run(sim: &Simulation) -> Result<(), String> {
    let trace = sim.stage_trace();
    if trace.first().map(|t| t.1) != Some(Stage::Funding) {
        return Err("trace does not start in Funding".into());
    }
    for w in trace.windows(2) {
        if !allowed(w[0].1, w[1].1) || w[1].0 < w[0].0 {
            return Err(format!("bad transition {:?} -> {:?}", w[0], w[1]));
        }
    }

    let st = sim.state();
    let initial = sim.scenario().robot.inventory;
    let fulfilled_canvases: u32 = sim
        .engine()
        .orders()
        .iter()
        .filter(|o| o.state == OrderState::Fulfilled)
        .flat_map(|o| o.composition.iter())
        .filter(|(k, _)| *k == ItemKind::Canvas)
        .map(|(_, q)| q)
        .sum();
    if st.canvases_acquired != fulfilled_canvases {
        return Err(format!("acquired {} != fulfilled {}", st.canvases_acquired, fulfilled_canvases));
    }
    if initial.canvases + st.canvases_acquired - st.paintings_completed != st.inventory.canvases {
        return Err("canvas count does not reconcile".into());
    }
    if sim.engine().tokens().len() as u32 != st.paintings_completed {
        return Err("one token per painting".into());
    }

    let ledger = sim.ledger();
    let closure = easel_core::agent::economic_closure(ledger, st.wallet);
    if !closure.holds() {
        return Err(format!("closure fails: {closure:?}"));
    }

    // Bidder safety, replayed from the log: what a bidder has in escrow plus
    // what it has paid for won lots never exceeds its budget.
    for b in sim.bidders() {
        let mut committed: i128 = 0;
        for e in ledger.log() {
            if e.from == b.account && e.category == EventCategory::EscrowLock {
                committed += e.amount.base_units() as i128;
            }
            if e.to == b.account && e.category == EventCategory::EscrowRelease {
                committed -= e.amount.base_units() as i128;
            }
            if committed > b.budget.base_units() as i128 {
                return Err(format!("{} committed {} over budget", b.label, committed));
            }
        }
    }
    for lot in sim.engine().lots() {
        if lot.state.is_terminal() && !ledger.balance(lot.escrow).unwrap().is_zero() {
            return Err(format!("lot {} escrow not drained", lot.lot_id));
        }
    }
    if !sim.engine().escrow_violations().is_empty() {
        return Err(format!("{:?}", sim.engine().escrow_violations()));
    }
    Ok(())
}
