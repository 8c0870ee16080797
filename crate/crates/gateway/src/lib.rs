//! HTTP bid gateway in front of a running [`Simulation`].
//!
//! One driver task owns the simulation. Handlers read the latest published
//! [`Snapshot`] and send bids through a command queue, so every mutation is
//! serialized with the scenario's own events.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use easel_core::agent::{AgentError, RunReport, Simulation};
use easel_core::contracts::{AuctionLot, Bid, ContractError, LotState};
use easel_core::ledger::{AccountId, Ledger, LedgerEvent, Tick, TimelineEntry, TokenAmount};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot, watch};

/// Artwork shown next to a lot.
#[derive(Clone, Debug, Serialize)]
pub struct Preview {
    pub keyword_source: String,
    pub keyword_glyphs: String,
    pub svg: String,
}

/// Read-only view of the simulation published after every change.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub now: Tick,
    pub finished: bool,
    pub error: Option<String>,
    pub ledger: Ledger,
    pub lots: Vec<AuctionLot>,
    pub previews: BTreeMap<u64, Arc<Preview>>,
}

impl Snapshot {
    fn capture(sim: &Simulation, previews: &mut BTreeMap<u64, Arc<Preview>>, error: Option<String>) -> Snapshot {
        for p in sim.paintings() {
            previews.entry(p.lot_id).or_insert_with(|| {
                let img = &p.output.raster.image;
                Arc::new(Preview {
                    keyword_source: p.output.topic.keyword_source.clone(),
                    keyword_glyphs: p.output.topic.keyword_glyphs.clone(),
                    svg: p.output.strokes.to_svg(img.width(), img.height()),
                })
            });
        }
        Snapshot {
            now: sim.now(),
            finished: sim.is_finished(),
            error,
            ledger: sim.ledger().clone(),
            lots: sim.engine().lots().to_vec(),
            previews: previews.clone(),
        }
    }
}

enum Command {
    Bid {
        token: String,
        lot_id: u64,
        amount: TokenAmount,
        reply: oneshot::Sender<Result<Bid, AgentError>>,
    },
}

#[derive(Clone)]
pub struct AppState {
    snapshot: watch::Receiver<Arc<Snapshot>>,
    commands: mpsc::Sender<Command>,
    poll_timeout: Duration,
}

/// Called once when a paced run drains its queue or stops on an error.
pub type OnFinish = Box<dyn FnOnce(&Simulation, Result<RunReport, AgentError>) + Send>;

/// Owns the simulation and applies commands and clock advances in order.
pub struct Driver {
    sim: Simulation,
    commands: mpsc::Receiver<Command>,
    publish: watch::Sender<Arc<Snapshot>>,
    previews: BTreeMap<u64, Arc<Preview>>,
    /// Simulated ticks per wall-clock second; `None` leaves the clock alone.
    pace: Option<f64>,
    on_finish: Option<OnFinish>,
}

#[derive(Clone, Copy, Debug)]
pub struct GatewayConfig {
    pub pace: Option<f64>,
    /// Longest wait of an `/events` long-poll.
    pub poll_timeout: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { pace: None, poll_timeout: Duration::from_secs(25) }
    }
}

/// Builds the router and the driver that must be spawned to serve it.
pub fn gateway(sim: Simulation, config: GatewayConfig) -> (Router, Driver) {
    let mut previews = BTreeMap::new();
    let first = Arc::new(Snapshot::capture(&sim, &mut previews, None));
    let (publish, snapshot) = watch::channel(first);
    let (tx, rx) = mpsc::channel(64);
    let state = AppState { snapshot, commands: tx, poll_timeout: config.poll_timeout };
    let driver = Driver { sim, commands: rx, publish, previews, pace: config.pace, on_finish: None };
    (router(state), driver)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/auctions", get(list_auctions))
        .route("/auctions/{id}", get(get_auction))
        .route("/auctions/{id}/bids", post(place_bid))
        .route("/timeline/{account}", get(timeline))
        .route("/events", get(events))
        .with_state(state)
}

const FRAME: Duration = Duration::from_millis(100);

impl Driver {
    pub fn on_finish(mut self, f: OnFinish) -> Driver {
        self.on_finish = Some(f);
        self
    }

    /// Serves commands until every handle to the router is dropped.
    pub async fn run(mut self) -> Simulation {
        let mut ticker = tokio::time::interval(FRAME);
        ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        let mut clock = self.sim.now() as f64;
        let mut error = None;
        let mut done = self.pace.is_none();
        loop {
            tokio::select! {
                cmd = self.commands.recv() => match cmd {
                    None => break,
                    Some(Command::Bid { token, lot_id, amount, reply }) => {
                        let _ = reply.send(self.sim.submit_session_bid(&token, lot_id, amount));
                        self.publish(error.clone());
                    }
                },
                _ = ticker.tick(), if !done => {
                    clock += self.pace.unwrap_or(0.0) * FRAME.as_secs_f64();
                    let step = self.sim.advance_to(clock as Tick);
                    let finished = self.sim.is_finished();
                    if let Err(e) = &step {
                        error = Some(e.to_string());
                    }
                    self.publish(error.clone());
                    if step.is_err() || finished {
                        done = true;
                        let result = step.and_then(|_| self.sim.finish());
                        if let Some(f) = self.on_finish.take() {
                            f(&self.sim, result);
                        }
                    }
                }
            }
        }
        self.sim
    }

    fn publish(&mut self, error: Option<String>) {
        let snap = Snapshot::capture(&self.sim, &mut self.previews, error);
        self.publish.send_replace(Arc::new(snap));
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: String,
    message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError { status, code: code.into(), message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { code: self.code, message: self.message })).into_response()
    }
}

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> ApiError {
        match &e {
            AgentError::UnknownSession => ApiError::new(StatusCode::UNAUTHORIZED, "UnknownSession", e.to_string()),
            AgentError::Contract(c @ ContractError::UnknownLot(_)) => {
                ApiError::new(StatusCode::NOT_FOUND, c.code(), c.to_string())
            }
            AgentError::Contract(c) => ApiError::new(StatusCode::CONFLICT, c.code(), c.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BidView {
    pub bidder: AccountId,
    pub bidder_label: Option<String>,
    pub amount: TokenAmount,
    pub time: Tick,
}

#[derive(Debug, Serialize)]
pub struct LotView {
    pub lot_id: u64,
    pub token_id: u64,
    pub state: LotState,
    pub reserve: TokenAmount,
    pub min_increment: TokenAmount,
    pub minimum_bid: TokenAmount,
    pub open_time: Option<Tick>,
    pub close_time: Option<Tick>,
    pub bids: usize,
    pub highest: Option<BidView>,
    pub keyword: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct LotDetail {
    #[serde(flatten)]
    pub lot: LotView,
    pub now: Tick,
    pub history: Vec<BidView>,
    pub preview: Option<Preview>,
}

fn bid_view(ledger: &Ledger, b: &Bid) -> BidView {
    BidView {
        bidder: b.bidder,
        bidder_label: ledger.label_of(b.bidder).map(str::to_string),
        amount: b.amount,
        time: b.time,
    }
}

fn lot_view(snap: &Snapshot, lot: &AuctionLot) -> LotView {
    LotView {
        lot_id: lot.lot_id,
        token_id: lot.token_id,
        state: lot.state,
        reserve: lot.reserve,
        min_increment: lot.min_increment,
        minimum_bid: lot.minimum_bid(),
        open_time: lot.open_time,
        close_time: lot.close_time,
        bids: lot.bids.len(),
        highest: lot.highest.as_ref().map(|b| bid_view(&snap.ledger, b)),
        keyword: snap.previews.get(&lot.lot_id).map(|p| p.keyword_source.clone()),
    }
}

async fn list_auctions(State(st): State<AppState>) -> Json<Vec<LotView>> {
    let snap = st.snapshot.borrow().clone();
    Json(snap.lots.iter().map(|l| lot_view(&snap, l)).collect())
}

async fn get_auction(State(st): State<AppState>, Path(id): Path<u64>) -> Result<Json<LotDetail>, ApiError> {
    let snap = st.snapshot.borrow().clone();
    let lot = snap
        .lots
        .iter()
        .find(|l| l.lot_id == id)
        .ok_or_else(|| ApiError::from(AgentError::Contract(ContractError::UnknownLot(id))))?;
    Ok(Json(LotDetail {
        lot: lot_view(&snap, lot),
        now: snap.now,
        history: lot.bids.iter().map(|b| bid_view(&snap.ledger, b)).collect(),
        preview: snap.previews.get(&id).map(|p| Preview::clone(p)),
    }))
}

#[derive(Debug, Deserialize)]
pub struct BidRequest {
    /// Base units as a decimal string.
    pub amount: String,
}

#[derive(Debug, Serialize)]
pub struct BidAccepted {
    pub lot_id: u64,
    pub bid: BidView,
}

fn bearer(headers: &HeaderMap) -> Result<String, ApiError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "UnknownSession", "missing bearer token"))
}

async fn place_bid(
    State(st): State<AppState>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    Json(req): Json<BidRequest>,
) -> Result<(StatusCode, Json<BidAccepted>), ApiError> {
    let token = bearer(&headers)?;
    let amount: TokenAmount = req
        .amount
        .parse()
        .map_err(|e: easel_core::ledger::ParseAmountError| ApiError::new(StatusCode::BAD_REQUEST, "InvalidAmount", e.to_string()))?;
    let (reply, rx) = oneshot::channel();
    st.commands
        .send(Command::Bid { token, lot_id: id, amount, reply })
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "Stopped", "simulation has stopped"))?;
    let bid = rx
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "Stopped", "simulation has stopped"))??;
    let snap = st.snapshot.borrow().clone();
    Ok((StatusCode::CREATED, Json(BidAccepted { lot_id: id, bid: bid_view(&snap.ledger, &bid) })))
}

#[derive(Debug, Serialize)]
pub struct TimelineView {
    pub account: AccountId,
    pub label: Option<String>,
    pub entries: Vec<TimelineEntry>,
}

async fn timeline(State(st): State<AppState>, Path(account): Path<String>) -> Result<Json<TimelineView>, ApiError> {
    let snap = st.snapshot.borrow().clone();
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "UnknownAccount", format!("no account {account:?}"));
    let id = match snap.ledger.account(&account) {
        Some(id) => id,
        None => account.parse::<AccountId>().map_err(|_| not_found())?,
    };
    let entries = snap.ledger.balance_timeline(id).map_err(|_| not_found())?;
    Ok(Json(TimelineView { account: id, label: snap.ledger.label_of(id).map(str::to_string), entries }))
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    #[serde(default)]
    pub since: u64,
    /// Overrides the server's long-poll timeout, capped by it.
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct EventsPage {
    pub events: Vec<LedgerEvent>,
    /// Sequence number to pass as `since` next time.
    pub next: u64,
    pub now: Tick,
    pub finished: bool,
    pub error: Option<String>,
}

/// Events with `seq >= since`; waits for new ones when there are none yet.
async fn events(State(st): State<AppState>, Query(q): Query<EventsQuery>) -> Json<EventsPage> {
    let wait = q.timeout_ms.map_or(st.poll_timeout, |ms| Duration::from_millis(ms).min(st.poll_timeout));
    let deadline = tokio::time::Instant::now() + wait;
    let mut rx = st.snapshot.clone();
    loop {
        let snap = rx.borrow_and_update().clone();
        let events: Vec<LedgerEvent> = snap.ledger.log().iter().filter(|e| e.seq >= q.since).cloned().collect();
        let ready = !events.is_empty();
        // Stop on new events, on timeout, or once the driver is gone.
        if ready || !matches!(tokio::time::timeout_at(deadline, rx.changed()).await, Ok(Ok(()))) {
            let next = events.last().map_or(q.since, |e| e.seq + 1);
            return Json(EventsPage { events, next, now: snap.now, finished: snap.finished, error: snap.error.clone() });
        }
    }
}
