//! Scenario files: everything that determines a run.
//!
//! Amounts are decimal token strings (`"0.25"`). Durations are in clock
//! ticks; one tick is `tick_minutes` simulated minutes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contracts::{ItemKind, DEFAULT_PLATFORM_FEE_BPS};
use crate::ledger::{as_tokens, EventCategory, Tick, TokenAmount};
use crate::pipeline::PipelineConfig;

use super::AgentError;

/// Six months of one-minute ticks.
pub const DEFAULT_HORIZON: Tick = 183 * 24 * 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    /// Number of paintings to produce.
    pub target_paintings: u32,
    #[serde(default = "one")]
    pub tick_minutes: u32,
    #[serde(default = "default_horizon")]
    pub horizon: Tick,
    /// Flat network fee per event category, keyed by category name.
    #[serde(default)]
    pub fees: BTreeMap<String, String>,
    pub robot: RobotConfig,
    #[serde(default)]
    pub investors: Vec<InvestorConfig>,
    pub auction: AuctionConfig,
    pub shop: ShopConfig,
    #[serde(default)]
    pub bidders: Vec<BidderConfig>,
    #[serde(default)]
    pub sessions: Vec<SessionConfig>,
    /// Trend dates (`YYYY-MM-DD`) or keywords, used in turn.
    pub topics: Vec<String>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Stroke font file; the bundled font when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font: Option<PathBuf>,
}

fn one() -> u32 {
    1
}

fn default_horizon() -> Tick {
    DEFAULT_HORIZON
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    pub canvases: u32,
    pub paint_units: u32,
    pub brushes: u32,
}

impl Inventory {
    pub fn add(&mut self, kind: ItemKind, qty: u32) {
        match kind {
            ItemKind::Canvas => self.canvases += qty,
            ItemKind::Paint => self.paint_units += qty,
            ItemKind::Brush => self.brushes += qty,
        }
    }

    pub fn composition(&self) -> Vec<(ItemKind, u32)> {
        vec![
            (ItemKind::Canvas, self.canvases),
            (ItemKind::Paint, self.paint_units),
            (ItemKind::Brush, self.brushes),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    #[serde(default = "robot_label")]
    pub label: String,
    #[serde(default, with = "as_tokens")]
    pub initial_balance: TokenAmount,
    pub inventory: Inventory,
    #[serde(default = "one")]
    pub paint_per_painting: u32,
    #[serde(default)]
    pub brushes_per_painting: u32,
    /// Balance kept back before repaying loans. Defaults to one supply
    /// bundle plus its network fee.
    #[serde(default, with = "option_tokens", skip_serializing_if = "Option::is_none")]
    pub reserve_floor: Option<TokenAmount>,
}

fn robot_label() -> String {
    "robot".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestorConfig {
    pub label: String,
    /// Minted to the investor at genesis.
    #[serde(with = "as_tokens")]
    pub balance: TokenAmount,
    /// Lent to the robot at tick 0.
    #[serde(with = "as_tokens")]
    pub loan: TokenAmount,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuctionConfig {
    #[serde(with = "as_tokens")]
    pub reserve: TokenAmount,
    #[serde(with = "as_tokens")]
    pub min_increment: TokenAmount,
    pub duration: Tick,
    #[serde(default = "default_bps")]
    pub platform_fee_bps: u16,
    #[serde(default = "platform_label")]
    pub platform_label: String,
}

fn default_bps() -> u16 {
    DEFAULT_PLATFORM_FEE_BPS
}

fn platform_label() -> String {
    "platform".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShopConfig {
    #[serde(default = "shop_label")]
    pub label: String,
    #[serde(with = "as_tokens")]
    pub bundle_price: TokenAmount,
    pub bundle: Inventory,
    pub response_delay: Tick,
    pub delivery_delay: Tick,
    /// Order deadline, counted from the proposal.
    pub deadline: Tick,
    #[serde(default = "yes")]
    pub accepts: bool,
}

fn shop_label() -> String {
    "shop".into()
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderConfig {
    pub label: String,
    /// Minted at genesis; must cover the budget plus bid fees.
    #[serde(with = "as_tokens")]
    pub balance: TokenAmount,
    /// Cap on everything the bidder ever has locked or spent.
    #[serde(with = "as_tokens")]
    pub budget: TokenAmount,
    pub strategy: Strategy,
    /// Ticks between seeing a bid and answering it.
    #[serde(default = "default_reaction")]
    pub reaction: Tick,
    /// Extra random delay in `0..=jitter` ticks, drawn from the scenario seed.
    #[serde(default)]
    pub jitter: Tick,
}

fn default_reaction() -> Tick {
    30
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Strategy {
    /// One minimum bid `delay` ticks before the close.
    Sniper { delay: Tick },
    /// Answers every outbid with at least `step` over the standing bid.
    Incremental {
        #[serde(with = "as_tokens")]
        step: TokenAmount,
    },
    /// Proxy bidding with the minimum raise up to `max` per lot.
    Limit {
        #[serde(with = "as_tokens")]
        max: TokenAmount,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub token: String,
    pub label: String,
    #[serde(with = "as_tokens")]
    pub balance: TokenAmount,
}

mod option_tokens {
    use crate::ledger::TokenAmount;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<TokenAmount>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&v.to_token_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<TokenAmount>, D::Error> {
        let s = String::deserialize(d)?;
        TokenAmount::parse_tokens(&s).map(Some).map_err(serde::de::Error::custom)
    }
}

impl Scenario {
    pub fn builtin() -> Scenario {
        Scenario::parse(include_str!("../../scenarios/default.toml")).expect("bundled scenario is valid")
    }

    pub fn load(path: &Path) -> Result<Scenario, AgentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario, AgentError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| AgentError::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn fee_schedule(&self) -> Result<BTreeMap<EventCategory, TokenAmount>, AgentError> {
        let mut out = BTreeMap::new();
        for (name, amount) in &self.fees {
            let category: EventCategory =
                name.parse().map_err(|_| AgentError::Config(format!("fees: unknown category `{name}`")))?;
            let amount = TokenAmount::parse_tokens(amount).map_err(|e| AgentError::Config(format!("fees.{name}: {e}")))?;
            out.insert(category, amount);
        }
        Ok(out)
    }

    pub fn reserve_floor(&self) -> TokenAmount {
        self.robot.reserve_floor.unwrap_or_else(|| {
            let fee = self
                .fee_schedule()
                .ok()
                .and_then(|f| f.get(&EventCategory::SupplyPurchase).copied())
                .unwrap_or_default();
            self.shop.bundle_price.checked_add(fee).unwrap_or(self.shop.bundle_price)
        })
    }

    /// Semantic checks beyond the schema. Lists every offending key.
    pub fn validate(&self) -> Result<(), AgentError> {
        let mut bad = Vec::new();
        if self.target_paintings == 0 {
            bad.push("target_paintings must be at least 1".to_string());
        }
        if self.tick_minutes == 0 {
            bad.push("tick_minutes must be at least 1".to_string());
        }
        if let Err(AgentError::Config(e)) = self.fee_schedule() {
            bad.push(e);
        }
        if self.auction.duration == 0 {
            bad.push("auction.duration must be positive".into());
        }
        if self.auction.min_increment.is_zero() {
            bad.push("auction.min_increment must be positive".into());
        }
        if self.auction.platform_fee_bps > 10_000 {
            bad.push("auction.platform_fee_bps must be at most 10000".into());
        }
        if self.shop.bundle_price.is_zero() {
            bad.push("shop.bundle_price must be positive".into());
        }
        if self.shop.bundle.composition().iter().all(|&(_, q)| q == 0) {
            bad.push("shop.bundle is empty".into());
        }
        if self.topics.is_empty() {
            bad.push("topics must not be empty".into());
        }
        let mut labels = vec![self.robot.label.as_str(), self.shop.label.as_str(), self.auction.platform_label.as_str()];
        labels.extend(self.investors.iter().map(|i| i.label.as_str()));
        labels.extend(self.bidders.iter().map(|b| b.label.as_str()));
        labels.extend(self.sessions.iter().map(|s| s.label.as_str()));
        let mut seen = std::collections::BTreeSet::new();
        for l in labels {
            if !seen.insert(l) {
                bad.push(format!("duplicate account label `{l}`"));
            }
        }
        for (i, b) in self.bidders.iter().enumerate() {
            if b.budget > b.balance {
                bad.push(format!("bidders[{i}].budget exceeds bidders[{i}].balance"));
            }
        }
        let mut tokens = std::collections::BTreeSet::new();
        for (i, s) in self.sessions.iter().enumerate() {
            if s.token.is_empty() || !tokens.insert(s.token.as_str()) {
                bad.push(format!("sessions[{i}].token must be non-empty and unique"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(AgentError::Config(bad.join("; ")))
        }
    }
}
