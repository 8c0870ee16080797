use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LedgerError;

/// Base units per whole token.
pub const BASE_UNITS_PER_TOKEN: u128 = 1_000_000_000_000_000_000;
const DECIMALS: usize = 18;

/// Non-negative token quantity held as integer base units (10^18 per token).
///
/// Arithmetic is checked; overflow and underflow surface as [`LedgerError`]
/// rather than wrapping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenAmount(u128);

impl TokenAmount {
    pub const ZERO: TokenAmount = TokenAmount(0);

    pub const fn from_base(units: u128) -> Self {
        TokenAmount(units)
    }

    pub const fn from_tokens(tokens: u64) -> Self {
        TokenAmount(tokens as u128 * BASE_UNITS_PER_TOKEN)
    }

    pub const fn base_units(self) -> u128 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: TokenAmount) -> Result<TokenAmount, LedgerError> {
        self.0
            .checked_add(rhs.0)
            .map(TokenAmount)
            .ok_or(LedgerError::Overflow)
    }

    pub fn checked_sub(self, rhs: TokenAmount) -> Result<TokenAmount, LedgerError> {
        self.0
            .checked_sub(rhs.0)
            .map(TokenAmount)
            .ok_or(LedgerError::Overflow)
    }

    pub fn checked_mul(self, factor: u128) -> Result<TokenAmount, LedgerError> {
        self.0
            .checked_mul(factor)
            .map(TokenAmount)
            .ok_or(LedgerError::Overflow)
    }

    pub fn saturating_sub(self, rhs: TokenAmount) -> TokenAmount {
        TokenAmount(self.0.saturating_sub(rhs.0))
    }

    /// Splits `self` into `(net, fee)` where `fee` is `bps` basis points,
    /// rounded up so that the integer-division remainder lands in `fee`.
    pub fn split_bps(self, bps: u16) -> Result<(TokenAmount, TokenAmount), LedgerError> {
        let keep = 10_000u128
            .checked_sub(u128::from(bps))
            .ok_or(LedgerError::Overflow)?;
        // (a*q + r)*keep / 10000 without overflowing for large amounts
        let q = self.0 / 10_000;
        let r = self.0 % 10_000;
        let net = q
            .checked_mul(keep)
            .and_then(|v| v.checked_add(r * keep / 10_000))
            .ok_or(LedgerError::Overflow)?;
        Ok((TokenAmount(net), TokenAmount(self.0 - net)))
    }

    /// Parses a decimal token quantity such as `"0.25"` or `"3"`.
    pub fn parse_tokens(s: &str) -> Result<TokenAmount, ParseAmountError> {
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(ParseAmountError(s.to_string()));
        }
        if frac.len() > DECIMALS
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseAmountError(s.to_string()));
        }
        let whole: u128 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| ParseAmountError(s.to_string()))?
        };
        let mut frac_units: u128 = 0;
        for (i, b) in frac.bytes().enumerate() {
            frac_units += u128::from(b - b'0') * 10u128.pow((DECIMALS - 1 - i) as u32);
        }
        whole
            .checked_mul(BASE_UNITS_PER_TOKEN)
            .and_then(|w| w.checked_add(frac_units))
            .map(TokenAmount)
            .ok_or_else(|| ParseAmountError(s.to_string()))
    }

    /// Decimal token rendering with trailing zeros trimmed (`1.5`, `0.001`).
    pub fn to_token_string(self) -> String {
        let whole = self.0 / BASE_UNITS_PER_TOKEN;
        let frac = self.0 % BASE_UNITS_PER_TOKEN;
        if frac == 0 {
            return whole.to_string();
        }
        let digits = format!("{frac:018}");
        format!("{whole}.{}", digits.trim_end_matches('0'))
    }
}

/// Renders base units, the canonical wire and log form.
impl fmt::Display for TokenAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid token amount {0:?}")]
pub struct ParseAmountError(pub String);

/// Parses base units, mirroring `Display`.
impl FromStr for TokenAmount {
    type Err = ParseAmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<u128>()
            .map(TokenAmount)
            .map_err(|_| ParseAmountError(s.to_string()))
    }
}

impl Serialize for TokenAmount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for TokenAmount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for human-written decimal token quantities (`"0.5"`).
pub mod as_tokens {
    use super::TokenAmount;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &TokenAmount, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_token_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TokenAmount, D::Error> {
        let s = String::deserialize(d)?;
        TokenAmount::parse_tokens(&s).map_err(serde::de::Error::custom)
    }
}
