//! Newline-delimited event log encoding.
//!
//! One event per line, tab separated, fields in the fixed order
//! `seq time from to amount fee category memo`. Amounts are decimal base-unit
//! integers. Backslash, tab and newline inside the memo are escaped so the
//! line structure is never broken.

use sha2::{Digest, Sha256};

use super::{LedgerError, LedgerEvent};

pub fn encode_event(e: &LedgerEvent) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        e.seq,
        e.time,
        e.from.to_hex(),
        e.to.to_hex(),
        e.amount,
        e.fee,
        e.category,
        escape(&e.memo)
    )
}

pub fn decode_event(line: &str) -> Result<LedgerEvent, LedgerError> {
    let bad = |what: &str| LedgerError::CorruptLog(format!("{what} in line {line:?}"));
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 8 {
        return Err(bad("expected 8 fields"));
    }
    Ok(LedgerEvent {
        seq: fields[0].parse().map_err(|_| bad("bad seq"))?,
        time: fields[1].parse().map_err(|_| bad("bad time"))?,
        from: fields[2].parse()?,
        to: fields[3].parse()?,
        amount: fields[4].parse().map_err(|_| bad("bad amount"))?,
        fee: fields[5].parse().map_err(|_| bad("bad fee"))?,
        category: fields[6].parse()?,
        memo: unescape(fields[7]).ok_or_else(|| bad("bad memo escape"))?,
    })
}

pub fn encode_log(events: &[LedgerEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&encode_event(e));
        out.push('\n');
    }
    out
}

pub fn decode_log(text: &str) -> Result<Vec<LedgerEvent>, LedgerError> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(decode_event)
        .collect()
}

/// SHA-256 of the encoded log; the identity used for determinism checks.
pub fn log_hash(events: &[LedgerEvent]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for e in events {
        hasher.update(encode_event(e).as_bytes());
        hasher.update(b"\n");
    }
    hasher.finalize().into()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            '\\' => out.push('\\'),
            't' => out.push('\t'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            _ => return None,
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{AccountId, EventCategory, TokenAmount};
    use proptest::prelude::*;

    fn category() -> impl Strategy<Value = EventCategory> {
        proptest::sample::select(EventCategory::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn line_round_trip(
            seq in any::<u64>(),
            time in any::<u64>(),
            from in any::<[u8; 20]>(),
            to in any::<[u8; 20]>(),
            amount in any::<u128>(),
            fee in any::<u128>(),
            category in category(),
            memo in ".*",
        ) {
            let e = LedgerEvent {
                seq, time,
                from: AccountId::from_bytes(from),
                to: AccountId::from_bytes(to),
                amount: TokenAmount::from_base(amount),
                fee: TokenAmount::from_base(fee),
                category,
                memo,
            };
            let line = encode_event(&e);
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(decode_event(&line).unwrap(), e);
        }
    }

    #[test]
    fn malformed_lines_are_corrupt() {
        for line in ["", "1\t2", "x\t0\t00\t00\t1\t0\tSale\t", "0\t0\tzz\t00\t1\t0\tSale\t"] {
            assert!(matches!(decode_event(line), Err(LedgerError::CorruptLog(_))), "{line:?}");
        }
    }
}
