use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{JumpError, Result};
use crate::model::LogPricePath;

/// Regular trading session in exchange clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl Default for Session {
    fn default() -> Self {
        Self {
            start: NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"),
            end: NaiveTime::from_hms_opt(16, 0, 0).expect("valid time"),
        }
    }
}

impl Session {
    fn length_ms(&self) -> i64 {
        (self.end - self.start).num_milliseconds()
    }

    fn contains(&self, t: NaiveTime) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub time: NaiveDateTime,
    pub price: f64,
}

/// ISO-8601 (clock time as written; offsets are not applied) or epoch
/// seconds (UTC).
pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<f64>() {
        let whole = secs.floor();
        let nanos = ((secs - whole) * 1e9).round() as u32;
        return DateTime::from_timestamp(whole as i64, nanos.min(999_999_999))
            .map(|d| d.naive_utc())
            .ok_or_else(|| JumpError::Parse(format!("epoch timestamp out of range: {s}")));
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Ok(d.naive_local());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(d) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(d);
        }
    }
    Err(JumpError::Parse(format!("unrecognised timestamp {s:?}")))
}

/// Reads a `timestamp,price` CSV, sorted by time.
pub fn read_ticks(path: &Path) -> Result<Vec<Tick>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| JumpError::Parse(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| JumpError::Parse(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| JumpError::Parse(format!("missing column {name:?}")))
    };
    let (ti, pi) = (col("timestamp")?, col("price")?);
    let mut ticks = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| JumpError::Parse(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| JumpError::Parse(format!("row {}: short record", line + 2)));
        let time = parse_timestamp(field(ti)?)?;
        let price: f64 = field(pi)?
            .trim()
            .parse()
            .map_err(|_| JumpError::Parse(format!("row {}: bad price", line + 2)))?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(JumpError::Parse(format!("row {}: nonpositive price {price}", line + 2)));
        }
        ticks.push(Tick { time, price });
    }
    ticks.sort_by_key(|t| t.time);
    Ok(ticks)
}

fn modal_spacing_ms(ticks: &[Tick]) -> Option<i64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for w in ticks.windows(2) {
        let d = (w[1].time - w[0].time).num_milliseconds();
        if d > 0 {
            *counts.entry(d).or_default() += 1;
        }
    }
    // Ties resolve to the smallest spacing.
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(d, _)| d)
}

/// Log-price path for one session's ticks: grid from the first in-session
/// tick at the modal spacing up to the last in-session tick, forward-filled.
/// Time is measured in sessions, so a full session has horizon 1.
fn session_path(ticks: &[Tick], session: &Session) -> Result<LogPricePath> {
    let inside: Vec<Tick> = ticks.iter().copied().filter(|t| session.contains(t.time.time())).collect();
    if inside.len() < 3 {
        return Err(JumpError::InsufficientData { needed: 3, got: inside.len() });
    }
    let spacing = modal_spacing_ms(&inside)
        .ok_or_else(|| JumpError::Parse("all in-session timestamps coincide".into()))?;
    let first = inside[0].time;
    let span = (inside[inside.len() - 1].time - first).num_milliseconds();
    let n = (span / spacing) as usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut cursor = 0;
    for j in 0..=n {
        let t = first + chrono::Duration::milliseconds(j as i64 * spacing);
        while cursor + 1 < inside.len() && inside[cursor + 1].time <= t {
            cursor += 1;
        }
        values.push(inside[cursor].price.ln());
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(JumpError::FlaggedFlat);
    }
    let delta = spacing as f64 / session.length_ms() as f64;
    LogPricePath::new(values, delta, n as f64 * delta)
}

/// One trading day from a `timestamp,price` CSV.
pub fn ingest_day_csv(path: &Path, session: &Session) -> Result<LogPricePath> {
    let ticks = read_ticks(path)?;
    let dates: std::collections::BTreeSet<NaiveDate> =
        ticks.iter().filter(|t| session.contains(t.time.time())).map(|t| t.time.date()).collect();
    if dates.len() > 1 {
        return Err(JumpError::Parse(format!("file spans {} trading dates", dates.len())));
    }
    session_path(&ticks, session)
}

/// Splits a multi-day file by calendar date and ingests each day.
pub fn ingest_csv_days(path: &Path, session: &Session) -> Result<Vec<(NaiveDate, Result<LogPricePath>)>> {
    let ticks = read_ticks(path)?;
    let mut by_date: BTreeMap<NaiveDate, Vec<Tick>> = BTreeMap::new();
    for t in ticks {
        by_date.entry(t.time.date()).or_default().push(t);
    }
    Ok(by_date.into_iter().map(|(d, ts)| (d, session_path(&ts, session))).collect())
}
