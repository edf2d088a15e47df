//! Text formats: Finam-style bar CSV, tick CSV and the canonical
//! `timestamp_ns,delta_x` change export.

use std::io::{BufRead, Write};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};

use super::decimal::{common_scale, Fixed, MAX_DECIMALS};
use super::{ChangeSeries, IngestError, PriceSeries, Timeframe};

pub const BAR_HEADER: &str = "<TICKER>,<PER>,<DATE>,<TIME>,<OPEN>,<HIGH>,<LOW>,<CLOSE>,<VOL>";
pub const CANONICAL_HEADER: &str = "timestamp_ns,delta_x";

/// Which quote a tick contributes as its price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceRule {
    #[default]
    Bid,
    Mid,
}

/// Yields `(line_number, trimmed_line)` for non-blank lines.
fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l.trim().to_string())).map_err(IngestError::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.is_empty()))
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedRow { line, reason: reason.into() }
}

fn split_fields(line: &str) -> Vec<&str> {
    let sep = if line.contains(';') && !line.contains(',') { ';' } else { ',' };
    line.split(sep).map(str::trim).collect()
}

fn check_monotonic(prev: Option<i64>, ts: i64, line: usize) -> Result<(), IngestError> {
    match prev {
        Some(p) if ts < p => Err(IngestError::NonMonotonic { line }),
        _ => Ok(()),
    }
}

fn positive(f: Fixed, line: usize) -> Result<Fixed, IngestError> {
    if f.mantissa > 0 {
        Ok(f)
    } else {
        Err(IngestError::NonPositivePrice { line })
    }
}

fn ns_of(dt: NaiveDateTime) -> Option<i64> {
    dt.and_utc().timestamp_nanos_opt()
}

/// Parse a Finam-style bar file, keeping the CLOSE column. DATE+TIME are UTC.
///
/// When `timeframe` is given the `<PER>` column must agree with it; otherwise
/// the time frame is read from the first row.
pub fn parse_bar_csv<R: BufRead>(reader: R, timeframe: Option<Timeframe>) -> Result<PriceSeries, IngestError> {
    let mut it = lines(reader);
    let (_, header) = it.next().transpose()?.ok_or(IngestError::EmptyFile)?;
    let normalized = split_fields(&header).join(",").to_ascii_uppercase();
    if normalized != BAR_HEADER {
        return Err(IngestError::Header { expected: BAR_HEADER.into(), found: header });
    }

    let mut instrument = None;
    let mut frame = timeframe;
    let mut timestamps = Vec::new();
    let mut closes = Vec::new();
    for row in it {
        let (line, text) = row?;
        let f = split_fields(&text);
        if f.len() != 9 {
            return Err(malformed(line, format!("expected 9 fields, found {}", f.len())));
        }
        let per = Timeframe::from_finam_period(f[1])
            .ok_or_else(|| malformed(line, format!("unknown period `{}`", f[1])))?;
        match frame {
            None => frame = Some(per),
            Some(tf) if tf != per => {
                return Err(IngestError::TimeframeMismatch { expected: tf, found: f[1].to_string() })
            }
            _ => {}
        }
        instrument.get_or_insert_with(|| f[0].to_string());

        let date = NaiveDate::parse_from_str(f[2], "%Y%m%d")
            .map_err(|_| malformed(line, format!("bad DATE `{}`", f[2])))?;
        let time = match f[3].len() {
            4 => NaiveTime::parse_from_str(f[3], "%H%M"),
            _ => NaiveTime::parse_from_str(f[3], "%H%M%S"),
        }
        .map_err(|_| malformed(line, format!("bad TIME `{}`", f[3])))?;
        let ts = ns_of(date.and_time(time)).ok_or_else(|| malformed(line, "timestamp out of range"))?;
        check_monotonic(timestamps.last().copied(), ts, line)?;

        let close = Fixed::parse(f[7]).ok_or_else(|| malformed(line, format!("bad CLOSE `{}`", f[7])))?;
        timestamps.push(ts);
        closes.push(positive(close, line)?);
    }
    if closes.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let (decimals, ticks) = common_scale(&closes)?;
    PriceSeries::new(
        instrument.unwrap_or_default(),
        frame.expect("set by first row"),
        decimals,
        timestamps,
        ticks,
    )
}

/// ISO-8601 (with or without offset; naive times are UTC) or integer epoch milliseconds.
fn parse_timestamp(raw: &str) -> Option<i64> {
    if let Ok(ms) = raw.parse::<i64>() {
        return ms.checked_mul(1_000_000);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        return dt.timestamp_nanos_opt();
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return ns_of(dt);
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| ns_of(d.and_time(NaiveTime::MIN)))
}

/// Parse a `timestamp,bid[,ask]` tick file.
pub fn parse_tick_csv<R: BufRead>(
    reader: R,
    instrument: &str,
    rule: PriceRule,
) -> Result<PriceSeries, IngestError> {
    let mut it = lines(reader);
    let (_, header) = it.next().transpose()?.ok_or(IngestError::EmptyFile)?;
    let cols: Vec<String> = split_fields(&header).iter().map(|c| c.to_ascii_lowercase()).collect();
    let has_ask = match cols.as_slice() {
        [t, b] if t == "timestamp" && b == "bid" => false,
        [t, b, a] if t == "timestamp" && b == "bid" && a == "ask" => true,
        _ => {
            return Err(IngestError::Header { expected: "timestamp,bid[,ask]".into(), found: header })
        }
    };
    if rule == PriceRule::Mid && !has_ask {
        return Err(IngestError::MissingAsk);
    }

    let mut timestamps = Vec::new();
    let mut bids = Vec::new();
    let mut asks = Vec::new();
    for row in it {
        let (line, text) = row?;
        let f = split_fields(&text);
        if f.len() != cols.len() {
            return Err(malformed(line, format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let ts = parse_timestamp(f[0]).ok_or_else(|| IngestError::Timestamp { line, raw: f[0].to_string() })?;
        check_monotonic(timestamps.last().copied(), ts, line)?;
        let bid = Fixed::parse(f[1]).ok_or_else(|| malformed(line, format!("bad bid `{}`", f[1])))?;
        let bid = positive(bid, line)?;
        if has_ask {
            let ask = Fixed::parse(f[2]).ok_or_else(|| malformed(line, format!("bad ask `{}`", f[2])))?;
            let d = bid.decimals.max(ask.decimals);
            let (b, a) = (bid.rescale(d), ask.rescale(d));
            if a < b {
                return Err(IngestError::AskBelowBid { line });
            }
            asks.push(ask);
        }
        timestamps.push(ts);
        bids.push(bid);
    }
    if bids.is_empty() {
        return Err(IngestError::EmptyFile);
    }

    let (decimals, ticks) = match rule {
        PriceRule::Bid => common_scale(&bids)?,
        PriceRule::Mid => {
            let mut both = bids.clone();
            both.extend_from_slice(&asks);
            let (d, all) = common_scale(&both)?;
            let n = bids.len();
            let sums: Vec<i64> = (0..n)
                .map(|i| all[i].checked_add(all[n + i]).ok_or(IngestError::Overflow))
                .collect::<Result<_, _>>()?;
            if sums.iter().all(|s| s % 2 == 0) {
                (d, sums.into_iter().map(|s| s / 2).collect())
            } else {
                // one more decimal makes every half exact
                if d + 1 > MAX_DECIMALS {
                    return Err(IngestError::Overflow);
                }
                let ticks = sums
                    .into_iter()
                    .map(|s| s.checked_mul(5).ok_or(IngestError::Overflow))
                    .collect::<Result<_, _>>()?;
                (d + 1, ticks)
            }
        }
    };
    PriceSeries::new(instrument, Timeframe::Tick, decimals, timestamps, ticks)
}

/// Write a change series as `timestamp_ns,delta_x`.
pub fn write_canonical<W: Write>(cs: &ChangeSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CANONICAL_HEADER}")?;
    for (t, v) in cs.timestamps().iter().zip(cs.values()) {
        writeln!(out, "{t},{v}")?;
    }
    Ok(())
}

/// Read a canonical change file. Without an explicit tick size the tick is
/// `10^-d`, `d` being the most fractional digits seen (capped at 12).
pub fn read_canonical<R: BufRead>(
    reader: R,
    scale: u32,
    tick_size: Option<f64>,
) -> Result<ChangeSeries, IngestError> {
    let mut it = lines(reader);
    let (_, header) = it.next().transpose()?.ok_or(IngestError::EmptyFile)?;
    if header != CANONICAL_HEADER {
        return Err(IngestError::Header { expected: CANONICAL_HEADER.into(), found: header });
    }
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut decimals = 0usize;
    for row in it {
        let (line, text) = row?;
        let (t, v) = text.split_once(',').ok_or_else(|| malformed(line, "expected 2 fields"))?;
        let ts: i64 = t.trim().parse().map_err(|_| IngestError::Timestamp { line, raw: t.to_string() })?;
        check_monotonic(timestamps.last().copied(), ts, line)?;
        let v = v.trim();
        let value: f64 = v.parse().map_err(|_| malformed(line, format!("bad delta_x `{v}`")))?;
        if !value.is_finite() {
            return Err(malformed(line, "non-finite delta_x"));
        }
        if let Some((_, frac)) = v.split_once('.') {
            decimals = decimals.max(frac.len());
        }
        timestamps.push(ts);
        values.push(value);
    }
    if values.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let tick = tick_size.unwrap_or_else(|| 10f64.powi(-(decimals.min(MAX_DECIMALS as usize) as i32)));
    ChangeSeries::new(scale, timestamps, values, tick)
}

/// Read a bare sample: one number per line, or a canonical change file
/// (header skipped, last column taken). `#` lines are ignored.
pub fn read_values<R: BufRead>(reader: R) -> Result<Vec<f64>, IngestError> {
    let mut out = Vec::new();
    for row in lines(reader) {
        let (line, text) = row?;
        if text.starts_with('#') || (out.is_empty() && text == CANONICAL_HEADER) {
            continue;
        }
        let field = text.rsplit(',').next().unwrap_or_default().trim();
        let v: f64 = field.parse().map_err(|_| malformed(line, format!("bad value `{field}`")))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(out)
}
