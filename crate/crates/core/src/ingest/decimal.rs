//! Exact decimal quotes as scaled integers.

use super::IngestError;

/// A decimal literal split into mantissa and number of fractional digits:
/// `"1.3050"` is `Fixed { mantissa: 13050, decimals: 4 }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixed {
    pub mantissa: i64,
    pub decimals: u32,
}

/// Largest number of fractional digits accepted in a quote.
pub const MAX_DECIMALS: u32 = 12;

impl Fixed {
    pub fn parse(raw: &str) -> Option<Fixed> {
        let s = raw.trim();
        let (neg, body) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let decimals = frac_part.len() as u32;
        if decimals > MAX_DECIMALS {
            return None;
        }
        let mut mantissa: i64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa.checked_mul(10)?.checked_add(i64::from(b - b'0'))?;
        }
        Some(Fixed {
            mantissa: if neg { -mantissa } else { mantissa },
            decimals,
        })
    }

    /// Mantissa expressed with `decimals` fractional digits (`decimals >= self.decimals`).
    pub fn rescale(self, decimals: u32) -> Option<i64> {
        debug_assert!(decimals >= self.decimals);
        self.mantissa.checked_mul(pow10(decimals - self.decimals)?)
    }
}

pub fn pow10(exp: u32) -> Option<i64> {
    10i64.checked_pow(exp)
}

/// Convert a tick count to quote units. Division by an exact power of ten
/// gives the correctly rounded decimal value.
pub fn ticks_to_value(ticks: i64, decimals: u32) -> f64 {
    ticks as f64 / 10f64.powi(decimals as i32)
}

/// Bring a list of parsed literals onto one common scale.
pub(crate) fn common_scale(values: &[Fixed]) -> Result<(u32, Vec<i64>), IngestError> {
    let decimals = values.iter().map(|f| f.decimals).max().unwrap_or(0);
    let ticks = values
        .iter()
        .map(|f| f.rescale(decimals).ok_or(IngestError::Overflow))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((decimals, ticks))
}
