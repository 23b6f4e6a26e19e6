//! Progress values, bins and the shared text token space.
//!
//! Bins: `bin = floor((v + 1) * 100 + 0.5)` for `v` in `[-1, 0]`, so ties
//! round half up, and `dequantize(bin) = bin / 100 - 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

pub const NUM_BINS: usize = 101;
/// Bins plus the anomaly token.
pub const NUM_CLASSES: usize = NUM_BINS + 1;
pub const ANOMALY_TOKEN: &str = "<aci>";

/// A progress bin in `0..=100`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Bin(u8);

impl Bin {
    pub const MIN: Bin = Bin(0);
    pub const MAX: Bin = Bin(100);

    pub fn new(b: u32) -> Result<Self> {
        if b as usize >= NUM_BINS {
            return Err(Error::Labeling(format!("bin {b} outside 0..=100")));
        }
        Ok(Bin(b as u8))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0 - 1.0
    }
}

impl TryFrom<u8> for Bin {
    type Error = Error;

    fn try_from(b: u8) -> Result<Self> {
        Bin::new(u32::from(b))
    }
}

impl From<Bin> for u8 {
    fn from(b: Bin) -> u8 {
        b.0
    }
}

/// `max(-1, (t - L) / L_max)`.
pub fn value_target(t: u64, len: u64, lmax: u64) -> Result<f64> {
    if lmax == 0 {
        return Err(Error::Labeling("L_max must be >= 1".into()));
    }
    if t > len {
        return Err(Error::Labeling(format!("frame {t} beyond segment length {len}")));
    }
    let v = (t as f64 - len as f64) / lmax as f64;
    Ok(v.max(-1.0))
}

pub fn quantize(v: f64) -> Result<Bin> {
    if !(-1.0..=0.0).contains(&v) {
        return Err(Error::Labeling(format!("value {v} outside [-1, 0]")));
    }
    let b = ((v + 1.0) * 100.0 + 0.5).floor().clamp(0.0, 100.0);
    Ok(Bin(b as u8))
}

pub fn dequantize(bin: u32) -> Result<f64> {
    Bin::new(bin).map(Bin::value)
}

/// One critic output: a progress bin or the anomaly token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueToken {
    Progress(Bin),
    Anomaly,
}

impl ValueToken {
    /// Class index: bins map to themselves, the anomaly token to 101.
    pub fn class(self) -> usize {
        match self {
            ValueToken::Progress(b) => b.get() as usize,
            ValueToken::Anomaly => NUM_BINS,
        }
    }

    pub fn from_class(c: usize) -> Result<Self> {
        match c {
            c if c < NUM_BINS => Ok(ValueToken::Progress(Bin(c as u8))),
            NUM_BINS => Ok(ValueToken::Anomaly),
            _ => Err(Error::Labeling(format!("class {c} outside 0..=101"))),
        }
    }

    pub fn bin(self) -> Option<Bin> {
        match self {
            ValueToken::Progress(b) => Some(b),
            ValueToken::Anomaly => None,
        }
    }

    pub fn is_anomaly(self) -> bool {
        self == ValueToken::Anomaly
    }
}

impl fmt::Display for ValueToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueToken::Progress(b) => write!(f, "{}", b.get()),
            ValueToken::Anomaly => f.write_str(ANOMALY_TOKEN),
        }
    }
}

impl FromStr for ValueToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == ANOMALY_TOKEN {
            return Ok(ValueToken::Anomaly);
        }
        // Canonical decimal only: no sign, no leading zeros.
        let canonical = !s.is_empty()
            && s.bytes().all(|c| c.is_ascii_digit())
            && (s == "0" || !s.starts_with('0'));
        if !canonical {
            return Err(Error::parse(format!("bad value token {s:?}")));
        }
        let b: u32 = s
            .parse()
            .map_err(|_| Error::parse(format!("bad value token {s:?}")))?;
        Bin::new(b)
            .map(ValueToken::Progress)
            .map_err(|_| Error::parse(format!("bad value token {s:?}")))
    }
}

impl Serialize for ValueToken {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ValueToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_target_examples() {
        assert_eq!(value_target(10, 10, 7).unwrap(), 0.0);
        assert_eq!(value_target(0, 200, 100).unwrap(), -1.0);
        assert_eq!(value_target(5, 10, 20).unwrap(), -0.25);
        assert!(value_target(0, 10, 0).is_err());
        assert!(value_target(11, 10, 5).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(-1.0).unwrap().get(), 0);
        assert_eq!(quantize(0.0).unwrap().get(), 100);
        assert_eq!(quantize(-0.5).unwrap().get(), 50);
        assert_eq!(quantize(-0.125).unwrap().get(), 88);
        assert!(quantize(0.01).is_err());
        assert!(quantize(-1.01).is_err());
        assert!(quantize(f64::NAN).is_err());
    }

    #[test]
    fn dequantize_examples() {
        assert_eq!(dequantize(0).unwrap(), -1.0);
        assert_eq!(dequantize(100).unwrap(), 0.0);
        assert!(dequantize(101).is_err());
    }

    #[test]
    fn bins_round_trip() {
        for b in 0..=100u32 {
            assert_eq!(quantize(dequantize(b).unwrap()).unwrap().get() as u32, b);
        }
    }

    #[test]
    fn quantization_error_is_half_a_bin() {
        for i in 0..=100_000u32 {
            let v = -f64::from(i) / 100_000.0;
            let back = quantize(v).unwrap().value();
            assert!((back - v).abs() <= 0.005 + 1e-12, "{v} -> {back}");
        }
    }

    #[test]
    fn tokens_round_trip() {
        for c in 0..NUM_CLASSES {
            let t = ValueToken::from_class(c).unwrap();
            assert_eq!(t.class(), c);
            assert_eq!(t.to_string().parse::<ValueToken>().unwrap(), t);
        }
        assert_eq!(ValueToken::Anomaly.to_string(), "<aci>");
        for bad in ["", "101", "-1", "07", "aci", "1.5"] {
            assert!(bad.parse::<ValueToken>().is_err(), "{bad}");
        }
    }
}
