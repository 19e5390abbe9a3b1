//! JSON helpers for reals that may be infinite.
//!
//! JSON has no infinity literal; `+inf` is written as the string `"inf"` and
//! accepted back as `"inf"`, `"+inf"`, `"infinity"` (any case).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Num(f64),
    Text(String),
}

pub(crate) fn parse(raw: &str) -> Option<f64> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// Extended real wrapper with the string encoding for infinities.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtF64(pub f64);

impl Serialize for ExtF64 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ext_f64::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ExtF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ext_f64::deserialize(d).map(ExtF64)
    }
}

pub mod ext_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t.eq_ignore_ascii_case("nan") => Ok(f64::NAN),
            Raw::Text(t) => parse(&t).ok_or_else(|| D::Error::custom(format!("not a number: {t}"))),
        }
    }
}

/// [`ext_f64`] for optional values; `None` is `null`.
pub mod opt_ext_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => ext_f64::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<ExtF64>::deserialize(d).map(|v| v.map(|e| e.0))
    }
}
