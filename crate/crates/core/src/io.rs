//! JSON mesh document schema.
//!
//! ```json
//! {
//!   "vertices": [{"id": 0, "x": 0, "y": 0}, ...],
//!   "edges":    [{"u": 0, "v": 1, "c": 1}, ...],
//!   "cells":    [[0, 1, 4, 3], ...],
//!   "boundary": {"loops": [[...]], "alphaArcs": [[...]], "betaArcs": [[...]], "k": 1}
//! }
//! ```
//!
//! Every number may be a JSON number or an exact rational string `"p/q"`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number that accepts `"p/q"` strings on input and is written back as a
/// shortest round-trip decimal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

pub fn parse_real(text: &str) -> Result<f64> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad_number(text))?;
            let q: f64 = q.trim().parse().map_err(|_| bad_number(text))?;
            if q == 0.0 {
                return Err(bad_number(text));
            }
            p / q
        }
        None => text.parse().map_err(|_| bad_number(text))?,
    };
    if parsed.is_finite() {
        Ok(parsed)
    } else {
        Err(bad_number(text))
    }
}

fn bad_number(text: &str) -> Error {
    Error::Parse(format!("invalid number '{text}'"))
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;

        impl<'de> Visitor<'de> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a \"p/q\" string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                parse_real(v).map(Real).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RealVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: u64,
    pub x: Real,
    pub y: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: u64,
    pub v: u64,
    pub c: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundaryRecord {
    pub loops: Vec<Vec<u64>>,
    #[serde(default)]
    pub alpha_arcs: Vec<Vec<u64>>,
    #[serde(default)]
    pub beta_arcs: Vec<Vec<u64>>,
    pub k: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    pub cells: Vec<Vec<u64>>,
    pub boundary: BoundaryRecord,
}

impl MeshDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_and_decimals() {
        assert_eq!(parse_real("7/11").unwrap(), 7.0 / 11.0);
        assert_eq!(parse_real(" 2.5 ").unwrap(), 2.5);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        let r: Real = serde_json::from_str("\"-3/4\"").unwrap();
        assert_eq!(r.0, -0.75);
        let r: Real = serde_json::from_str("3").unwrap();
        assert_eq!(r.0, 3.0);
    }

    #[test]
    fn shortest_round_trip_output() {
        let text = serde_json::to_string(&Real(0.1)).unwrap();
        assert_eq!(text, "0.1");
        let back: Real = serde_json::from_str(&text).unwrap();
        assert_eq!(back.0.to_bits(), 0.1f64.to_bits());
    }
}
