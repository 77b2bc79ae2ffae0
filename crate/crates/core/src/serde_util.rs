//! Serde adapters that write exact integers as decimal strings.

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serializer};

fn parse<E: serde::de::Error>(s: &str) -> Result<BigInt, E> {
    s.trim().parse::<BigInt>().map_err(|_| E::custom(format!("invalid integer {s:?}")))
}

/// Accepts either a JSON integer or a decimal string.
#[derive(Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Num(i64),
    Str(String),
}

impl IntRepr {
    fn into_bigint<E: serde::de::Error>(self) -> Result<BigInt, E> {
        match self {
            IntRepr::Num(n) => Ok(BigInt::from(n)),
            IntRepr::Str(s) => parse(&s),
        }
    }
}

pub mod bigint {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        IntRepr::deserialize(d)?.into_bigint()
    }
}

pub mod bigint_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<IntRepr>::deserialize(d)?.into_iter().map(IntRepr::into_bigint).collect()
    }
}

pub mod bigint_matrix {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for row in v {
            let strs: Vec<String> = row.iter().map(ToString::to_string).collect();
            seq.serialize_element(&strs)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        Vec::<Vec<IntRepr>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(IntRepr::into_bigint).collect())
            .collect()
    }
}

/// Writes rational matrices as nested lists of strings like `"-3/2"`.
pub mod rational_matrix {
    use num_rational::BigRational;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<BigRational>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(m.len()))?;
        for row in m {
            let r: Vec<String> = row.iter().map(ToString::to_string).collect();
            seq.serialize_element(&r)?;
        }
        seq.end()
    }
}

pub mod opt_rational_matrix {
    use num_rational::BigRational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(m: &Option<Vec<Vec<BigRational>>>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::rational_matrix::serialize(m, s),
            None => s.serialize_none(),
        }
    }
}
