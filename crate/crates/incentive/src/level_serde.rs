//! Levels serialize as the single letters `"A"`..`"D"`.

use fedring_crypto::Level;
use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(level: &Level, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_char(level.as_char())
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Level, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(level: &Option<Level>, s: S) -> Result<S::Ok, S::Error> {
        match level {
            Some(l) => s.serialize_some(&l.as_char()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Level>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}
