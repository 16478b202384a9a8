// Copyright 2026 The Modularis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Synthetic join and group-by inputs.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builders::Relation;
use crate::error::{Error, Result};
use crate::oracle::FlatRelation;
use crate::types::TupleType;
use crate::value::RowVector;

/// How keys of the generated relations relate to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correspondence {
    /// Every relation is a permutation of `[0, n)`.
    OneToOne,
    /// The first two relations hold the keys `i / k` for `i < n`, so each key
    /// occurs `k` times (the last one possibly fewer); further relations are
    /// permutations of `[0, n)`.
    FanOut(usize),
    /// Uniform keys in `[0, 2^P)`.
    Random,
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correspondence::OneToOne => write!(f, "one-to-one"),
            Correspondence::FanOut(k) => write!(f, "fanout:{k}"),
            Correspondence::Random => write!(f, "random"),
        }
    }
}

impl FromStr for Correspondence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-to-one" => Ok(Correspondence::OneToOne),
            "random" => Ok(Correspondence::Random),
            _ => match s.strip_prefix("fanout:").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(Correspondence::FanOut(k)),
                _ => Err(Error::SpecInvalid(format!("unknown correspondence `{s}`"))),
            },
        }
    }
}

impl Serialize for Correspondence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Correspondence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorkloadSpec {
    pub tuple_count: usize,
    pub key_bits: u32,
    pub correspondence: Correspondence,
    pub seed: u64,
    pub relation_count: usize,
}

impl WorkloadSpec {
    pub fn new(tuple_count: usize, key_bits: u32, correspondence: Correspondence) -> Self {
        WorkloadSpec {
            tuple_count,
            key_bits,
            correspondence,
            seed: 1,
            relation_count: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=62).contains(&self.key_bits) {
            return Err(Error::SpecInvalid(format!("key bits {} outside 1..=62", self.key_bits)));
        }
        let domain = 1u64 << self.key_bits;
        if self.correspondence != Correspondence::Random && self.tuple_count as u64 > domain {
            return Err(Error::SpecInvalid(format!(
                "{} distinct keys do not fit in {} bits",
                self.tuple_count, self.key_bits
            )));
        }
        if self.relation_count == 0 {
            return Err(Error::SpecInvalid("no relations requested".into()));
        }
        Ok(())
    }
}

/// A named relation of flat Int64 rows stored as little-endian words.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationData {
    pub relation: Relation,
    pub words: Vec<u64>,
}

impl RelationData {
    pub fn new(relation: Relation, words: Vec<u64>) -> Result<Self> {
        let w = relation.ty.len();
        if w == 0 || !words.len().is_multiple_of(w) || !relation.ty.is_flat() {
            return Err(Error::SpecInvalid(format!(
                "{} words do not form rows of {}",
                words.len(),
                relation.ty
            )));
        }
        Ok(RelationData { relation, words })
    }

    pub fn name(&self) -> &str {
        &self.relation.name
    }

    pub fn width(&self) -> usize {
        self.relation.ty.len()
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.width()..(i + 1) * self.width()]
    }

    pub fn to_flat(&self) -> FlatRelation {
        FlatRelation {
            fields: self.relation.ty.names().map(str::to_string).collect(),
            rows: self
                .words
                .chunks_exact(self.width())
                .map(|r| r.iter().map(|w| *w as i64).collect())
                .collect(),
        }
    }

    pub fn to_row_vector(&self) -> Result<RowVector> {
        RowVector::from_words(self.relation.ty.clone().into(), self.words.clone())
    }
}

fn keys_for(spec: &WorkloadSpec, index: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let n = spec.tuple_count;
    let mut keys: Vec<u64> = match spec.correspondence {
        Correspondence::OneToOne => (0..n as u64).collect(),
        Correspondence::FanOut(k) if index < 2 => (0..n as u64).map(|i| i / k as u64).collect(),
        Correspondence::FanOut(_) => (0..n as u64).collect(),
        Correspondence::Random => (0..n).map(|_| rng.gen_range(0..1u64 << spec.key_bits)).collect(),
    };
    keys.shuffle(rng);
    keys
}

/// Relations `r0, r1, …` of layout `⟨key, r<i>_payload⟩`. Payloads are
/// uniform below `2^P` so every row is compressible.
pub fn generate(spec: &WorkloadSpec) -> Result<Vec<RelationData>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.relation_count)
        .map(|i| {
            let keys = keys_for(spec, i, &mut rng);
            let mut words = Vec::with_capacity(keys.len() * 2);
            for k in keys {
                words.push(k);
                words.push(rng.gen_range(0..1u64 << spec.key_bits));
            }
            RelationData::new(Relation::key_payload(&format!("r{i}")), words)
        })
        .collect()
}

/// A single `⟨key, val⟩` relation with `groups` distinct keys drawn
/// uniformly, values below `2^value_bits`.
pub fn generate_groups(rows: usize, groups: usize, key_bits: u32, value_bits: u32, seed: u64) -> Result<RelationData> {
    if groups == 0 || groups as u64 > 1u64 << key_bits {
        return Err(Error::SpecInvalid(format!("{groups} groups do not fit in {key_bits} bits")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Spread the group ids over the whole domain so every partition is used.
    let stride = (1u64 << key_bits) / groups as u64;
    let mut words = Vec::with_capacity(rows * 2);
    for _ in 0..rows {
        words.push(rng.gen_range(0..groups as u64) * stride);
        words.push(rng.gen_range(0..1u64 << value_bits));
    }
    RelationData::new(
        Relation::new("g", TupleType::ints(&["key", "val"])),
        words,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_one_is_a_permutation() {
        let mut spec = WorkloadSpec::new(8, 4, Correspondence::OneToOne);
        spec.seed = 1;
        let rels = generate(&spec).unwrap();
        let mut keys: Vec<u64> = (0..8).map(|i| rels[0].row(i)[0]).collect();
        keys.sort();
        assert_eq!(keys, (0..8).collect::<Vec<_>>());
        assert_eq!(generate(&spec).unwrap(), rels);
    }

    #[test]
    fn correspondence_parsing() {
        assert_eq!("fanout:4".parse::<Correspondence>().unwrap(), Correspondence::FanOut(4));
        assert!("fanout:0".parse::<Correspondence>().is_err());
        assert_eq!(Correspondence::FanOut(2).to_string(), "fanout:2");
    }
}
