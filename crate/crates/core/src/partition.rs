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

//! Radix partitioning: bucket functions over the dense key domain, histogram
//! prefix sums, scatter into contiguous partitions, and the key/value packing
//! used on the wire.
//!
//! Bit layout: a key is a `P`-bit integer. Pass 0 takes the most significant
//! `F` bits, later passes take the next `passBits[i]` bits below that. Since
//! every key of a pass-0 partition shares its top `F` bits, those bits can be
//! dropped before transfer and recovered as `(partitionId << (P - F)) | rest`.
//!
//! Packed word: `(keyRemainder << P) | value`, which needs `2P - F <= 64` bits.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::TupleType;
use crate::value::{RowVector, Tuple};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadixSpec {
    #[serde(rename = "P")]
    pub key_bits: u32,
    #[serde(rename = "F")]
    pub fanout_bits: u32,
    #[serde(rename = "passBits", default, skip_serializing_if = "Vec::is_empty")]
    pub pass_bits: Vec<u32>,
}

impl RadixSpec {
    /// Network pass of `F` bits followed by the given local passes.
    pub fn new(key_bits: u32, fanout_bits: u32, local_passes: &[u32]) -> Result<Self> {
        let mut pass_bits = vec![fanout_bits];
        pass_bits.extend_from_slice(local_passes);
        let spec = RadixSpec {
            key_bits,
            fanout_bits,
            pass_bits,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, f) = (self.key_bits, self.fanout_bits);
        if p == 0 || p > 63 {
            return Err(Error::InvalidRadix(format!("P={p} must lie in [1, 63]")));
        }
        if f > p {
            return Err(Error::InvalidRadix(format!("F={f} exceeds P={p}")));
        }
        if let Some(first) = self.pass_bits.first() {
            if *first != f {
                return Err(Error::InvalidRadix(format!(
                    "first pass has {first} bits, expected F={f}"
                )));
            }
        }
        let total: u32 = self.passes().iter().sum();
        if total > p {
            return Err(Error::InvalidRadix(format!(
                "passes use {total} bits, more than P={p}"
            )));
        }
        Ok(())
    }

    pub fn passes(&self) -> Vec<u32> {
        if self.pass_bits.is_empty() {
            vec![self.fanout_bits]
        } else {
            self.pass_bits.clone()
        }
    }

    pub fn fanout(&self, pass: usize) -> usize {
        1usize << self.passes()[pass]
    }

    pub fn compression_legal(&self) -> bool {
        2 * self.key_bits - self.fanout_bits <= 64
    }

    /// Bits kept per key after dropping the partition bits.
    pub fn remainder_bits(&self) -> u32 {
        self.key_bits - self.fanout_bits
    }

    pub fn check_key(&self, key: i64) -> Result<()> {
        if key < 0 || (key as u64) >> self.key_bits != 0 {
            return Err(Error::KeyOutOfDomain {
                key,
                bits: self.key_bits,
            });
        }
        Ok(())
    }
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// The bucket of `key` in the given pass.
pub fn radix_bucket(key: i64, spec: &RadixSpec, pass: usize) -> Result<u64> {
    spec.check_key(key)?;
    let passes = spec.passes();
    let bits = *passes
        .get(pass)
        .ok_or_else(|| Error::InvalidRadix(format!("pass {pass} not configured")))?;
    let consumed: u32 = passes[..=pass].iter().sum();
    let shift = spec.key_bits - consumed;
    Ok(((key as u64) >> shift) & mask(bits))
}

pub fn compress(key: i64, value: i64, spec: &RadixSpec) -> Result<u64> {
    if !spec.compression_legal() {
        return Err(Error::CompressionIllegal {
            p: spec.key_bits,
            f: spec.fanout_bits,
        });
    }
    spec.check_key(key)?;
    if value < 0 || (value as u64) >> spec.key_bits != 0 {
        return Err(Error::ValueOutOfDomain {
            value,
            bits: spec.key_bits,
        });
    }
    let rest = key as u64 & mask(spec.remainder_bits());
    Ok((rest << spec.key_bits) | value as u64)
}

pub fn packed_remainder(packed: u64, spec: &RadixSpec) -> u64 {
    packed >> spec.key_bits
}

pub fn packed_value(packed: u64, spec: &RadixSpec) -> i64 {
    (packed & mask(spec.key_bits)) as i64
}

pub fn recover_key(remainder: u64, partition: u64, spec: &RadixSpec) -> i64 {
    debug_assert!(partition >> spec.fanout_bits == 0, "partition id out of range");
    ((partition << spec.remainder_bits()) | remainder) as i64
}

/// Inverse of [`compress`] given the pass-0 partition of the key.
pub fn decompress(packed: u64, partition: u64, spec: &RadixSpec) -> (i64, i64) {
    (
        recover_key(packed_remainder(packed, spec), partition, spec),
        packed_value(packed, spec),
    )
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Histogram {
    pub fn zeros(buckets: usize) -> Self {
        Histogram {
            counts: vec![0; buckets],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Histogram { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, bucket: i64) -> Result<()> {
        let n = self.counts.len();
        match usize::try_from(bucket) {
            Ok(b) if b < n => {
                self.counts[b] += 1;
                Ok(())
            }
            _ => Err(Error::BucketOutOfRange { bucket, buckets: n }),
        }
    }
}

/// Exclusive prefix sum of the bucket counts.
pub fn prefix_offsets(hist: &Histogram) -> Vec<u64> {
    hist.counts
        .iter()
        .scan(0u64, |acc, c| {
            let at = *acc;
            *acc += c;
            Some(at)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionBlock {
    pub partition_id: i64,
    pub data: RowVector,
}

/// Scatters flat rows into one contiguous buffer laid out by the histogram's
/// prefix offsets. Every write is bounds-checked against the bucket's extent.
pub struct Partitioner {
    element: Arc<TupleType>,
    width: usize,
    words: Vec<u64>,
    begin: Vec<usize>,
    cursor: Vec<usize>,
    end: Vec<usize>,
}

impl Partitioner {
    pub fn new(element: Arc<TupleType>, hist: &Histogram) -> Result<Self> {
        if !element.is_flat() {
            return Err(Error::NotACollection(format!(
                "partitioning needs flat rows, got {element}"
            )));
        }
        let width = element.len();
        let offsets = prefix_offsets(hist);
        let total = hist.total() as usize;
        let mut words = Vec::new();
        words
            .try_reserve_exact(total * width)
            .map_err(|_| Error::AllocationFailure(total))?;
        words.resize(total * width, 0);
        let begin: Vec<usize> = offsets.iter().map(|o| *o as usize).collect();
        let end = begin
            .iter()
            .zip(hist.counts())
            .map(|(b, c)| b + *c as usize)
            .collect();
        Ok(Partitioner {
            element,
            width,
            words,
            cursor: begin.clone(),
            begin,
            end,
        })
    }

    pub fn push_words(&mut self, bucket: i64, row: &[u64]) -> Result<()> {
        let n = self.begin.len();
        let b = match usize::try_from(bucket) {
            Ok(b) if b < n => b,
            _ => return Err(Error::BucketOutOfRange { bucket, buckets: n }),
        };
        let at = self.cursor[b];
        if at >= self.end[b] {
            return Err(Error::HistogramMismatch(format!(
                "bucket {b} overflows its {} reserved rows",
                self.end[b] - self.begin[b]
            )));
        }
        self.words[at * self.width..(at + 1) * self.width].copy_from_slice(row);
        self.cursor[b] = at + 1;
        Ok(())
    }

    pub fn push(&mut self, bucket: i64, t: &Tuple) -> Result<()> {
        let mut row = [0u64; 16];
        if t.len() <= row.len() {
            for (slot, v) in row.iter_mut().zip(t.values()) {
                *slot = v.atom_bits().expect("flat tuple");
            }
            self.push_words(bucket, &row[..t.len()])
        } else {
            let row: Vec<u64> = t.values().iter().map(|v| v.atom_bits().expect("flat tuple")).collect();
            self.push_words(bucket, &row)
        }
    }

    pub fn finish(self) -> Result<Vec<PartitionBlock>> {
        for (b, (c, e)) in self.cursor.iter().zip(&self.end).enumerate() {
            if c != e {
                return Err(Error::HistogramMismatch(format!(
                    "bucket {b} received {} rows, histogram says {}",
                    c - self.begin[b],
                    e - self.begin[b]
                )));
            }
        }
        let total = self.end.last().copied().unwrap_or(0);
        let all = if self.width == 0 {
            RowVector::from_tuples(self.element.clone(), &vec![Tuple::default(); total])?
        } else {
            RowVector::from_words(self.element.clone(), self.words)?
        };
        Ok(self
            .begin
            .iter()
            .zip(&self.end)
            .enumerate()
            .map(|(b, (s, e))| PartitionBlock {
                partition_id: b as i64,
                data: all.slice(*s, e - s),
            })
            .collect())
    }
}

/// Partitions `rows` into `hist.len()` blocks, ascending by id, including
/// empty ones. Row order inside a block follows input order.
pub fn local_partitioning<'a, F>(
    element: Arc<TupleType>,
    rows: impl IntoIterator<Item = &'a Tuple>,
    hist: &Histogram,
    mut bucket: F,
) -> Result<Vec<PartitionBlock>>
where
    F: FnMut(&Tuple) -> Result<i64>,
{
    let mut p = Partitioner::new(element, hist)?;
    for t in rows {
        p.push(bucket(t)?, t)?;
    }
    p.finish()
}
