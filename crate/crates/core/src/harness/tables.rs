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

//! Order, lineitem and part tables with TPC-H-like value ranges. Dates are
//! day numbers in `[0, 2556)`; prices are in cents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builders::query::{lineitem_type, orders_type, part_type};
use crate::builders::Relation;
use crate::error::Result;

use super::workload::RelationData;

pub const DAYS: i64 = 2556;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableScale {
    pub orders: usize,
    pub parts: usize,
}

impl TableScale {
    /// 2^17 orders (about 2^19 lineitems) and 2^16 parts.
    pub fn standard() -> Self {
        TableScale {
            orders: 1 << 17,
            parts: 1 << 16,
        }
    }

    /// Key bits covering both the order and the part keys.
    pub fn key_bits(&self) -> u32 {
        let max = self.orders.max(self.parts).max(2) as u64;
        64 - (max - 1).leading_zeros()
    }
}

/// Returns `orders`, `lineitem` and `part` in that order.
pub fn generate_tables(scale: TableScale, seed: u64) -> Result<Vec<RelationData>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orders = Vec::with_capacity(scale.orders * 3);
    let mut lines = Vec::with_capacity(scale.orders * 4 * 10);
    for o in 0..scale.orders as i64 {
        let date = rng.gen_range(0..DAYS - 151);
        orders.extend([o, date, rng.gen_range(0..5)]);
        for _ in 0..rng.gen_range(1..=7) {
            let ship = date + rng.gen_range(1..=121);
            let commit = date + rng.gen_range(30..=90);
            let receipt = ship + rng.gen_range(1..=30);
            lines.extend([
                o,
                rng.gen_range(0..scale.parts as i64),
                rng.gen_range(1..=50),
                rng.gen_range(100..=100_000),
                rng.gen_range(0..=10),
                ship,
                commit,
                receipt,
                rng.gen_range(0..7),
                rng.gen_range(0..4),
            ]);
        }
    }
    let mut parts = Vec::with_capacity(scale.parts * 5);
    for p in 0..scale.parts as i64 {
        parts.extend([
            p,
            rng.gen_range(1..=5) * 10 + rng.gen_range(1..=5),
            rng.gen_range(1..=50),
            rng.gen_range(0..40),
            rng.gen_range(0..150),
        ]);
    }
    let words = |v: Vec<i64>| v.into_iter().map(|x| x as u64).collect();
    Ok(vec![
        RelationData::new(Relation::new("orders", orders_type()), words(orders))?,
        RelationData::new(Relation::new("lineitem", lineitem_type()), words(lines))?,
        RelationData::new(Relation::new("part", part_type()), words(parts))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_ranges() {
        let t = generate_tables(TableScale { orders: 1000, parts: 500 }, 3).unwrap();
        assert_eq!(t[0].len(), 1000);
        assert!((1000..=7000).contains(&t[1].len()));
        assert_eq!(t[2].len(), 500);
        assert!(t[1].to_flat().rows.iter().all(|r| r[1] < 500 && r[7] < DAYS));
        assert_eq!(TableScale::standard().key_bits(), 17);
    }
}
