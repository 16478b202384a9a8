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

//! Hand-written reference answers for the four query shapes, computed with
//! hash maps straight from the generated tables.

use std::collections::{BTreeMap, HashMap};

use modularis::harness::RelationData;

type Rows = Vec<Vec<i64>>;

fn table(t: &RelationData) -> Rows {
    t.to_flat().rows
}

/// `[orders, lineitem, part]` as produced by the table generator.
pub struct Tables {
    pub orders: Rows,
    pub lineitem: Rows,
    pub part: Rows,
}

impl Tables {
    pub fn new(t: &[RelationData]) -> Self {
        Tables {
            orders: table(&t[0]),
            lineitem: table(&t[1]),
            part: table(&t[2]),
        }
    }
}

// orders: o_orderkey, o_orderdate, o_orderpriority
// lineitem: l_orderkey, l_partkey, l_quantity, l_extendedprice, l_discount,
//           l_shipdate, l_commitdate, l_receiptdate, l_shipmode, l_shipinstruct
// part: p_partkey, p_brand, p_size, p_container, p_type

fn revenue(l: &[i64]) -> i64 {
    l[3] * (100 - l[4])
}

pub fn q4(t: &Tables) -> Rows {
    let prio: HashMap<i64, i64> = t
        .orders
        .iter()
        .filter(|o| (1000..=1091).contains(&o[1]))
        .map(|o| (o[0], o[2]))
        .collect();
    let mut counts = BTreeMap::new();
    for l in t.lineitem.iter().filter(|l| l[6] < l[7]) {
        if let Some(p) = prio.get(&l[0]) {
            *counts.entry(*p).or_insert(0) += 1;
        }
    }
    counts.into_iter().map(|(p, c)| vec![p, c]).collect()
}

pub fn q12(t: &Tables) -> Rows {
    let prio: HashMap<i64, i64> = t.orders.iter().map(|o| (o[0], o[2])).collect();
    let mut counts: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
    for l in &t.lineitem {
        let keep = (l[8] == 3 || l[8] == 5) && l[6] < l[7] && l[5] < l[6] && (730..=1094).contains(&l[7]);
        if !keep {
            continue;
        }
        if let Some(p) = prio.get(&l[0]) {
            let e = counts.entry(l[8]).or_default();
            if *p <= 1 {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    counts.into_iter().map(|(m, (h, lo))| vec![m, h, lo]).collect()
}

pub fn q14(t: &Tables) -> Rows {
    let ptype: HashMap<i64, i64> = t.part.iter().map(|p| (p[0], p[4])).collect();
    let (mut promo, mut total, mut any) = (0, 0, false);
    for l in t.lineitem.iter().filter(|l| (1200..=1229).contains(&l[5])) {
        if let Some(ty) = ptype.get(&l[1]) {
            any = true;
            total += revenue(l);
            if *ty < 25 {
                promo += revenue(l);
            }
        }
    }
    if any {
        vec![vec![promo, total]]
    } else {
        Vec::new()
    }
}

pub fn q19(t: &Tables) -> Rows {
    let parts: HashMap<i64, &Vec<i64>> = t.part.iter().map(|p| (p[0], p)).collect();
    let class = |p: &[i64], l: &[i64], brand: i64, c: (i64, i64), q: i64, size: i64| {
        p[1] == brand && (c.0..=c.1).contains(&p[3]) && (q..=q + 10).contains(&l[2]) && (1..=size).contains(&p[2])
    };
    let (mut sum, mut any) = (0, false);
    for l in t.lineitem.iter().filter(|l| l[9] == 0 && (l[8] == 0 || l[8] == 1)) {
        let Some(p) = parts.get(&l[1]) else { continue };
        if class(p, l, 12, (0, 3), 1, 5) || class(p, l, 23, (8, 11), 10, 10) || class(p, l, 34, (16, 19), 20, 15) {
            any = true;
            sum += revenue(l);
        }
    }
    if any {
        vec![vec![sum]]
    } else {
        Vec::new()
    }
}
