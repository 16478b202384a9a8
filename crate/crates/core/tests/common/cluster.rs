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

//! Helpers for plans that exchange `⟨k, s⟩` rows between ranks.

use rand::Rng;

use super::{collection_rows, data_type, workers_value};
use modularis::exec::{execute, Bindings, ExecOptions, ExecResult};
use modularis::expr::{col, lit, Expr};
use modularis::oracle::same_multiset;
use modularis::plan::{NodeId, OpKind};
use modularis::{Plan, PlanBuilder, Result, TupleType};

pub fn kv() -> TupleType {
    TupleType::ints(&["k", "s"])
}

/// Driver running `inner` once per worker tuple on an Executor (or a
/// NestedMap when `local`).
pub fn driver(inner: Plan, local: bool, ranks: Option<usize>) -> Plan {
    let (outer_ty, _) = workers_value(&kv(), &[]);
    let mut b = PlanBuilder::new();
    b.input("workers", outer_ty);
    let l = b.lookup("workers");
    let s = b.scan(l);
    let op = if local {
        OpKind::NestedMap { plan: Box::new(inner) }
    } else {
        OpKind::Executor {
            plan: Box::new(inner),
            ranks,
        }
    };
    let e = b.add(op, &[s]);
    b.finish(e)
}

/// Per-rank plan skeleton: returns the builder and the node scanning the
/// rank's rows.
pub fn rank_plan() -> (PlanBuilder, NodeId) {
    let mut b = PlanBuilder::new();
    b.input("worker", data_type(&kv()));
    let l = b.lookup("worker");
    let s = b.scan(l);
    (b, s)
}

pub fn histograms(b: &mut PlanBuilder, data: NodeId, bucket: Expr, n: usize) -> (NodeId, NodeId) {
    let lh = b.add(OpKind::LocalHistogram { bucket, buckets: n }, &[data]);
    let mh = b.add(OpKind::MpiHistogram { buckets: n }, &[lh]);
    (lh, mh)
}

pub fn exchange_plan(bucket: Expr, n: usize) -> Plan {
    let (mut b, s) = rank_plan();
    let (lh, mh) = histograms(&mut b, s, bucket.clone(), n);
    let ex = b.add(
        OpKind::MpiExchange {
            bucket,
            buckets: n,
            encode: None,
            id_field: "pid".into(),
            data_field: "data".into(),
        },
        &[s, lh, mh],
    );
    let m = b.materialize(ex, "blocks");
    b.finish(m)
}

pub fn run_ranks(plan: &Plan, per_rank: &[Vec<Vec<i64>>], options: ExecOptions) -> Result<ExecResult> {
    let (_, value) = workers_value(&kv(), per_rank);
    let mut bindings = Bindings::new();
    bindings.insert("workers".into(), value);
    execute(plan, &bindings, options)
}

/// Received blocks per rank: `(pid, rows)` in yield order.
pub fn blocks(res: &ExecResult) -> Vec<Vec<(i64, Vec<Vec<i64>>)>> {
    res.rows
        .iter()
        .map(|rank| {
            let rv = rank.get(0).as_rows().unwrap();
            rv.iter().map(|b| (b.int(0), collection_rows(&b, 1))).collect()
        })
        .collect()
}

/// Random exchange over `ranks`; checks conservation, placement, per-block
/// ordering and that strict mode saw no violations.
pub fn check_random_exchange(rng: &mut impl Rng, ranks: usize) {
    let n = rng.gen_range(1..=16usize);
    let batch = rng.gen_range(1..=64usize);
    let per_rank: Vec<Vec<Vec<i64>>> = (0..ranks)
        .map(|r| {
            (0..rng.gen_range(0..300))
                .map(|i| vec![rng.gen_range(0..1000), (r * 10_000 + i) as i64])
                .collect()
        })
        .collect();
    let plan = driver(exchange_plan(col("k").modulo(lit(n as i64)), n), false, None);
    let opts = ExecOptions {
        put_batch: batch,
        ..super::strict()
    };
    let res = run_ranks(&plan, &per_rank, opts).unwrap();
    let got = blocks(&res);
    let mut received = Vec::new();
    for (rank, bl) in got.iter().enumerate() {
        let pids: Vec<i64> = bl.iter().map(|(p, _)| *p).collect();
        let owned: Vec<i64> = (0..n as i64).filter(|p| *p as usize % ranks == rank).collect();
        assert_eq!(pids, owned);
        for (pid, rs) in bl {
            assert!(rs.iter().all(|r| r[0] % n as i64 == *pid));
            // (sender rank, emission order) is exactly the tag order.
            assert!(rs.windows(2).all(|w| w[0][1] < w[1][1]));
            received.extend(rs.iter().cloned());
        }
    }
    let sent: Vec<Vec<i64>> = per_rank.concat();
    assert_eq!(res.transport.tuples_put, sent.len() as u64);
    assert_eq!(res.transport.bytes_put, 16 * sent.len() as u64);
    assert!(same_multiset(received, sent));
    assert_eq!(res.transport.region_violations, 0);
    assert_eq!(res.transport.epoch_violations, 0);
}
