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

//! End-to-end checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is printed even when output capture is on.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::queries::{self, Tables};
use modularis::builders::{
    build_group_by, build_join, build_join_sequence, build_query, localize, q12_spec, q14_spec, q19_spec,
    q4_spec, Aggregation, GroupBySpec, JoinSpec, Relation, SequenceMode, SequenceSpec,
};
use modularis::harness::bench::radix_for;
use modularis::harness::io::int_rows;
use modularis::harness::{
    generate, generate_groups, generate_tables, run_plan, run_suite, BenchOptions, BenchRow, Correspondence, RelationData,
    RunConfig, Suite, TableScale, WorkloadSpec,
};
use modularis::oracle::{nl_join, ref_group_by, same_multiset};
use modularis::partition::{compress, decompress, radix_bucket, RadixSpec};
use modularis::plan::{cut_pipelines, AggFn};
use modularis::Plan;

/// Wall-clock limit per rank count for the 2^20 join.
const JOIN_SECONDS: f64 = 60.0;
/// Allowed spread of optimized-sequence bytes across the fan-out sweep.
const BYTES_SPREAD: f64 = 0.01;
/// Target R=4 / R=1 wall-time ratio for the 2^22 join.
const SCALING_RATIO: f64 = 0.7;
const SCALING_THREADS: usize = 4;

const COMPRESSION_SAMPLES: usize = 1_000_000;
const EXCHANGE_RUNS: usize = 100;
const RANDOM_DAGS: usize = 50;

enum Outcome {
    Pass(String),
    Fail(String),
    Warn(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn join_plan(bits: u32, compression: bool) -> Plan {
    build_join(&JoinSpec {
        left: Relation::key_payload("r0"),
        right: Relation::key_payload("r1"),
        key: "key".into(),
        radix: radix_for(bits).unwrap(),
        compression,
        distributed: true,
        post: Aggregation::default(),
    })
    .unwrap()
}

fn rows_of(plan: &Plan, rels: &[RelationData], ranks: usize) -> Vec<Vec<i64>> {
    int_rows(&run_plan(plan, rels, &RunConfig::with_ranks(ranks)).unwrap().1)
}

fn join_correctness() -> Outcome {
    let n = 1usize << 20;
    let rels = generate(&WorkloadSpec::new(n, 27, Correspondence::OneToOne)).unwrap();
    let want = nl_join(&rels[0].to_flat(), &rels[1].to_flat(), &["key"]);
    if want.len() != n {
        return Outcome::Fail(format!("oracle cardinality {}", want.len()));
    }
    let plan = join_plan(27, true);
    let mut times = Vec::new();
    for r in [1, 2, 4, 8] {
        let t = Instant::now();
        let got = rows_of(&plan, &rels, r);
        let secs = t.elapsed().as_secs_f64();
        times.push(format!("R={r} {secs:.2}s"));
        if got.len() != n || !same_multiset(got, want.rows.clone()) {
            return Outcome::Fail(format!("R={r} differs from nested-loop join"));
        }
        if secs >= JOIN_SECONDS {
            return Outcome::Fail(format!("R={r} took {secs:.1}s"));
        }
    }
    Outcome::Pass(format!("2^20 rows, P=27, compressed; {}", times.join(", ")))
}

fn packed_by_hand(key: i64, value: i64, p: u32, f: u32) -> u64 {
    let rest = (key as u64) & ((1u64 << (p - f)) - 1);
    (rest << p) | value as u64
}

fn round_trip(key: i64, value: i64, spec: &RadixSpec) -> bool {
    let (p, f) = (spec.key_bits, spec.fanout_bits);
    let packed = compress(key, value, spec).unwrap();
    let part = radix_bucket(key, spec, 0).unwrap();
    part == (key as u64) >> (p - f)
        && packed == packed_by_hand(key, value, p, f)
        && decompress(packed, part, spec) == (key, value)
}

fn compression_round_trip() -> Outcome {
    let mut exhaustive = 0u64;
    for p in 1..=16u32 {
        for f in 1..=p {
            let spec = RadixSpec::new(p, f, &[]).unwrap();
            for key in 0..1i64 << p {
                let value = (key.wrapping_mul(0x9e37_79b9) ^ 0x5bd1) & ((1 << p) - 1);
                if !round_trip(key, value, &spec) {
                    return Outcome::Fail(format!("P={p} F={f} key={key}"));
                }
                exhaustive += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..COMPRESSION_SAMPLES {
        let p = rng.gen_range(17..=27u32);
        let f = rng.gen_range(1..=p);
        let spec = RadixSpec::new(p, f, &[]).unwrap();
        let (key, value) = (rng.gen_range(0..1i64 << p), rng.gen_range(0..1i64 << p));
        if !round_trip(key, value, &spec) {
            return Outcome::Fail(format!("P={p} F={f} key={key} value={value}"));
        }
    }
    Outcome::Pass(format!(
        "{exhaustive} exhaustive cases for P<=16, {COMPRESSION_SAMPLES} samples for P<=27"
    ))
}

fn exchange_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..EXCHANGE_RUNS {
        let ranks = [2, 4, 8][i % 3];
        common::cluster::check_random_exchange(&mut rng, ranks);
    }
    Outcome::Pass(format!("{EXCHANGE_RUNS} strict-epoch runs over R in {{2,4,8}}"))
}

/// The sequence bench suite, shared by the shuffle and byte checks.
fn sequence_rows() -> &'static [BenchRow] {
    static ROWS: OnceLock<Vec<BenchRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let opts = BenchOptions {
            log2_tuples: 14,
            ranks: vec![4],
            ..BenchOptions::default()
        };
        run_suite(Suite::Sequence, &opts).unwrap()
    })
}

fn shuffle_counts() -> Outcome {
    let rows = sequence_rows();
    let mut seen = Vec::new();
    for n in 2..=8u64 {
        for (mode, want) in [("optimized", n + 1), ("naive", 2 * n)] {
            let case = format!("joins={n} one-to-one {mode}");
            let Some(row) = rows.iter().find(|r| r.case == case) else {
                return Outcome::Fail(format!("missing case {case}"));
            };
            if row.relations_shuffled != want || row.verified != Some(true) {
                return Outcome::Fail(format!("{case}: {} shuffled, want {want}", row.relations_shuffled));
            }
            seen.push(row.relations_shuffled);
        }
    }
    Outcome::Pass(format!("N=2..8 optimized/naive: {seen:?}"))
}

fn constant_network_bytes() -> Outcome {
    let rows = sequence_rows();
    let bytes = |k: usize, mode: &str| {
        let case = if k == 1 {
            format!("joins=2 one-to-one {mode}")
        } else {
            format!("joins=2 fanout:{k} {mode}")
        };
        let row = rows.iter().find(|r| r.case == case).expect("sequence case");
        assert_eq!(row.verified, Some(true), "{case}");
        row.bytes_put
    };
    let opt: Vec<u64> = (1..=8).map(|k| bytes(k, "optimized")).collect();
    let naive: Vec<u64> = (1..=8).map(|k| bytes(k, "naive")).collect();
    let (lo, hi) = (*opt.iter().min().unwrap(), *opt.iter().max().unwrap());
    let spread = (hi - lo) as f64 / lo as f64;
    let growing = naive.windows(2).all(|w| w[0] < w[1]);
    ensure(
        spread < BYTES_SPREAD && growing,
        format!("optimized spread {:.3}% {opt:?}; naive {naive:?}", spread * 100.0),
    )
}

fn group_by_correctness() -> Outcome {
    let n = 1usize << 20;
    let cfg = RunConfig::default();
    let mut out = Vec::new();
    for groups in [2_000, 8_000, 32_000, 128_000] {
        let rel = generate_groups(n, groups, 27, 20, groups as u64).unwrap();
        let flat = rel.to_flat();
        // Blocks are dealt round-robin, so the first two blocks land on
        // different ranks; they must share keys for the check to mean much.
        let first: std::collections::HashSet<i64> = flat.rows[..cfg.block_rows].iter().map(|r| r[0]).collect();
        let shared = flat.rows[cfg.block_rows..2 * cfg.block_rows].iter().filter(|r| first.contains(&r[0])).count();
        if shared == 0 {
            return Outcome::Fail(format!("groups={groups}: no cross-rank duplicates"));
        }
        let want = ref_group_by(&flat, "key", |a, b| a + b);
        let plan = build_group_by(&GroupBySpec {
            input: rel.relation.clone(),
            key: "key".into(),
            value: "val".into(),
            radix: radix_for(27).unwrap(),
            aggregate: AggFn::Sum,
            compression: true,
            distributed: true,
        })
        .unwrap();
        for r in [2, 4, 8] {
            let got = rows_of(&plan, std::slice::from_ref(&rel), r);
            if !same_multiset(got, want.rows.clone()) {
                return Outcome::Fail(format!("groups={groups} R={r}"));
            }
        }
        out.push(format!("{groups}:{}", want.len()));
    }
    Outcome::Pass(format!("2^20 rows, groups found {}", out.join(" ")))
}

fn query_correctness() -> Outcome {
    let scale = TableScale::standard();
    let tables = generate_tables(scale, 1).unwrap();
    let t = Tables::new(&tables);
    let radix = radix_for(scale.key_bits()).unwrap();
    let cases = [
        ("q4", q4_spec(radix.clone()), queries::q4(&t)),
        ("q12", q12_spec(radix.clone()), queries::q12(&t)),
        ("q14", q14_spec(radix.clone()), queries::q14(&t)),
        ("q19", q19_spec(radix), queries::q19(&t)),
    ];
    let mut sizes = Vec::new();
    for (name, spec, want) in cases {
        if want.is_empty() {
            return Outcome::Fail(format!("{name}: empty reference answer"));
        }
        let plan = build_query(&spec).unwrap();
        for r in [1, 4] {
            if !same_multiset(rows_of(&plan, &tables, r), want.clone()) {
                return Outcome::Fail(format!("{name} R={r}"));
            }
        }
        sizes.push(format!("{name}:{} rows", want.len()));
    }
    Outcome::Pass(format!("{} lineitems; {}", tables[1].len(), sizes.join(" ")))
}

fn pipeline_model() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..RANDOM_DAGS {
        let d = common::dag::random_dag(&mut rng, 12);
        let s = cut_pipelines(&d.plan).unwrap();
        common::dag::check_schedule(&d.plan, &s);
        let inputs = d.inputs.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
        let out = common::run(&d.plan, inputs).unwrap();
        if !same_multiset(common::collection_rows(&out[0], 0), d.expected.clone()) {
            return Outcome::Fail(format!("{:?}", d.steps));
        }
    }
    Outcome::Pass(format!("{RANDOM_DAGS} random DAGs"))
}

fn degenerate_cluster() -> Outcome {
    let mut spec = WorkloadSpec::new(1 << 14, 18, Correspondence::FanOut(2));
    spec.relation_count = 3;
    let rels = generate(&spec).unwrap();
    let groups = generate_groups(1 << 14, 500, 18, 12, 2).unwrap();
    let tables = generate_tables(TableScale { orders: 1 << 12, parts: 1 << 11 }, 3).unwrap();
    let qbits = radix_for(TableScale { orders: 1 << 12, parts: 1 << 11 }.key_bits()).unwrap();
    let sequence = |mode| {
        build_join_sequence(&SequenceSpec {
            relations: (0..3).map(|i| Relation::key_payload(&format!("r{i}"))).collect(),
            mode,
            shared_attr: "key".into(),
            join_attrs: None,
            radix: radix_for(18).unwrap(),
            compression: true,
            distributed: true,
        })
        .unwrap()
    };
    let group = build_group_by(&GroupBySpec {
        input: groups.relation.clone(),
        key: "key".into(),
        value: "val".into(),
        radix: radix_for(18).unwrap(),
        aggregate: AggFn::Sum,
        compression: true,
        distributed: true,
    })
    .unwrap();
    let plans: Vec<(&str, Plan, &[RelationData])> = vec![
        ("join", join_plan(18, true), &rels),
        ("sequence-naive", sequence(SequenceMode::Naive), &rels),
        ("sequence-optimized", sequence(SequenceMode::Optimized), &rels),
        ("groupby", group, std::slice::from_ref(&groups)),
        ("q4", build_query(&q4_spec(qbits.clone())).unwrap(), &tables),
        ("q12", build_query(&q12_spec(qbits.clone())).unwrap(), &tables),
        ("q14", build_query(&q14_spec(qbits.clone())).unwrap(), &tables),
        ("q19", build_query(&q19_spec(qbits)).unwrap(), &tables),
    ];
    for (name, plan, data) in &plans {
        if rows_of(plan, data, 1) != rows_of(&localize(plan), data, 1) {
            return Outcome::Fail(format!("{name}: executor and local plan differ"));
        }
    }
    Outcome::Pass(format!("{} builder plans identical", plans.len()))
}

fn scaling_trend() -> Outcome {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let bits = 29;
    let rels = generate(&WorkloadSpec::new(1 << 22, bits, Correspondence::OneToOne)).unwrap();
    let plan = join_plan(bits, true);
    let mut secs = Vec::new();
    for r in [1, 4] {
        let t = Instant::now();
        let (rep, _) = run_plan(&plan, &rels, &RunConfig::with_ranks(r)).unwrap();
        assert_eq!(rep.result_rows, 1 << 22);
        secs.push(t.elapsed().as_secs_f64());
    }
    let ratio = secs[1] / secs[0];
    let detail = format!(
        "2^22 join R=1 {:.2}s, R=4 {:.2}s, ratio {ratio:.2} (target <= {SCALING_RATIO}), {threads} hardware threads",
        secs[0], secs[1]
    );
    if threads < SCALING_THREADS {
        Outcome::Warn(format!("{detail}; fewer than {SCALING_THREADS} threads, trend not measurable"))
    } else if ratio > SCALING_RATIO {
        Outcome::Warn(detail)
    } else {
        Outcome::Pass(detail)
    }
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("join correctness", join_correctness),
        ("compression round trip", compression_round_trip),
        ("exchange invariants", exchange_invariants),
        ("shuffle count", shuffle_counts),
        ("constant network bytes", constant_network_bytes),
        ("group-by correctness", group_by_correctness),
        ("query correctness", query_correctness),
        ("pipeline model", pipeline_model),
        ("single-rank equivalence", degenerate_cluster),
        ("scaling trend", scaling_trend),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Warn(d) => ("WARN", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("acceptance {id:>2} {status} {name} ({secs:.1}s): {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
