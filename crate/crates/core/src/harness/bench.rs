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

//! Benchmark suites writing one CSV row per run.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::builders::query::{build_query, q12_spec, q14_spec, q19_spec, q4_spec, QuerySpec};
use crate::builders::{
    build_group_by, build_join, build_join_sequence, Aggregation, GroupBySpec, JoinSpec, Relation, SequenceMode,
    SequenceSpec,
};
use crate::error::{Error, Result};
use crate::oracle::{nl_join, ref_group_by, ref_sequence_join, same_multiset, FlatRelation};
use crate::partition::RadixSpec;
use crate::plan::{AggFn, Plan};

use super::io::int_rows;
use super::run::{run_plan, RunConfig, RunReport};
use super::tables::{generate_tables, TableScale};
use super::workload::{generate, generate_groups, Correspondence, RelationData, WorkloadSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Join,
    GroupBy,
    Sequence,
    Queries,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "join" => Ok(Suite::Join),
            "groupby" => Ok(Suite::GroupBy),
            "sequence" => Ok(Suite::Sequence),
            "queries" => Ok(Suite::Queries),
            _ => Err(Error::SpecInvalid(format!("unknown suite `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    /// Rows per base relation, as a power of two.
    pub log2_tuples: u32,
    pub ranks: Vec<usize>,
    pub seed: u64,
    /// Compare every result with the brute-force reference.
    pub verify: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            log2_tuples: 20,
            ranks: vec![1, 2, 4, 8],
            seed: 1,
            verify: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub case: String,
    pub ranks: usize,
    pub tuples: usize,
    pub elapsed_seconds: f64,
    pub local_histogram: f64,
    pub global_histogram: f64,
    pub network_partitioning: f64,
    pub local_partitioning: f64,
    pub build_probe: f64,
    pub bytes_put: u64,
    pub tuples_put: u64,
    pub windows_allocated: u64,
    pub relations_shuffled: u64,
    pub collective_calls: u64,
    pub result_rows: usize,
    pub verified: Option<bool>,
}

impl BenchRow {
    fn new(suite: &str, case: String, tuples: usize, rep: &RunReport, verified: Option<bool>) -> Self {
        BenchRow {
            suite: suite.to_string(),
            case,
            ranks: rep.config.ranks,
            tuples,
            elapsed_seconds: rep.elapsed_seconds,
            local_histogram: rep.phases.local_histogram,
            global_histogram: rep.phases.global_histogram,
            network_partitioning: rep.phases.network_partitioning,
            local_partitioning: rep.phases.local_partitioning,
            build_probe: rep.phases.build_probe,
            bytes_put: rep.transport.bytes_put,
            tuples_put: rep.transport.tuples_put,
            windows_allocated: rep.transport.windows_allocated,
            relations_shuffled: rep.transport.relations_shuffled,
            collective_calls: rep.transport.collective_calls,
            result_rows: rep.result_rows,
            verified,
        }
    }
}

/// Two-pass radix layout for `P`-bit keys, scaled from F=10 plus one 8-bit
/// local pass at P=27.
pub fn radix_for(key_bits: u32) -> Result<RadixSpec> {
    let f = (key_bits * 10 / 27).clamp(1, 10);
    let l = (key_bits.saturating_sub(f) / 2).clamp(1, 8);
    RadixSpec::new(key_bits, f, &[l])
}

fn key_payload_relations(n: usize) -> Vec<Relation> {
    (0..n).map(|i| Relation::key_payload(&format!("r{i}"))).collect()
}

fn flats(rels: &[RelationData]) -> Vec<FlatRelation> {
    rels.iter().map(RelationData::to_flat).collect()
}

fn run_checked(
    plan: &Plan,
    rels: &[RelationData],
    ranks: usize,
    expected: Option<&FlatRelation>,
) -> Result<(RunReport, Option<bool>)> {
    let (rep, rows) = run_plan(plan, rels, &RunConfig::with_ranks(ranks))?;
    let ok = expected.map(|e| same_multiset(int_rows(&rows), e.rows.clone()));
    Ok((rep, ok))
}

fn join_suite(o: &BenchOptions) -> Result<Vec<BenchRow>> {
    let bits = o.log2_tuples.max(7) + 7;
    let n = 1usize << o.log2_tuples;
    let mut spec = WorkloadSpec::new(n, bits, Correspondence::OneToOne);
    spec.seed = o.seed;
    let rels = generate(&spec)?;
    let expected = o.verify.then(|| nl_join(&rels[0].to_flat(), &rels[1].to_flat(), &["key"]));
    let mut out = Vec::new();
    for compression in [false, true] {
        let plan = build_join(&JoinSpec {
            left: Relation::key_payload("r0"),
            right: Relation::key_payload("r1"),
            key: "key".into(),
            radix: radix_for(bits)?,
            compression,
            distributed: true,
            post: Aggregation::default(),
        })?;
        for &r in &o.ranks {
            let (rep, ok) = run_checked(&plan, &rels, r, expected.as_ref())?;
            let case = format!("P={bits} compression={compression}");
            out.push(BenchRow::new("join", case, n, &rep, ok));
        }
    }
    Ok(out)
}

fn groupby_suite(o: &BenchOptions) -> Result<Vec<BenchRow>> {
    let bits = 27;
    let n = 1usize << o.log2_tuples;
    let mut out = Vec::new();
    for groups in [2_000, 8_000, 32_000, 128_000] {
        let rel = generate_groups(n, groups, bits, 20, o.seed)?;
        let plan = build_group_by(&GroupBySpec {
            input: rel.relation.clone(),
            key: "key".into(),
            value: "val".into(),
            radix: radix_for(bits)?,
            aggregate: AggFn::Sum,
            compression: true,
            distributed: true,
        })?;
        let expected = o.verify.then(|| ref_group_by(&rel.to_flat(), "key", |a, b| a + b));
        for &r in &o.ranks {
            let (rep, ok) = run_checked(&plan, std::slice::from_ref(&rel), r, expected.as_ref())?;
            out.push(BenchRow::new("groupby", format!("groups={groups}"), n, &rep, ok));
        }
    }
    Ok(out)
}

fn sequence_plan(joins: usize, mode: SequenceMode, bits: u32) -> Result<Plan> {
    build_join_sequence(&SequenceSpec {
        relations: key_payload_relations(joins + 1),
        mode,
        shared_attr: "key".into(),
        join_attrs: None,
        radix: radix_for(bits)?,
        compression: false,
        distributed: true,
    })
}

fn sequence_suite(o: &BenchOptions) -> Result<Vec<BenchRow>> {
    let log2 = o.log2_tuples.min(16);
    let n = 1usize << log2;
    let bits = log2 + 4;
    let r = *o.ranks.last().unwrap_or(&1);
    let mut out = Vec::new();
    let mut cases = Vec::new();
    for joins in 2..=8 {
        cases.push((joins, Correspondence::OneToOne));
    }
    for k in 2..=8 {
        cases.push((2, Correspondence::FanOut(k)));
    }
    for (joins, corr) in cases {
        let mut spec = WorkloadSpec::new(n, bits, corr);
        spec.seed = o.seed;
        spec.relation_count = joins + 1;
        let rels = generate(&spec)?;
        let expected = o.verify.then(|| ref_sequence_join(&flats(&rels), "key"));
        for mode in [SequenceMode::Naive, SequenceMode::Optimized] {
            let plan = sequence_plan(joins, mode, bits)?;
            let (rep, ok) = run_checked(&plan, &rels, r, expected.as_ref())?;
            let case = format!("joins={joins} {corr} {mode:?}").to_lowercase();
            out.push(BenchRow::new("sequence", case, n, &rep, ok));
        }
    }
    Ok(out)
}

fn queries_suite(o: &BenchOptions) -> Result<Vec<BenchRow>> {
    let scale = if o.log2_tuples >= 20 {
        TableScale::standard()
    } else {
        TableScale {
            orders: 1 << o.log2_tuples.saturating_sub(3).max(4),
            parts: 1 << o.log2_tuples.saturating_sub(4).max(4),
        }
    };
    let tables = generate_tables(scale, o.seed)?;
    let radix = radix_for(scale.key_bits())?;
    let specs: [(&str, QuerySpec); 4] = [
        ("q4", q4_spec(radix.clone())),
        ("q12", q12_spec(radix.clone())),
        ("q14", q14_spec(radix.clone())),
        ("q19", q19_spec(radix)),
    ];
    let mut out = Vec::new();
    for (name, spec) in specs {
        let plan = build_query(&spec)?;
        for &r in &o.ranks {
            let (rep, _) = run_plan(&plan, &tables, &RunConfig::with_ranks(r))?;
            out.push(BenchRow::new("queries", name.to_string(), tables[1].len(), &rep, None));
        }
    }
    Ok(out)
}

pub fn run_suite(suite: Suite, options: &BenchOptions) -> Result<Vec<BenchRow>> {
    match suite {
        Suite::Join => join_suite(options),
        Suite::GroupBy => groupby_suite(options),
        Suite::Sequence => sequence_suite(options),
        Suite::Queries => queries_suite(options),
    }
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
