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


mod common;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::dag::{check_schedule, random_dag};
use common::{run_ints, source};
use modularis::builders::{build_join, Aggregation, JoinSpec, Relation};
use modularis::expr::{col, lit};
use modularis::oracle::same_multiset;
use modularis::partition::RadixSpec;
use modularis::plan::{cut_pipelines, validate, OpKind};
use modularis::{Error, Plan, PlanBuilder, TupleType};

#[test]
fn row_scan_unwraps_one_collection_level() {
    let mut b = PlanBuilder::new();
    let s = source(&mut b, "in", &TupleType::ints(&["k"]));
    let plan = b.finish(s);
    let types = validate(&plan).unwrap();
    let last = types.iter().find(|t| t.node == s).unwrap();
    assert_eq!(last.ty, TupleType::ints(&["k"]));
}

#[test]
fn build_probe_with_one_upstream_is_an_arity_error() {
    let mut b = PlanBuilder::new();
    let s = source(&mut b, "in", &TupleType::ints(&["k"]));
    let j = b.add(OpKind::BuildProbe { attrs: vec!["k".into()] }, &[s]);
    let plan = b.finish(j);
    assert!(matches!(validate(&plan), Err(Error::ArityMismatch { .. })));
}

#[test]
fn filter_on_missing_field_is_a_type_error() {
    let mut b = PlanBuilder::new();
    let s = source(&mut b, "in", &TupleType::ints(&["k"]));
    let f = b.add(OpKind::Filter { predicate: col("z").lt(lit(3)) }, &[s]);
    let plan = b.finish(f);
    assert!(matches!(validate(&plan), Err(Error::TypeMismatch { .. })));
    let mut b = PlanBuilder::new();
    let s = source(&mut b, "in", &TupleType::ints(&["k"]));
    let f = b.add(OpKind::Filter { predicate: col("k").add(lit(3)) }, &[s]);
    assert!(matches!(validate(&b.finish(f)), Err(Error::TypeMismatch { .. })));
}

#[test]
fn cycles_are_rejected() {
    let json = r#"{"inputs":[{"name":"in","type":"⟨data:RowVector⟨k:Int64⟩⟩"}],
        "nodes":[{"id":0,"kind":"ParameterLookup","params":{"binding":"in"},"upstreams":[]},
                 {"id":1,"kind":"Zip","upstreams":[0,2]},
                 {"id":2,"kind":"Zip","upstreams":[1]}],
        "root":2}"#;
    let plan = Plan::from_json(json).unwrap();
    assert!(matches!(validate(&plan), Err(Error::CycleDetected(_))));
}

#[test]
fn linear_chain_is_a_single_pipeline() {
    let mut b = PlanBuilder::new();
    let s = source(&mut b, "in", &TupleType::ints(&["k"]));
    let m = b.materialize(s, "data");
    let plan = b.finish(m);
    let s = cut_pipelines(&plan).unwrap();
    assert_eq!(s.pipelines.len(), 1);
    assert!(s.materialized.is_empty());
    check_schedule(&plan, &s);
}

#[test]
fn shared_node_is_materialized_once_and_read_twice() {
    let mut b = PlanBuilder::new();
    let a = source(&mut b, "in", &TupleType::ints(&["k"]));
    let x = b.map(a, vec![modularis::expr::NamedExpr::new("x", col("k"))]);
    let y = b.map(a, vec![modularis::expr::NamedExpr::new("y", col("k").mul(lit(2)))]);
    let z = b.add(OpKind::Zip {}, &[x, y]);
    let plan = b.finish(z);
    let s = cut_pipelines(&plan).unwrap();
    assert!(s.pipelines.len() >= 2);
    assert_eq!(s.materialized, BTreeSet::from([a]));
    check_schedule(&plan, &s);
    let ty = TupleType::ints(&["k"]);
    let out = run_ints(&plan, vec![("in", common::data_value(&ty, &common::rows(&[&[1], &[2]])))]).unwrap();
    assert_eq!(out, vec![vec![1, 2], vec![2, 4]]);
}

#[test]
fn join_plan_materializes_each_relation_input_once() {
    let plan = build_join(&JoinSpec {
        left: Relation::key_payload("r0"),
        right: Relation::key_payload("r1"),
        key: "key".into(),
        radix: RadixSpec::new(12, 3, &[3]).unwrap(),
        compression: true,
        distributed: true,
        post: Aggregation::default(),
    })
    .unwrap();
    let OpKind::Executor { plan: rank, .. } = &plan.nodes.values().find(|n| n.op.name() == "Executor").unwrap().op
    else {
        unreachable!()
    };
    let s = cut_pipelines(rank).unwrap();
    check_schedule(rank, &s);
    // Both relation scans feed a LocalHistogram and an MpiExchange.
    let scans_of_relations: Vec<_> = s
        .materialized
        .iter()
        .filter(|n| rank.nodes[n].op.name() == "RowScan")
        .collect();
    assert_eq!(scans_of_relations.len(), 2);
    for n in scans_of_relations {
        assert_eq!(rank.consumer_counts()[n], 2);
        let readers = s
            .pipelines
            .iter()
            .filter(|p| p.sources.contains(&modularis::plan::Source::Materialized(*n)))
            .count();
        assert_eq!(readers, 2);
    }
}

#[test]
fn schedules_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = random_dag(&mut rng, 12);
    assert_eq!(cut_pipelines(&d.plan).unwrap(), cut_pipelines(&d.plan).unwrap());
}

#[test]
fn random_dags_match_the_memoized_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let d = random_dag(&mut rng, 12);
        let s = cut_pipelines(&d.plan).unwrap();
        check_schedule(&d.plan, &s);
        let inputs = d.inputs.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
        let out = common::run(&d.plan, inputs).unwrap();
        let out = common::collection_rows(&out[0], 0);
        assert!(same_multiset(out, d.expected.clone()), "{:?}", d.steps);
    }
}

