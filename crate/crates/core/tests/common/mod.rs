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

#![allow(dead_code)]

pub mod cluster;
pub mod dag;
pub mod queries;

use std::sync::Arc;

use modularis::exec::{execute, Bindings, ExecOptions};
use modularis::harness::io::int_rows;
use modularis::plan::NodeId;
use modularis::types::{Field, ItemType};
use modularis::{Plan, PlanBuilder, Result, RowVector, Tuple, TupleType, Value};

pub fn rows(rs: &[&[i64]]) -> Vec<Vec<i64>> {
    rs.iter().map(|r| r.to_vec()).collect()
}

pub fn rv(ty: &TupleType, rs: &[Vec<i64>]) -> Value {
    let words = rs.iter().flatten().map(|x| *x as u64).collect();
    Value::Rows(Arc::new(RowVector::from_words(Arc::new(ty.clone()), words).unwrap()))
}

/// `⟨data: RowVector⟨ty⟩⟩`
pub fn data_type(ty: &TupleType) -> TupleType {
    TupleType::new(vec![Field::new("data", ItemType::row_vector(ty.clone()))]).unwrap()
}

pub fn data_value(ty: &TupleType, rs: &[Vec<i64>]) -> Tuple {
    Tuple::new([rv(ty, rs)])
}

/// Declares input `name: ⟨data: RV⟨ty⟩⟩` and returns the node scanning it.
pub fn source(b: &mut PlanBuilder, name: &str, ty: &TupleType) -> NodeId {
    b.input(name, data_type(ty));
    let l = b.lookup(name);
    b.scan(l)
}

pub fn strict() -> ExecOptions {
    ExecOptions {
        check_iterator_law: true,
        strict_epochs: true,
        ..ExecOptions::default()
    }
}

pub fn run(plan: &Plan, inputs: Vec<(&str, Tuple)>) -> Result<Vec<Tuple>> {
    let bindings: Bindings = inputs.into_iter().map(|(n, t)| (n.to_string(), t)).collect();
    Ok(execute(plan, &bindings, strict())?.rows)
}

pub fn run_ints(plan: &Plan, inputs: Vec<(&str, Tuple)>) -> Result<Vec<Vec<i64>>> {
    run(plan, inputs).map(|r| int_rows(&r))
}

/// Rows of the collection held in field `i` of `t`.
pub fn collection_rows(t: &Tuple, i: usize) -> Vec<Vec<i64>> {
    let rv = t.get(i).as_rows().expect("collection field");
    int_rows(&rv.iter().collect::<Vec<_>>())
}

/// `⟨ranks: RV⟨⟨data: RV⟨ty⟩⟩⟩⟩` with one worker tuple per slice.
pub fn workers_value(ty: &TupleType, per_rank: &[Vec<Vec<i64>>]) -> (TupleType, Tuple) {
    let worker = data_type(ty);
    let mut b = modularis::value::RowVectorBuilder::new(Arc::new(worker.clone()));
    for slice in per_rank {
        b.push(&data_value(ty, slice)).unwrap();
    }
    let outer = TupleType::new(vec![Field::new("ranks", ItemType::row_vector(worker))]).unwrap();
    (outer, Tuple::new([Value::Rows(Arc::new(b.finish()))]))
}
