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

//! Binding relations to ranks and running driver plans.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cluster::TransportMetrics;
use crate::error::{Error, Result};
use crate::exec::{execute, Bindings, ExecOptions, PhaseTimes};
use crate::plan::{validate, Plan};
use crate::types::TupleType;
use crate::value::{RowVector, RowVectorBuilder, Tuple, Value};

use super::workload::RelationData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub ranks: usize,
    pub put_batch: usize,
    pub strict_epochs: bool,
    /// Rotates the block-to-rank assignment.
    pub seed: u64,
    pub block_rows: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ranks: 1,
            put_batch: ExecOptions::default().put_batch,
            strict_epochs: false,
            seed: 0,
            block_rows: 4096,
        }
    }
}

impl RunConfig {
    pub fn with_ranks(ranks: usize) -> Self {
        RunConfig {
            ranks,
            ..RunConfig::default()
        }
    }

    pub fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            put_batch: self.put_batch,
            strict_epochs: self.strict_epochs,
            ..ExecOptions::default()
        }
    }
}

/// The metrics document written after a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub config: RunConfig,
    pub phases: PhaseTimes,
    pub transport: TransportMetrics,
    pub result_rows: usize,
    pub elapsed_seconds: f64,
}

/// Splits `rel` into blocks of `block_rows` and deals them round-robin.
fn split_words(rel: &RelationData, ranks: usize, block_rows: usize, offset: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new(); ranks];
    let block = block_rows.max(1) * rel.width();
    for (b, chunk) in rel.words.chunks(block).enumerate() {
        out[(b + offset) % ranks].extend_from_slice(chunk);
    }
    out
}

/// Builds the `⟨ranks: RowVector⟨worker⟩⟩` value for a driver input of type
/// `input`, taking each worker field from the relation of the same name.
pub fn bind_workers(input: &TupleType, relations: &[RelationData], cfg: &RunConfig) -> Result<Tuple> {
    if cfg.ranks == 0 {
        return Err(Error::InvalidPlan("at least one rank is required".into()));
    }
    let worker = match input.fields() {
        [f] => f.ty.element().cloned().ok_or_else(|| {
            Error::InvalidPlan(format!("driver input {input} must hold one collection of worker tuples"))
        })?,
        _ => {
            return Err(Error::InvalidPlan(format!(
                "driver input {input} must hold one collection of worker tuples"
            )))
        }
    };
    let offset = (cfg.seed % cfg.ranks as u64) as usize;
    let mut per_field = Vec::new();
    for f in worker.fields() {
        let rel = relations
            .iter()
            .find(|r| r.name() == f.name)
            .ok_or_else(|| Error::InvalidPlan(format!("workload has no relation `{}`", f.name)))?;
        let expected = f.ty.element().map(|e| &**e);
        if expected != Some(&rel.relation.ty) {
            return Err(Error::InvalidPlan(format!(
                "relation `{}` is {}, plan expects {}",
                f.name, rel.relation.ty, f.ty
            )));
        }
        per_field.push((rel, split_words(rel, cfg.ranks, cfg.block_rows, offset)));
    }
    let mut b = RowVectorBuilder::with_capacity(worker.clone(), cfg.ranks)?;
    for r in 0..cfg.ranks {
        let t: Tuple = per_field
            .iter()
            .map(|(rel, parts)| {
                RowVector::from_words(Arc::new(rel.relation.ty.clone()), parts[r].clone()).map(|rv| Value::Rows(Arc::new(rv)))
            })
            .collect::<Result<_>>()?;
        b.push(&t)?;
    }
    Ok(Tuple::new([Value::Rows(Arc::new(b.finish()))]))
}

/// Rows of the single result collection, or the output tuples themselves
/// when the output is not one collection.
pub fn flatten_result(output: &TupleType, rows: &[Tuple]) -> Vec<Tuple> {
    if output.len() == 1 && output.fields()[0].ty.is_collection() {
        rows.iter()
            .filter_map(|t| t.get(0).as_rows())
            .flat_map(|rv| rv.iter())
            .collect()
    } else {
        rows.to_vec()
    }
}

/// Runs a driver plan over `relations`. The plan must have exactly one input.
pub fn run_plan(plan: &Plan, relations: &[RelationData], cfg: &RunConfig) -> Result<(RunReport, Vec<Tuple>)> {
    validate(plan)?;
    let input = match plan.inputs.as_slice() {
        [b] => b,
        other => {
            return Err(Error::InvalidPlan(format!(
                "driver plans take exactly one input, found {}",
                other.len()
            )))
        }
    };
    let value = bind_workers(&input.ty, relations, cfg)?;
    let mut bindings = Bindings::new();
    bindings.insert(input.name.clone(), value);
    let start = Instant::now();
    let res = execute(plan, &bindings, cfg.exec_options())?;
    let elapsed = start.elapsed().as_secs_f64();
    let rows = flatten_result(&res.output_type, &res.rows);
    Ok((
        RunReport {
            config: cfg.clone(),
            phases: res.phases,
            transport: res.transport,
            result_rows: rows.len(),
            elapsed_seconds: elapsed,
        },
        rows,
    ))
}

/// Convenience lookup for tests and benchmarks.
pub fn relations_by_name(relations: &[RelationData]) -> BTreeMap<&str, &RelationData> {
    relations.iter().map(|r| (r.name(), r)).collect()
}
