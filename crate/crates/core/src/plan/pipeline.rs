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

//! Cutting a plan DAG into tree-shaped pipelines.

use std::collections::{BTreeMap, BTreeSet};

use super::{validate::infer_types, NodeId, OpKind, Plan};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// Result of an earlier pipeline.
    Materialized(NodeId),
    /// A plan input read by a ParameterLookup node.
    PlanInput(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pipeline {
    /// Member nodes in ascending id order; `sink` is the tree root.
    pub nodes: Vec<NodeId>,
    pub sources: Vec<Source>,
    pub sink: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineSchedule {
    pub pipelines: Vec<Pipeline>,
    /// Nodes whose output is stored because several consumers read it.
    pub materialized: BTreeSet<NodeId>,
}

impl PipelineSchedule {
    /// Index of the last pipeline reading each materialization.
    pub fn last_use(&self) -> BTreeMap<NodeId, usize> {
        let mut last = BTreeMap::new();
        for (i, p) in self.pipelines.iter().enumerate() {
            for s in &p.sources {
                if let Source::Materialized(m) = s {
                    last.insert(*m, i);
                }
            }
        }
        last
    }
}

/// Cuts after every node with more than one consumer edge. Nested plans are
/// left alone; they are cut when their operator is compiled.
pub fn cut_pipelines(plan: &Plan) -> Result<PipelineSchedule> {
    infer_types(plan)?;
    let consumers = plan.consumer_counts();
    let materialized: BTreeSet<NodeId> = consumers
        .iter()
        .filter(|(_, c)| **c > 1)
        .map(|(id, _)| *id)
        .collect();

    let mut sinks: Vec<NodeId> = materialized.iter().copied().collect();
    sinks.push(plan.root);
    let mut pipelines = Vec::new();
    for sink in sinks {
        let mut nodes = BTreeSet::new();
        let mut sources = Vec::new();
        let mut todo = vec![sink];
        while let Some(id) = todo.pop() {
            nodes.insert(id);
            let node = &plan.nodes[&id];
            if let OpKind::ParameterLookup { binding } = &node.op {
                let s = Source::PlanInput(binding.clone());
                if !sources.contains(&s) {
                    sources.push(s);
                }
            }
            for u in &node.upstreams {
                if materialized.contains(u) {
                    let s = Source::Materialized(*u);
                    if !sources.contains(&s) {
                        sources.push(s);
                    }
                } else {
                    todo.push(*u);
                }
            }
        }
        pipelines.push(Pipeline {
            nodes: nodes.into_iter().collect(),
            sources,
            sink,
        });
    }

    // Kahn's algorithm, ready set keyed by smallest member id.
    let producer: BTreeMap<NodeId, usize> = pipelines.iter().enumerate().map(|(i, p)| (p.sink, i)).collect();
    let mut pending: Vec<usize> = pipelines
        .iter()
        .map(|p| {
            p.sources
                .iter()
                .filter(|s| matches!(s, Source::Materialized(_)))
                .count()
        })
        .collect();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); pipelines.len()];
    for (i, p) in pipelines.iter().enumerate() {
        for s in &p.sources {
            if let Source::Materialized(m) = s {
                dependents[producer[m]].push(i);
            }
        }
    }
    let mut ready: BTreeSet<(NodeId, usize)> = BTreeSet::new();
    for (i, p) in pipelines.iter().enumerate() {
        if pending[i] == 0 {
            ready.insert((p.nodes[0], i));
        }
    }
    let mut order = Vec::with_capacity(pipelines.len());
    while let Some(first) = ready.pop_first() {
        let i = first.1;
        order.push(i);
        for &d in &dependents[i] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.insert((pipelines[d].nodes[0], d));
            }
        }
    }
    debug_assert_eq!(order.len(), pipelines.len());
    let mut slots: Vec<Option<Pipeline>> = pipelines.into_iter().map(Some).collect();
    Ok(PipelineSchedule {
        pipelines: order.into_iter().map(|i| slots[i].take().unwrap()).collect(),
        materialized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::PlanBuilder;

    #[test]
    fn linear_chain_is_one_pipeline() {
        let mut b = PlanBuilder::new();
        b.input("in", "⟨d:RowVector⟨k:Int64⟩⟩".parse().unwrap());
        let a = b.lookup("in");
        let s = b.scan(a);
        let m = b.materialize(s, "d");
        let sched = cut_pipelines(&b.finish(m)).unwrap();
        assert_eq!(sched.pipelines.len(), 1);
        assert_eq!(sched.pipelines[0].nodes, vec![a, s, m]);
        assert_eq!(sched.pipelines[0].sources, vec![Source::PlanInput("in".into())]);
        assert!(sched.materialized.is_empty());
    }

    #[test]
    fn shared_node_is_materialized_once() {
        let mut b = PlanBuilder::new();
        b.input("in", "⟨d:RowVector⟨k:Int64,v:Int64⟩⟩".parse().unwrap());
        let l = b.lookup("in");
        let a = b.scan(l);
        let pb = b.project(a, &["k"]);
        let pc = b.project(a, &["v"]);
        let z = b.add(OpKind::Zip {}, &[pb, pc]);
        let sched = cut_pipelines(&b.finish(z)).unwrap();
        assert_eq!(sched.materialized, BTreeSet::from([a]));
        assert_eq!(sched.pipelines.len(), 2);
        assert_eq!(sched.pipelines[0].sink, a);
        assert_eq!(sched.pipelines[1].sources, vec![Source::Materialized(a)]);
        let all: BTreeSet<_> = sched.pipelines.iter().flat_map(|p| p.nodes.clone()).collect();
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn duplicate_edge_counts_as_two_consumers() {
        let mut b = PlanBuilder::new();
        b.input("in", "⟨d:RowVector⟨k:Int64⟩⟩".parse().unwrap());
        let l = b.lookup("in");
        let a = b.scan(l);
        let c = b.add(OpKind::CartesianProduct {}, &[a, a]);
        // field collision is irrelevant for the cut but fails validation
        let plan = b.finish(c);
        assert!(cut_pipelines(&plan).is_err());
        assert_eq!(plan.consumer_counts()[&a], 2);
    }
}
