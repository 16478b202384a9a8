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

//! Query plans: DAGs of sub-operator nodes.

mod pipeline;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, NamedExpr};
use crate::types::TupleType;

pub use pipeline::{cut_pipelines, Pipeline, PipelineSchedule, Source};
pub use validate::{infer_types, validate, TypeAssignment};

pub type NodeId = u32;

/// Cost attribution bucket for metrics. Time spent in a tagged node, minus
/// time spent in tagged nodes below it, is charged to its phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Phase {
    LocalHistogram,
    GlobalHistogram,
    NetworkPartitioning,
    LocalPartitioning,
    BuildProbe,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::LocalHistogram,
        Phase::GlobalHistogram,
        Phase::NetworkPartitioning,
        Phase::LocalPartitioning,
        Phase::BuildProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::LocalHistogram => "localHistogram",
            Phase::GlobalHistogram => "globalHistogram",
            Phase::NetworkPartitioning => "networkPartitioning",
            Phase::LocalPartitioning => "localPartitioning",
            Phase::BuildProbe => "buildProbe",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFn {
    Sum,
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agg {
    pub field: String,
    pub func: AggFn,
}

impl Agg {
    pub fn sum(field: &str) -> Self {
        Agg {
            field: field.to_string(),
            func: AggFn::Sum,
        }
    }
}

fn default_data_field() -> String {
    "data".to_string()
}

fn default_id_field() -> String {
    "partitionId".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum OpKind {
    ParameterLookup {
        binding: String,
    },
    NestedMap {
        plan: Box<Plan>,
    },
    /// Runs the nested plan once per input tuple, concurrently, each
    /// invocation on its own rank.
    Executor {
        plan: Box<Plan>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ranks: Option<usize>,
    },
    Map {
        exprs: Vec<NamedExpr>,
    },
    /// Upstreams: `[parameter, main]`.
    ParametrizedMap {
        exprs: Vec<NamedExpr>,
    },
    Projection {
        fields: Vec<String>,
    },
    Filter {
        predicate: Expr,
    },
    CartesianProduct {},
    Zip {},
    Reduce {
        aggs: Vec<Agg>,
    },
    ReduceByKey {
        key: String,
        aggs: Vec<Agg>,
    },
    LocalHistogram {
        bucket: Expr,
        buckets: usize,
    },
    /// Upstreams: `[build, probe]`.
    BuildProbe {
        attrs: Vec<String>,
    },
    RowScan {},
    MaterializeRowVector {
        #[serde(default = "default_data_field")]
        field: String,
    },
    /// Upstreams: `[data, histogram]`.
    LocalPartitioning {
        bucket: Expr,
        buckets: usize,
        #[serde(default = "default_id_field")]
        id_field: String,
        #[serde(default = "default_data_field")]
        data_field: String,
    },
    MpiHistogram {
        buckets: usize,
    },
    /// Upstreams: `[data, localHistogram, globalHistogram]`. `encode`, when
    /// present, maps each tuple to its wire form after bucketing.
    MpiExchange {
        bucket: Expr,
        buckets: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        encode: Option<Vec<NamedExpr>>,
        #[serde(default = "default_id_field")]
        id_field: String,
        #[serde(default = "default_data_field")]
        data_field: String,
    },
    /// Upstreams: `[data, localHistogram, globalHistogram]`, single bucket.
    MpiBroadcast {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        encode: Option<Vec<NamedExpr>>,
    },
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::ParameterLookup { .. } => "ParameterLookup",
            OpKind::NestedMap { .. } => "NestedMap",
            OpKind::Executor { .. } => "Executor",
            OpKind::Map { .. } => "Map",
            OpKind::ParametrizedMap { .. } => "ParametrizedMap",
            OpKind::Projection { .. } => "Projection",
            OpKind::Filter { .. } => "Filter",
            OpKind::CartesianProduct {} => "CartesianProduct",
            OpKind::Zip {} => "Zip",
            OpKind::Reduce { .. } => "Reduce",
            OpKind::ReduceByKey { .. } => "ReduceByKey",
            OpKind::LocalHistogram { .. } => "LocalHistogram",
            OpKind::BuildProbe { .. } => "BuildProbe",
            OpKind::RowScan {} => "RowScan",
            OpKind::MaterializeRowVector { .. } => "MaterializeRowVector",
            OpKind::LocalPartitioning { .. } => "LocalPartitioning",
            OpKind::MpiHistogram { .. } => "MpiHistogram",
            OpKind::MpiExchange { .. } => "MpiExchange",
            OpKind::MpiBroadcast { .. } => "MpiBroadcast",
        }
    }

    /// Allowed number of upstreams: `(min, max)`.
    pub fn arity(&self) -> (usize, Option<usize>) {
        match self {
            OpKind::ParameterLookup { .. } => (0, Some(0)),
            OpKind::Zip {} => (1, None),
            OpKind::ParametrizedMap { .. }
            | OpKind::CartesianProduct {}
            | OpKind::BuildProbe { .. }
            | OpKind::LocalPartitioning { .. } => (2, Some(2)),
            OpKind::MpiExchange { .. } | OpKind::MpiBroadcast { .. } => (3, Some(3)),
            _ => (1, Some(1)),
        }
    }

    pub fn nested_plan(&self) -> Option<&Plan> {
        match self {
            OpKind::NestedMap { plan } | OpKind::Executor { plan, .. } => Some(plan),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanNode {
    pub id: NodeId,
    pub op: OpKind,
    pub upstreams: Vec<NodeId>,
    pub phase: Option<Phase>,
}

/// A named plan input and its tuple type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TupleType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub inputs: Vec<Binding>,
    pub nodes: BTreeMap<NodeId, PlanNode>,
    pub root: NodeId,
}

impl Plan {
    pub fn node(&self, id: NodeId) -> Result<&PlanNode> {
        self.nodes
            .get(&id)
            .ok_or_else(|| Error::InvalidPlan(format!("unknown node {id}")))
    }

    pub fn input(&self, name: &str) -> Option<&Binding> {
        self.inputs.iter().find(|b| b.name == name)
    }

    /// Number of (consumer, slot) edges reading each node.
    pub fn consumer_counts(&self) -> BTreeMap<NodeId, usize> {
        let mut counts: BTreeMap<NodeId, usize> = self.nodes.keys().map(|k| (*k, 0)).collect();
        for n in self.nodes.values() {
            for u in &n.upstreams {
                *counts.entry(*u).or_default() += 1;
            }
        }
        counts
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }
}

impl fmt::Display for Plan {
    /// One line per node, nested plans indented.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(p: &Plan, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            for n in p.nodes.values() {
                let root = if n.id == p.root { " (root)" } else { "" };
                writeln!(f, "{:indent$}{} {} <- {:?}{root}", "", n.id, n.op.name(), n.upstreams, indent = depth * 2)?;
                if let Some(inner) = n.op.nested_plan() {
                    go(inner, depth + 1, f)?;
                }
            }
            Ok(())
        }
        go(self, 0, f)
    }
}

#[derive(Serialize, Deserialize)]
struct RawNode {
    id: NodeId,
    kind: String,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default)]
    upstreams: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<Phase>,
}

#[derive(Serialize, Deserialize)]
struct RawPlan {
    #[serde(default)]
    inputs: Vec<Binding>,
    nodes: Vec<RawNode>,
    root: NodeId,
}

impl Serialize for Plan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nodes = self
            .nodes
            .values()
            .map(|n| {
                let mut v = serde_json::to_value(&n.op).map_err(serde::ser::Error::custom)?;
                let params = v
                    .get_mut("params")
                    .map(serde_json::Value::take)
                    .unwrap_or(serde_json::Value::Object(Default::default()));
                Ok(RawNode {
                    id: n.id,
                    kind: n.op.name().to_string(),
                    params,
                    upstreams: n.upstreams.clone(),
                    phase: n.phase,
                })
            })
            .collect::<std::result::Result<Vec<_>, S::Error>>()?;
        RawPlan {
            inputs: self.inputs.clone(),
            nodes,
            root: self.root,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Plan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawPlan::deserialize(d)?;
        let mut nodes = BTreeMap::new();
        for n in raw.nodes {
            let params = if n.params.is_null() {
                serde_json::Value::Object(Default::default())
            } else {
                n.params
            };
            let op: OpKind = serde_json::from_value(serde_json::json!({ "kind": n.kind, "params": params }))
                .map_err(|e| D::Error::custom(format!("node {}: {e}", n.id)))?;
            let node = PlanNode {
                id: n.id,
                op,
                upstreams: n.upstreams,
                phase: n.phase,
            };
            if nodes.insert(n.id, node).is_some() {
                return Err(D::Error::custom(format!("duplicate node id {}", n.id)));
            }
        }
        Ok(Plan {
            inputs: raw.inputs,
            nodes,
            root: raw.root,
        })
    }
}

/// Incremental plan construction with sequential node ids.
#[derive(Default)]
pub struct PlanBuilder {
    inputs: Vec<Binding>,
    nodes: BTreeMap<NodeId, PlanNode>,
    next: NodeId,
}

impl PlanBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: &str, ty: TupleType) -> &mut Self {
        self.inputs.push(Binding {
            name: name.to_string(),
            ty,
        });
        self
    }

    pub fn add(&mut self, op: OpKind, upstreams: &[NodeId]) -> NodeId {
        self.add_node(op, upstreams, None)
    }

    pub fn add_tagged(&mut self, op: OpKind, upstreams: &[NodeId], phase: Phase) -> NodeId {
        self.add_node(op, upstreams, Some(phase))
    }

    fn add_node(&mut self, op: OpKind, upstreams: &[NodeId], phase: Option<Phase>) -> NodeId {
        let id = self.next;
        self.next += 1;
        self.nodes.insert(
            id,
            PlanNode {
                id,
                op,
                upstreams: upstreams.to_vec(),
                phase,
            },
        );
        id
    }

    pub fn lookup(&mut self, binding: &str) -> NodeId {
        self.add(
            OpKind::ParameterLookup {
                binding: binding.to_string(),
            },
            &[],
        )
    }

    pub fn project(&mut self, up: NodeId, fields: &[&str]) -> NodeId {
        self.add(
            OpKind::Projection {
                fields: fields.iter().map(|f| f.to_string()).collect(),
            },
            &[up],
        )
    }

    pub fn scan(&mut self, up: NodeId) -> NodeId {
        self.add(OpKind::RowScan {}, &[up])
    }

    pub fn materialize(&mut self, up: NodeId, field: &str) -> NodeId {
        self.add(
            OpKind::MaterializeRowVector {
                field: field.to_string(),
            },
            &[up],
        )
    }

    pub fn map(&mut self, up: NodeId, exprs: Vec<NamedExpr>) -> NodeId {
        self.add(OpKind::Map { exprs }, &[up])
    }

    /// The sub-plan rooted at `root`, built so far.
    pub fn snapshot(&self, root: NodeId) -> Plan {
        let mut nodes = BTreeMap::new();
        let mut todo = vec![root];
        while let Some(id) = todo.pop() {
            if let Some(n) = self.nodes.get(&id) {
                if nodes.insert(id, n.clone()).is_none() {
                    todo.extend(n.upstreams.iter().copied());
                }
            }
        }
        Plan {
            inputs: self.inputs.clone(),
            nodes,
            root,
        }
    }

    pub fn finish(self, root: NodeId) -> Plan {
        Plan {
            inputs: self.inputs,
            nodes: self.nodes,
            root,
        }
    }
}
