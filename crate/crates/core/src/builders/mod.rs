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

//! Complete distributed plans assembled from sub-operators: radix hash
//! join, join sequences, GROUP BY and filter-join-aggregate queries.

pub mod query;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{col, param, Expr, NamedExpr};
use crate::partition::RadixSpec;
use crate::plan::{infer_types, Agg, AggFn, NodeId, OpKind, Phase, Plan, PlanBuilder};
use crate::types::{Field, ItemType, TupleType};

pub use query::{
    build_query, lineitem_type, orders_type, part_type, q12_spec, q14_spec, q19_spec, q4_spec, QuerySpec, TableScan,
    QUERY_KEY,
};

/// Name of the driver plan's input: one tuple per rank.
pub const WORKERS: &str = "workers";
/// Name of the per-rank plan's input.
pub const WORKER: &str = "worker";
/// Field holding a plan's result collection.
pub const RESULT: &str = "result";

const DATA: &str = "data";
const KEY_REM: &str = "_kr";

/// A base relation as it appears inside each rank's input tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TupleType,
}

impl Relation {
    pub fn new(name: &str, ty: TupleType) -> Self {
        Relation {
            name: name.to_string(),
            ty,
        }
    }

    /// `⟨key:Int64, <name>_payload:Int64⟩`, the layout of generated join inputs.
    pub fn key_payload(name: &str) -> Self {
        Relation::new(name, TupleType::ints(&["key".to_string(), format!("{name}_payload")]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Reduce { aggs: Vec<Agg> },
    ReduceByKey { key: String, aggs: Vec<Agg> },
}

impl Reduction {
    fn op(&self) -> OpKind {
        match self {
            Reduction::Reduce { aggs } => OpKind::Reduce { aggs: aggs.clone() },
            Reduction::ReduceByKey { key, aggs } => OpKind::ReduceByKey {
                key: key.clone(),
                aggs: aggs.clone(),
            },
        }
    }
}

/// Work applied to join results. `filter` and `map` run once, right after
/// the build-probe; `reduce` runs there and again at every level above,
/// including the driver.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<NamedExpr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduce: Option<Reduction>,
}

fn default_key() -> String {
    "key".to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JoinSpec {
    /// Build side; the smaller relation by convention.
    pub left: Relation,
    pub right: Relation,
    #[serde(default = "default_key")]
    pub key: String,
    pub radix: RadixSpec,
    #[serde(default)]
    pub compression: bool,
    /// Executor when true, NestedMap otherwise.
    #[serde(default = "default_true")]
    pub distributed: bool,
    #[serde(default)]
    pub post: Aggregation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceMode {
    /// Re-partitions the output of every join.
    Naive,
    /// Partitions every base relation once and joins co-partitioned data.
    Optimized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    /// N+1 relations for N joins.
    pub relations: Vec<Relation>,
    pub mode: SequenceMode,
    #[serde(default = "default_key")]
    pub shared_attr: String,
    /// Attribute of each of the N joins; defaults to `shared_attr` for all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join_attrs: Option<Vec<String>>,
    pub radix: RadixSpec,
    #[serde(default)]
    pub compression: bool,
    #[serde(default = "default_true")]
    pub distributed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupBySpec {
    pub input: Relation,
    #[serde(default = "default_key")]
    pub key: String,
    pub value: String,
    pub radix: RadixSpec,
    #[serde(default = "default_agg")]
    pub aggregate: AggFn,
    #[serde(default = "default_true")]
    pub compression: bool,
    #[serde(default = "default_true")]
    pub distributed: bool,
}

fn default_agg() -> AggFn {
    AggFn::Sum
}

fn spec_err(msg: impl Into<String>) -> Error {
    Error::SpecInvalid(msg.into())
}

fn check_two_passes(radix: &RadixSpec) -> Result<()> {
    radix.validate()?;
    if radix.pass_bits.len() != 2 {
        return Err(spec_err(format!(
            "builders use one network and one local pass, got {} passes",
            radix.pass_bits.len()
        )));
    }
    Ok(())
}

fn output_of(plan: &Plan) -> Result<TupleType> {
    let types = infer_types(plan)?;
    Ok((*types[&plan.root]).clone())
}

fn element_of(t: &TupleType) -> TupleType {
    (**t.fields()[0].ty.element().expect("single collection output")).clone()
}

fn worker_type(relations: &[Relation]) -> Result<TupleType> {
    TupleType::new(
        relations
            .iter()
            .map(|r| Field::new(r.name.clone(), ItemType::row_vector(r.ty.clone())))
            .collect(),
    )
}

/// Type of the driver's input: `⟨ranks: RowVector⟨worker⟩⟩`.
pub fn workers_type(relations: &[Relation]) -> Result<TupleType> {
    TupleType::new(vec![Field::new("ranks", ItemType::row_vector(worker_type(relations)?))])
}

fn reduce_then_materialize(b: &mut PlanBuilder, up: NodeId, reduce: Option<&Reduction>) -> NodeId {
    let r = match reduce {
        Some(red) => b.add(red.op(), &[up]),
        None => up,
    };
    b.materialize(r, DATA)
}

/// Wraps a per-rank plan into the driver plan:
/// lookup, unnest ranks, run per rank, unnest results, post-aggregate.
fn driver_plan(relations: &[Relation], rank_plan: Plan, distributed: bool, reduce: Option<&Reduction>) -> Result<Plan> {
    let mut b = PlanBuilder::new();
    b.input(WORKERS, workers_type(relations)?);
    let l = b.lookup(WORKERS);
    let s = b.scan(l);
    let inner = Box::new(rank_plan);
    let e = if distributed {
        b.add(OpKind::Executor { plan: inner, ranks: None }, &[s])
    } else {
        b.add(OpKind::NestedMap { plan: inner }, &[s])
    };
    let r = b.scan(e);
    let r = match reduce {
        Some(red) => b.add(red.op(), &[r]),
        None => r,
    };
    let root = b.materialize(r, RESULT);
    Ok(b.finish(root))
}

/// One input of a join stage: a node producing flat tuples that all
/// contain the join key.
struct Side {
    node: NodeId,
    ty: TupleType,
    tag: String,
    compress: bool,
}

impl Side {
    fn pid(&self) -> String {
        format!("{}_pid", self.tag)
    }

    fn lpid(&self) -> String {
        format!("{}_lpid", self.tag)
    }

    fn packed(&self) -> String {
        format!("{}_packed", self.tag)
    }

    fn payload(&self, key: &str) -> &str {
        self.ty.names().find(|n| *n != key).expect("compressed sides have a payload")
    }

    fn wire(&self) -> TupleType {
        if self.compress {
            TupleType::ints(&[self.packed()])
        } else {
            self.ty.clone()
        }
    }

    /// Key bits below the network partition id, as seen on the wire.
    fn wire_key_rem(&self, key: &str, radix: &RadixSpec) -> Expr {
        if self.compress {
            col(&self.packed()).packed_remainder(radix)
        } else {
            col(key).key_remainder(radix)
        }
    }
}

fn check_side(side: &Side, key: &str, radix: &RadixSpec) -> Result<()> {
    let kf = side
        .ty
        .field(key)
        .ok_or_else(|| spec_err(format!("`{}` has no key field `{key}`", side.tag)))?;
    if kf.ty != ItemType::int() || !side.ty.is_flat() {
        return Err(spec_err(format!("`{}` needs a flat type with an Int64 key", side.tag)));
    }
    if side.ty.index_of(KEY_REM).is_some() {
        return Err(spec_err(format!("field name `{KEY_REM}` is reserved")));
    }
    if side.compress {
        if !radix.compression_legal() {
            return Err(Error::CompressionIllegal {
                p: radix.key_bits,
                f: radix.fanout_bits,
            });
        }
        if side.ty.len() != 2 || side.ty.fields().iter().any(|f| f.ty != ItemType::int()) {
            return Err(spec_err(format!(
                "compression packs one Int64 payload next to the key; `{}` is {}",
                side.tag, side.ty
            )));
        }
    }
    Ok(())
}

/// Adds histogram, exchange and the two nested levels joining all `sides`
/// on `key`. Returns the node streaming the joined (and post-processed)
/// tuples on this rank.
fn join_stage(b: &mut PlanBuilder, sides: &[Side], key: &str, radix: &RadixSpec, post: &Aggregation) -> Result<NodeId> {
    for s in sides {
        check_side(s, key, radix)?;
    }
    let n = radix.fanout(0);
    let n1 = radix.fanout(1);
    let net_bucket = col(key).radix_bucket(radix, 0);

    let mut exchanges = Vec::new();
    let mut part_fields = Vec::new();
    for s in sides {
        let lh = b.add_tagged(
            OpKind::LocalHistogram {
                bucket: net_bucket.clone(),
                buckets: n,
            },
            &[s.node],
            Phase::LocalHistogram,
        );
        let mh = b.add_tagged(OpKind::MpiHistogram { buckets: n }, &[lh], Phase::GlobalHistogram);
        let encode = s.compress.then(|| {
            vec![NamedExpr::new(
                &s.packed(),
                Expr::compress(col(key), col(s.payload(key)), radix),
            )]
        });
        exchanges.push(b.add_tagged(
            OpKind::MpiExchange {
                bucket: net_bucket.clone(),
                buckets: n,
                encode,
                id_field: s.pid(),
                data_field: s.tag.clone(),
            },
            &[s.node, lh, mh],
            Phase::NetworkPartitioning,
        ));
        part_fields.push(Field::new(s.pid(), ItemType::int()));
        part_fields.push(Field::new(s.tag.clone(), ItemType::row_vector(s.wire())));
    }
    let zipped = b.add(OpKind::Zip {}, &exchanges);

    // Per network partition: local partitioning of every side.
    let mut p1 = PlanBuilder::new();
    p1.input("part", TupleType::new(part_fields)?);
    let l1 = p1.lookup("part");
    let mut products = Vec::new();
    let mut pair_fields = Vec::new();
    for s in sides {
        let d = p1.project(l1, &[&s.tag]);
        let rows = p1.scan(d);
        let bucket = s.wire_key_rem(key, radix).radix_bucket(radix, 1);
        let lh = p1.add(
            OpKind::LocalHistogram {
                bucket: bucket.clone(),
                buckets: n1,
            },
            &[rows],
        );
        let lp = p1.add(
            OpKind::LocalPartitioning {
                bucket,
                buckets: n1,
                id_field: s.lpid(),
                data_field: s.tag.clone(),
            },
            &[rows, lh],
        );
        let pid = p1.project(l1, &[&s.pid()]);
        products.push(p1.add(OpKind::CartesianProduct {}, &[pid, lp]));
        pair_fields.push(Field::new(s.pid(), ItemType::int()));
        pair_fields.push(Field::new(s.lpid(), ItemType::int()));
        pair_fields.push(Field::new(s.tag.clone(), ItemType::row_vector(s.wire())));
    }
    let z1 = p1.add(OpKind::Zip {}, &products);

    // Per pair of local partitions: unpack, build-probe, recover the key.
    let mut p2 = PlanBuilder::new();
    p2.input("pair", TupleType::new(pair_fields)?);
    let l2 = p2.lookup("pair");
    let mut acc: Option<NodeId> = None;
    for s in sides {
        let d = p2.project(l2, &[&s.tag]);
        let rows = p2.scan(d);
        let mut unpack = vec![NamedExpr::new(KEY_REM, s.wire_key_rem(key, radix))];
        if s.compress {
            unpack.push(NamedExpr::new(s.payload(key), col(&s.packed()).packed_value(radix)));
        } else {
            unpack.extend(s.ty.names().filter(|f| *f != key).map(NamedExpr::keep));
        }
        let u = p2.map(rows, unpack);
        acc = Some(match acc {
            None => u,
            Some(a) => p2.add(
                OpKind::BuildProbe {
                    attrs: vec![KEY_REM.to_string()],
                },
                &[a, u],
            ),
        });
    }
    let joined = acc.expect("at least one side");
    let pid = p2.project(l2, &[&sides[0].pid()]);
    let mut recover = vec![NamedExpr::new(
        key,
        Expr::recover_key(col(KEY_REM), param(&sides[0].pid()), radix),
    )];
    for s in sides {
        recover.extend(s.ty.names().filter(|f| *f != key).map(NamedExpr::keep));
    }
    let mut out = p2.add(OpKind::ParametrizedMap { exprs: recover }, &[pid, joined]);
    if let Some(f) = &post.filter {
        out = p2.add(OpKind::Filter { predicate: f.clone() }, &[out]);
    }
    if let Some(m) = &post.map {
        out = p2.map(out, m.clone());
    }
    let root2 = reduce_then_materialize(&mut p2, out, post.reduce.as_ref());
    let nm2 = p2.finish(root2);

    let inner = p1.add_tagged(OpKind::NestedMap { plan: Box::new(nm2) }, &[z1], Phase::BuildProbe);
    let inner_rows = p1.scan(inner);
    let root1 = reduce_then_materialize(&mut p1, inner_rows, post.reduce.as_ref());
    let nm1 = p1.finish(root1);

    let outer = b.add_tagged(OpKind::NestedMap { plan: Box::new(nm1) }, &[zipped], Phase::LocalPartitioning);
    Ok(b.scan(outer))
}

/// Rank-level plan skeleton: lookup of the worker tuple and one scan per
/// relation.
fn rank_sources(relations: &[Relation]) -> Result<(PlanBuilder, Vec<NodeId>)> {
    let mut b = PlanBuilder::new();
    b.input(WORKER, worker_type(relations)?);
    let l = b.lookup(WORKER);
    let scans = relations
        .iter()
        .map(|r| {
            let p = b.project(l, &[&r.name]);
            b.scan(p)
        })
        .collect();
    Ok((b, scans))
}

fn finish_rank_plan(mut b: PlanBuilder, rows: NodeId, reduce: Option<&Reduction>) -> Plan {
    let root = reduce_then_materialize(&mut b, rows, reduce);
    b.finish(root)
}

fn check_names(relations: &[Relation]) -> Result<()> {
    for (i, r) in relations.iter().enumerate() {
        if relations[..i].iter().any(|o| o.name == r.name) {
            return Err(spec_err(format!("relation `{}` listed twice", r.name)));
        }
    }
    Ok(())
}

/// Distributed radix hash join of two relations. The result holds the key,
/// then the left payload fields, then the right ones.
pub fn build_join(spec: &JoinSpec) -> Result<Plan> {
    check_two_passes(&spec.radix)?;
    let relations = [spec.left.clone(), spec.right.clone()];
    check_names(&relations)?;
    let (mut b, scans) = rank_sources(&relations)?;
    let sides: Vec<Side> = relations
        .iter()
        .zip(&scans)
        .map(|(r, n)| Side {
            node: *n,
            ty: r.ty.clone(),
            tag: r.name.clone(),
            compress: spec.compression,
        })
        .collect();
    let rows = join_stage(&mut b, &sides, &spec.key, &spec.radix, &spec.post)?;
    let rank = finish_rank_plan(b, rows, spec.post.reduce.as_ref());
    let plan = driver_plan(&relations, rank, spec.distributed, spec.post.reduce.as_ref())?;
    infer_types(&plan)?;
    Ok(plan)
}

/// N joins over N+1 relations.
pub fn build_join_sequence(spec: &SequenceSpec) -> Result<Plan> {
    check_two_passes(&spec.radix)?;
    check_names(&spec.relations)?;
    let n_joins = spec.relations.len().saturating_sub(1);
    if n_joins == 0 {
        return Err(spec_err("a join sequence needs at least two relations"));
    }
    let attrs = match &spec.join_attrs {
        Some(a) if a.len() != n_joins => {
            return Err(spec_err(format!("{} join attributes for {n_joins} joins", a.len())))
        }
        Some(a) => a.clone(),
        None => vec![spec.shared_attr.clone(); n_joins],
    };
    let (mut b, scans) = rank_sources(&spec.relations)?;
    let base = |i: usize| Side {
        node: scans[i],
        ty: spec.relations[i].ty.clone(),
        tag: spec.relations[i].name.clone(),
        compress: spec.compression,
    };
    let rows = match spec.mode {
        SequenceMode::Optimized => {
            if let Some(bad) = attrs.iter().find(|a| **a != spec.shared_attr) {
                return Err(Error::SharedAttrViolation(format!(
                    "{} (found a join on `{bad}`)",
                    spec.shared_attr
                )));
            }
            if let Some(r) = spec.relations.iter().find(|r| r.ty.index_of(&spec.shared_attr).is_none()) {
                return Err(Error::SharedAttrViolation(format!(
                    "{} (missing from `{}`)",
                    spec.shared_attr, r.name
                )));
            }
            let sides: Vec<Side> = (0..spec.relations.len()).map(base).collect();
            join_stage(&mut b, &sides, &spec.shared_attr, &spec.radix, &Aggregation::default())?
        }
        SequenceMode::Naive => {
            let mut acc = base(0);
            for (i, attr) in attrs.iter().enumerate() {
                let rows = join_stage(&mut b, &[acc, base(i + 1)], attr, &spec.radix, &Aggregation::default())?;
                let ty = stream_type(&b, rows)?;
                acc = Side {
                    node: rows,
                    ty,
                    tag: format!("j{}", i + 1),
                    compress: false,
                };
            }
            acc.node
        }
    };
    let rank = finish_rank_plan(b, rows, None);
    let plan = driver_plan(&spec.relations, rank, spec.distributed, None)?;
    infer_types(&plan)?;
    Ok(plan)
}

/// Output type of `node` in a plan under construction.
fn stream_type(b: &PlanBuilder, node: NodeId) -> Result<TupleType> {
    let plan = b.snapshot(node);
    output_of(&plan)
}

/// Distributed GROUP BY `key` aggregating `value`.
pub fn build_group_by(spec: &GroupBySpec) -> Result<Plan> {
    check_two_passes(&spec.radix)?;
    let radix = &spec.radix;
    let rel = &spec.input;
    let (key, value) = (spec.key.as_str(), spec.value.as_str());
    for f in [key, value] {
        if rel.ty.field(f).map(|x| &x.ty) != Some(&ItemType::int()) {
            return Err(spec_err(format!("`{}` needs an Int64 field `{f}`", rel.name)));
        }
    }
    if rel.ty.len() != 2 {
        return Err(spec_err(format!("group-by input must be ⟨{key}, {value}⟩, got {}", rel.ty)));
    }
    if spec.compression && !radix.compression_legal() {
        return Err(Error::CompressionIllegal {
            p: radix.key_bits,
            f: radix.fanout_bits,
        });
    }
    let (n, n1) = (radix.fanout(0), radix.fanout(1));
    let agg = Reduction::ReduceByKey {
        key: key.to_string(),
        aggs: vec![Agg {
            field: value.to_string(),
            func: spec.aggregate,
        }],
    };
    let packed = "packed";
    let wire = if spec.compression {
        TupleType::ints(&[packed])
    } else {
        TupleType::ints(&[key, value])
    };
    let key_rem = || {
        if spec.compression {
            col(packed).packed_remainder(radix)
        } else {
            col(key).key_remainder(radix)
        }
    };

    // Per pair (network partition, local partition): decode and aggregate.
    let mut p2 = PlanBuilder::new();
    p2.input(
        "pair",
        TupleType::new(vec![
            Field::new("pid", ItemType::int()),
            Field::new("lpid", ItemType::int()),
            Field::new(DATA, ItemType::row_vector(wire.clone())),
        ])?,
    );
    let l2 = p2.lookup("pair");
    let d2 = p2.project(l2, &[DATA]);
    let rows2 = p2.scan(d2);
    let pid2 = p2.project(l2, &["pid"]);
    let decoded_value = if spec.compression {
        col(packed).packed_value(radix)
    } else {
        col(value)
    };
    let dec = p2.add(
        OpKind::ParametrizedMap {
            exprs: vec![
                NamedExpr::new(key, Expr::recover_key(key_rem(), param("pid"), radix)),
                NamedExpr::new(value, decoded_value),
            ],
        },
        &[pid2, rows2],
    );
    let root2 = reduce_then_materialize(&mut p2, dec, Some(&agg));
    let nm2 = p2.finish(root2);

    // Per network partition: local partitioning.
    let mut p1 = PlanBuilder::new();
    p1.input(
        "part",
        TupleType::new(vec![
            Field::new("pid", ItemType::int()),
            Field::new(DATA, ItemType::row_vector(wire.clone())),
        ])?,
    );
    let l1 = p1.lookup("part");
    let d1 = p1.project(l1, &[DATA]);
    let rows1 = p1.scan(d1);
    let bucket1 = key_rem().radix_bucket(radix, 1);
    let lh1 = p1.add(
        OpKind::LocalHistogram {
            bucket: bucket1.clone(),
            buckets: n1,
        },
        &[rows1],
    );
    let lp1 = p1.add(
        OpKind::LocalPartitioning {
            bucket: bucket1,
            buckets: n1,
            id_field: "lpid".into(),
            data_field: DATA.into(),
        },
        &[rows1, lh1],
    );
    let pid1 = p1.project(l1, &["pid"]);
    let cp = p1.add(OpKind::CartesianProduct {}, &[pid1, lp1]);
    let nm = p1.add_tagged(OpKind::NestedMap { plan: Box::new(nm2) }, &[cp], Phase::BuildProbe);
    let s1 = p1.scan(nm);
    let root1 = reduce_then_materialize(&mut p1, s1, Some(&agg));
    let nm1 = p1.finish(root1);

    // Per rank: histograms and the compressed exchange.
    let relations = [rel.clone()];
    let (mut b, scans) = rank_sources(&relations)?;
    let bucket0 = col(key).radix_bucket(radix, 0);
    let lh = b.add_tagged(
        OpKind::LocalHistogram {
            bucket: bucket0.clone(),
            buckets: n,
        },
        &[scans[0]],
        Phase::LocalHistogram,
    );
    let mh = b.add_tagged(OpKind::MpiHistogram { buckets: n }, &[lh], Phase::GlobalHistogram);
    let ex = b.add_tagged(
        OpKind::MpiExchange {
            bucket: bucket0,
            buckets: n,
            encode: spec
                .compression
                .then(|| vec![NamedExpr::new(packed, Expr::compress(col(key), col(value), radix))]),
            id_field: "pid".into(),
            data_field: DATA.into(),
        },
        &[scans[0], lh, mh],
        Phase::NetworkPartitioning,
    );
    let outer = b.add_tagged(OpKind::NestedMap { plan: Box::new(nm1) }, &[ex], Phase::LocalPartitioning);
    let rows = b.scan(outer);
    let rank = finish_rank_plan(b, rows, Some(&agg));
    let plan = driver_plan(&relations, rank, spec.distributed, Some(&agg))?;
    infer_types(&plan)?;
    Ok(plan)
}

/// The same plan with every Executor replaced by a NestedMap.
pub fn localize(plan: &Plan) -> Plan {
    let mut p = plan.clone();
    for node in p.nodes.values_mut() {
        node.op = match std::mem::replace(&mut node.op, OpKind::Zip {}) {
            OpKind::Executor { plan, .. } => OpKind::NestedMap {
                plan: Box::new(localize(&plan)),
            },
            OpKind::NestedMap { plan } => OpKind::NestedMap {
                plan: Box::new(localize(&plan)),
            },
            other => other,
        };
    }
    p
}

/// Element type of a driver plan's result collection.
pub fn result_type(plan: &Plan) -> Result<TupleType> {
    Ok(element_of(&output_of(plan)?))
}
