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

//! Pull-based execution of compiled plans.

mod clock;
mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use crate::cluster::{ClusterCtx, ExecutorOp, Metrics, MpiBroadcastOp, MpiExchangeOp, MpiHistogramOp, TransportMetrics};
use crate::error::{Error, Result};
use crate::expr::{CExpr, NamedExpr};
use crate::plan::{cut_pipelines, infer_types, AggFn, NodeId, OpKind, Plan, PipelineSchedule};
use crate::types::TupleType;
use crate::value::Tuple;

pub use clock::{PhaseClock, PhaseTimes};
pub use ops::*;

/// Values for a plan's named inputs.
pub type Bindings = BTreeMap<String, Tuple>;

/// The iterator interface every operator implements.
pub trait Operator: Send {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()>;
    /// `None` signals the end of the stream; later calls keep returning it.
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>>;
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()>;
}

pub type BoxOp = Box<dyn Operator>;

#[derive(Clone, Debug)]
pub struct ExecOptions {
    /// Tuples buffered per destination before a put is issued.
    pub put_batch: usize,
    /// Track window regions and epochs and reject illegal accesses.
    pub strict_epochs: bool,
    pub collective_timeout: Duration,
    /// Fail if any operator pulls an upstream that already returned End.
    pub check_iterator_law: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            put_batch: 2048,
            strict_epochs: false,
            collective_timeout: Duration::from_secs(60),
            check_iterator_law: false,
        }
    }
}

/// Per-worker execution state.
pub struct ExecCtx {
    pub cluster: ClusterCtx,
    pub options: ExecOptions,
    pub metrics: Arc<Metrics>,
    pub clock: PhaseClock,
}

impl ExecCtx {
    /// A single-rank context with fresh metrics.
    pub fn new(options: ExecOptions) -> Self {
        let metrics = Arc::new(Metrics::default());
        let cluster = ClusterCtx::local(metrics.clone(), &options);
        ExecCtx {
            cluster,
            options,
            metrics,
            clock: PhaseClock::default(),
        }
    }

    pub fn worker(cluster: ClusterCtx, options: ExecOptions, metrics: Arc<Metrics>) -> Self {
        ExecCtx {
            cluster,
            options,
            metrics,
            clock: PhaseClock::default(),
        }
    }
}

/// Per-node executable parameters, resolved once per plan.
#[derive(Clone)]
pub(crate) enum NodeSpec {
    Lookup(String),
    Nested {
        plan: Arc<CompiledPlan>,
        executor: bool,
        ranks: Option<usize>,
    },
    Map(Arc<[CExpr]>),
    ParametrizedMap(Arc<[CExpr]>),
    Projection(Arc<[usize]>),
    Filter(Arc<CExpr>),
    CartesianProduct,
    Zip,
    Reduce(Arc<[AggFn]>),
    ReduceByKey { key: usize, aggs: Arc<[Option<AggFn>]> },
    LocalHistogram { bucket: Arc<CExpr>, buckets: usize },
    BuildProbe(Arc<ProbeLayout>),
    RowScan(usize),
    Materialize(Arc<TupleType>),
    LocalPartitioning { bucket: Arc<CExpr>, buckets: usize, element: Arc<TupleType> },
    MpiHistogram(usize),
    MpiExchange { bucket: Arc<CExpr>, buckets: usize, encode: Option<Arc<[CExpr]>>, wire: Arc<TupleType> },
    MpiBroadcast { encode: Option<Arc<[CExpr]>>, wire: Arc<TupleType> },
}

/// Field positions used by BuildProbe.
#[derive(Debug)]
pub struct ProbeLayout {
    pub left_keys: Vec<usize>,
    pub right_keys: Vec<usize>,
    pub left_rest: Vec<usize>,
    pub right_rest: Vec<usize>,
}

/// A validated plan with its schedule, types and compiled node parameters.
/// Shared read-only between all invocations and ranks.
pub struct CompiledPlan {
    pub plan: Plan,
    pub types: BTreeMap<NodeId, Arc<TupleType>>,
    pub schedule: PipelineSchedule,
    specs: BTreeMap<NodeId, NodeSpec>,
    last_use: BTreeMap<NodeId, usize>,
}

fn compile_exprs(exprs: &[NamedExpr], input: &TupleType, param: Option<&TupleType>) -> Result<Arc<[CExpr]>> {
    exprs
        .iter()
        .map(|ne| ne.expr.compile(input, param))
        .collect::<Result<Vec<_>>>()
        .map(Into::into)
}

fn agg_slots(t: &TupleType, key: Option<usize>, aggs: &[crate::plan::Agg]) -> Vec<Option<AggFn>> {
    t.fields()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if Some(i) == key {
                None
            } else {
                aggs.iter().find(|a| a.field == f.name).map(|a| a.func)
            }
        })
        .collect()
}

impl CompiledPlan {
    pub fn compile(plan: &Plan) -> Result<Arc<CompiledPlan>> {
        let types = infer_types(plan)?;
        let schedule = cut_pipelines(plan)?;
        let mut specs = BTreeMap::new();
        for (id, node) in &plan.nodes {
            let up = |i: usize| types[&node.upstreams[i]].clone();
            let spec = match &node.op {
                OpKind::ParameterLookup { binding } => NodeSpec::Lookup(binding.clone()),
                OpKind::NestedMap { plan } => NodeSpec::Nested {
                    plan: CompiledPlan::compile(plan)?,
                    executor: false,
                    ranks: None,
                },
                OpKind::Executor { plan, ranks } => NodeSpec::Nested {
                    plan: CompiledPlan::compile(plan)?,
                    executor: true,
                    ranks: *ranks,
                },
                OpKind::Map { exprs } => NodeSpec::Map(compile_exprs(exprs, &up(0), None)?),
                OpKind::ParametrizedMap { exprs } => {
                    NodeSpec::ParametrizedMap(compile_exprs(exprs, &up(1), Some(&up(0)))?)
                }
                OpKind::Projection { fields } => {
                    let t = up(0);
                    NodeSpec::Projection(
                        fields
                            .iter()
                            .map(|f| t.index_of(f).ok_or_else(|| Error::UnknownField(f.clone())))
                            .collect::<Result<Vec<_>>>()?
                            .into(),
                    )
                }
                OpKind::Filter { predicate } => NodeSpec::Filter(Arc::new(predicate.compile(&up(0), None)?)),
                OpKind::CartesianProduct {} => NodeSpec::CartesianProduct,
                OpKind::Zip {} => NodeSpec::Zip,
                OpKind::Reduce { aggs } => NodeSpec::Reduce(
                    agg_slots(&up(0), None, aggs)
                        .into_iter()
                        .map(|a| a.expect("validated"))
                        .collect::<Vec<_>>()
                        .into(),
                ),
                OpKind::ReduceByKey { key, aggs } => {
                    let t = up(0);
                    let k = t.index_of(key).expect("validated");
                    NodeSpec::ReduceByKey {
                        key: k,
                        aggs: agg_slots(&t, Some(k), aggs).into(),
                    }
                }
                OpKind::LocalHistogram { bucket, buckets } => NodeSpec::LocalHistogram {
                    bucket: Arc::new(bucket.compile(&up(0), None)?),
                    buckets: *buckets,
                },
                OpKind::BuildProbe { attrs } => {
                    let (l, r) = (up(0), up(1));
                    let pos = |t: &TupleType| attrs.iter().map(|a| t.index_of(a).unwrap()).collect();
                    let rest = |t: &TupleType| {
                        (0..t.len())
                            .filter(|i| !attrs.contains(&t.fields()[*i].name))
                            .collect()
                    };
                    NodeSpec::BuildProbe(Arc::new(ProbeLayout {
                        left_keys: pos(&l),
                        right_keys: pos(&r),
                        left_rest: rest(&l),
                        right_rest: rest(&r),
                    }))
                }
                OpKind::RowScan {} => {
                    let t = up(0);
                    let pos = t.collection_fields().next().expect("validated").0;
                    NodeSpec::RowScan(pos)
                }
                OpKind::MaterializeRowVector { .. } => NodeSpec::Materialize(up(0)),
                OpKind::LocalPartitioning { bucket, buckets, .. } => NodeSpec::LocalPartitioning {
                    bucket: Arc::new(bucket.compile(&up(0), None)?),
                    buckets: *buckets,
                    element: up(0),
                },
                OpKind::MpiHistogram { buckets } => NodeSpec::MpiHistogram(*buckets),
                OpKind::MpiExchange {
                    bucket,
                    buckets,
                    encode,
                    ..
                } => {
                    let out = &types[id];
                    NodeSpec::MpiExchange {
                        bucket: Arc::new(bucket.compile(&up(0), None)?),
                        buckets: *buckets,
                        encode: encode.as_ref().map(|e| compile_exprs(e, &up(0), None)).transpose()?,
                        wire: out.fields()[1].ty.element().unwrap().clone(),
                    }
                }
                OpKind::MpiBroadcast { encode } => NodeSpec::MpiBroadcast {
                    encode: encode.as_ref().map(|e| compile_exprs(e, &up(0), None)).transpose()?,
                    wire: types[id].clone(),
                },
            };
            specs.insert(*id, spec);
        }
        let last_use = schedule.last_use();
        Ok(Arc::new(CompiledPlan {
            plan: plan.clone(),
            types,
            schedule,
            specs,
            last_use,
        }))
    }

    pub fn output_type(&self) -> &Arc<TupleType> {
        &self.types[&self.plan.root]
    }

    /// The single input binding of a nested plan.
    pub(crate) fn binding_name(&self) -> &str {
        &self.plan.inputs[0].name
    }

    fn build(
        &self,
        id: NodeId,
        sink: NodeId,
        bindings: &Bindings,
        mats: &BTreeMap<NodeId, Arc<Vec<Tuple>>>,
        options: &ExecOptions,
    ) -> Result<BoxOp> {
        let guard = |op: BoxOp| -> BoxOp {
            if options.check_iterator_law {
                Box::new(LawGuard::new(op, id))
            } else {
                op
            }
        };
        if id != sink {
            if let Some(rows) = mats.get(&id) {
                return Ok(guard(Box::new(MaterializedScan::new(rows.clone()))));
            }
        }
        let node = &self.plan.nodes[&id];
        let mut ups = node
            .upstreams
            .iter()
            .map(|u| self.build(*u, sink, bindings, mats, options))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let mut up = || ups.next().expect("arity validated");
        let op: BoxOp = match &self.specs[&id] {
            NodeSpec::Lookup(name) => {
                let t = bindings
                    .get(name)
                    .ok_or_else(|| Error::UnboundParameter(name.clone()))?;
                Box::new(ParameterLookupOp::new(t.clone()))
            }
            NodeSpec::Nested {
                plan,
                executor: false,
                ..
            } => Box::new(NestedMapOp::new(up(), plan.clone())),
            NodeSpec::Nested {
                plan,
                executor: true,
                ranks,
            } => Box::new(ExecutorOp::new(up(), plan.clone(), *ranks)),
            NodeSpec::Map(exprs) => Box::new(MapOp::new(up(), exprs.clone())),
            NodeSpec::ParametrizedMap(exprs) => {
                let p = up();
                Box::new(ParametrizedMapOp::new(p, up(), exprs.clone()))
            }
            NodeSpec::Projection(idx) => Box::new(ProjectionOp::new(up(), idx.clone())),
            NodeSpec::Filter(pred) => Box::new(FilterOp::new(up(), pred.clone())),
            NodeSpec::CartesianProduct => {
                let l = up();
                Box::new(CartesianProductOp::new(l, up()))
            }
            NodeSpec::Zip => Box::new(ZipOp::new(ups.collect())),
            NodeSpec::Reduce(aggs) => Box::new(ReduceOp::new(up(), aggs.clone())),
            NodeSpec::ReduceByKey { key, aggs } => Box::new(ReduceByKeyOp::new(up(), *key, aggs.clone())),
            NodeSpec::LocalHistogram { bucket, buckets } => {
                Box::new(LocalHistogramOp::new(up(), bucket.clone(), *buckets))
            }
            NodeSpec::BuildProbe(layout) => {
                let l = up();
                Box::new(BuildProbeOp::new(l, up(), layout.clone()))
            }
            NodeSpec::RowScan(field) => Box::new(RowScanOp::new(up(), *field)),
            NodeSpec::Materialize(element) => Box::new(MaterializeOp::new(up(), element.clone())),
            NodeSpec::LocalPartitioning {
                bucket,
                buckets,
                element,
            } => {
                let d = up();
                Box::new(LocalPartitioningOp::new(d, up(), bucket.clone(), *buckets, element.clone()))
            }
            NodeSpec::MpiHistogram(n) => Box::new(MpiHistogramOp::new(up(), *n)),
            NodeSpec::MpiExchange {
                bucket,
                buckets,
                encode,
                wire,
            } => {
                let (d, l, g) = (up(), up(), up());
                Box::new(MpiExchangeOp::new(
                    d,
                    l,
                    g,
                    bucket.clone(),
                    *buckets,
                    encode.clone(),
                    wire.clone(),
                ))
            }
            NodeSpec::MpiBroadcast { encode, wire } => {
                let (d, l, g) = (up(), up(), up());
                Box::new(MpiBroadcastOp::new(d, l, g, encode.clone(), wire.clone()))
            }
        };
        let op = match node.phase {
            Some(phase) => Box::new(Timed::new(op, phase)),
            None => op,
        };
        Ok(guard(op))
    }

    /// Runs every pipeline in schedule order and returns the root's output.
    pub fn run(&self, bindings: &Bindings, ctx: &mut ExecCtx) -> Result<Vec<Tuple>> {
        let mut mats: BTreeMap<NodeId, Arc<Vec<Tuple>>> = BTreeMap::new();
        let mut result = Vec::new();
        for (i, p) in self.schedule.pipelines.iter().enumerate() {
            let mut root = self.build(p.sink, p.sink, bindings, &mats, &ctx.options)?;
            let rows = drain(root.as_mut(), ctx)?;
            if p.sink == self.plan.root {
                result = rows;
            } else {
                mats.insert(p.sink, Arc::new(rows));
            }
            mats.retain(|m, _| self.last_use.get(m).is_some_and(|last| *last > i));
        }
        Ok(result)
    }

    /// Node ids whose output is materialized, for inspection.
    pub fn materialized(&self) -> &BTreeSet<NodeId> {
        &self.schedule.materialized
    }
}

/// Opens, fully drains and closes an operator tree.
pub fn drain(op: &mut dyn Operator, ctx: &mut ExecCtx) -> Result<Vec<Tuple>> {
    op.open(ctx)?;
    let mut out = Vec::new();
    while let Some(t) = op.next(ctx)? {
        out.push(t);
    }
    op.close(ctx)?;
    Ok(out)
}

/// Outcome of a top-level execution.
#[derive(Clone, Debug)]
pub struct ExecResult {
    pub rows: Vec<Tuple>,
    pub output_type: Arc<TupleType>,
    pub phases: PhaseTimes,
    pub transport: TransportMetrics,
}

/// Validates, compiles and runs `plan` on a single driver rank.
pub fn execute(plan: &Plan, bindings: &Bindings, options: ExecOptions) -> Result<ExecResult> {
    let compiled = CompiledPlan::compile(plan)?;
    for b in &plan.inputs {
        if let Some(t) = bindings.get(&b.name) {
            if !t.conforms(&b.ty) {
                return Err(Error::InvalidPlan(format!(
                    "value bound to `{}` does not conform to {}",
                    b.name, b.ty
                )));
            }
        }
    }
    let mut ctx = ExecCtx::new(options);
    let rows = compiled.run(bindings, &mut ctx)?;
    Ok(ExecResult {
        rows,
        output_type: compiled.output_type().clone(),
        phases: ctx.clock.totals(),
        transport: ctx.metrics.snapshot(),
    })
}
