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

//! Structural checks and type inference.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Agg, AggFn, NodeId, OpKind, Plan, PlanNode};
use crate::error::{Error, Result};
use crate::expr::{Expr, NamedExpr};
use crate::types::{concat_types, project_type, AtomKind, Field, ItemType, TupleType};

#[derive(Clone, Debug, PartialEq)]
pub struct TypeAssignment {
    pub node: NodeId,
    pub ty: TupleType,
}

/// Checks the plan and returns the output type of every node, in id order.
pub fn validate(plan: &Plan) -> Result<Vec<TypeAssignment>> {
    Ok(infer_types(plan)?
        .into_iter()
        .map(|(node, ty)| TypeAssignment {
            node,
            ty: (*ty).clone(),
        })
        .collect())
}

/// Same as [`validate`], keyed by node id with shared types.
pub fn infer_types(plan: &Plan) -> Result<BTreeMap<NodeId, Arc<TupleType>>> {
    check_structure(plan)?;
    let mut types: BTreeMap<NodeId, Arc<TupleType>> = BTreeMap::new();
    for id in topo_order(plan)? {
        let node = &plan.nodes[&id];
        let ups: Vec<&TupleType> = node.upstreams.iter().map(|u| types[u].as_ref()).collect();
        let ty = infer_node(plan, node, &ups)?;
        types.insert(id, Arc::new(ty));
    }
    Ok(types)
}

fn check_structure(plan: &Plan) -> Result<()> {
    if !plan.nodes.contains_key(&plan.root) {
        return Err(Error::InvalidPlan(format!("root {} is not a node", plan.root)));
    }
    for n in plan.nodes.values() {
        for u in &n.upstreams {
            if !plan.nodes.contains_key(u) {
                return Err(Error::InvalidPlan(format!(
                    "node {} reads unknown node {u}",
                    n.id
                )));
            }
        }
    }
    for (i, b) in plan.inputs.iter().enumerate() {
        if plan.inputs[..i].iter().any(|o| o.name == b.name) {
            return Err(Error::InvalidPlan(format!("input `{}` bound twice", b.name)));
        }
    }
    Ok(())
}

/// Upstream-first order over all nodes. Fails on cycles and on nodes the
/// root does not reach.
fn topo_order(plan: &Plan) -> Result<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark: BTreeMap<NodeId, Mark> = plan.nodes.keys().map(|k| (*k, Mark::New)).collect();
    let mut order = Vec::with_capacity(plan.nodes.len());
    // Cycles anywhere are reported before reachability.
    for &start in plan.nodes.keys() {
        if mark[&start] != Mark::New {
            continue;
        }
        let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
        mark.insert(start, Mark::Active);
        while let Some((id, next)) = stack.last().copied() {
            let ups = &plan.nodes[&id].upstreams;
            if next < ups.len() {
                stack.last_mut().unwrap().1 += 1;
                let u = ups[next];
                match mark[&u] {
                    Mark::New => {
                        mark.insert(u, Mark::Active);
                        stack.push((u, 0));
                    }
                    Mark::Active => return Err(Error::CycleDetected(u)),
                    Mark::Done => {}
                }
            } else {
                mark.insert(id, Mark::Done);
                order.push(id);
                stack.pop();
            }
        }
    }
    let mut reached = BTreeMap::new();
    let mut todo = vec![plan.root];
    while let Some(id) = todo.pop() {
        if reached.insert(id, ()).is_none() {
            todo.extend(plan.nodes[&id].upstreams.iter().copied());
        }
    }
    if let Some(orphan) = plan.nodes.keys().find(|k| !reached.contains_key(k)) {
        return Err(Error::InvalidPlan(format!(
            "node {orphan} is not reachable from root {}",
            plan.root
        )));
    }
    Ok(order)
}

fn mismatch(node: NodeId, expected: impl Into<String>, actual: impl Into<String>) -> Error {
    Error::TypeMismatch {
        node,
        expected: expected.into(),
        actual: actual.into(),
    }
}

fn expr_type(node: NodeId, e: &Expr, input: &TupleType, param: Option<&TupleType>) -> Result<ItemType> {
    e.infer(input, param)
        .map_err(|msg| mismatch(node, format!("expression over {input}"), msg))
}

fn int_expr(node: NodeId, e: &Expr, input: &TupleType) -> Result<()> {
    match expr_type(node, e, input, None)? {
        ItemType::Atom(AtomKind::Int64) => Ok(()),
        other => Err(mismatch(node, "Int64 bucket expression", other.to_string())),
    }
}

fn map_type(
    node: NodeId,
    exprs: &[NamedExpr],
    input: &TupleType,
    param: Option<&TupleType>,
) -> Result<TupleType> {
    let fields = exprs
        .iter()
        .map(|ne| Ok(Field::new(ne.name.clone(), expr_type(node, &ne.expr, input, param)?)))
        .collect::<Result<Vec<_>>>()?;
    TupleType::new(fields)
}

pub(crate) fn histogram_type() -> TupleType {
    TupleType::ints(&["bucketId", "count"])
}

fn is_histogram(t: &TupleType) -> bool {
    t.len() == 2 && t.fields().iter().all(|f| f.ty == ItemType::int())
}

fn check_histogram(node: NodeId, t: &TupleType) -> Result<()> {
    if is_histogram(t) {
        Ok(())
    } else {
        Err(mismatch(node, histogram_type().to_string(), t.to_string()))
    }
}

fn check_aggs(node: NodeId, input: &TupleType, skip: Option<&str>, aggs: &[Agg]) -> Result<()> {
    for f in input.fields() {
        if Some(f.name.as_str()) == skip {
            continue;
        }
        let n = aggs.iter().filter(|a| a.field == f.name).count();
        if n != 1 {
            return Err(Error::InvalidPlan(format!(
                "node {node}: field `{}` needs exactly one aggregate, has {n}",
                f.name
            )));
        }
        match (f.ty.atom(), aggs.iter().find(|a| a.field == f.name).unwrap().func) {
            (Some(AtomKind::Int64 | AtomKind::Float64), _) => {}
            (Some(AtomKind::Bool), AggFn::Min | AggFn::Max) => {}
            (_, func) => {
                return Err(mismatch(
                    node,
                    format!("numeric field for {func:?}"),
                    format!("{}: {}", f.name, f.ty),
                ))
            }
        }
    }
    for a in aggs {
        if input.index_of(&a.field).is_none() || Some(a.field.as_str()) == skip {
            return Err(Error::UnknownField(a.field.clone()));
        }
    }
    Ok(())
}

fn partition_output(node: NodeId, id: &str, data: &str, element: TupleType) -> Result<TupleType> {
    if !element.is_flat() {
        return Err(mismatch(node, "flat tuple type", element.to_string()));
    }
    TupleType::new(vec![
        Field::new(id, ItemType::int()),
        Field::new(data, ItemType::row_vector(element)),
    ])
}

fn infer_node(plan: &Plan, node: &PlanNode, ups: &[&TupleType]) -> Result<TupleType> {
    let id = node.id;
    let (lo, hi) = node.op.arity();
    if ups.len() < lo || hi.is_some_and(|h| ups.len() > h) {
        let expected = match hi {
            Some(h) if h == lo => lo.to_string(),
            Some(h) => format!("{lo}..={h}"),
            None => format!(">= {lo}"),
        };
        return Err(Error::ArityMismatch {
            node: id,
            kind: node.op.name(),
            expected,
            actual: ups.len(),
        });
    }
    match &node.op {
        OpKind::ParameterLookup { binding } => plan
            .input(binding)
            .map(|b| b.ty.clone())
            .ok_or_else(|| Error::UnboundParameter(binding.clone())),
        OpKind::NestedMap { plan: inner } | OpKind::Executor { plan: inner, .. } => {
            if let OpKind::Executor { ranks: Some(0), .. } = node.op {
                return Err(Error::InvalidPlan(format!("node {id}: executor with zero ranks")));
            }
            if inner.inputs.len() != 1 {
                return Err(Error::InvalidPlan(format!(
                    "node {id}: nested plan must have exactly one input, has {}",
                    inner.inputs.len()
                )));
            }
            if &inner.inputs[0].ty != ups[0] {
                return Err(mismatch(id, inner.inputs[0].ty.to_string(), ups[0].to_string()));
            }
            let types = infer_types(inner)?;
            Ok((*types[&inner.root]).clone())
        }
        OpKind::Map { exprs } => map_type(id, exprs, ups[0], None),
        OpKind::ParametrizedMap { exprs } => map_type(id, exprs, ups[1], Some(ups[0])),
        OpKind::Projection { fields } => project_type(ups[0], fields),
        OpKind::Filter { predicate } => match expr_type(id, predicate, ups[0], None)? {
            ItemType::Atom(AtomKind::Bool) => Ok(ups[0].clone()),
            other => Err(mismatch(id, "Bool predicate", other.to_string())),
        },
        OpKind::CartesianProduct {} => concat_types(ups[0], ups[1]),
        OpKind::Zip {} => {
            let mut t = ups[0].clone();
            for u in &ups[1..] {
                t = concat_types(&t, u)?;
            }
            Ok(t)
        }
        OpKind::Reduce { aggs } => {
            check_aggs(id, ups[0], None, aggs)?;
            Ok(ups[0].clone())
        }
        OpKind::ReduceByKey { key, aggs } => {
            let t = ups[0];
            if t.len() < 2 {
                return Err(mismatch(id, "tuple with at least two fields", t.to_string()));
            }
            let kf = t.field(key).ok_or_else(|| Error::UnknownField(key.clone()))?;
            if kf.ty.is_collection() {
                return Err(mismatch(id, "atomic key", kf.ty.to_string()));
            }
            check_aggs(id, t, Some(key), aggs)?;
            Ok(t.clone())
        }
        OpKind::LocalHistogram { bucket, buckets } => {
            if *buckets == 0 {
                return Err(Error::InvalidPlan(format!("node {id}: zero buckets")));
            }
            int_expr(id, bucket, ups[0])?;
            Ok(histogram_type())
        }
        OpKind::BuildProbe { attrs } => {
            let (l, r) = (ups[0], ups[1]);
            if attrs.is_empty() {
                return Err(Error::InvalidPlan(format!("node {id}: no join attributes")));
            }
            let mut fields = Vec::new();
            for a in attrs {
                let lf = l.field(a).ok_or_else(|| Error::UnknownField(a.clone()))?;
                let rf = r.field(a).ok_or_else(|| Error::UnknownField(a.clone()))?;
                if lf.ty.atom().is_none() || lf.ty != rf.ty {
                    return Err(mismatch(id, format!("{a}: {}", lf.ty), format!("{a}: {}", rf.ty)));
                }
                fields.push(lf.clone());
            }
            let rest = |t: &TupleType| {
                t.fields()
                    .iter()
                    .filter(|f| !attrs.contains(&f.name))
                    .cloned()
                    .collect::<Vec<_>>()
            };
            let lr = TupleType::new(rest(l))?;
            let rr = TupleType::new(rest(r))?;
            let both = concat_types(&lr, &rr)?;
            fields.extend(both.fields().iter().cloned());
            TupleType::new(fields)
        }
        OpKind::RowScan {} => {
            let t = ups[0];
            let mut colls = t.collection_fields();
            match (colls.next(), colls.next()) {
                (Some((_, f)), None) => Ok((**f.ty.element().unwrap()).clone()),
                _ => Err(Error::NotACollection(t.to_string())),
            }
        }
        OpKind::MaterializeRowVector { field } => TupleType::new(vec![Field::new(
            field.clone(),
            ItemType::row_vector(ups[0].clone()),
        )]),
        OpKind::LocalPartitioning {
            bucket,
            buckets,
            id_field,
            data_field,
        } => {
            if *buckets == 0 {
                return Err(Error::InvalidPlan(format!("node {id}: zero buckets")));
            }
            int_expr(id, bucket, ups[0])?;
            check_histogram(id, ups[1])?;
            partition_output(id, id_field, data_field, ups[0].clone())
        }
        OpKind::MpiHistogram { buckets } => {
            if *buckets == 0 {
                return Err(Error::InvalidPlan(format!("node {id}: zero buckets")));
            }
            check_histogram(id, ups[0])?;
            Ok(histogram_type())
        }
        OpKind::MpiExchange {
            bucket,
            buckets,
            encode,
            id_field,
            data_field,
        } => {
            if *buckets == 0 {
                return Err(Error::InvalidPlan(format!("node {id}: zero buckets")));
            }
            if !ups[0].is_flat() {
                return Err(mismatch(id, "flat tuple type", ups[0].to_string()));
            }
            int_expr(id, bucket, ups[0])?;
            check_histogram(id, ups[1])?;
            check_histogram(id, ups[2])?;
            let wire = match encode {
                Some(exprs) => map_type(id, exprs, ups[0], None)?,
                None => ups[0].clone(),
            };
            partition_output(id, id_field, data_field, wire)
        }
        OpKind::MpiBroadcast { encode } => {
            if !ups[0].is_flat() {
                return Err(mismatch(id, "flat tuple type", ups[0].to_string()));
            }
            check_histogram(id, ups[1])?;
            check_histogram(id, ups[2])?;
            let wire = match encode {
                Some(exprs) => map_type(id, exprs, ups[0], None)?,
                None => ups[0].clone(),
            };
            if !wire.is_flat() {
                return Err(mismatch(id, "flat tuple type", wire.to_string()));
            }
            Ok(wire)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{col, lit};
    use crate::plan::PlanBuilder;

    fn scan_plan() -> (PlanBuilder, NodeId) {
        let mut b = PlanBuilder::new();
        b.input("in", "⟨d:RowVector⟨k:Int64⟩⟩".parse().unwrap());
        let l = b.lookup("in");
        let s = b.scan(l);
        (b, s)
    }

    #[test]
    fn row_scan_unwraps_one_level() {
        let (b, s) = scan_plan();
        let types = validate(&b.finish(s)).unwrap();
        assert_eq!(types[1].ty, TupleType::ints(&["k"]));
    }

    #[test]
    fn build_probe_with_one_upstream() {
        let (mut b, s) = scan_plan();
        let bp = b.add(OpKind::BuildProbe { attrs: vec!["k".into()] }, &[s]);
        let err = validate(&b.finish(bp)).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { node, actual: 1, .. } if node == bp));
    }

    #[test]
    fn filter_over_foreign_field() {
        let (mut b, s) = scan_plan();
        let f = b.add(OpKind::Filter { predicate: col("z").eq(lit(1)) }, &[s]);
        assert!(matches!(validate(&b.finish(f)), Err(Error::TypeMismatch { node, .. }) if node == f));
        let (mut b, s) = scan_plan();
        let f = b.add(OpKind::Filter { predicate: col("k").add(lit(1)) }, &[s]);
        assert!(matches!(validate(&b.finish(f)), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn cycles_and_orphans() {
        let (mut b, s) = scan_plan();
        let m = b.add(OpKind::Zip {}, &[s]);
        let mut plan = b.finish(m);
        plan.nodes.get_mut(&s).unwrap().upstreams.push(m);
        assert!(matches!(validate(&plan), Err(Error::CycleDetected(_))));

        let (mut b, s) = scan_plan();
        b.lookup("in");
        assert!(matches!(validate(&b.finish(s)), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn build_probe_output_layout() {
        let mut b = PlanBuilder::new();
        b.input("l", "⟨d:RowVector⟨a:Int64,k:Int64⟩⟩".parse().unwrap());
        b.input("r", "⟨d:RowVector⟨k:Int64,b:Int64⟩⟩".parse().unwrap());
        let l = b.lookup("l");
        let l = b.scan(l);
        let r = b.lookup("r");
        let r = b.scan(r);
        let j = b.add(OpKind::BuildProbe { attrs: vec!["k".into()] }, &[l, r]);
        let types = infer_types(&b.finish(j)).unwrap();
        assert_eq!(*types[&j], TupleType::ints(&["k", "a", "b"]));
    }

    #[test]
    fn unbound_parameter() {
        let mut b = PlanBuilder::new();
        let l = b.lookup("missing");
        assert_eq!(
            validate(&b.finish(l)).unwrap_err(),
            Error::UnboundParameter("missing".into())
        );
    }
}
