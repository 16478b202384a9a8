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

//! Local (non-network) operators.

use std::collections::HashMap;
use std::sync::Arc;

use super::{BoxOp, CompiledPlan, ExecCtx, Operator, ProbeLayout};
use crate::error::{Error, Result};
use crate::expr::CExpr;
use crate::partition::{Histogram, Partitioner};
use crate::plan::{AggFn, NodeId, Phase};
use crate::types::TupleType;
use crate::value::{RowVector, RowVectorBuilder, Tuple, Value};

/// Drains an upstream into a vector. Stops at the first End.
pub(crate) fn pull_all(up: &mut dyn Operator, ctx: &mut ExecCtx) -> Result<Vec<Tuple>> {
    let mut v = Vec::new();
    while let Some(t) = up.next(ctx)? {
        v.push(t);
    }
    Ok(v)
}

/// Reads a histogram upstream: exactly `n` tuples with bucket ids 0..n.
pub(crate) fn read_histogram(up: &mut dyn Operator, n: usize, ctx: &mut ExecCtx) -> Result<Histogram> {
    let rows = pull_all(up, ctx)?;
    if rows.len() != n {
        return Err(Error::HistogramMismatch(format!(
            "histogram upstream returned {} tuples, expected {n}",
            rows.len()
        )));
    }
    let mut counts = Vec::with_capacity(n);
    for (i, t) in rows.iter().enumerate() {
        let (b, c) = (t.int(0), t.int(1));
        if b != i as i64 || c < 0 {
            return Err(Error::HistogramMismatch(format!("entry {i} is ({b}, {c})")));
        }
        counts.push(c as u64);
    }
    Ok(Histogram::from_counts(counts))
}

pub(crate) fn histogram_tuples(h: &Histogram) -> Vec<Tuple> {
    h.counts()
        .iter()
        .enumerate()
        .map(|(b, c)| Tuple::ints(&[b as i64, *c as i64]))
        .collect()
}

pub(crate) fn eval_all(exprs: &[CExpr], t: &Tuple, p: Option<&Tuple>) -> Result<Tuple> {
    exprs.iter().map(|e| e.eval(t, p)).collect()
}

pub(crate) fn check_bucket(b: i64, n: usize) -> Result<usize> {
    match usize::try_from(b) {
        Ok(x) if x < n => Ok(x),
        _ => Err(Error::BucketOutOfRange { bucket: b, buckets: n }),
    }
}

/// Yields a pre-computed sequence.
pub(crate) struct VecSource {
    rows: std::vec::IntoIter<Tuple>,
}

impl VecSource {
    pub(crate) fn new(rows: Vec<Tuple>) -> Self {
        VecSource { rows: rows.into_iter() }
    }
}

pub struct ParameterLookupOp {
    value: Option<Tuple>,
}

impl ParameterLookupOp {
    pub fn new(value: Tuple) -> Self {
        ParameterLookupOp { value: Some(value) }
    }
}

impl Operator for ParameterLookupOp {
    fn open(&mut self, _: &mut ExecCtx) -> Result<()> {
        Ok(())
    }
    fn next(&mut self, _: &mut ExecCtx) -> Result<Option<Tuple>> {
        Ok(self.value.take())
    }
    fn close(&mut self, _: &mut ExecCtx) -> Result<()> {
        Ok(())
    }
}

/// Reads the stored result of a multi-consumer node.
pub struct MaterializedScan {
    rows: Arc<Vec<Tuple>>,
    pos: usize,
}

impl MaterializedScan {
    pub fn new(rows: Arc<Vec<Tuple>>) -> Self {
        MaterializedScan { rows, pos: 0 }
    }
}

impl Operator for MaterializedScan {
    fn open(&mut self, _: &mut ExecCtx) -> Result<()> {
        Ok(())
    }
    fn next(&mut self, _: &mut ExecCtx) -> Result<Option<Tuple>> {
        let t = self.rows.get(self.pos).cloned();
        self.pos += t.is_some() as usize;
        Ok(t)
    }
    fn close(&mut self, _: &mut ExecCtx) -> Result<()> {
        Ok(())
    }
}

/// Runs the nested plan once per upstream tuple.
pub struct NestedMapOp {
    up: BoxOp,
    plan: Arc<CompiledPlan>,
    done: bool,
}

impl NestedMapOp {
    pub fn new(up: BoxOp, plan: Arc<CompiledPlan>) -> Self {
        NestedMapOp { up, plan, done: false }
    }
}

pub(crate) fn run_nested(plan: &CompiledPlan, t: Tuple, ctx: &mut ExecCtx) -> Result<Tuple> {
    let mut b = super::Bindings::new();
    b.insert(plan.binding_name().to_string(), t);
    let mut out = plan.run(&b, ctx)?;
    if out.len() != 1 {
        return Err(Error::InnerCardinality(out.len()));
    }
    Ok(out.pop().unwrap())
}

impl Operator for NestedMapOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.up.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        match self.up.next(ctx)? {
            Some(t) => run_nested(&self.plan, t, ctx).map(Some),
            None => {
                self.done = true;
                Ok(None)
            }
        }
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.up.close(ctx)
    }
}

/// Shared skeleton for operators with one upstream that map tuples
/// one-to-at-most-one.
macro_rules! unary_open_close {
    () => {
        fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
            self.up.open(ctx)
        }
        fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
            self.up.close(ctx)
        }
    };
}

pub struct MapOp {
    up: BoxOp,
    exprs: Arc<[CExpr]>,
    done: bool,
}

impl MapOp {
    pub fn new(up: BoxOp, exprs: Arc<[CExpr]>) -> Self {
        MapOp { up, exprs, done: false }
    }
}

impl Operator for MapOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        match self.up.next(ctx)? {
            Some(t) => eval_all(&self.exprs, &t, None).map(Some),
            None => {
                self.done = true;
                Ok(None)
            }
        }
    }
}

pub struct ParametrizedMapOp {
    param_up: BoxOp,
    up: BoxOp,
    exprs: Arc<[CExpr]>,
    param: Option<Tuple>,
    done: bool,
}

impl ParametrizedMapOp {
    pub fn new(param_up: BoxOp, up: BoxOp, exprs: Arc<[CExpr]>) -> Self {
        ParametrizedMapOp {
            param_up,
            up,
            exprs,
            param: None,
            done: false,
        }
    }
}

impl Operator for ParametrizedMapOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.param_up.open(ctx)?;
        self.up.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        if self.param.is_none() {
            let mut ps = pull_all(self.param_up.as_mut(), ctx)?;
            if ps.len() != 1 {
                return Err(Error::ParamCardinality(ps.len()));
            }
            self.param = ps.pop();
        }
        match self.up.next(ctx)? {
            Some(t) => eval_all(&self.exprs, &t, self.param.as_ref()).map(Some),
            None => {
                self.done = true;
                Ok(None)
            }
        }
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.param_up.close(ctx)?;
        self.up.close(ctx)
    }
}

pub struct ProjectionOp {
    up: BoxOp,
    idx: Arc<[usize]>,
    done: bool,
}

impl ProjectionOp {
    pub fn new(up: BoxOp, idx: Arc<[usize]>) -> Self {
        ProjectionOp { up, idx, done: false }
    }
}

impl Operator for ProjectionOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        match self.up.next(ctx)? {
            Some(t) => Ok(Some(t.project(&self.idx))),
            None => {
                self.done = true;
                Ok(None)
            }
        }
    }
}

pub struct FilterOp {
    up: BoxOp,
    pred: Arc<CExpr>,
    done: bool,
}

impl FilterOp {
    pub fn new(up: BoxOp, pred: Arc<CExpr>) -> Self {
        FilterOp { up, pred, done: false }
    }
}

impl Operator for FilterOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        while !self.done {
            match self.up.next(ctx)? {
                Some(t) => {
                    if self.pred.eval_bool(&t, None)? {
                        return Ok(Some(t));
                    }
                }
                None => self.done = true,
            }
        }
        Ok(None)
    }
}

/// Left-major product; the right upstream is buffered on first use.
pub struct CartesianProductOp {
    left: BoxOp,
    right: BoxOp,
    buffered: Option<Vec<Tuple>>,
    current: Option<Tuple>,
    pos: usize,
    done: bool,
}

impl CartesianProductOp {
    pub fn new(left: BoxOp, right: BoxOp) -> Self {
        CartesianProductOp {
            left,
            right,
            buffered: None,
            current: None,
            pos: 0,
            done: false,
        }
    }
}

impl Operator for CartesianProductOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.left.open(ctx)?;
        self.right.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.buffered.is_none() {
            self.buffered = Some(pull_all(self.right.as_mut(), ctx)?);
        }
        let right = self.buffered.as_ref().unwrap();
        loop {
            if self.done {
                return Ok(None);
            }
            if let Some(l) = &self.current {
                if let Some(r) = right.get(self.pos) {
                    self.pos += 1;
                    return Ok(Some(l.concat(r)));
                }
            }
            match self.left.next(ctx)? {
                Some(l) => {
                    self.current = Some(l);
                    self.pos = 0;
                }
                None => {
                    self.done = true;
                    self.current = None;
                }
            }
        }
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.left.close(ctx)?;
        self.right.close(ctx)
    }
}

pub struct ZipOp {
    ups: Vec<BoxOp>,
    done: bool,
}

impl ZipOp {
    pub fn new(ups: Vec<BoxOp>) -> Self {
        ZipOp { ups, done: false }
    }
}

impl Operator for ZipOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.ups.iter_mut().try_for_each(|u| u.open(ctx))
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        let mut parts = Vec::with_capacity(self.ups.len());
        for u in &mut self.ups {
            parts.push(u.next(ctx)?);
        }
        let ended = parts.iter().filter(|p| p.is_none()).count();
        if ended == parts.len() {
            self.done = true;
            return Ok(None);
        }
        if ended > 0 {
            self.done = true;
            return Err(Error::LengthMismatch);
        }
        let mut it = parts.into_iter().flatten();
        let mut out = it.next().unwrap();
        for p in it {
            out = out.concat(&p);
        }
        Ok(Some(out))
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.ups.iter_mut().try_for_each(|u| u.close(ctx))
    }
}

pub(crate) fn combine(f: AggFn, a: &Value, b: &Value) -> Value {
    match (f, a, b) {
        (AggFn::Sum, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_add(*y)),
        (AggFn::Sum, Value::Float(x), Value::Float(y)) => Value::Float(x + y),
        (AggFn::Min, _, _) => {
            if b.total_cmp(a).is_lt() {
                b.clone()
            } else {
                a.clone()
            }
        }
        (AggFn::Max, _, _) => {
            if b.total_cmp(a).is_gt() {
                b.clone()
            } else {
                a.clone()
            }
        }
        _ => a.clone(),
    }
}

fn fold_into(acc: &mut Tuple, t: &Tuple, aggs: &[Option<AggFn>]) {
    let vals: Tuple = acc
        .values()
        .iter()
        .zip(t.values())
        .zip(aggs)
        .map(|((a, b), f)| match f {
            Some(f) => combine(*f, a, b),
            None => a.clone(),
        })
        .collect();
    *acc = vals;
}

/// Folds all input into one tuple; empty input yields nothing.
pub struct ReduceOp {
    up: BoxOp,
    aggs: Arc<[Option<AggFn>]>,
    done: bool,
}

impl ReduceOp {
    pub fn new(up: BoxOp, aggs: Arc<[AggFn]>) -> Self {
        ReduceOp {
            up,
            aggs: aggs.iter().map(|a| Some(*a)).collect::<Vec<_>>().into(),
            done: false,
        }
    }
}

impl Operator for ReduceOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        self.done = true;
        let mut acc: Option<Tuple> = None;
        while let Some(t) = self.up.next(ctx)? {
            match &mut acc {
                None => acc = Some(t),
                Some(a) => fold_into(a, &t, &self.aggs),
            }
        }
        Ok(acc)
    }
}

/// Groups by an atomic key field. Output follows first occurrence order.
pub struct ReduceByKeyOp {
    up: BoxOp,
    key: usize,
    aggs: Arc<[Option<AggFn>]>,
    out: Option<std::vec::IntoIter<Tuple>>,
}

impl ReduceByKeyOp {
    pub fn new(up: BoxOp, key: usize, aggs: Arc<[Option<AggFn>]>) -> Self {
        ReduceByKeyOp { up, key, aggs, out: None }
    }
}

impl Operator for ReduceByKeyOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            let mut index: HashMap<u64, usize> = HashMap::new();
            let mut groups: Vec<Tuple> = Vec::new();
            while let Some(t) = self.up.next(ctx)? {
                let k = t.get(self.key).atom_bits().expect("atomic key");
                match index.get(&k) {
                    Some(&g) => fold_into(&mut groups[g], &t, &self.aggs),
                    None => {
                        index.insert(k, groups.len());
                        groups.push(t);
                    }
                }
            }
            self.out = Some(groups.into_iter());
        }
        Ok(self.out.as_mut().unwrap().next())
    }
}

pub struct LocalHistogramOp {
    up: BoxOp,
    bucket: Arc<CExpr>,
    buckets: usize,
    out: Option<VecSource>,
}

impl LocalHistogramOp {
    pub fn new(up: BoxOp, bucket: Arc<CExpr>, buckets: usize) -> Self {
        LocalHistogramOp {
            up,
            bucket,
            buckets,
            out: None,
        }
    }
}

impl Operator for LocalHistogramOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            let mut h = Histogram::zeros(self.buckets);
            while let Some(t) = self.up.next(ctx)? {
                h.add(self.bucket.eval_int(&t, None)?)?;
            }
            self.out = Some(VecSource::new(histogram_tuples(&h)));
        }
        Ok(self.out.as_mut().unwrap().rows.next())
    }
}

const HASH_MUL: u64 = 0x9E37_79B9_7F4A_7C15;

fn key_hash(t: &Tuple, keys: &[usize]) -> u64 {
    let mut h = 0u64;
    for &k in keys {
        h = (h ^ t.get(k).atom_bits().expect("atomic key")).wrapping_mul(HASH_MUL);
        h = h.rotate_left(29);
    }
    h.wrapping_mul(HASH_MUL)
}

fn keys_equal(l: &Tuple, lk: &[usize], r: &Tuple, rk: &[usize]) -> bool {
    lk.iter().zip(rk).all(|(a, b)| l.get(*a).atom_bits() == r.get(*b).atom_bits())
}

const NIL: u32 = u32::MAX;

/// Chained hash table over the left upstream, probed by the right.
pub struct BuildProbeOp {
    left: BoxOp,
    right: BoxOp,
    layout: Arc<ProbeLayout>,
    built: Vec<Tuple>,
    heads: Vec<u32>,
    chain: Vec<u32>,
    shift: u32,
    probe: Option<Tuple>,
    cursor: u32,
    ready: bool,
    done: bool,
}

impl BuildProbeOp {
    pub fn new(left: BoxOp, right: BoxOp, layout: Arc<ProbeLayout>) -> Self {
        BuildProbeOp {
            left,
            right,
            layout,
            built: Vec::new(),
            heads: Vec::new(),
            chain: Vec::new(),
            shift: 63,
            probe: None,
            cursor: NIL,
            ready: false,
            done: false,
        }
    }

    fn slot(&self, h: u64) -> usize {
        (h >> self.shift) as usize
    }

    fn build(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.built = pull_all(self.left.as_mut(), ctx)?;
        let n = self.built.len();
        if n >= NIL as usize {
            return Err(Error::AllocationFailure(n));
        }
        let bits = (n.max(1) * 2).next_power_of_two().trailing_zeros().max(1);
        self.shift = 64 - bits;
        self.heads = vec![NIL; 1 << bits];
        self.chain = vec![NIL; n];
        // Inserting back to front leaves every chain in insertion order.
        for i in (0..n).rev() {
            let s = self.slot(key_hash(&self.built[i], &self.layout.left_keys));
            self.chain[i] = self.heads[s];
            self.heads[s] = i as u32;
        }
        Ok(())
    }
}

impl Operator for BuildProbeOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.left.open(ctx)?;
        self.right.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if !self.ready {
            self.build(ctx)?;
            self.ready = true;
        }
        let lay = self.layout.clone();
        loop {
            if self.done {
                return Ok(None);
            }
            if let Some(r) = &self.probe {
                while self.cursor != NIL {
                    let i = self.cursor as usize;
                    self.cursor = self.chain[i];
                    let l = &self.built[i];
                    if keys_equal(l, &lay.left_keys, r, &lay.right_keys) {
                        let vals = lay
                            .left_keys
                            .iter()
                            .chain(&lay.left_rest)
                            .map(|k| l.get(*k).clone())
                            .chain(lay.right_rest.iter().map(|k| r.get(*k).clone()));
                        return Ok(Some(vals.collect()));
                    }
                }
            }
            match self.right.next(ctx)? {
                Some(r) => {
                    let h = key_hash(&r, &lay.right_keys);
                    self.cursor = self.heads[self.slot(h)];
                    self.probe = Some(r);
                }
                None => {
                    self.done = true;
                    self.probe = None;
                }
            }
        }
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.built = Vec::new();
        self.left.close(ctx)?;
        self.right.close(ctx)
    }
}

/// Unnests the single collection field of each upstream tuple.
pub struct RowScanOp {
    up: BoxOp,
    field: usize,
    current: Option<Arc<RowVector>>,
    pos: usize,
    done: bool,
}

impl RowScanOp {
    pub fn new(up: BoxOp, field: usize) -> Self {
        RowScanOp {
            up,
            field,
            current: None,
            pos: 0,
            done: false,
        }
    }
}

impl Operator for RowScanOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        loop {
            if let Some(rv) = &self.current {
                if self.pos < rv.len() {
                    self.pos += 1;
                    return Ok(Some(rv.get(self.pos - 1)));
                }
                self.current = None;
            }
            if self.done {
                return Ok(None);
            }
            match self.up.next(ctx)? {
                Some(t) => match t.get(self.field) {
                    Value::Rows(rv) => {
                        self.current = Some(rv.clone());
                        self.pos = 0;
                    }
                    other => return Err(Error::NotACollection(other.to_string())),
                },
                None => self.done = true,
            }
        }
    }
}

pub struct MaterializeOp {
    up: BoxOp,
    element: Arc<TupleType>,
    done: bool,
}

impl MaterializeOp {
    pub fn new(up: BoxOp, element: Arc<TupleType>) -> Self {
        MaterializeOp { up, element, done: false }
    }
}

impl Operator for MaterializeOp {
    unary_open_close!();
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.done {
            return Ok(None);
        }
        self.done = true;
        let mut b = RowVectorBuilder::new(self.element.clone());
        while let Some(t) = self.up.next(ctx)? {
            b.push(&t)?;
        }
        Ok(Some(Tuple::new([Value::Rows(Arc::new(b.finish()))])))
    }
}

pub(crate) fn block_tuple(pid: i64, rv: RowVector) -> Tuple {
    Tuple::new([Value::Int(pid), Value::Rows(Arc::new(rv))])
}

/// Splits the data upstream into one block per bucket, laid out from the
/// histogram upstream's counts.
pub struct LocalPartitioningOp {
    data: BoxOp,
    hist: BoxOp,
    bucket: Arc<CExpr>,
    buckets: usize,
    element: Arc<TupleType>,
    out: Option<VecSource>,
}

impl LocalPartitioningOp {
    pub fn new(data: BoxOp, hist: BoxOp, bucket: Arc<CExpr>, buckets: usize, element: Arc<TupleType>) -> Self {
        LocalPartitioningOp {
            data,
            hist,
            bucket,
            buckets,
            element,
            out: None,
        }
    }
}

impl Operator for LocalPartitioningOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.data.open(ctx)?;
        self.hist.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            let h = read_histogram(self.hist.as_mut(), self.buckets, ctx)?;
            let mut p = Partitioner::new(self.element.clone(), &h)?;
            while let Some(t) = self.data.next(ctx)? {
                let b = self.bucket.eval_int(&t, None)?;
                p.push(b, &t)?;
            }
            let blocks = p.finish()?;
            self.out = Some(VecSource::new(
                blocks
                    .into_iter()
                    .map(|b| block_tuple(b.partition_id, b.data))
                    .collect(),
            ));
        }
        Ok(self.out.as_mut().unwrap().rows.next())
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.data.close(ctx)?;
        self.hist.close(ctx)
    }
}

/// Charges time spent in the wrapped operator to a phase.
pub struct Timed {
    inner: BoxOp,
    phase: Phase,
}

impl Timed {
    pub fn new(inner: BoxOp, phase: Phase) -> Self {
        Timed { inner, phase }
    }
}

impl Operator for Timed {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        ctx.clock.enter(self.phase);
        let r = self.inner.open(ctx);
        ctx.clock.exit();
        r
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        ctx.clock.enter(self.phase);
        let r = self.inner.next(ctx);
        ctx.clock.exit();
        r
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        ctx.clock.enter(self.phase);
        let r = self.inner.close(ctx);
        ctx.clock.exit();
        r
    }
}

/// Rejects calls that break the iterator protocol: next before open, or
/// next after End was already returned.
pub struct LawGuard {
    inner: BoxOp,
    node: NodeId,
    opened: bool,
    ended: bool,
}

impl LawGuard {
    pub fn new(inner: BoxOp, node: NodeId) -> Self {
        LawGuard {
            inner,
            node,
            opened: false,
            ended: false,
        }
    }
}

impl Operator for LawGuard {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.opened = true;
        self.inner.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if !self.opened || self.ended {
            return Err(Error::InvalidPlan(format!(
                "iterator protocol violated at node {}: next() {}",
                self.node,
                if self.opened { "after End" } else { "before open" }
            )));
        }
        let r = self.inner.next(ctx)?;
        self.ended = r.is_none();
        Ok(r)
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.inner.close(ctx)
    }
}
