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

//! Network operators.

use std::sync::Arc;

use super::owner;
use crate::error::{Error, Result};
use crate::exec::{BoxOp, ExecCtx, Operator};
use crate::exec::{check_bucket, eval_all, histogram_tuples, read_histogram, block_tuple};
use crate::expr::CExpr;
use crate::partition::Histogram;
use crate::types::TupleType;
use crate::value::{RowVector, Tuple};

fn rows_from_words(wire: &Arc<TupleType>, words: Vec<u64>, rows: usize) -> Result<RowVector> {
    if wire.is_empty() {
        RowVector::from_tuples(wire.clone(), &vec![Tuple::default(); rows])
    } else {
        RowVector::from_words(wire.clone(), words)
    }
}

fn push_words(buf: &mut Vec<u64>, t: &Tuple) {
    buf.extend(t.values().iter().map(|v| v.atom_bits().expect("flat wire tuple")));
}

/// Sums local histograms over all ranks.
pub struct MpiHistogramOp {
    up: BoxOp,
    buckets: usize,
    out: Option<std::vec::IntoIter<Tuple>>,
}

impl MpiHistogramOp {
    pub fn new(up: BoxOp, buckets: usize) -> Self {
        MpiHistogramOp { up, buckets, out: None }
    }
}

impl Operator for MpiHistogramOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.up.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            let local = read_histogram(self.up.as_mut(), self.buckets, ctx)?;
            let c = &ctx.cluster;
            let global = c
                .transport
                .allreduce_sum(c.rank, "histogram", local.counts().to_vec())?;
            self.out = Some(histogram_tuples(&Histogram::from_counts((*global).clone())).into_iter());
        }
        Ok(self.out.as_mut().unwrap().next())
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.up.close(ctx)
    }
}

/// Local histogram of every rank, indexed by rank.
type RankCounts = Vec<Vec<u64>>;

/// Reads both histogram upstreams and checks that the local histograms
/// of all ranks add up to the global one. Returns every rank's local
/// histogram and the global one.
fn gather_histograms(
    local: &mut dyn Operator,
    global: &mut dyn Operator,
    n: usize,
    tag: &str,
    ctx: &mut ExecCtx,
) -> Result<(Arc<RankCounts>, Vec<u64>)> {
    let l = read_histogram(local, n, ctx)?;
    let g = read_histogram(global, n, ctx)?;
    let c = &ctx.cluster;
    let all = c.transport.all_gather(c.rank, tag, l.counts().to_vec())?;
    for p in 0..n {
        let sum: u64 = all.iter().map(|h| h[p]).sum();
        if sum != g.counts()[p] {
            return Err(Error::HistogramMismatch(format!(
                "bucket {p}: local histograms sum to {sum}, global says {}",
                g.counts()[p]
            )));
        }
    }
    Ok((all, g.counts().to_vec()))
}

/// Per-destination put buffer of up to `batch` rows.
struct Outbox {
    target: usize,
    offset: usize,
    buf: Vec<u64>,
    rows: usize,
}

impl Outbox {
    fn flush(&mut self, win: &super::Window, sender: usize, width: usize) -> Result<()> {
        if self.rows == 0 {
            return Ok(());
        }
        win.put(sender, self.target, self.offset * width, &self.buf, self.rows as u64)?;
        self.offset += self.rows;
        self.rows = 0;
        self.buf.clear();
        Ok(())
    }
}

/// Hash-partitions the data upstream across ranks. Partition `p` goes to
/// rank `p mod R`; each rank yields its partitions in ascending order.
pub struct MpiExchangeOp {
    data: BoxOp,
    local: BoxOp,
    global: BoxOp,
    bucket: Arc<CExpr>,
    buckets: usize,
    encode: Option<Arc<[CExpr]>>,
    wire: Arc<TupleType>,
    out: Option<std::vec::IntoIter<Tuple>>,
}

impl MpiExchangeOp {
    pub fn new(
        data: BoxOp,
        local: BoxOp,
        global: BoxOp,
        bucket: Arc<CExpr>,
        buckets: usize,
        encode: Option<Arc<[CExpr]>>,
        wire: Arc<TupleType>,
    ) -> Self {
        MpiExchangeOp {
            data,
            local,
            global,
            bucket,
            buckets,
            encode,
            wire,
            out: None,
        }
    }

    fn exchange(&mut self, ctx: &mut ExecCtx) -> Result<Vec<Tuple>> {
        let n = self.buckets;
        let (rank, ranks) = (ctx.cluster.rank, ctx.cluster.ranks());
        let transport = ctx.cluster.transport.clone();
        if rank == 0 {
            ctx.metrics.add_relation_shuffled();
        }
        let (locals, global) = gather_histograms(self.local.as_mut(), self.global.as_mut(), n, "exchange:histograms", ctx)?;
        let mine = &locals[rank];

        // Owned partitions are laid out back to back in ascending id order;
        // inside a partition, senders follow rank order.
        let mut fill = vec![0usize; ranks];
        let mut base = vec![0usize; n];
        for p in 0..n {
            let o = owner(p, ranks);
            base[p] = fill[o];
            fill[o] += global[p] as usize;
        }
        let width = self.wire.len();
        let batch = ctx.options.put_batch.max(1);
        let mut outboxes: Vec<Outbox> = (0..n)
            .map(|p| Outbox {
                target: owner(p, ranks),
                offset: base[p] + locals[..rank].iter().map(|h| h[p] as usize).sum::<usize>(),
                buf: Vec::new(),
                rows: 0,
            })
            .collect();
        let win = transport.win_create(rank, fill[rank] * width)?;
        transport.fence(rank, &win)?;

        let mut sent = vec![0u64; n];
        while let Some(t) = self.data.next(ctx)? {
            let p = check_bucket(self.bucket.eval_int(&t, None)?, n)?;
            sent[p] += 1;
            if sent[p] > mine[p] {
                return Err(Error::HistogramMismatch(format!(
                    "bucket {p} has more than the {} tuples announced",
                    mine[p]
                )));
            }
            let ob = &mut outboxes[p];
            if ob.buf.capacity() == 0 {
                ob.buf.reserve_exact(batch.min(mine[p] as usize) * width);
            }
            match &self.encode {
                Some(e) => push_words(&mut ob.buf, &eval_all(e, &t, None)?),
                None => push_words(&mut ob.buf, &t),
            }
            ob.rows += 1;
            if ob.rows == batch {
                ob.flush(&win, rank, width)?;
            }
        }
        if let Some(p) = (0..n).find(|p| sent[*p] != mine[*p]) {
            return Err(Error::HistogramMismatch(format!(
                "bucket {p} produced {} tuples, histogram announced {}",
                sent[p], mine[p]
            )));
        }
        for ob in &mut outboxes {
            ob.flush(&win, rank, width)?;
        }
        drop(outboxes);
        transport.fence(rank, &win)?;

        let words = win.take(rank)?;
        let all = rows_from_words(&self.wire, words, fill[rank])?;
        Ok((0..n)
            .filter(|p| owner(*p, ranks) == rank)
            .map(|p| block_tuple(p as i64, all.slice(base[p], global[p] as usize)))
            .collect())
    }
}

impl Operator for MpiExchangeOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.data.open(ctx)?;
        self.local.open(ctx)?;
        self.global.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            self.out = Some(self.exchange(ctx)?.into_iter());
        }
        Ok(self.out.as_mut().unwrap().next())
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.data.close(ctx)?;
        self.local.close(ctx)?;
        self.global.close(ctx)
    }
}

/// Replicates the data upstream of every rank to all ranks.
pub struct MpiBroadcastOp {
    data: BoxOp,
    local: BoxOp,
    global: BoxOp,
    encode: Option<Arc<[CExpr]>>,
    wire: Arc<TupleType>,
    out: Option<std::vec::IntoIter<Tuple>>,
}

impl MpiBroadcastOp {
    pub fn new(data: BoxOp, local: BoxOp, global: BoxOp, encode: Option<Arc<[CExpr]>>, wire: Arc<TupleType>) -> Self {
        MpiBroadcastOp {
            data,
            local,
            global,
            encode,
            wire,
            out: None,
        }
    }

    fn broadcast(&mut self, ctx: &mut ExecCtx) -> Result<Vec<Tuple>> {
        let (rank, ranks) = (ctx.cluster.rank, ctx.cluster.ranks());
        let transport = ctx.cluster.transport.clone();
        if rank == 0 {
            ctx.metrics.add_relation_shuffled();
        }
        let (locals, global) = gather_histograms(self.local.as_mut(), self.global.as_mut(), 1, "broadcast:histograms", ctx)?;
        let total = global[0] as usize;
        let width = self.wire.len();
        let batch = ctx.options.put_batch.max(1);
        let start: usize = locals[..rank].iter().map(|h| h[0] as usize).sum();
        let mut outboxes: Vec<Outbox> = (0..ranks)
            .map(|target| Outbox {
                target,
                offset: start,
                buf: Vec::new(),
                rows: 0,
            })
            .collect();
        let win = transport.win_create(rank, total * width)?;
        transport.fence(rank, &win)?;
        let mut sent = 0u64;
        let mut row = Vec::with_capacity(width);
        while let Some(t) = self.data.next(ctx)? {
            sent += 1;
            if sent > locals[rank][0] {
                return Err(Error::HistogramMismatch(format!(
                    "more than the {} tuples announced",
                    locals[rank][0]
                )));
            }
            row.clear();
            match &self.encode {
                Some(e) => push_words(&mut row, &eval_all(e, &t, None)?),
                None => push_words(&mut row, &t),
            }
            for ob in &mut outboxes {
                ob.buf.extend_from_slice(&row);
                ob.rows += 1;
                if ob.rows == batch {
                    ob.flush(&win, rank, width)?;
                }
            }
        }
        if sent != locals[rank][0] {
            return Err(Error::HistogramMismatch(format!(
                "produced {sent} tuples, histogram announced {}",
                locals[rank][0]
            )));
        }
        for ob in &mut outboxes {
            ob.flush(&win, rank, width)?;
        }
        transport.fence(rank, &win)?;
        let all = rows_from_words(&self.wire, win.take(rank)?, total)?;
        Ok(all.iter().collect())
    }
}

impl Operator for MpiBroadcastOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.data.open(ctx)?;
        self.local.open(ctx)?;
        self.global.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            self.out = Some(self.broadcast(ctx)?.into_iter());
        }
        Ok(self.out.as_mut().unwrap().next())
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.data.close(ctx)?;
        self.local.close(ctx)?;
        self.global.close(ctx)
    }
}
