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

//! Concurrent execution of a nested plan, one rank per input tuple.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::thread;

use super::{ClusterCtx, Transport};
use crate::error::{Error, Result};
use crate::exec::{run_nested, BoxOp, CompiledPlan, ExecCtx, Operator, PhaseTimes};
use crate::value::Tuple;

/// Same contract as NestedMap, but all invocations run at once, each on
/// its own rank of a fresh cluster of R = number of input tuples.
pub struct ExecutorOp {
    up: BoxOp,
    plan: Arc<CompiledPlan>,
    ranks: Option<usize>,
    out: Option<std::vec::IntoIter<Tuple>>,
}

impl ExecutorOp {
    pub fn new(up: BoxOp, plan: Arc<CompiledPlan>, ranks: Option<usize>) -> Self {
        ExecutorOp {
            up,
            plan,
            ranks,
            out: None,
        }
    }

    fn run(&mut self, ctx: &mut ExecCtx) -> Result<Vec<Tuple>> {
        let mut inputs = Vec::new();
        while let Some(t) = self.up.next(ctx)? {
            inputs.push(t);
        }
        if let Some(r) = self.ranks {
            if r != inputs.len() {
                return Err(Error::InvalidPlan(format!(
                    "executor configured for {r} ranks received {} inputs",
                    inputs.len()
                )));
            }
        }
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let ranks = inputs.len();
        let transport = Arc::new(Transport::new(ranks, ctx.metrics.clone(), &ctx.options));
        let results: Vec<(Result<Tuple>, PhaseTimes)> = thread::scope(|s| {
            let handles: Vec<_> = inputs
                .into_iter()
                .enumerate()
                .map(|(rank, input)| {
                    let cluster = ClusterCtx {
                        rank,
                        transport: transport.clone(),
                    };
                    let options = ctx.options.clone();
                    let metrics = ctx.metrics.clone();
                    let plan = &self.plan;
                    let transport = &transport;
                    thread::Builder::new()
                        .name(format!("rank-{rank}"))
                        .spawn_scoped(s, move || {
                            let mut wctx = ExecCtx::worker(cluster, options, metrics);
                            let r = catch_unwind(AssertUnwindSafe(|| run_nested(plan, input, &mut wctx)));
                            let r = match r {
                                Ok(r) => r,
                                Err(payload) => {
                                    let msg = payload
                                        .downcast_ref::<&str>()
                                        .map(|s| s.to_string())
                                        .or_else(|| payload.downcast_ref::<String>().cloned())
                                        .unwrap_or_else(|| "panic".to_string());
                                    Err(Error::WorkerPanic { rank, message: msg })
                                }
                            };
                            if r.is_err() {
                                transport.poison();
                            }
                            (r, wctx.clock.totals())
                        })
                        .expect("spawn worker thread")
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker result"))
                .collect()
        });
        ctx.clock.absorb(&PhaseTimes::max_over(results.iter().map(|(_, t)| t)));

        // Report the rank that failed first rather than the ones it aborted.
        let failure = results
            .iter()
            .enumerate()
            .filter_map(|(rank, (r, _))| r.as_ref().err().map(|e| (rank, e)))
            .min_by_key(|(rank, e)| (matches!(e, Error::Aborted), *rank));
        if let Some((rank, e)) = failure {
            return Err(match e {
                Error::WorkerPanic { .. } => e.clone(),
                other => Error::WorkerPanic {
                    rank,
                    message: format!("{}: {other}", other.kind()),
                },
            });
        }
        Ok(results.into_iter().map(|(r, _)| r.unwrap()).collect())
    }
}

impl Operator for ExecutorOp {
    fn open(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.up.open(ctx)
    }
    fn next(&mut self, ctx: &mut ExecCtx) -> Result<Option<Tuple>> {
        if self.out.is_none() {
            self.out = Some(self.run(ctx)?.into_iter());
        }
        Ok(self.out.as_mut().unwrap().next())
    }
    fn close(&mut self, ctx: &mut ExecCtx) -> Result<()> {
        self.up.close(ctx)
    }
}
