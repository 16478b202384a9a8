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

//! Simulated multi-rank cluster: one-sided transport, collectives and the
//! network operators.

mod executor;
mod metrics;
mod ops;
mod transport;

use std::sync::Arc;

use crate::exec::ExecOptions;

pub use executor::ExecutorOp;
pub use metrics::{Metrics, TransportMetrics};
pub use ops::{MpiBroadcastOp, MpiExchangeOp, MpiHistogramOp};
pub use transport::{Transport, Window};

/// A worker's view of the cluster.
#[derive(Clone)]
pub struct ClusterCtx {
    pub rank: usize,
    pub transport: Arc<Transport>,
}

impl ClusterCtx {
    /// A degenerate single-rank cluster.
    pub fn local(metrics: Arc<Metrics>, options: &ExecOptions) -> Self {
        ClusterCtx {
            rank: 0,
            transport: Arc::new(Transport::new(1, metrics, options)),
        }
    }

    pub fn ranks(&self) -> usize {
        self.transport.ranks()
    }
}

/// Rank owning partition `p`.
pub fn owner(p: usize, ranks: usize) -> usize {
    p % ranks
}
