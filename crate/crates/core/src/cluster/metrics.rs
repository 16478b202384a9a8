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

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Communication counters shared by every rank of a run.
#[derive(Default, Debug)]
pub struct Metrics {
    bytes_put: Mutex<Vec<u64>>,
    tuples_put: AtomicU64,
    windows_allocated: AtomicU64,
    relations_shuffled: AtomicU64,
    collective_calls: AtomicU64,
    region_violations: AtomicU64,
    epoch_violations: AtomicU64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransportMetrics {
    pub bytes_put: u64,
    pub bytes_put_per_rank: Vec<u64>,
    pub tuples_put: u64,
    pub windows_allocated: u64,
    pub relations_shuffled: u64,
    pub collective_calls: u64,
    pub region_violations: u64,
    pub epoch_violations: u64,
}

impl Metrics {
    pub fn record_put(&self, sender: usize, bytes: u64, tuples: u64) {
        let mut b = self.bytes_put.lock().unwrap_or_else(|e| e.into_inner());
        if b.len() <= sender {
            b.resize(sender + 1, 0);
        }
        b[sender] += bytes;
        self.tuples_put.fetch_add(tuples, Ordering::Relaxed);
    }

    pub fn add_windows(&self, n: u64) {
        self.windows_allocated.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_relation_shuffled(&self) {
        self.relations_shuffled.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_collective(&self) {
        self.collective_calls.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_region_violation(&self) {
        self.region_violations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_epoch_violation(&self) {
        self.epoch_violations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> TransportMetrics {
        let per_rank = self.bytes_put.lock().unwrap_or_else(|e| e.into_inner()).clone();
        TransportMetrics {
            bytes_put: per_rank.iter().sum(),
            bytes_put_per_rank: per_rank,
            tuples_put: self.tuples_put.load(Ordering::Relaxed),
            windows_allocated: self.windows_allocated.load(Ordering::Relaxed),
            relations_shuffled: self.relations_shuffled.load(Ordering::Relaxed),
            collective_calls: self.collective_calls.load(Ordering::Relaxed),
            region_violations: self.region_violations.load(Ordering::Relaxed),
            epoch_violations: self.epoch_violations.load(Ordering::Relaxed),
        }
    }
}
