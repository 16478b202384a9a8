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

//! Per-phase self-time accounting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::plan::Phase;

/// Seconds spent per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhaseTimes {
    pub local_histogram: f64,
    pub global_histogram: f64,
    pub network_partitioning: f64,
    pub local_partitioning: f64,
    pub build_probe: f64,
}

impl PhaseTimes {
    pub fn get(&self, p: Phase) -> f64 {
        match p {
            Phase::LocalHistogram => self.local_histogram,
            Phase::GlobalHistogram => self.global_histogram,
            Phase::NetworkPartitioning => self.network_partitioning,
            Phase::LocalPartitioning => self.local_partitioning,
            Phase::BuildProbe => self.build_probe,
        }
    }

    fn slot(&mut self, p: Phase) -> &mut f64 {
        match p {
            Phase::LocalHistogram => &mut self.local_histogram,
            Phase::GlobalHistogram => &mut self.global_histogram,
            Phase::NetworkPartitioning => &mut self.network_partitioning,
            Phase::LocalPartitioning => &mut self.local_partitioning,
            Phase::BuildProbe => &mut self.build_probe,
        }
    }

    pub fn add(&mut self, p: Phase, secs: f64) {
        *self.slot(p) += secs;
    }

    pub fn total(&self) -> f64 {
        Phase::ALL.iter().map(|p| self.get(*p)).sum()
    }

    /// Per-phase maximum over a set of ranks.
    pub fn max_over<'a>(ranks: impl IntoIterator<Item = &'a PhaseTimes>) -> PhaseTimes {
        let mut out = PhaseTimes::default();
        for r in ranks {
            for p in Phase::ALL {
                let s = out.slot(p);
                *s = s.max(r.get(p));
            }
        }
        out
    }
}

struct Frame {
    phase: Phase,
    start: Instant,
    nested: f64,
}

/// Stack of active tagged operators. Time inside a tagged operator is
/// charged to its phase minus time charged to tagged operators it calls.
#[derive(Default)]
pub struct PhaseClock {
    stack: Vec<Frame>,
    totals: PhaseTimes,
}

impl PhaseClock {
    pub fn enter(&mut self, phase: Phase) {
        self.stack.push(Frame {
            phase,
            start: Instant::now(),
            nested: 0.0,
        });
    }

    pub fn exit(&mut self) {
        let f = self.stack.pop().expect("balanced enter/exit");
        let elapsed = f.start.elapsed().as_secs_f64();
        self.totals.add(f.phase, (elapsed - f.nested).max(0.0));
        if let Some(parent) = self.stack.last_mut() {
            parent.nested += elapsed;
        }
    }

    /// Adds time measured elsewhere (e.g. on worker ranks) and removes it
    /// from the enclosing tagged operator, if any.
    pub fn absorb(&mut self, times: &PhaseTimes) {
        for p in Phase::ALL {
            self.totals.add(p, times.get(p));
        }
        if let Some(parent) = self.stack.last_mut() {
            parent.nested += times.total();
        }
    }

    pub fn totals(&self) -> PhaseTimes {
        self.totals
    }
}
