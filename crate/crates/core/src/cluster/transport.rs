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

//! In-process one-sided transport. Ranks are threads; a put is a
//! bounds-checked copy into the owner's window segment and a fence is a
//! barrier.

use std::any::Any;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use super::Metrics;
use crate::error::{Error, Result};
use crate::exec::ExecOptions;

struct CollState {
    generation: u64,
    arrived: usize,
    tag: String,
    slots: Vec<Option<Box<dyn Any + Send>>>,
    result: Option<Arc<dyn Any + Send + Sync>>,
    failure: Option<Error>,
}

pub struct Transport {
    ranks: usize,
    strict: bool,
    timeout: Duration,
    metrics: Arc<Metrics>,
    state: Mutex<CollState>,
    cv: Condvar,
    poisoned: AtomicBool,
    next_window: AtomicU64,
}

impl Transport {
    pub fn new(ranks: usize, metrics: Arc<Metrics>, options: &ExecOptions) -> Self {
        assert!(ranks > 0);
        Transport {
            ranks,
            strict: options.strict_epochs,
            timeout: options.collective_timeout,
            metrics,
            state: Mutex::new(CollState {
                generation: 0,
                arrived: 0,
                tag: String::new(),
                slots: (0..ranks).map(|_| None).collect(),
                result: None,
                failure: None,
            }),
            cv: Condvar::new(),
            poisoned: AtomicBool::new(false),
            next_window: AtomicU64::new(0),
        }
    }

    pub fn ranks(&self) -> usize {
        self.ranks
    }

    pub fn metrics(&self) -> &Arc<Metrics> {
        &self.metrics
    }

    fn lock(&self) -> MutexGuard<'_, CollState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Wakes every blocked rank with `Aborted`. Called when a rank fails.
    pub fn poison(&self) {
        self.poisoned.store(true, Ordering::SeqCst);
        let _g = self.lock();
        self.cv.notify_all();
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned.load(Ordering::SeqCst)
    }

    /// Blocks until all ranks contributed to the collective named `tag`.
    /// The last rank to arrive runs `combine`; everyone gets its result.
    pub fn collective<T, U, F>(&self, rank: usize, tag: &str, value: T, combine: F) -> Result<Arc<U>>
    where
        T: Send + 'static,
        U: Send + Sync + 'static,
        F: FnOnce(Vec<T>) -> Result<U>,
    {
        let mut st = self.lock();
        if self.is_poisoned() {
            return Err(Error::Aborted);
        }
        if let Some(f) = &st.failure {
            return Err(f.clone());
        }
        if st.arrived == 0 {
            st.tag.clear();
            st.tag.push_str(tag);
        } else if st.tag != tag || st.slots[rank].is_some() {
            let e = Error::CollectiveMismatch(format!(
                "rank {rank} entered `{tag}` while `{}` is in progress",
                st.tag
            ));
            st.failure = Some(e.clone());
            self.cv.notify_all();
            return Err(e);
        }
        st.slots[rank] = Some(Box::new(value));
        st.arrived += 1;
        let gen = st.generation;
        if st.arrived == self.ranks {
            let mut vals = Vec::with_capacity(self.ranks);
            for s in st.slots.iter_mut() {
                match s.take().unwrap().downcast::<T>() {
                    Ok(v) => vals.push(*v),
                    Err(_) => {
                        let e = Error::CollectiveMismatch(format!("ranks passed different types to `{tag}`"));
                        st.failure = Some(e.clone());
                        self.cv.notify_all();
                        return Err(e);
                    }
                }
            }
            let res: Result<Arc<U>> = combine(vals).map(Arc::new);
            st.result = Some(Arc::new(res.clone()));
            st.arrived = 0;
            st.generation += 1;
            self.metrics.add_collective();
            self.cv.notify_all();
            return res;
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            if st.generation != gen {
                let r = st.result.clone().expect("completed collective has a result");
                return r
                    .downcast_ref::<Result<Arc<U>>>()
                    .expect("result type fixed by tag")
                    .clone();
            }
            if self.is_poisoned() {
                return Err(Error::Aborted);
            }
            if let Some(f) = &st.failure {
                return Err(f.clone());
            }
            let now = Instant::now();
            if now >= deadline {
                let e = Error::Deadlock(tag.to_string());
                st.failure = Some(e.clone());
                self.cv.notify_all();
                return Err(e);
            }
            st = self
                .cv
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    pub fn barrier(&self, rank: usize, tag: &str) -> Result<()> {
        self.collective(rank, tag, (), |_| Ok(())).map(|_| ())
    }

    pub fn all_gather<T: Send + Sync + 'static>(&self, rank: usize, tag: &str, value: T) -> Result<Arc<Vec<T>>> {
        self.collective(rank, tag, value, Ok)
    }

    /// Element-wise sum over ranks.
    pub fn allreduce_sum(&self, rank: usize, tag: &str, counts: Vec<u64>) -> Result<Arc<Vec<u64>>> {
        self.collective(rank, tag, counts, |all: Vec<Vec<u64>>| {
            let n = all[0].len();
            if let Some(bad) = all.iter().position(|v| v.len() != n) {
                return Err(Error::CollectiveMismatch(format!(
                    "rank {bad} reduced {} buckets, rank 0 reduced {n}",
                    all[bad].len()
                )));
            }
            Ok((0..n).map(|i| all.iter().map(|v| v[i]).sum()).collect())
        })
    }

    /// Collectively allocates one window segment per rank; `words` is this
    /// rank's segment size in 8-byte words.
    pub fn win_create(&self, rank: usize, words: usize) -> Result<Arc<Window>> {
        let id = self.collective(rank, "win_create", words, |sizes: Vec<usize>| {
            let mut segments = Vec::with_capacity(sizes.len());
            for s in &sizes {
                let mut v = Vec::new();
                v.try_reserve_exact(*s).map_err(|_| Error::AllocationFailure(*s))?;
                v.resize(*s, 0);
                segments.push(Mutex::new(v));
            }
            self.metrics.add_windows(sizes.len() as u64);
            Ok(Arc::new(Window {
                id: self.next_window.fetch_add(1, Ordering::Relaxed),
                regions: (0..sizes.len()).map(|_| Mutex::new(BTreeMap::new())).collect(),
                segments,
                epoch: AtomicU64::new(0),
                strict: self.strict,
                metrics: self.metrics.clone(),
            }))
        })?;
        Ok((*id).clone())
    }

    /// Completes all puts of the current epoch and opens the next one.
    pub fn fence(&self, rank: usize, win: &Window) -> Result<()> {
        self.collective(rank, &format!("fence:{}", win.id), (), |_| {
            win.epoch.fetch_add(1, Ordering::SeqCst);
            Ok(())
        })
        .map(|_| ())
    }
}

#[derive(Clone, Copy, Debug)]
struct Region {
    end: usize,
    sender: usize,
    epoch: u64,
}

/// One segment per rank. Remote ranks write with [`Window::put`]; the
/// owner reads its segment after the closing fence.
pub struct Window {
    id: u64,
    segments: Vec<Mutex<Vec<u64>>>,
    regions: Vec<Mutex<BTreeMap<usize, Region>>>,
    epoch: AtomicU64,
    strict: bool,
    metrics: Arc<Metrics>,
}

impl Window {
    pub fn epoch(&self) -> u64 {
        self.epoch.load(Ordering::SeqCst)
    }

    pub fn segment_len(&self, rank: usize) -> usize {
        self.segments[rank].lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    /// Copies `words` into `target`'s segment at word offset `offset`.
    pub fn put(&self, sender: usize, target: usize, offset: usize, words: &[u64], tuples: u64) -> Result<()> {
        let epoch = self.epoch();
        if self.strict && epoch == 0 {
            self.metrics.add_epoch_violation();
            return Err(Error::EpochViolation(format!(
                "rank {sender} put before the opening fence"
            )));
        }
        let mut seg = self.segments[target].lock().unwrap_or_else(|e| e.into_inner());
        let end = offset.checked_add(words.len()).filter(|e| *e <= seg.len());
        let Some(end) = end else {
            return Err(Error::WindowBounds(format!(
                "rank {sender} wrote [{offset}, +{}) into a {}-word segment on rank {target}",
                words.len(),
                seg.len()
            )));
        };
        if self.strict && !words.is_empty() {
            let mut regions = self.regions[target].lock().unwrap_or_else(|e| e.into_inner());
            let before = regions.range(..=offset).next_back().filter(|(_, r)| r.end > offset);
            let after = regions.range(offset..end).next();
            if let Some((start, r)) = before.or(after) {
                self.metrics.add_region_violation();
                return Err(Error::RegionOverlap(format!(
                    "rank {sender} [{offset}, {end}) overlaps rank {} [{start}, {}) on rank {target}",
                    r.sender, r.end
                )));
            }
            regions.insert(offset, Region { end, sender, epoch });
        }
        seg[offset..end].copy_from_slice(words);
        drop(seg);
        self.metrics.record_put(sender, words.len() as u64 * 8, tuples);
        Ok(())
    }

    fn check_readable(&self, rank: usize) -> Result<()> {
        if !self.strict {
            return Ok(());
        }
        let epoch = self.epoch();
        let regions = self.regions[rank].lock().unwrap_or_else(|e| e.into_inner());
        if let Some((start, r)) = regions.iter().find(|(_, r)| r.epoch >= epoch) {
            self.metrics.add_epoch_violation();
            return Err(Error::EpochViolation(format!(
                "rank {rank} read [{start}, {}) written by rank {} before the closing fence",
                r.end, r.sender
            )));
        }
        Ok(())
    }

    /// Copy of the owner's segment.
    pub fn read(&self, rank: usize) -> Result<Vec<u64>> {
        self.check_readable(rank)?;
        Ok(self.segments[rank].lock().unwrap_or_else(|e| e.into_inner()).clone())
    }

    /// Moves the owner's segment out, leaving it empty.
    pub fn take(&self, rank: usize) -> Result<Vec<u64>> {
        self.check_readable(rank)?;
        Ok(std::mem::take(
            &mut *self.segments[rank].lock().unwrap_or_else(|e| e.into_inner()),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    fn transport(r: usize, strict: bool) -> Arc<Transport> {
        let opts = ExecOptions {
            strict_epochs: strict,
            collective_timeout: Duration::from_millis(500),
            ..Default::default()
        };
        Arc::new(Transport::new(r, Arc::new(Metrics::default()), &opts))
    }

    fn on_ranks<T: Send>(t: &Arc<Transport>, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
        thread::scope(|s| {
            let hs: Vec<_> = (0..t.ranks()).map(|r| s.spawn({ let f = &f; move || f(r) })).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        })
    }

    #[test]
    fn allreduce_sums_elementwise() {
        let t = transport(2, false);
        let out = on_ranks(&t, |r| {
            let local = if r == 0 { vec![3, 1] } else { vec![2, 2] };
            t.allreduce_sum(r, "h", local).unwrap()
        });
        assert!(out.iter().all(|v| **v == vec![5, 3]));
        assert_eq!(t.metrics().snapshot().collective_calls, 1);
    }

    #[test]
    fn allreduce_rejects_different_lengths() {
        let t = transport(2, false);
        let out = on_ranks(&t, |r| t.allreduce_sum(r, "h", vec![0; r + 1]));
        assert!(out.iter().all(|r| matches!(r, Err(Error::CollectiveMismatch(_)))));
    }

    #[test]
    fn mismatched_collectives_are_reported() {
        let t = transport(2, false);
        let out = on_ranks(&t, |r| t.barrier(r, if r == 0 { "a" } else { "b" }));
        assert!(out.iter().any(|r| matches!(r, Err(Error::CollectiveMismatch(_)))));
    }

    #[test]
    fn missing_rank_times_out() {
        let t = transport(2, false);
        let out = on_ranks(&t, |r| if r == 0 { t.barrier(r, "x") } else { Ok(()) });
        assert!(matches!(out[0], Err(Error::Deadlock(_))));
    }

    #[test]
    fn put_fence_read() {
        let t = transport(2, true);
        let out = on_ranks(&t, |r| {
            let w = t.win_create(r, 4).unwrap();
            t.fence(r, &w).unwrap();
            w.put(r, 1 - r, 2 * r, &[r as u64 + 10, r as u64 + 20], 1).unwrap();
            t.fence(r, &w).unwrap();
            w.read(r).unwrap()
        });
        assert_eq!(out[0], vec![0, 0, 11, 21]);
        assert_eq!(out[1], vec![10, 20, 0, 0]);
        let m = t.metrics().snapshot();
        assert_eq!((m.bytes_put, m.tuples_put, m.windows_allocated), (32, 2, 2));
    }

    #[test]
    fn strict_mode_rejects_early_reads_and_overlaps() {
        let t = transport(1, true);
        let w = t.win_create(0, 4).unwrap();
        assert!(matches!(w.put(0, 0, 0, &[1], 1), Err(Error::EpochViolation(_))));
        t.fence(0, &w).unwrap();
        w.put(0, 0, 0, &[1, 2], 1).unwrap();
        assert!(matches!(w.read(0), Err(Error::EpochViolation(_))));
        assert!(matches!(w.put(0, 0, 1, &[3], 1), Err(Error::RegionOverlap(_))));
        assert!(matches!(w.put(0, 0, 3, &[3, 4], 1), Err(Error::WindowBounds(_))));
        t.fence(0, &w).unwrap();
        assert_eq!(w.read(0).unwrap(), vec![1, 2, 0, 0]);
        let m = t.metrics().snapshot();
        assert_eq!((m.region_violations, m.epoch_violations), (1, 2));
    }

    #[test]
    fn reads_see_exactly_the_fenced_epochs() {
        let t = transport(2, true);
        on_ranks(&t, |r| {
            let w = t.win_create(r, 4).unwrap();
            t.fence(r, &w).unwrap();
            if r == 1 {
                w.put(1, 0, 0, &[7], 1).unwrap();
            }
            t.fence(r, &w).unwrap();
            let first = if r == 0 { Some(w.read(0).unwrap()) } else { None };
            t.barrier(r, "after-read").unwrap();
            if r == 1 {
                w.put(1, 0, 1, &[8], 1).unwrap();
            }
            t.barrier(r, "after-put").unwrap();
            if r == 0 {
                assert_eq!(first.unwrap(), vec![7, 0, 0, 0]);
                assert!(matches!(w.read(0), Err(Error::EpochViolation(_))));
            }
            t.fence(r, &w).unwrap();
            if r == 0 {
                assert_eq!(w.read(0).unwrap(), vec![7, 8, 0, 0]);
            }
        });
    }

    #[test]
    fn poison_aborts_waiters() {
        let t = transport(2, false);
        let out = on_ranks(&t, |r| {
            if r == 1 {
                thread::sleep(Duration::from_millis(50));
                t.poison();
                Ok(())
            } else {
                t.barrier(0, "x")
            }
        });
        assert_eq!(out[0], Err(Error::Aborted));
    }
}
