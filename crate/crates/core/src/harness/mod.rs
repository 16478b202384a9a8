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

//! Workload generation, binary I/O and the benchmark driver.

pub mod bench;
pub mod io;
pub mod run;
pub mod tables;
pub mod workload;

pub use bench::{run_suite, write_csv, BenchOptions, BenchRow, Suite};
pub use io::{read_workload, write_workload, Manifest};
pub use run::{bind_workers, flatten_result, run_plan, RunConfig, RunReport};
pub use tables::{generate_tables, TableScale};
pub use workload::{generate, generate_groups, Correspondence, RelationData, WorkloadSpec};
