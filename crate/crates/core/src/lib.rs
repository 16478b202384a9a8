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

//! A sub-operator query engine: plans are DAGs of small operators over
//! nested tuples, executed with pull-based iterators on a simulated
//! cluster with one-sided transport.

pub mod builders;
pub mod cluster;
pub mod error;
pub mod exec;
pub mod expr;
pub mod harness;
pub mod oracle;
pub mod partition;
pub mod plan;
pub mod types;
pub mod value;

pub use error::{Error, Result};
pub use plan::{NodeId, Plan, PlanBuilder};
pub use types::TupleType;
pub use value::{RowVector, Tuple, Value};
