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

use thiserror::Error;

use crate::plan::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // type system
    #[error("field `{0}` occurs in both tuple types")]
    FieldCollision(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("duplicate field `{0}` in tuple type")]
    DuplicateField(String),
    #[error("cannot parse type `{input}`: {reason}")]
    TypeSyntax { input: String, reason: String },

    // plan validation
    #[error("plan contains a cycle through node {0}")]
    CycleDetected(NodeId),
    #[error("node {node} ({kind}) expects {expected} upstream(s), got {actual}")]
    ArityMismatch {
        node: NodeId,
        kind: &'static str,
        expected: String,
        actual: usize,
    },
    #[error("type mismatch at node {node}: expected {expected}, got {actual}")]
    TypeMismatch {
        node: NodeId,
        expected: String,
        actual: String,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    // operators
    #[error("parameter `{0}` is not bound in this scope")]
    UnboundParameter(String),
    #[error("nested plan produced {0} tuples, expected exactly one")]
    InnerCardinality(usize),
    #[error("parameter upstream produced {0} tuples, expected exactly one")]
    ParamCardinality(usize),
    #[error("zip upstreams returned different numbers of tuples")]
    LengthMismatch,
    #[error("bucket {bucket} outside [0, {buckets})")]
    BucketOutOfRange { bucket: i64, buckets: usize },
    #[error("upstream tuple does not hold exactly one collection: {0}")]
    NotACollection(String),
    #[error("allocation of {0} rows failed")]
    AllocationFailure(usize),
    #[error("expression evaluation failed: {0}")]
    Eval(String),

    // partitioning
    #[error("key {key} outside the dense domain [0, 2^{bits})")]
    KeyOutOfDomain { key: i64, bits: u32 },
    #[error("value {value} does not fit in {bits} bits")]
    ValueOutOfDomain { value: i64, bits: u32 },
    #[error("compression needs 2*P - F <= 64 (P={p}, F={f})")]
    CompressionIllegal { p: u32, f: u32 },
    #[error("invalid radix spec: {0}")]
    InvalidRadix(String),
    #[error("histogram does not match data: {0}")]
    HistogramMismatch(String),

    // cluster
    #[error("worker on rank {rank} failed: {message}")]
    WorkerPanic { rank: usize, message: String },
    #[error("collective `{0}` timed out waiting for all ranks")]
    Deadlock(String),
    #[error("ranks entered mismatched collectives: {0}")]
    CollectiveMismatch(String),
    #[error("epoch violation: {0}")]
    EpochViolation(String),
    #[error("overlapping window regions: {0}")]
    RegionOverlap(String),
    #[error("put outside window bounds: {0}")]
    WindowBounds(String),
    #[error("execution aborted because another rank failed")]
    Aborted,

    // builders
    #[error("invalid builder spec: {0}")]
    SpecInvalid(String),
    #[error("optimized join sequences require every join on `{0}`")]
    SharedAttrViolation(String),

    // harness
    #[error("io: {0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// Stable identifier used in structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FieldCollision(_) => "FieldCollision",
            Error::UnknownField(_) => "UnknownField",
            Error::DuplicateField(_) => "DuplicateField",
            Error::TypeSyntax { .. } => "TypeSyntax",
            Error::CycleDetected(_) => "CycleDetected",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::TypeMismatch { .. } => "TypeMismatch",
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::UnboundParameter(_) => "UnboundParameter",
            Error::InnerCardinality(_) => "InnerCardinality",
            Error::ParamCardinality(_) => "ParamCardinality",
            Error::LengthMismatch => "LengthMismatch",
            Error::BucketOutOfRange { .. } => "BucketOutOfRange",
            Error::NotACollection(_) => "NotACollection",
            Error::AllocationFailure(_) => "AllocationFailure",
            Error::Eval(_) => "Eval",
            Error::KeyOutOfDomain { .. } => "KeyOutOfDomain",
            Error::ValueOutOfDomain { .. } => "ValueOutOfDomain",
            Error::CompressionIllegal { .. } => "CompressionIllegal",
            Error::InvalidRadix(_) => "InvalidRadix",
            Error::HistogramMismatch(_) => "HistogramMismatch",
            Error::WorkerPanic { .. } => "WorkerPanic",
            Error::Deadlock(_) => "Deadlock",
            Error::CollectiveMismatch(_) => "CollectiveMismatch",
            Error::EpochViolation(_) => "EpochViolation",
            Error::RegionOverlap(_) => "RegionOverlap",
            Error::WindowBounds(_) => "WindowBounds",
            Error::Aborted => "Aborted",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::SharedAttrViolation(_) => "SharedAttrViolation",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// True for errors detected before any data is touched.
    pub fn is_plan_error(&self) -> bool {
        matches!(
            self,
            Error::FieldCollision(_)
                | Error::UnknownField(_)
                | Error::DuplicateField(_)
                | Error::TypeSyntax { .. }
                | Error::CycleDetected(_)
                | Error::ArityMismatch { .. }
                | Error::TypeMismatch { .. }
                | Error::InvalidPlan(_)
                | Error::Json(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
