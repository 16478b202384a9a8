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

//! Little-endian row files and the workload manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builders::Relation;
use crate::error::{Error, Result};
use crate::types::TupleType;
use crate::value::{Tuple, Value};

use super::workload::{RelationData, WorkloadSpec};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: TupleType,
    pub rows: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<WorkloadSpec>,
    pub relations: Vec<ManifestEntry>,
}

pub fn write_words(path: &Path, words: &[u64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for x in words {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_words(path: &Path) -> Result<Vec<u64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Writes every relation to `<dir>/<name>.bin` plus a manifest.
pub fn write_workload(dir: &Path, spec: Option<&WorkloadSpec>, relations: &[RelationData]) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for r in relations {
        let file = format!("{}.bin", r.name());
        write_words(&dir.join(&file), &r.words)?;
        entries.push(ManifestEntry {
            name: r.name().to_string(),
            ty: r.relation.ty.clone(),
            rows: r.len(),
            file,
        });
    }
    let manifest = Manifest {
        spec: spec.cloned(),
        relations: entries,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn read_workload(dir: &Path) -> Result<(Manifest, Vec<RelationData>)> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
    let mut out = Vec::new();
    for e in &manifest.relations {
        let words = read_words(&dir.join(&e.file))?;
        let r = RelationData::new(Relation::new(&e.name, e.ty.clone()), words)?;
        if r.len() != e.rows {
            return Err(Error::Io(format!(
                "{}: manifest lists {} rows, file holds {}",
                e.file,
                e.rows,
                r.len()
            )));
        }
        out.push(r);
    }
    Ok((manifest, out))
}

/// Raw words of flat tuples; Float64 keeps its bit pattern, Bool is 0/1.
pub fn tuple_words(rows: &[Tuple]) -> Result<Vec<u64>> {
    let mut words = Vec::new();
    for t in rows {
        for v in t.values() {
            words.push(
                v.atom_bits()
                    .ok_or_else(|| Error::NotACollection(format!("nested value in result row {t}")))?,
            );
        }
    }
    Ok(words)
}

/// Inverse of [`tuple_words`] for a flat type.
pub fn words_to_tuples(ty: &TupleType, words: &[u64]) -> Result<Vec<Tuple>> {
    let rv = crate::value::RowVector::from_words(ty.clone().into(), words.to_vec())?;
    Ok(rv.iter().collect())
}

/// Integer view of flat rows for comparison against the oracle.
pub fn int_rows(rows: &[Tuple]) -> Vec<Vec<i64>> {
    rows.iter()
        .map(|t| {
            t.values()
                .iter()
                .map(|v| match v {
                    Value::Int(x) => *x,
                    Value::Bool(b) => *b as i64,
                    Value::Float(f) => f.to_bits() as i64,
                    Value::Rows(r) => r.len() as i64,
                })
                .collect()
        })
        .collect()
}
