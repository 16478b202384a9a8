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

//! Python bindings: workload generation, plan builders and runs.
//!
//! Builder specs are passed as dicts (or JSON strings) in the same shape the
//! `modularis build` command reads; metrics come back as plain dicts.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyString;

use modularis::builders::{
    build_group_by as core_group_by, build_join as core_join, build_join_sequence, build_query as core_query,
    localize, q12_spec, q14_spec, q19_spec, q4_spec, result_type,
};
use modularis::harness::bench::radix_for;
use modularis::harness::io::int_rows;
use modularis::harness::{
    generate, generate_groups, generate_tables, read_workload, run_plan, write_workload, Correspondence,
    RelationData, RunConfig, TableScale, WorkloadSpec,
};
use modularis::plan::cut_pipelines;

create_exception!(modularis, ModularisError, PyException, "Raised for any engine error; the message starts with the error kind.");

fn err(e: modularis::Error) -> PyErr {
    ModularisError::new_err(format!("{}: {e}", e.kind()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    ModularisError::new_err(format!("SpecInvalid: {e}"))
}

/// A dict or a JSON string, as JSON text.
fn spec_text(spec: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = spec.cast::<PyString>() {
        return Ok(s.to_string());
    }
    let json = spec.py().import("json")?;
    json.call_method1("dumps", (spec,))?.extract()
}

fn parse<T: serde::de::DeserializeOwned>(spec: &Bound<'_, PyAny>) -> PyResult<T> {
    serde_json::from_str(&spec_text(spec)?).map_err(json_err)
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A set of named flat relations.
#[pyclass(module = "modularis")]
pub struct Workload {
    relations: Vec<RelationData>,
    spec: Option<WorkloadSpec>,
}

#[pymethods]
impl Workload {
    /// Join inputs `r0, r1, ...` of `⟨key, r{i}_payload⟩`.
    #[staticmethod]
    #[pyo3(signature = (tuples, bits, correspondence = "one-to-one", relations = 2, seed = 1))]
    fn generate(tuples: usize, bits: u32, correspondence: &str, relations: usize, seed: u64) -> PyResult<Self> {
        let spec = WorkloadSpec {
            tuple_count: tuples,
            key_bits: bits,
            correspondence: correspondence.parse::<Correspondence>().map_err(err)?,
            seed,
            relation_count: relations,
        };
        Ok(Workload {
            relations: generate(&spec).map_err(err)?,
            spec: Some(spec),
        })
    }

    /// One relation `g` of `⟨key, val⟩` rows over `groups` distinct keys.
    #[staticmethod]
    #[pyo3(signature = (rows, groups, bits, value_bits = 20, seed = 1))]
    fn groups(rows: usize, groups: usize, bits: u32, value_bits: u32, seed: u64) -> PyResult<Self> {
        Ok(Workload {
            relations: vec![generate_groups(rows, groups, bits, value_bits, seed).map_err(err)?],
            spec: None,
        })
    }

    /// `orders`, `lineitem` and `part` for the query shapes.
    #[staticmethod]
    #[pyo3(signature = (orders = 1 << 17, parts = 1 << 16, seed = 1))]
    fn tables(orders: usize, parts: usize, seed: u64) -> PyResult<Self> {
        Ok(Workload {
            relations: generate_tables(TableScale { orders, parts }, seed).map_err(err)?,
            spec: None,
        })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        let (manifest, relations) = read_workload(&dir).map_err(err)?;
        Ok(Workload {
            relations,
            spec: manifest.spec,
        })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        write_workload(&dir, self.spec.as_ref(), &self.relations).map_err(err)?;
        Ok(())
    }

    fn names(&self) -> Vec<String> {
        self.relations.iter().map(|r| r.name().to_string()).collect()
    }

    fn fields(&self, name: &str) -> PyResult<Vec<String>> {
        Ok(self.relation(name)?.to_flat().fields)
    }

    fn rows(&self, name: &str) -> PyResult<Vec<Vec<i64>>> {
        Ok(self.relation(name)?.to_flat().rows)
    }

    fn __len__(&self) -> usize {
        self.relations.len()
    }

    fn __repr__(&self) -> String {
        let parts: Vec<String> = self.relations.iter().map(|r| format!("{}[{}]", r.name(), r.len())).collect();
        format!("Workload({})", parts.join(", "))
    }
}

impl Workload {
    fn relation(&self, name: &str) -> PyResult<&RelationData> {
        self.relations
            .iter()
            .find(|r| r.name() == name)
            .ok_or_else(|| ModularisError::new_err(format!("UnknownRelation: no relation `{name}`")))
    }
}

/// A validated query plan.
#[pyclass(module = "modularis")]
pub struct Plan {
    inner: modularis::Plan,
}

#[pymethods]
impl Plan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = modularis::Plan::from_json(text).map_err(err)?;
        modularis::plan::validate(&inner).map_err(err)?;
        Ok(Plan { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// The same plan with executors replaced by local nested maps.
    fn localize(&self) -> Self {
        Plan {
            inner: localize(&self.inner),
        }
    }

    /// Field names of the result rows.
    fn result_fields(&self) -> PyResult<Vec<String>> {
        let ty = result_type(&self.inner).map_err(err)?;
        Ok(ty.fields().iter().map(|f| f.name.to_string()).collect())
    }

    fn pipeline_count(&self) -> PyResult<usize> {
        Ok(cut_pipelines(&self.inner).map_err(err)?.pipelines.len())
    }

    fn __len__(&self) -> usize {
        self.inner.nodes.len()
    }

    fn __repr__(&self) -> String {
        format!("Plan({} nodes)", self.inner.nodes.len())
    }
}

fn plan(r: modularis::Result<modularis::Plan>) -> PyResult<Plan> {
    r.map(|inner| Plan { inner }).map_err(err)
}

#[pyfunction]
fn build_join(spec: &Bound<'_, PyAny>) -> PyResult<Plan> {
    plan(core_join(&parse(spec)?))
}

#[pyfunction]
fn build_sequence(spec: &Bound<'_, PyAny>) -> PyResult<Plan> {
    plan(build_join_sequence(&parse(spec)?))
}

#[pyfunction]
fn build_group_by(spec: &Bound<'_, PyAny>) -> PyResult<Plan> {
    plan(core_group_by(&parse(spec)?))
}

#[pyfunction]
fn build_query(spec: &Bound<'_, PyAny>) -> PyResult<Plan> {
    plan(core_query(&parse(spec)?))
}

/// One of the canned query shapes: `q4`, `q12`, `q14` or `q19`.
#[pyfunction]
#[pyo3(signature = (name, bits = 17))]
fn query(name: &str, bits: u32) -> PyResult<Plan> {
    let radix = radix_for(bits).map_err(err)?;
    let spec = match name {
        "q4" => q4_spec(radix),
        "q12" => q12_spec(radix),
        "q14" => q14_spec(radix),
        "q19" => q19_spec(radix),
        _ => return Err(ModularisError::new_err(format!("SpecInvalid: unknown query `{name}`"))),
    };
    plan(core_query(&spec))
}

/// The default two-pass radix layout for `bits`-bit keys, as a dict.
#[pyfunction]
fn radix<'py>(py: Python<'py>, bits: u32) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &radix_for(bits).map_err(err)?)
}

/// Runs `plan` over `workload` on `ranks` simulated ranks. Returns the
/// result rows and the metrics document.
#[pyfunction]
#[pyo3(signature = (plan, workload, ranks = 1, strict_epochs = false, put_batch = 2048, seed = 0))]
fn run<'py>(
    py: Python<'py>,
    plan: &Plan,
    workload: &Workload,
    ranks: usize,
    strict_epochs: bool,
    put_batch: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<i64>>, Bound<'py, PyAny>)> {
    let cfg = RunConfig {
        ranks,
        put_batch,
        strict_epochs,
        seed,
        ..RunConfig::default()
    };
    let (report, rows) = py
        .detach(|| run_plan(&plan.inner, &workload.relations, &cfg))
        .map_err(err)?;
    Ok((int_rows(&rows), to_py(py, &report)?))
}

#[pymodule]
#[pyo3(name = "modularis")]
fn modularis_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ModularisError", m.py().get_type::<ModularisError>())?;
    m.add_class::<Workload>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(build_join, m)?)?;
    m.add_function(wrap_pyfunction!(build_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(build_group_by, m)?)?;
    m.add_function(wrap_pyfunction!(build_query, m)?)?;
    m.add_function(wrap_pyfunction!(query, m)?)?;
    m.add_function(wrap_pyfunction!(radix, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
