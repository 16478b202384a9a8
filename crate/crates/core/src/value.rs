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

//! Runtime values: tuples and the `RowVector` collection.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::types::{AtomKind, ItemType, TupleType};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Rows(Arc<RowVector>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_rows(&self) -> Option<&Arc<RowVector>> {
        match self {
            Value::Rows(r) => Some(r),
            _ => None,
        }
    }

    /// Raw 8-byte encoding of an atom.
    pub fn atom_bits(&self) -> Option<u64> {
        match self {
            Value::Int(v) => Some(*v as u64),
            Value::Float(f) => Some(f.to_bits()),
            Value::Bool(b) => Some(*b as u64),
            Value::Rows(_) => None,
        }
    }

    pub fn conforms(&self, ty: &ItemType) -> bool {
        match (self, ty) {
            (Value::Int(_), ItemType::Atom(AtomKind::Int64))
            | (Value::Float(_), ItemType::Atom(AtomKind::Float64))
            | (Value::Bool(_), ItemType::Atom(AtomKind::Bool)) => true,
            (Value::Rows(rv), ItemType::Collection { element, .. }) => {
                rv.element_type().as_ref() == element.as_ref()
            }
            _ => false,
        }
    }

    /// Total order used for canonicalising multisets.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Bool(_) => 0,
                Value::Int(_) => 1,
                Value::Float(_) => 2,
                Value::Rows(_) => 3,
            }
        }
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Rows(a), Value::Rows(b)) => {
                let mut ra: Vec<Tuple> = a.iter().collect();
                let mut rb: Vec<Tuple> = b.iter().collect();
                ra.sort_by(Tuple::total_cmp);
                rb.sort_by(Tuple::total_cmp);
                ra.iter()
                    .zip(&rb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or_else(|| ra.len().cmp(&rb.len()))
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Rows(rv) => {
                f.write_str("RV[")?;
                for (i, t) in rv.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Field values aligned with a `TupleType`; the type itself travels with the
/// plan, not with each tuple.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Tuple(SmallVec<[Value; 4]>);

impl Tuple {
    pub fn new(values: impl IntoIterator<Item = Value>) -> Self {
        Tuple(values.into_iter().collect())
    }

    pub fn ints(values: &[i64]) -> Self {
        Tuple(values.iter().map(|v| Value::Int(*v)).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &Value {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, v: Value) {
        self.0.push(v);
    }

    pub fn int(&self, i: usize) -> i64 {
        match &self.0[i] {
            Value::Int(v) => *v,
            other => panic!("field {i} is not an integer: {other:?}"),
        }
    }

    pub fn concat(&self, other: &Tuple) -> Tuple {
        let mut values = self.0.clone();
        values.extend(other.0.iter().cloned());
        Tuple(values)
    }

    pub fn project(&self, indices: &[usize]) -> Tuple {
        Tuple(indices.iter().map(|i| self.0[*i].clone()).collect())
    }

    pub fn conforms(&self, ty: &TupleType) -> bool {
        self.0.len() == ty.len()
            && self
                .0
                .iter()
                .zip(ty.fields())
                .all(|(v, f)| v.conforms(&f.ty))
    }

    pub fn total_cmp(&self, other: &Tuple) -> Ordering {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.0.len().cmp(&other.0.len()))
    }

    pub fn into_values(self) -> SmallVec<[Value; 4]> {
        self.0
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("⟩")
    }
}

impl FromIterator<Value> for Tuple {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        Tuple(iter.into_iter().collect())
    }
}

/// Sorts a tuple multiset into canonical order.
pub fn canonical(mut tuples: Vec<Tuple>) -> Vec<Tuple> {
    tuples.sort_by(Tuple::total_cmp);
    tuples
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Int,
    Float,
    Bool,
    Child,
}

fn slots_of(ty: &TupleType) -> Arc<[Slot]> {
    ty.fields()
        .iter()
        .map(|f| match f.ty {
            ItemType::Atom(AtomKind::Int64) => Slot::Int,
            ItemType::Atom(AtomKind::Float64) => Slot::Float,
            ItemType::Atom(AtomKind::Bool) => Slot::Bool,
            ItemType::Collection { .. } => Slot::Child,
        })
        .collect()
}

/// Contiguous row-major storage of fixed-width tuples. Every field takes one
/// 8-byte word; collection fields store an index into `children`.
///
/// Slicing shares the underlying storage.
#[derive(Clone)]
pub struct RowVector {
    element: Arc<TupleType>,
    slots: Arc<[Slot]>,
    words: Arc<Vec<u64>>,
    children: Arc<Vec<Arc<RowVector>>>,
    start: usize,
    len: usize,
}

impl RowVector {
    pub fn empty(element: Arc<TupleType>) -> Self {
        RowVectorBuilder::new(element).finish()
    }

    /// Wraps raw row words of a flat element type.
    pub fn from_words(element: Arc<TupleType>, words: Vec<u64>) -> Result<Self> {
        if !element.is_flat() {
            return Err(Error::NotACollection(format!(
                "raw rows require a flat element type, got {element}"
            )));
        }
        let width = element.len();
        if width == 0 || !words.len().is_multiple_of(width) {
            return Err(Error::InvalidPlan(format!(
                "{} words do not form rows of width {width}",
                words.len()
            )));
        }
        let len = words.len() / width;
        Ok(RowVector {
            slots: slots_of(&element),
            element,
            words: Arc::new(words),
            children: Arc::new(Vec::new()),
            start: 0,
            len,
        })
    }

    pub fn from_tuples<'a>(
        element: Arc<TupleType>,
        tuples: impl IntoIterator<Item = &'a Tuple>,
    ) -> Result<Self> {
        let mut b = RowVectorBuilder::new(element);
        for t in tuples {
            b.push(t)?;
        }
        Ok(b.finish())
    }

    pub fn element_type(&self) -> &Arc<TupleType> {
        &self.element
    }

    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Raw words of row `i`.
    pub fn row_words(&self, i: usize) -> &[u64] {
        let w = self.width();
        let at = (self.start + i) * w;
        &self.words[at..at + w]
    }

    /// Raw words of all rows in this view.
    pub fn words(&self) -> &[u64] {
        let w = self.width();
        &self.words[self.start * w..(self.start + self.len) * w]
    }

    pub fn get(&self, i: usize) -> Tuple {
        assert!(i < self.len, "row {i} out of bounds ({})", self.len);
        let row = self.row_words(i);
        row.iter()
            .zip(self.slots.iter())
            .map(|(w, s)| match s {
                Slot::Int => Value::Int(*w as i64),
                Slot::Float => Value::Float(f64::from_bits(*w)),
                Slot::Bool => Value::Bool(*w != 0),
                Slot::Child => Value::Rows(self.children[*w as usize].clone()),
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Tuple> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn slice(&self, start: usize, len: usize) -> RowVector {
        assert!(start + len <= self.len, "slice out of bounds");
        RowVector {
            start: self.start + start,
            len,
            ..self.clone()
        }
    }
}

impl PartialEq for RowVector {
    fn eq(&self, other: &Self) -> bool {
        self.element == other.element
            && self.len == other.len
            && self.iter().zip(other.iter()).all(|(a, b)| a == b)
    }
}

impl fmt::Debug for RowVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RowVector{}", self.element)?;
        f.debug_list().entries(self.iter()).finish()
    }
}

pub struct RowVectorBuilder {
    element: Arc<TupleType>,
    slots: Arc<[Slot]>,
    words: Vec<u64>,
    children: Vec<Arc<RowVector>>,
    len: usize,
}

impl RowVectorBuilder {
    pub fn new(element: Arc<TupleType>) -> Self {
        RowVectorBuilder {
            slots: slots_of(&element),
            element,
            words: Vec::new(),
            children: Vec::new(),
            len: 0,
        }
    }

    pub fn with_capacity(element: Arc<TupleType>, rows: usize) -> Result<Self> {
        let mut b = RowVectorBuilder::new(element);
        let words = rows.saturating_mul(b.slots.len());
        b.words
            .try_reserve_exact(words)
            .map_err(|_| Error::AllocationFailure(rows))?;
        Ok(b)
    }

    pub fn push(&mut self, t: &Tuple) -> Result<()> {
        if t.len() != self.slots.len() {
            return Err(Error::TypeMismatch {
                node: 0,
                expected: self.element.to_string(),
                actual: t.to_string(),
            });
        }
        for (v, s) in t.values().iter().zip(self.slots.iter()) {
            let w = match (v, s) {
                (Value::Int(x), Slot::Int) => *x as u64,
                (Value::Float(x), Slot::Float) => x.to_bits(),
                (Value::Bool(x), Slot::Bool) => *x as u64,
                (Value::Rows(rv), Slot::Child) => {
                    self.children.push(rv.clone());
                    (self.children.len() - 1) as u64
                }
                _ => {
                    return Err(Error::TypeMismatch {
                        node: 0,
                        expected: self.element.to_string(),
                        actual: t.to_string(),
                    })
                }
            };
            self.words.push(w);
        }
        self.len += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn finish(self) -> RowVector {
        RowVector {
            element: self.element,
            slots: self.slots,
            words: Arc::new(self.words),
            children: Arc::new(self.children),
            start: 0,
            len: self.len,
        }
    }
}
