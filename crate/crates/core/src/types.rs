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

//! The recursive schema grammar: tuples hold items, items are atoms or
//! collections of tuples.
//!
//! Types print as `⟨name:Kind,…⟩`, collections as `RowVector⟨…⟩`. The parser
//! also accepts ASCII angle brackets.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Int64,
    Float64,
    Bool,
}

impl AtomKind {
    pub fn name(self) -> &'static str {
        match self {
            AtomKind::Int64 => "Int64",
            AtomKind::Float64 => "Float64",
            AtomKind::Bool => "Bool",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CollectionFormat {
    /// Dense, contiguous, row-major sequence of fixed-width tuples.
    RowVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ItemType {
    Atom(AtomKind),
    Collection {
        format: CollectionFormat,
        element: Arc<TupleType>,
    },
}

impl ItemType {
    pub fn int() -> Self {
        ItemType::Atom(AtomKind::Int64)
    }

    pub fn float() -> Self {
        ItemType::Atom(AtomKind::Float64)
    }

    pub fn bool() -> Self {
        ItemType::Atom(AtomKind::Bool)
    }

    pub fn row_vector(element: TupleType) -> Self {
        ItemType::Collection {
            format: CollectionFormat::RowVector,
            element: Arc::new(element),
        }
    }

    pub fn atom(&self) -> Option<AtomKind> {
        match self {
            ItemType::Atom(k) => Some(*k),
            ItemType::Collection { .. } => None,
        }
    }

    pub fn element(&self) -> Option<&Arc<TupleType>> {
        match self {
            ItemType::Atom(_) => None,
            ItemType::Collection { element, .. } => Some(element),
        }
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, ItemType::Collection { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: ItemType,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: ItemType) -> Self {
        Field {
            name: name.into(),
            ty,
        }
    }
}

/// An ordered list of uniquely named fields. Order fixes the physical row
/// layout; lookups are by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TupleType {
    fields: Vec<Field>,
}

impl TupleType {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::DuplicateField(f.name.clone()));
            }
        }
        Ok(TupleType { fields })
    }

    pub fn empty() -> Self {
        TupleType::default()
    }

    /// Shorthand for a tuple of Int64 fields.
    pub fn ints<S: AsRef<str>>(names: &[S]) -> Self {
        TupleType::new(
            names
                .iter()
                .map(|n| Field::new(n.as_ref(), ItemType::int()))
                .collect(),
        )
        .expect("distinct names")
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }

    /// True when every field is an atom.
    pub fn is_flat(&self) -> bool {
        self.fields.iter().all(|f| f.ty.atom().is_some())
    }

    pub fn collection_fields(&self) -> impl Iterator<Item = (usize, &Field)> {
        self.fields
            .iter()
            .enumerate()
            .filter(|(_, f)| f.ty.is_collection())
    }
}

pub fn check_field_disjoint(a: &TupleType, b: &TupleType) -> bool {
    a.names().all(|n| b.index_of(n).is_none())
}

pub fn concat_types(a: &TupleType, b: &TupleType) -> Result<TupleType> {
    if let Some(n) = a.names().find(|n| b.index_of(n).is_some()) {
        return Err(Error::FieldCollision(n.to_string()));
    }
    let mut fields = a.fields.clone();
    fields.extend(b.fields.iter().cloned());
    Ok(TupleType { fields })
}

pub fn project_type<S: AsRef<str>>(t: &TupleType, names: &[S]) -> Result<TupleType> {
    let fields = names
        .iter()
        .map(|n| {
            t.field(n.as_ref())
                .cloned()
                .ok_or_else(|| Error::UnknownField(n.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    TupleType::new(fields)
}

impl fmt::Display for ItemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ItemType::Atom(k) => f.write_str(k.name()),
            ItemType::Collection { format, element } => match format {
                CollectionFormat::RowVector => write!(f, "RowVector{element}"),
            },
        }
    }
}

impl fmt::Display for TupleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", field.name, field.ty)?;
        }
        f.write_str("⟩")
    }
}

struct TypeParser<'a> {
    input: &'a str,
    rest: &'a str,
}

impl<'a> TypeParser<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::TypeSyntax {
            input: self.input.to_string(),
            reason: format!("{} at offset {}", reason.into(), self.input.len() - self.rest.len()),
        })
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn eat(&mut self, options: &[&str]) -> bool {
        self.skip_ws();
        for o in options {
            if let Some(r) = self.rest.strip_prefix(o) {
                self.rest = r;
                return true;
            }
        }
        false
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let end = self
            .rest
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_'))
            .map(|(i, _)| i)
            .unwrap_or(self.rest.len());
        if end == 0 {
            return self.err("expected identifier");
        }
        let (id, r) = self.rest.split_at(end);
        self.rest = r;
        Ok(id)
    }

    fn tuple(&mut self) -> Result<TupleType> {
        if !self.eat(&["⟨", "<"]) {
            return self.err("expected `⟨`");
        }
        let mut fields = Vec::new();
        if !self.eat(&["⟩", ">"]) {
            loop {
                let name = self.ident()?;
                if !self.eat(&[":"]) {
                    return self.err("expected `:`");
                }
                let ty = self.item()?;
                fields.push(Field::new(name, ty));
                if self.eat(&[","]) {
                    continue;
                }
                if self.eat(&["⟩", ">"]) {
                    break;
                }
                return self.err("expected `,` or `⟩`");
            }
        }
        TupleType::new(fields)
    }

    fn item(&mut self) -> Result<ItemType> {
        let id = self.ident()?;
        match id {
            "Int64" => Ok(ItemType::int()),
            "Float64" => Ok(ItemType::float()),
            "Bool" => Ok(ItemType::bool()),
            "RowVector" => Ok(ItemType::row_vector(self.tuple()?)),
            other => self.err(format!("unknown item type `{other}`")),
        }
    }
}

impl FromStr for TupleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = TypeParser { input: s, rest: s };
        let t = p.tuple()?;
        p.skip_ws();
        if !p.rest.is_empty() {
            return p.err("trailing input");
        }
        Ok(t)
    }
}

impl Serialize for TupleType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TupleType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
