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

//! Serializable scalar expressions. They are the function parameters of
//! `Map`, `Filter`, `LocalHistogram` and friends, so that whole plans can be
//! stored as JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{self, RadixSpec};
use crate::types::{AtomKind, ItemType, TupleType};
use crate::value::{Tuple, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    /// Field of the main input tuple.
    Field(String),
    /// Field of the parameter tuple (`ParametrizedMap` only).
    Param(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Mod(Box<Expr>, Box<Expr>),
    Shl(Box<Expr>, Box<Expr>),
    Shr(Box<Expr>, Box<Expr>),
    BitAnd(Box<Expr>, Box<Expr>),
    BitOr(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Ne(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    Le(Box<Expr>, Box<Expr>),
    Gt(Box<Expr>, Box<Expr>),
    Ge(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    RadixBucket {
        arg: Box<Expr>,
        radix: RadixSpec,
        pass: usize,
    },
    Compress {
        key: Box<Expr>,
        value: Box<Expr>,
        radix: RadixSpec,
    },
    PackedRemainder {
        packed: Box<Expr>,
        radix: RadixSpec,
    },
    PackedValue {
        packed: Box<Expr>,
        radix: RadixSpec,
    },
    /// Drops the pass-0 bits of a key, keeping `P - F` low bits.
    KeyRemainder {
        key: Box<Expr>,
        radix: RadixSpec,
    },
    RecoverKey {
        remainder: Box<Expr>,
        partition: Box<Expr>,
        radix: RadixSpec,
    },
}

pub fn col(name: &str) -> Expr {
    Expr::Field(name.to_string())
}

pub fn param(name: &str) -> Expr {
    Expr::Param(name.to_string())
}

pub fn lit(v: i64) -> Expr {
    Expr::Int(v)
}

macro_rules! binary_ctor {
    ($($fn:ident => $variant:ident),* $(,)?) => {
        #[allow(clippy::should_implement_trait)]
        impl Expr {
            $(pub fn $fn(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            })*
        }
    };
}

binary_ctor! {
    add => Add, sub => Sub, mul => Mul, div => Div, modulo => Mod,
    shl => Shl, shr => Shr, bit_and => BitAnd, bit_or => BitOr,
    eq => Eq, ne => Ne, lt => Lt, le => Le, gt => Gt, ge => Ge,
    and => And, or => Or,
}

impl Expr {
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    pub fn if_else(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::If(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    pub fn radix_bucket(self, radix: &RadixSpec, pass: usize) -> Expr {
        Expr::RadixBucket {
            arg: Box::new(self),
            radix: radix.clone(),
            pass,
        }
    }

    pub fn compress(key: Expr, value: Expr, radix: &RadixSpec) -> Expr {
        Expr::Compress {
            key: Box::new(key),
            value: Box::new(value),
            radix: radix.clone(),
        }
    }

    pub fn packed_remainder(self, radix: &RadixSpec) -> Expr {
        Expr::PackedRemainder {
            packed: Box::new(self),
            radix: radix.clone(),
        }
    }

    pub fn packed_value(self, radix: &RadixSpec) -> Expr {
        Expr::PackedValue {
            packed: Box::new(self),
            radix: radix.clone(),
        }
    }

    pub fn key_remainder(self, radix: &RadixSpec) -> Expr {
        Expr::KeyRemainder {
            key: Box::new(self),
            radix: radix.clone(),
        }
    }

    pub fn recover_key(remainder: Expr, partition: Expr, radix: &RadixSpec) -> Expr {
        Expr::RecoverKey {
            remainder: Box::new(remainder),
            partition: Box::new(partition),
            radix: radix.clone(),
        }
    }

    /// Infers the result type against the main (and optional parameter)
    /// input types. Errors are human-readable descriptions.
    pub fn infer(
        &self,
        input: &TupleType,
        param: Option<&TupleType>,
    ) -> std::result::Result<ItemType, String> {
        use Expr::*;
        let int = ItemType::int();
        let want = |e: &Expr, kind: AtomKind| -> std::result::Result<(), String> {
            match e.infer(input, param)? {
                ItemType::Atom(k) if k == kind => Ok(()),
                other => Err(format!("expected {} operand, got {other}", kind.name())),
            }
        };
        Ok(match self {
            Field(name) => input
                .field(name)
                .map(|f| f.ty.clone())
                .ok_or_else(|| format!("unknown field `{name}` in {input}"))?,
            Param(name) => param
                .and_then(|p| p.field(name))
                .map(|f| f.ty.clone())
                .ok_or_else(|| format!("unknown parameter field `{name}`"))?,
            Int(_) => int,
            Float(_) => ItemType::float(),
            Bool(_) => ItemType::bool(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                let ta = a.infer(input, param)?;
                let tb = b.infer(input, param)?;
                match (ta.atom(), tb.atom()) {
                    (Some(x), Some(y)) if x == y && x != AtomKind::Bool => ta,
                    _ => return Err(format!("arithmetic on {ta} and {tb}")),
                }
            }
            Mod(a, b) | Shl(a, b) | Shr(a, b) | BitAnd(a, b) | BitOr(a, b) => {
                want(a, AtomKind::Int64)?;
                want(b, AtomKind::Int64)?;
                int
            }
            Eq(a, b) | Ne(a, b) | Lt(a, b) | Le(a, b) | Gt(a, b) | Ge(a, b) => {
                let ta = a.infer(input, param)?;
                let tb = b.infer(input, param)?;
                if ta.atom().is_none() || ta != tb {
                    return Err(format!("comparison of {ta} and {tb}"));
                }
                ItemType::bool()
            }
            And(a, b) | Or(a, b) => {
                want(a, AtomKind::Bool)?;
                want(b, AtomKind::Bool)?;
                ItemType::bool()
            }
            Not(a) => {
                want(a, AtomKind::Bool)?;
                ItemType::bool()
            }
            If(c, t, e) => {
                want(c, AtomKind::Bool)?;
                let tt = t.infer(input, param)?;
                let te = e.infer(input, param)?;
                if tt != te {
                    return Err(format!("branches of {tt} and {te}"));
                }
                tt
            }
            RadixBucket { arg, radix, .. } | KeyRemainder { key: arg, radix } => {
                radix.validate().map_err(|e| e.to_string())?;
                want(arg, AtomKind::Int64)?;
                int
            }
            PackedRemainder { packed, radix } | PackedValue { packed, radix } => {
                radix.validate().map_err(|e| e.to_string())?;
                want(packed, AtomKind::Int64)?;
                int
            }
            Compress { key, value, radix } => {
                radix.validate().map_err(|e| e.to_string())?;
                if !radix.compression_legal() {
                    return Err(
                        Error::CompressionIllegal { p: radix.key_bits, f: radix.fanout_bits }.to_string()
                    );
                }
                want(key, AtomKind::Int64)?;
                want(value, AtomKind::Int64)?;
                int
            }
            RecoverKey {
                remainder,
                partition,
                radix,
            } => {
                radix.validate().map_err(|e| e.to_string())?;
                want(remainder, AtomKind::Int64)?;
                want(partition, AtomKind::Int64)?;
                int
            }
        })
    }

    /// Resolves field names to positions. Call after a successful `infer`.
    pub fn compile(&self, input: &TupleType, param: Option<&TupleType>) -> Result<CExpr> {
        use Expr::*;
        let c = |e: &Expr| e.compile(input, param).map(Box::new);
        let bin = |op: BinOp, a: &Expr, b: &Expr| -> Result<CExpr> { Ok(CExpr::Bin(op, c(a)?, c(b)?)) };
        Ok(match self {
            Field(name) => CExpr::Field(
                input
                    .index_of(name)
                    .ok_or_else(|| Error::UnknownField(name.clone()))?,
            ),
            Param(name) => CExpr::Param(
                param
                    .and_then(|p| p.index_of(name))
                    .ok_or_else(|| Error::UnknownField(name.clone()))?,
            ),
            Int(v) => CExpr::Const(Value::Int(*v)),
            Float(v) => CExpr::Const(Value::Float(*v)),
            Bool(v) => CExpr::Const(Value::Bool(*v)),
            Add(a, b) => bin(BinOp::Add, a, b)?,
            Sub(a, b) => bin(BinOp::Sub, a, b)?,
            Mul(a, b) => bin(BinOp::Mul, a, b)?,
            Div(a, b) => bin(BinOp::Div, a, b)?,
            Mod(a, b) => bin(BinOp::Mod, a, b)?,
            Shl(a, b) => bin(BinOp::Shl, a, b)?,
            Shr(a, b) => bin(BinOp::Shr, a, b)?,
            BitAnd(a, b) => bin(BinOp::BitAnd, a, b)?,
            BitOr(a, b) => bin(BinOp::BitOr, a, b)?,
            Eq(a, b) => bin(BinOp::Eq, a, b)?,
            Ne(a, b) => bin(BinOp::Ne, a, b)?,
            Lt(a, b) => bin(BinOp::Lt, a, b)?,
            Le(a, b) => bin(BinOp::Le, a, b)?,
            Gt(a, b) => bin(BinOp::Gt, a, b)?,
            Ge(a, b) => bin(BinOp::Ge, a, b)?,
            And(a, b) => CExpr::And(c(a)?, c(b)?),
            Or(a, b) => CExpr::Or(c(a)?, c(b)?),
            Not(a) => CExpr::Not(c(a)?),
            If(x, t, e) => CExpr::If(c(x)?, c(t)?, c(e)?),
            RadixBucket { arg, radix, pass } => CExpr::Radix(c(arg)?, radix.clone(), *pass),
            Compress { key, value, radix } => CExpr::Compress(c(key)?, c(value)?, radix.clone()),
            PackedRemainder { packed, radix } => CExpr::PackedRemainder(c(packed)?, radix.clone()),
            PackedValue { packed, radix } => CExpr::PackedValue(c(packed)?, radix.clone()),
            KeyRemainder { key, radix } => CExpr::KeyRemainder(c(key)?, radix.clone()),
            RecoverKey {
                remainder,
                partition,
                radix,
            } => CExpr::RecoverKey(c(remainder)?, c(partition)?, radix.clone()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Position-resolved expression ready for evaluation.
#[derive(Clone, Debug)]
pub enum CExpr {
    Field(usize),
    Param(usize),
    Const(Value),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
    Not(Box<CExpr>),
    If(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Radix(Box<CExpr>, RadixSpec, usize),
    Compress(Box<CExpr>, Box<CExpr>, RadixSpec),
    PackedRemainder(Box<CExpr>, RadixSpec),
    PackedValue(Box<CExpr>, RadixSpec),
    KeyRemainder(Box<CExpr>, RadixSpec),
    RecoverKey(Box<CExpr>, Box<CExpr>, RadixSpec),
}

fn eval_err(msg: impl Into<String>) -> Error {
    Error::Eval(msg.into())
}

fn shift_amount(v: i64) -> Result<u32> {
    if (0..64).contains(&v) {
        Ok(v as u32)
    } else {
        Err(eval_err(format!("shift by {v}")))
    }
}

impl CExpr {
    pub fn eval(&self, t: &Tuple, p: Option<&Tuple>) -> Result<Value> {
        Ok(match self {
            CExpr::Field(i) => t.get(*i).clone(),
            CExpr::Param(i) => p
                .ok_or_else(|| eval_err("parameter tuple missing"))?
                .get(*i)
                .clone(),
            CExpr::Const(v) => v.clone(),
            CExpr::Bin(op, a, b) => binary(*op, a.eval(t, p)?, b.eval(t, p)?)?,
            CExpr::And(a, b) => Value::Bool(a.eval_bool(t, p)? && b.eval_bool(t, p)?),
            CExpr::Or(a, b) => Value::Bool(a.eval_bool(t, p)? || b.eval_bool(t, p)?),
            CExpr::Not(a) => Value::Bool(!a.eval_bool(t, p)?),
            CExpr::If(c, x, y) => {
                if c.eval_bool(t, p)? {
                    x.eval(t, p)?
                } else {
                    y.eval(t, p)?
                }
            }
            CExpr::Radix(a, radix, pass) => {
                Value::Int(partition::radix_bucket(a.eval_int(t, p)?, radix, *pass)? as i64)
            }
            CExpr::Compress(k, v, radix) => {
                Value::Int(partition::compress(k.eval_int(t, p)?, v.eval_int(t, p)?, radix)? as i64)
            }
            CExpr::PackedRemainder(a, radix) => {
                Value::Int(partition::packed_remainder(a.eval_int(t, p)? as u64, radix) as i64)
            }
            CExpr::PackedValue(a, radix) => {
                Value::Int(partition::packed_value(a.eval_int(t, p)? as u64, radix))
            }
            CExpr::KeyRemainder(a, radix) => {
                let key = a.eval_int(t, p)?;
                radix.check_key(key)?;
                Value::Int(key & ((1i64 << radix.remainder_bits()) - 1))
            }
            CExpr::RecoverKey(r, pid, radix) => {
                let pid = pid.eval_int(t, p)?;
                if pid < 0 || pid >> radix.fanout_bits != 0 {
                    return Err(eval_err(format!("partition id {pid} outside 2^{}", radix.fanout_bits)));
                }
                Value::Int(partition::recover_key(r.eval_int(t, p)? as u64, pid as u64, radix))
            }
        })
    }

    pub fn eval_int(&self, t: &Tuple, p: Option<&Tuple>) -> Result<i64> {
        match self {
            CExpr::Field(i) => t
                .get(*i)
                .as_int()
                .ok_or_else(|| eval_err("expected integer field")),
            _ => self
                .eval(t, p)?
                .as_int()
                .ok_or_else(|| eval_err("expected integer")),
        }
    }

    pub fn eval_bool(&self, t: &Tuple, p: Option<&Tuple>) -> Result<bool> {
        self.eval(t, p)?
            .as_bool()
            .ok_or_else(|| eval_err("expected boolean"))
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value> {
    use BinOp::*;
    Ok(match (a, b) {
        (Value::Int(x), Value::Int(y)) => match op {
            Add => Value::Int(x.wrapping_add(y)),
            Sub => Value::Int(x.wrapping_sub(y)),
            Mul => Value::Int(x.wrapping_mul(y)),
            Div => Value::Int(x.checked_div(y).ok_or_else(|| eval_err("division by zero"))?),
            Mod => Value::Int(x.checked_rem(y).ok_or_else(|| eval_err("modulo by zero"))?),
            Shl => Value::Int(((x as u64) << shift_amount(y)?) as i64),
            Shr => Value::Int(((x as u64) >> shift_amount(y)?) as i64),
            BitAnd => Value::Int(x & y),
            BitOr => Value::Int(x | y),
            Eq => Value::Bool(x == y),
            Ne => Value::Bool(x != y),
            Lt => Value::Bool(x < y),
            Le => Value::Bool(x <= y),
            Gt => Value::Bool(x > y),
            Ge => Value::Bool(x >= y),
        },
        (Value::Float(x), Value::Float(y)) => match op {
            Add => Value::Float(x + y),
            Sub => Value::Float(x - y),
            Mul => Value::Float(x * y),
            Div => Value::Float(x / y),
            Eq => Value::Bool(x == y),
            Ne => Value::Bool(x != y),
            Lt => Value::Bool(x < y),
            Le => Value::Bool(x <= y),
            Gt => Value::Bool(x > y),
            Ge => Value::Bool(x >= y),
            _ => return Err(eval_err(format!("{op:?} on floats"))),
        },
        (Value::Bool(x), Value::Bool(y)) => match op {
            Eq => Value::Bool(x == y),
            Ne => Value::Bool(x != y),
            Lt => Value::Bool(!x & y),
            Le => Value::Bool(x <= y),
            Gt => Value::Bool(x & !y),
            Ge => Value::Bool(x >= y),
            _ => return Err(eval_err(format!("{op:?} on booleans"))),
        },
        (a, b) => return Err(eval_err(format!("{op:?} on {a} and {b}"))),
    })
}

/// An output field of a `Map`-like operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedExpr {
    pub name: String,
    pub expr: Expr,
}

impl NamedExpr {
    pub fn new(name: &str, expr: Expr) -> Self {
        NamedExpr {
            name: name.to_string(),
            expr,
        }
    }

    /// Pass-through of an input field under its own name.
    pub fn keep(name: &str) -> Self {
        NamedExpr::new(name, col(name))
    }
}
