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

//! Filter-join-aggregate queries over two tables.

use serde::{Deserialize, Serialize};

use super::{
    check_names, check_two_passes, driver_plan, finish_rank_plan, join_stage, rank_sources, spec_err, Aggregation,
    Reduction, Relation, Side,
};
use crate::error::Result;
use crate::expr::{col, lit, Expr, NamedExpr};
use crate::partition::RadixSpec;
use crate::plan::{infer_types, Agg, OpKind, Plan};
use crate::types::TupleType;

/// One table of a query: optional filter, join column and the columns kept
/// for later stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableScan {
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<Expr>,
    pub key: String,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    /// Build side.
    pub left: TableScan,
    pub right: TableScan,
    pub radix: RadixSpec,
    #[serde(default)]
    pub post: Aggregation,
    #[serde(default = "super::default_true")]
    pub distributed: bool,
}

impl QuerySpec {
    pub fn relations(&self) -> [Relation; 2] {
        [self.left.relation.clone(), self.right.relation.clone()]
    }
}

/// Join key field in query results.
pub const QUERY_KEY: &str = "key";

pub fn build_query(spec: &QuerySpec) -> Result<Plan> {
    check_two_passes(&spec.radix)?;
    let relations = spec.relations();
    check_names(&relations)?;
    let (mut b, scans) = rank_sources(&relations)?;
    let mut sides = Vec::new();
    for (t, scan) in [&spec.left, &spec.right].into_iter().zip(scans) {
        let ty = &t.relation.ty;
        if ty.index_of(&t.key).is_none() {
            return Err(spec_err(format!("`{}` has no column `{}`", t.relation.name, t.key)));
        }
        let mut node = scan;
        if let Some(f) = &t.filter {
            node = b.add(OpKind::Filter { predicate: f.clone() }, &[node]);
        }
        let mut exprs = vec![NamedExpr::new(QUERY_KEY, col(&t.key))];
        exprs.extend(t.columns.iter().map(|c| NamedExpr::keep(c)));
        let node = b.map(node, exprs);
        let mut names = vec![QUERY_KEY.to_string()];
        names.extend(t.columns.iter().cloned());
        sides.push(Side {
            node,
            ty: TupleType::ints(&names),
            tag: t.relation.name.clone(),
            compress: false,
        });
    }
    let rows = join_stage(&mut b, &sides, QUERY_KEY, &spec.radix, &spec.post)?;
    let rank = finish_rank_plan(b, rows, spec.post.reduce.as_ref());
    let plan = driver_plan(&relations, rank, spec.distributed, spec.post.reduce.as_ref())?;
    infer_types(&plan)?;
    Ok(plan)
}

pub fn orders_type() -> TupleType {
    TupleType::ints(&["o_orderkey", "o_orderdate", "o_orderpriority"])
}

pub fn lineitem_type() -> TupleType {
    TupleType::ints(&[
        "l_orderkey",
        "l_partkey",
        "l_quantity",
        "l_extendedprice",
        "l_discount",
        "l_shipdate",
        "l_commitdate",
        "l_receiptdate",
        "l_shipmode",
        "l_shipinstruct",
    ])
}

pub fn part_type() -> TupleType {
    TupleType::ints(&["p_partkey", "p_brand", "p_size", "p_container", "p_type"])
}

fn between(c: &str, lo: i64, hi_inclusive: i64) -> Expr {
    col(c).ge(lit(lo)).and(col(c).le(lit(hi_inclusive)))
}

fn discounted() -> Expr {
    col("l_extendedprice").mul(lit(100).sub(col("l_discount")))
}

fn sums(fields: &[&str]) -> Vec<Agg> {
    fields.iter().map(|f| Agg::sum(f)).collect()
}

fn table(rel: &str, ty: TupleType, filter: Option<Expr>, key: &str, columns: &[&str]) -> TableScan {
    TableScan {
        relation: Relation::new(rel, ty),
        filter,
        key: key.into(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
    }
}

/// Late lineitems per order priority, for orders placed in one quarter.
pub fn q4_spec(radix: RadixSpec) -> QuerySpec {
    QuerySpec {
        left: table(
            "orders",
            orders_type(),
            Some(between("o_orderdate", 1000, 1091)),
            "o_orderkey",
            &["o_orderpriority"],
        ),
        right: table(
            "lineitem",
            lineitem_type(),
            Some(col("l_commitdate").lt(col("l_receiptdate"))),
            "l_orderkey",
            &[],
        ),
        radix,
        post: Aggregation {
            filter: None,
            map: Some(vec![
                NamedExpr::keep("o_orderpriority"),
                NamedExpr::new("order_count", lit(1)),
            ]),
            reduce: Some(Reduction::ReduceByKey {
                key: "o_orderpriority".into(),
                aggs: sums(&["order_count"]),
            }),
        },
        distributed: true,
    }
}

/// High and low priority line counts per ship mode.
pub fn q12_spec(radix: RadixSpec) -> QuerySpec {
    let mode = col("l_shipmode").eq(lit(3)).or(col("l_shipmode").eq(lit(5)));
    let filter = mode
        .and(col("l_commitdate").lt(col("l_receiptdate")))
        .and(col("l_shipdate").lt(col("l_commitdate")))
        .and(between("l_receiptdate", 730, 1094));
    let high = col("o_orderpriority").le(lit(1));
    QuerySpec {
        left: table("orders", orders_type(), None, "o_orderkey", &["o_orderpriority"]),
        right: table(
            "lineitem",
            lineitem_type(),
            Some(filter),
            "l_orderkey",
            &["l_shipmode"],
        ),
        radix,
        post: Aggregation {
            filter: None,
            map: Some(vec![
                NamedExpr::keep("l_shipmode"),
                NamedExpr::new("high_line_count", Expr::if_else(high.clone(), lit(1), lit(0))),
                NamedExpr::new("low_line_count", Expr::if_else(high, lit(0), lit(1))),
            ]),
            reduce: Some(Reduction::ReduceByKey {
                key: "l_shipmode".into(),
                aggs: sums(&["high_line_count", "low_line_count"]),
            }),
        },
        distributed: true,
    }
}

/// Promotional and total revenue for one month of shipments.
pub fn q14_spec(radix: RadixSpec) -> QuerySpec {
    QuerySpec {
        left: table("part", part_type(), None, "p_partkey", &["p_type"]),
        right: table(
            "lineitem",
            lineitem_type(),
            Some(between("l_shipdate", 1200, 1229)),
            "l_partkey",
            &["l_extendedprice", "l_discount"],
        ),
        radix,
        post: Aggregation {
            filter: None,
            map: Some(vec![
                NamedExpr::new(
                    "promo_revenue",
                    Expr::if_else(col("p_type").lt(lit(25)), discounted(), lit(0)),
                ),
                NamedExpr::new("revenue", discounted()),
            ]),
            reduce: Some(Reduction::Reduce {
                aggs: sums(&["promo_revenue", "revenue"]),
            }),
        },
        distributed: true,
    }
}

/// Discounted revenue of three brand/container/quantity/size classes.
pub fn q19_spec(radix: RadixSpec) -> QuerySpec {
    let class = |brand: i64, c_lo: i64, c_hi: i64, q_lo: i64, size_hi: i64| {
        col("p_brand")
            .eq(lit(brand))
            .and(between("p_container", c_lo, c_hi))
            .and(between("l_quantity", q_lo, q_lo + 10))
            .and(between("p_size", 1, size_hi))
    };
    let post_filter = class(12, 0, 3, 1, 5)
        .or(class(23, 8, 11, 10, 10))
        .or(class(34, 16, 19, 20, 15));
    let li_filter = col("l_shipinstruct")
        .eq(lit(0))
        .and(col("l_shipmode").eq(lit(0)).or(col("l_shipmode").eq(lit(1))));
    QuerySpec {
        left: table(
            "part",
            part_type(),
            None,
            "p_partkey",
            &["p_brand", "p_size", "p_container"],
        ),
        right: table(
            "lineitem",
            lineitem_type(),
            Some(li_filter),
            "l_partkey",
            &["l_quantity", "l_extendedprice", "l_discount"],
        ),
        radix,
        post: Aggregation {
            filter: Some(post_filter),
            map: Some(vec![NamedExpr::new("revenue", discounted())]),
            reduce: Some(Reduction::Reduce { aggs: sums(&["revenue"]) }),
        },
        distributed: true,
    }
}
