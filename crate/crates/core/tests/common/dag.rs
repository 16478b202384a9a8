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

//! Random plan DAGs paired with a reference evaluator that works on plain
//! integer rows and memoizes every shared step.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

use modularis::expr::{col, lit, NamedExpr};
use modularis::plan::{Agg, NodeId, OpKind, PipelineSchedule};
use modularis::{Plan, PlanBuilder, Tuple, TupleType};

use super::{data_value, source};

type Rows = Vec<Vec<i64>>;

#[derive(Clone, Copy, Debug)]
pub enum Step {
    Source(usize),
    Map(usize),
    Filter(usize),
    Zip(usize, usize),
    Product(usize, usize),
    Join(usize, usize),
    Group(usize),
    Reduce(usize),
}

pub struct RandomDag {
    pub plan: Plan,
    pub inputs: Vec<(String, Tuple)>,
    pub steps: Vec<Step>,
    pub expected: Rows,
}

fn eval(steps: &[Step], data: &[Rows], i: usize, memo: &mut HashMap<usize, Rows>) -> Rows {
    if let Some(r) = memo.get(&i) {
        return r.clone();
    }
    let mut ev = |j: usize| eval(steps, data, j, memo);
    let out: Rows = match steps[i] {
        Step::Source(k) => data[k].clone(),
        Step::Map(a) => ev(a)
            .iter()
            .map(|r| vec![(r[0] + r[1]) % 97, (r[0] * 3 + 1) % 101])
            .collect(),
        Step::Filter(a) => ev(a).into_iter().filter(|r| r[0] % 3 != 0).collect(),
        Step::Zip(a, b) => {
            let (x, y) = (ev(a), ev(b));
            x.iter()
                .zip(&y)
                .map(|(p, q)| vec![(p[0] + q[1]) % 89, (p[1] + q[0]) % 83])
                .collect()
        }
        Step::Product(a, b) => {
            let (x, y) = (ev(a), ev(b));
            let mut out = Vec::new();
            for p in &x {
                for q in &y {
                    out.push(vec![(p[0] + q[0]) % 79, (p[1] * q[1]) % 73]);
                }
            }
            out
        }
        Step::Join(a, b) => {
            let (x, y) = (ev(a), ev(b));
            // Probe order: right rows in order, matches in build order.
            let mut out = Vec::new();
            for q in &y {
                for p in &x {
                    if p[0] % 4 == q[0] % 4 {
                        out.push(vec![(p[0] % 4 + p[1]) % 71, q[1]]);
                    }
                }
            }
            out
        }
        Step::Group(a) => {
            let mut sums: Vec<(i64, i64)> = Vec::new();
            for r in ev(a) {
                let k = r[0] % 5;
                match sums.iter_mut().find(|(g, _)| *g == k) {
                    Some(e) => e.1 += r[1],
                    None => sums.push((k, r[1])),
                }
            }
            sums.into_iter().map(|(k, s)| vec![k, s % 1009]).collect()
        }
        Step::Reduce(a) => {
            let x = ev(a);
            if x.is_empty() {
                Vec::new()
            } else {
                let s0: i64 = x.iter().map(|r| r[0]).sum();
                let s1: i64 = x.iter().map(|r| r[1]).sum();
                vec![vec![s0 % 997, s1 % 991]]
            }
        }
    };
    memo.insert(i, out.clone());
    out
}

/// Reference result of step `root`, evaluating every step at most once.
pub fn evaluate(steps: &[Step], data: &[Rows], root: usize) -> Rows {
    eval(steps, data, root, &mut HashMap::new())
}

fn out_names(i: usize) -> [String; 2] {
    [format!("n{i}_0"), format!("n{i}_1")]
}

fn rename(b: &mut PlanBuilder, up: NodeId, from: [String; 2], prefix: &str) -> NodeId {
    b.map(
        up,
        vec![
            NamedExpr::new(&format!("{prefix}0"), col(&from[0])),
            NamedExpr::new(&format!("{prefix}1"), col(&from[1])),
        ],
    )
}

fn emit(b: &mut PlanBuilder, up: NodeId, i: usize, e0: modularis::expr::Expr, e1: modularis::expr::Expr) -> NodeId {
    let [n0, n1] = out_names(i);
    b.map(up, vec![NamedExpr::new(&n0, e0), NamedExpr::new(&n1, e1)])
}

const MAX_ROWS: usize = 300;

/// A DAG of `size` steps over two small inputs, rooted at its last step.
pub fn random_dag(rng: &mut impl Rng, size: usize) -> RandomDag {
    let xy = TupleType::ints(&["x", "y"]);
    let data: Vec<Rows> = (0..2)
        .map(|_| {
            (0..rng.gen_range(0..8))
                .map(|_| vec![rng.gen_range(0..50), rng.gen_range(0..50)])
                .collect()
        })
        .collect();
    let mut b = PlanBuilder::new();
    let mut steps = Vec::new();
    let mut nodes: Vec<NodeId> = Vec::new();
    let mut memo = HashMap::new();
    for k in 0..2 {
        let s = source(&mut b, &format!("in{k}"), &xy);
        let [n0, n1] = out_names(k);
        nodes.push(b.map(s, vec![NamedExpr::new(&n0, col("x")), NamedExpr::new(&n1, col("y"))]));
        steps.push(Step::Source(k));
    }
    while steps.len() < size.max(3) {
        let i = steps.len();
        let a = if rng.gen_bool(0.5) { i - 1 } else { rng.gen_range(0..i) };
        let c = rng.gen_range(0..i);
        let len = |s: &[Step], j: usize, memo: &mut HashMap<usize, Rows>| eval(s, &data, j, memo).len();
        let (la, lc) = (len(&steps, a, &mut memo), len(&steps, c, &mut memo));
        let [a0, a1] = out_names(a);
        let step = match rng.gen_range(0..8) {
            0 | 1 => Step::Map(a),
            2 => Step::Filter(a),
            3 if la == lc => Step::Zip(a, c),
            4 if la * lc <= MAX_ROWS => Step::Product(a, c),
            5 if la * lc <= MAX_ROWS => Step::Join(a, c),
            6 => Step::Group(a),
            7 => Step::Reduce(a),
            _ => Step::Map(a),
        };
        let node = match step {
            Step::Map(_) => emit(
                &mut b,
                nodes[a],
                i,
                col(&a0).add(col(&a1)).modulo(lit(97)),
                col(&a0).mul(lit(3)).add(lit(1)).modulo(lit(101)),
            ),
            Step::Filter(_) => {
                let f = b.add(
                    OpKind::Filter {
                        predicate: col(&a0).modulo(lit(3)).ne(lit(0)),
                    },
                    &[nodes[a]],
                );
                emit(&mut b, f, i, col(&a0), col(&a1))
            }
            Step::Zip(..) | Step::Product(..) => {
                let zip = matches!(step, Step::Zip(..));
                let l = rename(&mut b, nodes[a], out_names(a), &format!("t{i}_a"));
                let r = rename(&mut b, nodes[c], out_names(c), &format!("t{i}_b"));
                let (p, q) = (|j| format!("t{i}_a{j}"), |j| format!("t{i}_b{j}"));
                if zip {
                    let z = b.add(OpKind::Zip {}, &[l, r]);
                    emit(
                        &mut b,
                        z,
                        i,
                        col(&p(0)).add(col(&q(1))).modulo(lit(89)),
                        col(&p(1)).add(col(&q(0))).modulo(lit(83)),
                    )
                } else {
                    let x = b.add(OpKind::CartesianProduct {}, &[l, r]);
                    emit(
                        &mut b,
                        x,
                        i,
                        col(&p(0)).add(col(&q(0))).modulo(lit(79)),
                        col(&p(1)).mul(col(&q(1))).modulo(lit(73)),
                    )
                }
            }
            Step::Join(..) => {
                let [c0, c1] = out_names(c);
                let k = format!("j{i}_k");
                let (lf, rf) = (format!("j{i}_l"), format!("j{i}_r"));
                let l = b.map(
                    nodes[a],
                    vec![
                        NamedExpr::new(&k, col(&a0).modulo(lit(4))),
                        NamedExpr::new(&lf, col(&a1)),
                    ],
                );
                let r = b.map(
                    nodes[c],
                    vec![
                        NamedExpr::new(&k, col(&c0).modulo(lit(4))),
                        NamedExpr::new(&rf, col(&c1)),
                    ],
                );
                let j = b.add(OpKind::BuildProbe { attrs: vec![k.clone()] }, &[l, r]);
                emit(&mut b, j, i, col(&k).add(col(&lf)).modulo(lit(71)), col(&rf))
            }
            Step::Group(_) => {
                let (k, v) = (format!("g{i}_k"), format!("g{i}_v"));
                let m = b.map(
                    nodes[a],
                    vec![
                        NamedExpr::new(&k, col(&a0).modulo(lit(5))),
                        NamedExpr::new(&v, col(&a1)),
                    ],
                );
                let g = b.add(
                    OpKind::ReduceByKey {
                        key: k.clone(),
                        aggs: vec![Agg::sum(&v)],
                    },
                    &[m],
                );
                emit(&mut b, g, i, col(&k), col(&v).modulo(lit(1009)))
            }
            Step::Reduce(_) => {
                let r = b.add(
                    OpKind::Reduce {
                        aggs: vec![Agg::sum(&a0), Agg::sum(&a1)],
                    },
                    &[nodes[a]],
                );
                emit(&mut b, r, i, col(&a0).modulo(lit(997)), col(&a1).modulo(lit(991)))
            }
            Step::Source(_) => unreachable!(),
        };
        steps.push(step);
        nodes.push(node);
    }
    let last = steps.len() - 1;
    let root = b.materialize(nodes[last], "result");
    let plan = b.snapshot(root);
    let inputs = plan
        .inputs
        .iter()
        .map(|bnd| {
            let k: usize = bnd.name[2..].parse().unwrap();
            (bnd.name.clone(), data_value(&xy, &data[k]))
        })
        .collect();
    let expected = evaluate(&steps, &data, last);
    RandomDag {
        plan,
        inputs,
        steps,
        expected,
    }
}

/// Asserts the structural properties of a schedule: shared nodes are the
/// materialization points, pipelines are disjoint trees covering the plan,
/// and the root is produced last.
pub fn check_schedule(plan: &Plan, s: &PipelineSchedule) {
    let consumers = plan.consumer_counts();
    let shared: BTreeSet<_> = consumers.iter().filter(|(_, c)| **c > 1).map(|(n, _)| *n).collect();
    assert_eq!(s.materialized, shared);

    let mut seen = BTreeSet::new();
    let mut produced = BTreeSet::new();
    for p in &s.pipelines {
        for n in &p.nodes {
            assert!(seen.insert(*n), "node {n} in two pipelines");
        }
        let members: BTreeSet<_> = p.nodes.iter().copied().collect();
        // Tree shape: every non-sink member feeds exactly one member and
        // nothing else; other upstreams are earlier materializations.
        let mut uses: BTreeMap<_, usize> = BTreeMap::new();
        for n in &p.nodes {
            for u in &plan.nodes[n].upstreams {
                if members.contains(u) {
                    *uses.entry(*u).or_default() += 1;
                } else {
                    assert!(s.materialized.contains(u) && produced.contains(u), "pipeline reads {u} early");
                }
            }
        }
        assert!(!uses.contains_key(&p.sink));
        for n in &p.nodes {
            if *n != p.sink {
                assert_eq!(uses.get(n), Some(&1), "node {n} is not a tree member");
                assert_eq!(consumers[n], 1);
            }
        }
        produced.insert(p.sink);
    }
    assert_eq!(seen, plan.nodes.keys().copied().collect());
    assert_eq!(s.pipelines.last().unwrap().sink, plan.root);
}
