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

//! Brute-force reference implementations. Nothing here uses the engine's
//! partitioning, hashing or transport code.

use std::collections::BTreeMap;

/// Rows of 64-bit integer atoms with named columns.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlatRelation {
    pub fields: Vec<String>,
    pub rows: Vec<Vec<i64>>,
}

impl FlatRelation {
    pub fn new<S: AsRef<str>>(fields: &[S], rows: Vec<Vec<i64>>) -> Self {
        FlatRelation {
            fields: fields.iter().map(|f| f.as_ref().to_string()).collect(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn col(&self, name: &str) -> usize {
        self.fields
            .iter()
            .position(|f| f == name)
            .unwrap_or_else(|| panic!("no column {name} in {:?}", self.fields))
    }

    pub fn filter(&self, mut keep: impl FnMut(&[i64]) -> bool) -> FlatRelation {
        FlatRelation {
            fields: self.fields.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Rows sorted lexicographically: the canonical multiset form.
    pub fn sorted_rows(&self) -> Vec<Vec<i64>> {
        let mut r = self.rows.clone();
        r.sort_unstable();
        r
    }
}

/// Multiset equality of two row collections.
pub fn same_multiset(mut a: Vec<Vec<i64>>, mut b: Vec<Vec<i64>>) -> bool {
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// Equi-join. Output columns: `attrs`, then the remaining left columns,
/// then the remaining right columns.
///
/// Both inputs are sorted on the join attributes first so the nested loop
/// only runs over rows with equal keys; a full cross-product loop is not
/// feasible at a million rows per side.
pub fn nl_join(l: &FlatRelation, r: &FlatRelation, attrs: &[&str]) -> FlatRelation {
    let lk: Vec<usize> = attrs.iter().map(|a| l.col(a)).collect();
    let rk: Vec<usize> = attrs.iter().map(|a| r.col(a)).collect();
    let lrest: Vec<usize> = (0..l.fields.len()).filter(|i| !lk.contains(i)).collect();
    let rrest: Vec<usize> = (0..r.fields.len()).filter(|i| !rk.contains(i)).collect();
    let key = |row: &[i64], k: &[usize]| k.iter().map(|i| row[*i]).collect::<Vec<_>>();

    let mut ls: Vec<&Vec<i64>> = l.rows.iter().collect();
    let mut rs: Vec<&Vec<i64>> = r.rows.iter().collect();
    ls.sort_by_key(|row| key(row, &lk));
    rs.sort_by_key(|row| key(row, &rk));

    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < ls.len() && j < rs.len() {
        let (a, b) = (key(ls[i], &lk), key(rs[j], &rk));
        if a < b {
            i += 1;
        } else if a > b {
            j += 1;
        } else {
            let i_end = (i..ls.len()).find(|x| key(ls[*x], &lk) != a).unwrap_or(ls.len());
            let j_end = (j..rs.len()).find(|x| key(rs[*x], &rk) != b).unwrap_or(rs.len());
            for lrow in &ls[i..i_end] {
                for rrow in &rs[j..j_end] {
                    let mut row = a.clone();
                    row.extend(lrest.iter().map(|c| lrow[*c]));
                    row.extend(rrest.iter().map(|c| rrow[*c]));
                    out.push(row);
                }
            }
            i = i_end;
            j = j_end;
        }
    }
    let mut fields: Vec<String> = attrs.iter().map(|a| a.to_string()).collect();
    fields.extend(lrest.iter().map(|c| l.fields[*c].clone()));
    fields.extend(rrest.iter().map(|c| r.fields[*c].clone()));
    FlatRelation { fields, rows: out }
}

/// Left fold of [`nl_join`] over the relations.
pub fn ref_sequence_join(relations: &[FlatRelation], attr: &str) -> FlatRelation {
    let mut acc = relations[0].clone();
    for r in &relations[1..] {
        acc = nl_join(&acc, r, &[attr]);
    }
    acc
}

/// Folds every non-key column per key with `f`.
pub fn ref_group_by(rel: &FlatRelation, key: &str, f: impl Fn(i64, i64) -> i64) -> FlatRelation {
    let k = rel.col(key);
    let mut groups: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for row in &rel.rows {
        match groups.get_mut(&row[k]) {
            Some(acc) => {
                for (c, v) in row.iter().enumerate() {
                    if c != k {
                        acc[c] = f(acc[c], *v);
                    }
                }
            }
            None => {
                groups.insert(row[k], row.clone());
            }
        }
    }
    FlatRelation {
        fields: rel.fields.clone(),
        rows: groups.into_values().collect(),
    }
}

pub fn ref_histogram(rel: &FlatRelation, bucket: impl Fn(&[i64]) -> usize, n: usize) -> Vec<u64> {
    let mut h = vec![0u64; n];
    for row in &rel.rows {
        h[bucket(row)] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(fields: &[&str], rows: &[&[i64]]) -> FlatRelation {
        FlatRelation::new(fields, rows.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn join_examples() {
        let l = rel(&["k", "a"], &[&[1, 10]]);
        let r = rel(&["k", "b"], &[&[1, 7], &[1, 8]]);
        let j = nl_join(&l, &r, &["k"]);
        assert_eq!(j.fields, vec!["k", "a", "b"]);
        assert!(same_multiset(j.rows, vec![vec![1, 10, 7], vec![1, 10, 8]]));
        assert!(nl_join(&l, &rel(&["k", "b"], &[]), &["k"]).is_empty());
    }

    #[test]
    fn join_matches_cross_product_filter() {
        let l = rel(&["k", "a"], &[&[3, 1], &[1, 2], &[3, 3], &[2, 4]]);
        let r = rel(&["b", "k"], &[&[5, 3], &[6, 3], &[7, 9], &[8, 1]]);
        let mut naive = Vec::new();
        for x in &l.rows {
            for y in &r.rows {
                if x[0] == y[1] {
                    naive.push(vec![x[0], x[1], y[0]]);
                }
            }
        }
        assert!(same_multiset(nl_join(&l, &r, &["k"]).rows, naive));
    }

    #[test]
    fn group_by_and_histogram() {
        let r = rel(&["k", "v"], &[&[1, 2], &[1, 3], &[2, 5]]);
        let g = ref_group_by(&r, "k", |a, b| a + b);
        assert_eq!(g.rows, vec![vec![1, 5], vec![2, 5]]);
        let h = ref_histogram(&rel(&["k"], &[&[0], &[1], &[1], &[3], &[7]]), |r| (r[0] % 4) as usize, 4);
        assert_eq!(h, vec![1, 2, 0, 2]);
    }

    #[test]
    fn sequence_of_one_is_identity() {
        let r = rel(&["k", "v"], &[&[1, 2]]);
        assert_eq!(ref_sequence_join(std::slice::from_ref(&r), "k"), r);
    }
}
