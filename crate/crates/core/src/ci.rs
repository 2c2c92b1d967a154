//! Conditional-independence statements and canonical triple enumeration.
//!
//! A statement `(s1 ⫫ s2 | z)` is stored with each side sorted and the pair
//! `(s1, s2)` oriented so `s1 <= s2` lexicographically. Both the graph layer
//! (d-separation scans) and the distribution layer (CI scans) emit the same
//! type, which is what makes faithfulness a set comparison.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// `(s1 ⫫ s2 | z)` over variable names, in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CiStatement {
    pub s1: Vec<String>,
    pub s2: Vec<String>,
    pub z: Vec<String>,
}

impl CiStatement {
    /// Build a canonical statement: sides sorted and deduplicated, the
    /// lexicographically smaller side stored first.
    pub fn new<S: AsRef<str>>(s1: &[S], s2: &[S], z: &[S]) -> Self {
        let mut s1: Vec<String> = s1.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut s2: Vec<String> = s2.iter().map(|s| s.as_ref().to_owned()).collect();
        let mut z: Vec<String> = z.iter().map(|s| s.as_ref().to_owned()).collect();
        s1.sort();
        s1.dedup();
        s2.sort();
        s2.dedup();
        z.sort();
        z.dedup();
        if s1 > s2 {
            std::mem::swap(&mut s1, &mut s2);
        }
        CiStatement { s1, s2, z }
    }
}

impl fmt::Display for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} _||_ {}", self.s1.join(","), self.s2.join(","))?;
        if self.z.is_empty() {
            write!(f, ")")
        } else {
            write!(f, " | {})", self.z.join(","))
        }
    }
}

/// Which `(s1, s2)` shapes a scan enumerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleMode {
    /// `s1`, `s2` restricted to singletons; `z` ranges over all subsets of
    /// the remaining variables.
    Singletons,
    /// `s1`, `s2` range over all disjoint nonempty subsets, `z` over all
    /// subsets of the remainder.
    FullSubsets,
}

/// Enumerate every canonical disjoint triple over `vars`.
///
/// Each symmetric pair appears exactly once, and the returned list is sorted
/// lexicographically on `(s1, s2, z)` as name sequences. Intended for small
/// variable sets; the full-subset count grows as `(4^n - 2*3^n + 2^n) / 2`.
pub fn canonical_triples<S: AsRef<str>>(vars: &[S], mode: TripleMode) -> Vec<CiStatement> {
    let names: Vec<String> = {
        let mut v: Vec<String> = vars.iter().map(|s| s.as_ref().to_owned()).collect();
        v.sort();
        v.dedup();
        v
    };
    let n = names.len();
    let mut out = BTreeSet::new();
    match mode {
        TripleMode::FullSubsets => {
            // Assign each variable a role: 0 = unused, 1 = s1, 2 = s2, 3 = z.
            let total = 4usize.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let mut s1 = Vec::new();
                let mut s2 = Vec::new();
                let mut z = Vec::new();
                for name in &names {
                    match c % 4 {
                        1 => s1.push(name.clone()),
                        2 => s2.push(name.clone()),
                        3 => z.push(name.clone()),
                        _ => {}
                    }
                    c /= 4;
                }
                if s1.is_empty() || s2.is_empty() {
                    continue;
                }
                out.insert(CiStatement::new(&s1, &s2, &z));
            }
        }
        TripleMode::Singletons => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let rest: Vec<&String> =
                        names.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, s)| s).collect();
                    let m = rest.len();
                    for mask in 0..(1usize << m) {
                        let z: Vec<String> = rest
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| mask >> k & 1 == 1)
                            .map(|(_, s)| (*s).clone())
                            .collect();
                        out.insert(CiStatement::new(&[&names[i]], &[&names[j]], &z.iter().collect::<Vec<_>>()));
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}
