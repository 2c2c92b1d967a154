//! Finite probability tables with exact queries.
//!
//! A joint distribution is a dense table over named finite alphabets with
//! mixed-radix indexing (last variable fastest). In the canonical rational
//! mode every operation — marginalization, conditioning, conditional
//! independence, factorization — is an exact decision; the float mode reuses
//! the same code with an absolute slack and exists only for externally
//! supplied approximate tables.
//!
//! Conditional independence is tested in cross-multiplied form,
//! `P(s1,s2,z)·P(z) = P(s1,z)·P(s2,z)`, so no division occurs and
//! zero-probability conditioning cells are vacuous by construction.

use crate::ci::{canonical_triples, CiStatement, TripleMode};
use crate::dag::{genealogy, Dag};
use crate::scalar::{eq_within, is_zero_within, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// A named variable with its ordered, duplicate-free value set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alphabet {
    name: String,
    values: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>, V: Into<String>>(
        name: S,
        values: impl IntoIterator<Item = V>,
    ) -> Result<Self, ProbError> {
        let name = name.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        let distinct: BTreeSet<&String> = values.iter().collect();
        if values.is_empty() || distinct.len() != values.len() {
            return Err(ProbError::BadAlphabet(name));
        }
        Ok(Alphabet { name, values })
    }

    /// Two-valued alphabet `{"0", "1"}`.
    pub fn binary(name: impl Into<String>) -> Self {
        Alphabet::new(name, ["0", "1"]).expect("statically valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn card(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown value `{value}` for variable `{var}`")]
    UnknownValue { var: String, value: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("alphabet for `{0}` must be nonempty and duplicate-free")]
    BadAlphabet(String),
    #[error("table has {got} entries but the alphabets require {want}")]
    TableSize { got: usize, want: usize },
    #[error("weights must be nonnegative, but entry {index} is {value}")]
    NegativeWeight { index: usize, value: String },
    #[error("weights must sum to one, but the total is {0}")]
    NotNormalized(String),
    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,
    #[error("query sets must be pairwise disjoint, but `{0}` is shared")]
    Disjointness(String),
    #[error("query sides must be nonempty")]
    EmptySide,
    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),
    #[error("distribution does not fit the graph: {0}")]
    VariableMismatch(String),
    #[error("rational grid must be at least 1")]
    BadGrid,
}

/// Dense joint distribution over named finite variables.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T: Scalar> {
    vars: Vec<Alphabet>,
    weights: Vec<T>,
    eps: T,
}

impl<T: Scalar> JointDistribution<T> {
    /// Validate and build from a full weight table in mixed-radix order
    /// (last variable fastest). Weights must be nonnegative and sum to one,
    /// both judged at the distribution's slack.
    pub fn from_weights(vars: Vec<Alphabet>, weights: Vec<T>) -> Result<Self, ProbError> {
        Self::from_weights_with_eps(vars, weights, T::default_eps())
    }

    /// As `from_weights` with an explicit comparison slack (float mode).
    pub fn from_weights_with_eps(
        vars: Vec<Alphabet>,
        weights: Vec<T>,
        eps: T,
    ) -> Result<Self, ProbError> {
        let mut names = BTreeSet::new();
        for v in &vars {
            if !names.insert(v.name.clone()) {
                return Err(ProbError::DuplicateVariable(v.name.clone()));
            }
        }
        let want: usize = vars.iter().map(Alphabet::card).product();
        if weights.len() != want {
            return Err(ProbError::TableSize { got: weights.len(), want });
        }
        let mut total = T::zero();
        for (i, w) in weights.iter().enumerate() {
            if w < &T::zero() && !is_zero_within(w, &eps) {
                return Err(ProbError::NegativeWeight { index: i, value: w.to_string() });
            }
            total = total + w.clone();
        }
        if !eq_within(&total, &T::one(), &eps) {
            return Err(ProbError::NotNormalized(total.to_string()));
        }
        Ok(JointDistribution { vars, weights, eps })
    }

    /// Uniform distribution over the product alphabet.
    pub fn uniform(vars: Vec<Alphabet>) -> Result<Self, ProbError> {
        let n: usize = vars.iter().map(Alphabet::card).product();
        if n == 0 {
            return Err(ProbError::TableSize { got: 0, want: 0 });
        }
        let w = T::from_ratio(1, n as i64);
        Self::from_weights(vars, vec![w; n])
    }

    pub fn vars(&self) -> &[Alphabet] {
        &self.vars
    }

    pub fn eps(&self) -> &T {
        &self.eps
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn var_position(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    fn resolve_vars<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, ProbError> {
        names
            .iter()
            .map(|s| {
                self.var_position(s.as_ref())
                    .ok_or_else(|| ProbError::UnknownVariable(s.as_ref().to_owned()))
            })
            .collect()
    }

    /// Mixed-radix index of a full assignment given as value indices.
    pub fn index_of(&self, assignment: &[usize]) -> usize {
        debug_assert_eq!(assignment.len(), self.vars.len());
        let mut idx = 0;
        for (v, &a) in self.vars.iter().zip(assignment) {
            debug_assert!(a < v.card());
            idx = idx * v.card() + a;
        }
        idx
    }

    /// Decode a table index into value indices.
    pub fn assignment_at(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.vars.len()];
        for (k, v) in self.vars.iter().enumerate().rev() {
            out[k] = idx % v.card();
            idx /= v.card();
        }
        out
    }

    /// Total weight of a partial assignment given as `(variable, value)`
    /// name pairs.
    pub fn event_weight<S: AsRef<str>>(&self, event: &[(S, S)]) -> Result<T, ProbError> {
        let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(event.len());
        for (var, value) in event {
            let p = self
                .var_position(var.as_ref())
                .ok_or_else(|| ProbError::UnknownVariable(var.as_ref().to_owned()))?;
            let vi = self.vars[p].value_index(value.as_ref()).ok_or_else(|| ProbError::UnknownValue {
                var: var.as_ref().to_owned(),
                value: value.as_ref().to_owned(),
            })?;
            fixed.push((p, vi));
        }
        let mut total = T::zero();
        for idx in 0..self.weights.len() {
            let a = self.assignment_at(idx);
            if fixed.iter().all(|&(p, vi)| a[p] == vi) {
                total = total + self.weights[idx].clone();
            }
        }
        Ok(total)
    }

    /// Sum out everything except `keep`. The result keeps this table's
    /// variable order restricted to `keep`.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointDistribution<T>, ProbError> {
        let positions = self.resolve_vars(keep)?;
        let keep_set: BTreeSet<usize> = positions.iter().copied().collect();
        if keep_set.len() != positions.len() {
            let mut seen = BTreeSet::new();
            for s in keep {
                if !seen.insert(s.as_ref()) {
                    return Err(ProbError::DuplicateVariable(s.as_ref().to_owned()));
                }
            }
        }
        let kept: Vec<usize> = (0..self.vars.len()).filter(|p| keep_set.contains(p)).collect();
        let out_vars: Vec<Alphabet> = kept.iter().map(|&p| self.vars[p].clone()).collect();
        let out_size: usize = out_vars.iter().map(Alphabet::card).product();
        let mut out = vec![T::zero(); out_size];
        for idx in 0..self.weights.len() {
            if self.weights[idx].is_zero() {
                continue;
            }
            let a = self.assignment_at(idx);
            let mut oidx = 0;
            for (&p, v) in kept.iter().zip(&out_vars) {
                oidx = oidx * v.card() + a[p];
            }
            out[oidx] = out[oidx].clone() + self.weights[idx].clone();
        }
        Ok(JointDistribution { vars: out_vars, weights: out, eps: self.eps.clone() })
    }

    /// Condition on a full-value event over some variables; the result
    /// ranges over the remaining variables in this table's order. Fails with
    /// `ZeroProbabilityEvent` if the event has no weight.
    pub fn condition<S: AsRef<str>>(&self, on: &[(S, S)]) -> Result<JointDistribution<T>, ProbError> {
        let mut fixed: Vec<Option<usize>> = vec![None; self.vars.len()];
        for (var, value) in on {
            let p = self
                .var_position(var.as_ref())
                .ok_or_else(|| ProbError::UnknownVariable(var.as_ref().to_owned()))?;
            let vi = self.vars[p].value_index(value.as_ref()).ok_or_else(|| ProbError::UnknownValue {
                var: var.as_ref().to_owned(),
                value: value.as_ref().to_owned(),
            })?;
            if fixed[p].is_some() {
                return Err(ProbError::DuplicateVariable(var.as_ref().to_owned()));
            }
            fixed[p] = Some(vi);
        }
        let kept: Vec<usize> = (0..self.vars.len()).filter(|&p| fixed[p].is_none()).collect();
        let out_vars: Vec<Alphabet> = kept.iter().map(|&p| self.vars[p].clone()).collect();
        let out_size: usize = out_vars.iter().map(Alphabet::card).product();
        let mut out = vec![T::zero(); out_size];
        let mut event = T::zero();
        for idx in 0..self.weights.len() {
            let a = self.assignment_at(idx);
            if fixed.iter().enumerate().all(|(p, f)| f.map_or(true, |vi| a[p] == vi)) {
                event = event + self.weights[idx].clone();
                let mut oidx = 0;
                for (&p, v) in kept.iter().zip(&out_vars) {
                    oidx = oidx * v.card() + a[p];
                }
                out[oidx] = out[oidx].clone() + self.weights[idx].clone();
            }
        }
        if is_zero_within(&event, &self.eps) {
            return Err(ProbError::ZeroProbabilityEvent);
        }
        let weights = out.into_iter().map(|w| w / event.clone()).collect();
        Ok(JointDistribution { vars: out_vars, weights, eps: self.eps.clone() })
    }

    /// Decide `(s1 ⫫ s2 | z)` in this distribution.
    pub fn is_conditionally_independent(&self, stmt: &CiStatement) -> Result<bool, ProbError> {
        Ok(self.check_ci(stmt)?.holds)
    }

    /// As `is_conditionally_independent`, also reporting whether any
    /// conditioning cell was skipped as a zero-probability event.
    pub fn check_ci(&self, stmt: &CiStatement) -> Result<CiCheck, ProbError> {
        let s1 = &stmt.s1;
        let s2 = &stmt.s2;
        let z = &stmt.z;
        if s1.is_empty() || s2.is_empty() {
            return Err(ProbError::EmptySide);
        }
        let mut seen = BTreeSet::new();
        for name in s1.iter().chain(s2).chain(z) {
            if !seen.insert(name.clone()) {
                return Err(ProbError::Disjointness(name.clone()));
            }
            if self.var_position(name).is_none() {
                return Err(ProbError::UnknownVariable(name.clone()));
            }
        }

        let all: Vec<String> = s1.iter().chain(s2.iter()).chain(z.iter()).cloned().collect();
        let m = self.marginalize(&all)?;
        let m1z: JointDistribution<T> =
            m.marginalize(&s1.iter().chain(z.iter()).cloned().collect::<Vec<_>>())?;
        let m2z: JointDistribution<T> =
            m.marginalize(&s2.iter().chain(z.iter()).cloned().collect::<Vec<_>>())?;
        let mz: JointDistribution<T> = m.marginalize(z)?;

        // Positions of each factor's variables inside m's ordering.
        let proj = |sub: &JointDistribution<T>| -> Vec<usize> {
            sub.vars.iter().map(|v| m.var_position(&v.name).expect("subset of m")).collect()
        };
        let p1z = proj(&m1z);
        let p2z = proj(&m2z);
        let pz = proj(&mz);
        let sub_index = |sub: &JointDistribution<T>, positions: &[usize], a: &[usize]| -> usize {
            let mut idx = 0;
            for (&p, v) in positions.iter().zip(sub.vars.iter()) {
                idx = idx * v.card() + a[p];
            }
            idx
        };

        let mut skipped = 0usize;
        // Count distinct zero-weight conditioning cells (not per-assignment).
        if !z.is_empty() {
            for wz in mz.weights.iter() {
                if is_zero_within(wz, &self.eps) {
                    skipped += 1;
                }
            }
        }
        for idx in 0..m.weights.len() {
            let a = m.assignment_at(idx);
            let w12z = &m.weights[idx];
            let wz =
                if z.is_empty() { T::one() } else { mz.weights[sub_index(&mz, &pz, &a)].clone() };
            if is_zero_within(&wz, &self.eps) {
                continue; // vacuous conditioning cell
            }
            let w1z = m1z.weights[sub_index(&m1z, &p1z, &a)].clone();
            let w2z = m2z.weights[sub_index(&m2z, &p2z, &a)].clone();
            let lhs = w12z.clone() * wz;
            let rhs = w1z * w2z;
            if !eq_within(&lhs, &rhs, &self.eps) {
                return Ok(CiCheck { holds: false, skipped_conditioning_cells: skipped });
            }
        }
        Ok(CiCheck { holds: true, skipped_conditioning_cells: skipped })
    }

    /// Every canonical triple over `over` that holds in this distribution,
    /// in canonical order. `Singletons` restricts to pairwise statements;
    /// `FullSubsets` scans all disjoint subset pairs.
    pub fn ci_scan<S: AsRef<str>>(
        &self,
        over: &[S],
        mode: TripleMode,
    ) -> Result<Vec<CiStatement>, ProbError> {
        self.resolve_vars(over)?;
        let names: Vec<&str> = over.iter().map(|s| s.as_ref()).collect();
        let mut out = Vec::new();
        for stmt in canonical_triples(&names, mode) {
            if self.is_conditionally_independent(&stmt)? {
                out.push(stmt);
            }
        }
        Ok(out)
    }
}

/// Outcome of a CI check, with support bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CiCheck {
    pub holds: bool,
    /// Number of conditioning cells skipped because they carry no weight.
    pub skipped_conditioning_cells: usize,
}

/// Conditional probability table `P(child | parents)`, rows indexed
/// mixed-radix over the parent alphabets in listed order (last fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T: Scalar> {
    child: Alphabet,
    parents: Vec<Alphabet>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(child: Alphabet, parents: Vec<Alphabet>, rows: Vec<Vec<T>>) -> Result<Self, ProbError> {
        let mut names = BTreeSet::new();
        names.insert(child.name.clone());
        for p in &parents {
            if !names.insert(p.name.clone()) {
                return Err(ProbError::DuplicateVariable(p.name.clone()));
            }
        }
        let want: usize = parents.iter().map(Alphabet::card).product();
        if rows.len() != want {
            return Err(ProbError::TableSize { got: rows.len(), want });
        }
        let eps = T::default_eps();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != child.card() {
                return Err(ProbError::TableSize { got: row.len(), want: child.card() });
            }
            let mut total = T::zero();
            for (i, w) in row.iter().enumerate() {
                if w < &T::zero() && !is_zero_within(w, &eps) {
                    return Err(ProbError::NegativeWeight {
                        index: r * child.card() + i,
                        value: w.to_string(),
                    });
                }
                total = total + w.clone();
            }
            if !eq_within(&total, &T::one(), &eps) {
                return Err(ProbError::NotNormalized(total.to_string()));
            }
        }
        Ok(Kernel { child, parents, rows })
    }

    pub fn child(&self) -> &Alphabet {
        &self.child
    }

    pub fn parents(&self) -> &[Alphabet] {
        &self.parents
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    fn row_index(&self, parent_values: &[usize]) -> usize {
        debug_assert_eq!(parent_values.len(), self.parents.len());
        let mut idx = 0;
        for (p, &v) in self.parents.iter().zip(parent_values) {
            idx = idx * p.card() + v;
        }
        idx
    }

    /// `P(child = value | parents = parent_values)` by value indices.
    pub fn prob(&self, value: usize, parent_values: &[usize]) -> &T {
        &self.rows[self.row_index(parent_values)][value]
    }
}

/// Multiply kernels along `g` into the joint they define. Exactly one kernel
/// per node is required, each kernel's parent set must equal the node's
/// graph parents, and every variable must carry one consistent alphabet.
/// The joint's variable order is the graph's node order.
pub fn markov_factorize<T: Scalar>(g: &Dag, kernels: &[Kernel<T>]) -> Result<JointDistribution<T>, ProbError> {
    let gen = genealogy(g);
    let mut by_child: Vec<Option<&Kernel<T>>> = vec![None; g.len()];
    for k in kernels {
        let pos = g
            .nodes()
            .iter()
            .position(|n| n.name == k.child.name)
            .ok_or_else(|| ProbError::KernelMismatch(format!("kernel child `{}` is not a graph node", k.child.name)))?;
        if by_child[pos].is_some() {
            return Err(ProbError::KernelMismatch(format!("two kernels for `{}`", k.child.name)));
        }
        let expected = gen.parents(&k.child.name).expect("node present");
        let got: BTreeSet<String> = k.parents.iter().map(|p| p.name.clone()).collect();
        if &got != expected {
            return Err(ProbError::KernelMismatch(format!(
                "kernel for `{}` conditions on {{{}}} but the graph parents are {{{}}}",
                k.child.name,
                k.parents.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(","),
                expected.iter().map(String::as_str).collect::<Vec<_>>().join(","),
            )));
        }
        by_child[pos] = Some(k);
    }
    for (i, slot) in by_child.iter().enumerate() {
        if slot.is_none() {
            return Err(ProbError::KernelMismatch(format!("no kernel for `{}`", g.nodes()[i].name)));
        }
    }
    let kernels: Vec<&Kernel<T>> = by_child.into_iter().map(Option::unwrap).collect();

    // One alphabet per variable, defined by its own kernel's child alphabet;
    // every parent reference must agree with it.
    let alphabets: Vec<&Alphabet> = kernels.iter().map(|k| &k.child).collect();
    let position_of = |name: &str| g.nodes().iter().position(|n| n.name == name).expect("validated");
    for k in &kernels {
        for p in &k.parents {
            let canon = alphabets[position_of(&p.name)];
            if p != canon {
                return Err(ProbError::KernelMismatch(format!(
                    "kernel for `{}` disagrees on the alphabet of `{}`",
                    k.child.name, p.name
                )));
            }
        }
    }

    let vars: Vec<Alphabet> = alphabets.iter().map(|a| (*a).clone()).collect();
    let size: usize = vars.iter().map(Alphabet::card).product();
    let mut weights = Vec::with_capacity(size);
    let shell = JointDistribution { vars: vars.clone(), weights: vec![T::zero(); size], eps: T::default_eps() };
    let parent_positions: Vec<Vec<usize>> =
        kernels.iter().map(|k| k.parents.iter().map(|p| position_of(&p.name)).collect()).collect();
    for idx in 0..size {
        let a = shell.assignment_at(idx);
        let mut w = T::one();
        for (v, k) in kernels.iter().enumerate() {
            let pv: Vec<usize> = parent_positions[v].iter().map(|&p| a[p]).collect();
            w = w * k.prob(a[v], &pv).clone();
        }
        weights.push(w);
    }
    JointDistribution::from_weights(vars, weights)
}

/// True iff `(v ⫫ Nd(v) \ Pa(v) | Pa(v))` holds in `p` for every node `v`
/// of `g` — the Markov-condition test for compatibility. `p`'s variables
/// must be exactly `g`'s nodes.
pub fn is_compatible<T: Scalar>(p: &JointDistribution<T>, g: &Dag) -> Result<bool, ProbError> {
    let pvars: BTreeSet<&str> = p.vars().iter().map(|v| v.name()).collect();
    let gvars: BTreeSet<&str> = g.nodes().iter().map(|n| n.name.as_str()).collect();
    if pvars != gvars {
        return Err(ProbError::VariableMismatch(format!(
            "distribution over {{{}}}, graph over {{{}}}",
            pvars.iter().copied().collect::<Vec<_>>().join(","),
            gvars.iter().copied().collect::<Vec<_>>().join(","),
        )));
    }
    let gen = genealogy(g);
    for node in g.nodes() {
        let v = node.name.as_str();
        let pa = gen.parents(v).expect("node present");
        let nd = gen.non_descendants(v).expect("node present");
        let rest: Vec<&String> = nd.iter().filter(|x| !pa.contains(*x)).collect();
        if rest.is_empty() {
            continue;
        }
        let stmt = CiStatement::new(
            &[v],
            &rest.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            &pa.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        if !p.is_conditionally_independent(&stmt)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Draw a random joint compatible with `g` by construction: each node gets a
/// kernel whose rows are integers from `1..=grid` over `grid`, row-normalized,
/// then the kernels are multiplied along the graph. Deterministic in `seed`
/// (nodes in graph order, rows in index order, entries in value order).
pub fn random_compatible<T: Scalar>(
    g: &Dag,
    alphabets: &[Alphabet],
    seed: u64,
    grid: u32,
) -> Result<JointDistribution<T>, ProbError> {
    if grid == 0 {
        return Err(ProbError::BadGrid);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels = random_kernels(g, alphabets, &mut rng, grid)?;
    markov_factorize(g, &kernels)
}

/// The kernel-drawing half of `random_compatible`, reusable when the caller
/// wants the kernels themselves.
pub fn random_kernels<T: Scalar>(
    g: &Dag,
    alphabets: &[Alphabet],
    rng: &mut ChaCha8Rng,
    grid: u32,
) -> Result<Vec<Kernel<T>>, ProbError> {
    if grid == 0 {
        return Err(ProbError::BadGrid);
    }
    let find = |name: &str| -> Result<&Alphabet, ProbError> {
        alphabets
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| ProbError::VariableMismatch(format!("no alphabet for node `{name}`")))
    };
    let gen = genealogy(g);
    let mut kernels = Vec::with_capacity(g.len());
    for node in g.nodes() {
        let child = find(&node.name)?.clone();
        let parents: Vec<Alphabet> = gen
            .parents(&node.name)
            .expect("node present")
            .iter()
            .map(|p| find(p).map(Clone::clone))
            .collect::<Result<_, _>>()?;
        let nrows: usize = parents.iter().map(Alphabet::card).product();
        let mut rows = Vec::with_capacity(nrows);
        for _ in 0..nrows {
            let draws: Vec<i64> = (0..child.card()).map(|_| rng.gen_range(1..=grid) as i64).collect();
            let total: i64 = draws.iter().sum();
            rows.push(draws.into_iter().map(|d| T::from_ratio(d, total)).collect());
        }
        kernels.push(Kernel::new(child, parents, rows)?);
    }
    Ok(kernels)
}
