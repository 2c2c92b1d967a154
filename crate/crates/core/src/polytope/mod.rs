//! Polytopes spanned by deterministic response functions, with exact
//! membership certificates.
//!
//! A phenomenon's conditional tables form a point in the space indexed by
//! `(setting pair) × (outcome pair)`. The classical models correspond to
//! convex mixtures of deterministic vertices — either global outcome
//! assignments over all measurements, or independent per-slot response
//! functions. Membership is decided by exact linear-program feasibility;
//! both answers come with a certificate that is re-verified before being
//! returned: a convex weight vector reproducing the tables, or a separating
//! functional whose value on the phenomenon strictly exceeds its maximum
//! over all vertices.

pub mod builders;
mod simplex;

use crate::scalar::{is_zero_within, sign_within, Scalar};
use std::cmp::Ordering;
use crate::scenario::{MeasurementScenario, Phenomenon, ScenarioError};
use simplex::LpOutcome;
use std::collections::BTreeMap;
use thiserror::Error;

/// Hard cap on materialized vertex counts.
const VERTEX_LIMIT: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("vertex set would hold {count} vertices (limit {VERTEX_LIMIT})")]
    Explosion { count: u128 },
    #[error("unknown measurement `{0}` in vertex domain")]
    UnknownMeasurement(String),
    #[error("unknown outcome `{0}` in functional coefficient")]
    UnknownOutcome(String),
    #[error("duplicate measurement `{0}` in vertex domain")]
    DuplicateMeasurement(String),
    #[error("vertex domain must not be empty")]
    EmptyDomain,
    #[error("measurement `{measurement}` is outside the {slot}-slot response domain")]
    OutsideDomain { slot: char, measurement: String },
    #[error("phenomenon puts no weight on any setting pair")]
    EmptySupport,
    #[error("conditional on settings (X={x}, Y={y}) is undefined: the pair carries no weight")]
    UndefinedConditional { x: String, y: String },
    #[error("certificate failed re-verification: {0}")]
    CertificateCheck(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A finite family of deterministic response vertices.
///
/// Vertices are indexed `0..len()`. Each vertex answers
/// [`response_x`](VertexSet::response_x) / [`response_y`](VertexSet::response_y)
/// with an outcome index for a measurement placed in the `X` or `Y` slot.
/// Global-assignment sets answer both slots from one shared function over
/// all measurements; bipartite-pair sets carry an independent function per
/// slot, each over its own (possibly restricted) domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    outcomes: Vec<String>,
    x_domain: Vec<String>,
    y_domain: Vec<String>,
    shared: bool,
    count: usize,
}

fn checked_vertex_count(outcomes: usize, digits: usize) -> Result<usize, PolytopeError> {
    let mut count: u128 = 1;
    for _ in 0..digits {
        count = count.saturating_mul(outcomes as u128);
        if count > VERTEX_LIMIT {
            return Err(PolytopeError::Explosion { count });
        }
    }
    Ok(count as usize)
}

fn validate_domain(
    scenario: &MeasurementScenario,
    domain: &[String],
) -> Result<(), PolytopeError> {
    if domain.is_empty() {
        return Err(PolytopeError::EmptyDomain);
    }
    for (i, m) in domain.iter().enumerate() {
        if !scenario.measurements().contains(m) {
            return Err(PolytopeError::UnknownMeasurement(m.clone()));
        }
        if domain[..i].contains(m) {
            return Err(PolytopeError::DuplicateMeasurement(m.clone()));
        }
    }
    Ok(())
}

impl VertexSet {
    /// One vertex per assignment of an outcome to every measurement; both
    /// slots are answered by the same assignment.
    pub fn global_assignments(scenario: &MeasurementScenario) -> Result<Self, PolytopeError> {
        let domain: Vec<String> = scenario.measurements().to_vec();
        let count = checked_vertex_count(scenario.outcomes().len(), domain.len())?;
        Ok(VertexSet {
            outcomes: scenario.outcomes().to_vec(),
            x_domain: domain.clone(),
            y_domain: domain,
            shared: true,
            count,
        })
    }

    /// One vertex per pair of independent response functions, the first
    /// over `x_domain` (answers for the `X` slot), the second over
    /// `y_domain`.
    pub fn bipartite_pairs(
        scenario: &MeasurementScenario,
        x_domain: &[String],
        y_domain: &[String],
    ) -> Result<Self, PolytopeError> {
        validate_domain(scenario, x_domain)?;
        validate_domain(scenario, y_domain)?;
        let count =
            checked_vertex_count(scenario.outcomes().len(), x_domain.len() + y_domain.len())?;
        Ok(VertexSet {
            outcomes: scenario.outcomes().to_vec(),
            x_domain: x_domain.to_vec(),
            y_domain: y_domain.to_vec(),
            shared: false,
            count,
        })
    }

    /// Bipartite pairs with the domains cut down to the measurements the
    /// phenomenon actually places in each slot.
    pub fn restricted_pairs<T: Scalar>(p: &Phenomenon<T>) -> Result<Self, PolytopeError> {
        let support = p.setting_support();
        if support.is_empty() {
            return Err(PolytopeError::EmptySupport);
        }
        let mut xs: Vec<String> = support.iter().map(|(x, _)| x.clone()).collect();
        let mut ys: Vec<String> = support.iter().map(|(_, y)| y.clone()).collect();
        xs.sort();
        xs.dedup();
        ys.sort();
        ys.dedup();
        VertexSet::bipartite_pairs(p.scenario(), &xs, &ys)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Whether one shared assignment answers both slots.
    pub fn is_shared(&self) -> bool {
        self.shared
    }

    fn digit(&self, vertex: usize, pos: usize) -> usize {
        let k = self.outcomes.len();
        (vertex / k.pow(pos as u32)) % k
    }

    /// Outcome index the vertex assigns to measurement `m` in the `X` slot.
    pub fn response_x(&self, vertex: usize, m: &str) -> Result<usize, PolytopeError> {
        let pos = self
            .x_domain
            .iter()
            .position(|d| d == m)
            .ok_or_else(|| PolytopeError::OutsideDomain { slot: 'X', measurement: m.to_owned() })?;
        Ok(self.digit(vertex, pos))
    }

    /// Outcome index the vertex assigns to measurement `m` in the `Y` slot.
    pub fn response_y(&self, vertex: usize, m: &str) -> Result<usize, PolytopeError> {
        let pos = self
            .y_domain
            .iter()
            .position(|d| d == m)
            .ok_or_else(|| PolytopeError::OutsideDomain { slot: 'Y', measurement: m.to_owned() })?;
        let offset = if self.shared { 0 } else { self.x_domain.len() };
        Ok(self.digit(vertex, offset + pos))
    }

    /// Human-readable response map, e.g. `x0→0,x1→1 | y0→1,y1→1` (one
    /// shared block for global assignments).
    pub fn label(&self, vertex: usize) -> String {
        let side = |domain: &[String], offset: usize| {
            domain
                .iter()
                .enumerate()
                .map(|(i, m)| format!("{m}→{}", self.outcomes[self.digit(vertex, offset + i)]))
                .collect::<Vec<_>>()
                .join(",")
        };
        if self.shared {
            side(&self.x_domain, 0)
        } else {
            format!("{} | {}", side(&self.x_domain, 0), side(&self.y_domain, self.x_domain.len()))
        }
    }
}

/// A linear functional over conditional tables: `Σ c(a,b,x,y)·P(ab|xy)`
/// compared against an upper bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Inequality<T: Scalar> {
    /// Coefficients keyed by `(a, b, x, y)`.
    pub coefficients: BTreeMap<(String, String, String, String), T>,
    /// The functional is claimed `≤ bound` over the relevant vertex set.
    pub bound: T,
}

impl<T: Scalar> Inequality<T> {
    /// Rebuild the functional over a different scalar (e.g. exact → float).
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Inequality<U> {
        Inequality {
            coefficients: self
                .coefficients
                .iter()
                .map(|(k, v)| (k.clone(), f(v)))
                .collect(),
            bound: f(&self.bound),
        }
    }
}

/// Outcome of a membership test, certificate included. Certificates are
/// re-verified against the phenomenon before being returned.
#[derive(Clone, Debug, PartialEq)]
pub enum MembershipResult<T: Scalar> {
    /// The conditional tables are a convex mixture of the vertices;
    /// `weights[v]` is the mass on vertex `v`.
    Inside { weights: Vec<T> },
    /// No mixture exists. The witness functional separates strictly:
    /// `value` on the phenomenon, at most `witness.bound` on every vertex,
    /// `margin = value − bound > 0`.
    Outside { witness: Inequality<T>, value: T, margin: T },
}

impl<T: Scalar> MembershipResult<T> {
    pub fn is_inside(&self) -> bool {
        matches!(self, MembershipResult::Inside { .. })
    }
}

/// Coordinate frame of a membership problem: the positively weighted
/// setting pairs with, per pair, one row per outcome pair.
struct Frame<T: Scalar> {
    support: Vec<(String, String)>,
    outcomes: Vec<String>,
    /// Flattened conditional tables, support-major then outcome-pair.
    target: Vec<T>,
    /// `matrix[r][v] = 1` iff vertex `v` reproduces coordinate `r`.
    matrix: Vec<Vec<T>>,
}

fn build_frame<T: Scalar>(
    p: &Phenomenon<T>,
    vertices: &VertexSet,
) -> Result<Frame<T>, PolytopeError> {
    let support = p.setting_support();
    if support.is_empty() {
        return Err(PolytopeError::EmptySupport);
    }
    let k = p.scenario().outcomes().len();
    let mut target = Vec::with_capacity(support.len() * k * k);
    let mut matrix = Vec::with_capacity(support.len() * k * k);
    for (x, y) in &support {
        target.extend(p.conditional_table(x, y)?);
        for a in 0..k {
            for b in 0..k {
                let mut row = Vec::with_capacity(vertices.len());
                for v in 0..vertices.len() {
                    let hit =
                        vertices.response_x(v, x)? == a && vertices.response_y(v, y)? == b;
                    row.push(if hit { T::one() } else { T::zero() });
                }
                matrix.push(row);
            }
        }
    }
    Ok(Frame { support, outcomes: p.scenario().outcomes().to_vec(), target, matrix })
}

/// Decide whether the phenomenon's conditional tables lie in the convex
/// hull of the vertex set, returning a verified certificate either way.
pub fn is_factorisable<T: Scalar>(
    p: &Phenomenon<T>,
    vertices: &VertexSet,
) -> Result<MembershipResult<T>, PolytopeError> {
    let frame = build_frame(p, vertices)?;
    let l = vertices.len();
    let eps = T::default_eps();

    // Feasibility system: mixture weights reproduce every coordinate and
    // sum to one.
    let mut a = frame.matrix.clone();
    a.push(vec![T::one(); l]);
    let mut b = frame.target.clone();
    b.push(T::one());
    match simplex::solve_standard(&a, &b, &vec![T::zero(); l]) {
        LpOutcome::Optimal { x: weights, .. } => {
            verify_weights(&frame, &weights, &eps)?;
            Ok(MembershipResult::Inside { weights })
        }
        LpOutcome::Infeasible => {
            let (witness, value, margin) = separating_witness(&frame)?;
            Ok(MembershipResult::Outside { witness, value, margin })
        }
        LpOutcome::Unbounded => Err(PolytopeError::CertificateCheck(
            "feasibility program reported unbounded".to_owned(),
        )),
    }
}

fn verify_weights<T: Scalar>(
    frame: &Frame<T>,
    weights: &[T],
    eps: &T,
) -> Result<(), PolytopeError> {
    let mut total = T::zero();
    for w in weights {
        if sign_within(w, eps) == Ordering::Less {
            return Err(PolytopeError::CertificateCheck("negative mixture weight".to_owned()));
        }
        total = total + w.clone();
    }
    if !is_zero_within(&(total - T::one()), eps) {
        return Err(PolytopeError::CertificateCheck("mixture weights do not sum to one".to_owned()));
    }
    for (r, row) in frame.matrix.iter().enumerate() {
        let mut acc = T::zero();
        for (v, w) in weights.iter().enumerate() {
            if sign_within(&row[v], eps) != Ordering::Equal {
                acc = acc + w.clone();
            }
        }
        if !is_zero_within(&(acc - frame.target[r].clone()), eps) {
            return Err(PolytopeError::CertificateCheck(format!(
                "mixture misses coordinate {r}"
            )));
        }
    }
    Ok(())
}

/// Find a separating functional by maximizing its margin subject to
/// `‖coefficients‖∞ ≤ 1`: maximize `y·p − t` with `y·V(v) ≤ t` on every
/// vertex. Infeasibility of the mixture system guarantees a positive
/// optimum.
fn separating_witness<T: Scalar>(frame: &Frame<T>) -> Result<(Inequality<T>, T, T), PolytopeError> {
    let r_dim = frame.target.len();
    let l_dim = frame.matrix[0].len();
    let eps = T::default_eps();
    let two = T::one() + T::one();

    // Variables: u_r (y_r = u_r − 1), t⁺, t⁻, one slack per vertex row,
    // one slack per box row.
    let n = r_dim + 2 + l_dim + r_dim;
    let mut a: Vec<Vec<T>> = Vec::with_capacity(l_dim + r_dim);
    let mut b: Vec<T> = Vec::with_capacity(l_dim + r_dim);
    for v in 0..l_dim {
        let mut row = vec![T::zero(); n];
        let mut colsum = T::zero();
        for r in 0..r_dim {
            row[r] = frame.matrix[r][v].clone();
            colsum = colsum + frame.matrix[r][v].clone();
        }
        row[r_dim] = T::zero() - T::one();
        row[r_dim + 1] = T::one();
        row[r_dim + 2 + v] = T::one();
        a.push(row);
        b.push(colsum);
    }
    for r in 0..r_dim {
        let mut row = vec![T::zero(); n];
        row[r] = T::one();
        row[r_dim + 2 + l_dim + r] = T::one();
        a.push(row);
        b.push(two.clone());
    }
    let mut c = vec![T::zero(); n];
    for r in 0..r_dim {
        c[r] = T::zero() - frame.target[r].clone();
    }
    c[r_dim] = T::one();
    c[r_dim + 1] = T::zero() - T::one();

    let solution = match simplex::solve_standard(&a, &b, &c) {
        LpOutcome::Optimal { x, .. } => x,
        other => {
            return Err(PolytopeError::CertificateCheck(format!(
                "margin program did not reach an optimum ({other:?})"
            )))
        }
    };
    let y: Vec<T> = (0..r_dim).map(|r| solution[r].clone() - T::one()).collect();

    // Re-derive the bound from the vertices themselves rather than trusting
    // the program's `t`.
    let mut bound: Option<T> = None;
    for v in 0..l_dim {
        let mut acc = T::zero();
        for r in 0..r_dim {
            if sign_within(&frame.matrix[r][v], &eps) != Ordering::Equal {
                acc = acc + y[r].clone();
            }
        }
        bound = Some(match bound {
            None => acc,
            Some(best) => {
                if acc > best {
                    acc
                } else {
                    best
                }
            }
        });
    }
    let bound = bound.expect("vertex sets are never empty");
    let mut value = T::zero();
    for r in 0..r_dim {
        value = value + y[r].clone() * frame.target[r].clone();
    }
    let margin = value.clone() - bound.clone();
    if sign_within(&margin, &eps) != Ordering::Greater {
        return Err(PolytopeError::CertificateCheck(
            "separating margin is not strictly positive".to_owned(),
        ));
    }

    let mut coefficients = BTreeMap::new();
    let mut r = 0;
    for (x, yv) in &frame.support {
        for a in &frame.outcomes {
            for b in &frame.outcomes {
                if sign_within(&y[r], &eps) != Ordering::Equal {
                    coefficients
                        .insert((a.clone(), b.clone(), x.clone(), yv.clone()), y[r].clone());
                }
                r += 1;
            }
        }
    }
    Ok((Inequality { coefficients, bound }, value, margin))
}

/// Evaluate a functional on a phenomenon. Zero coefficients are skipped;
/// any remaining coefficient whose setting pair carries no weight makes the
/// conditional — and the value — undefined.
pub fn evaluate_inequality<T: Scalar>(
    q: &Inequality<T>,
    p: &Phenomenon<T>,
) -> Result<T, PolytopeError> {
    let eps = p.dist().eps().clone();
    let mut acc = T::zero();
    for ((a, b, x, y), coeff) in &q.coefficients {
        if is_zero_within(coeff, &eps) {
            continue;
        }
        let w = p.setting_weight(x, y)?;
        if is_zero_within(&w, &eps) {
            return Err(PolytopeError::UndefinedConditional { x: x.clone(), y: y.clone() });
        }
        let sliced = p
            .dist()
            .condition(&[("X", x.as_str()), ("Y", y.as_str())])
            .map_err(ScenarioError::from)?;
        let cond = sliced
            .event_weight(&[("A", a.as_str()), ("B", b.as_str())])
            .map_err(ScenarioError::from)?;
        acc = acc + coeff.clone() * cond;
    }
    Ok(acc)
}

/// Maximum of the functional over every vertex in the set — the tight
/// classical bound for that vertex family.
pub fn classical_bound<T: Scalar>(
    q: &Inequality<T>,
    vertices: &VertexSet,
) -> Result<T, PolytopeError> {
    let mut best: Option<T> = None;
    for v in 0..vertices.len() {
        let mut acc = T::zero();
        for ((a, b, x, y), coeff) in &q.coefficients {
            let ai = vertices
                .outcomes
                .iter()
                .position(|o| o == a)
                .ok_or_else(|| PolytopeError::UnknownOutcome(a.clone()))?;
            let bi = vertices
                .outcomes
                .iter()
                .position(|o| o == b)
                .ok_or_else(|| PolytopeError::UnknownOutcome(b.clone()))?;
            if vertices.response_x(v, x)? == ai && vertices.response_y(v, y)? == bi {
                acc = acc + coeff.clone();
            }
        }
        best = Some(match best {
            None => acc,
            Some(cur) => {
                if acc > cur {
                    acc
                } else {
                    cur
                }
            }
        });
    }
    best.ok_or(PolytopeError::EmptyDomain)
}

#[cfg(test)]
mod tests {
    use super::builders::*;
    use super::*;
    use crate::scalar::{rat, Rat};
    use proptest::prelude::*;

    #[test]
    fn vertex_sets_count_and_respond() {
        let s = chsh_scenario();
        let global = VertexSet::global_assignments(&s).unwrap();
        assert_eq!(global.len(), 16);
        assert!(global.is_shared());
        let pairs = VertexSet::restricted_pairs(&pr_box()).unwrap();
        assert_eq!(pairs.len(), 16);
        assert!(!pairs.is_shared());
        // Digit layout: first domain entry varies fastest.
        assert_eq!(pairs.response_x(1, "x0").unwrap(), 1);
        assert_eq!(pairs.response_x(1, "x1").unwrap(), 0);
        assert_eq!(pairs.response_y(4, "y0").unwrap(), 1);
        assert!(pairs.response_x(0, "y0").is_err());
        assert!(global.response_x(0, "q").is_err());
        assert_eq!(pairs.label(6), "x0→0,x1→1 | y0→1,y1→0");
    }

    #[test]
    fn oversized_vertex_sets_are_rejected() {
        let ms: Vec<String> = (0..21).map(|i| format!("m{i}")).collect();
        let os = vec!["0".to_owned(), "1".to_owned()];
        let ctx = vec![vec!["m0".to_owned(), "m1".to_owned()]];
        let s = MeasurementScenario::new(&ms, &os, &ctx, false).unwrap();
        assert!(matches!(
            VertexSet::global_assignments(&s),
            Err(PolytopeError::Explosion { .. })
        ));
    }

    #[test]
    fn pr_box_lies_outside_with_a_strict_witness() {
        let p = pr_box();
        let vs = VertexSet::restricted_pairs(&p).unwrap();
        match is_factorisable(&p, &vs).unwrap() {
            MembershipResult::Outside { witness, value, margin } => {
                assert!(margin > rat(1, 2));
                assert_eq!(evaluate_inequality(&witness, &p).unwrap(), value);
                assert_eq!(classical_bound(&witness, &vs).unwrap(), witness.bound);
                assert_eq!(value - witness.bound, margin);
            }
            MembershipResult::Inside { .. } => panic!("expected exclusion"),
        }
    }

    #[test]
    fn uniform_box_is_a_mixture() {
        let p = uniform_box();
        let vs = VertexSet::restricted_pairs(&p).unwrap();
        match is_factorisable(&p, &vs).unwrap() {
            MembershipResult::Inside { weights } => {
                assert_eq!(weights.len(), 16);
                let total = weights.into_iter().fold(rat(0, 1), |acc, w| acc + w);
                assert_eq!(total, rat(1, 1));
            }
            MembershipResult::Outside { .. } => panic!("expected membership"),
        }
    }

    #[test]
    fn quantum_maximal_box_is_outside_in_float_mode() {
        let p = tsirelson_box();
        let vs = VertexSet::restricted_pairs(&p).unwrap();
        match is_factorisable(&p, &vs).unwrap() {
            MembershipResult::Outside { margin, .. } => assert!(margin > 0.5),
            MembershipResult::Inside { .. } => panic!("expected exclusion"),
        }
    }

    #[test]
    fn five_cycle_anticorrelation_splits_the_vertex_families() {
        let p = kcbs_anticorrelated();
        let global = VertexSet::global_assignments(p.scenario()).unwrap();
        assert!(!is_factorisable(&p, &global).unwrap().is_inside());
        let pairs = VertexSet::restricted_pairs(&p).unwrap();
        assert!(is_factorisable(&p, &pairs).unwrap().is_inside());
    }

    #[test]
    fn membership_requires_support() {
        let q = chsh_functional();
        // The uniform box has full support, so every coefficient pair is
        // defined; dropping the (x1, y1) context from the phenomenon makes
        // the functional undefined.
        let s = chsh_scenario();
        let p = uniform_settings_box(
            &s,
            &[("x0", "y0"), ("x0", "y1"), ("x1", "y0")],
            |_, _, _, _| rat(1, 4),
        );
        assert!(matches!(
            evaluate_inequality(&q, &p),
            Err(PolytopeError::UndefinedConditional { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Any convex mixture of pair vertices must be recognized as such.
        #[test]
        fn mixtures_of_pair_vertices_are_recognized(
            raw in proptest::collection::vec(1u8..=16, 16)
        ) {
            let s = chsh_scenario();
            let xs = vec!["x0".to_owned(), "x1".to_owned()];
            let ys = vec!["y0".to_owned(), "y1".to_owned()];
            let vs = VertexSet::bipartite_pairs(&s, &xs, &ys).unwrap();
            let total: i64 = raw.iter().map(|&w| i64::from(w)).sum();
            let mu: Vec<Rat> = raw.iter().map(|&w| rat(i64::from(w), total)).collect();
            let p = uniform_settings_box(&s, &CHSH_SUPPORT, |x, y, a, b| {
                let mut acc = rat(0, 1);
                for v in 0..vs.len() {
                    if vs.response_x(v, x).unwrap() == a && vs.response_y(v, y).unwrap() == b {
                        acc = acc + mu[v].clone();
                    }
                }
                acc
            });
            prop_assert!(is_factorisable(&p, &vs).unwrap().is_inside());
        }
    }
}
