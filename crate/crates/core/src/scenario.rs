//! Measurement scenarios, phenomena, and the no-disturbance conditions.
//!
//! A scenario fixes a finite measurement set, an outcome set shared by both
//! outcome slots, and a family of two-element compatibility contexts. A
//! phenomenon is a joint distribution over slots `A`, `B` (outcomes) and
//! `X`, `Y` (measurements) whose setting support stays inside the context
//! family; slots are ordered, so a context `{x, y}` may be exercised as
//! `(X=x, Y=y)`, `(X=y, Y=x)`, or both.

use crate::dag::{Dag, DagError, NodeKind};
use crate::prob::{is_compatible, Alphabet, JointDistribution, ProbError};
use crate::scalar::{is_zero_within, Scalar};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("context {{{}}} does not have exactly two elements", .0.join(","))]
    NonBinaryContext(Vec<String>),
    #[error("self-context {{{0},{0}}} requires the repeats flag")]
    SelfContext(String),
    #[error("unknown measurement `{0}`")]
    UnknownMeasurement(String),
    #[error("measurement list has duplicate `{0}`")]
    DuplicateMeasurement(String),
    #[error("outcome list has duplicate `{0}`")]
    DuplicateOutcome(String),
    #[error("scenario needs at least one measurement and one outcome")]
    EmptyScenario,
    #[error("phenomenon must range over variables A, B, X, Y; {0}")]
    VariableMismatch(String),
    #[error("variable `{0}` does not carry the scenario alphabet")]
    AlphabetMismatch(String),
    #[error("settings (X={x}, Y={y}) carry weight but {{{x},{y}}} is not a context")]
    Support { x: String, y: String },
    #[error("causal model is malformed: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Dag(#[from] DagError),
}

/// A measurement scenario: measurements, shared outcome set, and two-element
/// compatibility contexts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementScenario {
    measurements: Vec<String>,
    outcomes: Vec<String>,
    contexts: BTreeSet<(String, String)>,
    allow_repeats: bool,
}

impl MeasurementScenario {
    /// Validate and build. Each context must name exactly two known
    /// measurements; `{m, m}` self-contexts are rejected unless
    /// `allow_repeats` is set. Contexts are stored as unordered sets.
    pub fn new<S: AsRef<str>>(
        measurements: &[S],
        outcomes: &[S],
        contexts: &[Vec<S>],
        allow_repeats: bool,
    ) -> Result<Self, ScenarioError> {
        let measurements: Vec<String> = measurements.iter().map(|s| s.as_ref().to_owned()).collect();
        let outcomes: Vec<String> = outcomes.iter().map(|s| s.as_ref().to_owned()).collect();
        if measurements.is_empty() || outcomes.is_empty() {
            return Err(ScenarioError::EmptyScenario);
        }
        let mut seen = BTreeSet::new();
        for m in &measurements {
            if !seen.insert(m.clone()) {
                return Err(ScenarioError::DuplicateMeasurement(m.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for o in &outcomes {
            if !seen.insert(o.clone()) {
                return Err(ScenarioError::DuplicateOutcome(o.clone()));
            }
        }
        let known: BTreeSet<&str> = measurements.iter().map(String::as_str).collect();
        let mut ctx = BTreeSet::new();
        for c in contexts {
            let names: Vec<String> = c.iter().map(|s| s.as_ref().to_owned()).collect();
            if names.len() != 2 {
                return Err(ScenarioError::NonBinaryContext(names));
            }
            for m in &names {
                if !known.contains(m.as_str()) {
                    return Err(ScenarioError::UnknownMeasurement(m.clone()));
                }
            }
            if names[0] == names[1] && !allow_repeats {
                return Err(ScenarioError::SelfContext(names[0].clone()));
            }
            let (a, b) = if names[0] <= names[1] {
                (names[0].clone(), names[1].clone())
            } else {
                (names[1].clone(), names[0].clone())
            };
            ctx.insert((a, b));
        }
        Ok(MeasurementScenario { measurements, outcomes, contexts: ctx, allow_repeats })
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    /// Contexts as canonically ordered pairs, sorted.
    pub fn contexts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.contexts.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn allow_repeats(&self) -> bool {
        self.allow_repeats
    }

    /// Whether `{x, y}` (unordered) is a context.
    pub fn is_context(&self, x: &str, y: &str) -> bool {
        let key = if x <= y { (x.to_owned(), y.to_owned()) } else { (y.to_owned(), x.to_owned()) };
        self.contexts.contains(&key)
    }

    /// Alphabet for a measurement slot (`X` or `Y`): the full measurement
    /// list, in scenario order.
    pub fn measurement_alphabet(&self, name: &str) -> Alphabet {
        Alphabet::new(name, self.measurements.iter().cloned()).expect("validated nonempty")
    }

    /// Alphabet for an outcome slot (`A` or `B`).
    pub fn outcome_alphabet(&self, name: &str) -> Alphabet {
        Alphabet::new(name, self.outcomes.iter().cloned()).expect("validated nonempty")
    }
}

/// A partition of the measurements into party slots such that no context
/// stays within one part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BellPartition {
    pub parts: Vec<Vec<String>>,
}

/// Try to split the measurements into `k` parts with every context crossing
/// parts — a proper `k`-coloring of the compatibility graph. Deterministic:
/// measurements are colored in scenario order with the smallest feasible
/// color, backtracking if needed; the first complete coloring wins. Returns
/// `None` when impossible (odd compatibility cycles for `k = 2`,
/// self-contexts for any `k`).
pub fn is_bell_scenario(s: &MeasurementScenario, k: usize) -> Option<BellPartition> {
    if k == 0 {
        return None;
    }
    let ms = s.measurements();
    let n = ms.len();
    // Self-contexts make the compatibility graph reflexive: uncolorable.
    for (a, b) in s.contexts() {
        if a == b {
            return None;
        }
    }
    let mut adj = vec![BTreeSet::new(); n];
    let pos = |m: &str| ms.iter().position(|x| x == m).expect("validated");
    for (a, b) in s.contexts() {
        let (i, j) = (pos(a), pos(b));
        adj[i].insert(j);
        adj[j].insert(i);
    }
    let mut color = vec![usize::MAX; n];
    let mut v = 0usize;
    let mut next_try = vec![0usize; n];
    loop {
        if v == n {
            let mut parts = vec![Vec::new(); k];
            for (i, &c) in color.iter().enumerate() {
                parts[c].push(ms[i].clone());
            }
            return Some(BellPartition { parts });
        }
        let mut placed = false;
        for c in next_try[v]..k {
            if adj[v].iter().all(|&u| color[u] != c) {
                color[v] = c;
                next_try[v] = c + 1;
                placed = true;
                break;
            }
        }
        if placed {
            v += 1;
            if v < n {
                next_try[v] = 0;
            }
        } else {
            // Backtrack.
            next_try[v] = 0;
            color[v] = usize::MAX;
            if v == 0 {
                return None;
            }
            v -= 1;
            color[v] = usize::MAX;
        }
    }
}

/// A joint distribution over `A`, `B`, `X`, `Y` constrained to a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Phenomenon<T: Scalar> {
    scenario: MeasurementScenario,
    dist: JointDistribution<T>,
}

impl<T: Scalar> Phenomenon<T> {
    /// Validate and build: the distribution must range over exactly
    /// `A, B, X, Y`, the outcome slots must carry the scenario's outcome
    /// alphabet and the measurement slots its measurement alphabet, and
    /// every positively weighted setting pair must be a context.
    pub fn new(scenario: MeasurementScenario, dist: JointDistribution<T>) -> Result<Self, ScenarioError> {
        let want: BTreeSet<&str> = ["A", "B", "X", "Y"].into_iter().collect();
        let got: BTreeSet<&str> = dist.vars().iter().map(|v| v.name()).collect();
        if want != got {
            return Err(ScenarioError::VariableMismatch(format!(
                "got {{{}}}",
                got.into_iter().collect::<Vec<_>>().join(",")
            )));
        }
        for slot in ["A", "B"] {
            let alpha = &dist.vars()[dist.var_position(slot).expect("checked")];
            if alpha.values() != scenario.outcomes() {
                return Err(ScenarioError::AlphabetMismatch(slot.to_owned()));
            }
        }
        for slot in ["X", "Y"] {
            let alpha = &dist.vars()[dist.var_position(slot).expect("checked")];
            if alpha.values() != scenario.measurements() {
                return Err(ScenarioError::AlphabetMismatch(slot.to_owned()));
            }
        }
        let settings = dist.marginalize(&["X", "Y"])?;
        for idx in 0..settings.weights().len() {
            let w = &settings.weights()[idx];
            if is_zero_within(w, dist.eps()) {
                continue;
            }
            let a = settings.assignment_at(idx);
            let xpos = settings.var_position("X").expect("kept");
            let ypos = settings.var_position("Y").expect("kept");
            let x = scenario.measurements()[a[xpos]].clone();
            let y = scenario.measurements()[a[ypos]].clone();
            if !scenario.is_context(&x, &y) {
                return Err(ScenarioError::Support { x, y });
            }
        }
        Ok(Phenomenon { scenario, dist })
    }

    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn dist(&self) -> &JointDistribution<T> {
        &self.dist
    }

    /// Weight of the setting pair `(X=x, Y=y)`.
    pub fn setting_weight(&self, x: &str, y: &str) -> Result<T, ScenarioError> {
        Ok(self.dist.event_weight(&[("X", x), ("Y", y)])?)
    }

    /// Ordered setting pairs with positive weight, sorted.
    pub fn setting_support(&self) -> Vec<(String, String)> {
        let settings = self.dist.marginalize(&["X", "Y"]).expect("slots exist");
        let xpos = settings.var_position("X").expect("kept");
        let ypos = settings.var_position("Y").expect("kept");
        let mut out = Vec::new();
        for idx in 0..settings.weights().len() {
            if is_zero_within(&settings.weights()[idx], self.dist.eps()) {
                continue;
            }
            let a = settings.assignment_at(idx);
            out.push((
                self.scenario.measurements()[a[xpos]].clone(),
                self.scenario.measurements()[a[ypos]].clone(),
            ));
        }
        out.sort();
        out
    }

    /// Conditional table `P(A=a, B=b | X=x, Y=y)` indexed `a * |O| + b` in
    /// outcome order. Fails if the setting pair carries no weight.
    pub fn conditional_table(&self, x: &str, y: &str) -> Result<Vec<T>, ScenarioError> {
        let sliced = self.dist.condition(&[("X", x), ("Y", y)])?;
        let os = self.scenario.outcomes();
        let mut out = Vec::with_capacity(os.len() * os.len());
        for a in os {
            for b in os {
                out.push(sliced.event_weight(&[("A", a.as_str()), ("B", b.as_str())])?);
            }
        }
        Ok(out)
    }
}

/// One detected disturbance: the conditional distribution of an outcome slot
/// shifts with the far setting.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceViolation<T: Scalar> {
    /// The outcome slot whose conditional moved (`A` or `B`).
    pub outcome_slot: String,
    /// The near-side measurement held fixed.
    pub measurement: String,
    /// The two far-side settings exhibiting the largest shift.
    pub far_settings: (String, String),
    /// `max_o |P(o | m, far_1) - P(o | m, far_2)|`.
    pub deviation: T,
}

/// Result of the no-disturbance test.
#[derive(Clone, Debug, PartialEq)]
pub struct NoDisturbanceReport<T: Scalar> {
    pub holds: bool,
    pub violations: Vec<DisturbanceViolation<T>>,
}

/// Check that each outcome slot's conditional is unaffected by the other
/// party's setting: `(A ⫫ Y | X)` and `(B ⫫ X | Y)` restricted to settings
/// with positive weight. One violation is reported per (slot, near
/// measurement) with the worst far-setting pair.
pub fn no_disturbance<T: Scalar>(p: &Phenomenon<T>) -> NoDisturbanceReport<T> {
    let mut violations = Vec::new();
    let support = p.setting_support();
    let eps = p.dist().eps().clone();
    let mut check_slot = |slot: &str, near: &str, far: &str| {
        // Enumerate near values in scenario order; for each, all far values
        // co-occurring with it.
        for m in p.scenario().measurements() {
            let fars: Vec<&String> = support
                .iter()
                .filter_map(|(x, y)| {
                    let (n, f) = if near == "X" { (x, y) } else { (y, x) };
                    (n == m).then_some(f)
                })
                .collect();
            if fars.len() < 2 {
                continue;
            }
            let mut worst: Option<DisturbanceViolation<T>> = None;
            for i in 0..fars.len() {
                for j in (i + 1)..fars.len() {
                    let c1 = p
                        .dist()
                        .condition(&[(near, m.as_str()), (far, fars[i].as_str())])
                        .expect("support checked");
                    let c2 = p
                        .dist()
                        .condition(&[(near, m.as_str()), (far, fars[j].as_str())])
                        .expect("support checked");
                    for o in p.scenario().outcomes() {
                        let w1 = c1.event_weight(&[(slot, o.as_str())]).expect("outcome exists");
                        let w2 = c2.event_weight(&[(slot, o.as_str())]).expect("outcome exists");
                        let dev = (w1 - w2).abs();
                        if is_zero_within(&dev, &eps) {
                            continue;
                        }
                        let better =
                            worst.as_ref().map_or(true, |w| dev > w.deviation);
                        if better {
                            worst = Some(DisturbanceViolation {
                                outcome_slot: slot.to_owned(),
                                measurement: m.clone(),
                                far_settings: (fars[i].clone(), fars[j].clone()),
                                deviation: dev,
                            });
                        }
                    }
                }
            }
            if let Some(v) = worst {
                violations.push(v);
            }
        }
    };
    check_slot("A", "X", "Y");
    check_slot("B", "Y", "X");
    NoDisturbanceReport { holds: violations.is_empty(), violations }
}

/// A DAG over the four observed slots plus latents, together with a full
/// joint (latents included) compatible with it.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalModel<T: Scalar> {
    graph: Dag,
    joint: JointDistribution<T>,
}

impl<T: Scalar> CausalModel<T> {
    /// Validate and build: the graph must contain observed nodes
    /// `A, B, X, Y` with every other node latent, the joint must range over
    /// exactly the graph's nodes, and it must satisfy the graph's Markov
    /// condition (checked exactly).
    pub fn new(graph: Dag, joint: JointDistribution<T>) -> Result<Self, ScenarioError> {
        for slot in ["A", "B", "X", "Y"] {
            match graph.node(slot) {
                Some(n) if n.kind == NodeKind::Observed => {}
                Some(_) => {
                    return Err(ScenarioError::ModelMismatch(format!("node `{slot}` must be observed")))
                }
                None => {
                    return Err(ScenarioError::ModelMismatch(format!("graph is missing node `{slot}`")))
                }
            }
        }
        for node in graph.nodes() {
            let is_slot = matches!(node.name.as_str(), "A" | "B" | "X" | "Y");
            if !is_slot && node.kind != NodeKind::Latent {
                return Err(ScenarioError::ModelMismatch(format!(
                    "extra observed node `{}`; only A, B, X, Y may be observed",
                    node.name
                )));
            }
        }
        if !is_compatible(&joint, &graph)? {
            return Err(ScenarioError::ModelMismatch(
                "joint distribution is not compatible with the graph".to_owned(),
            ));
        }
        Ok(CausalModel { graph, joint })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn joint(&self) -> &JointDistribution<T> {
        &self.joint
    }

    /// Latent node names, sorted.
    pub fn latents(&self) -> Vec<&str> {
        self.graph
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::Latent)
            .map(|n| n.name.as_str())
            .collect()
    }
}

/// Marginalize a model onto its observed slots and validate the result
/// against `scenario` (including the support constraint).
pub fn phenomenon_from_model<T: Scalar>(
    model: &CausalModel<T>,
    scenario: &MeasurementScenario,
) -> Result<Phenomenon<T>, ScenarioError> {
    let marginal = model.joint().marginalize(&["A", "B", "X", "Y"])?;
    Phenomenon::new(scenario.clone(), marginal)
}
