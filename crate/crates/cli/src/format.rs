//! File formats for the command-line tool.
//!
//! Exact values travel as `"num/den"` strings so files are bit-identical
//! across platforms; a phenomenon file may instead declare `"mode": "float"`
//! and carry plain JSON numbers. Graphs, scenarios, and inequality
//! functionals are exact-only.
//!
//! Distribution tables are lists of `{"assignment": {...}, "weight": ...}`
//! rows; cells left out are zero. A bare table infers its variables
//! lexicographically and each variable's values in first-appearance order,
//! while phenomenon files take alphabets from their scenario and model files
//! declare them explicitly (latents appear in no scenario).

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use nofinetune_core::{
    Alphabet, CausalModel, Dag, DagError, Inequality, JointDistribution, MeasurementScenario,
    NodeId, NodeKind, Phenomenon, ProbError, Rat, Scalar, ScenarioError,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unreadable input: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad rational `{0}`: expected \"num/den\" or \"num\"")]
    Rational(String),
    #[error("bad table: {0}")]
    Table(String),
    #[error("bad graph: {0}")]
    Graph(#[from] DagError),
    #[error("bad distribution: {0}")]
    Distribution(#[from] ProbError),
    #[error("invalid for its scenario: {0}")]
    Scenario(#[from] ScenarioError),
}

pub fn rat_from_str(s: &str) -> Result<Rat, FormatError> {
    Rat::from_str(s.trim()).map_err(|_| FormatError::Rational(s.to_owned()))
}

/// `"num/den"`, or just `"num"` for integers — both re-parse.
pub fn rat_to_str(r: &Rat) -> String {
    r.to_string()
}

// ---------------------------------------------------------------------------
// Graphs: {"nodes":[{"name":"A","kind":"observed"}],"edges":[["X","A"]]}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphFile {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphNode {
    pub name: String,
    pub kind: NodeKind,
}

impl GraphFile {
    pub fn to_dag(&self) -> Result<Dag, FormatError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeId { name: n.name.clone(), kind: n.kind })
            .collect();
        Ok(Dag::build(nodes, &self.edges)?)
    }

    pub fn from_dag(g: &Dag) -> Self {
        GraphFile {
            nodes: g
                .nodes()
                .iter()
                .map(|n| GraphNode { name: n.name.clone(), kind: n.kind })
                .collect(),
            edges: g.edges(),
        }
    }
}

// ---------------------------------------------------------------------------
// Distribution tables: [{"assignment":{"A":"0",...},"weight":"3/16"}, ...]

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistRow {
    pub assignment: BTreeMap<String, String>,
    pub weight: Value,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumberMode {
    #[default]
    Exact,
    Float,
}

fn weight_to_rat(w: &Value) -> Result<Rat, FormatError> {
    match w {
        Value::String(s) => rat_from_str(s),
        other => Err(FormatError::Table(format!(
            "exact tables carry weights as \"num/den\" strings, found {other}"
        ))),
    }
}

fn weight_to_f64(w: &Value) -> Result<f64, FormatError> {
    match w {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| FormatError::Table(format!("weight {n} is not a finite float"))),
        other => Err(FormatError::Table(format!(
            "float tables carry weights as plain numbers, found {other}"
        ))),
    }
}

fn rat_to_weight(r: &Rat) -> Value {
    Value::String(rat_to_str(r))
}

fn f64_to_weight(x: &f64) -> Value {
    serde_json::Number::from_f64(*x).map(Value::Number).expect("finite probability weight")
}

/// Assemble a joint distribution over `vars` from sparse rows. Every row
/// must assign exactly the declared variables to declared values; duplicate
/// assignments are rejected; missing cells are zero.
fn dist_from_rows<T: Scalar>(
    vars: Vec<Alphabet>,
    rows: &[DistRow],
    weight: impl Fn(&Value) -> Result<T, FormatError>,
) -> Result<JointDistribution<T>, FormatError> {
    let size = vars.iter().map(Alphabet::card).product();
    let mut weights = vec![T::zero(); size];
    let mut seen = vec![false; size];
    for row in rows {
        if row.assignment.len() != vars.len() {
            return Err(FormatError::Table(format!(
                "row assigns {} variables, table declares {}",
                row.assignment.len(),
                vars.len()
            )));
        }
        let mut idx = 0usize;
        for var in &vars {
            let value = row.assignment.get(var.name()).ok_or_else(|| {
                FormatError::Table(format!("row is missing variable `{}`", var.name()))
            })?;
            let vi = var.value_index(value).ok_or_else(|| {
                FormatError::Table(format!("`{value}` is not a value of `{}`", var.name()))
            })?;
            idx = idx * var.card() + vi;
        }
        if seen[idx] {
            return Err(FormatError::Table("duplicate assignment row".to_owned()));
        }
        seen[idx] = true;
        weights[idx] = weight(&row.weight)?;
    }
    Ok(JointDistribution::from_weights(vars, weights)?)
}

/// Emit the nonzero cells of a joint in canonical index order.
fn rows_from_dist<T: Scalar>(
    p: &JointDistribution<T>,
    weight: impl Fn(&T) -> Value,
) -> Vec<DistRow> {
    let vars = p.vars();
    let mut rows = Vec::new();
    for (idx, w) in p.weights().iter().enumerate() {
        if *w == T::zero() {
            continue;
        }
        let assignment = p
            .assignment_at(idx)
            .into_iter()
            .zip(vars)
            .map(|(vi, var)| (var.name().to_owned(), var.values()[vi].clone()))
            .collect();
        rows.push(DistRow { assignment, weight: weight(w) });
    }
    rows
}

/// Infer variables (lexicographic) and their values (first appearance) from
/// a bare table, then assemble it. Exact weights only.
pub fn bare_table_to_dist(rows: &[DistRow]) -> Result<JointDistribution<Rat>, FormatError> {
    let first = rows
        .first()
        .ok_or_else(|| FormatError::Table("table has no rows".to_owned()))?;
    let names: Vec<&String> = first.assignment.keys().collect();
    let mut values: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
    for row in rows {
        let row_names: Vec<&String> = row.assignment.keys().collect();
        if row_names != names {
            return Err(FormatError::Table(
                "rows disagree on the variable set".to_owned(),
            ));
        }
        for (name, value) in &row.assignment {
            let vs = values.entry(name).or_default();
            if !vs.contains(&value) {
                vs.push(value);
            }
        }
    }
    let vars: Vec<Alphabet> = names
        .iter()
        .map(|n| Alphabet::new(n.as_str(), values[*n].iter().map(|v| v.as_str())))
        .collect::<Result<_, _>>()
        .map_err(FormatError::Distribution)?;
    dist_from_rows(vars, rows, weight_to_rat)
}

pub fn bare_table_from_dist(p: &JointDistribution<Rat>) -> Vec<DistRow> {
    rows_from_dist(p, rat_to_weight)
}

// ---------------------------------------------------------------------------
// Scenarios: {"measurements":[...],"outcomes":[...],"contexts":[["m0","m1"],...]}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScenarioFile {
    pub measurements: Vec<String>,
    pub outcomes: Vec<String>,
    pub contexts: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_repeats: bool,
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<MeasurementScenario, FormatError> {
        let contexts: Vec<Vec<String>> = self
            .contexts
            .iter()
            .map(|(x, y)| vec![x.clone(), y.clone()])
            .collect();
        Ok(MeasurementScenario::new(
            &self.measurements,
            &self.outcomes,
            &contexts,
            self.allow_repeats,
        )?)
    }

    pub fn from_scenario(s: &MeasurementScenario) -> Self {
        ScenarioFile {
            measurements: s.measurements().to_vec(),
            outcomes: s.outcomes().to_vec(),
            contexts: s.contexts().map(|(x, y)| (x.to_owned(), y.to_owned())).collect(),
            allow_repeats: s.allow_repeats(),
        }
    }
}

// ---------------------------------------------------------------------------
// Phenomena: a scenario plus the joint table over A, B, X, Y. Alphabets come
// from the scenario, so zero cells may be omitted.

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PhenomenonFile {
    pub scenario: ScenarioFile,
    #[serde(default)]
    pub mode: NumberMode,
    pub table: Vec<DistRow>,
}

fn phenomenon_vars(s: &MeasurementScenario) -> Vec<Alphabet> {
    vec![
        s.outcome_alphabet("A"),
        s.outcome_alphabet("B"),
        s.measurement_alphabet("X"),
        s.measurement_alphabet("Y"),
    ]
}

impl PhenomenonFile {
    pub fn to_exact(&self) -> Result<Phenomenon<Rat>, FormatError> {
        if self.mode != NumberMode::Exact {
            return Err(FormatError::Table(
                "file declares float mode; this command needs exact data".to_owned(),
            ));
        }
        let scenario = self.scenario.to_scenario()?;
        let dist = dist_from_rows(phenomenon_vars(&scenario), &self.table, weight_to_rat)?;
        Ok(Phenomenon::new(scenario, dist)?)
    }

    pub fn to_float(&self) -> Result<Phenomenon<f64>, FormatError> {
        let scenario = self.scenario.to_scenario()?;
        let dist = match self.mode {
            NumberMode::Float => {
                dist_from_rows(phenomenon_vars(&scenario), &self.table, weight_to_f64)?
            }
            // Exact tables embed losslessly enough for float commands.
            NumberMode::Exact => {
                let exact = dist_from_rows(phenomenon_vars(&scenario), &self.table, weight_to_rat)?;
                let weights = exact.weights().iter().map(nofinetune_core::scalar::rat_to_f64);
                JointDistribution::from_weights(phenomenon_vars(&scenario), weights.collect())?
            }
        };
        Ok(Phenomenon::new(scenario, dist)?)
    }

    pub fn from_exact(p: &Phenomenon<Rat>) -> Self {
        PhenomenonFile {
            scenario: ScenarioFile::from_scenario(p.scenario()),
            mode: NumberMode::Exact,
            table: rows_from_dist(p.dist(), rat_to_weight),
        }
    }

    pub fn from_float(p: &Phenomenon<f64>) -> Self {
        PhenomenonFile {
            scenario: ScenarioFile::from_scenario(p.scenario()),
            mode: NumberMode::Float,
            table: rows_from_dist(p.dist(), f64_to_weight),
        }
    }
}

// ---------------------------------------------------------------------------
// Causal models: graph, explicit variable alphabets (latents appear in no
// scenario), and the full joint. Exact-only.

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VariableDecl {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub graph: GraphFile,
    pub variables: Vec<VariableDecl>,
    pub joint: Vec<DistRow>,
}

impl ModelFile {
    pub fn to_model(&self) -> Result<CausalModel<Rat>, FormatError> {
        let graph = self.graph.to_dag()?;
        let declared: BTreeSet<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        let nodes: BTreeSet<&str> = graph.nodes().iter().map(|n| n.name.as_str()).collect();
        if declared != nodes {
            return Err(FormatError::Table(format!(
                "variable declarations {{{}}} do not match graph nodes {{{}}}",
                self.variables.iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(","),
                nodes.into_iter().collect::<Vec<_>>().join(","),
            )));
        }
        let vars: Vec<Alphabet> = self
            .variables
            .iter()
            .map(|v| Alphabet::new(v.name.as_str(), v.values.iter().map(|s| s.as_str())))
            .collect::<Result<_, _>>()
            .map_err(FormatError::Distribution)?;
        let joint = dist_from_rows(vars, &self.joint, weight_to_rat)?;
        Ok(CausalModel::new(graph, joint)?)
    }

    pub fn from_model(m: &CausalModel<Rat>) -> Self {
        ModelFile {
            graph: GraphFile::from_dag(m.graph()),
            variables: m
                .joint()
                .vars()
                .iter()
                .map(|a| VariableDecl { name: a.name().to_owned(), values: a.values().to_vec() })
                .collect(),
            joint: rows_from_dist(m.joint(), rat_to_weight),
        }
    }
}

// ---------------------------------------------------------------------------
// Inequalities: {"coefficients":[{"a":"0","b":"0","x":"x0","y":"y0","c":"1"},...],"bound":"2"}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoeffRow {
    pub a: String,
    pub b: String,
    pub x: String,
    pub y: String,
    pub c: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InequalityFile {
    pub coefficients: Vec<CoeffRow>,
    pub bound: String,
}

impl InequalityFile {
    pub fn to_inequality(&self) -> Result<Inequality<Rat>, FormatError> {
        let mut coefficients = BTreeMap::new();
        for row in &self.coefficients {
            let key = (row.a.clone(), row.b.clone(), row.x.clone(), row.y.clone());
            if coefficients.insert(key, rat_from_str(&row.c)?).is_some() {
                return Err(FormatError::Table(format!(
                    "duplicate coefficient for ({},{},{},{})",
                    row.a, row.b, row.x, row.y
                )));
            }
        }
        Ok(Inequality { coefficients, bound: rat_from_str(&self.bound)? })
    }

    pub fn from_inequality(q: &Inequality<Rat>) -> Self {
        InequalityFile {
            coefficients: q
                .coefficients
                .iter()
                .map(|((a, b, x, y), c)| CoeffRow {
                    a: a.clone(),
                    b: b.clone(),
                    x: x.clone(),
                    y: y.clone(),
                    c: rat_to_str(c),
                })
                .collect(),
            bound: rat_to_str(&q.bound),
        }
    }
}

/// Inequality as a JSON value with a caller-chosen scalar rendering, for
/// embedding float-mode witnesses in command output.
pub fn inequality_to_value<T: Scalar>(
    q: &Inequality<T>,
    render: impl Fn(&T) -> Value,
) -> Value {
    let coefficients: Vec<Value> = q
        .coefficients
        .iter()
        .map(|((a, b, x, y), c)| {
            serde_json::json!({ "a": a, "b": b, "x": x, "y": y, "c": render(c) })
        })
        .collect();
    serde_json::json!({ "coefficients": coefficients, "bound": render(&q.bound) })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &str) -> Result<T, FormatError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn to_pretty(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}
