//! Fine-tuning diagnosis: every conditional independence a model's
//! phenomenon exhibits should be structural — backed by a d-separation in
//! the model's graph. A CI without a d-separation means the parameters
//! conspire to hide a causal connection, and the model is *fine-tuned*.
//!
//! Because slot variables range over the full measurement set while the
//! setting support is restricted to contexts, some conditionals are
//! undefined; CI checks skip those cells. Fine-tuned statements whose
//! verification skipped at least one zero-weight conditioning cell are
//! additionally flagged, since their status rests on ignoring undefined
//! conditionals.

use crate::ci::{canonical_triples, CiStatement, TripleMode};
use crate::dag::{Dag, NodeId};
use crate::prob::{markov_factorize, Alphabet, Kernel};
use crate::scalar::{eq_within, rat, Rat, Scalar};
use crate::scenario::{CausalModel, Phenomenon, ScenarioError};

/// Outcome of a faithfulness scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaithfulnessReport {
    /// True iff `fine_tuned_cis` is empty.
    pub faithful: bool,
    /// Statements that hold in the phenomenon but have no d-separation in
    /// the graph.
    pub fine_tuned_cis: Vec<CiStatement>,
    /// The subset of `fine_tuned_cis` whose CI check skipped zero-weight
    /// conditioning cells — their truth depends on undefined conditionals
    /// being ignored.
    pub support_induced_cis: Vec<CiStatement>,
}

/// The two d-separations no-disturbance requires of a candidate graph.
pub fn required_nd_dseps() -> Vec<CiStatement> {
    vec![
        CiStatement::new(&["A"], &["Y"], &["X"]),
        CiStatement::new(&["B"], &["X"], &["Y"]),
    ]
}

/// Scan every canonical CI triple over the observed slots and report the
/// ones holding in the phenomenon without a matching d-separation.
///
/// Precondition: the model's observed marginal must reproduce `p`'s
/// distribution (exactly in exact mode, within the slack otherwise).
pub fn is_faithful<T: Scalar>(
    gamma: &CausalModel<T>,
    p: &Phenomenon<T>,
) -> Result<FaithfulnessReport, ScenarioError> {
    let marginal = gamma.joint().marginalize(&["A", "B", "X", "Y"])?;
    let eps = p.dist().eps().clone();
    for idx in 0..marginal.weights().len() {
        let asg = marginal.assignment_at(idx);
        let event: Vec<(&str, &str)> = marginal
            .vars()
            .iter()
            .zip(&asg)
            .map(|(alpha, &v)| (alpha.name(), alpha.values()[v].as_str()))
            .collect();
        let got = p.dist().event_weight(&event).map_err(|e| {
            ScenarioError::ModelMismatch(format!(
                "model marginal and phenomenon are incomparable: {e}"
            ))
        })?;
        if !eq_within(&marginal.weights()[idx], &got, &eps) {
            return Err(ScenarioError::ModelMismatch(
                "model marginal does not reproduce the phenomenon".to_owned(),
            ));
        }
    }

    let mut fine_tuned_cis = Vec::new();
    let mut support_induced_cis = Vec::new();
    for stmt in canonical_triples(&["A", "B", "X", "Y"], TripleMode::FullSubsets) {
        let check = marginal.check_ci(&stmt)?;
        if !check.holds {
            continue;
        }
        if gamma.graph().d_separated_stmt(&stmt)? {
            continue;
        }
        if check.skipped_conditioning_cells > 0 {
            support_induced_cis.push(stmt.clone());
        }
        fine_tuned_cis.push(stmt);
    }
    Ok(FaithfulnessReport {
        faithful: fine_tuned_cis.is_empty(),
        fine_tuned_cis,
        support_induced_cis,
    })
}

/// The deterministic one-bit-signalling reproduction of the maximally
/// correlated no-disturbance box: settings flow into the far outcome
/// (X→B), yet the phenomenon satisfies both no-disturbance conditions.
///
/// Nodes `A, B, X, Y` plus a uniform latent bit `L`; edges `L→A`, `L→B`,
/// `X→A`, `X→B`, `Y→B`. The mechanisms: `A` copies `L`, and `B` outputs
/// `L` xor (1 iff the settings are `x1, y1`). Its observed marginal is the
/// `pr_box()` phenomenon; the X→B influence is invisible — fine-tuning.
pub fn one_bit_signalling_pr_model() -> CausalModel<Rat> {
    let graph = Dag::build(
        vec![
            NodeId::observed("A"),
            NodeId::observed("B"),
            NodeId::observed("X"),
            NodeId::observed("Y"),
            NodeId::latent("L"),
        ],
        &[("L", "A"), ("L", "B"), ("X", "A"), ("X", "B"), ("Y", "B")],
    )
    .expect("statically valid graph");
    let ms = ["x0", "x1", "y0", "y1"];
    let x_alpha = Alphabet::new("X", ms).expect("valid");
    let y_alpha = Alphabet::new("Y", ms).expect("valid");
    let l_alpha = Alphabet::binary("L");
    let a_alpha = Alphabet::binary("A");
    let b_alpha = Alphabet::binary("B");

    let half = || rat(1, 2);
    let zero = || rat(0, 1);
    let one = || rat(1, 1);
    let x_kernel = Kernel::new(
        x_alpha.clone(),
        vec![],
        vec![vec![half(), half(), zero(), zero()]],
    )
    .expect("normalized");
    let y_kernel = Kernel::new(
        y_alpha.clone(),
        vec![],
        vec![vec![zero(), zero(), half(), half()]],
    )
    .expect("normalized");
    let l_kernel =
        Kernel::new(l_alpha.clone(), vec![], vec![vec![half(), half()]]).expect("normalized");

    // A copies L; the X parent is causally present but unused.
    let mut a_rows = Vec::new();
    for l in 0..2 {
        for _x in 0..4 {
            a_rows.push(vec![
                if l == 0 { one() } else { zero() },
                if l == 1 { one() } else { zero() },
            ]);
        }
    }
    let a_kernel =
        Kernel::new(a_alpha, vec![l_alpha.clone(), x_alpha.clone()], a_rows).expect("normalized");

    // B = L xor ([X = x1] and [Y = y1]).
    let mut b_rows = Vec::new();
    for l in 0..2usize {
        for x in 0..4usize {
            for y in 0..4usize {
                let flip = usize::from(x == 1 && y == 3);
                let target = l ^ flip;
                b_rows.push(vec![
                    if target == 0 { one() } else { zero() },
                    if target == 1 { one() } else { zero() },
                ]);
            }
        }
    }
    let b_kernel =
        Kernel::new(b_alpha, vec![l_alpha, x_alpha, y_alpha], b_rows).expect("normalized");

    let joint = markov_factorize(&graph, &[x_kernel, y_kernel, l_kernel, a_kernel, b_kernel])
        .expect("kernels match the graph");
    CausalModel::new(graph, joint).expect("factorization is compatible")
}

/// A generically parameterized latent-common-cause model: `X→A`, `Y→B`,
/// `L→A`, `L→B`, with kernels drawn from a seeded grid (strictly positive
/// rows for `L`, `A|L,X`, `B|L,Y`) and settings supported on each slot's
/// own measurements. Generic draws produce no accidental independences, so
/// the model is faithful; the seed is exposed to let callers vary (and
/// tests verify) that.
pub fn bell_common_cause_model(seed: u64) -> CausalModel<Rat> {
    use rand::SeedableRng;
    let graph = crate::dag::bell_graph();
    let ms = ["x0", "x1", "y0", "y1"];
    let alphabets = vec![
        Alphabet::binary("A"),
        Alphabet::binary("B"),
        Alphabet::new("X", ms).expect("valid"),
        Alphabet::new("Y", ms).expect("valid"),
        Alphabet::new("L", ["l0", "l1", "l2", "l3"]).expect("valid"),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut kernels =
        crate::prob::random_kernels::<Rat>(&graph, &alphabets, &mut rng, 8).expect("valid draw");
    for k in &mut kernels {
        if k.child().name() == "X" {
            *k = Kernel::new(
                k.child().clone(),
                vec![],
                vec![vec![rat(1, 3), rat(2, 3), rat(0, 1), rat(0, 1)]],
            )
            .expect("normalized");
        } else if k.child().name() == "Y" {
            *k = Kernel::new(
                k.child().clone(),
                vec![],
                vec![vec![rat(0, 1), rat(0, 1), rat(2, 5), rat(3, 5)]],
            )
            .expect("normalized");
        }
    }
    let joint = markov_factorize(&graph, &kernels).expect("kernels match the graph");
    CausalModel::new(graph, joint).expect("factorization is compatible")
}

/// Wrap a phenomenon in a complete graph over the four observed slots.
/// Always compatible (a complete graph imposes no Markov constraints) and
/// never faithful for a no-disturbance phenomenon: the graph d-separates
/// nothing, so every holding CI is fine-tuned.
pub fn saturated_model<T: Scalar>(p: &Phenomenon<T>) -> Result<CausalModel<T>, ScenarioError> {
    let names: Vec<String> = p.dist().vars().iter().map(|a| a.name().to_owned()).collect();
    let nodes: Vec<NodeId> = names.iter().map(NodeId::observed).collect();
    let mut edges = Vec::new();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            edges.push((names[i].as_str(), names[j].as_str()));
        }
    }
    let graph = Dag::build(nodes, &edges)?;
    CausalModel::new(graph, p.dist().clone())
}
