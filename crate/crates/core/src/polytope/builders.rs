//! Ready-made scenarios, phenomena, and functionals used by tests and the
//! command-line tool.

use crate::polytope::Inequality;
use crate::prob::JointDistribution;
use crate::scalar::{rat, Rat, Scalar};
use crate::scenario::{MeasurementScenario, Phenomenon};
use std::collections::BTreeMap;

/// Two binary measurements per slot and all four crossing contexts.
pub fn chsh_scenario() -> MeasurementScenario {
    MeasurementScenario::new(
        &["x0", "x1", "y0", "y1"],
        &["0", "1"],
        &[
            vec!["x0", "y0"],
            vec!["x0", "y1"],
            vec!["x1", "y0"],
            vec!["x1", "y1"],
        ],
        false,
    )
    .expect("statically valid")
}

/// Five binary measurements in a compatibility cycle
/// `m0–m1–m2–m3–m4–m0`.
pub fn kcbs_scenario() -> MeasurementScenario {
    MeasurementScenario::new(
        &["m0", "m1", "m2", "m3", "m4"],
        &["0", "1"],
        &[
            vec!["m0", "m1"],
            vec!["m1", "m2"],
            vec!["m2", "m3"],
            vec!["m3", "m4"],
            vec!["m4", "m0"],
        ],
        false,
    )
    .expect("statically valid")
}

pub(crate) const CHSH_SUPPORT: [(&str, &str); 4] =
    [("x0", "y0"), ("x0", "y1"), ("x1", "y0"), ("x1", "y1")];
pub(crate) const KCBS_SUPPORT: [(&str, &str); 5] =
    [("m0", "m1"), ("m1", "m2"), ("m2", "m3"), ("m3", "m4"), ("m4", "m0")];

/// Settings uniform over `support`; outcome tables given by `cond` with
/// outcome indices in scenario order. `cond` must sum to one per pair.
pub(crate) fn uniform_settings_box<T: Scalar>(
    scenario: &MeasurementScenario,
    support: &[(&str, &str)],
    cond: impl Fn(&str, &str, usize, usize) -> T,
) -> Phenomenon<T> {
    let vars = vec![
        scenario.outcome_alphabet("A"),
        scenario.outcome_alphabet("B"),
        scenario.measurement_alphabet("X"),
        scenario.measurement_alphabet("Y"),
    ];
    let k = scenario.outcomes().len();
    let m = scenario.measurements().len();
    let mut weights = vec![T::zero(); k * k * m * m];
    let pairs = T::from_ratio(support.len() as i64, 1);
    let pos = |name: &str| {
        scenario
            .measurements()
            .iter()
            .position(|v| v == name)
            .expect("support uses scenario measurements")
    };
    for (x, y) in support {
        let (xi, yi) = (pos(x), pos(y));
        for a in 0..k {
            for b in 0..k {
                let idx = ((a * k + b) * m + xi) * m + yi;
                weights[idx] = cond(x, y, a, b) / pairs.clone();
            }
        }
    }
    let dist = JointDistribution::from_weights(vars, weights).expect("normalized by construction");
    Phenomenon::new(scenario.clone(), dist).expect("support stays within contexts")
}

/// Perfect correlation on three contexts, perfect anticorrelation on
/// `(x1, y1)`.
pub fn pr_box() -> Phenomenon<Rat> {
    uniform_settings_box(&chsh_scenario(), &CHSH_SUPPORT, |x, y, a, b| {
        let anti = x == "x1" && y == "y1";
        if (a != b) == anti {
            rat(1, 2)
        } else {
            rat(0, 1)
        }
    })
}

/// Outcomes uniform and uncorrelated in every context.
pub fn uniform_box() -> Phenomenon<Rat> {
    uniform_settings_box(&chsh_scenario(), &CHSH_SUPPORT, |_, _, _, _| rat(1, 4))
}

/// Correlators `±1/√2`: the quantum-maximal two-party binary box. Floating
/// point — the correlator is irrational.
pub fn tsirelson_box() -> Phenomenon<f64> {
    uniform_settings_box(&chsh_scenario(), &CHSH_SUPPORT, |x, y, a, b| {
        let e = if x == "x1" && y == "y1" {
            -std::f64::consts::FRAC_1_SQRT_2
        } else {
            std::f64::consts::FRAC_1_SQRT_2
        };
        let sign = if a == b { 1.0 } else { -1.0 };
        (1.0 + sign * e) / 4.0
    })
}

/// `E(x0,y0) + E(x0,y1) + E(x1,y0) − E(x1,y1) ≤ 2` written per outcome
/// pair: every coefficient is `±1`.
pub fn chsh_functional() -> Inequality<Rat> {
    let mut coefficients = BTreeMap::new();
    for (x, y) in CHSH_SUPPORT {
        let ctx_sign = if x == "x1" && y == "y1" { -1 } else { 1 };
        for a in ["0", "1"] {
            for b in ["0", "1"] {
                let corr = if a == b { 1 } else { -1 };
                coefficients.insert(
                    (a.to_owned(), b.to_owned(), x.to_owned(), y.to_owned()),
                    rat(ctx_sign * corr, 1),
                );
            }
        }
    }
    Inequality { coefficients, bound: rat(2, 1) }
}

/// Perfect anticorrelation on each edge of the five-cycle, settings uniform
/// over the edges oriented `(m_i, m_{i+1})`.
pub fn kcbs_anticorrelated() -> Phenomenon<Rat> {
    uniform_settings_box(&kcbs_scenario(), &KCBS_SUPPORT, |_, _, a, b| {
        if a != b {
            rat(1, 2)
        } else {
            rat(0, 1)
        }
    })
}

/// Sum of anticorrelation probabilities along the five-cycle:
/// `Σ_i P(a ≠ b | m_i, m_{i+1}) ≤ 4` for global assignments — an odd cycle
/// cannot be fully anticorrelated by one assignment.
pub fn kcbs_functional() -> Inequality<Rat> {
    let mut coefficients = BTreeMap::new();
    for (x, y) in KCBS_SUPPORT {
        for (a, b) in [("0", "1"), ("1", "0")] {
            coefficients.insert(
                (a.to_owned(), b.to_owned(), x.to_owned(), y.to_owned()),
                rat(1, 1),
            );
        }
    }
    Inequality { coefficients, bound: rat(4, 1) }
}
