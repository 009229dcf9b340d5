//! Small named instances whose index values, minimizers and mechanism
//! outcomes are known in closed form. Used by tests, the CLI fixture files
//! and the browser demo.
//!
//! Parameterized families take the small positive rational `eps`; any value
//! in `(0, 1/2)` keeps the documented behaviour.

use crate::model::Instance;
use crate::rational::{q, Rational};

fn build(rows: Vec<Vec<Rational>>) -> Instance {
    Instance::new(rows).expect("fixture rows are well formed")
}

fn int_rows<const M: usize>(rows: &[[i64; M]]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| Rational::from_integer(v)).collect())
        .collect()
}

/// Three people renting three cars; no envy-free allocation exists, two
/// perfectly equal matchings do (everyone at 8, everyone at 1).
pub fn car_rental() -> Instance {
    build(int_rows(&[[1, 8, 3], [8, 7, 1], [18, 1, 8]]))
        .with_agent_names(vec!["Alice".into(), "Bob".into(), "Carol".into()])
        .and_then(|i| i.with_item_names(vec!["Renault".into(), "Skoda".into(), "Toyota".into()]))
        .expect("names match shape")
}

/// Two agents, two items: the unique envy-free allocation swaps the items,
/// while the unique Gini minimizer gives `o1` to `a1` and `o2` to `a2`.
pub fn two_agent_crossed() -> Instance {
    build(int_rows(&[[1, 2], [3, 1]]))
}

/// Three agents with cyclic preferences 9 > 5 > 1: the diagonal is the only
/// envy-free allocation, the value-5 matching the only subjective-Gini
/// minimizer.
pub fn three_agent_cyclic() -> Instance {
    build(int_rows(&[[9, 1, 5], [5, 9, 1], [1, 5, 9]]))
}

/// Two agents, four items where the unique subjective-Gini minimizer
/// (`{o1,o3}` vs `{o2,o4}`) is Pareto-dominated by swapping `o1` and `o2`.
pub fn subjective_gini_not_pareto(eps: Rational) -> Instance {
    let one = Rational::ONE;
    let two_minus = &Rational::from_integer(2) - &eps;
    build(vec![
        vec![one.clone(), two_minus.clone(), one.clone(), eps.clone()],
        vec![two_minus, one.clone(), eps, one],
    ])
}

/// Two agents, two items where the Gini minimizer yields welfare `(eps, eps)`
/// and the best Pareto-efficient allocation `(1 − eps, 2 − eps)`.
pub fn gini_price_unbounded(eps: Rational) -> Instance {
    build(vec![
        vec![eps.clone(), &Rational::ONE - &eps],
        vec![&Rational::from_integer(2) - &eps, eps],
    ])
}

/// Three agents, three items; every envy minimizer leaves the first agent
/// with nothing.
pub fn envy_price_egalitarian() -> Instance {
    build(int_rows(&[[1, 1, 1], [8, 4, 4], [8, 4, 4]]))
}

/// Same matrix as [`two_agent_crossed`]; either agent gains by misreporting
/// to the Gini minimizer.
pub fn gini_misreport() -> Instance {
    two_agent_crossed()
}

/// The first agent's profitable misreport on [`gini_misreport`].
pub fn gini_misreport_first_agent_lie() -> Vec<Rational> {
    vec![q(1, 2), q(3, 1)]
}

/// The second agent's profitable misreport on [`gini_misreport`].
pub fn gini_misreport_second_agent_lie() -> Vec<Rational> {
    vec![q(2, 1), q(1, 2)]
}

/// Two agents, four items: sincere expected utility of either agent under
/// the subjective-Gini minimizer is 2. Under the envy minimizer the first
/// agent expects 13/6 sincerely and 9/4 by reporting
/// [`envy_misreport_lie`].
pub fn subjective_gini_misreport() -> Instance {
    build(vec![
        vec![q(1, 1), q(3, 2), q(1, 1), q(1, 2)],
        vec![q(3, 2), q(1, 1), q(1, 2), q(1, 1)],
    ])
}

/// A report that concentrates value on the first two items. It does not
/// change the first agent's subjective-Gini outcome: the minimizers stay
/// `{o1, o3} | {o2, o4}` and its reverse, worth 2 either way.
pub fn subjective_gini_misreport_lie() -> Vec<Rational> {
    vec![q(1, 1), q(3, 2), q(0, 1), q(0, 1)]
}

/// Profitable report for the first agent under envy minimization on
/// [`subjective_gini_misreport`].
pub fn envy_misreport_lie() -> Vec<Rational> {
    vec![q(3, 1), q(3, 1), q(3, 1), q(2, 1)]
}

/// Two agents, two items; the Gini mechanism reaches welfare `(2eps, eps)`
/// with probability one half against an offline optimum of `(2, 1)`.
pub fn gini_mechanism_ratio(eps: Rational) -> Instance {
    build(vec![
        vec![Rational::ONE, eps.clone()],
        vec![eps, Rational::ONE],
    ])
}

/// `n` agents, `n` items: the first agent values every item at `n`, everyone
/// else at 1. The envy mechanism reaches utilitarian welfare `2n − 1`
/// against an optimum of `n²`.
pub fn envy_mechanism_utilitarian(n: usize) -> Instance {
    let nv = Rational::from(n);
    let rows = (0..n)
        .map(|i| vec![if i == 0 { nv.clone() } else { Rational::ONE }; n])
        .collect();
    build(rows)
}

/// Two agents, two items; the envy mechanism gives both items to the first
/// agent (egalitarian welfare 0) while the optimum is `eps`.
pub fn envy_mechanism_egalitarian(eps: Rational) -> Instance {
    build(vec![
        vec![Rational::ONE, Rational::ONE],
        vec![eps, Rational::ZERO],
    ])
}

/// `n` agents, `n` items; agent `i` values item `i` at 1 and every other
/// item at `eps`. Shipped for manual study of strategic play only.
pub fn anarchy_family(n: usize, eps: Rational) -> Instance {
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::ONE } else { eps.clone() })
                .collect()
        })
        .collect();
    build(rows)
}

/// Every fixture under a stable file name, with family parameters fixed.
pub fn catalog() -> Vec<(&'static str, Instance)> {
    vec![
        ("car_rental", car_rental()),
        ("two_agent_crossed", two_agent_crossed()),
        ("three_agent_cyclic", three_agent_cyclic()),
        ("subjective_gini_not_pareto", subjective_gini_not_pareto(q(1, 10))),
        ("gini_price_unbounded", gini_price_unbounded(q(1, 4))),
        ("envy_price_egalitarian", envy_price_egalitarian()),
        ("subjective_gini_misreport", subjective_gini_misreport()),
        (
            "subjective_gini_misreport_lie",
            subjective_gini_misreport()
                .with_reported_row(0, subjective_gini_misreport_lie())
                .expect("same shape"),
        ),
        (
            "envy_misreport_lie",
            subjective_gini_misreport()
                .with_reported_row(0, envy_misreport_lie())
                .expect("same shape"),
        ),
        (
            "gini_misreport_first_lie",
            gini_misreport()
                .with_reported_row(0, gini_misreport_first_agent_lie())
                .expect("same shape"),
        ),
        (
            "gini_misreport_second_lie",
            gini_misreport()
                .with_reported_row(1, gini_misreport_second_agent_lie())
                .expect("same shape"),
        ),
        ("gini_mechanism_ratio", gini_mechanism_ratio(q(1, 4))),
        ("envy_mechanism_utilitarian", envy_mechanism_utilitarian(4)),
        ("envy_mechanism_egalitarian", envy_mechanism_egalitarian(q(1, 4))),
        ("anarchy_family", anarchy_family(4, q(1, 10))),
    ]
}
