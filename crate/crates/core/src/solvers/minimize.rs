//! Exhaustive index minimization and the analyses built on it: envy-free
//! allocations, prices of an index, expected utility under a minimizer.
//!
//! Minimization scores allocations on the bids, since that is all a
//! minimizing mechanism can see; welfare, envy-freeness and Pareto
//! efficiency are judged on the true utilities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indices::{BundleValues, EnvyNormalization, ParetoFrontier};
use crate::model::{Allocation, IndexKind, Instance, ValueMatrix};
use crate::rational::Rational;
use crate::solvers::enumerate::{check_cap, walk_complete, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Refuse instances with more than this many complete allocations.
    pub cap: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Global minimum of an index with every allocation attaining it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinimizationResult {
    pub min_value: Rational,
    /// In lexicographic owner order.
    pub minimizers: Vec<Allocation>,
    /// Allocations evaluated.
    pub explored: u64,
}

#[derive(Default)]
struct Best {
    value: Option<Rational>,
    owners: Vec<Vec<usize>>,
    explored: u64,
}

impl Best {
    fn offer(&mut self, value: Rational, owners: &[usize]) {
        self.explored += 1;
        match &self.value {
            Some(v) if value > *v => {}
            Some(v) if value == *v => self.owners.push(owners.to_vec()),
            _ => {
                self.value = Some(value);
                self.owners.clear();
                self.owners.push(owners.to_vec());
            }
        }
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    fn merge(mut self, other: Best) -> Best {
        self.explored += other.explored;
        match (&self.value, &other.value) {
            (_, None) => {}
            (None, Some(_)) => {
                self.value = other.value;
                self.owners = other.owners;
            }
            (Some(a), Some(b)) if b < a => {
                self.value = other.value;
                self.owners = other.owners;
            }
            (Some(a), Some(b)) if a == b => self.owners.extend(other.owners),
            _ => {}
        }
        self
    }
}

fn scan(matrix: &ValueMatrix, kind: IndexKind, norm: EnvyNormalization, first: Option<usize>) -> Best {
    let mut best = Best::default();
    walk_complete(matrix, first, |owners, values| {
        best.offer(values.index(kind, norm), owners);
    });
    best
}

#[cfg(feature = "parallel")]
fn scan_all(matrix: &ValueMatrix, kind: IndexKind, norm: EnvyNormalization) -> Best {
    use rayon::prelude::*;
    if matrix.cols() == 0 {
        return scan(matrix, kind, norm, None);
    }
    // Partition by the first item's owner; merging in agent order keeps the
    // minimizer list in lexicographic order.
    (0..matrix.rows())
        .into_par_iter()
        .map(|a| scan(matrix, kind, norm, Some(a)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Best::default(), Best::merge)
}

#[cfg(not(feature = "parallel"))]
fn scan_all(matrix: &ValueMatrix, kind: IndexKind, norm: EnvyNormalization) -> Best {
    scan(matrix, kind, norm, None)
}

/// Exact minimum of `kind` over all complete allocations, scored on the
/// bids, with the full set of minimizers.
pub fn minimize_index(
    inst: &Instance,
    kind: IndexKind,
    norm: EnvyNormalization,
    opts: MinimizeOptions,
) -> Result<MinimizationResult> {
    check_cap(inst, opts.cap)?;
    let best = scan_all(inst.bids(), kind, norm);
    Ok(MinimizationResult {
        min_value: best.value.expect("at least one complete allocation exists"),
        minimizers: best.owners.iter().map(|o| Allocation::complete(o)).collect(),
        explored: best.explored,
    })
}

/// All complete allocations that are envy-free under the true utilities.
pub fn envy_free_allocations(inst: &Instance, opts: MinimizeOptions) -> Result<Vec<Allocation>> {
    check_cap(inst, opts.cap)?;
    let mut out = Vec::new();
    walk_complete(inst.utilities(), None, |owners, values| {
        if values.is_envy_free() {
            out.push(Allocation::complete(owners));
        }
    });
    Ok(out)
}

/// Ratio of a best welfare to a worst welfare; unbounded when only the
/// divisor is zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Price {
    Finite(Rational),
    #[serde(serialize_with = "serialize_infinite")]
    Infinite,
}

fn serialize_infinite<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("infinite")
}

impl Price {
    /// `best / worst`; `0 / 0` counts as 1 (the minimizers are as good as
    /// anything Pareto-efficient).
    pub fn ratio(best: &Rational, worst: &Rational) -> Price {
        match best.checked_div(worst) {
            Some(r) => Price::Finite(r),
            None if best.is_zero() => Price::Finite(Rational::ONE),
            None => Price::Infinite,
        }
    }
}

impl std::fmt::Display for Price {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Price::Finite(r) => write!(f, "{r}"),
            Price::Infinite => f.write_str("infinite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriceReport {
    pub utilitarian: Price,
    pub egalitarian: Price,
}

/// Best welfare over Pareto-efficient allocations divided by the worst
/// welfare over the index's minimizers, for both welfare notions.
pub fn price_of_index(
    inst: &Instance,
    kind: IndexKind,
    norm: EnvyNormalization,
    opts: MinimizeOptions,
) -> Result<PriceReport> {
    let minimized = minimize_index(inst, kind, norm, opts)?;
    let frontier = ParetoFrontier::new(inst, opts.cap)?;

    let best_util = frontier
        .vectors()
        .iter()
        .map(|v| v.iter().sum::<Rational>())
        .max()
        .expect("the frontier is never empty");
    let best_egal = frontier
        .vectors()
        .iter()
        .map(|v| v.iter().min().cloned().unwrap_or(Rational::ZERO))
        .max()
        .expect("the frontier is never empty");

    let mut worst_util: Option<Rational> = None;
    let mut worst_egal: Option<Rational> = None;
    for alloc in &minimized.minimizers {
        let values = BundleValues::from_allocation(inst.utilities(), alloc);
        let (u, e) = (values.utilitarian(), values.egalitarian());
        if worst_util.as_ref().is_none_or(|w| u < *w) {
            worst_util = Some(u);
        }
        if worst_egal.as_ref().is_none_or(|w| e < *w) {
            worst_egal = Some(e);
        }
    }
    let worst_util = worst_util.expect("minimizers are never empty");
    let worst_egal = worst_egal.expect("minimizers are never empty");
    Ok(PriceReport {
        utilitarian: Price::ratio(&best_util, &worst_util),
        egalitarian: Price::ratio(&best_egal, &worst_egal),
    })
}

/// Mean true utility of `agent` when one of the bid-minimizers of `kind`
/// is picked uniformly at random.
pub fn expected_utility_under_minimizer(
    inst: &Instance,
    agent: usize,
    kind: IndexKind,
    norm: EnvyNormalization,
    opts: MinimizeOptions,
) -> Result<Rational> {
    if agent >= inst.num_agents() {
        return Err(Error::IndexOutOfRange(format!(
            "agent {agent} of {}",
            inst.num_agents()
        )));
    }
    let minimized = minimize_index(inst, kind, norm, opts)?;
    let total: Rational = minimized
        .minimizers
        .iter()
        .map(|a| inst.bundle_utility(agent, &a.bundle(agent), true))
        .sum::<Result<Rational>>()?;
    Ok(&total / &Rational::from(minimized.minimizers.len()))
}
