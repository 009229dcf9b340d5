//! Inequality indices, welfare, envy-freeness and Pareto predicates.
//!
//! Every quantity here is a function of the cross-valuation table
//! `u_i(A_j)` (what agent `i` thinks agent `j`'s bundle is worth), so the
//! table is materialized once in [`BundleValues`] and kept up to date
//! incrementally by the solvers and mechanisms.
//!
//! All indices return zero when their denominator is zero. Unallocated items
//! belong to no bundle.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, IndexKind, Instance, ValueMatrix};
use crate::rational::Rational;
use crate::solvers::enumerate::{check_cap, walk_complete, DEFAULT_ENUMERATION_CAP};

/// Denominator used by the envy index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvyNormalization {
    /// `2 · Σ_i Σ_j u_i(A_j)`, the same denominator as the subjective Gini
    /// index. With it envy never exceeds subjective Gini.
    #[default]
    #[serde(rename = "half")]
    HalfDenominator,
    /// `Σ_i Σ_j u_i(A_j)`.
    #[serde(rename = "full")]
    FullDenominator,
}

impl FromStr for EnvyNormalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "half" => Ok(EnvyNormalization::HalfDenominator),
            "full" => Ok(EnvyNormalization::FullDenominator),
            other => Err(Error::Parse(format!(
                "unknown envy normalization {other:?}, expected half or full"
            ))),
        }
    }
}

impl fmt::Display for EnvyNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvyNormalization::HalfDenominator => "half",
            EnvyNormalization::FullDenominator => "full",
        })
    }
}

fn ratio_or_zero(numer: Rational, denom: Rational) -> Rational {
    numer.checked_div(&denom).unwrap_or(Rational::ZERO)
}

/// The `n × n` table `u_i(A_j)` for one valuation matrix and one allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleValues {
    agents: usize,
    cross: Vec<Rational>,
}

impl BundleValues {
    /// Table of the empty allocation.
    pub fn empty(agents: usize) -> Self {
        BundleValues {
            agents,
            cross: vec![Rational::ZERO; agents * agents],
        }
    }

    pub fn from_allocation(matrix: &ValueMatrix, alloc: &Allocation) -> Self {
        Self::from_owners(matrix, alloc.owners().iter().copied())
    }

    pub(crate) fn from_owners(matrix: &ValueMatrix, owners: impl Iterator<Item = Option<usize>>) -> Self {
        let mut values = Self::empty(matrix.rows());
        for (item, owner) in owners.enumerate() {
            if let Some(agent) = owner {
                values.give(matrix, item, agent);
            }
        }
        values
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    /// Adds `item` to `agent`'s bundle.
    #[inline]
    pub fn give(&mut self, matrix: &ValueMatrix, item: usize, agent: usize) {
        let n = self.agents;
        for i in 0..n {
            let v = matrix.get(i, item);
            if !v.is_zero() {
                self.cross[i * n + agent] += v;
            }
        }
    }

    /// Removes `item` from `agent`'s bundle.
    #[inline]
    pub fn take(&mut self, matrix: &ValueMatrix, item: usize, agent: usize) {
        let n = self.agents;
        for i in 0..n {
            let v = matrix.get(i, item);
            if !v.is_zero() {
                self.cross[i * n + agent] -= v;
            }
        }
    }

    /// `u_i(A_j)`.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> &Rational {
        &self.cross[i * self.agents + j]
    }

    /// `u_i(A_i)`.
    #[inline]
    pub fn own(&self, i: usize) -> &Rational {
        self.value(i, i)
    }

    pub fn utilitarian(&self) -> Rational {
        (0..self.agents).map(|i| self.own(i)).sum()
    }

    pub fn egalitarian(&self) -> Rational {
        (0..self.agents)
            .map(|i| self.own(i))
            .min()
            .cloned()
            .unwrap_or(Rational::ZERO)
    }

    /// `Σ_i Σ_j u_i(A_j)`: each agent's value of everything allocated.
    fn total_cross(&self) -> Rational {
        self.cross.iter().sum()
    }

    /// `Σ_i Σ_j |u_i(A_i) − u_j(A_j)| / (2n Σ_i u_i(A_i))`.
    pub fn gini(&self) -> Rational {
        let n = self.agents;
        let mut numer = Rational::ZERO;
        for i in 0..n {
            for j in (i + 1)..n {
                numer += (self.own(i) - self.own(j)).abs();
            }
        }
        // Each unordered pair appears twice in the double sum, which cancels
        // the 2 in the denominator.
        let denom = &Rational::from(n) * &self.utilitarian();
        ratio_or_zero(numer, denom)
    }

    /// `Σ_i Σ_j |u_i(A_i) − u_i(A_j)| / (2 Σ_i Σ_j u_i(A_j))`.
    pub fn subjective_gini(&self) -> Rational {
        let n = self.agents;
        let mut numer = Rational::ZERO;
        for i in 0..n {
            let own = self.own(i);
            for j in 0..n {
                if i != j {
                    numer += (own - self.value(i, j)).abs();
                }
            }
        }
        let denom = &Rational::from_integer(2) * &self.total_cross();
        ratio_or_zero(numer, denom)
    }

    /// Total pairwise envy `Σ_i Σ_j max(0, u_i(A_j) − u_i(A_i))`.
    pub fn total_envy(&self) -> Rational {
        let n = self.agents;
        let mut numer = Rational::ZERO;
        for i in 0..n {
            let own = self.own(i);
            for j in 0..n {
                let other = self.value(i, j);
                if other > own {
                    numer += other - own;
                }
            }
        }
        numer
    }

    pub fn envy(&self, norm: EnvyNormalization) -> Rational {
        let numer = self.total_envy();
        if numer.is_zero() {
            return Rational::ZERO;
        }
        let mut denom = self.total_cross();
        if norm == EnvyNormalization::HalfDenominator {
            denom = &denom + &denom;
        }
        ratio_or_zero(numer, denom)
    }

    pub fn index(&self, kind: IndexKind, norm: EnvyNormalization) -> Rational {
        match kind {
            IndexKind::Gini => self.gini(),
            IndexKind::SubjectiveGini => self.subjective_gini(),
            IndexKind::Envy => self.envy(norm),
        }
    }

    pub fn is_envy_free(&self) -> bool {
        let n = self.agents;
        (0..n).all(|i| (0..n).all(|j| self.value(i, j) <= self.own(i)))
    }

    pub fn own_values(&self) -> Vec<Rational> {
        (0..self.agents).map(|i| self.own(i).clone()).collect()
    }
}

fn true_values(inst: &Instance, alloc: &Allocation) -> Result<BundleValues> {
    alloc.validate_for(inst)?;
    Ok(BundleValues::from_allocation(inst.utilities(), alloc))
}

pub fn utilitarian_welfare(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    Ok(true_values(inst, alloc)?.utilitarian())
}

pub fn egalitarian_welfare(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    Ok(true_values(inst, alloc)?.egalitarian())
}

pub fn gini_index(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    Ok(true_values(inst, alloc)?.gini())
}

pub fn subjective_gini_index(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    Ok(true_values(inst, alloc)?.subjective_gini())
}

pub fn envy_index(inst: &Instance, alloc: &Allocation, norm: EnvyNormalization) -> Result<Rational> {
    Ok(true_values(inst, alloc)?.envy(norm))
}

pub fn index_value(
    inst: &Instance,
    alloc: &Allocation,
    kind: IndexKind,
    norm: EnvyNormalization,
) -> Result<Rational> {
    Ok(true_values(inst, alloc)?.index(kind, norm))
}

pub fn is_envy_free(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    Ok(true_values(inst, alloc)?.is_envy_free())
}

fn dominates(a: &[Rational], b: &[Rational]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Greater => strict = true,
            std::cmp::Ordering::Equal => {}
        }
    }
    strict
}

/// True iff `a` Pareto-dominates `b` under the true utilities.
pub fn pareto_dominates(inst: &Instance, a: &Allocation, b: &Allocation) -> Result<bool> {
    let ua = true_values(inst, a)?.own_values();
    let ub = true_values(inst, b)?.own_values();
    Ok(dominates(&ua, &ub))
}

/// The Pareto frontier of an instance's complete allocations, in utility
/// space, for repeated efficiency queries.
#[derive(Debug, Clone)]
pub struct ParetoFrontier {
    frontier: Vec<Vec<Rational>>,
}

impl ParetoFrontier {
    pub fn new(inst: &Instance, cap: u64) -> Result<Self> {
        check_cap(inst, cap)?;
        let mut distinct: HashSet<Vec<Rational>> = HashSet::new();
        walk_complete(inst.utilities(), None, |_, values| {
            distinct.insert(values.own_values());
        });
        // Only a vector with a strictly larger sum can dominate, so scanning
        // by descending sum and comparing against the frontier found so far
        // is exact.
        let mut by_sum: Vec<(Rational, Vec<Rational>)> = distinct
            .into_iter()
            .map(|v| (v.iter().sum(), v))
            .collect();
        by_sum.sort_by(|a, b| b.cmp(a));
        let mut frontier: Vec<Vec<Rational>> = Vec::new();
        for (_, v) in by_sum {
            if !frontier.iter().any(|f| dominates(f, &v)) {
                frontier.push(v);
            }
        }
        Ok(ParetoFrontier { frontier })
    }

    /// Utility vectors of the Pareto-efficient complete allocations.
    pub fn vectors(&self) -> &[Vec<Rational>] {
        &self.frontier
    }

    /// Whether a utility vector is undominated by any complete allocation.
    pub fn admits(&self, utilities: &[Rational]) -> bool {
        !self.frontier.iter().any(|f| dominates(f, utilities))
    }

    pub fn is_efficient(&self, inst: &Instance, alloc: &Allocation) -> Result<bool> {
        Ok(self.admits(&true_values(inst, alloc)?.own_values()))
    }
}

/// Exhaustive Pareto-efficiency test against all complete allocations.
pub fn is_pareto_efficient(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    is_pareto_efficient_with_cap(inst, alloc, DEFAULT_ENUMERATION_CAP)
}

pub fn is_pareto_efficient_with_cap(inst: &Instance, alloc: &Allocation, cap: u64) -> Result<bool> {
    let target = true_values(inst, alloc)?.own_values();
    check_cap(inst, cap)?;
    let mut dominated = false;
    walk_complete(inst.utilities(), None, |_, values| {
        if !dominated {
            let n = values.agents();
            let mut strict = false;
            let mut ok = true;
            for i in 0..n {
                match values.own(i).cmp(&target[i]) {
                    std::cmp::Ordering::Less => {
                        ok = false;
                        break;
                    }
                    std::cmp::Ordering::Greater => strict = true,
                    std::cmp::Ordering::Equal => {}
                }
            }
            dominated = ok && strict;
        }
    });
    Ok(!dominated)
}

/// Every scalar measure of one allocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexReport {
    pub gini: Rational,
    pub subjective_gini: Rational,
    pub envy: Rational,
    pub utilitarian: Rational,
    pub egalitarian: Rational,
    pub envy_free: bool,
}

impl IndexReport {
    pub fn from_values(values: &BundleValues, norm: EnvyNormalization) -> Self {
        IndexReport {
            gini: values.gini(),
            subjective_gini: values.subjective_gini(),
            envy: values.envy(norm),
            utilitarian: values.utilitarian(),
            egalitarian: values.egalitarian(),
            envy_free: values.is_envy_free(),
        }
    }
}

pub fn index_report(inst: &Instance, alloc: &Allocation) -> Result<IndexReport> {
    index_report_with(inst, alloc, EnvyNormalization::default())
}

pub fn index_report_with(
    inst: &Instance,
    alloc: &Allocation,
    norm: EnvyNormalization,
) -> Result<IndexReport> {
    Ok(IndexReport::from_values(&true_values(inst, alloc)?, norm))
}
