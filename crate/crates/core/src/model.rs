//! Domain types: instances, valuation matrices, allocations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{ParseRationalError, Rational};

/// Dense `rows × cols` matrix of non-negative rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl ValueMatrix {
    /// Checks shape and sign. `expected_cols` pins the column count when the
    /// matrix may have no rows to infer it from.
    pub fn from_rows(rows: Vec<Vec<Rational>>, expected_cols: usize) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * expected_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != expected_cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {expected_cols}",
                    row.len()
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                if v.is_negative() {
                    return Err(Error::NegativeValue {
                        agent: i,
                        item: j,
                        value: v.to_string(),
                    });
                }
                data.push(v);
            }
        }
        Ok(ValueMatrix {
            rows: n,
            cols: expected_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, agent: usize, item: usize) -> &Rational {
        &self.data[agent * self.cols + item]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.data[agent * self.cols..(agent + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// True when every row equals the first one.
    pub fn is_common(&self) -> bool {
        (1..self.rows).all(|i| self.row(i) == self.row(0))
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(Rational::is_integer)
    }
}

/// A fair-division instance: `n` agents, `m` items, public bids and optional
/// private utilities.
///
/// Mechanisms and solvers decide on the bids; reported welfare and index
/// values use the utilities. Without explicit utilities the two coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    bids: ValueMatrix,
    utilities: Option<ValueMatrix>,
    agent_names: Option<Vec<String>>,
    item_names: Option<Vec<String>>,
}

impl Instance {
    pub fn new(bids: Vec<Vec<Rational>>) -> Result<Self> {
        let m = bids.first().map_or(0, Vec::len);
        Self::with_items(bids, m)
    }

    /// Like [`Instance::new`] but with an explicit item count, so that an
    /// instance with zero agents' rows of length zero is unambiguous.
    pub fn with_items(bids: Vec<Vec<Rational>>, items: usize) -> Result<Self> {
        if bids.is_empty() {
            return Err(Error::DimensionMismatch(
                "an instance needs at least one agent".into(),
            ));
        }
        Ok(Instance {
            bids: ValueMatrix::from_rows(bids, items)?,
            utilities: None,
            agent_names: None,
            item_names: None,
        })
    }

    /// Convenience constructor from an integer table.
    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| Rational::from_integer(v)).collect())
                .collect(),
        )
    }

    pub fn with_true_utilities(mut self, utilities: Vec<Vec<Rational>>) -> Result<Self> {
        if utilities.len() != self.num_agents() {
            return Err(Error::DimensionMismatch(format!(
                "utilities have {} rows, bids have {}",
                utilities.len(),
                self.num_agents()
            )));
        }
        self.utilities = Some(ValueMatrix::from_rows(utilities, self.num_items())?);
        Ok(self)
    }

    pub fn with_agent_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_agents() {
            return Err(Error::DimensionMismatch(format!(
                "{} agent names for {} agents",
                names.len(),
                self.num_agents()
            )));
        }
        self.agent_names = Some(names);
        Ok(self)
    }

    pub fn with_item_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "{} item names for {} items",
                names.len(),
                self.num_items()
            )));
        }
        self.item_names = Some(names);
        Ok(self)
    }

    pub fn num_agents(&self) -> usize {
        self.bids.rows()
    }

    pub fn num_items(&self) -> usize {
        self.bids.cols()
    }

    pub fn bids(&self) -> &ValueMatrix {
        &self.bids
    }

    /// True utilities, falling back to bids under sincere play.
    pub fn utilities(&self) -> &ValueMatrix {
        self.utilities.as_ref().unwrap_or(&self.bids)
    }

    pub fn has_true_utilities(&self) -> bool {
        self.utilities.is_some()
    }

    pub fn agent_names(&self) -> Option<&[String]> {
        self.agent_names.as_deref()
    }

    pub fn item_names(&self) -> Option<&[String]> {
        self.item_names.as_deref()
    }

    pub fn agent_label(&self, agent: usize) -> String {
        match &self.agent_names {
            Some(names) => names[agent].clone(),
            None => format!("a{}", agent + 1),
        }
    }

    pub fn item_label(&self, item: usize) -> String {
        match &self.item_names {
            Some(names) => names[item].clone(),
            None => format!("o{}", item + 1),
        }
    }

    /// The same instance with the given bids and the current true utilities
    /// kept private. Used to model a misreport.
    pub fn with_reported_bids(&self, bids: Vec<Vec<Rational>>) -> Result<Self> {
        let mut out = self.clone();
        out.utilities = Some(self.utilities().clone());
        out.bids = ValueMatrix::from_rows(bids, self.num_items())?;
        if out.bids.rows() != self.num_agents() {
            return Err(Error::DimensionMismatch("reported bids change the agent count".into()));
        }
        Ok(out)
    }

    /// Replaces a single agent's reported row.
    pub fn with_reported_row(&self, agent: usize, row: Vec<Rational>) -> Result<Self> {
        if agent >= self.num_agents() {
            return Err(Error::IndexOutOfRange(format!("agent {agent}")));
        }
        let mut bids = self.bids.to_rows();
        bids[agent] = row;
        self.with_reported_bids(bids)
    }

    /// Additive value of `bundle` for `agent`, from the true utilities when
    /// `use_true` is set, from the bids otherwise.
    pub fn bundle_utility(&self, agent: usize, bundle: &[usize], use_true: bool) -> Result<Rational> {
        if agent >= self.num_agents() {
            return Err(Error::IndexOutOfRange(format!(
                "agent {agent} of {}",
                self.num_agents()
            )));
        }
        let matrix = if use_true { self.utilities() } else { &self.bids };
        let mut total = Rational::ZERO;
        for &item in bundle {
            if item >= self.num_items() {
                return Err(Error::IndexOutOfRange(format!(
                    "item {item} of {}",
                    self.num_items()
                )));
            }
            total += matrix.get(agent, item);
        }
        Ok(total)
    }
}

/// Owner of each item, `None` meaning unallocated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    owner: Vec<Option<usize>>,
}

impl Allocation {
    pub fn unallocated(items: usize) -> Self {
        Allocation {
            owner: vec![None; items],
        }
    }

    pub fn from_owners(owner: Vec<Option<usize>>) -> Self {
        Allocation { owner }
    }

    /// Complete allocation from an owner list.
    pub fn complete(owners: &[usize]) -> Self {
        Allocation {
            owner: owners.iter().map(|&a| Some(a)).collect(),
        }
    }

    pub fn num_items(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, item: usize) -> Option<usize> {
        self.owner[item]
    }

    pub fn owners(&self) -> &[Option<usize>] {
        &self.owner
    }

    pub fn assign(&mut self, item: usize, agent: Option<usize>) {
        self.owner[item] = agent;
    }

    pub fn is_complete(&self) -> bool {
        self.owner.iter().all(Option::is_some)
    }

    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter_map(|(j, &o)| (o == Some(agent)).then_some(j))
            .collect()
    }

    pub fn validate_for(&self, inst: &Instance) -> Result<()> {
        if self.owner.len() != inst.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "allocation covers {} items, instance has {}",
                self.owner.len(),
                inst.num_items()
            )));
        }
        if let Some((j, a)) = self
            .owner
            .iter()
            .enumerate()
            .find_map(|(j, o)| o.filter(|&a| a >= inst.num_agents()).map(|a| (j, a)))
        {
            return Err(Error::IndexOutOfRange(format!(
                "item {j} assigned to agent {a}, instance has {} agents",
                inst.num_agents()
            )));
        }
        Ok(())
    }

    /// Relabels agents: agent `a` becomes `perm[a]`.
    pub fn relabel_agents(&self, perm: &[usize]) -> Allocation {
        Allocation {
            owner: self.owner.iter().map(|o| o.map(|a| perm[a])).collect(),
        }
    }
}

impl fmt::Display for Allocation {
    /// JSON-style owner list, e.g. `[2, 1, null]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (j, o) in self.owner.iter().enumerate() {
            if j > 0 {
                f.write_str(", ")?;
            }
            match o {
                Some(a) => write!(f, "{a}")?,
                None => f.write_str("null")?,
            }
        }
        f.write_str("]")
    }
}

/// Which inequality index to evaluate or minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndexKind {
    #[serde(rename = "gini")]
    Gini,
    #[serde(rename = "subjgini")]
    SubjectiveGini,
    #[serde(rename = "envy")]
    Envy,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [IndexKind::Gini, IndexKind::SubjectiveGini, IndexKind::Envy];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Gini => "gini",
            IndexKind::SubjectiveGini => "subjgini",
            IndexKind::Envy => "envy",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gini" => Ok(IndexKind::Gini),
            "subjgini" | "subjective-gini" | "subjective_gini" => Ok(IndexKind::SubjectiveGini),
            "envy" => Ok(IndexKind::Envy),
            other => Err(Error::Parse(format!(
                "unknown index {other:?}, expected gini, subjgini or envy"
            ))),
        }
    }
}

/// Agents or items given either as a count or as a list of names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Roster {
    Count(usize),
    Names(Vec<String>),
}

impl Roster {
    fn len(&self) -> usize {
        match self {
            Roster::Count(n) => *n,
            Roster::Names(names) => names.len(),
        }
    }
}

/// A matrix entry as written in a file, before exact parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RawValue {
    fn parse(&self) -> std::result::Result<Rational, ParseRationalError> {
        match self {
            RawValue::Int(v) => Ok(Rational::from_integer(*v)),
            RawValue::Float(v) if v.is_finite() => format!("{v}").parse(),
            RawValue::Float(v) => Err(ParseRationalError {
                input: v.to_string(),
                reason: "non-finite number",
            }),
            RawValue::Text(s) => s.parse(),
        }
    }
}

/// An instance document as parsed, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Roster>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Roster>,
    pub bids: Vec<Vec<RawValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<Vec<RawValue>>>,
}

fn parse_matrix(rows: &[Vec<RawValue>]) -> Result<Vec<Vec<Rational>>> {
    rows.iter()
        .map(|row| row.iter().map(|v| v.parse().map_err(Error::from)).collect())
        .collect()
}

/// Validates a parsed document into an [`Instance`].
pub fn validate_instance(raw: &RawInstance) -> Result<Instance> {
    let n = raw.agents.as_ref().map_or(raw.bids.len(), Roster::len);
    if raw.bids.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} agents declared but bids have {} rows",
            raw.bids.len()
        )));
    }
    let m = match &raw.items {
        Some(items) => items.len(),
        None => raw.bids.first().map_or(0, Vec::len),
    };
    let bids = parse_matrix(&raw.bids)?;
    let mut inst = Instance::with_items(bids, m)?;
    if let Some(u) = &raw.utilities {
        inst = inst.with_true_utilities(parse_matrix(u)?)?;
    }
    if let Some(Roster::Names(names)) = &raw.agents {
        inst = inst.with_agent_names(names.clone())?;
    }
    if let Some(Roster::Names(names)) = &raw.items {
        inst = inst.with_item_names(names.clone())?;
    }
    Ok(inst)
}

fn raw_matrix(m: &ValueMatrix) -> Vec<Vec<RawValue>> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|v| match (v.is_integer(), i64::try_from(v.numer())) {
                    (true, Ok(x)) => RawValue::Int(x),
                    _ => RawValue::Text(v.to_string()),
                })
                .collect()
        })
        .collect()
}

impl From<&Instance> for RawInstance {
    fn from(inst: &Instance) -> Self {
        RawInstance {
            agents: Some(match inst.agent_names() {
                Some(names) => Roster::Names(names.to_vec()),
                None => Roster::Count(inst.num_agents()),
            }),
            items: Some(match inst.item_names() {
                Some(names) => Roster::Names(names.to_vec()),
                None => Roster::Count(inst.num_items()),
            }),
            bids: raw_matrix(inst.bids()),
            utilities: inst.utilities.as_ref().map(raw_matrix),
        }
    }
}
