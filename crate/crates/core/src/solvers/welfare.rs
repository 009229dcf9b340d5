//! Offline welfare optima over complete allocations (true utilities).

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::model::{Allocation, Instance, ValueMatrix};
use crate::rational::Rational;

/// Maximum utilitarian welfare: each item to a highest-valuing agent (the
/// lowest index among ties).
pub fn max_utilitarian(inst: &Instance) -> (Rational, Allocation) {
    let u = inst.utilities();
    let mut total = Rational::ZERO;
    let mut owners = Vec::with_capacity(inst.num_items());
    for j in 0..inst.num_items() {
        let mut best = 0;
        for i in 1..inst.num_agents() {
            if u.get(i, j) > u.get(best, j) {
                best = i;
            }
        }
        total += u.get(best, j);
        owners.push(best);
    }
    (total, Allocation::complete(&owners))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EgalitarianOptimum {
    pub value: Rational,
    pub allocation: Allocation,
    /// False when the time budget ran out; `value` is then the best lower
    /// bound found and `upper_bound` caps the true optimum.
    pub optimal: bool,
    pub upper_bound: Rational,
    pub nodes: u64,
}

/// Exact maximum egalitarian welfare by depth-first branch and bound.
///
/// With a `budget`, the search stops once it is exhausted and reports the
/// incumbent with `optimal = false`.
pub fn max_egalitarian(inst: &Instance, budget: Option<Duration>) -> EgalitarianOptimum {
    let (n, m) = (inst.num_agents(), inst.num_items());
    let u = inst.utilities();
    if n == 1 || m == 0 {
        let value = if n == 1 {
            u.row(0).iter().sum()
        } else {
            Rational::ZERO
        };
        return EgalitarianOptimum {
            value: value.clone(),
            allocation: Allocation::complete(&vec![0; m]),
            optimal: true,
            upper_bound: value,
            nodes: 0,
        };
    }
    let mut search = Search::new(u, budget);
    search.run();
    let mut owners = vec![0; m];
    for (pos, &item) in search.order.iter().enumerate() {
        owners[item] = search.best_owners[pos];
    }
    let optimal = !search.timed_out;
    EgalitarianOptimum {
        value: search.best.clone(),
        allocation: Allocation::complete(&owners),
        optimal,
        upper_bound: if optimal { search.best } else { search.root_bound },
        nodes: search.nodes,
    }
}

struct Search<'a> {
    u: &'a ValueMatrix,
    n: usize,
    integral: bool,
    /// Items in branching order: most valuable first.
    order: Vec<usize>,
    /// Agents with positive value for each position; empty means any.
    candidates: Vec<Vec<usize>>,
    /// `remaining[pos * n + i]`: agent i's value of items at `pos..`.
    remaining: Vec<Rational>,
    /// Integer weights on the simplex (scaled) and the matching suffix of
    /// `Σ_pos max_i w_i u_i(item)`; a weighted average of utilities bounds
    /// their minimum.
    weightings: Vec<(Vec<Rational>, Rational, Vec<Rational>)>,
    current: Vec<Rational>,
    owners: Vec<usize>,
    best: Rational,
    best_owners: Vec<usize>,
    root_bound: Rational,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn new(u: &'a ValueMatrix, budget: Option<Duration>) -> Self {
        let (n, m) = (u.rows(), u.cols());
        let col_max = |j: usize| (0..n).map(|i| u.get(i, j)).max().cloned().unwrap_or_default();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| col_max(b).cmp(&col_max(a)).then(a.cmp(&b)));

        let candidates = order
            .iter()
            .map(|&j| (0..n).filter(|&i| u.get(i, j).is_positive()).collect())
            .collect();

        let mut remaining = vec![Rational::ZERO; (m + 1) * n];
        for pos in (0..m).rev() {
            for i in 0..n {
                remaining[pos * n + i] = &remaining[(pos + 1) * n + i] + u.get(i, order[pos]);
            }
        }

        let mut weightings = Vec::new();
        for w in [vec![1.0; n], lagrangian_weights(u)] {
            let w: Vec<Rational> = w
                .iter()
                .map(|&x| Rational::from_integer((x * 1e6).round() as i64))
                .collect();
            let total: Rational = w.iter().sum();
            if total.is_zero() {
                continue;
            }
            let mut suffix = vec![Rational::ZERO; m + 1];
            for pos in (0..m).rev() {
                let j = order[pos];
                let best = (0..n).map(|i| &w[i] * u.get(i, j)).max().unwrap_or_default();
                suffix[pos] = &suffix[pos + 1] + &best;
            }
            weightings.push((w, total, suffix));
        }

        Search {
            u,
            n,
            integral: u.is_integral(),
            order,
            candidates,
            remaining,
            weightings,
            current: vec![Rational::ZERO; n],
            owners: vec![0; m],
            best: Rational::ZERO,
            best_owners: vec![0; m],
            root_bound: Rational::ZERO,
            nodes: 0,
            deadline: budget.map(|b| Instant::now() + b),
            timed_out: false,
        }
    }

    fn bound(&self, pos: usize) -> Rational {
        let n = self.n;
        let mut ub = (0..n)
            .map(|i| &self.current[i] + &self.remaining[pos * n + i])
            .min()
            .expect("at least one agent");
        for (w, total, suffix) in &self.weightings {
            let mut acc = suffix[pos].clone();
            for i in 0..n {
                if !w[i].is_zero() {
                    acc += &w[i] * &self.current[i];
                }
            }
            let b = &acc / total;
            if b < ub {
                ub = b;
            }
        }
        if self.integral {
            ub.floor()
        } else {
            ub
        }
    }

    fn greedy(&mut self) {
        // Poorest agent among those who value the item gets it.
        let m = self.order.len();
        let mut cur = vec![Rational::ZERO; self.n];
        let mut owners = vec![0; m];
        for pos in 0..m {
            let j = self.order[pos];
            let pick = self.candidates[pos]
                .iter()
                .copied()
                .min_by(|&a, &b| cur[a].cmp(&cur[b]).then(self.u.get(b, j).cmp(self.u.get(a, j))))
                .unwrap_or(0);
            cur[pick] += self.u.get(pick, j);
            owners[pos] = pick;
        }
        self.best = cur.iter().min().cloned().unwrap_or_default();
        self.best_owners = owners;
    }

    fn run(&mut self) {
        self.greedy();
        self.root_bound = self.bound(0);
        if self.best < self.root_bound {
            self.dfs(0);
        }
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if self.nodes.is_multiple_of(2048) && Instant::now() >= deadline {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn dfs(&mut self, pos: usize) {
        self.nodes += 1;
        if self.out_of_time() {
            return;
        }
        if pos == self.order.len() {
            let value = self.current.iter().min().cloned().unwrap_or_default();
            if value > self.best {
                self.best = value;
                self.best_owners.copy_from_slice(&self.owners);
            }
            return;
        }
        if self.bound(pos) <= self.best {
            return;
        }
        let j = self.order[pos];
        let mut agents = self.candidates[pos].clone();
        if agents.is_empty() {
            // Nobody values the item; where it goes changes no utility.
            self.owners[pos] = 0;
            self.dfs(pos + 1);
            return;
        }
        agents.sort_by(|&a, &b| self.current[a].cmp(&self.current[b]).then(a.cmp(&b)));
        for agent in agents {
            let v = self.u.get(agent, j).clone();
            self.current[agent] += &v;
            self.owners[pos] = agent;
            self.dfs(pos + 1);
            self.current[agent] -= &v;
            if self.timed_out || self.best >= self.root_bound {
                return;
            }
        }
    }
}

/// Approximately minimizes `Σ_j max_i λ_i u_i(o_j)` over the simplex by
/// exponentiated subgradient steps. Any simplex point yields a valid bound;
/// a good one only makes it tighter.
fn lagrangian_weights(u: &ValueMatrix) -> Vec<f64> {
    let (n, m) = (u.rows(), u.cols());
    let vals: Vec<f64> = (0..n * m).map(|k| u.get(k / m, k % m).to_f64()).collect();
    let scale = vals.iter().cloned().fold(0.0f64, f64::max).max(1e-12) * m as f64;
    let objective = |lam: &[f64]| -> f64 {
        (0..m)
            .map(|j| (0..n).map(|i| lam[i] * vals[i * m + j]).fold(0.0, f64::max))
            .sum()
    };
    let mut lam = vec![1.0 / n as f64; n];
    let mut best = lam.clone();
    let mut best_obj = objective(&lam);
    for step in 0..400 {
        let mut grad = vec![0.0; n];
        for j in 0..m {
            let (arg, _) = (0..n)
                .map(|i| (i, lam[i] * vals[i * m + j]))
                .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
            grad[arg] += vals[arg * m + j];
        }
        let eta = 2.0 / (1.0 + step as f64).sqrt();
        for i in 0..n {
            lam[i] *= (-eta * grad[i] / scale).exp();
        }
        let z: f64 = lam.iter().sum();
        lam.iter_mut().for_each(|x| *x /= z);
        let obj = objective(&lam);
        if obj < best_obj {
            best_obj = obj;
            best = lam.clone();
        }
    }
    best
}
