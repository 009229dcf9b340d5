//! Exhaustive enumeration of complete allocations.

use crate::error::{Error, Result};
use crate::indices::BundleValues;
use crate::model::{Allocation, Instance, ValueMatrix};

/// Default ceiling on `n^m` for exhaustive searches.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// `n^m`, or `None` when it overflows `u64`.
pub fn allocation_count(agents: usize, items: usize) -> Option<u64> {
    let base = agents as u64;
    let exp = u32::try_from(items).ok()?;
    base.checked_pow(exp)
}

pub(crate) fn check_cap(inst: &Instance, cap: u64) -> Result<u64> {
    match allocation_count(inst.num_agents(), inst.num_items()) {
        Some(size) if size <= cap => Ok(size),
        Some(size) => Err(Error::SearchSpaceTooLarge {
            size: size.to_string(),
            cap,
        }),
        None => Err(Error::SearchSpaceTooLarge {
            size: format!("{}^{}", inst.num_agents(), inst.num_items()),
            cap,
        }),
    }
}

/// Iterator over the `n^m` complete allocations in lexicographic order of
/// the owner vector (the last item varies fastest).
pub struct CompleteAllocations {
    agents: usize,
    owners: Vec<usize>,
    done: bool,
}

impl Iterator for CompleteAllocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        let out = Allocation::complete(&self.owners);
        self.done = !advance(&mut self.owners, self.agents, |_, _, _| {});
        Some(out)
    }
}

/// Every complete allocation of `inst`, refusing when `n^m > cap`.
pub fn enumerate_complete_allocations(inst: &Instance, cap: u64) -> Result<CompleteAllocations> {
    check_cap(inst, cap)?;
    Ok(CompleteAllocations {
        agents: inst.num_agents(),
        owners: vec![0; inst.num_items()],
        done: false,
    })
}

/// Odometer step. Calls `moved(item, from, to)` for every digit that changes.
/// Returns false once the odometer wraps around to all zeros.
fn advance(owners: &mut [usize], agents: usize, mut moved: impl FnMut(usize, usize, usize)) -> bool {
    for item in (0..owners.len()).rev() {
        let from = owners[item];
        if from + 1 < agents {
            owners[item] = from + 1;
            moved(item, from, from + 1);
            return true;
        }
        owners[item] = 0;
        if from != 0 {
            moved(item, from, 0);
        }
    }
    false
}

/// Visits every complete allocation with item 0 pinned to `first` (all
/// allocations when `first` is `None`), maintaining the bundle-value table
/// incrementally. The callback sees the owner vector and the table.
pub(crate) fn walk_complete(
    matrix: &ValueMatrix,
    first: Option<usize>,
    mut visit: impl FnMut(&[usize], &BundleValues),
) {
    let (n, m) = (matrix.rows(), matrix.cols());
    let mut owners = vec![0usize; m];
    if let (Some(a), true) = (first, m > 0) {
        owners[0] = a;
    }
    let mut values = BundleValues::from_owners(matrix, owners.iter().map(|&a| Some(a)));
    let free = if first.is_some() && m > 0 { 1 } else { 0 };
    loop {
        visit(&owners, &values);
        let more = advance(&mut owners[free..], n, |item, from, to| {
            values.take(matrix, item + free, from);
            values.give(matrix, item + free, to);
        });
        if !more {
            break;
        }
    }
}
