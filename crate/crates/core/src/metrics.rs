//! Distances between symbol strings and the edit scripts behind them.
//!
//! The cloud records deviations as scripts of `Swap` (arbitrary-position
//! transposition) and `ChangeValue` operations. `swap_script` is a
//! deterministic greedy constructor whose length upper-bounds the true
//! swap distance; `swap_distance_exact` is a BFS oracle that pins down the
//! optimum on tiny instances.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::symstring::{ceil_log2, symbol_mask, SymbolString};

/// One edit operation over a fixed-length string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EditOp {
    /// Exchange the symbols at two positions.
    Swap { i: u32, j: u32 },
    /// Replace the symbol at `i`; `old` is what the position held before.
    ChangeValue { i: u32, old: u32, new: u32 },
}

/// An ordered list of edit operations, applied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

/// Per-op storage accounting: a swap stores two position pointers, a
/// change-value stores one pointer plus the new symbol.
pub fn swap_op_bits(n_o: u32) -> u64 {
    2 * ceil_log2(n_o as u64) as u64
}

pub fn change_op_bits(k: u8, n_o: u32) -> u64 {
    k as u64 + ceil_log2(n_o as u64) as u64
}

impl EditScript {
    pub fn empty() -> Self {
        EditScript { ops: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Total stored bits with pointers sized for strings of `n_o` symbols.
    pub fn bit_cost(&self, k: u8, n_o: u32) -> u64 {
        self.ops
            .iter()
            .map(|op| match op {
                EditOp::Swap { .. } => swap_op_bits(n_o),
                EditOp::ChangeValue { .. } => change_op_bits(k, n_o),
            })
            .sum()
    }

    /// Reverses op order; swaps are self-inverse, change-values exchange
    /// old and new.
    pub fn invert(&self) -> EditScript {
        EditScript {
            ops: self
                .ops
                .iter()
                .rev()
                .map(|op| match *op {
                    EditOp::Swap { i, j } => EditOp::Swap { i, j },
                    EditOp::ChangeValue { i, old, new } => {
                        EditOp::ChangeValue { i, old: new, new: old }
                    }
                })
                .collect(),
        }
    }
}

/// Applies a script to `a`. A `ChangeValue` whose `old` does not match the
/// current symbol signals a corrupted script.
pub fn apply_script(a: &SymbolString, script: &EditScript) -> Result<SymbolString> {
    let n = a.len();
    let mut out = a.clone();
    let syms = out.symbols_mut();
    for op in &script.ops {
        match *op {
            EditOp::Swap { i, j } => {
                let (i, j) = (i as usize, j as usize);
                if i >= n || j >= n || i == j {
                    return Err(Error::Corrupted(format!("bad swap ({i},{j}) for length {n}")));
                }
                syms.swap(i, j);
            }
            EditOp::ChangeValue { i, old, new } => {
                let i = i as usize;
                if i >= n {
                    return Err(Error::Corrupted(format!("change position {i} out of range {n}")));
                }
                if syms[i] != old {
                    return Err(Error::Corrupted(format!(
                        "change at {i} expected old value {old}, found {}",
                        syms[i]
                    )));
                }
                if new & !symbol_mask(a.k()) != 0 {
                    return Err(Error::Corrupted(format!("change value {new} exceeds k={}", a.k())));
                }
                syms[i] = new;
            }
        }
    }
    Ok(out)
}

pub fn invert_script(script: &EditScript) -> EditScript {
    script.invert()
}

fn check_pair(a: &SymbolString, b: &SymbolString) -> Result<()> {
    if a.k() != b.k() {
        return Err(Error::WidthMismatch { left: a.k(), right: b.k() });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

/// Number of positions where the two strings differ.
pub fn hamming(a: &SymbolString, b: &SymbolString) -> Result<u64> {
    check_pair(a, b)?;
    Ok(a.symbols()
        .iter()
        .zip(b.symbols())
        .filter(|(x, y)| x != y)
        .count() as u64)
}

/// Mismatch count with early exit: `None` once the count exceeds `cap`.
pub fn hamming_bounded(a: &[u32], b: &[u32], cap: u64) -> Option<u64> {
    debug_assert_eq!(a.len(), b.len());
    let mut m = 0u64;
    // block-wise so the hot loop stays branch-light
    const BLOCK: usize = 32;
    let mut i = 0;
    let n = a.len();
    while i < n {
        let end = (i + BLOCK).min(n);
        let mut blk = 0u64;
        for j in i..end {
            blk += (a[j] != b[j]) as u64;
        }
        m += blk;
        if m > cap {
            return None;
        }
        i = end;
    }
    Some(m)
}

/// Deterministic greedy script turning `a` into `b` with swaps and
/// change-values only. Upper bound on the true swap distance:
/// two-position value cycles cost one swap, longer cycles cost `c-1`
/// swaps when that is cheaper in bits than `c` change-values, everything
/// else is changed in place.
pub fn swap_script(a: &SymbolString, b: &SymbolString) -> Result<EditScript> {
    check_pair(a, b)?;
    let n = a.len();
    let k = a.k();
    let ptr_len = n as u32;
    let tv = b.symbols();
    let mut work: Vec<u32> = a.symbols().to_vec();
    let mut ops = Vec::new();

    // positions still wrong, ascending
    let mut open: Vec<usize> = (0..n).filter(|&i| work[i] != tv[i]).collect();

    // step 1: 2-cycles. Position j completes i when (work[j], tv[j]) is
    // the mirror of (work[i], tv[i]); buckets keyed by that pair give the
    // lowest such j directly.
    {
        let mut pairs: HashMap<(u32, u32), VecDeque<usize>> = HashMap::new();
        for &i in &open {
            pairs.entry((work[i], tv[i])).or_default().push_back(i);
        }
        let mut fixed = vec![false; n];
        for &i in &open {
            if fixed[i] {
                continue;
            }
            let Some(bucket) = pairs.get_mut(&(tv[i], work[i])) else {
                continue;
            };
            // stale fronts are pairs fixed earlier; i itself never lives
            // in its own mirror bucket
            while bucket.front().is_some_and(|&j| fixed[j] || j < i) {
                bucket.pop_front();
            }
            if let Some(&j) = bucket.front() {
                bucket.pop_front();
                ops.push(EditOp::Swap { i: i as u32, j: j as u32 });
                work.swap(i, j);
                fixed[i] = true;
                fixed[j] = true;
            }
        }
        open.retain(|&i| work[i] != tv[i]);
    }

    // step 2: longer value cycles, kept only when cheaper in bits
    let swap_bits = swap_op_bits(ptr_len);
    let change_bits = change_op_bits(k, ptr_len);
    let mut resolved = vec![false; n];
    let mut in_chain = vec![false; n];
    let mut by_value: HashMap<u32, Vec<usize>> = HashMap::new();
    for &i in &open {
        by_value.entry(work[i]).or_default().push(i);
    }
    for idx in 0..open.len() {
        let start = open[idx];
        if resolved[start] {
            continue;
        }
        // follow the chain of needed values, lowest position first
        let mut chain = vec![start];
        in_chain[start] = true;
        let mut cur = start;
        let mut closed = false;
        loop {
            let need = tv[cur];
            let next = by_value.get(&need).and_then(|bucket| {
                bucket.iter().copied().find(|&j| !resolved[j] && !in_chain[j])
            });
            match next {
                None => break,
                Some(j) => {
                    chain.push(j);
                    in_chain[j] = true;
                    cur = j;
                    if tv[cur] == work[start] {
                        closed = true;
                        break;
                    }
                }
            }
        }
        for &p in &chain {
            in_chain[p] = false;
        }
        if closed {
            let c = chain.len() as u64;
            if (c - 1) * swap_bits < c * change_bits {
                for t in 1..chain.len() {
                    let (i, j) = (chain[t - 1], chain[t]);
                    ops.push(EditOp::Swap { i: i as u32, j: j as u32 });
                    work.swap(i, j);
                }
                for &p in &chain {
                    resolved[p] = true;
                }
            }
        }
    }

    // step 3: change the rest in place
    for i in 0..n {
        if work[i] != tv[i] {
            ops.push(EditOp::ChangeValue { i: i as u32, old: work[i], new: tv[i] });
            work[i] = tv[i];
        }
    }

    debug_assert_eq!(work, tv);
    Ok(EditScript { ops })
}

/// Length of the greedy swap script.
pub fn swap_distance(a: &SymbolString, b: &SymbolString) -> Result<u64> {
    Ok(swap_script(a, b)?.len() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactDistance {
    Exact(u64),
    Exceeded,
}

/// Exact minimum swap/change-value op count by breadth-first search.
///
/// State-space guard: only strings of length <= 8 with k <= 4 are
/// accepted, and the search stops once `limit` is exceeded.
pub fn swap_distance_exact(
    a: &SymbolString,
    b: &SymbolString,
    limit: u64,
) -> Result<ExactDistance> {
    check_pair(a, b)?;
    if a.len() > 8 || a.k() > 4 {
        return Err(Error::TooLarge(format!(
            "exact search limited to length <= 8 and k <= 4, got length {} k {}",
            a.len(),
            a.k()
        )));
    }
    if a == b {
        return Ok(ExactDistance::Exact(0));
    }
    let n = a.len();
    let nvals = 1u32 << a.k();
    let target = b.symbols().to_vec();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let start = a.symbols().to_vec();
    seen.insert(start.clone());
    let mut frontier = VecDeque::new();
    frontier.push_back((start, 0u64));
    while let Some((state, d)) = frontier.pop_front() {
        if d >= limit {
            return Ok(ExactDistance::Exceeded);
        }
        let nd = d + 1;
        for i in 0..n {
            for j in (i + 1)..n {
                if state[i] == state[j] {
                    continue;
                }
                let mut next = state.clone();
                next.swap(i, j);
                if next == target {
                    return Ok(ExactDistance::Exact(nd));
                }
                if seen.insert(next.clone()) {
                    frontier.push_back((next, nd));
                }
            }
            for v in 0..nvals {
                if v == state[i] {
                    continue;
                }
                let mut next = state.clone();
                next[i] = v;
                if next == target {
                    return Ok(ExactDistance::Exact(nd));
                }
                if seen.insert(next.clone()) {
                    frontier.push_back((next, nd));
                }
            }
        }
    }
    Ok(ExactDistance::Exceeded)
}

/// Damerau-Levenshtein distance: insert, delete, substitute and adjacent
/// transposition at unit cost. Lengths may differ.
pub fn damerau_levenshtein(a: &SymbolString, b: &SymbolString) -> Result<u64> {
    if a.k() != b.k() {
        return Err(Error::WidthMismatch { left: a.k(), right: b.k() });
    }
    let s = a.symbols();
    let t = b.symbols();
    let (n, m) = (s.len(), t.len());
    if n == 0 {
        return Ok(m as u64);
    }
    if m == 0 {
        return Ok(n as u64);
    }
    let w = m + 1;
    let mut prev2 = vec![0u64; w];
    let mut prev = (0..=m as u64).collect::<Vec<_>>();
    let mut cur = vec![0u64; w];
    for i in 1..=n {
        cur[0] = i as u64;
        for j in 1..=m {
            let cost = (s[i - 1] != t[j - 1]) as u64;
            let mut best = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && s[i - 1] == t[j - 2] && s[i - 2] == t[j - 1] {
                best = best.min(prev2[j - 2] + 1);
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}
