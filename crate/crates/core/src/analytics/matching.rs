//! Longest-matching-block decomposition, as in the classic diff sequence
//! matcher with no junk heuristic: find the longest common run, then recurse
//! on the pieces to its left and right.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchBlock {
    pub a: usize,
    pub b: usize,
    pub size: usize,
}

struct Matcher<'s, T> {
    a: &'s [T],
    b2j: HashMap<&'s T, Vec<usize>>,
    // Scratch rows for the run-length DP, indexed by j + 1.
    prev: Vec<usize>,
    next: Vec<usize>,
    touched_prev: Vec<usize>,
    touched_next: Vec<usize>,
}

impl<'s, T: Eq + std::hash::Hash> Matcher<'s, T> {
    fn new(a: &'s [T], b: &'s [T]) -> Self {
        let mut b2j: HashMap<&T, Vec<usize>> = HashMap::new();
        for (j, x) in b.iter().enumerate() {
            b2j.entry(x).or_default().push(j);
        }
        Self {
            a,
            b2j,
            prev: vec![0; b.len() + 1],
            next: vec![0; b.len() + 1],
            touched_prev: Vec::new(),
            touched_next: Vec::new(),
        }
    }

    /// Longest block in `a[alo..ahi]` × `b[blo..bhi]`; ties go to the
    /// earliest start in `a`, then in `b`.
    fn longest(&mut self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> MatchBlock {
        let (mut best_i, mut best_j, mut best) = (alo, blo, 0);
        for i in alo..ahi {
            if let Some(js) = self.b2j.get(&self.a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = self.prev[j] + 1;
                    self.next[j + 1] = k;
                    self.touched_next.push(j + 1);
                    if k > best {
                        best_i = i + 1 - k;
                        best_j = j + 1 - k;
                        best = k;
                    }
                }
            }
            for &t in &self.touched_prev {
                self.prev[t] = 0;
            }
            self.touched_prev.clear();
            std::mem::swap(&mut self.prev, &mut self.next);
            std::mem::swap(&mut self.touched_prev, &mut self.touched_next);
        }
        for &t in &self.touched_prev {
            self.prev[t] = 0;
        }
        self.touched_prev.clear();
        MatchBlock {
            a: best_i,
            b: best_j,
            size: best,
        }
    }
}

/// Non-overlapping matching blocks in increasing order, adjacent blocks
/// merged. No trailing sentinel.
pub fn matching_blocks<T: Eq + std::hash::Hash>(a: &[T], b: &[T]) -> Vec<MatchBlock> {
    let mut m = Matcher::new(a, b);
    let mut queue = vec![(0, a.len(), 0, b.len())];
    let mut found = Vec::new();
    while let Some((alo, ahi, blo, bhi)) = queue.pop() {
        let blk = m.longest(alo, ahi, blo, bhi);
        if blk.size == 0 {
            continue;
        }
        found.push(blk);
        if alo < blk.a && blo < blk.b {
            queue.push((alo, blk.a, blo, blk.b));
        }
        if blk.a + blk.size < ahi && blk.b + blk.size < bhi {
            queue.push((blk.a + blk.size, ahi, blk.b + blk.size, bhi));
        }
    }
    found.sort_by_key(|m| (m.a, m.b));
    let mut merged: Vec<MatchBlock> = Vec::with_capacity(found.len());
    for blk in found {
        match merged.last_mut() {
            Some(last) if last.a + last.size == blk.a && last.b + last.size == blk.b => {
                last.size += blk.size;
            }
            _ => merged.push(blk),
        }
    }
    merged
}

/// Number of elements of `a` covered by matching blocks against `b`.
pub fn matched_len<T: Eq + std::hash::Hash>(a: &[T], b: &[T]) -> usize {
    matching_blocks(a, b).iter().map(|m| m.size).sum()
}
