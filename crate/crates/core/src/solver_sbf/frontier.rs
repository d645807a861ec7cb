use std::cmp::Ordering;

use crate::Scalar;

/// `order` holds the cost as order-preserving bits. `rank` packs the
/// inverted depth (top 8 bits) above the first prefix element, both
/// saturated, so most ties are settled without reading the slot.
#[derive(Clone, Copy, Debug)]
struct Entry {
    order: u64,
    rank: u32,
    slot: u32,
}

fn order_bits(cost: f64) -> u64 {
    let bits = cost.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

fn from_order_bits(order: u64) -> f64 {
    if order >> 63 == 1 {
        f64::from_bits(order & !(1 << 63))
    } else {
        f64::from_bits(!order)
    }
}

/// A partial selection: `tab[k]` is the trajectory chosen for search
/// position `k`, `None` past `index`.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchNode<S> {
    pub tab: Vec<Option<u32>>,
    pub index: usize,
    pub cost: S,
}

/// Min-priority queue of search nodes keyed by cost. Ties go to the deeper
/// node, then to the lexicographically smaller prefix.
///
/// Search pops are monotone (every push is at least the last pop), so
/// this is a radix heap over the cost bits: bucket `k` holds entries whose
/// key first differs from the last popped key at bit `k - 1`, and entries
/// equal to it sit in a small binary heap ordered by the tie rule. A push
/// below the last pop is still handled, by re-bucketing everything.
///
/// Prefixes are copied into fixed-width slots (depth first) that are
/// recycled on pop,
/// so memory follows the number of queued nodes.
#[derive(Clone, Debug)]
pub struct Frontier<S> {
    width: usize,
    last: u64,
    ties: Vec<Entry>,
    buckets: Vec<Vec<Entry>>,
    /// Emptied bucket kept for its capacity.
    spare: Vec<Entry>,
    len: usize,
    slots: Vec<u32>,
    free: Vec<u32>,
    _cost: std::marker::PhantomData<S>,
}

impl<S: Scalar> Frontier<S> {
    /// `width` is the full selection length (number of aircraft).
    pub fn new(width: usize) -> Self {
        Self {
            width: width.max(1),
            last: 0,
            ties: Vec::new(),
            buckets: vec![Vec::new(); 65],
            spare: Vec::new(),
            len: 0,
            slots: Vec::new(),
            free: Vec::new(),
            _cost: std::marker::PhantomData,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Approximate bytes held.
    pub fn footprint(&self) -> usize {
        let entries: usize = self.ties.capacity() + self.spare.capacity() + self.buckets.iter().map(Vec::capacity).sum::<usize>();
        entries * std::mem::size_of::<Entry>() + (self.slots.capacity() + self.free.capacity()) * 4
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn tab(&self, slot: u32) -> &[u32] {
        let start = slot as usize * self.stride();
        let depth = self.slots[start] as usize;
        &self.slots[start + 1..=start + 1 + depth]
    }

    /// Queues the partial selection `prefix` (non-empty, at most `width` long).
    pub fn push(&mut self, prefix: &[u32], cost: S) {
        assert!(!prefix.is_empty() && prefix.len() <= self.width, "prefix length out of range");
        let stride = self.stride();
        let slot = match self.free.pop() {
            Some(s) => s,
            None => {
                let s = u32::try_from(self.slots.len() / stride).expect("frontier slot overflow");
                self.slots.resize(self.slots.len() + stride, 0);
                s
            }
        };
        let start = slot as usize * stride;
        let depth = prefix.len() - 1;
        self.slots[start] = depth as u32;
        self.slots[start + 1..start + 1 + prefix.len()].copy_from_slice(prefix);
        let rank = (255 - depth.min(255) as u32) << 24 | prefix[0].min((1 << 24) - 1);
        let entry = Entry { order: order_bits(cost.to_f64_lossy()), rank, slot };
        if entry.order < self.last {
            self.rebase(entry.order);
        }
        self.place(entry);
        self.len += 1;
    }

    fn place(&mut self, e: Entry) {
        let bucket = (64 - (e.order ^ self.last).leading_zeros()) as usize;
        if bucket == 0 {
            self.ties.push(e);
            self.sift_up(self.ties.len() - 1);
        } else {
            self.buckets[bucket].push(e);
        }
    }

    fn rebase(&mut self, order: u64) {
        let mut all = std::mem::take(&mut self.ties);
        for b in &mut self.buckets {
            all.append(b);
        }
        self.last = order;
        for e in all {
            self.place(e);
        }
    }

    /// Refills `ties` from the lowest non-empty bucket.
    fn refill(&mut self) -> bool {
        let Some(k) = (1..65).find(|&k| !self.buckets[k].is_empty()) else {
            return false;
        };
        let mut bucket = std::mem::replace(&mut self.buckets[k], std::mem::take(&mut self.spare));
        self.last = bucket.iter().map(|e| e.order).min().expect("non-empty bucket");
        for e in bucket.drain(..) {
            self.place(e);
        }
        self.spare = bucket;
        true
    }

    /// Removes the minimum node, copying its prefix into `out`.
    pub fn pop_into(&mut self, out: &mut Vec<u32>) -> Option<S> {
        if self.ties.is_empty() && !self.refill() {
            return None;
        }
        let last = self.ties.pop().expect("refilled");
        let top = if self.ties.is_empty() {
            last
        } else {
            let top = std::mem::replace(&mut self.ties[0], last);
            self.sift_down(0);
            top
        };
        self.len -= 1;
        out.clear();
        out.extend_from_slice(self.tab(top.slot));
        self.free.push(top.slot);
        Some(S::lit(from_order_bits(top.order)))
    }

    pub fn pop(&mut self) -> Option<SearchNode<S>> {
        let mut prefix = Vec::new();
        let cost = self.pop_into(&mut prefix)?;
        let mut tab = vec![None; self.width];
        for (k, v) in prefix.iter().enumerate() {
            tab[k] = Some(*v);
        }
        Some(SearchNode { tab, index: prefix.len() - 1, cost })
    }

    #[inline]
    fn less(&self, a: &Entry, b: &Entry) -> bool {
        match (a.order, a.rank).cmp(&(b.order, b.rank)) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                let (ta, tb) = (self.tab(a.slot), self.tab(b.slot));
                tb.len().cmp(&ta.len()).then_with(|| ta.cmp(tb)) == Ordering::Less
            }
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        let moving = self.ties[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.less(&moving, &self.ties[parent]) {
                break;
            }
            self.ties[i] = self.ties[parent];
            i = parent;
        }
        self.ties[i] = moving;
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.ties.len();
        let moving = self.ties[i];
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && self.less(&self.ties[r], &self.ties[l]) { r } else { l };
            if !self.less(&self.ties[child], &moving) {
                break;
            }
            self.ties[i] = self.ties[child];
            i = child;
        }
        self.ties[i] = moving;
    }
}
