use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{OnceLock, RwLock};

use rustc_hash::FxHashMap;

use super::{compatible, PairCompatibility, SampledTrack, SeparationParams};
use crate::trajgen::CandidateSet;
use crate::{Error, Result, Scalar};

/// Memo of computed pair compatibilities, keyed canonically so that
/// `(i, ti, j, tj)` and `(j, tj, i, ti)` share one entry.
///
/// The first lookup binds the cache to the shape of its candidate set:
/// from then on results live in dense two-bit tables, one per aircraft
/// pair, and sampled positions of each trajectory are kept once computed.
/// Lookups against a different shape, or sets too large for the tables,
/// go to a locked hash map. Entries are never overwritten, so concurrent
/// writers of the same pair agree.
#[derive(Debug)]
pub struct CompatibilityCache<S = f64> {
    map: RwLock<FxHashMap<u128, bool>>,
    hits: AtomicU64,
    misses: AtomicU64,
    store: OnceLock<Store<S>>,
}

/// Largest total pair count kept in dense tables (two bits each).
const DENSE_LIMIT: u128 = 1 << 31;
const KNOWN: u64 = 0b10;
const COMPATIBLE: u64 = 0b01;

#[derive(Debug)]
struct Store<S> {
    step: S,
    sizes: Vec<usize>,
    tracks: Vec<Vec<OnceLock<SampledTrack<S>>>>,
    tables: Option<Vec<OnceLock<Box<[AtomicU64]>>>>,
}

impl<S> Store<S> {
    fn pair_index(&self, i: usize, j: usize) -> usize {
        let n = self.sizes.len();
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    fn in_range(&self, i: usize, ti: usize, j: usize, tj: usize) -> bool {
        i < self.sizes.len() && j < self.sizes.len() && ti < self.sizes[i] && tj < self.sizes[j]
    }

    /// Table word and shift of a canonical (`i < j`) entry, allocating the table.
    fn slot(&self, i: usize, ti: usize, j: usize, tj: usize) -> Option<(&AtomicU64, u32)> {
        let tables = self.tables.as_ref()?;
        let table = tables[self.pair_index(i, j)].get_or_init(|| {
            let words = (self.sizes[i] * self.sizes[j]).div_ceil(32);
            (0..words).map(|_| AtomicU64::new(0)).collect()
        });
        let idx = ti * self.sizes[j] + tj;
        Some((&table[idx / 32], (idx % 32) as u32 * 2))
    }

    fn peek(&self, i: usize, ti: usize, j: usize, tj: usize) -> Option<Option<bool>> {
        let tables = self.tables.as_ref()?;
        let Some(table) = tables[self.pair_index(i, j)].get() else {
            return Some(None);
        };
        let idx = ti * self.sizes[j] + tj;
        let bits = (table[idx / 32].load(Ordering::Relaxed) >> ((idx % 32) * 2)) & 0b11;
        Some((bits & KNOWN != 0).then_some(bits & COMPATIBLE != 0))
    }

    fn dense_entries(&self) -> Vec<(usize, usize, usize, usize, bool)> {
        let mut out = Vec::new();
        let Some(tables) = &self.tables else {
            return out;
        };
        let n = self.sizes.len();
        for i in 0..n {
            for j in i + 1..n {
                let Some(table) = tables[self.pair_index(i, j)].get() else {
                    continue;
                };
                for (w, word) in table.iter().enumerate() {
                    let mut bits = word.load(Ordering::Relaxed);
                    while bits != 0 {
                        let b = bits.trailing_zeros() as usize & !1;
                        let idx = w * 32 + b / 2;
                        out.push((i, idx / self.sizes[j], j, idx % self.sizes[j], (bits >> b) & COMPATIBLE != 0));
                        bits &= !(0b11 << b);
                    }
                }
            }
        }
        out
    }
}

impl<S> Default for CompatibilityCache<S> {
    fn default() -> Self {
        Self { map: RwLock::default(), hits: AtomicU64::new(0), misses: AtomicU64::new(0), store: OnceLock::new() }
    }
}

fn key(i: usize, ti: usize, j: usize, tj: usize) -> u128 {
    let (a, b) = if i < j { ((i, ti), (j, tj)) } else { ((j, tj), (i, ti)) };
    ((a.0 as u128) << 96) | ((a.1 as u128) << 64) | ((b.0 as u128) << 32) | b.1 as u128
}

fn unkey(k: u128) -> (usize, usize, usize, usize) {
    let m = u32::MAX as u128;
    ((k >> 96) as usize, ((k >> 64) & m) as usize, ((k >> 32) & m) as usize, (k & m) as usize)
}

fn canonical(i: usize, ti: usize, j: usize, tj: usize) -> (usize, usize, usize, usize) {
    if i < j {
        (i, ti, j, tj)
    } else {
        (j, tj, i, ti)
    }
}

impl<S: Scalar> CompatibilityCache<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, i: usize, ti: usize, j: usize, tj: usize) -> Option<bool> {
        let (i, ti, j, tj) = canonical(i, ti, j, tj);
        if let Some(store) = self.store.get() {
            if store.in_range(i, ti, j, tj) {
                if let Some(v) = store.peek(i, ti, j, tj) {
                    return v.or_else(|| self.map.read().expect("cache lock").get(&key(i, ti, j, tj)).copied());
                }
            }
        }
        self.map.read().expect("cache lock").get(&key(i, ti, j, tj)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// All entries as `(i, ti, j, tj, compatible)` with `i < j`, sorted.
    pub fn entries(&self) -> Vec<(usize, usize, usize, usize, bool)> {
        let mut out = self.store.get().map(Store::dense_entries).unwrap_or_default();
        let map = self.map.read().expect("cache lock");
        out.extend(map.iter().map(|(&k, &v)| {
            let (i, ti, j, tj) = unkey(k);
            (i, ti, j, tj, v)
        }));
        out.sort_unstable();
        out.dedup();
        out
    }

    fn store(&self, candidates: &CandidateSet<S>, params: &SeparationParams<S>) -> Option<&Store<S>> {
        let store = self.store.get_or_init(|| {
            let sizes = candidates.domain_sizes();
            let n = sizes.len();
            let total: u128 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| sizes[i] as u128 * sizes[j] as u128).sum();
            let tables = (total <= DENSE_LIMIT).then(|| (0..n * n.saturating_sub(1) / 2).map(|_| OnceLock::new()).collect());
            let tracks = sizes.iter().map(|&t| (0..t).map(|_| OnceLock::new()).collect()).collect();
            Store { step: params.sample_step, sizes, tracks, tables }
        });
        let bound = store.step == params.sample_step
            && store.sizes.len() == candidates.n_aircraft()
            && store.sizes.iter().zip(&candidates.lists).all(|(&s, l)| s == l.len());
        bound.then_some(store)
    }
}

fn compute<S: Scalar>(
    store: Option<&Store<S>>,
    i: usize,
    ti: usize,
    j: usize,
    tj: usize,
    candidates: &CandidateSet<S>,
    params: &SeparationParams<S>,
) -> Result<bool> {
    let Some(store) = store else {
        return compatible(candidates.trajectory(i, ti), candidates.trajectory(j, tj), params);
    };
    let track = |a: usize, t: usize| -> Result<&SampledTrack<S>> {
        let cell = &store.tracks[a][t];
        if let Some(tr) = cell.get() {
            return Ok(tr);
        }
        let tr = SampledTrack::new(candidates.trajectory(a, t), params.sample_step)?;
        Ok(cell.get_or_init(|| tr))
    };
    track(i, ti)?.compatible_with(track(j, tj)?, params.threshold())
}

/// Compatibility of trajectory `ti` of aircraft `i` with trajectory `tj`
/// of aircraft `j`, computed on first request and memoized.
pub fn check_pair_cached<S: Scalar>(
    cache: &CompatibilityCache<S>,
    i: usize,
    ti: usize,
    j: usize,
    tj: usize,
    candidates: &CandidateSet<S>,
    params: &SeparationParams<S>,
) -> Result<bool> {
    if i == j {
        return Err(Error::Contract(format!("pair check within aircraft {i}")));
    }
    let n = candidates.n_aircraft();
    if i >= n || j >= n || ti >= candidates.lists[i].len() || tj >= candidates.lists[j].len() {
        return Err(Error::Contract(format!("pair ({i}, {ti}) / ({j}, {tj}) outside the candidate domains")));
    }
    let (i, ti, j, tj) = canonical(i, ti, j, tj);
    let store = cache.store(candidates, params);
    if let Some((word, shift)) = store.and_then(|s| s.slot(i, ti, j, tj)) {
        let bits = (word.load(Ordering::Relaxed) >> shift) & 0b11;
        if bits & KNOWN != 0 {
            cache.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(bits & COMPATIBLE != 0);
        }
        cache.misses.fetch_add(1, Ordering::Relaxed);
        let value = compute(store, i, ti, j, tj, candidates, params)?;
        word.fetch_or((KNOWN | value as u64) << shift, Ordering::Relaxed);
        return Ok(value);
    }
    let k = key(i, ti, j, tj);
    if let Some(&v) = cache.map.read().expect("cache lock").get(&k) {
        cache.hits.fetch_add(1, Ordering::Relaxed);
        return Ok(v);
    }
    cache.misses.fetch_add(1, Ordering::Relaxed);
    let value = compute(store, i, ti, j, tj, candidates, params)?;
    Ok(*cache.map.write().expect("cache lock").entry(k).or_insert(value))
}

/// [`PairCompatibility`] backed by a cache and on-demand checks.
pub struct LazyChecker<'a, S> {
    pub cache: &'a CompatibilityCache<S>,
    pub candidates: &'a CandidateSet<S>,
    pub params: SeparationParams<S>,
}

impl<S: Scalar> PairCompatibility for LazyChecker<'_, S> {
    fn is_compatible(&self, i: usize, ti: usize, j: usize, tj: usize) -> Result<bool> {
        check_pair_cached(self.cache, i, ti, j, tj, self.candidates, &self.params)
    }
}
