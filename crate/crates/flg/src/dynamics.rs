//! Facility-side strategy: best responses, SPE certification, improving
//! response dynamics, social optima and empirical PoA/PoS measurement.
//!
//! Equilibrium loads depend only on the multiset of occupied locations, and
//! co-located facilities carry equal loads, so all sweeps here share a load
//! cache keyed by the sorted location vector. Deviations are pruned with the
//! upper bound load(f at u) <= w(A(u)) (a facility never carries more than
//! its attraction range weighs).

use crate::distribution::LoadVector;
use crate::equilibrium::compute_equilibrium_loads;
use crate::graph::{HostGraph, Placement, VertexId};
use crate::rational::{format_ratio, rat, rat_int, Rational};
use crate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

/// Memoized equilibrium loads per location multiset.
#[derive(Default)]
pub struct LoadCache {
    map: HashMap<Vec<u32>, Vec<Rational>>,
}

impl LoadCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Loads for `s`, computed once per multiset and remapped by location.
    pub fn loads(&mut self, g: &HostGraph, s: &Placement) -> LoadVector {
        let mut key: Vec<u32> = s.iter().map(|v| v.0).collect();
        key.sort_unstable();
        if !self.map.contains_key(&key) {
            let sorted = Placement::from_indices(&key);
            let loads: Vec<Rational> = compute_equilibrium_loads(g, &sorted).loads.into();
            self.map.insert(key.clone(), loads);
        }
        let sorted_loads = &self.map[&key];
        let loads = s
            .iter()
            .map(|v| {
                let pos = key.binary_search(&v.0).expect("location is in its own key");
                sorted_loads[pos].clone()
            })
            .collect();
        LoadVector::new(loads)
    }
}

/// w({u} + in-neighbors of u) for every u: what a lone facility at u could
/// attract at most.
fn attraction_weights(g: &HostGraph) -> Vec<u64> {
    g.vertices()
        .map(|u| g.weight(u) + g.in_neighbors(u).map(|v| g.weight(v)).sum::<u64>())
        .collect()
}

/// The location maximizing facility `j`'s equilibrium load, all other
/// facilities fixed. Ties keep the current location, then the smallest
/// vertex id.
pub fn best_response(g: &HostGraph, s: &Placement, j: usize) -> (VertexId, Rational) {
    let mut cache = LoadCache::new();
    let aw = attraction_weights(g);
    best_response_cached(g, s, j, &mut cache, &aw)
}

fn best_response_cached(
    g: &HostGraph,
    s: &Placement,
    j: usize,
    cache: &mut LoadCache,
    aw: &[u64],
) -> (VertexId, Rational) {
    assert!(j < s.k(), "facility index {j} out of range");
    let current = s.location(j);
    let mut best_loc = current;
    let mut best_load = cache.loads(g, s).get(j).clone();
    for v in g.vertices() {
        if v == current || rat_int(aw[v.index()]) <= best_load {
            continue;
        }
        let load = cache.loads(g, &s.with_location(j, v)).get(j).clone();
        if load > best_load {
            best_loc = v;
            best_load = load;
        }
    }
    (best_loc, best_load)
}

/// A strictly improving relocation of one facility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deviation {
    pub facility: usize,
    pub from: VertexId,
    pub to: VertexId,
    pub old_load: Rational,
    pub new_load: Rational,
}

/// `None` iff no facility can strictly increase its equilibrium load by
/// relocating; otherwise the first violation (facility, then vertex order).
pub fn check_spe(g: &HostGraph, s: &Placement) -> Option<Deviation> {
    let mut cache = LoadCache::new();
    let aw = attraction_weights(g);
    check_spe_cached(g, s, &mut cache, &aw)
}

pub fn is_spe(g: &HostGraph, s: &Placement) -> bool {
    check_spe(g, s).is_none()
}

fn check_spe_cached(
    g: &HostGraph,
    s: &Placement,
    cache: &mut LoadCache,
    aw: &[u64],
) -> Option<Deviation> {
    let loads = cache.loads(g, s);
    for j in 0..s.k() {
        let old_load = loads.get(j);
        for v in g.vertices() {
            if v == s.location(j) || rat_int(aw[v.index()]) <= *old_load {
                continue;
            }
            let new_load = cache.loads(g, &s.with_location(j, v)).get(j).clone();
            if new_load > *old_load {
                return Some(Deviation {
                    facility: j,
                    from: s.location(j),
                    to: v,
                    old_load: old_load.clone(),
                    new_load,
                });
            }
        }
    }
    None
}

/// Ascending multiset of loads; the ordinal potential of the dynamics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialVector(Vec<Rational>);

impl PotentialVector {
    pub fn values(&self) -> &[Rational] {
        &self.0
    }
}

pub fn potential_vector(loads: &LoadVector) -> PotentialVector {
    let mut values = loads.as_slice().to_vec();
    values.sort();
    PotentialVector(values)
}

/// Lexicographic order from the first index; panics on length mismatch.
pub fn lex_compare(a: &PotentialVector, b: &PotentialVector) -> Ordering {
    assert_eq!(a.0.len(), b.0.len(), "potential length mismatch");
    a.0.cmp(&b.0)
}

/// One recorded improving move.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub facility: usize,
    pub from: VertexId,
    pub to: VertexId,
    pub old_load: Rational,
    pub new_load: Rational,
    pub loads_before: LoadVector,
    pub loads_after: LoadVector,
    pub placement_after: Placement,
}

/// An improving-response run: every step strictly increases the mover's
/// load, and the potential strictly lexicographically increases.
#[derive(Clone, Debug)]
pub struct DynamicsTrace {
    pub initial: Placement,
    pub terminal: Placement,
    pub steps: Vec<TraceStep>,
}

impl DynamicsTrace {
    pub fn move_count(&self) -> usize {
        self.steps.len()
    }

    /// Line-oriented human-readable log.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            writeln!(
                out,
                "move {}: f{} {} -> {} load {} -> {}",
                i + 1,
                step.facility,
                step.from,
                step.to,
                format_ratio(&step.old_load),
                format_ratio(&step.new_load),
            )
            .unwrap();
        }
        out
    }

    /// CSV export: move index, mover, endpoints, then the full placement,
    /// loads and sorted potential after the move (space-joined fields).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("move,mover,from,to,locations,loads,potential\n");
        for (i, step) in self.steps.iter().enumerate() {
            let locations: Vec<String> =
                step.placement_after.iter().map(|v| v.to_string()).collect();
            let loads: Vec<String> = step.loads_after.iter().map(format_ratio).collect();
            let potential: Vec<String> = potential_vector(&step.loads_after)
                .values()
                .iter()
                .map(format_ratio)
                .collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i + 1,
                step.facility,
                step.from,
                step.to,
                locations.join(" "),
                loads.join(" "),
                potential.join(" "),
            )
            .unwrap();
        }
        out
    }
}

/// Where the dynamics start.
#[derive(Clone, Debug)]
pub enum InitialPlacement {
    Given(Placement),
    Random { seed: u64 },
}

/// Round-robin best-response dynamics until no facility can improve. The
/// finite improvement property guarantees termination; exceeding `move_cap`
/// is reported as an error rather than looping.
pub fn find_spe(
    g: &HostGraph,
    k: usize,
    initial: InitialPlacement,
    move_cap: u64,
) -> Result<DynamicsTrace, Error> {
    assert!(move_cap >= 1, "move cap must be positive");
    let mut s = match initial {
        InitialPlacement::Given(p) => {
            assert_eq!(p.k(), k, "initial placement must have k locations");
            p.validate(g).expect("initial placement must fit the graph");
            p
        }
        InitialPlacement::Random { seed } => {
            assert!(g.n() > 0 || k == 0, "cannot place facilities on an empty graph");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Placement::new(
                (0..k)
                    .map(|_| VertexId(rng.gen_range(0..g.n() as u32)))
                    .collect(),
            )
        }
    };
    let initial_placement = s.clone();
    let mut cache = LoadCache::new();
    let aw = attraction_weights(g);
    let mut steps = Vec::new();
    let mut moves: u64 = 0;
    loop {
        let mut moved = false;
        for j in 0..k {
            let loads_before = cache.loads(g, &s);
            let (to, new_load) = best_response_cached(g, &s, j, &mut cache, &aw);
            if new_load > *loads_before.get(j) {
                if moves == move_cap {
                    return Err(Error::MoveCapExhausted { cap: move_cap });
                }
                moves += 1;
                let next = s.with_location(j, to);
                let loads_after = cache.loads(g, &next);
                steps.push(TraceStep {
                    facility: j,
                    from: s.location(j),
                    to,
                    old_load: loads_before.get(j).clone(),
                    new_load,
                    loads_before,
                    loads_after,
                    placement_after: next.clone(),
                });
                s = next;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    debug_assert!(check_spe_cached(g, &s, &mut cache, &aw).is_none());
    Ok(DynamicsTrace {
        initial: initial_placement,
        terminal: s,
        steps,
    })
}

fn binomial(n: u128, m: u128) -> u128 {
    if m > n {
        return 0;
    }
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Blocked bitset coverage masks: mask[u] covers {u} + in-neighbors of u.
fn coverage_masks(g: &HostGraph) -> Vec<Vec<u64>> {
    let blocks = g.n().div_ceil(64);
    g.vertices()
        .map(|u| {
            let mut mask = vec![0u64; blocks];
            let mut set = |v: VertexId| mask[v.index() / 64] |= 1 << (v.index() % 64);
            set(u);
            for v in g.in_neighbors(u) {
                set(v);
            }
            mask
        })
        .collect()
}

fn masked_weight(g: &HostGraph, mask: &[u64]) -> u64 {
    let mut total = 0;
    for (b, &bits) in mask.iter().enumerate() {
        let mut bits = bits;
        while bits != 0 {
            let bit = bits.trailing_zeros() as usize;
            total += g.weight(VertexId((b * 64 + bit) as u32));
            bits &= bits - 1;
        }
    }
    total
}

/// Exhaustive social optimum over location sets of size min(k, n); coverage
/// only depends on the occupied set. Errors when the enumeration exceeds
/// `budget`, pointing at the greedy solver.
pub fn optimal_placement_exact(
    g: &HostGraph,
    k: usize,
    budget: u64,
) -> Result<(BTreeSet<VertexId>, u64), Error> {
    let n = g.n();
    let m = k.min(n);
    let required = binomial(n as u128, m as u128);
    if required > budget as u128 {
        return Err(Error::EnumerationBudget {
            required,
            budget,
        });
    }
    if m == 0 {
        return Ok((BTreeSet::new(), 0));
    }
    let masks = coverage_masks(g);
    let blocks = n.div_ceil(64);
    let mut best: Option<(Vec<usize>, u64)> = None;
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let mut mask = vec![0u64; blocks];
        for &i in &idx {
            for (b, bits) in masks[i].iter().enumerate() {
                mask[b] |= bits;
            }
        }
        let welfare = masked_weight(g, &mask);
        if best.as_ref().is_none_or(|(_, w)| welfare > *w) {
            best = Some((idx.clone(), welfare));
        }
        // next lexicographic combination
        let mut i = m;
        while i > 0 && idx[i - 1] == n - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let (locations, welfare) = best.expect("at least one combination");
    Ok((
        locations.into_iter().map(|i| VertexId(i as u32)).collect(),
        welfare,
    ))
}

/// Greedy max-coverage: repeatedly take the location covering the most
/// uncovered weight (ties to the smallest vertex id), stopping early when
/// nothing is gained.
pub fn optimal_placement_greedy(g: &HostGraph, k: usize) -> (BTreeSet<VertexId>, u64) {
    let masks = coverage_masks(g);
    let blocks = g.n().div_ceil(64);
    let mut covered = vec![0u64; blocks];
    let mut chosen = BTreeSet::new();
    let mut welfare = 0;
    for _ in 0..k.min(g.n()) {
        let mut best: Option<(usize, u64)> = None;
        for u in 0..g.n() {
            if chosen.contains(&VertexId(u as u32)) {
                continue;
            }
            let gain_mask: Vec<u64> = masks[u]
                .iter()
                .zip(&covered)
                .map(|(m, c)| m & !c)
                .collect();
            let gain = masked_weight(g, &gain_mask);
            if best.as_ref().is_none_or(|&(_, bg)| gain > bg) {
                best = Some((u, gain));
            }
        }
        let Some((u, gain)) = best else { break };
        if gain == 0 {
            break;
        }
        for (b, bits) in masks[u].iter().enumerate() {
            covered[b] |= bits;
        }
        chosen.insert(VertexId(u as u32));
        welfare += gain;
    }
    (chosen, welfare)
}

fn for_each_multiset(n: usize, k: usize, mut f: impl FnMut(&[u32])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if n == 0 {
        return;
    }
    let mut v = vec![0u32; k];
    loop {
        f(&v);
        let mut i = k;
        while i > 0 && v[i - 1] == (n - 1) as u32 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let base = v[i - 1] + 1;
        for slot in &mut v[i - 1..] {
            *slot = base;
        }
    }
}

/// Number of location multisets of size k.
pub fn multiset_count(n: usize, k: usize) -> u128 {
    binomial((n + k - 1) as u128, k as u128)
}

/// All SPE location multisets, by exhaustive search. Errors when the
/// multiset space exceeds `budget`.
pub fn enumerate_spe_multisets(
    g: &HostGraph,
    k: usize,
    budget: u64,
) -> Result<Vec<Placement>, Error> {
    if k > 0 {
        let required = multiset_count(g.n(), k);
        if required > budget as u128 {
            return Err(Error::EnumerationBudget { required, budget });
        }
    }
    let mut cache = LoadCache::new();
    let aw = attraction_weights(g);
    let mut found = Vec::new();
    for_each_multiset(g.n(), k, |locs| {
        let s = Placement::from_indices(locs);
        if check_spe_cached(g, &s, &mut cache, &aw).is_none() {
            found.push(s);
        }
    });
    Ok(found)
}

/// One discovered SPE with its welfare and ratio against the optimum.
#[derive(Clone, Debug)]
pub struct SpeRecord {
    /// Sorted location multiset.
    pub locations: Vec<VertexId>,
    pub welfare: u64,
    pub ratio: Rational,
}

/// Empirical price-of-anarchy report for one instance.
#[derive(Clone, Debug)]
pub struct PoaReport {
    pub opt_locations: BTreeSet<VertexId>,
    pub opt_welfare: u64,
    /// Whether the optimum is exact or the greedy fallback.
    pub opt_exact: bool,
    pub spes: Vec<SpeRecord>,
    /// max W(OPT)/W(SPE) over discovered SPEs.
    pub poa_estimate: Rational,
    /// min W(OPT)/W(SPE) over discovered SPEs.
    pub pos_estimate: Rational,
    /// Whether the SPE list is exhaustive.
    pub exhaustive: bool,
}

/// Measures W(OPT)/W(SPE) over SPEs found by improving-response dynamics
/// from the given seeds, plus exhaustive multiset enumeration when it fits
/// the budget. With no seeds and no enumeration, one run from seed 0 keeps
/// the report nonempty.
pub fn empirical_poa(
    g: &HostGraph,
    k: usize,
    seeds: &[u64],
    enum_budget: u64,
    opt_budget: u64,
    move_cap: u64,
) -> Result<PoaReport, Error> {
    let (opt_locations, opt_welfare, opt_exact) = match optimal_placement_exact(g, k, opt_budget) {
        Ok((locs, w)) => (locs, w, true),
        Err(Error::EnumerationBudget { .. }) => {
            let (locs, w) = optimal_placement_greedy(g, k);
            (locs, w, false)
        }
        Err(e) => return Err(e),
    };

    let mut spes: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    let insert = |s: &Placement, spes: &mut BTreeMap<Vec<u32>, u64>| {
        let mut key: Vec<u32> = s.iter().map(|v| v.0).collect();
        key.sort_unstable();
        let welfare = g.social_welfare(s);
        spes.insert(key, welfare);
    };
    for &seed in seeds {
        let trace = find_spe(g, k, InitialPlacement::Random { seed }, move_cap)?;
        insert(&trace.terminal, &mut spes);
    }
    let exhaustive = match enumerate_spe_multisets(g, k, enum_budget) {
        Ok(all) => {
            for s in &all {
                insert(s, &mut spes);
            }
            true
        }
        Err(Error::EnumerationBudget { .. }) => false,
        Err(e) => return Err(e),
    };
    if spes.is_empty() {
        let trace = find_spe(g, k, InitialPlacement::Random { seed: 0 }, move_cap)?;
        insert(&trace.terminal, &mut spes);
    }

    let records: Vec<SpeRecord> = spes
        .into_iter()
        .map(|(locs, welfare)| {
            let ratio = if welfare == 0 {
                assert_eq!(opt_welfare, 0, "a zero-welfare SPE forces a zero optimum");
                rat_int(1)
            } else {
                rat(opt_welfare, welfare)
            };
            SpeRecord {
                locations: locs.into_iter().map(VertexId).collect(),
                welfare,
                ratio,
            }
        })
        .collect();
    let poa_estimate = records.iter().map(|r| r.ratio.clone()).max().unwrap();
    let pos_estimate = records.iter().map(|r| r.ratio.clone()).min().unwrap();
    Ok(PoaReport {
        opt_locations,
        opt_welfare,
        opt_exact,
        spes: records,
        poa_estimate,
        pos_estimate,
        exhaustive,
    })
}
