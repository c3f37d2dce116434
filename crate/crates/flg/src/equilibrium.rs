//! Client-equilibrium facility loads, minimum neighborhood sets, and
//! equilibrium extraction.
//!
//! For a fixed placement, client equilibria all induce the same facility
//! loads. The loads are computed by repeatedly extracting a minimum
//! neighborhood set (MNS): the facility set minimizing attracted weight per
//! facility. Each member's load is exactly that minimum ratio (the MNR);
//! afterwards the attracted clients are zeroed and the remaining facilities
//! are processed recursively.
//!
//! The MNR itself is found by a monotone search over the finitely many
//! values a load can take (fractions with denominator at most the facility
//! count), where a candidate `i` is feasible iff the max flow with all
//! facility sink capacities `i` saturates every sink arc. Members are the
//! facilities whose sink arc, raised to infinity, admits no augmenting path.

use crate::distribution::{column_sums, LoadVector, WeightDistribution};
use crate::graph::{HostGraph, Placement, VertexId};
use crate::maxflow::{AugmentOrder, FlowNetwork, SinkCapacity};
use crate::rational::{rat, Rational};
use crate::Error;
use std::collections::BTreeSet;

/// Materialization guard for the candidate utility set; beyond this the
/// search switches to bounded-denominator Stern-Brocot descent.
pub const UTILITY_SET_GUARD: u64 = 5_000_000;

/// A minimum neighborhood set with its ratio and the max flow that
/// certifies it (at candidate value = ratio, all sink arcs saturated).
#[derive(Clone, Debug)]
pub struct MnsResult {
    /// Facility indices (into the placement) forming the MNS; the union of
    /// all minimum-ratio sets.
    pub members: BTreeSet<usize>,
    /// The minimum neighborhood ratio w(A_s(M)) / |M|.
    pub ratio: Rational,
    pub witness_flow: WitnessFlow,
}

/// Client-to-facility flows of the certifying max flow, in scaled integer
/// units. Facility indices refer to the placement, not network positions.
#[derive(Clone, Debug)]
pub struct WitnessFlow {
    pub scale: u64,
    pub edge_flows: Vec<(VertexId, usize, u64)>,
}

/// One extraction round of the load computation.
#[derive(Clone, Debug)]
pub struct ExtractionRound {
    pub mns: MnsResult,
    /// Clients whose weight was positive and got zeroed this round.
    pub removed_clients: Vec<VertexId>,
}

/// The complete load computation: per-facility equilibrium loads plus the
/// ordered extraction rounds (ratios are nondecreasing across rounds).
#[derive(Clone, Debug)]
pub struct LoadComputation {
    pub loads: LoadVector,
    pub extraction_rounds: Vec<ExtractionRound>,
    client_count: usize,
}

impl LoadComputation {
    pub fn client_count(&self) -> usize {
        self.client_count
    }
}

fn totient_sum(k: u64) -> u128 {
    // phi sieve; k is a facility count, so this stays small
    let k = k as usize;
    let mut phi: Vec<u64> = (0..=k as u64).collect();
    for i in 2..=k {
        if phi[i] == i as u64 {
            let mut j = i;
            while j <= k {
                phi[j] -= phi[j] / i as u64;
                j += i;
            }
        }
    }
    phi[1..].iter().map(|&p| p as u128).sum()
}

/// Number of distinct values x/y with value <= total and denominator <= k
/// (including 0).
pub fn utility_value_count(total_weight: u64, k: usize) -> u128 {
    if k == 0 {
        return 1;
    }
    1 + total_weight as u128 * totient_sum(k as u64)
}

fn utilities_scaled(total: u64, k: u64) -> Vec<(u64, u64)> {
    let mut vals: Vec<(u64, u64)> = Vec::new();
    vals.push((0, 1));
    for y in 1..=k {
        for x in 1..=total.saturating_mul(y) {
            if num_integer::gcd(x, y) == 1 {
                vals.push((x, y));
            }
        }
    }
    vals.sort_unstable_by(|a, b| (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128)));
    vals
}

/// All values a facility load can take for the given total weight and
/// facility count: the sorted reduced fractions x/y <= total_weight with
/// 1 <= y <= k, plus 0. Errors if the set would exceed the guard.
pub fn possible_utilities(total_weight: u64, k: usize) -> Result<Vec<Rational>, Error> {
    assert!(k >= 1, "facility count must be at least 1");
    let count = utility_value_count(total_weight, k);
    if count > UTILITY_SET_GUARD as u128 {
        return Err(Error::UtilitySetTooLarge {
            count,
            guard: UTILITY_SET_GUARD,
        });
    }
    Ok(utilities_scaled(total_weight, k as u64)
        .into_iter()
        .map(|(x, y)| rat(x, y))
        .collect())
}

/// Largest t in [0, cap] for which `pred` holds; `pred` is prefix-true and
/// `pred(0)` must hold.
fn largest_true(cap: u64, mut pred: impl FnMut(u64) -> bool) -> u64 {
    let (mut lo, mut hi) = (0, cap);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Finds the largest fraction p/q with value <= total and q <= k satisfying
/// the monotone predicate, without materializing the candidate set. Walks
/// the Stern-Brocot tree with run-length compressed descents.
fn bounded_denominator_search(
    total: u64,
    k: u64,
    mut feasible: impl FnMut(u64, u64) -> bool,
) -> (u64, u64) {
    let a = largest_true(total, |t| feasible(t, 1));
    if a == total || k == 1 {
        return (a, 1);
    }
    // invariant: pl/ql feasible, ph/qh infeasible, neighbors in the tree
    let (mut pl, mut ql) = (a, 1u64);
    let (mut ph, mut qh) = (a + 1, 1u64);
    loop {
        if ql + qh > k {
            return (pl, ql);
        }
        // mediants toward ph/qh grow; feasibility is a prefix property in t
        let tcap = (k - ql) / qh;
        let t = largest_true(tcap, |t| feasible(pl + t * ph, ql + t * qh));
        pl += t * ph;
        ql += t * qh;
        if ql + qh > k {
            return (pl, ql);
        }
        // mediants toward pl/ql shrink; infeasibility is a prefix property
        let ucap = (k - qh) / ql;
        let u = largest_true(ucap, |u| !feasible(ph + u * pl, qh + u * ql));
        ph += u * pl;
        qh += u * ql;
        assert!(
            t > 0 || u > 0,
            "mediant cannot be both feasible and infeasible"
        );
    }
}

/// Computes a minimum neighborhood set for the facility subset `facilities`
/// under the given (possibly zeroed) client weights.
pub fn compute_mns(
    g: &HostGraph,
    weights: &[u64],
    facilities: &[usize],
    s: &Placement,
) -> Result<MnsResult, Error> {
    compute_mns_ordered(g, weights, facilities, s, AugmentOrder::Forward)
}

/// As [`compute_mns`], with an explicit augmenting-path exploration order
/// (the result is order-invariant; the knob exists to test exactly that).
pub fn compute_mns_ordered(
    g: &HostGraph,
    weights: &[u64],
    facilities: &[usize],
    s: &Placement,
    order: AugmentOrder,
) -> Result<MnsResult, Error> {
    let mut net = FlowNetwork::build_with_weights(g, s, facilities, weights)?;
    let total: u64 = {
        let attracted = g.attraction_range(s, facilities)?;
        attracted.iter().map(|&v| weights[v.index()]).sum()
    };
    let klocal = facilities.len() as u64;
    let target_met = |net: &mut FlowNetwork, p: u64, q: u64| -> bool {
        net.set_sink_capacities(&rat(p, q));
        let st = net.max_flow(order);
        // all sink arcs saturated: value = (p/q) * klocal, scaled by q
        st.value_scaled() as u128 == p as u128 * klocal as u128 * (net.scale() / q) as u128
    };

    let (rho_num, rho_den) = if utility_value_count(total, facilities.len())
        <= UTILITY_SET_GUARD as u128
    {
        let cands = utilities_scaled(total, klocal);
        let best = largest_true((cands.len() - 1) as u64, |i| {
            let (p, q) = cands[i as usize];
            target_met(&mut net, p, q)
        });
        cands[best as usize]
    } else {
        bounded_denominator_search(total, klocal, |p, q| target_met(&mut net, p, q))
    };
    let rho = rat(rho_num, rho_den);

    // the certifying flow at the MNR: every sink arc saturated
    net.set_sink_capacities(&rho);
    let witness = net.max_flow(order);
    assert!(
        witness.value_scaled() as u128
            == rho_num as u128 * klocal as u128 * (net.scale() / rho_den) as u128,
        "minimum neighborhood ratio candidate must be feasible"
    );

    // membership: raising a member's sink capacity frees no augmenting path
    let mut members = BTreeSet::new();
    for (fpos, &j) in facilities.iter().enumerate() {
        net.set_one_sink_capacity(fpos, SinkCapacity::Infinite);
        if !net.has_augmenting_path(&witness) {
            members.insert(j);
        }
        net.set_one_sink_capacity(fpos, SinkCapacity::Finite(rho.clone()));
    }
    assert!(!members.is_empty(), "an MNS is never empty");
    debug_assert_eq!(
        {
            let member_vec: Vec<usize> = members.iter().copied().collect();
            let attracted = g.attraction_range(s, &member_vec).expect("members valid");
            let w: u64 = attracted.iter().map(|&v| weights[v.index()]).sum();
            rat(w, members.len() as u64)
        },
        rho,
        "returned member set must attain the ratio exactly"
    );

    let fpos_to_index: Vec<usize> = facilities.to_vec();
    let edge_flows = net
        .client_facility_flows(&witness)
        .into_iter()
        .map(|(v, fpos, f)| (v, fpos_to_index[fpos], f))
        .collect();
    Ok(MnsResult {
        members,
        ratio: rho,
        witness_flow: WitnessFlow {
            scale: net.scale(),
            edge_flows,
        },
    })
}

/// Equilibrium loads for every facility of `s` (Algorithm: iterated MNS
/// extraction). k = 0 yields an empty load vector.
pub fn compute_equilibrium_loads(g: &HostGraph, s: &Placement) -> LoadComputation {
    compute_equilibrium_loads_ordered(g, s, AugmentOrder::Forward)
}

pub fn compute_equilibrium_loads_ordered(
    g: &HostGraph,
    s: &Placement,
    order: AugmentOrder,
) -> LoadComputation {
    s.validate(g).expect("placement must fit the host graph");
    let k = s.k();
    let mut weights = g.weights().to_vec();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut loads: Vec<Option<Rational>> = vec![None; k];
    let mut rounds = Vec::new();
    while !remaining.is_empty() {
        let mns = compute_mns_ordered(g, &weights, &remaining, s, order)
            .expect("remaining facility set is nonempty and valid");
        if let Some(prev) = rounds.last().map(|r: &ExtractionRound| &r.mns.ratio) {
            debug_assert!(*prev <= mns.ratio, "round ratios are nondecreasing");
        }
        let member_vec: Vec<usize> = mns.members.iter().copied().collect();
        let attracted = g
            .attraction_range(s, &member_vec)
            .expect("members are valid facilities");
        let removed_clients: Vec<VertexId> = attracted
            .iter()
            .copied()
            .filter(|v| weights[v.index()] > 0)
            .collect();
        for v in &attracted {
            weights[v.index()] = 0;
        }
        for &j in &mns.members {
            loads[j] = Some(mns.ratio.clone());
        }
        remaining.retain(|j| !mns.members.contains(j));
        rounds.push(ExtractionRound {
            mns,
            removed_clients,
        });
    }
    let loads: Vec<Rational> = loads
        .into_iter()
        .map(|l| l.expect("every facility is extracted in exactly one round"))
        .collect();
    LoadComputation {
        loads: LoadVector::new(loads),
        extraction_rounds: rounds,
        client_count: g.n(),
    }
}

/// Reads an explicit client equilibrium off the witness flows: each client
/// takes its rows from the round that removed it. The result is feasible
/// and passes [`is_client_equilibrium`]; it is one equilibrium among many,
/// only the loads are unique.
pub fn extract_client_equilibrium(computation: &LoadComputation) -> WeightDistribution {
    let k = computation.loads.k();
    let mut sigma = WeightDistribution::new(computation.client_count, k);
    for round in &computation.extraction_rounds {
        let removed: BTreeSet<VertexId> = round.removed_clients.iter().copied().collect();
        let witness = &round.mns.witness_flow;
        for &(v, j, scaled) in &witness.edge_flows {
            if removed.contains(&v) && round.mns.members.contains(&j) {
                sigma.set(v, j, rat(scaled, witness.scale));
            }
        }
    }
    sigma
}

/// The equilibrium certificate: every patronized facility's load is no
/// larger than any facility's load within the client's shopping range.
/// Errors if `sigma` is not feasible for `s`.
pub fn is_client_equilibrium(
    g: &HostGraph,
    s: &Placement,
    sigma: &WeightDistribution,
) -> Result<bool, Error> {
    if let Some(detail) = crate::distribution::feasibility_violation(g, s, sigma) {
        return Err(Error::InfeasibleDistribution { detail });
    }
    let loads = column_sums(g, s.k(), sigma);
    for v in g.vertices() {
        let range = g.shopping_range(v).expect("dense vertex ids");
        let in_range_min = (0..s.k())
            .filter(|&j| range.contains(&s.location(j)))
            .map(|j| loads.get(j))
            .min();
        let Some(min_load) = in_range_min else {
            continue;
        };
        for j in sigma.patronized(v) {
            if loads.get(j) > min_load {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Total weight inside the attraction range of the facility subset.
pub fn attracted_weight(
    g: &HostGraph,
    weights: &[u64],
    facilities: &[usize],
    s: &Placement,
) -> Result<u64, Error> {
    let attracted = g.attraction_range(s, facilities)?;
    Ok(attracted.iter().map(|&v| weights[v.index()]).sum())
}
