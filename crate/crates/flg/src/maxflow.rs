//! Integer-capacity max flow on the bipartite client/facility network.
//!
//! The network has a source feeding every positive-weight client, one arc
//! from each client to each facility whose attraction range contains it, and
//! one arc per facility into the sink. Rational sink capacities are cleared
//! to integers by a global scale factor (the lcm of their denominators);
//! client capacities are `scale * w(v)`.
//!
//! The solver is shortest-augmenting-path (BFS) max flow. It deliberately
//! supports two things plain solvers usually don't: resuming augmentation
//! from an existing flow after a capacity raise, and a non-mutating
//! residual-reachability query, both needed by the minimum-neighborhood-set
//! search.

use crate::graph::{HostGraph, Placement, VertexId};
use crate::rational::{denom_u64, Rational};
use crate::Error;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::VecDeque;
use std::fmt::Write as _;

/// Residual-arc exploration order for BFS; any order yields the same value.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AugmentOrder {
    Forward,
    Reverse,
}

/// Per-facility sink capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SinkCapacity {
    Finite(Rational),
    /// Modeled as (total scaled client weight) + 1: finite but never binding.
    Infinite,
}

#[derive(Clone, Debug)]
struct Arc {
    to: u32,
    rev: u32,
}

/// The flow network for one placement and facility subset. Capacities are
/// mutable (scaling, sink-cap updates); the arc structure is fixed.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    clients: Vec<VertexId>,
    client_weights: Vec<u64>,
    facility_count: usize,
    arcs: Vec<Arc>,
    caps: Vec<i64>,
    adj: Vec<Vec<u32>>,
    source: usize,
    sink: usize,
    scale: u64,
    sink_caps: Vec<SinkCapacity>,
    source_arc: Vec<u32>,
    sink_arc: Vec<u32>,
    range_arcs: Vec<(u32, u32, u32)>, // (client pos, facility pos, arc id)
}

/// Flow values per arc plus the total pushed value, tied to the scale the
/// network had when the state was produced.
#[derive(Clone, Debug)]
pub struct FlowState {
    flow: Vec<i64>,
    value: i64,
    scale: u64,
}

impl FlowState {
    pub fn value_scaled(&self) -> i64 {
        self.value
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }
}

impl FlowNetwork {
    /// Network over the instance's own weights.
    pub fn build(g: &HostGraph, s: &Placement, facilities: &[usize]) -> Result<Self, Error> {
        Self::build_with_weights(g, s, facilities, g.weights())
    }

    /// Network with overridden client weights (the equilibrium recursion
    /// zeroes removed clients). Zero-weight vertices get no node; facility
    /// sink capacities start at 0.
    pub fn build_with_weights(
        g: &HostGraph,
        s: &Placement,
        facilities: &[usize],
        weights: &[u64],
    ) -> Result<Self, Error> {
        if facilities.is_empty() {
            return Err(Error::EmptyFacilitySet);
        }
        s.validate(g)?;
        assert_eq!(weights.len(), g.n(), "weight override must cover all vertices");
        for &j in facilities {
            if j >= s.k() {
                return Err(Error::InvalidFacility { index: j, k: s.k() });
            }
        }

        let clients: Vec<VertexId> = g.vertices().filter(|&v| weights[v.index()] > 0).collect();
        let client_pos = {
            let mut pos = vec![usize::MAX; g.n()];
            for (i, &v) in clients.iter().enumerate() {
                pos[v.index()] = i;
            }
            pos
        };
        let client_weights: Vec<u64> = clients.iter().map(|&v| weights[v.index()]).collect();
        let fcount = facilities.len();

        // per client, the facility positions whose attraction range holds it
        let mut ranges: Vec<Vec<u32>> = vec![Vec::new(); clients.len()];
        for (fpos, &j) in facilities.iter().enumerate() {
            let loc = s.location(j);
            let mut attracted: Vec<VertexId> = g.in_neighbors(loc).collect();
            attracted.push(loc);
            for v in attracted {
                let cpos = client_pos[v.index()];
                if cpos != usize::MAX {
                    ranges[cpos].push(fpos as u32);
                }
            }
        }
        for r in &mut ranges {
            r.sort_unstable();
            r.dedup(); // co-located duplicates cannot occur (one arc per facility), but in-neighbor + self can
        }

        let source = 0;
        let client_base = 1;
        let facility_base = client_base + clients.len();
        let sink = facility_base + fcount;

        let mut net = FlowNetwork {
            clients,
            client_weights,
            facility_count: fcount,
            arcs: Vec::new(),
            caps: Vec::new(),
            adj: vec![Vec::new(); sink + 1],
            source,
            sink,
            scale: 1,
            sink_caps: vec![SinkCapacity::Finite(Rational::zero()); fcount],
            source_arc: Vec::new(),
            sink_arc: Vec::new(),
            range_arcs: Vec::new(),
        };

        for cpos in 0..net.clients.len() {
            let id = net.push_arc(source, client_base + cpos);
            net.source_arc.push(id);
        }
        for (cpos, range) in ranges.iter().enumerate() {
            for &fpos in range {
                let id = net.push_arc(client_base + cpos, facility_base + fpos as usize);
                net.range_arcs.push((cpos as u32, fpos, id));
            }
        }
        for fpos in 0..fcount {
            let id = net.push_arc(facility_base + fpos, sink);
            net.sink_arc.push(id);
        }
        net.apply_scale();
        Ok(net)
    }

    fn push_arc(&mut self, from: usize, to: usize) -> u32 {
        let id = self.arcs.len() as u32;
        self.arcs.push(Arc {
            to: to as u32,
            rev: id + 1,
        });
        self.arcs.push(Arc {
            to: from as u32,
            rev: id,
        });
        self.caps.push(0);
        self.caps.push(0);
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn clients(&self) -> &[VertexId] {
        &self.clients
    }

    pub fn facility_count(&self) -> usize {
        self.facility_count
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn sink_capacity(&self, fpos: usize) -> &SinkCapacity {
        &self.sink_caps[fpos]
    }

    fn total_scaled_weight(&self) -> i64 {
        self.client_weights
            .iter()
            .map(|&w| (w * self.scale) as i64)
            .sum()
    }

    /// Recomputes the scale (lcm of finite sink-cap denominators) and all
    /// integer capacities from the rational source of truth.
    fn apply_scale(&mut self) {
        let mut scale: u64 = 1;
        for cap in &self.sink_caps {
            if let SinkCapacity::Finite(r) = cap {
                scale = scale.lcm(&denom_u64(r));
            }
        }
        self.scale = scale;
        let total: u128 = self
            .client_weights
            .iter()
            .map(|&w| w as u128 * scale as u128)
            .sum();
        assert!(
            total < (i64::MAX / 4) as u128,
            "scaled weights overflow the flow arithmetic"
        );
        for (cpos, &w) in self.client_weights.iter().enumerate() {
            let cap = (w * scale) as i64;
            let arc = self.source_arc[cpos];
            self.caps[arc as usize] = cap;
            // every client -> facility arc carries the client's capacity
        }
        for &(cpos, _, arc) in &self.range_arcs {
            self.caps[arc as usize] = (self.client_weights[cpos as usize] * self.scale) as i64;
        }
        let infinity = self.total_scaled_weight() + 1;
        for (fpos, cap) in self.sink_caps.iter().enumerate() {
            let value = match cap {
                SinkCapacity::Finite(r) => {
                    assert!(!r.is_negative(), "sink capacities are nonnegative");
                    let scaled = r * Rational::from_integer(BigInt::from(self.scale));
                    debug_assert!(scaled.is_integer());
                    scaled
                        .to_integer()
                        .to_i64()
                        .expect("scaled sink capacity exceeds i64")
                }
                SinkCapacity::Infinite => infinity,
            };
            self.caps[self.sink_arc[fpos] as usize] = value;
        }
    }

    /// Sets every facility's sink capacity to `cap` and rescales.
    pub fn set_sink_capacities(&mut self, cap: &Rational) {
        assert!(!cap.is_negative(), "sink capacities are nonnegative");
        for c in &mut self.sink_caps {
            *c = SinkCapacity::Finite(cap.clone());
        }
        self.apply_scale();
    }

    /// Sets one facility's sink capacity (by network position) and rescales.
    pub fn set_one_sink_capacity(&mut self, fpos: usize, cap: SinkCapacity) {
        if let SinkCapacity::Finite(r) = &cap {
            assert!(!r.is_negative(), "sink capacities are nonnegative");
        }
        self.sink_caps[fpos] = cap;
        self.apply_scale();
    }

    pub fn zero_state(&self) -> FlowState {
        FlowState {
            flow: vec![0; self.arcs.len()],
            value: 0,
            scale: self.scale,
        }
    }

    fn assert_state(&self, state: &FlowState) {
        assert_eq!(
            state.scale, self.scale,
            "flow state was produced under a different scale"
        );
        assert_eq!(state.flow.len(), self.arcs.len());
        for (id, &f) in state.flow.iter().enumerate() {
            assert!(
                f <= self.caps[id],
                "flow state is infeasible for the current capacities"
            );
        }
    }

    fn residual(&self, state: &FlowState, arc: u32) -> i64 {
        self.caps[arc as usize] - state.flow[arc as usize]
    }

    /// BFS for a shortest residual s-t path; returns per-node incoming arc.
    fn bfs_parents(&self, state: &FlowState, order: AugmentOrder) -> Option<Vec<u32>> {
        let mut parent = vec![u32::MAX; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::new();
        seen[self.source] = true;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            let mut visit = |&arc: &u32| -> bool {
                let to = self.arcs[arc as usize].to as usize;
                if !seen[to] && self.residual(state, arc) > 0 {
                    seen[to] = true;
                    parent[to] = arc;
                    if to == self.sink {
                        return true;
                    }
                    queue.push_back(to);
                }
                false
            };
            let hit = match order {
                AugmentOrder::Forward => self.adj[u].iter().any(|a| visit(a)),
                AugmentOrder::Reverse => self.adj[u].iter().rev().any(|a| visit(a)),
            };
            if hit {
                return Some(parent);
            }
        }
        None
    }

    /// Augments `state` to a maximum flow under the current capacities.
    /// The state may carry flow from before a capacity raise.
    pub fn extend_max_flow(&self, state: &mut FlowState, order: AugmentOrder) {
        self.assert_state(state);
        while let Some(parent) = self.bfs_parents(state, order) {
            let mut bottleneck = i64::MAX;
            let mut node = self.sink;
            while node != self.source {
                let arc = parent[node];
                bottleneck = bottleneck.min(self.residual(state, arc));
                node = self.arcs[self.arcs[arc as usize].rev as usize].to as usize;
            }
            debug_assert!(bottleneck > 0);
            let mut node = self.sink;
            while node != self.source {
                let arc = parent[node];
                state.flow[arc as usize] += bottleneck;
                let rev = self.arcs[arc as usize].rev;
                state.flow[rev as usize] -= bottleneck;
                node = self.arcs[rev as usize].to as usize;
            }
            state.value += bottleneck;
        }
    }

    /// A maximum flow from scratch. Deterministic for a fixed order.
    pub fn max_flow(&self, order: AugmentOrder) -> FlowState {
        let mut state = self.zero_state();
        self.extend_max_flow(&mut state, order);
        state
    }

    /// True iff the residual graph holds an s-t path; does not modify the
    /// state. Panics if the state is infeasible for the current capacities
    /// (cannot happen when capacities were only raised).
    pub fn has_augmenting_path(&self, state: &FlowState) -> bool {
        self.assert_state(state);
        self.bfs_parents(state, AugmentOrder::Forward).is_some()
    }

    /// Flow value in instance units (scaled value divided by the scale).
    pub fn flow_value(&self, state: &FlowState) -> Rational {
        Rational::new(BigInt::from(state.value), BigInt::from(state.scale))
    }

    /// Positive client-to-facility flows as (client vertex, facility
    /// position, scaled flow).
    pub fn client_facility_flows(&self, state: &FlowState) -> Vec<(VertexId, usize, u64)> {
        self.range_arcs
            .iter()
            .filter(|&&(_, _, arc)| state.flow[arc as usize] > 0)
            .map(|&(cpos, fpos, arc)| {
                (
                    self.clients[cpos as usize],
                    fpos as usize,
                    state.flow[arc as usize] as u64,
                )
            })
            .collect()
    }

    /// Scaled inflow of a facility (equals the flow on its sink arc by
    /// conservation).
    pub fn facility_inflow(&self, state: &FlowState, fpos: usize) -> i64 {
        state.flow[self.sink_arc[fpos] as usize]
    }

    /// Debug rendering of the network (and a flow, if given) as DOT.
    pub fn to_dot(&self, state: Option<&FlowState>) -> String {
        let mut out = String::from("digraph flow {\n  rankdir=LR;\n");
        writeln!(out, "  s; t;").unwrap();
        for &v in &self.clients {
            writeln!(out, "  c{v} [label=\"v{v}\"];").unwrap();
        }
        for f in 0..self.facility_count {
            writeln!(out, "  f{f};").unwrap();
        }
        let label = |arc: u32| -> String {
            match state {
                Some(st) => format!("{}/{}", st.flow[arc as usize], self.caps[arc as usize]),
                None => format!("{}", self.caps[arc as usize]),
            }
        };
        for (cpos, &v) in self.clients.iter().enumerate() {
            let arc = self.source_arc[cpos];
            writeln!(out, "  s -> c{v} [label=\"{}\"];", label(arc)).unwrap();
        }
        for &(cpos, fpos, arc) in &self.range_arcs {
            let v = self.clients[cpos as usize];
            writeln!(out, "  c{v} -> f{fpos} [label=\"{}\"];", label(arc)).unwrap();
        }
        for fpos in 0..self.facility_count {
            let arc = self.sink_arc[fpos];
            writeln!(out, "  f{fpos} -> t [label=\"{}\"];", label(arc)).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    /// Fig.-style 3-vertex instance: edges 0->1, 1->0, 2->1; facilities on
    /// 0 and 2.
    fn three_chain() -> (HostGraph, Placement) {
        let g = HostGraph::new(vec![1, 1, 1], &[(0, 1), (1, 0), (2, 1)]).unwrap();
        let s = Placement::from_indices(&[0, 2]);
        (g, s)
    }

    /// Independent max-flow oracle for this bipartite shape: the min cut
    /// keeps a facility subset T and pays for everything T attracts, so
    /// value = min over T of (sum of sink caps outside T) + w(A(T)).
    fn cut_value(g: &HostGraph, s: &Placement, facilities: &[usize], caps: &[Rational]) -> Rational {
        let mut best: Option<Rational> = None;
        for mask in 0u32..(1 << facilities.len()) {
            let kept: Vec<usize> = (0..facilities.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| facilities[i])
                .collect();
            let mut total = Rational::zero();
            for (i, cap) in caps.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    total += cap;
                }
            }
            let attracted = g.attraction_range(s, &kept).unwrap();
            total += rat_int(g.weight_of(&attracted));
            best = Some(match best {
                Some(b) if b <= total => b,
                _ => total,
            });
        }
        best.unwrap()
    }

    #[test]
    fn builds_expected_shape() {
        let (g, s) = three_chain();
        let net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        assert_eq!(net.client_count(), 3);
        assert_eq!(net.facility_count(), 2);
        // v0 -> f0, v1 -> f0, v2 -> f1
        let arcs: Vec<(u32, usize)> = net
            .range_arcs
            .iter()
            .map(|&(c, f, _)| (net.clients[c as usize].0, f as usize))
            .collect();
        assert_eq!(arcs, vec![(0, 0), (1, 0), (2, 1)]);
    }

    #[test]
    fn single_client_path() {
        let g = HostGraph::new(vec![5], &[]).unwrap();
        let s = Placement::from_indices(&[0]);
        let mut net = FlowNetwork::build(&g, &s, &[0]).unwrap();
        net.set_sink_capacities(&rat_int(10));
        let st = net.max_flow(AugmentOrder::Forward);
        assert_eq!(net.flow_value(&st), rat_int(5));
    }

    #[test]
    fn zero_weight_clients_are_omitted() {
        let g = HostGraph::new(vec![0, 2], &[(0, 1)]).unwrap();
        let s = Placement::from_indices(&[1]);
        let net = FlowNetwork::build(&g, &s, &[0]).unwrap();
        assert_eq!(net.client_count(), 1);
        assert_eq!(net.clients(), &[VertexId(1)]);
    }

    #[test]
    fn rescaling_clears_denominators() {
        let (g, s) = three_chain();
        let mut net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        net.set_sink_capacities(&rat(5, 2));
        assert_eq!(net.scale(), 2);
        assert_eq!(net.caps[net.sink_arc[0] as usize], 5);
        assert_eq!(net.caps[net.source_arc[0] as usize], 2);
    }

    #[test]
    fn fig3_values_match_cut_oracle() {
        let (g, s) = three_chain();
        let mut net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        for cap in [rat_int(0), rat_int(1), rat_int(2), rat(3, 2)] {
            net.set_sink_capacities(&cap);
            let st = net.max_flow(AugmentOrder::Forward);
            let expected = cut_value(&g, &s, &[0, 1], &[cap.clone(), cap.clone()]);
            assert_eq!(net.flow_value(&st), expected);
        }
        // pinned values: caps 1 -> 2, caps 2 -> 3 (f_q limited by its client)
        net.set_sink_capacities(&rat_int(1));
        assert_eq!(net.flow_value(&net.max_flow(AugmentOrder::Forward)), rat_int(2));
        net.set_sink_capacities(&rat_int(2));
        assert_eq!(net.flow_value(&net.max_flow(AugmentOrder::Forward)), rat_int(3));
    }

    #[test]
    fn infinite_cap_bounded_by_clients() {
        let g = HostGraph::new(vec![3], &[]).unwrap();
        let s = Placement::from_indices(&[0]);
        let mut net = FlowNetwork::build(&g, &s, &[0]).unwrap();
        net.set_one_sink_capacity(0, SinkCapacity::Infinite);
        let st = net.max_flow(AugmentOrder::Forward);
        assert_eq!(net.flow_value(&st), rat_int(3));
    }

    #[test]
    fn disconnected_facility_contributes_zero() {
        // facility 1 sits on a zero-weight vertex nobody points to
        let g = HostGraph::new(vec![2, 0], &[]).unwrap();
        let s = Placement::from_indices(&[0, 1]);
        let mut net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        net.set_sink_capacities(&rat_int(5));
        let st = net.max_flow(AugmentOrder::Forward);
        assert_eq!(net.flow_value(&st), rat_int(2));
        assert_eq!(net.facility_inflow(&st, 1), 0);
    }

    #[test]
    fn value_invariant_under_order_and_resume() {
        let (g, s) = three_chain();
        let mut net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        net.set_sink_capacities(&rat_int(1));
        let fwd = net.max_flow(AugmentOrder::Forward);
        let rev = net.max_flow(AugmentOrder::Reverse);
        assert_eq!(fwd.value_scaled(), rev.value_scaled());

        // raising a capacity and resuming matches a fresh solve
        let mut resumed = fwd.clone();
        net.set_one_sink_capacity(0, SinkCapacity::Finite(rat_int(2)));
        net.extend_max_flow(&mut resumed, AugmentOrder::Forward);
        let fresh = net.max_flow(AugmentOrder::Forward);
        assert_eq!(resumed.value_scaled(), fresh.value_scaled());
        assert!(resumed.value_scaled() >= fwd.value_scaled());
    }

    #[test]
    fn augmenting_path_queries_at_rho_one() {
        // at rho = 1 the minimum neighborhood set is {f_q}: raising f_p's
        // cap frees a path, raising f_q's does not
        let (g, s) = three_chain();
        let mut net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        net.set_sink_capacities(&rat_int(1));
        let st = net.max_flow(AugmentOrder::Forward);
        assert!(!net.has_augmenting_path(&st));

        net.set_one_sink_capacity(0, SinkCapacity::Infinite);
        assert!(net.has_augmenting_path(&st));
        net.set_one_sink_capacity(0, SinkCapacity::Finite(rat_int(1)));

        net.set_one_sink_capacity(1, SinkCapacity::Infinite);
        assert!(!net.has_augmenting_path(&st));
    }

    #[test]
    fn inflow_equals_sink_arc_flow() {
        let (g, s) = three_chain();
        let mut net = FlowNetwork::build(&g, &s, &[0, 1]).unwrap();
        net.set_sink_capacities(&rat(3, 2));
        let st = net.max_flow(AugmentOrder::Forward);
        for fpos in 0..net.facility_count() {
            let from_arcs: i64 = net
                .range_arcs
                .iter()
                .filter(|&&(_, f, _)| f as usize == fpos)
                .map(|&(_, _, arc)| st.flow[arc as usize])
                .sum();
            assert_eq!(from_arcs, net.facility_inflow(&st, fpos));
        }
    }

    #[test]
    fn random_networks_match_cut_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.gen_range(1..7);
            let k = rng.gen_range(1..4).min(n);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for z in 0..n as u32 {
                    if u != z && rng.gen_bool(0.4) {
                        edges.push((u, z));
                    }
                }
            }
            let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let g = HostGraph::new(weights, &edges).unwrap();
            let locs: Vec<u32> = (0..k).map(|_| rng.gen_range(0..n as u32)).collect();
            let s = Placement::from_indices(&locs);
            let facilities: Vec<usize> = (0..k).collect();
            let cap = rat(rng.gen_range(0..8), rng.gen_range(1..4));
            let mut net = FlowNetwork::build(&g, &s, &facilities).unwrap();
            net.set_sink_capacities(&cap);
            let st = net.max_flow(AugmentOrder::Forward);
            let caps = vec![cap.clone(); k];
            assert_eq!(net.flow_value(&st), cut_value(&g, &s, &facilities, &caps));
            assert_eq!(
                st.value_scaled(),
                net.max_flow(AugmentOrder::Reverse).value_scaled()
            );
        }
    }
}
