//! Host graph, placements, and the coverage computations shared everywhere.
//!
//! Edges are directed: an edge `(u, z)` puts `z` into `u`'s shopping range.
//! A facility opened on `z` therefore attracts `z` itself plus all
//! in-neighbors of `z`. Vertices double as clients (with a nonnegative
//! integer spending capacity) and as candidate facility locations.

use crate::Error;
use std::collections::BTreeSet;
use std::fmt;

/// Dense vertex index, stable within one instance.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Directed vertex-weighted host graph. Immutable after construction; all
/// operations are pure, so instances can be shared across parallel workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostGraph {
    weights: Vec<u64>,
    out: Vec<Vec<u32>>,
    ins: Vec<Vec<u32>>,
    edge_count: usize,
}

impl HostGraph {
    /// Builds a graph from vertex weights and directed edges `(from, to)`,
    /// meaning `to` is in `from`'s shopping range. Rejects self-loops
    /// (closed neighborhoods make them redundant) and duplicate edges.
    pub fn new(weights: Vec<u64>, edges: &[(u32, u32)]) -> Result<Self, Error> {
        let n = weights.len();
        let mut out = vec![Vec::new(); n];
        let mut ins = vec![Vec::new(); n];
        for &(from, to) in edges {
            for id in [from, to] {
                if id as usize >= n {
                    return Err(Error::InvalidVertex { id: id as usize, n });
                }
            }
            if from == to {
                return Err(Error::SelfLoop { id: from as usize });
            }
            out[from as usize].push(to);
        }
        for (id, targets) in out.iter_mut().enumerate() {
            targets.sort_unstable();
            if let Some(w) = targets.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge {
                    from: id,
                    to: w[0] as usize,
                });
            }
            for &to in targets.iter() {
                ins[to as usize].push(id as u32);
            }
        }
        for sources in &mut ins {
            sources.sort_unstable();
        }
        Ok(HostGraph {
            weights,
            out,
            ins,
            edge_count: edges.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn weight(&self, v: VertexId) -> u64 {
        self.weights[v.index()]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.n() as u32).map(VertexId)
    }

    /// Directed edges in canonical `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.out.iter().enumerate().flat_map(|(from, targets)| {
            targets
                .iter()
                .map(move |&to| (VertexId(from as u32), VertexId(to)))
        })
    }

    pub fn out_neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.out[v.index()].iter().copied().map(VertexId)
    }

    pub fn in_neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.ins[v.index()].iter().copied().map(VertexId)
    }

    pub fn has_edge(&self, from: VertexId, to: VertexId) -> bool {
        self.out[from.index()].binary_search(&to.0).is_ok()
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), Error> {
        if v.index() < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidVertex {
                id: v.index(),
                n: self.n(),
            })
        }
    }

    /// Shopping range `N(v)`: the closed out-neighborhood of `v`, i.e. the
    /// locations whose facilities client `v` will patronize.
    pub fn shopping_range(&self, v: VertexId) -> Result<BTreeSet<VertexId>, Error> {
        self.check_vertex(v)?;
        let mut range: BTreeSet<VertexId> = self.out_neighbors(v).collect();
        range.insert(v);
        Ok(range)
    }

    /// Attraction range of the given facilities under placement `s`: each
    /// location itself plus its in-neighbors, unioned over the set.
    pub fn attraction_range(
        &self,
        s: &Placement,
        facilities: &[usize],
    ) -> Result<BTreeSet<VertexId>, Error> {
        let mut range = BTreeSet::new();
        for &j in facilities {
            if j >= s.k() {
                return Err(Error::InvalidFacility { index: j, k: s.k() });
            }
            let loc = s.location(j);
            self.check_vertex(loc)?;
            range.insert(loc);
            range.extend(self.in_neighbors(loc));
        }
        Ok(range)
    }

    /// Clients with at least one facility location in their shopping range.
    pub fn covered_clients(&self, s: &Placement) -> BTreeSet<VertexId> {
        let all: Vec<usize> = (0..s.k()).collect();
        self.attraction_range(s, &all)
            .expect("placement locations must be valid vertices")
    }

    /// Weighted participation rate `W(s)`: total weight of covered clients.
    pub fn social_welfare(&self, s: &Placement) -> u64 {
        self.covered_clients(s)
            .iter()
            .map(|&v| self.weight(v))
            .sum()
    }

    /// Total weight of a vertex set.
    pub fn weight_of<'a>(&self, set: impl IntoIterator<Item = &'a VertexId>) -> u64 {
        set.into_iter().map(|&v| self.weight(v)).sum()
    }
}

/// One location choice per facility agent; co-location is allowed and k = 0
/// is a legal, empty placement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Placement {
    locations: Vec<VertexId>,
}

impl Placement {
    pub fn new(locations: Vec<VertexId>) -> Self {
        Placement { locations }
    }

    pub fn from_indices(ids: &[u32]) -> Self {
        Placement::new(ids.iter().copied().map(VertexId).collect())
    }

    pub fn empty() -> Self {
        Placement::new(Vec::new())
    }

    pub fn k(&self) -> usize {
        self.locations.len()
    }

    pub fn location(&self, j: usize) -> VertexId {
        self.locations[j]
    }

    pub fn locations(&self) -> &[VertexId] {
        &self.locations
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.locations.iter().copied()
    }

    /// The placement with facility `j` moved to `v`.
    pub fn with_location(&self, j: usize, v: VertexId) -> Self {
        let mut locations = self.locations.clone();
        locations[j] = v;
        Placement { locations }
    }

    pub fn validate(&self, g: &HostGraph) -> Result<(), Error> {
        for &v in &self.locations {
            if v.index() >= g.n() {
                return Err(Error::InvalidVertex {
                    id: v.index(),
                    n: g.n(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> HostGraph {
        // 0 -> 1, 0 -> 2, 1 -> 3, 2 -> 3
        HostGraph::new(vec![1, 2, 3, 4], &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn rejects_self_loop_and_duplicates() {
        assert!(matches!(
            HostGraph::new(vec![1, 1], &[(0, 0)]),
            Err(Error::SelfLoop { id: 0 })
        ));
        assert!(matches!(
            HostGraph::new(vec![1, 1], &[(0, 1), (0, 1)]),
            Err(Error::DuplicateEdge { from: 0, to: 1 })
        ));
        assert!(matches!(
            HostGraph::new(vec![1, 1], &[(0, 2)]),
            Err(Error::InvalidVertex { id: 2, n: 2 })
        ));
    }

    #[test]
    fn shopping_range_isolated_vertex() {
        let g = HostGraph::new(vec![7], &[]).unwrap();
        let range = g.shopping_range(VertexId(0)).unwrap();
        assert_eq!(range, BTreeSet::from([VertexId(0)]));
        assert!(g.shopping_range(VertexId(1)).is_err());
    }

    #[test]
    fn shopping_range_follows_out_edges() {
        let g = diamond();
        assert_eq!(
            g.shopping_range(VertexId(0)).unwrap(),
            BTreeSet::from([VertexId(0), VertexId(1), VertexId(2)])
        );
    }

    #[test]
    fn attraction_range_single_and_union() {
        let g = diamond();
        let s = Placement::from_indices(&[1, 3]);
        assert_eq!(
            g.attraction_range(&s, &[0]).unwrap(),
            BTreeSet::from([VertexId(0), VertexId(1)])
        );
        assert_eq!(
            g.attraction_range(&s, &[0, 1]).unwrap(),
            BTreeSet::from([VertexId(0), VertexId(1), VertexId(2), VertexId(3)])
        );
        assert!(g.attraction_range(&s, &[2]).is_err());
    }

    #[test]
    fn attraction_of_isolated_vertex_is_itself() {
        let g = HostGraph::new(vec![5], &[]).unwrap();
        let s = Placement::from_indices(&[0]);
        assert_eq!(
            g.attraction_range(&s, &[0]).unwrap(),
            BTreeSet::from([VertexId(0)])
        );
    }

    #[test]
    fn coverage_and_welfare() {
        let g = diamond();
        assert_eq!(g.covered_clients(&Placement::empty()).len(), 0);
        assert_eq!(g.social_welfare(&Placement::empty()), 0);

        // facility on 3 attracts {1, 2, 3}
        let s = Placement::from_indices(&[3]);
        assert_eq!(
            g.covered_clients(&s),
            BTreeSet::from([VertexId(1), VertexId(2), VertexId(3)])
        );
        assert_eq!(g.social_welfare(&s), 9);
    }

    #[test]
    fn core_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<HostGraph>();
        assert_send_sync::<Placement>();
        assert_send_sync::<crate::distribution::WeightDistribution>();
        assert_send_sync::<crate::distribution::LoadVector>();
    }

    #[test]
    fn covered_two_ways_agree() {
        // via attraction ranges vs. via shopping ranges
        let g = diamond();
        for locs in [[0u32, 1], [2, 2], [3, 0]] {
            let s = Placement::from_indices(&locs);
            let via_attraction = g.covered_clients(&s);
            let via_shopping: BTreeSet<VertexId> = g
                .vertices()
                .filter(|&v| {
                    g.shopping_range(v)
                        .unwrap()
                        .iter()
                        .any(|u| s.iter().any(|loc| loc == *u))
                })
                .collect();
            assert_eq!(via_attraction, via_shopping);
        }
    }
}
