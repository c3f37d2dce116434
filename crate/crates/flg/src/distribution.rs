//! Client weight distributions, feasibility, facility loads and client costs.

use crate::graph::{HostGraph, Placement, VertexId};
use crate::rational::{rat_int, Rational};
use crate::Error;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

/// Sparse per-client weight distribution: for each client, the weight it
/// sends to each facility index. Only positive entries are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightDistribution {
    k: usize,
    rows: Vec<BTreeMap<usize, Rational>>,
}

impl WeightDistribution {
    pub fn new(n: usize, k: usize) -> Self {
        WeightDistribution {
            k,
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Sets the weight client `v` sends to facility `j`. Zero removes the
    /// entry; negative weights are rejected by construction.
    pub fn set(&mut self, v: VertexId, j: usize, weight: Rational) {
        assert!(j < self.k, "facility index {j} out of range");
        assert!(!weight.is_negative(), "distribution entries are nonnegative");
        if weight.is_zero() {
            self.rows[v.index()].remove(&j);
        } else {
            self.rows[v.index()].insert(j, weight);
        }
    }

    pub fn entry(&self, v: VertexId, j: usize) -> Rational {
        self.rows[v.index()]
            .get(&j)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// The positive entries of client `v`, by facility index.
    pub fn row(&self, v: VertexId) -> &BTreeMap<usize, Rational> {
        &self.rows[v.index()]
    }

    /// Facilities patronized by `v` (positive weight only).
    pub fn patronized(&self, v: VertexId) -> impl Iterator<Item = usize> + '_ {
        self.rows[v.index()].keys().copied()
    }
}

/// Exact per-facility loads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadVector(Vec<Rational>);

impl LoadVector {
    pub fn new(loads: Vec<Rational>) -> Self {
        LoadVector(loads)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, j: usize) -> &Rational {
        &self.0[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rational> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn sum(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, l| acc + l)
    }
}

impl From<LoadVector> for Vec<Rational> {
    fn from(lv: LoadVector) -> Self {
        lv.0
    }
}

/// True iff `sigma` is feasible for `s`: every covered client distributes
/// exactly its weight, only to facilities inside its shopping range, and
/// uncovered clients distribute nothing.
pub fn is_feasible_distribution(
    g: &HostGraph,
    s: &Placement,
    sigma: &WeightDistribution,
) -> bool {
    feasibility_violation(g, s, sigma).is_none()
}

/// The first feasibility violation, as a human-readable reason.
pub(crate) fn feasibility_violation(
    g: &HostGraph,
    s: &Placement,
    sigma: &WeightDistribution,
) -> Option<String> {
    if sigma.n() != g.n() || sigma.k() != s.k() {
        return Some(format!(
            "distribution shape ({}, {}) does not match instance ({}, {})",
            sigma.n(),
            sigma.k(),
            g.n(),
            s.k()
        ));
    }
    for v in g.vertices() {
        let range = g.shopping_range(v).expect("vertex ids are dense");
        let in_range =
            |j: &usize| -> bool { *j < s.k() && range.contains(&s.location(*j)) };
        let covered = (0..s.k()).any(|j| in_range(&j));
        let row = sigma.row(v);
        if let Some(j) = row.keys().find(|j| !in_range(j)) {
            return Some(format!(
                "client {v} sends weight to facility {j} outside its shopping range"
            ));
        }
        let total: Rational = row.values().fold(Rational::zero(), |acc, w| acc + w);
        if covered {
            if total != rat_int(g.weight(v)) {
                return Some(format!(
                    "covered client {v} distributes {total} of its weight {}",
                    g.weight(v)
                ));
            }
        } else if !total.is_zero() {
            return Some(format!("uncovered client {v} distributes weight {total}"));
        }
    }
    None
}

/// Exact column sums of `sigma`: the load of each facility.
pub fn facility_loads(
    g: &HostGraph,
    s: &Placement,
    sigma: &WeightDistribution,
) -> Result<LoadVector, Error> {
    if let Some(detail) = feasibility_violation(g, s, sigma) {
        return Err(Error::InfeasibleDistribution { detail });
    }
    Ok(column_sums(g, s.k(), sigma))
}

pub(crate) fn column_sums(g: &HostGraph, k: usize, sigma: &WeightDistribution) -> LoadVector {
    let mut loads = vec![Rational::zero(); k];
    for v in g.vertices() {
        for (&j, w) in sigma.row(v) {
            loads[j] += w;
        }
    }
    LoadVector(loads)
}

/// The maximum load among the facilities client `v` patronizes, or `None`
/// if it patronizes nothing. Expects a feasible `sigma`.
pub fn client_cost(
    g: &HostGraph,
    s: &Placement,
    sigma: &WeightDistribution,
    v: VertexId,
) -> Option<Rational> {
    let loads = column_sums(g, s.k(), sigma);
    sigma
        .patronized(v)
        .map(|j| loads.get(j).clone())
        .max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn two_mutual() -> (HostGraph, Placement) {
        let g = HostGraph::new(vec![1, 1], &[(0, 1), (1, 0)]).unwrap();
        let s = Placement::from_indices(&[0, 1]);
        (g, s)
    }

    #[test]
    fn feasible_full_weight_to_one_facility() {
        let (g, s) = two_mutual();
        let mut sigma = WeightDistribution::new(2, 2);
        sigma.set(VertexId(0), 0, rat_int(1));
        sigma.set(VertexId(1), 0, rat_int(1));
        assert!(is_feasible_distribution(&g, &s, &sigma));
        let loads = facility_loads(&g, &s, &sigma).unwrap();
        assert_eq!(loads.as_slice(), &[rat_int(2), rat_int(0)]);
    }

    #[test]
    fn withholding_weight_is_infeasible() {
        let (g, s) = two_mutual();
        let mut sigma = WeightDistribution::new(2, 2);
        sigma.set(VertexId(0), 0, rat(1, 2));
        sigma.set(VertexId(1), 1, rat_int(1));
        assert!(!is_feasible_distribution(&g, &s, &sigma));
        assert!(facility_loads(&g, &s, &sigma).is_err());
    }

    #[test]
    fn uncovered_client_with_weight_is_infeasible() {
        // vertex 2 is isolated and uncovered
        let g = HostGraph::new(vec![1, 1, 1], &[(0, 1), (1, 0)]).unwrap();
        let s = Placement::from_indices(&[0]);
        let mut sigma = WeightDistribution::new(3, 1);
        sigma.set(VertexId(0), 0, rat_int(1));
        sigma.set(VertexId(1), 0, rat_int(1));
        assert!(is_feasible_distribution(&g, &s, &sigma));
        sigma.set(VertexId(2), 0, rat(1, 3));
        assert!(!is_feasible_distribution(&g, &s, &sigma));
    }

    #[test]
    fn out_of_range_entry_is_infeasible() {
        // 1 has no edge to 0's location? build 0->1 only: client 1's range is {1}
        let g = HostGraph::new(vec![1, 1], &[(0, 1)]).unwrap();
        let s = Placement::from_indices(&[0]);
        let mut sigma = WeightDistribution::new(2, 1);
        sigma.set(VertexId(1), 0, rat_int(1));
        assert!(!is_feasible_distribution(&g, &s, &sigma));
    }

    #[test]
    fn empty_distribution_over_zero_weights_is_all_zero() {
        // the only covered clients weigh nothing, so the empty distribution
        // is feasible and every column sums to zero
        let g = HostGraph::new(vec![0, 0], &[(1, 0)]).unwrap();
        let s = Placement::from_indices(&[0]);
        let sigma = WeightDistribution::new(2, 1);
        assert!(is_feasible_distribution(&g, &s, &sigma));
        let loads = facility_loads(&g, &s, &sigma).unwrap();
        assert_eq!(loads.as_slice(), &[rat_int(0)]);
    }

    #[test]
    fn co_located_split_loads() {
        // one client of weight 3 covered by two co-located facilities
        let g = HostGraph::new(vec![3], &[]).unwrap();
        let s = Placement::from_indices(&[0, 0]);
        let mut sigma = WeightDistribution::new(1, 2);
        sigma.set(VertexId(0), 0, rat(3, 2));
        sigma.set(VertexId(0), 1, rat(3, 2));
        let loads = facility_loads(&g, &s, &sigma).unwrap();
        assert_eq!(loads.as_slice(), &[rat(3, 2), rat(3, 2)]);
        assert_eq!(loads.sum(), rat_int(3));
    }

    #[test]
    fn client_cost_is_max_patronized_load() {
        let g = HostGraph::new(vec![2, 1, 1], &[(0, 1), (0, 2)]).unwrap();
        let s = Placement::from_indices(&[1, 2]);
        let mut sigma = WeightDistribution::new(3, 2);
        // client 0 splits over both; clients 1 and 2 feed their own vertex
        sigma.set(VertexId(0), 0, rat_int(1));
        sigma.set(VertexId(0), 1, rat_int(1));
        sigma.set(VertexId(1), 0, rat_int(1));
        sigma.set(VertexId(2), 1, rat_int(1));
        assert!(is_feasible_distribution(&g, &s, &sigma));
        assert_eq!(client_cost(&g, &s, &sigma, VertexId(0)), Some(rat_int(2)));
        // uncovered / non-patronizing client
        let g2 = HostGraph::new(vec![1, 1], &[]).unwrap();
        let s2 = Placement::from_indices(&[0]);
        let sigma2 = {
            let mut d = WeightDistribution::new(2, 1);
            d.set(VertexId(0), 0, rat_int(1));
            d
        };
        assert_eq!(client_cost(&g2, &s2, &sigma2, VertexId(1)), None);
    }
}
