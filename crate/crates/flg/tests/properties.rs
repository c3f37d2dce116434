//! Property tests for the structural invariants: serialization identity,
//! coverage agreement, attraction monotonicity, and the load identities.

use flg::distribution::facility_loads;
use flg::equilibrium::{
    compute_equilibrium_loads, extract_client_equilibrium, is_client_equilibrium,
    possible_utilities,
};
use flg::graph::{HostGraph, Placement, VertexId};
use flg::instance::{parse_instance, serialize_instance};
use flg::rational::{rat_int, Rational};
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn instance_strategy() -> impl Strategy<Value = (HostGraph, Placement)> {
    (1usize..9, 0usize..4).prop_flat_map(|(n, k)| {
        let weights = proptest::collection::vec(0u64..5, n);
        let edges = proptest::collection::btree_set(
            (0u32..n as u32, 0u32..n as u32).prop_filter("no self-loops", |(a, b)| a != b),
            0..(n * n).min(24),
        );
        let locations = proptest::collection::vec(0u32..n as u32, k);
        (weights, edges, locations).prop_map(|(w, e, locs)| {
            let edges: Vec<(u32, u32)> = e.into_iter().collect();
            let g = HostGraph::new(w, &edges).expect("strategy builds valid graphs");
            (g, Placement::from_indices(&locs))
        })
    })
}

proptest! {
    #[test]
    fn serialize_parse_identity((g, s) in instance_strategy()) {
        let k = s.k();
        let text = serialize_instance(&g, k);
        let (parsed, parsed_k) = parse_instance(&text).expect("own output parses");
        prop_assert_eq!(parsed, g);
        prop_assert_eq!(parsed_k, k);
    }

    #[test]
    fn covered_clients_two_ways((g, s) in instance_strategy()) {
        let via_attraction = g.covered_clients(&s);
        let via_shopping: BTreeSet<VertexId> = g
            .vertices()
            .filter(|&v| {
                let range = g.shopping_range(v).unwrap();
                s.iter().any(|loc| range.contains(&loc))
            })
            .collect();
        prop_assert_eq!(via_attraction, via_shopping);
    }

    #[test]
    fn attraction_union_is_monotone((g, s) in instance_strategy()) {
        let all: Vec<usize> = (0..s.k()).collect();
        let union = g.attraction_range(&s, &all).unwrap();
        for j in 0..s.k() {
            let single = g.attraction_range(&s, &[j]).unwrap();
            prop_assert!(single.is_subset(&union));
        }
    }

    #[test]
    fn loads_sum_to_welfare_and_certify((g, s) in instance_strategy()) {
        let comp = compute_equilibrium_loads(&g, &s);
        prop_assert_eq!(comp.loads.sum(), rat_int(g.social_welfare(&s)));
        let k = s.k() as u64;
        for load in comp.loads.iter() {
            prop_assert!(load.denom().to_u64().unwrap() <= k.max(1));
        }
        let sigma = extract_client_equilibrium(&comp);
        prop_assert!(is_client_equilibrium(&g, &s, &sigma).unwrap());
        let recomputed = facility_loads(&g, &s, &sigma).unwrap();
        prop_assert_eq!(recomputed.as_slice(), comp.loads.as_slice());
    }

    #[test]
    fn possible_utilities_sorted_and_bounded(total in 0u64..14, k in 1usize..5) {
        let vals = possible_utilities(total, k).unwrap();
        prop_assert_eq!(vals.first(), Some(&Rational::zero()));
        prop_assert!(vals.windows(2).all(|w| w[0] < w[1]));
        for v in &vals {
            prop_assert!(*v <= rat_int(total));
            prop_assert!(v.denom().to_u64().unwrap() <= k as u64);
        }
        if total > 0 {
            prop_assert_eq!(vals.last(), Some(&rat_int(total)));
        }
    }
}
