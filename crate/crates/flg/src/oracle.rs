//! Floating-point oracle for equilibrium loads, independent of the flow
//! machinery: minimizes the sum of squared facility loads over the polytope
//! of feasible client weight distributions (whose optima are exactly the
//! client equilibria, with unique loads).
//!
//! The method is conditional-gradient flavored, but with fully corrective
//! per-client steps: cycling over clients, each client's block is re-solved
//! exactly by waterfilling its weight onto the least-loaded facilities in
//! range. Termination is certified by the Frank-Wolfe duality gap, computed
//! in the cancellation-free form `sum_j 2 (l_j - l_min) x_vj` so that
//! tolerances near 1e-13 are meaningful in f64.

use crate::graph::{HostGraph, Placement};
use crate::Error;

/// Approximate equilibrium loads with stationarity gap below `tolerance`.
/// Errors if `max_iters` sweeps do not reach the tolerance.
pub fn eq_oracle_loads(
    g: &HostGraph,
    s: &Placement,
    tolerance: f64,
    max_iters: u64,
) -> Result<Vec<f64>, Error> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    s.validate(g).expect("placement must fit the host graph");
    let k = s.k();
    if k == 0 {
        return Ok(Vec::new());
    }

    // covered positive-weight clients and their in-range facilities
    let mut clients: Vec<(f64, Vec<usize>)> = Vec::new();
    for v in g.vertices() {
        if g.weight(v) == 0 {
            continue;
        }
        let range = g.shopping_range(v).expect("dense ids");
        let in_range: Vec<usize> = (0..k).filter(|&j| range.contains(&s.location(j))).collect();
        if !in_range.is_empty() {
            clients.push((g.weight(v) as f64, in_range));
        }
    }

    // uniform start
    let mut x: Vec<Vec<f64>> = clients
        .iter()
        .map(|(w, r)| vec![w / r.len() as f64; r.len()])
        .collect();
    let loads_of = |x: &[Vec<f64>]| -> Vec<f64> {
        let mut loads = vec![0.0; k];
        for ((_, r), row) in clients.iter().zip(x) {
            for (&j, &xj) in r.iter().zip(row) {
                loads[j] += xj;
            }
        }
        loads
    };

    let mut loads = loads_of(&x);
    let mut gap = duality_gap(&clients, &x, &loads);
    let mut sweeps = 0;
    while gap > tolerance {
        if sweeps == max_iters {
            return Err(Error::NonConvergence {
                iterations: max_iters,
                gap,
            });
        }
        for (ci, (w, range)) in clients.iter().enumerate() {
            // external load seen by this client on each in-range facility
            let ext: Vec<f64> = range
                .iter()
                .zip(&x[ci])
                .map(|(&j, &xj)| loads[j] - xj)
                .collect();
            let row = waterfill(*w, &ext);
            for ((&j, &new), &old) in range.iter().zip(&row).zip(&x[ci]) {
                loads[j] += new - old;
            }
            x[ci] = row;
        }
        sweeps += 1;
        loads = loads_of(&x); // drop accumulated drift before certifying
        gap = duality_gap(&clients, &x, &loads);
    }
    Ok(loads)
}

/// Exact block optimum: distribute `w` over facilities with external loads
/// `ext` so the filled facilities level out. Returns the per-facility share.
fn waterfill(w: f64, ext: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..ext.len()).collect();
    order.sort_by(|&a, &b| ext[a].total_cmp(&ext[b]));
    // find the largest prefix whose level stays above its last entry
    let mut level = 0.0;
    let mut used = 0;
    let mut prefix = 0.0;
    for m in 1..=order.len() {
        prefix += ext[order[m - 1]];
        let candidate = (prefix + w) / m as f64;
        if candidate >= ext[order[m - 1]] {
            level = candidate;
            used = m;
        } else {
            break;
        }
    }
    debug_assert!(used > 0);
    let mut row = vec![0.0; ext.len()];
    for &i in &order[..used] {
        row[i] = (level - ext[i]).max(0.0);
    }
    // normalize rounding residue onto the least-loaded slot
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        let fix = w / total;
        for r in &mut row {
            *r *= fix;
        }
    } else {
        row[order[0]] = w;
    }
    row
}

/// Frank-Wolfe duality gap of the squared-loads objective, as the
/// nonnegative sum over clients of `2 (l_j - l_min) x_vj`.
fn duality_gap(clients: &[(f64, Vec<usize>)], x: &[Vec<f64>], loads: &[f64]) -> f64 {
    let mut gap = 0.0;
    for ((_, range), row) in clients.iter().zip(x) {
        let min = range
            .iter()
            .map(|&j| loads[j])
            .fold(f64::INFINITY, f64::min);
        for (&j, &xj) in range.iter().zip(row) {
            gap += 2.0 * (loads[j] - min) * xj;
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    #[test]
    fn fig3_oracle_matches_exact() {
        let (g, _) =
            parse_instance("p flg 3 3 2\nv 0 1\nv 1 1\nv 2 1\ne 0 1\ne 1 0\ne 2 1\n").unwrap();
        let s = Placement::from_indices(&[0, 2]);
        let loads = eq_oracle_loads(&g, &s, 1e-13, 100_000).unwrap();
        assert!((loads[0] - 2.0).abs() < 1e-6);
        assert!((loads[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fig2_oracle_matches_exact() {
        let text = "p flg 10 12 4\n\
            v 0 1\nv 1 1\nv 2 1\nv 3 1\nv 4 1\nv 5 1\nv 6 1\nv 7 1\nv 8 1\nv 9 1\n\
            e 1 0\ne 1 6\ne 1 7\ne 2 6\ne 2 7\ne 3 6\ne 3 7\ne 4 5\ne 4 6\ne 4 7\ne 8 5\ne 9 5\n";
        let (g, _) = parse_instance(text).unwrap();
        let s = Placement::from_indices(&[0, 6, 7, 5]);
        let loads = eq_oracle_loads(&g, &s, 1e-13, 100_000).unwrap();
        for (got, want) in loads.iter().zip([2.0, 2.5, 2.5, 3.0]) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn single_facility_exact_immediately() {
        let g = HostGraph::new(vec![4, 2], &[(1, 0)]).unwrap();
        let s = Placement::from_indices(&[0]);
        let loads = eq_oracle_loads(&g, &s, 1e-13, 10).unwrap();
        assert_eq!(loads, vec![6.0]);
    }

    #[test]
    fn empty_placement() {
        let g = HostGraph::new(vec![1], &[]).unwrap();
        assert_eq!(
            eq_oracle_loads(&g, &Placement::empty(), 1e-9, 10).unwrap(),
            Vec::<f64>::new()
        );
    }

    #[test]
    fn nonconvergence_is_reported() {
        // v1 can reach both facilities, v0 only its own; the uniform start
        // is suboptimal, so zero sweeps cannot certify
        let g = HostGraph::new(vec![2, 2], &[(1, 0)]).unwrap();
        let s = Placement::from_indices(&[0, 1]);
        assert!(matches!(
            eq_oracle_loads(&g, &s, 1e-9, 0),
            Err(Error::NonConvergence { .. })
        ));
        let loads = eq_oracle_loads(&g, &s, 1e-13, 1000).unwrap();
        assert!((loads[0] - 2.0).abs() < 1e-6);
        assert!((loads[1] - 2.0).abs() < 1e-6);
    }
}
