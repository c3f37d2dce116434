//! Instance families: the PoA/PoS lower-bound stars, the 3SAT hardness
//! reduction, the valid-but-not-basic utility-system counterexample, and
//! seeded random instances.

use crate::graph::{HostGraph, Placement, VertexId};
use crate::instance::ParseError;
use crate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// Index arithmetic for the star lower-bound family: k-1 small stars with
/// x-1 leaves each, one big star with k*x leaves, and one connector per
/// small star. All weights are 1. Star edges point leaf -> center, so a
/// facility on a center attracts the whole star; the i-th big-star leaf
/// additionally shops at the i-th small star's first leaf.
#[derive(Clone, Copy, Debug)]
pub struct LowerBoundLayout {
    pub k: usize,
    pub x: u64,
}

impl LowerBoundLayout {
    pub fn new(k: usize, x: u64) -> Result<Self, Error> {
        if k < 2 || x < 4 {
            return Err(Error::BadGeneratorParams {
                detail: format!("lower bound family needs k >= 2 and x >= 4, got k={k}, x={x}"),
            });
        }
        Ok(LowerBoundLayout { k, x })
    }

    pub fn vertex_count(&self) -> usize {
        let (k, x) = (self.k as u64, self.x);
        (k * x + k + (k - 1) * (x - 1)) as usize
    }

    /// Center of small star i, for i in 1..=k-1.
    pub fn small_center(&self, i: usize) -> VertexId {
        debug_assert!((1..self.k).contains(&i));
        VertexId((i - 1) as u32)
    }

    /// Leaf j of small star i, for j in 1..=x-1.
    pub fn small_leaf(&self, i: usize, j: u64) -> VertexId {
        debug_assert!((1..self.k).contains(&i));
        debug_assert!((1..self.x).contains(&j));
        let base = (self.k - 1) as u64;
        VertexId((base + (i as u64 - 1) * (self.x - 1) + (j - 1)) as u32)
    }

    /// Leaf i of the big star, for i in 1..=k*x.
    pub fn big_leaf(&self, i: u64) -> VertexId {
        debug_assert!((1..=self.k as u64 * self.x).contains(&i));
        let base = (self.k - 1) as u64 + (self.k as u64 - 1) * (self.x - 1);
        VertexId((base + (i - 1)) as u32)
    }

    pub fn big_center(&self) -> VertexId {
        VertexId((self.vertex_count() - 1) as u32)
    }

    /// One facility per star center: covers every client.
    pub fn optimum_placement(&self) -> Placement {
        let mut locations: Vec<VertexId> =
            (1..self.k).map(|i| self.small_center(i)).collect();
        locations.push(self.big_center());
        Placement::new(locations)
    }

    /// All facilities on the big center: the family's unique SPE.
    pub fn spe_placement(&self) -> Placement {
        Placement::new(vec![self.big_center(); self.k])
    }

    pub fn graph(&self) -> HostGraph {
        let n = self.vertex_count();
        let mut edges = Vec::new();
        for i in 1..self.k {
            for j in 1..self.x {
                edges.push((self.small_leaf(i, j).0, self.small_center(i).0));
            }
        }
        for i in 1..=(self.k as u64 * self.x) {
            edges.push((self.big_leaf(i).0, self.big_center().0));
        }
        for i in 1..self.k {
            edges.push((self.big_leaf(i as u64).0, self.small_leaf(i, 1).0));
        }
        HostGraph::new(vec![1; n], &edges).expect("construction is self-loop free")
    }
}

/// The PoA/PoS lower-bound instance for k facilities and star size x.
pub fn gen_lower_bound(k: usize, x: u64) -> Result<(HostGraph, usize), Error> {
    let layout = LowerBoundLayout::new(k, x)?;
    Ok((layout.graph(), k))
}

/// A signed variable occurrence.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Literal {
    pub variable: usize,
    pub negated: bool,
}

/// 3-CNF formula: exactly three literals per clause, over distinct
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    variable_count: usize,
    clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(variable_count: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, Error> {
        for clause in &clauses {
            for lit in clause {
                if lit.variable >= variable_count {
                    return Err(Error::BadGeneratorParams {
                        detail: format!(
                            "literal references variable {} of {}",
                            lit.variable, variable_count
                        ),
                    });
                }
            }
            let vars: BTreeSet<usize> = clause.iter().map(|l| l.variable).collect();
            if vars.len() != 3 {
                return Err(Error::BadGeneratorParams {
                    detail: "clause must use three distinct variables".into(),
                });
            }
        }
        Ok(CnfFormula {
            variable_count,
            clauses,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.variable_count);
        self.clauses.iter().all(|clause| {
            clause
                .iter()
                .any(|l| assignment[l.variable] != l.negated)
        })
    }

    /// DIMACS CNF: `p cnf <vars> <clauses>` then 0-terminated clauses;
    /// `c` lines are comments.
    pub fn parse_dimacs(text: &str) -> Result<Self, ParseError> {
        let mut header: Option<(usize, usize)> = None;
        let mut literals: Vec<i64> = Vec::new();
        let mut clauses: Vec<[Literal; 3]> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('c') {
                continue;
            }
            if trimmed.starts_with('p') {
                if header.is_some() {
                    return Err(ParseError::MalformedHeader {
                        line,
                        detail: "duplicate 'p' line".into(),
                    });
                }
                let toks: Vec<&str> = trimmed.split_whitespace().collect();
                if toks.len() != 4 || toks[1] != "cnf" {
                    return Err(ParseError::MalformedHeader {
                        line,
                        detail: format!("expected 'p cnf <vars> <clauses>', got '{trimmed}'"),
                    });
                }
                let vars = toks[2].parse().map_err(|_| ParseError::MalformedHeader {
                    line,
                    detail: format!("bad variable count '{}'", toks[2]),
                })?;
                let count = toks[3].parse().map_err(|_| ParseError::MalformedHeader {
                    line,
                    detail: format!("bad clause count '{}'", toks[3]),
                })?;
                header = Some((vars, count));
                continue;
            }
            let Some((vars, _)) = header else {
                return Err(ParseError::MissingHeader);
            };
            for tok in trimmed.split_whitespace() {
                let lit: i64 = tok.parse().map_err(|_| ParseError::Malformed {
                    line,
                    what: "clause",
                    detail: format!("bad literal '{tok}'"),
                })?;
                if lit == 0 {
                    let clause = take_clause(&mut literals, line, vars)?;
                    clauses.push(clause);
                } else {
                    literals.push(lit);
                }
            }
        }
        let Some((vars, count)) = header else {
            return Err(ParseError::MissingHeader);
        };
        if !literals.is_empty() {
            return Err(ParseError::MissingRecord {
                what: "clause terminator 0",
            });
        }
        if clauses.len() != count {
            return Err(ParseError::EdgeCount {
                expected: count,
                found: clauses.len(),
            });
        }
        CnfFormula::new(vars, clauses).map_err(|e| ParseError::Malformed {
            line: 0,
            what: "clause",
            detail: e.to_string(),
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p cnf {} {}", self.variable_count, self.clauses.len()).unwrap();
        for clause in &self.clauses {
            for lit in clause {
                let signed = (lit.variable + 1) as i64 * if lit.negated { -1 } else { 1 };
                write!(out, "{signed} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

fn take_clause(
    literals: &mut Vec<i64>,
    line: usize,
    vars: usize,
) -> Result<[Literal; 3], ParseError> {
    let raw = std::mem::take(literals);
    if raw.len() != 3 {
        return Err(ParseError::Malformed {
            line,
            what: "clause",
            detail: format!("clause holds {} literals, need exactly 3", raw.len()),
        });
    }
    let mut lits = [Literal {
        variable: 0,
        negated: false,
    }; 3];
    for (slot, &lit) in lits.iter_mut().zip(raw.iter()) {
        let var = lit.unsigned_abs() as usize;
        if var == 0 || var > vars {
            return Err(ParseError::Malformed {
                line,
                what: "clause",
                detail: format!("literal {lit} out of variable range 1..={vars}"),
            });
        }
        *slot = Literal {
            variable: var - 1,
            negated: lit < 0,
        };
    }
    let distinct: BTreeSet<usize> = lits.iter().map(|l| l.variable).collect();
    if distinct.len() != 3 {
        return Err(ParseError::Malformed {
            line,
            what: "clause",
            detail: "clause repeats a variable".into(),
        });
    }
    Ok(lits)
}

/// Vertex of a literal in the reduction graph.
pub fn literal_vertex(lit: Literal) -> VertexId {
    VertexId((2 * lit.variable + usize::from(lit.negated)) as u32)
}

/// Vertex of clause `c` in the reduction graph.
pub fn clause_vertex(variable_count: usize, c: usize) -> VertexId {
    VertexId((2 * variable_count + c) as u32)
}

/// The hardness-reduction instance: complementary literal vertices point at
/// each other, clause vertices shop at their literals, k = |variables|.
/// A k-placement covers everything iff the formula is satisfiable.
pub fn gen_3sat(phi: &CnfFormula) -> (HostGraph, usize) {
    let nv = phi.variable_count();
    let n = 2 * nv + phi.clause_count();
    let mut edges = Vec::new();
    for i in 0..nv {
        let pos = 2 * i as u32;
        edges.push((pos, pos + 1));
        edges.push((pos + 1, pos));
    }
    for (c, clause) in phi.clauses().iter().enumerate() {
        for &lit in clause {
            edges.push((clause_vertex(nv, c).0, literal_vertex(lit).0));
        }
    }
    let g = HostGraph::new(vec![1; n], &edges).expect("reduction has no duplicate edges");
    (g, nv)
}

/// Reads a satisfying assignment off a full-coverage placement: variable x
/// is true iff the positive literal vertex is occupied. `None` unless `s`
/// covers every client.
pub fn decode_assignment(g: &HostGraph, phi: &CnfFormula, s: &Placement) -> Option<Vec<bool>> {
    if g.covered_clients(s).len() != g.n() {
        return None;
    }
    let occupied: BTreeSet<VertexId> = s.iter().collect();
    let mut assignment = Vec::with_capacity(phi.variable_count());
    for var in 0..phi.variable_count() {
        let pos = occupied.contains(&literal_vertex(Literal {
            variable: var,
            negated: false,
        }));
        let neg = occupied.contains(&literal_vertex(Literal {
            variable: var,
            negated: true,
        }));
        match (pos, neg) {
            (true, _) => assignment.push(true),
            (false, true) => assignment.push(false),
            // full coverage forces one facility per literal pair
            (false, false) => return None,
        }
    }
    debug_assert!(phi.evaluate(&assignment));
    Some(assignment)
}

/// Two unit clients pointing at each other, facilities on both: removing
/// either facility leaves the welfare unchanged although the removed agent
/// carried load 1 (valid, not basic, as a utility system).
pub fn gen_basic_us_counterexample() -> (HostGraph, usize, Placement) {
    let g = HostGraph::new(vec![1, 1], &[(0, 1), (1, 0)]).expect("fixed fixture");
    (g, 2, Placement::from_indices(&[0, 1]))
}

/// Seeded uniform random instance: every ordered pair becomes an edge with
/// probability `edge_density`, weights are uniform in [1, max_weight].
/// Identical seeds yield identical instances.
pub fn gen_random(
    n: usize,
    edge_density: f64,
    max_weight: u64,
    k: usize,
    seed: u64,
) -> (HostGraph, usize) {
    assert!(
        (0.0..=1.0).contains(&edge_density),
        "edge density must lie in [0, 1]"
    );
    assert!(max_weight >= 1, "max weight must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=max_weight)).collect();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for z in 0..n as u32 {
            if u != z && rng.gen_bool(edge_density) {
                edges.push((u, z));
            }
        }
    }
    let g = HostGraph::new(weights, &edges).expect("generator avoids self-loops");
    (g, k)
}
