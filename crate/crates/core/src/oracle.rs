//! Exhaustive references for tiny instances.

use itertools::Itertools;

use crate::diffusion::DissimilarityPair;
use crate::error::{Error, Result};
use crate::graph::{self, Graph, Permutation};
use crate::transport::TransportPlan;

/// Largest instance [`brute_force_gw`] enumerates (8! = 40320 matchings).
pub const MAX_ENUMERATION_NODES: usize = 8;
/// Largest instance accepted by [`si_pair_bruteforce`].
pub const MAX_SI_NODES: usize = 50;
/// Objective values within this distance of the minimum count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// First minimiser in lexicographic order.
    pub best_perm: Permutation,
    pub best_objective: f64,
    /// Exactly one permutation attains the minimum.
    pub unique: bool,
    pub evaluated_count: usize,
}

fn hard_objective(d: &DissimilarityPair, perm: &[usize]) -> f64 {
    let n = perm.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let diff = d.b_s[[i, j]] - d.b_t[[perm[i], perm[j]]];
            total += diff * diff;
        }
    }
    total
}

/// Minimises the GW objective over all hard matchings.
pub fn brute_force_gw(d: &DissimilarityPair) -> Result<OracleResult> {
    let n = d.n()?;
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::SizeGuard {
            size: n,
            limit: MAX_ENUMERATION_NODES,
        });
    }
    let scored: Vec<(Vec<usize>, f64)> = (0..n)
        .permutations(n)
        .map(|p| {
            let v = hard_objective(d, &p);
            (p, v)
        })
        .collect();
    let (best, best_objective) = scored
        .iter()
        .fold(None::<(&Vec<usize>, f64)>, |acc, (p, v)| match acc {
            Some((_, b)) if b <= *v => acc,
            _ => Some((p, *v)),
        })
        .map(|(p, v)| (p.clone(), v))
        .unwrap_or_default();
    let ties = scored
        .iter()
        .filter(|(_, v)| *v <= best_objective + TIE_TOLERANCE)
        .count();
    Ok(OracleResult {
        best_perm: Permutation::new(best)?,
        best_objective,
        unique: ties == 1,
        evaluated_count: scored.len(),
    })
}

/// `SI(i, i'; T)` written as the literal four-index sum.
pub fn si_pair_bruteforce(
    d: &DissimilarityPair,
    plan: &TransportPlan,
    i: usize,
    i_t: usize,
) -> Result<f64> {
    let n = d.n()?;
    if n > MAX_SI_NODES {
        return Err(Error::SizeGuard {
            size: n,
            limit: MAX_SI_NODES,
        });
    }
    if plan.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: plan.n(),
        });
    }
    for x in [i, i_t] {
        if x >= n {
            return Err(Error::IndexOutOfRange { index: x, len: n });
        }
    }
    let mut total = 0.0;
    for j in 0..n {
        for jt in 0..n {
            let a = d.b_s[[i, j]];
            let b = d.b_t[[i_t, jt]];
            total += plan.get(j, jt) * (a - b).powi(2);
        }
    }
    Ok(total)
}

/// Whether the `k`-hop induced subgraphs around `i` in `g_s` and `i'` in
/// `g_t` are isomorphic by a root-preserving, weight-preserving bijection.
pub fn neighborhoods_isomorphic(
    g_s: &Graph,
    i: usize,
    g_t: &Graph,
    i_t: usize,
    k: usize,
) -> Result<bool> {
    let a: Vec<usize> = graph::k_hop_nodes(g_s, i, k)?.into_iter().collect();
    let b: Vec<usize> = graph::k_hop_nodes(g_t, i_t, k)?.into_iter().collect();
    for size in [a.len(), b.len()] {
        if size > MAX_ENUMERATION_NODES {
            return Err(Error::SizeGuard {
                size,
                limit: MAX_ENUMERATION_NODES,
            });
        }
    }
    if a.len() != b.len() {
        return Ok(false);
    }
    let rest_a: Vec<usize> = a.iter().copied().filter(|&v| v != i).collect();
    let rest_b: Vec<usize> = b.iter().copied().filter(|&v| v != i_t).collect();
    let m = rest_a.len();

    let found = (0..m).permutations(m).any(|p| {
        let map = |x: usize| -> usize {
            if x == i {
                i_t
            } else {
                let pos = rest_a.iter().position(|&v| v == x).unwrap();
                rest_b[p[pos]]
            }
        };
        a.iter().all(|&x| {
            a.iter()
                .all(|&y| (g_s.weight(x, y) - g_t.weight(map(x), map(y))).abs() <= TIE_TOLERANCE)
        })
    });
    Ok(found)
}
