//! Structural inconsistency (SI) of node pairs and the diagnostics built on
//! it.
//!
//! `SI(i, i'; T) = sum_{j,j'} T_jj' (B^s_ij - B^t_i'j')^2` measures how badly
//! the dissimilarity profile of source node `i` disagrees with that of
//! target node `i'` once the rest of the graph is transported by `T`. CSI is
//! SI at the true counterpart.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};

use crate::diffusion::{DissimilarityPair, WaveletParams};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, Permutation};
use crate::transport::{self, TransportPlan};

/// `S[i][i'] = SI(i, i'; T)` for every node pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SiMatrix(pub Array2<f64>);

impl SiMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }
}

fn check_plan(d: &DissimilarityPair, plan: &TransportPlan) -> Result<usize> {
    let n = d.n()?;
    if plan.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: plan.n(),
        });
    }
    Ok(n)
}

fn check_node(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    Ok(())
}

/// Direct double sum over the plan.
pub fn si_pair(d: &DissimilarityPair, plan: &TransportPlan, i: usize, i_t: usize) -> Result<f64> {
    let n = check_plan(d, plan)?;
    check_node(i, n)?;
    check_node(i_t, n)?;
    let t = plan.matrix();
    let mut total = 0.0;
    for j in 0..n {
        let bs = d.b_s[[i, j]];
        for jt in 0..n {
            let w = t[[j, jt]];
            if w != 0.0 {
                let diff = bs - d.b_t[[i_t, jt]];
                total += w * diff * diff;
            }
        }
    }
    Ok(total)
}

/// All pairwise SI values via `h(B^s) p (x) 1 + 1 (x) h(B^t) q - 2 B^s T B^t`
/// with `p = T 1`, `q = T' 1`. On a doubly stochastic plan `p = q = 1`.
/// Rounding residues below zero are clamped.
pub fn si_matrix(d: &DissimilarityPair, plan: &TransportPlan) -> Result<SiMatrix> {
    check_plan(d, plan)?;
    let s = transport::transport_cost_matrix(d, plan.matrix(), &plan.row_sums(), &plan.col_sums());
    Ok(SiMatrix(s.mapv(|v| v.max(0.0))))
}

/// `CSI(i; T) = SI(i, truth(i); T)` for every source node.
pub fn csi(
    d: &DissimilarityPair,
    plan: &TransportPlan,
    truth: &Permutation,
) -> Result<Array1<f64>> {
    let n = check_plan(d, plan)?;
    if truth.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: truth.len(),
        });
    }
    let s = si_matrix(d, plan)?;
    Ok(Array1::from_shape_fn(n, |i| s.get(i, truth.apply(i))))
}

fn mapped_neighbors(g: &Graph, pi: &Permutation, i: usize) -> BTreeSet<usize> {
    g.neighbors(i).map(|j| pi.apply(j)).collect()
}

fn check_matching(g_s: &Graph, g_t: &Graph, pi: &Permutation, i: usize, i_t: usize) -> Result<()> {
    g_s.check_binary()?;
    g_t.check_binary()?;
    if g_s.n() != g_t.n() || pi.len() != g_s.n() {
        return Err(Error::DimensionMismatch {
            expected: g_s.n(),
            found: if g_t.n() != g_s.n() {
                g_t.n()
            } else {
                pi.len()
            },
        });
    }
    g_s.check_index(i)?;
    g_t.check_index(i_t)
}

/// Intersection and union sizes of `pi(N(i))` and `N(i')`, over open
/// one-hop neighbourhoods.
fn overlap(g_s: &Graph, g_t: &Graph, pi: &Permutation, i: usize, i_t: usize) -> (usize, usize) {
    let a = mapped_neighbors(g_s, pi, i);
    let b: BTreeSet<usize> = g_t.neighbors(i_t).collect();
    (a.intersection(&b).count(), a.union(&b).count())
}

/// Matched neighbourhood consistency: Jaccard similarity of `pi(N(i))` and
/// `N(i')`. Two empty neighbourhoods count as fully consistent.
pub fn mnc(g_s: &Graph, g_t: &Graph, pi: &Permutation, i: usize, i_t: usize) -> Result<f64> {
    check_matching(g_s, g_t, pi, i, i_t)?;
    let (inter, union) = overlap(g_s, g_t, pi, i, i_t);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// First-order SI of a matched pair: `t^2 (|union| - |intersection|)`.
///
/// Only defined when `pi(i) == i'`; for other pairs the zero diagonal of `B`
/// meets `psi_bar` and the closed form no longer holds.
pub fn si_one_hop_form(
    g_s: &Graph,
    g_t: &Graph,
    pi: &Permutation,
    t: f64,
    i: usize,
    i_t: usize,
) -> Result<f64> {
    check_matching(g_s, g_t, pi, i, i_t)?;
    if pi.apply(i) != i_t {
        return Err(Error::UnmatchedPair {
            source_node: i,
            target: i_t,
            mapped: pi.apply(i),
        });
    }
    let (inter, union) = overlap(g_s, g_t, pi, i, i_t);
    Ok(t * t * (union - inter) as f64)
}

/// Edge-perturbation energy and the CSI bound it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    /// `eps[k-1]` is the order-`k` local perturbation energy.
    pub eps: Vec<f64>,
    /// `K * sum_k ((-t)^k / k!)^2 eps_k`, the same for every node.
    pub bound: Array1<f64>,
    /// CSI of every node under the true matching.
    pub csi: Array1<f64>,
}

impl PerturbationReport {
    /// Largest `csi[i] - bound[i]`; non-positive when the bound holds.
    pub fn worst_violation(&self) -> f64 {
        self.csi
            .iter()
            .zip(self.bound.iter())
            .fold(f64::NEG_INFINITY, |m, (c, b)| m.max(c - b))
    }
}

/// Compares `L_s^k` with the registered target power `T* L_t^k T*'` for
/// `k = 1..=K`.
///
/// `eps_k = max_i sum |Delta_k[j][j']|^2` over `j` within `k` hops of `i` in
/// the source and `j'` whose counterpart lies within `k` hops of `truth(i)`
/// in the target. Both neighbourhoods include their centre.
pub fn perturbation_report(
    g_s: &Graph,
    g_t: &Graph,
    truth: &Permutation,
    params: &WaveletParams,
) -> Result<PerturbationReport> {
    params.validate()?;
    let n = g_s.n();
    if g_t.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g_t.n(),
        });
    }
    if truth.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: truth.len(),
        });
    }
    let inv = truth.inverse();

    let l_s = graph::laplacian(g_s);
    let l_t = graph::laplacian(g_t);
    let mut pow_s = Array2::<f64>::eye(n);
    let mut pow_t = Array2::<f64>::eye(n);
    let mut eps = Vec::with_capacity(params.order);
    let mut bound_value = 0.0;

    for k in 1..=params.order {
        pow_s = l_s.dot(&pow_s);
        pow_t = l_t.dot(&pow_t);
        // Registered target power: [T* M T*']_{jj'} = M[truth(j)][truth(j')].
        let delta = Array2::from_shape_fn((n, n), |(j, jt)| {
            pow_s[[j, jt]] - pow_t[[truth.apply(j), truth.apply(jt)]]
        });
        let mut eps_k = 0.0f64;
        for i in 0..n {
            let near_s = graph::k_hop_nodes(g_s, i, k)?;
            let near_t: Vec<usize> = graph::k_hop_nodes(g_t, truth.apply(i), k)?
                .into_iter()
                .map(|v| inv.apply(v))
                .collect();
            let mut local = 0.0;
            for &j in &near_s {
                for &jt in &near_t {
                    local += delta[[j, jt]] * delta[[j, jt]];
                }
            }
            eps_k = eps_k.max(local);
        }
        let a_k = params.coefficient(k);
        bound_value += a_k * a_k * eps_k;
        eps.push(eps_k);
    }
    bound_value *= params.order as f64;

    let d = DissimilarityPair::from_graphs(g_s, g_t, params)?;
    let csi = csi(&d, &TransportPlan::from_permutation(truth), truth)?;
    Ok(PerturbationReport {
        eps,
        bound: Array1::from_elem(n, bound_value),
        csi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn weighted_path_pair() -> DissimilarityPair {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        DissimilarityPair::from_graphs(&g, &g, &WaveletParams::new(0.5, 1, 1.0).unwrap()).unwrap()
    }

    fn p3() -> Graph {
        Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn si_pair_examples() {
        let d = weighted_path_pair();
        let id = TransportPlan::from_permutation(&Permutation::identity(3));
        for i in 0..3 {
            assert_eq!(si_pair(&d, &id, i, i).unwrap(), 0.0);
        }
        let swap = Permutation::new(vec![2, 1, 0]).unwrap();
        let t = TransportPlan::from_permutation(&swap);
        assert_eq!(si_pair(&d, &t, 0, 2).unwrap(), 0.25);

        let g = p3();
        let d = DissimilarityPair::from_graphs(&g, &g, &WaveletParams::new(0.5, 1, 1.0).unwrap())
            .unwrap();
        assert_eq!(si_pair(&d, &t, 0, 2).unwrap(), 0.0);

        assert!(matches!(
            si_pair(&d, &t, 3, 0),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
        assert!(si_pair(&d, &TransportPlan::uniform(4), 0, 0).is_err());
    }

    #[test]
    fn si_matrix_examples() {
        let d = weighted_path_pair();
        let id = TransportPlan::from_permutation(&Permutation::identity(3));
        let s = si_matrix(&d, &id).unwrap();
        for i in 0..3 {
            assert!(s.get(i, i).abs() < 1e-12);
        }
        assert!((s.get(0, 2) - 8.25).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let direct = si_pair(&d, &id, i, j).unwrap();
                assert!((s.get(i, j) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn csi_examples() {
        let g = p3();
        let d = DissimilarityPair::from_graphs(&g, &g, &WaveletParams::new(0.5, 1, 1.0).unwrap())
            .unwrap();
        let truth = Permutation::identity(3);
        let c = csi(&d, &TransportPlan::from_permutation(&truth), &truth).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));

        // Uniform plan: CSI(i) = (1/3) sum_{j,j'} (B_ij - B_ij')^2. With
        // B = [[0,1,1.5],[1,0,1],[1.5,1,0]] the row-wise sums are
        // row 0: 2*(1 + 2.25 + 0.25) = 7, row 1: 2*(1 + 0 + 1) = 4, row 2: 7.
        let c = csi(&d, &TransportPlan::uniform(3), &truth).unwrap();
        let expected = array![7.0 / 3.0, 4.0 / 3.0, 7.0 / 3.0];
        for (a, b) in c.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }

        let s = si_matrix(&d, &TransportPlan::uniform(3)).unwrap();
        let shuffled = Permutation::new(vec![1, 2, 0]).unwrap();
        let c = csi(&d, &TransportPlan::uniform(3), &shuffled).unwrap();
        for i in 0..3 {
            assert_eq!(c[i], s.get(i, shuffled.apply(i)));
        }
    }

    #[test]
    fn mnc_examples() {
        let g = p3();
        assert_eq!(mnc(&g, &g, &Permutation::identity(3), 0, 0).unwrap(), 1.0);
        let swap = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(mnc(&g, &g, &swap, 0, 2).unwrap(), 1.0);

        // Triangle 0-1-2 with pendant 3 on node 0; swap pendant and node 2.
        // N(1) = {0, 2} maps to {0, 3}; N(1) in the target is {0, 2}.
        let tp = Graph::unweighted(4, &[(0, 1), (1, 2), (0, 2), (0, 3)]).unwrap();
        let pi = Permutation::new(vec![0, 1, 3, 2]).unwrap();
        assert_eq!(mnc(&tp, &tp, &pi, 1, 1).unwrap(), 1.0 / 3.0);

        let isolated = Graph::unweighted(2, &[]).unwrap();
        assert_eq!(
            mnc(&isolated, &isolated, &Permutation::identity(2), 0, 1).unwrap(),
            1.0
        );

        let weighted = Graph::from_edges(3, &[(0, 1, 2.0)]).unwrap();
        assert!(matches!(
            mnc(&weighted, &g, &Permutation::identity(3), 0, 0),
            Err(Error::NonBinary { .. })
        ));
    }

    #[test]
    fn one_hop_form_examples() {
        let g = p3();
        for i in 0..3 {
            assert_eq!(
                si_one_hop_form(&g, &g, &Permutation::identity(3), 0.5, i, i).unwrap(),
                0.0
            );
        }
        let swap = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(si_one_hop_form(&g, &g, &swap, 0.5, 0, 2).unwrap(), 0.0);
        assert!(matches!(
            si_one_hop_form(&g, &g, &swap, 0.5, 0, 0),
            Err(Error::UnmatchedPair { mapped: 2, .. })
        ));

        // Star centre 0 with leaves {1,2,3} against a path 1-0-2 plus 3-4:
        // pi = identity gives N(0) = {1,2,3} vs {1,2}: |cap| = 2, |cup| = 3.
        let s = Graph::unweighted(5, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let t = Graph::unweighted(5, &[(0, 1), (0, 2), (3, 4)]).unwrap();
        let v = si_one_hop_form(&s, &t, &Permutation::identity(5), 1.0, 0, 0).unwrap();
        assert_eq!(v, 1.0);
        // N(0) = {1,2} vs {1,3}: |cap| = 1, |cup| = 3 at t = 1 gives 2.
        let s2 = Graph::unweighted(4, &[(0, 1), (0, 2)]).unwrap();
        let t2 = Graph::unweighted(4, &[(0, 1), (0, 3)]).unwrap();
        let v = si_one_hop_form(&s2, &t2, &Permutation::identity(4), 1.0, 0, 0).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn perturbation_report_examples() {
        let g = Graph::unweighted(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4)]).unwrap();
        let p = Permutation::new(vec![3, 5, 0, 1, 4, 2]).unwrap();
        let (h, truth) = graph::permute(&g, &p).unwrap();
        let r = perturbation_report(&g, &h, &truth, &WaveletParams::default()).unwrap();
        assert!(r.eps.iter().all(|&e| e == 0.0));
        assert!(r.bound.iter().all(|&b| b == 0.0));
        assert!(r.csi.iter().all(|&c| c.abs() < 1e-12));

        let tri = Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let params = WaveletParams::new(1e-3, 2, 1.0).unwrap();
        let r = perturbation_report(&p3(), &tri, &Permutation::identity(3), &params).unwrap();
        assert!(r.worst_violation() <= 1e-9);
        assert!(r.csi.iter().any(|&c| c > 0.0));
        let b0 = r.bound[0];
        assert!(r.bound.iter().all(|&b| b == b0));
    }

    #[test]
    fn bound_scales_with_time_squared() {
        let tri = Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let full = WaveletParams::new(0.4, 1, 1.0).unwrap();
        let half = WaveletParams::new(0.2, 1, 1.0).unwrap();
        let id = Permutation::identity(3);
        let a = perturbation_report(&p3(), &tri, &id, &full).unwrap();
        let b = perturbation_report(&p3(), &tri, &id, &half).unwrap();
        assert!((b.bound[0] - a.bound[0] / 4.0).abs() < 1e-15);
    }

    #[test]
    fn perturbation_report_errors() {
        let tri = Graph::unweighted(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let four = Graph::unweighted(4, &[(0, 1)]).unwrap();
        let params = WaveletParams::default();
        assert!(perturbation_report(&tri, &four, &Permutation::identity(3), &params).is_err());
        assert!(perturbation_report(&tri, &p3(), &Permutation::identity(4), &params).is_err());
    }
}
