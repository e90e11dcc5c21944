//! Truncated heat-diffusion wavelets and the dissimilarity matrices built
//! from them.
//!
//! For a graph with Laplacian `L`, the order-`K` wavelet is
//!
//! ```text
//! Psi = sum_{k=0}^{K} (-t)^k / k! * L^k
//! ```
//!
//! Row `i` of `Psi` describes how heat placed on node `i` spreads over the
//! first `K` hops. Two graphs are compared through `B = psi_bar - Psi`
//! (off-diagonal) with a zero diagonal, where `psi_bar` is shared by both
//! graphs and strictly dominates every wavelet entry.
//!
//! Storage is dense: each wavelet or dissimilarity matrix takes `8 * V^2`
//! bytes.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{self, Graph};

/// Default propagation time.
pub const DEFAULT_TIME: f64 = 1e-3;
/// Default truncation order.
pub const DEFAULT_ORDER: usize = 3;
/// Default gap between the largest wavelet entry and `psi_bar`.
pub const DEFAULT_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletParams {
    /// Propagation time `t > 0`.
    pub t: f64,
    /// Truncation order `K >= 1`.
    pub order: usize,
    /// Added to the largest wavelet entry to form `psi_bar`.
    pub margin: f64,
}

impl Default for WaveletParams {
    fn default() -> Self {
        Self {
            t: DEFAULT_TIME,
            order: DEFAULT_ORDER,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl WaveletParams {
    pub fn new(t: f64, order: usize, margin: f64) -> Result<Self> {
        let p = Self { t, order, margin };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "propagation time t = {} must be positive",
                self.t
            )));
        }
        if self.order < 1 {
            return Err(Error::InvalidParameter(
                "truncation order K must be >= 1".into(),
            ));
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "margin {} must be positive",
                self.margin
            )));
        }
        Ok(())
    }

    /// Series coefficient `(-t)^k / k!`.
    pub fn coefficient(&self, k: usize) -> f64 {
        (1..=k).fold(1.0, |c, j| c * (-self.t) / j as f64)
    }
}

/// The truncated heat kernel of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletMatrix {
    psi: Array2<f64>,
}

impl WaveletMatrix {
    /// Wraps an arbitrary square matrix, e.g. a hand-built test fixture.
    pub fn from_matrix(psi: Array2<f64>) -> Result<Self> {
        if psi.nrows() != psi.ncols() {
            return Err(Error::DimensionMismatch {
                expected: psi.nrows(),
                found: psi.ncols(),
            });
        }
        Ok(Self { psi })
    }

    pub fn psi(&self) -> &Array2<f64> {
        &self.psi
    }

    pub fn n(&self) -> usize {
        self.psi.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.psi
    }
}

/// Sparse row view of a Laplacian, used to form `L * M` in `O(nnz * V)`.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn new(m: &Array2<f64>) -> Self {
        let rows = m
            .outer_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    fn mul_dense(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(m.raw_dim());
        for (i, row) in self.rows.iter().enumerate() {
            let mut target = out.row_mut(i);
            for &(j, v) in row {
                target.scaled_add(v, &m.row(j));
            }
        }
        out
    }
}

/// Order-`K` heat wavelet `sum_k (-t)^k/k! L^k`, accumulated with running
/// powers of `L` and symmetrised on output.
pub fn heat_wavelet(g: &Graph, params: &WaveletParams) -> Result<WaveletMatrix> {
    params.validate()?;
    let n = g.n();
    let lap = graph::laplacian(g);
    let sparse = SparseRows::new(&lap);

    let mut psi = Array2::<f64>::eye(n);
    let mut power = Array2::<f64>::eye(n);
    let mut coef = 1.0;
    for k in 1..=params.order {
        power = sparse.mul_dense(&power);
        coef *= -params.t / k as f64;
        psi.scaled_add(coef, &power);
    }
    let sym = (&psi + &psi.t()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("heat wavelet"));
    }
    Ok(WaveletMatrix { psi: sym })
}

/// Dissimilarity matrices of a graph pair, sharing one `psi_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityPair {
    pub b_s: Array2<f64>,
    pub b_t: Array2<f64>,
    pub psi_bar: f64,
}

impl DissimilarityPair {
    /// Builds the pair straight from two graphs.
    pub fn from_graphs(g_s: &Graph, g_t: &Graph, params: &WaveletParams) -> Result<Self> {
        let psi_s = heat_wavelet(g_s, params)?;
        let psi_t = heat_wavelet(g_t, params)?;
        dissimilarity_pair(&psi_s, &psi_t, params.margin)
    }

    /// Node count when both sides agree.
    pub fn n(&self) -> Result<usize> {
        let n = self.b_s.nrows();
        if self.b_t.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.b_t.nrows(),
            });
        }
        Ok(n)
    }
}

fn to_dissimilarity(psi: &Array2<f64>, psi_bar: f64) -> Array2<f64> {
    let mut b = psi.mapv(|v| psi_bar - v);
    b.diag_mut().fill(0.0);
    b
}

/// `psi_bar = max(Psi^s, Psi^t) + margin`; `B = psi_bar - Psi` off the
/// diagonal and zero on it.
pub fn dissimilarity_pair(
    psi_s: &WaveletMatrix,
    psi_t: &WaveletMatrix,
    margin: f64,
) -> Result<DissimilarityPair> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} must be positive"
        )));
    }
    let entries = psi_s.psi.iter().chain(psi_t.psi.iter());
    let mut max = f64::NEG_INFINITY;
    for &v in entries {
        if !v.is_finite() {
            return Err(Error::NonFinite("wavelet entries"));
        }
        max = max.max(v);
    }
    // Two empty graphs still need a positive constant.
    let psi_bar = if max.is_finite() {
        max + margin
    } else {
        margin
    };
    Ok(DissimilarityPair {
        b_s: to_dissimilarity(&psi_s.psi, psi_bar),
        b_t: to_dissimilarity(&psi_t.psi, psi_bar),
        psi_bar,
    })
}
