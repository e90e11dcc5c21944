//! Transport plans on `Pi(1, 1)`, the Gromov-Wasserstein objective and its
//! gradient, Sinkhorn projection, and the KL mirror-descent step.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::diffusion::DissimilarityPair;
use crate::error::{Error, Result};
use crate::graph::{self, Graph, Permutation};

pub const DEFAULT_SINKHORN_TOL: f64 = 1e-8;
pub const DEFAULT_SINKHORN_SWEEPS: usize = 500;
/// Default value of `eta * max(grad)` at the first iteration.
pub const DEFAULT_ETA_TARGET: f64 = 30.0;

/// A non-negative square matrix, the relaxed matching variable.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan(Array2<f64>);

impl TransportPlan {
    pub fn new(m: Array2<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transport plan"));
        }
        if let Some(((i, j), v)) = m.indexed_iter().find(|(_, &v)| v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative plan entry {v} at ({i}, {j})"
            )));
        }
        Ok(Self(m))
    }

    /// `(1/V) * ones`.
    pub fn uniform(n: usize) -> Self {
        Self(Array2::from_elem((n, n), 1.0 / n as f64))
    }

    pub fn from_permutation(p: &Permutation) -> Self {
        Self(p.to_matrix())
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.0.sum_axis(Axis(1))
    }

    pub fn col_sums(&self) -> Array1<f64> {
        self.0.sum_axis(Axis(0))
    }

    /// `max(|T 1 - 1|, |T' 1 - 1|)`.
    pub fn marginal_error(&self) -> f64 {
        marginal_error(&self.0)
    }

    /// Largest entrywise change between two plans.
    pub fn max_abs_diff(&self, other: &TransportPlan) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

pub(crate) fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn marginal_error(m: &Array2<f64>) -> f64 {
    let rows = m.sum_axis(Axis(1));
    let cols = m.sum_axis(Axis(0));
    rows.iter()
        .chain(cols.iter())
        .fold(0.0f64, |e, s| e.max((s - 1.0).abs()))
}

/// Step size of the mirror-descent update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// Constant `eta`.
    Fixed(f64),
    /// Constant `eta` chosen so that `eta * max|grad|` at the first
    /// iteration equals `target`.
    AutoScaled { target: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::AutoScaled {
            target: DEFAULT_ETA_TARGET,
        }
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSchedule::Fixed(eta) => eta,
            StepSchedule::AutoScaled { target } => target,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size parameter {v} must be positive"
            )));
        }
        Ok(())
    }

    /// Resolves the constant step size from the first gradient.
    pub fn resolve(&self, first_grad: &Array2<f64>) -> f64 {
        match *self {
            StepSchedule::Fixed(eta) => eta,
            StepSchedule::AutoScaled { target } => {
                let scale = first_grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale > 0.0 {
                    target / scale
                } else {
                    target
                }
            }
        }
    }
}

/// Which node masses enter the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// `mu_i = 1`, the relaxed matching-matrix domain.
    #[default]
    Ones,
    /// `mu_i = d_i / sum_j d_j`.
    Weights,
}

pub fn marginals(g: &Graph, mode: MarginalMode) -> Result<Array1<f64>> {
    match mode {
        MarginalMode::Ones => Ok(Array1::ones(g.n())),
        MarginalMode::Weights => {
            let d = graph::degrees(g);
            if let Some(i) = d.iter().position(|&v| v <= 0.0) {
                return Err(Error::IsolatedNode(i));
            }
            let total = d.sum();
            Ok(d / total)
        }
    }
}

fn check_dims(d: &DissimilarityPair, plan: &TransportPlan) -> Result<usize> {
    let n = d.n()?;
    if plan.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: plan.n(),
        });
    }
    Ok(n)
}

/// `h(B^s) p (x) 1 + 1 (x) h(B^t) q - 2 B^s T B^t'` for arbitrary mass
/// vectors `p` (source side) and `q` (target side).
pub(crate) fn transport_cost_matrix(
    d: &DissimilarityPair,
    plan: &Array2<f64>,
    p: &Array1<f64>,
    q: &Array1<f64>,
) -> Array2<f64> {
    let sq_s = d.b_s.mapv(|v| v * v).dot(p);
    let sq_t = d.b_t.mapv(|v| v * v).dot(q);
    let mut out = d.b_s.dot(plan).dot(&d.b_t.t()) * -2.0;
    for ((i, j), v) in out.indexed_iter_mut() {
        *v += sq_s[i] + sq_t[j];
    }
    out
}

/// `sum_{i,j,i',j'} (B^s_ij - B^t_i'j')^2 T_ii' T_jj'`, evaluated as
/// `<T, S>` where `S` is the transport-distance matrix under the plan's own
/// marginals `p = T 1`, `q = T' 1`.
pub fn gw_objective(d: &DissimilarityPair, plan: &TransportPlan) -> Result<f64> {
    check_dims(d, plan)?;
    let t = plan.matrix();
    let s = transport_cost_matrix(d, t, &plan.row_sums(), &plan.col_sums());
    // The expansion can round to a tiny negative total.
    Ok((t * &s).sum().max(0.0))
}

/// `h(B^s) mu^s (x) 1 + 1 (x) h(B^t) mu^t - 2 B^s T B^t`.
///
/// With all-ones marginals and a doubly stochastic plan this is the SI
/// matrix. The derivative of [`gw_objective`] is twice this matrix; the
/// factor is absorbed by the step size.
pub fn gw_gradient(
    d: &DissimilarityPair,
    plan: &TransportPlan,
    mu_s: &Array1<f64>,
    mu_t: &Array1<f64>,
) -> Result<Array2<f64>> {
    let n = check_dims(d, plan)?;
    for mu in [mu_s, mu_t] {
        if mu.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mu.len(),
            });
        }
    }
    Ok(transport_cost_matrix(d, plan.matrix(), mu_s, mu_t))
}

/// Result of a Sinkhorn projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub plan: TransportPlan,
    /// Achieved `max(|T 1 - 1|, |T' 1 - 1|)`.
    pub marginal_error: f64,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out before reaching `tol`.
    pub converged: bool,
}

fn check_support(m: &Array2<f64>) -> Result<()> {
    for (i, row) in m.outer_iter().enumerate() {
        if !row.iter().any(|&v| v > 0.0) {
            return Err(Error::ZeroMarginal {
                axis: "row",
                index: i,
            });
        }
    }
    for (j, col) in m.axis_iter(Axis(1)).enumerate() {
        if !col.iter().any(|&v| v > 0.0) {
            return Err(Error::ZeroMarginal {
                axis: "column",
                index: j,
            });
        }
    }
    Ok(())
}

/// Scales `m` to `Diag(u) m Diag(v)` with unit row and column sums by
/// alternating row and column normalisation, until the marginal error is at
/// most `tol` (after at least one sweep) or `max_sweeps` runs out.
pub fn sinkhorn_project(m: &Array2<f64>, tol: f64, max_sweeps: usize) -> Result<Projection> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "projection tolerance {tol} must be positive"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    if m.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter(
            "projection input has negative entries".into(),
        ));
    }
    check_support(m)?;

    let mut y = m.clone();
    let mut err = marginal_error(&y);
    let mut sweeps = 0;
    while (err > tol || sweeps == 0) && sweeps < max_sweeps {
        for mut row in y.outer_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let cols = y.sum_axis(Axis(0));
        for mut row in y.outer_iter_mut() {
            row /= &cols;
        }
        sweeps += 1;
        err = marginal_error(&y);
        if !err.is_finite() {
            return Err(Error::NonFinite("Sinkhorn iterate"));
        }
    }
    Ok(Projection {
        plan: TransportPlan(y),
        marginal_error: err,
        sweeps,
        converged: err <= tol,
    })
}

/// One KL mirror-descent step: `Proj(T * exp(-eta * grad))`.
///
/// Each row's exponent is shifted by its maximum over the plan's support
/// before exponentiation. Row factors like this shift, and the constant
/// `e^{-1}` of the textbook update, are removed by the projection.
pub fn mirror_step(
    plan: &TransportPlan,
    grad: &Array2<f64>,
    eta: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<Projection> {
    if grad.dim() != plan.0.dim() {
        return Err(Error::DimensionMismatch {
            expected: plan.n(),
            found: grad.nrows(),
        });
    }
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size {eta} must be finite and non-negative"
        )));
    }
    let mut y = plan.0.clone();
    for (mut row, g_row) in y.outer_iter_mut().zip(grad.outer_iter()) {
        let shift = row
            .iter()
            .zip(g_row.iter())
            .filter(|(&t, _)| t > 0.0)
            .map(|(_, &g)| -eta * g)
            .fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        for (t, &g) in row.iter_mut().zip(g_row.iter()) {
            if *t > 0.0 {
                *t *= (-eta * g - shift).exp();
            }
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mirror-step exponent"));
    }
    if let Err(Error::ZeroMarginal { axis, index }) = check_support(&y) {
        return Err(Error::StepUnderflow { axis, index });
    }
    sinkhorn_project(&y, tol, max_sweeps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{DissimilarityPair, WaveletParams};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weighted_path_pair() -> DissimilarityPair {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        DissimilarityPair::from_graphs(&g, &g, &WaveletParams::new(0.5, 1, 1.0).unwrap()).unwrap()
    }

    fn quadruple_loop(d: &DissimilarityPair, t: &Array2<f64>) -> f64 {
        let n = t.nrows();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let diff = d.b_s[[i, j]] - d.b_t[[a, b]];
                        total += diff * diff * t[[i, a]] * t[[j, b]];
                    }
                }
            }
        }
        total
    }

    fn random_pair(n: usize, rng: &mut ChaCha8Rng) -> DissimilarityPair {
        let sym = |rng: &mut ChaCha8Rng| {
            let mut m = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.gen_range(0.1..2.0);
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
            m
        };
        DissimilarityPair {
            b_s: sym(rng),
            b_t: sym(rng),
            psi_bar: 2.0,
        }
    }

    #[test]
    fn marginal_examples() {
        let p3 = Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            marginals(&p3, MarginalMode::Weights).unwrap(),
            array![0.25, 0.5, 0.25]
        );
        assert_eq!(
            marginals(&p3, MarginalMode::Ones).unwrap(),
            array![1.0, 1.0, 1.0]
        );
        let isolated = Graph::unweighted(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            marginals(&isolated, MarginalMode::Weights),
            Err(Error::IsolatedNode(2))
        ));
    }

    #[test]
    fn objective_vanishes_on_automorphisms() {
        let d = weighted_path_pair();
        let id = TransportPlan::from_permutation(&Permutation::identity(3));
        assert!(gw_objective(&d, &id).unwrap().abs() < 1e-12);

        let star = Graph::unweighted(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let d = DissimilarityPair::from_graphs(&star, &star, &WaveletParams::default()).unwrap();
        let swap = Permutation::new(vec![0, 3, 1, 2]).unwrap();
        let obj = gw_objective(&d, &TransportPlan::from_permutation(&swap)).unwrap();
        assert!(obj.abs() < 1e-12);
    }

    #[test]
    fn objective_matches_quadruple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let d = random_pair(5, &mut rng);
            let m = Array2::from_shape_fn((5, 5), |_| rng.gen_range(0.01..1.0));
            let plan = TransportPlan::new(m).unwrap();
            let fast = gw_objective(&d, &plan).unwrap();
            let slow = quadruple_loop(&d, plan.matrix());
            assert!((fast - slow).abs() <= 1e-9 * slow.abs());
        }
    }

    #[test]
    fn gradient_example_and_finite_differences() {
        let d = weighted_path_pair();
        let id = TransportPlan::from_permutation(&Permutation::identity(3));
        let ones = Array1::ones(3);
        let g = gw_gradient(&d, &id, &ones, &ones).unwrap();
        assert!((g[[0, 2]] - 8.25).abs() < 1e-12);
        assert!(g[[0, 0]].abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random_pair(4, &mut rng);
        let m = Array2::from_shape_fn((4, 4), |_| rng.gen_range(0.05..1.0));
        let plan = sinkhorn_project(&m, 1e-14, 10_000).unwrap().plan;
        let g = gw_gradient(&d, &plan, &Array1::ones(4), &Array1::ones(4)).unwrap();
        let eps = 1e-6;
        for i in 0..4 {
            for j in 0..4 {
                let mut up = plan.matrix().clone();
                up[[i, j]] += eps;
                let mut down = plan.matrix().clone();
                down[[i, j]] -= eps;
                let fd = (quadruple_loop(&d, &up) - quadruple_loop(&d, &down)) / (2.0 * eps);
                assert!((fd - 2.0 * g[[i, j]]).abs() < 1e-5, "{fd} vs {}", g[[i, j]]);
            }
        }
    }

    #[test]
    fn gradient_rejects_bad_marginals() {
        let d = weighted_path_pair();
        let plan = TransportPlan::uniform(3);
        assert!(gw_gradient(&d, &plan, &Array1::ones(2), &Array1::ones(3)).is_err());
        assert!(gw_objective(&d, &TransportPlan::uniform(4)).is_err());
    }

    #[test]
    fn sinkhorn_examples() {
        let p = sinkhorn_project(&array![[2.0, 0.0], [0.0, 3.0]], 1e-12, 10).unwrap();
        assert_eq!(p.plan.matrix(), &Array2::<f64>::eye(2));
        let p = sinkhorn_project(&Array2::ones((2, 2)), 1e-12, 10).unwrap();
        assert_eq!(p.plan.matrix(), &array![[0.5, 0.5], [0.5, 0.5]]);
        let perm = Permutation::new(vec![2, 0, 1]).unwrap().to_matrix();
        let p = sinkhorn_project(&perm, 1e-12, 10).unwrap();
        assert_eq!(p.plan.matrix(), &perm);
        assert!(p.converged);
    }

    #[test]
    fn sinkhorn_errors_and_flags() {
        assert!(matches!(
            sinkhorn_project(&array![[1.0, 0.0], [0.0, 0.0]], 1e-8, 10),
            Err(Error::ZeroMarginal {
                axis: "row",
                index: 1
            })
        ));
        assert!(matches!(
            sinkhorn_project(&array![[1.0, 0.0], [1.0, 0.0]], 1e-8, 10),
            Err(Error::ZeroMarginal {
                axis: "column",
                index: 1
            })
        ));
        // Support with no perfect matching cannot be scaled exactly.
        let m = array![[1.0, 1.0], [1.0, 0.0]];
        let p = sinkhorn_project(&m, 1e-12, 20).unwrap();
        assert!(!p.converged);
        assert_eq!(p.sweeps, 20);
        assert!(p.marginal_error > 1e-12);
    }

    #[test]
    fn mirror_step_properties() {
        let star = Graph::unweighted(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]).unwrap();
        let d = DissimilarityPair::from_graphs(&star, &star, &WaveletParams::default()).unwrap();
        let truth = TransportPlan::from_permutation(&Permutation::identity(5));
        let ones = Array1::ones(5);
        let g = gw_gradient(&d, &truth, &ones, &ones).unwrap();
        let eta = StepSchedule::default().resolve(&g);
        let next = mirror_step(&truth, &g, eta, 1e-8, 500).unwrap();
        assert!(next.plan.max_abs_diff(&truth) <= 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = Array2::from_shape_fn((5, 5), |_| rng.gen_range(0.1..1.0));
        m[[0, 3]] = 0.0;
        m[[4, 1]] = 0.0;
        let plan = TransportPlan::new(m.clone()).unwrap();
        let g = gw_gradient(&d, &plan, &ones, &ones).unwrap();
        let still = mirror_step(&plan, &g, 0.0, 1e-10, 500).unwrap();
        let direct = sinkhorn_project(&m, 1e-10, 500).unwrap();
        assert!(still.plan.max_abs_diff(&direct.plan) < 1e-12);

        let moved = mirror_step(&plan, &g, 2.0, 1e-10, 500).unwrap();
        assert_eq!(moved.plan.get(0, 3), 0.0);
        assert_eq!(moved.plan.get(4, 1), 0.0);
    }

    #[test]
    fn auto_step_scales_first_gradient() {
        let g = array![[1.0, -4.0], [2.0, 0.5]];
        assert_eq!(StepSchedule::AutoScaled { target: 30.0 }.resolve(&g), 7.5);
        assert_eq!(StepSchedule::Fixed(0.1).resolve(&g), 0.1);
        assert!(StepSchedule::Fixed(0.0).validate().is_err());
    }
}
