//! End-to-end matching: build the dissimilarity matrices once, run KL mirror
//! descent on the transport plan, then read a correspondence off the plan.

use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

use crate::diffusion::{DissimilarityPair, WaveletParams};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, Permutation};
use crate::transport::{self, MarginalMode, StepSchedule, TransportPlan};

pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_STOP_TOL: f64 = 1e-7;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

/// Starting point of the solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitStrategy {
    /// `(1/V) * ones`.
    #[default]
    Uniform,
    /// Row softmax of `-|d_i - d_i'| / temperature`, then projected.
    DegreeSoftmax { temperature: f64 },
    /// Dense matrix read from a file, validated and projected.
    File(PathBuf),
    /// An in-memory plan, validated and projected.
    Plan(TransportPlan),
}

impl InitStrategy {
    /// Short description used in reports.
    pub fn describe(&self) -> String {
        match self {
            InitStrategy::Uniform => "uniform".into(),
            InitStrategy::DegreeSoftmax { temperature } => format!("degree:{temperature}"),
            InitStrategy::File(p) => format!("file:{}", p.display()),
            InitStrategy::Plan(_) => "plan".into(),
        }
    }
}

/// How a plan becomes a correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    /// Per-row argmax, lowest index on ties. May map two sources to one target.
    #[default]
    RowArgmax,
    /// Repeatedly take the largest remaining entry and retire its row and
    /// column. Always injective.
    GreedyBijection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub wavelet: WaveletParams,
    /// Maximum number of mirror-descent iterations.
    pub iters: usize,
    pub step: StepSchedule,
    pub sinkhorn_tol: f64,
    pub sinkhorn_sweeps: usize,
    /// Stop once the largest entry change of a step falls below this.
    pub stop_tol: f64,
    pub init: InitStrategy,
    pub extraction: Extraction,
    pub marginal_mode: MarginalMode,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            wavelet: WaveletParams::default(),
            iters: DEFAULT_ITERATIONS,
            step: StepSchedule::default(),
            sinkhorn_tol: transport::DEFAULT_SINKHORN_TOL,
            sinkhorn_sweeps: transport::DEFAULT_SINKHORN_SWEEPS,
            stop_tol: DEFAULT_STOP_TOL,
            init: InitStrategy::Uniform,
            extraction: Extraction::RowArgmax,
            marginal_mode: MarginalMode::Ones,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        self.wavelet.validate()?;
        self.step.validate()?;
        if self.iters < 1 {
            return Err(Error::InvalidParameter("iters must be >= 1".into()));
        }
        for (name, v) in [
            ("sinkhorn_tol", self.sinkhorn_tol),
            ("stop_tol", self.stop_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.sinkhorn_sweeps < 1 {
            return Err(Error::InvalidParameter(
                "sinkhorn_sweeps must be >= 1".into(),
            ));
        }
        if let InitStrategy::DegreeSoftmax { temperature } = self.init {
            if !(temperature.is_finite() && temperature > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "temperature {temperature} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub source: usize,
    pub target: usize,
    pub source_label: String,
    pub target_label: String,
    /// Plan entry `T[source][target]`.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub wavelet_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// One pair per non-dummy source node.
    pub correspondence: Vec<MatchedPair>,
    pub plan: TransportPlan,
    pub initial_objective: f64,
    /// Objective after each iteration.
    pub objective_trace: Vec<f64>,
    /// Largest entry change of each iteration.
    pub displacement_trace: Vec<f64>,
    pub iterations_run: usize,
    /// Marginal error of the final projection.
    pub marginal_error: f64,
    /// Every projection reached its tolerance.
    pub projections_converged: bool,
    pub eta: f64,
    /// Dummy nodes added to the smaller graph.
    pub dummies_added: usize,
    /// Cost matrices of the (padded) pair.
    pub dissimilarity: DissimilarityPair,
    pub timings: Timings,
}

impl MatchResult {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }

    /// `(source, target)` index pairs.
    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        self.correspondence
            .iter()
            .map(|p| (p.source, p.target))
            .collect()
    }

    /// `(source_label, target_label)` pairs.
    pub fn label_pairs(&self) -> Vec<(String, String)> {
        self.correspondence
            .iter()
            .map(|p| (p.source_label.clone(), p.target_label.clone()))
            .collect()
    }
}

/// What the solver reports after each mirror step.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub iteration: usize,
    pub before: &'a TransportPlan,
    pub after: &'a TransportPlan,
    pub gradient: &'a Array2<f64>,
    pub objective: f64,
    pub displacement: f64,
}

/// Parses a dense plan: one whitespace-separated row per line, `#` comments.
pub fn parse_plan(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::parse(lineno + 1, format!("`{tok}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

/// Initial plan with the default projection settings.
pub fn init_plan(strategy: &InitStrategy, g_s: &Graph, g_t: &Graph) -> Result<TransportPlan> {
    init_plan_with(
        strategy,
        g_s,
        g_t,
        transport::DEFAULT_SINKHORN_TOL,
        transport::DEFAULT_SINKHORN_SWEEPS,
    )
}

fn project(m: Array2<f64>, tol: f64, sweeps: usize) -> Result<TransportPlan> {
    let m = TransportPlan::new(m)?.into_inner();
    Ok(transport::sinkhorn_project(&m, tol, sweeps)?.plan)
}

fn init_plan_with(
    strategy: &InitStrategy,
    g_s: &Graph,
    g_t: &Graph,
    tol: f64,
    sweeps: usize,
) -> Result<TransportPlan> {
    let n = g_s.n();
    if g_t.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g_t.n(),
        });
    }
    let checked = |m: Array2<f64>| -> Result<TransportPlan> {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        project(m, tol, sweeps)
    };
    match strategy {
        InitStrategy::Uniform => Ok(TransportPlan::uniform(n)),
        InitStrategy::DegreeSoftmax { temperature } => {
            let (ds, dt) = (graph::degrees(g_s), graph::degrees(g_t));
            let mut m =
                Array2::from_shape_fn((n, n), |(i, j)| -(ds[i] - dt[j]).abs() / temperature);
            for mut row in m.outer_iter_mut() {
                let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                row.mapv_inplace(|v| (v - max).exp());
                let s = row.sum();
                row /= s;
            }
            checked(m)
        }
        InitStrategy::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            checked(parse_plan(&text)?)
        }
        InitStrategy::Plan(plan) => checked(plan.matrix().clone()),
    }
}

/// `alpha * truth + (1 - alpha) * uniform`, projected. Used to start near a
/// known answer.
pub fn blended_truth_plan(truth: &Permutation, alpha: f64) -> Result<TransportPlan> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "blend weight {alpha} outside [0, 1]"
        )));
    }
    let n = truth.len();
    let m = truth.to_matrix() * alpha + TransportPlan::uniform(n).into_inner() * (1.0 - alpha);
    project(
        m,
        transport::DEFAULT_SINKHORN_TOL,
        transport::DEFAULT_SINKHORN_SWEEPS,
    )
}

/// Reads `(row, column)` pairs off a plan.
pub fn extract_correspondence(plan: &TransportPlan, mode: Extraction) -> Vec<(usize, usize)> {
    let t = plan.matrix();
    let n = plan.n();
    match mode {
        Extraction::RowArgmax => (0..n)
            .map(|i| {
                let mut best = 0;
                for j in 1..n {
                    if t[[i, j]] > t[[i, best]] {
                        best = j;
                    }
                }
                (i, best)
            })
            .collect(),
        Extraction::GreedyBijection => {
            let mut entries: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
            entries.sort_by(|&(a, b), &(c, d)| {
                t[[c, d]].total_cmp(&t[[a, b]]).then((a, b).cmp(&(c, d)))
            });
            let mut row_used = vec![false; n];
            let mut col_used = vec![false; n];
            let mut out = Vec::with_capacity(n);
            for (i, j) in entries {
                if !row_used[i] && !col_used[j] {
                    row_used[i] = true;
                    col_used[j] = true;
                    out.push((i, j));
                    if out.len() == n {
                        break;
                    }
                }
            }
            out.sort_unstable();
            out
        }
    }
}

/// Pads the smaller graph with isolated dummies.
pub fn equalize(g_s: &Graph, g_t: &Graph) -> Result<(Graph, Graph)> {
    let n = g_s.n().max(g_t.n());
    Ok((
        graph::pad_with_dummies(g_s, n)?,
        graph::pad_with_dummies(g_t, n)?,
    ))
}

/// Runs the matcher with default settings for everything except `cfg`.
pub fn sigma_match(cfg: &MatchConfig, g_s: &Graph, g_t: &Graph) -> Result<MatchResult> {
    sigma_match_observed(cfg, g_s, g_t, |_| {})
}

/// Like [`sigma_match`], calling `observer` after every mirror step.
pub fn sigma_match_observed<F>(
    cfg: &MatchConfig,
    g_s: &Graph,
    g_t: &Graph,
    mut observer: F,
) -> Result<MatchResult>
where
    F: FnMut(&StepEvent<'_>),
{
    cfg.validate()?;
    if g_s.n() == 0 && g_t.n() == 0 {
        return Err(Error::InvalidParameter("both graphs are empty".into()));
    }
    let dummies_added = g_s.n().abs_diff(g_t.n());
    let (g_s, g_t) = equalize(g_s, g_t)?;

    let started = Instant::now();
    let d = DissimilarityPair::from_graphs(&g_s, &g_t, &cfg.wavelet)?;
    let wavelet_ms = started.elapsed().as_secs_f64() * 1e3;

    let solve_started = Instant::now();
    let mu = (
        transport::marginals(&g_s, cfg.marginal_mode)?,
        transport::marginals(&g_t, cfg.marginal_mode)?,
    );
    let mut plan = init_plan_with(&cfg.init, &g_s, &g_t, cfg.sinkhorn_tol, cfg.sinkhorn_sweeps)?;
    let initial_objective = transport::gw_objective(&d, &plan)?;
    if !initial_objective.is_finite() {
        return Err(Error::NonFinite("objective"));
    }

    let mut grad = transport::gw_gradient(&d, &plan, &mu.0, &mu.1)?;
    let eta = cfg.step.resolve(&grad);
    let mut objective_trace = Vec::with_capacity(cfg.iters);
    let mut displacement_trace = Vec::with_capacity(cfg.iters);
    let mut marginal_error = plan.marginal_error();
    let mut projections_converged = true;

    for iteration in 0..cfg.iters {
        let step =
            transport::mirror_step(&plan, &grad, eta, cfg.sinkhorn_tol, cfg.sinkhorn_sweeps)?;
        projections_converged &= step.converged;
        marginal_error = step.marginal_error;
        let next = step.plan;
        let objective = transport::gw_objective(&d, &next)?;
        if !objective.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        let displacement = next.max_abs_diff(&plan);
        objective_trace.push(objective);
        displacement_trace.push(displacement);
        observer(&StepEvent {
            iteration,
            before: &plan,
            after: &next,
            gradient: &grad,
            objective,
            displacement,
        });
        plan = next;
        if displacement < cfg.stop_tol {
            break;
        }
        grad = transport::gw_gradient(&d, &plan, &mu.0, &mu.1)?;
    }
    let solve_ms = solve_started.elapsed().as_secs_f64() * 1e3;

    let correspondence = extract_correspondence(&plan, cfg.extraction)
        .into_iter()
        .filter(|&(i, _)| !g_s.is_dummy(i))
        .map(|(i, j)| MatchedPair {
            source: i,
            target: j,
            source_label: g_s.label(i).to_string(),
            target_label: g_t.label(j).to_string(),
            score: plan.get(i, j),
        })
        .collect();

    Ok(MatchResult {
        correspondence,
        iterations_run: objective_trace.len(),
        plan,
        initial_objective,
        objective_trace,
        displacement_trace,
        marginal_error,
        projections_converged,
        eta,
        dummies_added,
        dissimilarity: d,
        timings: Timings {
            wavelet_ms,
            solve_ms,
        },
    })
}
