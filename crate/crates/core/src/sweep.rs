//! Noise sweeps: match a graph against permuted, noised copies of itself
//! over a grid of noise levels and seeds.
//!
//! Configs are flat `key = value` files. Lists are comma separated.
//!
//! ```text
//! # graph: either `source = PATH` or the generator keys
//! nodes = 100
//! edge_prob = 0.05
//! graph_seed = 7
//! q = 0, 0.05
//! seeds = 1, 2, 3
//! init = truth:0.9
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::diffusion::WaveletParams;
use crate::error::{Error, Result};
use crate::graph::{self, Graph, NoiseSpec, Permutation};
use crate::matcher::{self, Extraction, InitStrategy, MatchConfig};
use crate::report::float_token;
use crate::transport::{MarginalMode, StepSchedule};

/// Starting point of each cell's solve.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepInit {
    Strategy(InitStrategy),
    /// `alpha * truth + (1 - alpha) * uniform`, using the cell's own truth.
    NearTruth(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Random {
        nodes: usize,
        edge_prob: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub graph: GraphSource,
    pub q: Vec<f64>,
    pub seeds: Vec<u64>,
    pub matcher: MatchConfig,
    pub init: SweepInit,
    /// Relabel the target by a seeded random permutation.
    pub permute: bool,
    /// Fill the runtime column. Off by default so output bytes are stable.
    pub record_timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub seed: u64,
    pub nc: f64,
    pub objective: f64,
    pub runtime_ms: Option<f64>,
}

const KEYS: &[&str] = &[
    "source",
    "nodes",
    "edge_prob",
    "graph_seed",
    "q",
    "seeds",
    "permute",
    "record_timings",
    "k",
    "t",
    "margin",
    "eta",
    "eta_auto_target",
    "iters",
    "sinkhorn_tol",
    "sinkhorn_sweeps",
    "stop_tol",
    "init",
    "extract",
    "marginals",
];

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| invalid(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(format!(
            "`{key}`: expected true or false, found `{v}`"
        ))),
    }
}

/// Parses an init token: `uniform`, `degree`, `degree:TEMP`, `file:PATH`.
pub fn parse_init(token: &str) -> Result<InitStrategy> {
    match token.split_once(':') {
        None if token == "uniform" => Ok(InitStrategy::Uniform),
        None if token == "degree" => Ok(InitStrategy::DegreeSoftmax {
            temperature: matcher::DEFAULT_TEMPERATURE,
        }),
        Some(("degree", temp)) => Ok(InitStrategy::DegreeSoftmax {
            temperature: parse_value("init", temp)?,
        }),
        Some(("file", path)) if !path.is_empty() => Ok(InitStrategy::File(PathBuf::from(path))),
        _ => Err(invalid(format!("unknown init `{token}`"))),
    }
}

pub fn parse_extraction(token: &str) -> Result<Extraction> {
    match token {
        "argmax" => Ok(Extraction::RowArgmax),
        "bijection" => Ok(Extraction::GreedyBijection),
        _ => Err(invalid(format!("unknown extraction `{token}`"))),
    }
}

pub fn parse_marginals(token: &str) -> Result<MarginalMode> {
    match token {
        "ones" => Ok(MarginalMode::Ones),
        "weights" => Ok(MarginalMode::Weights),
        _ => Err(invalid(format!("unknown marginal mode `{token}`"))),
    }
}

impl SweepConfig {
    /// Parses a config file. Relative `source` and `file:` paths resolve
    /// against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno + 1, "expected `key = value`"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::parse(lineno + 1, format!("unknown key `{key}`")));
            }
            if kv.insert(key, value.trim()).is_some() {
                return Err(Error::parse(lineno + 1, format!("duplicate key `{key}`")));
            }
        }
        let get = |k: &str| kv.get(k).copied();
        let required = |k: &str| get(k).ok_or_else(|| invalid(format!("missing key `{k}`")));

        let graph = match get("source") {
            Some(path) => {
                if ["nodes", "edge_prob", "graph_seed"]
                    .iter()
                    .any(|k| kv.contains_key(k))
                {
                    return Err(invalid("`source` cannot be combined with generator keys"));
                }
                GraphSource::File(base_dir.join(path))
            }
            None => GraphSource::Random {
                nodes: parse_value("nodes", required("nodes")?)?,
                edge_prob: parse_value("edge_prob", required("edge_prob")?)?,
                seed: get("graph_seed").map_or(Ok(0), |v| parse_value("graph_seed", v))?,
            },
        };

        let mut m = MatchConfig::default();
        let mut wavelet = WaveletParams::default();
        if let Some(v) = get("k") {
            wavelet.order = parse_value("k", v)?;
        }
        if let Some(v) = get("t") {
            wavelet.t = parse_value("t", v)?;
        }
        if let Some(v) = get("margin") {
            wavelet.margin = parse_value("margin", v)?;
        }
        m.wavelet = wavelet;
        m.step = match (get("eta"), get("eta_auto_target")) {
            (Some(_), Some(_)) => return Err(invalid("`eta` and `eta_auto_target` are exclusive")),
            (Some(v), None) => StepSchedule::Fixed(parse_value("eta", v)?),
            (None, Some(v)) => StepSchedule::AutoScaled {
                target: parse_value("eta_auto_target", v)?,
            },
            (None, None) => StepSchedule::default(),
        };
        if let Some(v) = get("iters") {
            m.iters = parse_value("iters", v)?;
        }
        if let Some(v) = get("sinkhorn_tol") {
            m.sinkhorn_tol = parse_value("sinkhorn_tol", v)?;
        }
        if let Some(v) = get("sinkhorn_sweeps") {
            m.sinkhorn_sweeps = parse_value("sinkhorn_sweeps", v)?;
        }
        if let Some(v) = get("stop_tol") {
            m.stop_tol = parse_value("stop_tol", v)?;
        }
        if let Some(v) = get("extract") {
            m.extraction = parse_extraction(v)?;
        }
        if let Some(v) = get("marginals") {
            m.marginal_mode = parse_marginals(v)?;
        }
        let init = match get("init") {
            None => SweepInit::Strategy(InitStrategy::Uniform),
            Some(v) => match v.split_once(':') {
                Some(("truth", alpha)) => SweepInit::NearTruth(parse_value("init", alpha)?),
                Some(("file", path)) => {
                    SweepInit::Strategy(InitStrategy::File(base_dir.join(path)))
                }
                _ => SweepInit::Strategy(parse_init(v)?),
            },
        };
        m.validate()?;

        let cfg = Self {
            graph,
            q: parse_list("q", required("q")?)?,
            seeds: parse_list("seeds", required("seeds")?)?,
            matcher: m,
            init,
            permute: get("permute").map_or(Ok(true), |v| parse_bool("permute", v))?,
            record_timings: get("record_timings")
                .map_or(Ok(false), |v| parse_bool("record_timings", v))?,
        };
        for &q in &cfg.q {
            NoiseSpec::new(q, 0)?;
        }
        if let SweepInit::NearTruth(alpha) = cfg.init {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(invalid(format!("blend weight {alpha} outside [0, 1]")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn base_graph(&self) -> Result<Graph> {
        match &self.graph {
            GraphSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                graph::parse_edge_list(&text)
            }
            GraphSource::Random {
                nodes,
                edge_prob,
                seed,
            } => graph::erdos_renyi(*nodes, *edge_prob, *seed),
        }
    }
}

/// Builds the target of one cell: noise with `seed`, then an optional
/// permutation drawn from the same seed. Returns the target and the truth.
pub fn perturbed_copy(g: &Graph, q: f64, seed: u64, permute: bool) -> Result<(Graph, Permutation)> {
    let noisy = graph::inject_noise(g, &NoiseSpec::new(q, seed)?)?;
    if permute {
        graph::permute(&noisy, &Permutation::random(g.n(), seed))
    } else {
        Ok((noisy, Permutation::identity(g.n())))
    }
}

fn run_cell(cfg: &SweepConfig, g: &Graph, q: f64, seed: u64) -> Result<SweepRow> {
    let started = Instant::now();
    let (target, truth) = perturbed_copy(g, q, seed, cfg.permute)?;
    let mut m = cfg.matcher.clone();
    m.init = match &cfg.init {
        SweepInit::Strategy(s) => s.clone(),
        SweepInit::NearTruth(alpha) => {
            InitStrategy::Plan(matcher::blended_truth_plan(&truth, *alpha)?)
        }
    };
    let result = matcher::sigma_match(&m, g, &target)?;
    let hits = result
        .correspondence
        .iter()
        .filter(|p| truth.apply(p.source) == p.target)
        .count();
    Ok(SweepRow {
        q,
        seed,
        nc: hits as f64 / g.n().max(1) as f64,
        objective: result.final_objective(),
        runtime_ms: cfg
            .record_timings
            .then(|| started.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs every `(q, seed)` cell, in parallel, and returns rows sorted by
/// `(q, seed)`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let g = cfg.base_graph()?;
    let cells: Vec<(f64, u64)> = cfg
        .q
        .iter()
        .flat_map(|&q| cfg.seeds.iter().map(move |&s| (q, s)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(q, seed)| run_cell(cfg, &g, q, seed))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.q.total_cmp(&b.q).then(a.seed.cmp(&b.seed)));
    Ok(rows)
}

/// `q,seed,nc,objective,runtime_ms` CSV.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("q,seed,nc,objective,runtime_ms\n");
    for r in rows {
        let runtime = r.runtime_ms.map(float_token).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.q,
            r.seed,
            float_token(r.nc),
            float_token(r.objective),
            runtime
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SweepConfig> {
        SweepConfig::parse(text, Path::new("."))
    }

    #[test]
    fn parses_generator_config() {
        let cfg = parse("nodes = 10\nedge_prob = 0.3\ngraph_seed = 4\nq = 0, 0.1\nseeds = 1,2\ninit = truth:0.9\nk = 2\n")
            .unwrap();
        assert_eq!(
            cfg.graph,
            GraphSource::Random {
                nodes: 10,
                edge_prob: 0.3,
                seed: 4
            }
        );
        assert_eq!(cfg.q, vec![0.0, 0.1]);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.init, SweepInit::NearTruth(0.9));
        assert_eq!(cfg.matcher.wavelet.order, 2);
        assert!(cfg.permute);
        assert!(!cfg.record_timings);
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        assert!(matches!(
            parse("nodes = 4\nedge_prob = 0.5\nq = 0\nseeds = 1\nfoo = 1\n"),
            Err(Error::Parse { line: 5, .. })
        ));
        assert!(parse("nodes = 4\nedge_prob = 0.5\nseeds = 1\n").is_err());
        assert!(parse(
            "nodes = 4\nedge_prob = 0.5\nq = 0\nseeds = 1\neta = 1\neta_auto_target = 3\n"
        )
        .is_err());
        assert!(parse("nodes = 4\nedge_prob = 0.5\nq = -1\nseeds = 1\n").is_err());
        assert!(parse("source = g.txt\nnodes = 4\nq = 0\nseeds = 1\n").is_err());
    }

    #[test]
    fn empty_q_list_gives_header_only() {
        let cfg = parse("nodes = 5\nedge_prob = 0.5\nq =\nseeds = 1, 2\n").unwrap();
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows.is_empty());
        assert_eq!(rows_to_csv(&rows), "q,seed,nc,objective,runtime_ms\n");
    }

    #[test]
    fn near_truth_self_match_recovers_everything() {
        let cfg = parse("nodes = 12\nedge_prob = 0.3\ngraph_seed = 3\nq = 0\nseeds = 1, 2, 3\ninit = truth:0.9\n").unwrap();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert_eq!(r.nc, 1.0, "{r:?}");
            assert!(r.runtime_ms.is_none());
        }
        assert_eq!(rows_to_csv(&rows), rows_to_csv(&run_sweep(&cfg).unwrap()));
    }

    #[test]
    fn init_tokens() {
        assert_eq!(parse_init("uniform").unwrap(), InitStrategy::Uniform);
        assert_eq!(
            parse_init("degree:0.5").unwrap(),
            InitStrategy::DegreeSoftmax { temperature: 0.5 }
        );
        assert_eq!(
            parse_init("file:p.txt").unwrap(),
            InitStrategy::File(PathBuf::from("p.txt"))
        );
        assert!(parse_init("bogus").is_err());
        assert!(parse_init("file:").is_err());
    }
}
