//! OU parametrizations `(A, D)`, the stationary covariance they induce,
//! m-faithfulness and the seeded model sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{marginal_independence_pattern, DirectedGraph, GraphError};
use crate::linalg::{is_positive_definite, solve_lyapunov_forward, LinalgError, Matrix, SymmetricMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("drift matrix is not Hurwitz stable")]
    NotHurwitz,
    #[error("dimension mismatch: graph has {expected} nodes, matrix is {got}x{got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("drift entry A[{row}][{col}] = {value} has no edge {col}->{row} in the graph")]
    SupportViolation { row: usize, col: usize, value: f64 },
    #[error("diffusion entry for node {node} must be positive, got {value}")]
    NonPositiveDiffusion { node: usize, value: f64 },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "resample budget of {budget} exhausted ({hurwitz_rejections} non-Hurwitz draws, \
         {faithfulness_rejections} unfaithful covariances)"
    )]
    ResampleBudgetExhausted {
        budget: u64,
        hurwitz_rejections: u64,
        faithfulness_rejections: u64,
    },
}

/// A symmetric positive definite covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymmetricMatrix", into = "SymmetricMatrix")]
pub struct CovarianceMatrix {
    sigma: SymmetricMatrix,
}

impl CovarianceMatrix {
    pub fn new(sigma: SymmetricMatrix) -> Result<Self, ModelError> {
        if !is_positive_definite(&sigma) {
            return Err(ModelError::NotPositiveDefinite);
        }
        Ok(Self { sigma })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        Self::new(SymmetricMatrix::from_matrix(&Matrix::from_rows(rows)?, 0.0)?)
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma.get(i, j)
    }

    pub fn sigma(&self) -> &SymmetricMatrix {
        &self.sigma
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.get(i, j) / (self.get(i, i) * self.get(j, j)).sqrt()
    }

    /// Correlation matrix with the same sign structure.
    pub fn correlation_matrix(&self) -> Self {
        let n = self.dim();
        let mut r = self.sigma.clone();
        for i in 0..n {
            for j in i..n {
                r.set(i, j, if i == j { 1.0 } else { self.correlation(i, j) });
            }
        }
        Self { sigma: r }
    }

    /// `(i, j)` of the result is `(order[i], order[j])` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            sigma: self.sigma.permuted(order),
        }
    }
}

impl TryFrom<SymmetricMatrix> for CovarianceMatrix {
    type Error = ModelError;

    fn try_from(sigma: SymmetricMatrix) -> Result<Self, Self::Error> {
        Self::new(sigma)
    }
}

impl From<CovarianceMatrix> for SymmetricMatrix {
    fn from(c: CovarianceMatrix) -> Self {
        c.sigma
    }
}

/// Drift `A` supported on the graph's edges and a positive diagonal diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct OUModel {
    graph: DirectedGraph,
    drift: Matrix,
    diffusion: Vec<f64>,
}

impl OUModel {
    /// Validates `supp(A) ⊆ E` and `D > 0`.
    pub fn new(graph: DirectedGraph, drift: Matrix, diffusion: Vec<f64>) -> Result<Self, ModelError> {
        let n = graph.len();
        if !drift.is_square() || drift.rows() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: drift.rows(),
            });
        }
        if diffusion.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: diffusion.len(),
            });
        }
        for row in 0..n {
            for col in 0..n {
                let value = drift.get(row, col);
                if value != 0.0 && !graph.has_edge(col, row) {
                    return Err(ModelError::SupportViolation { row, col, value });
                }
            }
        }
        if let Some((node, &value)) = diffusion.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
            return Err(ModelError::NonPositiveDiffusion { node, value });
        }
        Ok(Self {
            graph,
            drift,
            diffusion,
        })
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn drift(&self) -> &Matrix {
        &self.drift
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    /// Drift weight on edge `source → target`.
    pub fn edge_weight(&self, source: usize, target: usize) -> f64 {
        self.drift.get(target, source)
    }

    /// Whether every graph edge carries a nonzero weight.
    pub fn has_full_support(&self) -> bool {
        self.graph.edge_indices().all(|(s, t)| self.drift.get(t, s) != 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(
            self.graph.clone(),
            self.drift.scaled(factor),
            self.diffusion.iter().map(|v| v * factor).collect(),
        )
    }
}

/// Hurwitz test through the Lyapunov equation: `A` is stable iff
/// `AX + XAᵀ = −I` has a positive definite solution.
pub fn is_hurwitz(a: &Matrix) -> bool {
    if !a.is_square() {
        return false;
    }
    match solve_lyapunov_forward(a, &SymmetricMatrix::identity(a.rows())) {
        Ok(x) => is_positive_definite(&x),
        Err(_) => false,
    }
}

pub fn stationary_covariance(m: &OUModel) -> Result<CovarianceMatrix, ModelError> {
    if !is_hurwitz(m.drift()) {
        return Err(ModelError::NotHurwitz);
    }
    let sigma = solve_lyapunov_forward(m.drift(), &SymmetricMatrix::diagonal(m.diffusion()))?;
    CovarianceMatrix::new(sigma).map_err(|_| ModelError::NotHurwitz)
}

/// First pair whose covariance disagrees with the graph's zero pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessViolation {
    pub pair: (String, String),
    pub covariance: f64,
    pub threshold: f64,
    /// True when the graph demands a zero that is missing; false when a
    /// required nonzero vanished.
    pub zero_required: bool,
}

impl std::fmt::Display for FaithfulnessViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b) = &self.pair;
        if self.zero_required {
            write!(
                f,
                "pair ({a}, {b}) shares no ancestor so its covariance must vanish, but |σ| = {:e} > {:e}",
                self.covariance.abs(),
                self.threshold
            )
        } else {
            write!(
                f,
                "pair ({a}, {b}) shares an ancestor so its covariance must be nonzero, but |σ| = {:e} ≤ {:e}",
                self.covariance.abs(),
                self.threshold
            )
        }
    }
}

pub fn faithfulness_violation(
    sigma: &CovarianceMatrix,
    g: &DirectedGraph,
    zero_tol: f64,
) -> Result<Option<FaithfulnessViolation>, ModelError> {
    if sigma.dim() != g.len() {
        return Err(ModelError::DimensionMismatch {
            expected: g.len(),
            got: sigma.dim(),
        });
    }
    let pattern = marginal_independence_pattern(g);
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let s = sigma.get(i, j);
            let threshold = zero_tol * (sigma.get(i, i) * sigma.get(j, j)).sqrt();
            let is_zero = s.abs() <= threshold;
            let zero_required = pattern.requires_zero(i, j);
            if is_zero != zero_required {
                return Ok(Some(FaithfulnessViolation {
                    pair: (g.name(i).to_string(), g.name(j).to_string()),
                    covariance: s,
                    threshold,
                    zero_required,
                }));
            }
        }
    }
    Ok(None)
}

/// PD is guaranteed by [`CovarianceMatrix`]; this checks the zero pattern.
pub fn check_m_faithful(sigma: &CovarianceMatrix, g: &DirectedGraph, zero_tol: f64) -> Result<bool, ModelError> {
    Ok(faithfulness_violation(sigma, g, zero_tol)?.is_none())
}

pub const DEFAULT_DRIFT_RANGE: (f64, f64) = (-10.0, 10.0);
pub const DEFAULT_DIFFUSION_RANGE: (f64, f64) = (0.0, 10.0);
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Non-Hurwitz redraws allowed per requested sample.
pub const RESAMPLES_PER_SAMPLE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub drift_range: (f64, f64),
    pub diffusion_range: (f64, f64),
    pub seed: u64,
    /// Total non-Hurwitz redraws allowed over one sampling run.
    pub max_resamples: u64,
    pub zero_tol: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            drift_range: DEFAULT_DRIFT_RANGE,
            diffusion_range: DEFAULT_DIFFUSION_RANGE,
            seed: 0,
            max_resamples: RESAMPLES_PER_SAMPLE,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Scales the resample budget for a run of `n` samples.
    pub fn for_samples(mut self, n: u64) -> Self {
        self.max_resamples = RESAMPLES_PER_SAMPLE.saturating_mul(n.max(1));
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (lo, hi) = self.drift_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ModelError::InvalidConfig(format!("drift range ({lo}, {hi}) is empty")));
        }
        let (lo, hi) = self.diffusion_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "diffusion range ({lo}, {hi}) must be a nonempty interval of positive reals"
            )));
        }
        if !(self.zero_tol > 0.0 && self.zero_tol.is_finite()) {
            return Err(ModelError::InvalidConfig(format!(
                "zero tolerance {} must be positive",
                self.zero_tol
            )));
        }
        if self.max_resamples == 0 {
            return Err(ModelError::InvalidConfig("max_resamples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Stable 16-byte digest of a graph's node names, flags and edges.
pub fn graph_fingerprint(g: &DirectedGraph) -> [u8; 16] {
    let mut h = Sha256::new();
    for n in g.nodes() {
        h.update(n.name.as_bytes());
        h.update([0, u8::from(n.latent)]);
    }
    for (s, t) in g.edge_indices() {
        h.update((s as u64).to_le_bytes());
        h.update((t as u64).to_le_bytes());
    }
    let digest = h.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    out
}

/// One sample index's outcome: a Hurwitz model plus its covariance, which
/// may or may not be m-faithful.
#[derive(Debug, Clone)]
pub struct Draw {
    pub index: u64,
    pub model: OUModel,
    pub sigma: CovarianceMatrix,
    pub hurwitz_rejections: u64,
    pub violation: Option<FaithfulnessViolation>,
}

impl Draw {
    pub fn is_faithful(&self) -> bool {
        self.violation.is_none()
    }
}

/// Counter-keyed sampler: the draw at `index` depends only on the seed, the
/// graph and the index, so workers can claim indices in any order.
#[derive(Debug, Clone)]
pub struct Sampler {
    graph: DirectedGraph,
    cfg: SamplerConfig,
    fingerprint: [u8; 16],
    edges: Vec<(usize, usize)>,
}

impl Sampler {
    pub fn new(graph: &DirectedGraph, cfg: SamplerConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        graph.require_observed()?;
        Ok(Self {
            fingerprint: graph_fingerprint(graph),
            edges: graph.edge_indices().collect(),
            graph: graph.clone(),
            cfg,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.cfg.seed.to_le_bytes());
        key[8..24].copy_from_slice(&self.fingerprint);
        key[24..].copy_from_slice(&index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    fn nonzero_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
        loop {
            let v = rng.gen_range(lo..hi);
            if v != 0.0 {
                return v;
            }
        }
    }

    /// Redraws `A` until it is Hurwitz, at most `budget` times.
    pub fn draw_with_budget(&self, index: u64, budget: u64) -> Result<Draw, ModelError> {
        let n = self.graph.len();
        let mut rng = self.rng(index);
        let mut rejections = 0u64;
        let drift = loop {
            let mut a = Matrix::zeros(n, n);
            for &(s, t) in &self.edges {
                a.set(t, s, Self::nonzero_uniform(&mut rng, self.cfg.drift_range));
            }
            if is_hurwitz(&a) {
                break a;
            }
            rejections += 1;
            if rejections >= budget {
                return Err(ModelError::ResampleBudgetExhausted {
                    budget,
                    hurwitz_rejections: rejections,
                    faithfulness_rejections: 0,
                });
            }
        };
        let diffusion: Vec<f64> = (0..n)
            .map(|_| Self::nonzero_uniform(&mut rng, self.cfg.diffusion_range))
            .collect();
        let model = OUModel::new(self.graph.clone(), drift, diffusion)?;
        let sigma = stationary_covariance(&model)?;
        let violation = faithfulness_violation(&sigma, &self.graph, self.cfg.zero_tol)?;
        Ok(Draw {
            index,
            model,
            sigma,
            hurwitz_rejections: rejections,
            violation,
        })
    }

    pub fn draw(&self, index: u64) -> Result<Draw, ModelError> {
        self.draw_with_budget(index, self.cfg.max_resamples)
    }
}

/// Draws until an m-faithful model appears, spending at most
/// `cfg.max_resamples` rejections of either kind.
pub fn sample_model(g: &DirectedGraph, cfg: &SamplerConfig) -> Result<(OUModel, CovarianceMatrix), ModelError> {
    let d = sample_many(g, cfg, 1)?.pop().expect("one draw requested");
    Ok((d.model, d.sigma))
}

/// The first `n` m-faithful draws in index order, sharing one budget of
/// `cfg.max_resamples` rejections of either kind.
pub fn sample_many(g: &DirectedGraph, cfg: &SamplerConfig, n: usize) -> Result<Vec<Draw>, ModelError> {
    let sampler = Sampler::new(g, cfg.clone())?;
    let budget = cfg.max_resamples;
    let (mut hurwitz, mut faithfulness) = (0u64, 0u64);
    let exhausted = |hurwitz, faithfulness| ModelError::ResampleBudgetExhausted {
        budget,
        hurwitz_rejections: hurwitz,
        faithfulness_rejections: faithfulness,
    };
    let mut out = Vec::with_capacity(n);
    let mut index = 0u64;
    while out.len() < n {
        let spent = hurwitz + faithfulness;
        if spent >= budget {
            return Err(exhausted(hurwitz, faithfulness));
        }
        match sampler.draw_with_budget(index, budget - spent) {
            Ok(d) => {
                hurwitz += d.hurwitz_rejections;
                if d.is_faithful() {
                    out.push(d);
                } else {
                    faithfulness += 1;
                }
            }
            Err(ModelError::ResampleBudgetExhausted { hurwitz_rejections, .. }) => {
                return Err(exhausted(hurwitz + hurwitz_rejections, faithfulness))
            }
            Err(e) => return Err(e),
        }
        index += 1;
    }
    Ok(out)
}
