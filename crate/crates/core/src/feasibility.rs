//! Pointwise sign identifiability by linear feasibility.
//!
//! For a fixed Σ the stationarity condition `A′Σ + ΣA′ᵀ + D′ = 0` is linear in
//! the unknown drift `A′` (restricted to the graph's support) and diagonal
//! diffusion `D′`. Since `(A′, D′)` and `(aA′, aD′)` give the same Σ for any
//! `a > 0`, the open conditions `D′ > 0` and `±A′_e > 0` can be normalized to
//! `D′ ≥ 1` and `±A′_e ≥ 1`, which turns each sign class into a closed LP.
//!
//! `pointwise_classify` asks whether the positive and the negative sign
//! class are each reachable with full support on the graph's edges.
//! `m0_member` asks whether Σ is reachable with the target pinned to zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{marginal_independence_pattern, DirectedGraph, EdgeRef, GraphError};
use crate::linalg::{lyapunov_residual, lyapunov_scale, packed_len, Matrix, SymmetricMatrix};
use crate::lp::{find_feasible_point, Bound, LinearSystem, LpError, LpOutcome};
use crate::model::{
    faithfulness_violation, is_hurwitz, CovarianceMatrix, FaithfulnessViolation, ModelError, DEFAULT_ZERO_TOL,
};

/// Witness residuals must satisfy `residual ≤ WITNESS_TOL · scale`.
pub const WITNESS_TOL: f64 = 1e-7;
/// Slack on the normalized lower bounds when validating witnesses.
pub const BOUND_SLACK: f64 = 1e-9;
/// Entries with `|A′_k| ≤ SUPPORT_TOL · max|A′|` count as missing support.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeasibilityError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("covariance is not m-faithful to the graph: {0}")]
    NotMFaithful(FaithfulnessViolation),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignMode {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Unknown {
    /// Weight on edge `source → target`, i.e. `A′[target][source]`.
    Drift {
        source: usize,
        target: usize,
    },
    Diffusion {
        node: usize,
    },
}

/// The LP encoding of one sign class for a fixed Σ.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilitySystem {
    pub mode: SignMode,
    pub nodes: Vec<String>,
    pub target: (usize, usize),
    pub unknowns: Vec<Unknown>,
    pub sigma: CovarianceMatrix,
    pub lp: LinearSystem,
}

impl FeasibilitySystem {
    pub fn equality_rows(&self) -> usize {
        self.lp.rows.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    fn drift_position(&self, source: usize, target: usize) -> Option<usize> {
        self.unknowns
            .iter()
            .position(|u| *u == Unknown::Drift { source, target })
    }

    fn with_bound(&self, k: usize, bound: Bound) -> Self {
        let mut sys = self.clone();
        sys.lp.bounds[k] = bound;
        sys
    }
}

fn check_inputs(
    g: &DirectedGraph,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
    zero_tol: f64,
) -> Result<(usize, usize), FeasibilityError> {
    // Latent nodes make the problem bilinear; only fully observed graphs are handled.
    g.require_observed()?;
    let target = g.resolve_target(e)?;
    if let Some(v) = faithfulness_violation(sigma, g, zero_tol)? {
        return Err(FeasibilityError::NotMFaithful(v));
    }
    Ok(target)
}

pub fn build_system(
    g: &DirectedGraph,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
    mode: SignMode,
) -> Result<FeasibilitySystem, FeasibilityError> {
    build_system_with_tol(g, sigma, e, mode, DEFAULT_ZERO_TOL)
}

pub fn build_system_with_tol(
    g: &DirectedGraph,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
    mode: SignMode,
    zero_tol: f64,
) -> Result<FeasibilitySystem, FeasibilityError> {
    let target = check_inputs(g, sigma, e, zero_tol)?;
    Ok(assemble(g, sigma, target, mode))
}

/// Σ with the graph's structural zeros set exactly to zero. Those entries
/// are within `zero_tol` already; left as rounding noise they would become
/// spurious constraints once the equality rows are normalized.
fn snap_structural_zeros(g: &DirectedGraph, sigma: &CovarianceMatrix) -> CovarianceMatrix {
    let pattern = marginal_independence_pattern(g);
    if pattern.zero_set.is_empty() {
        return sigma.clone();
    }
    let mut s = sigma.sigma().clone();
    for &(i, j) in &pattern.zero_set {
        s.set(i, j, 0.0);
    }
    CovarianceMatrix::new(s).unwrap_or_else(|_| sigma.clone())
}

fn assemble(g: &DirectedGraph, sigma: &CovarianceMatrix, target: (usize, usize), mode: SignMode) -> FeasibilitySystem {
    let sigma = &snap_structural_zeros(g, sigma);
    let n = g.len();
    let mut unknowns = Vec::with_capacity(g.edge_count() + n);
    let mut bounds = Vec::with_capacity(g.edge_count() + n);
    for (s, t) in g.edge_indices() {
        let bound = if (s, t) != target {
            Bound::Free
        } else {
            match mode {
                SignMode::Plus => Bound::AtLeast(1.0),
                SignMode::Minus => Bound::AtMost(-1.0),
                SignMode::Zero => continue,
            }
        };
        unknowns.push(Unknown::Drift { source: s, target: t });
        bounds.push(bound);
    }
    for node in 0..n {
        unknowns.push(Unknown::Diffusion { node });
        bounds.push(Bound::AtLeast(1.0));
    }

    // Row (i, j), i ≤ j: Σ_k A′_ik σ_kj + Σ_k σ_ik A′_jk + D′_ij = 0.
    let mut rows = Vec::with_capacity(packed_len(n));
    for i in 0..n {
        for j in i..n {
            let row = unknowns
                .iter()
                .map(|u| match *u {
                    Unknown::Drift { source, target } => {
                        let mut c = 0.0;
                        if target == i {
                            c += sigma.get(source, j);
                        }
                        if target == j {
                            c += sigma.get(i, source);
                        }
                        c
                    }
                    Unknown::Diffusion { node } => f64::from(u8::from(i == j && node == i)),
                })
                .collect();
            rows.push(row);
        }
    }

    let rhs = vec![0.0; rows.len()];
    FeasibilitySystem {
        mode,
        nodes: g.node_names().into_iter().map(String::from).collect(),
        target,
        unknowns,
        sigma: sigma.clone(),
        lp: LinearSystem {
            n_vars: bounds.len(),
            rows,
            rhs,
            bounds,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeValue {
    pub edge: EdgeRef,
    pub value: f64,
}

/// An explicit `(A′, D′)` reproducing Σ within the given sign class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityWitness {
    pub mode: SignMode,
    pub nodes: Vec<String>,
    /// Every graph edge, self-loops included, in graph edge order.
    pub drift: Vec<EdgeValue>,
    pub diffusion: Vec<f64>,
    /// `max|A′Σ + ΣA′ᵀ + D′|`
    pub residual: f64,
    /// `‖A′‖∞‖Σ‖∞ + ‖D′‖∞`
    pub scale: f64,
}

impl FeasibilityWitness {
    pub fn drift_matrix(&self) -> Matrix {
        let n = self.nodes.len();
        let idx = |name: &str| {
            self.nodes
                .iter()
                .position(|v| v == name)
                .expect("witness edges name witness nodes")
        };
        let mut a = Matrix::zeros(n, n);
        for ev in &self.drift {
            a.set(idx(&ev.edge.target), idx(&ev.edge.source), ev.value);
        }
        a
    }

    pub fn diffusion_matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::diagonal(&self.diffusion)
    }

    pub fn edge_value(&self, e: &EdgeRef) -> Option<f64> {
        self.drift.iter().find(|ev| &ev.edge == e).map(|ev| ev.value)
    }

    /// Recomputes the residual against `sigma` and checks the witness
    /// invariants: small residual, `D′ ≥ 1`, sign constraint, Hurwitz `A′`.
    pub fn validate(&self, sigma: &CovarianceMatrix, target: &EdgeRef) -> Result<(), String> {
        let a = self.drift_matrix();
        let d = self.diffusion_matrix();
        let residual = lyapunov_residual(&a, sigma.sigma(), &d);
        let scale = lyapunov_scale(&a, sigma.sigma(), &d);
        if residual.is_nan() || residual > WITNESS_TOL * scale {
            return Err(format!(
                "residual {residual:e} exceeds {WITNESS_TOL:e} x scale {scale:e}"
            ));
        }
        if let Some(v) = self.diffusion.iter().find(|&&v| v.is_nan() || v < 1.0 - BOUND_SLACK) {
            return Err(format!("diffusion entry {v} below the normalized bound 1"));
        }
        let at_target = self.edge_value(target).unwrap_or(0.0);
        let sign_ok = match self.mode {
            SignMode::Plus => at_target >= 1.0 - BOUND_SLACK,
            SignMode::Minus => at_target <= -1.0 + BOUND_SLACK,
            SignMode::Zero => at_target == 0.0,
        };
        if !sign_ok {
            return Err(format!(
                "target weight {at_target} violates the {:?} constraint",
                self.mode
            ));
        }
        if !is_hurwitz(&a) {
            return Err("witness drift is not Hurwitz".into());
        }
        Ok(())
    }

    fn from_values(sys: &FeasibilitySystem, x: &[f64], g_edges: &[(usize, usize)]) -> Self {
        let n = sys.nodes.len();
        let mut drift: Vec<EdgeValue> = g_edges
            .iter()
            .map(|&(s, t)| EdgeValue {
                edge: EdgeRef::new(&sys.nodes[s], &sys.nodes[t]),
                value: 0.0,
            })
            .collect();
        let mut diffusion = vec![0.0; n];
        for (u, &v) in sys.unknowns.iter().zip(x) {
            match *u {
                Unknown::Drift { source, target } => {
                    let k = g_edges
                        .iter()
                        .position(|&p| p == (source, target))
                        .expect("unknowns are graph edges");
                    drift[k].value = v;
                }
                Unknown::Diffusion { node } => diffusion[node] = v,
            }
        }
        let mut w = Self {
            mode: sys.mode,
            nodes: sys.nodes.clone(),
            drift,
            diffusion,
            residual: 0.0,
            scale: 0.0,
        };
        w.refresh(&sys.sigma);
        w
    }

    fn refresh(&mut self, sigma: &CovarianceMatrix) {
        let a = self.drift_matrix();
        let d = self.diffusion_matrix();
        self.residual = lyapunov_residual(&a, sigma.sigma(), &d);
        self.scale = lyapunov_scale(&a, sigma.sigma(), &d);
    }

    fn max_abs_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |m, ev| m.max(ev.value.abs()))
    }

    /// Edges (other than `skip`) whose weight is numerically zero.
    fn missing_support(&self, skip: Option<&EdgeRef>) -> Vec<usize> {
        let floor = SUPPORT_TOL * self.max_abs_drift();
        self.drift
            .iter()
            .enumerate()
            .filter(|(_, ev)| Some(&ev.edge) != skip && ev.value.abs() <= floor)
            .map(|(k, _)| k)
            .collect()
    }

    fn combine(parts: &[(&FeasibilityWitness, f64)], mode: SignMode, sigma: &CovarianceMatrix) -> Self {
        let first = parts[0].0;
        let mut drift = first.drift.clone();
        for (k, ev) in drift.iter_mut().enumerate() {
            ev.value = parts.iter().map(|(w, c)| c * w.drift[k].value).sum();
        }
        let diffusion = (0..first.diffusion.len())
            .map(|i| parts.iter().map(|(w, c)| c * w.diffusion[i]).sum())
            .collect();
        let mut w = Self {
            mode,
            nodes: first.nodes.clone(),
            drift,
            diffusion,
            residual: 0.0,
            scale: 0.0,
        };
        w.refresh(sigma);
        w
    }
}

fn target_ref(sys: &FeasibilitySystem) -> EdgeRef {
    EdgeRef::new(&sys.nodes[sys.target.0], &sys.nodes[sys.target.1])
}

fn graph_edges(sys: &FeasibilitySystem) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = sys
        .unknowns
        .iter()
        .filter_map(|u| match *u {
            Unknown::Drift { source, target } => Some((source, target)),
            Unknown::Diffusion { .. } => None,
        })
        .collect();
    if !edges.contains(&sys.target) {
        edges.push(sys.target);
        edges.sort_unstable();
    }
    edges
}

/// Solves the LP; returns a validated witness or `None` when infeasible.
/// The witness may have zeros on edges other than the target.
pub fn lp_feasible(sys: &FeasibilitySystem) -> Result<Option<FeasibilityWitness>, FeasibilityError> {
    match find_feasible_point(&sys.lp)? {
        LpOutcome::Infeasible { .. } => Ok(None),
        LpOutcome::Feasible(x) => {
            let w = FeasibilityWitness::from_values(sys, &x, &graph_edges(sys));
            w.validate(&sys.sigma, &target_ref(sys))
                .map_err(FeasibilityError::NumericalBreakdown)?;
            Ok(Some(w))
        }
    }
}

/// Convex weights tried in turn when merging witnesses; generic values avoid
/// the finitely many combinations that cancel an entry.
const MIX_WEIGHTS: [f64; 6] = [0.5, 0.3819660112501051, 0.7236067977499789, 0.2, 0.85, 0.1];

/// A feasible point of a ± sign class with every graph edge nonzero, or
/// `None` when the class has no full-support point.
pub fn full_support_witness(sys: &FeasibilitySystem) -> Result<Option<FeasibilityWitness>, FeasibilityError> {
    let Some(base) = lp_feasible(sys)? else {
        return Ok(None);
    };
    if sys.mode == SignMode::Zero {
        return Ok(Some(base));
    }
    let target = target_ref(sys);
    let missing = base.missing_support(Some(&target));
    if missing.is_empty() {
        return Ok(Some(base));
    }

    // For each missing edge, find a point of the same class where it is
    // bounded away from zero. If neither sign is possible the edge vanishes
    // on the whole class (the feasible set is a cone up to normalization).
    let mut helpers = Vec::with_capacity(missing.len());
    for &k in &missing {
        let ev = &base.drift[k];
        let (s, t) = (
            sys.nodes.iter().position(|v| *v == ev.edge.source).expect("known node"),
            sys.nodes.iter().position(|v| *v == ev.edge.target).expect("known node"),
        );
        let pos = sys.drift_position(s, t).expect("missing edge is an unknown");
        let up = lp_feasible(&sys.with_bound(pos, Bound::AtLeast(1.0)))?;
        let helper = match up {
            Some(w) => w,
            None => match lp_feasible(&sys.with_bound(pos, Bound::AtMost(-1.0)))? {
                Some(w) => w,
                None => return Ok(None),
            },
        };
        helpers.push(helper);
    }

    for &t in &MIX_WEIGHTS {
        // Base gets weight t, helpers share 1 − t with geometric decay.
        let raw: Vec<f64> = (0..helpers.len()).map(|k| 0.5f64.powi(k as i32)).collect();
        let total: f64 = raw.iter().sum();
        let mut parts = vec![(&base, t)];
        parts.extend(helpers.iter().zip(&raw).map(|(w, r)| (w, (1.0 - t) * r / total)));
        let mut w = FeasibilityWitness::combine(&parts, sys.mode, &sys.sigma);
        w.mode = sys.mode;
        if w.missing_support(Some(&target)).is_empty() && w.validate(&sys.sigma, &target).is_ok() {
            return Ok(Some(w));
        }
    }
    Err(FeasibilityError::NumericalBreakdown(
        "could not restore full support by convex combination".into(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointwiseStatus {
    IdentifiablePlus,
    IdentifiableMinus,
    NonIdentifiable,
}

impl PointwiseStatus {
    pub fn is_identifiable(self) -> bool {
        self != PointwiseStatus::NonIdentifiable
    }
}

/// Result of the opposite-sign test. `witness_plus` / `witness_minus` are
/// present exactly for the feasible sign classes; `m0_witness` is the
/// zero-at-target combination of the two, built for non-identifiable Σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseVerdict {
    pub status: PointwiseStatus,
    pub witness_plus: Option<FeasibilityWitness>,
    pub witness_minus: Option<FeasibilityWitness>,
    pub m0_witness: Option<FeasibilityWitness>,
}

pub fn pointwise_classify(
    g: &DirectedGraph,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
) -> Result<PointwiseVerdict, FeasibilityError> {
    pointwise_classify_with_tol(g, sigma, e, DEFAULT_ZERO_TOL)
}

pub fn pointwise_classify_with_tol(
    g: &DirectedGraph,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
    zero_tol: f64,
) -> Result<PointwiseVerdict, FeasibilityError> {
    let target = check_inputs(g, sigma, e, zero_tol)?;
    let plus = full_support_witness(&assemble(g, sigma, target, SignMode::Plus))?;
    let minus = full_support_witness(&assemble(g, sigma, target, SignMode::Minus))?;
    let status = match (&plus, &minus) {
        (Some(_), Some(_)) => PointwiseStatus::NonIdentifiable,
        (Some(_), None) => PointwiseStatus::IdentifiablePlus,
        (None, Some(_)) => PointwiseStatus::IdentifiableMinus,
        (None, None) => {
            return Err(FeasibilityError::InconsistentInput(format!(
                "no full-support drift of either sign at {e} reproduces this covariance"
            )))
        }
    };
    let m0_witness = match (&plus, &minus) {
        (Some(p), Some(m)) => {
            Some(combine_opposite_witnesses(p, m, sigma, e).map_err(FeasibilityError::NumericalBreakdown)?)
        }
        _ => None,
    };
    Ok(PointwiseVerdict {
        status,
        witness_plus: plus,
        witness_minus: minus,
        m0_witness,
    })
}

/// Mixes a positive and a negative witness with the unique weight that
/// cancels the target edge, giving a zero-at-target solution.
pub fn combine_opposite_witnesses(
    plus: &FeasibilityWitness,
    minus: &FeasibilityWitness,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
) -> Result<FeasibilityWitness, String> {
    let (ap, am) = match (plus.edge_value(e), minus.edge_value(e)) {
        (Some(p), Some(m)) if p > 0.0 && m < 0.0 => (p, m),
        _ => return Err(format!("witnesses do not have opposite signs at {e}")),
    };
    let t = -am / (ap - am);
    let mut w = FeasibilityWitness::combine(&[(plus, t), (minus, 1.0 - t)], SignMode::Zero, sigma);
    for ev in &mut w.drift {
        if &ev.edge == e {
            ev.value = 0.0;
        }
    }
    w.refresh(sigma);
    w.validate(sigma, e)?;
    Ok(w)
}

pub fn m0_member(g: &DirectedGraph, sigma: &CovarianceMatrix, e: &EdgeRef) -> Result<bool, FeasibilityError> {
    Ok(m0_witness(g, sigma, e, DEFAULT_ZERO_TOL)?.is_some())
}

/// Solves the zero-pinned system directly.
pub fn m0_witness(
    g: &DirectedGraph,
    sigma: &CovarianceMatrix,
    e: &EdgeRef,
    zero_tol: f64,
) -> Result<Option<FeasibilityWitness>, FeasibilityError> {
    lp_feasible(&build_system_with_tol(g, sigma, e, SignMode::Zero, zero_tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{entry, CatalogId};
    use crate::model::{sample_model, stationary_covariance, OUModel, SamplerConfig};

    fn ce_sigma() -> CovarianceMatrix {
        CovarianceMatrix::from_rows(&[vec![0.5, 0.25], vec![0.25, 0.75]]).unwrap()
    }

    #[test]
    fn system_shapes() {
        let ce = entry(CatalogId::CauseEffect);
        let sys = build_system(&ce.graph, &ce_sigma(), &ce.target, SignMode::Plus).unwrap();
        assert_eq!((sys.equality_rows(), sys.unknown_count()), (3, 5));

        let conf = entry(CatalogId::Confounding);
        let (_, sigma) = sample_model(&conf.graph, &SamplerConfig::with_seed(3)).unwrap();
        let sys = build_system(&conf.graph, &sigma, &conf.target, SignMode::Minus).unwrap();
        assert_eq!((sys.equality_rows(), sys.unknown_count()), (6, 9));
        let sys = build_system(&conf.graph, &sigma, &conf.target, SignMode::Zero).unwrap();
        assert_eq!(sys.unknown_count(), 8);
    }

    #[test]
    fn equality_rows_vanish_at_generating_model() {
        let conf = entry(CatalogId::Confounding);
        let (model, sigma) = sample_model(&conf.graph, &SamplerConfig::with_seed(8)).unwrap();
        let sys = build_system(&conf.graph, &sigma, &conf.target, SignMode::Plus).unwrap();
        let x: Vec<f64> = sys
            .unknowns
            .iter()
            .map(|u| match *u {
                Unknown::Drift { source, target } => model.edge_weight(source, target),
                Unknown::Diffusion { node } => model.diffusion()[node],
            })
            .collect();
        assert!(sys.lp.residual(&x) < 1e-10);
    }

    #[test]
    fn system_errors() {
        let ce = entry(CatalogId::CauseEffect);
        assert!(matches!(
            build_system(&ce.graph, &ce_sigma(), &EdgeRef::new("Y", "H"), SignMode::Plus),
            Err(FeasibilityError::Graph(GraphError::UnknownEdge(_)))
        ));
        let diag = CovarianceMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            build_system(&ce.graph, &diag, &ce.target, SignMode::Plus),
            Err(FeasibilityError::NotMFaithful(_))
        ));
    }

    #[test]
    fn cause_effect_sign_is_pinned() {
        let ce = entry(CatalogId::CauseEffect);
        let minus = build_system(&ce.graph, &ce_sigma(), &ce.target, SignMode::Minus).unwrap();
        assert!(lp_feasible(&minus).unwrap().is_none());
        let plus = build_system(&ce.graph, &ce_sigma(), &ce.target, SignMode::Plus).unwrap();
        let w = lp_feasible(&plus).unwrap().unwrap();
        assert!(w.edge_value(&ce.target).unwrap() >= 1.0 - BOUND_SLACK);

        let v = pointwise_classify(&ce.graph, &ce_sigma(), &ce.target).unwrap();
        assert_eq!(v.status, PointwiseStatus::IdentifiablePlus);
        assert!(v.witness_minus.is_none() && v.m0_witness.is_none());
        assert!(!m0_member(&ce.graph, &ce_sigma(), &ce.target).unwrap());
    }

    #[test]
    fn classification_follows_sampled_sign_for_cause_effect() {
        let ce = entry(CatalogId::CauseEffect);
        for seed in 0..40 {
            let (model, sigma) = sample_model(&ce.graph, &SamplerConfig::with_seed(seed)).unwrap();
            let v = pointwise_classify(&ce.graph, &sigma, &ce.target).unwrap();
            let expected = if model.edge_weight(0, 1) > 0.0 {
                PointwiseStatus::IdentifiablePlus
            } else {
                PointwiseStatus::IdentifiableMinus
            };
            assert_eq!(v.status, expected, "seed {seed}");
            assert_eq!(sigma.get(0, 1) > 0.0, model.edge_weight(0, 1) > 0.0);
        }
    }

    #[test]
    fn nonidentifiable_verdicts_carry_m0_witnesses() {
        let conf = entry(CatalogId::Confounding);
        let mut seen = 0;
        for seed in 0..60 {
            let (_, sigma) = sample_model(&conf.graph, &SamplerConfig::with_seed(seed)).unwrap();
            let v = pointwise_classify(&conf.graph, &sigma, &conf.target).unwrap();
            assert_eq!(
                v.status == PointwiseStatus::NonIdentifiable,
                m0_member(&conf.graph, &sigma, &conf.target).unwrap(),
                "seed {seed}"
            );
            if v.status == PointwiseStatus::NonIdentifiable {
                seen += 1;
                let w = v.m0_witness.as_ref().unwrap();
                assert_eq!(w.edge_value(&conf.target), Some(0.0));
                assert!(w.residual <= WITNESS_TOL * w.scale);
                let p = v.witness_plus.as_ref().unwrap();
                let m = v.witness_minus.as_ref().unwrap();
                assert!(p.missing_support(Some(&conf.target)).is_empty());
                assert!(m.missing_support(Some(&conf.target)).is_empty());
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn scaled_generator_gives_same_verdict() {
        let conf = entry(CatalogId::Confounding);
        let (model, sigma) = sample_model(&conf.graph, &SamplerConfig::with_seed(21)).unwrap();
        let base = pointwise_classify(&conf.graph, &sigma, &conf.target).unwrap();
        for a in [0.5, 2.0, 10.0] {
            let s = stationary_covariance(&model.scaled(a).unwrap()).unwrap();
            let v = pointwise_classify(&conf.graph, &s, &conf.target).unwrap();
            assert_eq!(v.status, base.status);
        }
    }

    #[test]
    fn latent_graphs_are_refused() {
        let g = DirectedGraph::with_self_loops(
            vec![crate::graph::Node::latent("H"), crate::graph::Node::observed("Y")],
            &[EdgeRef::new("H", "Y")],
        )
        .unwrap();
        assert!(matches!(
            pointwise_classify(&g, &ce_sigma(), &EdgeRef::new("H", "Y")),
            Err(FeasibilityError::Graph(GraphError::LatentNodesPresent(_)))
        ));
    }

    #[test]
    fn witness_json_roundtrip() {
        let ce = entry(CatalogId::CauseEffect);
        let v = pointwise_classify(&ce.graph, &ce_sigma(), &ce.target).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        let back: PointwiseVerdict = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert!(text.contains(r#""edge":["H","Y"]"#));
    }

    #[test]
    fn witness_matrix_reassembly() {
        let ce = entry(CatalogId::CauseEffect);
        let model = OUModel::new(
            ce.graph.clone(),
            Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, -1.0]]).unwrap(),
            vec![1.0, 1.0],
        )
        .unwrap();
        let sigma = stationary_covariance(&model).unwrap();
        let v = pointwise_classify(&ce.graph, &sigma, &ce.target).unwrap();
        let w = v.witness_plus.unwrap();
        let a = w.drift_matrix();
        assert_eq!(a.get(0, 1), 0.0);
        assert!(is_hurwitz(&a));
    }
}
