//! Seeded Monte Carlo estimate of how often an edge sign is identifiable.
//!
//! Each sample index draws a Hurwitz model, computes Σ and discards Σ when it
//! is not m-faithful; such draws reduce the denominator instead of being
//! replaced. Accepted Σ are classified by the LP engine and, for catalog
//! structures, cross-checked against the closed forms, the zero-pinned LP and
//! the generating model's own sign.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{self, recognize, CatalogId, CatalogMatch};
use crate::closed_form::{closed_form_check, ClosedFormCheck};
use crate::feasibility::{
    m0_witness, pointwise_classify_with_tol, FeasibilityWitness, PointwiseStatus, PointwiseVerdict,
};
use crate::graph::{DirectedGraph, EdgeRef, GraphError};
use crate::linalg::SymmetricMatrix;
use crate::model::{ModelError, Sampler, SamplerConfig};

/// Tolerance on partially identifiable cells at `n ≥ LOW_N`.
pub const PARTIAL_TOL: f64 = 0.06;
/// Below this many samples the partial-cell tolerance is widened.
pub const LOW_N: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engines {
    #[default]
    Lp,
    ClosedForm,
    Both,
}

impl Engines {
    fn lp(self) -> bool {
        self != Engines::ClosedForm
    }

    fn closed_form(self) -> bool {
        self != Engines::Lp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Label used in reports; defaults to the catalog id when recognized.
    pub label: String,
    pub graph: DirectedGraph,
    pub target: EdgeRef,
    pub n_samples: u64,
    pub sampler: SamplerConfig,
    pub engines: Engines,
    /// Also run the zero-pinned LP and the generating-sign check per sample.
    pub cross_checks: bool,
}

impl ExperimentSpec {
    /// LP engine plus every applicable cross-check, with the default sampler
    /// and a resample budget sized for `n_samples`.
    pub fn new(graph: DirectedGraph, target: EdgeRef, n_samples: u64, seed: u64) -> Self {
        let label = recognize(&graph, &target)
            .map(|m| m.id.to_string())
            .unwrap_or_else(|| "custom".to_string());
        let engines = if label == "custom" { Engines::Lp } else { Engines::Both };
        Self {
            label,
            graph,
            target,
            n_samples,
            sampler: SamplerConfig::with_seed(seed).for_samples(n_samples),
            engines,
            cross_checks: true,
        }
    }

    pub fn for_catalog(id: CatalogId, n_samples: u64, seed: u64) -> Self {
        let e = catalog::entry(id);
        Self::new(e.graph, e.target, n_samples, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisagreementKind {
    /// Closed form and LP give different answers.
    ClosedForm,
    /// Opposite-sign test and zero-pinned test disagree.
    M0,
    /// A verdict contradicts the sign of the generating model.
    GroundTruth,
    /// The LP engine failed on this sample.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub index: u64,
    pub kind: DisagreementKind,
    pub details: String,
    pub sigma: SymmetricMatrix,
    pub true_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<PointwiseVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0_witness: Option<FeasibilityWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    /// Draws whose Σ passed the faithfulness check.
    pub accepted: u64,
    pub identifiable: u64,
    pub non_identifiable: u64,
    pub boundary: u64,
    pub numerical_failures: u64,
    pub rejected_hurwitz: u64,
    pub rejected_faithfulness: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub graph: String,
    pub edge: EdgeRef,
    pub n: u64,
    /// `identifiable / (identifiable + non_identifiable)`; null when both are 0.
    pub fraction: Option<f64>,
    pub counts: Counts,
    pub seed: u64,
    pub engines: Engines,
    pub drift_range: (f64, f64),
    pub diffusion_range: (f64, f64),
    pub zero_tol: f64,
    pub disagreements: Vec<Disagreement>,
    /// Left out of serialized output unless set, so reports stay byte-stable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ExperimentReport {
    pub fn disagreements_of(&self, kind: DisagreementKind) -> usize {
        self.disagreements.iter().filter(|d| d.kind == kind).count()
    }
}

enum Outcome {
    Rejected {
        hurwitz: u64,
    },
    Classified {
        hurwitz: u64,
        tally: Tally,
        disagreements: Vec<Disagreement>,
    },
}

#[derive(Clone, Copy)]
enum Tally {
    Identifiable,
    NonIdentifiable,
    Boundary,
    Failed,
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    sampler: Sampler,
    matched: Option<CatalogMatch>,
    target: (usize, usize),
}

fn sign_of(status: PointwiseStatus) -> Option<f64> {
    match status {
        PointwiseStatus::IdentifiablePlus => Some(1.0),
        PointwiseStatus::IdentifiableMinus => Some(-1.0),
        PointwiseStatus::NonIdentifiable => None,
    }
}

fn run_one(ctx: &Context<'_>, index: u64) -> Result<Outcome, ExperimentError> {
    let spec = ctx.spec;
    let draw = ctx.sampler.draw(index)?;
    if !draw.is_faithful() {
        return Ok(Outcome::Rejected {
            hurwitz: draw.hurwitz_rejections,
        });
    }
    let true_weight = draw.model.edge_weight(ctx.target.0, ctx.target.1);
    let mut disagreements = Vec::new();
    let record =
        |kind, details: String, verdict: Option<&PointwiseVerdict>, cf: Option<&ClosedFormCheck>| Disagreement {
            index,
            kind,
            details,
            sigma: draw.sigma.sigma().clone(),
            true_weight,
            verdict: verdict.cloned(),
            closed_form: cf.cloned(),
            m0_witness: None,
        };

    let closed = match (&ctx.matched, spec.engines.closed_form()) {
        (Some(m), true) => Some(closed_form_check(m.id, &draw.sigma.permuted(&m.order))),
        _ => None,
    };
    let closed_ok = closed.as_ref().and_then(|c| c.as_ref().ok());
    let closed_boundary = matches!(&closed, Some(Err(_))) || closed_ok.is_some_and(ClosedFormCheck::is_boundary);

    if spec.cross_checks {
        if let Some(ClosedFormCheck::Sign { sign, .. }) = closed_ok {
            let truth = if true_weight > 0.0 {
                PointwiseStatus::IdentifiablePlus
            } else {
                PointwiseStatus::IdentifiableMinus
            };
            if sign.agrees_with(truth) == Some(false) {
                disagreements.push(record(
                    DisagreementKind::GroundTruth,
                    format!("closed form says {sign:?} but the generating weight is {true_weight}"),
                    None,
                    closed_ok,
                ));
            }
        }
    }

    if !spec.engines.lp() {
        let tally = match closed_ok {
            _ if closed_boundary => Tally::Boundary,
            Some(ClosedFormCheck::Sign { .. }) => Tally::Identifiable,
            Some(ClosedFormCheck::Conditions(r)) => match r.verdict {
                crate::closed_form::ConditionVerdict::Identifiable => Tally::Identifiable,
                crate::closed_form::ConditionVerdict::NonIdentifiable => Tally::NonIdentifiable,
                crate::closed_form::ConditionVerdict::Boundary => Tally::Boundary,
            },
            None => Tally::Boundary,
        };
        return Ok(Outcome::Classified {
            hurwitz: draw.hurwitz_rejections,
            tally,
            disagreements,
        });
    }

    let zero_tol = spec.sampler.zero_tol;
    let verdict = match pointwise_classify_with_tol(&spec.graph, &draw.sigma, &spec.target, zero_tol) {
        Ok(v) => v,
        Err(e) => {
            disagreements.push(record(DisagreementKind::Numerical, e.to_string(), None, closed_ok));
            return Ok(Outcome::Classified {
                hurwitz: draw.hurwitz_rejections,
                tally: Tally::Failed,
                disagreements,
            });
        }
    };

    if let Some(Some(false)) = closed_ok.map(|c| c.agrees_with(verdict.status)) {
        disagreements.push(record(
            DisagreementKind::ClosedForm,
            format!("LP says {:?}, closed form disagrees", verdict.status),
            Some(&verdict),
            closed_ok,
        ));
    }

    if spec.cross_checks {
        if let Some(s) = sign_of(verdict.status) {
            if s * true_weight < 0.0 {
                disagreements.push(record(
                    DisagreementKind::GroundTruth,
                    format!(
                        "LP says {:?} but the generating weight is {true_weight}",
                        verdict.status
                    ),
                    Some(&verdict),
                    closed_ok,
                ));
            }
        }
        match m0_witness(&spec.graph, &draw.sigma, &spec.target, zero_tol) {
            Ok(w) => {
                let non_ident = verdict.status == PointwiseStatus::NonIdentifiable;
                if w.is_some() != non_ident {
                    let mut d = record(
                        DisagreementKind::M0,
                        format!(
                            "opposite-sign test says {:?} but the zero-pinned system is {}",
                            verdict.status,
                            if w.is_some() { "feasible" } else { "infeasible" }
                        ),
                        Some(&verdict),
                        closed_ok,
                    );
                    d.m0_witness = w;
                    disagreements.push(d);
                }
            }
            Err(e) => disagreements.push(record(
                DisagreementKind::Numerical,
                format!("zero-pinned system: {e}"),
                Some(&verdict),
                closed_ok,
            )),
        }
    }

    let tally = if closed_boundary {
        Tally::Boundary
    } else if verdict.status.is_identifiable() {
        Tally::Identifiable
    } else {
        Tally::NonIdentifiable
    };
    Ok(Outcome::Classified {
        hurwitz: draw.hurwitz_rejections,
        tally,
        disagreements,
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    let start = Instant::now();
    if spec.n_samples == 0 {
        return Err(ExperimentError::Invalid("n_samples must be at least 1".into()));
    }
    spec.graph.require_observed()?;
    let target = spec.graph.resolve_target(&spec.target)?;
    let matched = recognize(&spec.graph, &spec.target);
    if spec.engines == Engines::ClosedForm && matched.is_none() {
        return Err(ExperimentError::Invalid(
            "closed-form engine needs a catalog structure".into(),
        ));
    }
    let ctx = Context {
        spec,
        sampler: Sampler::new(&spec.graph, spec.sampler.clone())?,
        matched,
        target,
    };

    let outcomes: Vec<Outcome> = (0..spec.n_samples)
        .into_par_iter()
        .map(|i| run_one(&ctx, i))
        .collect::<Result<_, _>>()?;

    let mut counts = Counts::default();
    let mut disagreements = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Rejected { hurwitz } => {
                counts.rejected_hurwitz += hurwitz;
                counts.rejected_faithfulness += 1;
            }
            Outcome::Classified {
                hurwitz,
                tally,
                disagreements: d,
            } => {
                counts.rejected_hurwitz += hurwitz;
                counts.accepted += 1;
                match tally {
                    Tally::Identifiable => counts.identifiable += 1,
                    Tally::NonIdentifiable => counts.non_identifiable += 1,
                    Tally::Boundary => counts.boundary += 1,
                    Tally::Failed => counts.numerical_failures += 1,
                }
                disagreements.extend(d);
            }
        }
    }
    if counts.rejected_hurwitz > spec.sampler.max_resamples {
        return Err(ModelError::ResampleBudgetExhausted {
            budget: spec.sampler.max_resamples,
            hurwitz_rejections: counts.rejected_hurwitz,
            faithfulness_rejections: counts.rejected_faithfulness,
        }
        .into());
    }

    let decided = counts.identifiable + counts.non_identifiable;
    Ok(ExperimentReport {
        graph: spec.label.clone(),
        edge: spec.target.clone(),
        n: spec.n_samples,
        fraction: (decided > 0).then(|| counts.identifiable as f64 / decided as f64),
        counts,
        seed: spec.sampler.seed,
        engines: spec.engines,
        drift_range: spec.sampler.drift_range,
        diffusion_range: spec.sampler.diffusion_range,
        zero_tol: spec.sampler.zero_tol,
        disagreements,
        wall_time_s: Some(start.elapsed().as_secs_f64()),
    })
}

/// A structure outside the catalog, compared against a published column.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraColumn {
    pub column: char,
    pub label: String,
    pub graph: DirectedGraph,
    pub target: EdgeRef,
    pub reference: f64,
}

/// Published fractions of the proxy structures, keyed by column letter.
pub fn proxy_reference(column: char) -> Option<f64> {
    match column {
        'g' => Some(0.85),
        'h' | 'i' => Some(1.0),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub graph: String,
    pub column: char,
    pub fraction: Option<f64>,
    pub reference: f64,
    pub delta: Option<f64>,
    /// Zero means the cell must match exactly.
    pub tolerance: f64,
    pub pass: bool,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub n: u64,
    pub seed: u64,
    pub low_n: bool,
    pub rows: Vec<Table1Row>,
}

impl Table1 {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn strip_timing(&mut self) {
        for r in &mut self.rows {
            r.report.wall_time_s = None;
        }
    }

    /// One line per graph: graph, column, counts, fraction, reference, delta, tolerance, pass.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "graph",
            "column",
            "n",
            "accepted",
            "identifiable",
            "non_identifiable",
            "boundary",
            "fraction",
            "reference",
            "delta",
            "tolerance",
            "pass",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        for r in &self.rows {
            let c = &r.report.counts;
            w.write_record([
                r.graph.clone(),
                r.column.to_string(),
                self.n.to_string(),
                c.accepted.to_string(),
                c.identifiable.to_string(),
                c.non_identifiable.to_string(),
                c.boundary.to_string(),
                opt(r.fraction),
                format!("{:.2}", r.reference),
                opt(r.delta),
                format!("{:.4}", r.tolerance),
                r.pass.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Cell tolerance: exact for fully identifiable cells, ±0.06 for partial
/// cells, widened by three binomial standard deviations below 1000 samples.
pub fn cell_tolerance(reference: f64, n: u64) -> f64 {
    if reference == 1.0 {
        return 0.0;
    }
    if n >= LOW_N {
        PARTIAL_TOL
    } else {
        PARTIAL_TOL + 3.0 * (0.25 / n.max(1) as f64).sqrt()
    }
}

fn judge(reference: f64, n: u64, report: &ExperimentReport) -> (Option<f64>, f64, bool) {
    let tolerance = cell_tolerance(reference, n);
    let delta = report.fraction.map(|f| f - reference);
    let pass = match (reference == 1.0, report.fraction) {
        (true, Some(_)) => report.counts.non_identifiable == 0 && report.counts.numerical_failures == 0,
        (false, Some(_)) => delta.is_some_and(|d| d.abs() <= tolerance),
        (_, None) => false,
    };
    (delta, tolerance, pass)
}

/// Runs every catalog structure (then any extra columns) with one master seed.
pub fn reproduce_table1(seed: u64, n: u64, extras: &[ExtraColumn]) -> Result<Table1, ExperimentError> {
    reproduce_table1_with(&SamplerConfig::with_seed(seed), n, extras)
}

/// As [`reproduce_table1`], with sampler ranges and tolerance taken from
/// `base`. Its resample budget is resized for `n`.
pub fn reproduce_table1_with(base: &SamplerConfig, n: u64, extras: &[ExtraColumn]) -> Result<Table1, ExperimentError> {
    base.validate()?;
    let seed = base.seed;
    let spec = |graph: DirectedGraph, target: EdgeRef| {
        let mut spec = ExperimentSpec::new(graph, target, n, seed);
        spec.sampler = base.clone().for_samples(n);
        spec
    };
    let mut rows = Vec::with_capacity(6 + extras.len());
    for id in CatalogId::ALL {
        let e = catalog::entry(id);
        let report = run_experiment(&spec(e.graph, e.target))?;
        let (delta, tolerance, pass) = judge(id.reference_fraction(), n, &report);
        rows.push(Table1Row {
            graph: id.to_string(),
            column: id.column(),
            fraction: report.fraction,
            reference: id.reference_fraction(),
            delta,
            tolerance,
            pass,
            report,
        });
    }
    for x in extras {
        let mut spec = spec(x.graph.clone(), x.target.clone());
        spec.label = x.label.clone();
        let report = run_experiment(&spec)?;
        let (delta, tolerance, pass) = judge(x.reference, n, &report);
        rows.push(Table1Row {
            graph: x.label.clone(),
            column: x.column,
            fraction: report.fraction,
            reference: x.reference,
            delta,
            tolerance,
            pass,
            report,
        });
    }
    Ok(Table1 {
        n,
        seed,
        low_n: n < LOW_N,
        rows,
    })
}
