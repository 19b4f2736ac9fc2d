use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use signid_core::catalog::{self, recognize, CatalogId, CatalogMatch};
use signid_core::closed_form::{
    closed_form_check, latent_verdict, observed_iv_check, ClosedFormCheck, LatentVerdict, SignVerdict,
};
use signid_core::experiment::{proxy_reference, reproduce_table1_with, ExtraColumn, Table1};
use signid_core::feasibility::{pointwise_classify_with_tol, FeasibilityWitness, PointwiseStatus, PointwiseVerdict};
use signid_core::graph::{graphical_criterion, DirectedGraph, EdgeRef, GraphicalVerdict};
use signid_core::io::LabeledCovariance;
use signid_core::linalg::Matrix;
use signid_core::model::{sample_many, SamplerConfig};

use crate::input::{load_graph, load_sigma, resolve_edge};

pub const EXIT_NON_IDENTIFIABLE: u8 = 10;
pub const EXIT_BOUNDARY: u8 = 11;
pub const EXIT_TABLE_MISMATCH: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// What a command prints and the process exit code.
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

/// Sampler settings shared by `sample` and `table1`.
pub struct SamplerFlags {
    pub seed: u64,
    pub drift_range: Option<(f64, f64)>,
    pub diffusion_range: Option<(f64, f64)>,
    pub zero_tol: Option<f64>,
}

impl SamplerFlags {
    pub fn config(&self) -> Result<SamplerConfig> {
        let mut cfg = SamplerConfig::with_seed(self.seed);
        if let Some(r) = self.drift_range {
            cfg.drift_range = r;
        }
        if let Some(r) = self.diffusion_range {
            cfg.diffusion_range = r;
        }
        if let Some(t) = self.zero_tol {
            cfg.zero_tol = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
}

fn label_of(matched: Option<&CatalogMatch>) -> String {
    matched.map_or_else(|| "custom".to_string(), |m| m.id.to_string())
}

fn owned_names(g: &DirectedGraph) -> Vec<String> {
    g.node_names().into_iter().map(str::to_string).collect()
}

fn edge_list(edges: &[EdgeRef]) -> String {
    edges.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogListing {
    pub name: CatalogId,
    pub column: char,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeRef>,
    pub target_edge: EdgeRef,
    pub reference_fraction: f64,
}

pub fn cmd_catalog(name: Option<&str>, format: Format) -> Result<Output> {
    let ids: Vec<CatalogId> = match name {
        Some(n) => vec![n.parse::<CatalogId>().map_err(|e| anyhow!(e))?],
        None => CatalogId::ALL.to_vec(),
    };
    let listings: Vec<CatalogListing> = ids
        .into_iter()
        .map(|id| {
            let e = catalog::entry(id);
            CatalogListing {
                name: id,
                column: id.column(),
                nodes: owned_names(&e.graph),
                edges: e.graph.proper_edges(),
                target_edge: e.target,
                reference_fraction: id.reference_fraction(),
            }
        })
        .collect();
    let stdout = match format {
        Format::Json => to_json(&listings)?,
        Format::Csv => csv_rows(
            &["name", "column", "nodes", "edges", "target_edge", "reference_fraction"],
            listings.iter().map(|l| {
                [
                    l.name.to_string(),
                    l.column.to_string(),
                    l.nodes.join(" "),
                    edge_list(&l.edges),
                    l.target_edge.to_string(),
                    l.reference_fraction.to_string(),
                ]
            }),
        )?,
        Format::Text => {
            let mut s = String::new();
            for l in &listings {
                writeln!(
                    s,
                    "({}) {:<14} nodes: {:<10} edges: {:<28} target: {:<6} reference: {}",
                    l.column,
                    l.name,
                    l.nodes.join(","),
                    edge_list(&l.edges),
                    l.target_edge,
                    l.reference_fraction
                )?;
            }
            s
        }
    };
    Ok(Output::ok(stdout))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    IdentifiablePlus,
    IdentifiableMinus,
    NonIdentifiable,
    Boundary,
}

impl Verdict {
    fn from_status(s: PointwiseStatus) -> Self {
        match s {
            PointwiseStatus::IdentifiablePlus => Verdict::IdentifiablePlus,
            PointwiseStatus::IdentifiableMinus => Verdict::IdentifiableMinus,
            PointwiseStatus::NonIdentifiable => Verdict::NonIdentifiable,
        }
    }

    fn from_sign(s: SignVerdict) -> Self {
        match s {
            SignVerdict::Plus => Verdict::IdentifiablePlus,
            SignVerdict::Minus => Verdict::IdentifiableMinus,
            SignVerdict::Boundary => Verdict::Boundary,
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::IdentifiablePlus | Verdict::IdentifiableMinus => 0,
            Verdict::NonIdentifiable => EXIT_NON_IDENTIFIABLE,
            Verdict::Boundary => EXIT_BOUNDARY,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Verdict::IdentifiablePlus => "identifiable, sign +",
            Verdict::IdentifiableMinus => "identifiable, sign -",
            Verdict::NonIdentifiable => "not identifiable",
            Verdict::Boundary => "boundary (no valid model on this threshold)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Lp,
    ClosedForm,
    LatentTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub graph: String,
    pub edge: EdgeRef,
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub latent: Vec<String>,
    pub verdict: Verdict,
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointwise: Option<PointwiseVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_agrees: Option<bool>,
}

pub struct ClassifyArgs<'a> {
    pub graph: &'a str,
    pub sigma: Option<&'a Path>,
    pub edge: Option<&'a EdgeRef>,
    pub zero_tol: f64,
}

pub fn cmd_classify(args: &ClassifyArgs<'_>, format: Format) -> Result<Output> {
    let report = classify(args)?;
    let stdout = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_rows(
            &["graph", "edge", "verdict", "engine", "closed_form_agrees"],
            [[
                report.graph.clone(),
                report.edge.to_string(),
                serde_plain(&report.verdict)?,
                serde_plain(&report.engine)?,
                report.closed_form_agrees.map(|b| b.to_string()).unwrap_or_default(),
            ]],
        )?,
        Format::Text => render_classify(&report)?,
    };
    Ok(Output {
        stdout,
        code: report.verdict.exit_code(),
    })
}

/// Serializes a unit enum variant to its bare JSON string.
fn serde_plain<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_value(v)?
        .as_str()
        .map(str::to_string)
        .unwrap_or_default())
}

fn classify(args: &ClassifyArgs<'_>) -> Result<ClassifyReport> {
    let loaded = load_graph(args.graph)?;
    let edge = resolve_edge(&loaded, args.edge)?;
    let g = &loaded.graph;
    g.resolve_target(&edge)?;
    let matched = recognize(g, &edge);
    if g.has_latent() {
        return classify_latent(g, &edge, matched, args.sigma);
    }
    let path = args
        .sigma
        .ok_or_else(|| anyhow!("--sigma is required for graphs without latent nodes"))?;
    let sigma = load_sigma(path, &g.node_names())?;
    let pointwise = pointwise_classify_with_tol(g, &sigma, &edge, args.zero_tol)?;
    let verdict = Verdict::from_status(pointwise.status);
    let (mut closed_form, mut closed_form_error, mut closed_form_agrees) = (None, None, None);
    if let Some(m) = &matched {
        match closed_form_check(m.id, &sigma.permuted(&m.order)) {
            Ok(c) => {
                closed_form_agrees = c.agrees_with(pointwise.status);
                closed_form = Some(c);
            }
            Err(e) => closed_form_error = Some(e.to_string()),
        }
    }
    Ok(ClassifyReport {
        graph: label_of(matched.as_ref()),
        edge,
        nodes: owned_names(g),
        latent: Vec::new(),
        verdict,
        engine: Engine::Lp,
        pointwise: Some(pointwise),
        closed_form,
        closed_form_error,
        closed_form_agrees,
    })
}

/// Catalog position of the hidden confounder `H`.
fn hidden_role(id: CatalogId) -> usize {
    match id {
        CatalogId::Iv | CatalogId::CycleWithIv => 1,
        _ => 0,
    }
}

/// With latent nodes the LP is bilinear, so only the catalog structures with
/// `H` hidden are decided, from the closed forms or the known verdicts.
fn classify_latent(
    g: &DirectedGraph,
    edge: &EdgeRef,
    matched: Option<CatalogMatch>,
    sigma_path: Option<&Path>,
) -> Result<ClassifyReport> {
    let latent: Vec<String> = g.latent_nodes().into_iter().map(str::to_string).collect();
    let unsupported = || {
        anyhow!(
            "latent nodes present ({}): only the catalog structures with H latent are supported",
            latent.join(", ")
        )
    };
    let m = matched.ok_or_else(unsupported)?;
    let hidden = g.name(m.order[hidden_role(m.id)]);
    if latent != [hidden] {
        return Err(unsupported());
    }
    let observed: Vec<&str> = g
        .nodes()
        .iter()
        .filter(|n| !n.latent)
        .map(|n| n.name.as_str())
        .collect();
    let mut report = ClassifyReport {
        graph: m.id.to_string(),
        edge: edge.clone(),
        nodes: owned_names(g),
        latent: latent.clone(),
        verdict: Verdict::NonIdentifiable,
        engine: Engine::LatentTable,
        pointwise: None,
        closed_form: None,
        closed_form_error: None,
        closed_form_agrees: None,
    };
    match latent_verdict(m.id) {
        LatentVerdict::NonIdentifiable => Ok(report),
        LatentVerdict::Identifiable => {
            let path = sigma_path.ok_or_else(|| anyhow!("--sigma is required for {}", m.id))?;
            let sigma = load_sigma(path, &observed)?;
            let pos = |k: usize| {
                let name = g.name(m.order[k]);
                observed.iter().position(|n| *n == name).expect("observed role")
            };
            let zxy = sigma.permuted(&[pos(0), pos(2), pos(3)]);
            let check = observed_iv_check(m.id, &zxy)?;
            let ClosedFormCheck::Sign { sign, .. } = &check else {
                bail!("unexpected closed-form result for {}", m.id);
            };
            report.verdict = Verdict::from_sign(*sign);
            report.engine = Engine::ClosedForm;
            report.closed_form = Some(check);
            Ok(report)
        }
        LatentVerdict::Unsupported => Err(unsupported()),
    }
}

fn render_witness(s: &mut String, label: &str, w: &FeasibilityWitness) -> Result<()> {
    let drift: Vec<String> = w
        .drift
        .iter()
        .map(|ev| format!("{} {:.6}", ev.edge, ev.value))
        .collect();
    let diffusion: Vec<String> = w
        .nodes
        .iter()
        .zip(&w.diffusion)
        .map(|(n, d)| format!("{n} {d:.6}"))
        .collect();
    writeln!(s, "witness {label}:")?;
    writeln!(s, "  drift:     {}", drift.join(", "))?;
    writeln!(s, "  diffusion: {}", diffusion.join(", "))?;
    writeln!(s, "  residual:  {:.3e} (scale {:.3e})", w.residual, w.scale)?;
    Ok(())
}

fn render_check(s: &mut String, c: &ClosedFormCheck) -> Result<()> {
    match c {
        ClosedFormCheck::Sign { sign, branch_ratio, .. } => {
            write!(s, "closed form: sign {sign:?}")?;
            if let Some(r) = branch_ratio {
                write!(s, " (branch ratio {r:.6})")?;
            }
            writeln!(s)?;
        }
        ClosedFormCheck::Conditions(rep) => {
            writeln!(s, "closed form: {:?}", rep.verdict)?;
            for (k, v) in &rep.values {
                writeln!(s, "  {k:<14} {v:.6}")?;
            }
        }
    }
    Ok(())
}

fn render_classify(r: &ClassifyReport) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "graph:   {} ({})", r.graph, r.nodes.join(", "))?;
    if !r.latent.is_empty() {
        writeln!(s, "latent:  {}", r.latent.join(", "))?;
    }
    writeln!(s, "edge:    {}", r.edge)?;
    writeln!(s, "verdict: {}", r.verdict.describe())?;
    writeln!(s, "engine:  {}", serde_plain(&r.engine)?)?;
    if let Some(p) = &r.pointwise {
        if let Some(w) = &p.witness_plus {
            render_witness(&mut s, "+", w)?;
        }
        if let Some(w) = &p.witness_minus {
            render_witness(&mut s, "-", w)?;
        }
        if let Some(w) = &p.m0_witness {
            render_witness(&mut s, "0", w)?;
        }
    }
    if let Some(c) = &r.closed_form {
        render_check(&mut s, c)?;
    }
    if let Some(e) = &r.closed_form_error {
        writeln!(s, "closed form: not available ({e})")?;
    }
    if let Some(a) = r.closed_form_agrees {
        writeln!(s, "closed form agrees with LP: {a}")?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphicalReport {
    pub graph: String,
    pub edge: EdgeRef,
    pub verdict: GraphicalVerdict,
}

pub fn cmd_graphical(graph: &str, edge: Option<&EdgeRef>, format: Format) -> Result<Output> {
    let loaded = load_graph(graph)?;
    let edge = resolve_edge(&loaded, edge)?;
    let verdict = graphical_criterion(&loaded.graph, &edge)?;
    let report = GraphicalReport {
        graph: label_of(recognize(&loaded.graph, &edge).as_ref()),
        edge,
        verdict,
    };
    let stdout = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_rows(
            &["graph", "edge", "verdict"],
            [[
                report.graph.clone(),
                report.edge.to_string(),
                format!("{:?}", report.verdict),
            ]],
        )?,
        Format::Text => format!("{} {}: {:?}\n", report.graph, report.edge, report.verdict),
    };
    Ok(Output::ok(stdout))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub index: u64,
    pub drift: Matrix,
    pub diffusion: Vec<f64>,
    pub sigma: LabeledCovariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub graph: String,
    pub nodes: Vec<String>,
    pub seed: u64,
    pub drift_range: (f64, f64),
    pub diffusion_range: (f64, f64),
    pub zero_tol: f64,
    pub samples: Vec<SampleEntry>,
}

pub fn cmd_sample(graph: &str, n: usize, flags: &SamplerFlags, format: Format) -> Result<Output> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let loaded = load_graph(graph)?;
    let g = &loaded.graph;
    let cfg = flags.config()?.for_samples(n as u64);
    let draws = sample_many(g, &cfg, n)?;
    let nodes = owned_names(g);
    let report = SampleReport {
        graph: label_of(loaded.target.as_ref().and_then(|t| recognize(g, t)).as_ref()),
        nodes: nodes.clone(),
        seed: cfg.seed,
        drift_range: cfg.drift_range,
        diffusion_range: cfg.diffusion_range,
        zero_tol: cfg.zero_tol,
        samples: draws
            .into_iter()
            .map(|d| SampleEntry {
                index: d.index,
                drift: d.model.drift().clone(),
                diffusion: d.model.diffusion().to_vec(),
                sigma: LabeledCovariance::new(nodes.clone(), &d.sigma),
            })
            .collect(),
    };
    let stdout = match format {
        Format::Json => to_json(&report)?,
        // Covariance blocks in the header-less layout `classify` reads.
        Format::Csv => report
            .samples
            .iter()
            .map(|e| {
                e.sigma
                    .sigma
                    .iter()
                    .map(|row| row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n")
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "graph {} ({}), seed {}", report.graph, nodes.join(", "), report.seed)?;
            for e in &report.samples {
                writeln!(s, "\nsample {}", e.index)?;
                let nonzero: Vec<String> = g
                    .edge_indices()
                    .map(|(src, t)| format!("{} {:.6}", g.edge_ref((src, t)), e.drift.get(t, src)))
                    .collect();
                writeln!(s, "  drift:     {}", nonzero.join(", "))?;
                let diff: Vec<String> = e.diffusion.iter().map(|d| format!("{d:.6}")).collect();
                writeln!(s, "  diffusion: {}", diff.join(", "))?;
                writeln!(s, "  sigma:")?;
                for row in &e.sigma.sigma {
                    let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
                    writeln!(s, "   {}", cells.join(" "))?;
                }
            }
            s
        }
    };
    Ok(Output::ok(stdout))
}

pub struct Table1Run {
    pub output: Output,
    pub low_n: bool,
    pub wall_time_s: f64,
}

pub fn cmd_table1(n: u64, proxies: &[(char, String)], flags: &SamplerFlags, format: Format) -> Result<Table1Run> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let mut extras = Vec::with_capacity(proxies.len());
    for (column, path) in proxies {
        let reference =
            proxy_reference(*column).ok_or_else(|| anyhow!("proxy column must be g, h or i, got `{column}`"))?;
        let loaded = load_graph(path)?;
        let target = loaded
            .target
            .clone()
            .with_context(|| format!("{path}: proxy graphs must declare target_edge"))?;
        extras.push(ExtraColumn {
            column: *column,
            label: format!("proxy-{column}"),
            graph: loaded.graph,
            target,
            reference,
        });
    }
    let start = Instant::now();
    let mut table = reproduce_table1_with(&flags.config()?, n, &extras)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    table.strip_timing();
    let stdout = match format {
        Format::Json => to_json(&table)?,
        Format::Csv => table.to_csv()?,
        Format::Text => render_table1(&table)?,
    };
    let code = if table.all_pass() { 0 } else { EXIT_TABLE_MISMATCH };
    Ok(Table1Run {
        output: Output { stdout, code },
        low_n: table.low_n,
        wall_time_s,
    })
}

fn render_table1(t: &Table1) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "n = {}, seed = {}", t.n, t.seed)?;
    writeln!(
        s,
        "{:<4} {:<14} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8}  result",
        "col", "graph", "accepted", "non-id", "fraction", "reference", "delta", "tol"
    )?;
    for r in &t.rows {
        let c = &r.report.counts;
        let opt = |v: Option<f64>, w: usize| v.map_or_else(|| format!("{:>w$}", "-"), |x| format!("{x:>w$.4}"));
        writeln!(
            s,
            "({})  {:<14} {:>9} {:>9} {} {:>9.2} {} {:>8.4}  {}",
            r.column,
            r.graph,
            c.accepted,
            c.non_identifiable,
            opt(r.fraction, 9),
            r.reference,
            opt(r.delta, 8),
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        )?;
    }
    let disagreements: usize = t.rows.iter().map(|r| r.report.disagreements.len()).sum();
    let boundary: u64 = t.rows.iter().map(|r| r.report.counts.boundary).sum();
    writeln!(
        s,
        "engine disagreements: {disagreements}, boundary verdicts: {boundary}"
    )?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub graph: CatalogId,
    pub edge: EdgeRef,
    /// Catalog role name to the user's node name.
    pub roles: BTreeMap<String, String>,
    pub check: ClosedFormCheck,
}

pub fn cmd_explain(graph: &str, sigma: &Path, edge: Option<&EdgeRef>, format: Format) -> Result<Output> {
    let loaded = load_graph(graph)?;
    let edge = resolve_edge(&loaded, edge)?;
    let g = &loaded.graph;
    let m = recognize(g, &edge)
        .ok_or_else(|| anyhow!("closed forms exist only for the catalog structures; this graph is not one"))?;
    let entry = catalog::entry(m.id);
    let roles: BTreeMap<String, String> = entry
        .graph
        .node_names()
        .iter()
        .zip(&m.order)
        .map(|(role, &v)| (role.to_string(), g.name(v).to_string()))
        .collect();
    let check = if g.has_latent() {
        let observed: Vec<&str> = g
            .nodes()
            .iter()
            .filter(|n| !n.latent)
            .map(|n| n.name.as_str())
            .collect();
        let s = load_sigma(sigma, &observed)?;
        let pos = |role: &str| observed.iter().position(|n| *n == roles[role]);
        let order = ["Z", "X", "Y"]
            .into_iter()
            .map(pos)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| anyhow!("latent nodes present: only a hidden H has an observed-only closed form"))?;
        observed_iv_check(m.id, &s.permuted(&order))?
    } else {
        let s = load_sigma(sigma, &g.node_names())?;
        closed_form_check(m.id, &s.permuted(&m.order))?
    };
    let report = ExplainReport {
        graph: m.id,
        edge,
        roles,
        check,
    };
    let stdout = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let values: Vec<(String, String)> = match &report.check {
                ClosedFormCheck::Sign { sign, branch_ratio, .. } => {
                    std::iter::once(("sign".to_string(), format!("{sign:?}")))
                        .chain(branch_ratio.map(|r| ("branch_ratio".to_string(), format!("{r:?}"))))
                        .collect()
                }
                ClosedFormCheck::Conditions(rep) => rep
                    .values
                    .iter()
                    .map(|(k, v)| (k.clone(), format!("{v:?}")))
                    .chain(std::iter::once(("verdict".to_string(), format!("{:?}", rep.verdict))))
                    .collect(),
            };
            csv_rows(
                &["graph", "quantity", "value"],
                values.into_iter().map(|(k, v)| [report.graph.to_string(), k, v]),
            )?
        }
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "graph: {} ({})", report.graph, report.edge)?;
            let roles: Vec<String> = report.roles.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(s, "roles: {}", roles.join(", "))?;
            render_check(&mut s, &report.check)?;
            s
        }
    };
    Ok(Output::ok(stdout))
}
