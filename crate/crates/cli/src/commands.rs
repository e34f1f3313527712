//! Command drivers, generic over the scalar mode. Rational mode runs the
//! exact pipeline end to end; float mode runs `f64` families with complex
//! nodes. All outputs are deterministic for a fixed config and seed.

use std::sync::Arc;

use serde::Serialize;

use mvopr::darboux::{
    build_sample_matrices, christoffel_transform, kernel_check, node_count_diagnostics, poisedness,
    realize_real, resolvent_band_identities, resolvent_via_two_choleskys,
    sigma_factorization_check, verify_against_oracle, BandReport, DarbouxSpec, NodeCountReport,
    NodeSet, Poisedness,
};
use mvopr::graded_basis::window_size;
use mvopr::io::{
    family_to_file, nodes_from_file, nodes_to_file, to_json_string, NodeFile, NodeFileEntry,
};
use mvopr::measures::{BoxMeasure, DiscreteMeasure, MomentFunctional};
use mvopr::mvopr::MVOPRFamily;
use mvopr::nodes::{search_poised, NodeSampling, SearchOptions};
use mvopr::poly::MPoly;
use mvopr::scalar::{Cx, Rat, Scalar};
use mvopr::{Error, Tolerances};

use crate::config::{MeasureSpec, NodesConfig, RunConfig, ScalarMode};

pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::SingularBlock { .. } | Error::SingularLeadingBlock => 2,
            Error::NotPoised { .. }
            | Error::BudgetExhausted { .. }
            | Error::NodeOffVariety { .. }
            | Error::RootFinding => 3,
            Error::InexactDivision { .. } => 4,
            _ => 5,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 5,
        message: message.into(),
    }
}

fn verification_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 4,
        message: message.into(),
    }
}

pub struct Flags {
    pub scalar: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub verify: bool,
}

pub enum CommandKind {
    Compute,
    Darboux,
    PoisedCheck,
    Verify,
    SampleNodes,
}

pub fn run(kind: CommandKind, config_path: &str, flags: &Flags) -> Result<Vec<String>, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let mode = cfg.scalar_mode(flags.scalar.as_deref())?;
    match mode {
        ScalarMode::Rational => run_mode::<Rat, Rat>(kind, &cfg, flags, "rational"),
        ScalarMode::Float => run_mode::<f64, Cx<f64>>(kind, &cfg, flags, "float"),
    }
}

fn run_mode<S, F>(
    kind: CommandKind,
    cfg: &RunConfig,
    flags: &Flags,
    scalar_name: &str,
) -> Result<Vec<String>, CliError>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    match kind {
        CommandKind::Compute => cmd_compute::<S>(cfg, flags, scalar_name),
        CommandKind::Darboux => cmd_darboux::<S, F>(cfg, flags, scalar_name),
        CommandKind::PoisedCheck => cmd_poised_check::<S, F>(cfg, flags),
        CommandKind::Verify => cmd_verify::<S, F>(cfg, flags, scalar_name),
        CommandKind::SampleNodes => cmd_sample_nodes::<S, F>(cfg, flags),
    }
}

fn build_measure<S: Scalar>(cfg: &RunConfig) -> Result<Arc<dyn MomentFunctional<S>>, Error> {
    match &cfg.measure {
        MeasureSpec::Box { bounds, weight } => {
            if bounds.len() != cfg.dimension {
                return Err(Error::DimensionMismatch {
                    expected: cfg.dimension,
                    got: bounds.len(),
                });
            }
            let parsed = bounds
                .iter()
                .map(|[a, b]| Ok((S::parse_literal(a)?, S::parse_literal(b)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            let w = match weight {
                Some(text) => MPoly::parse(text, cfg.dimension)?,
                None => MPoly::one(cfg.dimension),
            };
            Ok(Arc::new(BoxMeasure::new(parsed, w)?))
        }
        MeasureSpec::Discrete { points, weights } => {
            let pts = points
                .iter()
                .map(|p| p.iter().map(|lit| S::parse_literal(lit)).collect())
                .collect::<Result<Vec<Vec<S>>, Error>>()?;
            let ws = weights
                .iter()
                .map(|lit| S::parse_literal(lit))
                .collect::<Result<Vec<S>, Error>>()?;
            Ok(Arc::new(DiscreteMeasure::new(pts, ws)?))
        }
    }
}

fn build_spec<S: Scalar>(cfg: &RunConfig) -> Result<DarbouxSpec<S>, CliError> {
    let Some(darboux) = &cfg.darboux else {
        return Err(config_error("config has no darboux section"));
    };
    let factors = darboux
        .factors
        .iter()
        .map(|f| Ok((MPoly::parse(&f.poly, cfg.dimension)?, f.power)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(DarbouxSpec::new(factors)?)
}

fn compute_family<S: Scalar>(
    cfg: &RunConfig,
    tols: &Tolerances,
) -> Result<MVOPRFamily<S>, CliError> {
    let measure = build_measure::<S>(cfg)?;
    if measure.dimension() != cfg.dimension {
        return Err(config_error(format!(
            "measure dimension {} != configured dimension {}",
            measure.dimension(),
            cfg.dimension
        )));
    }
    Ok(MVOPRFamily::compute(
        measure,
        cfg.max_degree,
        tols.singular,
    )?)
}

/// Validates `L ≥ k + m` for every requested transform degree, naming the
/// needed truncation instead of silently truncating.
fn validate_degrees(cfg: &RunConfig, m: usize) -> Result<Vec<usize>, CliError> {
    let degrees = cfg.requested_degrees();
    for &k in &degrees {
        if k + m > cfg.max_degree {
            return Err(config_error(format!(
                "degree k={k} with deg Q={m} needs max_degree >= {}, have {}",
                k + m,
                cfg.max_degree
            )));
        }
    }
    Ok(degrees)
}

struct ObtainedNodes<F: Scalar> {
    nodes: NodeSet<F>,
    verdict: Poisedness,
    draws: usize,
}

fn obtain_nodes<S, F>(
    fam: &MVOPRFamily<S>,
    spec: &DarbouxSpec<S>,
    cfg: &RunConfig,
    k: usize,
    seed_override: Option<u64>,
    tols: &Tolerances,
) -> Result<ObtainedNodes<F>, CliError>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let source = cfg.nodes.clone().unwrap_or(NodesConfig::Auto {
        budget: None,
        seed: None,
        orders: None,
    });
    match source {
        NodesConfig::Auto {
            budget,
            seed,
            orders,
        } => {
            let opts = SearchOptions {
                budget: budget.unwrap_or(50),
                allowed_orders: orders,
            };
            let base_seed = seed_override.or(seed).unwrap_or(0);
            let found =
                search_poised::<S, F>(fam, spec, k, &opts, base_seed.wrapping_add(k as u64), tols)?;
            Ok(ObtainedNodes {
                nodes: found.nodes,
                verdict: found.verdict,
                draws: found.draws,
            })
        }
        NodesConfig::File { path } => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| config_error(format!("cannot read nodes {path}: {e}")))?;
            let file: NodeFile = serde_json::from_str(&text)
                .map_err(|e| config_error(format!("nodes {path}: {e}")))?;
            let nodes: NodeSet<F> = nodes_from_file(&file)?;
            let expected = window_size(cfg.dimension, k, spec.total_degree())?;
            if nodes.len() != expected {
                return Err(config_error(format!(
                    "node file has {} entries, degree k={k} needs r = {expected}",
                    nodes.len()
                )));
            }
            let samples = build_sample_matrices(fam, spec, &nodes, k, tols)?;
            let verdict = poisedness(&samples.sigma, tols);
            Ok(ObtainedNodes {
                nodes,
                verdict,
                draws: 0,
            })
        }
    }
}

fn write_output(path: &str, text: &str) -> Result<(), CliError> {
    if let Some(parent) = std::path::Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| config_error(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| config_error(format!("cannot write {path}: {e}")))
}

fn cmd_compute<S: Scalar>(
    cfg: &RunConfig,
    flags: &Flags,
    scalar_name: &str,
) -> Result<Vec<String>, CliError> {
    let tols = cfg.tolerances()?;
    let fam = compute_family::<S>(cfg, &tols)?;
    let file = family_to_file(&fam, scalar_name);
    let path = flags
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_path(|o| o.family.as_ref(), "family.json"));
    write_output(&path, &to_json_string(&file))?;
    Ok(vec![
        format!(
            "family: D={} L={} scalar={scalar_name}",
            cfg.dimension, cfg.max_degree
        ),
        format!("family written: {path}"),
    ])
}

#[derive(Serialize)]
struct TransformFile {
    format: String,
    dimension: usize,
    max_degree: usize,
    scalar: String,
    q: String,
    degrees: Vec<TransformDegree>,
}

#[derive(Serialize)]
struct TransformDegree {
    k: usize,
    draws: usize,
    poisedness: Poisedness,
    nodes: Vec<NodeFileEntry>,
    polynomials: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_deviation: Option<f64>,
}

fn cmd_darboux<S, F>(
    cfg: &RunConfig,
    flags: &Flags,
    scalar_name: &str,
) -> Result<Vec<String>, CliError>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let tols = cfg.tolerances()?;
    let spec = build_spec::<S>(cfg)?;
    let degrees = validate_degrees(cfg, spec.total_degree())?;
    let fam = compute_family::<S>(cfg, &tols)?;

    let mut lines = Vec::new();
    let mut out_degrees = Vec::new();
    let mut worst_deviation = 0.0f64;
    for &k in &degrees {
        let obtained = obtain_nodes::<S, F>(&fam, &spec, cfg, k, flags.seed, &tols)?;
        if !obtained.verdict.poised {
            return Err(CliError {
                code: 3,
                message: format!(
                    "node set for k={k} is not poised ({})",
                    obtained.verdict.certificate
                ),
            });
        }
        let tp = christoffel_transform(&fam, &spec, &obtained.nodes, k, &tols)?;
        let (realized, _) = realize_real::<S, F>(&tp, &tols)?;
        let deviation = flags
            .verify
            .then(|| verify_against_oracle(&fam, &spec, &obtained.nodes, k, &tols))
            .transpose()?;
        if let Some(dev) = deviation {
            worst_deviation = worst_deviation.max(dev);
            lines.push(format!("k={k}: oracle deviation {dev:e}"));
        }
        lines.push(format!(
            "k={k}: poised after {} draw(s); {}",
            obtained.draws, obtained.verdict.certificate
        ));
        out_degrees.push(TransformDegree {
            k,
            draws: obtained.draws,
            poisedness: obtained.verdict,
            nodes: nodes_to_file(&obtained.nodes, cfg.dimension).nodes,
            polynomials: realized.iter().map(|p| p.to_string()).collect(),
            oracle_deviation: deviation,
        });
    }

    let file = TransformFile {
        format: "mvopr-darboux/1".into(),
        dimension: cfg.dimension,
        max_degree: cfg.max_degree,
        scalar: scalar_name.into(),
        q: spec.q().to_string(),
        degrees: out_degrees,
    };
    let path = flags
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_path(|o| o.transformed.as_ref(), "transformed.json"));
    write_output(&path, &to_json_string(&file))?;
    lines.push(format!("transformed written: {path}"));
    if flags.verify && worst_deviation > tols.residual {
        return Err(verification_error(format!(
            "oracle deviation {worst_deviation:e} exceeds tolerance {:e}",
            tols.residual
        )));
    }
    Ok(lines)
}

#[derive(Serialize)]
struct PoisedFile {
    format: String,
    degrees: Vec<PoisedDegree>,
}

#[derive(Serialize)]
struct PoisedDegree {
    k: usize,
    expected_nodes: usize,
    poisedness: Poisedness,
    counts: NodeCountReport,
    nodes: Vec<NodeFileEntry>,
}

fn cmd_poised_check<S, F>(cfg: &RunConfig, flags: &Flags) -> Result<Vec<String>, CliError>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let tols = cfg.tolerances()?;
    let spec = build_spec::<S>(cfg)?;
    let degrees = validate_degrees(cfg, spec.total_degree())?;
    let fam = compute_family::<S>(cfg, &tols)?;

    let mut lines = Vec::new();
    let mut out = Vec::new();
    let mut all_poised = true;
    for &k in &degrees {
        let obtained = obtain_nodes::<S, F>(&fam, &spec, cfg, k, flags.seed, &tols)?;
        let counts = node_count_diagnostics(&spec, &obtained.nodes, k)?;
        all_poised &= obtained.verdict.poised;
        lines.push(format!(
            "k={k}: poised: {}, {}",
            obtained.verdict.poised, obtained.verdict.certificate
        ));
        for warning in &counts.warnings {
            lines.push(format!("k={k}: warning: {warning}"));
        }
        out.push(PoisedDegree {
            k,
            expected_nodes: window_size(cfg.dimension, k, spec.total_degree())?,
            poisedness: obtained.verdict,
            counts,
            nodes: nodes_to_file(&obtained.nodes, cfg.dimension).nodes,
        });
    }
    let path = flags
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_path(|o| o.report.as_ref(), "report.json"));
    write_output(
        &path,
        &to_json_string(&PoisedFile {
            format: "mvopr-poised/1".into(),
            degrees: out,
        }),
    )?;
    lines.push(format!("report written: {path}"));
    if !all_poised {
        return Err(CliError {
            code: 3,
            message: "one or more node sets are not poised".into(),
        });
    }
    Ok(lines)
}

#[derive(Serialize)]
struct VerifyFile {
    format: String,
    scalar: String,
    q: String,
    band: BandReport,
    degrees: Vec<VerifyDegree>,
    max_violation: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyDegree {
    k: usize,
    poisedness: Poisedness,
    kernel_residual: f64,
    sigma_factorization: f64,
    oracle_deviation: f64,
    nodes: Vec<NodeFileEntry>,
}

fn cmd_verify<S, F>(
    cfg: &RunConfig,
    flags: &Flags,
    scalar_name: &str,
) -> Result<Vec<String>, CliError>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let tols = cfg.tolerances()?;
    let spec = build_spec::<S>(cfg)?;
    let degrees = validate_degrees(cfg, spec.total_degree())?;
    let fam = compute_family::<S>(cfg, &tols)?;
    let (res, tfam) = resolvent_via_two_choleskys(&fam, spec.q(), tols.singular)?;
    let band = resolvent_band_identities(&res, &fam, &tfam, spec.q());

    let mut lines = vec![format!(
        "identities: outside_band={:e} top_band={:e} diagonal={:e} lu={:e} ul={:e} det={:e}",
        band.outside_band, band.top_band, band.diagonal, band.lu, band.ul, band.determinant
    )];
    let mut max_violation = band.max_violation();
    let mut out = Vec::new();
    let mut all_poised = true;
    for &k in &degrees {
        let obtained = obtain_nodes::<S, F>(&fam, &spec, cfg, k, flags.seed, &tols)?;
        all_poised &= obtained.verdict.poised;
        let kernel = kernel_check(&res, &fam, &spec, &obtained.nodes, &tols)?;
        let sigma = sigma_factorization_check(&fam, &spec, &obtained.nodes, k, &tols)?;
        let deviation = if obtained.verdict.poised {
            verify_against_oracle(&fam, &spec, &obtained.nodes, k, &tols)?
        } else {
            f64::INFINITY
        };
        max_violation = max_violation.max(kernel).max(sigma).max(deviation);
        lines.push(format!(
            "k={k}: kernel={kernel:e} sigma_factorization={sigma:e} oracle_deviation={deviation:e}"
        ));
        out.push(VerifyDegree {
            k,
            poisedness: obtained.verdict,
            kernel_residual: kernel,
            sigma_factorization: sigma,
            oracle_deviation: deviation,
            nodes: nodes_to_file(&obtained.nodes, cfg.dimension).nodes,
        });
    }
    let passed = all_poised && max_violation <= tols.residual;
    let file = VerifyFile {
        format: "mvopr-verify/1".into(),
        scalar: scalar_name.into(),
        q: spec.q().to_string(),
        band,
        degrees: out,
        max_violation,
        tolerance: tols.residual,
        passed,
    };
    let path = flags
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_path(|o| o.report.as_ref(), "report.json"));
    write_output(&path, &to_json_string(&file))?;
    lines.push(format!("report written: {path}"));
    lines.push(format!(
        "verify: max violation {max_violation:e} (tolerance {:e})",
        tols.residual
    ));
    if !all_poised {
        return Err(CliError {
            code: 3,
            message: "verification aborted: node set not poised".into(),
        });
    }
    if !passed {
        return Err(verification_error(format!(
            "max violation {max_violation:e} exceeds tolerance {:e}",
            tols.residual
        )));
    }
    Ok(lines)
}

fn cmd_sample_nodes<S, F>(cfg: &RunConfig, flags: &Flags) -> Result<Vec<String>, CliError>
where
    S: Scalar,
    F: NodeSampling<S>,
{
    let tols = cfg.tolerances()?;
    let spec = build_spec::<S>(cfg)?;
    let degrees = validate_degrees(cfg, spec.total_degree())?;
    let k = degrees[0];
    let fam = compute_family::<S>(cfg, &tols)?;
    let obtained = obtain_nodes::<S, F>(&fam, &spec, cfg, k, flags.seed, &tols)?;
    let path = flags
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_path(|o| o.nodes.as_ref(), "nodes.json"));
    write_output(
        &path,
        &to_json_string(&nodes_to_file(&obtained.nodes, cfg.dimension)),
    )?;
    Ok(vec![
        format!(
            "k={k}: {} node(s) after {} draw(s); {}",
            obtained.nodes.len(),
            obtained.draws,
            obtained.verdict.certificate
        ),
        format!("nodes written: {path}"),
    ])
}
