//! `cyberquote` — price cyber-insurance cover from an organization model,
//! a maturity model, and per-layer assessments.
//!
//! Exit codes: 0 success, 1 validation errors, 2 parse/format errors,
//! 3 numerical errors, 4 usage errors. Reports go to stdout, diagnostics
//! to stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cyberquote::claims::{self, ClaimsError};
use cyberquote::erd;
use cyberquote::maturity::{self, AssessorRole, LayerAssessment, MaturityError, MuRecord};
use cyberquote::org::OrgModel;
use cyberquote::pricing::{self, LayerEconomics, PricingError, Scenario, UtilitySpec};
use cyberquote::report::Warning;
use cyberquote::sim::{self, ScenarioBlock, SimError};

/// Configuration precedence: command-line flags override values found in
/// input files, which override defaults (`CYBERQUOTE_SEED`, then 0, for
/// the seed).
#[derive(Parser)]
#[command(name = "cyberquote", version, about, long_about = None)]
struct Cli {
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Text)]
    output: OutputMode,
    /// Escalate the coverage-constraint warning to an error and reject
    /// negative degradations in scenario files.
    #[arg(long, global = true)]
    strict: bool,
    /// RNG seed; overrides any seed in input files and CYBERQUOTE_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an organization model and report validation diagnostics.
    Validate {
        /// Organization model (.org) file.
        org: PathBuf,
    },
    /// Render an organization model as Graphviz DOT.
    ExportDot {
        /// Organization model (.org) file.
        org: PathBuf,
        /// Write the DOT text here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce layer assessments to maturity-function records.
    Assess {
        /// Maturity model CSV (id,domain,level,description).
        #[arg(long)]
        model: PathBuf,
        /// Assessment files, one per layer.
        #[arg(long, value_delimiter = ',', required = true)]
        assess: Vec<PathBuf>,
        /// Only count practices up to this level (default: all levels).
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Price a three-layer quote.
    Quote {
        #[arg(long)]
        org: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Exactly three assessment files, one per layer.
        #[arg(long, value_delimiter = ',', required = true)]
        assess: Vec<PathBuf>,
        /// Economics CSV (layer,v,alpha,beta,gamma,lambda_c,lambda_s,kappa,c_bar,s_bar).
        #[arg(long)]
        econ: PathBuf,
        /// Scenario CSV (delta_c,delta_s,weight) or distribution block.
        #[arg(long)]
        scenarios: PathBuf,
        /// `linear` or `cara,a=<coefficient>`.
        #[arg(long, default_value = "linear")]
        utility: String,
    },
    /// Re-assess after an incident and settle claims.
    Adjust {
        #[arg(long)]
        org: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        assess: Vec<PathBuf>,
        #[arg(long)]
        econ: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value = "linear")]
        utility: String,
        /// Claims CSV (layer,claimed_amount,delta_c,delta_s).
        #[arg(long)]
        claims: PathBuf,
        /// Adjuster assessment files, one per claimed layer.
        #[arg(long, value_delimiter = ',', required = true)]
        adjuster_assess: Vec<PathBuf>,
    },
    /// Monte Carlo loss distribution for one layer.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Assessment file for the simulated layer.
        #[arg(long)]
        assess: PathBuf,
        #[arg(long)]
        econ: PathBuf,
        /// Distribution block file:
        /// `dist_c=<spec>;dist_s=<spec>;n=<int>;seed=<int>`.
        #[arg(long)]
        scenarios: PathBuf,
        /// Worker threads for draw evaluation; results are identical for
        /// any worker count.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

enum AppError {
    Validation(String),
    Format(String),
    Numerical(String),
    Usage(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Format(_) => 2,
            AppError::Numerical(_) => 3,
            AppError::Usage(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Validation(m)
            | AppError::Format(m)
            | AppError::Numerical(m)
            | AppError::Usage(m) => m,
        }
    }
}

impl From<MaturityError> for AppError {
    fn from(err: MaturityError) -> Self {
        match err {
            MaturityError::Format { .. } => AppError::Format(err.to_string()),
            _ => AppError::Validation(err.to_string()),
        }
    }
}

impl From<PricingError> for AppError {
    fn from(err: PricingError) -> Self {
        match err {
            PricingError::NonConvergence(_) | PricingError::Overflow(_) => {
                AppError::Numerical(err.to_string())
            }
            _ => AppError::Validation(err.to_string()),
        }
    }
}

impl From<ClaimsError> for AppError {
    fn from(err: ClaimsError) -> Self {
        match err {
            ClaimsError::Format { .. } => AppError::Format(err.to_string()),
            _ => AppError::Validation(err.to_string()),
        }
    }
}

impl From<SimError> for AppError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Pricing(inner) => inner.into(),
            SimError::Maturity(inner) => inner.into(),
            _ => AppError::Validation(err.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_org_file(path: &Path) -> Result<OrgModel, AppError> {
    erd::parse_org(&read_file(path)?).map_err(|e| {
        AppError::Format(format!(
            "{}:{}:{}: expected {}, found {}",
            path.display(),
            e.line,
            e.column,
            e.expected,
            e.found
        ))
    })
}

/// Validate an org model and fail on errors; warnings go to stderr.
fn require_valid_org(path: &Path) -> Result<OrgModel, AppError> {
    let model = parse_org_file(path)?;
    let report = model.validate();
    for warning in report.warnings() {
        eprintln!("warning: {}: {}", warning.code, warning.message);
    }
    if report.error_count() > 0 {
        for error in report.errors() {
            eprintln!("error: {}: {}", error.code, error.message);
        }
        return Err(AppError::Validation(format!(
            "{}: {} validation error(s)",
            path.display(),
            report.error_count()
        )));
    }
    Ok(model)
}

fn load_model(path: &Path) -> Result<maturity::MaturityModelSpec, AppError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "maturity-model".to_string());
    Ok(maturity::load_maturity_model(&name, &read_file(path)?)?)
}

fn load_assessment(path: &Path) -> Result<LayerAssessment, AppError> {
    maturity::parse_assessment(&read_file(path)?)
        .map_err(|e| AppError::Format(format!("{}: {e}", path.display())))
}

/// Reduce one assessment file to its maturity record, resolving a
/// domain-objective matrix path relative to the assessment file.
fn mu_for(
    path: &Path,
    model: &maturity::MaturityModelSpec,
    max_level: u32,
    warnings: &mut Vec<Warning>,
) -> Result<(LayerAssessment, MuRecord), AppError> {
    let assessment = load_assessment(path)?;
    let (record, w) = maturity::mu(&assessment, model, max_level)?;
    warnings.extend(w);
    Ok((assessment, record))
}

fn print_warnings(warnings: &[Warning]) {
    for warning in warnings {
        eprintln!("warning: {}: {}", warning.code, warning.message);
    }
}

fn emit<T: Serialize>(mode: OutputMode, document: &T, text: impl FnOnce()) {
    match mode {
        OutputMode::Structured => {
            println!("{}", serde_json::to_string_pretty(document).unwrap())
        }
        OutputMode::Text => text(),
    }
}

#[derive(Serialize)]
struct ValidateDoc<'a> {
    command: &'static str,
    file: String,
    name: &'a str,
    entities: usize,
    relationships: usize,
    errors: Vec<DiagnosticDoc>,
    warnings: Vec<DiagnosticDoc>,
}

#[derive(Serialize)]
struct DiagnosticDoc {
    code: String,
    message: String,
}

fn cmd_validate(mode: OutputMode, org: &Path) -> Result<(), AppError> {
    let model = parse_org_file(org)?;
    let report = model.validate();
    let to_doc = |d: &cyberquote::org::Diagnostic| DiagnosticDoc {
        code: d.code.clone(),
        message: d.message.clone(),
    };
    let doc = ValidateDoc {
        command: "validate",
        file: org.display().to_string(),
        name: &model.name,
        entities: model.entities.len(),
        relationships: model.relationships.len(),
        errors: report.errors().map(to_doc).collect(),
        warnings: report.warnings().map(to_doc).collect(),
    };
    emit(mode, &doc, || {
        println!(
            "{}: \"{}\": {} entities, {} relationships",
            doc.file, doc.name, doc.entities, doc.relationships
        );
        for d in &doc.errors {
            println!("error: {}: {}", d.code, d.message);
        }
        for d in &doc.warnings {
            println!("warning: {}: {}", d.code, d.message);
        }
        println!("{} errors, {} warnings", doc.errors.len(), doc.warnings.len());
    });
    if report.error_count() > 0 {
        return Err(AppError::Validation(format!(
            "{}: {} validation error(s)",
            org.display(),
            report.error_count()
        )));
    }
    Ok(())
}

fn cmd_export_dot(org: &Path, out: Option<&Path>) -> Result<(), AppError> {
    let model = require_valid_org(org)?;
    let dot = erd::export_dot(&model);
    match out {
        Some(path) => std::fs::write(path, dot)
            .map_err(|e| AppError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{dot}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct AssessDoc {
    command: &'static str,
    records: Vec<MuRecord>,
    warnings: Vec<Warning>,
}

fn cmd_assess(
    mode: OutputMode,
    model: &Path,
    assess: &[PathBuf],
    max_level: Option<u32>,
) -> Result<(), AppError> {
    let spec = load_model(model)?;
    let max_level = max_level.unwrap_or(spec.num_levels);
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for path in assess {
        let (_, record) = mu_for(path, &spec, max_level, &mut warnings)?;
        records.push(record);
    }
    records.sort_by_key(|r| r.layer.index());
    let doc = AssessDoc {
        command: "assess",
        records,
        warnings,
    };
    emit(mode, &doc, || {
        for r in &doc.records {
            println!(
                "layer {}: p_bar={:.6} o={:.6} m={:.6}",
                r.layer.index(),
                r.p_bar,
                r.o,
                r.m
            );
            for (domain, coverage) in &r.domain_coverage {
                println!("  {domain}: {coverage:.6}");
            }
        }
    });
    print_warnings(&doc.warnings);
    Ok(())
}

/// Shared front half of `quote` and `adjust`: validate the org, reduce the
/// assessments, load economics and scenarios, and price the three layers.
struct PricedQuote {
    mu: BTreeMap<u8, MuRecord>,
    econ: BTreeMap<u8, LayerEconomics>,
    quote: pricing::Quote,
}

#[allow(clippy::too_many_arguments)]
fn price(
    org: &Path,
    model: &Path,
    assess: &[PathBuf],
    econ: &Path,
    scenarios: &Path,
    utility: &str,
    strict: bool,
) -> Result<PricedQuote, AppError> {
    require_valid_org(org)?;
    let spec = load_model(model)?;
    let utility = UtilitySpec::parse(utility).map_err(|e| AppError::Usage(e.to_string()))?;
    let mut warnings = Vec::new();
    let mut mu = BTreeMap::new();
    for path in assess {
        let (_, record) = mu_for(path, &spec, spec.num_levels, &mut warnings)?;
        if mu.insert(record.layer.index(), record).is_some() {
            return Err(AppError::Validation(format!(
                "{}: duplicate assessment for one layer",
                path.display()
            )));
        }
    }
    print_warnings(&warnings);
    let econ_rows = pricing::load_economics(&read_file(econ)?)
        .map_err(|e| AppError::Format(format!("{}: {e}", econ.display())))?;
    let econ: BTreeMap<u8, LayerEconomics> = econ_rows
        .into_iter()
        .map(|row| (row.layer.index(), row))
        .collect();
    let scenario_rows = pricing::load_scenarios(&read_file(scenarios)?, strict)
        .map_err(|e| AppError::Format(format!("{}: {e}", scenarios.display())))?;
    let inputs: Vec<_> = mu
        .iter()
        .filter_map(|(index, record)| {
            econ.get(index)
                .map(|e| (record.clone(), e.clone(), scenario_rows.clone()))
        })
        .collect();
    let quote = pricing::quote(&inputs, &utility)?;
    Ok(PricedQuote { mu, econ, quote })
}

#[derive(Serialize)]
struct QuoteDoc {
    command: &'static str,
    quote: pricing::Quote,
}

fn print_quote_text(quote: &pricing::Quote) {
    for layer in &quote.layers {
        let rate = layer
            .rate
            .map(|r| format!("{r:.6}"))
            .unwrap_or_else(|| "n/a".to_string());
        println!(
            "layer {}: pi={:.6} expected_loss={} premium={} rate={} limit={}",
            layer.layer.index(),
            layer.pi,
            layer.expected_loss,
            layer.premium,
            rate,
            layer.limit
        );
    }
    println!("total premium {}", quote.total_premium);
}

/// Fail under --strict if any coverage-constraint warning was raised.
fn enforce_strict(strict: bool, warnings: &[Warning]) -> Result<(), AppError> {
    if !strict {
        return Ok(());
    }
    match warnings.iter().find(|w| w.code == "coverage-constraint") {
        Some(w) => Err(AppError::Validation(format!("strict: {}", w.message))),
        None => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_quote(
    mode: OutputMode,
    strict: bool,
    org: &Path,
    model: &Path,
    assess: &[PathBuf],
    econ: &Path,
    scenarios: &Path,
    utility: &str,
) -> Result<(), AppError> {
    let priced = price(org, model, assess, econ, scenarios, utility, strict)?;
    let doc = QuoteDoc {
        command: "quote",
        quote: priced.quote,
    };
    emit(mode, &doc, || print_quote_text(&doc.quote));
    print_warnings(&doc.quote.warnings);
    enforce_strict(strict, &doc.quote.warnings)
}

#[derive(Serialize)]
struct AdjustDoc {
    command: &'static str,
    quote: pricing::Quote,
    settlements: Vec<claims::Settlement>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_adjust(
    mode: OutputMode,
    strict: bool,
    org: &Path,
    model: &Path,
    assess: &[PathBuf],
    econ: &Path,
    scenarios: &Path,
    utility: &str,
    claims_path: &Path,
    adjuster_assess: &[PathBuf],
) -> Result<(), AppError> {
    let priced = price(org, model, assess, econ, scenarios, utility, strict)?;
    let spec = load_model(model)?;
    let mut warnings = Vec::new();
    let mut mu_prime = BTreeMap::new();
    for path in adjuster_assess {
        let (assessment, record) = mu_for(path, &spec, spec.num_levels, &mut warnings)?;
        if assessment.role != AssessorRole::Adjuster {
            return Err(AppError::Validation(format!(
                "{}: adjuster assessment must declare role=adjuster",
                path.display()
            )));
        }
        mu_prime.insert(record.layer.index(), record);
    }
    let claim_rows = claims::load_claims(&read_file(claims_path)?)
        .map_err(|e| AppError::Format(format!("{}: {e}", claims_path.display())))?;
    let mut settlements = Vec::new();
    for claim in &claim_rows {
        let index = claim.layer.index();
        let missing = |what: &str| {
            AppError::Validation(format!("claim on layer {index}: no {what} for that layer"))
        };
        let mu = priced.mu.get(&index).ok_or_else(|| missing("assessment"))?;
        let econ = priced.econ.get(&index).ok_or_else(|| missing("economics"))?;
        let prime = mu_prime
            .get(&index)
            .ok_or_else(|| missing("adjuster assessment"))?;
        let observed = Scenario {
            delta_c: claim.observed_delta_c,
            delta_s: claim.observed_delta_s,
            weight: 1.0,
        };
        let priced_loss = pricing::layer_loss(econ, mu, &observed);
        let adjusted = claims::adjust_losses(prime, econ, claim);
        let settlement = claims::settle(claim, adjusted, mu, econ, priced_loss)?;
        warnings.extend(settlement.warnings.clone());
        settlements.push(settlement);
    }
    let doc = AdjustDoc {
        command: "adjust",
        quote: priced.quote,
        settlements,
    };
    emit(mode, &doc, || {
        print_quote_text(&doc.quote);
        for s in &doc.settlements {
            println!(
                "layer {}: adjusted_loss={} ratio={:.6} payout={} limit={}",
                s.layer.index(),
                s.adjusted_loss,
                s.ratio,
                s.payout,
                s.limit
            );
        }
    });
    print_warnings(&doc.quote.warnings);
    print_warnings(&warnings);
    enforce_strict(strict, &doc.quote.warnings)
}

#[derive(Serialize)]
struct SimulateDoc {
    command: &'static str,
    layer: u8,
    result: sim::SimResult,
}

fn cmd_simulate(
    mode: OutputMode,
    seed_flag: Option<u64>,
    model: &Path,
    assess: &Path,
    econ: &Path,
    scenarios: &Path,
    workers: usize,
) -> Result<(), AppError> {
    if workers == 0 {
        return Err(AppError::Usage("--workers must be at least 1".to_string()));
    }
    let spec = load_model(model)?;
    let mut warnings = Vec::new();
    let (_, record) = mu_for(assess, &spec, spec.num_levels, &mut warnings)?;
    print_warnings(&warnings);
    let econ_rows = pricing::load_economics(&read_file(econ)?)
        .map_err(|e| AppError::Format(format!("{}: {e}", econ.display())))?;
    let layer_econ = econ_rows
        .iter()
        .find(|row| row.layer == record.layer)
        .ok_or_else(|| {
            AppError::Validation(format!("no economics row for layer {}", record.layer))
        })?;
    let block = ScenarioBlock::parse(read_file(scenarios)?.trim())
        .map_err(|e| AppError::Format(format!("{}: {e}", scenarios.display())))?;
    // Seed precedence: --seed flag, then the block file, then CYBERQUOTE_SEED.
    let seed = seed_flag.or(block.seed).or_else(env_seed).unwrap_or(0);
    let config = sim::SimConfig { n: block.n, seed };
    let result = sim::simulate_losses_with_workers(
        layer_econ,
        &record,
        &block.dist_c,
        &block.dist_s,
        &config,
        workers,
    )?;
    let doc = SimulateDoc {
        command: "simulate",
        layer: record.layer.index(),
        result,
    };
    emit(mode, &doc, || {
        let r = &doc.result;
        println!(
            "layer {}: n={} seed={} generator={}",
            doc.layer, r.n, r.seed, r.generator
        );
        println!("mean={} sd={}", r.mean, r.sd);
        for q in &r.quantiles {
            println!("q{:.2}={}", q.p, q.value);
        }
    });
    Ok(())
}

fn env_seed() -> Option<u64> {
    std::env::var("CYBERQUOTE_SEED").ok()?.trim().parse().ok()
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mode = cli.output;
    match &cli.command {
        Command::Validate { org } => cmd_validate(mode, org),
        Command::ExportDot { org, out } => cmd_export_dot(org, out.as_deref()),
        Command::Assess {
            model,
            assess,
            max_level,
        } => cmd_assess(mode, model, assess, *max_level),
        Command::Quote {
            org,
            model,
            assess,
            econ,
            scenarios,
            utility,
        } => cmd_quote(mode, cli.strict, org, model, assess, econ, scenarios, utility),
        Command::Adjust {
            org,
            model,
            assess,
            econ,
            scenarios,
            utility,
            claims,
            adjuster_assess,
        } => cmd_adjust(
            mode,
            cli.strict,
            org,
            model,
            assess,
            econ,
            scenarios,
            utility,
            claims,
            adjuster_assess,
        ),
        Command::Simulate {
            model,
            assess,
            econ,
            scenarios,
            workers,
        } => cmd_simulate(mode, cli.seed, model, assess, econ, scenarios, *workers),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(4);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
