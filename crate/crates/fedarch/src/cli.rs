//! The `fedarch` command line.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fedarch_core::catalog::{validate_catalog, CaseStudyId};
use fedarch_core::engine::{self, ProfileDelta, RequirementProfile};
use fedarch_core::validator::HypothesisFile;
use fedarch_core::{simulate, SimConfig};

use crate::io::{load_catalog, read_json, read_text, write_text, AppError};
use crate::validation::{subset, validate_parallel};

#[derive(Debug, Parser)]
#[command(name = "fedarch", version, about = "Federated learning architecture patterns: decide, simulate, validate")]
pub struct Cli {
    /// Catalog file; defaults to $FEDARCH_CATALOG, then the built-in catalog.
    #[arg(long, global = true, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Catalog checks and export.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Recommends patterns for a requirement profile.
    Decide {
        #[arg(long, value_name = "FILE")]
        profile: PathBuf,
        /// Also write a markdown decision record here.
        #[arg(long, value_name = "OUT")]
        adr: Option<PathBuf>,
        /// Write the recommendation here instead of stdout.
        #[arg(long, value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Compares the recommendation before and after a change to the profile.
    Whatif {
        #[arg(long, value_name = "FILE")]
        profile: PathBuf,
        #[arg(long = "force-in", value_name = "PATTERN")]
        force_in: Vec<String>,
        #[arg(long = "force-out", value_name = "PATTERN")]
        force_out: Vec<String>,
        #[arg(long, value_name = "PATTERN")]
        release: Vec<String>,
        /// `attribute=weight`, repeatable.
        #[arg(long = "set-weight", value_name = "ATTR=W", value_parser = parse_weight)]
        set_weight: Vec<(String, f64)>,
        /// A full delta document, merged with the flags above.
        #[arg(long, value_name = "FILE")]
        delta: Option<PathBuf>,
    },
    /// Runs one simulation.
    Simulate {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long, value_name = "OUT")]
        out: Option<PathBuf>,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the processed events here as JSON lines.
        #[arg(long, value_name = "OUT")]
        events: Option<PathBuf>,
    },
    /// Runs a hypothesis suite and reports edge coverage.
    #[command(name = "validate-all")]
    ValidateAll {
        /// Defaults to the bundled H1 to H10 suite.
        #[arg(long, value_name = "FILE")]
        hypotheses: Option<PathBuf>,
        /// Markdown report; `.json` writes the structured report instead.
        #[arg(long, value_name = "OUT")]
        report: Option<PathBuf>,
        /// Run only these hypothesis ids.
        #[arg(long, value_name = "ID")]
        only: Vec<String>,
    },
    /// Checks an industrial architecture's pattern mapping.
    #[command(name = "case-study")]
    CaseStudy {
        #[arg(value_name = "meta|intel_openfl|siemens_ifl")]
        id: String,
        /// Print the full consistency report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Starts the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        bind: IpAddr,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Checks a catalog file against every rule; exits 1 on violations.
    Validate {
        /// Defaults to the catalog selected by --catalog or the environment.
        file: Option<PathBuf>,
    },
    /// Prints the catalog as JSON.
    Show,
}

fn parse_weight(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected ATTR=WEIGHT")?;
    let w: f64 = v.parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.to_string(), w))
}

fn emit(out: &mut dyn Write, target: Option<&Path>, text: &str) -> Result<(), AppError> {
    match target {
        Some(path) => write_text(path, text),
        None => writeln!(out, "{text}").map_err(|source| AppError::Io { path: "<stdout>".into(), source }),
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, AppError> {
    let catalog_path = cli.catalog.as_deref();
    match cli.command {
        Command::Catalog(CatalogCommand::Validate { file }) => {
            let catalog = load_catalog(file.as_deref().or(catalog_path))?;
            let violations = validate_catalog(&catalog);
            if violations.is_empty() {
                emit(
                    out,
                    None,
                    &format!(
                        "catalog ok: {} patterns, {} attributes, {} effect edges",
                        catalog.patterns.len(),
                        catalog.attributes.len(),
                        catalog.edge_count()
                    ),
                )?;
                Ok(0)
            } else {
                for v in &violations {
                    emit(out, None, &format!("{:?}: {}", v.kind, v.message))?;
                }
                Ok(1)
            }
        }
        Command::Catalog(CatalogCommand::Show) => {
            let catalog = load_catalog(catalog_path)?;
            emit(out, None, &catalog.to_json_string())?;
            Ok(0)
        }
        Command::Decide { profile, adr, out: target } => {
            let catalog = load_catalog(catalog_path)?;
            let profile: RequirementProfile = read_json(&profile)?;
            let rec = engine::recommend(&catalog, &profile)?;
            if let Some(path) = adr {
                write_text(&path, &engine::render_adr(&catalog, &rec))?;
            }
            emit(out, target.as_deref(), &pretty(&rec))?;
            Ok(0)
        }
        Command::Whatif { profile, force_in, force_out, release, set_weight, delta } => {
            let catalog = load_catalog(catalog_path)?;
            let profile: RequirementProfile = read_json(&profile)?;
            let mut d: ProfileDelta = match delta {
                Some(path) => read_json(&path)?,
                None => ProfileDelta::default(),
            };
            d.force_in.extend(force_in);
            d.force_out.extend(force_out);
            d.release.extend(release);
            d.set_weights.extend(set_weight.into_iter().collect::<BTreeMap<_, _>>());
            let overlap: BTreeSet<_> = d.force_in.intersection(&d.force_out).collect();
            if let Some(p) = overlap.into_iter().next() {
                return Err(AppError::Usage(format!("`{p}` is both forced in and forced out")));
            }
            emit(out, None, &pretty(&engine::what_if(&catalog, &profile, &d)?))?;
            Ok(0)
        }
        Command::Simulate { config, out: target, seed, events } => {
            let text = read_text(&config)?;
            let mut cfg = SimConfig::from_json_str(&text)
                .map_err(|e| AppError::Parse { path: config.clone(), message: e.to_string() })?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let output = simulate(&cfg, events.is_some())?;
            if let Some(path) = events {
                let mut lines = String::new();
                for r in &output.events {
                    lines.push_str(&serde_json::to_string(r).expect("event serializes"));
                    lines.push('\n');
                }
                write_text(&path, &lines)?;
            }
            emit(out, target.as_deref(), &output.metrics.to_json_string())?;
            Ok(0)
        }
        Command::ValidateAll { hypotheses, report, only } => {
            let catalog = load_catalog(catalog_path)?;
            let file = match hypotheses {
                Some(path) => HypothesisFile::from_json_str(&read_text(&path)?)
                    .map_err(|e| AppError::Parse { path: path.clone(), message: e.to_string() })?,
                None => HypothesisFile::canonical(),
            };
            let file = subset(&file, (!only.is_empty()).then_some(only.as_slice())).map_err(AppError::Usage)?;
            let result = validate_parallel(&catalog, &file);
            let markdown = result.render_markdown();
            match report {
                Some(path) if path.extension().is_some_and(|e| e == "json") => write_text(&path, &result.to_json_string())?,
                Some(path) => write_text(&path, &markdown)?,
                None => emit(out, None, &markdown)?,
            }
            for h in &result.hypotheses {
                emit(out, None, &format!("{} {}", h.id, if h.passed { "pass" } else { "FAIL" }))?;
            }
            let s = result.summary;
            emit(
                out,
                None,
                &format!(
                    "edges: {} total, {} validated-pass, {} validated-fail, {} catalog-only",
                    s.total_edges, s.validated_pass, s.validated_fail, s.catalog_only
                ),
            )?;
            Ok(if result.all_passed { 0 } else { 1 })
        }
        Command::CaseStudy { id, json } => {
            let catalog = load_catalog(catalog_path)?;
            let id: CaseStudyId = id.parse().map_err(|e: fedarch_core::CatalogError| AppError::Usage(e.to_string()))?;
            let report = engine::check_case_study(&catalog, id)?;
            if json {
                emit(out, None, &pretty(&report))?;
            } else {
                emit(out, None, &format!("{}:", report.name))?;
                for p in &report.pattern_ids {
                    emit(out, None, &format!("  {p}"))?;
                }
                for u in &report.unmet_complements {
                    emit(out, None, &format!("  note: {} is used without {}", u.pattern, u.requires))?;
                }
            }
            Ok(if report.consistent() { 0 } else { 1 })
        }
        Command::Serve { port, bind } => {
            let catalog = load_catalog(catalog_path)?;
            let addr = SocketAddr::new(bind, port);
            let runtime = tokio::runtime::Runtime::new().map_err(|source| AppError::Io { path: "<runtime>".into(), source })?;
            runtime
                .block_on(crate::api::serve(addr, catalog))
                .map_err(|source| AppError::Io { path: addr.to_string().into(), source })?;
            Ok(0)
        }
    }
}
