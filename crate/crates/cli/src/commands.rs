use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};

use oda_core::framework::{load_framework, FrameworkError};
use oda_core::report::{report_file_name, ReportFormat, Thresholds};
use oda_core::store::{ExportFormat, PortalProfile, Region, Store};
use oda_core::{FrameworkSpec, PortalScore, Verdict, VerdictSource, VerdictValue};
use oda_probe::{ProbeStatus, Prober};

use crate::api::{self, AppState};
use crate::cli::{AssessmentCmd, Cli, Command, ExportFormatArg, Format, FrameworkCmd, PortalCmd, ReportOpts};
use crate::config::RunConfig;
use crate::ops::{self, ProbeDocuments, ReportRequest};
use crate::{CliError, EXIT_OK, EXIT_PROBES_FAILED};

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let cfg = RunConfig::resolve(&cli.global)?;
    let now = cfg.now();
    match cli.command {
        Command::Portal { cmd } => portal(&open(&cfg)?, cmd),
        Command::Assessment { cmd } => assessment(&open(&cfg)?, cmd, now),
        Command::Probe(args) => {
            if args.portals.len() > 1 && (args.catalog_file.is_some() || args.accessibility_report.is_some()) {
                return Err(CliError::Usage("--catalog-file and --accessibility-report take a single portal".into()));
            }
            let docs = ProbeDocuments {
                catalog: args.catalog_file.as_deref().map(read).transpose()?,
                accessibility: args.accessibility_report.as_deref().map(read).transpose()?,
            };
            probe(&cfg, open(&cfg)?, args.portals, docs, now)
        }
        Command::Verdict(args) => {
            let store = open(&cfg)?;
            let value = match args.value.as_str() {
                "0" | "false" => VerdictValue::FAIL,
                "1" | "true" => VerdictValue::PASS,
                other => return Err(CliError::Validation(format!("verdict value must be 0 or 1, got {other}"))),
            };
            let source = match args.source.as_str() {
                "manual" => VerdictSource::Manual,
                "override" => VerdictSource::Override,
                other => return Err(CliError::Validation(format!("verdict source must be manual or override, got {other}"))),
            };
            let mut v = Verdict::new(args.sub_dimension, value, source, now);
            v.note = args.note;
            v.evidence_refs = args.evidence;
            let a = store.record_verdict(&args.assessment, v, now)?;
            print_score(&ops::score(&store, &a)?, store.framework(&a.framework_version)?, Format::Md);
            Ok(EXIT_OK)
        }
        Command::Finalize { assessment } => {
            let store = open(&cfg)?;
            let a = store.finalize(&assessment, now)?;
            println!("{} finalized", a.assessment_id);
            print_score(&ops::score(&store, &a)?, store.framework(&a.framework_version)?, Format::Md);
            Ok(EXIT_OK)
        }
        Command::Score { target, format } => {
            let store = open(&cfg)?;
            let a = ops::resolve_assessment(&store, &target)?;
            print_score(&ops::score(&store, &a)?, store.framework(&a.framework_version)?, format);
            Ok(EXIT_OK)
        }
        Command::Rank { opts } => report(&cfg, "ranking", None, &[], &opts, now),
        Command::Report { kind, target, regions, opts } => {
            let regions = regions
                .iter()
                .map(|r| Region::parse(r).ok_or_else(|| CliError::Validation(format!("unknown region {r}"))))
                .collect::<Result<Vec<_>, _>>()?;
            report(&cfg, kind.as_str(), target.as_deref(), &regions, &opts, now)
        }
        Command::Export { assessment, format, out } => {
            let store = open(&cfg)?;
            let fmt = match format {
                ExportFormatArg::Json => ExportFormat::Json,
                ExportFormatArg::Csv => ExportFormat::Csv,
            };
            let doc = store.export_assessment(&assessment, fmt)?;
            emit(&doc, out.as_deref())
        }
        Command::Import { file } => {
            let store = open(&cfg)?;
            let a = store.import_assessment(&read(&file)?)?;
            println!("imported {} ({})", a.assessment_id, a.portal_id);
            Ok(EXIT_OK)
        }
        Command::Framework { cmd } => framework(&cfg, cmd),
        Command::Serve { listen, assets } => {
            let mut cfg = cfg;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            if assets.is_some() {
                cfg.assets = assets;
            }
            serve(cfg)
        }
    }
}

fn open(cfg: &RunConfig) -> Result<Store, CliError> {
    Ok(Store::open(&cfg.store)?)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn emit(doc: &str, out: Option<&Path>) -> Result<i32, CliError> {
    match out {
        Some(p) => {
            std::fs::write(p, doc).map_err(|source| CliError::Io { path: p.display().to_string(), source })?;
            println!("{}", p.display());
        }
        None => {
            print!("{doc}");
            if !doc.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(EXIT_OK)
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: "tokio runtime".into(), source })
}

fn portal(store: &Store, cmd: PortalCmd) -> Result<i32, CliError> {
    match cmd {
        PortalCmd::Add { id, name, region, homepage, country, endpoints, notes } => {
            let region = Region::parse(&region).ok_or_else(|| CliError::Validation(format!("unknown region {region}")))?;
            let p = PortalProfile { portal_id: id, name, country, region, homepage, catalog_endpoints: endpoints, notes };
            store.add_portal(&p)?;
            println!("added portal {}", p.portal_id);
        }
        PortalCmd::List { region, format } => {
            let region = match region {
                Some(r) => Some(Region::parse(&r).ok_or_else(|| CliError::Validation(format!("unknown region {r}")))?),
                None => None,
            };
            let portals = store.list_portals(region)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&portals).expect("portals serialize")),
                Format::Csv => {
                    println!("portal_id,name,region,country,homepage");
                    for p in &portals {
                        println!("{},{},{},{},{}", csv_cell(&p.portal_id), csv_cell(&p.name), p.region, csv_cell(&p.country), csv_cell(&p.homepage));
                    }
                }
                Format::Md => {
                    println!("| portal | name | region | country | homepage |\n|---|---|---|---|---|");
                    for p in &portals {
                        println!("| {} | {} | {} | {} | {} |", p.portal_id, p.name, p.region, p.country, p.homepage);
                    }
                }
            }
        }
    }
    Ok(EXIT_OK)
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn assessment(store: &Store, cmd: AssessmentCmd, now: DateTime<Utc>) -> Result<i32, CliError> {
    match cmd {
        AssessmentCmd::Create { portal, framework, reference_date } => {
            let version = framework.unwrap_or_else(|| store.default_framework().version.clone());
            let mut a = store.create_assessment(&portal, &version, now)?;
            if let Some(d) = reference_date {
                a = store
                    .update_assessment(&a.assessment_id, now, |a, _| {
                        a.reference_date = d;
                        Ok(())
                    })?
                    .0;
            }
            println!("{}", a.assessment_id);
        }
        AssessmentCmd::Show { target } => {
            let a = ops::resolve_assessment(store, &target)?;
            let view = ops::view(store, &a)?;
            println!("{}", serde_json::to_string_pretty(&view).expect("view serializes"));
        }
        AssessmentCmd::List { portal } => {
            let all = match portal {
                Some(p) => store.assessments_for(&p)?,
                None => store.list_assessments()?,
            };
            for a in all {
                let status = if a.is_finalized() { "complete" } else { "in progress" };
                println!("{}\t{}\t{}\t{}", a.assessment_id, a.portal_id, a.framework_version, status);
            }
        }
    }
    Ok(EXIT_OK)
}

fn probe(
    cfg: &RunConfig,
    store: Store,
    portals: Vec<String>,
    docs: ProbeDocuments,
    now: DateTime<Utc>,
) -> Result<i32, CliError> {
    // validate every portal before any network traffic
    let mut targets = Vec::new();
    for id in &portals {
        store.portal(id)?;
        targets.push(ops::open_or_create(&store, id, now)?);
    }
    let prober = Prober::new(cfg.probe_config()).map_err(|e| CliError::Validation(e.to_string()))?;
    let store = Arc::new(store);
    let prober = Arc::new(prober);
    let docs = Arc::new(docs);
    let results = runtime()?.block_on(async move {
        let mut set = tokio::task::JoinSet::new();
        for (i, a) in targets.into_iter().enumerate() {
            let (store, prober, docs) = (store.clone(), prober.clone(), docs.clone());
            set.spawn(async move { (i, ops::probe_into(&store, &prober, &a, &docs, now).await) });
        }
        let mut out = Vec::new();
        while let Some(joined) = set.join_next().await {
            out.push(joined.expect("probe task panicked"));
        }
        out.sort_by_key(|(i, _)| *i);
        out
    });

    let mut any_ok = false;
    let mut first_err = None;
    for (_, r) in results {
        let (a, report) = match r {
            Ok(x) => x,
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
                continue;
            }
        };
        any_ok |= report.any_succeeded();
        let mut line = format!("{} ({}):", report.portal_id, a.assessment_id);
        for (name, status) in &report.probes {
            let _ = write!(line, " {name} {}", if *status == ProbeStatus::Ok { "ok" } else { "failed" });
        }
        println!("{line}");
        println!("  auto-filled: {}", list(&report.auto_filled));
        println!("  needs review: {}", list(&report.needs_review));
        for (name, status) in &report.probes {
            if let ProbeStatus::Failed(why) = status {
                println!("  {name}: {why}");
            }
        }
        for w in &report.warnings {
            eprintln!("warning: {}: {w}", report.portal_id);
        }
    }
    if let Some(e) = first_err {
        if !any_ok {
            return Err(e.into());
        }
    }
    Ok(if any_ok { EXIT_OK } else { EXIT_PROBES_FAILED })
}

fn list(ids: &[String]) -> String {
    if ids.is_empty() {
        "none".into()
    } else {
        ids.join(", ")
    }
}

fn print_score(s: &PortalScore, spec: &FrameworkSpec, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(s).expect("score serializes")),
        Format::Csv => {
            let dims: Vec<String> = spec.dimensions.iter().map(|d| d.id.to_string()).collect();
            println!("portal,total,{},provisional", dims.join(","));
            let subs: Vec<String> =
                spec.dimensions.iter().map(|d| s.dimension_subtotals.get(&d.id).copied().unwrap_or(0).to_string()).collect();
            println!("{},{},{},{}", s.portal_id, s.total, subs.join(","), s.provisional);
        }
        Format::Md => {
            let flag = if s.provisional { " (provisional)" } else { "" };
            println!("{}: total {} / {}{flag}\n", s.portal_id, s.total, spec.max_total());
            println!("| dimension | subtotal | maximum |\n|---|---:|---:|");
            for d in &spec.dimensions {
                println!("| {} {} | {} | {} |", d.id, d.name, s.dimension_subtotals.get(&d.id).copied().unwrap_or(0), d.max_score());
            }
        }
    }
}

fn report(
    cfg: &RunConfig,
    kind: &str,
    target: Option<&str>,
    regions: &[Region],
    opts: &ReportOpts,
    now: DateTime<Utc>,
) -> Result<i32, CliError> {
    let store = open(cfg)?;
    let spec = match &opts.framework {
        Some(v) => store.framework(v)?.clone(),
        None => store.default_framework().clone(),
    };
    let thresholds = Thresholds {
        high: opts.high.unwrap_or(cfg.thresholds.high),
        low: opts.low.unwrap_or(cfg.thresholds.low),
    };
    let format: ReportFormat = opts.format.into();
    let req = ReportRequest { kind, target, format, thresholds, regions };
    let (doc, warnings) = ops::render_report(&store, &spec, &req, now)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    match &opts.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
            let path = dir.join(report_file_name(kind, &spec.version, now.date_naive(), format));
            emit(&doc, Some(&path))
        }
        None => emit(&doc, None),
    }
}

fn framework(cfg: &RunConfig, cmd: FrameworkCmd) -> Result<i32, CliError> {
    match cmd {
        FrameworkCmd::Show { version, format } => {
            let store = open(cfg)?;
            let spec = match &version {
                Some(v) => store.framework(v)?,
                None => store.default_framework(),
            };
            match format {
                Format::Json => println!("{}", spec.to_json()),
                Format::Csv => {
                    println!("sub_dimension_id,dimension,label,weight,method");
                    for d in &spec.dimensions {
                        for s in &d.sub_dimensions {
                            println!("{},{},{},{},{}", s.id, d.id, csv_cell(&s.label), s.weight.as_str(), s.method.as_str());
                        }
                    }
                }
                Format::Md => {
                    println!("# Framework {}\n", spec.version);
                    for d in &spec.dimensions {
                        println!("## {} {} (max {})\n", d.id, d.name, d.max_score());
                        println!("| id | label | weight | method |\n|---|---|---|---|");
                        for s in &d.sub_dimensions {
                            println!("| {} | {} | {} | {} |", s.id, s.label, s.weight.as_str(), s.method.as_str());
                        }
                        println!();
                    }
                    let c = spec.weight_counts();
                    println!("{} sub-dimensions, maximum total {} ({c:?})", spec.len(), spec.max_total());
                }
            }
            Ok(EXIT_OK)
        }
        FrameworkCmd::Validate { file } => match load_framework(&read(&file)?) {
            Ok(spec) => {
                println!("{}: valid, version {}, {} sub-dimensions, maximum {}", file.display(), spec.version, spec.len(), spec.max_total());
                Ok(EXIT_OK)
            }
            Err(FrameworkError::Invalid(report)) => {
                for v in &report.violations {
                    println!("{v}");
                }
                Err(CliError::Validation(format!("{}: {} violations", file.display(), report.violations.len())))
            }
            Err(e) => Err(CliError::Validation(e.to_string())),
        },
    }
}

fn serve(cfg: RunConfig) -> Result<i32, CliError> {
    let store = open(&cfg)?;
    let prober = Prober::new(cfg.probe_config()).map_err(|e| CliError::Validation(e.to_string()))?;
    let listen = cfg.listen.clone();
    let state = Arc::new(AppState { store, prober, config: cfg });
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .map_err(|source| CliError::Io { path: listen.clone(), source })?;
        let addr = listener.local_addr().map_err(|source| CliError::Io { path: listen.clone(), source })?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        api::serve(state, listener).await.map_err(|source| CliError::Io { path: listen, source })?;
        Ok(EXIT_OK)
    })
}
