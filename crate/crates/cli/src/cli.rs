use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use oda_core::report::ReportFormat;

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "oda-bench", version, about = "Usability audits of open government data portals")]
pub struct Cli {
    #[command(flatten)]
    pub global: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Md,
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Md => ReportFormat::Md,
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Ranking,
    Portal,
    Leaders,
    Shortcomings,
    Regions,
}

impl ReportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Ranking => "ranking",
            ReportKind::Portal => "portal",
            ReportKind::Leaders => "leaders",
            ReportKind::Shortcomings => "shortcomings",
            ReportKind::Regions => "regions",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manage portal profiles
    Portal {
        #[command(subcommand)]
        cmd: PortalCmd,
    },
    /// Create and inspect assessments
    Assessment {
        #[command(subcommand)]
        cmd: AssessmentCmd,
    },
    /// Run the automated probes and record evidence and automatic verdicts
    Probe(ProbeArgs),
    /// Record a verdict
    Verdict(VerdictArgs),
    /// Mark a complete assessment final
    Finalize { assessment: String },
    /// Score an assessment (or a portal's latest one)
    Score {
        target: String,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
    /// Rank every portal by its latest assessment
    Rank {
        #[command(flatten)]
        opts: ReportOpts,
    },
    /// Render a report
    Report {
        #[arg(value_enum)]
        kind: ReportKind,
        /// Portal or assessment id, for the portal report
        target: Option<String>,
        /// Regions to compare
        #[arg(long, value_delimiter = ',', default_value = "EU,GCC")]
        regions: Vec<String>,
        #[command(flatten)]
        opts: ReportOpts,
    },
    /// Export an assessment
    Export {
        assessment: String,
        #[arg(long, value_enum, default_value = "json")]
        format: ExportFormatArg,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Import an exported assessment
    Import { file: PathBuf },
    /// Inspect or validate framework specifications
    Framework {
        #[command(subcommand)]
        cmd: FrameworkCmd,
    },
    /// Serve the HTTP API (and workbench assets)
    Serve {
        /// Address to bind; port 0 picks a free port
        #[arg(long)]
        listen: Option<String>,
        /// Directory of static workbench assets
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct ReportOpts {
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
    /// Framework version (default: the bundled one)
    #[arg(long)]
    pub framework: Option<String>,
    /// Upper threshold callout
    #[arg(long)]
    pub high: Option<u32>,
    /// Lower threshold callout
    #[arg(long)]
    pub low: Option<u32>,
    /// Write `<kind>-<version>-<date>.<ext>` into this directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PortalCmd {
    Add {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        /// EU, GCC or other
        #[arg(long)]
        region: String,
        #[arg(long)]
        homepage: String,
        #[arg(long, default_value = "")]
        country: String,
        /// Catalog endpoint (repeatable)
        #[arg(long = "endpoint")]
        endpoints: Vec<String>,
        #[arg(long, default_value = "")]
        notes: String,
    },
    List {
        #[arg(long)]
        region: Option<String>,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum AssessmentCmd {
    Create {
        portal: String,
        #[arg(long)]
        framework: Option<String>,
        /// Reference date for update-frequency checks
        #[arg(long)]
        reference_date: Option<NaiveDate>,
    },
    Show {
        target: String,
    },
    List {
        #[arg(long)]
        portal: Option<String>,
    },
}

#[derive(Debug, clap::Args)]
pub struct ProbeArgs {
    /// Portals to probe, concurrently
    #[arg(required = true)]
    pub portals: Vec<String>,
    /// Manual-import catalog (JSON array of dataset records); one portal only
    #[arg(long)]
    pub catalog_file: Option<PathBuf>,
    /// Accessibility report (JSON) from an external checker; one portal only
    #[arg(long)]
    pub accessibility_report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct VerdictArgs {
    pub assessment: String,
    pub sub_dimension: String,
    /// 0 or 1
    pub value: String,
    #[arg(long, default_value = "manual")]
    pub source: String,
    #[arg(long)]
    pub note: Option<String>,
    /// Evidence id (repeatable)
    #[arg(long = "evidence")]
    pub evidence: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum FrameworkCmd {
    Show {
        #[arg(long)]
        version: Option<String>,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
    Validate {
        file: PathBuf,
    },
}
