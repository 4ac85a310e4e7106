use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cplx_core::pipeline::{load_counts, render_artifacts, write_artifacts};
use cplx_core::report::{emit_score_table, TableFormat};
use cplx_core::{
    analyze, AggregatedSchema, AnalysisOptions, EmitFormat, Error, InputMode, RawSchema, Stage,
};

/// Product complexity from inspection records: beta posteriors, Hellinger
/// distances, complexity scores and complete-linkage clusters.
#[derive(Parser)]
#[command(name = "cplx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full run: scores, dendrogram, clusters, box-plot data and report.
    Analyze(RunArgs),
    /// Pairwise Hellinger distance matrix only.
    Distance(RunArgs),
    /// Distance matrix and complexity scores.
    Score(RunArgs),
    /// Distance matrix, scores, dendrogram and (with --k) cluster labels.
    Cluster(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// One row per item with a 0/1/2 inspection result.
    Raw,
    /// One row per type with inspected and repaired counts.
    Aggregated,
}

#[derive(Args)]
struct RunArgs {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_enum, default_value = "aggregated")]
    mode: Mode,

    /// Type id column (aggregated) or optional item id column (raw).
    #[arg(long)]
    type_col: Option<String>,

    /// Attribute columns, comma separated. Raw mode groups by these.
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<String>,

    /// Inspection result column (raw mode).
    #[arg(long, default_value = "result")]
    result_col: String,

    #[arg(long, default_value = "inspected")]
    inspected_col: String,

    #[arg(long, default_value = "repaired")]
    repaired_col: String,

    /// Total volume column; a column named `total` is used if present.
    #[arg(long)]
    total_col: Option<String>,

    /// Keep only the N types with the largest total volume.
    #[arg(long)]
    top: Option<usize>,

    /// Denominator for business fractions (defaults to the sum of totals).
    #[arg(long)]
    grand_total: Option<u64>,

    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = "cplx-out")]
    out: PathBuf,

    /// Artifact formats: json, csv, newick, ascii, svg.
    #[arg(long, value_delimiter = ',', default_value = "json,csv,newick,ascii")]
    emit: Vec<String>,

    /// Free-form identifier recorded in the report provenance.
    #[arg(long)]
    run_id: Option<String>,
}

impl RunArgs {
    fn input_mode(&self) -> InputMode {
        match self.mode {
            Mode::Raw => InputMode::Raw(RawSchema {
                item_id_column: self.type_col.clone(),
                attribute_columns: self.attrs.clone(),
                result_column: self.result_col.clone(),
            }),
            Mode::Aggregated => {
                let defaults = AggregatedSchema::default();
                InputMode::Aggregated(AggregatedSchema {
                    type_column: self.type_col.clone().unwrap_or(defaults.type_column),
                    attribute_columns: self.attrs.clone(),
                    total_column: self.total_col.clone(),
                    inspected_column: self.inspected_col.clone(),
                    repaired_column: self.repaired_col.clone(),
                })
            }
        }
    }
}

fn run(stage: Stage, args: &RunArgs) -> Result<(), Error> {
    let formats = args
        .emit
        .iter()
        .map(|f| f.parse::<EmitFormat>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.mode == Mode::Raw && args.attrs.is_empty() {
        return Err(Error::InconsistentInput(
            "raw mode needs at least one --attrs column to group by".into(),
        ));
    }
    let counts = load_counts(&args.input, &args.input_mode())?;
    let opts = AnalysisOptions {
        top: args.top,
        grand_total: args.grand_total,
        k: args.k,
        input_label: display_name(&args.input),
        run_id: args.run_id.clone(),
    };
    let analysis = analyze(counts, &opts)?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    let files = render_artifacts(&analysis, stage, &formats)?;
    let written = write_artifacts(&args.out, &files)?;

    if stage >= Stage::Score {
        print!("{}", emit_score_table(&analysis.report, TableFormat::Text)?);
    }
    if let Some(clusters) = &analysis.report.clusters {
        for g in &clusters.groups {
            println!(
                "cluster {}: {} (mean score {:.1})",
                g.label,
                g.members.join(", "),
                g.mean_scaled_score
            );
        }
    }
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn display_name(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = match &cli.command {
        Command::Analyze(a) => (Stage::Analyze, a),
        Command::Distance(a) => (Stage::Distance, a),
        Command::Score(a) => (Stage::Score, a),
        Command::Cluster(a) => (Stage::Cluster, a),
    };
    match run(stage, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}] {}: {e}", e.code(), e.module());
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
