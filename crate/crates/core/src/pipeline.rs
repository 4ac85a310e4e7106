//! End-to-end run: ingest, posterior, distances, scores, clustering, report.

use std::fs;
use std::path::{Path, PathBuf};

use crate::clustering::{agglomerate, cut, label_clusters};
use crate::divergence::{build_matrix, DistanceMatrix};
use crate::error::{Error, Result};
use crate::ingest::{self, AggregatedSchema, BusinessSummary, RawSchema};
use crate::posterior::{posterior_from_counts, TypeCounts};
use crate::report::{
    self, AnalysisReport, BoxplotOrder, DendrogramFormat, Provenance, TableFormat,
};
use crate::scoring::score_types;

#[derive(Debug, Clone)]
pub enum InputMode {
    /// Per-item rows; grouped by the schema's attribute columns.
    Raw(RawSchema),
    Aggregated(AggregatedSchema),
}

impl InputMode {
    pub fn attribute_columns(&self) -> &[String] {
        match self {
            InputMode::Raw(s) => &s.attribute_columns,
            InputMode::Aggregated(s) => &s.attribute_columns,
        }
    }
}

pub fn load_counts(path: &Path, mode: &InputMode) -> Result<Vec<TypeCounts>> {
    match mode {
        InputMode::Raw(schema) => {
            let records = ingest::read_raw(path, schema)?;
            ingest::aggregate(&records, &schema.attribute_columns)
        }
        InputMode::Aggregated(schema) => ingest::read_aggregated(path, schema),
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    /// Keep only the `top` types by total volume.
    pub top: Option<usize>,
    /// Denominator for business fractions; defaults to the sum of totals.
    pub grand_total: Option<u64>,
    /// Number of clusters to cut; `None` builds the dendrogram only.
    pub k: Option<usize>,
    pub input_label: String,
    pub run_id: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub matrix: DistanceMatrix,
    pub warnings: Vec<String>,
}

pub fn analyze(counts: Vec<TypeCounts>, opts: &AnalysisOptions) -> Result<Analysis> {
    let mut warnings = Vec::new();
    for c in &counts {
        c.validate()?;
    }
    let group_by: Vec<String> = counts
        .first()
        .map(|c| c.attributes.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();

    let (selected, business): (Vec<TypeCounts>, Option<BusinessSummary>) = match opts.top {
        Some(n) => {
            let (sel, summary) = ingest::top_n_by_business(&counts, n, opts.grand_total)?;
            (sel, Some(summary))
        }
        None if !counts.is_empty() && counts.iter().all(|c| c.total.is_some()) => {
            let (_, summary) = ingest::top_n_by_business(&counts, counts.len(), opts.grand_total)?;
            (counts, Some(summary))
        }
        None => (counts, None),
    };

    let (analyzed, excluded): (Vec<TypeCounts>, Vec<TypeCounts>) =
        selected.into_iter().partition(|c| c.inspected > 0);
    for c in &excluded {
        warnings.push(format!(
            "type {} has no inspected items and is excluded from analysis",
            c.type_id
        ));
    }
    if analyzed.is_empty() {
        return Err(Error::EmptyInput);
    }

    let posteriors = analyzed
        .iter()
        .map(|c| {
            Ok((
                c.type_id.clone(),
                c.attributes.clone(),
                posterior_from_counts(c)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<_> = posteriors
        .iter()
        .map(|(id, _, d)| (id.clone(), *d))
        .collect();
    let matrix = build_matrix(&pairs)?;
    let scores = score_types(&posteriors, &matrix)?;
    if scores.degenerate {
        warnings.push("all posteriors are identical; every score is 0".into());
    }
    let dendrogram = agglomerate(&matrix)?;

    let clusters = match opts.k {
        Some(k) => {
            let groups = cut(&dendrogram, k)?;
            let fractions = business.as_ref().map(BusinessSummary::fractions);
            Some(label_clusters(&groups, &scores.types, fractions.as_ref())?)
        }
        None => None,
    };

    let report = AnalysisReport {
        provenance: Provenance {
            input: opts.input_label.clone(),
            group_by,
            n_analyzed: analyzed.len(),
            k: opts.k,
            tool_version: crate::VERSION.to_string(),
            run_id: opts.run_id.clone(),
            excluded: excluded.into_iter().map(|c| c.type_id).collect(),
        },
        scores: scores.types,
        clusters,
        business,
        dendrogram,
        input_order: analyzed.into_iter().map(|c| c.type_id).collect(),
    };
    report.validate()?;
    Ok(Analysis {
        report,
        matrix,
        warnings,
    })
}

/// How far through the method a run goes; decides which artifacts exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Distance,
    Score,
    Cluster,
    Analyze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmitFormat {
    Json,
    Csv,
    Newick,
    Ascii,
    Svg,
}

impl std::str::FromStr for EmitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "newick" | "nwk" => Ok(Self::Newick),
            "ascii" | "text" => Ok(Self::Ascii),
            "svg" => Ok(Self::Svg),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

/// Renders every artifact for `stage` in memory: `(file name, contents)`.
pub fn render_artifacts(
    analysis: &Analysis,
    stage: Stage,
    formats: &[EmitFormat],
) -> Result<Vec<(String, String)>> {
    let has = |f: EmitFormat| formats.contains(&f);
    let report = &analysis.report;
    let mut files = Vec::new();

    if has(EmitFormat::Json) {
        files.push(("distance_matrix.json".into(), analysis.matrix.to_json()?));
    }
    if has(EmitFormat::Csv) {
        let mut buf = Vec::new();
        analysis.matrix.write_csv(&mut buf)?;
        files.push((
            "distance_matrix.csv".into(),
            String::from_utf8(buf).expect("csv writer emits UTF-8"),
        ));
    }
    if stage >= Stage::Score {
        files.push((
            "scores.txt".into(),
            report::emit_score_table(report, TableFormat::Text)?,
        ));
        if has(EmitFormat::Json) {
            files.push((
                "scores.json".into(),
                report::emit_score_table(report, TableFormat::Json)?,
            ));
        }
        if has(EmitFormat::Csv) {
            files.push((
                "scores.csv".into(),
                report::emit_score_table(report, TableFormat::Csv)?,
            ));
        }
    }
    if stage >= Stage::Cluster {
        let dendro = [
            (EmitFormat::Json, DendrogramFormat::Json, "dendrogram.json"),
            (
                EmitFormat::Newick,
                DendrogramFormat::Newick,
                "dendrogram.nwk",
            ),
            (EmitFormat::Ascii, DendrogramFormat::Ascii, "dendrogram.txt"),
            (EmitFormat::Svg, DendrogramFormat::Svg, "dendrogram.svg"),
        ];
        for (emit, format, name) in dendro {
            if has(emit) {
                files.push((name.into(), report::emit_dendrogram(report, format)?));
            }
        }
        for (emit, format, name) in [
            (EmitFormat::Json, TableFormat::Json, "clusters.json"),
            (EmitFormat::Csv, TableFormat::Csv, "clusters.csv"),
        ] {
            if has(emit) {
                if let Some(text) = report::emit_cluster_table(report, format)? {
                    files.push((name.into(), text));
                }
            }
        }
    }
    if stage >= Stage::Analyze {
        let order = if report.business.is_some() {
            BoxplotOrder::Business
        } else {
            BoxplotOrder::Input
        };
        if has(EmitFormat::Json) {
            files.push(("report.json".into(), report::emit_report_json(report)?));
            files.push((
                "boxplot.json".into(),
                report::emit_boxplot_data(report, order, TableFormat::Json)?,
            ));
        }
        if has(EmitFormat::Csv) {
            files.push((
                "boxplot.csv".into(),
                report::emit_boxplot_data(report, order, TableFormat::Csv)?,
            ));
            if let Some(b) = &report.business {
                files.push(("business.csv".into(), business_csv(b)));
            }
        }
    }
    Ok(files)
}

fn business_csv(b: &BusinessSummary) -> String {
    let mut out = String::from("rank,type_id,total,fraction,cumulative\n");
    for (i, r) in b.rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            csv_field(&r.type_id),
            r.total,
            r.fraction,
            r.cumulative
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes every file to a temporary name first and renames them into place
/// only once all writes succeeded.
pub fn write_artifacts(out_dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pid = std::process::id();
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, contents) in files {
        let target = out_dir.join(name);
        let tmp = out_dir.join(format!(".{name}.{pid}.tmp"));
        if let Err(e) = fs::write(&tmp, contents) {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(&tmp, e));
        }
        staged.push((tmp, target));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (i, (tmp, target)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged[i..]);
            return Err(Error::io(target, e));
        }
        written.push(target.clone());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn illustrative() -> Vec<TypeCounts> {
        [
            (200, 5),
            (170, 4),
            (50, 2),
            (48, 2),
            (100, 2),
            (99, 2),
            (98, 4),
            (101, 4),
        ]
        .iter()
        .enumerate()
        .map(|(i, &(n, x))| TypeCounts::new((i + 1).to_string(), n, x))
        .collect()
    }

    #[test]
    fn zero_inspection_types_are_excluded_with_warning() {
        let mut counts = illustrative();
        counts.push(TypeCounts::new("9", 0, 0));
        let a = analyze(counts, &AnalysisOptions::default()).unwrap();
        assert_eq!(a.report.scores.len(), 8);
        assert_eq!(a.report.provenance.excluded, vec!["9"]);
        assert_eq!(a.warnings.len(), 1);
    }

    #[test]
    fn empty_after_filtering_is_an_error() {
        let err = analyze(
            vec![TypeCounts::new("1", 0, 0)],
            &AnalysisOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyInput));
    }

    #[test]
    fn k_out_of_range() {
        let opts = AnalysisOptions {
            k: Some(9),
            ..Default::default()
        };
        assert!(matches!(
            analyze(illustrative(), &opts),
            Err(Error::InvalidK { k: 9, n: 8 })
        ));
    }

    #[test]
    fn stages_gate_artifacts() {
        let opts = AnalysisOptions {
            k: Some(4),
            ..Default::default()
        };
        let a = analyze(illustrative(), &opts).unwrap();
        let all = [
            EmitFormat::Json,
            EmitFormat::Csv,
            EmitFormat::Newick,
            EmitFormat::Ascii,
            EmitFormat::Svg,
        ];
        let names = |stage| -> Vec<String> {
            render_artifacts(&a, stage, &all)
                .unwrap()
                .into_iter()
                .map(|(n, _)| n)
                .collect()
        };
        assert_eq!(
            names(Stage::Distance),
            ["distance_matrix.json", "distance_matrix.csv"]
        );
        assert!(names(Stage::Score).contains(&"scores.csv".to_string()));
        assert!(!names(Stage::Score).contains(&"dendrogram.svg".to_string()));
        assert!(names(Stage::Cluster).contains(&"clusters.json".to_string()));
        assert!(names(Stage::Analyze).contains(&"report.json".to_string()));
    }

    #[test]
    fn unknown_format_rejected() {
        assert!(matches!(
            "pdf".parse::<EmitFormat>(),
            Err(Error::UnknownFormat(_))
        ));
    }

    #[test]
    fn writes_leave_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            ("a.txt".to_string(), "x".to_string()),
            ("b.txt".to_string(), "y".to_string()),
        ];
        let written = write_artifacts(dir.path(), &files).unwrap();
        assert_eq!(written.len(), 2);
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert!(names.iter().all(|n| !n.ends_with(".tmp")));
    }
}
