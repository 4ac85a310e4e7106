//! Human- and machine-readable renderings of an analysis.
//!
//! Machine outputs (JSON, CSV) carry full precision; human outputs (text
//! tables, dendrogram labels) print scores to one decimal.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterAssignment, Dendrogram, Node};
use crate::error::{Error, Result};
use crate::ingest::BusinessSummary;
use crate::posterior::{five_number_summary, FiveNumberSummary};
use crate::scoring::ScoredType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: String,
    pub group_by: Vec<String>,
    pub n_analyzed: usize,
    pub k: Option<usize>,
    pub tool_version: String,
    /// Caller-supplied identifier; never generated from the clock.
    pub run_id: Option<String>,
    /// Types dropped before analysis (no inspected items).
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    /// In rank (ascending median) order.
    pub scores: Vec<ScoredType>,
    pub clusters: Option<ClusterAssignment>,
    pub business: Option<BusinessSummary>,
    pub dendrogram: Dendrogram,
    /// Type ids in the order they were analyzed.
    pub input_order: Vec<String>,
}

impl AnalysisReport {
    pub fn score_of(&self, type_id: &str) -> Option<&ScoredType> {
        self.scores.iter().find(|s| s.type_id == type_id)
    }

    /// Every analyzed type appears exactly once in the scores, the
    /// dendrogram, and (when present) the cluster assignment.
    pub fn validate(&self) -> Result<()> {
        let mut expected: Vec<&str> = self.input_order.iter().map(String::as_str).collect();
        expected.sort_unstable();
        let check = |mut got: Vec<&str>, what: &str| {
            got.sort_unstable();
            if got == expected {
                Ok(())
            } else {
                Err(Error::InconsistentInput(format!(
                    "{what} does not cover the analyzed types exactly once"
                )))
            }
        };
        check(
            self.scores.iter().map(|s| s.type_id.as_str()).collect(),
            "score table",
        )?;
        check(
            self.dendrogram
                .leaves()
                .iter()
                .map(String::as_str)
                .collect(),
            "dendrogram",
        )?;
        if let Some(c) = &self.clusters {
            check(
                c.groups
                    .iter()
                    .flat_map(|g| g.members.iter().map(String::as_str))
                    .collect(),
                "cluster assignment",
            )?;
        }
        Ok(())
    }

    /// Leaf label `id.(attr1, attr2, ...).[score]`, or `id.[score]` without
    /// attributes.
    pub fn leaf_label(&self, type_id: &str) -> String {
        match self.score_of(type_id) {
            Some(s) => leaf_label(s),
            None => type_id.to_owned(),
        }
    }
}

pub fn leaf_label(s: &ScoredType) -> String {
    if s.attributes.is_empty() {
        format!("{}.[{:.1}]", s.type_id, s.scaled_score)
    } else {
        let attrs: Vec<&str> = s.attributes.iter().map(|(_, v)| v.as_str()).collect();
        format!(
            "{}.({}).[{:.1}]",
            s.type_id,
            attrs.join(", "),
            s.scaled_score
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    /// Fixed-width text, scores to one decimal.
    Text,
}

fn attribute_names(report: &AnalysisReport) -> Vec<String> {
    report
        .scores
        .first()
        .map(|s| s.attributes.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default()
}

fn csv_to_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|source| Error::Csv {
            path: "<output>".into(),
            source,
        })?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<output>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    type_id: &'a str,
    attributes: &'a [(String, String)],
    rank: usize,
    a: f64,
    b: f64,
    median: f64,
    variance: f64,
    raw_score: f64,
    scaled_score: f64,
}

/// Score table, most complex type first.
pub fn emit_score_table(report: &AnalysisReport, format: TableFormat) -> Result<String> {
    let mut rows: Vec<&ScoredType> = report.scores.iter().collect();
    rows.sort_by(|x, y| {
        y.scaled_score
            .total_cmp(&x.scaled_score)
            .then(y.rank.cmp(&x.rank))
    });
    let attrs = attribute_names(report);
    match format {
        TableFormat::Csv => {
            let mut out = Vec::with_capacity(rows.len() + 1);
            let mut header = vec!["type_id".to_string()];
            header.extend(attrs.iter().cloned());
            header.extend(
                ["median", "variance", "raw_score", "scaled_score"]
                    .iter()
                    .map(|s| s.to_string()),
            );
            out.push(header);
            for s in rows {
                let mut rec = vec![s.type_id.clone()];
                rec.extend(s.attributes.iter().map(|(_, v)| v.clone()));
                rec.extend(
                    [s.median, s.variance, s.raw_score, s.scaled_score].map(|v| v.to_string()),
                );
                out.push(rec);
            }
            csv_to_string(out)
        }
        TableFormat::Json => {
            let doc: Vec<ScoreRow> = rows
                .iter()
                .map(|s| ScoreRow {
                    type_id: &s.type_id,
                    attributes: &s.attributes,
                    rank: s.rank,
                    a: s.posterior.a(),
                    b: s.posterior.b(),
                    median: s.median,
                    variance: s.variance,
                    raw_score: s.raw_score,
                    scaled_score: s.scaled_score,
                })
                .collect();
            Ok(serde_json::to_string_pretty(&doc)?)
        }
        TableFormat::Text => {
            let mut header = vec!["Type".to_string()];
            header.extend(attrs.iter().cloned());
            header.extend(["Posterior", "Median", "Cplx Score"].map(String::from));
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|s| {
                    let mut r = vec![s.type_id.clone()];
                    r.extend(s.attributes.iter().map(|(_, v)| v.clone()));
                    r.push(s.posterior.to_string());
                    r.push(format!("{:.4}", s.median));
                    r.push(format!("{:.1}", s.scaled_score));
                    r
                })
                .collect();
            Ok(text_table(&header, &body))
        }
    }
}

fn text_table(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule);
    for row in body {
        line(&mut out, row);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxplotOrder {
    /// Order in which types were analyzed.
    Input,
    /// Descending business volume; falls back to input order without totals.
    Business,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub type_id: String,
    #[serde(flatten)]
    pub summary: FiveNumberSummary,
}

pub fn boxplot_rows(report: &AnalysisReport, order: BoxplotOrder) -> Result<Vec<BoxplotRow>> {
    let ids: Vec<&str> = match (order, &report.business) {
        (BoxplotOrder::Business, Some(b)) => b
            .rows
            .iter()
            .map(|r| r.type_id.as_str())
            .filter(|id| report.score_of(id).is_some())
            .collect(),
        _ => report.input_order.iter().map(String::as_str).collect(),
    };
    ids.into_iter()
        .map(|id| {
            let s = report
                .score_of(id)
                .ok_or_else(|| Error::InconsistentInput(format!("no posterior for `{id}`")))?;
            Ok(BoxplotRow {
                type_id: id.to_owned(),
                summary: five_number_summary(&s.posterior)?,
            })
        })
        .collect()
}

/// Five-number summaries (whiskers at the 0.5% and 99.5% quantiles).
pub fn emit_boxplot_data(
    report: &AnalysisReport,
    order: BoxplotOrder,
    format: TableFormat,
) -> Result<String> {
    let rows = boxplot_rows(report, order)?;
    match format {
        TableFormat::Json => Ok(serde_json::to_string_pretty(&rows)?),
        TableFormat::Csv => {
            let mut out = vec![["type_id", "min", "q1", "median", "q3", "max"]
                .map(String::from)
                .to_vec()];
            for r in rows {
                let mut rec = vec![r.type_id];
                rec.extend(r.summary.as_array().map(|v| v.to_string()));
                out.push(rec);
            }
            csv_to_string(out)
        }
        TableFormat::Text => {
            let header = ["Type", "Min", "Q1", "Median", "Q3", "Max"].map(String::from);
            let body: Vec<Vec<String>> = rows
                .into_iter()
                .map(|r| {
                    let mut rec = vec![r.type_id];
                    rec.extend(r.summary.as_array().map(|v| format!("{v:.4}")));
                    rec
                })
                .collect();
            Ok(text_table(&header, &body))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DendrogramFormat {
    Json,
    Newick,
    Ascii,
    Svg,
}

impl FromStr for DendrogramFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "newick" | "nwk" => Ok(Self::Newick),
            "ascii" | "text" => Ok(Self::Ascii),
            "svg" => Ok(Self::Svg),
            _ => Err(Error::UnknownFormat(s.to_owned())),
        }
    }
}

pub fn emit_dendrogram(report: &AnalysisReport, format: DendrogramFormat) -> Result<String> {
    match format {
        DendrogramFormat::Json => report.dendrogram.to_json(),
        DendrogramFormat::Newick => Ok(newick(report)),
        DendrogramFormat::Ascii => Ok(ascii(report)),
        DendrogramFormat::Svg => Ok(svg(report)),
    }
}

fn newick_quote(label: &str) -> String {
    let plain = !label.is_empty()
        && !label
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,_".contains(c));
    if plain {
        label.to_owned()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

/// Newick with branch lengths equal to the height difference between a node
/// and its parent.
fn newick(report: &AnalysisReport) -> String {
    let tree = &report.dendrogram;
    let mut out = String::new();
    fn walk(report: &AnalysisReport, node: Node, parent_height: f64, out: &mut String) {
        let tree = &report.dendrogram;
        match node {
            Node::Leaf(i) => out.push_str(&newick_quote(&report.leaf_label(&tree.leaves()[i]))),
            Node::Merge(m) => {
                let merge = tree.merges()[m];
                out.push('(');
                walk(report, merge.left, merge.height, out);
                out.push(',');
                walk(report, merge.right, merge.height, out);
                out.push(')');
            }
        }
        let len = parent_height - tree.height_of(node);
        if parent_height.is_finite() {
            let _ = write!(out, ":{len}");
        }
    }
    if let Some(root) = tree.root() {
        walk(report, root, f64::NAN, &mut out);
    }
    out.push_str(";\n");
    out
}

/// Geometry shared by the text and SVG renderers: each leaf gets a row
/// (spaced two apart), each merge sits midway between its children.
struct Layout {
    order: Vec<usize>,
    /// Row of each node, leaves first then merges.
    row: Vec<usize>,
    max_height: f64,
}

fn layout(tree: &Dendrogram) -> Layout {
    let n = tree.leaves().len();
    let order = tree.leaf_order();
    let mut row = vec![0; n + tree.merges().len()];
    for (pos, &leaf) in order.iter().enumerate() {
        row[leaf] = 2 * pos;
    }
    for (m, merge) in tree.merges().iter().enumerate() {
        let id = |node: Node| match node {
            Node::Leaf(i) => i,
            Node::Merge(k) => n + k,
        };
        row[n + m] = (row[id(merge.left)] + row[id(merge.right)]) / 2;
    }
    let max_height = tree.heights().into_iter().fold(0.0, f64::max);
    Layout {
        order,
        row,
        max_height,
    }
}

fn cluster_annotations(report: &AnalysisReport) -> HashMap<&str, &str> {
    report
        .clusters
        .iter()
        .flat_map(|c| c.groups.iter())
        .flat_map(|g| {
            g.members
                .iter()
                .map(move |m| (m.as_str(), g.label.as_str()))
        })
        .collect()
}

const ASCII_WIDTH: usize = 60;

fn ascii(report: &AnalysisReport) -> String {
    let tree = &report.dendrogram;
    let n = tree.leaves().len();
    if n == 0 {
        return String::new();
    }
    let lay = layout(tree);
    let clusters = cluster_annotations(report);
    let labels: Vec<String> = tree
        .leaves()
        .iter()
        .map(|id| match clusters.get(id.as_str()) {
            Some(c) => format!("[{c}] {}", report.leaf_label(id)),
            None => report.leaf_label(id),
        })
        .collect();
    let label_width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let x0 = label_width + 1;
    let col = |h: f64| {
        if lay.max_height > 0.0 {
            x0 + (h / lay.max_height * ASCII_WIDTH as f64).round() as usize
        } else {
            x0
        }
    };
    let rows = 2 * n - 1;
    let mut grid = vec![vec![' '; x0 + ASCII_WIDTH + 2]; rows];
    for &leaf in &lay.order {
        for (k, ch) in labels[leaf].chars().enumerate() {
            grid[lay.row[leaf]][k] = ch;
        }
    }
    let node_id = |node: Node| match node {
        Node::Leaf(i) => i,
        Node::Merge(k) => n + k,
    };
    for merge in tree.merges() {
        let x = col(merge.height);
        let mut ys = Vec::with_capacity(2);
        for child in [merge.left, merge.right] {
            let y = lay.row[node_id(child)];
            let start = if matches!(child, Node::Leaf(_)) {
                x0
            } else {
                col(tree.height_of(child))
            };
            for cell in &mut grid[y][start..x] {
                if *cell == ' ' {
                    *cell = '-';
                }
            }
            ys.push(y);
        }
        let (top, bottom) = (ys[0].min(ys[1]), ys[0].max(ys[1]));
        for line in grid.iter_mut().take(bottom + 1).skip(top) {
            line[x] = '|';
        }
        grid[top][x] = '+';
        grid[bottom][x] = '+';
    }
    if n == 1 {
        grid[0][x0] = '-';
    }
    let mut out: String = grid
        .into_iter()
        .map(|line| {
            let s: String = line.into_iter().collect();
            s.trim_end().to_owned() + "\n"
        })
        .collect();
    // height axis
    let _ = writeln!(
        out,
        "{:x0$}0{:>w$}",
        "",
        format!("{:.4}", lay.max_height),
        w = ASCII_WIDTH
    );
    if let Some(c) = &report.clusters {
        out.push('\n');
        for g in &c.groups {
            let _ = write!(
                out,
                "Cluster {}: {} (mean score {:.1}",
                g.label,
                g.members.join(", "),
                g.mean_scaled_score
            );
            if let Some(b) = g.business_fraction {
                let _ = write!(out, ", business {:.1}%", 100.0 * b);
            }
            out.push_str(")\n");
        }
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn svg(report: &AnalysisReport) -> String {
    let tree = &report.dendrogram;
    let n = tree.leaves().len();
    let lay = layout(tree);
    let clusters = cluster_annotations(report);
    let color_of = |id: &str| -> &str {
        report
            .clusters
            .as_ref()
            .and_then(|c| {
                c.groups
                    .iter()
                    .position(|g| g.members.iter().any(|m| m == id))
            })
            .map(|i| PALETTE[i % PALETTE.len()])
            .unwrap_or("#000000")
    };
    let labels: Vec<String> = tree
        .leaves()
        .iter()
        .map(|id| report.leaf_label(id))
        .collect();
    let label_px = 7.0
        * labels
            .iter()
            .map(|l| l.chars().count() + 5)
            .max()
            .unwrap_or(4) as f64;
    let (margin, plot_w, row_px) = (20.0, 480.0, 11.0);
    let x0 = margin + label_px;
    let width = x0 + plot_w + 2.0 * margin;
    let height = margin * 2.0 + row_px * (2 * n.max(1)) as f64 + 30.0;
    let x_of = |h: f64| {
        if lay.max_height > 0.0 {
            x0 + h / lay.max_height * plot_w
        } else {
            x0
        }
    };
    let y_of = |row: usize| margin + row as f64 * row_px;
    let node_id = |node: Node| match node {
        Node::Leaf(i) => i,
        Node::Merge(k) => n + k,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for &leaf in &lay.order {
        let id = &tree.leaves()[leaf];
        let text = match clusters.get(id.as_str()) {
            Some(c) => format!("[{c}] {}", labels[leaf]),
            None => labels[leaf].clone(),
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" dominant-baseline="middle" fill="{}">{}</text>"#,
            x0 - 4.0,
            y_of(lay.row[leaf]),
            color_of(id),
            xml_escape(&text)
        );
    }
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="1" fill="none">"#);
    for merge in tree.merges() {
        let x = x_of(merge.height);
        let ys: Vec<f64> = [merge.left, merge.right]
            .iter()
            .map(|&child| {
                let y = y_of(lay.row[node_id(child)]);
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.1}" y1="{y:.1}" x2="{x:.1}" y2="{y:.1}"/>"#,
                    x_of(tree.height_of(child))
                );
                y
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}"/>"#,
            ys[0], ys[1]
        );
    }
    out.push_str("</g>\n");
    // height axis
    let axis_y = y_of(2 * n.max(1) - 1) + 10.0;
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.1}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}" stroke="black"/>"#,
        x0 + plot_w
    );
    for i in 0..=4 {
        let h = lay.max_height * i as f64 / 4.0;
        let x = x_of(h);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{axis_y:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{h:.3}</text>"#,
            axis_y + 4.0,
            axis_y + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Height</text>"#,
        x0 + plot_w / 2.0,
        axis_y + 28.0
    );
    out.push_str("</svg>\n");
    out
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    provenance: &'a Provenance,
    scores: Vec<ScoreRow<'a>>,
    clusters: Option<&'a ClusterAssignment>,
    business: Option<&'a BusinessSummary>,
}

/// Combined machine-readable report (scores in rank order, clusters,
/// business summary, provenance).
pub fn emit_report_json(report: &AnalysisReport) -> Result<String> {
    let doc = ReportDoc {
        provenance: &report.provenance,
        scores: report
            .scores
            .iter()
            .map(|s| ScoreRow {
                type_id: &s.type_id,
                attributes: &s.attributes,
                rank: s.rank,
                a: s.posterior.a(),
                b: s.posterior.b(),
                median: s.median,
                variance: s.variance,
                raw_score: s.raw_score,
                scaled_score: s.scaled_score,
            })
            .collect(),
        clusters: report.clusters.as_ref(),
        business: report.business.as_ref(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Cluster table: one row per group, most complex first.
pub fn emit_cluster_table(report: &AnalysisReport, format: TableFormat) -> Result<Option<String>> {
    let Some(c) = &report.clusters else {
        return Ok(None);
    };
    let out = match format {
        TableFormat::Json => serde_json::to_string_pretty(c)?,
        TableFormat::Csv => {
            let mut rows = vec![[
                "cluster",
                "type_id",
                "scaled_score",
                "mean_scaled_score",
                "business_fraction",
            ]
            .map(String::from)
            .to_vec()];
            for g in &c.groups {
                for m in &g.members {
                    let score = report
                        .score_of(m)
                        .map(|s| s.scaled_score)
                        .unwrap_or(f64::NAN);
                    rows.push(vec![
                        g.label.clone(),
                        m.clone(),
                        score.to_string(),
                        g.mean_scaled_score.to_string(),
                        g.business_fraction
                            .map(|b| b.to_string())
                            .unwrap_or_default(),
                    ]);
                }
            }
            csv_to_string(rows)?
        }
        TableFormat::Text => {
            let header = ["Cluster", "Members", "Mean score", "Business %"].map(String::from);
            let body: Vec<Vec<String>> = c
                .groups
                .iter()
                .map(|g| {
                    vec![
                        g.label.clone(),
                        g.members
                            .iter()
                            .map(|m| report.leaf_label(m))
                            .collect::<Vec<_>>()
                            .join(" "),
                        format!("{:.1}", g.mean_scaled_score),
                        g.business_fraction
                            .map(|b| format!("{:.1}", 100.0 * b))
                            .unwrap_or_else(|| "-".into()),
                    ]
                })
                .collect();
            text_table(&header, &body)
        }
    };
    Ok(Some(out))
}
