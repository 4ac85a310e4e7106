//! Complexity analysis of product types from pass/fail inspection counts.
//!
//! Each type's fraction nonconforming is modeled as a Jeffreys-prior beta
//! posterior. Posteriors are compared with the closed-form Hellinger distance
//! between beta distributions, scored by accumulating distances along the
//! median order (scaled to 0-10), and grouped by complete-linkage
//! agglomerative clustering.
//!
//! ```
//! use cplx_core::{analyze, AnalysisOptions, TypeCounts};
//!
//! let counts = vec![
//!     TypeCounts::new("1", 200, 5),
//!     TypeCounts::new("2", 170, 4),
//!     TypeCounts::new("3", 50, 2),
//! ];
//! let run = analyze(counts, &AnalysisOptions { k: Some(2), ..Default::default() }).unwrap();
//! let top = run.report.scores.last().unwrap();
//! assert_eq!(top.type_id, "3");
//! assert_eq!(top.scaled_score, 10.0);
//! ```

pub mod clustering;
pub mod divergence;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod posterior;
mod quadrature;
pub mod report;
pub mod scoring;
pub mod special;

pub use clustering::{
    agglomerate, cut, label_clusters, ClusterAssignment, ClusterGroup, Cut, Dendrogram, Merge, Node,
};
pub use divergence::{build_matrix, hellinger_beta, hellinger_numeric, DistanceMatrix};
pub use error::{Error, ErrorKind, Result};
pub use ingest::{
    aggregate, read_aggregated, read_raw, top_n_by_business, AggregatedSchema, BusinessSummary,
    InspectionRecord, InspectionResult, RawSchema,
};
pub use pipeline::{analyze, Analysis, AnalysisOptions, EmitFormat, InputMode, Stage};
pub use posterior::{
    fraction_nonconforming, posterior_from_counts, BetaDist, FiveNumberSummary, TypeCounts,
};
pub use report::{AnalysisReport, DendrogramFormat, Provenance, TableFormat};
pub use scoring::{raw_scores, scale_scores, sort_by_complexity, ScoredType};
pub use special::{beta_quantile, log_beta, log_gamma, reg_inc_beta};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
