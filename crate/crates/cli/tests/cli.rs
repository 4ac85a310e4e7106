use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn cplx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cplx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn analyze_case_study_writes_every_artifact() {
    let out = tempfile::tempdir().unwrap();
    let input = data("welds_top35.csv");
    let res = cplx(&[
        "analyze",
        "--input",
        path_str(&input),
        "--attrs",
        "nps,schedule,material",
        "--top",
        "35",
        "--grand-total",
        "224298",
        "--k",
        "7",
        "--emit",
        "json,csv,newick,ascii,svg",
        "--out",
        path_str(out.path()),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(
        files_in(out.path()),
        [
            "boxplot.csv",
            "boxplot.json",
            "business.csv",
            "clusters.csv",
            "clusters.json",
            "dendrogram.json",
            "dendrogram.nwk",
            "dendrogram.svg",
            "dendrogram.txt",
            "distance_matrix.csv",
            "distance_matrix.json",
            "report.json",
            "scores.csv",
            "scores.json",
            "scores.txt",
        ]
    );
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("cluster G:"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["provenance"]["n_analyzed"], 35);
    assert_eq!(report["clusters"]["groups"].as_array().unwrap().len(), 7);
}

#[test]
fn stages_limit_outputs() {
    let out = tempfile::tempdir().unwrap();
    let input = data("illustrative.csv");
    let res = cplx(&[
        "distance",
        "--input",
        path_str(&input),
        "--out",
        path_str(out.path()),
    ]);
    assert!(res.status.success());
    assert_eq!(
        files_in(out.path()),
        ["distance_matrix.csv", "distance_matrix.json"]
    );
    assert!(res.stdout.is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let input = data("illustrative.csv");
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            let res = cplx(&[
                "cluster",
                "--input",
                path_str(&input),
                "--k",
                "4",
                "--emit",
                "json,csv,newick,ascii,svg",
                "--out",
                path_str(out.path()),
            ]);
            assert!(res.status.success());
            files_in(out.path())
                .into_iter()
                .map(|f| std::fs::read(out.path().join(&f)).unwrap())
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn raw_mode_groups_items() {
    let out = tempfile::tempdir().unwrap();
    let input = data("welds_raw_sample.csv");
    let res = cplx(&[
        "score",
        "--input",
        path_str(&input),
        "--mode",
        "raw",
        "--type-col",
        "weld_id",
        "--attrs",
        "nps,schedule,material",
        "--out",
        path_str(out.path()),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let scores = std::fs::read_to_string(out.path().join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 6);
}

#[test]
fn missing_input_fails_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = cplx(&[
        "analyze",
        "--input",
        "/nonexistent/input.csv",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(res.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&res.stderr).contains("E802"));
    assert!(!out.exists());
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let input = data("illustrative.csv");
    let input = path_str(&input);

    let k_too_big = cplx(&[
        "cluster",
        "--input",
        input,
        "--k",
        "9",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(k_too_big.status.code(), Some(2));

    let bad_format = cplx(&[
        "cluster",
        "--input",
        input,
        "--emit",
        "pdf",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(bad_format.status.code(), Some(2));

    let missing_col = cplx(&[
        "score",
        "--input",
        input,
        "--attrs",
        "nps",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(missing_col.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing_col.stderr).contains("ingest"));

    let bad_counts = dir.path().join("bad.csv");
    std::fs::write(&bad_counts, "type_id,inspected,repaired\n1,10,11\n").unwrap();
    let res = cplx(&[
        "score",
        "--input",
        path_str(&bad_counts),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(res.status.code(), Some(3));

    let unknown_flag = cplx(&["score", "--frobnicate"]);
    assert_eq!(unknown_flag.status.code(), Some(2));

    assert!(!out.exists());
}

#[test]
fn zero_inspection_types_warn_and_continue() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("counts.csv");
    std::fs::write(
        &input,
        "type_id,inspected,repaired\na,10,1\nb,0,0\nc,20,5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = cplx(&[
        "score",
        "--input",
        path_str(&input),
        "--out",
        path_str(&out),
    ]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("type b has no inspected items"));
}
