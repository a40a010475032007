mod support;

use std::path::Path;

use classmark::cli::{run, EXIT_DATA, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use classmark::render::{render_lookup, ResponseFormat};
use classmark::resolver::{Resolver, UriScheme};
use classmark::store::DatasetTier;
use support::{sample_dir, sample_snapshot};

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn classmark(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("classmark").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Outcome {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn sample() -> String {
    sample_dir().to_string_lossy().into_owned()
}

#[test]
fn ingest_reports_counts_and_writes_an_archive() {
    let dest = tempfile::tempdir().unwrap();
    let archive = dest.path().join("snap");
    let o = classmark(&["ingest", &sample(), "--out", archive.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let mut lines = o.out.lines();
    assert_eq!(lines.next(), Some("40 records, 3 redirects, 2 alignments"));
    assert_eq!(lines.next(), Some("versions: MRF93, MRF01, MRF11"));
    let checksum = sample_snapshot().checksum().to_string();
    assert_eq!(lines.next(), Some(format!("checksum: {checksum}").as_str()));
    for f in ["records.jsonl", "redirects.jsonl", "alignments.jsonl", "manifest.json"] {
        assert!(archive.join(f).is_file(), "{f}");
    }
    // the archive loads back to the same snapshot
    let loaded = classmark::archive::open(&archive).unwrap();
    assert_eq!(loaded.checksum(), checksum);

    // without --out nothing is written
    let o = classmark(&["ingest", &sample()]);
    assert_eq!(o.code, EXIT_OK);
    assert!(!o.out.contains("archive written"));
}

#[test]
fn ingest_missing_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("records.jsonl"),
        support::record("5", "1", ("V1", 1), "summary"),
    )
    .unwrap();
    let o = classmark(&["ingest", dir.path().to_str().unwrap()]);
    assert_eq!(o.code, EXIT_RUNTIME, "{}", o.err);
    assert!(o.err.contains("redirects.jsonl"), "{}", o.err);
}

#[test]
fn ingest_rejects_duplicates_naming_the_line() {
    let line = support::record("5", "1", ("V1", 1), "summary");
    let dup = support::record("5", "2", ("V1", 1), "summary");
    let dir = support::fixture_dir(&[line, dup], &[], &[]);
    let o = classmark(&["ingest", dir.path().to_str().unwrap()]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.err.contains("records.jsonl:2"), "{}", o.err);
    assert!(o.err.contains("line 1"), "{}", o.err);
}

#[test]
fn ingest_refuses_to_archive_a_dirty_snapshot() {
    let dir = support::fixture_dir(
        &[
            support::deprecated("1", "1", &["2"]),
            support::deprecated("2", "2", &["1"]),
            support::record_with(
                "3",
                "3",
                ("MRF93", 1993),
                "summary",
                serde_json::json!({ "see_also": ["9"] }),
            ),
        ],
        &[
            support::redirect("1", &["2"], ("MRF01", 2001)),
            support::redirect("2", &["1"], ("MRF01", 2001)),
        ],
        &[],
    );
    let dest = tempfile::tempdir().unwrap();
    let archive = dest.path().join("snap");
    let o = classmark(&[
        "ingest",
        dir.path().to_str().unwrap(),
        "--out",
        archive.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.err.contains("redirect cycle: 1 -> 2 -> 1"), "{}", o.err);
    assert!(o.err.contains("unknown notation 9"), "{}", o.err);
    assert!(!archive.exists());
}

#[test]
fn parse_prints_tree_and_components() {
    let o = classmark(&["parse", "681.3 (035)"]);
    assert_eq!(o.code, EXIT_OK);
    let mut lines = o.out.lines();
    assert_eq!(lines.next(), Some("681.3(035)"));
    assert!(o.out.contains("attachment"), "{}", o.out);
    assert!(o.out.contains("└─"), "{}", o.out);
    let components: Vec<&str> = o.out.lines().skip_while(|l| *l != "components:").skip(1).collect();
    assert_eq!(components.len(), 2);
    assert!(components[0].trim_start().starts_with("681.3"));
    assert!(components[0].trim_end().ends_with("0..5"));
    assert!(components[1].trim_start().starts_with("(035)"));

    let o = classmark(&["parse", "311:[622+669]"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(o.out.lines().skip_while(|l| *l != "components:").count(), 4);
}

#[test]
fn parse_errors_point_at_the_position() {
    let o = classmark(&["parse", "622::"]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.out.is_empty());
    let lines: Vec<&str> = o.err.lines().collect();
    let caret = lines.iter().find(|l| l.trim() == "^").expect("caret line");
    let input = lines.iter().position(|l| l.contains("622::")).unwrap();
    assert_eq!(
        caret.find('^').unwrap() - lines[input].find("622::").unwrap(),
        5,
        "{}",
        o.err
    );
}

#[test]
fn lookup_matches_the_service_renderer() {
    let snapshot = sample_snapshot();
    let scheme = UriScheme::default();
    let resolver = Resolver::new(&snapshot, &scheme);
    for (flag, format) in [
        ("json", ResponseFormat::Json),
        ("ttl", ResponseFormat::Turtle),
        ("html", ResponseFormat::Html),
    ] {
        let o = classmark(&[
            "--snapshot",
            &sample(),
            "--format",
            flag,
            "lookup",
            "681.3(035)",
            "--tier",
            "full",
        ]);
        assert_eq!(o.code, EXIT_OK, "{}", o.err);
        let report = resolver.interpret("681.3(035)", DatasetTier::Full, None).unwrap();
        assert_eq!(o.out, render_lookup(&report, &resolver, format));
    }
}

#[test]
fn lookup_examples() {
    let o = classmark(&["--snapshot", &sample(), "lookup", "=162.3"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.contains("https://udcdata.info/MRF93/%3D162.3"));
    // unknown notations are a normal answer, not an error
    let o = classmark(&["--snapshot", &sample(), "lookup", "999.999"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.contains("\"unknown\""));
    let o = classmark(&["--snapshot", &sample(), "lookup", "68.13"]);
    assert_eq!(o.code, EXIT_DATA);
    let o = classmark(&["--snapshot", &sample(), "lookup", "004", "--version", "MRF00"]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.err.contains("MRF00"));
    let o = classmark(&[
        "--snapshot",
        &sample(),
        "--base-uri",
        "http://localhost/kos",
        "lookup",
        "=162.3",
    ]);
    assert!(o.out.contains("http://localhost/kos/MRF93/%3D162.3"), "{}", o.out);
}

#[test]
fn mint_prints_one_uri_per_notation() {
    let o = classmark(&["--snapshot", &sample(), "mint", "=162.3", "004", "621.039.6"]);
    assert_eq!(o.code, EXIT_OK);
    assert_eq!(
        o.out,
        "=162.3\thttps://udcdata.info/MRF93/%3D162.3\n\
         004\thttps://udcdata.info/MRF01/004\n\
         621.039.6\thttps://udcdata.info/MRF11/621.039.6\n"
    );
    let o = classmark(&["--snapshot", &sample(), "mint", "004", "999.999"]);
    assert_eq!(o.code, EXIT_DATA);
    assert_eq!(o.out.lines().count(), 1);
    assert!(o.err.contains("999.999"));
}

#[test]
fn usage_errors() {
    assert_eq!(classmark(&[]).code, EXIT_USAGE);
    assert_eq!(classmark(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(classmark(&["mint"]).code, EXIT_USAGE);
    assert_eq!(classmark(&["lookup", "004"]).code, EXIT_USAGE, "no snapshot");
    assert_eq!(
        classmark(&["--snapshot", &sample(), "--format", "xml", "lookup", "004"]).code,
        EXIT_USAGE
    );
    assert_eq!(
        classmark(&["--snapshot", &sample(), "lookup", "004", "--tier", "gold"]).code,
        EXIT_USAGE
    );
    assert_eq!(classmark(&["--base-uri", "not a uri", "parse", "5"]).code, EXIT_USAGE);
    let help = classmark(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.out.contains("lookup"));
    assert_eq!(classmark(&["--version"]).code, EXIT_OK);
}

#[test]
fn broken_archives_are_data_errors() {
    let dest = tempfile::tempdir().unwrap();
    let archive = dest.path().join("snap");
    assert_eq!(
        classmark(&["ingest", &sample(), "--out", archive.to_str().unwrap()]).code,
        EXIT_OK
    );
    let records = archive.join("records.jsonl");
    let mut text = std::fs::read_to_string(&records).unwrap();
    text = text.replacen("Czech language", "Slovak language", 1);
    std::fs::write(&records, text).unwrap();
    let o = classmark(&["--snapshot", archive.to_str().unwrap(), "lookup", "004"]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.err.contains("checksum mismatch"), "{}", o.err);

    let missing = dest.path().join("nowhere");
    assert_eq!(
        classmark(&["--snapshot", missing.to_str().unwrap(), "lookup", "004"]).code,
        EXIT_RUNTIME
    );
}

fn write_config(dir: &Path, keys: &str) -> std::path::PathBuf {
    let path = dir.join("classmark.toml");
    let text = format!("snapshot = {:?}\nbind = \"127.0.0.1:0\"\n{keys}", sample());
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn serve_rejects_bad_key_entries_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[[keys]]\nid = \"library\"\nkey = \"k1\"\ntier = \"full\"\n\n[[keys]]\nid = \"school\"\nkey = \"k2\"\ntier = \"gold\"\n",
    );
    let o = classmark(&["serve", config.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.err.contains("invalid key entry #2 (id `school`)"), "{}", o.err);

    let o = classmark(&["serve", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(o.code, EXIT_RUNTIME);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_classmark");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap();
    let ok = status(&["parse", "681.3(035)"]);
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("681.3(035)\n"));
    assert_eq!(status(&["parse", "68.13"]).status.code(), Some(EXIT_DATA));
    assert_eq!(status(&["bogus"]).status.code(), Some(EXIT_USAGE));
}

#[test]
fn shipped_sample_config_loads() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("config/sample.toml");
    let config = classmark::service::Config::load(&path).unwrap();
    assert_eq!(
        config.snapshot.canonicalize().unwrap(),
        sample_dir().canonicalize().unwrap()
    );
    assert_eq!(config.bind.to_string(), "127.0.0.1:8080");
    let grant = classmark::service::authorize(&config.keys, Some("library-demo-key"), None).unwrap();
    assert_eq!(grant.tier, DatasetTier::Full);
}
