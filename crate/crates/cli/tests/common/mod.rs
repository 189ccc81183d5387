#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use taxoforge_core::synth::{clustered_fixture, listing_store, reference_subset, ClusterSpec, ClusteredFixture};
use taxoforge_core::taxonomy::{NodeId, NodeKind, Taxonomy};

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(ws: &Path, args: &[&str]) -> Output {
    let mut argv = vec!["taxoforge".to_owned(), "--workspace".to_owned(), ws.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = taxoforge_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Absolute path of a file inside a workspace, as a CLI argument.
pub fn file(ws: &tempfile::TempDir, name: &str) -> String {
    ws.path().join(name).display().to_string()
}

/// Runs and asserts success.
pub fn ok(ws: &Path, args: &[&str]) -> String {
    let o = cli(ws, args);
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    o.stdout
}

/// File name to contents for every file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

pub fn small_spec() -> ClusterSpec {
    ClusterSpec {
        topics: 3,
        subtopics: 3,
        leaves: 6,
        sentences: 3000,
        ..Default::default()
    }
}

pub const KEPT_LEAVES: usize = 4;

/// Workspace template shared by the tests of one binary: a taxonomy with
/// the first leaves of every subtopic, a trained model and scorer, listings
/// and a reference ontology. Held-out leaves go to `expand.txt` and
/// `suggest.txt`.
pub struct Template {
    pub dir: PathBuf,
    pub fixture: ClusteredFixture,
    pub held_out: Vec<String>,
}

pub fn template(name: &str) -> &'static Template {
    static CELL: OnceLock<Template> = OnceLock::new();
    CELL.get_or_init(|| build_template(name))
}

fn build_template(name: &str) -> Template {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("template-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();

    let f = clustered_fixture(&small_spec());
    let mut t = Taxonomy::new();
    let mut held_out = Vec::new();
    let mut flat = 0;
    for (ti, &topic) in f.topics.iter().enumerate() {
        let tn = t.add_node(f.truth.label(topic).unwrap(), NodeId::ROOT, NodeKind::Category).unwrap();
        for &sub in &f.subtopics[ti] {
            let sn = t.add_node(f.truth.label(sub).unwrap(), tn, NodeKind::Category).unwrap();
            for (i, &leaf) in f.leaves[flat].iter().enumerate() {
                let label = f.truth.label(leaf).unwrap();
                if i < KEPT_LEAVES {
                    t.add_node(label, sn, NodeKind::Keyphrase).unwrap();
                } else {
                    held_out.push(label.to_owned());
                }
            }
            flat += 1;
        }
    }
    t.save(fs::File::create(dir.join("taxonomy.json")).unwrap()).unwrap();

    let (expand, suggest) = held_out.split_at(held_out.len() / 2);
    fs::write(dir.join("expand.txt"), expand.join("\n") + "\n").unwrap();
    fs::write(dir.join("suggest.txt"), suggest.join("\n") + "\n").unwrap();
    fs::write(dir.join("corpus.txt"), f.lines.join("\n") + "\n").unwrap();

    let mut listings = fs::File::create(dir.join("listings.jsonl")).unwrap();
    for l in listing_store(&f, 200, 7) {
        serde_json::to_writer(&mut listings, &l).unwrap();
        listings.write_all(b"\n").unwrap();
    }
    let reference = reference_subset(&f.truth, 0.8, 1);
    let mut r = String::new();
    for (c, p) in reference.edges() {
        r.push_str(&format!("{c}\t{p}\n"));
    }
    fs::write(dir.join("reference.tsv"), r).unwrap();

    let corpus = dir.join("corpus.txt").display().to_string();
    ok(&dir, &["train-embeddings", &corpus, "--dim", "32", "--epochs", "20"]);
    ok(&dir, &["gen-pairs", "--negatives", "2"]);
    ok(&dir, &["train-scorer"]);
    Template {
        dir,
        fixture: f,
        held_out,
    }
}

/// A fresh workspace holding copies of the named template files.
pub fn workspace(tpl: &Template, files: &[&str]) -> tempfile::TempDir {
    let ws = tempfile::tempdir().unwrap();
    for f in files {
        fs::copy(tpl.dir.join(f), ws.path().join(f)).unwrap();
    }
    ws
}

pub const ALL_FILES: &[&str] = &[
    "taxonomy.json",
    "model.emb",
    "scorer.json",
    "pairs.tsv",
    "listings.jsonl",
    "reference.tsv",
    "expand.txt",
    "suggest.txt",
];

pub fn load_taxonomy(ws: &Path) -> Taxonomy {
    Taxonomy::load(fs::File::open(ws.join("taxonomy.json")).unwrap()).unwrap()
}
