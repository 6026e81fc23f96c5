#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_statecap"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn statecap")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// One of the channel files shipped in the repository.
pub fn shipped(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../channels")
        .join(name);
    p.canonicalize()
        .expect("shipped channel")
        .display()
        .to_string()
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// Data records of a CSV written by the tool, keyed by header.
pub fn records(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            header
                .iter()
                .cloned()
                .zip(rec.iter().map(String::from))
                .collect()
        })
        .collect()
}

pub fn num(rec: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    rec[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = {:?}", rec[key]))
}

/// Single-user channel file from rows over `(x, s)`.
pub fn single_file(state: &[f64], nx: usize, ny: usize, rows: &[Vec<f64>]) -> String {
    let fmt = |v: &[f64]| {
        let s: Vec<String> = v.iter().map(|p| format!("{p:?}")).collect();
        format!("[{}]", s.join(", "))
    };
    let rows: Vec<String> = rows.iter().map(|r| format!("  {},", fmt(r))).collect();
    format!(
        "model = \"single\"\nstate = {}\n\n[alphabets]\nx = {nx}\ns = {}\ny = {ny}\n\n\
         [kernel]\nindex = [\"x\", \"s\"]\ncolumns = [\"y\"]\nrows = [\n{}\n]\n",
        fmt(state),
        state.len(),
        rows.join("\n")
    )
}

/// Broadcast file with `p(y1|x)` and `p(y2|y1)`, one state.
pub fn bc_file(w1: &[Vec<f64>], w2: &[Vec<f64>]) -> String {
    let (nx, ny1, ny2) = (w1.len(), w1[0].len(), w2[0].len());
    let mut rows = Vec::new();
    for r in w1 {
        let mut row = Vec::new();
        for (y1, &p) in r.iter().enumerate() {
            row.extend(w2[y1].iter().map(|q| format!("{:?}", p * q)));
        }
        rows.push(format!("  [{}],", row.join(", ")));
    }
    format!(
        "model = \"bc\"\nstate = [1.0]\n\n[alphabets]\nx = {nx}\ns = 1\ny1 = {ny1}\ny2 = {ny2}\n\n\
         [kernel]\nindex = [\"x\", \"s\"]\ncolumns = [\"y1\", \"y2\"]\nrows = [\n{}\n]\n",
        rows.join("\n")
    )
}

/// Runs the `# command:` line of a manifest and returns the new CSV text.
pub fn rerun(text: &str, out: &str) -> String {
    let line = statecap_cli::manifest::field(text, "command").expect("command line");
    let argv = shell_words::split(line).unwrap();
    assert_eq!(argv[0], "statecap");
    let o = bin().args(&argv[1..]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    std::fs::read_to_string(out).unwrap()
}
