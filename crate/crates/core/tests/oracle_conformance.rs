//! Runs the interpreter against the golden corpus under
//! `tests/golden/oracle/`. Each fixture is a valid Prolog file whose
//! trailing comment lines record queries and the answers a conforming
//! Prolog system produced for them:
//!
//! ```text
//! %? query @ depth
//! %= X = a          (one line per expected answer, in order)
//! %! exhausted      (expected completeness flag)
//! ```

use plrefactor_core::model::{load_program, Config};
use plrefactor_core::oracle::{solve_text, Completeness};

/// Renames `_N` variable tokens to first-occurrence indices so answer
/// lines compare independently of either side's numbering scheme.
fn canon_vars(line: &str) -> String {
    let bytes = line.as_bytes();
    let mut out = String::new();
    let mut names: Vec<String> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let starts_token = c == '_'
            && i + 1 < bytes.len()
            && bytes[i + 1].is_ascii_digit()
            && (i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_'));
        if starts_token {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let tok = &line[i..j];
            let idx = match names.iter().position(|n| n == tok) {
                Some(k) => k,
                None => {
                    names.push(tok.to_string());
                    names.len() - 1
                }
            };
            out.push_str(&format!("_V{idx}"));
            i = j;
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

struct Block {
    query: String,
    depth: usize,
    expected: Vec<String>,
    flag: Completeness,
}

fn parse_fixture(text: &str) -> (String, Vec<Block>) {
    let mut program = String::new();
    let mut blocks: Vec<Block> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("%?") {
            let (query, depth) = rest.rsplit_once('@').expect("query line has @ depth");
            blocks.push(Block {
                query: query.trim().to_string(),
                depth: depth.trim().parse().expect("numeric depth"),
                expected: Vec::new(),
                flag: Completeness::Exhausted,
            });
        } else if let Some(rest) = line.strip_prefix("%=") {
            blocks
                .last_mut()
                .expect("%= after %?")
                .expected
                .push(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("%!") {
            blocks.last_mut().expect("%! after %?").flag = match rest.trim() {
                "exhausted" => Completeness::Exhausted,
                "depth-cutoff" => Completeness::DepthCutoff,
                other => panic!("unknown flag {other}"),
            };
        } else {
            program.push_str(line);
            program.push('\n');
        }
    }
    (program, blocks)
}

#[test]
fn golden_corpus_matches_recorded_answers() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/oracle");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .expect("golden corpus directory")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "pl"))
        .collect();
    paths.sort();
    assert_eq!(paths.len(), 20, "fixed corpus of twenty programs");

    for path in paths {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = std::fs::read_to_string(&path).unwrap();
        let (program_text, blocks) = parse_fixture(&text);
        assert!(!blocks.is_empty(), "{name}: fixture declares no queries");
        let program = load_program(
            &[("golden.pl".to_string(), program_text)],
            None,
            &Config::default(),
        );
        for block in blocks {
            let set = solve_text(&program, "user", &block.query, block.depth)
                .unwrap_or_else(|e| panic!("{name} ?- {}: {e}", block.query));
            let got: Vec<String> = set.rendered().iter().map(|l| canon_vars(l)).collect();
            let want: Vec<String> = block.expected.iter().map(|l| canon_vars(l)).collect();
            assert_eq!(got, want, "{name} ?- {}", block.query);
            assert_eq!(set.completeness, block.flag, "{name} ?- {}", block.query);
        }
    }
}
