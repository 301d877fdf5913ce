mod common;

use clap::CommandFactory;
use common::{eval_expr, toks};
use cotlab::cli::Cli;
use std::path::Path;
use std::process::{Command, Output};

fn cotlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cotlab")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_writes_valid_lines() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("d.txt");
    let o = cotlab(&["gen", "--task", "arithmetic", "--ops", "6", "--p", "11", "--count", "1000", "--format", "cot", "--seed", "7", "--out", p(&f)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let body = std::fs::read_to_string(&f).unwrap();
    assert_eq!(body.lines().count(), 1000);
    for line in body.lines() {
        let t = toks(line);
        assert_eq!(t.last().map(String::as_str), Some("<eos>"));
        let blocks: Vec<&[String]> = t[..t.len() - 1].split(|x| x == "=").collect();
        let v = eval_expr(blocks[0], 11).expect("problem evaluates");
        assert_eq!(blocks[0].iter().filter(|x| ["+", "−", "×", "÷"].contains(&x.as_str())).count(), 6);
        for b in &blocks[1..] {
            assert_eq!(eval_expr(b, 11), Some(v), "{line}");
        }
        assert_eq!(blocks.last().unwrap().len(), 1);
    }
}

#[test]
fn verify_construction_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.txt");
    let o = cotlab(&["verify-construction", "--task", "arithmetic", "--p", "11", "--max-ops", "7", "--trials", "500", "--seed", "1", "--report", p(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let out = text(&o.stdout);
    assert!(out.contains("mismatches: 0") && out.trim_end().ends_with("result: PASS"), "{out}");
    assert_eq!(std::fs::read_to_string(&report).unwrap(), out);
}

#[test]
fn verification_failure_exits_two() {
    let o = cotlab(&["verify-construction", "--task", "arithmetic", "--n-max", "16", "--max-ops", "3", "--trials", "20", "--seed", "1", "--quantize-bits", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stdout).contains("result: FAIL"));
}

#[test]
fn corrupt_keeps_problems_and_answers() {
    let dir = tempfile::tempdir().unwrap();
    let (d, d3) = (dir.path().join("d.txt"), dir.path().join("d3.txt"));
    assert_eq!(cotlab(&["gen", "--task", "arithmetic", "--ops", "6", "--count", "300", "--seed", "7", "--out", p(&d)]).status.code(), Some(0));
    let o = cotlab(&["corrupt", "--gamma", "0.3", "--seed", "2", "--in", p(&d), "--out", p(&d3)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let (a, b) = (std::fs::read_to_string(&d).unwrap(), std::fs::read_to_string(&d3).unwrap());
    assert_eq!(a.lines().count(), b.lines().count());
    let ends = |l: &str| {
        let t = toks(l);
        let first = t.iter().position(|x| x == "=").unwrap();
        (t[..first].to_vec(), t[t.len() - 2].clone())
    };
    for (x, y) in a.lines().zip(b.lines()) {
        assert_eq!(ends(x), ends(y));
    }
    assert_ne!(a, b);
}

#[test]
fn solve_reproduces_generated_lines() {
    let dir = tempfile::tempdir().unwrap();
    for (task, size) in [("arithmetic", "4"), ("equation", "3"), ("lis", "8"), ("ed", "5"), ("cfg", "3")] {
        let d = dir.path().join(format!("{task}.txt"));
        assert_eq!(cotlab(&["gen", "--task", task, "--size", size, "--count", "50", "--seed", "3", "--out", p(&d)]).status.code(), Some(0));
        let lines = std::fs::read_to_string(&d).unwrap();
        let sep = if task == "arithmetic" { " = " } else { " [SEP] " };
        let problems: String = lines.lines().map(|l| format!("{}\n", l.split(sep).next().unwrap())).collect();
        let pf = dir.path().join(format!("{task}.in"));
        std::fs::write(&pf, problems).unwrap();
        let o = cotlab(&["solve", "--task", task, "--in", p(&pf)]);
        assert_eq!(o.status.code(), Some(0), "{task}: {}", text(&o.stderr));
        assert_eq!(text(&o.stdout), lines, "{task}");
    }
}

#[test]
fn gen_is_deterministic_and_shard_independent() {
    let run = |shards: &str| cotlab(&["gen", "--task", "equation", "--vars", "3", "--count", "500", "--seed", "9", "--shards", shards]).stdout;
    let a = run("1");
    assert!(!a.is_empty());
    assert_eq!(a, run("1"));
    assert_eq!(a, run("5"));
}

#[test]
fn reduce_and_lemmas_succeed() {
    for args in [
        vec!["reduce", "--from", "boolean", "--max-connectives", "2", "--seed", "1"],
        vec!["reduce", "--from", "automaton", "--count", "20", "--seed", "1"],
        vec!["verify-lemmas", "--trials", "100", "--seed", "1"],
    ] {
        let o = cotlab(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}{}", text(&o.stdout), text(&o.stderr));
    }
}

#[test]
fn stats_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("l.txt");
    cotlab(&["gen", "--task", "lis", "--len", "5", "--count", "20", "--seed", "1", "--out", p(&d)]);
    let o = cotlab(&["stats", "--in", p(&d)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stdout).contains("lines: 20"));
}

#[test]
fn usage_errors_exit_one() {
    let o = cotlab(&["gen", "--task", "arithmetic", "--ops", "2", "--count", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("--seed"));

    let o = cotlab(&["gen", "--task", "arithmetic", "--ops", "2", "--count", "3", "--seed", "1", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("Usage"));

    for args in [&["frobnicate"][..], &["gen", "--task", "chess", "--size", "2", "--count", "1", "--seed", "1"], &["gen", "--task", "arithmetic", "--size", "2", "--count", "1", "--seed", "1", "--p", "12"], &["corrupt", "--gamma", "1.5", "--seed", "1", "--in", "/nonexistent", "--out", "/tmp/x"]] {
        assert_eq!(cotlab(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn every_subcommand_help_lists_its_flags() {
    let cmd = Cli::command();
    for sub in cmd.get_subcommands() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cotlab::cli::run(["cotlab", sub.get_name(), "--help"], &mut out, &mut err);
        assert_eq!(code, 0);
        let help = text(&out);
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{} help lacks --{long}", sub.get_name());
            }
        }
    }
}
