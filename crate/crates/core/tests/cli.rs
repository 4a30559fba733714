use std::io::Write;
use std::process::{Command, Stdio};

fn minidot(args: &[&str], input: &str) -> (i32, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_minidot"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn check_prints_the_type() {
    let (code, out) = minidot(&["check", "--calculus", "DSub", "-"], "fun(x: Top) x");
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "all(x0:Top) Top");
}

#[test]
fn exit_codes() {
    assert_eq!(minidot(&["check", "-"], "new (s) { A : { l1 : Top } .. { l2 : Top } }").0, 1);
    assert_eq!(minidot(&["check", "--calculus", "DSub", "--fuel", "2", "-"], "(fun(x: Top) x) (typeval Top)").0, 2);
    assert_eq!(minidot(&["check", "-"], "fun(").0, 3);
    assert_eq!(minidot(&["frobnicate"], "").0, 3);
    assert_eq!(minidot(&["eval", "--calculus", "DSub", "-"], "(typeval Top) (typeval Top)").0, 1);
}

#[test]
fn json_report() {
    let (code, out) = minidot(&["soundcheck", "--calculus", "DSub", "--size", "4", "--fuel", "10", "--format", "json"], "");
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "Pass");
    assert_eq!(v["fuel_used"], 10);
    assert_eq!(v["violations"].as_array().map(Vec::len), Some(0));
}

#[test]
fn translate_and_step() {
    let (code, out) = minidot(&["translate", "--calculus", "FSub", "-"], "tfun(X <: Top) fun(y: X) y");
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "fun(x0:{ Type : Bot .. Top }) fun(x1:x0.Type) x1");
    let (code, out) = minidot(&["step", "--calculus", "DSub", "-"], "(fun(x: Top) x) (typeval Top)");
    assert_eq!(code, 0);
    assert!(out.contains("let-store x0 = typeval Top in"), "{out}");
}

#[test]
fn rtcheck_and_gallery() {
    let cyclic = "(fun(r: Ref (all(x: Top) Top)) (fun(u: Top) !r) (r := (fun(y: Top) (!r) y))) (ref (fun(x: Top) x))";
    assert_eq!(minidot(&["rtcheck", "--calculus", "mut", "-"], cyclic).0, 0);
    let (code, out) = minidot(&["gallery"], "");
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
}
