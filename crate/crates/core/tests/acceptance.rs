//! One line per acceptance criterion. Sizes, fuel and sample counts are
//! pinned; every criterion is exact (zero failures).

use minidot::harness::gallery::gallery;
use minidot::harness::suites::{self, SuiteReport};
use minidot::judgment::CheckConfig;
use minidot::syntax::CalculusLevel as L;

fn report(n: u32, what: &str, reps: &[SuiteReport]) {
    let ok = reps.iter().all(SuiteReport::passed);
    let cases: usize = reps.iter().map(|r| r.cases).sum();
    let unknown: usize = reps.iter().map(|r| r.unknown).sum();
    println!("criterion {n} {what}: {} ({cases} cases, {unknown} unknown)", if ok { "PASS" } else { "FAIL" });
    for r in reps {
        for f in r.failures.iter().take(10) {
            println!("  {}: {f}", r.name);
        }
    }
    assert!(ok, "criterion {n} failed");
}

#[test]
fn c1_soundness() {
    let cfg = CheckConfig::default();
    report(
        1,
        "soundness suites",
        &[
            suites::soundness(L::DSub, 5, 20, &cfg),
            suites::soundness(L::DSubBotAndOrRec, 5, 30, &cfg),
            suites::soundness(L::Dot, 6, 30, &cfg),
        ],
    );
}

#[test]
fn c2_evaluator_laws() {
    let reps: Vec<_> = L::ALL.iter().map(|&l| suites::evaluator_laws(l, 10_000, 30, 2)).collect();
    report(2, "evaluator fuel laws", &reps);
}

#[test]
fn c3_gallery() {
    let cases = gallery(&CheckConfig::default());
    let ok = cases.iter().all(|c| c.passed());
    println!("criterion 3 bad-bounds gallery: {}", if ok { "PASS" } else { "FAIL" });
    for c in &cases {
        println!("  {}: expected {:?}, observed {:?}", c.name, c.expected, c.observed);
    }
    assert!(ok);
}

#[test]
fn c4_pushback() {
    report(4, "pushback equivalence", &[suites::pushback_equivalence(L::DSubBot, 4, &CheckConfig::default())]);
}

#[test]
fn c5_static_implies_dynamic() {
    let cfg = CheckConfig::default();
    report(
        5,
        "static implies dynamic",
        &[suites::static_implies_dynamic(L::DSubBot, 3, &cfg), suites::substitution_probe(1000, 5, &cfg)],
    );
}

#[test]
fn c6_smallstep() {
    report(6, "small-step agreement", &[suites::smallstep_equivalence(6, 30, 200, &CheckConfig::default())]);
}

#[test]
fn c7_bridge() {
    report(7, "F<: bridge", &[suites::bridge(5, &CheckConfig::default())]);
}

#[test]
fn c8_mutable_references() {
    report(8, "mutable references", &[suites::mutable_references(5, 30, &CheckConfig::default())]);
}

#[test]
fn c9_mutations() {
    let ms = suites::mutations(&CheckConfig::default());
    let ok = ms.iter().all(|m| m.failures >= 1);
    println!("criterion 9 mutation sensitivity: {}", if ok { "PASS" } else { "FAIL" });
    for m in &ms {
        println!("  {}: {} failures", m.mutation, m.failures);
    }
    assert!(ok);
}
