//! Acceptance gate: every headline guarantee of the toolkit, one pass/fail
//! line per criterion. Criteria map onto named checks of the verification
//! suites; any failed check fails the matching criterion.

use qudit_bqc::verify::{run_suite, CheckResult, SuiteReport, VerifyConfig};

struct Criterion {
    number: usize,
    title: &'static str,
    /// check-name prefixes that make up this criterion
    prefixes: &'static [&'static str],
    max_seconds: Option<f64>,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        number: 1,
        title: "algebra: axioms, trace, characters, conjugations at d ∈ {2,3,4,5,8,9}, 1e-12",
        prefixes: &[
            "field-axioms",
            "trace-linearity",
            "character-multiplicativity",
            "conjugation-relations",
        ],
        max_seconds: Some(30.0),
    },
    Criterion {
        number: 2,
        title: "low-dimension anchors S₂ = diag(1,i), T₂ = diag(1,e^{iπ/4}), T₃, 1e-12",
        prefixes: &["low-dimension-anchors"],
        max_seconds: None,
    },
    Criterion {
        number: 3,
        title: "T-conjugated X(x) matches closed form (1e-10) and is never Pauli",
        prefixes: &["t-gate-closed-form"],
        max_seconds: Some(60.0),
    },
    Criterion {
        number: 4,
        title: "multiplication-gate decomposition equals M(λ) up to phase, all λ ≠ 0, 1e-10",
        prefixes: &["mult-gate-decomposition"],
        max_seconds: None,
    },
    Criterion {
        number: 5,
        title: "brickwork gadgets: exhaustive branches d ∈ {2,3}, 200 seeded runs d = 5, 1e-9",
        prefixes: &["brickwork-exhaustive", "brickwork-sampled"],
        max_seconds: Some(600.0),
    },
    Criterion {
        number: 6,
        title: "mirror: operator level n ∈ {2..5} (M(-1) for odd n) plus full-lattice n = 2 swap",
        prefixes: &["mirror-operator", "swap-full-lattice"],
        max_seconds: None,
    },
    Criterion {
        number: 7,
        title: "steered gate matches even/odd closed forms (1e-10); S(λ) steering is Clifford",
        prefixes: &["steered-gate"],
        max_seconds: None,
    },
    Criterion {
        number: 8,
        title: "hair gadgets match genuine X/Z measurements branch-by-branch, 20 seeds, 1e-9",
        prefixes: &["hair-gadgets"],
        max_seconds: None,
    },
    Criterion {
        number: 9,
        title: "graph hiding: Schmidt rank d across bridges, 1 across cuts; GE intrinsics Clifford",
        prefixes: &["graph-hiding", "ge-intrinsic-clifford"],
        max_seconds: None,
    },
    Criterion {
        number: 10,
        title: "blind protocol: exact blinded/unblinded agreement, audit p > 0.01, traps catch all",
        prefixes: &["blinded-equals-unblinded", "trap-detection", "blindness-audit"],
        max_seconds: Some(600.0),
    },
];

fn matching<'a>(reports: &'a [SuiteReport], prefixes: &[&str]) -> Vec<&'a CheckResult> {
    reports
        .iter()
        .flat_map(|r| &r.checks)
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect()
}

#[test]
fn acceptance() {
    let cfg = VerifyConfig::default();
    let reports: Vec<SuiteReport> = ["algebra", "gadgets", "mirror", "blindness"]
        .iter()
        .map(|s| run_suite(s, &cfg).expect("suite must run"))
        .collect();

    let mut failures = Vec::new();
    for criterion in CRITERIA {
        let checks = matching(&reports, criterion.prefixes);
        assert!(!checks.is_empty(), "criterion {} matched no checks", criterion.number);
        let all_passed = checks.iter().all(|c| c.passed);
        let seconds = checks.iter().map(|c| c.millis).sum::<u64>() as f64 / 1000.0;
        let in_time = criterion.max_seconds.map(|limit| seconds < limit).unwrap_or(true);
        let ok = all_passed && in_time;
        println!(
            "criterion {:>2}: {} — {} ({} checks, {:.1} s{})",
            criterion.number,
            if ok { "PASS" } else { "FAIL" },
            criterion.title,
            checks.len(),
            seconds,
            criterion
                .max_seconds
                .map(|l| format!(", limit {l:.0} s"))
                .unwrap_or_default()
        );
        if !ok {
            for c in checks.iter().filter(|c| !c.passed) {
                println!("    failed: {} — {}", c.name, c.detail);
            }
            if !in_time {
                println!(
                    "    over time: {:.1} s > {:.0} s",
                    seconds,
                    criterion.max_seconds.unwrap()
                );
            }
            failures.push(criterion.number);
        }
    }
    assert!(failures.is_empty(), "criteria failed: {failures:?}");
}
