//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (visible with `cargo test -- --nocapture`).
//!
//! 1. Smooth square h-studies reach the full orders for p = 1, 2, 3.
//! 2. Step-load disk h-studies (RT) reach the guaranteed singular rates.
//! 3. Same with BDM at p = 2.
//! 4. p-elevation on the fixed coarse disk mesh decays at the guaranteed
//!    speed for the scalar and trace errors.
//! 5. The least-squares form is norm-equivalent to the product norm with
//!    refinement-stable constants.
//! 6. Constrained-projection suite.
//! 7. Structural suite (symmetry, optimality, divergence theorem, radial
//!    oracle).
//! 8. Byte-identical CSV across repeated single-threaded runs.

use fosls::harness::{
    check_norm_equivalence, check_projector_suite, check_structural, run_h_study, run_p_study,
    DomainKind, StudyConfig, StudyMode,
};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion}: {detail}");
}

fn smooth_square_config(p: usize) -> StudyConfig {
    let mut cfg = StudyConfig::defaults();
    cfg.domain = DomainKind::Square;
    cfg.case = "square_cos_cosh".into();
    cfg.regularity = f64::INFINITY;
    cfg.p_s = p;
    cfg.p_v = p;
    cfg.levels = 5;
    cfg
}

fn radial_disk_config(p: usize, levels: usize) -> StudyConfig {
    let mut cfg = StudyConfig::defaults();
    cfg.domain = DomainKind::Disk;
    cfg.case = "radial_step".into();
    cfg.regularity = 0.5;
    cfg.p_s = p;
    cfg.p_v = p;
    cfg.levels = levels;
    cfg
}

#[test]
fn criterion_1_smooth_square_full_orders() {
    for p in 1..=3 {
        let table = run_h_study(&smooth_square_config(p)).unwrap();
        let pf = p as f64;
        let ok = table.fitted.u >= pf + 1.0 - 0.15
            && table.fitted.grad_u >= pf - 0.15
            && table.fitted.phi >= pf - 0.15;
        report(
            &format!("criterion 1 (smooth square, RT p={p})"),
            ok,
            &format!(
                "u slope {:.3} >= {:.2}, grad {:.3} >= {:.2}, phi {:.3} >= {:.2}",
                table.fitted.u,
                pf + 0.85,
                table.fitted.grad_u,
                pf - 0.15,
                table.fitted.phi,
                pf - 0.15
            ),
        );
    }
}

#[test]
fn criterion_2_radial_disk_rt_rates() {
    // p = 1 over five levels
    let t1 = run_h_study(&radial_disk_config(1, 5)).unwrap();
    report(
        "criterion 2 (disk step load, RT p=1)",
        t1.fitted.u >= 1.9 && t1.fitted.grad_u >= 0.9 && t1.fitted.phi_n >= 0.85,
        &format!(
            "u slope {:.3} >= 1.9, grad {:.3} >= 0.9, trace {:.3} >= 0.85",
            t1.fitted.u, t1.fitted.grad_u, t1.fitted.phi_n
        ),
    );
    // p = 2 over four levels
    let t2 = run_h_study(&radial_disk_config(2, 4)).unwrap();
    report(
        "criterion 2 (disk step load, RT p=2)",
        t2.fitted.u >= 2.35 && t2.fitted.grad_u >= 1.35 && t2.fitted.phi_n >= 0.85,
        &format!(
            "u slope {:.3} >= 2.35, grad {:.3} >= 1.35, trace {:.3} >= 0.85",
            t2.fitted.u, t2.fitted.grad_u, t2.fitted.phi_n
        ),
    );
}

#[test]
fn criterion_3_radial_disk_bdm_rate() {
    let mut cfg = radial_disk_config(2, 4);
    cfg.apply_key("family", "bdm").unwrap();
    let table = run_h_study(&cfg).unwrap();
    report(
        "criterion 3 (disk step load, BDM p=2)",
        table.fitted.u >= 2.35,
        &format!("u slope {:.3} >= 2.35 (guaranteed 2.5)", table.fitted.u),
    );
}

#[test]
fn criterion_4_p_elevation_on_fixed_mesh() {
    let mut cfg = radial_disk_config(1, 3);
    cfg.mode = StudyMode::PElevation;
    cfg.p_max = 8;
    let table = run_p_study(&cfg).unwrap();
    // the trace superconvergence is recorded but only p^-1 is required
    println!(
        "ACCEPTANCE criterion 4 note: observed trace p-slope {:.3} (guaranteed -1.0, observed decay is typically much faster)",
        table.fitted.phi_n
    );
    report(
        "criterion 4 (p-elevation, RT, p=1..8)",
        table.fitted.u <= -2.0 && table.fitted.phi_n <= -1.0,
        &format!(
            "u p-slope {:.3} <= -2.0, trace p-slope {:.3} <= -1.0",
            table.fitted.u, table.fitted.phi_n
        ),
    );
}

#[test]
fn criterion_5_norm_equivalence() {
    let results = check_norm_equivalence(2.0, 1.0).unwrap();
    let ok = results.iter().all(|r| r.passed);
    let detail: Vec<String> = results
        .iter()
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect();
    report("criterion 5 (norm equivalence)", ok, &detail.join("; "));
}

#[test]
fn criterion_6_projection_suite() {
    let results = check_projector_suite(0).unwrap();
    for r in &results {
        report(
            &format!("criterion 6 ({})", r.name),
            r.passed,
            &r.detail,
        );
    }
}

#[test]
fn criterion_7_structural_suite() {
    let results = check_structural(0).unwrap();
    for r in &results {
        report(
            &format!("criterion 7 ({})", r.name),
            r.passed,
            &r.detail,
        );
    }
}

#[test]
fn criterion_8_deterministic_csv() {
    for (p, levels) in [(1usize, 5usize), (2, 4)] {
        let cfg = radial_disk_config(p, levels);
        let t1 = run_h_study(&cfg).unwrap();
        let t2 = run_h_study(&cfg).unwrap();
        let c1 = fosls::harness::csv_string(&t1).into_bytes();
        let c2 = fosls::harness::csv_string(&t2).into_bytes();
        report(
            &format!("criterion 8 (determinism, RT p={p})"),
            c1 == c2,
            &format!("{} CSV bytes byte-identical", c1.len()),
        );
    }
}
