//! Acceptance criteria A1-A10. Prints one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- A2 A4`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use ccqsim::analysis::{single_excitation_population, single_excitation_visibility, OutcomeLabel};
use ccqsim::basis::{max_abs, Mat4};
use ccqsim::compensation::{residual, CompensationMode};
use ccqsim::drive::Envelope;
use ccqsim::ensemble::{configured_sweep, resolve_workers, run_plan, SimulationConfig};
use ccqsim::slh::{verify_cascade, HilbertLayout, PortDrives};
use ccqsim::sme::{simulate_trajectory, unconditioned_evolution, Representation};
use ccqsim::{SystemParams, C64};

use common::*;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

/// Pulse used in the ideal setting: 2.5 us in total.
fn ideal_pulse() -> Envelope {
    Envelope::flat_top_width(mhz(1.0), 0.75, 2.5)
}

fn a1() -> Verdict {
    let mut p = histogram_setting();
    p.delta1 = mhz(0.3);
    p.delta2 = mhz(-0.2);
    let ports = PortDrives { eps: C64::new(0.4, 0.1), a_bar: C64::new(0.2, -0.3), b_bar: C64::new(-0.1, 0.25) };
    let report = verify_cascade(&p, &ports, &HilbertLayout::new(8, 8), 10, 7).unwrap();
    let worst = report.clauses.iter().map(|c| c.max_error).fold(0.0, f64::max);
    let failed: Vec<_> = report.clauses.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    verdict(
        report.passed(),
        format!("{} clauses at N = 8, worst error {worst:.2e} (tolerance 1e-10) {failed:?}", report.clauses.len()),
    )
}

fn a2() -> Verdict {
    let p = ideal_setting();
    let mk = |rep| plan_for(&p, ideal_pulse(), CompensationMode::Ideal, rep, 0.01, 1.0, 1);
    let (comp, reduced) = (mk(Representation::LabCompensated), mk(Representation::LabReduced));
    let mut worst: f64 = 0.0;
    let t0 = Instant::now();
    let n = 5;
    for k in 0..n {
        let a = simulate_trajectory(&comp, k).unwrap();
        let b = simulate_trajectory(&reduced, k).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            worst = worst.max(max_abs(&(x.rho - y.rho)));
        }
    }
    let per = t0.elapsed().as_secs_f64() / (2 * n) as f64;
    verdict(
        worst < 1e-6 && per < 1.0,
        format!("{n} trajectories, max element difference {worst:.2e} (< 1e-6), {per:.3} s per trajectory"),
    )
}

fn a3() -> Verdict {
    let p = oracle_setting();
    let pulse = Envelope::flat_top_width(mhz(0.5), 0.25, 0.8);
    let tail = 6.0 / p.damping_min();
    let full = plan_for(&p, pulse.clone(), CompensationMode::Adiabatic, Representation::Full, 0.05, tail, 1);
    assert_eq!(full.options.fock, HilbertLayout::new(16, 16));
    let reduced = plan_for(&p, pulse, CompensationMode::Adiabatic, Representation::LabReduced, 0.05, tail, 1);
    let a = simulate_trajectory(&full, 1).unwrap();
    let b = simulate_trajectory(&reduced, 1).unwrap();
    let worst = a.snapshots.iter().zip(&b.snapshots).map(|(x, y)| max_abs(&(x.rho - y.rho))).fold(0.0, f64::max);
    verdict(
        worst < 1e-4 && a.dw == b.dw,
        format!(
            "N = 16, {} steps, max qubit-marginal difference {worst:.2e} (< 1e-4), final |rho_0110| {:.4}",
            full.options.n_steps,
            a.final_lab[(1, 2)].norm()
        ),
    )
}

fn a4() -> Verdict {
    let p = ideal_setting();
    let tail = ringdown(&p);
    let mk = |rep| plan_for(&p, ideal_pulse(), CompensationMode::Ideal, rep, 0.01, tail, 1);
    let (lab, pol) = (mk(Representation::LabReduced), mk(Representation::Polaron));
    let a = simulate_trajectory(&lab, 5).unwrap();
    let b = simulate_trajectory(&pol, 5).unwrap();
    let end = ideal_pulse().end();
    let mut dip: f64 = 0.0;
    let mut after: f64 = 0.0;
    let mut quiet = 0;
    for (n, (x, y)) in a.snapshots.iter().zip(&b.snapshots).enumerate() {
        let gap = y.rho[(1, 2)].norm() - x.rho[(1, 2)].norm();
        if x.t <= end {
            dip = dip.max(gap);
        }
        if x.t > end && lab.track.at(n).state.max_amplitude() < 1e-3 {
            quiet += 1;
            after = after.max(max_abs(&(x.rho - y.rho)));
        }
    }
    verdict(
        dip > 1e-2 && quiet > 0 && after < 1e-3,
        format!(
            "lab |rho_0110| dips {dip:.3} below the polaron value during the pulse; after ring-down ({quiet} steps) \
             max difference {after:.2e} (< 1e-3)"
        ),
    )
}

/// Post-selected loss of visibility for the transient study at one `kappa_1`.
fn transient_loss(k1: f64, wanted: usize) -> Result<(f64, usize), String> {
    let mut p = ideal_setting();
    p.chi1 = mhz(1.2);
    p.kappa1 = mhz(k1);
    p.kappa2 = mhz(k1 + 2.5);
    let pulse = Envelope::flat_top_width(mhz((0.9 * k1).sqrt()), 0.75, 2.5);
    let plan = plan_for(&p, pulse, CompensationMode::Adiabatic, Representation::Polaron, 0.01, ringdown(&p), 0);
    let mut vis = 0.0;
    let mut selected = 0;
    let mut k = 0;
    while selected < wanted {
        if k > 20 * wanted {
            return Err(format!("only {selected} of {k} trajectories post-selected"));
        }
        let rec = simulate_trajectory(&plan, k as u64).map_err(|e| e.to_string())?;
        if single_excitation_population(&rec.final_lab) >= plan.options.threshold {
            vis += single_excitation_visibility(&rec.final_lab);
            selected += 1;
        }
        k += 1;
    }
    Ok((1.0 - vis / selected as f64, k))
}

fn a5() -> Verdict {
    let mut losses = Vec::new();
    let mut notes = Vec::new();
    for k1 in [1.0, 5.0, 17.0] {
        match transient_loss(k1, 1500) {
            Ok((loss, total)) => {
                notes.push(format!("kappa1/2pi = {k1}: loss {:.1}% ({total} run)", 100.0 * loss));
                losses.push(loss);
            }
            Err(e) => return verdict(false, e),
        }
    }
    let monotone = losses.windows(2).all(|w| w[1] < w[0]);
    verdict(
        monotone && (losses[0] - 0.27).abs() <= 0.05 && losses[2] < 0.05,
        format!("{}; target 27% +- 5% at 1 MHz, < 5% at 17 MHz, decreasing", notes.join(", ")),
    )
}

fn a6() -> Verdict {
    let p = ideal_setting();
    let pulse = Envelope::flat_top_width(mhz(1.0), 0.25, 5.0);
    // Strong measurement: outcome frequencies carry an O(dt) bias at 0.01 / kappa.
    let plan = plan_for(&p, pulse, CompensationMode::Ideal, Representation::Polaron, 0.0025, ringdown(&p), 0);
    let n = 4000;
    let run = run_plan(&plan, n, resolve_workers(None), "");
    let count = |l: OutcomeLabel| run.results.iter().filter(|r| r.outcome == l).count() as f64 / n as f64;
    let f = [count(OutcomeLabel::Zero), count(OutcomeLabel::Two), count(OutcomeLabel::OneSym)];
    let expected = [0.25, 0.25, 0.5];
    let within = f.iter().zip(expected).all(|(x, q)| (x - q).abs() <= 3.0 * (q * (1.0 - q) / n as f64).sqrt());
    let anti = count(OutcomeLabel::OneAntisym);
    verdict(
        run.error.is_none() && within && anti < 0.01,
        format!(
            "N = {n}: |00> {:.4}, |11> {:.4}, symmetric {:.4}, antisymmetric {anti:.4}, unresolved {:.4}",
            f[0],
            f[1],
            f[2],
            count(OutcomeLabel::Unresolved)
        ),
    )
}

fn coherence_loss(p: &SystemParams, mode: CompensationMode) -> (f64, f64) {
    let pulse = Envelope::flat_top_width(mhz((0.9f64 * 3.9).sqrt()), 0.75, 2.5);
    let plan = plan_for(p, pulse, mode, Representation::Polaron, 0.01, ringdown(p), 0);
    let worst_residual =
        (0..=plan.track.n_steps).map(|n| residual(p, &plan.track.at(n).state).norm()).fold(0.0, f64::max);
    let states = unconditioned_evolution(&plan).unwrap();
    let last = states.last().unwrap().rho;
    (worst_residual, 1.0 - last[(1, 2)].norm() / 0.25)
}

fn a7() -> Verdict {
    let mut p = ideal_setting();
    p.chi1 = mhz(1.2);
    p.kappa1 = mhz(3.9);
    p.kappa2 = mhz(3.5);
    let (res_dyn, loss_dyn) = coherence_loss(&p, CompensationMode::Dynamic);
    let (res_adi, loss_adi) = coherence_loss(&p, CompensationMode::Adiabatic);
    verdict(
        res_dyn < 1e-8 && loss_dyn < 0.005 && loss_adi >= 0.005 && loss_adi > 10.0 * loss_dyn,
        format!(
            "dynamic: residual {res_dyn:.2e} (< 1e-8), loss {:.3}% (< 0.5%); adiabatic: residual {res_adi:.2e}, loss {:.2}%",
            100.0 * loss_dyn,
            100.0 * loss_adi
        ),
    )
}

fn a8() -> Verdict {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/concurrence_sweep.toml");
    let cfg = SimulationConfig::load(&path).unwrap();
    let grid = match configured_sweep(&cfg, None, None) {
        Ok(g) => g,
        Err(e) => return verdict(false, e.to_string()),
    };
    let c = &grid.max_concurrence;
    let (rows, cols) = (c.len(), c[0].len());
    let monotone = (0..cols).all(|j| (1..rows).all(|i| c[i][j] <= c[i - 1][j]));
    let corner = c[rows - 1][0];
    let global_min = c.iter().flatten().fold(f64::INFINITY, |m, &x| m.min(x));
    let table: Vec<String> = c
        .iter()
        .zip(&grid.loss_db)
        .map(|(row, db)| format!("{db} dB [{}]", row.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")))
        .collect();
    verdict(
        monotone && corner <= global_min,
        format!(
            "{}x{} grid, {} per cell, widths {:?} us; non-increasing in loss: {monotone}; corner {corner:.4}, \
             global minimum {global_min:.4}; {}",
            rows,
            cols,
            grid.trajectories,
            grid.widths_us,
            table.join("; ")
        ),
    )
}

fn a9() -> Verdict {
    let p = histogram_setting();
    let pulse = Envelope::flat_top_width(mhz(13.0), 0.05, 0.3);
    let mut plan = plan_for(&p, pulse, CompensationMode::Adiabatic, Representation::Polaron, 0.0025, ringdown(&p), 1);
    plan.options.snapshot_stride = plan.options.n_steps / 20;
    plan.options.keep_record = false;
    let reference = unconditioned_evolution(&plan).unwrap();
    // The error of one mean fluctuates by tens of percent, so its expected
    // size at each N is estimated over disjoint batches of a larger ensemble.
    let total = 32000;
    let run = run_plan(&plan, total, resolve_workers(None), "");
    if let Some(e) = run.error {
        return verdict(false, e.to_string());
    }
    let mse = |batch: &[ccqsim::ensemble::TrajectoryResult]| {
        let mut sums = vec![Mat4::zeros(); reference.len()];
        for r in batch {
            for (s, rho) in sums.iter_mut().zip(&r.snapshots) {
                *s += rho;
            }
        }
        let n = C64::new(batch.len() as f64, 0.0);
        sums.iter().zip(&reference).map(|(s, r)| (s / n - r.rho).norm_squared()).sum::<f64>() / reference.len() as f64
    };
    let sizes = [500, 2000, 8000];
    let errors: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let batches: Vec<f64> = run.results.chunks_exact(n).map(mse).collect();
            (batches.iter().sum::<f64>() / batches.len() as f64).sqrt()
        })
        .collect();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    verdict(
        ratios.iter().all(|r| (1.5..=2.7).contains(r)),
        format!(
            "rms error {:.2e} / {:.2e} / {:.2e} at N = 500 / 2000 / 8000 ({} / {} / {} batches); ratios {:.2}, {:.2} \
             (each in [1.5, 2.7])",
            errors[0],
            errors[1],
            errors[2],
            total / 500,
            total / 2000,
            total / 8000,
            ratios[0],
            ratios[1]
        ),
    )
}

fn a10() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        if !ok {
            failures.push(format!("{name}: {detail}"));
        }
    };

    let settings = [ideal_setting(), histogram_setting(), oracle_setting()];
    for (k, p) in settings.iter().enumerate() {
        for rep in [Representation::Polaron, Representation::LabReduced, Representation::LabCompensated] {
            let pulse = Envelope::flat_top_width(mhz(2.0), 0.1, 0.4);
            let plan = plan_for(p, pulse, CompensationMode::Adiabatic, rep, 0.02, 0.3, 1);
            let r = check_step_invariants(&plan, k as u64);
            check("state invariants", r.is_ok(), format!("{:?}", r.err()));
        }
    }

    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let rho = ginibre_state(k);
        let x = k as f64;
        let u1 = unitary2(0.3 * x, 1.1 * x, 0.7 + 0.2 * x, -0.4 * x);
        let u2 = unitary2(-0.2 * x, 0.5 * x, 1.9 - 0.1 * x, 0.8 * x);
        worst = worst.max(concurrence_shift(&rho, &u1, &u2));
    }
    check("concurrence invariance", worst < 1e-10, format!("{worst:e}"));

    let p = oracle_setting();
    let lin = [0.5, 2.0, -3.0].iter().map(|&s| linearity_defect(&p, mhz(1.0), s)).fold(0.0, f64::max);
    check("amplitude linearity", lin < 1e-12, format!("{lin:e}"));
    let back = backaction(&p, mhz(1.0), mhz(7.0), mhz(-0.3), mhz(0.4), -2.0);
    check("no backaction", back < 1e-12, format!("{back:e}"));
    let assoc = series_associativity_defect(&histogram_setting(), &HilbertLayout::new(3, 3));
    check("series associativity", assoc < 1e-12, format!("{assoc:e}"));

    let p = histogram_setting();
    let rho = ccqsim::basis::plus_plus();
    let dt0 = 0.02 / p.kappa_max();
    let errs: Vec<f64> = (0..3).map(|k| local_weak_error(&p, mhz(13.0), dt0 / 2f64.powi(k), &rho)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2() - 1.0).collect();
    check(
        "weak order",
        orders.iter().all(|o| (0.7..=1.3).contains(o)),
        format!("local errors {errs:?}, global orders {orders:?}"),
    );

    let plan = plan_for(
        &ideal_setting(),
        Envelope::flat_top_width(mhz(1.0), 0.1, 0.3),
        CompensationMode::Ideal,
        Representation::Polaron,
        0.02,
        0.2,
        5,
    );
    let r = worker_count_invariant(&plan, 13, &[2, 3, 5]);
    check("worker determinism", r.is_ok(), format!("{:?}", r.err()));

    let weak = format!("{orders:.2?}");
    let n_fail = failures.len();
    verdict(
        n_fail == 0,
        if n_fail == 0 {
            format!(
                "state invariants, concurrence invariance ({worst:.1e}), linearity ({lin:.1e}), no backaction \
                 ({back:.1e}), series associativity ({assoc:.1e}), weak order {weak}, worker determinism"
            )
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, &str, fn() -> Verdict); 10] = [
        ("A1", "SLH verification", a1),
        ("A2", "frame equivalence", a2),
        ("A3", "full-model oracle", a3),
        ("A4", "non-Markovian revival", a4),
        ("A5", "transient coherence loss", a5),
        ("A6", "outcome statistics", a6),
        ("A7", "dynamic compensation", a7),
        ("A8", "concurrence sweep", a8),
        ("A9", "Monte-Carlo consistency", a9),
        ("A10", "property suite", a10),
    ];
    let (mut passed, mut failed) = (0, 0);
    for (id, name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| f == id) {
            continue;
        }
        let t0 = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag} {id} {name}: {} [{:.1} s]", v.detail, t0.elapsed().as_secs_f64());
        if v.passed {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
