//! Acceptance suite. Runs every check, prints one PASS/FAIL line per check
//! and exits non-zero if any failed.
//!
//! `ACCEPTANCE_ONLY=<name>[,<name>...]` restricts the run to the named checks.

mod support;

use std::path::Path;
use std::time::Instant;

use iterlstm_core::autograd::{clip_gradients, run_gradcheck, GradcheckSpec, Parameters};
use iterlstm_core::cell::{cell_step, CellParams, CellState, IterationConfig};
use iterlstm_core::dynamics::{apply_map, jacobian_g, random_draw, AutonomousMap, DrawSpec};
use iterlstm_core::lm::{
    batchify, evaluate, lr_schedule, synth, train, Checkpoint, Control, Corpus, EpochRecord, LanguageModel,
    OutputDir, TokenMode, TrainConfig, Trainer, LOG_FILE,
};
use iterlstm_core::math::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn vanilla_equivalence() -> Outcome {
    let cfg = IterationConfig::fixed(1, false);
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = Rng::new(0xace0 + seed);
        let n = 1 + (rng.next_u64() % 16) as usize;
        let d = 1 + (rng.next_u64() % 16) as usize;
        let mut p = CellParams::uniform(n, d, -1.0, 1.0, &mut rng).map_err(|e| e.to_string())?;
        p.gate.bias = 1.0e3;
        let x = rng.uniform_vec(d, -1.0, 1.0);
        let prev = CellState {
            h: rng.uniform_vec(n, -1.0, 1.0),
            c: rng.uniform_vec(n, -2.0, 2.0),
        };
        let out = cell_step(&p, &cfg, &x, &prev).map_err(|e| e.to_string())?;
        let (h, c) = support::vanilla_lstm_step(&p, &x, &prev.h, &prev.c);
        worst = worst.max(out.next.h.max_abs_diff(&h)).max(out.next.c.max_abs_diff(&c));
    }
    check(worst <= 1e-15, format!("100 draws, max |diff| {worst:.3e} (tol 1e-15)"))
}

fn gradient_check() -> Outcome {
    let spec = GradcheckSpec::default();
    let report = run_gradcheck(&spec, None).map_err(|e| e.to_string())?;
    let max_abs = report.groups.values().map(|g| g.max_abs_err).fold(0.0, f64::max);
    check(
        report.passed,
        format!(
            "{} models, {} coordinates, max abs err {max_abs:.3e}, worst rel err above the floor {:.3e}, {} failures (tol {:e}, floor {:e})",
            report.models,
            report.coords,
            report.worst_rel_err(),
            report.failures.len(),
            spec.rel_tol,
            spec.abs_floor
        ),
    )
}

fn jacobian() -> Outcome {
    let mut rng = Rng::new(0x1ac0b);
    let step = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = 1 + k % 12;
        let p = CellParams::uniform(n, n, -1.5, 1.5, &mut rng).map_err(|e| e.to_string())?;
        let x = rng.uniform_vec(n, -1.0, 1.0);
        let c0 = rng.uniform_vec(n, -1.0, 1.0);
        let h = rng.uniform_vec(n, -1.0, 1.0);
        let map = AutonomousMap::new(&p, &x, &c0).map_err(|e| e.to_string())?;
        let jac = jacobian_g(&map, &h).map_err(|e| e.to_string())?;
        for col in 0..n {
            let (mut hp, mut hm) = (h.clone(), h.clone());
            hp[col] += step;
            hm[col] -= step;
            let gp = apply_map(&map, &hp).map_err(|e| e.to_string())?;
            let gm = apply_map(&map, &hm).map_err(|e| e.to_string())?;
            worst = worst.max(gp.sub(&gm).scale(0.5 / step).max_abs_diff(&jac.column(col)));
        }
    }
    check(worst < 1e-6, format!("50 configurations, max |analytic − numeric| {worst:.3e} (tol 1e-6)"))
}

fn monte_carlo() -> Outcome {
    let mut parts = Vec::new();
    let mut total = 0;
    for margin in [0.1, 0.5] {
        let spec = DrawSpec {
            margin: Some(margin),
            ..DrawSpec::default()
        };
        let mut bad = 0;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..100 {
            let r = random_draw(0, i, &spec).map_err(|e| e.to_string())?;
            let top = r.spectrum_head[0];
            if !(r.converged && r.lambda_max.is_negative() && top.is_negative()) {
                bad += 1;
            }
            for e in [r.lambda_max, top] {
                worst = worst.max(e.finite().unwrap_or(f64::NEG_INFINITY));
            }
        }
        total += bad;
        parts.push(format!("margin {margin}: {bad} counterexamples, largest exponent {worst:.4}"));
    }
    check(total == 0, parts.join("; "))
}

fn non_vacuity() -> Outcome {
    let spec = DrawSpec {
        margin: Some(-5.0),
        ..DrawSpec::default()
    };
    let mut positive = 0;
    let mut largest = f64::NEG_INFINITY;
    for i in 0..100 {
        let r = random_draw(0, i, &spec).map_err(|e| e.to_string())?;
        if r.lambda_max.is_positive() {
            positive += 1;
        }
        largest = largest.max(r.lambda_max.finite().unwrap_or(f64::NEG_INFINITY));
    }
    check(
        positive >= 1,
        format!("margin −5: {positive}/100 draws with λ_max > 0, largest {largest:.4}"),
    )
}

fn protocol_values() -> Outcome {
    let mut failures = Vec::new();
    for (epoch, want) in [(6, 1.0), (7, 0.833333), (10, 0.482253)] {
        let got = lr_schedule(epoch, 1.0, 6, 1.2).map_err(|e| e.to_string())?;
        if (got - want).abs() > 5e-7 {
            failures.push(format!("lr({epoch}) = {got}"));
        }
    }

    let mut grads = CellParams::zeros(2, 2);
    grads.w_rec[0].data_mut()[0] = 12.0;
    grads.bias[1][1] = -16.0;
    let before = grads.clone();
    let norm = clip_gradients(&mut grads, 10.0).map_err(|e| e.to_string())?;
    let mut halved = true;
    let mut pairs = Vec::new();
    before.visit(&mut |_, _, d| pairs.extend_from_slice(d));
    let mut after = Vec::new();
    grads.visit(&mut |_, _, d| after.extend_from_slice(d));
    for (b, a) in pairs.iter().zip(&after) {
        halved &= *a == 0.5 * b;
    }
    if norm != 20.0 || !halved {
        failures.push(format!("clip of a norm-20 gradient at 10 gave norm {norm}, halved {halved}"));
    }

    let vocab = 10_000;
    let model = LanguageModel::zeros(vocab, 4, 1);
    let ids: Vec<usize> = (0..200).map(|k| (k * 7919) % vocab).collect();
    let stats = evaluate(&model, &IterationConfig::default(), &ids, 4, 10).map_err(|e| e.to_string())?;
    let rel = (stats.perplexity - vocab as f64).abs() / vocab as f64;
    if rel > 1e-12 {
        failures.push(format!("uniform-model perplexity {}", stats.perplexity));
    }
    let detail = format!(
        "lr 6/7/10 = {:.6}/{:.6}/{:.6}; clip halves a norm-20 gradient; uniform perplexity {} for V = {vocab} (rel dev {rel:.1e})",
        lr_schedule(6, 1.0, 6, 1.2).unwrap(),
        lr_schedule(7, 1.0, 6, 1.2).unwrap(),
        lr_schedule(10, 1.0, 6, 1.2).unwrap(),
        stats.perplexity
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

/// Desk-scale settings for the iteration-count trend.
const DESK_SEED: u64 = 2024;
const DESK_TRAIN_CHARS: usize = 900_000;
const DESK_EVAL_CHARS: usize = 50_000;
const DESK_EPOCHS: usize = 3;
const DESK_ITERATIONS: [usize; 3] = [1, 2, 4];

fn desk_config(k: usize) -> TrainConfig {
    TrainConfig {
        layers: 1,
        units: 128,
        epochs: DESK_EPOCHS,
        lr_constant_epochs: DESK_EPOCHS,
        keep_prob: 1.0,
        init_range: 0.05,
        iteration: IterationConfig::fixed(k, true),
        mode: TokenMode::Char,
        seed: 1,
        ..TrainConfig::default()
    }
}

fn desk_trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth::write_synthetic_corpus(dir.path(), DESK_SEED, DESK_TRAIN_CHARS, DESK_EVAL_CHARS)
        .map_err(|e| e.to_string())?;
    let corpus = Corpus::load_dir(dir.path(), TokenMode::Char).map_err(|e| e.to_string())?;
    let mut ppl = Vec::new();
    for k in DESK_ITERATIONS {
        let mut trainer = Trainer::new(desk_config(k), corpus.vocab.clone()).map_err(|e| e.to_string())?;
        let summary =
            train(&mut trainer, &corpus, None, &mut |_: &EpochRecord| Control::Continue).map_err(|e| e.to_string())?;
        ppl.push(summary.test_ppl);
    }
    let improves = ppl[2] <= ppl[0] * 0.99;
    let monotone = ppl.windows(2).all(|w| w[1] <= w[0] * 1.005);
    let table: Vec<String> = DESK_ITERATIONS.iter().zip(&ppl).map(|(k, p)| format!("{k}: {p:.4}")).collect();
    check(
        improves && monotone,
        format!(
            "test perplexity by iterations {{{}}}; 4 vs 1 {:+.2}% (need ≤ −1%), non-increasing within 0.5%: {monotone}",
            table.join(", "),
            100.0 * (ppl[2] / ppl[0] - 1.0)
        ),
    )
}

fn small_run(dir: &Path, corpus: &Corpus, name: &str, cfg: &TrainConfig) -> Result<Vec<u8>, String> {
    let out = OutputDir::new(&dir.join(name)).map_err(|e| e.to_string())?;
    let mut t = Trainer::new(cfg.clone(), corpus.vocab.clone()).map_err(|e| e.to_string())?;
    train(&mut t, corpus, Some(&out), &mut |_: &EpochRecord| Control::Continue).map_err(|e| e.to_string())?;
    std::fs::read(out.path(LOG_FILE)).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_dir = dir.path().join("corpus");
    synth::write_synthetic_corpus(&corpus_dir, 7, 20_000, 2_000).map_err(|e| e.to_string())?;
    let corpus = Corpus::load_dir(&corpus_dir, TokenMode::Char).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        layers: 2,
        units: 24,
        epochs: 4,
        keep_prob: 0.7,
        init_range: 0.1,
        iteration: IterationConfig::adaptive(4, true),
        mode: TokenMode::Char,
        seed: 99,
        ..TrainConfig::default()
    };
    let a = small_run(dir.path(), &corpus, "a", &cfg)?;
    let b = small_run(dir.path(), &corpus, "b", &cfg)?;
    let logs_identical = a == b && !a.is_empty();

    let batched = batchify(&corpus.train, cfg.batch_size, cfg.unroll_length).map_err(|e| e.to_string())?;
    let mut continuous = Trainer::new(cfg.clone(), corpus.vocab.clone()).map_err(|e| e.to_string())?;
    let mut reference = Vec::new();
    for _ in 0..4 {
        reference.push(continuous.run_epoch(&batched, &corpus.valid).map_err(|e| e.to_string())?);
    }
    let mut first = Trainer::new(cfg, corpus.vocab.clone()).map_err(|e| e.to_string())?;
    for _ in 0..2 {
        first.run_epoch(&batched, &corpus.valid).map_err(|e| e.to_string())?;
    }
    let path = dir.path().join("resume.json");
    first.checkpoint().save(&path).map_err(|e| e.to_string())?;
    let mut resumed =
        Trainer::from_checkpoint(Checkpoint::load(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut compared = 0;
    let mut losses_identical = true;
    for want in &reference[2..] {
        let got = resumed.run_epoch(&batched, &corpus.valid).map_err(|e| e.to_string())?;
        losses_identical &= got.window_losses == want.window_losses && got.record == want.record;
        compared += got.window_losses.len();
    }
    losses_identical &= resumed.model == continuous.model;
    check(
        logs_identical && losses_identical,
        format!(
            "same-seed logs byte-identical: {logs_identical}; {compared} post-resume window losses identical: {losses_identical}"
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("vanilla-equivalence", vanilla_equivalence),
        ("gradient-check", gradient_check),
        ("jacobian", jacobian),
        ("contraction-monte-carlo", monte_carlo),
        ("non-vacuity", non_vacuity),
        ("protocol-values", protocol_values),
        ("iteration-trend", desk_trend),
        ("determinism-resume", determinism),
    ];
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let mut failed = 0;
    for (name, f) in checks {
        if only.as_ref().is_some_and(|o| !o.iter().any(|s| s == name)) {
            continue;
        }
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {name:<24} {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name:<24} {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
