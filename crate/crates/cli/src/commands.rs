use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use iterlstm_core::autograd::{run_gradcheck, GradcheckSpec};
use iterlstm_core::cell::{IterationConfig, IterationMode};
use iterlstm_core::dynamics::{
    check_condition, params_draw, random_draw, spectral_rescale, ConditionReport, DrawSpec,
};
use iterlstm_core::lm::{
    evaluate, synth, train as run_training, Checkpoint, Control, EpochRecord, Corpus, OutputDir, TrainConfig, Trainer, LAST_CHECKPOINT,
};
use iterlstm_core::math::SPECTRAL_TOL;

use crate::config_file;
use crate::error::{input_error, CliError};
use crate::{CheckArgs, EvalArgs, GradcheckArgs, LyapunovArgs, RescaleArgs, SweepArgs, SynthArgs, TrainArgs};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str = "iterations,test_perplexity";
pub const CONFIG_FILE: &str = "config.txt";

fn load_config(path: Option<&Path>) -> Result<TrainConfig, CliError> {
    match path {
        None => Ok(TrainConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            config_file::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
        }
    }
}

fn fixed_iterations(base: &IterationConfig, k: usize) -> IterationConfig {
    IterationConfig {
        mode: IterationMode::Fixed,
        fixed_iterations: k,
        max_iterations: k,
        ..base.clone()
    }
}

fn print_epoch(r: &EpochRecord) {
    println!(
        "epoch {:>3}  lr {:.6}  train ppl {:.4}  valid ppl {:.4}  iterations {:.3}",
        r.epoch, r.lr, r.train_ppl, r.valid_ppl, r.mean_iterations
    );
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let out = OutputDir::new(&a.out)?;
    let mut trainer = if a.resume {
        let ck = Checkpoint::load(&out.path(LAST_CHECKPOINT))?;
        Trainer::from_checkpoint(ck)?
    } else {
        let mut cfg = load_config(a.config.as_deref())?;
        if let Some(seed) = a.seed {
            cfg.seed = seed;
        }
        if let Some(k) = a.iterations {
            cfg.iteration = fixed_iterations(&cfg.iteration, k);
        }
        if let Some(m) = a.corpus.mode {
            cfg.mode = m;
        }
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        let corpus = Corpus::load_dir(&a.corpus.corpus, cfg.mode).map_err(input_error)?;
        Trainer::new(cfg, corpus.vocab)?
    };
    let cfg = trainer.config.clone();
    let corpus = Corpus::load_dir_with_vocab(&a.corpus.corpus, cfg.mode, trainer.vocab.clone()).map_err(input_error)?;
    std::fs::write(out.path(CONFIG_FILE), config_file::render(&cfg))?;
    let mut remaining = a.stop_after;
    let mut on_epoch = |r: &EpochRecord| {
        print_epoch(r);
        match remaining.as_mut() {
            Some(n) => {
                *n = n.saturating_sub(1);
                if *n == 0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            }
            None => Control::Continue,
        }
    };
    let summary = run_training(&mut trainer, &corpus, Some(&out), &mut on_epoch)?;
    println!("parameters {}", summary.parameters);
    println!("test ppl {:.4}", summary.test_ppl);
    if let (Some(best), Some(epoch)) = (summary.best_test_ppl, summary.best_epoch) {
        println!("test ppl of best-validation model (epoch {epoch}) {best:.4}");
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let mode = a.corpus.mode.unwrap_or(ck.config.mode);
    let corpus = Corpus::load_dir_with_vocab(&a.corpus.corpus, mode, ck.vocab.clone()).map_err(input_error)?;
    let ids = corpus.split(&a.split).expect("split names are validated by the parser");
    let cfg = &ck.config;
    let stats = evaluate(&ck.model, &cfg.iteration, ids, cfg.eval_batch_size, cfg.unroll_length)?;
    if a.json {
        println!("{}", serde_json::to_string(&stats)?);
    } else {
        println!("{} perplexity {:.4} over {} tokens", a.split, stats.perplexity, stats.targets);
        println!("mean iterations {:.3}", stats.mean_iterations);
    }
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Result<(), CliError> {
    if a.iterations.is_empty() || a.iterations.contains(&0) {
        return Err(CliError::usage("iteration counts must be positive"));
    }
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(m) = a.corpus.mode {
        cfg.mode = m;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let corpus = Corpus::load_dir(&a.corpus.corpus, cfg.mode).map_err(input_error)?;
    let root = OutputDir::new(&a.out)?;
    let mut csv = format!("{SWEEP_HEADER}\n");
    let mut failures = Vec::new();
    for &k in &a.iterations {
        let run_cfg = TrainConfig {
            iteration: fixed_iterations(&cfg.iteration, k),
            ..cfg.clone()
        };
        println!("iterations {k}");
        let out = OutputDir::new(&a.out.join(format!("iterations_{k}")))?;
        std::fs::write(out.path(CONFIG_FILE), config_file::render(&run_cfg))?;
        let result = Trainer::new(run_cfg, corpus.vocab.clone())
            .and_then(|mut t| {
            run_training(&mut t, &corpus, Some(&out), &mut |r| {
                print_epoch(r);
                Control::Continue
            })
        });
        match result {
            Ok(s) => csv.push_str(&format!("{k},{}\n", s.test_ppl)),
            Err(e) => {
                eprintln!("iterations {k} failed: {e}");
                csv.push_str(&format!("{k},NaN\n"));
                failures.push(k);
            }
        }
    }
    std::fs::write(root.path(SWEEP_FILE), &csv)?;
    print!("{csv}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::runtime(format!("runs failed for iteration counts {failures:?}")))
    }
}

#[derive(Debug, Serialize)]
struct LayerCondition {
    layer: usize,
    #[serde(flatten)]
    report: ConditionReport,
}

pub fn condition(a: CheckArgs) -> Result<(), CliError> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let mut layers = Vec::new();
    for (layer, params) in ck.model.layers.iter().enumerate() {
        let report = check_condition(params, SPECTRAL_TOL)?;
        layers.push(LayerCondition { layer, report });
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&layers)?);
    } else {
        for l in &layers {
            let r = &l.report;
            println!(
                "layer {}: sigma_j {} sigma_i {} sigma_f {} sigma_o {} margin {} holds {}",
                l.layer, r.sigma_j, r.sigma_i, r.sigma_f, r.sigma_o, r.margin, r.holds
            );
        }
    }
    Ok(())
}

pub fn rescale(a: RescaleArgs) -> Result<(), CliError> {
    let mut ck = Checkpoint::load(&a.checkpoint)?;
    for params in &mut ck.model.layers {
        *params = spectral_rescale(params, a.margin).map_err(input_error)?;
    }
    ck.save(&a.out)?;
    println!("rescaled {} layer(s) to margin {}", ck.model.layers.len(), a.margin);
    Ok(())
}

pub fn lyapunov(a: LyapunovArgs) -> Result<(), CliError> {
    if a.draws == 0 || a.tau == 0 {
        return Err(CliError::usage("--draws and --tau must be at least 1"));
    }
    let mut sink = match &a.out {
        Some(p) => Some(File::create(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let layer = match &a.checkpoint {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let n = ck.model.layers.len();
            let params = ck
                .model
                .layers
                .into_iter()
                .nth(a.layer)
                .ok_or_else(|| CliError::usage(format!("checkpoint has {n} layer(s), no layer {}", a.layer)))?;
            Some(params)
        }
        None => None,
    };
    if layer.is_none() && a.units == 0 {
        return Err(CliError::usage("--units must be at least 1"));
    }
    let spec = DrawSpec {
        units: a.units,
        margin: if layer.is_some() { a.margin } else { Some(a.margin.unwrap_or(0.5)) },
        tau: a.tau,
        ..DrawSpec::default()
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for i in 0..a.draws as u64 {
        let rec = match &layer {
            Some(p) => params_draw(p, a.seed, i, &spec),
            None => random_draw(a.seed, i, &spec),
        }
        .map_err(input_error)?;
        let line = serde_json::to_string(&rec)?;
        writeln!(lock, "{line}")?;
        if let Some(f) = sink.as_mut() {
            writeln!(f, "{line}")?;
        }
    }
    Ok(())
}

pub fn gradcheck(a: GradcheckArgs) -> Result<(), CliError> {
    if a.units > 16 {
        return Err(CliError::usage("--units is limited to 16"));
    }
    let spec = GradcheckSpec {
        models: a.models,
        max_units: a.units,
        max_timesteps: a.timesteps,
        max_iterations: a.iterations,
        seed: a.seed,
        ..GradcheckSpec::default()
    };
    let report = run_gradcheck(&spec, a.corrupt.as_deref()).map_err(input_error)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!(
            "{}  ({} models, {} coordinates, rel tol {:e}, abs floor {:e})",
            if report.passed { "PASS" } else { "FAIL" },
            report.models,
            report.coords,
            spec.rel_tol,
            spec.abs_floor
        );
        match &report.worst {
            Some(w) => println!(
                "worst relative error {:.3e} at {}[{}] of model {} (analytic {:.9e}, numeric {:.9e})",
                w.rel_err, w.buffer, w.index, w.model, w.analytic, w.numeric
            ),
            None => println!("worst relative error 0 (every coordinate within the absolute floor)"),
        }
        println!("{:<12} {:>7} {:>9} {:>12} {:>12}", "group", "coords", "failures", "max_rel_err", "max_abs_err");
        for (name, g) in &report.groups {
            println!(
                "{:<12} {:>7} {:>9} {:>12.3e} {:>12.3e}",
                name, g.coords, g.failures, g.max_rel_err, g.max_abs_err
            );
        }
        for f in &report.failures {
            println!(
                "failed: {}[{}] of model {}: analytic {:.9e}, numeric {:.9e}",
                f.buffer, f.index, f.model, f.analytic, f.numeric
            );
        }
    }
    if report.passed {
        Ok(())
    } else {
        let buffers = report.failing_buffers().join(", ");
        Err(CliError::runtime(format!("gradient check failed in {buffers}")))
    }
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    synth::write_synthetic_corpus(&a.out, a.seed, a.train_chars, a.eval_chars)?;
    println!("wrote {}", a.out.display());
    Ok(())
}
