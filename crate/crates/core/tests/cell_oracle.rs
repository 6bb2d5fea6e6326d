mod support;

use iterlstm_core::cell::{cell_step, CellParams, CellState, IterationConfig};
use iterlstm_core::math::{Rng, Vector};
use proptest::prelude::*;

fn open_gate(mut p: CellParams) -> CellParams {
    p.gate.bias = 1.0e3;
    p
}

fn draw(seed: u64, n: usize, d: usize) -> (CellParams, Vec<f64>, CellState) {
    let mut rng = Rng::new(seed);
    let p = CellParams::uniform(n, d, -1.0, 1.0, &mut rng).unwrap();
    let x = rng.uniform_vec(d, -1.0, 1.0).into_inner();
    let prev = CellState {
        h: rng.uniform_vec(n, -1.0, 1.0),
        c: rng.uniform_vec(n, -2.0, 2.0),
    };
    (p, x, prev)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn single_open_iteration_is_a_vanilla_step() {
    let cfg = IterationConfig::fixed(1, false);
    for seed in 0..100 {
        let n = 1 + (seed as usize % 16);
        let d = 1 + (seed as usize * 7 % 11);
        let (p, x, prev) = draw(seed, n, d);
        let p = open_gate(p);
        let out = cell_step(&p, &cfg, &x, &prev).unwrap();
        let (h, c) = support::vanilla_lstm_step(&p, &x, &prev.h, &prev.c);
        assert!(max_diff(&out.next.h, &h) <= 1e-15, "seed {seed}");
        assert!(max_diff(&out.next.c, &c) <= 1e-15, "seed {seed}");
        assert!(max_diff(&out.y, &h) <= 1e-15, "seed {seed}");
    }
}

#[test]
fn open_iterations_repeat_the_vanilla_step_with_frozen_cell() {
    for k in 2..=5 {
        let (p, x, prev) = draw(100 + k as u64, 6, 6);
        let p = open_gate(p);
        let out = cell_step(&p, &IterationConfig::fixed(k, true), &x, &prev).unwrap();
        let mut h = prev.h.to_vec();
        let mut c = Vec::new();
        for _ in 0..k {
            (h, c) = support::vanilla_lstm_step(&p, &x, &h, &prev.c);
        }
        assert!(max_diff(&out.next.h, &h) < 1e-14);
        assert!(max_diff(&out.next.c, &c) < 1e-14);
        let y: Vec<f64> = h.iter().zip(&x).map(|(a, b)| a + b).collect();
        assert!(max_diff(&out.y, &y) < 1e-14);
    }
}

#[test]
fn closed_gate_keeps_the_previous_hidden_state() {
    let (mut p, x, prev) = draw(7, 5, 5);
    p.gate.bias = -1.0e3;
    let out = cell_step(&p, &IterationConfig::fixed(3, false), &x, &prev).unwrap();
    assert_eq!(out.next.h, prev.h);
    assert_eq!(out.trace.len(), 3);
}

#[test]
fn blend_weight_interpolates_candidate_and_previous_state() {
    let (mut p, x, prev) = draw(8, 4, 4);
    for v in [&mut p.gate.w_h, &mut p.gate.w_i, &mut p.gate.w_j, &mut p.gate.w_f] {
        *v = Vector::zeros(4);
    }
    p.gate.w_x = Vector::zeros(4);
    p.gate.bias = 0.0;
    let out = cell_step(&p, &IterationConfig::fixed(1, false), &x, &prev).unwrap();
    let (cand, _) = support::vanilla_lstm_step(&p, &x, &prev.h, &prev.c);
    let expect: Vec<f64> = cand.iter().zip(prev.h.iter()).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
    assert!(max_diff(&out.next.h, &expect) < 1e-15);
}

proptest! {
    #[test]
    fn vanilla_equivalence_holds_for_arbitrary_draws(seed in any::<u64>(), n in 1usize..=16, d in 1usize..=16) {
        let (p, x, prev) = draw(seed, n, d);
        let p = open_gate(p);
        let out = cell_step(&p, &IterationConfig::fixed(1, false), &x, &prev).unwrap();
        let (h, c) = support::vanilla_lstm_step(&p, &x, &prev.h, &prev.c);
        prop_assert!(max_diff(&out.next.h, &h) <= 1e-15);
        prop_assert!(max_diff(&out.next.c, &c) <= 1e-15);
    }
}
