//! Entropy-leakage maxima `v1`, `v2`, `v12` over joint state schedules.
//!
//! Schedules are indexed `2·S1 + S2`, i.e. `(γ00, γ01, γ10, γ11)`. Each
//! objective is a concave combination of `φ(x) = −x·log2(x)` terms, so a
//! coarse simplex grid followed by damped Newton steps in the three free
//! coordinates converges to the global maximum.

use std::f64::consts::{E, LN_2, SQRT_2};
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

const GRID: usize = 1000;
const STATIONARITY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeakageKind {
    V1,
    V2,
    V12,
}

impl LeakageKind {
    pub const ALL: [LeakageKind; 3] = [LeakageKind::V1, LeakageKind::V2, LeakageKind::V12];

    /// Weights on `φ(γ_k)`, marginal index pairs subtracted through `φ`, and
    /// the linear term.
    fn shape(self) -> ([f64; 4], [(usize, usize); 2], [f64; 4]) {
        match self {
            // H(S1|S2) + φ(γ10) + φ(γ11)
            LeakageKind::V1 => ([1.0, 1.0, 2.0, 2.0], [(0, 2), (1, 3)], [0.0; 4]),
            // H(S2|S1) + φ(γ01) + φ(γ11)
            LeakageKind::V2 => ([1.0, 2.0, 1.0, 2.0], [(0, 1), (2, 3)], [0.0; 4]),
            // H(S1,S2) + φ(γ10) + φ(γ01) + φ(γ11) + γ11
            LeakageKind::V12 => ([1.0, 2.0, 2.0, 2.0], [(4, 4), (4, 4)], [0.0, 0.0, 0.0, 1.0]),
        }
    }
}

fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

fn dphi(x: f64) -> f64 {
    -(x.ln() + 1.0) / LN_2
}

fn ddphi(x: f64) -> f64 {
    -1.0 / (x * LN_2)
}

/// Objective value at schedule `g` (not required to be normalized).
pub fn leakage_objective(kind: LeakageKind, g: &[f64; 4]) -> f64 {
    let (c, marg, lin) = kind.shape();
    let mut f = 0.0;
    for k in 0..4 {
        f += c[k] * phi(g[k]) + lin[k] * g[k];
    }
    for (i, j) in marg {
        if i < 4 {
            f -= phi(g[i] + g[j]);
        }
    }
    f
}

fn gradient_hessian(kind: LeakageKind, g: &[f64; 4]) -> ([f64; 4], [[f64; 4]; 4]) {
    let (c, marg, lin) = kind.shape();
    let mut grad = [0.0; 4];
    let mut hess = [[0.0; 4]; 4];
    for k in 0..4 {
        grad[k] = c[k] * dphi(g[k]) + lin[k];
        hess[k][k] = c[k] * ddphi(g[k]);
    }
    for (i, j) in marg {
        if i < 4 {
            let m = g[i] + g[j];
            let (d1, d2) = (dphi(m), ddphi(m));
            for a in [i, j] {
                grad[a] -= d1;
                for b in [i, j] {
                    hess[a][b] -= d2;
                }
            }
        }
    }
    (grad, hess)
}

/// Gradient and Hessian in the free coordinates `(γ0, γ1, γ2)`, `γ3 = 1 − Σ`.
fn reduced(kind: LeakageKind, g: &[f64; 4]) -> (Vector3<f64>, Matrix3<f64>) {
    let (gr, h) = gradient_hessian(kind, g);
    let grad = Vector3::from_fn(|i, _| gr[i] - gr[3]);
    let hess = Matrix3::from_fn(|i, j| h[i][j] - h[i][3] - h[3][j] + h[3][3]);
    (grad, hess)
}

fn lift(x: &Vector3<f64>) -> [f64; 4] {
    [x[0], x[1], x[2], 1.0 - x[0] - x[1] - x[2]]
}

fn interior(g: &[f64; 4]) -> bool {
    g.iter().all(|&x| x > 0.0)
}

/// Damped Newton ascent from `start` until the reduced gradient is below 1e-10.
fn refine(kind: LeakageKind, start: [f64; 4]) -> ([f64; 4], f64) {
    let mut x = Vector3::new(start[0], start[1], start[2]);
    let mut f = leakage_objective(kind, &lift(&x));
    for _ in 0..200 {
        let (grad, hess) = reduced(kind, &lift(&x));
        if grad.amax() <= STATIONARITY {
            break;
        }
        let newton = (-hess).cholesky().map(|ch| ch.solve(&grad));
        let step = match newton {
            Some(s) => s,
            None => grad * 1e-3,
        };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-16 {
            let cand = x + step * t;
            let g = lift(&cand);
            if interior(&g) {
                let fc = leakage_objective(kind, &g);
                if fc >= f - 1e-15 {
                    x = cand;
                    f = fc;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let g = lift(&x);
    (g, leakage_objective(kind, &g))
}

/// Best grid point of each objective on the step-1e-3 simplex grid.
fn grid_search() -> [([f64; 4], f64); 3] {
    let table: Vec<f64> = (0..=GRID).map(|k| phi(k as f64 / GRID as f64)).collect();
    let n = GRID;
    let best = (0..=n)
        .into_par_iter()
        .map(|a| {
            let mut best = [([0usize; 4], f64::NEG_INFINITY); 3];
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let d = n - a - b - c;
                    let (pa, pb, pc, pd) = (table[a], table[b], table[c], table[d]);
                    let vals = [
                        pa + pb + 2.0 * (pc + pd) - table[a + c] - table[b + d],
                        pa + pc + 2.0 * (pb + pd) - table[a + b] - table[c + d],
                        pa + 2.0 * (pb + pc + pd) + d as f64 / n as f64,
                    ];
                    for (slot, v) in best.iter_mut().zip(vals) {
                        if v > slot.1 {
                            *slot = ([a, b, c, d], v);
                        }
                    }
                }
            }
            best
        })
        .reduce(
            || [([0usize; 4], f64::NEG_INFINITY); 3],
            |x, y| {
                let mut out = x;
                for k in 0..3 {
                    if y[k].1 > out[k].1 || (y[k].1 == out[k].1 && y[k].0 < out[k].0) {
                        out[k] = y[k];
                    }
                }
                out
            },
        );
    best.map(|(idx, v)| (idx.map(|k| k as f64 / n as f64), v))
}

/// Stationary schedules of the closed-form families.
pub fn closed_form_schedule(kind: LeakageKind) -> [f64; 4] {
    match kind {
        LeakageKind::V1 | LeakageKind::V2 => {
            // 2e·t² + 2t = 1
            let t = (-1.0 + (1.0 + 2.0 * E).sqrt()) / (2.0 * E);
            let s = t * t * E;
            if kind == LeakageKind::V1 {
                [s, s, t, t]
            } else {
                [s, t, s, t]
            }
        }
        LeakageKind::V12 => {
            // e·t² + (2 + √2)·t = 1
            let b = 2.0 + SQRT_2;
            let t = (-b + (b * b + 4.0 * E).sqrt()) / (2.0 * E);
            [t * t * E, t, t, t * SQRT_2]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageMax {
    pub value: f64,
    pub argmax: [f64; 4],
    pub grid_value: f64,
    pub grid_argmax: [f64; 4],
    pub closed_form_value: f64,
    pub closed_form_argmax: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageConstants {
    pub v1: LeakageMax,
    pub v2: LeakageMax,
    pub v12: LeakageMax,
}

fn compute() -> LeakageConstants {
    let grid = grid_search();
    let one = |k: usize, kind: LeakageKind| {
        let (grid_argmax, grid_value) = grid[k];
        let (argmax, value) = refine(kind, grid_argmax);
        let closed_form_argmax = closed_form_schedule(kind);
        LeakageMax {
            value,
            argmax,
            grid_value,
            grid_argmax,
            closed_form_value: leakage_objective(kind, &closed_form_argmax),
            closed_form_argmax,
        }
    };
    LeakageConstants {
        v1: one(0, LeakageKind::V1),
        v2: one(1, LeakageKind::V2),
        v12: one(2, LeakageKind::V12),
    }
}

/// Computed once per process.
pub fn entropy_leakage_constants() -> &'static LeakageConstants {
    static CACHE: OnceLock<LeakageConstants> = OnceLock::new();
    CACHE.get_or_init(compute)
}
