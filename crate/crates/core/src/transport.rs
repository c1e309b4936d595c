//! Free (inviscid) transport `U(t, s)` by characteristics, and particle tracing.

use crate::flow::FlowSpec;
use crate::spectral::{powers, GridField, SpectralField};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPath {
    /// `(t, x)` with `x` wrapped to `[0,1)^2`.
    pub samples: Vec<(f64, [f64; 2])>,
    pub dt: f64,
}

impl CharacteristicPath {
    pub fn endpoint(&self) -> [f64; 2] {
        self.samples.last().map(|s| s.1).unwrap_or([0.0, 0.0])
    }

    /// CSV with header `t,x1,x2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x1,x2\n");
        for (t, x) in &self.samples {
            s.push_str(&format!("{},{},{}\n", t, x[0], x[1]));
        }
        s
    }
}

pub fn wrap_point(x: [f64; 2]) -> [f64; 2] {
    let w = |v: f64| {
        let y = v - v.floor();
        if y >= 1.0 {
            0.0
        } else {
            y
        }
    };
    [w(x[0]), w(x[1])]
}

/// Subintervals of `[t0, t1]` (either orientation) between switch times,
/// each with its active piece.
pub(crate) fn segments(flow: &FlowSpec, t0: f64, t1: f64) -> Vec<(f64, f64, usize)> {
    let (a, b) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let mut cuts = vec![a];
    cuts.extend(flow.switch_times(a, b));
    cuts.push(b);
    let mut segs: Vec<(f64, f64, usize)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], flow.piece_at(0.5 * (w[0] + w[1]))))
        .collect();
    if t1 < t0 {
        segs.reverse();
        for s in segs.iter_mut() {
            *s = (s.1, s.0, s.2);
        }
    }
    segs
}

fn rk4(flow: &FlowSpec, x: [f64; 2], t: f64, h: f64, piece: usize) -> [f64; 2] {
    let f = |y: [f64; 2], s: f64| flow.velocity_on_piece(y, s, piece);
    let k1 = f(x, t);
    let k2 = f([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]], t + 0.5 * h);
    let k3 = f([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]], t + 0.5 * h);
    let k4 = f([x[0] + h * k3[0], x[1] + h * k3[1]], t + h);
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn steps_for(len: f64, dt: f64) -> usize {
    ((len.abs() / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Classical RK4 integration of `dX/dt = u(X, t)` from `t0` to `t1`
/// (backward if `t1 < t0`), splitting at switch times.
pub fn trace(flow: &FlowSpec, x0: [f64; 2], t0: f64, t1: f64, dt: f64) -> CharacteristicPath {
    assert!(dt > 0.0, "dt must be positive");
    let mut samples = vec![(t0, wrap_point(x0))];
    let mut x = x0;
    for (a, b, piece) in segments(flow, t0, t1) {
        let m = steps_for(b - a, dt);
        let h = (b - a) / m as f64;
        for j in 0..m {
            let t = a + j as f64 * h;
            x = rk4(flow, x, t, h, piece);
            let tn = if j + 1 == m { b } else { a + (j + 1) as f64 * h };
            samples.push((tn, wrap_point(x)));
        }
    }
    CharacteristicPath { samples, dt }
}

/// Endpoint of the characteristic through `(x, t0)` at time `t1`, unwrapped.
pub fn flow_map(flow: &FlowSpec, x: [f64; 2], t0: f64, t1: f64, dt: f64) -> [f64; 2] {
    let mut y = x;
    for (a, b, piece) in segments(flow, t0, t1) {
        let m = steps_for(b - a, dt);
        let h = (b - a) / m as f64;
        for j in 0..m {
            y = rk4(flow, y, a + j as f64 * h, h, piece);
        }
    }
    y
}

/// Departure points `X(t -> s)` of every node of the `R x R` grid, wrapped.
pub fn departure_points(flow: &FlowSpec, r: usize, t: f64, s: f64, dt: f64) -> Vec<[f64; 2]> {
    if let Some(u) = flow.uniform_velocity() {
        // Exact translation; avoids RK4 rounding for the Floquet sanity checks.
        let d = s - t;
        return (0..r * r)
            .map(|i| {
                let x = [(i / r) as f64 / r as f64, (i % r) as f64 / r as f64];
                wrap_point([x[0] + u[0] * d, x[1] + u[1] * d])
            })
            .collect();
    }
    (0..r * r)
        .into_par_iter()
        .map(|i| {
            let x = [(i / r) as f64 / r as f64, (i % r) as f64 / r as f64];
            wrap_point(flow_map(flow, x, t, s, dt))
        })
        .collect()
}

/// Grid used by the semi-Lagrangian transport for truncation `n`.
pub fn transport_resolution(n_trunc: usize) -> usize {
    2 * (2 * n_trunc + 1)
}

/// Trigonometric evaluation of `f` at arbitrary points.
pub fn evaluate_at(f: &SpectralField, points: &[[f64; 2]]) -> Vec<f64> {
    let n = f.n_trunc() as i64;
    let s = f.side();
    let c = f.coeffs();
    points
        .par_iter()
        .map(|y| {
            let p1 = powers(C64::from_polar(1.0, 2.0 * PI * y[0]), n);
            let p2 = powers(C64::from_polar(1.0, 2.0 * PI * y[1]), n);
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..s {
                let row = &c[a * s..(a + 1) * s];
                let mut r = C64::new(0.0, 0.0);
                for b in 0..s {
                    r += row[b] * p2[b];
                }
                acc += r * p1[a];
            }
            acc.re
        })
        .collect()
}

/// Semi-Lagrangian `U(t, s) f`: trace every node back from `t` to `s`,
/// evaluate `f` there, re-project onto the truncation.
pub fn free_evolve(flow: &FlowSpec, f: &SpectralField, s: f64, t: f64, dt: f64) -> SpectralField {
    let n = f.n_trunc();
    let r = transport_resolution(n);
    let pts = departure_points(flow, r, t, s, dt);
    let vals = evaluate_at(f, &pts);
    let g = GridField::new(r, vals);
    let mut out = SpectralField::to_spectral(&g, n, false).expect("transport grid is large enough");
    if f.is_mean_zero() {
        out.set_mean(0.0);
    } else {
        out.set_mean(f.mean());
    }
    out
}

/// `(s - p floor(s/p), t - p floor(s/p))`.
pub fn period_reduce(s: f64, t: f64, p: f64) -> (f64, f64) {
    let m = (s / p).floor();
    (s - p * m, t - p * m)
}
