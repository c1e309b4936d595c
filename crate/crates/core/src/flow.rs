//! Time-periodic incompressible velocity fields on the unit torus.
//!
//! Every built-in family is divergence-free by construction. Flows are
//! serialized as `{"kind": ..., "params": {...}, "period": p}` with `period`
//! either a positive number or `null` for a stationary flow (treated as
//! period 1 wherever a period is needed).

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::rng::SplitMix64;
use crate::spectral::{GridField, SpectralField, WaveIndex};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Trigonometric profile `w(s) = constant + sum_j cos[j-1] cos(2 pi j s) + sin[j-1] sin(2 pi j s)`.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(from = "ProfileRepr")]
pub struct Profile {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileRepr {
    Constant(f64),
    Series(ProfileSeries),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSeries {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

impl From<ProfileRepr> for Profile {
    fn from(r: ProfileRepr) -> Self {
        match r {
            ProfileRepr::Constant(c) => Profile::constant(c),
            ProfileRepr::Series(s) => Profile {
                constant: s.constant,
                cos: s.cos,
                sin: s.sin,
            },
        }
    }
}

impl Profile {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Default::default()
        }
    }

    /// `a * sin(2 pi s)`.
    pub fn sine(a: f64) -> Self {
        Self {
            sin: vec![a],
            ..Default::default()
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        let mut v = self.constant;
        for (j, a) in self.cos.iter().enumerate() {
            v += a * (TAU * (j + 1) as f64 * s).cos();
        }
        for (j, b) in self.sin.iter().enumerate() {
            v += b * (TAU * (j + 1) as f64 * s).sin();
        }
        v
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let mut v = 0.0;
        for (j, a) in self.cos.iter().enumerate() {
            let w = TAU * (j + 1) as f64;
            v -= a * w * (w * s).sin();
        }
        for (j, b) in self.sin.iter().enumerate() {
            let w = TAU * (j + 1) as f64;
            v += b * w * (w * s).cos();
        }
        v
    }

    pub fn bandwidth(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x1")]
    X1,
    #[serde(rename = "x2")]
    X2,
}

/// One term `amp * cos(2 pi k.x + phase) * cos(2 pi harmonic t / p + time_phase)`
/// of a velocity series. Divergence-free iff `k . amp = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesTerm {
    pub k: [i64; 2],
    pub amp: [f64; 2],
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub harmonic: u32,
    #[serde(default)]
    pub time_phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowKind {
    /// `along = X2`: `u = (0, w(x1))`; `along = X1`: `u = (w(x2), 0)`.
    StationaryShear { profile: Profile, along: Axis },
    /// `u = (-d2 psi, d1 psi)` with `psi = amplitude * sin(2 pi x1) sin(2 pi x2)`.
    Cellular { amplitude: f64 },
    /// `u = (theta w1(x2), (1 - theta) w2(x1))`, `theta` the indicator of `[0, duty p)`.
    AlternatingShear { w1: Profile, w2: Profile, duty: f64 },
    /// `u(x, t) = v(x + b t) - b` for a stationary base `v`.
    DriftedFrame { base: Box<FlowSpec>, shift: [f64; 2] },
    /// `u = mean + sum of SeriesTerm`.
    StreamSeries { mean: [f64; 2], terms: Vec<SeriesTerm> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDependence {
    Stationary,
    /// Frozen between switch times.
    PiecewiseConstant,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlowJson", into = "FlowJson")]
pub struct FlowSpec {
    kind: FlowKind,
    period: Option<f64>,
}

/// Sup norms of a flow and the envelope `B(t) = exp(|t| sup_grad_u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowBounds {
    pub sup_u: f64,
    pub sup_grad_u: f64,
    pub period: f64,
}

impl FlowBounds {
    pub fn envelope(&self, t: f64) -> f64 {
        (t.abs() * self.sup_grad_u).exp()
    }

    /// `sup B(t)` over one period.
    pub fn b1(&self) -> f64 {
        self.envelope(self.period)
    }

    /// `int_0^t B(s)^2 ds`.
    pub fn envelope_sq_integral(&self, t: f64) -> f64 {
        let g = 2.0 * self.sup_grad_u;
        if g * t < 1e-8 {
            t * (1.0 + 0.5 * g * t)
        } else {
            (g * t).exp_m1() / g
        }
    }
}

/// Circle-valued stream function `H` at a frozen time.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFunction {
    /// Real lift of `H` on the grid, `H(0) = 0`.
    pub grid: GridField,
    /// Codomain circle size; 0 for a real-valued `H`.
    pub alpha: f64,
    pub mean: [f64; 2],
    /// Max defect of `u = (-H_x2, H_x1)` on the grid.
    pub defect: f64,
}

/// Symmetries of the velocity field that commute with the flow map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlowSymmetries {
    /// `u(-x, t) = -u(x, t)`.
    pub inversion: bool,
    /// `u(x + a, t) = u(x, t)` for `a = (1/2, 1/2)`, `(1/2, 0)`, `(0, 1/2)`.
    pub shifts: [bool; 3],
}

pub const HALF_SHIFTS: [[f64; 2]; 3] = [[0.5, 0.5], [0.5, 0.0], [0.0, 0.5]];

fn wrap(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

impl FlowSpec {
    /// Validated constructor: checks the period and that the field is divergence-free.
    pub fn new(kind: FlowKind, period: Option<f64>) -> Result<Self> {
        let f = Self::new_unchecked(kind, period);
        f.validate()?;
        Ok(f)
    }

    /// No validation; for negative controls.
    pub fn new_unchecked(kind: FlowKind, period: Option<f64>) -> Self {
        Self { kind, period }
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.period {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidArgument(format!("period must be positive, got {p}")));
            }
        }
        match &self.kind {
            FlowKind::AlternatingShear { duty, .. } => {
                if self.period.is_none() {
                    return Err(Error::InvalidArgument("alternating_shear needs a finite period".into()));
                }
                if !(*duty > 0.0 && *duty < 1.0) {
                    return Err(Error::InvalidArgument(format!("duty must lie in (0,1), got {duty}")));
                }
            }
            FlowKind::DriftedFrame { base, shift } => {
                if base.time_dependence() != TimeDependence::Stationary {
                    return Err(Error::NotStationary);
                }
                if !shift.iter().all(|s| s.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite shift".into()));
                }
            }
            FlowKind::StreamSeries { terms, .. } => {
                if terms.iter().any(|t| t.harmonic > 0) && self.period.is_none() {
                    return Err(Error::InvalidArgument("time harmonics need a finite period".into()));
                }
            }
            FlowKind::Cellular { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidArgument("non-finite amplitude".into()));
                }
            }
            FlowKind::StationaryShear { .. } => {}
        }
        let p = self.effective_period();
        let mut worst: f64 = 0.0;
        for j in 0..4 {
            let t = p * j as f64 / 4.0;
            for piece in self.pieces() {
                worst = worst.max(self.divergence_max_on_piece(t, piece, 32));
            }
        }
        if worst > 1e-8 {
            return Err(Error::Divergent(worst));
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Self::shear(Profile::constant(0.0), Axis::X2)
    }

    pub fn shear(profile: Profile, along: Axis) -> Self {
        Self::new_unchecked(FlowKind::StationaryShear { profile, along }, None)
    }

    /// Spatially constant velocity.
    pub fn uniform(u: [f64; 2]) -> Self {
        Self::new_unchecked(
            FlowKind::StreamSeries {
                mean: u,
                terms: Vec::new(),
            },
            None,
        )
    }

    pub fn cellular(amplitude: f64) -> Self {
        Self::new_unchecked(FlowKind::Cellular { amplitude }, None)
    }

    pub fn alternating_shear(w1: Profile, w2: Profile, duty: f64, period: f64) -> Result<Self> {
        Self::new(FlowKind::AlternatingShear { w1, w2, duty }, Some(period))
    }

    /// Sine shears of amplitude 1.5, duty 1/2, period 1.
    pub fn alternating_shear_default() -> Self {
        Self::new_unchecked(
            FlowKind::AlternatingShear {
                w1: Profile::sine(1.5),
                w2: Profile::sine(1.5),
                duty: 0.5,
            },
            Some(1.0),
        )
    }

    pub fn with_period(mut self, p: f64) -> Self {
        self.period = Some(p);
        self
    }

    pub fn kind(&self) -> &FlowKind {
        &self.kind
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    /// Period, or 1 for stationary flows without one.
    pub fn effective_period(&self) -> f64 {
        self.period.unwrap_or(1.0)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FlowKind::StationaryShear { .. } => "stationary_shear",
            FlowKind::Cellular { .. } => "cellular",
            FlowKind::AlternatingShear { .. } => "alternating_shear",
            FlowKind::DriftedFrame { .. } => "drifted_frame",
            FlowKind::StreamSeries { .. } => "stream_series",
        }
    }

    pub fn time_dependence(&self) -> TimeDependence {
        match &self.kind {
            FlowKind::StationaryShear { .. } | FlowKind::Cellular { .. } => TimeDependence::Stationary,
            FlowKind::AlternatingShear { .. } => TimeDependence::PiecewiseConstant,
            FlowKind::DriftedFrame { shift, .. } => {
                if shift.iter().all(|s| *s == 0.0) {
                    TimeDependence::Stationary
                } else {
                    TimeDependence::Continuous
                }
            }
            FlowKind::StreamSeries { terms, .. } => {
                if terms.iter().all(|t| t.harmonic == 0) {
                    TimeDependence::Stationary
                } else {
                    TimeDependence::Continuous
                }
            }
        }
    }

    fn reduce_time(&self, t: f64) -> f64 {
        match self.period {
            Some(p) if self.time_dependence() != TimeDependence::Stationary => {
                let r = t - p * (t / p).floor();
                if r >= p {
                    0.0
                } else {
                    r.max(0.0)
                }
            }
            _ => t,
        }
    }

    /// Piece labels in use (two for the alternating shear, one otherwise).
    pub fn pieces(&self) -> Vec<usize> {
        match self.kind {
            FlowKind::AlternatingShear { .. } => vec![0, 1],
            _ => vec![0],
        }
    }

    /// Piece active at time `t`.
    pub fn piece_at(&self, t: f64) -> usize {
        match &self.kind {
            FlowKind::AlternatingShear { duty, .. } => {
                let p = self.effective_period();
                if self.reduce_time(t) < duty * p {
                    0
                } else {
                    1
                }
            }
            _ => 0,
        }
    }

    /// Discontinuity times strictly inside `(t0, t1)`, increasing.
    pub fn switch_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if let FlowKind::AlternatingShear { duty, .. } = &self.kind {
            if t1 <= t0 {
                return out;
            }
            let p = self.effective_period();
            let start = (t0 / p).floor() as i64 - 1;
            let end = (t1 / p).ceil() as i64 + 1;
            for m in start..=end {
                for off in [0.0, *duty] {
                    let s = (m as f64 + off) * p;
                    let tol = 1e-12 * p.max(t1.abs());
                    if s > t0 + tol && s < t1 - tol {
                        out.push(s);
                    }
                }
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        out
    }

    pub fn velocity_at(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self.velocity_on_piece(x, t, self.piece_at(t))
    }

    /// Velocity with the piece chosen explicitly (used on either side of a switch).
    pub fn velocity_on_piece(&self, x: [f64; 2], t: f64, piece: usize) -> [f64; 2] {
        match &self.kind {
            FlowKind::StationaryShear { profile, along } => match along {
                Axis::X2 => [0.0, profile.value(x[0])],
                Axis::X1 => [profile.value(x[1]), 0.0],
            },
            FlowKind::Cellular { amplitude } => {
                let a = TAU * amplitude;
                let (s1, c1) = (TAU * x[0]).sin_cos();
                let (s2, c2) = (TAU * x[1]).sin_cos();
                [-a * s1 * c2, a * c1 * s2]
            }
            FlowKind::AlternatingShear { w1, w2, .. } => {
                if piece == 0 {
                    [w1.value(x[1]), 0.0]
                } else {
                    [0.0, w2.value(x[0])]
                }
            }
            FlowKind::DriftedFrame { base, shift } => {
                let tr = self.reduce_time(t);
                let y = [x[0] + shift[0] * tr, x[1] + shift[1] * tr];
                let v = base.velocity_on_piece(y, 0.0, 0);
                [v[0] - shift[0], v[1] - shift[1]]
            }
            FlowKind::StreamSeries { mean, terms } => {
                let mut u = *mean;
                let tr = self.reduce_time(t);
                for term in terms {
                    let th = TAU * (term.k[0] as f64 * x[0] + term.k[1] as f64 * x[1]) + term.phase;
                    let c = th.cos() * series_time_factor(term, tr, self.effective_period());
                    u[0] += term.amp[0] * c;
                    u[1] += term.amp[1] * c;
                }
                u
            }
        }
    }

    /// `J[i][j] = d u_i / d x_j`.
    pub fn jacobian_on_piece(&self, x: [f64; 2], t: f64, piece: usize) -> [[f64; 2]; 2] {
        match &self.kind {
            FlowKind::StationaryShear { profile, along } => match along {
                Axis::X2 => [[0.0, 0.0], [profile.derivative(x[0]), 0.0]],
                Axis::X1 => [[0.0, profile.derivative(x[1])], [0.0, 0.0]],
            },
            FlowKind::Cellular { amplitude } => {
                let a = TAU * TAU * amplitude;
                let (s1, c1) = (TAU * x[0]).sin_cos();
                let (s2, c2) = (TAU * x[1]).sin_cos();
                [[-a * c1 * c2, a * s1 * s2], [-a * s1 * s2, a * c1 * c2]]
            }
            FlowKind::AlternatingShear { w1, w2, .. } => {
                if piece == 0 {
                    [[0.0, w1.derivative(x[1])], [0.0, 0.0]]
                } else {
                    [[0.0, 0.0], [w2.derivative(x[0]), 0.0]]
                }
            }
            FlowKind::DriftedFrame { base, shift } => {
                let tr = self.reduce_time(t);
                let y = [x[0] + shift[0] * tr, x[1] + shift[1] * tr];
                base.jacobian_on_piece(y, 0.0, 0)
            }
            FlowKind::StreamSeries { terms, .. } => {
                let mut j = [[0.0; 2]; 2];
                let tr = self.reduce_time(t);
                for term in terms {
                    let th = TAU * (term.k[0] as f64 * x[0] + term.k[1] as f64 * x[1]) + term.phase;
                    let s = -th.sin() * series_time_factor(term, tr, self.effective_period()) * TAU;
                    for a in 0..2 {
                        for b in 0..2 {
                            j[a][b] += term.amp[a] * s * term.k[b] as f64;
                        }
                    }
                }
                j
            }
        }
    }

    pub fn jacobian(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        self.jacobian_on_piece(x, t, self.piece_at(t))
    }

    /// Grid average of `u(., t)`.
    pub fn spatial_mean(&self, t: f64, resolution: usize) -> [f64; 2] {
        let piece = self.piece_at(t);
        let h = 1.0 / resolution as f64;
        let mut m = [0.0, 0.0];
        for i1 in 0..resolution {
            for i2 in 0..resolution {
                let u = self.velocity_on_piece([i1 as f64 * h, i2 as f64 * h], t, piece);
                m[0] += u[0];
                m[1] += u[1];
            }
        }
        let w = (resolution * resolution) as f64;
        [m[0] / w, m[1] / w]
    }

    fn sample_components(&self, t: f64, piece: usize, r: usize) -> (Vec<f64>, Vec<f64>) {
        let h = 1.0 / r as f64;
        let mut u1 = Vec::with_capacity(r * r);
        let mut u2 = Vec::with_capacity(r * r);
        for i1 in 0..r {
            for i2 in 0..r {
                let u = self.velocity_on_piece([i1 as f64 * h, i2 as f64 * h], t, piece);
                u1.push(u[0]);
                u2.push(u[1]);
            }
        }
        (u1, u2)
    }

    /// Spectral divergence maximum over the grid at time `t`.
    pub fn divergence_max(&self, t: f64, resolution: usize) -> f64 {
        self.divergence_max_on_piece(t, self.piece_at(t), resolution)
    }

    pub fn divergence_max_on_piece(&self, t: f64, piece: usize, resolution: usize) -> f64 {
        let r = resolution;
        let (u1, u2) = self.sample_components(t, piece, r);
        let fft = Fft2::shared(r);
        let mut a: Vec<C64> = u1.iter().map(|&v| C64::new(v, 0.0)).collect();
        let mut b: Vec<C64> = u2.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.forward(&mut a);
        fft.forward(&mut b);
        let mut d = vec![C64::new(0.0, 0.0); r * r];
        for i in 0..r {
            for j in 0..r {
                let (Some(k1), Some(k2)) = (signed_wave(i, r), signed_wave(j, r)) else {
                    continue;
                };
                let p = i * r + j;
                d[p] = C64::new(0.0, TAU) * (k1 as f64 * a[p] + k2 as f64 * b[p]);
            }
        }
        fft.inverse(&mut d);
        d.iter().fold(0.0, |m, z| m.max(z.re.abs()))
    }

    /// Sampled sup norms, inflated by 5%.
    pub fn flow_bounds(&self, sample_resolution: usize) -> FlowBounds {
        let r = sample_resolution.max(2);
        let period = self.effective_period();
        let times: Vec<(f64, usize)> = match self.time_dependence() {
            TimeDependence::Stationary => vec![(0.0, 0)],
            _ => {
                let mut v = Vec::new();
                for j in 0..r {
                    let t = period * j as f64 / r as f64;
                    v.push((t, self.piece_at(t)));
                }
                for piece in self.pieces() {
                    v.push((0.0, piece));
                }
                v
            }
        };
        let h = 1.0 / r as f64;
        let mut su: f64 = 0.0;
        let mut sg: f64 = 0.0;
        for &(t, piece) in &times {
            for i1 in 0..r {
                for i2 in 0..r {
                    let x = [i1 as f64 * h, i2 as f64 * h];
                    let u = self.velocity_on_piece(x, t, piece);
                    su = su.max(u[0].hypot(u[1]));
                    sg = sg.max(op_norm(self.jacobian_on_piece(x, t, piece)));
                }
            }
        }
        FlowBounds {
            sup_u: 1.05 * su,
            sup_grad_u: 1.05 * sg,
            period,
        }
    }

    /// Circle-valued Hamiltonian at frozen time `t`.
    pub fn stream_function(&self, t: f64, resolution: usize) -> Result<StreamFunction> {
        let r = resolution;
        let mean = self.spatial_mean(t, r);
        let alpha = rational_alpha(mean[0], mean[1]).ok_or(Error::NotHamiltonian(mean[0], mean[1]))?;
        let piece = self.piece_at(t);
        let (u1, u2) = self.sample_components(t, piece, r);
        let fft = Fft2::shared(r);
        let mut a: Vec<C64> = u1.iter().map(|&v| C64::new(v, 0.0)).collect();
        let mut b: Vec<C64> = u2.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.forward(&mut a);
        fft.forward(&mut b);
        let mut psi = vec![C64::new(0.0, 0.0); r * r];
        let mut d1 = vec![C64::new(0.0, 0.0); r * r];
        let mut d2 = vec![C64::new(0.0, 0.0); r * r];
        for i in 0..r {
            for j in 0..r {
                let (Some(k1), Some(k2)) = (signed_wave(i, r), signed_wave(j, r)) else {
                    continue;
                };
                let ks = (k1 * k1 + k2 * k2) as f64;
                if ks == 0.0 {
                    continue;
                }
                let p = i * r + j;
                let ph = (k1 as f64 * b[p] - k2 as f64 * a[p]) / C64::new(0.0, TAU * ks);
                psi[p] = ph;
                d1[p] = C64::new(0.0, TAU * k1 as f64) * ph;
                d2[p] = C64::new(0.0, TAU * k2 as f64) * ph;
            }
        }
        fft.inverse(&mut psi);
        fft.inverse(&mut d1);
        fft.inverse(&mut d2);
        let h = 1.0 / r as f64;
        let p0 = psi[0].re;
        let mut vals = Vec::with_capacity(r * r);
        let mut defect: f64 = 0.0;
        for i in 0..r {
            for j in 0..r {
                let p = i * r + j;
                let (x1, x2) = (i as f64 * h, j as f64 * h);
                vals.push(mean[1] * x1 - mean[0] * x2 + psi[p].re - p0);
                let e1 = (mean[0] - d2[p].re) - u1[p];
                let e2 = (mean[1] + d1[p].re) - u2[p];
                defect = defect.max(e1.abs()).max(e2.abs());
            }
        }
        if defect > 1e-6 {
            return Err(Error::HamiltonianCheck(defect));
        }
        Ok(StreamFunction {
            grid: GridField::new(r, vals),
            alpha,
            mean,
            defect,
        })
    }

    /// Detected symmetries (sampled at fixed pseudo-random points and times).
    pub fn symmetries(&self) -> FlowSymmetries {
        let mut g = SplitMix64::new(0x5EED);
        let p = self.effective_period();
        let mut samples = Vec::new();
        for _ in 0..96 {
            let x = [g.next_f64(), g.next_f64()];
            let t = g.next_f64() * p;
            samples.push((x, t));
        }
        let scale = 1.0 + self.flow_bounds(16).sup_u;
        let tol = 1e-12 * scale;
        let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;
        let mut sym = FlowSymmetries {
            inversion: true,
            shifts: [true; 3],
        };
        for &(x, t) in &samples {
            let piece = self.piece_at(t);
            let u = self.velocity_on_piece(x, t, piece);
            let v = self.velocity_on_piece([wrap(-x[0]), wrap(-x[1])], t, piece);
            if !close(u, [-v[0], -v[1]]) {
                sym.inversion = false;
            }
            for (s, a) in HALF_SHIFTS.iter().enumerate() {
                let w = self.velocity_on_piece([wrap(x[0] + a[0]), wrap(x[1] + a[1])], t, piece);
                if !close(u, w) {
                    sym.shifts[s] = false;
                }
            }
        }
        sym
    }

    /// Exact translation per period when the flow is spatially constant.
    pub fn uniform_velocity(&self) -> Option<[f64; 2]> {
        match &self.kind {
            FlowKind::StationaryShear { profile, along } if profile.bandwidth() == 0 => Some(match along {
                Axis::X2 => [0.0, profile.constant],
                Axis::X1 => [profile.constant, 0.0],
            }),
            FlowKind::StreamSeries { mean, terms } if terms.is_empty() => Some(*mean),
            _ => None,
        }
    }
}

fn series_time_factor(term: &SeriesTerm, t: f64, p: f64) -> f64 {
    if term.harmonic == 0 {
        term.time_phase.cos()
    } else {
        (TAU * term.harmonic as f64 * t / p + term.time_phase).cos()
    }
}

/// Signed wavenumber of FFT index `i`; `None` for the Nyquist index of even grids.
fn signed_wave(i: usize, r: usize) -> Option<i64> {
    if r % 2 == 0 && i == r / 2 {
        return None;
    }
    let i = i as i64;
    let r = r as i64;
    Some(if i <= r / 2 { i } else { i - r })
}

/// Operator 2-norm of a 2x2 matrix.
pub fn op_norm(j: [[f64; 2]; 2]) -> f64 {
    let fro = j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = (fro * fro - 4.0 * det * det).max(0.0);
    ((fro + disc.sqrt()) / 2.0).sqrt()
}

/// Common `alpha` with `a, b` integer multiples of it (continued fractions,
/// denominator cap `1e4`, tolerance `1e-10`). `Some(0.0)` for a zero mean.
pub fn rational_alpha(a: f64, b: f64) -> Option<f64> {
    let tol = 1e-10;
    match (a.abs() < tol, b.abs() < tol) {
        (true, true) => return Some(0.0),
        (true, false) => return Some(b.abs()),
        (false, true) => return Some(a.abs()),
        _ => {}
    }
    let r = (b / a).abs();
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut x = r;
    for _ in 0..64 {
        let ai = x.floor();
        let ai_i = ai as i128;
        let h2 = ai_i * h1 + h0;
        let k2 = ai_i * k1 + k0;
        if k2 > 10_000 {
            return None;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let approx = h1 as f64 / k1 as f64;
        if (approx - r).abs() <= tol * r.max(1.0) {
            let alpha = a.abs() / k1 as f64;
            return Some(alpha);
        }
        let frac = x - ai;
        if frac.abs() < 1e-15 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Example-1.3 style frame change: `u(x,t) = v(x + b t) - b` with `b = (mean_1(v), 0)`
/// and period `1 / |mean_1(v)|`.
pub fn drifted_frame(v: &FlowSpec, resolution: usize) -> Result<FlowSpec> {
    if v.time_dependence() != TimeDependence::Stationary {
        return Err(Error::NotStationary);
    }
    let m = v.spatial_mean(0.0, resolution);
    if m[0].abs() < 1e-9 {
        return Err(Error::ZeroMeanDrift);
    }
    FlowSpec::new(
        FlowKind::DriftedFrame {
            base: Box::new(v.clone()),
            shift: [m[0], 0.0],
        },
        Some(1.0 / m[0].abs()),
    )
}

/// Sample a flow component on a grid (spectral helpers elsewhere use this).
pub fn velocity_grid(flow: &FlowSpec, t: f64, piece: usize, r: usize) -> (Vec<f64>, Vec<f64>) {
    flow.sample_components(t, piece, r)
}

/// Spectral field of a single-mode stream function, handy for eigenfunction tests.
pub fn cellular_stream_mode(n_trunc: usize) -> SpectralField {
    // sin(2 pi x1) sin(2 pi x2) = (cos 2pi(x1 - x2) - cos 2pi(x1 + x2)) / 2
    let mut f = SpectralField::zeros(n_trunc);
    f.set_pair(WaveIndex::new(1, -1), C64::new(0.25, 0.0));
    f.set_pair(WaveIndex::new(1, 1), C64::new(-0.25, 0.0));
    f
}

// ---- JSON form ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowJson {
    kind: String,
    #[serde(default = "empty_params")]
    params: serde_json::Value,
    #[serde(default)]
    period: Option<PeriodRepr>,
}

fn empty_params() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PeriodRepr {
    Value(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShearParams {
    profile: Profile,
    #[serde(default = "default_axis")]
    along: Axis,
}

fn default_axis() -> Axis {
    Axis::X2
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellularParams {
    #[serde(default = "one")]
    amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlternatingParams {
    #[serde(default = "default_alt_profile")]
    w1: Profile,
    #[serde(default = "default_alt_profile")]
    w2: Profile,
    #[serde(default = "half")]
    duty: f64,
}

fn default_alt_profile() -> Profile {
    Profile::sine(1.5)
}

fn half() -> f64 {
    0.5
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftedParams {
    base: Box<FlowSpec>,
    #[serde(default)]
    shift: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesParams {
    #[serde(default)]
    mean: [f64; 2],
    #[serde(default)]
    terms: Vec<SeriesTerm>,
}

fn params<T: for<'de> Deserialize<'de>>(v: serde_json::Value) -> std::result::Result<T, String> {
    serde_json::from_value(v).map_err(|e| e.to_string())
}

impl TryFrom<FlowJson> for FlowSpec {
    type Error = String;

    fn try_from(j: FlowJson) -> std::result::Result<Self, String> {
        let period = match j.period {
            None => None,
            Some(PeriodRepr::Value(p)) => Some(p),
            Some(PeriodRepr::Text(s)) if s == "inf" => None,
            Some(PeriodRepr::Text(s)) => return Err(format!("invalid period {s:?}")),
        };
        let spec = match j.kind.as_str() {
            "stationary_shear" => {
                let p: ShearParams = params(j.params)?;
                FlowSpec::new(
                    FlowKind::StationaryShear {
                        profile: p.profile,
                        along: p.along,
                    },
                    period,
                )
            }
            "cellular" => {
                let p: CellularParams = params(j.params)?;
                FlowSpec::new(FlowKind::Cellular { amplitude: p.amplitude }, period)
            }
            "alternating_shear" => {
                let p: AlternatingParams = params(j.params)?;
                FlowSpec::new(
                    FlowKind::AlternatingShear {
                        w1: p.w1,
                        w2: p.w2,
                        duty: p.duty,
                    },
                    Some(period.unwrap_or(1.0)),
                )
            }
            "drifted_frame" => {
                let p: DriftedParams = params(j.params)?;
                match p.shift {
                    None => {
                        let f = drifted_frame(&p.base, 64).map_err(|e| e.to_string())?;
                        match period {
                            Some(q) => Ok(f.with_period(q)),
                            None => Ok(f),
                        }
                    }
                    Some(shift) => {
                        let per = period.or_else(|| (shift[0] != 0.0).then(|| 1.0 / shift[0].abs()));
                        FlowSpec::new(FlowKind::DriftedFrame { base: p.base, shift }, per)
                    }
                }
            }
            "stream_series" => {
                let p: SeriesParams = params(j.params)?;
                FlowSpec::new(
                    FlowKind::StreamSeries {
                        mean: p.mean,
                        terms: p.terms,
                    },
                    period,
                )
            }
            other => return Err(format!("unknown flow kind {other:?}")),
        };
        spec.map_err(|e| e.to_string())
    }
}

impl From<FlowSpec> for FlowJson {
    fn from(f: FlowSpec) -> Self {
        let kind = f.name().to_string();
        let params = match f.kind {
            FlowKind::StationaryShear { profile, along } => serde_json::to_value(ShearParams { profile, along }),
            FlowKind::Cellular { amplitude } => serde_json::to_value(CellularParams { amplitude }),
            FlowKind::AlternatingShear { w1, w2, duty } => {
                serde_json::to_value(AlternatingParams { w1, w2, duty })
            }
            FlowKind::DriftedFrame { base, shift } => serde_json::to_value(DriftedParams {
                base,
                shift: Some(shift),
            }),
            FlowKind::StreamSeries { mean, terms } => serde_json::to_value(SeriesParams { mean, terms }),
        }
        .expect("flow params serialize");
        FlowJson {
            kind,
            params,
            period: f.period.map(PeriodRepr::Value),
        }
    }
}

impl Serialize for Profile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Profile", 3)?;
        st.serialize_field("constant", &self.constant)?;
        st.serialize_field("cos", &self.cos)?;
        st.serialize_field("sin", &self.sin)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_velocity_and_bounds() {
        let f = FlowSpec::shear(Profile::constant(2.0), Axis::X2);
        assert_eq!(f.velocity_at([0.3, 0.7], 5.0), [0.0, 2.0]);
        let b = f.flow_bounds(32);
        assert!((b.sup_u - 2.1).abs() < 1e-12);
        assert_eq!(b.sup_grad_u, 0.0);
        assert_eq!(b.b1(), 1.0);
        assert_eq!(f.spatial_mean(0.0, 16), [0.0, 2.0]);
    }

    #[test]
    fn cellular_stagnation_and_bounds() {
        let f = FlowSpec::cellular(1.0);
        let u = f.velocity_at([0.25, 0.25], 0.0);
        assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
        let b = f.flow_bounds(64);
        assert!((b.sup_u - TAU * 1.05).abs() < 1e-12);
        assert!((b.sup_grad_u - TAU * TAU * 1.05).abs() < 1e-9);
        let m = f.spatial_mean(0.0, 16);
        assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15);
    }

    #[test]
    fn hamiltonians() {
        let f = FlowSpec::shear(Profile::constant(2.0), Axis::X2);
        let h = f.stream_function(0.0, 16).unwrap();
        assert_eq!(h.alpha, 2.0);
        for i in 0..16 * 16 {
            let x = h.grid.node(i);
            assert!((h.grid.values()[i] - 2.0 * x[0]).abs() < 1e-12);
        }
        let c = FlowSpec::cellular(1.0).stream_function(0.0, 32).unwrap();
        assert_eq!(c.alpha, 0.0);
        for i in 0..32 * 32 {
            let x = c.grid.node(i);
            let want = (TAU * x[0]).sin() * (TAU * x[1]).sin();
            assert!((c.grid.values()[i] - want).abs() < 1e-12);
        }
        let irr = FlowSpec::uniform([1.0, 2f64.sqrt()]);
        assert!(matches!(irr.stream_function(0.0, 16), Err(Error::NotHamiltonian(..))));
        let rat = FlowSpec::uniform([0.75, 0.5]);
        assert!((rat.stream_function(0.0, 16).unwrap().alpha - 0.25).abs() < 1e-12);
    }

    #[test]
    fn drifted_constant_bases() {
        let u = drifted_frame(&FlowSpec::uniform([1.0, 1.0]), 32).unwrap();
        assert_eq!(u.period(), Some(1.0));
        let v = u.velocity_at([0.2, 0.9], 0.37);
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        let w = drifted_frame(&FlowSpec::uniform([1.0, 0.0]), 32).unwrap();
        let v = w.velocity_at([0.2, 0.9], 0.37);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        assert_eq!(drifted_frame(&FlowSpec::cellular(1.0), 32), Err(Error::ZeroMeanDrift));
    }

    #[test]
    fn alternating_switches() {
        let f = FlowSpec::alternating_shear_default();
        assert_eq!(f.switch_times(0.0, 1.0), vec![0.5]);
        assert_eq!(f.switch_times(0.2, 2.2), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(f.piece_at(0.49), 0);
        assert_eq!(f.piece_at(0.5), 1);
        assert_eq!(f.piece_at(1.0), 0);
        for piece in [0, 1] {
            assert!(f.divergence_max_on_piece(0.5, piece, 32) < 1e-8);
        }
    }

    #[test]
    fn broken_series_flagged() {
        let kind = FlowKind::StreamSeries {
            mean: [0.0, 0.0],
            terms: vec![SeriesTerm {
                k: [1, 0],
                amp: [1.0, 0.0],
                phase: 0.0,
                harmonic: 0,
                time_phase: 0.0,
            }],
        };
        let f = FlowSpec::new_unchecked(kind.clone(), None);
        assert!(f.divergence_max(0.0, 32) > 1.0);
        assert!(matches!(FlowSpec::new(kind, None), Err(Error::Divergent(_))));
    }

    #[test]
    fn symmetry_detection() {
        let c = FlowSpec::cellular(1.0).symmetries();
        assert!(c.inversion && c.shifts == [true, false, false]);
        let a = FlowSpec::alternating_shear_default().symmetries();
        assert!(a.inversion && a.shifts == [false; 3]);
        let s = FlowSpec::shear(Profile::constant(2.0), Axis::X2).symmetries();
        assert!(!s.inversion && s.shifts == [true; 3]);
    }

    #[test]
    fn json_round_trip() {
        let src = r#"{"kind":"alternating_shear","params":{"w1":{"sin":[1.0]},"duty":0.5},"period":1.0}"#;
        let f: FlowSpec = serde_json::from_str(src).unwrap();
        assert_eq!(f.velocity_at([0.0, 0.25], 0.1), [1.0, 0.0]);
        let back: FlowSpec = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        let shear: FlowSpec =
            serde_json::from_str(r#"{"kind":"stationary_shear","params":{"profile":2.0},"period":null}"#).unwrap();
        assert_eq!(shear.velocity_at([0.1, 0.1], 0.0), [0.0, 2.0]);
        assert!(serde_json::from_str::<FlowSpec>(r#"{"kind":"cellular","params":{"amp":1}}"#).is_err());
        assert!(serde_json::from_str::<FlowSpec>(r#"{"kind":"vortex"}"#).is_err());
    }

    #[test]
    fn rational_test() {
        assert_eq!(rational_alpha(0.0, 2.0), Some(2.0));
        assert!((rational_alpha(1.0, 1.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(rational_alpha(1.0, PI), None);
        assert_eq!(rational_alpha(0.0, 0.0), Some(0.0));
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm([[0.0, 3.0], [0.0, 0.0]]) - 3.0).abs() < 1e-15);
        assert!((op_norm([[1.0, 0.0], [0.0, -2.0]]) - 2.0).abs() < 1e-15);
    }
}
