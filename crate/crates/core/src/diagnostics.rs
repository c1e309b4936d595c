//! Relaxation times, amplitude sweeps and live checks of the decay lemmas.

use crate::error::{Error, Result};
use crate::floquet::eigen_residual;
use crate::flow::FlowSpec;
use crate::solver::{composite_simpson, fmt_f64, Formulation, SolverConfig, Stepper, TrajectoryRecord};
use crate::spectral::SpectralField;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone)]
pub struct RelaxationQuery {
    pub delta: f64,
    pub tau_max: f64,
    pub phi0: SpectralField,
    pub flow: FlowSpec,
    /// Formulation and `t_end` are overridden per run.
    pub template: SolverConfig,
}

impl RelaxationQuery {
    pub fn new(flow: FlowSpec, phi0: SpectralField, delta: f64, tau_max: f64, template: SolverConfig) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {delta} not in (0, 1)")));
        }
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return Err(Error::InvalidArgument("tau_max must be positive".into()));
        }
        let nrm = phi0.var_sq().sqrt();
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("initial mean-zero norm {nrm} is not 1")));
        }
        Ok(Self {
            delta,
            tau_max,
            phi0,
            flow,
            template,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relaxation {
    Time(f64),
    Saturated,
}

impl Relaxation {
    pub fn time(&self) -> Option<f64> {
        match self {
            Relaxation::Time(t) => Some(*t),
            Relaxation::Saturated => None,
        }
    }

    /// The time, with `SATURATED` read as `tau_max`.
    pub fn or_max(&self, tau_max: f64) -> f64 {
        self.time().unwrap_or(tau_max)
    }
}

/// First crossing of `||phi - mean|| = delta` in a record sequence, log-linear
/// between the bracketing records.
pub fn crossing_time(times: &[f64], var_sq: &[f64], delta: f64) -> Option<f64> {
    let target = delta.ln();
    let lg = |v: f64| 0.5 * v.max(1e-300).ln();
    if var_sq.first().map(|v| lg(*v) < target).unwrap_or(false) {
        return Some(times[0]);
    }
    for i in 1..times.len() {
        let (a, b) = (lg(var_sq[i - 1]), lg(var_sq[i]));
        if b < target {
            let w = (target - a) / (b - a);
            return Some(times[i - 1] + w * (times[i] - times[i - 1]));
        }
    }
    None
}

/// Relaxation time at amplitude `a` in the fast-clock formulation.
pub fn relaxation_time(q: &RelaxationQuery, a: f64) -> Result<Relaxation> {
    let mut cfg = q.template.clone();
    cfg.formulation = Formulation::Amplitude(a);
    cfg.t_end = q.tau_max;
    let d2 = q.delta * q.delta;
    let mut stepper = Stepper::new(&q.flow, &cfg)?;
    let (traj, _) = stepper.run(&q.phi0, |_, f| f.var_sq() < d2)?;
    Ok(match crossing_time(&traj.times, &traj.var_sq, q.delta) {
        Some(t) => Relaxation::Time(t.min(q.tau_max)),
        None => Relaxation::Saturated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationCurve {
    pub amplitudes: Vec<f64>,
    pub taus: Vec<Relaxation>,
    pub delta: f64,
    pub tau_max: f64,
    pub phi0_descriptor: String,
}

impl RelaxationCurve {
    /// Times with `SATURATED` read as `tau_max`.
    pub fn values(&self) -> Vec<f64> {
        self.taus.iter().map(|t| t.or_max(self.tau_max)).collect()
    }

    /// CSV with header `A,tau,saturated_flag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("A,tau,saturated_flag\n");
        for (a, t) in self.amplitudes.iter().zip(&self.taus) {
            let flag = matches!(t, Relaxation::Saturated) as u8;
            s.push_str(&format!("{},{},{}\n", fmt_f64(*a), fmt_f64(t.or_max(self.tau_max)), flag));
        }
        s
    }
}

/// Independent runs per amplitude from the shared initial field, reported
/// in amplitude order.
pub fn amplitude_sweep(q: &RelaxationQuery, amplitudes: &[f64]) -> Result<RelaxationCurve> {
    if amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("amplitudes must be strictly increasing".into()));
    }
    let taus = amplitudes
        .par_iter()
        .map(|&a| relaxation_time(q, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(RelaxationCurve {
        amplitudes: amplitudes.to_vec(),
        taus,
        delta: q.delta,
        tau_max: q.tau_max,
        phi0_descriptor: format!("n_trunc={} l2={}", q.phi0.n_trunc(), fmt_f64(q.phi0.l2_sq().sqrt())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrendVerdict {
    #[serde(rename = "ENHANCING_TREND")]
    Enhancing,
    #[serde(rename = "NON_ENHANCING_TREND")]
    NonEnhancing,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl fmt::Display for TrendVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrendVerdict::Enhancing => "ENHANCING_TREND",
            TrendVerdict::NonEnhancing => "NON_ENHANCING_TREND",
            TrendVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Finite-sweep trend label. It says nothing about the `A -> infinity` limit.
pub fn classify(curve: &RelaxationCurve) -> Result<TrendVerdict> {
    let a = &curve.amplitudes;
    if a.len() < 4 {
        return Err(Error::InsufficientSweep(format!("{} amplitudes, need 4", a.len())));
    }
    let span = a[a.len() - 1] / a[0];
    if !(span >= 32.0) {
        return Err(Error::InsufficientSweep(format!("amplitude span {span}, need 32")));
    }
    let v = curve.values();
    let first = v[0];
    let last = v[v.len() - 1];
    let monotone = v.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    if last <= 0.25 * first && monotone {
        return Ok(TrendVerdict::Enhancing);
    }
    let tv: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let top = v.iter().cloned().fold(0.0, f64::max);
    if tv <= 0.1 * top {
        return Ok(TrendVerdict::NonEnhancing);
    }
    Ok(TrendVerdict::Inconclusive)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdistReport {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub b1: f64,
    /// `max lhs / rhs` over records with `t > 0`.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Distance between the diffusive and the free (inviscid) evolutions against
/// `(eps/2) ||phi0||_1^2 int_0^t B(s)^2 ds`.
pub fn sdist_check(flow: &FlowSpec, eps: f64, phi0: &SpectralField, horizon: f64, dt: f64) -> Result<SdistReport> {
    let n = phi0.n_trunc();
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let stride = (steps / 200).max(1);
    let snapshots = |kappa: f64| -> Result<(Vec<f64>, Vec<SpectralField>)> {
        let cfg = SolverConfig::new(n, dt, Formulation::Diffusivity(kappa), horizon).with_record_stride(stride);
        let mut st = Stepper::new(flow, &cfg)?;
        let mut times = Vec::new();
        let mut fields = Vec::new();
        st.run(phi0, |t, f| {
            times.push(t);
            fields.push(f.clone());
            false
        })?;
        Ok((times, fields))
    };
    let ((times, diffused), (_, free)) = {
        let (a, b) = rayon::join(|| snapshots(eps), || snapshots(0.0));
        (a?, b?)
    };
    let bounds = flow.flow_bounds(64);
    let h1 = phi0.sobolev_norm_sq(1);
    let mut lhs = Vec::with_capacity(times.len());
    let mut rhs = Vec::with_capacity(times.len());
    let mut worst: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let d = diffused[i].sub(&free[i])?.l2_sq();
        let r = 0.5 * eps * h1 * bounds.envelope_sq_integral(t);
        if t > 0.0 {
            worst = worst.max(d / r);
        }
        lhs.push(d);
        rhs.push(r);
    }
    Ok(SdistReport {
        epsilon: eps,
        times,
        lhs,
        rhs,
        b1: bounds.b1(),
        worst_ratio: worst,
        pass: worst <= 1.05,
    })
}

/// `2 kappa int ||phi||_1^2 dt / ||phi(0) - mean||^2`, from the substep-level
/// integral carried by the trajectory (rescaled if `diffusivity` differs
/// from the run's).
pub fn dissipation_budget(traj: &TrajectoryRecord, diffusivity: f64) -> f64 {
    let v0 = traj.var_sq[0];
    let w: f64 = traj.dissipated.iter().sum();
    if traj.diffusivity > 0.0 {
        w * diffusivity / traj.diffusivity / v0
    } else {
        2.0 * diffusivity * composite_simpson(&traj.times, &traj.h1_sq) / v0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub tau: f64,
    pub b1: f64,
    pub h1_psi: f64,
    pub eigen_residual: f64,
    pub epsilons: Vec<f64>,
    pub horizons: Vec<f64>,
    pub final_norms: Vec<f64>,
    pub pass: bool,
}

/// Residual tolerance for accepting `psi` as an eigenfunction.
pub const EIGEN_TOLERANCE: f64 = 1e-6;

/// Check that `psi` (normalized, real part if taken from a complex vector)
/// is a nonconstant eigenfunction of the period map.
pub(crate) fn verify_eigenfunction(flow: &FlowSpec, psi: &SpectralField, dt: f64) -> Result<f64> {
    let var = psi.mean_removed().l2_sq();
    if var < 1e-24 || psi.sobolev_norm_sq(1) < 1e-24 {
        return Err(Error::NotAnEigenfunction(f64::INFINITY));
    }
    let (res, _) = eigen_residual(flow, psi, dt);
    if !(res <= EIGEN_TOLERANCE) {
        return Err(Error::NotAnEigenfunction(res));
    }
    Ok(res)
}

/// Slow-clock runs to `tau / eps` from the eigenfunction `psi`, with
/// `tau = B_1^{-2} / ||psi||_1^2`.
pub fn non_enhancement_witness(flow: &FlowSpec, psi: &SpectralField, epsilons: &[f64]) -> Result<WitnessReport> {
    let psi = psi.scaled(1.0 / psi.l2_sq().sqrt());
    let res = verify_eigenfunction(flow, &psi, 1e-3)?;
    let b1 = flow.flow_bounds(64).b1();
    let h1 = psi.sobolev_norm_sq(1);
    let tau = 1.0 / (b1 * b1 * h1);
    let n = psi.n_trunc();
    let runs = epsilons
        .par_iter()
        .map(|&eps| {
            let horizon = tau / eps;
            let cfg = SolverConfig::new(n, horizon / 200.0, Formulation::Diffusivity(eps), horizon)
                .with_record_stride(200);
            let mut st = Stepper::new(flow, &cfg)?;
            let (_, f) = st.run(&psi, |_, _| false)?;
            Ok((horizon, f.var_sq().sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    let final_norms: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(WitnessReport {
        tau,
        b1,
        h1_psi: h1,
        eigen_residual: res,
        epsilons: epsilons.to_vec(),
        horizons: runs.iter().map(|r| r.0).collect(),
        pass: final_norms.iter().all(|v| *v >= 0.25 * 0.95),
        final_norms,
    })
}
