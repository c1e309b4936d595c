//! Porous medium equation with advection,
//! `dphi/dt + c u(x, c t).grad phi = kappa lap(phi^q)`, for data bounded away
//! from zero: `h <= phi <= 1/h`.
//!
//! Same splitting as the linear solver, with the nonlinear diffusion advanced
//! by RK4 on `kappa lap P_n(phi^q)` under the explicit limit
//! `0.25 / (kappa 4 pi^2 n^2 q h^{1-q})`.

use crate::diagnostics::{crossing_time, verify_eigenfunction, Relaxation};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::solver::{fmt_f64, residual_series, solver_resolution, Advector, Formulation, Substepping};
use crate::spectral::{GridField, SpectralField, FOUR_PI_SQ};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorousConfig {
    pub q: f64,
    pub h: f64,
    pub formulation: Formulation,
    pub dt: f64,
    pub n_trunc: usize,
    pub t_end: f64,
    pub record_stride: usize,
}

impl PorousConfig {
    pub fn new(q: f64, h: f64, formulation: Formulation, dt: f64, n_trunc: usize, t_end: f64) -> Self {
        Self {
            q,
            h,
            formulation,
            dt,
            n_trunc,
            t_end,
            record_stride: 1,
        }
    }

    pub fn with_record_stride(mut self, s: usize) -> Self {
        self.record_stride = s.max(1);
        self
    }

    pub fn diffusivity(&self) -> f64 {
        self.formulation.diffusivity()
    }

    /// Explicit limit for one nonlinear-diffusion substep.
    pub fn diffusion_limit(&self) -> f64 {
        let k = self.diffusivity();
        if k == 0.0 {
            return f64::INFINITY;
        }
        let n = self.n_trunc as f64;
        0.25 / (k * FOUR_PI_SQ * n * n * self.q * self.h.powf(1.0 - self.q))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.q > 1.0 && self.q.is_finite()) {
            return bad(format!("q = {} must exceed 1", self.q));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return bad(format!("h = {} not in (0, 1)", self.h));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive".into());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be nonnegative".into());
        }
        if self.n_trunc == 0 {
            return bad("n_trunc must be positive".into());
        }
        let ok = match self.formulation {
            Formulation::Amplitude(a) => a >= 0.0 && a.is_finite(),
            Formulation::Diffusivity(e) => e >= 0.0 && e.is_finite(),
        };
        if !ok {
            return bad("amplitude/diffusivity must be nonnegative".into());
        }
        Ok(())
    }
}

/// Grid values at the dealiased resolution together with their spectral
/// truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct PorousState {
    pub field: SpectralField,
    pub time: f64,
}

impl PorousState {
    pub fn new(field: SpectralField) -> Self {
        Self { field, time: 0.0 }
    }

    pub fn from_grid(g: &GridField, n_trunc: usize) -> Result<Self> {
        Ok(Self::new(SpectralField::to_spectral(g, n_trunc, false)?))
    }

    pub fn constant(n_trunc: usize, c: f64) -> Self {
        let mut f = SpectralField::zeros(n_trunc);
        f.set_mean(c);
        Self::new(f)
    }

    pub fn grid(&self) -> GridField {
        let r = solver_resolution(self.field.n_trunc(), true);
        self.field.to_grid(r).expect("dealiased grid")
    }

    pub fn range(&self) -> (f64, f64) {
        range_of(&self.grid())
    }

    pub fn mean(&self) -> f64 {
        self.field.mean()
    }

    pub fn var_l2_sq(&self) -> f64 {
        self.field.var_sq()
    }
}

fn range_of(g: &GridField) -> (f64, f64) {
    g.values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PorousTrajectory {
    pub times: Vec<f64>,
    pub var_l2_sq: Vec<f64>,
    pub l2_sq: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// `2 kappa q int phi^{q-1} |grad phi|^2` per record.
    pub dissipation: Vec<f64>,
    /// Its time integral since the previous record (trapezoid on every substep).
    pub dissipated: Vec<f64>,
    pub residuals: Vec<Option<f64>>,
    pub mean_value: f64,
    pub mean_drift: f64,
    pub q: f64,
    pub diffusivity: f64,
}

impl PorousTrajectory {
    /// Running min nondecreasing and running max nonincreasing within `tol`.
    pub fn max_principle_holds(&self, tol: f64) -> bool {
        self.min.windows(2).all(|w| w[1] >= w[0] - tol) && self.max.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn var_monotone(&self) -> bool {
        self.var_l2_sq.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300)
    }

    /// CSV with header `t,var_l2_sq,min,max,dissipation_residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,var_l2_sq,min,max,dissipation_residual\n");
        for i in 0..self.times.len() {
            let r = self.residuals[i].map(fmt_f64).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(self.times[i]),
                fmt_f64(self.var_l2_sq[i]),
                fmt_f64(self.min[i]),
                fmt_f64(self.max[i]),
                r
            ));
        }
        s
    }
}

struct PorousStepper<'a> {
    adv: Advector<'a>,
    cfg: PorousConfig,
    kappa: f64,
    bounds: (f64, f64),
    buf: Vec<C64>,
    dissipated: f64,
    /// Dissipation rate at the last sample.
    rate: f64,
}

impl<'a> PorousStepper<'a> {
    fn new(flow: &'a FlowSpec, cfg: &PorousConfig) -> Result<Self> {
        cfg.validate()?;
        let adv = Advector::new(
            flow,
            cfg.n_trunc,
            true,
            cfg.formulation.speed(),
            1.0,
            Substepping::Auto,
        );
        let r = adv.r;
        Ok(Self {
            adv,
            kappa: cfg.diffusivity(),
            bounds: (cfg.h * (1.0 - 1e-4), (1.0 + 1e-4) / cfg.h),
            buf: vec![C64::new(0.0, 0.0); r * r],
            dissipated: 0.0,
            rate: 0.0,
            cfg: cfg.clone(),
        })
    }

    /// Grid values of the truncated field (in `buf`).
    fn to_grid(&mut self, c: &[C64]) {
        let buf = &mut self.buf;
        buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for i in 0..c.len() {
            buf[self.adv.pos[i]] = c[i];
        }
        self.adv.fft.inverse_band(buf, self.adv.n);
    }

    /// `kappa lap P_n(phi^q)`.
    fn rhs(&mut self, c: &[C64], out: &mut [C64]) {
        self.to_grid(c);
        let q = self.cfg.q;
        for z in self.buf.iter_mut() {
            *z = C64::new(z.re.max(0.0).powf(q), 0.0);
        }
        self.adv.fft.forward_band(&mut self.buf, self.adv.n);
        for i in 0..c.len() {
            out[i] = -self.kappa * self.adv.lam[i] * self.buf[self.adv.pos[i]];
        }
    }

    /// RK4 subcycles over `tau`; with `sample` the dissipation integral is
    /// accumulated after every subcycle.
    fn diffuse(&mut self, c: &mut [C64], tau: f64, sample: bool) {
        if self.kappa == 0.0 || tau <= 0.0 {
            return;
        }
        let m = ((tau / self.cfg.diffusion_limit()) - 1e-9).ceil().max(1.0) as usize;
        let h = tau / m as f64;
        let len = c.len();
        let z = C64::new(0.0, 0.0);
        let (mut k1, mut k2, mut k3, mut k4, mut y) = (vec![z; len], vec![z; len], vec![z; len], vec![z; len], vec![z; len]);
        for _ in 0..m {
            self.rhs(c, &mut k1);
            for i in 0..len {
                y[i] = c[i] + 0.5 * h * k1[i];
            }
            self.rhs(&y, &mut k2);
            for i in 0..len {
                y[i] = c[i] + 0.5 * h * k2[i];
            }
            self.rhs(&y, &mut k3);
            for i in 0..len {
                y[i] = c[i] + h * k3[i];
            }
            self.rhs(&y, &mut k4);
            for i in 0..len {
                c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if sample {
                self.sample(c, h);
            }
        }
    }

    fn sample(&mut self, c: &[C64], h: f64) {
        let next = self.rate_of(c);
        self.dissipated += 0.5 * (self.rate + next) * h;
        self.rate = next;
    }

    fn rate_of(&mut self, c: &[C64]) -> f64 {
        let f = SpectralField::from_coeffs(self.adv.n, c.to_vec());
        self.diagnostics(&f).2
    }

    fn step(&mut self, f: &mut SpectralField, t: f64) -> Result<()> {
        let dt = self.cfg.dt;
        let mean = f.mean();
        let plan = self.adv.plan(t, dt)?;
        let c = f.coeffs_mut();
        if plan.is_empty() {
            self.diffuse(c, dt, true);
        } else {
            let speed = self.adv.speed;
            for run in plan {
                let tau = run.h / speed;
                for j in 0..run.count {
                    self.diffuse(c, 0.5 * tau, false);
                    self.adv.rk4(c, run.start + j as f64 * run.h, run.h, run.piece);
                    self.diffuse(c, 0.5 * tau, false);
                    self.sample(c, tau);
                }
            }
        }
        let mid = c.len() / 2;
        c[mid] = C64::new(mean, 0.0);
        f.symmetrize();
        if !f.is_finite() {
            return Err(Error::NonFinite(t + dt));
        }
        Ok(())
    }

    /// Range on the dealiased grid and `2 kappa q int phi^{q-1} |grad phi|^2`.
    fn diagnostics(&mut self, f: &SpectralField) -> (f64, f64, f64) {
        let c = f.coeffs();
        self.to_grid(c);
        let vals: Vec<f64> = self.buf.iter().map(|z| z.re).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        // grad phi as d1 + i d2 in one transform
        let buf = &mut self.buf;
        buf.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for i in 0..c.len() {
            buf[self.adv.pos[i]] = self.adv.grad[i] * c[i];
        }
        self.adv.fft.inverse_band(buf, self.adv.n);
        let q = self.cfg.q;
        let mut acc = 0.0;
        for (v, g) in vals.iter().zip(buf.iter()) {
            acc += v.max(0.0).powf(q - 1.0) * (g.re * g.re + g.im * g.im);
        }
        let r2 = (self.adv.r * self.adv.r) as f64;
        (lo, hi, 2.0 * self.kappa * q * acc / r2)
    }

    fn run(
        &mut self,
        phi0: &PorousState,
        mut stop: impl FnMut(f64, &SpectralField) -> bool,
    ) -> Result<(PorousTrajectory, PorousState)> {
        let cfg = self.cfg.clone();
        let steps = ((cfg.t_end / cfg.dt) - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            self.cfg.dt = cfg.t_end / steps as f64;
        }
        let dt = self.cfg.dt;
        let mut f = phi0.field.retruncate(cfg.n_trunc);
        let mean0 = f.mean();
        let (lo, hi, d) = self.diagnostics(&f);
        self.check_bounds(0.0, lo, hi)?;
        self.dissipated = 0.0;
        self.rate = d;
        let mut tr = PorousTrajectory {
            times: vec![phi0.time],
            var_l2_sq: vec![f.var_sq()],
            l2_sq: vec![f.l2_sq()],
            min: vec![lo],
            max: vec![hi],
            dissipation: vec![d],
            dissipated: vec![0.0],
            residuals: Vec::new(),
            mean_value: mean0,
            mean_drift: 0.0,
            q: cfg.q,
            diffusivity: self.kappa,
        };
        let mut stopped = stop(0.0, &f);
        let mut j = 0;
        while !stopped && j < steps {
            let t = j as f64 * dt;
            self.step(&mut f, t)?;
            j += 1;
            let tn = if j == steps { cfg.t_end } else { j as f64 * dt };
            let record = j % cfg.record_stride == 0 || j == steps;
            let (lo, hi, d) = self.diagnostics(&f);
            self.check_bounds(tn, lo, hi)?;
            if record {
                tr.times.push(phi0.time + tn);
                tr.var_l2_sq.push(f.var_sq());
                tr.l2_sq.push(f.l2_sq());
                tr.min.push(lo);
                tr.max.push(hi);
                tr.dissipation.push(d);
                tr.dissipated.push(self.dissipated);
                self.dissipated = 0.0;
                tr.mean_drift = tr.mean_drift.max((f.mean() - mean0).abs());
                stopped = stop(tn, &f);
            }
        }
        tr.residuals = residual_series(&tr.var_l2_sq, &tr.dissipated);
        let time = phi0.time + tr.times.last().copied().unwrap_or(0.0) - tr.times[0];
        Ok((tr, PorousState { field: f, time }))
    }

    fn check_bounds(&self, t: f64, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = self.bounds;
        if lo < a || hi > b || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::BoundsViolation {
                t,
                min: lo,
                max: hi,
                lo: a,
                hi: b,
            });
        }
        Ok(())
    }
}

/// Evolve to `cfg.t_end`. Leaving `[h(1 - 1e-4), (1 + 1e-4)/h]` is an error.
pub fn pm_evolve(phi0: &PorousState, flow: &FlowSpec, cfg: &PorousConfig) -> Result<(PorousTrajectory, PorousState)> {
    PorousStepper::new(flow, cfg)?.run(phi0, |_, _| false)
}

/// Worst interior residual of `d/dt ||phi||^2 = -2 kappa q int phi^{q-1} |grad phi|^2`.
pub fn pm_dissipation_residual(tr: &PorousTrajectory, _cfg: &PorousConfig) -> f64 {
    tr.residuals.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
}

/// `2 kappa q int int phi^{q-1} |grad phi|^2 / ||phi0 - mean||^2`.
pub fn pm_dissipation_budget(tr: &PorousTrajectory) -> f64 {
    tr.dissipated.iter().sum::<f64>() / tr.var_l2_sq[0]
}

/// First crossing of `||phi - mean|| < delta`, log-linear between records.
pub fn pm_relaxation_time(flow: &FlowSpec, cfg: &PorousConfig, phi0: &PorousState, delta: f64) -> Result<Relaxation> {
    let d2 = delta * delta;
    let (tr, _) = PorousStepper::new(flow, cfg)?.run(phi0, |_, f| f.var_sq() < d2)?;
    Ok(match crossing_time(&tr.times, &tr.var_l2_sq, delta) {
        Some(t) => Relaxation::Time(t.min(cfg.t_end)),
        None => Relaxation::Saturated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PorousWitnessReport {
    pub m: f64,
    pub sup_psi: f64,
    pub h: f64,
    pub tau: f64,
    pub b1: f64,
    pub h1_psi: f64,
    pub eigen_residual: f64,
    pub epsilons: Vec<f64>,
    pub horizons: Vec<f64>,
    pub final_norms: Vec<f64>,
    pub pass: bool,
}

/// Data `phi0 = m (psi + 2 sup|psi|)` with `||phi0 - mean|| = 1`, `h` from its
/// range, `tau = h^{q-1} / (2 q m^2 B_1^2 ||psi||_1^2)`; slow-clock runs to
/// `tau / eps`. Pass when every final `||phi - mean|| >= 0.475`.
pub fn pm_witness(flow: &FlowSpec, psi: &SpectralField, cfg: &PorousConfig, epsilons: &[f64]) -> Result<PorousWitnessReport> {
    let psi = psi.mean_removed();
    let res = verify_eigenfunction(flow, &psi, 1e-3)?;
    let n = cfg.n_trunc;
    let psi = psi.retruncate(n);
    let r = solver_resolution(n, true);
    let sup = psi.to_grid(r)?.max_abs();
    let m = 1.0 / psi.l2_sq().sqrt();
    let mut phi0 = psi.scaled(m);
    phi0.set_mean(2.0 * m * sup);
    let state = PorousState::new(phi0);
    let (lo, hi) = state.range();
    let h = lo.min(1.0 / hi).min(0.999);
    let b1 = flow.flow_bounds(64).b1();
    let h1 = psi.sobolev_norm_sq(1);
    let q = cfg.q;
    let tau = h.powf(q - 1.0) / (2.0 * q * m * m * b1 * b1 * h1);
    let mut horizons = Vec::new();
    let mut final_norms = Vec::new();
    for &eps in epsilons {
        let horizon = tau / eps;
        let mut c = cfg.clone();
        c.h = h;
        c.formulation = Formulation::Diffusivity(eps);
        c.t_end = horizon;
        c.dt = horizon / 100.0;
        c.record_stride = 100;
        let (_, fin) = pm_evolve(&state, flow, &c)?;
        horizons.push(horizon);
        final_norms.push(fin.var_l2_sq().sqrt());
    }
    Ok(PorousWitnessReport {
        m,
        sup_psi: sup,
        h,
        tau,
        b1,
        h1_psi: h1,
        eigen_residual: res,
        epsilons: epsilons.to_vec(),
        horizons,
        pass: final_norms.iter().all(|v| *v >= 0.475),
        final_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{Axis, Profile};
    use crate::spectral::WaveIndex;

    #[test]
    fn constant_is_fixed_point() {
        let s = PorousState::constant(8, 1.3);
        let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(10.0), 1e-3, 8, 0.01);
        let (tr, fin) = pm_evolve(&s, &FlowSpec::cellular(1.0), &cfg).unwrap();
        assert!(fin.field.sub(&s.field).unwrap().l2_sq() < 1e-28);
        assert!(pm_dissipation_residual(&tr, &cfg) < 1e-12);
        let t = pm_relaxation_time(&FlowSpec::zero(), &cfg, &s, 0.1).unwrap();
        assert_eq!(t, Relaxation::Time(0.0));
    }

    #[test]
    fn out_of_range_data_rejected() {
        let mut f = SpectralField::sin_mode(8, WaveIndex::new(1, 0), 0.9);
        f.set_mean(1.0);
        let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(0.0), 1e-4, 8, 1e-3);
        let r = pm_evolve(&PorousState::new(f), &FlowSpec::zero(), &cfg);
        assert!(matches!(r, Err(Error::BoundsViolation { .. })));
    }

    #[test]
    fn witness_rejects_constant() {
        let mut c = SpectralField::zeros(8);
        c.set_mean(1.0);
        let cfg = PorousConfig::new(2.0, 0.5, Formulation::Diffusivity(0.1), 1e-3, 8, 1.0);
        let flow = FlowSpec::shear(Profile::constant(2.0), Axis::X2);
        assert!(matches!(pm_witness(&flow, &c, &cfg, &[0.1]), Err(Error::NotAnEigenfunction(_))));
    }
}
