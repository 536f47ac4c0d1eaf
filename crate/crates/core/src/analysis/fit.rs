//! Least-squares fits of the squeezing model to measured variances.
//!
//! Residuals are taken in dB by default so that squeezed (−8 dB) and
//! anti-squeezed (+19 dB) points carry comparable weight.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::optimize::{self, Bounds, NelderMeadOptions};
use crate::squeezing::{self, Quadrature, SqueezingParams};
use crate::{Error, Result};

/// Largest phase error the fit will return (the range is half-open at π/4).
const THETA_MAX: f64 = FRAC_PI_4 * (1.0 - 1e-12);
const THETA_TOLERANCE: f64 = 1e-10;
const LOSS_MAX: f64 = 0.05;

/// One measured quadrature variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub pump_power_w: f64,
    pub frequency_hz: f64,
    pub quadrature: Quadrature,
    /// Variance in shot-noise units.
    pub variance: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    #[default]
    Db,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    ThetaTilde,
    PThreshold,
    LossL,
}

impl std::str::FromStr for FreeParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theta" | "theta_tilde" => Ok(FreeParam::ThetaTilde),
            "p_th" | "p_threshold" | "threshold" => Ok(FreeParam::PThreshold),
            "loss" | "loss_l" | "l" => Ok(FreeParam::LossL),
            other => Err(Error::invalid(
                "free parameter",
                format!("unknown `{other}`"),
            )),
        }
    }
}

/// A fitted value with its asymptotic standard error (absent when the
/// problem has no spare degrees of freedom or the Jacobian is singular).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_tilde_rad: Estimate,
    pub theta_tilde_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_threshold_w: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_l: Option<Estimate>,
    /// Full parameter set at the optimum (fixed values plus fitted ones).
    pub params: SqueezingParams,
    pub free: Vec<FreeParam>,
    pub residual_mode: ResidualMode,
    /// RMS residual, in dB for [`ResidualMode::Db`].
    pub residual_rms: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn model_value(obs: &Observation, params: &SqueezingParams) -> Option<f64> {
    let x = squeezing::pump_to_x(obs.pump_power_w, params.p_threshold_w).ok()?;
    Some(squeezing::variance_with_phase_noise(
        obs.quadrature,
        x,
        obs.frequency_hz,
        params,
    ))
}

fn residual(obs: &Observation, params: &SqueezingParams, mode: ResidualMode) -> f64 {
    match model_value(obs, params) {
        Some(m) if m > 0.0 => match mode {
            ResidualMode::Db => 10.0 * (m / obs.variance).log10(),
            ResidualMode::Linear => m - obs.variance,
        },
        _ => 1e6,
    }
}

fn sum_squares(data: &[Observation], params: &SqueezingParams, mode: ResidualMode) -> f64 {
    data.iter().map(|o| residual(o, params, mode).powi(2)).sum()
}

/// Least-squares objective used by the fits, exposed for diagnostics.
pub fn objective(data: &[Observation], params: &SqueezingParams, mode: ResidualMode) -> f64 {
    sum_squares(data, params, mode)
}

fn check_data(data: &[Observation]) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::invalid("fit data", "need at least 2 points"));
    }
    for (i, o) in data.iter().enumerate() {
        if !(o.variance > 0.0 && o.variance.is_finite()) {
            return Err(Error::invalid(
                "fit data",
                format!("point {i}: variance must be positive"),
            ));
        }
        if !(o.pump_power_w >= 0.0 && o.frequency_hz >= 0.0) {
            return Err(Error::invalid(
                "fit data",
                format!("point {i}: negative pump power or frequency"),
            ));
        }
    }
    if data.iter().all(|o| o.pump_power_w == 0.0) {
        return Err(Error::FlatObjective);
    }
    Ok(())
}

fn set(params: &mut SqueezingParams, which: FreeParam, value: f64) {
    match which {
        FreeParam::ThetaTilde => params.theta_tilde_rad = value,
        FreeParam::PThreshold => params.p_threshold_w = value,
        FreeParam::LossL => params.loss_l = value,
    }
}

fn get(params: &SqueezingParams, which: FreeParam) -> f64 {
    match which {
        FreeParam::ThetaTilde => params.theta_tilde_rad,
        FreeParam::PThreshold => params.p_threshold_w,
        FreeParam::LossL => params.loss_l,
    }
}

/// Asymptotic standard errors from `s² (JᵀJ)⁻¹`, with `J` the
/// finite-difference Jacobian of the residuals.
fn standard_errors(
    data: &[Observation],
    params: &SqueezingParams,
    free: &[FreeParam],
    mode: ResidualMode,
) -> Vec<Option<f64>> {
    let n = data.len();
    let p = free.len();
    if n <= p {
        return vec![None; p];
    }
    let mut jac = DMatrix::<f64>::zeros(n, p);
    for (j, &which) in free.iter().enumerate() {
        let v = get(params, which);
        let h = match which {
            FreeParam::ThetaTilde => 1e-7,
            FreeParam::PThreshold => 1e-7 * v,
            FreeParam::LossL => 1e-7,
        };
        let (mut lo, mut hi) = (params.clone(), params.clone());
        let lo_v = if which == FreeParam::ThetaTilde || which == FreeParam::LossL {
            (v - h).max(0.0)
        } else {
            v - h
        };
        set(&mut lo, which, lo_v);
        set(&mut hi, which, v + h);
        for (i, o) in data.iter().enumerate() {
            jac[(i, j)] = (residual(o, &hi, mode) - residual(o, &lo, mode)) / (v + h - lo_v);
        }
    }
    let s2 = sum_squares(data, params, mode) / (n - p) as f64;
    let jtj = jac.transpose() * &jac;
    match jtj.try_inverse() {
        Some(inv) => (0..p)
            .map(|j| {
                let var = s2 * inv[(j, j)];
                (var >= 0.0 && var.is_finite()).then(|| var.sqrt())
            })
            .collect(),
        None => vec![None; p],
    }
}

fn finish(
    data: &[Observation],
    params: SqueezingParams,
    free: Vec<FreeParam>,
    mode: ResidualMode,
    iterations: usize,
    converged: bool,
) -> FitResult {
    let errs = standard_errors(data, &params, &free, mode);
    let estimate = |which: FreeParam| {
        free.iter().position(|&f| f == which).map(|j| Estimate {
            value: get(&params, which),
            stderr: errs[j],
        })
    };
    let theta = estimate(FreeParam::ThetaTilde).unwrap_or(Estimate {
        value: params.theta_tilde_rad,
        stderr: None,
    });
    let rss = sum_squares(data, &params, mode);
    FitResult {
        theta_tilde_rad: theta,
        theta_tilde_deg: theta.value.to_degrees(),
        p_threshold_w: estimate(FreeParam::PThreshold),
        loss_l: estimate(FreeParam::LossL),
        residual_rms: (rss / data.len() as f64).sqrt(),
        n_points: data.len(),
        params,
        free,
        residual_mode: mode,
        iterations,
        converged,
    }
}

/// Fits the phase-lock error θ̃ with every other parameter held at `fixed`.
pub fn fit_theta(data: &[Observation], fixed: &SqueezingParams) -> Result<FitResult> {
    fit_theta_with(data, fixed, ResidualMode::Db)
}

pub fn fit_theta_with(
    data: &[Observation],
    fixed: &SqueezingParams,
    mode: ResidualMode,
) -> Result<FitResult> {
    check_data(data)?;
    let mut params = fixed.clone();
    params.theta_tilde_rad = 0.0;
    params.validate()?;
    if let Some(o) = data.iter().find(|o| o.pump_power_w >= fixed.p_threshold_w) {
        return Err(Error::AboveThreshold {
            power_w: o.pump_power_w,
            threshold_w: fixed.p_threshold_w,
        });
    }

    let mut cost = |theta: f64| {
        let mut p = params.clone();
        p.theta_tilde_rad = theta;
        sum_squares(data, &p, mode)
    };

    // Coarse scan to bracket the global minimum, then golden section inside
    // the bracket.
    const GRID: usize = 64;
    let grid: Vec<f64> = (0..=GRID)
        .map(|i| THETA_MAX * i as f64 / GRID as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| cost(t)).collect();
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 1e-15 * values[0].abs().max(1e-300) {
        return Err(Error::FlatObjective);
    }
    let best = (0..=GRID)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID)];
    let m = optimize::golden_section(&mut cost, lo, hi, THETA_TOLERANCE);

    params.theta_tilde_rad = m.x;
    Ok(finish(
        data,
        params,
        vec![FreeParam::ThetaTilde],
        mode,
        GRID + 1 + m.evaluations,
        true,
    ))
}

/// Maps the unit cube onto the bounded physical parameters.
struct Coordinates {
    free: Vec<FreeParam>,
    p_min: f64,
    p_max: f64,
}

impl Coordinates {
    fn to_physical(&self, u: &[f64], base: &SqueezingParams) -> SqueezingParams {
        let mut p = base.clone();
        for (&which, &v) in self.free.iter().zip(u) {
            let value = match which {
                // The model is even in θ̃; spanning both signs keeps θ̃ = 0
                // away from the box edge.
                FreeParam::ThetaTilde => (2.0 * v - 1.0) * THETA_MAX,
                FreeParam::PThreshold => self.p_min * (self.p_max / self.p_min).powf(v),
                FreeParam::LossL => v * LOSS_MAX,
            };
            set(&mut p, which, value);
        }
        p
    }

    fn to_unit(&self, params: &SqueezingParams) -> Vec<f64> {
        self.free
            .iter()
            .map(|&which| {
                let v = match which {
                    FreeParam::ThetaTilde => 0.5 * (params.theta_tilde_rad / THETA_MAX + 1.0),
                    FreeParam::PThreshold => {
                        (params.p_threshold_w / self.p_min).ln() / (self.p_max / self.p_min).ln()
                    }
                    FreeParam::LossL => params.loss_l / LOSS_MAX,
                };
                v.clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Joint least-squares fit of any subset of θ̃, threshold power and
/// intra-cavity loss.
///
/// Bounds: θ̃ ∈ [0, π/4), L ∈ [0, 0.05], and P_th above the largest pump
/// power in the data (up to 100× that power). With only θ̃ free this is
/// exactly [`fit_theta`].
pub fn fit_model(
    data: &[Observation],
    fixed: &SqueezingParams,
    free: &[FreeParam],
    mode: ResidualMode,
) -> Result<FitResult> {
    let mut free: Vec<FreeParam> = free.to_vec();
    free.sort();
    free.dedup();
    if free.is_empty() {
        return Err(Error::invalid(
            "free parameters",
            "at least one parameter must be free",
        ));
    }
    if free.len() >= data.len() {
        return Err(Error::Underdetermined {
            free: free.len(),
            points: data.len(),
        });
    }
    if free == [FreeParam::ThetaTilde] {
        return fit_theta_with(data, fixed, mode);
    }
    check_data(data)?;

    let max_power = data.iter().map(|o| o.pump_power_w).fold(0.0, f64::max);
    let coords = Coordinates {
        p_min: max_power * (1.0 + 1e-6),
        p_max: max_power * 100.0,
        free: free.clone(),
    };
    let mut base = fixed.clone();
    if !free.contains(&FreeParam::PThreshold) {
        if let Some(o) = data.iter().find(|o| o.pump_power_w >= fixed.p_threshold_w) {
            return Err(Error::AboveThreshold {
                power_w: o.pump_power_w,
                threshold_w: fixed.p_threshold_w,
            });
        }
    } else if !(base.p_threshold_w > coords.p_min) {
        base.p_threshold_w = 2.0 * max_power;
    }
    base.theta_tilde_rad = base.theta_tilde_rad.clamp(0.0, THETA_MAX);
    base.loss_l = base.loss_l.clamp(0.0, LOSS_MAX);
    base.validate()?;

    let cost = |u: &[f64]| sum_squares(data, &coords.to_physical(u, &base), mode);

    // Seed from the best point of a coarse lattice so that the simplex
    // starts in the right basin.
    let dim = free.len();
    // θ̃ gets a finer lattice: the landscape has shallow side valleys along it.
    let counts: Vec<usize> = free
        .iter()
        .map(|f| if *f == FreeParam::ThetaTilde { 41 } else { 17 })
        .collect();
    let mut start = coords.to_unit(&base);
    let mut start_value = cost(&start);
    let mut idx = vec![0usize; dim];
    loop {
        let u: Vec<f64> = idx
            .iter()
            .zip(&counts)
            .map(|(&i, &n)| i as f64 / (n - 1) as f64)
            .collect();
        let v = cost(&u);
        if v < start_value {
            start = u;
            start_value = v;
        }
        let mut k = 0;
        while k < dim {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dim {
            break;
        }
    }

    let mut options = NelderMeadOptions::new(dim);
    options.initial_step = counts.iter().map(|&n| 0.5 / (n - 1) as f64).collect();
    options.x_tolerance = 1e-12;
    let result = optimize::nelder_mead(cost, &start, &Bounds::unit(dim), &options);

    let mut params = coords.to_physical(&result.x, &base);
    params.theta_tilde_rad = params.theta_tilde_rad.abs();
    let fit = finish(
        data,
        params,
        free,
        mode,
        result.iterations,
        result.converged,
    );
    if !result.converged {
        return Err(Error::NotConverged {
            iterations: result.iterations,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

/// Noiseless observations generated from `params`, one per (power, quadrature).
pub fn synthesize(
    params: &SqueezingParams,
    powers_w: &[f64],
    frequency_hz: f64,
) -> Result<Vec<Observation>> {
    let mut out = Vec::with_capacity(2 * powers_w.len());
    for &p in powers_w {
        let x = squeezing::pump_to_x(p, params.p_threshold_w)?;
        for quadrature in [Quadrature::Squeezed, Quadrature::AntiSqueezed] {
            out.push(Observation {
                pump_power_w: p,
                frequency_hz,
                quadrature,
                variance: squeezing::variance_with_phase_noise(quadrature, x, frequency_hz, params),
            });
        }
    }
    Ok(out)
}
