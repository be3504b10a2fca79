//! Hamiltonian Monte Carlo with a fixed number of leapfrog steps, dual
//! averaging of the step size and windowed diagonal metric adaptation during
//! warmup. Chains run in parallel, each on its own derived stream.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SampleBatch;
use crate::data::Dataset;
use crate::error::{Error, Result, SamplerDiagnostics};
use crate::model::{LogDensity, Model};
use crate::rng::RngSeed;
use crate::weights::WeightVector;

const DIVERGENCE_THRESHOLD: f64 = 1000.0;
const DA_GAMMA: f64 = 0.05;
const DA_T0: f64 = 10.0;
const DA_KAPPA: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmcConfig {
    pub warmup_steps: usize,
    /// total draws across chains
    pub samples: usize,
    pub leapfrog_steps: usize,
    pub initial_step_size: f64,
    pub target_accept: f64,
    pub seed: RngSeed,
    pub chains: usize,
    /// warmup length after a warm start, as a fraction of `warmup_steps`
    pub warm_start_warmup_fraction: f64,
    pub max_divergence_fraction: f64,
    /// per-iteration step size is scaled by a uniform factor in `1 ± jitter`
    pub step_jitter: f64,
    /// half-width of the uniform perturbation of the initial point
    pub init_jitter: f64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            warmup_steps: 1000,
            samples: 1000,
            leapfrog_steps: 32,
            initial_step_size: 0.1,
            target_accept: 0.8,
            seed: RngSeed::default(),
            chains: 4,
            warm_start_warmup_fraction: 0.25,
            max_divergence_fraction: 0.05,
            step_jitter: 0.1,
            init_jitter: 0.1,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("HMC config: {m}")));
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if self.leapfrog_steps == 0 {
            return bad("leapfrog_steps must be at least 1");
        }
        if self.chains == 0 {
            return bad("chains must be at least 1");
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return bad("initial_step_size must be positive");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.warm_start_warmup_fraction) {
            return bad("warm_start_warmup_fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.step_jitter) {
            return bad("step_jitter must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Final per-chain positions, step sizes and metrics, reused to shorten the
/// next run's warmup.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    chains: Vec<ChainState>,
}

impl WarmStart {
    pub fn dim(&self) -> usize {
        self.chains.first().map_or(0, |c| c.position.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ChainState {
    position: Vec<f64>,
    step_size: f64,
    inv_mass: Vec<f64>,
}

/// Draws from the weighted posterior `π_w(θ | X)`.
pub fn sample_posterior(
    model: &dyn Model,
    data: &Dataset,
    w: &WeightVector,
    cfg: &HmcConfig,
    warm_start: Option<&WarmStart>,
) -> Result<SampleBatch> {
    model.check_data(data)?;
    w.check_len(data.n())?;
    let density = model.weighted_density(data, w.as_slice());
    let init = model.initial_point(data);
    sample_density(density.as_ref(), &init, cfg, warm_start)
}

/// Draws from an arbitrary differentiable log-density.
pub fn sample_density(
    density: &dyn LogDensity,
    init: &[f64],
    cfg: &HmcConfig,
    warm_start: Option<&WarmStart>,
) -> Result<SampleBatch> {
    cfg.validate()?;
    let d = density.dim();
    if init.len() != d {
        return Err(Error::invalid(format!(
            "initial point has dimension {}, density {d}",
            init.len()
        )));
    }
    let warm = warm_start.filter(|ws| ws.dim() == d && ws.chains.len() == cfg.chains);
    let per_chain = cfg.samples.div_ceil(cfg.chains);
    let outputs: Vec<Result<ChainOutput>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let seed = cfg.seed.derive(c as u64);
            run_chain(
                density,
                init,
                cfg,
                warm.map(|w| &w.chains[c]),
                per_chain,
                seed,
            )
        })
        .collect();
    let mut outputs = outputs.into_iter().collect::<Result<Vec<_>>>()?;

    let total = cfg.samples;
    let mut thetas = DMatrix::zeros(total, d);
    let mut row = 0;
    'fill: for draw in 0..per_chain {
        for out in &outputs {
            if row == total {
                break 'fill;
            }
            for j in 0..d {
                thetas[(row, j)] = out.draws[draw * d + j];
            }
            row += 1;
        }
    }
    let draws: usize = outputs.iter().map(|o| o.accept.len()).sum();
    let accept_rate = outputs.iter().flat_map(|o| o.accept.iter()).sum::<f64>() / draws as f64;
    let divergences: usize = outputs.iter().map(|o| o.divergences).sum();
    let step_size = outputs.iter().map(|o| o.state.step_size).sum::<f64>() / outputs.len() as f64;
    let diagnostics = SamplerDiagnostics {
        accept_rate,
        divergences,
        draws,
        step_size,
    };
    if divergences as f64 > cfg.max_divergence_fraction * draws as f64 {
        return Err(Error::SamplerHealth {
            message: format!("{divergences} of {draws} post-warmup transitions diverged"),
            diagnostics,
        });
    }
    Ok(SampleBatch {
        thetas,
        accept_rate,
        diagnostics: Some(diagnostics),
        warm_start_state: Some(WarmStart {
            chains: outputs.drain(..).map(|o| o.state).collect(),
        }),
    })
}

struct ChainOutput {
    /// row-major draws
    draws: Vec<f64>,
    accept: Vec<f64>,
    divergences: usize,
    state: ChainState,
}

struct Point {
    q: Vec<f64>,
    logp: f64,
    grad: Vec<f64>,
}

impl Point {
    fn at(density: &dyn LogDensity, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let logp = density.logp_grad(&q, &mut grad);
        Self { q, logp, grad }
    }

    fn is_valid(&self) -> bool {
        self.logp.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }
}

struct DualAveraging {
    mu: f64,
    h_bar: f64,
    log_eps_bar: f64,
    t: f64,
    target: f64,
}

impl DualAveraging {
    fn new(step: f64, target: f64) -> Self {
        Self {
            mu: (10.0 * step).ln(),
            h_bar: 0.0,
            log_eps_bar: 0.0,
            t: 0.0,
            target,
        }
    }

    fn update(&mut self, accept: f64) -> f64 {
        self.t += 1.0;
        let eta = 1.0 / (self.t + DA_T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept);
        let log_eps = self.mu - self.t.sqrt() / DA_GAMMA * self.h_bar;
        let x = self.t.powf(-DA_KAPPA);
        self.log_eps_bar = x * log_eps + (1.0 - x) * self.log_eps_bar;
        log_eps.exp()
    }

    fn final_step(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Slow-window boundaries for metric adaptation: 15% initial buffer, 10%
/// terminal buffer, doubling windows in between.
fn metric_windows(warmup: usize) -> Vec<(usize, usize)> {
    if warmup < 20 {
        return Vec::new();
    }
    let init = (0.15 * warmup as f64) as usize;
    let term = (0.1 * warmup as f64) as usize;
    let end = warmup - term;
    let mut windows = Vec::new();
    let mut start = init;
    let mut size = 25.min(end - init);
    while start < end {
        let mut stop = start + size;
        if stop + 2 * size > end {
            stop = end;
        }
        windows.push((start, stop));
        start = stop;
        size *= 2;
    }
    windows
}

fn run_chain(
    density: &dyn LogDensity,
    init: &[f64],
    cfg: &HmcConfig,
    warm: Option<&ChainState>,
    draws: usize,
    seed: RngSeed,
) -> Result<ChainOutput> {
    let d = init.len();
    let mut rng = seed.rng();
    let mut inv_mass = warm.map_or_else(|| vec![1.0; d], |w| w.inv_mass.clone());
    let mut point = match warm {
        Some(w) => Point::at(density, w.position.clone()),
        None => initial_point(density, init, cfg.init_jitter, &mut rng)?,
    };
    if !point.is_valid() {
        point = initial_point(density, init, cfg.init_jitter, &mut rng)?;
    }
    let mut step = match warm {
        Some(w) => w.step_size,
        None => reasonable_step(density, &point, &inv_mass, cfg.initial_step_size, &mut rng),
    };
    let warmup = match warm {
        Some(_) => (cfg.warm_start_warmup_fraction * cfg.warmup_steps as f64).ceil() as usize,
        None => cfg.warmup_steps,
    };
    let windows = if warm.is_some() {
        Vec::new()
    } else {
        metric_windows(warmup)
    };
    let mut window_idx = 0;
    let mut window_draws: Vec<Vec<f64>> = Vec::new();
    let mut da = DualAveraging::new(step, cfg.target_accept);

    let mut out = ChainOutput {
        draws: Vec::with_capacity(draws * d),
        accept: Vec::with_capacity(draws),
        divergences: 0,
        state: ChainState {
            position: Vec::new(),
            step_size: step,
            inv_mass: Vec::new(),
        },
    };
    for it in 0..warmup + draws {
        let jitter = 1.0 + cfg.step_jitter * (2.0 * rng.random::<f64>() - 1.0);
        let (next, accept, divergent) = transition(
            density,
            &point,
            &inv_mass,
            step * jitter,
            cfg.leapfrog_steps,
            &mut rng,
        );
        point = next;
        if it < warmup {
            step = da.update(accept);
            if let Some(&(start, stop)) = windows.get(window_idx) {
                if it >= start {
                    window_draws.push(point.q.clone());
                }
                if it + 1 == stop {
                    inv_mass = regularized_variance(&window_draws, d);
                    window_draws.clear();
                    window_idx += 1;
                    step = reasonable_step(density, &point, &inv_mass, step, &mut rng);
                    da = DualAveraging::new(step, cfg.target_accept);
                }
            }
            if it + 1 == warmup {
                step = da.final_step();
            }
        } else {
            out.draws.extend_from_slice(&point.q);
            out.accept.push(accept);
            if divergent {
                out.divergences += 1;
            }
        }
    }
    out.state = ChainState {
        position: point.q,
        step_size: step,
        inv_mass,
    };
    Ok(out)
}

fn initial_point(
    density: &dyn LogDensity,
    init: &[f64],
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Point> {
    for attempt in 0..100 {
        let scale = if attempt < 50 { jitter } else { jitter * 0.01 };
        let q: Vec<f64> = init
            .iter()
            .map(|x| x + scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let p = Point::at(density, q);
        if p.is_valid() {
            return Ok(p);
        }
    }
    Err(Error::Domain(
        "could not find an initial point with finite log-density".into(),
    ))
}

fn regularized_variance(draws: &[Vec<f64>], d: usize) -> Vec<f64> {
    let n = draws.len() as f64;
    if draws.len() < 3 {
        return vec![1.0; d];
    }
    (0..d)
        .map(|j| {
            let mean = draws.iter().map(|q| q[j]).sum::<f64>() / n;
            let var = draws.iter().map(|q| (q[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
        })
        .collect()
}

fn kinetic(p: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(inv_mass)
        .map(|(pi, m)| pi * pi * m)
        .sum::<f64>()
}

fn leapfrog(
    density: &dyn LogDensity,
    start: &Point,
    p: &mut [f64],
    inv_mass: &[f64],
    eps: f64,
    steps: usize,
) -> Point {
    let d = p.len();
    let mut q = start.q.clone();
    let mut grad = start.grad.clone();
    let mut logp = start.logp;
    for _ in 0..steps {
        for j in 0..d {
            p[j] += 0.5 * eps * grad[j];
            q[j] += eps * inv_mass[j] * p[j];
        }
        logp = density.logp_grad(&q, &mut grad);
        if !logp.is_finite() {
            break;
        }
        for j in 0..d {
            p[j] += 0.5 * eps * grad[j];
        }
    }
    Point { q, logp, grad }
}

fn draw_momentum(inv_mass: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    inv_mass
        .iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            z / m.sqrt()
        })
        .collect()
}

/// One HMC transition; returns the next point, the acceptance probability and
/// whether the trajectory diverged.
fn transition(
    density: &dyn LogDensity,
    current: &Point,
    inv_mass: &[f64],
    eps: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> (Point, f64, bool) {
    let mut p = draw_momentum(inv_mass, rng);
    let h0 = -current.logp + kinetic(&p, inv_mass);
    let proposal = leapfrog(density, current, &mut p, inv_mass, eps, steps);
    let h1 = -proposal.logp + kinetic(&p, inv_mass);
    let err = h1 - h0;
    if !proposal.is_valid() || !err.is_finite() || err > DIVERGENCE_THRESHOLD {
        return (clone_point(current), 0.0, true);
    }
    let accept = (-err).exp().min(1.0);
    if rng.random::<f64>() < accept {
        (proposal, accept, false)
    } else {
        (clone_point(current), accept, false)
    }
}

fn clone_point(p: &Point) -> Point {
    Point {
        q: p.q.clone(),
        logp: p.logp,
        grad: p.grad.clone(),
    }
}

/// Doubles or halves the step until a single leapfrog step's acceptance
/// probability crosses ½.
fn reasonable_step(
    density: &dyn LogDensity,
    point: &Point,
    inv_mass: &[f64],
    start: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut eps = start;
    let p0 = draw_momentum(inv_mass, rng);
    let h0 = -point.logp + kinetic(&p0, inv_mass);
    let log_accept = |eps: f64| {
        let mut p = p0.clone();
        let next = leapfrog(density, point, &mut p, inv_mass, eps, 1);
        let h = -next.logp + kinetic(&p, inv_mass);
        if h.is_finite() {
            h0 - h
        } else {
            f64::NEG_INFINITY
        }
    };
    let direction = if log_accept(eps) > 0.5f64.ln() {
        1.0
    } else {
        -1.0
    };
    for _ in 0..60 {
        let la = log_accept(eps);
        let crossed = if direction > 0.0 {
            la <= 0.5f64.ln()
        } else {
            la > 0.5f64.ln()
        };
        if crossed {
            break;
        }
        eps *= 2f64.powf(direction);
    }
    eps
}
