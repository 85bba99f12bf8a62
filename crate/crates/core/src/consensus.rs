//! Noisy consensus dynamics as linear time-invariant systems.
//!
//! First order: `dx = -beta L x dt + dW`.
//! Second order: `dx1 = x2 dt`, `dx2 = (-beta L x1 - beta L x2) dt + dW`.
//! Coherence is the steady-state variance `(1/N) E||J x||^2` (resp.
//! `J x1`), with `J = I - 11^T/N`.
//!
//! Two oracles live here and neither looks at the Laplacian spectrum. One
//! solves the steady-state Lyapunov equation and the other simulates the
//! stochastic dynamics.

// Checks are written as `!(x < bound)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::Caps;
use crate::graph::{Graph, Laplacian};
use crate::spectral::eigenvalues_capped;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::First => "first",
            Order::Second => "second",
        })
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Order::First),
            "second" => Ok(Order::Second),
            _ => Err(Error::InvalidParameter(format!(
                "order must be \"first\" or \"second\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LtiConsensusSystem {
    order: Order,
    beta: f64,
    laplacian: Laplacian,
}

impl LtiConsensusSystem {
    pub fn new(order: Order, beta: f64, laplacian: Laplacian) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if laplacian.dim() < 2 {
            return Err(Error::TooFewNodes {
                min: 2,
                got: laplacian.dim(),
            });
        }
        Ok(Self {
            order,
            beta,
            laplacian,
        })
    }

    pub fn from_graph(g: &Graph, order: Order, beta: f64) -> Result<Self> {
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Self::new(order, beta, g.laplacian())
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn num_nodes(&self) -> usize {
        self.laplacian.dim()
    }

    pub fn state_dimension(&self) -> usize {
        match self.order {
            Order::First => self.num_nodes(),
            Order::Second => 2 * self.num_nodes(),
        }
    }

    /// `J = I - 11^T/N`.
    pub fn output_projector(&self) -> DMatrix<f64> {
        let n = self.num_nodes();
        let mut j = DMatrix::from_element(n, n, -1.0 / n as f64);
        for i in 0..n {
            j[(i, i)] += 1.0;
        }
        j
    }

    /// Neighbor lists read off the off-diagonal of the Laplacian.
    fn neighbors(&self) -> Vec<Vec<usize>> {
        let m = self.laplacian.matrix();
        (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| j != i && m[(i, j)] != 0.0).collect())
            .collect()
    }
}

/// Orthonormal basis of the complement of the all-ones vector, taken from
/// the Householder reflector that sends `e_0` to `-1/sqrt(N)`.
pub fn consensus_complement_basis(n: usize) -> DMatrix<f64> {
    let sn = (n as f64).sqrt();
    let mut w = DVector::from_element(n, 1.0);
    w[0] += sn;
    let h = DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / w.norm_squared());
    h.columns(1, n - 1).into_owned()
}

const SIGN_MAX_ITER: usize = 100;

/// Solves `A X + X A^T + Q = 0` for Hurwitz `A` with the scaled Newton
/// iteration for the matrix sign function.
///
/// The coupled iterates converge to `sign(A) = -I` and `2X`. Failing to
/// reach `-I` means `A` has eigenvalues off the open left half-plane.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut z = a.clone();
    let mut y = q.clone();
    let mut scaled = true;
    let mut tail = 0;
    for _ in 0..SIGN_MAX_ITER {
        let zi = z.clone().try_inverse().ok_or_else(|| {
            Error::Invariant("singular iterate in Lyapunov solve: system has a zero mode".into())
        })?;
        let c = if scaled {
            (zi.norm() / z.norm()).sqrt()
        } else {
            1.0
        };
        let z_next = (&z * c + &zi / c) * 0.5;
        let y_next = (&y * c + &zi * &y * zi.transpose() / c) * 0.5;
        let change = (&z_next - &z).norm() / z_next.norm();
        z = z_next;
        y = y_next;
        if !change.is_finite() {
            break;
        }
        if change < 1e-9 {
            scaled = false;
            tail += 1;
            if tail > 2 {
                break;
            }
        }
    }

    let sign_err = (&z + DMatrix::<f64>::identity(n, n)).norm() / (n as f64).sqrt();
    if !(sign_err < 1e-8) {
        return Err(Error::Invariant(format!(
            "system is not asymptotically stable on the deflated subspace (||sign(A) + I|| = {sign_err:e})"
        )));
    }
    let x = y * 0.5;
    let residual = (a * &x + &x * a.transpose() + q).norm();
    let scale = 2.0 * a.norm() * x.norm() + q.norm();
    if !(residual <= 1e-9 * scale) {
        return Err(Error::Invariant(format!(
            "Lyapunov residual {residual:e} exceeds tolerance (scale {scale:e})"
        )));
    }
    Ok(x)
}

/// H2 norm squared per node, `(1/N) tr(J Sigma J)`, from the steady-state
/// covariance.
///
/// The consensus modes are uncontrollable-but-marginal and invisible through
/// `J`, so the solve runs on the reduced coordinates `z = U^T x` with `U`
/// an orthonormal basis of the complement of `1`. In those coordinates
/// `J Sigma J = U X U^T` and the trace is `tr X`.
pub fn lyapunov_h2(system: &LtiConsensusSystem) -> Result<f64> {
    lyapunov_h2_capped(system, &Caps::default())
}

pub fn lyapunov_h2_capped(system: &LtiConsensusSystem, caps: &Caps) -> Result<f64> {
    let n = system.num_nodes();
    caps.check_dense(system.state_dimension())?;
    let u = consensus_complement_basis(n);
    let lr = u.transpose() * system.laplacian.matrix() * &u;
    let k = n - 1;
    let beta = system.beta;
    let n_f = n as f64;
    match system.order {
        Order::First => {
            let a = &lr * -beta;
            let x = solve_lyapunov(&a, &DMatrix::identity(k, k))?;
            Ok(x.trace() / n_f)
        }
        Order::Second => {
            let mut a = DMatrix::zeros(2 * k, 2 * k);
            a.view_mut((0, k), (k, k)).fill_with_identity();
            a.view_mut((k, 0), (k, k)).copy_from(&(&lr * -beta));
            a.view_mut((k, k), (k, k)).copy_from(&(&lr * -beta));
            let mut q = DMatrix::zeros(2 * k, 2 * k);
            q.view_mut((k, k), (k, k)).fill_with_identity();
            let x = solve_lyapunov(&a, &q)?;
            Ok(x.view((0, 0), (k, k)).trace() / n_f)
        }
    }
}

pub const DEFAULT_REPLICATES: usize = 32;
/// `dt = DEFAULT_DT_FACTOR / (beta lambda_max)` unless given.
pub const DEFAULT_DT_FACTOR: f64 = 0.005;
/// Burn-in and horizon defaults in units of the slowest relaxation time.
pub const DEFAULT_BURN_IN_TAUS: f64 = 10.0;
pub const DEFAULT_HORIZON_TAUS: f64 = 100.0;
const DIVERGENCE_GUARD: f64 = 1e100;

/// Simulation settings. Unset times are derived from the spectrum of the
/// system by [`SimConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: Option<f64>,
    pub burn_in: Option<f64>,
    pub horizon: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// When false the noise increments are forced to zero.
    pub noise: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: None,
            burn_in: None,
            horizon: None,
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            noise: true,
        }
    }
}

/// A validated configuration with every time filled in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSimConfig {
    pub dt: f64,
    pub burn_in: f64,
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
    pub noise: bool,
    /// Slowest relaxation time of the observed modes.
    pub tau: f64,
    pub stiffness: f64,
}

/// Slowest decay rate of the deviation dynamics, which sets burn-in and
/// horizon scales.
fn slowest_rate(order: Order, beta: f64, lambda2: f64, lambda_max: f64) -> f64 {
    match order {
        Order::First => beta * lambda2,
        Order::Second => {
            // Modes obey s^2 + a s + a = 0 with a = beta lambda; the
            // decay rate is a/2 below a = 4 and falls toward 1 above it.
            let rate = |a: f64| {
                if a < 4.0 {
                    a / 2.0
                } else {
                    (a - (a * a - 4.0 * a).sqrt()) / 2.0
                }
            };
            rate(beta * lambda2).min(rate(beta * lambda_max))
        }
    }
}

impl SimConfig {
    pub fn resolve(&self, system: &LtiConsensusSystem) -> Result<ResolvedSimConfig> {
        let eig = eigenvalues_capped(system.laplacian(), &Caps::default())?;
        let lambda2 = eig[1];
        let lambda_max = eig[eig.len() - 1];
        if !(lambda2 > 1e-12 * lambda_max) {
            return Err(Error::Disconnected);
        }
        let beta = system.beta();
        let tau = 1.0 / slowest_rate(system.order(), beta, lambda2, lambda_max);
        let dt = self.dt.unwrap_or(DEFAULT_DT_FACTOR / (beta * lambda_max));
        let burn_in = self.burn_in.unwrap_or(DEFAULT_BURN_IN_TAUS * tau);
        let horizon = self.horizon.unwrap_or(DEFAULT_HORIZON_TAUS * tau);
        let stiffness = dt * beta * lambda_max;

        if !(dt > 0.0 && stiffness < 0.1) {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt} gives dt*beta*lambda_max = {stiffness:.4}; it must be positive and below 0.1"
            )));
        }
        if !(burn_in >= 0.0 && burn_in.is_finite()) {
            return Err(Error::InvalidParameter(format!("burn-in must be >= 0, got {burn_in}")));
        }
        if !(horizon >= 20.0 * tau && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} is shorter than 20 relaxation times ({:.4})",
                20.0 * tau
            )));
        }
        if self.replicates < 2 {
            return Err(Error::InvalidParameter(
                "at least 2 replicates are needed for a standard error".into(),
            ));
        }
        Ok(ResolvedSimConfig {
            dt,
            burn_in,
            horizon,
            replicates: self.replicates,
            seed: self.seed,
            noise: self.noise,
            tau,
            stiffness,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub h_hat: f64,
    /// Standard error of the mean across replicates.
    pub stderr: f64,
    /// Number of replicates.
    pub samples: usize,
    pub steps_per_replicate: u64,
    pub config: ResolvedSimConfig,
    pub replicate_means: Vec<f64>,
}

fn laplacian_apply(adj: &[Vec<usize>], x: &[f64], out: &mut [f64]) {
    for (i, nbrs) in adj.iter().enumerate() {
        let mut acc = nbrs.len() as f64 * x[i];
        for &j in nbrs {
            acc -= x[j];
        }
        out[i] = acc;
    }
}

fn recenter(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn centered_energy(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

struct Integrator<'a> {
    adj: &'a [Vec<usize>],
    order: Order,
    beta: f64,
    dt: f64,
    sqrt_dt: f64,
    noise: bool,
    x1: Vec<f64>,
    x2: Vec<f64>,
    lx: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(adj: &'a [Vec<usize>], order: Order, beta: f64, dt: f64, noise: bool) -> Self {
        let n = adj.len();
        Self {
            adj,
            order,
            beta,
            dt,
            sqrt_dt: dt.sqrt(),
            noise,
            x1: vec![0.0; n],
            x2: vec![0.0; n],
            lx: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn kick<R: Rng>(&self, rng: &mut R) -> f64 {
        let xi: f64 = rng.sample(StandardNormal);
        if self.noise {
            self.sqrt_dt * xi
        } else {
            0.0
        }
    }

    /// One Euler-Maruyama step. The noise is drawn even when it is switched
    /// off so the random stream is the same either way.
    fn step<R: Rng>(&mut self, rng: &mut R) {
        let (b, dt) = (self.beta, self.dt);
        match self.order {
            Order::First => {
                laplacian_apply(self.adj, &self.x1, &mut self.lx);
                for i in 0..self.x1.len() {
                    self.x1[i] += -b * dt * self.lx[i] + self.kick(rng);
                }
            }
            Order::Second => {
                for i in 0..self.x1.len() {
                    self.tmp[i] = self.x1[i] + self.x2[i];
                }
                laplacian_apply(self.adj, &self.tmp, &mut self.lx);
                for i in 0..self.x1.len() {
                    self.x1[i] += dt * self.x2[i];
                    self.x2[i] += -b * dt * self.lx[i] + self.kick(rng);
                }
                // The averages perform an unobservable random walk; removing
                // them keeps magnitudes bounded without changing J x1.
                recenter(&mut self.x1);
                recenter(&mut self.x2);
            }
        }
    }

    fn energy(&self) -> f64 {
        centered_energy(&self.x1)
    }

    fn norm_sq(&self) -> f64 {
        self.x1.iter().chain(&self.x2).map(|v| v * v).sum()
    }
}

fn run_replicate(
    adj: &[Vec<usize>],
    system: &LtiConsensusSystem,
    cfg: &ResolvedSimConfig,
    index: usize,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let mut sim = Integrator::new(adj, system.order(), system.beta(), cfg.dt, cfg.noise);
    let burn_steps = (cfg.burn_in / cfg.dt).ceil() as u64;
    let steps = ((cfg.horizon / cfg.dt).ceil() as u64).max(1);
    for _ in 0..burn_steps {
        sim.step(&mut rng);
    }
    let mut acc = 0.0;
    for k in 0..steps {
        sim.step(&mut rng);
        acc += sim.energy();
        if k % 1024 == 0 {
            let norm = sim.norm_sq();
            if !(norm < DIVERGENCE_GUARD) {
                return Err(Error::Divergence(format!(
                    "replicate {index} diverged at step {k} (||x||^2 = {norm:e}); dt*beta*lambda_max = {:.4}",
                    cfg.stiffness
                )));
            }
        }
    }
    Ok(acc / steps as f64)
}

/// Monte-Carlo estimate of the coherence by Euler-Maruyama integration.
///
/// Each replicate starts at rest, runs `burn_in`, then time-averages
/// `(1/N)||J x||^2` over `horizon`. Replicate `k` draws from the ChaCha
/// stream `k` of the master seed, so results do not depend on thread
/// scheduling.
pub fn simulate_variance(system: &LtiConsensusSystem, config: &SimConfig) -> Result<SimEstimate> {
    let cfg = config.resolve(system)?;
    let adj = system.neighbors();
    let means = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| run_replicate(&adj, system, &cfg, k))
        .collect::<Result<Vec<f64>>>()?;

    let r = means.len() as f64;
    let h_hat = means.iter().sum::<f64>() / r;
    let var = means.iter().map(|m| (m - h_hat).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(SimEstimate {
        h_hat,
        stderr: (var / r).sqrt(),
        samples: means.len(),
        steps_per_replicate: (cfg.horizon / cfg.dt).ceil() as u64,
        config: cfg,
        replicate_means: means,
    })
}
