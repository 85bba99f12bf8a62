//! Power-law fits of coherence against network size, and empirical
//! fractal and spectral dimensions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{analytic_dimensions, Family};
use crate::graph::{bfs_from, Graph};
use crate::spectral::SpectrumSummary;
use crate::tree_recursion::{rational_to_f64, tree_coherence_exponents, tree_states};
use crate::vicsek::{vicsek_coherence_exponents, vicsek_sums};

/// Least-squares line through `(log N, log value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
    /// `max - min` of the exponent over leave-one-out refits; absent with
    /// fewer than 4 points.
    pub loo_spread: Option<f64>,
}

impl ScalingFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.log_prefactor + self.exponent * n.ln()).exp()
    }
}

/// `y = intercept + slope * x` by ordinary least squares, with `r^2`.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::InsufficientRange(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, y)) = points.iter().find(|&&(n, y)| !(n > 0.0 && y > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "log-log fit needs positive coordinates, got ({n}, {y})"
        )));
    }
    let first = points[0].0;
    if points.iter().all(|&(n, _)| n == first) {
        return Err(Error::InsufficientRange("all sizes are equal".into()));
    }
    Ok(())
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_points(points)?;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (exponent, log_prefactor, r_squared) = ols(&xs, &ys);

    let loo_spread = (points.len() >= 4).then(|| {
        let slopes: Vec<f64> = (0..points.len())
            .map(|skip| {
                let keep = |v: &[f64]| -> Vec<f64> {
                    v.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x).collect()
                };
                ols(&keep(&xs), &keep(&ys)).0
            })
            .collect();
        let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    });
    Ok(ScalingFit {
        exponent,
        log_prefactor,
        r_squared,
        points: points.to_vec(),
        loo_spread,
    })
}

/// `value = intercept + slope * log N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_log_linear(points: &[(f64, f64)]) -> Result<LogLinearFit> {
    check_points(points)?;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(LogLinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Power law against logarithmic growth on the same data. The two fits
/// live in different coordinates, so they are compared by the RMS of
/// their relative residuals in the original units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthComparison {
    pub power_law: ScalingFit,
    pub log_linear: LogLinearFit,
    pub power_law_rel_rms: f64,
    pub log_linear_rel_rms: f64,
}

impl GrowthComparison {
    pub fn log_linear_preferred(&self) -> bool {
        self.log_linear_rel_rms < self.power_law_rel_rms
    }
}

pub fn compare_growth(points: &[(f64, f64)]) -> Result<GrowthComparison> {
    let power_law = fit_exponent(points)?;
    let log_linear = fit_log_linear(points)?;
    let rms = |pred: &dyn Fn(f64) -> f64| {
        let sum: f64 = points.iter().map(|&(n, y)| (pred(n) / y - 1.0).powi(2)).sum();
        (sum / points.len() as f64).sqrt()
    };
    let power_law_rel_rms = rms(&|n| power_law.predict(n));
    let log_linear_rel_rms = rms(&|n| log_linear.intercept + log_linear.slope * n.ln());
    Ok(GrowthComparison {
        power_law,
        log_linear,
        power_law_rel_rms,
        log_linear_rel_rms,
    })
}

/// Sizes of breadth-first balls around `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGrowthProfile {
    pub center: usize,
    /// `radii[r] = r` for `r = 0..=eccentricity(center)`.
    pub radii: Vec<usize>,
    /// `sizes[r] = |B(center, r)|`.
    pub sizes: Vec<usize>,
    /// Graph diameter from a double BFS sweep (exact on trees, a lower
    /// bound otherwise).
    pub diameter: usize,
}

impl BallGrowthProfile {
    pub fn eccentricity(&self) -> usize {
        self.radii.len() - 1
    }
}

fn farthest(adj: &[Vec<usize>], from: usize) -> (usize, usize) {
    bfs_from(adj, from)
        .iter()
        .enumerate()
        .map(|(i, d)| (d.unwrap_or_default(), i))
        .max_by_key(|&(d, i)| (d, std::cmp::Reverse(i)))
        .map(|(d, i)| (i, d))
        .unwrap_or((from, 0))
}

pub fn ball_growth(g: &Graph, center: usize) -> Result<BallGrowthProfile> {
    if center >= g.num_nodes() {
        return Err(Error::EndpointOutOfRange {
            node: center,
            num_nodes: g.num_nodes(),
        });
    }
    let adj = g.adjacency_lists();
    let dist = bfs_from(&adj, center);
    if dist.iter().any(Option::is_none) {
        return Err(Error::Disconnected);
    }
    let ecc = dist.iter().flatten().copied().max().unwrap_or(0);
    let mut shell = vec![0usize; ecc + 1];
    for d in dist.iter().flatten() {
        shell[*d] += 1;
    }
    let sizes = shell
        .iter()
        .scan(0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let (a, _) = farthest(&adj, 0);
    let (_, diameter) = farthest(&adj, a);
    Ok(BallGrowthProfile {
        center,
        radii: (0..=ecc).collect(),
        sizes,
        diameter,
    })
}

/// Smallest label among the nodes of maximum degree.
pub fn max_degree_node(g: &Graph) -> usize {
    let deg = g.degrees();
    let max = deg.iter().copied().max().unwrap_or(0);
    deg.iter().position(|&d| d == max).unwrap_or(0)
}

pub const MIN_DIAMETER: usize = 8;

/// Slope of `log |B(r)|` against `log r` for `r` in
/// `[2, min(eccentricity, diameter / 2)]`.
pub fn estimate_fractal_dimension(profile: &BallGrowthProfile) -> Result<ScalingFit> {
    if profile.diameter < MIN_DIAMETER {
        return Err(Error::InsufficientRange(format!(
            "diameter {} is below {MIN_DIAMETER}",
            profile.diameter
        )));
    }
    let hi = profile.eccentricity().min(profile.diameter / 2);
    let points: Vec<(f64, f64)> = (2..=hi)
        .map(|r| (r as f64, profile.sizes[r] as f64))
        .collect();
    fit_exponent(&points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalDimensionEstimate {
    pub d_f: f64,
    pub fit: ScalingFit,
    pub center: usize,
    /// `(center, d_f)` from randomly drawn centers; centers whose window is
    /// too short are skipped.
    pub sensitivity: Vec<(usize, f64)>,
}

/// Ball-growth dimension around the maximum-degree node, plus the same
/// estimate from `extra_centers` seeded random centers.
pub fn ball_growth_dimension(g: &Graph, extra_centers: usize, seed: u64) -> Result<FractalDimensionEstimate> {
    let center = max_degree_node(g);
    let fit = estimate_fractal_dimension(&ball_growth(g, center)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sensitivity = Vec::with_capacity(extra_centers);
    for _ in 0..extra_centers {
        let c = rng.random_range(0..g.num_nodes());
        if let Ok(f) = estimate_fractal_dimension(&ball_growth(g, c)?) {
            sensitivity.push((c, f.exponent));
        }
    }
    Ok(FractalDimensionEstimate {
        d_f: fit.exponent,
        fit,
        center,
        sensitivity,
    })
}

pub const MIN_SPECTRAL_NODES: usize = 500;
/// Upper end of the window as a fraction of `N`.
pub const SPECTRAL_WINDOW_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDimensionEstimate {
    pub d_s: f64,
    pub fit: ScalingFit,
    /// Eigenvalue window `[lambda_2, lambda_k]`, `k = ceil(0.05 N)`.
    pub window: (f64, f64),
}

/// Twice the slope of `log rho(x)` against `log x`, sampled at the distinct
/// eigenvalues in the low end of the spectrum. The defining limit is taken
/// over an infinite graph; on a finite one only this window shows the
/// scaling.
pub fn estimate_spectral_dimension(spec: &SpectrumSummary) -> Result<SpectralDimensionEstimate> {
    let n = spec.num_nodes();
    if n < MIN_SPECTRAL_NODES {
        return Err(Error::InsufficientRange(format!(
            "spectral dimension needs N >= {MIN_SPECTRAL_NODES}, got {n}"
        )));
    }
    let k = (SPECTRAL_WINDOW_FRACTION * n as f64).ceil() as usize;
    let lo = spec.eigenvalues[1];
    let hi = spec.eigenvalues[k.clamp(2, n) - 1];
    let tol = 1e-9 * hi.max(1.0);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &x in &spec.eigenvalues[1..k.clamp(2, n)] {
        if points.last().is_some_and(|&(p, _)| x - p <= tol) {
            continue;
        }
        points.push((x, 0.0));
    }
    for p in &mut points {
        p.1 = spec.counting_function(p.0) as f64;
    }
    let fit = fit_exponent(&points).map_err(|e| match e {
        Error::InsufficientRange(msg) => Error::InsufficientRange(format!("degenerate eigenvalue window: {msg}")),
        other => other,
    })?;
    Ok(SpectralDimensionEstimate {
        d_s: 2.0 * fit.exponent,
        fit,
        window: (lo, hi),
    })
}

/// Closed-form cycle spectrum `2 - 2 cos(2 pi k / n)`, ascending.
pub fn ring_spectrum(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
        .collect();
    v[0] = 0.0;
    v.sort_by(f64::total_cmp);
    v
}

/// Closed-form spectrum of the `side x side` torus, ascending.
pub fn torus2d_spectrum(side: usize) -> Vec<f64> {
    let ring = ring_spectrum(side);
    let mut v: Vec<f64> = ring.iter().flat_map(|a| ring.iter().map(move |b| a + b)).collect();
    v.sort_by(f64::total_cmp);
    v[0] = 0.0;
    v
}

/// `(N, H_FO, H_SO)` per generation from the exact recursions, for
/// generations `g_min..=g_max` of a fractal family.
pub fn recursion_coherence_series(family: Family, g_min: u32, g_max: u32, beta: f64) -> Result<Vec<(f64, f64, f64)>> {
    if g_min == 0 || g_min > g_max {
        return Err(Error::InvalidParameter(format!(
            "generation range must satisfy 1 <= g_min <= g_max, got {g_min}..{g_max}"
        )));
    }
    let row = |n: f64, s: f64, s2: f64| (n, s / (2.0 * beta * n), s2 / (2.0 * beta * beta * n));
    match family {
        Family::TreeLike { m } => Ok(tree_states(m, g_max)?
            .iter()
            .filter(|st| st.generation() >= g_min)
            .map(|st| {
                let n = f64::from(m + 2).powi(st.generation() as i32) + 1.0;
                row(n, rational_to_f64(&st.s()), rational_to_f64(&st.s2()))
            })
            .collect()),
        Family::Vicsek { v } => (g_min..=g_max)
            .map(|g| {
                let sums = vicsek_sums(v, g)?;
                let n = f64::from(v + 1).powi(g as i32);
                Ok(row(n, rational_to_f64(&sums.s), rational_to_f64(&sums.s2)))
            })
            .collect(),
        other => Err(Error::InvalidParameter(format!("{} has no generation recursion", other.name()))),
    }
}

/// Analytic `(H_FO, H_SO)` exponents for a fractal family.
pub fn coherence_exponents(family: Family) -> Option<(f64, f64)> {
    match family {
        Family::TreeLike { m } => Some(tree_coherence_exponents(m)),
        Family::Vicsek { v } => Some(vicsek_coherence_exponents(v)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub family: Family,
    pub d_f: f64,
    pub d_s: f64,
    /// `1/d_f` and `1 + 2/d_f`.
    pub h_fo_exponent: f64,
    pub h_so_exponent: f64,
    /// `2/d_s - 1` and `4/d_s - 1`.
    pub h_fo_exponent_from_ds: f64,
    pub h_so_exponent_from_ds: f64,
    pub fitted_h_fo: Option<ScalingFit>,
    pub fitted_h_so: Option<ScalingFit>,
}

/// Number of largest generations used for fitted exponents.
pub const FIT_WINDOW: u32 = 6;
/// Default largest generation for table fits.
pub const TABLE_G_MAX: u32 = 12;

pub fn table_families() -> Vec<Family> {
    vec![
        Family::TreeLike { m: 1 },
        Family::TreeLike { m: 2 },
        Family::TreeLike { m: 3 },
        Family::Vicsek { v: 3 },
        Family::Vicsek { v: 4 },
        Family::Vicsek { v: 5 },
    ]
}

/// Analytic dimensions and exponents of each fractal family, with
/// exponents fitted over generations `g_max - 5..=g_max` of the exact
/// recursions.
pub fn coherence_table(beta: f64, g_max: u32) -> Result<Vec<TableRow>> {
    if g_max < FIT_WINDOW {
        return Err(Error::InvalidParameter(format!("g_max must be at least {FIT_WINDOW}")));
    }
    table_families()
        .into_iter()
        .map(|family| {
            let dims = analytic_dimensions(family);
            let series = recursion_coherence_series(family, g_max + 1 - FIT_WINDOW, g_max, beta)?;
            let fo: Vec<_> = series.iter().map(|&(n, h, _)| (n, h)).collect();
            let so: Vec<_> = series.iter().map(|&(n, _, h)| (n, h)).collect();
            Ok(TableRow {
                family,
                d_f: dims.fractal,
                d_s: dims.spectral,
                h_fo_exponent: 1.0 / dims.fractal,
                h_so_exponent: 1.0 + 2.0 / dims.fractal,
                h_fo_exponent_from_ds: 2.0 / dims.spectral - 1.0,
                h_so_exponent_from_ds: 4.0 / dims.spectral - 1.0,
                fitted_h_fo: Some(fit_exponent(&fo)?),
                fitted_h_so: Some(fit_exponent(&so)?),
            })
        })
        .collect()
}
