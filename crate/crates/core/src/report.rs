//! Coherence reports produced by each computational route, and the
//! cross-route agreement check.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::consensus::{lyapunov_h2_capped, simulate_variance, LtiConsensusSystem, Order, SimConfig};
use crate::error::{Error, Result};
use crate::generators::{Caps, Family, FamilySpec};
use crate::graph::Graph;
use crate::spectral::SpectrumSummary;
use crate::tree_recursion::{rational_string, rational_to_f64, tree_state};
use crate::vicsek::vicsek_sums;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Eigen,
    TreeRecursion,
    VicsekRecursion,
    Lyapunov,
    Montecarlo,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Eigen => "eigen",
            Route::TreeRecursion => "tree_recursion",
            Route::VicsekRecursion => "vicsek_recursion",
            Route::Lyapunov => "lyapunov",
            Route::Montecarlo => "montecarlo",
        }
    }

    /// Relative tolerance against the eigen route.
    pub fn tolerance(&self) -> f64 {
        match self {
            Route::Eigen | Route::TreeRecursion | Route::VicsekRecursion => 1e-9,
            Route::Lyapunov => 1e-8,
            Route::Montecarlo => 0.1,
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which coherence orders to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderSelection {
    First,
    Second,
    Both,
}

impl OrderSelection {
    pub fn orders(&self) -> &'static [Order] {
        match self {
            OrderSelection::First => &[Order::First],
            OrderSelection::Second => &[Order::Second],
            OrderSelection::Both => &[Order::First, Order::Second],
        }
    }

    pub fn includes(&self, order: Order) -> bool {
        self.orders().contains(&order)
    }
}

impl FromStr for OrderSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(OrderSelection::First),
            "second" => Ok(OrderSelection::Second),
            "both" => Ok(OrderSelection::Both),
            _ => Err(Error::InvalidParameter(format!(
                "order must be first, second or both, got \"{s}\""
            ))),
        }
    }
}

/// Coherence and the quantities tied to `S` by exact identities.
///
/// `r_total = 2 N S` (Kirchhoff index over ordered pairs),
/// `f_gmfpt = 2 M S / (N - 1)` and `quasi_wiener = N S`, which is the
/// Wiener index when the graph is a tree. Fields that a route cannot
/// produce are `None`. `N` and `M` are decimal strings because recursion
/// routes reach sizes past 64 bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub route: Route,
    #[serde(rename = "N")]
    pub num_nodes: String,
    #[serde(rename = "M")]
    pub num_edges: String,
    pub beta: f64,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    #[serde(rename = "S2")]
    pub s2: Option<f64>,
    #[serde(rename = "S_exact", skip_serializing_if = "Option::is_none", default)]
    pub s_exact: Option<String>,
    #[serde(rename = "S2_exact", skip_serializing_if = "Option::is_none", default)]
    pub s2_exact: Option<String>,
    #[serde(rename = "H_FO")]
    pub h_fo: Option<f64>,
    #[serde(rename = "H_SO")]
    pub h_so: Option<f64>,
    #[serde(rename = "H_FO_exact", skip_serializing_if = "Option::is_none", default)]
    pub h_fo_exact: Option<String>,
    #[serde(rename = "H_SO_exact", skip_serializing_if = "Option::is_none", default)]
    pub h_so_exact: Option<String>,
    #[serde(rename = "H_FO_stderr", skip_serializing_if = "Option::is_none", default)]
    pub h_fo_stderr: Option<f64>,
    #[serde(rename = "H_SO_stderr", skip_serializing_if = "Option::is_none", default)]
    pub h_so_stderr: Option<f64>,
    #[serde(rename = "R_total")]
    pub r_total: Option<f64>,
    #[serde(rename = "F_gmfpt")]
    pub f_gmfpt: Option<f64>,
    pub quasi_wiener: Option<f64>,
}

impl CoherenceReport {
    fn blank(route: Route, n: impl ToString, m: impl ToString, beta: f64) -> Self {
        Self {
            route,
            num_nodes: n.to_string(),
            num_edges: m.to_string(),
            beta,
            s: None,
            s2: None,
            s_exact: None,
            s2_exact: None,
            h_fo: None,
            h_so: None,
            h_fo_exact: None,
            h_so_exact: None,
            h_fo_stderr: None,
            h_so_stderr: None,
            r_total: None,
            f_gmfpt: None,
            quasi_wiener: None,
        }
    }

    /// Fills every derived field from floating `S` and `S2`.
    fn with_sums(mut self, s: Option<f64>, s2: Option<f64>) -> Self {
        let n: f64 = self.num_nodes.parse().unwrap_or(f64::NAN);
        let m: f64 = self.num_edges.parse().unwrap_or(f64::NAN);
        let b = self.beta;
        self.s = s;
        self.s2 = s2;
        self.h_fo = s.map(|s| s / (2.0 * b * n));
        self.h_so = s2.map(|s2| s2 / (2.0 * b * b * n));
        self.r_total = s.map(|s| 2.0 * n * s);
        self.f_gmfpt = s.map(|s| 2.0 * m * s / (n - 1.0));
        self.quasi_wiener = s.map(|s| n * s);
        self
    }

    /// Drops the fields of an order that was not requested.
    pub fn restrict(mut self, orders: OrderSelection) -> Self {
        if !orders.includes(Order::First) {
            self.s = None;
            self.s_exact = None;
            self.h_fo = None;
            self.h_fo_exact = None;
            self.h_fo_stderr = None;
            self.r_total = None;
            self.f_gmfpt = None;
            self.quasi_wiener = None;
        }
        if !orders.includes(Order::Second) {
            self.s2 = None;
            self.s2_exact = None;
            self.h_so = None;
            self.h_so_exact = None;
            self.h_so_stderr = None;
        }
        self
    }

    pub fn h(&self, order: Order) -> Option<f64> {
        match order {
            Order::First => self.h_fo,
            Order::Second => self.h_so,
        }
    }

    pub fn stderr(&self, order: Order) -> Option<f64> {
        match order {
            Order::First => self.h_fo_stderr,
            Order::Second => self.h_so_stderr,
        }
    }
}

fn validate_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

pub fn eigen_report(g: &Graph, beta: f64, caps: &Caps) -> Result<CoherenceReport> {
    validate_beta(beta)?;
    let spec = SpectrumSummary::of_graph(g, caps)?;
    Ok(CoherenceReport::blank(Route::Eigen, g.num_nodes(), g.num_edges(), beta)
        .with_sums(Some(spec.s), Some(spec.s2)))
}

fn exact_report(
    route: Route,
    n: BigInt,
    beta: f64,
    s: &BigRational,
    s2: &BigRational,
) -> CoherenceReport {
    let m = &n - 1;
    let mut r = CoherenceReport::blank(route, &n, &m, beta)
        .with_sums(Some(rational_to_f64(s)), Some(rational_to_f64(s2)));
    r.s_exact = Some(rational_string(s));
    r.s2_exact = Some(rational_string(s2));
    // Every finite f64 is a dyadic rational, so beta converts exactly. The
    // float coherence comes from the exact quotient because N alone can
    // overflow f64 at large generations.
    if let Some(b) = BigRational::from_float(beta) {
        let two_n = BigRational::from_integer(n * 2);
        let h_fo = s / (&two_n * &b);
        let h_so = s2 / (&two_n * &b * &b);
        r.h_fo = Some(rational_to_f64(&h_fo));
        r.h_so = Some(rational_to_f64(&h_so));
        r.h_fo_exact = Some(rational_string(&h_fo));
        r.h_so_exact = Some(rational_string(&h_so));
    }
    r
}

pub fn tree_recursion_report(m: u32, g: u32, beta: f64) -> Result<CoherenceReport> {
    validate_beta(beta)?;
    let st = tree_state(m, g)?;
    Ok(exact_report(Route::TreeRecursion, st.num_nodes(), beta, &st.s(), &st.s2()))
}

pub fn vicsek_recursion_report(v: u32, g: u32, beta: f64) -> Result<CoherenceReport> {
    validate_beta(beta)?;
    let sums = vicsek_sums(v, g)?;
    Ok(exact_report(Route::VicsekRecursion, sums.num_nodes(), beta, &sums.s, &sums.s2))
}

/// Recursion route for a family at a given size, if it has one.
pub fn recursion_report(spec: &FamilySpec, beta: f64) -> Result<CoherenceReport> {
    match spec.family {
        Family::TreeLike { m } => tree_recursion_report(m, spec.size, beta),
        Family::Vicsek { v } => vicsek_recursion_report(v, spec.size, beta),
        other => Err(Error::InvalidParameter(format!(
            "no recursion route for {}",
            other.name()
        ))),
    }
}

pub fn lyapunov_report(g: &Graph, beta: f64, orders: OrderSelection, caps: &Caps) -> Result<CoherenceReport> {
    validate_beta(beta)?;
    let n = g.num_nodes() as f64;
    let mut s = None;
    let mut s2 = None;
    for &order in orders.orders() {
        let h = lyapunov_h2_capped(&LtiConsensusSystem::from_graph(g, order, beta)?, caps)?;
        match order {
            Order::First => s = Some(h * 2.0 * beta * n),
            Order::Second => s2 = Some(h * 2.0 * beta * beta * n),
        }
    }
    Ok(CoherenceReport::blank(Route::Lyapunov, g.num_nodes(), g.num_edges(), beta).with_sums(s, s2))
}

pub fn montecarlo_report(
    g: &Graph,
    beta: f64,
    orders: OrderSelection,
    config: &SimConfig,
) -> Result<CoherenceReport> {
    validate_beta(beta)?;
    let n = g.num_nodes() as f64;
    let mut r = CoherenceReport::blank(Route::Montecarlo, g.num_nodes(), g.num_edges(), beta);
    let (mut s, mut s2) = (None, None);
    let (mut e1, mut e2) = (None, None);
    for &order in orders.orders() {
        let est = simulate_variance(&LtiConsensusSystem::from_graph(g, order, beta)?, config)?;
        match order {
            Order::First => {
                s = Some(est.h_hat * 2.0 * beta * n);
                e1 = Some(est.stderr);
            }
            Order::Second => {
                s2 = Some(est.h_hat * 2.0 * beta * beta * n);
                e2 = Some(est.stderr);
            }
        }
    }
    r = r.with_sums(s, s2);
    r.h_fo_stderr = e1;
    r.h_so_stderr = e2;
    Ok(r)
}

/// Comparison of one route against a reference route for one order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementCheck {
    pub route: Route,
    pub reference: Route,
    pub order: Order,
    pub value: f64,
    pub reference_value: f64,
    pub relative_error: f64,
    /// `|value - reference| / stderr` for Monte-Carlo.
    pub z_score: Option<f64>,
    pub passed: bool,
}

/// Compares every report against the first one for each requested order.
/// Deterministic routes must agree to their tolerance; Monte-Carlo must
/// lie within 3 standard errors and within 10%.
pub fn check_agreement(reports: &[CoherenceReport], orders: OrderSelection) -> Vec<AgreementCheck> {
    let Some(reference) = reports.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for rep in &reports[1..] {
        for &order in orders.orders() {
            let (Some(value), Some(want)) = (rep.h(order), reference.h(order)) else {
                continue;
            };
            let relative_error = (value - want).abs() / want.abs();
            let z_score = rep.stderr(order).map(|se| (value - want).abs() / se);
            let tol = rep.route.tolerance().max(reference.route.tolerance());
            let passed = relative_error <= tol && z_score.is_none_or(|z| z <= 3.0);
            out.push(AgreementCheck {
                route: rep.route,
                reference: reference.route,
                order,
                value,
                reference_value: want,
                relative_error,
                z_score,
                passed,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{tree_like, vicsek};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn star_report() {
        let r = eigen_report(&tree_like(2, 1).unwrap(), 1.0, &Caps::default()).unwrap();
        assert_eq!((r.num_nodes.as_str(), r.num_edges.as_str()), ("5", "4"));
        assert!(rel(r.h_fo.unwrap(), 0.32) < 1e-12);
        assert!(rel(r.h_so.unwrap(), 0.304) < 1e-12);
        assert!(rel(r.r_total.unwrap(), 32.0) < 1e-12);
        assert!(rel(r.f_gmfpt.unwrap(), 6.4) < 1e-12);
        assert!(rel(r.quasi_wiener.unwrap(), 16.0) < 1e-12);
    }

    #[test]
    fn exact_strings() {
        let r = tree_recursion_report(2, 2, 1.0).unwrap();
        assert_eq!(r.s_exact.as_deref(), Some("400/17"));
        assert_eq!(r.s2_exact.as_deref(), Some("22300/289"));
        assert_eq!(r.h_fo_exact.as_deref(), Some("200/289"));
        assert_eq!(r.num_nodes, "17");
        let r = vicsek_recursion_report(4, 2, 0.5).unwrap();
        assert_eq!(r.s_exact.as_deref(), Some("296/5"));
        assert_eq!(r.h_so_exact.as_deref(), Some("32192/625"));
    }

    #[test]
    fn routes_agree() {
        let g = vicsek(4, 2).unwrap();
        let caps = Caps::default();
        let reports = vec![
            eigen_report(&g, 2.0, &caps).unwrap(),
            vicsek_recursion_report(4, 2, 2.0).unwrap(),
            lyapunov_report(&g, 2.0, OrderSelection::Both, &caps).unwrap(),
        ];
        let checks = check_agreement(&reports, OrderSelection::Both);
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn restrict_drops_unrequested() {
        let r = tree_recursion_report(1, 3, 1.0).unwrap().restrict(OrderSelection::Second);
        assert!(r.h_fo.is_none() && r.s_exact.is_none() && r.h_so.is_some());
        assert!("sideways".parse::<OrderSelection>().is_err());
    }
}
