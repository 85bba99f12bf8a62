use std::fs::File;
use std::io::{self, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use fractal_coherence::consensus::{simulate_variance, LtiConsensusSystem, Order, SimConfig, SimEstimate};
use fractal_coherence::generators::{Caps, DimensionInfo, Family, FamilySpec};
use fractal_coherence::report::{
    check_agreement, eigen_report, lyapunov_report, montecarlo_report, recursion_report,
    AgreementCheck, CoherenceReport,
};
use fractal_coherence::scaling::{
    ball_growth_dimension, coherence_exponents, coherence_table, estimate_spectral_dimension,
    fit_exponent, ScalingFit, FIT_WINDOW,
};
use fractal_coherence::spectral::SpectrumSummary;
use fractal_coherence::verify::{verify_tree, verify_vicsek, CheckResult};
use fractal_coherence::{Error, Graph};

use crate::args::{
    Cli, CoherenceArgs, Command, DimensionArgs, FamilyArgs, GraphArgs, RouteArg, SimulateArgs,
    SpectrumArgs, SweepArgs, SweepFamily, SweepRoute, VerifyArgs, VerifyTarget,
};
use crate::output::{cell, emit, json_with_manifest, Failure, RunManifest};

/// Graph size up to which `--route all` also runs the Lyapunov solve.
const AUTO_LYAPUNOV_MAX: u128 = 200;
/// Graph size up to which `--route all` also runs the simulation.
const AUTO_SIMULATE_MAX: u128 = 30;

pub fn dispatch(cli: &Cli, caps: &Caps, manifest: &RunManifest) -> Result<(), Failure> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Generate(a) => generate(a, caps, manifest, out),
        Command::Spectrum(a) => spectrum(a, caps, manifest, out),
        Command::Coherence(a) => coherence(a, caps, manifest, out),
        Command::Simulate(a) => simulate(a, caps, manifest, out),
        Command::Sweep(a) => sweep(a, caps, manifest, out),
        Command::Dimension(a) => dimension(a, caps, manifest, out),
        Command::Verify(a) => verify(a, caps, manifest, out),
    }
}

fn check_spec(spec: &FamilySpec, caps: &Caps) -> Result<u128, Failure> {
    let n = spec.node_count().ok_or(Error::CapExceeded {
        what: "graph generation",
        requested: u128::MAX,
        cap: caps.max_nodes,
    })?;
    caps.check_nodes(n)?;
    Ok(n)
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    if path == Path::new("-") {
        return Ok(Graph::read_edge_list(io::stdin().lock())?);
    }
    let f = File::open(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Graph::read_edge_list(BufReader::new(f))?.with_label(path.display().to_string()))
}

fn load_graph(args: &GraphArgs, caps: &Caps) -> Result<(Graph, Option<FamilySpec>), Failure> {
    if let Some(path) = &args.input {
        let g = read_graph(path)?;
        caps.check_nodes(g.num_nodes() as u128)?;
        // Every subcommand needs a connected graph; say so before any
        // solver trips over the extra zero eigenvalues.
        if !g.is_connected() {
            return Err(Error::Disconnected.into());
        }
        return Ok((g, None));
    }
    match args.family.spec()? {
        Some(spec) => {
            check_spec(&spec, caps)?;
            Ok((spec.build(caps)?, Some(spec)))
        }
        None => Err(Failure::usage(
            "no graph given: use --input FILE or --family with its size flags",
        )),
    }
}

/// Builds the graph only when a route needs it, so recursion-only runs
/// work far past the generation cap.
struct LazyGraph<'a> {
    args: &'a GraphArgs,
    caps: &'a Caps,
    graph: Option<Graph>,
}

impl LazyGraph<'_> {
    fn get(&mut self) -> Result<&Graph, Failure> {
        if self.graph.is_none() {
            self.graph = Some(load_graph(self.args, self.caps)?.0);
        }
        Ok(self.graph.as_ref().expect("just loaded"))
    }
}

fn generate(a: &FamilyArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    let spec = a
        .spec()?
        .ok_or_else(|| Failure::usage("generate needs --family and its size flags"))?;
    check_spec(&spec, caps)?;
    let g = spec.build(caps)?;
    // The manifest trails the edges so the first line stays "N M".
    let text = g.to_edge_list() + &manifest.comment()?;
    emit(out, &text)
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    graph: &'a str,
    #[serde(rename = "N")]
    num_nodes: usize,
    #[serde(rename = "M")]
    num_edges: usize,
    #[serde(flatten)]
    spectrum: &'a SpectrumSummary,
}

fn spectrum(a: &SpectrumArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    let (g, _) = load_graph(&a.graph, caps)?;
    let spec = SpectrumSummary::of_graph(&g, caps)?;
    let text = if a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "eigenvalue"])?;
        for (i, l) in spec.eigenvalues.iter().enumerate() {
            w.write_record([i.to_string(), format!("{l:e}")])?;
        }
        manifest.comment()? + &csv_string(w)?
    } else {
        json_with_manifest(
            manifest,
            &SpectrumOutput {
                graph: g.label(),
                num_nodes: g.num_nodes(),
                num_edges: g.num_edges(),
                spectrum: &spec,
            },
        )?
    };
    emit(out, &text)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, Failure> {
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::internal(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::internal(format!("csv buffer: {e}")))
}

#[derive(Serialize)]
struct Skipped {
    route: &'static str,
    reason: String,
}

#[derive(Serialize)]
struct CoherenceOutput {
    graph: String,
    reports: Vec<CoherenceReport>,
    agreement: Vec<AgreementCheck>,
    skipped: Vec<Skipped>,
}

const COHERENCE_COLUMNS: [&str; 17] = [
    "route", "N", "M", "beta", "S", "S2", "S_exact", "S2_exact", "H_FO", "H_SO", "H_FO_exact",
    "H_SO_exact", "H_FO_stderr", "H_SO_stderr", "R_total", "F_gmfpt", "quasi_wiener",
];

fn coherence_row(r: &CoherenceReport) -> Vec<String> {
    let text = |s: &Option<String>| s.clone().unwrap_or_default();
    vec![
        r.route.name().to_string(),
        r.num_nodes.clone(),
        r.num_edges.clone(),
        format!("{:e}", r.beta),
        cell(r.s),
        cell(r.s2),
        text(&r.s_exact),
        text(&r.s2_exact),
        cell(r.h_fo),
        cell(r.h_so),
        text(&r.h_fo_exact),
        text(&r.h_so_exact),
        cell(r.h_fo_stderr),
        cell(r.h_so_stderr),
        cell(r.r_total),
        cell(r.f_gmfpt),
        cell(r.quasi_wiener),
    ]
}

fn coherence(a: &CoherenceArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    let spec = if a.graph.input.is_some() {
        None
    } else {
        Some(a.graph.family.spec()?.ok_or_else(|| {
            Failure::usage("no graph given: use --input FILE or --family with its size flags")
        })?)
    };
    let all = a.route == RouteArg::All;
    let wants = |r: RouteArg| all || a.route == r;
    let mut lazy = LazyGraph {
        args: &a.graph,
        caps,
        graph: None,
    };

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    if wants(RouteArg::Recursion) {
        match spec.filter(|s| s.family.is_fractal()) {
            Some(s) => reports.push(recursion_report(&s, a.beta)?),
            None if all => skipped.push(Skipped {
                route: "recursion",
                reason: "only the tree and vicsek families have a recursion route".into(),
            }),
            None => return Err(Failure::usage("--route recursion needs --family tree or vicsek")),
        }
    }

    // Node count without building the graph when the family gives it.
    let n = match spec {
        Some(s) => s.node_count(),
        None => Some(lazy.get()?.num_nodes() as u128),
    };
    let mut plan = |route: RouteArg, name: &'static str, auto_max: u128| -> bool {
        if !wants(route) {
            return false;
        }
        if !all {
            return true;
        }
        let reason = match n {
            Some(n) if n <= auto_max => return true,
            Some(n) => format!("N = {n} is above {auto_max}, the automatic limit for this route"),
            None => "node count overflows".to_string(),
        };
        skipped.push(Skipped { route: name, reason });
        false
    };
    let run_eigen = plan(RouteArg::Eigen, "eigen", caps.max_dense as u128);
    let run_lyap = plan(RouteArg::Lyapunov, "lyapunov", AUTO_LYAPUNOV_MAX);
    let run_sim = plan(RouteArg::Simulate, "simulate", AUTO_SIMULATE_MAX);

    if run_eigen {
        reports.push(eigen_report(lazy.get()?, a.beta, caps)?);
    }
    if run_lyap {
        reports.push(lyapunov_report(lazy.get()?, a.beta, a.order, caps)?);
    }
    if run_sim {
        let cfg = SimConfig {
            replicates: a.replicates,
            seed: a.seed,
            ..SimConfig::default()
        };
        reports.push(montecarlo_report(lazy.get()?, a.beta, a.order, &cfg)?);
    }

    let reports: Vec<_> = reports.into_iter().map(|r| r.restrict(a.order)).collect();
    let agreement = check_agreement(&reports, a.order);
    let label = match (&lazy.graph, spec) {
        (Some(g), _) => g.label().to_string(),
        (None, Some(s)) => s.to_string(),
        (None, None) => String::new(),
    };

    let text = if a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COHERENCE_COLUMNS)?;
        for r in &reports {
            w.write_record(coherence_row(r))?;
        }
        manifest.comment()? + &csv_string(w)?
    } else {
        json_with_manifest(
            manifest,
            &CoherenceOutput {
                graph: label,
                reports,
                agreement: agreement.clone(),
                skipped,
            },
        )?
    };
    emit(out, &text)?;

    let failed: Vec<String> = agreement
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "{} vs {} ({} order): relative error {:.3e}",
                c.route, c.reference, c.order, c.relative_error
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::internal(format!("routes disagree: {}", failed.join("; "))))
    }
}

#[derive(Serialize)]
struct SimulationResult {
    order: Order,
    estimate: SimEstimate,
    /// Spectral value, when the graph fits under the dense cap.
    analytic: Option<f64>,
    z_score: Option<f64>,
    relative_error: Option<f64>,
    /// Within 3 standard errors and 10% of the analytic value.
    agrees: Option<bool>,
}

#[derive(Serialize)]
struct SimulationOutput {
    graph: String,
    #[serde(rename = "N")]
    num_nodes: usize,
    beta: f64,
    results: Vec<SimulationResult>,
}

fn simulate(a: &SimulateArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    let (g, _) = load_graph(&a.graph, caps)?;
    let cfg = SimConfig {
        dt: a.dt,
        burn_in: a.burn_in,
        horizon: a.horizon,
        replicates: a.replicates,
        seed: a.seed,
        noise: !a.no_noise,
    };
    let spectrum = match caps.check_dense(g.num_nodes()) {
        Ok(()) => Some(SpectrumSummary::of_graph(&g, caps)?),
        Err(_) => None,
    };
    let n = g.num_nodes() as f64;
    let mut results = Vec::new();
    for &order in a.order.orders() {
        let system = LtiConsensusSystem::from_graph(&g, order, a.beta)?;
        let estimate = simulate_variance(&system, &cfg)?;
        let analytic = spectrum.as_ref().map(|s| match order {
            Order::First => s.s / (2.0 * a.beta * n),
            Order::Second => s.s2 / (2.0 * a.beta * a.beta * n),
        });
        // A noiseless run has nothing to compare against.
        let compared = analytic.filter(|_| cfg.noise);
        let z_score = compared.map(|h| (estimate.h_hat - h).abs() / estimate.stderr);
        let relative_error = compared.map(|h| (estimate.h_hat - h).abs() / h);
        let agrees = z_score.zip(relative_error).map(|(z, r)| z <= 3.0 && r <= 0.1);
        results.push(SimulationResult {
            order,
            estimate,
            analytic,
            z_score,
            relative_error,
            agrees,
        });
    }
    let disagreeing: Vec<String> = results
        .iter()
        .filter(|r| r.agrees == Some(false))
        .map(|r| r.order.to_string())
        .collect();
    let body = SimulationOutput {
        graph: g.label().to_string(),
        num_nodes: g.num_nodes(),
        beta: a.beta,
        results,
    };
    emit(out, &json_with_manifest(manifest, &body)?)?;
    if disagreeing.is_empty() {
        Ok(())
    } else {
        Err(Failure::internal(format!(
            "simulation disagrees with the analytic value for order {}",
            disagreeing.join(", ")
        )))
    }
}

#[derive(Serialize)]
struct OrderFit {
    predicted_exponent: Option<f64>,
    fit: Option<ScalingFit>,
    relative_deviation: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct FitSummary {
    family: &'static str,
    param: u32,
    route: SweepRoute,
    /// Generations entering the fit.
    generations: (u32, u32),
    #[serde(rename = "H_FO", skip_serializing_if = "Option::is_none")]
    h_fo: Option<OrderFit>,
    #[serde(rename = "H_SO", skip_serializing_if = "Option::is_none")]
    h_so: Option<OrderFit>,
}

fn order_fit(points: &[(f64, f64)], predicted: Option<f64>) -> OrderFit {
    match fit_exponent(points) {
        Ok(fit) => OrderFit {
            predicted_exponent: predicted,
            relative_deviation: predicted.map(|p| (fit.exponent - p).abs() / p),
            fit: Some(fit),
            error: None,
        },
        Err(e) => OrderFit {
            predicted_exponent: predicted,
            fit: None,
            relative_deviation: None,
            error: Some(e.to_string()),
        },
    }
}

fn sweep(a: &SweepArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    if a.g_min > a.g_max {
        return Err(Failure::usage(format!(
            "--g-min {} is above --g-max {}",
            a.g_min, a.g_max
        )));
    }
    if a.jobs == Some(0) {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    let (family, family_name) = match a.family {
        SweepFamily::Tree => (Family::TreeLike { m: a.param }, "tree"),
        SweepFamily::Vicsek => (Family::Vicsek { v: a.param }, "vicsek"),
    };
    let spec_of = |g: u32| FamilySpec { family, size: g };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::internal(format!("thread pool: {e}")))?;
    let rows: Vec<(u32, CoherenceReport)> = pool.install(|| {
        (a.g_min..=a.g_max)
            .into_par_iter()
            .map(|g| -> Result<_, Failure> {
                let spec = spec_of(g);
                let r = match a.route {
                    SweepRoute::Recursion => recursion_report(&spec, a.beta)?,
                    SweepRoute::Eigen => {
                        let n = check_spec(&spec, caps)?;
                        caps.check_dense(usize::try_from(n).unwrap_or(usize::MAX))?;
                        eigen_report(&spec.build(caps)?, a.beta, caps)?
                    }
                };
                Ok((g, r.restrict(a.order)))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["family", "param", "g", "N", "S", "S2", "H_FO", "H_SO", "route"])?;
    for (g, r) in &rows {
        w.write_record([
            family_name.to_string(),
            a.param.to_string(),
            g.to_string(),
            r.num_nodes.clone(),
            cell(r.s),
            cell(r.s2),
            cell(r.h_fo),
            cell(r.h_so),
            r.route.name().to_string(),
        ])?;
    }

    let window = &rows[rows.len().saturating_sub(FIT_WINDOW as usize)..];
    let points = |h: fn(&CoherenceReport) -> Option<f64>| -> Vec<(f64, f64)> {
        window
            .iter()
            .filter_map(|(_, r)| Some((r.num_nodes.parse::<f64>().ok()?, h(r)?)))
            .collect()
    };
    let predicted = coherence_exponents(family);
    let summary = FitSummary {
        family: family_name,
        param: a.param,
        route: a.route,
        generations: (window[0].0, window[window.len() - 1].0),
        h_fo: a
            .order
            .includes(Order::First)
            .then(|| order_fit(&points(|r| r.h_fo), predicted.map(|p| p.0))),
        h_so: a
            .order
            .includes(Order::Second)
            .then(|| order_fit(&points(|r| r.h_so), predicted.map(|p| p.1))),
    };

    let mut text = manifest.comment()? + &csv_string(w)?;
    match &a.fit_out {
        Some(path) => emit(Some(path), &json_with_manifest(manifest, &summary)?)?,
        None => text += &format!("# fit {}\n", serde_json::to_string(&summary)?),
    }
    emit(out, &text)
}

fn outcome<T: Serialize>(r: fractal_coherence::Result<T>) -> Result<Value, Failure> {
    match r {
        Ok(v) => Ok(serde_json::to_value(v)?),
        Err(e) if e.is_internal() => Err(e.into()),
        Err(e) => Ok(json!({ "error": e.to_string() })),
    }
}

#[derive(Serialize)]
struct DimensionOutput {
    graph: String,
    #[serde(rename = "N")]
    num_nodes: usize,
    analytic: Option<DimensionInfo>,
    ball_growth: Value,
    spectral: Value,
}

fn dimension(a: &DimensionArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    if a.table {
        let rows = coherence_table(a.beta, a.g_max)?;
        return emit(out, &json_with_manifest(manifest, &json!({ "rows": rows }))?);
    }
    let (g, spec) = load_graph(&a.graph, caps)?;
    let ball = outcome(ball_growth_dimension(&g, a.extra_centers, a.seed))?;
    let spectral = outcome(
        caps.check_dense(g.num_nodes())
            .and_then(|()| SpectrumSummary::of_graph(&g, caps))
            .and_then(|s| estimate_spectral_dimension(&s)),
    )?;
    let both_failed = ball.get("error").is_some() && spectral.get("error").is_some();
    let body = DimensionOutput {
        graph: g.label().to_string(),
        num_nodes: g.num_nodes(),
        analytic: spec.map(|s| s.dimensions()),
        ball_growth: ball,
        spectral,
    };
    emit(out, &json_with_manifest(manifest, &body)?)?;
    if both_failed {
        Err(Failure::usage("the graph is too small for either dimension estimate"))
    } else {
        Ok(())
    }
}

fn verify(a: &VerifyArgs, caps: &Caps, manifest: &RunManifest, out: Option<&Path>) -> Result<(), Failure> {
    let checks: Vec<CheckResult> = match a.target {
        VerifyTarget::Vicsek { v, g_max } => verify_vicsek(v, g_max, caps)?,
        VerifyTarget::Tree { m, g_max } => verify_tree(m, g_max, caps)?,
    };
    let passed = checks.iter().filter(|c| c.passed).count();
    let text = if a.json {
        json_with_manifest(manifest, &json!({ "checks": checks, "passed": passed, "total": checks.len() }))?
    } else {
        let mut s = manifest.comment()?;
        for c in &checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s += &format!("{tag} {}: {}\n", c.name, c.detail);
        }
        s += &format!("{passed} of {} checks passed\n", checks.len());
        s
    };
    emit(out, &text)?;
    if passed == checks.len() {
        Ok(())
    } else {
        Err(Failure::internal(format!("{} identity checks failed", checks.len() - passed)))
    }
}
