//! Subcommand pipelines: resolve the effective config, run the module
//! machinery, emit CSV/SVG plus a manifest, print a one-line summary.

use crate::args::*;
use crate::runctx::{fmt_f64, read_config_file, RunContext};
use crate::svg::{Chart, Series};
use anyhow::{Context, Result};
use gfbm_core::covariance::CovarianceOracle;
use gfbm_core::lowerclass::{
    classify_lambda_threshold, covering_sequence, evaluate_criterion, lil_statistic, Decision,
    Direction, EmpiricalPhi, LilConfig, LilMode, PhiSource, SequenceVariant, TestFunction,
};
use gfbm_core::params::{derive_indices, derive_indices_fbm, GfbmParams, ProcessTag};
use gfbm_core::simulate::{sample_ensemble_of, GridKind};
use gfbm_core::smallball::{
    default_grid_spec, estimate_phi, fit_small_ball_exponent, wilson_interval, GridSpec,
    SaturationFlag, SmallBallEstimate, SmallBallModel,
};
use serde_json::{json, Map, Value};
use std::fmt::Write as _;

/// Invalid arguments or parameter ranges: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cov(a) => cmd_cov(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Smallball(a) => cmd_smallball(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Sequences(a) => cmd_sequences(a),
        Command::Lil(a) => cmd_lil(a),
    }
}

/// File-config lookup helpers; CLI flags always win.
struct FileCfg(Value);

impl FileCfg {
    fn load(common: &CommonArgs) -> Result<FileCfg> {
        match &common.config {
            Some(path) => Ok(FileCfg(read_config_file(std::path::Path::new(path))?)),
            None => Ok(FileCfg(Value::Null)),
        }
    }
    fn f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).and_then(Value::as_f64)
    }
    fn u64(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(Value::as_u64)
    }
    fn bool(&self, key: &str) -> Option<bool> {
        self.0.get(key).and_then(Value::as_bool)
    }
    fn str(&self, key: &str) -> Option<String> {
        self.0.get(key).and_then(Value::as_str).map(str::to_string)
    }
}

struct Resolved {
    params: GfbmParams,
    rel_tol: f64,
    seed: u64,
    workers: usize,
    out: Option<String>,
    fbm_limit: bool,
}

fn resolve_common(common: &CommonArgs, cfg: &FileCfg, default_out: Option<&str>) -> Result<Resolved> {
    let paper_defaults = common.paper_defaults || cfg.bool("paper_defaults").unwrap_or(false);
    let fbm_limit = common.fbm_limit || cfg.bool("fbm_limit").unwrap_or(false);
    let (alpha, gamma) = if paper_defaults {
        (0.2, 0.1)
    } else {
        let a = common
            .alpha
            .or_else(|| cfg.f64("alpha"))
            .ok_or_else(|| usage("--alpha is required (or --paper-defaults)"))?;
        let g = common
            .gamma
            .or_else(|| cfg.f64("gamma"))
            .ok_or_else(|| usage("--gamma is required (or --paper-defaults)"))?;
        (a, g)
    };
    let params = if fbm_limit {
        derive_indices_fbm(alpha, gamma)
    } else {
        derive_indices(alpha, gamma)
    }
    .map_err(|e| usage(format!("parameter range: {e}")))?;
    let rel_tol = common
        .rel_tol
        .or_else(|| cfg.f64("rel_tol"))
        .unwrap_or(gfbm_core::covariance::DEFAULT_REL_TOL);
    let seed = common.seed.or_else(|| cfg.u64("seed")).unwrap_or(1);
    let out = common
        .out
        .clone()
        .or_else(|| cfg.str("out"))
        .or_else(|| default_out.map(str::to_string));
    Ok(Resolved {
        params,
        rel_tol,
        seed,
        workers: workers_from_env(),
        out,
        fbm_limit,
    })
}

fn effective(sub: &str, r: &Resolved, options: Map<String, Value>) -> EffectiveConfig {
    EffectiveConfig {
        subcommand: sub.to_string(),
        alpha: r.params.alpha(),
        gamma: r.params.gamma(),
        fbm_limit: r.fbm_limit,
        rel_tol: r.rel_tol,
        seed: r.seed,
        workers: r.workers,
        out: r.out.clone(),
        options,
    }
}

fn parse_process(s: Option<&str>, cfg: &FileCfg) -> Result<ProcessTag> {
    let v = s
        .map(str::to_string)
        .or_else(|| cfg.str("process"))
        .unwrap_or_else(|| "X".into());
    match v.as_str() {
        "X" | "x" | "full" => Ok(ProcessTag::Full),
        "Y" | "y" | "history" => Ok(ProcessTag::History),
        "Z" | "z" | "rl" => Ok(ProcessTag::RiemannLiouville),
        other => Err(usage(format!("unknown process {other:?} (X, Y, or Z)"))),
    }
}

fn parse_direction(s: Option<&str>, cfg: &FileCfg) -> Result<Direction> {
    let v = s
        .map(str::to_string)
        .or_else(|| cfg.str("direction"))
        .unwrap_or_else(|| "zero".into());
    match v.as_str() {
        "zero" | "0" => Ok(Direction::Zero),
        "infinity" | "inf" => Ok(Direction::Infinity),
        other => Err(usage(format!("unknown direction {other:?}"))),
    }
}

// ---------------------------------------------------------------- cov

fn cmd_cov(a: CovArgs) -> Result<()> {
    let cfg = FileCfg::load(&a.common)?;
    let r = resolve_common(&a.common, &cfg, None)?;
    let oracle = CovarianceOracle::with_rel_tol(r.params, r.rel_tol);

    if a.lamperti || cfg.bool("lamperti").unwrap_or(false) {
        let spec = a
            .t_grid
            .clone()
            .or_else(|| cfg.str("t_grid"))
            .unwrap_or_else(|| "1:8:12".into());
        let grid = parse_grid_spec(&spec, false).map_err(|e| usage(e.to_string()))?;
        let fit = oracle.fit_lamperti_decay(&grid)?;
        let mut ctx = RunContext::new(effective(
            "cov",
            &r,
            json_map(&[("lamperti", json!(true)), ("t_grid", json!(spec))]),
        ))?;
        if ctx.has_out() {
            let mut csv = String::from("t,autocov,log_autocov\n");
            let mut pts = Vec::new();
            for &t in &grid {
                let v = oracle.lamperti_autocov(t)?;
                let _ = writeln!(csv, "{},{},{}", fmt_f64(t), fmt_f64(v), fmt_f64(v.ln()));
                pts.push((t, v.ln()));
            }
            ctx.write_file("lamperti.csv", &csv)?;
            let digest = ctx.config_digest();
            let chart = Chart {
                title: "Lamperti autocovariance decay",
                x_label: "t",
                y_label: "log r(t)",
                series: vec![Series {
                    label: "log r(t)",
                    points: pts,
                    step: false,
                }],
                config_digest: &digest,
            };
            ctx.write_file("lamperti.svg", &chart.render())?;
        }
        ctx.finish()?;
        println!(
            "lamperti decay: slope {:.6} (|slope| vs kappa5 {:.4}), {} points{}",
            fit.slope,
            r.params.kappa5(),
            fit.points_used,
            if fit.truncated { ", truncated to positive prefix" } else { "" }
        );
        return Ok(());
    }

    let s = a
        .s
        .or_else(|| cfg.f64("s"))
        .ok_or_else(|| usage("--s is required"))?;
    let t = a
        .t
        .or_else(|| cfg.f64("t"))
        .ok_or_else(|| usage("--t is required"))?;
    if s < 0.0 || t < 0.0 {
        return Err(usage("time points must be >= 0"));
    }
    let tag = parse_process(a.process.as_deref(), &cfg)?;
    let v = oracle.cov(tag, s, t)?;
    let mut ctx = RunContext::new(effective(
        "cov",
        &r,
        json_map(&[
            ("s", json!(s)),
            ("t", json!(t)),
            ("process", json!(tag.label())),
        ]),
    ))?;
    if ctx.has_out() {
        let csv = format!(
            "process,s,t,cov\n{},{},{},{}\n",
            tag.label(),
            fmt_f64(s),
            fmt_f64(t),
            fmt_f64(v)
        );
        ctx.write_file("cov.csv", &csv)?;
    }
    ctx.finish()?;
    println!("{v:.9}");
    Ok(())
}

// ---------------------------------------------------------------- simulate

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let cfg = FileCfg::load(&a.common)?;
    let r = resolve_common(&a.common, &cfg, Some("gfbm-out"))?;
    let kind_s = a
        .grid_kind
        .clone()
        .or_else(|| cfg.str("grid_kind"))
        .unwrap_or_else(|| "uniform".into());
    let n = a
        .grid_n
        .or_else(|| cfg.u64("grid_n").map(|v| v as usize))
        .unwrap_or(256);
    let horizon = a.horizon.or_else(|| cfg.f64("horizon")).unwrap_or(1.0);
    let ratio = a.ratio.or_else(|| cfg.f64("ratio")).unwrap_or(0.9);
    let paths = a
        .paths
        .or_else(|| cfg.u64("paths").map(|v| v as usize))
        .unwrap_or(100);
    let tag = parse_process(a.process.as_deref(), &cfg)?;
    if n > 4096 {
        return Err(usage("grid size capped at 4096 for exact factorization"));
    }

    let kind = match kind_s.as_str() {
        "uniform" => GridKind::Uniform,
        "geometric" => GridKind::Geometric { ratio },
        other => return Err(usage(format!("unknown grid kind {other:?}"))),
    };
    let grid = gfbm_core::simulate::build_grid(kind, n, horizon)
        .map_err(|e| usage(format!("grid: {e}")))?;

    // large matrices get the relaxed per-entry tolerance unless the user
    // pinned one
    let rel_tol = if a.common.rel_tol.is_none() && cfg.f64("rel_tol").is_none() && n >= 1024 {
        gfbm_core::covariance::MATRIX_REL_TOL
    } else {
        r.rel_tol
    };
    let r = Resolved { rel_tol, ..r };
    let oracle = CovarianceOracle::with_rel_tol(r.params, r.rel_tol);
    let ens = sample_ensemble_of(&oracle, tag, &grid, paths, r.seed, r.workers)?;

    let mut options = json_map(&[
        ("grid_kind", json!(kind_s)),
        ("grid_n", json!(n)),
        ("horizon", json!(horizon)),
        ("paths", json!(paths)),
        ("process", json!(tag.label())),
    ]);
    if matches!(kind, GridKind::Geometric { .. }) {
        options.insert("ratio".into(), json!(ratio));
    }
    let mut ctx = RunContext::new(effective("simulate", &r, options))?;
    ctx.note_seed(r.seed);

    let grid_desc = match kind {
        GridKind::Uniform => format!("uniform:{n}:{horizon}"),
        GridKind::Geometric { ratio } => format!("geometric:{n}:{horizon}:{ratio}"),
    };
    let mut csv = format!(
        "# gfbm-ensemble v1, alpha={}, gamma={}, seed={}, grid={}\n",
        r.params.alpha(),
        r.params.gamma(),
        r.seed,
        grid_desc
    );
    csv.push_str(
        &grid
            .points()
            .iter()
            .map(|&t| fmt_f64(t))
            .collect::<Vec<_>>()
            .join(","),
    );
    csv.push('\n');
    for i in 0..paths {
        let row = ens
            .path(i)
            .iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",");
        csv.push_str(&row);
        csv.push('\n');
    }
    ctx.write_file("ensemble.csv", &csv)?;
    ctx.finish()?;
    println!(
        "simulated {} paths of {} on {} points (jitter {:.1e})",
        paths,
        tag.label(),
        n,
        ens.factor_jitter_used
    );
    Ok(())
}

// ---------------------------------------------------------------- smallball

fn cmd_smallball(a: SmallballArgs) -> Result<()> {
    let cfg = FileCfg::load(&a.common)?;
    let r = resolve_common(&a.common, &cfg, Some("gfbm-out"))?;
    let theta_s = a
        .theta
        .clone()
        .or_else(|| cfg.str("theta"))
        .unwrap_or_else(|| "0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0".into());
    let thetas = parse_f64_list(&theta_s).map_err(|e| usage(e.to_string()))?;
    if thetas.iter().any(|&t| t <= 0.0) {
        return Err(usage("theta values must be > 0"));
    }
    let horizon = a.horizon.or_else(|| cfg.f64("horizon")).unwrap_or(1.0);
    let paths = a.paths.or_else(|| cfg.u64("paths")).unwrap_or(10_000);
    let no_refine = a.no_refine || cfg.bool("no_refine").unwrap_or(false);

    let explicit_grid = a.grid_n.or_else(|| cfg.u64("grid_n").map(|v| v as usize));
    let base_spec = match explicit_grid {
        Some(n) => {
            let kind_s = a
                .grid_kind
                .clone()
                .or_else(|| cfg.str("grid_kind"))
                .unwrap_or_else(|| "geometric".into());
            let ratio = a.ratio.or_else(|| cfg.f64("ratio")).unwrap_or(0.9);
            let kind = match kind_s.as_str() {
                "uniform" => GridKind::Uniform,
                "geometric" => GridKind::Geometric { ratio },
                other => return Err(usage(format!("unknown grid kind {other:?}"))),
            };
            GridSpec { kind, n }
        }
        None => default_grid_spec(&r.params),
    };

    let oracle = CovarianceOracle::with_rel_tol(r.params, r.rel_tol);
    let mut estimates: Vec<SmallBallEstimate> = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        let seed = r.seed + i as u64;
        let mut spec = base_spec;
        let mut est = estimate_phi(&oracle, theta, horizon, &spec, paths, seed, r.workers)?;
        if !no_refine && explicit_grid.is_none() {
            // double grid resolution until the estimate moves by less than
            // half its CI width (the discrete sup biases φ̂ upward)
            for _ in 0..3 {
                if spec.refined().n > 4096 {
                    break;
                }
                spec = spec.refined();
                let next = estimate_phi(&oracle, theta, horizon, &spec, paths, seed, r.workers)?;
                let stable = (next.p_hat - est.p_hat).abs() < 0.5 * (est.ci_high - est.ci_low);
                est = next;
                if stable {
                    break;
                }
            }
        }
        estimates.push(est);
    }

    anyhow::ensure!(!estimates.is_empty(), "nothing to emit");
    let mut options = json_map(&[
        ("theta", json!(theta_s)),
        ("horizon", json!(horizon)),
        ("paths", json!(paths)),
        ("no_refine", json!(no_refine)),
    ]);
    if let Some(n) = explicit_grid {
        options.insert("grid_n".into(), json!(n));
        options.insert("grid_kind".into(), json!(base_spec.kind.label()));
        if let GridKind::Geometric { ratio } = base_spec.kind {
            options.insert("ratio".into(), json!(ratio));
        }
    }
    let mut ctx = RunContext::new(effective("smallball", &r, options))?;

    let mut csv =
        String::from("theta,horizon,n_paths,hits,p_hat,ci_low,ci_high,grid_n,grid_kind,seed\n");
    for e in &estimates {
        ctx.note_seed(e.seed);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(e.theta),
            fmt_f64(e.horizon),
            e.n_paths,
            e.hits,
            fmt_f64(e.p_hat),
            fmt_f64(e.ci_low),
            fmt_f64(e.ci_high),
            e.grid_n,
            e.grid_kind.label(),
            e.seed
        );
    }
    ctx.write_file("smallball.csv", &csv)?;

    let fit = fit_small_ball_exponent(&estimates);
    let digest = ctx.config_digest();
    let mut series = vec![Series {
        label: "log(-log p)",
        points: estimates
            .iter()
            .filter(|e| e.flag == SaturationFlag::None)
            .map(|e| ((1.0 / e.theta).ln(), (-(e.p_hat.ln())).ln()))
            .collect(),
        step: false,
    }];
    if let Ok(f) = &fit {
        let xs: Vec<f64> = estimates.iter().map(|e| (1.0 / e.theta).ln()).collect();
        let (lo, hi) = (
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        series.push(Series {
            label: "fit",
            points: vec![
                (lo, f.intercept + f.slope * lo),
                (hi, f.intercept + f.slope * hi),
            ],
            step: false,
        });
    }
    let chart = Chart {
        title: "Small-ball exponent fit",
        x_label: "log(1/theta)",
        y_label: "log(-log p_hat)",
        series,
        config_digest: &digest,
    };
    ctx.write_file("smallball.svg", &chart.render())?;
    ctx.finish()?;

    // fitted two-sided rate-envelope constant, the default K₁ for dyadic
    // multiplicity bounds downstream
    let k1 = gfbm_core::smallball::fit_k1(&estimates, r.params.beta());
    match fit {
        Ok(f) => println!(
            "estimated {} thetas; exponent slope {:.4} +- {:.4} (1/beta = {:.4}); \
             fitted rate constant ~ {:.4} (intercept, not an asserted bound); fitted K1 = {}",
            estimates.len(),
            f.slope,
            f.stderr,
            1.0 / r.params.beta(),
            f.intercept.exp(),
            k1.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
        ),
        Err(e) => println!("estimated {} thetas; no exponent fit: {e}", estimates.len()),
    }
    Ok(())
}

// ---------------------------------------------------------------- classify

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let cfg = FileCfg::load(&a.common)?;
    // model-only runs don't need process parameters
    let have_params = a.common.alpha.is_some() || a.common.paper_defaults || cfg.f64("alpha").is_some();
    let family = a
        .family
        .clone()
        .or_else(|| cfg.str("family"))
        .unwrap_or_else(|| "f-lambda".into());
    if family != "f-lambda" {
        return Err(usage(format!("unsupported family {family:?}")));
    }
    let direction = parse_direction(a.direction.as_deref(), &cfg)?;
    let grid_s = a
        .lambda_grid
        .clone()
        .or_else(|| cfg.str("lambda_grid"))
        .unwrap_or_else(|| "0.25:4:16".into());
    let lambdas = parse_grid_spec(&grid_s, true).map_err(|e| usage(e.to_string()))?;

    let (phi, beta, h, analytic, mut r) = if let Some(model_s) =
        a.model.clone().or_else(|| cfg.str("model"))
    {
        let (kappa, beta) = parse_model(&model_s).map_err(|e| usage(e.to_string()))?;
        let model = SmallBallModel::new(kappa, beta)
            .ok_or_else(|| usage("model needs kappa > 0 and 0 < beta < 1"))?;
        let (h, r) = if have_params {
            let r = resolve_common(&a.common, &cfg, Some("gfbm-out"))?;
            (r.params.h(), r)
        } else {
            // the f_lambda ratio is H-free; use a placeholder parameterization
            let mut common = a.common.clone();
            common.alpha = Some(0.2);
            common.gamma = Some(0.1);
            (0.5, resolve_common(&common, &cfg, Some("gfbm-out"))?)
        };
        (
            PhiSource::Parametric(model),
            beta,
            h,
            Some(model.kappa.powf(model.beta)),
            r,
        )
    } else if let Some(path) = a.empirical.clone().or_else(|| cfg.str("empirical")) {
        let r = resolve_common(&a.common, &cfg, Some("gfbm-out"))?;
        let beta = r.params.beta();
        let estimates = read_smallball_csv(std::path::Path::new(&path))?;
        let emp = EmpiricalPhi::from_estimates(&estimates, beta)
            .ok_or_else(|| usage("empirical table needs >= 2 usable estimates with decaying tail"))?;
        (PhiSource::Empirical(emp), beta, r.params.h(), None, r)
    } else {
        return Err(usage("classify needs --model kappa=..,beta=.. or --empirical file"));
    };
    r.seed = 0; // no randomness in classification

    let mut verdicts = Vec::new();
    for &lambda in &lambdas {
        let xi = TestFunction::f_lambda(lambda, h, beta, direction)
            .map_err(|e| usage(format!("f_lambda: {e}")))?;
        let v = evaluate_criterion(&xi, h, &phi, direction)?;
        verdicts.push((lambda, v));
    }
    let last_finite = verdicts
        .iter()
        .rposition(|(_, v)| v.decision == Decision::Finite);
    let first_infinite = verdicts
        .iter()
        .position(|(_, v)| v.decision == Decision::Infinite);
    let flip = match (last_finite, first_infinite) {
        (Some(i), Some(j)) if j > i => Some((verdicts[i].0 * verdicts[j].0).sqrt()),
        _ => None,
    };
    // cross-check with the dedicated scanner in model mode
    if let (PhiSource::Parametric(model), Some(f)) = (&phi, flip) {
        if let Ok(scan) = classify_lambda_threshold(model, direction, &lambdas) {
            debug_assert!((scan.flip - f).abs() < 1e-12 * f);
        }
    }

    let options = json_map(&[
        ("family", json!(family)),
        ("lambda_grid", json!(grid_s)),
        ("direction", json!(direction.label())),
        ("phi", json!(phi.kind_label())),
    ]);
    let mut ctx = RunContext::new(effective("classify", &r, options))?;

    let mut csv = String::from("lambda,decision,integral_value,ln_w_reached,slope_exponent\n");
    for (l, v) in &verdicts {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(*l),
            v.decision.label(),
            fmt_f64(v.integral_value),
            fmt_f64(v.ln_w_reached),
            v.slope_exponent.map(fmt_f64).unwrap_or_default()
        );
    }
    ctx.write_file("classify.csv", &csv)?;

    // informational: the necessity-side hypothesis that ξ(t)/t^{(1+ε₀)H}
    // is non-increasing, sampled at ε₀ = 0.5 for the scanned family
    let necessity_hint = TestFunction::f_lambda(lambdas[0], h, beta, direction)
        .map(|xi| xi.necessity_hypothesis_nonincreasing(h, 0.5))
        .unwrap_or(false);
    let jdoc = json!({
        "schema": "lowerclass-v1",
        "kind": "criterion-scan",
        "direction": direction.label(),
        "phi": phi.kind_label(),
        "flip": flip,
        "analytic_threshold": analytic,
        "necessity_hypothesis_nonincreasing_eps0_0.5": necessity_hint,
        "verdicts": verdicts.iter().map(|(l, v)| json!({
            "lambda": l,
            "decision": v.decision.label(),
            "boundedness": matches!(v.boundedness, gfbm_core::lowerclass::Boundedness::Bounded),
            "integral_value": if v.integral_value.is_finite() { json!(v.integral_value) } else { json!("infinity") },
            "ln_w_reached": v.ln_w_reached,
            "panels": v.panels,
        })).collect::<Vec<_>>(),
    });
    ctx.write_file("classify.json", &serde_json::to_string_pretty(&jdoc)?)?;
    ctx.finish()?;

    match (flip, analytic) {
        (Some(f), Some(t)) => println!("flip at lambda ~ {f:.4} (analytic kappa^beta = {t:.4})"),
        (Some(f), None) => println!("flip at lambda ~ {f:.4}"),
        (None, _) => println!("no flip on the lambda grid (all verdicts agree)"),
    }
    Ok(())
}

fn read_smallball_csv(path: &std::path::Path) -> Result<Vec<SmallBallEstimate>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(f.len() >= 10, "bad smallball.csv row: {line:?}");
        let theta: f64 = f[0].parse()?;
        let horizon: f64 = f[1].parse()?;
        let n_paths: u64 = f[2].parse()?;
        let hits: u64 = f[3].parse()?;
        let (ci_low, ci_high) = wilson_interval(hits, n_paths);
        let grid_n: usize = f[7].parse()?;
        let seed: u64 = f[9].parse()?;
        out.push(SmallBallEstimate {
            theta,
            horizon,
            n_paths,
            hits,
            p_hat: hits as f64 / n_paths as f64,
            ci_low,
            ci_high,
            grid_n,
            grid_kind: if f[8] == "uniform" {
                GridKind::Uniform
            } else {
                GridKind::Geometric { ratio: 0.9 }
            },
            seed,
            flag: if hits == 0 {
                SaturationFlag::NoHits
            } else if hits == n_paths {
                SaturationFlag::AllHits
            } else {
                SaturationFlag::None
            },
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------- sequences

fn cmd_sequences(a: SequencesArgs) -> Result<()> {
    let cfg = FileCfg::load(&a.common)?;
    let r = resolve_common(&a.common, &cfg, Some("gfbm-out"))?;
    let kind = a
        .kind
        .clone()
        .or_else(|| cfg.str("kind"))
        .unwrap_or_else(|| "lower".into());

    match kind.as_str() {
        "covering" => {
            let b = a.b.or_else(|| cfg.f64("b")).unwrap_or(1.0);
            let eps = a.eps.or_else(|| cfg.f64("eps")).unwrap_or(1e-4);
            let rep = covering_sequence(&r.params, b, eps)?;
            let mut ctx = RunContext::new(effective(
                "sequences",
                &r,
                json_map(&[("kind", json!("covering")), ("b", json!(b)), ("eps", json!(eps))]),
            ))?;
            let mut csv = String::from("n,t_n\n");
            for (n, t) in &rep.terms_sampled {
                let _ = writeln!(csv, "{n},{}", fmt_f64(*t));
            }
            ctx.write_file("covering.csv", &csv)?;
            let jdoc = json!({
                "schema": "lowerclass-v1",
                "kind": "covering-sequence",
                "b": b, "eps": eps,
                "l_eps": rep.l_eps,
                "truncated": rep.truncated,
                "rho": rep.rho,
                "band_min": rep.band_min,
                "band_max": rep.band_max,
            });
            ctx.write_file("sequences.json", &serde_json::to_string_pretty(&jdoc)?)?;
            ctx.finish()?;
            println!(
                "covering: L_eps = {}, a_n n^(-1/rho) in [{:.4}, {:.4}] (rho = {:.4})",
                rep.l_eps, rep.band_min, rep.band_max, rep.rho
            );
        }
        "lower" => {
            let lambda = a.lambda.or_else(|| cfg.f64("lambda")).unwrap_or(1.0);
            let direction = parse_direction(a.direction.as_deref(), &cfg)?;
            let variant_s = a
                .variant
                .clone()
                .or_else(|| cfg.str("variant"))
                .unwrap_or_else(|| "sufficiency".into());
            let variant = match variant_s.as_str() {
                "sufficiency" => SequenceVariant::Sufficiency,
                "necessity" => SequenceVariant::Necessity,
                other => return Err(usage(format!("unknown variant {other:?}"))),
            };
            let terms = a
                .terms
                .or_else(|| cfg.u64("terms").map(|v| v as usize))
                .unwrap_or(60);
            let big_l = a
                .big_l
                .or_else(|| cfg.f64("big_l"))
                .unwrap_or(2.0 * r.params.h() + 0.1);
            let xi = TestFunction::f_lambda_for(lambda, &r.params, direction)
                .map_err(|e| usage(format!("f_lambda: {e}")))?;
            let rep =
                gfbm_core::lowerclass::lower_class_sequences(&r.params, &xi, big_l, direction, variant, terms)?;

            let mut ctx = RunContext::new(effective(
                "sequences",
                &r,
                json_map(&[
                    ("kind", json!("lower")),
                    ("lambda", json!(lambda)),
                    ("direction", json!(direction.label())),
                    ("variant", json!(variant_s)),
                    ("terms", json!(terms)),
                    ("big_l", json!(big_l)),
                ]),
            ))?;
            let mut csv = String::from("n,t_n,branch,residual,k_index\n");
            for (i, &t) in rep.terms.iter().enumerate() {
                let branch = if i == 0 {
                    "-".to_string()
                } else {
                    rep.branches[i - 1].label().to_string()
                };
                let residual = if i == 0 {
                    String::new()
                } else {
                    fmt_f64(rep.residuals[i - 1])
                };
                let k = rep.k_indices.get(i).map(|k| k.to_string()).unwrap_or_default();
                let _ = writeln!(csv, "{},{},{},{},{}", i + 1, fmt_f64(t), branch, residual, k);
            }
            ctx.write_file("sequences.csv", &csv)?;
            let jdoc = json!({
                "schema": "lowerclass-v1",
                "kind": "lower-class-sequence",
                "direction": direction.label(),
                "variant": variant_s,
                "lambda": lambda,
                "big_l": big_l,
                "monotone": rep.monotone,
                "chain_ok": rep.chain_ok,
                "ratio_2h_ok": rep.ratio_2h_ok,
                "range_guard": rep.range_guard,
                "terms": rep.terms,
                "branches": rep.branches.iter().map(|b| b.label()).collect::<Vec<_>>(),
                "residuals": rep.residuals,
                "k_indices": rep.k_indices,
            });
            ctx.write_file("sequences.json", &serde_json::to_string_pretty(&jdoc)?)?;
            ctx.finish()?;
            println!(
                "{} terms ({}, {}), monotone {}, final t = {:.6e}, max u-residual {:.2e}",
                rep.terms.len(),
                direction.label(),
                variant_s,
                rep.monotone,
                rep.terms.last().unwrap(),
                rep.residuals
                    .iter()
                    .zip(&rep.branches)
                    .filter(|(_, b)| **b == gfbm_core::lowerclass::Branch::U)
                    .map(|(r, _)| *r)
                    .fold(0.0, f64::max)
            );
        }
        other => return Err(usage(format!("unknown sequences kind {other:?}"))),
    }
    Ok(())
}

// ---------------------------------------------------------------- lil

fn cmd_lil(a: LilArgs) -> Result<()> {
    let cfg = FileCfg::load(&a.common)?;
    let r = resolve_common(&a.common, &cfg, Some("gfbm-out"))?;
    let process = parse_process(a.process.as_deref(), &cfg)?;
    let dir_s = a
        .direction
        .clone()
        .or_else(|| cfg.str("direction"))
        .unwrap_or_else(|| "zero".into());
    let at = a.at.or_else(|| cfg.f64("at"));
    let mode = match dir_s.as_str() {
        "zero" | "0" => LilMode::Zero,
        "infinity" | "inf" => LilMode::Infinity,
        "fixed-point" => LilMode::FixedPoint {
            t: at.ok_or_else(|| usage("fixed-point mode needs --at"))?,
        },
        other => return Err(usage(format!("unknown direction {other:?}"))),
    };
    let seeds_s = a
        .seeds
        .clone()
        .or_else(|| cfg.str("seeds"))
        .unwrap_or_else(|| "1,2,3".into());
    let seeds = parse_u64_list(&seeds_s).map_err(|e| usage(e.to_string()))?;
    let k_lo = a.k_lo.or_else(|| cfg.u64("k_lo").map(|v| v as u32)).unwrap_or(4);
    let k_hi = a.k_hi.or_else(|| cfg.u64("k_hi").map(|v| v as u32)).unwrap_or(
        if matches!(mode, LilMode::Infinity) { 20 } else { 16 },
    );
    let paths = a
        .paths
        .or_else(|| cfg.u64("paths").map(|v| v as usize))
        .unwrap_or(50);
    let ppo = a
        .points_per_octave
        .or_else(|| cfg.u64("points_per_octave").map(|v| v as usize))
        .unwrap_or(24);

    let oracle = CovarianceOracle::with_rel_tol(r.params, r.rel_tol);
    let config = LilConfig {
        process,
        mode,
        k_lo,
        k_hi,
        paths_per_seed: paths,
        points_per_octave: ppo,
        margin_octaves: 6,
        workers: r.workers,
    };
    let rep = lil_statistic(&oracle, &config, &seeds)?;

    let mut options = json_map(&[
        ("process", json!(process.label())),
        ("direction", json!(dir_s)),
        ("seeds", json!(seeds_s)),
        ("k_lo", json!(k_lo)),
        ("k_hi", json!(k_hi)),
        ("paths", json!(paths)),
        ("points_per_octave", json!(ppo)),
    ]);
    if let Some(t) = at {
        options.insert("at".into(), json!(t));
    }
    let mut ctx = RunContext::new(effective("lil", &r, options))?;
    for &s in &seeds {
        ctx.note_seed(s);
    }

    let mut csv = String::from("seed,path,min_stat\n");
    for s in &rep.per_seed {
        for (i, m) in s.minima.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", s.seed, i, fmt_f64(*m));
        }
    }
    ctx.write_file("lil_minima.csv", &csv)?;

    let digest = ctx.config_digest();
    let labels: Vec<String> = rep
        .per_seed
        .iter()
        .map(|s| format!("seed {}", s.seed))
        .collect();
    let series = rep
        .per_seed
        .iter()
        .zip(&labels)
        .map(|(s, label)| {
            let mut sorted = s.minima.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Series {
                label,
                points: sorted
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| (i as f64, m))
                    .collect(),
                step: true,
            }
        })
        .collect();
    let chart = Chart {
        title: "Chung statistic: per-path minima over dyadic checkpoints",
        x_label: "path (sorted)",
        y_label: "min_k M(t_k) (ln ln)^beta / t_k^H",
        series,
        config_digest: &digest,
    };
    ctx.write_file("lil_minima.svg", &chart.render())?;
    ctx.finish()?;
    println!(
        "lil {} {}: median of minima {:.4}, seed dispersion {:.4}",
        process.label(),
        dir_s,
        rep.median_overall,
        rep.seed_dispersion
    );
    Ok(())
}

fn json_map(entries: &[(&str, Value)]) -> Map<String, Value> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}
