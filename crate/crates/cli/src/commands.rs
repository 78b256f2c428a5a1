use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use mfglht::bootstrap::{bootstrap_test_with, BootstrapOptions, DEFAULT_REPLICATES};
use mfglht::funcdata::{ingest_long_csv, reconstruct, write_long_csv, ColumnSchema, RawObservation, ReconstructMethod};
use mfglht::glht::{asymptotic_power, run_test, AsymptoticPowerInput, PowerMode, TestOptions};
use mfglht::harness::{resolve_hypothesis, run_experiment_logged, Experiment, Generator, Method, ResultTable, TableRow};
use mfglht::simgen::{named_sizes, sim1_covariance_surface, sim1_mean, ErrorDist, Sim1Config, Sim2Config, Sim2Scenario};
use mfglht::{Grid, SampleSet};
use serde::Serialize;

use crate::args::{DataArgs, SimArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_grid(text: &str) -> Result<Grid> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, m] = parts.as_slice() else {
        return Err(usage(format!("--grid expects `a,b,M`, got `{text}`")));
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("--grid: `{s}` is not a number")));
    let m = m.parse::<usize>().map_err(|_| usage(format!("--grid: `{m}` is not a point count")))?;
    Ok(Grid::new(num(a)?, num(b)?, m)?)
}

/// Observed time range with one grid point per distinct observation time.
fn default_grid(obs: &[RawObservation]) -> Result<Grid> {
    let times: BTreeSet<u64> = obs.iter().map(|o| o.time.to_bits()).collect();
    let lo = obs.iter().map(|o| o.time).fold(f64::INFINITY, f64::min);
    let hi = obs.iter().map(|o| o.time).fold(f64::NEG_INFINITY, f64::max);
    Ok(Grid::new(lo, hi, times.len())?)
}

fn load_data(args: &DataArgs) -> Result<SampleSet> {
    let path = args.data.as_ref().ok_or_else(|| usage("--data is required"))?;
    let method: ReconstructMethod = match &args.smoother {
        Some(s) => s.parse().map_err(|e: mfglht::Error| usage(e.to_string()))?,
        None => ReconstructMethod::default(),
    };
    let grid = args.grid.as_deref().map(parse_grid).transpose()?;
    let obs = ingest_long_csv(path, &ColumnSchema::default())?;
    let grid = match grid {
        Some(g) => g,
        None => default_grid(&obs)?,
    };
    Ok(reconstruct(&obs, &grid, method)?.set)
}

fn hypothesis_text(contrast: &Option<String>, hypothesis: &Option<String>) -> Result<Option<String>> {
    match (contrast, hypothesis) {
        (Some(_), Some(_)) => Err(usage("give either --contrast or --hypothesis, not both")),
        (Some(t), None) | (None, Some(t)) => Ok(Some(t.clone())),
        (None, None) => Ok(None),
    }
}

/// Malformed or mis-sized coefficient matrices are usage errors.
fn resolve(text: &str, k: usize) -> Result<nalgebra::DMatrix<f64>> {
    let g = resolve_hypothesis(text, k).map_err(|e| usage(e.to_string()))?;
    if g.ncols() != k {
        return Err(usage(format!("coefficient matrix has {} columns but there are {k} groups", g.ncols())));
    }
    Ok(g)
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        Some(a) => Err(usage(format!("--alpha {a} outside (0, 1)"))),
        None => Ok(()),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Data(e.into())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::Data(e.into()))
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.into()))?;
    text.push('\n');
    emit(out, text.as_bytes())
}

pub fn test(args: DataArgs) -> Result<()> {
    let text = hypothesis_text(&args.contrast, &args.hypothesis)?.unwrap_or_else(|| "anova".into());
    let alphas = if args.alpha.is_empty() { vec![0.05] } else { args.alpha.clone() };
    check_alphas(&alphas)?;
    let set = load_data(&args)?;
    let g = resolve(&text, set.k())?;
    let opts = TestOptions { adjusted: !args.no_adjust, alphas, ..Default::default() };
    let report = run_test(&set, &g, &opts)?;
    emit_json(args.out.as_deref(), &report)
}

pub fn bootstrap(args: DataArgs) -> Result<()> {
    let text = hypothesis_text(&args.contrast, &args.hypothesis)?.unwrap_or_else(|| "anova".into());
    let b = args.b.unwrap_or(DEFAULT_REPLICATES);
    if b == 0 {
        return Err(usage("--B must be at least 1"));
    }
    let set = load_data(&args)?;
    let g = resolve(&text, set.k())?;
    let opts = BootstrapOptions { replicates: b, seed: args.seed.unwrap_or(0), ..Default::default() };
    let report = bootstrap_test_with(&set, &g, &opts)?;
    let report = if args.keep_stats { report } else { report.without_stats() };
    emit_json(args.out.as_deref(), &report)
}

pub fn reconstruct_cmd(args: DataArgs) -> Result<()> {
    let set = load_data(&args)?;
    let mut buf = Vec::new();
    write_long_csv(&set, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}

fn parse_sizes(design: &str, text: Option<&str>) -> Result<Option<Vec<usize>>> {
    let Some(text) = text else { return Ok(None) };
    if let Some(s) = named_sizes(design, text.trim()) {
        return Ok(Some(s));
    }
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| usage(format!("--sizes: `{s}` is not n1/n2/n3 or a size list"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn sim1_base(args: &SimArgs) -> Result<Sim1Config> {
    let mut cfg = Sim1Config::default();
    if let Some(s) = parse_sizes("sim1", args.sizes.as_deref())? {
        cfg.sizes = s;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(d) = &args.dist {
        cfg.error_dist = d.parse::<ErrorDist>().map_err(|e| usage(e.to_string()))?;
    }
    Ok(cfg)
}

/// One generator per table row: the Cartesian product of the listed settings.
fn generators(args: &SimArgs) -> Result<Vec<Generator>> {
    let design = args.design.as_deref().unwrap_or("sim1");
    match design {
        "sim1" => {
            if !args.sigma.is_empty() || !args.frac.is_empty() || args.no_smooth {
                return Err(usage("--sigma, --a and --no-smooth apply to sim2 only"));
            }
            let base = sim1_base(args)?;
            let rhos = if args.rho.is_empty() { vec![base.rho] } else { args.rho.clone() };
            let deltas = if args.delta.is_empty() { vec![0.0] } else { args.delta.clone() };
            let mut out = Vec::new();
            for &rho in &rhos {
                for &delta in &deltas {
                    let cfg = Sim1Config { rho, delta, ..base.clone() };
                    cfg.validate().map_err(|e| usage(e.to_string()))?;
                    out.push(Generator::Sim1(cfg));
                }
            }
            Ok(out)
        }
        "sim2" => {
            if !args.rho.is_empty() || !args.delta.is_empty() || args.dist.is_some() {
                return Err(usage("--rho, --delta and --dist apply to sim1 only"));
            }
            let mut base = Sim2Config { smooth: !args.no_smooth, ..Default::default() };
            if let Some(s) = parse_sizes("sim2", args.sizes.as_deref())? {
                base.sizes = s;
            }
            if let Some(m) = args.m {
                base.m = m;
            }
            let mut scenarios: Vec<Sim2Scenario> = args.sigma.iter().map(|&sigma| Sim2Scenario::S1 { sigma }).collect();
            scenarios.extend(args.frac.iter().map(|&a| Sim2Scenario::S2 { a }));
            if scenarios.is_empty() {
                scenarios.push(base.scenario);
            }
            scenarios
                .into_iter()
                .map(|scenario| {
                    let cfg = Sim2Config { scenario, ..base.clone() };
                    cfg.validate().map_err(|e| usage(e.to_string()))?;
                    Ok(Generator::Sim2(cfg))
                })
                .collect()
        }
        other => Err(usage(format!("unknown design `{other}` (expected sim1 or sim2)"))),
    }
}

fn single_alpha(alphas: &[f64]) -> Result<f64> {
    match alphas {
        [] => Ok(0.05),
        [a] => {
            check_alphas(&[*a])?;
            Ok(*a)
        }
        _ => Err(usage("this subcommand takes a single --alpha")),
    }
}

pub fn simulate(args: SimArgs) -> Result<()> {
    let default_hyp = if args.design.as_deref() == Some("sim2") { "anova" } else { "G1" };
    let hypothesis = hypothesis_text(&args.contrast, &args.hypothesis)?.unwrap_or_else(|| default_hyp.into());
    let alpha = single_alpha(&args.alpha)?;
    let methods: Vec<Method> = if args.method.is_empty() {
        vec![Method::New]
    } else {
        args.method.iter().map(|m| m.parse::<Method>().map_err(|e| usage(e.to_string()))).collect::<Result<_>>()?
    };
    let reps = args.reps.unwrap_or(1000);
    let format = args.format.as_deref().unwrap_or("csv");
    if !matches!(format, "csv" | "text") {
        return Err(usage(format!("unknown --format `{format}` (expected csv or text)")));
    }
    let gens = generators(&args)?;
    if args.log.is_some() && gens.len() > 1 {
        return Err(usage("--log needs a single table row"));
    }
    resolve(&hypothesis, gens[0].k())?;

    let mut table = ResultTable::new(methods.iter().map(|m| m.label().to_string()).collect());
    for generator in gens {
        let (dist, sizes, m, setting) = generator.row_labels();
        let exp = Experiment {
            generator,
            hypothesis: hypothesis.clone(),
            methods: methods.clone(),
            reps,
            alpha,
            seed: args.seed.unwrap_or(0),
            bootstrap_b: args.b.unwrap_or(DEFAULT_REPLICATES),
            ..Default::default()
        };
        let res = run_experiment_logged(&exp, args.log.as_deref())?;
        let cells = methods.iter().map(|&m| res.percent(m).expect("method was run")).collect();
        table.push(TableRow { dist, sizes, m, setting, cells })?;
    }

    let bytes = if format == "csv" {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        buf
    } else {
        table.render_text().into_bytes()
    };
    emit(args.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct PowerRow {
    rho: f64,
    delta: f64,
    power: f64,
}

#[derive(Serialize)]
struct PowerReport {
    hypothesis: String,
    sizes: Vec<usize>,
    #[serde(rename = "M")]
    m: usize,
    alpha: f64,
    mode: &'static str,
    rows: Vec<PowerRow>,
}

pub fn power(args: SimArgs) -> Result<()> {
    if args.design.as_deref().is_some_and(|d| d != "sim1") {
        return Err(usage("power is available for the sim1 design only"));
    }
    let hypothesis = hypothesis_text(&args.contrast, &args.hypothesis)?.unwrap_or_else(|| "G1".into());
    let alpha = single_alpha(&args.alpha)?;
    let (mode, mode_label) = match args.mode.as_deref().unwrap_or("normal") {
        "normal" => (PowerMode::Normal, "normal"),
        "finite-d" => (PowerMode::FiniteD, "finite-d"),
        other => return Err(usage(format!("unknown --mode `{other}` (expected normal or finite-d)"))),
    };
    let base = sim1_base(&args)?;
    let rhos = if args.rho.is_empty() { vec![base.rho] } else { args.rho.clone() };
    let deltas = if args.delta.is_empty() { vec![0.0] } else { args.delta.clone() };
    let g = resolve(&hypothesis, base.sizes.len())?;
    let n: usize = base.sizes.iter().sum();
    let tau: Vec<f64> = base.sizes.iter().map(|&s| s as f64 / n as f64).collect();

    let mut rows = Vec::new();
    for &rho in &rhos {
        for &delta in &deltas {
            let cfg = Sim1Config { rho, delta, ..base.clone() };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let k = cfg.sizes.len();
            let mut means = Vec::with_capacity(k);
            let mut gamma = Vec::with_capacity(k);
            for a in 1..=k {
                let mean = sim1_mean(a, &cfg)?;
                means.push((0..cfg.m).flat_map(|t| (0..cfg.p).map(move |h| (h, t))).map(|(h, t)| mean[(h, t)]).collect());
                gamma.push(sim1_covariance_surface(a, &cfg)?);
            }
            let input = AsymptoticPowerInput {
                means,
                tau: tau.clone(),
                gamma,
                grid: cfg.grid()?,
                g: g.clone(),
                n: n as f64,
                alpha,
                mode,
                policy: Default::default(),
            };
            rows.push(PowerRow { rho, delta, power: asymptotic_power(&input)? });
        }
    }
    let report = PowerReport { hypothesis, sizes: base.sizes, m: base.m, alpha, mode: mode_label, rows };
    emit_json(args.out.as_deref(), &report)
}
