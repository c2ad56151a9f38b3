//! Command-line driver: parses flags (with an optional key=value config
//! file; flags win), dispatches to the library, prints a CSV table, and
//! appends a JSON-lines run record.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use wilson_lab::bargmann::{auto_degree, kernel_xi_inner, FockWorkspace, KernelPoint};
use wilson_lab::estimator::{
    exact_su2_free_field, positivity_probe, potential, ratio_estimate, su2_free_field_mc,
    wilson_mc, RunParams,
};
use wilson_lab::field::{sample_field, WienerConfig};
use wilson_lab::lie::{
    build_so_basis, build_su_basis, casimir, casimir_scalar, standard_rep, structure_constants,
    GroupKind, LieBasis,
};
use wilson_lab::quad::SurfaceQuadrature;
use wilson_lab::record::{
    append_jsonl, csv_table, fmt_g17, write_text, Command, OutputFormat, RunConfig, RunRecord,
};
use wilson_lab::surface::{
    area, default_order, nu_norm_kernel, nu_norm_kernel_quad, RectSurface,
};
use wilson_lab::ym::{make_wgrid, YmContext};
use wilson_lab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "wilson-lab", about = "Wilson loop Monte-Carlo laboratory", version)]
struct Cli {
    /// Optional key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Lie group family: su or so.
    #[arg(long)]
    group: Option<String>,
    /// Group size N.
    #[arg(long)]
    n: Option<usize>,
    /// Resolution(s), comma-separated and strictly increasing.
    #[arg(long)]
    kappa: Option<String>,
    /// Spatial edge vector components of the rectangle.
    #[arg(long)]
    ax: Option<f64>,
    #[arg(long)]
    ay: Option<f64>,
    #[arg(long)]
    az: Option<f64>,
    /// Temporal edge length.
    #[arg(long)]
    t: Option<f64>,
    /// Truncation degree, an integer or "auto".
    #[arg(long)]
    degree: Option<String>,
    /// Discarded-mass bound for the truncation.
    #[arg(long)]
    tail_eps: Option<f64>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    w_nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Damping normalization constant.
    #[arg(long)]
    c_tilde: Option<f64>,
    /// Output file for the record or CSV table.
    #[arg(long)]
    out: Option<String>,
    /// Output format for --out: csv or jsonl.
    #[arg(long)]
    format: Option<String>,
    /// Separations for the potential table, comma-separated.
    #[arg(long)]
    r: Option<String>,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Dump generators, structure constants, and Casimir scalar as JSON.
    Algebra(CommonArgs),
    /// Quadrature surface area of the rectangle.
    Area(CommonArgs),
    /// Loop-functional norm ||nu||^2 / kappa^2 per kappa.
    NuNorm(CommonArgs),
    /// Full weighted Wilson loop estimate at one kappa.
    Wilson(CommonArgs),
    /// Wilson estimates across a kappa list.
    Sweep(CommonArgs),
    /// Static potential table V(R).
    Potential(CommonArgs),
    /// Positivity probe of the interaction correction.
    Probe(CommonArgs),
    /// Run the built-in invariant suite.
    Selftest(CommonArgs),
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} entry {p:?}")))
        })
        .collect()
}

fn parse_group(s: &str) -> Result<GroupKind> {
    match s.to_ascii_lowercase().as_str() {
        "su" => Ok(GroupKind::Su),
        "so" => Ok(GroupKind::So),
        other => Err(Error::InvalidParameter(format!("unknown group {other:?} (use su or so)"))),
    }
}

/// Applies one key=value assignment onto the config.
fn apply_kv(cfg: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    let bad = |what: &str| Error::InvalidParameter(format!("bad value {value:?} for {what}"));
    match key {
        "group" => cfg.group_kind = parse_group(value)?,
        "n" => cfg.n = value.parse().map_err(|_| bad("n"))?,
        "kappa" => cfg.kappas = parse_f64_list(value, "kappa")?,
        "ax" => cfg.a[0] = value.parse().map_err(|_| bad("ax"))?,
        "ay" => cfg.a[1] = value.parse().map_err(|_| bad("ay"))?,
        "az" => cfg.a[2] = value.parse().map_err(|_| bad("az"))?,
        "t" => cfg.t_len = value.parse().map_err(|_| bad("t"))?,
        "degree" => {
            cfg.degree = if value.eq_ignore_ascii_case("auto") {
                None
            } else {
                Some(value.parse().map_err(|_| bad("degree"))?)
            }
        }
        "tail_eps" => cfg.tail_eps = value.parse().map_err(|_| bad("tail_eps"))?,
        "n_samples" => cfg.n_samples = value.parse().map_err(|_| bad("n_samples"))?,
        "w_nodes" => cfg.w_nodes = value.parse().map_err(|_| bad("w_nodes"))?,
        "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
        "c_tilde" => cfg.c_tilde = value.parse().map_err(|_| bad("c_tilde"))?,
        "out" => cfg.out_path = Some(value.to_string()),
        "format" => {
            cfg.format = match value.to_ascii_lowercase().as_str() {
                "csv" => OutputFormat::Csv,
                "jsonl" => OutputFormat::Jsonl,
                _ => return Err(bad("format")),
            }
        }
        "r" => cfg.r_values = parse_f64_list(value, "r")?,
        other => return Err(Error::InvalidParameter(format!("unknown config key {other:?}"))),
    }
    Ok(())
}

fn load_config_file(path: &Path, cfg: &mut RunConfig) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "config file line {}: expected key=value, got {line:?}",
                lineno + 1
            ))
        })?;
        apply_kv(cfg, key.trim(), value.trim())?;
    }
    Ok(())
}

/// Builds the effective config: defaults, then file values, then flags.
fn build_config(command: Command, file: Option<&Path>, args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig { command, ..RunConfig::default() };
    if let Some(path) = file {
        load_config_file(path, &mut cfg)?;
        cfg.command = command;
    }
    if let Some(g) = &args.group {
        cfg.group_kind = parse_group(g)?;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(k) = &args.kappa {
        cfg.kappas = parse_f64_list(k, "kappa")?;
    }
    if let Some(x) = args.ax {
        cfg.a[0] = x;
    }
    if let Some(y) = args.ay {
        cfg.a[1] = y;
    }
    if let Some(z) = args.az {
        cfg.a[2] = z;
    }
    if let Some(t) = args.t {
        cfg.t_len = t;
    }
    if let Some(d) = &args.degree {
        apply_kv(&mut cfg, "degree", d)?;
    }
    if let Some(e) = args.tail_eps {
        cfg.tail_eps = e;
    }
    if let Some(n) = args.n_samples {
        cfg.n_samples = n;
    }
    if let Some(w) = args.w_nodes {
        cfg.w_nodes = w;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = args.c_tilde {
        cfg.c_tilde = c;
    }
    if let Some(o) = &args.out {
        cfg.out_path = Some(o.clone());
    }
    if let Some(f) = &args.format {
        apply_kv(&mut cfg, "format", f)?;
    }
    if let Some(r) = &args.r {
        cfg.r_values = parse_f64_list(r, "r")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn build_basis(cfg: &RunConfig) -> Result<LieBasis> {
    match cfg.group_kind {
        GroupKind::Su => build_su_basis(cfg.n),
        GroupKind::So => build_so_basis(cfg.n),
    }
}

fn run_params(cfg: &RunConfig, kappa: f64) -> RunParams {
    RunParams {
        kappa,
        a: cfg.a,
        t_len: cfg.t_len,
        n_samples: cfg.n_samples,
        n_nodes: cfg.w_nodes,
        seed: cfg.seed,
        c_tilde: cfg.c_tilde,
        eps_tail: cfg.tail_eps,
        degree: cfg.degree,
    }
}

fn cmat_json(m: &nalgebra::DMatrix<Complex64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

/// Dispatches one validated config and returns (record, CSV table).
fn run(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    match cfg.command {
        Command::Algebra => run_algebra(cfg),
        Command::Area => run_area(cfg),
        Command::NuNorm => run_nu_norm(cfg),
        Command::Wilson | Command::Sweep => run_wilson(cfg),
        Command::Potential => run_potential(cfg),
        Command::Probe => run_probe(cfg),
        Command::Selftest => run_selftest(cfg),
    }
}

fn run_algebra(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let basis = build_basis(cfg)?;
    let sc = structure_constants(&basis)?;
    let rep = standard_rep(&basis);
    let cas = casimir(&rep);
    let scalar = casimir_scalar(&rep)?;
    let mut triples = Vec::new();
    for gamma in 0..sc.dim() {
        for &(alpha, beta, v) in sc.nonzero(gamma) {
            triples.push(json!([gamma, alpha, beta, v]));
        }
    }
    let results = json!({
        "generators": basis.generators.iter().map(cmat_json).collect::<Vec<_>>(),
        "structure_constants": triples,
        "casimir_matrix": cmat_json(&cas.matrix),
        "casimir_scalar": scalar,
        "lie_dim": sc.dim(),
    });
    let rows = vec![vec![
        format!("{:?}", cfg.group_kind).to_lowercase(),
        cfg.n.to_string(),
        sc.dim().to_string(),
        fmt_g17(scalar),
    ]];
    let table = csv_table(&["group", "n", "lie_dim", "casimir_scalar"], &rows);
    Ok((RunRecord::new(cfg, results, json!(null)), table))
}

fn run_area(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let surface = RectSurface::new(cfg.a, cfg.t_len)?;
    let kappa = cfg.kappas[0];
    let order = default_order(&surface, kappa);
    let quad = SurfaceQuadrature::gauss_legendre(order, order)?;
    let a = area(&surface, &quad)?;
    let results = json!({ "area": a, "quad_order": order });
    let table = csv_table(&["ax", "ay", "az", "t", "area"], &[vec![
        fmt_g17(cfg.a[0]),
        fmt_g17(cfg.a[1]),
        fmt_g17(cfg.a[2]),
        fmt_g17(cfg.t_len),
        fmt_g17(a),
    ]]);
    Ok((RunRecord::new(cfg, results, json!(null)), table))
}

fn run_nu_norm(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let surface = RectSurface::new(cfg.a, cfg.t_len)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &kappa in &cfg.kappas {
        // The quadrature column is a cross-check of the closed form; cap its
        // order so the O(order^4) double-surface integral stays cheap.
        let order = default_order(&surface, kappa).min(96);
        let quad = SurfaceQuadrature::gauss_legendre(order, order)?;
        let closed = nu_norm_kernel(&surface, kappa);
        let quadrature = nu_norm_kernel_quad(&surface, kappa, &quad)?;
        entries.push(json!({ "kappa": kappa, "nu_norm": closed, "nu_norm_quad": quadrature }));
        rows.push(vec![fmt_g17(kappa), fmt_g17(closed), fmt_g17(quadrature)]);
    }
    let table = csv_table(&["kappa", "nu_norm", "nu_norm_quad"], &rows);
    Ok((RunRecord::new(cfg, json!({ "rows": entries }), json!(null)), table))
}

fn run_wilson(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let surface = RectSurface::new(cfg.a, cfg.t_len)?;
    let basis = build_basis(cfg)?;
    let sc = structure_constants(&basis)?;
    let rep = standard_rep(&basis);
    let kappas: &[f64] = if cfg.command == Command::Wilson {
        &cfg.kappas[..1]
    } else {
        &cfg.kappas
    };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut diags = Vec::new();
    for &kappa in kappas {
        let params = run_params(cfg, kappa);
        let (res, diag) = wilson_mc(&surface, &rep, &sc, &params)?;
        rows.push(vec![
            fmt_g17(res.kappa),
            fmt_g17(res.trace_estimate.0),
            fmt_g17(res.std_error),
            fmt_g17(res.paper_closed_form),
            res.oracle_value.map(fmt_g17).unwrap_or_default(),
            fmt_g17(res.area),
        ]);
        results.push(serde_json::to_value(&res)?);
        diags.push(serde_json::to_value(&diag)?);
    }
    let table = csv_table(
        &["kappa", "estimate", "std_error", "paper_closed_form", "oracle", "area"],
        &rows,
    );
    Ok((RunRecord::new(cfg, json!({ "rows": results }), json!({ "rows": diags })), table))
}

fn run_potential(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let tab = potential(cfg.group_kind, cfg.n, &cfg.r_values)?;
    let rows: Vec<Vec<String>> =
        tab.rows.iter().map(|&(r, v)| vec![fmt_g17(r), fmt_g17(v)]).collect();
    let table = csv_table(&["r", "potential"], &rows);
    let results = json!({
        "rows": tab.rows,
        "slope": tab.slope(),
        "linear_fit_residual": tab.linear_fit_residual(),
    });
    Ok((RunRecord::new(cfg, results, json!(null)), table))
}

fn run_probe(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let surface = RectSurface::new(cfg.a, cfg.t_len)?;
    let basis = build_basis(cfg)?;
    let sc = structure_constants(&basis)?;
    let rep = standard_rep(&basis);
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &kappa in &cfg.kappas {
        let params = run_params(cfg, kappa);
        let probe = positivity_probe(&surface, &rep, &sc, &params)?;
        rows.push(vec![
            fmt_g17(probe.kappa),
            fmt_g17(probe.min_eigenvalue),
            fmt_g17(probe.min_eigenvalue_se),
            fmt_g17(probe.magnitude),
        ]);
        results.push(serde_json::to_value(&probe)?);
    }
    let table = csv_table(&["kappa", "min_eigenvalue", "min_eigenvalue_se", "magnitude"], &rows);
    Ok((RunRecord::new(cfg, json!({ "rows": results }), json!(null)), table))
}

/// Compact invariant suite over all modules; any failure aborts with a
/// tolerance error (exit code 3).
fn run_selftest(cfg: &RunConfig) -> Result<(RunRecord, String)> {
    let mut names = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| -> Result<()> {
        if ok {
            println!("selftest {name}: ok");
            names.push(name.to_string());
            Ok(())
        } else {
            Err(Error::Tolerance(format!("selftest {name} failed: {detail}")))
        }
    };

    // Casimir identities in the standard representations.
    for n in 2..=4 {
        let rep = standard_rep(&build_su_basis(n)?);
        let s = casimir_scalar(&rep)?;
        let expect = n as f64 - 1.0 / n as f64;
        check(&format!("su{n}-casimir"), (s - expect).abs() < 1e-10, format!("{s} vs {expect}"))?;
    }
    for n in 3..=5 {
        let rep = standard_rep(&build_so_basis(n)?);
        let s = casimir_scalar(&rep)?;
        let expect = (n as f64 - 1.0) / 2.0;
        check(&format!("so{n}-casimir"), (s - expect).abs() < 1e-10, format!("{s} vs {expect}"))?;
    }

    // su(2) structure constants equal sqrt(2) * epsilon.
    let sc2 = structure_constants(&build_su_basis(2)?)?;
    let eps = |g: usize, a: usize, b: usize| -> f64 {
        match (g, a, b) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    let mut dev: f64 = 0.0;
    for g in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                dev = dev.max((sc2.get(g, a, b) - 2.0_f64.sqrt() * eps(g, a, b)).abs());
            }
        }
    }
    check("su2-structure-constants", dev < 1e-12, format!("max deviation {dev:.3e}"))?;

    // Kernel norm 1/(2 pi) and truncated agreement at |w| <= 2.
    let w = KernelPoint::from_real([1.1, -0.7, 0.9, 0.8]);
    let exact = kernel_xi_inner(0, 1, &w, 0, 1, &w, cfg.c_tilde)?.re;
    let target = 1.0 / std::f64::consts::TAU;
    check("kernel-norm-closed-form", (exact - target).abs() < 1e-14, format!("{exact}"))?;
    let ws = FockWorkspace::new(auto_degree(2.0, 1e-9, cfg.c_tilde)?)?;
    let (xi, _) = ws.xi_coeffs(0, 1, &w, cfg.c_tilde)?;
    let truncated: f64 = xi.coeffs.iter().map(|z| z.norm_sqr()).sum();
    check("kernel-norm-truncated", (truncated - target).abs() < 1e-8, format!("{truncated}"))?;

    // nu-norm closed form vs quadrature.
    let surf1 = RectSurface::new([1.0, 0.0, 0.0], 1.0)?;
    let q = SurfaceQuadrature::gauss_legendre(64, 64)?;
    let a16 = nu_norm_kernel(&surf1, 16.0);
    let q16 = nu_norm_kernel_quad(&surf1, 16.0, &q)?;
    check("nu-norm-quadrature", (a16 - q16).abs() < 1e-8, format!("{a16} vs {q16}"))?;

    // Per-sample combined-square identity of the interaction terms.
    let sc = structure_constants(&build_su_basis(2)?)?;
    let ws4 = FockWorkspace::new(8)?;
    let grid = make_wgrid(64, cfg.seed)?;
    let ctx = YmContext::new(&ws4, &sc, &grid, 4.0, cfg.c_tilde)?;
    let wiener = WienerConfig::new(4.0, &ws4, sc.dim(), cfg.seed)?;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (y, combined) = ctx.y_terms_checked(&sample_field(&wiener, i));
        worst = worst.max(((y.y1 + y.y2).re + y.y3 - combined).abs());
    }
    check("interaction-square-identity", worst < 1e-8, format!("max gap {worst:.3e}"))?;

    // Potential linearity and V_SU(3)(3) = 1.
    let su3 = potential(GroupKind::Su, 3, &[0.0, 1.0, 2.0, 3.0])?;
    check(
        "potential-linearity",
        su3.linear_fit_residual() < 1e-12 && (su3.rows[3].1 - 1.0).abs() < 1e-12,
        format!("residual {:.3e}", su3.linear_fit_residual()),
    )?;

    // Ratio estimator reduces to the plain mean under unit weights.
    let traces: Vec<Complex64> =
        (0..64).map(|i| Complex64::new((0.23 * i as f64).cos(), 0.0)).collect();
    let unit = vec![1.0; 64];
    let (est, _) = ratio_estimate(&traces, &unit, 32);
    let mean: Complex64 = traces.iter().sum::<Complex64>() / 64.0;
    check("ratio-unit-weights", (est - mean).norm() < 1e-14, format!("{est}"))?;

    // Free-field oracle against a quick scalar MC.
    let (mc, se) = su2_free_field_mc(0.1, 200_000, cfg.seed);
    let oracle = exact_su2_free_field(0.1)?;
    check("free-field-oracle", (mc - oracle).abs() < 4.0 * se, format!("{mc} vs {oracle}"))?;

    let table = csv_table(
        &["check", "status"],
        &names.iter().map(|n| vec![n.clone(), "ok".into()]).collect::<Vec<_>>(),
    );
    let results = json!({ "checks": names, "status": "pass" });
    Ok((RunRecord::new(cfg, results, json!(null)), table))
}

fn real_main() -> Result<()> {
    if let Ok(threads) = std::env::var("WILSON_LAB_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad WILSON_LAB_THREADS {threads:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        CliCommand::Algebra(a) => (Command::Algebra, a),
        CliCommand::Area(a) => (Command::Area, a),
        CliCommand::NuNorm(a) => (Command::NuNorm, a),
        CliCommand::Wilson(a) => (Command::Wilson, a),
        CliCommand::Sweep(a) => (Command::Sweep, a),
        CliCommand::Potential(a) => (Command::Potential, a),
        CliCommand::Probe(a) => (Command::Probe, a),
        CliCommand::Selftest(a) => (Command::Selftest, a),
    };
    let cfg = build_config(command, cli.config.as_deref(), args)?;
    let (record, table) = run(&cfg)?;
    print!("{table}");
    if let Some(out) = &cfg.out_path {
        match cfg.format {
            OutputFormat::Jsonl => append_jsonl(Path::new(out), &record)?,
            OutputFormat::Csv => write_text(Path::new(out), &table)?,
        }
    } else {
        println!("{}", serde_json::to_string(&record)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
