//! Subcommand implementations and exit-code policy.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use toric_szego::kernels::ratio_differences;
use toric_szego::{
    character_exact, character_leading, character_trace, multiplier_table, norm_table,
    partition_counts, symbol_ratio, verify_factorization, verify_factorization_with,
    Error as CoreError, KahlerPotential, LatticePolytope, NormTable, QuadratureConfig,
};

use crate::config::{content_hash, file_stem, fmt17, RunConfig};
use crate::{CharacterCmd, Cli, Cmd, PolytopeCmd, TableArgs, VerifyCmd};

#[derive(Debug)]
pub enum CliError {
    Io(std::io::Error),
    Core(CoreError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

/// Exit codes: 2 parse (including unreadable input), 3 validation,
/// 4 numeric failure.
pub fn exit_code_for(err: &CliError) -> u8 {
    match err {
        CliError::Io(_) => 2,
        CliError::Core(CoreError::Parse(_)) => 2,
        CliError::Core(CoreError::Validation(_)) => 3,
        CliError::Core(CoreError::Capacity(_)) => 3,
        CliError::Core(CoreError::Numeric(_)) => 4,
    }
}

struct Ctx {
    run: RunConfig,
    qcfg: QuadratureConfig,
    poly: LatticePolytope,
    out_dir: Option<PathBuf>,
    allow_flagged: bool,
    stem: String,
}

impl Ctx {
    fn load(cli: &Cli, tool: &str, file: &Path, dilation: Option<u32>) -> Result<Self, CliError> {
        let bytes = fs::read(file)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| CliError::Core(CoreError::Parse(format!("not UTF-8: {e}"))))?;
        let poly = LatticePolytope::parse(&text)?;
        let seed = cli.seed.unwrap_or(0);
        let tol = cli.tol.unwrap_or(1e-8);
        let threads = resolve_threads(cli.threads);
        let qcfg = QuadratureConfig {
            rel_tol: tol,
            seed,
            ..Default::default()
        };
        qcfg.validate()?;
        let run = RunConfig {
            tool: format!("toric-szego {tool}"),
            input: file.display().to_string(),
            content_hash: content_hash(&bytes),
            dilation,
            range: None,
            tol,
            samples: None,
            seed,
            threads,
            allow_flagged: cli.allow_flagged,
        };
        Ok(Ctx {
            run,
            qcfg,
            poly,
            out_dir: cli.out_dir.clone(),
            allow_flagged: cli.allow_flagged,
            stem: file_stem(file),
        })
    }

    /// CSV with the resolved config embedded as comment lines.
    fn emit_csv(&self, name: &str, body: &str) -> Result<(), CliError> {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.run.tool);
        let _ = writeln!(
            out,
            "# config: {}",
            serde_json::to_string(&self.run).expect("config serializes")
        );
        out.push_str(body);
        self.write_out(name, &out)
    }

    fn emit_json(&self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write_out(name, &text)
    }

    fn write_out(&self, name: &str, contents: &str) -> Result<(), CliError> {
        match &self.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(name);
                fs::write(&path, contents)?;
                println!("{}", path.display());
            }
            None => print!("{contents}"),
        }
        Ok(())
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.run).expect("config serializes")
    }
}

fn resolve_threads(flag: Option<usize>) -> usize {
    let n = flag.or_else(|| {
        std::env::var("TORIC_SZEGO_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let threads = n.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    });
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    threads
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    match &cli.cmd {
        Cmd::Polytope { action } => match action {
            PolytopeCmd::Info {
                input,
                dilate,
                range,
            } => {
                let mut ctx = Ctx::load(&cli, "polytope info", &input.file, Some(*dilate))?;
                ctx.run.range = *range;
                polytope_info(&ctx, *dilate, *range)
            }
            PolytopeCmd::Delzant { input } => {
                let ctx = Ctx::load(&cli, "polytope delzant", &input.file, None)?;
                polytope_delzant(&ctx)
            }
        },
        Cmd::Partition { table } => {
            let ctx = Ctx::load(&cli, "partition", &table.file, Some(table.dilation))?;
            partition_cmd(&ctx, table.dilation)
        }
        Cmd::Norms { table } => {
            let ctx = Ctx::load(&cli, "norms", &table.file, Some(table.dilation))?;
            norms_cmd(&ctx, table.dilation)
        }
        Cmd::Multiplier { table } => {
            let ctx = Ctx::load(&cli, "multiplier", &table.file, Some(table.dilation))?;
            multiplier_cmd(&ctx, table.dilation)
        }
        Cmd::Kernel { table, samples } => {
            let mut ctx = Ctx::load(&cli, "kernel", &table.file, Some(table.dilation))?;
            ctx.run.samples = Some(*samples);
            kernel_cmd(&ctx, table.dilation, *samples)
        }
        Cmd::Verify { suite } => verify_cmd(&cli, suite),
        Cmd::Character { path } => character_cmd(&cli, path),
        Cmd::Report { table } => {
            let ctx = Ctx::load(&cli, "report", &table.file, Some(table.dilation))?;
            report_cmd(&ctx, table.dilation)
        }
    }
}

fn polytope_info(ctx: &Ctx, dilate: u32, range: Option<(u32, u32)>) -> Result<u8, CliError> {
    let poly = &ctx.poly;
    let mut text = String::new();
    let _ = writeln!(text, "polytope: {} (dim {})", ctx.stem, poly.dim());
    let _ = writeln!(text, "vertices: {:?}", poly.vertices());
    for f in poly.facets() {
        let _ = writeln!(text, "facet: <{:?}, x> <= {}", f.normal, f.offset);
    }
    let vol = poly.euclidean_volume();
    let _ = writeln!(text, "volume: {vol}");
    let delzant = poly.is_delzant();
    let _ = writeln!(text, "delzant: {}", delzant.delzant);
    let (lo, hi) = range.unwrap_or((dilate, dilate));
    let mut counts = Vec::new();
    for n in lo..=hi {
        let c = poly.ehrhart_count(n)?;
        let _ = writeln!(text, "lattice points (N={n}): {c}");
        counts.push(json!({"N": n, "points": c}));
    }
    print!("{text}");
    let summary = json!({
        "config": ctx.config_json(),
        "dim": poly.dim(),
        "vertices": poly.vertices(),
        "facets": poly.facets().iter().map(|f| json!({"normal": f.normal, "offset": f.offset})).collect::<Vec<_>>(),
        "volume": vol.to_string(),
        "delzant": delzant.delzant,
        "counts": counts,
    });
    ctx.emit_json(&format!("{}_info.json", ctx.stem), &summary)?;
    Ok(0)
}

fn polytope_delzant(ctx: &Ctx) -> Result<u8, CliError> {
    let cert = ctx.poly.is_delzant();
    if cert.delzant {
        println!("Delzant: yes");
    } else {
        let bad = cert
            .vertices
            .iter()
            .find(|c| !c.ok)
            .map(|c| {
                format!(
                    "vertex {:?}: |det|={}",
                    c.vertex,
                    c.det.map(|d| d.abs().to_string()).unwrap_or("n/a".into())
                )
            })
            .unwrap_or_default();
        println!("NOT Delzant ({bad})");
    }
    for c in &cert.vertices {
        println!(
            "vertex {:?}: edges {:?} det {:?} ok {}",
            c.vertex, c.edge_dirs, c.det, c.ok
        );
    }
    let summary = json!({
        "config": ctx.config_json(),
        "delzant": cert.delzant,
        "vertices": cert.vertices.iter().map(|c| json!({
            "vertex": c.vertex,
            "edge_dirs": c.edge_dirs,
            "det": c.det,
            "ok": c.ok,
        })).collect::<Vec<_>>(),
    });
    ctx.emit_json(&format!("{}_delzant.json", ctx.stem), &summary)?;
    Ok(0)
}

fn partition_cmd(ctx: &Ctx, n: u32) -> Result<u8, CliError> {
    let table = partition_counts(&ctx.poly, n)?;
    ctx.emit_csv(&format!("{}_partition_N{n}.csv", ctx.stem), &table.to_csv())?;
    Ok(0)
}

fn norms_with_flag_policy(ctx: &Ctx, n: u32) -> Result<(NormTable, bool), CliError> {
    let table = norm_table(&ctx.poly, n, &ctx.qcfg)?;
    let flagged = table.any_flagged();
    Ok((table, flagged))
}

fn norms_cmd(ctx: &Ctx, n: u32) -> Result<u8, CliError> {
    let (table, flagged) = norms_with_flag_policy(ctx, n)?;
    ctx.emit_csv(&format!("{}_norms_N{n}.csv", ctx.stem), &table.to_csv())?;
    if flagged && !ctx.allow_flagged {
        eprintln!("error: unconverged norm entries (rerun with --allow-flagged to accept)");
        return Ok(4);
    }
    Ok(0)
}

fn multiplier_cmd(ctx: &Ctx, n: u32) -> Result<u8, CliError> {
    let partition = partition_counts(&ctx.poly, n)?;
    let (norms, flagged) = norms_with_flag_policy(ctx, n)?;
    let mult = multiplier_table(&partition, &norms)?;
    let m = ctx.poly.dim();
    let nm = (n as f64).powi(m as i32);
    let mut body = String::new();
    for j in 1..=m {
        let _ = write!(body, "alpha_{j},");
    }
    body.push_str("P,Q,eigenvalue,nm_pq\n");
    for ((alpha, count), (norm, entry)) in partition
        .iter()
        .zip(norms.entries().iter().zip(mult.entries()))
    {
        for x in alpha {
            let _ = write!(body, "{x},");
        }
        let pq = count.to_f64().unwrap_or(f64::INFINITY) * norm.value;
        match entry {
            Some(e) => {
                let _ = writeln!(
                    body,
                    "{count},{},{},{}",
                    fmt17(norm.value),
                    fmt17(e.eigenvalue),
                    fmt17(nm * pq)
                );
            }
            None => {
                let _ = writeln!(body, "{count},{},excluded,{}", fmt17(norm.value), fmt17(0.0));
            }
        }
    }
    ctx.emit_csv(&format!("{}_multiplier_N{n}.csv", ctx.stem), &body)?;
    if flagged && !ctx.allow_flagged {
        eprintln!("error: unconverged norm entries (rerun with --allow-flagged to accept)");
        return Ok(4);
    }
    Ok(0)
}

fn kernel_cmd(ctx: &Ctx, n: u32, samples: usize) -> Result<u8, CliError> {
    let report = verify_factorization(&ctx.poly, n, samples, ctx.run.seed, &ctx.qcfg)?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["config"] = ctx.config_json();
    ctx.emit_json(&format!("{}_kernel_N{n}.json", ctx.stem), &value)?;
    Ok(0)
}

#[derive(Serialize)]
struct CheckLine {
    check: String,
    measured: f64,
    bound: f64,
    pass: bool,
}

fn verify_cmd(cli: &Cli, suite: &VerifyCmd) -> Result<u8, CliError> {
    match suite {
        VerifyCmd::Factorization {
            input,
            dilation,
            samples,
        } => {
            let mut ctx = Ctx::load(cli, "verify factorization", &input.file, Some(*dilation))?;
            ctx.run.samples = Some(*samples);
            verify_factorization_suite(&ctx, *dilation, *samples)
        }
        VerifyCmd::Characters {
            input,
            dilation,
            samples,
        } => {
            let mut ctx = Ctx::load(cli, "verify characters", &input.file, Some(*dilation))?;
            ctx.run.samples = Some(*samples);
            verify_characters_suite(&ctx, *dilation, *samples)
        }
        VerifyCmd::Asymptotics {
            input,
            ray,
            dilations,
        } => {
            let ctx = Ctx::load(cli, "verify asymptotics", &input.file, None)?;
            verify_asymptotics_suite(&ctx, ray, dilations)
        }
        VerifyCmd::All { input, ray } => {
            let ctx = Ctx::load(cli, "verify all", &input.file, None)?;
            let ray = ray.clone().unwrap_or_else(|| ctx.poly.barycenter());
            let mut worst = 0u8;
            for code in [
                verify_factorization_suite(&ctx, 6, 20)?,
                verify_characters_suite(&ctx, 4, 5)?,
                verify_asymptotics_suite(&ctx, &ray, &[8, 16, 32])?,
            ] {
                worst = worst.max(code);
            }
            Ok(worst)
        }
    }
}

fn verify_factorization_suite(ctx: &Ctx, n_max: u32, samples: usize) -> Result<u8, CliError> {
    toric_szego::kernels::factorization_preconditions(&ctx.poly)?;
    let mut checks = Vec::new();
    let mut all_pass = true;
    for n in 1..=n_max {
        let partition = partition_counts(&ctx.poly, n)?;
        let norms = norm_table(&ctx.poly, n, &ctx.qcfg)?;
        let report =
            verify_factorization_with(&ctx.poly, &partition, &norms, samples, ctx.run.seed)?;
        // the rational fast path is expected to collapse exactly
        let rational = norms
            .entries()
            .iter()
            .all(|e| e.method == toric_szego::NormMethod::ClosedForm);
        let bound = if rational { 1e-10 } else { 1e-6_f64.max(ctx.run.tol * 100.0) };
        let pass = report.max_resid_rel <= bound;
        all_pass &= pass;
        checks.push(CheckLine {
            check: format!("factorization N={n} ({samples} pairs, seed {})", ctx.run.seed),
            measured: report.max_resid_rel,
            bound,
            pass,
        });
    }
    emit_verify_report(ctx, "factorization", &checks, all_pass)
}

fn verify_characters_suite(ctx: &Ctx, n_max: u32, samples: usize) -> Result<u8, CliError> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.run.seed);
    let pot = KahlerPotential::new(&ctx.poly)?;
    let mut checks = Vec::new();
    let mut all_pass = true;
    for n in 1..=n_max {
        let norms = norm_table(&ctx.poly, n, &ctx.qcfg)?;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let phi: Vec<f64> = (0..ctx.poly.dim())
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            let exact = character_exact(&ctx.poly, n, &phi)?;
            let trace = character_trace(&pot, &norms, &phi, &ctx.qcfg)?;
            worst = worst.max((trace.value - exact).norm() / exact.norm().max(1e-300));
        }
        let bound = 1e-5;
        let pass = worst <= bound;
        all_pass &= pass;
        checks.push(CheckLine {
            check: format!("character trace vs exact N={n} ({samples} angles)"),
            measured: worst,
            bound,
            pass,
        });
    }
    emit_verify_report(ctx, "characters", &checks, all_pass)
}

fn verify_asymptotics_suite(ctx: &Ctx, ray: &[f64], dilations: &[u32]) -> Result<u8, CliError> {
    let points = symbol_ratio(&ctx.poly, ray, dilations, &ctx.qcfg)?;
    let diffs = ratio_differences(&points);
    let positive = points.iter().all(|p| !p.flagged && p.ratio > 0.0);
    let shrinking = diffs.windows(2).all(|w| w[1].abs() < w[0].abs());
    let pass = positive && shrinking && diffs.len() + 1 == points.len();
    let checks: Vec<serde_json::Value> = points
        .iter()
        .map(|p| {
            json!({
                "N": p.n,
                "alpha": p.alpha,
                "ratio": p.ratio,
                "exact": p.exact.as_ref().map(|q| q.to_string()),
            })
        })
        .collect();
    let report = json!({
        "config": ctx.config_json(),
        "suite": "asymptotics",
        "ray": ray,
        "points": checks,
        "differences": diffs,
        "pass": pass,
    });
    ctx.emit_json(&format!("{}_verify_asymptotics.json", ctx.stem), &report)?;
    Ok(if pass { 0 } else { 1 })
}

fn emit_verify_report(
    ctx: &Ctx,
    suite: &str,
    checks: &[CheckLine],
    all_pass: bool,
) -> Result<u8, CliError> {
    let report = json!({
        "config": ctx.config_json(),
        "suite": suite,
        "checks": checks,
        "pass": all_pass,
    });
    ctx.emit_json(&format!("{}_verify_{suite}.json", ctx.stem), &report)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn character_cmd(cli: &Cli, path: &CharacterCmd) -> Result<u8, CliError> {
    match path {
        CharacterCmd::Exact { table, phi } => {
            let ctx = Ctx::load(cli, "character exact", &table.file, Some(table.dilation))?;
            check_phi(&ctx, phi)?;
            let v = character_exact(&ctx.poly, table.dilation, phi)?;
            let doc = json!({
                "config": ctx.config_json(),
                "phi": phi,
                "value": {"re": v.re, "im": v.im},
            });
            ctx.emit_json(&format!("{}_character_exact.json", ctx.stem), &doc)?;
            Ok(0)
        }
        CharacterCmd::Trace { table, phi } => {
            let ctx = Ctx::load(cli, "character trace", &table.file, Some(table.dilation))?;
            check_phi(&ctx, phi)?;
            let pot = KahlerPotential::new(&ctx.poly)?;
            let norms = norm_table(&ctx.poly, table.dilation, &ctx.qcfg)?;
            let v = character_trace(&pot, &norms, phi, &ctx.qcfg)?;
            let doc = json!({
                "config": ctx.config_json(),
                "phi": phi,
                "value": {"re": v.value.re, "im": v.value.im},
                "err": v.err,
                "converged": v.converged,
            });
            ctx.emit_json(&format!("{}_character_trace.json", ctx.stem), &doc)?;
            Ok(if v.converged || ctx.allow_flagged { 0 } else { 4 })
        }
        CharacterCmd::Leading { table, phi } => {
            let ctx = Ctx::load(cli, "character leading", &table.file, Some(table.dilation))?;
            check_phi(&ctx, phi)?;
            let pot = KahlerPotential::new(&ctx.poly)?;
            let v = character_leading(&pot, table.dilation, phi, &ctx.qcfg)?;
            let doc = json!({
                "config": ctx.config_json(),
                "phi": phi,
                "value": {"re": v.value.re, "im": v.value.im},
                "err": v.err,
                "converged": v.converged,
            });
            ctx.emit_json(&format!("{}_character_leading.json", ctx.stem), &doc)?;
            Ok(if v.converged || ctx.allow_flagged { 0 } else { 4 })
        }
        CharacterCmd::Sweep { table, grid } => {
            let ctx = Ctx::load(cli, "character sweep", &table.file, Some(table.dilation))?;
            character_sweep(&ctx, table, *grid)
        }
    }
}

fn check_phi(ctx: &Ctx, phi: &[f64]) -> Result<(), CliError> {
    if phi.len() != ctx.poly.dim() {
        return Err(CliError::Core(CoreError::Validation(format!(
            "phi has {} components, polytope dimension is {}",
            phi.len(),
            ctx.poly.dim()
        ))));
    }
    Ok(())
}

fn character_sweep(ctx: &Ctx, table: &TableArgs, grid: usize) -> Result<u8, CliError> {
    use rayon::prelude::*;
    if grid == 0 {
        return Err(CliError::Core(CoreError::Validation(
            "grid must be >= 1".into(),
        )));
    }
    let n = table.dilation;
    let m = ctx.poly.dim();
    let pot = KahlerPotential::new(&ctx.poly)?;
    let norms = norm_table(&ctx.poly, n, &ctx.qcfg)?;
    let tau = std::f64::consts::TAU;
    // enumerate the m-fold grid in row-major order; rows evaluate in
    // parallel and are emitted by index, so output order is fixed
    let total = grid.pow(m as u32);
    let angles: Vec<Vec<f64>> = (0..total)
        .map(|mut code| {
            let mut idx = vec![0usize; m];
            for j in (0..m).rev() {
                idx[j] = code % grid;
                code /= grid;
            }
            idx.iter().map(|&k| tau * k as f64 / grid as f64).collect()
        })
        .collect();
    let rows: Result<Vec<(String, bool)>, CoreError> = angles
        .par_iter()
        .map(|phi| {
            let cv = toric_szego::characters::character_value(
                &ctx.poly,
                &pot,
                Some(&norms),
                n,
                phi,
                &ctx.qcfg,
                true,
            )?;
            let trace = cv.trace.expect("requested");
            let leading = cv.leading.expect("requested");
            let mut row = String::new();
            for p in phi {
                let _ = write!(row, "{},", fmt17(*p));
            }
            let _ = writeln!(
                row,
                "{},{},{},{},{},{},{},{}",
                fmt17(cv.exact.re),
                fmt17(cv.exact.im),
                fmt17(trace.value.re),
                fmt17(trace.value.im),
                fmt17(leading.value.re),
                fmt17(leading.value.im),
                fmt17(cv.gap_trace.unwrap_or(f64::NAN)),
                fmt17(cv.gap_leading.unwrap_or(f64::NAN)),
            );
            Ok((row, !trace.converged || !leading.converged))
        })
        .collect();
    let rows = rows?;
    let mut body = String::new();
    for j in 1..=m {
        let _ = write!(body, "phi_{j},");
    }
    body.push_str(
        "re_exact,im_exact,re_trace,im_trace,re_leading,im_leading,gap_trace,gap_leading\n",
    );
    let mut flagged = false;
    for (row, flag) in rows {
        body.push_str(&row);
        flagged |= flag;
    }
    ctx.emit_csv(&format!("{}_character_sweep_N{n}.csv", ctx.stem), &body)?;
    if flagged && !ctx.allow_flagged {
        eprintln!("error: unconverged sweep entries (rerun with --allow-flagged to accept)");
        return Ok(4);
    }
    Ok(0)
}

fn report_cmd(ctx: &Ctx, n: u32) -> Result<u8, CliError> {
    let poly = &ctx.poly;
    let cert = poly.is_delzant();
    let partition = partition_counts(poly, n)?;
    let (norms, flagged) = norms_with_flag_policy(ctx, n)?;
    let mult = multiplier_table(&partition, &norms)?;
    let doc = json!({
        "config": ctx.config_json(),
        "polytope": {
            "dim": poly.dim(),
            "vertices": poly.vertices(),
            "volume": poly.euclidean_volume().to_string(),
            "delzant": cert.delzant,
            "lattice_points": poly.ehrhart_count(n)?,
        },
        "partition": {
            "N": n,
            "total": partition.total().to_string(),
            "zero_points": partition.zero_points(),
        },
        "norms": {
            "N": n,
            "flagged": flagged,
            "entries": norms.support().len(),
        },
        "multiplier": {
            "excluded": mult.excluded(),
        },
    });
    ctx.emit_json(&format!("{}_report_N{n}.json", ctx.stem), &doc)?;
    if flagged && !ctx.allow_flagged {
        return Ok(4);
    }
    Ok(0)
}
