// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use pded_core::baseline::{baseline_discover, StridgeOptions};
use pded_core::datagen::{generate, Overrides, ProblemName, ProblemSpec};
use pded_core::library::{
    build_library, coefficient_l1_error, derivs_up_to, parse_coefficients, powers_up_to,
};
use pded_core::metrics::{l2_residual, tpr};
use pded_core::preprocess::{add_noise, subsample_time, svd_denoise, SvThreshold};
use pded_core::{discover, CoefficientVector, Dataset, Hyperparameters, TermKey, TermLibrary};

use crate::config::{apply_config, hp_key_values, HpArgs};
use crate::format::{
    encode_report, encode_truth, format_key_values, read_dataset, read_report, read_truth,
    write_atomic, write_dataset, DataFormat,
};
use crate::pde::format_pde;
use crate::UsageError;

#[derive(Debug, Parser)]
#[command(name = "pded", version, about = "Discover PDEs from gridded data with adjoint gradients")]
pub struct Cli {
    /// Worker threads (falls back to PDED_THREADS, then all cores).
    #[arg(long, global = true, env = "PDED_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a benchmark data set, its true coefficients and metadata.
    Generate(GenerateArgs),
    /// Run adjoint discovery on a data set.
    Discover(DiscoverArgs),
    /// Adjoint discovery and the STRidge baseline on the same input.
    Compare(CompareArgs),
    /// Truncated-SVD denoising.
    Denoise(DenoiseArgs),
    /// Recompute metrics for a stored report.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// heat1d, heat2d, burgers1d, burgers2d, ks, randomwalk, reactiondiffusion, wave
    pub problem: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// pded or csv; defaults from the output extension.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Comma-separated nodes per axis; overrides --nx/--ny.
    #[arg(long)]
    pub dims: Option<String>,
    /// Number of data intervals.
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Comma-separated physical coefficients.
    #[arg(long)]
    pub coefficients: Option<String>,
    /// Histogram domain `lo,hi`.
    #[arg(long)]
    pub domain: Option<String>,
    /// Multiplicative Gaussian noise level added after generation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    /// Write R datasets, `<stem>.<i>.<ext>`, each with its own seed.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Dataset i uses seed and noise seed `seed_base + i`.
    #[arg(long)]
    pub seed_base: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LibArgs {
    #[arg(long)]
    pub dmax: Option<u32>,
    #[arg(long)]
    pub pmax: Option<u32>,
    /// Derivative multi-indices separated by `;`, e.g. `1;2;3` or `1,0;0,1`.
    #[arg(long)]
    pub derivs: Option<String>,
    /// Power multi-indices separated by `;`.
    #[arg(long)]
    pub powers: Option<String>,
    /// Take the term list from a coefficient or report file.
    #[arg(long)]
    pub library: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Keep every n-th snapshot.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// True coefficients, for metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Label for the metrics rows; defaults to the data file stem.
    #[arg(long)]
    pub problem: Option<String>,
    /// Nonzero cutoff for TPR; defaults to sigma_thr.
    #[arg(long)]
    pub zero_tol: Option<f64>,
    /// Output path prefix; defaults to the data path without extension.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub library: LibArgs,
    #[command(flatten)]
    pub hp: HpArgs,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub library: LibArgs,
    #[command(flatten)]
    pub hp: HpArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1e-5)]
    pub ridge_lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub stridge_tol: f64,
    #[arg(long, default_value_t = 25)]
    pub stridge_iters: usize,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    pub data: PathBuf,
    /// Singular-value cutoff; 0 copies the input.
    #[arg(long, default_value_t = 1e-4)]
    pub sv_thresh: f64,
    /// relative (fraction of the largest) or absolute.
    #[arg(long, default_value = "relative")]
    pub sv_mode: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub report: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Data set for the L2 residual.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub zero_tol: Option<f64>,
    /// Also write the metrics CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const METRICS_HEADER: &str = "problem,method,tpr,l1_coeff_err,l2_residual,epochs,flags";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("bad {what} entry `{v}`")))
        })
        .collect()
}

fn parse_multi(s: &str, len: usize, what: &str) -> Result<Vec<Vec<u32>>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<u32> = parse_list(p, what)?;
            if v.len() != len {
                return Err(usage(format!("{what} `{p}` needs {len} entries")));
            }
            Ok(v)
        })
        .collect()
}

impl LibArgs {
    pub fn build(&self, n_dims: usize, n_eqs: usize) -> Result<TermLibrary> {
        if let Some(path) = &self.library {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let body = text.split_once("[coefficients]").map_or(text.as_str(), |(_, b)| b);
            return Ok(parse_coefficients(body)?.0);
        }
        let derivs = match &self.derivs {
            Some(s) => parse_multi(s, n_dims, "derivative index")?,
            None => derivs_up_to(n_dims, self.dmax.unwrap_or(3)),
        };
        let powers = match &self.powers {
            Some(s) => parse_multi(s, n_eqs, "power index")?,
            None => powers_up_to(n_eqs, self.pmax.unwrap_or(3)),
        };
        build_library(n_dims, n_eqs, &derivs, &powers).map_err(|e| usage(e.to_string()))
    }

    fn describe(&self) -> String {
        if let Some(p) = &self.library {
            return format!("file:{}", p.display());
        }
        let d = self
            .derivs
            .clone()
            .unwrap_or_else(|| format!("dmax={}", self.dmax.unwrap_or(3)));
        let p = self
            .powers
            .clone()
            .unwrap_or_else(|| format!("pmax={}", self.pmax.unwrap_or(3)));
        format!("{d} {p}")
    }
}

fn stem_prefix(path: &Path) -> PathBuf {
    path.with_extension("")
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn problem_label(explicit: &Option<String>, path: &Path) -> String {
    explicit.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    })
}

fn load_input(path: &Path, stride: usize) -> Result<Dataset> {
    let data = read_dataset(path)?;
    if stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    if stride > 1 {
        Ok(subsample_time(&data, stride)?)
    } else {
        Ok(data)
    }
}

/// TPR and L1 error over the union of both term lists; terms missing from one
/// side count as zero there.
pub fn score(
    library: &TermLibrary,
    alpha: &CoefficientVector,
    truth_lib: &TermLibrary,
    truth: &CoefficientVector,
    zero_tol: f64,
) -> Result<(f64, f64)> {
    let mut keys: Vec<TermKey> = library.terms().to_vec();
    for t in truth_lib.terms() {
        if library.index_of(t).is_none() {
            keys.push(t.clone());
        }
    }
    let pick = |lib: &TermLibrary, a: &CoefficientVector| -> Result<CoefficientVector> {
        Ok(CoefficientVector::new(
            keys.iter()
                .map(|k| lib.index_of(k).map_or(0.0, |i| a[i]))
                .collect(),
        )?)
    };
    let est = pick(library, alpha)?;
    let tru = pick(truth_lib, truth)?;
    Ok((tpr(&est, &tru, zero_tol)?, coefficient_l1_error(&est, &tru)?))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:e}"))
}

pub fn metrics_row(
    problem: &str,
    method: &str,
    metrics: Option<(f64, f64)>,
    residual: Option<f64>,
    epochs: usize,
    flags: &str,
) -> String {
    format!(
        "{problem},{method},{},{},{},{epochs},{}",
        fmt_opt(metrics.map(|m| m.0)),
        fmt_opt(metrics.map(|m| m.1)),
        fmt_opt(residual),
        if flags.is_empty() { "-" } else { flags }
    )
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // A second initialization (tests running in-process) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Discover(a) => cmd_discover(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn out_format(explicit: &Option<String>, path: &Path) -> Result<DataFormat> {
    match explicit {
        Some(f) => f.parse().map_err(|e: anyhow::Error| usage(e.to_string())),
        None => Ok(DataFormat::from_path(path)),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let name: ProblemName = a.problem.parse().map_err(|e: pded_core::Error| usage(e.to_string()))?;
    let mut ov = Overrides {
        n_t: a.nt,
        seed: a.seed,
        n_samples: a.samples,
        dt: a.dt,
        ..Default::default()
    };
    if let Some(d) = &a.dims {
        ov.dims = Some(parse_list(d, "dims")?);
    } else if let Some(nx) = a.nx {
        ov.dims = Some(match a.ny {
            Some(ny) => vec![nx, ny],
            None => vec![nx],
        });
    } else if a.ny.is_some() {
        return Err(usage("--ny needs --nx"));
    }
    if let Some(c) = &a.coefficients {
        ov.coefficients = Some(parse_list(c, "coefficient")?);
    }
    if let Some(d) = &a.domain {
        let v: Vec<f64> = parse_list(d, "domain")?;
        if v.len() != 2 {
            return Err(usage("--domain takes `lo,hi`"));
        }
        ov.domain = Some((v[0], v[1]));
    }
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.pded", name.as_str())));
    let format = out_format(&a.format, &out)?;
    if a.repeat == 0 {
        return Err(usage("--repeat must be at least 1"));
    }
    let Some(base) = a.seed_base else {
        if a.repeat > 1 {
            return Err(usage("--repeat needs --seed-base"));
        }
        return generate_one(a, name, ov, &out, format, a.noise_seed);
    };
    for i in 0..a.repeat {
        let seed = base + i as u64;
        let path = if a.repeat == 1 {
            out.clone()
        } else {
            let ext = out
                .extension()
                .map_or(String::new(), |e| format!(".{}", e.to_string_lossy()));
            with_suffix(&stem_prefix(&out), &format!(".{i}{ext}"))
        };
        let ov = Overrides {
            seed: Some(seed),
            ..ov.clone()
        };
        generate_one(a, name, ov, &path, format, seed)?;
    }
    Ok(())
}

fn generate_one(
    a: &GenerateArgs,
    name: ProblemName,
    ov: Overrides,
    out: &Path,
    format: DataFormat,
    noise_seed: u64,
) -> Result<()> {
    let g = generate(&ProblemSpec::with(name, ov.clone()))?;
    let data = add_noise(&g.data, a.noise, noise_seed)?;
    write_dataset(out, &data, format)?;
    let prefix = stem_prefix(out);
    write_atomic(
        &with_suffix(&prefix, ".truth.txt"),
        encode_truth(&g.library, &g.truth).as_bytes(),
    )?;
    let grid = data.grid();
    let mut meta = vec![
        ("problem".to_string(), name.as_str().to_string()),
        ("dims".into(), join(grid.dims())),
        ("spacing".into(), join_f(grid.spacing())),
        ("snapshots".into(), data.len().to_string()),
        ("dt".into(), format!("{:e}", g.dt)),
        ("dt_rule".into(), g.dt_rule.clone()),
        ("seed".into(), g.seed.map_or("-".into(), |s| s.to_string())),
        ("clipped".into(), g.clipped.to_string()),
        ("noise".into(), format!("{:e}", a.noise)),
        ("noise_seed".into(), noise_seed.to_string()),
    ];
    if let Some(c) = &ov.coefficients {
        meta.push(("coefficients".into(), join_f(c)));
    }
    write_atomic(
        &with_suffix(&prefix, ".meta.txt"),
        format_key_values(&meta).as_bytes(),
    )?;
    println!(
        "wrote {} ({} snapshots on {} nodes, dt = {:e})",
        out.display(),
        data.len(),
        grid.len(),
        g.dt
    );
    for line in format_pde(&g.library, &g.truth) {
        println!("truth: {line}");
    }
    Ok(())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn join_f(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

struct AdjointRun {
    library: TermLibrary,
    alpha: CoefficientVector,
    epochs: usize,
    flags: String,
    residual: f64,
    metrics: Option<(f64, f64)>,
    seconds: f64,
}

fn run_adjoint(
    data: &Dataset,
    lib: &TermLibrary,
    hp: &Hyperparameters,
    truth: Option<&(TermLibrary, CoefficientVector)>,
    zero_tol: f64,
    trajectory: Option<&Path>,
) -> Result<AdjointRun> {
    let t0 = Instant::now();
    let report = discover(data, lib, hp, None)?;
    let seconds = t0.elapsed().as_secs_f64();
    info!("adjoint discovery finished in {seconds:.2}s after {} epochs", report.epochs_run);
    if let Some(path) = trajectory {
        write_atomic(path, report.trajectory_csv().as_bytes())?;
    }
    let residual = l2_residual(data, lib, &report.final_alpha, hp)?;
    let metrics = truth
        .map(|(tl, tv)| score(lib, &report.final_alpha, tl, tv, zero_tol))
        .transpose()?;
    Ok(AdjointRun {
        library: lib.clone(),
        epochs: report.epochs_run,
        flags: report.flags_string(),
        alpha: report.final_alpha,
        residual,
        metrics,
        seconds,
    })
}

fn report_meta(
    method: &str,
    problem: &str,
    data_path: &Path,
    input: &InputArgs,
    lib_desc: &str,
    pde: &[String],
    extra: Vec<(String, String)>,
) -> Vec<(String, String)> {
    let mut meta = vec![
        ("method".to_string(), method.to_string()),
        ("problem".into(), problem.to_string()),
        ("data".into(), data_path.display().to_string()),
        ("stride".into(), input.stride.to_string()),
        ("library".into(), lib_desc.to_string()),
        ("pde".into(), pde.join("; ")),
    ];
    meta.extend(extra);
    meta
}

pub fn cmd_discover(a: &DiscoverArgs) -> Result<()> {
    let hp = a.hp.resolve()?;
    let data = load_input(&a.data, a.input.stride)?;
    let lib = a.library.build(data.grid().ndim(), data.n_components())?;
    let truth = a.input.truth.as_deref().map(read_truth).transpose()?;
    let zero_tol = a.input.zero_tol.unwrap_or(hp.sigma_thr);
    let prefix = a.input.out_prefix.clone().unwrap_or_else(|| stem_prefix(&a.data));
    let problem = problem_label(&a.input.problem, &a.data);

    let traj = with_suffix(&prefix, ".trajectory.csv");
    let r = run_adjoint(&data, &lib, &hp, truth.as_ref(), zero_tol, Some(&traj))?;
    let pde = format_pde(&r.library, &r.alpha);
    let mut extra = vec![
        ("epochs".to_string(), r.epochs.to_string()),
        ("flags".into(), r.flags.clone()),
        ("l2_residual".into(), format!("{:e}", r.residual)),
        ("seconds".into(), format!("{:.3}", r.seconds)),
    ];
    if let Some((t, l1)) = r.metrics {
        extra.push(("tpr".into(), format!("{t:e}")));
        extra.push(("l1_coeff_err".into(), format!("{l1:e}")));
    }
    extra.extend(hp_key_values(&hp));
    let meta = report_meta("adjoint", &problem, &a.data, &a.input, &a.library.describe(), &pde, extra);
    let report_path = with_suffix(&prefix, ".report.txt");
    write_atomic(&report_path, encode_report(&meta, &r.library, &r.alpha).as_bytes())?;

    for line in &pde {
        println!("{line}");
    }
    println!("epochs {}  flags {}  l2_residual {:e}", r.epochs, r.flags, r.residual);
    if let Some((t, l1)) = r.metrics {
        println!("tpr {t}  l1_coeff_err {l1:e}");
    }
    println!("report {}", report_path.display());
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let hp = a.hp.resolve()?;
    let data = load_input(&a.data, a.input.stride)?;
    let lib = a.library.build(data.grid().ndim(), data.n_components())?;
    let truth = a.input.truth.as_deref().map(read_truth).transpose()?;
    let zero_tol = a.input.zero_tol.unwrap_or(hp.sigma_thr);
    let prefix = a.input.out_prefix.clone().unwrap_or_else(|| stem_prefix(&a.data));
    let problem = problem_label(&a.input.problem, &a.data);
    let lib_desc = a.library.describe();

    let adj = run_adjoint(&data, &lib, &hp, truth.as_ref(), zero_tol, None)?;
    let opts = StridgeOptions {
        ridge_lambda: a.ridge_lambda,
        tol: a.stridge_tol,
        max_iters: a.stridge_iters,
    };
    let t0 = Instant::now();
    let base = baseline_discover(&data, &lib, &opts)?;
    let base_secs = t0.elapsed().as_secs_f64();
    let base_res = l2_residual(&data, &lib, &base.alpha, &hp)?;
    let base_metrics = truth
        .as_ref()
        .map(|(tl, tv)| score(&lib, &base.alpha, tl, tv, zero_tol))
        .transpose()?;
    let base_flags = if base.singular { "singular" } else { "" };

    let adj_pde = format_pde(&lib, &adj.alpha);
    let base_pde = format_pde(&lib, &base.alpha);
    let mut adj_extra = vec![
        ("epochs".to_string(), adj.epochs.to_string()),
        ("flags".into(), adj.flags.clone()),
        ("l2_residual".into(), format!("{:e}", adj.residual)),
    ];
    adj_extra.extend(hp_key_values(&hp));
    let base_extra = vec![
        ("iterations".to_string(), base.iterations.to_string()),
        ("singular".into(), base.singular.to_string()),
        ("dropped_rows".into(), base.dropped_rows.to_string()),
        ("l2_residual".into(), format!("{base_res:e}")),
        ("ridge_lambda".into(), format!("{:e}", a.ridge_lambda)),
        ("stridge_tol".into(), format!("{:e}", a.stridge_tol)),
        ("stridge_iters".into(), a.stridge_iters.to_string()),
    ];
    write_atomic(
        &with_suffix(&prefix, ".adjoint.report.txt"),
        encode_report(
            &report_meta("adjoint", &problem, &a.data, &a.input, &lib_desc, &adj_pde, adj_extra),
            &lib,
            &adj.alpha,
        )
        .as_bytes(),
    )?;
    write_atomic(
        &with_suffix(&prefix, ".stridge.report.txt"),
        encode_report(
            &report_meta("stridge", &problem, &a.data, &a.input, &lib_desc, &base_pde, base_extra),
            &lib,
            &base.alpha,
        )
        .as_bytes(),
    )?;

    let rows = [
        metrics_row(&problem, "adjoint", adj.metrics, Some(adj.residual), adj.epochs, &adj.flags),
        metrics_row(&problem, "stridge", base_metrics, Some(base_res), base.iterations, base_flags),
    ];
    let csv = format!("{METRICS_HEADER}\n{}\n{}\n", rows[0], rows[1]);
    write_atomic(&with_suffix(&prefix, ".compare.csv"), csv.as_bytes())?;

    let mut md = String::from("| method | recovered PDE | TPR | L1 coeff error | L2 residual | time (s) |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for (name, pde, m, res, secs) in [
        ("adjoint", &adj_pde, adj.metrics, adj.residual, adj.seconds),
        ("stridge", &base_pde, base_metrics, base_res, base_secs),
    ] {
        writeln!(
            md,
            "| {name} | {} | {} | {} | {res:.3e} | {secs:.2} |",
            pde.join("; "),
            m.map_or("-".into(), |m| format!("{:.3}", m.0)),
            m.map_or("-".into(), |m| format!("{:.3e}", m.1)),
        )?;
    }
    write_atomic(&with_suffix(&prefix, ".compare.md"), md.as_bytes())?;
    print!("{md}");
    Ok(())
}

pub fn cmd_denoise(a: &DenoiseArgs) -> Result<()> {
    let mode = match a.sv_mode.to_ascii_lowercase().as_str() {
        "relative" => SvThreshold::Relative,
        "absolute" => SvThreshold::Absolute,
        other => return Err(usage(format!("unknown --sv-mode `{other}`"))),
    };
    let data = read_dataset(&a.data)?;
    let out_data = svd_denoise(&data, a.sv_thresh, mode)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| with_suffix(&stem_prefix(&a.data), ".denoised.pded"));
    let format = out_format(&a.format, &out)?;
    write_dataset(&out, &out_data, format)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let rep = read_report(&a.report)?;
    let (tl, tv) = read_truth(&a.truth)?;
    let mut hp = Hyperparameters::default();
    let known: std::collections::BTreeMap<String, String> = hp_key_values(&hp)
        .into_iter()
        .filter_map(|(k, _)| rep.meta.get(&k).map(|v| (k, v.clone())))
        .collect();
    apply_config(&mut hp, &known)?;
    let zero_tol = a.zero_tol.unwrap_or(hp.sigma_thr);
    let metrics = score(&rep.library, &rep.alpha, &tl, &tv, zero_tol)?;
    let residual = match &a.data {
        Some(p) => {
            let stride = rep
                .meta
                .get("stride")
                .and_then(|s| s.parse().ok())
                .unwrap_or(1);
            let data = load_input(p, stride)?;
            Some(l2_residual(&data, &rep.library, &rep.alpha, &hp)?)
        }
        None => rep.meta.get("l2_residual").and_then(|s| s.parse().ok()),
    };
    let problem = a
        .problem
        .clone()
        .or_else(|| rep.meta.get("problem").cloned())
        .unwrap_or_else(|| "data".into());
    let method = rep.meta.get("method").cloned().unwrap_or_else(|| "unknown".into());
    let epochs = rep
        .meta
        .get("epochs")
        .or_else(|| rep.meta.get("iterations"))
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let flags = rep.meta.get("flags").cloned().unwrap_or_default();
    let csv = format!(
        "{METRICS_HEADER}\n{}\n",
        metrics_row(&problem, &method, Some(metrics), residual, epochs, &flags)
    );
    if let Some(out) = &a.out {
        write_atomic(out, csv.as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}
