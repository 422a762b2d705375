use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use gnslab::asymmetry::{relative_asymmetry, AffineRestriction, SearchConfig};
use gnslab::gnscore::{deficit, eta0_of};
use gnslab::gridfn::{read_gfn, write_gfn};
use gnslab::radialopt::{minimize_radial, OptimizerModel, RadialConfig, RadialProfile};
use gnslab::rearrange::{cfmp_gap, rearrange};
use gnslab::symmetrize::{averaging_check, final_symmetrize, full_reduction, median_offset, reflect_halves};
use gnslab::{GnsParams, GridFunction};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::families::{default_half_width, embedded_optimizer, perturbation, Family};
use crate::fit::{fit_exponent, DEFAULT_THRESHOLD};
use crate::scan::{check_eps, geometric_eps, grid_constant, read_scan_csv, run_scan, write_scan_csv, ScanSetup};

#[derive(Debug, Parser)]
#[command(name = "gnslab", version, about = "Stability experiments for Gagliardo-Nirenberg-Sobolev inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the radial problem and write an optimizer model.
    Constant(ConstantArgs),
    /// Deficit of a grid function.
    Deficit(DeficitArgs),
    /// Distance from a grid function to the optimizer orbit.
    Asymmetry(AsymmetryArgs),
    /// Schwarz rearrangement and Pólya-Szegő deficit.
    Rearrange(RearrangeArgs),
    /// Median reflection halves, or the diagonal construction.
    Symmetrize(SymmetrizeArgs),
    /// Full reduction to an n-symmetric function.
    Reduce(ReduceArgs),
    /// Sweep a perturbation family and record deficit and asymmetry.
    Scan(ScanArgs),
    /// Fit the log-log slope of a scan.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ParamSource {
    /// Exponent tuple `n,p,s,q`.
    #[arg(long)]
    pub params: Option<String>,
    /// Optimizer model JSON written by `constant`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Asymmetry search configuration JSON.
    #[arg(long)]
    pub search: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ConstantArgs {
    #[arg(long)]
    pub params: String,
    #[arg(long, default_value_t = 2048)]
    pub resolution: usize,
    #[arg(long, default_value_t = 20.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 20000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeficitArgs {
    #[command(flatten)]
    pub source: ParamSource,
    #[arg(long)]
    pub input: PathBuf,
    /// Overrides the constant taken from the model.
    #[arg(long)]
    pub g_const: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AsymmetryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Pin a center coordinate, `axis=value`; repeatable.
    #[arg(long = "fix", value_parser = parse_fix)]
    pub fix: Vec<(usize, f64)>,
}

#[derive(Debug, Args)]
pub struct RearrangeArgs {
    #[command(flatten)]
    pub source: ParamSource,
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write `u*`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also report the gradient-gap ratio (input must be nonnegative and axis-symmetric).
    #[arg(long)]
    pub cfmp: bool,
}

#[derive(Debug, Args)]
pub struct SymmetrizeArgs {
    #[command(flatten)]
    pub source: ParamSource,
    #[arg(long)]
    pub input: PathBuf,
    /// Split axis for the reflection halves.
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    /// Hyperplane offset; defaults to the snapped median.
    #[arg(long)]
    pub offset: Option<f64>,
    /// Run the diagonal construction on the `(free, paired)` plane instead.
    #[arg(long)]
    pub diagonal: bool,
    #[arg(long)]
    pub free: Option<usize>,
    #[arg(long)]
    pub paired: Option<usize>,
    /// Output path; halves go to `<out>.plus.gfn` and `<out>.minus.gfn`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Trace CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Reduced function; defaults to the trace path with extension `gfn`.
    #[arg(long)]
    pub final_out: Option<PathBuf>,
    #[arg(long)]
    pub g_const: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ConstantSource {
    /// `G(v)/‖v‖_q` of the sampled optimizer on the scan grid.
    Grid,
    /// `G_est` stored in the model.
    Model,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// radial-bump, translate, dilate, two-bump or sign-flip.
    #[arg(long, default_value = "radial-bump")]
    pub family: Family,
    /// Perturbation direction from a file instead of a named family.
    #[arg(long)]
    pub w: Option<PathBuf>,
    /// Comma-separated ε values; overrides the geometric grid.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 12)]
    pub eps_count: usize,
    #[arg(long, default_value_t = 0.5)]
    pub eps_ratio: f64,
    /// Cells per axis (default 256 in 2D, 64 in 3D).
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Box half-width (default five half-maximum radii).
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long, value_enum, default_value_t = ConstantSource::Grid)]
    pub constant: ConstantSource,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Scan CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

fn parse_fix(s: &str) -> Result<(usize, f64), String> {
    let (a, v) = s.split_once('=').ok_or_else(|| format!("expected axis=value, got `{s}`"))?;
    let axis = a.trim().parse().map_err(|e| format!("bad axis `{a}`: {e}"))?;
    let value = v.trim().parse().map_err(|e| format!("bad value `{v}`: {e}"))?;
    Ok((axis, value))
}

struct Loaded {
    params: GnsParams,
    model: Option<OptimizerModel>,
}

impl ParamSource {
    fn load(&self) -> CliResult<Loaded> {
        let model = self.model.as_ref().map(OptimizerModel::load).transpose()?;
        let explicit = self.params.as_deref().map(GnsParams::parse).transpose()?;
        let params = match (&model, explicit) {
            (Some(m), Some(p)) if m.params != p => {
                return Err(CliError::Usage("--params disagrees with the model's parameters".into()))
            }
            (Some(m), _) => m.params,
            (None, Some(p)) => p,
            (None, None) => return Err(CliError::Usage("one of --params or --model is required".into())),
        };
        Ok(Loaded { params, model })
    }
}

impl SearchArgs {
    fn config(&self) -> CliResult<SearchConfig> {
        let mut cfg = match &self.search {
            Some(path) => SearchConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => SearchConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.workers).build()?)
    }
}

fn load_model(path: &Path) -> CliResult<(OptimizerModel, Arc<RadialProfile>)> {
    let model = OptimizerModel::load(path)?;
    let profile = Arc::new(model.profile()?);
    Ok((model, profile))
}

fn print_json(value: &serde_json::Value) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Constant(a) => constant(a),
        Command::Deficit(a) => deficit_cmd(a),
        Command::Asymmetry(a) => asymmetry_cmd(a),
        Command::Rearrange(a) => rearrange_cmd(a),
        Command::Symmetrize(a) => symmetrize_cmd(a),
        Command::Reduce(a) => reduce(a),
        Command::Scan(a) => scan(a),
        Command::Fit(a) => fit(a),
    }
}

fn constant(a: ConstantArgs) -> CliResult<()> {
    let params = GnsParams::parse(&a.params)?;
    let cfg = RadialConfig { resolution: a.resolution, r_max: a.r_max, budget: a.budget, seed: a.seed, ..RadialConfig::default() };
    let sol = minimize_radial(&params, &cfg)?;
    OptimizerModel::from_solution(&params, &sol, &cfg).save(&a.out)?;
    print_json(&json!({
        "G_est": sol.g_est,
        "F_min": sol.f_min,
        "eta0": eta0_of(&params),
        "k": params.k_exp,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "stagnated": sol.stagnated,
        "tail_fraction": sol.tail_fraction,
    }))
}

fn deficit_cmd(a: DeficitArgs) -> CliResult<()> {
    let loaded = a.source.load()?;
    let g = match (a.g_const, &loaded.model) {
        (Some(g), _) => g,
        (None, Some(m)) => m.g_est,
        (None, None) => return Err(CliError::Usage("deficit needs --model or --g-const".into())),
    };
    let u = read_gfn(&a.input)?;
    let report = deficit(&u, &loaded.params, g)?;
    print_json(&serde_json::to_value(report)?)
}

fn asymmetry_cmd(a: AsymmetryArgs) -> CliResult<()> {
    let (model, profile) = load_model(&a.model)?;
    let u = read_gfn(&a.input)?;
    let cfg = a.search.config()?;
    let restriction = AffineRestriction { fixed_coords: a.fix.iter().copied().collect() };
    let res = a.search.pool()?.install(|| relative_asymmetry(&u, &restriction, &model.params, &profile, &cfg))?;
    print_json(&json!({
        "lambda": res.lambda_value,
        "a": res.witness.a,
        "b": res.witness.b,
        "x0": res.witness.x0,
        "constraint_residual": res.constraint_residual,
        "restarts_used": res.restarts_used,
        "converged": res.converged,
        "evaluations": res.evaluations,
        "b_at_box_edge": res.b_at_box_edge,
    }))
}

fn rearrange_cmd(a: RearrangeArgs) -> CliResult<()> {
    let params = a.source.load()?.params;
    let u = read_gfn(&a.input)?;
    let res = rearrange(&u, &params)?;
    if let Some(out) = &a.out {
        write_gfn(&res.u_star, out)?;
    }
    let mut report = json!({
        "checksum": format!("{:016x}", res.value_permutation_checksum),
        "ps_deficit": res.ps_deficit,
    });
    if a.cfmp {
        let gap = cfmp_gap(&u, &params)?;
        report["cfmp"] = json!({
            "lhs": gap.lhs,
            "rhs_core": gap.rhs_core,
            "ratio": gap.ratio(),
            "gradient_gap": gap.gradient_gap,
            "negative_gap": gap.negative_gap,
        });
    }
    print_json(&report)
}

fn symmetrize_cmd(a: SymmetrizeArgs) -> CliResult<()> {
    let params = a.source.load()?.params;
    let u = read_gfn(&a.input)?;
    if a.diagonal {
        let free = a.free.unwrap_or(u.dim() - 1);
        let paired = a.paired.unwrap_or(u.dim() - 2);
        let d = final_symmetrize(&u, free, paired, params.q)?;
        write_gfn(&d.u_hat, &a.out)?;
        return print_json(&json!({
            "free_axis": d.free_axis,
            "paired_axis": d.paired_axis,
            "hat_q_mass": d.hat_q_mass,
            "wedge_q_mass": d.wedge_q_mass,
        }));
    }
    let (offset, snap_residual) = match a.offset {
        Some(c) => (c, None),
        None => {
            let m = median_offset(&u, a.axis, params.q)?;
            (m.snapped, Some(m.snap_residual))
        }
    };
    let split = reflect_halves(&u, a.axis, offset, params.q)?;
    let check = averaging_check(&u, &split, &params)?;
    write_gfn(&split.u_plus, sibling(&a.out, ".plus.gfn"))?;
    write_gfn(&split.u_minus, sibling(&a.out, ".minus.gfn"))?;
    print_json(&json!({
        "axis": split.axis,
        "offset": split.offset,
        "snap_residual": snap_residual,
        "mass_plus": split.mass_plus,
        "mass_minus": split.mass_minus,
        "s_mass_gap": check.s_mass_gap,
        "grad_mass_gap": check.grad_mass_gap,
        "boundary_tolerance": check.boundary_tolerance,
        "averaging_holds": check.holds(),
    }))
}

fn reduce(a: ReduceArgs) -> CliResult<()> {
    let (model, profile) = load_model(&a.model)?;
    let u = read_gfn(&a.input)?;
    let cfg = a.search.config()?;
    let params = model.params;
    let g = a.g_const.unwrap_or(model.g_est);
    let oracle = |f: &GridFunction| relative_asymmetry(f, &AffineRestriction::unrestricted(), &params, &profile, &cfg).map(|r| r.lambda_value);
    let trace = a.search.pool()?.install(|| full_reduction(&u, &params, g, &oracle))?;
    std::fs::write(&a.out, trace.to_csv())?;
    let final_out = a.final_out.clone().unwrap_or_else(|| a.out.with_extension("gfn"));
    write_gfn(&trace.final_function, &final_out)?;
    print_json(&json!({
        "stages": trace.stages.len(),
        "input_delta": trace.input_delta,
        "input_lambda": trace.input_lambda,
        "final_delta": trace.stages.last().map(|s| s.delta),
        "final_lambda": trace.stages.last().map(|s| s.lambda),
        "hat_q_mass": trace.hat_q_mass,
        "trace": a.out,
        "output": final_out,
    }))
}

fn scan(a: ScanArgs) -> CliResult<()> {
    let (model, profile) = load_model(&a.model)?;
    let params = model.params;
    let eps = match &a.eps {
        Some(list) => check_eps(list.clone())?,
        None => check_eps(geometric_eps(a.eps_max, a.eps_count, a.eps_ratio)?)?,
    };
    let cells = a.resolution.unwrap_or(if params.n == 2 { 256 } else { 64 });
    let half_width = a.half_width.unwrap_or_else(|| default_half_width(&profile));
    let template = GridFunction::cube(params.n, cells, half_width)?;
    let v = embedded_optimizer(&profile, &template)?;
    let w = match &a.w {
        Some(path) => {
            let w = read_gfn(path)?;
            if !w.same_geometry(&template) {
                return Err(CliError::Usage(format!(
                    "--w grid must be {cells} cells per axis on [-{half_width}, {half_width}]^{}",
                    params.n
                )));
            }
            w
        }
        None => perturbation(a.family, &profile, &template)?,
    };
    let g_const = match a.constant {
        ConstantSource::Grid => grid_constant(&v, &params)?,
        ConstantSource::Model => model.g_est,
    };
    let setup = ScanSetup { params, profile, v, w, g_const, search: a.search.config()? };
    let rows = a.search.pool()?.install(|| run_scan(&setup, &eps));
    let mut records = Vec::with_capacity(rows.len());
    let mut failed = 0;
    for (e, row) in rows {
        match row {
            Ok(r) => records.push(r),
            Err(err) => {
                failed += 1;
                eprintln!("row eps={e}: {err}");
            }
        }
    }
    let file = File::create(&a.out)?;
    write_scan_csv(BufWriter::new(file), &records)?;
    if records.is_empty() {
        return Err(gnslab::Error::Numerical("every scan row failed".into()).into());
    }
    print_json(&json!({ "rows": records.len(), "failed": failed, "g_const": g_const, "out": a.out }))
}

fn fit(a: FitArgs) -> CliResult<()> {
    let records = read_scan_csv(BufReader::new(File::open(&a.input)?))?;
    let res = fit_exponent(&records, a.threshold)?;
    print_json(&serde_json::to_value(res)?)
}
