use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use tilespline::lattice::{canonical_digits, DigitSet, DilationMatrix, IVec, Preset};
use tilespline::mask::{bspline_mask, sum_rules_order, Mask};
use tilespline::ortho::{gram_check, inv_sqrt_fourier, ortho_mask, phi_coeffs};
use tilespline::refine::{integer_values, partition_of_unity_deviation, refine_values, transition_family};
use tilespline::regularity::{holder_c, holder_l2};
use tilespline::subdivision::{
    convergence_report, mesh_export, run_scheme, BoundaryMode, ControlNet,
};
use tilespline::tile::{omega_set, render_tile, symmetry_center, tile_points};
use tilespline::wavelet::{
    find_q, render_samples, tail_bounds, truncate_coeffs, verify_qmf, wavelet_coeffs, wavelet_samples,
    window_for_budget, Norm,
};
use tilespline::{Error, Result};

const TAIL_WINDOWS: [usize; 7] = [1, 10, 20, 30, 40, 50, 60];

#[derive(Parser)]
#[command(name = "tilespline", version, about = "Tile B-splines, their regularity, wavelets and subdivision")]
struct Cli {
    /// Print the summary as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Approximate a tile by its digit expansions.
    Tile(TileArgs),
    /// Print the B-spline mask.
    Mask(MaskArgs),
    /// Values of the B-spline on a refined lattice.
    Values(ValuesArgs),
    /// Hölder exponents in C and L2.
    Regularity(RegularityArgs),
    /// Orthogonalized refinement coefficients.
    Ortho(OrthoArgs),
    /// Wavelet coefficients, decay exponent, tail bounds and a raster of ψ.
    Wavelet(WaveletArgs),
    /// Tail bounds H1, H2 for exponentially decaying coefficients.
    Tails(TailsArgs),
    /// Run a subdivision scheme on a control net.
    Subdivide(SubdivideArgs),
}

#[derive(Args, Clone, Default)]
struct SystemArgs {
    /// square, dragon, bear, example2 or unit1d.
    #[arg(long)]
    preset: Option<String>,
    /// Dilation matrix as rows, e.g. "1,-2;1,0".
    #[arg(long)]
    matrix: Option<String>,
    /// Digit set as vectors, e.g. "0,0;1,0" (default: canonical digits).
    #[arg(long)]
    digits: Option<String>,
}

#[derive(Args)]
struct TileArgs {
    #[command(flatten)]
    sys: SystemArgs,
    /// Expansion depth p.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Point cloud CSV.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Raster PGM.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    order: Option<usize>,
    /// Mask JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValuesArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    order: Option<usize>,
    /// Refinement depth q.
    #[arg(long)]
    depth: Option<usize>,
    /// Lattice values CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegularityArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    order: Option<usize>,
    /// Product length for the joint spectral radius bracket.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct OrthoArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    order: Option<usize>,
    /// FFT grid size per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Coefficient CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WaveletArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    /// Truncation budget for the coefficient table.
    #[arg(long)]
    budget: Option<f64>,
    /// l1 or l2.
    #[arg(long)]
    norm: Option<String>,
    /// Wavelet coefficient CSV (after truncation).
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Raster PGM of ψ.
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Raster window "x0,y0,x1,y1".
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Lattice depth of the ψ samples.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct TailsArgs {
    /// Decay base q.
    #[arg(long)]
    q: Option<f64>,
    /// Decay constant C.
    #[arg(long)]
    c: Option<f64>,
    /// Window m; omitted prints the default table.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct SubdivideArgs {
    #[command(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Control net (CSV with j1..jd and value columns, or OBJ on a grid).
    #[arg(long)]
    input: Option<PathBuf>,
    /// OBJ grid "n1xn2" when the file has no grid comment.
    #[arg(long)]
    grid: Option<String>,
    /// zero, held or periodic.
    #[arg(long)]
    boundary: Option<String>,
    /// Output: .obj mesh or .csv heightfield.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add the convergence report (JSR depth).
    #[arg(long)]
    report: Option<usize>,
}

/// Values from `--config`; unknown keys are rejected.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Config {
    preset: Option<String>,
    matrix: Option<Vec<Vec<i64>>>,
    digits: Option<Vec<IVec>>,
    order: Option<usize>,
    depth: Option<usize>,
    grid: Option<usize>,
    width: Option<usize>,
    height: Option<usize>,
    q: Option<f64>,
    c: Option<f64>,
    m: Option<usize>,
    budget: Option<f64>,
    norm: Option<String>,
    window: Option<[f64; 4]>,
    iters: Option<usize>,
    boundary: Option<String>,
    input: Option<PathBuf>,
    obj_grid: Option<[usize; 2]>,
    report: Option<usize>,
    out: Option<PathBuf>,
    points: Option<PathBuf>,
    pgm: Option<PathBuf>,
    coeffs: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            let text = if cli.json {
                serde_json::to_string_pretty(&summary).expect("summaries serialize")
            } else {
                render_text(&summary, 0)
            };
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                e if e.is_numeric() => 3,
                Error::Io(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let cfg = match &cli.config {
        Some(p) => serde_json::from_reader(BufReader::new(File::open(p)?))
            .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => Config::default(),
    };
    match &cli.cmd {
        Cmd::Tile(a) => cmd_tile(a, &cfg),
        Cmd::Mask(a) => cmd_mask(a, &cfg),
        Cmd::Values(a) => cmd_values(a, &cfg),
        Cmd::Regularity(a) => cmd_regularity(a, &cfg),
        Cmd::Ortho(a) => cmd_ortho(a, &cfg),
        Cmd::Wavelet(a) => cmd_wavelet(a, &cfg),
        Cmd::Tails(a) => cmd_tails(a, &cfg),
        Cmd::Subdivide(a) => cmd_subdivide(a, &cfg),
    }
}

fn render_text(v: &Value, indent: usize) -> String {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, x)| match x {
                Value::Object(_) => format!("{pad}{k}:\n{}", render_text(x, indent + 1)),
                _ => format!("{pad}{k}: {}", render_text(x, 0)),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_rows(s: &str) -> Result<Vec<IVec>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|e| Error::Parse(format!("`{x}`: {e}"))))
                .collect()
        })
        .collect()
}

/// Name, matrix and digits from flags, then config, then the Bear preset.
fn system(a: &SystemArgs, cfg: &Config) -> Result<(String, DilationMatrix, DigitSet)> {
    let matrix = match &a.matrix {
        Some(s) => Some(parse_rows(s)?),
        None if a.preset.is_none() => cfg.matrix.clone(),
        None => None,
    };
    if let Some(rows) = matrix {
        let m = DilationMatrix::new(&rows)?;
        let digits = match (&a.digits, &cfg.digits) {
            (Some(s), _) => DigitSet::new(&m, parse_rows(s)?)?,
            (None, Some(d)) => DigitSet::new(&m, d.clone())?,
            (None, None) => canonical_digits(&m),
        };
        return Ok(("custom".into(), m, digits));
    }
    let name = a.preset.clone().or_else(|| cfg.preset.clone()).unwrap_or_else(|| "bear".into());
    let preset: Preset = name.parse()?;
    let (m, d) = preset.system();
    Ok((preset.name().into(), m, d))
}

fn mask_for(a: &SystemArgs, order: Option<usize>, cfg: &Config, default: usize) -> Result<(String, usize, Mask)> {
    let (name, m, d) = system(a, cfg)?;
    let n = order.or(cfg.order).unwrap_or(default);
    Ok((name, n, bspline_mask(&m, &d, n)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_tile(a: &TileArgs, cfg: &Config) -> Result<Value> {
    let (name, m, d) = system(&a.sys, cfg)?;
    let p = a.depth.or(cfg.depth).unwrap_or(12);
    let tile = tile_points(&m, &d, p)?;
    let mut out = json!({
        "preset": name,
        "depth": p,
        "points": tile.cloud.len(),
        "bbox": {"lo": tile.bbox.lo, "hi": tile.bbox.hi},
        "symmetry_center": symmetry_center(&m, &d),
    });
    if let Some(path) = a.points.as_ref().or(cfg.points.as_ref()) {
        let mut w = create(path)?;
        tile.cloud.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = a.pgm.as_ref().or(cfg.pgm.as_ref()) {
        let w = a.width.or(cfg.width).unwrap_or(512);
        let h = a.height.or(cfg.height).unwrap_or(w);
        let raster = render_tile(&m, &d, w, h, p)?;
        let mut f = create(path)?;
        raster.write_pgm(&mut f)?;
        f.flush()?;
        out["raster_area"] = json!(raster.area());
    }
    Ok(out)
}

fn cmd_mask(a: &MaskArgs, cfg: &Config) -> Result<Value> {
    let (name, n, mask) = mask_for(&a.sys, a.order, cfg, 1)?;
    let coeffs: Vec<Value> = mask
        .coeffs()
        .iter()
        .map(|(k, c)| json!({"k": k, "c": c.to_string()}))
        .collect();
    if let Some(path) = a.out.as_ref().or(cfg.out.as_ref()) {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &mask.to_json())?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(json!({
        "preset": name,
        "order": n,
        "count": mask.len(),
        "sum_rules": sum_rules_order(&mask),
        "coeffs": coeffs,
    }))
}

fn cmd_values(a: &ValuesArgs, cfg: &Config) -> Result<Value> {
    let (name, n, mask) = mask_for(&a.sys, a.order, cfg, 1)?;
    let q = a.depth.or(cfg.depth).unwrap_or(6);
    let omega = omega_set(&mask, mask.digits())?;
    let tf = transition_family(&mask, mask.digits(), &omega);
    let v = integer_values(&tf)?;
    let lf = refine_values(&tf, &v, q);
    if let Some(path) = a.out.as_ref().or(cfg.out.as_ref()) {
        let mut w = create(path)?;
        lf.write_csv(&mut w)?;
        w.flush()?;
    }
    let ints: Vec<Value> = omega
        .elems()
        .iter()
        .zip(v.iter())
        .map(|(k, x)| json!({"k": k, "value": x}))
        .collect();
    let peak = lf.values.values().fold(0.0f64, |a, &b| a.max(b));
    Ok(json!({
        "preset": name,
        "order": n,
        "depth": q,
        "omega": omega.len(),
        "integer_values": ints,
        "nodes": lf.values.len(),
        "max_value": peak,
        "partition_deviation": partition_of_unity_deviation(&lf),
    }))
}

fn cmd_regularity(a: &RegularityArgs, cfg: &Config) -> Result<Value> {
    let (name, n, mask) = mask_for(&a.sys, a.order, cfg, 1)?;
    let depth = a.depth.or(cfg.depth).unwrap_or(14);
    let hc = holder_c(&mask, depth)?;
    let l2 = holder_l2(&mask)?;
    Ok(json!({
        "preset": name,
        "order": n,
        "alpha_C": [hc.lo, hc.hi],
        "alpha_L2": l2,
        "k": hc.k,
        "depth": depth,
    }))
}

fn cmd_ortho(a: &OrthoArgs, cfg: &Config) -> Result<Value> {
    let (name, n, mask) = mask_for(&a.sys, a.order, cfg, 1)?;
    let grid = a.grid.or(cfg.grid).unwrap_or(256);
    let phi = phi_coeffs(&mask)?;
    let b = inv_sqrt_fourier(&phi, grid)?;
    let c = ortho_mask(&mask, &phi, grid)?;
    if let Some(path) = a.out.as_ref().or(cfg.out.as_ref()) {
        let mut w = create(path)?;
        c.write_csv(&mut w)?;
        w.flush()?;
    }
    let leading: Vec<Value> = c
        .sorted_by_magnitude()
        .into_iter()
        .take(10)
        .map(|(k, x)| json!({"k": k, "c": x}))
        .collect();
    Ok(json!({
        "preset": name,
        "order": n,
        "grid": grid,
        "count": c.len(),
        "sum": c.sum(),
        "leading": leading,
        "gram_deviation": gram_check(&b, &phi, grid),
    }))
}

fn cmd_wavelet(a: &WaveletArgs, cfg: &Config) -> Result<Value> {
    let (name, n, mask) = mask_for(&a.sys, a.order, cfg, 1)?;
    let grid = a.grid.or(cfg.grid).unwrap_or(256);
    let budget = a.budget.or(cfg.budget).unwrap_or(0.005);
    let norm: Norm = a.norm.clone().or_else(|| cfg.norm.clone()).unwrap_or_else(|| "l2".into()).parse()?;
    let m = mask.matrix().clone();
    let phi = phi_coeffs(&mask)?;
    let c1 = ortho_mask(&mask, &phi, grid)?;
    let mut ws = wavelet_coeffs(&c1, &m)?;
    let est = find_q(&phi, &m)?;
    ws.q = Some(est.q);
    let (d1, d2) = verify_qmf(&ws, grid);
    let table: Vec<Value> = TAIL_WINDOWS
        .iter()
        .map(|&w| {
            let (h1, h2) = tail_bounds(est.q, 1.0, w);
            json!({"m": w, "H1": h1, "H2": h2})
        })
        .collect();
    let window = window_for_budget(est.q, 1.0, budget, norm);
    let trunc = truncate_coeffs(&ws.psi, budget, norm, window);
    if let Some(path) = a.coeffs.as_ref().or(cfg.coeffs.as_ref()) {
        let mut w = create(path)?;
        trunc.kept.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut out = json!({
        "preset": name,
        "order": n,
        "grid": grid,
        "q": est.q,
        "q_star": est.q_star,
        "sign_rule": ws.sign_rule,
        "shift": ws.shift,
        "qmf_deviation": [d1, d2],
        "tails": table,
        "truncation": {
            "norm": format!("{norm:?}").to_lowercase(),
            "budget": budget,
            "window": window,
            "kept": trunc.kept.len(),
            "removed": trunc.removed,
        },
    });
    if let Some(path) = a.pgm.as_ref().or(cfg.pgm.as_ref()) {
        if m.dim() != 2 {
            return Err(Error::Unsupported("ψ rasters need a planar system".into()));
        }
        let depth = a.depth.or(cfg.depth).unwrap_or(7).max(1);
        let win = match (&a.window, cfg.window) {
            (Some(s), _) => {
                let v: Vec<f64> = s
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{x}`: {e}"))))
                    .collect::<Result<_>>()?;
                if v.len() != 4 {
                    return Err(Error::Parse("--window needs x0,y0,x1,y1".into()));
                }
                [v[0], v[1], v[2], v[3]]
            }
            (None, Some(w)) => w,
            (None, None) => [-3.0, -3.0, 3.0, 3.0],
        };
        let omega = omega_set(&mask, mask.digits())?;
        let tf = transition_family(&mask, mask.digits(), &omega);
        let v = integer_values(&tf)?;
        let coarse = refine_values(&tf, &v, depth - 1);
        let fine = refine_values(&tf, &v, depth);
        let b = inv_sqrt_fourier(&phi, grid)?;
        let samples = wavelet_samples(&ws, &b, &coarse, &fine, 1e-4)?;
        let w = a.width.or(cfg.width).unwrap_or(256);
        let h = a.height.or(cfg.height).unwrap_or(w);
        let img = render_samples(&samples.psi, [win[0], win[1]], [win[2], win[3]], w, h)?;
        let mut f = create(path)?;
        img.write_pgm(&mut f)?;
        f.flush()?;
        out["psi_depth"] = json!(depth);
    }
    Ok(out)
}

fn cmd_tails(a: &TailsArgs, cfg: &Config) -> Result<Value> {
    let q = a.q.or(cfg.q).unwrap_or(0.7);
    let c = a.c.or(cfg.c).unwrap_or(1.0);
    if !(0.0..1.0).contains(&q) || q == 0.0 || c <= 0.0 {
        return Err(Error::Config(format!("tails need 0 < q < 1 and C > 0, got q = {q}, C = {c}")));
    }
    let row = |m: usize| {
        let (h1, h2) = tail_bounds(q, c, m);
        json!({"m": m, "H1": h1, "H2": h2})
    };
    match a.m.or(cfg.m) {
        Some(m) => {
            let (h1, h2) = tail_bounds(q, c, m);
            Ok(json!({"q": q, "C": c, "m": m, "H1": h1, "H2": h2}))
        }
        None => Ok(json!({"q": q, "C": c, "table": TAIL_WINDOWS.map(row).to_vec()})),
    }
}

fn cmd_subdivide(a: &SubdivideArgs, cfg: &Config) -> Result<Value> {
    let (name, n, mask) = mask_for(&a.sys, a.order, cfg, 1)?;
    let iters = a.iters.or(cfg.iters).unwrap_or(4);
    let mode: BoundaryMode = a
        .boundary
        .clone()
        .or_else(|| cfg.boundary.clone())
        .unwrap_or_else(|| "zero".into())
        .parse()?;
    let net = match a.input.as_ref().or(cfg.input.as_ref()) {
        None => ControlNet::delta(mask.dim()),
        Some(path) => {
            let r = BufReader::new(File::open(path)?);
            let is_obj = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
            if is_obj {
                let grid = match (&a.grid, cfg.obj_grid) {
                    (Some(s), _) => {
                        let (x, y) = s
                            .split_once('x')
                            .ok_or_else(|| Error::Parse("--grid needs the form n1xn2".into()))?;
                        let p = |t: &str| t.parse::<usize>().map_err(|e| Error::Parse(format!("`{t}`: {e}")));
                        Some((p(x)?, p(y)?))
                    }
                    (None, Some([x, y])) => Some((x, y)),
                    (None, None) => None,
                };
                ControlNet::read_obj(r, grid, mode)?
            } else {
                ControlNet::read_csv(r, mode)?
            }
        }
    };
    if net.dims() != mask.dim() {
        return Err(Error::Dimension {
            expected: mask.dim(),
            got: net.dims(),
        });
    }
    let out_net = run_scheme(&mask, &net, iters)?;
    if let Some(path) = a.out.as_ref().or(cfg.out.as_ref()) {
        let mut w = create(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
            mesh_export(&out_net, &mut w)?;
        } else {
            out_net.write_heightfield_csv(&mut w)?;
        }
        w.flush()?;
    }
    let mut out = json!({
        "preset": name,
        "order": n,
        "iters": iters,
        "boundary": format!("{mode:?}").to_lowercase(),
        "input_nodes": net.len(),
        "nodes": out_net.len(),
        "level": out_net.level(),
    });
    if let Some(depth) = a.report.or(cfg.report) {
        let r = convergence_report(&mask, depth)?;
        out["report"] = json!({
            "sum_rules": r.sum_rules,
            "holder_C": [r.holder.lo, r.holder.hi],
            "tau": [r.tau.0, r.tau.1],
            "rate": [r.rate.0, r.rate.1],
            "smoothness": r.smoothness,
            "depth": depth,
        });
    }
    Ok(out)
}
