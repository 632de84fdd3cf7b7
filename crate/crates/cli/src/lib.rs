//! Command-line front end: config ingestion, catalog listing, frequency
//! sweeps, mesh-convergence studies, resonance-curve identification and
//! numerical-vs-experimental comparison reports.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 input-parse
//! failure.

use std::fs;
use std::path::{Path, PathBuf};

use sqfilm::config::{apply_config, ElementSizeSpec, Method, RunConfig};
use sqfilm::frf::{identify, identify_curve, FrfCurve, ModalIdentification};
use sqfilm::gasfilm::mesh_film;
use sqfilm::geometry::{catalog, derive_hole_grid, solid_volume, total_mass};
use sqfilm::structure::{lumped_stiffness, natural_frequency, piston_mode};
use sqfilm::sweep::{
    comparison_csv, converge_csv, interpolate_pair, parse_sweep_csv, run_converge, run_sweep,
    sweep_csv, SweepResult,
};
use sqfilm::{Error, Result};

const USAGE: &str = "\
sqfilm - squeeze-film damping of perforated oscillating microplates

USAGE:
    sqfilm <command> [options]

COMMANDS:
    catalog     list the built-in test structures with derived quantities
    sweep       frequency sweep of fluid damping and stiffness coefficients
    converge    mesh-convergence study at a fixed reference frequency
    identify    half-power identification of a sampled resonance curve
    compare     numerical vs experimental coefficients for one structure

COMMON OPTIONS:
    --config FILE        structured text configuration (flags override it)
    --structure LABEL    structure to run (catalog label A-F or inline block)
    --out DIR            output directory (default `out`)

SWEEP OPTIONS:
    --method M           imposed-velocity | modal-projection | both
    --element-size V     element size: µm value, `d`, `d/N`, or `auto`
    --fmin HZ --fmax HZ  sweep range (default 1e3..1e7)
    --ppd N              points per decade (default 40)
    --modes N            modal basis size for the projection route (1..=6)
    --dump-mesh          write the node/element tables as CSV

CONVERGE OPTIONS:
    --sizes LIST         comma list of sizes (µm, `d`, `d/N`); default d,d/2,d/4,d/8
    --ref-freq HZ        reference frequency (default: lumped resonance)

IDENTIFY OPTIONS:
    --frf FILE           input curve CSV with header frequency_khz,amplitude
    --modal-mass KG      modal mass used by the identification
    --label NAME         label used in the report (default: file stem)

COMPARE OPTIONS:
    --frf FILE           measured curve (with --modal-mass), or
    --fn KHZ --f1 KHZ --f2 KHZ   measured resonance and half-power points
    --modal-mass KG      modal mass (default: piston-mode mass of the structure)

Thread count is taken from SQFILM_THREADS (default: all cores).
";

// stdout may be a closed pipe (`sqfilm catalog | head`); writes must not
// panic then, so all user-facing output goes through these.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}
macro_rules! out_raw {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}
macro_rules! eout {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stderr(), $($t)*);
    }};
}

/// Entry point used by `main` and by the integration tests.
pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eout!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Geometry(_) | Error::Mesh(_) | Error::Domain(_) => 2,
        Error::Parse { .. } | Error::Io(_) => 4,
        _ => 3,
    }
}

fn dispatch(args: &[String]) -> Result<()> {
    let Some(command) = args.first() else {
        out_raw!("{USAGE}");
        return Err(Error::Config {
            line: 0,
            field: "command".into(),
            message: "missing command".into(),
        });
    };
    match command.as_str() {
        "catalog" => cmd_catalog(&args[1..]),
        "sweep" => cmd_sweep(&args[1..]),
        "converge" => cmd_converge(&args[1..]),
        "identify" => cmd_identify(&args[1..]),
        "compare" => cmd_compare(&args[1..]),
        "help" | "--help" | "-h" => {
            out_raw!("{USAGE}");
            Ok(())
        }
        other => Err(Error::Config {
            line: 0,
            field: "command".into(),
            message: format!("unknown command `{other}`; see `sqfilm help`"),
        }),
    }
}

/// Parsed flag set: `--key value` pairs plus boolean switches.
struct Flags {
    pairs: Vec<(String, String)>,
    switches: Vec<String>,
}

impl Flags {
    fn parse(args: &[String], switches: &[&str], valued: &[&str]) -> Result<Flags> {
        let mut out = Flags {
            pairs: Vec::new(),
            switches: Vec::new(),
        };
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(name) = arg.strip_prefix("--") else {
                return Err(Error::Config {
                    line: 0,
                    field: arg.clone(),
                    message: "expected a --flag".into(),
                });
            };
            if switches.contains(&name) {
                out.switches.push(name.to_string());
            } else if valued.contains(&name) {
                let value = it.next().ok_or_else(|| Error::Config {
                    line: 0,
                    field: name.into(),
                    message: "missing value".into(),
                })?;
                out.pairs.push((name.to_string(), value.clone()));
            } else {
                return Err(Error::Config {
                    line: 0,
                    field: name.into(),
                    message: "unknown flag".into(),
                });
            }
        }
        Ok(out)
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn has(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }

    fn get_f64(&self, name: &str) -> Result<Option<f64>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| Error::Config {
                line: 0,
                field: name.into(),
                message: format!("cannot parse number `{v}`"),
            }),
        }
    }
}

/// Loads `--config` (if any) and applies the shared overrides.
fn load_config(flags: &Flags) -> Result<RunConfig<f64>> {
    let mut cfg = RunConfig::<f64>::default();
    if let Some(path) = flags.get("config") {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config `{path}`: {e}")))?;
        apply_config(&mut cfg, &text)?;
    }
    if let Some(s) = flags.get("structure") {
        cfg.structure = s.to_string();
    }
    if let Some(m) = flags.get("method") {
        cfg.method = Method::parse(m).ok_or_else(|| Error::Config {
            line: 0,
            field: "method".into(),
            message: format!("expected imposed-velocity | modal-projection | both, got `{m}`"),
        })?;
    }
    if let Some(v) = flags.get("element-size") {
        cfg.element_size = ElementSizeSpec::parse(v).ok_or_else(|| Error::Config {
            line: 0,
            field: "element-size".into(),
            message: format!("expected `auto`, µm value, `d` or `d/N`, got `{v}`"),
        })?;
    }
    if let Some(f) = flags.get_f64("fmin")? {
        cfg.sweep.f_min_hz = f;
    }
    if let Some(f) = flags.get_f64("fmax")? {
        cfg.sweep.f_max_hz = f;
    }
    if let Some(p) = flags.get("ppd") {
        cfg.sweep.points_per_decade = p.parse().map_err(|_| Error::Config {
            line: 0,
            field: "ppd".into(),
            message: format!("cannot parse count `{p}`"),
        })?;
    }
    if let Some(n) = flags.get("modes") {
        cfg.modes = n.parse().map_err(|_| Error::Config {
            line: 0,
            field: "modes".into(),
            message: format!("cannot parse count `{n}`"),
        })?;
    }
    if let Some(o) = flags.get("out") {
        cfg.output_dir = PathBuf::from(o);
    }
    if let Some(f) = flags.get_f64("ref-freq")? {
        cfg.reference_frequency_hz = Some(f);
    }
    if flags.has("dump-mesh") {
        cfg.dump_mesh = true;
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Io(format!("cannot create `{}`: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| Error::Io(format!("cannot write `{}`: {e}", path.display())))?;
    Ok(path)
}

/// Prints the built-in structures with derived hole grids, volumes, masses,
/// suspension stiffness and predicted resonance.
fn cmd_catalog(args: &[String]) -> Result<()> {
    let flags = Flags::parse(args, &[], &["config", "out", "write-config"])?;
    let cfg = load_config(&flags)?;
    out!(
        "{:<6} {:>8} {:>8} {:>7} {:>5} {:>5} {:>5} {:>9} {:>12} {:>12} {:>11} {:>10}",
        "label", "a_um", "b_um", "c_um", "d_um", "e_um", "f_um", "holes", "volume_um3",
        "mass_kg", "k_n_per_m", "f_n_khz"
    );
    let cat = catalog::<f64>();
    for s in &cat {
        let grid = derive_hole_grid(s)?;
        let vol = solid_volume(s, &grid);
        let mass = total_mass(s, &grid, &cfg.material);
        let k = lumped_stiffness(s, &cfg.material);
        let h = cfg.element_size.resolve(s);
        let mesh = mesh_film(s, &grid, h)?;
        let piston = piston_mode(s, &grid, &cfg.material, &mesh);
        let f_n = natural_frequency(k, piston.modal_mass);
        out!(
            "{:<6} {:>8.1} {:>8.1} {:>7.1} {:>5.1} {:>5.1} {:>5.1} {:>4}x{:<4} {:>12.6e} {:>12.6e} {:>11.6e} {:>10.4}",
            s.label,
            s.plate_length,
            s.plate_width,
            s.support_length,
            s.support_width,
            s.hole_side,
            s.hole_spacing,
            grid.n_cols,
            grid.n_rows,
            vol,
            mass,
            k,
            f_n / 1e3,
        );
    }
    if let Some(path) = flags.get("write-config") {
        let text = sqfilm::config::write_structures_config(&cat);
        fs::write(path, text).map_err(|e| Error::Io(format!("cannot write `{path}`: {e}")))?;
        out!("wrote structure definitions to {path}");
    }
    Ok(())
}

fn write_sweep_outputs(cfg: &RunConfig<f64>, result: &SweepResult<f64>) -> Result<()> {
    let dir = &cfg.output_dir;
    let label = &result.structure.label;
    if cfg.method.runs_imposed() {
        let path = write_file(
            dir,
            &format!("sweep_{label}_imposed-velocity.csv"),
            &sweep_csv(result, Method::ImposedVelocity),
        )?;
        out!("wrote {}", path.display());
    }
    if cfg.method.runs_modal() {
        let path = write_file(
            dir,
            &format!("sweep_{label}_modal-projection.csv"),
            &sweep_csv(result, Method::ModalProjection),
        )?;
        out!("wrote {}", path.display());
        let path = write_file(dir, &format!("rom_{label}.csv"), &sqfilm::sweep::rom_csv(result))?;
        out!("wrote {}", path.display());
        let f_ref = sqfilm::sweep::reference_frequency(cfg, &result.structure)?;
        let path = write_file(
            dir,
            &format!("rom_{label}_resonance.csv"),
            &sqfilm::sweep::rom_resonance_csv(result, f_ref),
        )?;
        out!("wrote {}", path.display());
        if let Some(model) = &result.modes {
            let path = write_file(dir, &format!("modes_{label}.csv"), &model.summary_csv())?;
            out!("wrote {}", path.display());
            let path = write_file(
                dir,
                &format!("modes_{label}_shapes.csv"),
                &model.shapes_csv(),
            )?;
            out!("wrote {}", path.display());
        }
    }
    if cfg.method == Method::Both {
        let path = write_file(
            dir,
            &format!("sweep_{label}_comparison.csv"),
            &comparison_csv(result),
        )?;
        out!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: &[String]) -> Result<()> {
    let flags = Flags::parse(
        args,
        &["dump-mesh"],
        &[
            "config",
            "structure",
            "method",
            "element-size",
            "fmin",
            "fmax",
            "ppd",
            "modes",
            "out",
            "ref-freq",
        ],
    )?;
    let cfg = load_config(&flags)?;
    cfg.validate()?;
    if cfg.dump_mesh {
        let (s, grid, mesh, _) = sqfilm::sweep::build_system(&cfg)?;
        let _ = grid;
        let p1 = write_file(
            &cfg.output_dir,
            &format!("mesh_{}_nodes.csv", s.label),
            &mesh.nodes_csv(),
        )?;
        let p2 = write_file(
            &cfg.output_dir,
            &format!("mesh_{}_elements.csv", s.label),
            &mesh.elements_csv(),
        )?;
        out!("wrote {}\nwrote {}", p1.display(), p2.display());
    }
    let result = run_sweep(&cfg)?;
    out!(
        "structure {}: {} holes, element size {:.4} µm, {} nodes, {} frequencies",
        result.structure.label,
        result.grid.hole_count(),
        result.element_size,
        result.node_count,
        result.rows.len()
    );
    write_sweep_outputs(&cfg, &result)?;
    if cfg.method == Method::Both {
        let worst = result
            .rows
            .iter()
            .map(|r| {
                let i = r.imposed.unwrap();
                let m = r.modal.unwrap();
                ((i.damping - m.damping) / m.damping)
                    .abs()
                    .max(((i.stiffness - m.stiffness) / m.stiffness).abs())
            })
            .fold(0.0, f64::max);
        out!("worst imposed-vs-modal deviation over the sweep: {worst:.3e}");
    }
    Ok(())
}

fn cmd_converge(args: &[String]) -> Result<()> {
    let flags = Flags::parse(
        args,
        &[],
        &[
            "config",
            "structure",
            "element-size",
            "sizes",
            "ref-freq",
            "out",
            "modes",
        ],
    )?;
    let cfg = load_config(&flags)?;
    let s = cfg.resolve_structure()?;
    let sizes: Vec<f64> = match flags.get("sizes") {
        None => [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|f| s.support_width * f)
            .collect(),
        Some(list) => list
            .split(',')
            .map(|item| {
                ElementSizeSpec::<f64>::parse(item)
                    .map(|spec| spec.resolve(&s))
                    .ok_or_else(|| Error::Config {
                        line: 0,
                        field: "sizes".into(),
                        message: format!("cannot parse element size `{item}`"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    let rows = run_converge(&cfg, &sizes)?;
    out!(
        "{:>14} {:>10} {:>8} {:>14} {:>14}",
        "element_size", "size/d", "nodes", "c_ns_per_m", "k_n_per_m"
    );
    for r in &rows {
        out!(
            "{:>14.6} {:>10.4} {:>8} {:>14.6e} {:>14.6e}",
            r.element_size,
            r.fraction_of_support_width,
            r.node_count,
            r.pair.damping,
            r.pair.stiffness
        );
    }
    if rows.len() >= 2 {
        let last = &rows[rows.len() - 1];
        let prev = &rows[rows.len() - 2];
        out!(
            "last refinement step: dc = {:+.3}%, dk = {:+.3}%",
            (last.pair.damping / prev.pair.damping - 1.0) * 100.0,
            (last.pair.stiffness / prev.pair.stiffness - 1.0) * 100.0
        );
    }
    let path = write_file(
        &cfg.output_dir,
        &format!("converge_{}.csv", s.label),
        &converge_csv(&rows, &s.label),
    )?;
    out!("wrote {}", path.display());
    Ok(())
}

fn print_identification(label: &str, ident: &ModalIdentification<f64>) {
    out!("identification report for `{label}`");
    out!("  resonant frequency   {:.6} kHz", ident.resonant_khz);
    out!(
        "  half-power points    {:.6} / {:.6} kHz",
        ident.half_lo_khz, ident.half_hi_khz
    );
    out!("  damping ratio        {:.6e}", ident.zeta);
    out!("  modal damping        {:.6e} N·s/m", ident.damping);
    out!("  modal stiffness      {:.6e} N/m", ident.stiffness);
    out!("  modal mass           {:.6e} kg", ident.modal_mass);
}

fn cmd_identify(args: &[String]) -> Result<()> {
    let flags = Flags::parse(args, &[], &["config", "frf", "modal-mass", "label", "out"])?;
    let cfg = load_config(&flags)?;
    let path = flags.get("frf").ok_or_else(|| Error::Config {
        line: 0,
        field: "frf".into(),
        message: "identify needs --frf FILE".into(),
    })?;
    let modal_mass = flags.get_f64("modal-mass")?.ok_or_else(|| Error::Config {
        line: 0,
        field: "modal-mass".into(),
        message: "identify needs --modal-mass KG".into(),
    })?;
    let label = flags
        .get("label")
        .map(str::to_string)
        .unwrap_or_else(|| {
            Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "curve".into())
        });
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read `{path}`: {e}")))?;
    let curve = FrfCurve::<f64>::from_csv(&text, label.clone())?;
    let (ident, fit) = identify_curve(&curve, modal_mass)?;
    print_identification(&label, &ident);
    out!(
        "  fit window           {:.6} .. {:.6} kHz ({} samples, residual {:.3e})",
        fit.window.0, fit.window.1, fit.n_samples, fit.residual
    );
    let mut csv = String::from(ModalIdentification::<f64>::csv_header());
    csv.push_str(&ident.csv_row(&label));
    let out = write_file(&cfg.output_dir, &format!("identify_{label}.csv"), &csv)?;
    out!("wrote {}", out.display());
    Ok(())
}

fn cmd_compare(args: &[String]) -> Result<()> {
    let flags = Flags::parse(
        args,
        &[],
        &[
            "config",
            "structure",
            "frf",
            "modal-mass",
            "fn",
            "f1",
            "f2",
            "out",
        ],
    )?;
    let cfg = load_config(&flags)?;
    let s = cfg.resolve_structure()?;
    let label = s.label.clone();

    // experimental side: full curve or explicit resonance data
    let grid = cfg.derive_grid(&s)?;
    let mesh = mesh_film(&s, &grid, cfg.element_size.resolve(&s))?;
    let default_mass = piston_mode(&s, &grid, &cfg.material, &mesh).modal_mass;
    let modal_mass = flags.get_f64("modal-mass")?.unwrap_or(default_mass);
    let ident = if let Some(path) = flags.get("frf") {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read `{path}`: {e}")))?;
        let curve = FrfCurve::<f64>::from_csv(&text, label.clone())?;
        identify_curve(&curve, modal_mass)?.0
    } else {
        let f_n = flags.get_f64("fn")?;
        let f1 = flags.get_f64("f1")?;
        let f2 = flags.get_f64("f2")?;
        match (f_n, f1, f2) {
            (Some(f_n), Some(f1), Some(f2)) => identify(f_n, (f1, f2), modal_mass)?,
            _ => {
                return Err(Error::Config {
                    line: 0,
                    field: "fn".into(),
                    message: "compare needs --frf FILE or all of --fn --f1 --f2 (kHz)".into(),
                })
            }
        }
    };

    // simulated side: sweeps previously written to the output directory
    let f_n_hz = ident.resonant_khz * 1e3;
    let mut fluid: Vec<(String, sqfilm::reynolds::CKPair<f64>)> = Vec::new();
    for method in ["imposed-velocity", "modal-projection"] {
        let path = cfg.output_dir.join(format!("sweep_{label}_{method}.csv"));
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Io(format!("cannot read `{}`: {e}", path.display())))?;
        let pairs: Vec<sqfilm::reynolds::CKPair<f64>> = parse_sweep_csv::<f64>(&text)?
            .into_iter()
            .map(|(p, _, _)| p)
            .collect();
        if let Some(at) = interpolate_pair(&pairs, f_n_hz) {
            fluid.push((method.to_string(), at));
        }
    }
    if fluid.is_empty() {
        return Err(Error::Io(format!(
            "no sweep data for structure {label} in `{}`; run `sqfilm sweep --structure {label}` first",
            cfg.output_dir.display()
        )));
    }

    let k_struct = lumped_stiffness(&s, &cfg.material);
    out!("comparison report for structure {label}");
    out!(
        "  experimental: f_n = {:.6} kHz, zeta = {:.6e}, c_m = {:.6e} N·s/m, k_m = {:.6e} N/m",
        ident.resonant_khz, ident.zeta, ident.damping, ident.stiffness
    );
    out!(
        "  lumped suspension stiffness k_struct = {:.6e} N/m ({:+.2}% of measured k_m)",
        k_struct,
        (k_struct / ident.stiffness - 1.0) * 100.0
    );
    let mut csv = String::from(
        "structure_label,source,f_khz,c_ns_per_m,k_n_per_m,k_struct_n_per_m,k_decomposed_n_per_m,k_vs_measured,c_vs_measured\n",
    );
    csv.push_str(&format!(
        "{},experimental,{:.9e},{:.9e},{:.9e},{:.9e},,,\n",
        label, ident.resonant_khz, ident.damping, ident.stiffness, k_struct
    ));
    for (method, at) in &fluid {
        let k_total = k_struct + at.stiffness;
        out!(
            "  fluid at f_n ({method}): c = {:.6e} N·s/m ({:.1}% of measured total c_m), k = {:.6e} N/m",
            at.damping,
            at.damping / ident.damping * 100.0,
            at.stiffness
        );
        out!(
            "    decomposition k_struct + k_fluid = {:.6e} N/m vs measured k_m = {:.6e} ({:+.2}%)",
            k_total,
            ident.stiffness,
            (k_total / ident.stiffness - 1.0) * 100.0
        );
        csv.push_str(&format!(
            "{},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:+.4e},{:+.4e}\n",
            label,
            method,
            ident.resonant_khz,
            at.damping,
            at.stiffness,
            k_struct,
            k_total,
            k_total / ident.stiffness - 1.0,
            at.damping / ident.damping - 1.0,
        ));
    }
    out!(
        "  note: the measured values carry structural and fluidic shares jointly; \
         the damping rows compare the fluid share against the measured total"
    );
    let out = write_file(&cfg.output_dir, &format!("compare_{label}.csv"), &csv)?;
    out!("wrote {}", out.display());
    Ok(())
}
