//! Frequency-sweep execution: logarithmic grids, parallel per-frequency
//! solves, convergence studies and the CSV formats the tool emits.
//!
//! Frequencies of a sweep are independent; they are distributed over worker
//! threads (`SQFILM_THREADS`, defaulting to the available parallelism) and
//! merged back by index, so output files are byte-identical between runs.

use crate::config::{Method, RunConfig, SweepSpec};
use crate::gasfilm::{hole_channels, mesh_film, FilmMesh};
use crate::geometry::{HoleGrid, TestStructure};
use crate::projection::{project_at, Normalization, RomMatrices};
use crate::reynolds::{
    assemble, extract_ck, integrate_force, uniform_velocity, AssembledSystem, CKPair,
};
use crate::structure::{bending_modes, lumped_stiffness, natural_frequency, ModalModel};
use crate::{lit, Cplx, Error, Real, Result};

/// Logarithmic frequency grid, endpoints included.
pub fn frequency_grid<T: Real>(spec: &SweepSpec<T>) -> Vec<T> {
    let decades = (spec.f_max_hz / spec.f_min_hz).log10();
    let steps = (decades * T::from_usize(spec.points_per_decade).unwrap())
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let log_lo = spec.f_min_hz.log10();
    let log_hi = spec.f_max_hz.log10();
    (0..=steps)
        .map(|i| {
            if i == steps {
                spec.f_max_hz
            } else {
                let frac = T::from_usize(i).unwrap() / T::from_usize(steps).unwrap();
                T::from_f64(10.0).unwrap().powf(log_lo + (log_hi - log_lo) * frac)
            }
        })
        .collect()
}

/// Worker count: `SQFILM_THREADS` when set, the machine parallelism otherwise.
pub fn thread_count() -> usize {
    if let Ok(v) = std::env::var("SQFILM_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Deterministic parallel map over an index range: results land by index.
pub fn par_map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_count().min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunks: Vec<(usize, &mut [Option<T>])> = {
        // strided assignment keeps load even across the frequency axis
        let mut slots: Vec<(usize, &mut [Option<T>])> = Vec::new();
        let mut rest = out.as_mut_slice();
        let mut start = 0;
        let per = count.div_ceil(workers);
        while !rest.is_empty() {
            let take = per.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            slots.push((start, head));
            start += take;
            rest = tail;
        }
        slots
    };
    std::thread::scope(|scope| {
        for (start, slot) in chunks {
            let f = &f;
            scope.spawn(move || {
                for (k, cell) in slot.iter_mut().enumerate() {
                    *cell = Some(f(start + k));
                }
            });
        }
    });
    out.into_iter().map(|v| v.expect("worker filled slot")).collect()
}

/// One frequency point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow<T> {
    pub frequency_hz: T,
    /// Uniform-velocity extraction.
    pub imposed: Option<CKPair<T>>,
    /// Piston-mode diagonal of the modal projection.
    pub modal: Option<CKPair<T>>,
    /// Full modal matrices when the projection route ran.
    pub rom: Option<RomMatrices<T>>,
}

/// Everything a sweep produced for one structure.
#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub structure: TestStructure<T>,
    pub grid: HoleGrid<T>,
    pub element_size: T,
    pub node_count: usize,
    pub rows: Vec<SweepRow<T>>,
    pub modes: Option<ModalModel<T>>,
}

/// Builds mesh and operator for a configuration.
pub fn build_system<T: Real>(
    cfg: &RunConfig<T>,
) -> Result<(TestStructure<T>, HoleGrid<T>, FilmMesh<T>, AssembledSystem<T>)> {
    let s = cfg.resolve_structure()?;
    let grid = cfg.derive_grid(&s)?;
    let h = cfg.element_size.resolve(&s);
    let mesh = mesh_film(&s, &grid, h)?;
    let channels = hole_channels(&s, &grid, &cfg.gas, cfg.channel);
    let sys = assemble(&mesh, &channels, &cfg.gas, s.gap)?;
    Ok((s, grid, mesh, sys))
}

/// Runs the configured sweep; per-frequency failures are aggregated, never
/// silently dropped.
pub fn run_sweep<T: Real>(cfg: &RunConfig<T>) -> Result<SweepResult<T>> {
    cfg.validate()?;
    let (s, grid, mesh, sys) = build_system(cfg)?;
    let modes = if cfg.method.runs_modal() {
        Some(bending_modes(&s, &grid, &cfg.material, &mesh, cfg.modes)?)
    } else {
        None
    };
    let freqs = frequency_grid(&cfg.sweep);
    let two_pi = lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap();

    let work = |idx: usize| -> Result<SweepRow<T>> {
        let f = freqs[idx];
        let omega = two_pi * f;
        let fac = sys
            .factor(omega)
            .map_err(|e| Error::Solve(format!("{f} Hz: {e}")))?;
        let imposed = if cfg.method.runs_imposed() {
            let v = uniform_velocity(&mesh, T::one());
            let sol = fac
                .solve(&v)
                .map_err(|e| Error::Solve(format!("{f} Hz: {e}")))?;
            let force = integrate_force(&sol, &mesh);
            Some(extract_ck(force, Cplx::new(T::one(), T::zero()), omega)?)
        } else {
            None
        };
        let (modal, rom) = if let Some(model) = &modes {
            let rom = project_at(model, &fac, &mesh, Normalization::MaxUnit, T::one())
                .map_err(|e| Error::Solve(format!("{f} Hz: {e}")))?;
            (
                Some(CKPair {
                    frequency_hz: f,
                    damping: rom.damping_at(0, 0),
                    stiffness: rom.stiffness_at(0, 0),
                }),
                Some(rom),
            )
        } else {
            (None, None)
        };
        Ok(SweepRow {
            frequency_hz: f,
            imposed,
            modal,
            rom,
        })
    };

    let results = par_map_indexed(freqs.len(), work);
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Solve(format!(
            "{} of {} frequencies failed: {}",
            failures.len(),
            freqs.len(),
            failures.join("; ")
        )));
    }
    Ok(SweepResult {
        structure: s,
        grid,
        element_size: mesh.element_size,
        node_count: mesh.node_count(),
        rows,
        modes,
    })
}

/// One line of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergeRow<T> {
    pub element_size: T,
    pub fraction_of_support_width: T,
    pub node_count: usize,
    pub pair: CKPair<T>,
}

/// Reference frequency of a configuration: explicit, or the lumped-model
/// resonance prediction.
pub fn reference_frequency<T: Real>(cfg: &RunConfig<T>, s: &TestStructure<T>) -> Result<T> {
    if let Some(f) = cfg.reference_frequency_hz {
        return Ok(f);
    }
    let grid = cfg.derive_grid(s)?;
    let mesh = mesh_film(s, &grid, cfg.element_size.resolve(s))?;
    let piston = crate::structure::piston_mode(s, &grid, &cfg.material, &mesh);
    let k = lumped_stiffness(s, &cfg.material);
    Ok(natural_frequency(k, piston.modal_mass))
}

/// Computes damping and stiffness at a fixed reference frequency for a list
/// of element sizes.
pub fn run_converge<T: Real>(cfg: &RunConfig<T>, sizes: &[T]) -> Result<Vec<ConvergeRow<T>>> {
    if sizes.len() < 2 {
        return Err(Error::Config {
            line: 0,
            field: "sizes".into(),
            message: format!(
                "a convergence study needs at least two element sizes, got {}",
                sizes.len()
            ),
        });
    }
    let s = cfg.resolve_structure()?;
    let grid = cfg.derive_grid(&s)?;
    let f_ref = reference_frequency(cfg, &s)?;
    let omega = lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap() * f_ref;
    let rows = par_map_indexed(sizes.len(), |idx| -> Result<ConvergeRow<T>> {
        let h = sizes[idx];
        let mesh = mesh_film(&s, &grid, h)?;
        let channels = hole_channels(&s, &grid, &cfg.gas, cfg.channel);
        let sys = assemble(&mesh, &channels, &cfg.gas, s.gap)?;
        let v = uniform_velocity(&mesh, T::one());
        let sol = sys.factor(omega)?.solve(&v)?;
        let force = integrate_force(&sol, &mesh);
        Ok(ConvergeRow {
            element_size: h,
            fraction_of_support_width: h / s.support_width,
            node_count: mesh.node_count(),
            pair: extract_ck(force, Cplx::new(T::one(), T::zero()), omega)?,
        })
    });
    rows.into_iter().collect()
}

// --- CSV formats ---------------------------------------------------------

pub const SWEEP_CSV_HEADER: &str = "frequency_hz,c_ns_per_m,k_n_per_m,method,structure_label\n";

/// Per-method sweep CSV.
pub fn sweep_csv<T: Real>(result: &SweepResult<T>, method: Method) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    for row in &result.rows {
        let pair = match method {
            Method::ImposedVelocity => row.imposed.as_ref(),
            Method::ModalProjection => row.modal.as_ref(),
            Method::Both => None,
        };
        if let Some(p) = pair {
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{},{}\n",
                row.frequency_hz,
                p.damping,
                p.stiffness,
                method.name(),
                result.structure.label
            ));
        }
    }
    out
}

/// Merged comparison CSV for `method = both`.
pub fn comparison_csv<T: Real>(result: &SweepResult<T>) -> String {
    let mut out = String::from(
        "frequency_hz,c_imposed_ns_per_m,k_imposed_n_per_m,c_modal_ns_per_m,k_modal_n_per_m,rel_diff_c,rel_diff_k\n",
    );
    for row in &result.rows {
        if let (Some(i), Some(m)) = (&row.imposed, &row.modal) {
            let rel = |a: T, b: T| ((a - b) / b).abs();
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.3e},{:.3e}\n",
                row.frequency_hz,
                i.damping,
                i.stiffness,
                m.damping,
                m.stiffness,
                rel(i.damping, m.damping),
                rel(i.stiffness, m.stiffness),
            ));
        }
    }
    out
}

/// Modal matrices CSV: one row per (frequency, source, target).
pub fn rom_csv<T: Real>(result: &SweepResult<T>) -> String {
    let mut out = String::from("frequency_hz,i,j,c_ij_ns_per_m,k_ij_n_per_m\n");
    for row in &result.rows {
        if let Some(rom) = &row.rom {
            for i in 0..rom.n {
                for j in 0..rom.n {
                    out.push_str(&format!(
                        "{:.9e},{},{},{:.9e},{:.9e}\n",
                        row.frequency_hz,
                        i + 1,
                        j + 1,
                        rom.damping_at(i, j),
                        rom.stiffness_at(i, j),
                    ));
                }
            }
        }
    }
    out
}

/// Summary of the modal-matrix diagonals interpolated at one reference
/// frequency (the structure's resonance by default).
pub fn rom_resonance_csv<T: Real>(result: &SweepResult<T>, f_ref_hz: T) -> String {
    let mut out =
        String::from("structure_label,mode,mode_label,f_ref_hz,c_diag_ns_per_m,k_diag_n_per_m\n");
    let Some(first) = result.rows.iter().find_map(|r| r.rom.as_ref()) else {
        return out;
    };
    for mode in 0..first.n {
        let pairs: Vec<CKPair<T>> = result
            .rows
            .iter()
            .filter_map(|r| r.rom.as_ref())
            .map(|rom| CKPair {
                frequency_hz: rom.frequency_hz,
                damping: rom.damping_at(mode, mode),
                stiffness: rom.stiffness_at(mode, mode),
            })
            .collect();
        if let Some(at) = interpolate_pair(&pairs, f_ref_hz) {
            out.push_str(&format!(
                "{},{},{},{:.9e},{:.9e},{:.9e}\n",
                result.structure.label,
                mode + 1,
                first.labels[mode],
                f_ref_hz,
                at.damping,
                at.stiffness
            ));
        }
    }
    out
}

/// Convergence study CSV.
pub fn converge_csv<T: Real>(rows: &[ConvergeRow<T>], label: &str) -> String {
    let mut out = String::from(
        "element_size_um,size_over_d,nodes,frequency_hz,c_ns_per_m,k_n_per_m,structure_label\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:.9e},{:.9e},{},{:.9e},{:.9e},{:.9e},{}\n",
            r.element_size,
            r.fraction_of_support_width,
            r.node_count,
            r.pair.frequency_hz,
            r.pair.damping,
            r.pair.stiffness,
            label
        ));
    }
    out
}

/// Parses the per-method sweep CSV back into pairs.
pub fn parse_sweep_csv<T: Real>(text: &str) -> Result<Vec<(CKPair<T>, String, String)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, head)) if head.trim() == SWEEP_CSV_HEADER.trim() => {}
        Some((_, head)) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected sweep CSV header `{head}`"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty sweep CSV".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 columns, got {}", cols.len()),
            });
        }
        let num = |txt: &str| -> Result<T> {
            txt.trim()
                .parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("cannot parse number `{txt}`"),
                })
        };
        out.push((
            CKPair {
                frequency_hz: num(cols[0])?,
                damping: num(cols[1])?,
                stiffness: num(cols[2])?,
            },
            cols[3].trim().to_string(),
            cols[4].trim().to_string(),
        ));
    }
    Ok(out)
}

/// Linear interpolation of a swept coefficient pair at a frequency.
pub fn interpolate_pair<T: Real>(pairs: &[CKPair<T>], f_hz: T) -> Option<CKPair<T>> {
    if pairs.is_empty() {
        return None;
    }
    if f_hz <= pairs[0].frequency_hz {
        return Some(pairs[0]);
    }
    if f_hz >= pairs[pairs.len() - 1].frequency_hz {
        return Some(pairs[pairs.len() - 1]);
    }
    let i = pairs
        .windows(2)
        .position(|w| w[0].frequency_hz <= f_hz && f_hz <= w[1].frequency_hz)?;
    let (a, b) = (&pairs[i], &pairs[i + 1]);
    let t = (f_hz - a.frequency_hz) / (b.frequency_hz - a.frequency_hz);
    Some(CKPair {
        frequency_hz: f_hz,
        damping: a.damping + (b.damping - a.damping) * t,
        stiffness: a.stiffness + (b.stiffness - a.stiffness) * t,
    })
}
