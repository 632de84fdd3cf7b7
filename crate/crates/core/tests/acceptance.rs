//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured numbers (visible with `--nocapture`, or automatically
//! for failing criteria).

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use sqfilm::config::{Method, RunConfig};
use sqfilm::frf::{identify, identify_curve, synthesize_frf};
use sqfilm::gasfilm::{
    effective_viscosity, hole_channels, knudsen, mesh_film, mesh_rectangle, ChannelOptions,
    GasProps,
};
use sqfilm::geometry::{catalog, derive_hole_grid, solid_volume, total_mass, MaterialProps};
use sqfilm::projection::project;
use sqfilm::reynolds::{
    absorbed_power, assemble, extract_ck, integrate_force, nodal_forces, solve_harmonic,
    uniform_velocity,
};
use sqfilm::structure::{bending_modes, lumped_stiffness, natural_frequency, piston_mass_ratio};
use sqfilm::sweep::{frequency_grid, run_converge, run_sweep, SweepResult};
use sqfilm::Cplx;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Measured resonance and coefficient table for the six built-in structures:
/// label, f_n, f_lo, f_hi \[kHz\], zeta, c_m \[N·s/m\], k_m \[N/m\],
/// modal mass \[kg\], total mass \[kg\], volume \[µm³\].
const MEASURED: [(&str, f64, f64, f64, f64, f64, f64, f64, f64, f64); 6] = [
    ("A", 201.637, 195.601, 206.638, 2.737e-2, 4.738e-5, 1.097e3, 6.832e-10, 7.442e-10, 3.105e5),
    ("B", 204.329, 201.645, 207.373, 1.401e-2, 1.946e-5, 8.912e2, 5.407e-10, 6.054e-10, 2.653e5),
    ("C", 211.011, 209.250, 212.740, 8.270e-3, 9.863e-6, 7.907e2, 4.498e-10, 5.080e-10, 2.035e5),
    ("D", 222.282, 220.578, 223.975, 7.641e-3, 7.609e-6, 6.954e2, 3.565e-10, 4.162e-10, 1.693e5),
    ("E", 173.904, 170.829, 176.900, 1.745e-2, 3.822e-5, 1.196e3, 1.002e-9, 1.059e-9, 4.654e5),
    ("F", 138.564, 135.790, 141.286, 1.983e-2, 6.744e-5, 1.480e3, 1.953e-9, 2.004e-9, 8.982e5),
];

struct Sweeps {
    by_label: BTreeMap<String, SweepResult<f64>>,
    elapsed_s: f64,
}

/// Full default sweeps (both methods, 40 points/decade, 1 kHz..10 MHz) for
/// all six structures, computed once and shared across criteria.
fn catalog_sweeps() -> &'static Sweeps {
    static SWEEPS: OnceLock<Sweeps> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let start = Instant::now();
        let mut by_label = BTreeMap::new();
        for entry in &MEASURED {
            let mut cfg = RunConfig::<f64>::default();
            cfg.structure = entry.0.into();
            cfg.method = Method::Both;
            let result = run_sweep(&cfg).expect("catalog sweep");
            by_label.insert(entry.0.to_string(), result);
        }
        Sweeps {
            by_label,
            elapsed_s: start.elapsed().as_secs_f64(),
        }
    })
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn criterion_1_frf_identification_regression() {
    let start = Instant::now();
    let mut worst: (f64, String) = (0.0, String::new());
    for entry in &MEASURED {
        let (label, f_n, f1, f2, zeta, c_m, k_m, m_m, ..) = *entry;
        let ident = identify(f_n, (f1, f2), m_m).expect("identification");
        for (name, got, want) in [
            ("zeta", ident.zeta, zeta),
            ("c_m", ident.damping, c_m),
            ("k_m", ident.stiffness, k_m),
        ] {
            let err = rel(got, want);
            if err > worst.0 {
                worst = (err, format!("{label} {name}: {got:.6e} vs {want:.6e}"));
            }
            assert!(
                err < 5e-3,
                "criterion 1 FAIL: {label} {name} = {got:.6e} vs measured {want:.6e} ({:.3}%)",
                err * 100.0
            );
        }
    }
    let dt = start.elapsed().as_secs_f64();
    println!(
        "[criterion 1] PASS - half-power identification reproduces all six \
         measured zeta/c/k within 0.5% (worst {:.4}% at {}); {:.3} s",
        worst.0 * 100.0,
        worst.1,
        dt
    );
    assert!(dt < 1.0, "criterion 1 runtime {dt:.3} s exceeds 1 s");
}

#[test]
fn criterion_2_round_trip_identification() {
    let start = Instant::now();
    let grid: Vec<f64> = {
        let mut f = 50.0;
        let mut out = Vec::new();
        while f <= 400.0 {
            out.push(f);
            f += 0.5;
        }
        out
    };
    let mut worst = (0.0_f64, String::new());
    for entry in &MEASURED {
        let (label, _, _, _, zeta, c_m, k_m, m_m, ..) = *entry;
        let curve = synthesize_frf(c_m, k_m, m_m, &grid).expect("synthesis");
        let (ident, _) = identify_curve(&curve, m_m).expect("identification chain");
        let err = rel(ident.zeta, zeta);
        if err > worst.0 {
            worst = (err, label.to_string());
        }
        assert!(
            err < 0.01,
            "criterion 2 FAIL: {label} recovered zeta {:.6e} vs {zeta:.6e} ({:.3}%)",
            ident.zeta,
            err * 100.0
        );
    }
    let dt = start.elapsed().as_secs_f64();
    println!(
        "[criterion 2] PASS - synthesize->fit->peak->half-power recovers zeta \
         within 1% for all six structures (worst {:.3}% at {}); {:.3} s",
        worst.0 * 100.0,
        worst.1,
        dt
    );
    assert!(dt < 10.0, "criterion 2 runtime {dt:.3} s exceeds 10 s");
}

#[test]
fn criterion_3_lumped_structural_model() {
    let start = Instant::now();
    let mat = MaterialProps::<f64>::polysilicon();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for entry in &MEASURED {
        let (label, f_n_khz, _, _, _, _, k_m, ..) = *entry;
        let s = catalog::<f64>()
            .into_iter()
            .find(|s| s.label == label)
            .unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let k_struct = lumped_stiffness(&s, &mat);
        let ratio = piston_mass_ratio::<f64>(label).unwrap();
        let m_m = ratio * total_mass(&s, &grid, &mat);
        let f_pred = natural_frequency(k_struct, m_m);
        let k_err = rel(k_struct, k_m);
        let f_err = rel(f_pred, f_n_khz * 1e3);
        lines.push(format!(
            "  {label}: k_struct = {k_struct:.4e} vs measured {k_m:.4e} ({:+.2}%), \
             f_pred = {:.2} kHz vs {f_n_khz} kHz ({:+.2}%)",
            (k_struct / k_m - 1.0) * 100.0,
            f_pred / 1e3,
            (f_pred / (f_n_khz * 1e3) - 1.0) * 100.0
        ));
        if ["A", "B", "E", "F"].contains(&label) && k_err >= 0.05 {
            failures.push(format!("{label} stiffness off by {:.2}%", k_err * 100.0));
        }
        if f_err >= 0.04 {
            failures.push(format!("{label} frequency off by {:.2}%", f_err * 100.0));
        }
    }
    let dt = start.elapsed().as_secs_f64();
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "[criterion 3] {verdict} - cantilever suspension model vs measured \
         stiffness (A,B,E,F @5%) and resonance (all @4%); {:.3} s",
        dt
    );
    for l in &lines {
        println!("{l}");
    }
    assert!(dt < 1.0, "criterion 3 runtime {dt:.3} s exceeds 1 s");
    assert!(
        failures.is_empty(),
        "criterion 3 FAIL: {}",
        failures.join("; ")
    );
}

#[test]
fn criterion_4_solver_oracle_equivalence() {
    let start = Instant::now();
    let gas = GasProps::<f64>::air();
    let gap = 1.6;
    let mesh = mesh_rectangle(200.0, 100.0, 2.5).expect("W/40 mesh");
    let sys = assemble(&mesh, &[], &gas, gap).expect("assembly");
    let eta_eff = effective_viscosity(&gas, knudsen(&gas, gap).unwrap());
    let spec = sqfilm::config::SweepSpec {
        f_min_hz: 1e3_f64,
        f_max_hz: 1e7,
        points_per_decade: 40,
    };
    let mut worst = (0.0_f64, 0.0_f64);
    for f in frequency_grid(&spec) {
        let omega = TWO_PI * f;
        let v = uniform_velocity(&mesh, 1.0);
        let sol = solve_harmonic(&sys, omega, &v).unwrap();
        let force = integrate_force(&sol, &mesh);
        let fem = extract_ck(force, Cplx::new(1.0, 0.0), omega).unwrap();
        let oracle = sqfilm::blech::blech_oracle(200.0, 100.0, gap, eta_eff, gas.ambient_pressure, omega);
        let ec = rel(fem.damping, oracle.damping);
        let ek = rel(fem.stiffness, oracle.stiffness);
        if ec > worst.0 {
            worst = (ec, f);
        }
        if ek > worst.0 {
            worst = (ek, f);
        }
        assert!(
            ec <= 0.02 && ek <= 0.02,
            "criterion 4 FAIL at {f} Hz: damping err {:.3}%, spring err {:.3}%",
            ec * 100.0,
            ek * 100.0
        );
    }
    let dt = start.elapsed().as_secs_f64();
    println!(
        "[criterion 4] PASS - finite elements vs series oracle within 2% over \
         1 kHz..10 MHz (worst {:.3}% at {:.3e} Hz); {:.1} s",
        worst.0 * 100.0,
        worst.1,
        dt
    );
    assert!(dt < 120.0, "criterion 4 runtime {dt:.1} s exceeds 2 min");
}

#[test]
fn criterion_5_method_equivalence() {
    let sweeps = catalog_sweeps();
    let mut worst = (0.0_f64, String::new());
    for (label, result) in &sweeps.by_label {
        for row in &result.rows {
            let i = row.imposed.expect("imposed pair");
            let m = row.modal.expect("modal pair");
            for (name, a, b) in [
                ("damping", i.damping, m.damping),
                ("stiffness", i.stiffness, m.stiffness),
            ] {
                let err = rel(a, b);
                if err > worst.0 {
                    worst = (err, format!("{label} {name} at {:.3e} Hz", row.frequency_hz));
                }
                assert!(
                    err < 5e-3,
                    "criterion 5 FAIL: {label} {name} differs by {:.3e} at {:.3e} Hz",
                    err,
                    row.frequency_hz
                );
            }
        }
    }
    println!(
        "[criterion 5] PASS - imposed-velocity and piston-mode projection agree \
         within 0.5% over the full sweep for all six structures \
         (worst {:.3e} at {}); sweeps took {:.1} s",
        worst.0, worst.1, sweeps.elapsed_s
    );
    assert!(
        sweeps.elapsed_s < 600.0,
        "criterion 5 runtime {:.1} s exceeds 10 min",
        sweeps.elapsed_s
    );
}

#[test]
fn criterion_6_qualitative_trends() {
    let start = Instant::now();
    let sweeps = catalog_sweeps();
    let get = |l: &str| &sweeps.by_label[l];
    let n = get("A").rows.len();
    // hole side grows A -> B -> C -> D: both coefficients fall
    for chain in [["A", "B"], ["B", "C"], ["C", "D"]] {
        let (hi, lo) = (get(chain[0]), get(chain[1]));
        for idx in 0..n {
            let a = hi.rows[idx].imposed.unwrap();
            let b = lo.rows[idx].imposed.unwrap();
            assert!(
                a.damping > b.damping && a.stiffness > b.stiffness,
                "criterion 6 FAIL: {}>{} ordering broken at {:.3e} Hz \
                 (c {:.4e} vs {:.4e}, k {:.4e} vs {:.4e})",
                chain[0],
                chain[1],
                a.frequency_hz,
                a.damping,
                b.damping,
                a.stiffness,
                b.stiffness
            );
        }
    }
    // plate width grows B -> E -> F: both coefficients rise
    for chain in [["B", "E"], ["E", "F"]] {
        let (lo, hi) = (get(chain[0]), get(chain[1]));
        for idx in 0..n {
            let a = lo.rows[idx].imposed.unwrap();
            let b = hi.rows[idx].imposed.unwrap();
            assert!(
                a.damping < b.damping && a.stiffness < b.stiffness,
                "criterion 6 FAIL: {}<{} ordering broken at {:.3e} Hz",
                chain[0],
                chain[1],
                a.frequency_hz
            );
        }
    }
    // per-structure frequency trends
    for (label, result) in &sweeps.by_label {
        for w in result.rows.windows(2) {
            let a = w[0].imposed.unwrap();
            let b = w[1].imposed.unwrap();
            assert!(
                b.stiffness > a.stiffness && b.damping < a.damping,
                "criterion 6 FAIL: {label} spring must rise and damping fall \
                 with frequency at {:.3e} Hz",
                a.frequency_hz
            );
        }
    }
    // mesh refinement raises both coefficients monotonically, converged at
    // the last step
    let mut cfg = RunConfig::<f64>::default();
    cfg.structure = "A".into();
    let d = 4.0;
    let rows = run_converge(&cfg, &[d, d / 2.0, d / 4.0, d / 8.0]).expect("convergence study");
    for w in rows.windows(2) {
        assert!(
            w[1].pair.damping > w[0].pair.damping
                && w[1].pair.stiffness > w[0].pair.stiffness,
            "criterion 6 FAIL: refinement {} -> {} µm did not raise both coefficients",
            w[0].element_size,
            w[1].element_size
        );
    }
    let last = rows[rows.len() - 1].pair;
    let prev = rows[rows.len() - 2].pair;
    let dc = rel(last.damping, prev.damping);
    let dk = rel(last.stiffness, prev.stiffness);
    assert!(
        dc < 0.03 && dk < 0.03,
        "criterion 6 FAIL: last refinement step moved c by {:.2}% and k by {:.2}%",
        dc * 100.0,
        dk * 100.0
    );
    println!(
        "[criterion 6] PASS - catalog orderings hold at every swept frequency, \
         spring rises / damping falls with frequency, refinement raises both \
         coefficients (last step dc {:.2}%, dk {:.2}%); {:.1} s",
        dc * 100.0,
        dk * 100.0,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_7_physical_property_suite() {
    let start = Instant::now();
    let gas = GasProps::<f64>::air();
    let mat = MaterialProps::<f64>::polysilicon();
    for entry in &MEASURED {
        let label = entry.0;
        let s = catalog::<f64>()
            .into_iter()
            .find(|s| s.label == label)
            .unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let h = s.support_width.min(s.hole_side).min(s.hole_spacing);
        let mesh = mesh_film(&s, &grid, h).unwrap();
        let channels = hole_channels(&s, &grid, &gas, ChannelOptions::default());
        let sys = assemble(&mesh, &channels, &gas, s.gap).unwrap();
        // boundary pressure exactly zero, energy absorbed, at several decades
        for dec in 0..=4 {
            let omega = TWO_PI * 1e3 * 10f64.powi(dec);
            let v = uniform_velocity(&mesh, 1.0);
            let sol = solve_harmonic(&sys, omega, &v).unwrap();
            for b in mesh.boundary_nodes() {
                assert_eq!(
                    sol.pressure[b],
                    Cplx::new(0.0, 0.0),
                    "criterion 7 FAIL: {label} ambient node carries pressure"
                );
            }
            let forces = nodal_forces(&sol, &mesh);
            let p = absorbed_power(&forces, &sol.velocity);
            assert!(
                p >= 0.0,
                "criterion 7 FAIL: {label} film pumps {p:.3e} W into the wall"
            );
        }
        // spring quadratic in omega at the low end
        let ck1 = {
            let omega = TWO_PI * 1e3;
            let v = uniform_velocity(&mesh, 1.0);
            let sol = solve_harmonic(&sys, omega, &v).unwrap();
            extract_ck(integrate_force(&sol, &mesh), Cplx::new(1.0, 0.0), omega).unwrap()
        };
        let ck2 = {
            let omega = TWO_PI * 2e3;
            let v = uniform_velocity(&mesh, 1.0);
            let sol = solve_harmonic(&sys, omega, &v).unwrap();
            extract_ck(integrate_force(&sol, &mesh), Cplx::new(1.0, 0.0), omega).unwrap()
        };
        let ratio = ck2.stiffness / ck1.stiffness;
        assert!(
            (ratio - 4.0).abs() < 0.04,
            "criterion 7 FAIL: {label} spring scales as omega^{:.3} at low frequency",
            ratio.log2()
        );
        // linearity in the velocity amplitude
        let fac = sys.factor(TWO_PI * 2.5e5).unwrap();
        let s1 = fac.solve(&uniform_velocity(&mesh, 1.0)).unwrap();
        let s2 = fac.solve(&uniform_velocity(&mesh, 2.0)).unwrap();
        let scale = s2.pressure.iter().map(|p| p.norm()).fold(0.0, f64::max);
        for (a, b) in s1.pressure.iter().zip(&s2.pressure) {
            assert!(
                (*a * 2.0 - *b).norm() <= 1e-12 * scale,
                "criterion 7 FAIL: {label} response is not linear in velocity"
            );
        }
        // reciprocity and piston/antisymmetric cross-talk
        let modes = bending_modes(&s, &grid, &mat, &mesh, 3).unwrap();
        let roms = project(&modes, &sys, &mesh, &[entry.1 * 1e3]).unwrap();
        let rom = &roms[0];
        for i in 0..rom.n {
            for j in 0..rom.n {
                let sc = rom.damping_at(i, i).abs().max(rom.damping_at(j, j).abs());
                let sk = rom
                    .stiffness_at(i, i)
                    .abs()
                    .max(rom.stiffness_at(j, j).abs());
                assert!(
                    (rom.damping_at(i, j) - rom.damping_at(j, i)).abs() <= 1e-6 * sc,
                    "criterion 7 FAIL: {label} damping matrix not reciprocal"
                );
                assert!(
                    (rom.stiffness_at(i, j) - rom.stiffness_at(j, i)).abs() <= 1e-6 * sk,
                    "criterion 7 FAIL: {label} stiffness matrix not reciprocal"
                );
            }
        }
        for j in 1..rom.n {
            assert!(
                rom.damping_at(0, j).abs() <= 1e-8 * rom.damping_at(0, 0),
                "criterion 7 FAIL: {label} piston-tilt cross-talk is {:.3e}",
                rom.damping_at(0, j) / rom.damping_at(0, 0)
            );
            assert!(rom.stiffness_at(0, j).abs() <= 1e-8 * rom.stiffness_at(0, 0));
        }
    }
    println!(
        "[criterion 7] PASS - zero ambient pressure, non-negative absorbed power, \
         quadratic low-frequency spring, exact linearity, reciprocity within 1e-6 \
         and vanishing piston/antisymmetric cross-talk on all six structures; {:.1} s",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_8_geometry_regression() {
    let start = Instant::now();
    let mat = MaterialProps::<f64>::polysilicon();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for entry in &MEASURED {
        let (label, _, _, _, _, _, _, _, mass_meas, vol_meas) = *entry;
        let s = catalog::<f64>()
            .into_iter()
            .find(|s| s.label == label)
            .unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let vol = solid_volume(&s, &grid);
        let mass = total_mass(&s, &grid, &mat);
        let ev = rel(vol, vol_meas);
        let em = rel(mass, mass_meas);
        lines.push(format!(
            "  {label}: {} holes, volume {vol:.4e} vs {vol_meas:.4e} µm³ ({:+.2}%), \
             mass {mass:.4e} vs {mass_meas:.4e} kg ({:+.3}%)",
            grid.hole_count(),
            (vol / vol_meas - 1.0) * 100.0,
            (mass / mass_meas - 1.0) * 100.0
        ));
        if ev >= 0.05 {
            failures.push(format!("{label} volume off by {:.2}%", ev * 100.0));
        }
        if em >= 0.05 {
            failures.push(format!("{label} mass off by {:.2}%", em * 100.0));
        }
    }
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "[criterion 8] {verdict} - derived hole grids vs published volumes and \
         masses at 5%; {:.3} s",
        start.elapsed().as_secs_f64()
    );
    for l in &lines {
        println!("{l}");
    }
    assert!(
        failures.is_empty(),
        "criterion 8 FAIL: {}",
        failures.join("; ")
    );
}
