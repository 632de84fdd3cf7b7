//! Modal projection of the film onto a structural mode basis.
//!
//! Every structural mode drives the film as an imposed velocity profile; the
//! resulting pressure is integrated to consistent nodal forces and projected
//! back onto every mode. Diagonal entries are the effective damping and
//! stiffness of each mode, off-diagonal entries are the film-borne cross-talk
//! between modes. One matrix factorization per frequency is shared by all
//! source modes.

use crate::gasfilm::FilmMesh;
use crate::reynolds::{extract_ck, nodal_forces, AssembledSystem, CKPair};
use crate::structure::ModalModel;
use crate::{lit, Cplx, Error, Real, Result};

/// Frequency-dependent modal damping and stiffness matrices.
#[derive(Debug, Clone)]
pub struct RomMatrices<T> {
    pub frequency_hz: T,
    /// Mode count n; matrices are n×n row-major.
    pub n: usize,
    /// Damping matrix [N·s/m in max-normalized mode units].
    pub damping: Vec<T>,
    /// Stiffness matrix [N/m in max-normalized mode units].
    pub stiffness: Vec<T>,
    pub labels: Vec<String>,
}

impl<T: Real> RomMatrices<T> {
    pub fn damping_at(&self, source: usize, target: usize) -> T {
        self.damping[source * self.n + target]
    }

    pub fn stiffness_at(&self, source: usize, target: usize) -> T {
        self.stiffness[source * self.n + target]
    }
}

/// How mode shapes are scaled before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Shapes with max |φ| = 1; piston entries are in plain N·s/m and N/m.
    #[default]
    MaxUnit,
    /// Shapes scaled by 1/sqrt(modal mass); entries in modal coordinates.
    MassUnit,
}

/// Projects the film onto the mode basis at each frequency.
pub fn project<T: Real>(
    modes: &ModalModel<T>,
    sys: &AssembledSystem<T>,
    mesh: &FilmMesh<T>,
    freqs_hz: &[T],
) -> Result<Vec<RomMatrices<T>>> {
    project_with(modes, sys, mesh, freqs_hz, Normalization::MaxUnit, T::one())
}

/// [`project`] with explicit normalization and source velocity amplitude;
/// the amplitude cancels exactly and exists for linearity checks.
pub fn project_with<T: Real>(
    modes: &ModalModel<T>,
    sys: &AssembledSystem<T>,
    mesh: &FilmMesh<T>,
    freqs_hz: &[T],
    normalization: Normalization,
    amplitude: T,
) -> Result<Vec<RomMatrices<T>>> {
    let two_pi = lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap();
    let mut out = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let omega = two_pi * f;
        let fac = sys
            .factor(omega)
            .map_err(|e| Error::Solve(format!("frequency {f} Hz: {e}")))?;
        out.push(project_at(modes, &fac, mesh, normalization, amplitude)?);
    }
    Ok(out)
}

/// Projects all modes through one already-factored frequency point; the
/// factorization is shared read-only across source modes.
pub fn project_at<T: Real>(
    modes: &ModalModel<T>,
    fac: &crate::reynolds::HarmonicFactorization<'_, T>,
    mesh: &FilmMesh<T>,
    normalization: Normalization,
    amplitude: T,
) -> Result<RomMatrices<T>> {
    let n = modes.mode_count();
    if n == 0 {
        return Err(Error::Domain(
            "modal projection needs at least one mode".into(),
        ));
    }
    for m in &modes.modes {
        if m.shape.len() != mesh.node_count() {
            return Err(Error::Assembly(format!(
                "mode `{}` sampled on {} nodes, mesh has {}",
                m.label,
                m.shape.len(),
                mesh.node_count()
            )));
        }
    }
    let scale = |mode_idx: usize| -> T {
        match normalization {
            Normalization::MaxUnit => T::one(),
            Normalization::MassUnit => T::one() / modes.modes[mode_idx].modal_mass.sqrt(),
        }
    };
    let omega = fac.omega();
    let f = omega / (lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap());
    let mut damping = vec![T::zero(); n * n];
    let mut stiffness = vec![T::zero(); n * n];
    for (i, source) in modes.modes.iter().enumerate() {
        let si = scale(i) * amplitude;
        let v: Vec<Cplx<T>> = source
            .shape
            .iter()
            .map(|&p| Cplx::new(p * si, T::zero()))
            .collect();
        let sol = fac
            .solve(&v)
            .map_err(|e| Error::Solve(format!("frequency {f} Hz: {e}")))?;
        let forces = nodal_forces(&sol, mesh);
        for (j, target) in modes.modes.iter().enumerate() {
            let sj = scale(j);
            let mut q = Cplx::new(T::zero(), T::zero());
            for (phi, fr) in target.shape.iter().zip(&forces) {
                q += *fr * (*phi * sj);
            }
            let pair = extract_ck(q, Cplx::new(amplitude, T::zero()), omega)?;
            damping[i * n + j] = pair.damping;
            stiffness[i * n + j] = pair.stiffness;
        }
    }
    Ok(RomMatrices {
        frequency_hz: f,
        n,
        damping,
        stiffness,
        labels: modes.modes.iter().map(|m| m.label.clone()).collect(),
    })
}

/// Effective (diagonal) coefficients of one mode.
pub fn effective_coefficients<T: Real>(rom: &RomMatrices<T>, mode: usize) -> Result<CKPair<T>> {
    if mode >= rom.n {
        return Err(Error::Index(format!(
            "mode {mode} out of range for {} modes",
            rom.n
        )));
    }
    Ok(CKPair {
        frequency_hz: rom.frequency_hz,
        damping: rom.damping_at(mode, mode),
        stiffness: rom.stiffness_at(mode, mode),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasfilm::{hole_channels, mesh_film, ChannelOptions, GasProps};
    use crate::geometry::{catalog_structure, derive_hole_grid, MaterialProps};
    use crate::reynolds::{assemble, integrate_force, solve_harmonic, uniform_velocity};
    use crate::structure::bending_modes;

    fn setup(
        label: &str,
        n_modes: usize,
    ) -> (
        crate::gasfilm::FilmMesh<f64>,
        AssembledSystem<f64>,
        ModalModel<f64>,
    ) {
        let s = catalog_structure::<f64>(label).unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let gas = GasProps::air();
        let mat = MaterialProps::polysilicon();
        let h = s.support_width.min(s.hole_side).min(s.hole_spacing);
        let mesh = mesh_film(&s, &grid, h).unwrap();
        let channels = hole_channels(&s, &grid, &gas, ChannelOptions::default());
        let sys = assemble(&mesh, &channels, &gas, s.gap).unwrap();
        let modes = bending_modes(&s, &grid, &mat, &mesh, n_modes).unwrap();
        (mesh, sys, modes)
    }

    #[test]
    fn piston_projection_equals_imposed_velocity_extraction() {
        let (mesh, sys, modes) = setup("B", 1);
        let freqs = [1e3, 3.1e4, 2.04329e5, 1e6, 1e7];
        let roms = project(&modes, &sys, &mesh, &freqs).unwrap();
        for (rom, &f) in roms.iter().zip(&freqs) {
            let omega = 2.0 * std::f64::consts::PI * f;
            let v = uniform_velocity(&mesh, 1.0);
            let sol = solve_harmonic(&sys, omega, &v).unwrap();
            let force = integrate_force(&sol, &mesh);
            let ck = extract_ck(force, Cplx::new(1.0, 0.0), omega).unwrap();
            let c = rom.damping_at(0, 0);
            let k = rom.stiffness_at(0, 0);
            assert!(
                (c - ck.damping).abs() / ck.damping < 1e-12,
                "f={f}: c {c} vs {}",
                ck.damping
            );
            assert!((k - ck.stiffness).abs() / ck.stiffness < 1e-12);
        }
    }

    #[test]
    fn rom_matrices_are_reciprocal() {
        let (mesh, sys, modes) = setup("A", 6);
        let roms = project(&modes, &sys, &mesh, &[5e4, 8e5]).unwrap();
        for rom in &roms {
            for i in 0..rom.n {
                assert!(rom.damping_at(i, i) >= 0.0, "diagonal damping must be >= 0");
                for j in 0..rom.n {
                    let scale_c = rom.damping_at(i, i).abs().max(rom.damping_at(j, j).abs());
                    let scale_k = rom
                        .stiffness_at(i, i)
                        .abs()
                        .max(rom.stiffness_at(j, j).abs());
                    assert!(
                        (rom.damping_at(i, j) - rom.damping_at(j, i)).abs() <= 1e-6 * scale_c,
                        "C[{i},{j}] vs C[{j},{i}]"
                    );
                    assert!(
                        (rom.stiffness_at(i, j) - rom.stiffness_at(j, i)).abs() <= 1e-6 * scale_k
                    );
                }
            }
        }
    }

    #[test]
    fn antisymmetric_cross_talk_vanishes_on_uniform_gap() {
        let (mesh, sys, modes) = setup("A", 3); // piston, tilt-x, tilt-y
        let roms = project(&modes, &sys, &mesh, &[2.016e5]).unwrap();
        let rom = &roms[0];
        let c_ref = rom.damping_at(0, 0);
        let k_ref = rom.stiffness_at(0, 0);
        for j in 1..3 {
            assert!(
                rom.damping_at(0, j).abs() <= 1e-8 * c_ref,
                "piston-tilt damping cross-talk {}",
                rom.damping_at(0, j) / c_ref
            );
            assert!(rom.stiffness_at(0, j).abs() <= 1e-8 * k_ref);
        }
    }

    #[test]
    fn source_amplitude_cancels() {
        let (mesh, sys, modes) = setup("B", 2);
        let a = project_with(&modes, &sys, &mesh, &[1e5], Normalization::MaxUnit, 1.0).unwrap();
        let b = project_with(&modes, &sys, &mesh, &[1e5], Normalization::MaxUnit, 2.0).unwrap();
        for (x, y) in a[0].damping.iter().zip(&b[0].damping) {
            let scale = a[0].damping_at(0, 0);
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn mass_normalization_rescales_entries() {
        let (mesh, sys, modes) = setup("B", 2);
        let plain = project(&modes, &sys, &mesh, &[1e5]).unwrap();
        let massn = project_with(&modes, &sys, &mesh, &[1e5], Normalization::MassUnit, 1.0).unwrap();
        let m0 = modes.modes[0].modal_mass;
        let m1 = modes.modes[1].modal_mass;
        let want00 = plain[0].damping_at(0, 0) / m0;
        assert!((massn[0].damping_at(0, 0) - want00).abs() <= 1e-9 * want00.abs());
        let want11 = plain[0].stiffness_at(1, 1) / m1;
        assert!((massn[0].stiffness_at(1, 1) - want11).abs() <= 1e-9 * want11.abs());
    }

    #[test]
    fn effective_coefficients_bounds() {
        let (mesh, sys, modes) = setup("B", 1);
        let roms = project(&modes, &sys, &mesh, &[1e5]).unwrap();
        let ck = effective_coefficients(&roms[0], 0).unwrap();
        assert!(ck.damping > 0.0);
        assert!(matches!(
            effective_coefficients(&roms[0], 1),
            Err(Error::Index(_))
        ));
    }
}
