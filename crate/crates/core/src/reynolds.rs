//! Harmonic solver for the linearized, isothermal, compressible lubrication
//! equation of the film, and the damping/stiffness extraction built on it.
//!
//! With the harmonic convention `x(t) = Re[x̂ e^{-iωt}]` the discrete film
//! system reads `(S - iω M) p̂ = -G v̂` where
//!
//! * `S` is the flow matrix with element conductance `g0³/(12 η_eff)`,
//! * `M` is the compressibility matrix with density `g0/P_a`,
//! * `G` is the wall-motion load (area-integral) matrix,
//! * `v̂` is the complex wall-velocity amplitude per node.
//!
//! Each hole adds a conductance `1/R_h` from the area-averaged port pressure
//! to ambient. Ambient boundary rows are eliminated, so outline pressures are
//! exactly zero. Geometry enters in µm and is converted to SI exactly once,
//! here; solutions are in Pa, forces in N.

use crate::gasfilm::{effective_viscosity, knudsen, FilmMesh, GasProps, HoleChannel};
use crate::linalg::{
    dense_ldlt_factor, dense_ldlt_solve, norm2, BandLdlt, ComplexBand, SymBand,
};
use crate::{lit, Cplx, Error, Real, Result};

const UM: f64 = 1e-6;

/// Damping and stiffness transferred by the film at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CKPair<T> {
    pub frequency_hz: T,
    /// Damping coefficient \[N·s/m\]; positive dissipates.
    pub damping: T,
    /// Stiffness coefficient \[N/m\]; positive opposes displacement.
    pub stiffness: T,
}

/// Complex nodal pressure field at one angular frequency.
#[derive(Debug, Clone)]
pub struct HarmonicSolution<T> {
    /// Angular frequency \[rad/s\].
    pub omega: T,
    /// Complex pressure per mesh node \[Pa\]; exactly zero on the outline.
    pub pressure: Vec<Cplx<T>>,
    /// Imposed wall-velocity amplitude per node \[m/s\].
    pub velocity: Vec<Cplx<T>>,
    /// Relative residual of the solved system.
    pub residual: T,
}

#[derive(Debug, Clone)]
struct HoleCoupling<T> {
    /// (reduced row, weight) pairs; weights of eliminated boundary nodes are
    /// dropped but stay in the normalization (their pressure is zero).
    rows: Vec<(usize, T)>,
    /// Channel resistance \[Pa·s/m³\]; zero pins the port average to ambient.
    resistance_si: T,
}

/// Film operator assembled in SI units with ambient rows eliminated.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    n_nodes: usize,
    /// Full node index per reduced unknown.
    interior: Vec<usize>,
    /// Reduced index per full node (`usize::MAX` on the boundary).
    reduced: Vec<usize>,
    s_red: SymBand<T>,
    m_red: SymBand<T>,
    holes: Vec<HoleCoupling<T>>,
    base_bw: usize,
    coupled_bw: usize,
    /// Element connectivity, kept for load and force integration.
    elements: Vec<[usize; 4]>,
    /// Element force pattern scale: element area / 36 \[m²\].
    g_scale: T,
    eta_eff: T,
    gap_m: T,
}

impl<T: Real> AssembledSystem<T> {
    pub fn node_count(&self) -> usize {
        self.n_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn effective_film_viscosity(&self) -> T {
        self.eta_eff
    }

    /// Nominal film gap \[m\].
    pub fn gap(&self) -> T {
        self.gap_m
    }

    /// Reduced unknown index of a mesh node, if it is not on the outline.
    pub fn reduced_index(&self, node: usize) -> Option<usize> {
        match self.reduced[node] {
            usize::MAX => None,
            r => Some(r),
        }
    }

    /// Reduced flow matrix (positive definite after elimination).
    pub fn flow_band(&self) -> &SymBand<T> {
        &self.s_red
    }

    /// Reduced compressibility matrix.
    pub fn compressibility_band(&self) -> &SymBand<T> {
        &self.m_red
    }
}

/// Bilinear rectangle Laplacian pattern, split by direction.
const LAP_X: [[f64; 4]; 4] = [
    [2.0, -2.0, -1.0, 1.0],
    [-2.0, 2.0, 1.0, -1.0],
    [-1.0, 1.0, 2.0, -2.0],
    [1.0, -1.0, -2.0, 2.0],
];
const LAP_Y: [[f64; 4]; 4] = [
    [2.0, 1.0, -1.0, -2.0],
    [1.0, 2.0, -2.0, -1.0],
    [-1.0, -2.0, 2.0, 1.0],
    [-2.0, -1.0, 1.0, 2.0],
];
/// Consistent bilinear mass pattern (to be scaled by area/36).
const MASS: [[f64; 4]; 4] = [
    [4.0, 2.0, 1.0, 2.0],
    [2.0, 4.0, 2.0, 1.0],
    [1.0, 2.0, 4.0, 2.0],
    [2.0, 1.0, 2.0, 4.0],
];

/// Assembles the harmonic film system for a mesh, its hole channels and a gas
/// state. `gap` is the nominal film thickness in µm.
pub fn assemble<T: Real>(
    mesh: &FilmMesh<T>,
    channels: &[HoleChannel<T>],
    gas: &GasProps<T>,
    gap: T,
) -> Result<AssembledSystem<T>> {
    if channels.len() != mesh.ports.len() {
        return Err(Error::Assembly(format!(
            "{} hole channels for {} mesh ports",
            channels.len(),
            mesh.ports.len()
        )));
    }
    if !(gap > T::zero()) {
        return Err(Error::Assembly(format!("gap must be positive, got {gap}")));
    }
    let kn = knudsen(gas, gap).map_err(|e| Error::Assembly(e.to_string()))?;
    let eta_eff = effective_viscosity(gas, kn);
    let gap_m = gap * lit(UM);
    let alpha = gap_m.powi(3) / (lit::<T>(12.0) * eta_eff);
    let beta = gap_m / gas.ambient_pressure;
    let hx_m = mesh.hx * lit(UM);
    let hy_m = mesh.hy * lit(UM);
    let area_m = hx_m * hy_m;
    let rx = mesh.hy / mesh.hx / lit(6.0);
    let ry = mesh.hx / mesh.hy / lit(6.0);

    let n_nodes = mesh.node_count();
    let mut reduced = vec![usize::MAX; n_nodes];
    let mut interior = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        if !mesh.boundary[i] {
            reduced[i] = interior.len();
            interior.push(i);
        }
    }
    let n_red = interior.len();
    if n_red == 0 {
        return Err(Error::Assembly(
            "mesh has no interior pressure unknowns".into(),
        ));
    }
    let base_bw = mesh.ny.max(1);

    let mut s_red = SymBand::new(n_red, base_bw);
    let mut m_red = SymBand::new(n_red, base_bw);
    for quad in &mesh.elements {
        for a in 0..4 {
            let ra = reduced[quad[a]];
            if ra == usize::MAX {
                continue;
            }
            for b in 0..=a {
                let rb = reduced[quad[b]];
                if rb == usize::MAX {
                    continue;
                }
                let lap = alpha * (rx * lit(LAP_X[a][b]) + ry * lit(LAP_Y[a][b]));
                let mass = beta * area_m / lit(36.0) * lit(MASS[a][b]);
                s_red.add(ra, rb, lap);
                m_red.add(ra, rb, mass);
            }
        }
    }

    let mut coupled_bw = base_bw;
    let mut holes = Vec::with_capacity(mesh.ports.len());
    for (port, channel) in mesh.ports.iter().zip(channels) {
        let mut rows: Vec<(usize, T)> = Vec::with_capacity(port.coupling.len());
        for &(node, w) in &port.coupling {
            let r = reduced[node];
            if r != usize::MAX {
                rows.push((r, w));
            }
        }
        if rows.is_empty() {
            return Err(Error::Assembly(
                "hole port couples only to ambient boundary nodes".into(),
            ));
        }
        let lo = rows.iter().map(|r| r.0).min().unwrap();
        let hi = rows.iter().map(|r| r.0).max().unwrap();
        coupled_bw = coupled_bw.max(hi - lo);
        if !(channel.resistance >= T::zero()) {
            return Err(Error::Assembly(format!(
                "hole channel resistance must be non-negative, got {}",
                channel.resistance
            )));
        }
        // Pa·s/µm³ -> Pa·s/m³
        holes.push(HoleCoupling {
            rows,
            resistance_si: channel.resistance * lit(1e18),
        });
    }

    Ok(AssembledSystem {
        n_nodes,
        interior,
        reduced,
        s_red,
        m_red,
        holes,
        base_bw,
        coupled_bw,
        elements: mesh.elements.clone(),
        g_scale: area_m / lit(36.0),
        eta_eff,
        gap_m,
    })
}

enum Strategy<T> {
    /// Hole conductances folded into one wider band.
    Direct { factor: BandLdlt<T> },
    /// Banded factorization of the film alone plus a low-rank hole update
    /// applied through the Woodbury identity.
    LowRank {
        factor: BandLdlt<T>,
        /// `Z = A⁻¹ W`, column-major, one column per hole.
        z: Vec<Cplx<T>>,
        /// Dense factor of `diag(R) + Wᵀ Z`.
        t_low: Vec<Cplx<T>>,
        t_diag: Vec<Cplx<T>>,
    },
}

/// One frequency point, factored once and reusable for any velocity profile.
pub struct HarmonicFactorization<'a, T> {
    sys: &'a AssembledSystem<T>,
    omega: T,
    /// Unfactored matrix without hole terms, kept for residuals.
    matrix: ComplexBand<T>,
    strategy: Strategy<T>,
}

impl<T: Real> AssembledSystem<T> {
    /// Factors `S - iωM` with the hole couplings for repeated solves.
    ///
    /// Holes are folded directly into the band when that is cheaper than the
    /// low-rank update; both routes produce the same solution. Zero-resistance
    /// channels (ports pinned to ambient) always take the low-rank route,
    /// which enforces them exactly.
    pub fn factor(&self, omega: T) -> Result<HarmonicFactorization<'_, T>> {
        let n = self.s_red.n() as f64;
        let m = self.holes.len() as f64;
        let bb = self.base_bw as f64;
        let cb = self.coupled_bw as f64;
        let direct_cost = n * cb * cb / 2.0;
        let lowrank_cost = n * bb * bb / 2.0 + (m + 1.0) * 2.0 * n * bb + m * m * m / 6.0 + n * m;
        let pinned = self
            .holes
            .iter()
            .any(|h| !(h.resistance_si > T::zero()));
        if self.holes.is_empty() || (direct_cost <= lowrank_cost && !pinned) {
            self.factor_direct(omega)
        } else {
            self.factor_low_rank(omega)
        }
    }

    /// Factors with the hole conductances folded into a widened band.
    #[doc(hidden)]
    pub fn factor_direct(&self, omega: T) -> Result<HarmonicFactorization<'_, T>> {
        check_omega(omega)?;
        let n = self.s_red.n();
        let base = ComplexBand::combine(&self.s_red, &self.m_red, -omega);
        let mut a = if self.coupled_bw > self.base_bw {
            let mut wide = ComplexBand::new(n, self.coupled_bw);
            for i in 0..n {
                let lo = i.saturating_sub(self.base_bw);
                for j in lo..=i {
                    let re = self.s_red.get(i, j);
                    let im = -omega * self.m_red.get(i, j);
                    if re != T::zero() || im != T::zero() {
                        wide.add(i, j, Cplx::new(re, im));
                    }
                }
            }
            wide
        } else {
            base
        };
        for hole in &self.holes {
            if !(hole.resistance_si > T::zero()) {
                return Err(Error::Solve(
                    "pinned ports (zero resistance) need the low-rank route".into(),
                ));
            }
            let g = T::one() / hole.resistance_si;
            for (ai, &(ri, wi)) in hole.rows.iter().enumerate() {
                for &(rj, wj) in hole.rows.iter().take(ai + 1) {
                    a.add(ri, rj, Cplx::new(g * wi * wj, T::zero()));
                }
            }
        }
        let matrix = a.clone();
        let factor = a.factor()?;
        Ok(HarmonicFactorization {
            sys: self,
            omega,
            matrix,
            strategy: Strategy::Direct { factor },
        })
    }

    /// Factors the film band alone and prepares the low-rank hole update.
    #[doc(hidden)]
    pub fn factor_low_rank(&self, omega: T) -> Result<HarmonicFactorization<'_, T>> {
        check_omega(omega)?;
        let n = self.s_red.n();
        let m = self.holes.len();
        let base = ComplexBand::combine(&self.s_red, &self.m_red, -omega);
        let matrix = base.clone();
        let factor = base.factor()?;
        // Z = A⁻¹ W
        let mut z = vec![Cplx::new(T::zero(), T::zero()); n * m];
        for (h, hole) in self.holes.iter().enumerate() {
            let col = &mut z[h * n..(h + 1) * n];
            for &(r, w) in &hole.rows {
                col[r] = Cplx::new(w, T::zero());
            }
            factor.solve_in_place(col);
        }
        // T = diag(R) + Wᵀ Z
        let mut t = vec![Cplx::new(T::zero(), T::zero()); m * m];
        for i in 0..m {
            t[i * m + i] = Cplx::new(self.holes[i].resistance_si, T::zero());
            for j in 0..=i {
                let mut acc = Cplx::new(T::zero(), T::zero());
                let col = &z[j * n..(j + 1) * n];
                for &(r, w) in &self.holes[i].rows {
                    acc += col[r] * w;
                }
                t[i * m + j] += acc;
                if i != j {
                    t[j * m + i] += acc;
                }
            }
        }
        let mut t_diag = Vec::new();
        dense_ldlt_factor(&mut t, &mut t_diag, m)?;
        Ok(HarmonicFactorization {
            sys: self,
            omega,
            matrix,
            strategy: Strategy::LowRank {
                factor,
                z,
                t_low: t,
                t_diag,
            },
        })
    }
}

fn check_omega<T: Real>(omega: T) -> Result<()> {
    if omega < T::zero() || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "angular frequency must be non-negative, got {omega}"
        )));
    }
    Ok(())
}

impl<T: Real> HarmonicFactorization<'_, T> {
    pub fn omega(&self) -> T {
        self.omega
    }

    /// Solves the film for an imposed complex wall-velocity profile
    /// (one amplitude per mesh node, in m/s).
    pub fn solve(&self, velocity: &[Cplx<T>]) -> Result<HarmonicSolution<T>> {
        let sys = self.sys;
        if velocity.len() != sys.n_nodes {
            return Err(Error::Assembly(format!(
                "velocity profile has {} entries for {} mesh nodes",
                velocity.len(),
                sys.n_nodes
            )));
        }
        // b = -(G v) restricted to the interior
        let g_full = load_vector(sys, velocity);
        let n = sys.interior.len();
        let mut b = vec![Cplx::new(T::zero(), T::zero()); n];
        for (r, &full) in sys.interior.iter().enumerate() {
            b[r] = -g_full[full];
        }

        let mut x = b.clone();
        let mut flows = vec![Cplx::new(T::zero(), T::zero()); sys.holes.len()];
        self.apply_inverse(&mut x, &mut flows);

        // residual of the coupled system; one refinement pass if needed
        let bnorm = norm2(&b).max(T::min_positive_value());
        let mut residual = self.residual_norm(&x, &flows, &b) / bnorm;
        let threshold = lit::<T>(1e-10).max(T::epsilon() * lit(1e4));
        if residual > threshold {
            let mut r = self.residual_vec(&x, &flows, &b);
            let mut dflows = vec![Cplx::new(T::zero(), T::zero()); sys.holes.len()];
            self.apply_inverse(&mut r, &mut dflows);
            for i in 0..n {
                x[i] += r[i];
            }
            for (f, d) in flows.iter_mut().zip(&dflows) {
                *f += *d;
            }
            residual = self.residual_norm(&x, &flows, &b) / bnorm;
            if residual > threshold {
                return Err(Error::Solve(format!(
                    "relative residual {residual:e} after refinement"
                )));
            }
        }

        let mut pressure = vec![Cplx::new(T::zero(), T::zero()); sys.n_nodes];
        for (r, &full) in sys.interior.iter().enumerate() {
            pressure[full] = x[r];
        }
        Ok(HarmonicSolution {
            omega: self.omega,
            pressure,
            velocity: velocity.to_vec(),
            residual,
        })
    }

    /// x <- A⁻¹ x for the coupled operator; also reports the hole flows
    /// `q = T⁻¹ Wᵀ y` used by the low-rank update (zero on the direct path,
    /// where the flows are implicit in the band).
    fn apply_inverse(&self, x: &mut [Cplx<T>], flows: &mut [Cplx<T>]) {
        match &self.strategy {
            Strategy::Direct { factor } => {
                factor.solve_in_place(x);
                for f in flows.iter_mut() {
                    *f = Cplx::new(T::zero(), T::zero());
                }
            }
            Strategy::LowRank {
                factor,
                z,
                t_low,
                t_diag,
            } => {
                factor.solve_in_place(x);
                let m = self.sys.holes.len();
                let n = x.len();
                for (h, hole) in self.sys.holes.iter().enumerate() {
                    let mut acc = Cplx::new(T::zero(), T::zero());
                    for &(r, w) in &hole.rows {
                        acc += x[r] * w;
                    }
                    flows[h] = acc;
                }
                dense_ldlt_solve(t_low, t_diag, m, flows);
                for h in 0..m {
                    let q = flows[h];
                    let col = &z[h * n..(h + 1) * n];
                    for i in 0..n {
                        x[i] -= col[i] * q;
                    }
                }
            }
        }
    }

    fn residual_vec(&self, x: &[Cplx<T>], flows: &[Cplx<T>], b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut ax = vec![Cplx::new(T::zero(), T::zero()); x.len()];
        self.matrix.mul(x, &mut ax);
        match &self.strategy {
            Strategy::Direct { .. } => {
                // hole terms already inside `matrix`
            }
            Strategy::LowRank { .. } => {
                for (hole, &q) in self.sys.holes.iter().zip(flows) {
                    for &(r, w) in &hole.rows {
                        ax[r] += q * w;
                    }
                }
            }
        }
        ax.iter_mut().zip(b).for_each(|(a, bb)| *a = *bb - *a);
        ax
    }

    fn residual_norm(&self, x: &[Cplx<T>], flows: &[Cplx<T>], b: &[Cplx<T>]) -> T {
        norm2(&self.residual_vec(x, flows, b))
    }
}

/// Convenience wrapper: factor at `omega` and solve one profile.
pub fn solve_harmonic<T: Real>(
    sys: &AssembledSystem<T>,
    omega: T,
    velocity: &[Cplx<T>],
) -> Result<HarmonicSolution<T>> {
    sys.factor(omega)?.solve(velocity)
}

/// Uniform complex velocity profile over all mesh nodes \[m/s\].
pub fn uniform_velocity<T: Real>(mesh: &FilmMesh<T>, amplitude: T) -> Vec<Cplx<T>> {
    vec![Cplx::new(amplitude, T::zero()); mesh.node_count()]
}

/// Consistent load vector `G v` on the full node numbering.
fn load_vector<T: Real>(sys: &AssembledSystem<T>, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let mut out = vec![Cplx::new(T::zero(), T::zero()); v.len()];
    for quad in &sys.elements {
        for a in 0..4 {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for b in 0..4 {
                acc += v[quad[b]] * lit::<T>(MASS[a][b]);
            }
            out[quad[a]] += acc * sys.g_scale;
        }
    }
    out
}

/// Total complex film force on the plate: element-averaged pressure times
/// element area, summed and converted to N.
pub fn integrate_force<T: Real>(sol: &HarmonicSolution<T>, mesh: &FilmMesh<T>) -> Cplx<T> {
    let quarter_area = mesh.element_area() * lit::<T>(1e-12) / lit(4.0);
    let mut total = Cplx::new(T::zero(), T::zero());
    for quad in &mesh.elements {
        let sum = sol.pressure[quad[0]]
            + sol.pressure[quad[1]]
            + sol.pressure[quad[2]]
            + sol.pressure[quad[3]];
        total += sum * quarter_area;
    }
    total
}

/// Consistent nodal force vector `f = G p` \[N\].
pub fn nodal_forces<T: Real>(sol: &HarmonicSolution<T>, mesh: &FilmMesh<T>) -> Vec<Cplx<T>> {
    consistent_integral(mesh, &sol.pressure)
}

/// Applies the consistent (shape-function-weighted) area integral matrix to a
/// nodal field; with pressures in Pa this yields nodal forces in N.
pub fn consistent_integral<T: Real>(mesh: &FilmMesh<T>, field: &[Cplx<T>]) -> Vec<Cplx<T>> {
    assert_eq!(field.len(), mesh.node_count());
    let scale = mesh.element_area() * lit::<T>(1e-12) / lit(36.0);
    let mut out = vec![Cplx::new(T::zero(), T::zero()); field.len()];
    for quad in &mesh.elements {
        for a in 0..4 {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for b in 0..4 {
                acc += field[quad[b]] * lit::<T>(MASS[a][b]);
            }
            out[quad[a]] += acc * scale;
        }
    }
    out
}

/// Mean power absorbed by the film from the wall \[W\]; non-negative for any
/// physical solution.
pub fn absorbed_power<T: Real>(forces: &[Cplx<T>], velocity: &[Cplx<T>]) -> T {
    let half = lit::<T>(0.5);
    let mut acc = T::zero();
    for (f, v) in forces.iter().zip(velocity) {
        acc += f.re * v.re + f.im * v.im; // Re(f · conj(v))
    }
    -half * acc
}

/// Splits a complex film force into damping and stiffness coefficients.
///
/// `force` is the film force from [`integrate_force`]; the split applies the
/// half-power-consistent definitions `c = Re(F_eq)/v`, `k = ω·Im(F_eq)/v` to
/// the equilibrating force `F_eq = -force`, so positive damping dissipates
/// and positive stiffness opposes displacement.
pub fn extract_ck<T: Real>(force: Cplx<T>, v: Cplx<T>, omega: T) -> Result<CKPair<T>> {
    if v.norm_sqr() == T::zero() {
        return Err(Error::Domain(
            "cannot extract coefficients at zero velocity amplitude".into(),
        ));
    }
    let ratio = -force / v;
    Ok(CKPair {
        frequency_hz: omega / (lit::<T>(2.0) * T::from_f64(std::f64::consts::PI).unwrap()),
        damping: ratio.re,
        stiffness: omega * ratio.im,
    })
}


#[cfg(test)]
mod scalar_generic_tests {
    use super::*;
    use crate::gasfilm::{mesh_rectangle, GasProps};

    /// The whole solve chain runs in single precision and tracks the double
    /// result to within single-precision accuracy.
    #[test]
    fn single_precision_solution_tracks_double() {
        let run = || -> (f64, f64) {
            let mesh = mesh_rectangle(60.0_f64, 30.0, 3.0).unwrap();
            let sys = assemble(&mesh, &[], &GasProps::air(), 1.6).unwrap();
            let omega = 2.0 * std::f64::consts::PI * 2e5;
            let v = uniform_velocity(&mesh, 1.0);
            let sol = solve_harmonic(&sys, omega, &v).unwrap();
            let ck = extract_ck(integrate_force(&sol, &mesh), Cplx::new(1.0, 0.0), omega).unwrap();
            (ck.damping, ck.stiffness)
        };
        let run32 = || -> (f32, f32) {
            let mesh = mesh_rectangle(60.0_f32, 30.0, 3.0).unwrap();
            let sys = assemble(&mesh, &[], &GasProps::air(), 1.6).unwrap();
            let omega = 2.0 * std::f32::consts::PI * 2e5;
            let v = uniform_velocity(&mesh, 1.0);
            let sol = solve_harmonic(&sys, omega, &v).unwrap();
            let ck = extract_ck(integrate_force(&sol, &mesh), Cplx::new(1.0, 0.0), omega).unwrap();
            (ck.damping, ck.stiffness)
        };
        let (c64, k64) = run();
        let (c32, k32) = run32();
        assert!(((c32 as f64 - c64) / c64).abs() < 1e-3, "c: {c32} vs {c64}");
        assert!(((k32 as f64 - k64) / k64).abs() < 1e-3, "k: {k32} vs {k64}");
    }
}
