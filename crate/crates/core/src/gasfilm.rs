//! Gas rarefaction model and the 2D film discretization.
//!
//! The film under the plate is meshed with a structured grid of bilinear
//! quadrilaterals over the full plate footprint. Etch holes are not cut out:
//! each hole is represented by a port (the film nodes under the opening plus
//! area-consistent coupling weights) and a lumped laminar channel through the
//! plate thickness that vents the port to ambient.

use crate::geometry::{HoleGrid, TestStructure};
use crate::{lit, Error, Real, Result};

/// Ambient gas state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasProps<T> {
    /// Dynamic viscosity \[Pa·s\].
    pub viscosity: T,
    /// Ambient pressure \[Pa\].
    pub ambient_pressure: T,
    /// Mean free path \[µm\].
    pub mean_free_path: T,
}

impl<T: Real> GasProps<T> {
    pub fn new(viscosity: T, ambient_pressure: T, mean_free_path: T) -> Result<Self> {
        if !(viscosity > T::zero()) {
            return Err(Error::Domain("viscosity must be positive".into()));
        }
        if !(ambient_pressure > T::zero()) {
            return Err(Error::Domain("ambient pressure must be positive".into()));
        }
        if mean_free_path < T::zero() {
            return Err(Error::Domain("mean free path must be non-negative".into()));
        }
        Ok(GasProps {
            viscosity,
            ambient_pressure,
            mean_free_path,
        })
    }

    /// Air at standard conditions.
    pub fn air() -> Self {
        GasProps {
            viscosity: lit(18.27e-6),
            ambient_pressure: lit(101_325.0),
            mean_free_path: lit(0.0672),
        }
    }
}

/// Knudsen number: mean free path over a characteristic length (the gap).
pub fn knudsen<T: Real>(gas: &GasProps<T>, gap: T) -> Result<T> {
    if !(gap > T::zero()) {
        return Err(Error::Domain(format!(
            "Knudsen number needs a positive gap, got {gap}"
        )));
    }
    Ok(gas.mean_free_path / gap)
}

/// Slip-flow effective viscosity: η / (1 + 9.638·Kn^1.159).
pub fn effective_viscosity<T: Real>(gas: &GasProps<T>, kn: T) -> T {
    if kn <= T::zero() {
        return gas.viscosity;
    }
    gas.viscosity / (T::one() + lit::<T>(9.638) * kn.powf(lit(1.159)))
}

/// Poiseuille resistance of a square duct of side `e` and length `t`,
/// fully developed laminar flow: R = 28.454·η·t/e⁴ \[Pa·s/µm³\].
pub fn hole_resistance<T: Real>(hole_side: T, channel_length: T, viscosity: T) -> T {
    lit::<T>(28.454) * viscosity * channel_length / hole_side.powi(4)
}

/// Lumped channel through one hole.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleChannel<T> {
    pub hole_index: usize,
    /// Channel length, equal to the plate thickness \[µm\].
    pub length: T,
    /// Duct side e \[µm\].
    pub side: T,
    /// Lumped resistance \[Pa·s/µm³\].
    pub resistance: T,
}

/// Options for building the hole channels.
#[derive(Debug, Clone, Copy)]
pub struct ChannelOptions {
    /// Apply the slip-flow viscosity correction inside the channel
    /// (off by default: the duct bore is much wider than the film gap).
    pub slip_in_channel: bool,
    /// Add a duct end-effect elongation of 0.847·e/2 to the channel length
    /// (off by default; no calibration data for it).
    pub end_effect: bool,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        ChannelOptions {
            slip_in_channel: false,
            end_effect: false,
        }
    }
}

/// Builds one lumped channel per hole of the grid.
pub fn hole_channels<T: Real>(
    s: &TestStructure<T>,
    grid: &HoleGrid<T>,
    gas: &GasProps<T>,
    opts: ChannelOptions,
) -> Vec<HoleChannel<T>> {
    let eta = if opts.slip_in_channel {
        let kn = gas.mean_free_path / s.hole_side;
        effective_viscosity(gas, kn)
    } else {
        gas.viscosity
    };
    let length = if opts.end_effect {
        s.thickness + lit::<T>(0.847) * s.hole_side / lit(2.0)
    } else {
        s.thickness
    };
    (0..grid.hole_count())
        .map(|hole_index| HoleChannel {
            hole_index,
            length,
            side: s.hole_side,
            resistance: hole_resistance(s.hole_side, length, eta),
        })
        .collect()
}

/// Port of one hole: the film nodes under the opening and the weights that
/// express the area average of the interpolated pressure over the footprint.
#[derive(Debug, Clone)]
pub struct HolePort<T> {
    /// Film nodes lying inside the hole footprint.
    pub nodes: Vec<usize>,
    /// (node, weight) pairs; weights are shape-function integrals over the
    /// footprint normalized to sum to one, so `Σ wᵢ pᵢ` is the footprint
    /// average of the interpolated pressure.
    pub coupling: Vec<(usize, T)>,
    /// Lower-left corner of the footprint \[µm\].
    pub origin: (T, T),
}

/// Structured quadrilateral pressure mesh of the film.
#[derive(Debug, Clone)]
pub struct FilmMesh<T> {
    /// Plate footprint \[µm\].
    pub length: T,
    pub width: T,
    /// Elements along x and y.
    pub nx: usize,
    pub ny: usize,
    /// Actual element edge lengths \[µm\].
    pub hx: T,
    pub hy: T,
    /// Requested element size \[µm\].
    pub element_size: T,
    /// Node positions \[µm\], y-fastest ordering: `node = ix·(ny+1) + iy`.
    pub nodes: Vec<(T, T)>,
    /// Quadrilaterals as 4 node indices in counterclockwise order.
    pub elements: Vec<[usize; 4]>,
    /// Outline flag per node.
    pub boundary: Vec<bool>,
    /// One port per hole, in grid iteration order (columns outer).
    pub ports: Vec<HolePort<T>>,
}

impl<T: Real> FilmMesh<T> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        ix * (self.ny + 1) + iy
    }

    /// Outline nodes in index order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.boundary[i]).collect()
    }

    /// Element area \[µm²\] (uniform over the structured grid).
    pub fn element_area(&self) -> T {
        self.hx * self.hy
    }

    /// Node table as CSV: `node,x_um,y_um,boundary`.
    pub fn nodes_csv(&self) -> String {
        let mut out = String::from("node,x_um,y_um,boundary\n");
        for (i, &(x, y)) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.9e},{:.9e},{}\n",
                i,
                x,
                y,
                u8::from(self.boundary[i])
            ));
        }
        out
    }

    /// Element table as CSV: `element,n0,n1,n2,n3`.
    pub fn elements_csv(&self) -> String {
        let mut out = String::from("element,n0,n1,n2,n3\n");
        for (e, q) in self.elements.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", e, q[0], q[1], q[2], q[3]));
        }
        out
    }
}

/// Integral of the 1D hat function of the node at `center` (spacing `h`)
/// over the interval [lo, hi].
fn hat_integral<T: Real>(center: T, h: T, lo: T, hi: T) -> T {
    let two = lit::<T>(2.0);
    let mut total = T::zero();
    // rising part on [center-h, center]
    let l = lo.max(center - h);
    let r = hi.min(center);
    if r > l {
        let f = |x: T| (x - (center - h)) * (x - (center - h)) / (two * h);
        total += f(r) - f(l);
    }
    // falling part on [center, center+h]
    let l = lo.max(center);
    let r = hi.min(center + h);
    if r > l {
        let f = |x: T| ((center + h) - x) * ((center + h) - x) / (two * h);
        total += f(l) - f(r);
    }
    total
}

/// Builds the structured film mesh for a plate footprint without holes.
pub fn mesh_rectangle<T: Real>(length: T, width: T, element_size: T) -> Result<FilmMesh<T>> {
    build_mesh(length, width, element_size, &HoleGrid::none())
}

/// Builds the film mesh for a test structure and its hole grid.
///
/// The target element size must resolve the hole layout: it may not exceed
/// min(e, f), otherwise ports could not be told apart from the interspace.
pub fn mesh_film<T: Real>(
    s: &TestStructure<T>,
    grid: &HoleGrid<T>,
    element_size: T,
) -> Result<FilmMesh<T>> {
    if grid.hole_count() > 0 {
        let resolvable = s.hole_side.min(s.hole_spacing);
        if element_size > resolvable * (T::one() + lit(1e-9)) {
            return Err(Error::Mesh(format!(
                "element size {element_size} µm cannot resolve the hole layout \
                 (needs <= min(e, f) = {resolvable} µm)"
            )));
        }
    }
    build_mesh(s.plate_length, s.plate_width, element_size, grid)
}

fn build_mesh<T: Real>(
    length: T,
    width: T,
    element_size: T,
    grid: &HoleGrid<T>,
) -> Result<FilmMesh<T>> {
    if !(element_size > T::zero()) || !element_size.is_finite() {
        return Err(Error::Mesh(format!(
            "element size must be positive, got {element_size}"
        )));
    }
    // floor keeps refinement nested enough that halving the element size
    // always at least quadruples the element count
    let count = |extent: T| -> usize {
        let n = (extent / element_size * (T::one() + lit(1e-12))).floor();
        n.to_usize().unwrap_or(0).max(1)
    };
    let nx = count(length);
    let ny = count(width);
    let hx = length / T::from_usize(nx).unwrap();
    let hy = width / T::from_usize(ny).unwrap();
    let tol20 = lit::<T>(0.2);
    if ((hx - element_size) / element_size).abs() > tol20
        || ((hy - element_size) / element_size).abs() > tol20
    {
        return Err(Error::Mesh(format!(
            "element size {element_size} µm cannot be honored within 20% on a \
             {length} x {width} µm plate"
        )));
    }
    if grid.hole_count() > 0 {
        let e = grid.hole_side;
        let tol = e * lit(1e-9);
        if hx > e + tol || hy > e + tol {
            return Err(Error::Mesh(format!(
                "actual node spacing {hx} x {hy} µm cannot resolve holes of \
                 side {e} µm"
            )));
        }
    }

    let n_nodes = (nx + 1) * (ny + 1);
    let mut nodes = Vec::with_capacity(n_nodes);
    for ix in 0..=nx {
        let x = if ix == nx {
            length
        } else {
            hx * T::from_usize(ix).unwrap()
        };
        for iy in 0..=ny {
            let y = if iy == ny {
                width
            } else {
                hy * T::from_usize(iy).unwrap()
            };
            nodes.push((x, y));
        }
    }
    let nid = |ix: usize, iy: usize| ix * (ny + 1) + iy;
    let mut elements = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            elements.push([
                nid(ix, iy),
                nid(ix + 1, iy),
                nid(ix + 1, iy + 1),
                nid(ix, iy + 1),
            ]);
        }
    }
    let mut boundary = vec![false; n_nodes];
    for ix in 0..=nx {
        boundary[nid(ix, 0)] = true;
        boundary[nid(ix, ny)] = true;
    }
    for iy in 0..=ny {
        boundary[nid(0, iy)] = true;
        boundary[nid(nx, iy)] = true;
    }

    let mut ports = Vec::with_capacity(grid.hole_count());
    if grid.hole_count() > 0 {
        let e = grid.hole_side;
        let tol = (length + width) * lit(1e-12);
        let wtol = e * e * lit(1e-14);
        for (_, _, x0, y0) in grid.holes() {
            // nodes strictly under the opening
            let mut inside = Vec::new();
            // consistent weights: product of 1D hat integrals over the footprint
            let mut coupling = Vec::new();
            let mut total = T::zero();
            for ix in 0..=nx {
                let x = nodes[nid(ix, 0)].0;
                let wx = hat_integral(x, hx, x0, x0 + e);
                if wx <= wtol && !(x >= x0 - tol && x <= x0 + e + tol) {
                    continue;
                }
                for iy in 0..=ny {
                    let y = nodes[nid(0, iy)].1;
                    let node = nid(ix, iy);
                    if x >= x0 - tol && x <= x0 + e + tol && y >= y0 - tol && y <= y0 + e + tol {
                        inside.push(node);
                    }
                    let wy = hat_integral(y, hy, y0, y0 + e);
                    let w = wx * wy;
                    if w > wtol {
                        coupling.push((node, w));
                        total += w;
                    }
                }
            }
            if inside.is_empty() {
                return Err(Error::Mesh(format!(
                    "no film node falls under the hole at ({x0}, {y0}) µm; \
                     element size too coarse"
                )));
            }
            for c in &mut coupling {
                c.1 = c.1 / total;
            }
            ports.push(HolePort {
                nodes: inside,
                coupling,
                origin: (x0, y0),
            });
        }
    }

    Ok(FilmMesh {
        length,
        width,
        nx,
        ny,
        hx,
        hy,
        element_size,
        nodes,
        elements,
        boundary,
        ports,
    })
}
