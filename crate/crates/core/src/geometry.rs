//! Parametric test-structure geometry: perforated plate, four bending
//! supports, derived hole layout, volumes and masses.
//!
//! Lengths are in micrometres throughout this module; masses in kg (the
//! density is given per µm³).

use crate::{lit, Error, Real, Result};

/// Perforated plate suspended on four lateral supports.
///
/// Field names follow the drawing convention used for these devices:
/// plate `a×b`, support `c×d`, square holes of side `e` at interspace `f`,
/// film gap `gap` under a plate of thickness `thickness`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestStructure<T> {
    pub label: String,
    /// Plate length a \[µm\].
    pub plate_length: T,
    /// Plate width b \[µm\].
    pub plate_width: T,
    /// Support length c \[µm\].
    pub support_length: T,
    /// Support width d \[µm\].
    pub support_width: T,
    /// Hole side e \[µm\].
    pub hole_side: T,
    /// Hole interspace f \[µm\].
    pub hole_spacing: T,
    /// Plate thickness t \[µm\].
    pub thickness: T,
    /// Film gap under the plate \[µm\].
    pub gap: T,
}

impl<T: Real> TestStructure<T> {
    /// Validates the invariants and builds the structure.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        plate_length: T,
        plate_width: T,
        support_length: T,
        support_width: T,
        hole_side: T,
        hole_spacing: T,
        thickness: T,
        gap: T,
    ) -> Result<Self> {
        let s = TestStructure {
            label: label.into(),
            plate_length,
            plate_width,
            support_length,
            support_width,
            hole_side,
            hole_spacing,
            thickness,
            gap,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let chk = |name: &str, v: T| -> Result<()> {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Geometry(format!(
                    "structure `{}`: {name} must be strictly positive, got {v}",
                    self.label
                )));
            }
            Ok(())
        };
        chk("plate length a", self.plate_length)?;
        chk("plate width b", self.plate_width)?;
        chk("support length c", self.support_length)?;
        chk("support width d", self.support_width)?;
        chk("hole side e", self.hole_side)?;
        chk("thickness t", self.thickness)?;
        chk("gap", self.gap)?;
        if self.hole_spacing < T::zero() || !self.hole_spacing.is_finite() {
            return Err(Error::Geometry(format!(
                "structure `{}`: hole interspace f must be non-negative",
                self.label
            )));
        }
        if !(self.hole_side + self.hole_spacing > T::zero()) {
            return Err(Error::Geometry(format!(
                "structure `{}`: hole pitch e+f must be positive",
                self.label
            )));
        }
        if !(self.gap < self.thickness) {
            return Err(Error::Geometry(format!(
                "structure `{}`: gap must be smaller than thickness",
                self.label
            )));
        }
        if !(self.hole_side < self.plate_width) {
            return Err(Error::Geometry(format!(
                "structure `{}`: hole side e must be smaller than plate width b",
                self.label
            )));
        }
        Ok(())
    }

    /// Hole pitch e + f \[µm\].
    pub fn pitch(&self) -> T {
        self.hole_side + self.hole_spacing
    }

    /// Plate footprint area a·b \[µm²\].
    pub fn plate_area(&self) -> T {
        self.plate_length * self.plate_width
    }
}

/// Bulk material of plate and supports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialProps<T> {
    /// Young modulus \[Pa\].
    pub young_modulus: T,
    /// Density \[kg/µm³\].
    pub density: T,
    /// Poisson ratio.
    pub poisson: T,
}

impl<T: Real> MaterialProps<T> {
    pub fn new(young_modulus: T, density: T, poisson: T) -> Result<Self> {
        if !(young_modulus > T::zero()) {
            return Err(Error::Domain("Young modulus must be positive".into()));
        }
        if !(density >= T::zero()) {
            return Err(Error::Domain("density must be non-negative".into()));
        }
        if poisson < T::zero() || poisson >= lit(0.5) {
            return Err(Error::Domain("Poisson ratio must lie in [0, 0.5)".into()));
        }
        Ok(MaterialProps {
            young_modulus,
            density,
            poisson,
        })
    }

    /// Polysilicon as used for the built-in structures.
    pub fn polysilicon() -> Self {
        MaterialProps {
            young_modulus: lit(147e9),
            density: lit(2.33e-15),
            poisson: lit(0.2152),
        }
    }
}

/// Regular square-hole layout centred on the plate.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleGrid<T> {
    /// Hole columns along the plate length.
    pub n_cols: usize,
    /// Hole rows along the plate width.
    pub n_rows: usize,
    /// Centre-to-centre pitch e + f \[µm\].
    pub pitch: T,
    /// Lower-left corner of the first hole footprint \[µm\].
    pub origin: (T, T),
    /// Hole side e \[µm\].
    pub hole_side: T,
}

impl<T: Real> HoleGrid<T> {
    /// Grid with no holes, for unperforated films.
    pub fn none() -> Self {
        HoleGrid {
            n_cols: 0,
            n_rows: 0,
            pitch: T::one(),
            origin: (T::zero(), T::zero()),
            hole_side: T::zero(),
        }
    }

    pub fn hole_count(&self) -> usize {
        self.n_cols * self.n_rows
    }

    /// Lower-left corner of hole (col, row) \[µm\].
    pub fn hole_origin(&self, col: usize, row: usize) -> (T, T) {
        (
            self.origin.0 + self.pitch * T::from_usize(col).unwrap(),
            self.origin.1 + self.pitch * T::from_usize(row).unwrap(),
        )
    }

    /// Iterates over all hole footprints as (col, row, x0, y0).
    pub fn holes(&self) -> impl Iterator<Item = (usize, usize, T, T)> + '_ {
        let this = self.clone();
        (0..self.n_cols).flat_map(move |c| {
            let t = this.clone();
            (0..this.n_rows).map(move |r| {
                let (x, y) = t.hole_origin(c, r);
                (c, r, x, y)
            })
        })
    }
}

/// The six built-in test structures. All share a 15 µm thickness and a
/// 1.6 µm film gap; dimensions are stored at 0.1 µm resolution.
pub fn catalog<T: Real>() -> Vec<TestStructure<T>> {
    let rows: [(&str, f64, f64, f64, f64, f64, f64); 6] = [
        ("A", 372.4, 66.4, 122.8, 4.0, 5.0, 5.2),
        ("B", 363.9, 63.9, 122.4, 4.3, 6.1, 3.9),
        ("C", 373.8, 64.8, 123.2, 3.7, 7.3, 3.0),
        ("D", 369.5, 63.5, 123.4, 3.9, 7.9, 2.3),
        ("E", 363.8, 123.8, 123.2, 3.8, 6.2, 3.8),
        ("F", 363.8, 243.8, 122.4, 3.8, 6.2, 3.8),
    ];
    rows.iter()
        .map(|&(label, a, b, c, d, e, f)| {
            TestStructure::new(
                label,
                lit(a),
                lit(b),
                lit(c),
                lit(d),
                lit(e),
                lit(f),
                lit(15.0),
                lit(1.6),
            )
            .expect("catalog entry valid")
        })
        .collect()
}

/// Looks a structure up in the catalog by label.
pub fn catalog_structure<T: Real>(label: &str) -> Option<TestStructure<T>> {
    catalog::<T>().into_iter().find(|s| s.label == label)
}

/// Derives the maximal regular hole grid: pitch e+f, centred on the plate,
/// with a margin of at least f/2 between every hole and the plate edge.
/// Deterministic for fixed inputs.
pub fn derive_hole_grid<T: Real>(s: &TestStructure<T>) -> Result<HoleGrid<T>> {
    if !(s.hole_side > T::zero()) {
        return Err(Error::Geometry(format!(
            "structure `{}`: hole side must be positive to derive a hole grid",
            s.label
        )));
    }
    let pitch = s.pitch();
    // A grid of n holes spans (n-1)·pitch + e; the margin rule
    // (a - span)/2 >= f/2 reduces to n <= a/pitch.
    let count = |extent: T| -> usize {
        let n = (extent / pitch * (T::one() + lit(1e-12))).floor();
        n.to_usize().unwrap_or(0)
    };
    let n_cols = count(s.plate_length);
    let n_rows = count(s.plate_width);
    if n_cols < 1 || n_rows < 1 {
        return Err(Error::Geometry(format!(
            "structure `{}`: plate {}x{} µm cannot fit a single hole of pitch {}",
            s.label, s.plate_length, s.plate_width, pitch
        )));
    }
    let two = lit::<T>(2.0);
    let span_x = T::from_usize(n_cols - 1).unwrap() * pitch + s.hole_side;
    let span_y = T::from_usize(n_rows - 1).unwrap() * pitch + s.hole_side;
    Ok(HoleGrid {
        n_cols,
        n_rows,
        pitch,
        origin: (
            (s.plate_length - span_x) / two,
            (s.plate_width - span_y) / two,
        ),
        hole_side: s.hole_side,
    })
}

/// Centred hole grid with explicit counts, overriding the maximal-grid rule.
/// The layout must still fit inside the plate outline.
pub fn hole_grid_with_counts<T: Real>(
    s: &TestStructure<T>,
    n_cols: usize,
    n_rows: usize,
) -> Result<HoleGrid<T>> {
    if n_cols < 1 || n_rows < 1 {
        return Err(Error::Geometry(format!(
            "hole grid override needs at least one hole, got {n_cols}x{n_rows}"
        )));
    }
    let pitch = s.pitch();
    let two = lit::<T>(2.0);
    let span_x = T::from_usize(n_cols - 1).unwrap() * pitch + s.hole_side;
    let span_y = T::from_usize(n_rows - 1).unwrap() * pitch + s.hole_side;
    if span_x > s.plate_length || span_y > s.plate_width {
        return Err(Error::Geometry(format!(
            "structure `{}`: a {n_cols}x{n_rows} hole grid spans {span_x} x {span_y} µm, \
             outside the {} x {} µm plate",
            s.label, s.plate_length, s.plate_width
        )));
    }
    Ok(HoleGrid {
        n_cols,
        n_rows,
        pitch,
        origin: (
            (s.plate_length - span_x) / two,
            (s.plate_width - span_y) / two,
        ),
        hole_side: s.hole_side,
    })
}

/// Solid volume of plate plus four supports: (a·b − n·e²)·t + 4·(c·d)·t \[µm³\].
pub fn solid_volume<T: Real>(s: &TestStructure<T>, grid: &HoleGrid<T>) -> T {
    let holes = T::from_usize(grid.hole_count()).unwrap();
    let plate = (s.plate_area() - holes * s.hole_side * s.hole_side) * s.thickness;
    let supports = lit::<T>(4.0) * s.support_length * s.support_width * s.thickness;
    plate + supports
}

/// Total structure mass: density times solid volume \[kg\].
pub fn total_mass<T: Real>(s: &TestStructure<T>, grid: &HoleGrid<T>, mat: &MaterialProps<T>) -> T {
    mat.density * solid_volume(s, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_published_dimensions() {
        let cat = catalog::<f64>();
        assert_eq!(cat.len(), 6);
        let a = &cat[0];
        assert_eq!(a.label, "A");
        assert_eq!(a.plate_length, 372.4);
        assert_eq!(a.plate_width, 66.4);
        assert_eq!(a.support_length, 122.8);
        assert_eq!(a.support_width, 4.0);
        assert_eq!(a.hole_side, 5.0);
        assert_eq!(a.hole_spacing, 5.2);
        let f = &cat[5];
        assert_eq!(f.label, "F");
        assert_eq!(f.plate_length, 363.8);
        assert_eq!(f.plate_width, 243.8);
        assert_eq!(f.support_length, 122.4);
        assert_eq!(f.support_width, 3.8);
        assert_eq!(f.hole_side, 6.2);
        assert_eq!(f.hole_spacing, 3.8);
        for s in &cat {
            assert_eq!(s.thickness, 15.0);
            assert_eq!(s.gap, 1.6);
        }
    }

    /// Independent maximal-grid search: grow n until the margin rule breaks.
    fn brute_force_count(extent: f64, e: f64, f: f64) -> usize {
        let pitch = e + f;
        let mut n = 0usize;
        loop {
            let cand = n + 1;
            let span = (cand - 1) as f64 * pitch + e;
            let margin = (extent - span) / 2.0;
            if margin + 1e-9 >= f / 2.0 {
                n = cand;
            } else {
                return n;
            }
        }
    }

    #[test]
    fn hole_grid_matches_brute_force_search_for_catalog() {
        for s in catalog::<f64>() {
            let grid = derive_hole_grid(&s).unwrap();
            let want_cols = brute_force_count(s.plate_length, s.hole_side, s.hole_spacing);
            let want_rows = brute_force_count(s.plate_width, s.hole_side, s.hole_spacing);
            assert_eq!(grid.n_cols, want_cols, "{} cols", s.label);
            assert_eq!(grid.n_rows, want_rows, "{} rows", s.label);
        }
    }

    #[test]
    fn structure_a_grid_is_36_by_6() {
        let s = catalog_structure::<f64>("A").unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        assert_eq!((grid.n_cols, grid.n_rows), (36, 6));
        assert_eq!(grid.hole_count(), 216);
        // every hole inside the plate with margin >= f/2
        let margin = s.hole_spacing / 2.0 - 1e-9;
        for (_, _, x, y) in grid.holes() {
            assert!(x >= margin && y >= margin);
            assert!(x + s.hole_side <= s.plate_length - margin);
            assert!(y + s.hole_side <= s.plate_width - margin);
        }
    }

    #[test]
    fn single_hole_plate() {
        let s = TestStructure::<f64>::new("one", 15.0, 15.0, 1.0, 1.0, 5.0, 5.0, 15.0, 1.6)
            .unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        assert_eq!((grid.n_cols, grid.n_rows), (1, 1));
        // centred
        assert!((grid.origin.0 - 5.0).abs() < 1e-12);
        assert!((grid.origin.1 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn plate_smaller_than_one_hole_is_rejected() {
        let s = TestStructure::new("tiny", 4.0, 6.0, 1.0, 1.0, 5.0, 5.0, 15.0, 1.6).unwrap();
        match derive_hole_grid(&s) {
            Err(Error::Geometry(_)) => {}
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn grid_derivation_is_deterministic() {
        let s = catalog_structure::<f64>("C").unwrap();
        let g1 = derive_hole_grid(&s).unwrap();
        let g2 = derive_hole_grid(&s).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn solid_volume_structure_a() {
        let s = catalog_structure::<f64>("A").unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let v = solid_volume(&s, &grid);
        // formula value with the 216-hole grid
        assert!((v - 319_382.4).abs() < 1e-6 * v);
        // published volume for this structure
        assert!((v - 3.105e5).abs() / 3.105e5 < 0.05);
    }

    #[test]
    fn solid_volume_without_holes_or_supports() {
        let mut s =
            TestStructure::new("slab", 100.0, 50.0, 1.0, 1.0, 5.0, 5.0, 10.0, 1.6).unwrap();
        s.support_length = 0.0; // zero support area, volume is plain a*b*t
        let v = solid_volume(&s, &HoleGrid::none());
        assert_eq!(v, 100.0 * 50.0 * 10.0);
    }

    #[test]
    fn solid_volume_structure_f_within_published_tolerance() {
        let s = catalog_structure::<f64>("F").unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        assert_eq!(grid.hole_count(), 864);
        let v = solid_volume(&s, &grid);
        assert!((v - 8.982e5).abs() / 8.982e5 < 0.05, "v = {v}");
    }

    #[test]
    fn total_mass_tracks_published_values() {
        let mat = MaterialProps::<f64>::polysilicon();
        let s = catalog_structure::<f64>("A").unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let m = total_mass(&s, &grid, &mat);
        assert!((m - 7.442e-10).abs() / 7.442e-10 < 0.05, "A mass {m}");
        let f = catalog_structure::<f64>("F").unwrap();
        let gf = derive_hole_grid(&f).unwrap();
        let mf = total_mass(&f, &gf, &mat);
        assert!((mf - 2.004e-9).abs() / 2.004e-9 < 0.05, "F mass {mf}");
    }

    #[test]
    fn zero_density_gives_zero_mass() {
        let mat = MaterialProps::<f64>::new(147e9, 0.0, 0.2152).unwrap();
        let s = catalog_structure::<f64>("B").unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        assert_eq!(total_mass(&s, &grid, &mat), 0.0);
    }

    #[test]
    fn volume_strictly_decreases_with_hole_side_at_fixed_grid() {
        let s = catalog_structure::<f64>("A").unwrap();
        let grid = derive_hole_grid(&s).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let mut si = s.clone();
            si.hole_side = 4.0 + 0.05 * i as f64;
            let v = solid_volume(&si, &grid);
            assert!(v < prev, "volume must strictly decrease with hole side");
            prev = v;
        }
    }

    #[test]
    fn invalid_structures_are_rejected() {
        assert!(TestStructure::new("x", -1.0, 10.0, 1.0, 1.0, 2.0, 2.0, 15.0, 1.6).is_err());
        // gap >= thickness
        assert!(TestStructure::new("x", 10.0, 10.0, 1.0, 1.0, 2.0, 2.0, 1.5, 1.6).is_err());
        // hole side >= plate width
        assert!(TestStructure::new("x", 30.0, 6.0, 1.0, 1.0, 7.0, 2.0, 15.0, 1.6).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let cat = catalog::<f32>();
        let grid = derive_hole_grid(&cat[0]).unwrap();
        assert_eq!((grid.n_cols, grid.n_rows), (36, 6));
        let v = solid_volume(&cat[0], &grid);
        assert!((v - 3.1938e5).abs() / 3.1938e5 < 1e-4);
    }
}
