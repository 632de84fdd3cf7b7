//! Structured text configuration: structure blocks, gas and material
//! properties, mesh, sweep and run settings.
//!
//! The format is line-oriented: `[section]` headers followed by `key = value`
//! pairs, `#` comments, blank lines ignored. Unknown sections and keys are
//! rejected with their line number. Structure blocks use the drawing symbols
//! `a, b, c, d, e, f, t, gap`, all in µm.

use std::path::PathBuf;

use crate::gasfilm::{ChannelOptions, GasProps};
use crate::geometry::{MaterialProps, TestStructure};
use crate::{lit, Error, Real, Result};

/// Which extraction route a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    ImposedVelocity,
    ModalProjection,
    #[default]
    Both,
}

impl Method {
    pub fn parse(text: &str) -> Option<Method> {
        match text {
            "imposed-velocity" => Some(Method::ImposedVelocity),
            "modal-projection" => Some(Method::ModalProjection),
            "both" => Some(Method::Both),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::ImposedVelocity => "imposed-velocity",
            Method::ModalProjection => "modal-projection",
            Method::Both => "both",
        }
    }

    pub fn runs_imposed(&self) -> bool {
        matches!(self, Method::ImposedVelocity | Method::Both)
    }

    pub fn runs_modal(&self) -> bool {
        matches!(self, Method::ModalProjection | Method::Both)
    }
}

/// Mesh element size: absolute µm, a fraction of the support width d, or
/// the per-structure automatic default min(d, e, f).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementSizeSpec<T> {
    Auto,
    Absolute(T),
    FractionOfSupportWidth(T),
}

impl<T: Real> ElementSizeSpec<T> {
    /// Parses `auto`, a plain number (µm), `d`, or `d/N`.
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if t == "auto" {
            return Some(ElementSizeSpec::Auto);
        }
        if t == "d" {
            return Some(ElementSizeSpec::FractionOfSupportWidth(T::one()));
        }
        if let Some(den) = t.strip_prefix("d/") {
            let d: f64 = den.trim().parse().ok()?;
            if d > 0.0 {
                return Some(ElementSizeSpec::FractionOfSupportWidth(lit(1.0 / d)));
            }
            return None;
        }
        let v: f64 = t.parse().ok()?;
        if v > 0.0 {
            return Some(ElementSizeSpec::Absolute(lit(v)));
        }
        None
    }

    /// Concrete element size in µm for a structure.
    pub fn resolve(&self, s: &TestStructure<T>) -> T {
        match *self {
            ElementSizeSpec::Auto => s.support_width.min(s.hole_side).min(s.hole_spacing),
            ElementSizeSpec::Absolute(v) => v,
            ElementSizeSpec::FractionOfSupportWidth(f) => s.support_width * f,
        }
    }
}

/// Logarithmic frequency sweep description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec<T> {
    pub f_min_hz: T,
    pub f_max_hz: T,
    pub points_per_decade: usize,
}

impl<T: Real> Default for SweepSpec<T> {
    fn default() -> Self {
        SweepSpec {
            f_min_hz: lit(1e3),
            f_max_hz: lit(1e7),
            points_per_decade: 40,
        }
    }
}

/// Full run configuration; parsed from config text, overridable by CLI flags.
#[derive(Debug, Clone)]
pub struct RunConfig<T> {
    /// Label of the structure to run (catalog or inline).
    pub structure: String,
    /// Structures defined inline in the config document.
    pub inline_structures: Vec<TestStructure<T>>,
    pub gas: GasProps<T>,
    pub material: MaterialProps<T>,
    pub element_size: ElementSizeSpec<T>,
    pub dump_mesh: bool,
    pub sweep: SweepSpec<T>,
    pub method: Method,
    /// Modal basis size for the projection route.
    pub modes: usize,
    pub output_dir: PathBuf,
    /// Reference frequency for convergence studies; the lumped resonance
    /// prediction when absent.
    pub reference_frequency_hz: Option<T>,
    pub channel: ChannelOptions,
    /// Per-structure hole-count overrides (label, columns, rows) replacing
    /// the maximal-grid rule.
    pub hole_overrides: Vec<(String, usize, usize)>,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        RunConfig {
            structure: "A".into(),
            inline_structures: Vec::new(),
            gas: GasProps::air(),
            material: MaterialProps::polysilicon(),
            element_size: ElementSizeSpec::Auto,
            dump_mesh: false,
            sweep: SweepSpec::default(),
            method: Method::Both,
            modes: 1,
            output_dir: PathBuf::from("out"),
            reference_frequency_hz: None,
            channel: ChannelOptions::default(),
            hole_overrides: Vec::new(),
        }
    }
}

impl<T: Real> RunConfig<T> {
    /// Finds the selected structure among the inline blocks, then the
    /// built-in catalog.
    pub fn resolve_structure(&self) -> Result<TestStructure<T>> {
        if let Some(s) = self
            .inline_structures
            .iter()
            .find(|s| s.label == self.structure)
        {
            return Ok(s.clone());
        }
        crate::geometry::catalog_structure(&self.structure).ok_or_else(|| Error::Config {
            line: 0,
            field: "structure".into(),
            message: format!(
                "`{}` is neither an inline structure nor a catalog label (A-F)",
                self.structure
            ),
        })
    }

    /// Hole grid of a structure: the explicit override when configured,
    /// the maximal centred grid otherwise.
    pub fn derive_grid(
        &self,
        s: &crate::geometry::TestStructure<T>,
    ) -> Result<crate::geometry::HoleGrid<T>> {
        if let Some((_, cols, rows)) = self
            .hole_overrides
            .iter()
            .find(|(label, _, _)| *label == s.label)
        {
            return crate::geometry::hole_grid_with_counts(s, *cols, *rows);
        }
        crate::geometry::derive_hole_grid(s)
    }

    /// Cross-field validation mirroring the solver preconditions.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |field: &str, message: String| Error::Config {
            line: 0,
            field: field.into(),
            message,
        };
        if !(self.sweep.f_min_hz > T::zero()) {
            return Err(cfg_err(
                "f_min",
                format!("must be positive, got {}", self.sweep.f_min_hz),
            ));
        }
        if !(self.sweep.f_max_hz > self.sweep.f_min_hz) {
            return Err(cfg_err(
                "f_max",
                format!(
                    "must exceed f_min, got [{}, {}]",
                    self.sweep.f_min_hz, self.sweep.f_max_hz
                ),
            ));
        }
        if self.sweep.points_per_decade == 0 {
            return Err(cfg_err("points_per_decade", "must be at least 1".into()));
        }
        if self.modes < 1 || self.modes > crate::structure::MODE_FAMILY_SIZE {
            return Err(cfg_err(
                "modes",
                format!(
                    "must lie in 1..={}, got {}",
                    crate::structure::MODE_FAMILY_SIZE,
                    self.modes
                ),
            ));
        }
        let s = self.resolve_structure()?;
        let h = self.element_size.resolve(&s);
        if !(h > T::zero()) {
            return Err(cfg_err(
                "element_size",
                format!("resolved element size must be positive, got {h}"),
            ));
        }
        Ok(())
    }
}

/// Parses a config document on top of the defaults.
pub fn parse_config<T: Real>(text: &str) -> Result<RunConfig<T>> {
    let mut cfg = RunConfig::<T>::default();
    apply_config(&mut cfg, text)?;
    Ok(cfg)
}

/// Applies a config document onto an existing configuration.
pub fn apply_config<T: Real>(cfg: &mut RunConfig<T>, text: &str) -> Result<()> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Structure(String, usize),
        Gas,
        Material,
        Mesh,
        Sweep,
        Run,
    }
    let mut section = Section::None;
    // accumulators for the open structure block: a b c d e f t gap
    let mut pending: [Option<T>; 8] = [None; 8];
    let mut pending_holes: (Option<usize>, Option<usize>) = (None, None);

    let finish_structure = |cfg: &mut RunConfig<T>,
                            label: &str,
                            line: usize,
                            vals: &[Option<T>; 8],
                            holes: (Option<usize>, Option<usize>)|
     -> Result<()> {
        let get = |idx: usize, name: &str| -> Result<T> {
            vals[idx].ok_or_else(|| Error::Config {
                line,
                field: name.into(),
                message: format!("structure `{label}` is missing `{name}`"),
            })
        };
        let s = TestStructure::new(
            label,
            get(0, "a")?,
            get(1, "b")?,
            get(2, "c")?,
            get(3, "d")?,
            get(4, "e")?,
            get(5, "f")?,
            get(6, "t")?,
            get(7, "gap")?,
        )
        .map_err(|e| Error::Config {
            line,
            field: "structure".into(),
            message: e.to_string(),
        })?;
        match holes {
            (None, None) => cfg.hole_overrides.retain(|o| o.0 != label),
            (Some(cols), Some(rows)) => {
                crate::geometry::hole_grid_with_counts(&s, cols, rows).map_err(|e| {
                    Error::Config {
                        line,
                        field: "holes_cols".into(),
                        message: e.to_string(),
                    }
                })?;
                cfg.hole_overrides.retain(|o| o.0 != label);
                cfg.hole_overrides.push((label.to_string(), cols, rows));
            }
            _ => {
                return Err(Error::Config {
                    line,
                    field: "holes_cols".into(),
                    message: format!(
                        "structure `{label}` must set both holes_cols and holes_rows or neither"
                    ),
                })
            }
        }
        cfg.inline_structures.retain(|p| p.label != label);
        cfg.inline_structures.push(s);
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header.strip_suffix(']').ok_or_else(|| Error::Config {
                line: line_no,
                field: "section".into(),
                message: format!("malformed section header `{line}`"),
            })?;
            if let Section::Structure(label, at) = &section {
                finish_structure(cfg, label, *at, &pending, pending_holes)?;
                pending = [None; 8];
                pending_holes = (None, None);
            }
            section = match name.trim() {
                "gas" => Section::Gas,
                "material" => Section::Material,
                "mesh" => Section::Mesh,
                "sweep" => Section::Sweep,
                "run" => Section::Run,
                other => {
                    if let Some(label) = other.strip_prefix("structure ") {
                        Section::Structure(label.trim().to_string(), line_no)
                    } else {
                        return Err(Error::Config {
                            line: line_no,
                            field: "section".into(),
                            message: format!("unknown section `{other}`"),
                        });
                    }
                }
            };
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            field: "line".into(),
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let num = |field: &str| -> Result<T> {
            value
                .parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| Error::Config {
                    line: line_no,
                    field: field.into(),
                    message: format!("cannot parse number `{value}`"),
                })
        };
        let flag = |field: &str| -> Result<bool> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::Config {
                    line: line_no,
                    field: field.into(),
                    message: format!("expected true/false, got `{value}`"),
                }),
            }
        };
        let unknown = |field: &str, section: &str| Error::Config {
            line: line_no,
            field: field.into(),
            message: format!("unknown key in [{section}]"),
        };
        match &mut section {
            Section::None => {
                return Err(Error::Config {
                    line: line_no,
                    field: key.into(),
                    message: "key outside any section".into(),
                })
            }
            Section::Structure(_, _) => {
                let count = |field: &str| -> Result<usize> {
                    value.parse().map_err(|_| Error::Config {
                        line: line_no,
                        field: field.into(),
                        message: format!("cannot parse count `{value}`"),
                    })
                };
                let slot = match key {
                    "a" => 0,
                    "b" => 1,
                    "c" => 2,
                    "d" => 3,
                    "e" => 4,
                    "f" => 5,
                    "t" => 6,
                    "gap" => 7,
                    // optional override of the derived hole layout
                    "holes_cols" => {
                        pending_holes.0 = Some(count(key)?);
                        continue;
                    }
                    "holes_rows" => {
                        pending_holes.1 = Some(count(key)?);
                        continue;
                    }
                    _ => return Err(unknown(key, "structure")),
                };
                pending[slot] = Some(num(key)?);
            }
            Section::Gas => match key {
                "viscosity" => cfg.gas.viscosity = num(key)?,
                "ambient_pressure" => cfg.gas.ambient_pressure = num(key)?,
                "mean_free_path" => cfg.gas.mean_free_path = num(key)?,
                _ => return Err(unknown(key, "gas")),
            },
            Section::Material => match key {
                "young_modulus" => cfg.material.young_modulus = num(key)?,
                "density" => cfg.material.density = num(key)?,
                "poisson" => cfg.material.poisson = num(key)?,
                _ => return Err(unknown(key, "material")),
            },
            Section::Mesh => match key {
                "element_size" => {
                    cfg.element_size =
                        ElementSizeSpec::parse(value).ok_or_else(|| Error::Config {
                            line: line_no,
                            field: key.into(),
                            message: format!(
                                "expected `auto`, a size in µm, `d` or `d/N`, got `{value}`"
                            ),
                        })?
                }
                "dump" => cfg.dump_mesh = flag(key)?,
                _ => return Err(unknown(key, "mesh")),
            },
            Section::Sweep => match key {
                "f_min" => cfg.sweep.f_min_hz = num(key)?,
                "f_max" => cfg.sweep.f_max_hz = num(key)?,
                "points_per_decade" => {
                    cfg.sweep.points_per_decade =
                        value.parse().map_err(|_| Error::Config {
                            line: line_no,
                            field: key.into(),
                            message: format!("cannot parse count `{value}`"),
                        })?
                }
                _ => return Err(unknown(key, "sweep")),
            },
            Section::Run => match key {
                "structure" => cfg.structure = value.to_string(),
                "method" => {
                    cfg.method = Method::parse(value).ok_or_else(|| Error::Config {
                        line: line_no,
                        field: key.into(),
                        message: format!(
                            "expected imposed-velocity | modal-projection | both, got `{value}`"
                        ),
                    })?
                }
                "modes" => {
                    cfg.modes = value.parse().map_err(|_| Error::Config {
                        line: line_no,
                        field: key.into(),
                        message: format!("cannot parse count `{value}`"),
                    })?
                }
                "output" => cfg.output_dir = PathBuf::from(value),
                "reference_frequency" => {
                    cfg.reference_frequency_hz = if value == "auto" {
                        None
                    } else {
                        Some(num(key)?)
                    }
                }
                "channel_slip" => cfg.channel.slip_in_channel = flag(key)?,
                "channel_end_effect" => cfg.channel.end_effect = flag(key)?,
                _ => return Err(unknown(key, "run")),
            },
        }
    }
    if let Section::Structure(label, at) = &section {
        finish_structure(cfg, label, *at, &pending, pending_holes)?;
    }

    // gas invariants checked once the document is complete
    GasProps::new(
        cfg.gas.viscosity,
        cfg.gas.ambient_pressure,
        cfg.gas.mean_free_path,
    )
    .map_err(|e| Error::Config {
        line: 0,
        field: "gas".into(),
        message: e.to_string(),
    })?;
    MaterialProps::new(
        cfg.material.young_modulus,
        cfg.material.density,
        cfg.material.poisson,
    )
    .map_err(|e| Error::Config {
        line: 0,
        field: "material".into(),
        message: e.to_string(),
    })?;
    Ok(())
}

/// Serializes structure definitions as config blocks; parsing the output
/// reproduces the inputs exactly.
pub fn write_structures_config<T: Real>(structures: &[TestStructure<T>]) -> String {
    let mut out = String::new();
    for s in structures {
        out.push_str(&format!("[structure {}]\n", s.label));
        out.push_str(&format!("a = {}\n", s.plate_length));
        out.push_str(&format!("b = {}\n", s.plate_width));
        out.push_str(&format!("c = {}\n", s.support_length));
        out.push_str(&format!("d = {}\n", s.support_width));
        out.push_str(&format!("e = {}\n", s.hole_side));
        out.push_str(&format!("f = {}\n", s.hole_spacing));
        out.push_str(&format!("t = {}\n", s.thickness));
        out.push_str(&format!("gap = {}\n", s.gap));
        out.push('\n');
    }
    out
}
