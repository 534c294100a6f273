//! Experiment configuration: flat `key = value` lines.
//!
//! `#` starts a comment, lists are comma separated, and `disk` may repeat
//! (one `x, y, radius, amplitude` per line). Absent keys take the defaults of
//! [`ExperimentConfig::default`]; unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phantom::{default_disks, Disk};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Phantom,
    Forward,
    Kernel,
    Measure,
    Focus,
    Endtoend,
    Validate,
}

impl Mode {
    pub const ALL: [Mode; 7] =
        [Mode::Phantom, Mode::Forward, Mode::Kernel, Mode::Measure, Mode::Focus, Mode::Endtoend, Mode::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Phantom => "phantom",
            Mode::Forward => "forward",
            Mode::Kernel => "kernel",
            Mode::Measure => "measure",
            Mode::Focus => "focus",
            Mode::Endtoend => "endtoend",
            Mode::Validate => "validate",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unfocused wave family used by the measure/focus stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Spherical,
    Monochromatic,
    Plane,
    Xray,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Spherical => "spherical",
            Family::Monochromatic => "monochromatic",
            Family::Plane => "plane",
            Family::Xray => "xray",
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spherical" => Ok(Family::Spherical),
            "monochromatic" => Ok(Family::Monochromatic),
            "plane" => Ok(Family::Plane),
            "xray" => Ok(Family::Xray),
            _ => Err(format!("unknown wave family `{s}` (expected spherical, monochromatic, plane or xray)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Bruteforce,
    Adjoint,
}

impl KernelMethod {
    pub fn name(self) -> &'static str {
        match self {
            KernelMethod::Bruteforce => "bruteforce",
            KernelMethod::Adjoint => "adjoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Cells per axis of the conduction grid on `[-1/2, 1/2]^2`.
    pub grid: usize,
    /// Cells per axis of the kernel grid; must divide `grid`.
    pub interior: usize,
    pub transducers: usize,
    pub transducer_radius: f64,
    pub radii: usize,
    /// 0 picks the default band.
    pub frequencies: usize,
    pub angles: usize,
    /// 0 picks eight samples per cell across the circumscribed disk.
    pub offsets: usize,
    pub oversample: usize,
    pub family: Family,
    pub noise: f64,
    pub seed: u64,
    /// 0 uses every core.
    pub threads: usize,
    pub kernel: KernelMethod,
    pub eps: f64,
    pub tol: f64,
    pub disks: Vec<Disk>,
    /// Kernel rows written as PGM images.
    pub images: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Endtoend,
            grid: 64,
            interior: 64,
            transducers: 128,
            transducer_radius: 1.0,
            radii: 256,
            frequencies: 0,
            angles: 180,
            offsets: 0,
            oversample: 2,
            family: Family::Plane,
            noise: 0.0,
            seed: 0,
            threads: 0,
            kernel: KernelMethod::Bruteforce,
            eps: 1e-3,
            tol: 1e-10,
            disks: default_disks(),
            images: 4,
            out: None,
        }
    }
}

fn value_error(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue { key: key.to_string(), message: message.into() }
}

fn positive_count(key: &str, v: &str) -> Result<usize> {
    match v.parse::<i64>() {
        Ok(n) if n > 0 => Ok(n as usize),
        Ok(n) => Err(value_error(key, format!("must be a positive integer, got {n}"))),
        Err(_) => Err(value_error(key, format!("expected an integer, got `{v}`"))),
    }
}

fn count_or_auto(key: &str, v: &str) -> Result<usize> {
    match v.parse::<i64>() {
        Ok(n) if n >= 0 => Ok(n as usize),
        Ok(n) => Err(value_error(key, format!("must be positive (or 0 for automatic), got {n}"))),
        Err(_) => Err(value_error(key, format!("expected an integer, got `{v}`"))),
    }
}

fn real(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| value_error(key, format!("expected a finite number, got `{v}`")))
}

fn positive_real(key: &str, v: &str) -> Result<f64> {
    let x = real(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(value_error(key, format!("must be positive, got {x}")))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_for(text, None)
}

/// Like [`parse_config`], with `mode` (when given) overriding any `mode` key
/// before the cross-key checks run.
pub fn parse_config_for(text: &str, mode: Option<Mode>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut disks: Option<Vec<Disk>> = None;
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
            line: number + 1,
            message: format!("expected `key = value`, got `{}`", raw.trim()),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::ConfigSyntax { line: number + 1, message: "missing key".into() });
        }
        match key {
            "mode" => cfg.mode = value.parse().map_err(|e: String| value_error(key, e))?,
            "grid" => cfg.grid = positive_count(key, value)?,
            "interior" => cfg.interior = positive_count(key, value)?,
            "transducers" => cfg.transducers = positive_count(key, value)?,
            "transducer_radius" => cfg.transducer_radius = positive_real(key, value)?,
            "radii" => cfg.radii = positive_count(key, value)?,
            "frequencies" => cfg.frequencies = count_or_auto(key, value)?,
            "angles" => cfg.angles = positive_count(key, value)?,
            "offsets" => cfg.offsets = count_or_auto(key, value)?,
            "oversample" => cfg.oversample = positive_count(key, value)?,
            "family" => cfg.family = value.parse().map_err(|e: String| value_error(key, e))?,
            "noise" => {
                let x = real(key, value)?;
                if x < 0.0 {
                    return Err(value_error(key, format!("must be non-negative, got {x}")));
                }
                cfg.noise = x;
            }
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| value_error(key, format!("expected a non-negative integer, got `{value}`")))?
            }
            "threads" => cfg.threads = count_or_auto(key, value)?,
            "kernel" => {
                cfg.kernel = match value {
                    "bruteforce" => KernelMethod::Bruteforce,
                    "adjoint" => KernelMethod::Adjoint,
                    _ => return Err(value_error(key, format!("expected bruteforce or adjoint, got `{value}`"))),
                }
            }
            "eps" => cfg.eps = positive_real(key, value)?,
            "tol" => cfg.tol = positive_real(key, value)?,
            "images" => cfg.images = count_or_auto(key, value)?,
            "out" => cfg.out = Some(PathBuf::from(value)),
            "disk" => {
                let parts = value.split(',').map(|s| real(key, s.trim())).collect::<Result<Vec<_>>>()?;
                if parts.len() != 4 {
                    return Err(value_error(key, format!("expected `x, y, radius, amplitude`, got `{value}`")));
                }
                if !(parts[2] > 0.0) || parts[3].abs() > 1.0 {
                    return Err(value_error(key, "radius must be positive and |amplitude| <= 1"));
                }
                disks.get_or_insert_with(Vec::new).push(Disk::new_2d(parts[0], parts[1], parts[2], parts[3]));
            }
            "disks" if value == "none" => disks = Some(Vec::new()),
            _ => return Err(Error::ConfigSyntax { line: number + 1, message: format!("unknown key `{key}`") }),
        }
    }
    if let Some(d) = disks {
        cfg.disks = d;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Cross-key checks; run again after command-line overrides.
    pub fn validate(&self) -> Result<()> {
        if !self.grid.is_multiple_of(self.interior) {
            return Err(value_error("interior", format!("{} does not divide grid = {}", self.interior, self.grid)));
        }
        if self.grid < 2 || self.interior < 2 {
            return Err(value_error("grid", "need at least 2 cells per axis"));
        }
        if self.transducers < 4 {
            return Err(value_error("transducers", "need at least 4 transducers"));
        }
        if self.radii < 3 {
            return Err(value_error("radii", "need at least 3 radii"));
        }
        if self.offsets == 1 {
            return Err(value_error("offsets", "need at least 2 offsets"));
        }
        if self.transducer_radius <= std::f64::consts::FRAC_1_SQRT_2 {
            return Err(value_error("transducer_radius", "transducers must enclose the unit square (radius > 0.7072)"));
        }
        let focusing = matches!(self.mode, Mode::Focus | Mode::Endtoend);
        if focusing && matches!(self.family, Family::Spherical | Family::Monochromatic) {
            return Err(value_error(
                "family",
                format!(
                    "`{}` data can only be focused in 3D; the 2D conduction experiment supports plane and xray",
                    self.family.name()
                ),
            ));
        }
        Ok(())
    }

    /// Every setting as `(key, value)`, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("mode".to_string(), self.mode.name().to_string()),
            ("grid".into(), self.grid.to_string()),
            ("interior".into(), self.interior.to_string()),
            ("transducers".into(), self.transducers.to_string()),
            ("transducer_radius".into(), self.transducer_radius.to_string()),
            ("radii".into(), self.radii.to_string()),
            ("frequencies".into(), self.frequencies.to_string()),
            ("angles".into(), self.angles.to_string()),
            ("offsets".into(), self.offsets.to_string()),
            ("oversample".into(), self.oversample.to_string()),
            ("family".into(), self.family.name().to_string()),
            ("noise".into(), self.noise.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("threads".into(), self.threads.to_string()),
            ("kernel".into(), self.kernel.name().to_string()),
            ("eps".into(), self.eps.to_string()),
            ("tol".into(), self.tol.to_string()),
            ("images".into(), self.images.to_string()),
        ];
        if self.disks.is_empty() {
            out.push(("disks".into(), "none".into()));
        }
        for d in &self.disks {
            out.push(("disk".into(), format!("{}, {}, {}, {}", d.center[0], d.center[1], d.radius, d.amplitude)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_from_text() {
        let cfg = parse_config("transducers = 300\nradii = 800").unwrap();
        assert_eq!(cfg.transducers, 300);
        assert_eq!(cfg.radii, 800);
    }

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!((cfg.grid, cfg.transducers, cfg.radii), (64, 128, 256));
        assert_eq!(cfg.family, Family::Plane);
        assert_eq!(cfg.noise, 0.0);
    }

    #[test]
    fn negative_radii_names_the_key() {
        let err = parse_config("radii = -5").unwrap_err();
        assert!(matches!(&err, Error::ConfigValue { key, .. } if key == "radii"));
        assert!(err.to_string().contains("radii"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_config("# header\ngrid = 32\nthis line is wrong\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 3, .. }));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config("colour = blue").unwrap_err();
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn comments_and_disks() {
        let cfg = parse_config("disk = 0.1, 0.0, 0.2, 0.05 # first\ndisk = -0.1,0,0.1,-0.05\n").unwrap();
        assert_eq!(cfg.disks.len(), 2);
        assert_eq!(cfg.disks[1].amplitude, -0.05);
        assert!(parse_config("disks = none").unwrap().disks.is_empty());
    }

    #[test]
    fn spherical_focusing_in_2d_is_rejected() {
        let err = parse_config("family = spherical\nmode = endtoend").unwrap_err();
        assert!(matches!(&err, Error::ConfigValue { key, .. } if key == "family"));
        assert!(parse_config("family = spherical\nmode = measure").is_ok());
        assert!(parse_config_for("family = spherical", Some(Mode::Measure)).is_ok());
    }

    #[test]
    fn echo_reparses_to_the_same_config() {
        let cfg = parse_config("grid = 32\ninterior = 16\nfamily = xray\nnoise = 0.01").unwrap();
        let text: String = cfg.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
