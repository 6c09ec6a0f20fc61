//! TOML run configuration. Every physical quantity is a string carrying its
//! unit, e.g. `tau = "1.4 us"`; values are converted to internal units
//! (μs, nm, nm⁻³, rad/μs) here and nowhere else.
//!
//! Ordinary frequencies (Hz, kHz, MHz, GHz) are multiplied by 2π on the way
//! in. Rates written as inverse times (s^-1, ms^-1, us^-1) and angular
//! frequencies (rad/us) are taken as given.

use serde::Deserialize;
use std::f64::consts::PI;
use std::ops::Range;
use toml::Spanned;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    At { line: usize, msg: String },
    #[error("config: {0}")]
    General(String),
}

pub type Quantity = Spanned<String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Time,
    Length,
    Density,
    Volume,
    /// Angular frequency or rate, rad/μs.
    Frequency,
}

fn unit_factor(dim: Dim, unit: &str) -> Option<f64> {
    let f = match (dim, unit) {
        (Dim::Time, "s") => 1e6,
        (Dim::Time, "ms") => 1e3,
        (Dim::Time, "us") => 1.0,
        (Dim::Time, "ns") => 1e-3,
        (Dim::Length, "nm") => 1.0,
        (Dim::Length, "um") => 1e3,
        (Dim::Density, "nm^-3") => 1.0,
        (Dim::Density, "cm^-3") => 1e-21,
        (Dim::Density, "ppm") => 1.76e-4,
        (Dim::Volume, "nm^3") => 1.0,
        (Dim::Volume, "um^3") => 1e9,
        (Dim::Frequency, "Hz") => 2.0 * PI * 1e-6,
        (Dim::Frequency, "kHz") => 2.0 * PI * 1e-3,
        (Dim::Frequency, "MHz") => 2.0 * PI,
        (Dim::Frequency, "GHz") => 2.0 * PI * 1e3,
        (Dim::Frequency, "s^-1") => 1e-6,
        (Dim::Frequency, "ms^-1") => 1e-3,
        (Dim::Frequency, "us^-1") => 1.0,
        (Dim::Frequency, "rad/us") => 1.0,
        _ => return None,
    };
    Some(f)
}

fn allowed(dim: Dim) -> &'static str {
    match dim {
        Dim::Time => "s, ms, us, ns",
        Dim::Length => "nm, um",
        Dim::Density => "cm^-3, nm^-3, ppm",
        Dim::Volume => "nm^3, um^3",
        Dim::Frequency => "Hz, kHz, MHz, GHz, s^-1, ms^-1, us^-1, rad/us",
    }
}

/// Parse "value unit" into internal units.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, String> {
    let mut parts = text.split_whitespace();
    let (value, unit) = match (parts.next(), parts.next(), parts.next()) {
        (Some(v), Some(u), None) => (v, u),
        (Some(_), None, _) => return Err(format!("'{text}' has no unit (expected one of {})", allowed(dim))),
        _ => return Err(format!("cannot read quantity '{text}'")),
    };
    let v: f64 = value.parse().map_err(|_| format!("invalid number '{value}'"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value '{value}'"));
    }
    let f = unit_factor(dim, unit).ok_or_else(|| format!("unit '{unit}' not allowed here (expected one of {})", allowed(dim)))?;
    Ok(v * f)
}

/// Maps byte offsets to 1-based line numbers.
pub struct Source<'a> {
    text: &'a str,
}

impl<'a> Source<'a> {
    pub fn new(text: &'a str) -> Self {
        Source { text }
    }

    pub fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    pub fn at(&self, span: Range<usize>, msg: impl Into<String>) -> ConfigError {
        ConfigError::At { line: self.line_of(span.start), msg: msg.into() }
    }

    pub fn quantity(&self, q: &Quantity, dim: Dim) -> Result<f64, ConfigError> {
        parse_quantity(q.get_ref(), dim).map_err(|m| self.at(q.span(), m))
    }

    pub fn positive(&self, q: &Quantity, dim: Dim) -> Result<f64, ConfigError> {
        let v = self.quantity(q, dim)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.at(q.span(), format!("'{}' must be positive", q.get_ref())))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub geometry: Option<Spanned<RawGeometry>>,
    pub sequence: Option<Spanned<RawSequence>>,
    pub noise: Option<Spanned<RawNoise>>,
    pub analysis: Option<RawAnalysis>,
    pub squeeze: Option<Spanned<RawSqueeze>>,
    pub sensitivity: Option<Spanned<RawSensitivity>>,
    pub sweep: Option<Spanned<RawSweep>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    /// chain | lattice | slab | uniform | file
    pub kind: Spanned<String>,
    pub n: Option<usize>,
    pub spacing: Option<Quantity>,
    pub slab: Option<[Quantity; 3]>,
    pub density: Option<Quantity>,
    pub r_min: Option<Quantity>,
    /// Pair coupling for the uniform kind.
    pub coupling: Option<Quantity>,
    pub file: Option<String>,
    /// Placement seed; defaults to the run seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSequence {
    pub template: Option<Spanned<String>>,
    pub tau: Quantity,
    pub eps: Option<f64>,
    pub target_cycle: Option<f64>,
    pub cycles: Option<usize>,
    pub propagation: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    pub gamma: Quantity,
    pub tau_c: Quantity,
    pub mode: Option<Spanned<String>>,
    pub trajectories: Option<usize>,
    pub dt: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAnalysis {
    pub variants: Option<Vec<Spanned<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSqueeze {
    pub n: usize,
    /// One-axis twisting strength d in d·J_z².
    pub coupling: Quantity,
    pub points: usize,
    /// Largest twisting angle χ = d·t on the grid.
    pub chi_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSensitivity {
    pub volume: Quantity,
    pub density: Option<Quantity>,
    pub conversion: f64,
    pub contrast: f64,
    pub t2: Quantity,
    pub tau: Quantity,
    /// α̃ in units of J0⁶τ⁴.
    pub alpha_factor: Option<f64>,
    /// Gap in units of J0·n_s.
    pub gap_factor: Option<f64>,
    pub mode: Option<Spanned<String>>,
    pub schemes: Option<Vec<Spanned<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub density_min: Quantity,
    pub density_max: Quantity,
    pub points: usize,
}

/// Parse the TOML text, reporting syntax and schema errors by line.
pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str::<RawConfig>(text).map_err(|e| {
        let msg = e.message().to_string();
        match e.span() {
            Some(span) => Source::new(text).at(span, msg),
            None => ConfigError::General(msg),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_convert() {
        assert_eq!(parse_quantity("1.4 us", Dim::Time).unwrap(), 1.4);
        assert!((parse_quantity("3 kHz", Dim::Frequency).unwrap() - 2.0 * PI * 3e-3).abs() < 1e-15);
        assert!((parse_quantity("3 ms^-1", Dim::Frequency).unwrap() - 3e-3).abs() < 1e-15);
        assert!((parse_quantity("1e18 cm^-3", Dim::Density).unwrap() - 1e-3).abs() < 1e-15);
        assert!(parse_quantity("1.4", Dim::Time).unwrap_err().contains("no unit"));
        assert!(parse_quantity("1.4 nm", Dim::Time).unwrap_err().contains("not allowed"));
    }

    #[test]
    fn unknown_key_has_line() {
        let err = parse("seed = 1\n[noise]\ngamma = \"3 kHz\"\ntau_c = \"100 us\"\nflavour = 2\n").unwrap_err();
        match err {
            ConfigError::At { line, msg } => {
                assert_eq!(line, 5, "{msg}");
                assert!(msg.contains("flavour"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn quantity_error_has_line() {
        let text = "[sequence]\n\ntau = \"1.4\"\n";
        let raw = parse(text).unwrap();
        let seq = raw.sequence.unwrap().into_inner();
        let err = Source::new(text).quantity(&seq.tau, Dim::Time).unwrap_err();
        assert!(matches!(err, ConfigError::At { line: 3, .. }), "{err}");
    }
}
