use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// The tracker variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerKind {
    /// Translation-only 2-D filter.
    Translation,
    /// Translation filter applied to a few resolutions.
    #[serde(rename = "multires")]
    MultiResolution,
    /// 3-D filter over a feature pyramid.
    Joint,
    /// 3-D filter with detection iterated around the latest estimate.
    IterativeJoint,
    /// Separate translation and 1-D scale filters.
    Dsst,
    /// DSST with coarse features, PCA/QR compression and score interpolation.
    Fdsst,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 6] = [
        TrackerKind::Translation,
        TrackerKind::MultiResolution,
        TrackerKind::Joint,
        TrackerKind::IterativeJoint,
        TrackerKind::Dsst,
        TrackerKind::Fdsst,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrackerKind::Translation => "translation",
            TrackerKind::MultiResolution => "multires",
            TrackerKind::Joint => "joint",
            TrackerKind::IterativeJoint => "iterative_joint",
            TrackerKind::Dsst => "dsst",
            TrackerKind::Fdsst => "fdsst",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "dcf" | "translation_dcf" => Some(TrackerKind::Translation),
                "multi_resolution" => Some(TrackerKind::MultiResolution),
                "iterative" => Some(TrackerKind::IterativeJoint),
                _ => None,
            })
            .ok_or_else(|| {
                Error::arg(format!(
                    "unknown tracker '{s}'; valid kinds: {}",
                    Self::valid_names()
                ))
            })
    }
}

/// Tracker parameters. Use [`TrackerConfig::for_kind`] for the standard settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackerConfig {
    /// Regularization weight λ.
    pub lambda: f64,
    /// Learning rate η.
    pub eta: f64,
    /// Translation window size as a multiple of the initial target size.
    pub padding: f64,
    /// HOG cell size of the translation features.
    pub cell_size: usize,
    /// Scale levels sampled per frame (S).
    pub num_scales: usize,
    /// Scale levels after score interpolation (Ŝ).
    pub interp_scales: usize,
    /// Scale factor between levels (a).
    pub scale_step: f64,
    /// Translation Gaussian σ as a fraction of the target size.
    pub translation_sigma_factor: f64,
    /// Scale Gaussian σ as a fraction of the number of scales.
    pub scale_sigma_factor: f64,
    /// PCA dimension of the translation features; `None` keeps them uncompressed.
    pub pca_dims: Option<usize>,
    /// Interpolate translation scores to pixel density.
    pub translation_interpolation: bool,
    /// QR-compress the scale filter.
    pub scale_compression: bool,
    /// Area cap of the fixed scale-feature patch.
    pub scale_model_max_area: f64,
    pub scale_cell_size: usize,
    /// Detection iterations of the iterative joint filter.
    pub max_iterations: usize,
}

impl TrackerConfig {
    pub fn for_kind(kind: TrackerKind) -> Self {
        let base = Self {
            lambda: 0.01,
            eta: 0.025,
            padding: 2.0,
            cell_size: 1,
            num_scales: 33,
            interp_scales: 33,
            scale_step: 1.02,
            translation_sigma_factor: 1.0 / 16.0,
            scale_sigma_factor: 1.0 / 16.0,
            pca_dims: None,
            translation_interpolation: false,
            scale_compression: false,
            scale_model_max_area: 512.0,
            scale_cell_size: 4,
            max_iterations: 5,
        };
        match kind {
            TrackerKind::Translation => Self {
                num_scales: 1,
                interp_scales: 1,
                ..base
            },
            TrackerKind::MultiResolution => Self {
                num_scales: 5,
                interp_scales: 5,
                scale_step: 1.005,
                ..base
            },
            TrackerKind::Joint | TrackerKind::IterativeJoint | TrackerKind::Dsst => base,
            TrackerKind::Fdsst => Self {
                padding: 3.0,
                cell_size: 4,
                num_scales: 17,
                interp_scales: 33,
                pca_dims: Some(18),
                translation_interpolation: true,
                scale_compression: true,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("padding", self.padding),
            ("translation_sigma_factor", self.translation_sigma_factor),
            ("scale_sigma_factor", self.scale_sigma_factor),
            ("scale_model_max_area", self.scale_model_max_area),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eta > 1.0 {
            return Err(Error::arg(format!("eta must be at most 1, got {}", self.eta)));
        }
        if !(self.scale_step > 1.0) {
            return Err(Error::arg(format!("scale_step must exceed 1, got {}", self.scale_step)));
        }
        for (name, v) in [
            ("cell_size", self.cell_size),
            ("num_scales", self.num_scales),
            ("scale_cell_size", self.scale_cell_size),
            ("max_iterations", self.max_iterations),
        ] {
            if v == 0 {
                return Err(Error::arg(format!("{name} must be positive")));
            }
        }
        if self.interp_scales < self.num_scales {
            return Err(Error::arg(format!(
                "interp_scales ({}) must be at least num_scales ({})",
                self.interp_scales, self.num_scales
            )));
        }
        if self.pca_dims == Some(0) {
            return Err(Error::arg("pca_dims must be positive"));
        }
        Ok(())
    }

    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::arg(format!("invalid value '{v}' for {key}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v.trim().to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(Error::arg(format!("invalid boolean '{v}' for {key}"))),
            }
        }
        match key.trim() {
            "lambda" => self.lambda = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "padding" => self.padding = num(key, value)?,
            "cell_size" => self.cell_size = num(key, value)?,
            "num_scales" => self.num_scales = num(key, value)?,
            "interp_scales" => self.interp_scales = num(key, value)?,
            "scale_step" => self.scale_step = num(key, value)?,
            "translation_sigma_factor" => self.translation_sigma_factor = num(key, value)?,
            "scale_sigma_factor" => self.scale_sigma_factor = num(key, value)?,
            "pca_dims" => {
                let d: usize = num(key, value)?;
                self.pca_dims = (d > 0).then_some(d);
            }
            "translation_interpolation" => self.translation_interpolation = flag(key, value)?,
            "scale_compression" => self.scale_compression = flag(key, value)?,
            "scale_model_max_area" => self.scale_model_max_area = num(key, value)?,
            "scale_cell_size" => self.scale_cell_size = num(key, value)?,
            "max_iterations" => self.max_iterations = num(key, value)?,
            other => return Err(Error::arg(format!("unknown tracker parameter '{other}'"))),
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 15] = [
        "lambda",
        "eta",
        "padding",
        "cell_size",
        "num_scales",
        "interp_scales",
        "scale_step",
        "translation_sigma_factor",
        "scale_sigma_factor",
        "pca_dims",
        "translation_interpolation",
        "scale_compression",
        "scale_model_max_area",
        "scale_cell_size",
        "max_iterations",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_parameters() {
        let d = TrackerConfig::for_kind(TrackerKind::Dsst);
        assert_eq!((d.lambda, d.eta, d.padding), (0.01, 0.025, 2.0));
        assert_eq!((d.num_scales, d.scale_step), (33, 1.02));
        let f = TrackerConfig::for_kind(TrackerKind::Fdsst);
        assert_eq!((f.padding, f.cell_size, f.pca_dims), (3.0, 4, Some(18)));
        assert_eq!((f.num_scales, f.interp_scales), (17, 33));
        let m = TrackerConfig::for_kind(TrackerKind::MultiResolution);
        assert_eq!((m.num_scales, m.scale_step), (5, 1.005));
        for k in TrackerKind::ALL {
            TrackerConfig::for_kind(k).validate().unwrap();
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("fDSST".parse::<TrackerKind>().unwrap(), TrackerKind::Fdsst);
        assert_eq!("iterative-joint".parse::<TrackerKind>().unwrap(), TrackerKind::IterativeJoint);
        let err = "kcf".parse::<TrackerKind>().unwrap_err().to_string();
        assert!(err.contains("dsst") && err.contains("multires"));
    }

    #[test]
    fn setters_and_validation() {
        let mut c = TrackerConfig::for_kind(TrackerKind::Dsst);
        c.set("pca_dims", "0").unwrap();
        assert_eq!(c.pca_dims, None);
        c.set("scale_compression", "yes").unwrap();
        assert!(c.scale_compression);
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("eta", "abc").is_err());
        c.set("interp_scales", "5").unwrap();
        assert!(c.validate().is_err());
    }
}
