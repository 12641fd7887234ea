//! Run configuration: built-in defaults, then the config file, then flags.
//!
//! Config file layout:
//!
//! ```text
//! [run]
//! tracker = dsst, fdsst
//! seq = builtin:zoom, data/Dog1
//! out = results
//! protocol = plain
//! threads = 1
//! seed = 1
//! timing = true
//!
//! [tracker]        # applies to every tracker kind
//! lambda = 0.01
//!
//! [fdsst]          # applies to one kind, after [tracker]
//! pca_dims = 18
//! ```

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluation::benchmark::Protocol;
use crate::evaluation::dataset::{load_otb_sequence, Sequence};
use crate::evaluation::synthetic::{render_synthetic, SyntheticSpec};
use crate::kv::KvFile;
use crate::trackers::{TrackerConfig, TrackerKind};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "DCFTRACK_CONFIG";
pub const BUILTIN_PREFIX: &str = "builtin:";

/// Command-line values; `None` or empty means "not given".
#[derive(Clone, Debug, Default)]
pub struct FlagValues {
    pub trackers: Option<String>,
    pub sequences: Vec<String>,
    pub out: Option<PathBuf>,
    pub protocol: Option<String>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub no_timing: bool,
    /// `key=value` or `kind.key=value` tracker overrides.
    pub set: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub trackers: Vec<(TrackerKind, TrackerConfig)>,
    pub sequences: Vec<String>,
    pub out: PathBuf,
    pub protocol: Protocol,
    pub threads: usize,
    /// Explicit seed; built-in sequences default to 1.
    pub seed: Option<u64>,
    pub timing: bool,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

pub fn parse_trackers(s: &str) -> Result<Vec<TrackerKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(TrackerKind::ALL.to_vec());
    }
    let kinds = split_list(s).iter().map(|t| t.parse()).collect::<Result<Vec<TrackerKind>>>()?;
    if kinds.is_empty() {
        return Err(Error::arg(format!("no tracker given; valid kinds: {}", TrackerKind::valid_names())));
    }
    Ok(kinds)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::arg(format!("invalid boolean '{v}' for {key}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::arg(format!("invalid value '{v}' for {key}")))
}

/// Config file named by `explicit`, else by the environment variable, if any.
pub fn load_config_file(explicit: Option<&Path>) -> Result<Option<KvFile>> {
    let path = match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    match path {
        None => Ok(None),
        Some(p) => {
            if !p.is_file() {
                return Err(Error::arg(format!("config file {} does not exist", p.display())));
            }
            KvFile::load(&p).map(Some)
        }
    }
}

/// Merges defaults, `file` and `flags`. `default_trackers` is used when
/// neither source names a tracker.
pub fn resolve(file: Option<&KvFile>, flags: &FlagValues, default_trackers: &[TrackerKind]) -> Result<RunConfig> {
    let empty = KvFile::default();
    let file = file.unwrap_or(&empty);
    let mut trackers_spec: Option<String> = None;
    let mut sequences: Vec<String> = Vec::new();
    let mut out = PathBuf::from("dcftrack-out");
    let mut protocol = Protocol::Plain;
    let mut threads = 1;
    let mut seed = None;
    let mut timing = true;

    for section in file.sections() {
        let known = matches!(section, "run" | "tracker") || section.parse::<TrackerKind>().is_ok();
        if !known {
            return Err(Error::arg(format!("unknown config section [{section}]")));
        }
    }
    for (k, v) in file.section("run") {
        match k {
            "tracker" | "trackers" => trackers_spec = Some(v.to_string()),
            "seq" | "sequences" => sequences = split_list(v),
            "out" => out = PathBuf::from(v),
            "protocol" => protocol = v.parse()?,
            "threads" => threads = parse_num(k, v)?,
            "seed" => seed = Some(parse_num(k, v)?),
            "timing" => timing = parse_bool(k, v)?,
            other => return Err(Error::arg(format!("unknown [run] key '{other}'"))),
        }
    }

    if let Some(t) = &flags.trackers {
        trackers_spec = Some(t.clone());
    }
    if !flags.sequences.is_empty() {
        sequences = flags.sequences.iter().flat_map(|s| split_list(s)).collect();
    }
    if let Some(o) = &flags.out {
        out = o.clone();
    }
    if let Some(p) = &flags.protocol {
        protocol = p.parse()?;
    }
    if let Some(t) = flags.threads {
        threads = t;
    }
    if flags.seed.is_some() {
        seed = flags.seed;
    }
    if flags.no_timing {
        timing = false;
    }

    let kinds = match trackers_spec {
        Some(s) => parse_trackers(&s)?,
        None => default_trackers.to_vec(),
    };
    let mut overrides: Vec<(Option<TrackerKind>, String, String)> = Vec::new();
    for s in &flags.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::arg(format!("--set expects key=value, got '{s}'")))?;
        let k = k.trim();
        match k.split_once('.') {
            Some((kind, key)) => overrides.push((Some(kind.parse()?), key.to_string(), v.to_string())),
            None => overrides.push((None, k.to_string(), v.to_string())),
        }
    }

    let mut trackers = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let mut cfg = TrackerConfig::for_kind(kind);
        for (k, v) in file.section("tracker") {
            cfg.set(k, v)?;
        }
        for section in file.sections() {
            if section.parse::<TrackerKind>().ok() == Some(kind) {
                for (k, v) in file.section(section) {
                    cfg.set(k, v)?;
                }
            }
        }
        for (target, k, v) in &overrides {
            if target.is_none() {
                cfg.set(k, v)?;
            }
        }
        for (target, k, v) in &overrides {
            if *target == Some(kind) {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        trackers.push((kind, cfg));
    }

    Ok(RunConfig {
        trackers,
        sequences,
        out,
        protocol,
        threads,
        seed,
        timing,
    })
}

/// Loads `builtin:<name>`, an OTB directory, or a synthetic spec file.
/// `seed` replaces the generator seed of synthetic sources when given.
pub fn load_sequence(source: &str, seed: Option<u64>) -> Result<Sequence> {
    if let Some(name) = source.strip_prefix(BUILTIN_PREFIX) {
        let spec = SyntheticSpec::builtin(name, seed.unwrap_or(1)).ok_or_else(|| {
            Error::arg(format!(
                "unknown built-in sequence '{name}'; available: {}",
                SyntheticSpec::BUILTINS.join(", ")
            ))
        })?;
        return render_synthetic(&spec);
    }
    let path = Path::new(source);
    if path.is_dir() {
        return load_otb_sequence(path);
    }
    if path.is_file() {
        let mut spec = SyntheticSpec::load(path)?;
        if let Some(s) = seed {
            spec.seed = s;
        }
        return render_synthetic(&spec);
    }
    Err(Error::ingest(path, "no such sequence directory or spec file"))
}
