use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use jumpheat::maximal::Domain;
use jumpheat::registry;
use jumpheat::spectral::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    CheckSymbol,
    Kernel,
    Solve,
    Estimate,
    McCompare,
    VerifyCf,
    Maximal,
    Hormander,
}

impl Kind {
    pub fn stochastic(self) -> bool {
        matches!(self, Kind::Estimate | Kind::McCompare | Kind::VerifyCf | Kind::Maximal | Kind::Hormander)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::CheckSymbol => "check-symbol",
            Kind::Kernel => "kernel",
            Kind::Solve => "solve",
            Kind::Estimate => "estimate",
            Kind::McCompare => "mc-compare",
            Kind::VerifyCf => "verify-cf",
            Kind::Maximal => "maximal",
            Kind::Hormander => "hormander",
        }
    }
}

/// Numeric rows given inline or as a path to a whitespace/comma separated file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rows {
    Inline(Vec<Vec<f64>>),
    File(PathBuf),
}

/// One experiment. Which fields are needed depends on `kind`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub symbol: Option<String>,
    pub process: Option<String>,
    pub phi: Option<String>,
    pub dim: Option<usize>,
    /// `"d,L,M"`
    pub grid: Option<String>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub which: Option<String>,
    /// `builtin:bump`, `builtin:random:<seed>` or the base path of a stored field.
    pub source: Option<String>,
    pub steps: Option<usize>,
    #[serde(alias = "T")]
    pub t_end: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub ladder: Option<Vec<usize>>,
    pub sources: Option<usize>,
    pub paths: Option<usize>,
    pub points: Option<Rows>,
    pub pairs: Option<Rows>,
    pub xis: Option<Rows>,
    pub n: Option<usize>,
    pub levels: Option<[i32; 2]>,
    /// `random:<count>:<seed>`
    pub fields: Option<String>,
    #[serde(alias = "U")]
    pub domain: Option<Domain>,
    pub count: Option<usize>,
    pub half_extent: Option<f64>,
    pub max_points: Option<usize>,
    pub tail_tolerance: Option<f64>,
    /// Whether a failed verification sets a nonzero exit status; default true.
    pub required: Option<bool>,
}

/// A schema violation, reported with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError {
    pub path: String,
    pub message: String,
}

impl UsageError {
    pub fn new(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for UsageError {}

type Usage<T> = Result<T, UsageError>;

pub fn parse_json(text: &str) -> Usage<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(UsageError::new("", "empty configuration"));
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        UsageError::new(if path == "." { "" } else { &path }, e.into_inner().to_string())
    })
}

pub fn parse_grid(text: &str) -> Usage<GridSpec> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || UsageError::new("grid", format!("expected d,L,M, got '{text}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let d: usize = parts[0].parse().map_err(|_| bad())?;
    let l: f64 = parts[1].parse().map_err(|_| bad())?;
    let m: usize = parts[2].parse().map_err(|_| bad())?;
    if !m.is_power_of_two() {
        return Err(UsageError::new("grid", format!("M = {m} is not a power of two")));
    }
    GridSpec::new(d, l, m).map_err(|e| UsageError::new("grid", e.to_string()))
}

/// `random:<count>:<seed>`
pub fn parse_fields(text: &str) -> Usage<(usize, u64)> {
    let bad = || UsageError::new("fields", format!("expected random:<count>:<seed>, got '{text}'"));
    let mut it = text.split(':');
    if it.next() != Some("random") {
        return Err(bad());
    }
    let count = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let seed = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() || count == 0 {
        return Err(bad());
    }
    Ok((count, seed))
}

pub fn parse_list<T: std::str::FromStr>(field: &str, text: &str) -> Usage<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| UsageError::new(field, format!("cannot parse '{s}'"))))
        .collect()
}

fn need<'a, T>(v: &'a Option<T>, field: &str, kind: Kind) -> Usage<&'a T> {
    v.as_ref().ok_or_else(|| UsageError::new(field, format!("required for {}", kind.name())))
}

fn check_symbol_id(field: &str, id: &str) -> Usage<()> {
    if registry::SYMBOL_IDS.contains(&id) {
        Ok(())
    } else {
        Err(UsageError::new(field, format!("unknown id '{id}'; known: {}", registry::SYMBOL_IDS.join(", "))))
    }
}

fn check_phi_id(id: &str) -> Usage<()> {
    if registry::PHI_IDS.contains(&id) {
        Ok(())
    } else {
        Err(UsageError::new("phi", format!("unknown id '{id}'; known: {}", registry::PHI_IDS.join(", "))))
    }
}

fn positive(field: &str, v: Option<f64>) -> Usage<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(UsageError::new(field, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    /// Checks required fields and ids for the configured kind.
    pub fn validate(&self) -> Usage<Kind> {
        let kind = self.kind.ok_or_else(|| UsageError::new("kind", "missing experiment kind"))?;
        if kind.stochastic() && self.seed.is_none() && self.fields.is_none() {
            return Err(UsageError::new("seed", format!("required for {}", kind.name())));
        }
        if let Some(d) = self.dim {
            if !(1..=3).contains(&d) {
                return Err(UsageError::new("dim", format!("must be 1, 2 or 3, got {d}")));
            }
        }
        if let Some(g) = &self.grid {
            parse_grid(g)?;
        }
        if let Some(id) = &self.phi {
            check_phi_id(id)?;
        }
        for (f, v) in [("t_end", self.t_end), ("half_extent", self.half_extent), ("tail_tolerance", self.tail_tolerance)] {
            positive(f, v)?;
        }
        if let Some(ps) = &self.p {
            if ps.is_empty() || ps.iter().any(|p| !(*p > 1.0 && p.is_finite())) {
                return Err(UsageError::new("p", "exponents must be finite and greater than 1"));
            }
        }
        if let Some(l) = &self.ladder {
            if l.is_empty() || l.iter().any(|m| !m.is_power_of_two() || *m < 8) {
                return Err(UsageError::new("ladder", "resolutions must be powers of two, at least 8"));
            }
        }
        match kind {
            Kind::CheckSymbol | Kind::Kernel | Kind::Solve | Kind::Estimate | Kind::Hormander => {
                check_symbol_id("symbol", need(&self.symbol, "symbol", kind)?)?;
            }
            Kind::McCompare | Kind::VerifyCf => {
                check_symbol_id("symbol", need(&self.symbol, "symbol", kind)?)?;
                check_symbol_id("process", need(&self.process, "process", kind)?)?;
            }
            Kind::Maximal => {
                check_phi_id(need(&self.phi, "phi", kind)?)?;
            }
        }
        match kind {
            Kind::Kernel => {
                need(&self.grid, "grid", kind)?;
                let (s, t) = (*need(&self.s, "s", kind)?, *need(&self.t, "t", kind)?);
                if !(s >= 0.0 && t > s) {
                    return Err(UsageError::new("t", format!("need 0 <= s < t, got s = {s}, t = {t}")));
                }
                parse_which(need(&self.which, "which", kind)?)?;
            }
            Kind::Solve => {
                need(&self.source, "source", kind)?;
                need(&self.out, "out", kind)?;
                if !is_stored(self.source.as_deref().unwrap()) {
                    need(&self.grid, "grid", kind)?;
                    need(&self.steps, "steps", kind)?;
                    need(&self.t_end, "t_end", kind)?;
                }
            }
            Kind::McCompare => {
                need(&self.paths, "paths", kind)?;
                need(&self.t_end, "t_end", kind)?;
                need(&self.points, "points", kind)?;
            }
            Kind::VerifyCf => {
                need(&self.pairs, "pairs", kind)?;
                let n = *need(&self.n, "n", kind)?;
                if n < 10_000 {
                    return Err(UsageError::new("n", format!("at least 10000 samples needed, got {n}")));
                }
            }
            Kind::Maximal => {
                let [lo, hi] = *need(&self.levels, "levels", kind)?;
                if lo > 0 || hi < 0 {
                    return Err(UsageError::new("levels", "range must contain level 0"));
                }
                if let Some(f) = &self.fields {
                    parse_fields(f)?;
                }
            }
            _ => {}
        }
        if let Some(src) = &self.source {
            parse_source(src)?;
        }
        Ok(kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Bump,
    Random(u64),
    Stored(PathBuf),
}

fn is_stored(src: &str) -> bool {
    !src.starts_with("builtin:")
}

pub fn parse_source(src: &str) -> Usage<Source> {
    match src.strip_prefix("builtin:") {
        None => Ok(Source::Stored(PathBuf::from(src))),
        Some("bump") => Ok(Source::Bump),
        Some(rest) => rest
            .strip_prefix("random:")
            .and_then(|s| s.parse().ok())
            .map(Source::Random)
            .ok_or_else(|| UsageError::new("source", format!("unknown builtin source '{src}'"))),
    }
}

pub fn parse_which(w: &str) -> Usage<jumpheat::kernels::KernelKind> {
    use jumpheat::kernels::KernelKind;
    match w {
        "p" => Ok(KernelKind::P),
        "psidp" => Ok(KernelKind::PsiDeltaP),
        "q1" => Ok(KernelKind::Q1),
        "q2" => Ok(KernelKind::Q2(0)),
        "q3" => Ok(KernelKind::Q3),
        _ => w
            .strip_prefix("q2_")
            .and_then(|l| l.parse::<usize>().ok())
            .filter(|l| *l >= 1)
            .map(|l| KernelKind::Q2(l - 1))
            .ok_or_else(|| UsageError::new("which", format!("expected p, psidp, q1, q2, q2_<axis> or q3, got '{w}'"))),
    }
}
