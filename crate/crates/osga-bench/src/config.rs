//! Flat key=value experiment configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Unknown or
//! duplicated keys are rejected so that typos fail loudly instead of being
//! silently ignored. `family` and `seed` are mandatory. See the repository
//! README for the full key reference.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{BenchError, Result};
use crate::metrics::PsnrScale;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Tikhonov,
    Lasso,
    ElasticNet,
    TvDenoise,
    TvInpaint,
    TvDeblur,
    SpikeRecovery,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "tikhonov" => Family::Tikhonov,
            "lasso" => Family::Lasso,
            "elastic_net" => Family::ElasticNet,
            "tv_denoise" => Family::TvDenoise,
            "tv_inpaint" => Family::TvInpaint,
            "tv_deblur" => Family::TvDeblur,
            "spike_recovery" => Family::SpikeRecovery,
            other => return Err(BenchError::config(format!("unknown family '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Tikhonov => "tikhonov",
            Family::Lasso => "lasso",
            Family::ElasticNet => "elastic_net",
            Family::TvDenoise => "tv_denoise",
            Family::TvInpaint => "tv_inpaint",
            Family::TvDeblur => "tv_deblur",
            Family::SpikeRecovery => "spike_recovery",
        }
    }

    /// Matrix-domain families whose metrics include ISNR and PSNR.
    pub fn is_imaging(&self) -> bool {
        matches!(self, Family::TvDenoise | Family::TvInpaint | Family::TvDeblur)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    Dense,
    Sparse(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Signal-to-noise ratio in dB; noise power is measured from the clean
    /// signal.
    Snr(f64),
    /// I.i.d. Gaussian with this variance.
    Variance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaRule {
    /// Use the `lambda` key as given.
    Fixed,
    /// lambda = c * the max-norm of the adjoint applied to the observation.
    AdjointInf(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Osga,
    Nsdsg,
    Pga,
    Fista,
    Nes83,
}

impl SolverKind {
    pub fn parse(s: &str) -> Result<SolverKind> {
        Ok(match s {
            "osga" => SolverKind::Osga,
            "nsdsg" => SolverKind::Nsdsg,
            "pga" => SolverKind::Pga,
            "fista" => SolverKind::Fista,
            "nes83" => SolverKind::Nes83,
            other => return Err(BenchError::config(format!("unknown solver '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Osga => "osga",
            SolverKind::Nsdsg => "nsdsg",
            SolverKind::Pga => "pga",
            SolverKind::Fista => "fista",
            SolverKind::Nes83 => "nes83",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimingMode {
    /// Seconds derived from cumulative oracle operation counts, so traces are
    /// byte-reproducible across machines.
    Virtual,
    /// Real wall-clock seconds.
    Wall,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub density: Density,
    pub lambda: f64,
    pub lambda2: f64,
    pub lambda_rule: LambdaRule,
    pub noise: NoiseSpec,
    pub solvers: Vec<SolverKind>,
    pub max_iters: Option<usize>,
    pub max_seconds: Option<f64>,
    pub instances: usize,
    pub seed: u64,
    pub chit: usize,
    pub rho: f64,
    pub alpha0: Option<f64>,
    pub lip_scale: Option<f64>,
    pub spikes: usize,
    pub missing_fraction: f64,
    pub blur_half_width: usize,
    pub timing: TimingMode,
    pub out_dir: Option<PathBuf>,
    pub psnr_scale: PsnrScale,
    pub save_images: bool,
    pub ref_extension: usize,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut family = None;
    let mut seed = None;
    let mut m = None;
    let mut n = None;
    let mut rows = None;
    let mut cols = None;
    let mut density = Density::Dense;
    let mut lambda = None;
    let mut lambda2 = None;
    let mut lambda_rule = None;
    let mut noise = NoiseSpec::None;
    let mut solvers = None;
    let mut max_iters = None;
    let mut max_seconds = None;
    let mut instances = 1usize;
    let mut chit = 5usize;
    let mut rho = 0.5f64;
    let mut alpha0 = None;
    let mut lip_scale = None;
    let mut spikes = None;
    let mut missing_fraction = 0.4f64;
    let mut blur_half_width = 4usize;
    let mut timing = TimingMode::Virtual;
    let mut out_dir = None;
    let mut psnr_scale = PsnrScale::Unit;
    let mut save_images = false;
    let mut ref_extension = 10usize;

    let mut seen = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BenchError::config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(BenchError::config(format!("duplicate key '{key}'")));
        }
        match key {
            "family" => family = Some(Family::parse(value)?),
            "seed" => seed = Some(parse_num::<u64>(key, value)?),
            "m" => m = Some(parse_num::<usize>(key, value)?),
            "n" => n = Some(parse_num::<usize>(key, value)?),
            "rows" => rows = Some(parse_num::<usize>(key, value)?),
            "cols" => cols = Some(parse_num::<usize>(key, value)?),
            "density" => density = parse_density(value)?,
            "lambda" => lambda = Some(parse_num::<f64>(key, value)?),
            "lambda2" => lambda2 = Some(parse_num::<f64>(key, value)?),
            "lambda_rule" => lambda_rule = Some(parse_lambda_rule(value)?),
            "noise" => noise = parse_noise(value)?,
            "solvers" => solvers = Some(parse_solvers(value)?),
            "max_iters" => max_iters = Some(parse_num::<usize>(key, value)?),
            "max_seconds" => max_seconds = Some(parse_num::<f64>(key, value)?),
            "instances" => instances = parse_num::<usize>(key, value)?,
            "chit" => chit = parse_num::<usize>(key, value)?,
            "rho" => rho = parse_num::<f64>(key, value)?,
            "alpha0" => alpha0 = Some(parse_num::<f64>(key, value)?),
            "lip_scale" => lip_scale = Some(parse_num::<f64>(key, value)?),
            "spikes" => spikes = Some(parse_num::<usize>(key, value)?),
            "missing_fraction" => missing_fraction = parse_num::<f64>(key, value)?,
            "blur_half_width" => blur_half_width = parse_num::<usize>(key, value)?,
            "timing" => {
                timing = match value {
                    "virtual" => TimingMode::Virtual,
                    "wall" => TimingMode::Wall,
                    other => {
                        return Err(BenchError::config(format!("unknown timing mode '{other}'")))
                    }
                }
            }
            "out_dir" => out_dir = Some(PathBuf::from(value)),
            "psnr_scale" => {
                psnr_scale = match value {
                    "unit" => PsnrScale::Unit,
                    "byte" => PsnrScale::Byte,
                    other => {
                        return Err(BenchError::config(format!("unknown psnr scale '{other}'")))
                    }
                }
            }
            "save_images" => {
                save_images = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(BenchError::config(format!(
                            "save_images must be true or false, got '{other}'"
                        )))
                    }
                }
            }
            "ref_extension" => ref_extension = parse_num::<usize>(key, value)?,
            other => return Err(BenchError::config(format!("unknown key '{other}'"))),
        }
    }

    let family = family.ok_or_else(|| BenchError::config("missing mandatory key 'family'"))?;
    let seed = seed.ok_or_else(|| BenchError::config("missing mandatory key 'seed'"))?;
    let solvers =
        solvers.ok_or_else(|| BenchError::config("missing mandatory key 'solvers'"))?;

    let lambda_rule = lambda_rule.unwrap_or(match family {
        Family::SpikeRecovery => LambdaRule::AdjointInf(0.1),
        _ => LambdaRule::Fixed,
    });

    let config = ExperimentConfig {
        family,
        m: m.unwrap_or(0),
        n: n.unwrap_or(0),
        rows: rows.unwrap_or(0),
        cols: cols.unwrap_or(0),
        density,
        lambda: lambda.unwrap_or(0.0),
        lambda2: lambda2.unwrap_or(0.0),
        lambda_rule,
        noise,
        solvers,
        max_iters,
        max_seconds,
        instances,
        seed,
        chit,
        rho,
        alpha0,
        lip_scale,
        spikes: spikes.unwrap_or(0),
        missing_fraction,
        blur_half_width,
        timing,
        out_dir,
        psnr_scale,
        save_images,
        ref_extension,
    };
    validate(&config, lambda.is_some())?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_config(&text)
}

fn validate(c: &ExperimentConfig, lambda_given: bool) -> Result<()> {
    if c.solvers.is_empty() {
        return Err(BenchError::config("solver list is empty"));
    }
    let mut names = HashSet::new();
    for s in &c.solvers {
        if !names.insert(*s) {
            return Err(BenchError::config(format!("solver '{}' listed twice", s.name())));
        }
    }
    if c.max_iters.is_none() && c.max_seconds.is_none() {
        return Err(BenchError::config("need max_iters or max_seconds"));
    }
    if c.instances == 0 {
        return Err(BenchError::config("instances must be at least 1"));
    }
    if c.ref_extension == 0 {
        return Err(BenchError::config("ref_extension must be at least 1"));
    }
    if !(c.rho > 0.0 && c.rho < 1.0) {
        return Err(BenchError::config("rho must lie in (0,1)"));
    }
    if c.chit == 0 {
        return Err(BenchError::config("chit must be at least 1"));
    }
    if let Density::Sparse(p) = c.density {
        if !(p > 0.0 && p <= 1.0) {
            return Err(BenchError::config("sparse density must lie in (0,1]"));
        }
    }
    if !(c.lambda >= 0.0 && c.lambda.is_finite()) {
        return Err(BenchError::config("lambda must be finite and >= 0"));
    }
    if !(c.lambda2 >= 0.0 && c.lambda2.is_finite()) {
        return Err(BenchError::config("lambda2 must be finite and >= 0"));
    }
    match c.noise {
        NoiseSpec::Variance(v) if !(v >= 0.0 && v.is_finite()) => {
            return Err(BenchError::config("noise variance must be finite and >= 0"));
        }
        NoiseSpec::Snr(db) if !db.is_finite() => {
            return Err(BenchError::config("noise snr must be finite"));
        }
        _ => {}
    }

    if c.family.is_imaging() {
        if c.rows < 2 || c.cols < 2 {
            return Err(BenchError::config("imaging families need rows and cols >= 2"));
        }
        if !lambda_given {
            return Err(BenchError::config("imaging families need lambda"));
        }
        if c.family == Family::TvInpaint && !(c.missing_fraction >= 0.0 && c.missing_fraction < 1.0)
        {
            return Err(BenchError::config("missing_fraction must lie in [0,1)"));
        }
        if c.family == Family::TvDeblur && c.blur_half_width == 0 {
            return Err(BenchError::config("blur_half_width must be at least 1"));
        }
    } else {
        if c.m == 0 || c.n == 0 {
            return Err(BenchError::config("this family needs m and n >= 1"));
        }
        match c.family {
            Family::SpikeRecovery => {
                if c.m > c.n {
                    return Err(BenchError::config("spike recovery needs m <= n"));
                }
                if c.spikes > c.n {
                    return Err(BenchError::config("spikes cannot exceed n"));
                }
                if matches!(c.lambda_rule, LambdaRule::Fixed) && !lambda_given {
                    return Err(BenchError::config(
                        "spike recovery with lambda_rule = fixed needs lambda",
                    ));
                }
            }
            Family::ElasticNet => {
                if !lambda_given {
                    return Err(BenchError::config("elastic_net needs lambda"));
                }
            }
            _ => {
                if !lambda_given {
                    return Err(BenchError::config(format!(
                        "{} needs lambda",
                        c.family.name()
                    )));
                }
            }
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| BenchError::config(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_density(value: &str) -> Result<Density> {
    if value == "dense" {
        return Ok(Density::Dense);
    }
    if let Some(p) = value.strip_prefix("sparse:") {
        return Ok(Density::Sparse(parse_num::<f64>("density", p)?));
    }
    if value == "sparse" {
        return Ok(Density::Sparse(0.05));
    }
    Err(BenchError::config(format!(
        "density must be 'dense', 'sparse' or 'sparse:<p>', got '{value}'"
    )))
}

fn parse_noise(value: &str) -> Result<NoiseSpec> {
    if value == "none" {
        return Ok(NoiseSpec::None);
    }
    if let Some(db) = value.strip_prefix("snr:") {
        return Ok(NoiseSpec::Snr(parse_num::<f64>("noise", db)?));
    }
    if let Some(var) = value.strip_prefix("var:") {
        return Ok(NoiseSpec::Variance(parse_num::<f64>("noise", var)?));
    }
    Err(BenchError::config(format!(
        "noise must be 'none', 'snr:<dB>' or 'var:<sigma^2>', got '{value}'"
    )))
}

fn parse_lambda_rule(value: &str) -> Result<LambdaRule> {
    if value == "fixed" {
        return Ok(LambdaRule::Fixed);
    }
    if let Some(c) = value.strip_prefix("adjinf:") {
        return Ok(LambdaRule::AdjointInf(parse_num::<f64>("lambda_rule", c)?));
    }
    Err(BenchError::config(format!(
        "lambda_rule must be 'fixed' or 'adjinf:<c>', got '{value}'"
    )))
}

fn parse_solvers(value: &str) -> Result<Vec<SolverKind>> {
    value.split(',').map(|s| SolverKind::parse(s.trim())).collect()
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub max_seconds: Option<f64>,
    pub solvers: Option<String>,
}

pub fn apply_overrides(config: &mut ExperimentConfig, ov: &Overrides) -> Result<()> {
    if let Some(seed) = ov.seed {
        config.seed = seed;
    }
    if let Some(dir) = &ov.out_dir {
        config.out_dir = Some(dir.clone());
    }
    if let Some(iters) = ov.max_iters {
        config.max_iters = Some(iters);
    }
    if let Some(secs) = ov.max_seconds {
        config.max_seconds = Some(secs);
    }
    if let Some(list) = &ov.solvers {
        config.solvers = parse_solvers(list)?;
        if config.solvers.is_empty() {
            return Err(BenchError::config("solver list is empty"));
        }
    }
    Ok(())
}
