//! Run configuration: key=value files merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use abspec_core::geometry::{default_grading, make_disk_domain, Domain, Point};
use abspec_core::{Error, Result};
use clap::Args;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Disk { radius: f64, n_boundary: usize },
    Polygon(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub domain: DomainSpec,
    pub n0: usize,
    /// Angle of the sweep direction p.
    pub direction: f64,
    pub a_list: Vec<f64>,
    pub pole: Point,
    pub count: usize,
    pub h_max: f64,
    pub grading: f64,
    pub k_scale: f64,
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Truncation radius of the limit profile; 0 skips the profile.
    pub profile_s: f64,
    /// Profile element size relative to S.
    pub profile_h: f64,
    /// Profile mode; defaults to the integer nearest alpha.
    pub mode_k: Option<i32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.3,
            domain: DomainSpec::Disk { radius: 1.0, n_boundary: 128 },
            n0: 1,
            direction: 0.0,
            a_list: vec![0.1, 0.07, 0.05, 0.035, 0.025],
            pole: [0.0, 0.0],
            count: 3,
            h_max: 0.05,
            grading: default_grading(0.3),
            k_scale: 4.0,
            tol: 1e-8,
            seed: 0x5eed,
            out: PathBuf::from("out"),
            profile_s: 16.0,
            profile_h: 0.05,
            mode_k: None,
        }
    }
}

/// Flags shared by the configurable subcommands. Every flag overrides the
/// matching key of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `disk` or `polygon`.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub n_boundary: Option<usize>,
    /// File with one `x y` vertex per line.
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    #[arg(long)]
    pub n0: Option<usize>,
    /// Angle of the direction p in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long)]
    pub a_list: Option<String>,
    /// `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub pole: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub grading: Option<f64>,
    #[arg(long)]
    pub k_scale: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub profile_s: Option<f64>,
    #[arg(long)]
    pub profile_h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mode_k: Option<i32>,
}

fn bad(key: &str, v: &str) -> Error {
    Error::InvalidInput(format!("cannot parse {key} = {v:?}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| bad(key, v))
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

pub fn parse_point(key: &str, v: &str) -> Result<Point> {
    let xs = parse_list(key, v)?;
    match xs.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(bad(key, v)),
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or(Error::Parse { line: i + 1, msg: "expected key = value".into() })?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<RunConfig> {
        let mut map = match &args.config {
            Some(p) => parse_file(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        set("alpha", args.alpha.map(|v| v.to_string()));
        set("domain", args.domain.clone());
        set("radius", args.radius.map(|v| v.to_string()));
        set("n_boundary", args.n_boundary.map(|v| v.to_string()));
        set("polygon", args.polygon.as_ref().map(|p| p.display().to_string()));
        set("n0", args.n0.map(|v| v.to_string()));
        set("direction", args.direction.map(|v| v.to_string()));
        set("a_list", args.a_list.clone());
        set("pole", args.pole.clone());
        set("count", args.count.map(|v| v.to_string()));
        set("h_max", args.h_max.map(|v| v.to_string()));
        set("grading", args.grading.map(|v| v.to_string()));
        set("k_scale", args.k_scale.map(|v| v.to_string()));
        set("tol", args.tol.map(|v| v.to_string()));
        set("seed", args.seed.map(|v| v.to_string()));
        set("out", args.out.as_ref().map(|p| p.display().to_string()));
        set("profile_s", args.profile_s.map(|v| v.to_string()));
        set("profile_h", args.profile_h.map(|v| v.to_string()));
        set("mode_k", args.mode_k.map(|v| v.to_string()));
        RunConfig::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        let mut grading = None;
        let (mut radius, mut n_boundary, mut polygon, mut kind) = (1.0, 128, None, "disk".to_string());
        for (k, v) in map {
            match k.as_str() {
                "alpha" => c.alpha = num(k, v)?,
                "domain" => kind = v.clone(),
                "radius" => radius = num(k, v)?,
                "n_boundary" => n_boundary = num(k, v)?,
                "polygon" => polygon = Some(PathBuf::from(v)),
                "n0" => c.n0 = num(k, v)?,
                "direction" => c.direction = num(k, v)?,
                "a_list" => c.a_list = parse_list(k, v)?,
                "pole" => c.pole = parse_point(k, v)?,
                "count" => c.count = num(k, v)?,
                "h_max" => c.h_max = num(k, v)?,
                "grading" => grading = Some(num(k, v)?),
                "k_scale" => c.k_scale = num(k, v)?,
                "tol" => c.tol = num(k, v)?,
                "seed" => c.seed = num(k, v)?,
                "out" => c.out = PathBuf::from(v),
                "profile_s" => c.profile_s = num(k, v)?,
                "profile_h" => c.profile_h = num(k, v)?,
                "mode_k" => c.mode_k = Some(num(k, v)?),
                _ => return Err(Error::InvalidInput(format!("unknown configuration key {k:?}"))),
            }
        }
        c.grading = grading.unwrap_or_else(|| default_grading(c.alpha));
        c.domain = match kind.as_str() {
            "disk" => DomainSpec::Disk { radius, n_boundary },
            "polygon" => DomainSpec::Polygon(
                polygon.ok_or_else(|| Error::InvalidInput("domain = polygon needs a polygon file".into()))?,
            ),
            other => return Err(Error::InvalidInput(format!("unknown domain kind {other:?}"))),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        abspec_core::gauge::check_alpha(self.alpha)?;
        if self.n0 == 0 {
            return Err(Error::InvalidInput("n0 is 1-based".into()));
        }
        if self.a_list.iter().any(|a| !(*a > 0.0)) || self.a_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("a_list must be positive and strictly decreasing".into()));
        }
        if !(self.h_max > 0.0) || !(self.tol > 0.0) || !(self.k_scale > 0.0) || !(self.profile_h > 0.0) {
            return Err(Error::InvalidInput("h_max, tol, k_scale and profile_h must be positive".into()));
        }
        if self.profile_s != 0.0 && !(self.profile_s >= 8.0) {
            return Err(Error::InvalidInput("profile_s must be 0 or at least 8".into()));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Domain> {
        match &self.domain {
            DomainSpec::Disk { radius, n_boundary } => make_disk_domain(*radius, *n_boundary),
            DomainSpec::Polygon(p) => Domain::from_polygon(read_polygon(p)?),
        }
    }

    pub fn is_disk(&self) -> Option<f64> {
        match self.domain {
            DomainSpec::Disk { radius, .. } => Some(radius),
            DomainSpec::Polygon(_) => None,
        }
    }

    /// Mode of the profile and of the oracle comparisons.
    pub fn mode(&self) -> i32 {
        self.mode_k.unwrap_or(if self.alpha < 0.5 { 0 } else { 1 })
    }
}

pub fn read_polygon(path: &Path) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path)?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let xs: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if xs.len() != 2 {
            return Err(Error::Parse { line: i + 1, msg: "expected two coordinates".into() });
        }
        let p = [
            xs[0].parse().map_err(|_| Error::Parse { line: i + 1, msg: "bad number".into() })?,
            xs[1].parse().map_err(|_| Error::Parse { line: i + 1, msg: "bad number".into() })?,
        ];
        pts.push(p);
    }
    Ok(pts)
}
