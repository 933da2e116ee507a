//! Reproducible batch runs: configuration, on-disk artifacts, verification
//! suites and the small ad-hoc queries behind the command line tool.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::augment::{AugmentError, AugmentMode, AugmentOptions, AugmentedBuild, DensePolicy, DualV, SpanVector};
use crate::bd::{BDStageSet, BdError};
use crate::cdecomp::{optimal_c_decomposition, verify_norming_set_d, BlockNorm, CDecomposition, CoordL1, CoordLinf, CoordTsirelson};
use crate::family::RegularFamily;
use crate::rat::Rat;
use crate::seed::{BlockTemplate, EpsRule, OuterNorm, SeedError, SeedSpace};
use crate::theorem_a::{m_sequence, TheoremABuild, TheoremAError, TheoremAOptions};
use crate::tsirelson::TsirelsonSpec;
use crate::vector::{FinVec, IndexId, Universe};
use crate::verdict::{Check, Report, Verdict};

pub const CONFIG_SCHEMA: &str = "bdspace/build-config/v1";
pub const MANIFEST_SCHEMA: &str = "bdspace/build-manifest/v1";
pub const STAGE_SCHEMA: &str = "bdspace/stage/v1";
pub const REPORT_SCHEMA: &str = "bdspace/report/v1";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: line {line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("corrupt artifact {0}: {1}")]
    Corrupt(String, String),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    TheoremA(#[from] TheoremAError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Bd(#[from] BdError),
    #[error("cannot parse {0:?}: {1}")]
    Parse(String, String),
    #[error("{0}")]
    Usage(String),
}

/// Where the seed space comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSource {
    /// `three-block`, `scalar-c0` or `scalar-l1`.
    Preset(String),
    /// A seed JSON file, relative to the configuration file.
    File { path: String },
    Tsirelson { tsirelson: TsirelsonSeed },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsirelsonSeed {
    pub family: String,
    pub c: Rat,
}

/// The space `V` and the options of an augmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    pub family: String,
    pub c: Rat,
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// `V` indices carrying `D^V`; all built stages when absent.
    #[serde(default)]
    pub support: Option<Vec<u32>>,
    #[serde(default = "default_v_cap")]
    pub cap: usize,
    #[serde(default)]
    pub interleaved: bool,
    #[serde(default = "default_mode")]
    pub mode: AugmentMode,
    #[serde(default = "default_dense")]
    pub dense: DensePolicy,
    #[serde(default = "default_theta_cap")]
    pub theta_cap: usize,
    /// Use `φ(e_{b,l})` of the built blocks as the spanning set of `ψ(X)`.
    #[serde(default = "default_true")]
    pub spanning: bool,
}

fn default_depth() -> u32 {
    2
}
fn default_v_cap() -> usize {
    100_000
}
fn default_mode() -> AugmentMode {
    AugmentMode::General
}
fn default_dense() -> DensePolicy {
    DensePolicy::TopUnits { per_stage: 3 }
}
fn default_theta_cap() -> usize {
    256
}
fn default_true() -> bool {
    true
}
fn default_lookahead() -> u32 {
    1
}
fn default_d_cap() -> usize {
    2_000_000
}
fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub schema: String,
    pub seed: SeedSource,
    /// Overrides of the seed parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Rat>,
    /// `ε_i = first · ratio^{i-1}`; the nets `R_i` have spacing at most `ε_i/8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rule: Option<EpsRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Rat>>,
    pub stage_bound: u32,
    #[serde(default = "default_lookahead")]
    pub lookahead: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cap: Option<usize>,
    #[serde(default = "default_d_cap")]
    pub d_cap: usize,
    /// Weight bound for the constants check; `2c` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentConfig>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub sample_seed: u64,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> usize {
    let pat = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&pat)).map_or(1, |i| i + 1)
}

impl BuildConfig {
    pub fn new(seed: SeedSource, stage_bound: u32) -> BuildConfig {
        BuildConfig {
            schema: CONFIG_SCHEMA.to_string(),
            seed,
            c: None,
            eps: None,
            eps_rule: None,
            generators: None,
            stage_bound,
            lookahead: default_lookahead(),
            rank_cap: None,
            d_cap: default_d_cap(),
            theta: None,
            augment: None,
            samples: default_samples(),
            sample_seed: 0,
        }
    }

    pub fn load(path: &Path) -> Result<(BuildConfig, SeedSpace), PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Io(path.display().to_string(), e))?;
        BuildConfig::parse(&text, path)
    }

    /// Parses and validates; errors carry the line of the offending field.
    pub fn parse(text: &str, path: &Path) -> Result<(BuildConfig, SeedSpace), PipelineError> {
        let name = path.display().to_string();
        let err = |line: usize, message: String| PipelineError::Config { path: name.clone(), line, message };
        let cfg: BuildConfig = serde_json::from_str(text).map_err(|e| err(e.line(), e.to_string()))?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(err(line_of(text, "schema"), format!("schema tag {:?} is not {CONFIG_SCHEMA}", cfg.schema)));
        }
        if cfg.stage_bound == 0 {
            return Err(err(line_of(text, "stage_bound"), "stage_bound must be at least 1".into()));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let seed = cfg.seed_space(base).map_err(|e| {
            let key = match &e {
                PipelineError::Seed(SeedError::Parameter(m)) if m.contains("ε_i") || m.contains("Σ ε_i") || m.contains("tail") => "eps_rule",
                PipelineError::Seed(SeedError::Parameter(m)) if m.starts_with("ε") => "eps",
                PipelineError::Seed(SeedError::Parameter(m)) if m.starts_with("c ") => "c",
                PipelineError::Seed(SeedError::Parameter(m)) if m.contains("generator") => "generators",
                _ => "seed",
            };
            let key = if text.contains(&format!("\"{key}\"")) { key } else { "seed" };
            err(line_of(text, key), e.to_string())
        })?;
        if let Some(a) = &cfg.augment {
            let line = line_of(text, "augment");
            a.family.parse::<RegularFamily>().map_err(|e| err(line, e.to_string()))?;
            if !(a.c.is_positive() && a.c < Rat::one()) {
                return Err(err(line, format!("augmentation constant c = {} must lie in (0, 1)", a.c)));
            }
        }
        Ok((cfg, seed))
    }

    /// The seed space with the overrides applied, validated.
    pub fn seed_space(&self, base_dir: &Path) -> Result<SeedSpace, PipelineError> {
        let mut s = match &self.seed {
            SeedSource::Preset(p) => preset(p)?,
            SeedSource::File { path } => {
                let p = base_dir.join(path);
                let text = fs::read_to_string(&p).map_err(|e| PipelineError::Io(p.display().to_string(), e))?;
                SeedSpace::from_json(&text)?
            }
            SeedSource::Tsirelson { tsirelson } => {
                let fam: RegularFamily = tsirelson.family.parse().map_err(|e: crate::family::FamilyError| PipelineError::Parse(tsirelson.family.clone(), e.to_string()))?;
                let spec = TsirelsonSpec::new(fam, tsirelson.c.clone()).map_err(|e| PipelineError::Parse(tsirelson.c.to_string(), e.to_string()))?;
                SeedSpace::tsirelson(spec)
            }
        };
        if let Some(c) = &self.c {
            s.c = c.clone();
        }
        if let Some(e) = &self.eps {
            s.eps = e.clone();
        }
        if let Some(r) = &self.eps_rule {
            s.eps_rule = r.clone();
        }
        if let Some(g) = &self.generators {
            s.generators = g.clone();
        }
        s.validate()?;
        Ok(s)
    }

    pub fn theta(&self, seed: &SeedSpace) -> Rat {
        self.theta.clone().unwrap_or_else(|| &seed.c * Rat::int(2))
    }

    pub fn theorem_a_options(&self) -> TheoremAOptions {
        TheoremAOptions { stage_bound: self.stage_bound, lookahead: self.lookahead, rank_cap: self.rank_cap, d_cap: self.d_cap }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Named seed spaces.
pub fn preset(name: &str) -> Result<SeedSpace, PipelineError> {
    match name {
        "three-block" => Ok(SeedSpace::three_block()),
        "scalar-c0" => Ok(SeedSpace::scalar_c0()),
        "scalar-l1" => {
            let mut s = SeedSpace::blocks(vec![BlockTemplate::scalar()], OuterNorm::Sum);
            s.generators = vec![Rat::one()];
            Ok(s)
        }
        other => Err(PipelineError::Usage(format!("unknown seed preset {other:?} (three-block, scalar-c0, scalar-l1)"))),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(dir: &Path, rel: &str, text: &str, hashes: &mut BTreeMap<String, String>) -> Result<(), PipelineError> {
    let p = dir.join(rel);
    if let Some(parent) = p.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::Io(parent.display().to_string(), e))?;
    }
    fs::write(&p, text).map_err(|e| PipelineError::Io(p.display().to_string(), e))?;
    hashes.insert(rel.to_string(), sha256_hex(text.as_bytes()));
    Ok(())
}

fn read(dir: &Path, rel: &str) -> Result<String, PipelineError> {
    let p = dir.join(rel);
    fs::read_to_string(&p).map_err(|e| PipelineError::Io(p.display().to_string(), e))
}

/// The elements of `Δ_n` with their `c*`.
pub fn stage_json(bd: &BDStageSet, n: u32) -> String {
    let ids: Vec<IndexId> = bd.delta(n).collect();
    let v = json!({
        "schema": STAGE_SCHEMA,
        "stage": n,
        "elements": ids.iter().map(|&g| bd.element(g)).collect::<Vec<_>>(),
        "cstar": ids.iter().map(|&g| bd.cstar(g)).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&v).expect("stage serializes")
}

/// Summary written next to the artifacts of a build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub config_sha256: String,
    pub stage_bound: u32,
    pub block_bound: u32,
    pub elements: usize,
    pub stage_sizes: Vec<usize>,
    pub norming_set_size: usize,
    pub pruned: bool,
    pub prune_log: Vec<String>,
    pub files: BTreeMap<String, String>,
}

/// Runs the Theorem-A builder and writes config, seed, norming set, coding,
/// the stage set and one dump per stage, then the manifest.
pub fn run_build(config: &BuildConfig, seed: &SeedSpace, out: &Path) -> Result<Manifest, PipelineError> {
    let build = TheoremABuild::from_seed(seed, config.theorem_a_options())?;
    let mut files = BTreeMap::new();
    let cfg = config.to_json();
    write(out, "config.json", &cfg, &mut files)?;
    write(out, "seed.json", &seed.to_json(), &mut files)?;
    write(out, "norming-set.json", &build.d.to_json(), &mut files)?;
    write(out, "coding.json", &serde_json::to_string_pretty(&build.coding_json()).unwrap(), &mut files)?;
    write(out, "bd.json", &build.bd.to_json(), &mut files)?;
    for n in 1..=build.bd.stage_bound() {
        write(out, &format!("stages/stage-{n:03}.json"), &stage_json(&build.bd, n), &mut files)?;
    }
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        config_sha256: sha256_hex(cfg.as_bytes()),
        stage_bound: config.stage_bound,
        block_bound: build.block_bound,
        elements: build.bd.len(),
        stage_sizes: build.stage_sizes(),
        norming_set_size: build.d.len(),
        pruned: build.pruned,
        prune_log: build.prune_log.clone(),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).unwrap();
    fs::write(out.join("manifest.json"), text).map_err(|e| PipelineError::Io(out.display().to_string(), e))?;
    Ok(manifest)
}

/// Configuration and seed stored in a build directory.
pub fn load_build_dir(dir: &Path) -> Result<(BuildConfig, SeedSpace), PipelineError> {
    let cfg = read(dir, "config.json")?;
    let (config, _) = BuildConfig::parse(&cfg, &dir.join("config.json"))?;
    let seed = SeedSpace::from_json(&read(dir, "seed.json")?)?;
    Ok((config, seed))
}

/// The `φ(e_{b,l})` of every built block, with stage `m_b`.
pub fn spanning_set(build: &TheoremABuild) -> Vec<SpanVector> {
    let u = build.seed.universe();
    let mut out = Vec::new();
    for b in 1..=build.block_bound {
        for l in 0..build.seed.dim(b) {
            let x = FinVec::unit(&u, SeedSpace::coord(b, l));
            if let Ok(v) = build.embed_phi(&x) {
                out.push(SpanVector { stage: Some(m_sequence(b)), vector: v });
            }
        }
    }
    out
}

/// Builds the augmentation described by `aug` on top of a Theorem-A build.
pub fn augment_build(build: &TheoremABuild, aug: &AugmentConfig) -> Result<AugmentedBuild, PipelineError> {
    let fam: RegularFamily = aug.family.parse().map_err(|e: crate::family::FamilyError| PipelineError::Parse(aug.family.clone(), e.to_string()))?;
    let spec = TsirelsonSpec::new(fam, aug.c.clone()).map_err(|e| PipelineError::Parse(aug.c.to_string(), e.to_string()))?;
    let bound = build.bd.stage_bound();
    let support: Vec<u32> = match &aug.support {
        Some(s) => s.clone(),
        None if aug.interleaved => (1..=bound).take_while(|&j| m_sequence(j) <= bound).collect(),
        None => (1..=bound).collect(),
    };
    let dv = DualV::build(&spec, aug.depth, &support, aug.cap, aug.interleaved)?;
    let spanning = if aug.spanning { spanning_set(build) } else { Vec::new() };
    let options = AugmentOptions {
        mode: aug.mode,
        dense: aug.dense.clone(),
        theta_cap: aug.theta_cap,
        eps: build.seed.eps.clone(),
        eps_rule: build.seed.eps_rule.clone(),
    };
    let mut a = AugmentedBuild::new(&build.bd, dv, spanning, options)?;
    a.build_all()?;
    Ok(a)
}

/// Rebuilds from the stored configuration and writes `augment/merged.json` and `augment/manifest.json`.
pub fn run_augment(dir: &Path) -> Result<(AugmentedBuild, serde_json::Value), PipelineError> {
    let (config, seed) = load_build_dir(dir)?;
    let aug_cfg = config.augment.clone().ok_or_else(|| PipelineError::Usage("the configuration has no \"augment\" section".into()))?;
    let build = TheoremABuild::from_seed(&seed, config.theorem_a_options())?;
    let a = augment_build(&build, &aug_cfg)?;
    let mut files = BTreeMap::new();
    write(dir, "augment/merged.json", &a.merged.to_json(), &mut files)?;
    let mut m = a.manifest();
    m["base_sha256"] = json!(sha256_hex(read(dir, "bd.json")?.as_bytes()));
    m["files"] = json!(files);
    write(dir, "augment/manifest.json", &serde_json::to_string_pretty(&m).unwrap(), &mut BTreeMap::new())?;
    Ok((a, m))
}

/// Verification suites of `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Schema,
    Constants,
    Isometry,
    DualNorms,
    NormingSet,
    PhiEmbedding,
    TheoremA,
    Augment,
    All,
}

impl std::str::FromStr for Suite {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Suite, PipelineError> {
        Ok(match s {
            "schema" => Suite::Schema,
            "prop-1.4" | "constants" => Suite::Constants,
            "isometry" => Suite::Isometry,
            "dual-norms" => Suite::DualNorms,
            "norming-set" => Suite::NormingSet,
            "phi-embedding" => Suite::PhiEmbedding,
            "theorem-a" => Suite::TheoremA,
            "augment" => Suite::Augment,
            "all" => Suite::All,
            other => return Err(PipelineError::Usage(format!("unknown suite {other:?}"))),
        })
    }
}

/// Runs a suite on a build directory. The stored stage set is reloaded with every
/// `c*` recomputed; suites that need the coding rebuild it from the stored configuration.
pub fn run_verify(dir: &Path, suite: Suite) -> Result<Report, PipelineError> {
    let (config, seed) = load_build_dir(dir)?;
    let text = read(dir, "bd.json")?;
    let (bd, mut rep) = BDStageSet::from_json_checked(&text).map_err(|e| PipelineError::Corrupt("bd.json".into(), e.to_string()))?;
    let theta = config.theta(&seed);
    let all = suite == Suite::All;
    if all || suite == Suite::Schema {
        rep.extend(bd.validate_schema());
        rep.push(bd.verify_analyses());
    }
    if all || suite == Suite::Constants {
        rep.extend(bd.verify_constants(&theta).1);
    }
    if all || suite == Suite::Isometry {
        for m in 1..=bd.stage_bound() {
            rep.push(bd.verify_isometry(m, 1000, config.sample_seed + m as u64));
        }
    }
    if all || suite == Suite::DualNorms {
        let k = bd.compute_constants(&theta);
        for n in 1..=bd.stage_bound() {
            rep.extend(bd.verify_dual_norms(n, &k.m_stage, config.samples, 6, config.sample_seed + n as u64));
        }
    }
    let needs_build = matches!(suite, Suite::All | Suite::NormingSet | Suite::PhiEmbedding | Suite::TheoremA | Suite::Augment);
    if needs_build {
        let build = TheoremABuild::from_seed(&seed, config.theorem_a_options())?;
        rep.push(if build.bd.to_json() == text {
            Check::pass("dump.rebuild", "the stored stage set equals the rebuild from the stored configuration")
        } else {
            Check::fail("dump.rebuild", "the stored stage set differs from the rebuild", json!({ "stored_sha256": sha256_hex(text.as_bytes()) }))
        });
        if all || suite == Suite::NormingSet {
            rep.extend(verify_norming_set_d(&seed, &build.d));
        }
        if all || suite == Suite::TheoremA {
            rep.extend(build.verify());
        }
        if all || suite == Suite::PhiEmbedding {
            let e = build.verify_embedding(config.samples, build.block_bound.min(3), config.sample_seed);
            rep.extend(e.report);
        }
        if all || suite == Suite::Augment {
            match &config.augment {
                Some(a) => {
                    let aug = augment_build(&build, a)?;
                    rep.extend(aug.verify(config.samples, config.sample_seed));
                }
                None if suite == Suite::Augment => return Err(PipelineError::Usage("the configuration has no \"augment\" section".into())),
                None => {}
            }
        }
    }
    let out = json!({ "schema": REPORT_SCHEMA, "verdict": rep.verdict(), "checks": rep });
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&out).unwrap()).map_err(|e| PipelineError::Io(dir.display().to_string(), e))?;
    Ok(rep)
}

/// One stage dump, or the whole stage set when `stage` is `None`.
pub fn run_dump(dir: &Path, stage: Option<u32>) -> Result<String, PipelineError> {
    let text = read(dir, "bd.json")?;
    match stage {
        None => Ok(text),
        Some(n) => {
            let bd = BDStageSet::from_json(&text).map_err(|e| PipelineError::Corrupt("bd.json".into(), e.to_string()))?;
            if n == 0 || n > bd.stage_bound() {
                return Err(PipelineError::Usage(format!("stage {n} is outside 1..={}", bd.stage_bound())));
            }
            Ok(stage_json(&bd, n))
        }
    }
}

/// Human-readable summary of a build directory.
pub fn run_report(dir: &Path) -> Result<String, PipelineError> {
    let m: Manifest = serde_json::from_str(&read(dir, "manifest.json")?).map_err(|e| PipelineError::Corrupt("manifest.json".into(), e.to_string()))?;
    let mut out = String::new();
    out.push_str(&format!("build {}\n", dir.display()));
    out.push_str(&format!("  stage bound {}, blocks 1..={}, {} elements\n", m.stage_bound, m.block_bound, m.elements));
    out.push_str(&format!("  |Δ_n| = {:?}\n", m.stage_sizes));
    out.push_str(&format!("  norming set D: {} members{}\n", m.norming_set_size, if m.pruned { " (pruned)" } else { "" }));
    for l in &m.prune_log {
        out.push_str(&format!("    {l}\n"));
    }
    if let Ok(a) = read(dir, "augment/manifest.json") {
        let a: serde_json::Value = serde_json::from_str(&a).map_err(|e| PipelineError::Corrupt("augment/manifest.json".into(), e.to_string()))?;
        out.push_str(&format!("  augmentation: |Θ_n| = {}, ledger {} entries\n", a["theta_sizes"], a["ledger"].as_array().map_or(0, |v| v.len())));
    }
    if let Ok(r) = read(dir, "report.json") {
        let r: serde_json::Value = serde_json::from_str(&r).map_err(|e| PipelineError::Corrupt("report.json".into(), e.to_string()))?;
        out.push_str(&format!("  last verification: {}\n", r["verdict"].as_str().unwrap_or("?")));
    }
    Ok(out)
}

/// `"3:1,4:1/2"` as a vector on the naturals; the empty string is the zero vector.
pub fn parse_vector(s: &str) -> Result<FinVec, PipelineError> {
    let u = Universe::naturals();
    let err = |m: &str| PipelineError::Parse(s.to_string(), m.to_string());
    let mut entries = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (i, v) = part.split_once(':').ok_or_else(|| err("entries are index:value"))?;
        let i: IndexId = i.trim().parse().map_err(|_| err("bad index"))?;
        let v: Rat = v.trim().parse().map_err(|_| err("bad value"))?;
        entries.push((i, v));
    }
    Ok(FinVec::from_entries(&u, entries))
}

/// `‖x‖` in `T_{A,c}`.
pub fn norm_query(family: &str, c: &str, x: &str) -> Result<Rat, PipelineError> {
    let fam: RegularFamily = family.parse().map_err(|e: crate::family::FamilyError| PipelineError::Parse(family.into(), e.to_string()))?;
    let c: Rat = c.parse().map_err(|_| PipelineError::Parse(c.into(), "not a rational".into()))?;
    let spec = TsirelsonSpec::new(fam, c).map_err(|e| PipelineError::Parse(family.into(), e.to_string()))?;
    Ok(spec.norm(&parse_vector(x)?))
}

/// Norms for `decompose`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecomposeNorm {
    L1,
    Linf,
    Tsirelson(TsirelsonSpec),
}

/// The optimal c-decomposition of a functional, one coordinate per block.
pub fn decompose_query(c: &str, x: &str, norm: &DecomposeNorm) -> Result<CDecomposition, PipelineError> {
    let c: Rat = c.parse().map_err(|_| PipelineError::Parse(c.into(), "not a rational".into()))?;
    let x = parse_vector(x)?;
    let bn: Box<dyn BlockNorm> = match norm {
        DecomposeNorm::L1 => Box::new(CoordL1),
        DecomposeNorm::Linf => Box::new(CoordLinf),
        DecomposeNorm::Tsirelson(s) => Box::new(CoordTsirelson(s.clone())),
    };
    Ok(optimal_c_decomposition(&x, &c, bn.as_ref()))
}

/// `{1},{2,3}` style rendering of the block supports.
pub fn format_blocks(d: &CDecomposition) -> String {
    d.blocks
        .iter()
        .map(|b| format!("{{{}}}", b.support().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(",")
}

/// Exit status for a report: any FAIL is 1, everything else 0.
pub fn exit_code(rep: &Report) -> i32 {
    i32::from(rep.verdict() == Verdict::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queries() {
        assert_eq!(norm_query("schreier:1", "1/2", "3:1,4:1,5:1").unwrap(), Rat::new(3, 2));
        assert_eq!(norm_query("schreier:1", "1/2", "").unwrap(), Rat::zero());
        let d = decompose_query("1/2", "1:3/10,2:3/10,3:4/5", &DecomposeNorm::L1).unwrap();
        assert_eq!(format_blocks(&d), "{1},{2},{3}");
        assert!(decompose_query("1/2", "", &DecomposeNorm::L1).unwrap().is_empty());
    }

    #[test]
    fn eps_sum_rejected_with_line() {
        let text = "{\n  \"schema\": \"bdspace/build-config/v1\",\n  \"seed\": \"three-block\",\n  \"eps_rule\": {\"first\": \"1/256\", \"ratio\": \"1/4\"},\n  \"stage_bound\": 4\n}";
        match BuildConfig::parse(text, Path::new("cfg.json")) {
            Err(PipelineError::Config { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("ε/8"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }
}
