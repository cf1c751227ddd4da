use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::masks::{
    build_mask, make_weight, MaskShape, VirtualMask, DEFAULT_WEIGHT_EPS, DEFAULT_WEIGHT_P, DEFAULT_WEIGHT_R,
};
use crate::recon::{
    Combination, DcMode, MaskedUpdate, ModelSlot, ReconConfig, Role, SlotTransform, StepSize, DEFAULT_EPS_FLOOR,
    DEFAULT_SNR,
};
use crate::sampling::PatternKind;
use crate::sde::{
    load_mlp, make_schedule, GaussianPrior, GaussianScore, ScoreProvider, ZeroScore, DEFAULT_LEVELS, DEFAULT_SIGMA_MAX,
    DEFAULT_SIGMA_MIN,
};

use super::gridfile::read_prior;

/// Reference text for every key, printed by the command-line help.
pub const CONFIG_HELP: &str = "\
Run configuration: one `key = value` per line, `#` starts a comment.
Unknown keys are rejected. Paths are relative to the config file.

  sigma_min = 0.01          smallest noise level
  sigma_max = 378           largest noise level
  levels = 1000             number of noise levels N
  corrector_steps = 1       Langevin corrector rounds per level M
  snr = 0.16                corrector signal-to-noise ratio
  dc = hard                 `hard` or a positive soft weight lambda
  weight_r = 0.075          weighting matrix scale r
  weight_p = 0.5            weighting matrix exponent p
  weight_eps = 1e-6         weighting matrix floor
  mask.<name> = circle <a> | radial <spokes> <width> <inner> | random <coverage> <block> <seed>
                            append `complement` to swap support and background
  pattern = poisson         poisson | random | uniform
  accel = 4                 target acceleration R
  acs = 0                   side of the fully sampled central block
  pattern_seed = 0          pattern seed (uniform: line offset)
  noise_sd = 0              measurement noise per real component
  noise_seed = 0            seed for measurement noise
  slot = <provider> @ <transform>   repeat in cascade order
                            provider: gaussian:<prior file> | mlp:<weights file> | zero
                            transform: weighted | identity | mask:<name>
  combination = cascade     cascade | parallel
  masked_update = replace   replace | literal
  seed = 0                  sampler seed
  samples = 1               reconstructions averaged per input
  entropy_bins = 256        histogram bins for the entropy report
";

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSpec {
    Gaussian(PathBuf),
    Mlp(PathBuf),
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformSpec {
    Weighted,
    Identity,
    Mask(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSpec {
    pub provider: ProviderSpec,
    pub transform: TransformSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub name: String,
    pub shape: MaskShape,
    pub complement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub levels: usize,
    pub corrector_steps: usize,
    pub snr: f64,
    pub dc: DcMode,
    pub weight_r: f64,
    pub weight_p: f64,
    pub weight_eps: f64,
    pub masks: Vec<MaskSpec>,
    pub pattern: PatternKind,
    pub accel: f64,
    pub acs: usize,
    pub pattern_seed: u64,
    pub noise_sd: f64,
    pub noise_seed: u64,
    pub slots: Vec<SlotSpec>,
    pub combination: Combination,
    pub masked_update: MaskedUpdate,
    pub seed: u64,
    pub samples: usize,
    pub entropy_bins: usize,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma_min: DEFAULT_SIGMA_MIN,
            sigma_max: DEFAULT_SIGMA_MAX,
            levels: DEFAULT_LEVELS,
            corrector_steps: 1,
            snr: DEFAULT_SNR,
            dc: DcMode::Hard,
            weight_r: DEFAULT_WEIGHT_R,
            weight_p: DEFAULT_WEIGHT_P,
            weight_eps: DEFAULT_WEIGHT_EPS,
            masks: Vec::new(),
            pattern: PatternKind::Poisson2D,
            accel: 4.0,
            acs: 0,
            pattern_seed: 0,
            noise_sd: 0.0,
            noise_seed: 0,
            slots: Vec::new(),
            combination: Combination::Cascade,
            masked_update: MaskedUpdate::Replace,
            seed: 0,
            samples: 1,
            entropy_bins: crate::entropy::DEFAULT_BINS,
            base_dir: PathBuf::from("."),
        }
    }
}

fn cfg_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| cfg_err(line, format!("{key}: cannot parse {v:?}")))
}

fn parse_mask(line: usize, name: &str, value: &str) -> Result<MaskSpec> {
    let mut words: Vec<&str> = value.split_whitespace().collect();
    let complement = words.last() == Some(&"complement");
    if complement {
        words.pop();
    }
    let key = format!("mask.{name}");
    let want = |n: usize| {
        if words.len() == n + 1 {
            Ok(())
        } else {
            Err(cfg_err(line, format!("{key}: {} takes {n} values", words[0])))
        }
    };
    let shape = match words.first().copied() {
        Some("circle") => {
            want(1)?;
            MaskShape::Circle {
                diameter: parse_num(line, &key, words[1])?,
            }
        }
        Some("radial") => {
            want(3)?;
            MaskShape::Radial {
                spokes: parse_num(line, &key, words[1])?,
                spoke_width: parse_num(line, &key, words[2])?,
                inner_diameter: parse_num(line, &key, words[3])?,
            }
        }
        Some("random") => {
            want(3)?;
            MaskShape::Random {
                coverage: parse_num(line, &key, words[1])?,
                block: parse_num(line, &key, words[2])?,
                seed: parse_num(line, &key, words[3])?,
            }
        }
        other => return Err(cfg_err(line, format!("{key}: unknown mask shape {other:?}"))),
    };
    Ok(MaskSpec {
        name: name.to_string(),
        shape,
        complement,
    })
}

fn parse_slot(line: usize, value: &str, base: &Path) -> Result<SlotSpec> {
    let (p, t) = value.split_once('@').ok_or_else(|| {
        cfg_err(
            line,
            format!("slot: expected `<provider> @ <transform>`, got {value:?}"),
        )
    })?;
    let p = p.trim();
    let t = t.trim();
    let provider = if p == "zero" {
        ProviderSpec::Zero
    } else if let Some(f) = p.strip_prefix("gaussian:") {
        ProviderSpec::Gaussian(base.join(f.trim()))
    } else if let Some(f) = p.strip_prefix("mlp:") {
        ProviderSpec::Mlp(base.join(f.trim()))
    } else {
        return Err(cfg_err(line, format!("slot: unknown provider {p:?}")));
    };
    let transform = match t {
        "weighted" => TransformSpec::Weighted,
        "identity" => TransformSpec::Identity,
        _ => match t.strip_prefix("mask:") {
            Some(name) => TransformSpec::Mask(name.trim().to_string()),
            None => return Err(cfg_err(line, format!("slot: unknown transform {t:?}"))),
        },
    };
    Ok(SlotSpec { provider, transform })
}

impl RunConfig {
    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg = RunConfig {
            base_dir: base_dir.into(),
            ..RunConfig::default()
        };
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| cfg_err(line, format!("expected key = value, got {content:?}")))?;
            let key = key.trim();
            let value = value.trim();
            if key != "slot" && !seen.insert(key.to_string()) {
                return Err(cfg_err(line, format!("duplicate key {key:?}")));
            }
            match key {
                "sigma_min" => cfg.sigma_min = parse_num(line, key, value)?,
                "sigma_max" => cfg.sigma_max = parse_num(line, key, value)?,
                "levels" => cfg.levels = parse_num(line, key, value)?,
                "corrector_steps" => cfg.corrector_steps = parse_num(line, key, value)?,
                "snr" => cfg.snr = parse_num(line, key, value)?,
                "dc" => {
                    cfg.dc = if value.eq_ignore_ascii_case("hard") {
                        DcMode::Hard
                    } else {
                        DcMode::Soft(parse_num(line, key, value)?)
                    }
                }
                "weight_r" => cfg.weight_r = parse_num(line, key, value)?,
                "weight_p" => cfg.weight_p = parse_num(line, key, value)?,
                "weight_eps" => cfg.weight_eps = parse_num(line, key, value)?,
                "pattern" => {
                    cfg.pattern = PatternKind::parse(value)
                        .ok_or_else(|| cfg_err(line, format!("pattern: unknown kind {value:?}")))?
                }
                "accel" => cfg.accel = parse_num(line, key, value)?,
                "acs" => cfg.acs = parse_num(line, key, value)?,
                "pattern_seed" => cfg.pattern_seed = parse_num(line, key, value)?,
                "noise_sd" => cfg.noise_sd = parse_num(line, key, value)?,
                "noise_seed" => cfg.noise_seed = parse_num(line, key, value)?,
                "slot" => {
                    let base = cfg.base_dir.clone();
                    cfg.slots.push(parse_slot(line, value, &base)?)
                }
                "combination" => {
                    cfg.combination = match value {
                        "cascade" => Combination::Cascade,
                        "parallel" => Combination::Parallel,
                        _ => return Err(cfg_err(line, format!("combination: unknown {value:?}"))),
                    }
                }
                "masked_update" => {
                    cfg.masked_update = match value {
                        "replace" => MaskedUpdate::Replace,
                        "literal" => MaskedUpdate::LiteralResidual,
                        _ => return Err(cfg_err(line, format!("masked_update: unknown {value:?}"))),
                    }
                }
                "seed" => cfg.seed = parse_num(line, key, value)?,
                "samples" => cfg.samples = parse_num(line, key, value)?,
                "entropy_bins" => cfg.entropy_bins = parse_num(line, key, value)?,
                _ => match key.strip_prefix("mask.") {
                    Some(name) if !name.is_empty() => cfg.masks.push(parse_mask(line, name, value)?),
                    _ => return Err(cfg_err(line, format!("unknown key {key:?}"))),
                },
            }
        }
        if cfg.samples == 0 {
            return Err(cfg_err(0, "samples must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Self::parse(&text, base)
    }

    pub fn mask_spec(&self, name: &str) -> Result<&MaskSpec> {
        self.masks
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::invalid("config", format!("mask:{name}"), "no such mask defined"))
    }

    pub fn build_mask(&self, spec: &MaskSpec, height: usize, width: usize) -> Result<VirtualMask> {
        let m = build_mask(height, width, &spec.shape)?;
        Ok(if spec.complement { m.complement() } else { m })
    }

    /// All configured masks, in file order.
    pub fn build_masks(&self, height: usize, width: usize) -> Result<Vec<(String, VirtualMask)>> {
        self.masks
            .iter()
            .map(|s| Ok((s.name.clone(), self.build_mask(s, height, width)?)))
            .collect()
    }

    /// The single prior shared by every slot, when all slots are Gaussian
    /// and read the same file.
    pub fn shared_gaussian_prior(&self) -> Result<Option<GaussianPrior>> {
        let mut file = None;
        for s in &self.slots {
            match (&s.provider, file) {
                (ProviderSpec::Gaussian(p), None) => file = Some(p),
                (ProviderSpec::Gaussian(p), Some(f)) if p == f => {}
                _ => return Ok(None),
            }
        }
        file.map(read_prior).transpose()
    }

    /// Materializes weights, masks and providers for an `height x width` problem.
    pub fn recon_config(&self, height: usize, width: usize) -> Result<ReconConfig> {
        let schedule = make_schedule(self.sigma_min, self.sigma_max, self.levels)?;
        let weight = make_weight(height, width, self.weight_r, self.weight_p, self.weight_eps)?;
        let mut slots = Vec::with_capacity(self.slots.len());
        for (k, spec) in self.slots.iter().enumerate() {
            let label = format!("GM{}", k + 1);
            let (transform, role) = match &spec.transform {
                TransformSpec::Weighted => (SlotTransform::Weighted(weight.clone()), Role::Structure),
                TransformSpec::Identity => (SlotTransform::Identity, Role::Structure),
                TransformSpec::Mask(name) => {
                    let m = self.build_mask(self.mask_spec(name)?, height, width)?;
                    (SlotTransform::Masked(m), Role::Detail)
                }
            };
            let provider: Arc<dyn ScoreProvider> = match &spec.provider {
                ProviderSpec::Zero => Arc::new(ZeroScore::new(label)),
                ProviderSpec::Mlp(p) => {
                    let mut s = load_mlp(p)?;
                    s.set_label(label);
                    Arc::new(s)
                }
                ProviderSpec::Gaussian(p) => {
                    let prior = read_prior(p)?;
                    let prior = match &transform {
                        SlotTransform::Weighted(w) => prior.weighted(w)?,
                        SlotTransform::Masked(m) => prior.masked(m.mask())?,
                        SlotTransform::Identity => prior,
                    };
                    Arc::new(GaussianScore::new(label, prior))
                }
            };
            slots.push(ModelSlot::new(provider, transform, role));
        }
        let mut cfg = ReconConfig::new(schedule, slots);
        cfg.corrector_steps = self.corrector_steps;
        cfg.step = StepSize::Snr {
            snr: self.snr,
            floor: DEFAULT_EPS_FLOOR,
        };
        cfg.dc = self.dc;
        cfg.combination = self.combination;
        cfg.masked_update = self.masked_update;
        cfg.seed = self.seed;
        cfg.validate((height, width))?;
        Ok(cfg)
    }
}
