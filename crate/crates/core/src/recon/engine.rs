use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::slots::{Combination, ModelSlot, ReconConfig, SlotTransform};
use super::steps::{corrector_step, dc_in_place, predictor_step, CorrectorState, DcMode};
use crate::error::{Error, Result};
use crate::fft::ifft2c;
use crate::grid::{ComplexGrid, Domain};
use crate::sampling::Measurement;
use crate::sde::{perturb, NoiseSource};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDiagnostic {
    pub level: usize,
    pub sigma: f64,
    /// `|M x - y|_2` after the level; `None` without a measurement.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub kspace: ComplexGrid,
    pub image: ComplexGrid,
    pub diagnostics: Vec<LevelDiagnostic>,
}

impl ReconResult {
    fn finish(kspace: ComplexGrid, diagnostics: Vec<LevelDiagnostic>) -> Result<Self> {
        let image = ifft2c(&kspace)?;
        Ok(Self {
            kspace,
            image,
            diagnostics,
        })
    }
}

/// Raw k-space estimate before and after one slot's update at one level.
#[derive(Debug)]
pub struct SlotEvent<'a> {
    pub level: usize,
    pub slot: usize,
    pub before: &'a ComplexGrid,
    pub after: &'a ComplexGrid,
}

struct SlotNoise {
    rng: ChaCha8Rng,
    pinned: bool,
}

impl NoiseSource for SlotNoise {
    fn fill_standard_normal(&mut self, out: &mut [Complex64]) {
        if self.pinned {
            out.fill(Complex64::new(0.0, 0.0));
        } else {
            self.rng.fill_standard_normal(out);
        }
    }
}

/// Measurement mapped into one slot's coordinates.
struct SlotData {
    y: Vec<Complex64>,
}

struct Run<'a> {
    cfg: &'a ReconConfig,
    meas: Option<&'a Measurement>,
    slot_data: Vec<SlotData>,
    states: Vec<CorrectorState>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ReconConfig, meas: Option<&'a Measurement>) -> Self {
        let slot_data = cfg
            .slots
            .iter()
            .map(|slot| SlotData {
                y: meas
                    .map(|m| slot.transform.forward(&m.y).into_data())
                    .unwrap_or_default(),
            })
            .collect();
        Self {
            cfg,
            meas,
            slot_data,
            states: vec![CorrectorState::default(); cfg.slots.len()],
        }
    }

    fn dc(&self, k: usize, x: &mut ComplexGrid) {
        if let Some(m) = self.meas {
            dc_in_place(x.data_mut(), &self.slot_data[k].y, m.mask().data(), self.cfg.dc);
        }
    }

    /// Predictor plus correctors for slot `k` at level `level`, in raw coordinates.
    fn slot_update(&mut self, k: usize, level: usize, x: &ComplexGrid, noise: &mut SlotNoise) -> Result<ComplexGrid> {
        let slot: &ModelSlot = &self.cfg.slots[k];
        let provider = slot.provider.as_ref();
        let sigma_lo = self.cfg.schedule.sigma(level);
        let sigma_hi = self.cfg.schedule.sigma(level + 1);

        let mut xs = slot.transform.forward(x);
        xs = predictor_step(&xs, provider, sigma_lo, sigma_hi, noise)?;
        self.dc(k, &mut xs);
        for _ in 0..self.cfg.corrector_steps {
            xs = corrector_step(&xs, provider, sigma_lo, self.cfg.step, noise, &mut self.states[k])?;
            self.dc(k, &mut xs);
        }
        let mut next = slot.transform.back(xs, x, self.cfg.masked_update);
        if let (SlotTransform::Weighted(_), Some(m), DcMode::Hard) = (&slot.transform, self.meas, self.cfg.dc) {
            // Dividing the weight back out can leave sampled values an ulp off.
            dc_in_place(next.data_mut(), m.y.data(), m.mask().data(), DcMode::Hard);
        }
        if !next.is_finite() {
            return Err(Error::NonFiniteIterate {
                level,
                slot: slot.label().to_string(),
            });
        }
        Ok(next)
    }

    fn diagnostic(&self, level: usize, x: &ComplexGrid) -> LevelDiagnostic {
        let residual = self.meas.map(|m| {
            x.data()
                .iter()
                .zip(m.y.data())
                .zip(m.mask().data())
                .filter(|(_, &s)| s)
                .map(|((a, b), _)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        });
        LevelDiagnostic {
            level,
            sigma: self.cfg.schedule.sigma(level),
            residual,
        }
    }
}

fn initial_state(shape: (usize, usize), cfg: &ReconConfig) -> Result<(ComplexGrid, ChaCha8Rng)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let zero = ComplexGrid::zeros(shape.0, shape.1, Domain::KSpace);
    let x = perturb(&zero, cfg.schedule.sigma_max(), &mut rng)?;
    Ok((x, rng))
}

fn cascade(
    shape: (usize, usize),
    meas: Option<&Measurement>,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(SlotEvent<'_>),
) -> Result<ReconResult> {
    cfg.validate(shape)?;
    let (mut x, rng) = initial_state(shape, cfg)?;
    let mut noise = SlotNoise {
        rng,
        pinned: cfg.pin_noise,
    };
    let mut run = Run::new(cfg, meas);
    let mut diagnostics = Vec::with_capacity(cfg.schedule.levels());
    for level in (0..cfg.schedule.levels()).rev() {
        for k in 0..cfg.slots.len() {
            let next = run.slot_update(k, level, &x, &mut noise)?;
            observer(SlotEvent {
                level,
                slot: k,
                before: &x,
                after: &next,
            });
            x = next;
        }
        diagnostics.push(run.diagnostic(level, &x));
    }
    ReconResult::finish(x, diagnostics)
}

fn parallel(
    shape: (usize, usize),
    meas: Option<&Measurement>,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(SlotEvent<'_>),
) -> Result<ReconResult> {
    cfg.validate(shape)?;
    let (mut x, rng) = initial_state(shape, cfg)?;
    let mut streams: Vec<SlotNoise> = (0..cfg.slots.len())
        .map(|k| {
            let rng = if k == 0 || cfg.pin_slot_streams {
                rng.clone()
            } else {
                let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
                r.set_stream(k as u64);
                r
            };
            SlotNoise {
                rng,
                pinned: cfg.pin_noise,
            }
        })
        .collect();
    let mut run = Run::new(cfg, meas);
    let n = shape.0 * shape.1;
    let zero = Complex64::new(0.0, 0.0);
    let mut diagnostics = Vec::with_capacity(cfg.schedule.levels());
    for level in (0..cfg.schedule.levels()).rev() {
        let mut base_sum = vec![zero; n];
        let mut base_count = 0usize;
        let mut det_sum = vec![zero; n];
        let mut det_count = vec![0u32; n];
        for (k, noise) in streams.iter_mut().enumerate() {
            let out = run.slot_update(k, level, &x, noise)?;
            observer(SlotEvent {
                level,
                slot: k,
                before: &x,
                after: &out,
            });
            match &cfg.slots[k].transform {
                SlotTransform::Masked(m) => {
                    for (i, &keep) in m.mask().data().iter().enumerate() {
                        if keep {
                            det_sum[i] += out.data()[i];
                            det_count[i] += 1;
                        }
                    }
                }
                _ => {
                    for (acc, v) in base_sum.iter_mut().zip(out.data()) {
                        *acc += v;
                    }
                    base_count += 1;
                }
            }
        }
        let data: Vec<Complex64> = (0..n)
            .map(|i| {
                if det_count[i] > 0 {
                    det_sum[i] / det_count[i] as f64
                } else if base_count > 0 {
                    base_sum[i] / base_count as f64
                } else {
                    x.data()[i]
                }
            })
            .collect();
        x = ComplexGrid::from_parts_unchecked(shape.0, shape.1, Domain::KSpace, data);
        if let (Some(m), DcMode::Hard) = (meas, cfg.dc) {
            dc_in_place(x.data_mut(), m.y.data(), m.mask().data(), DcMode::Hard);
        }
        diagnostics.push(run.diagnostic(level, &x));
    }
    ReconResult::finish(x, diagnostics)
}

fn dispatch(
    shape: (usize, usize),
    meas: Option<&Measurement>,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(SlotEvent<'_>),
) -> Result<ReconResult> {
    match cfg.combination {
        Combination::Cascade => cascade(shape, meas, cfg, observer),
        Combination::Parallel => parallel(shape, meas, cfg, observer),
    }
}

/// Sequential multi-model reconstruction: within each level every slot
/// updates the running estimate in turn.
pub fn cascade_reconstruct(meas: &Measurement, cfg: &ReconConfig) -> Result<ReconResult> {
    cascade(meas.shape(), Some(meas), cfg, &mut |_| {})
}

/// [`cascade_reconstruct`] reporting every slot update to `observer`.
pub fn cascade_reconstruct_observed(
    meas: &Measurement,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(SlotEvent<'_>),
) -> Result<ReconResult> {
    cascade(meas.shape(), Some(meas), cfg, observer)
}

/// Every slot updates from the shared estimate; outputs are merged per level.
pub fn parallel_reconstruct(meas: &Measurement, cfg: &ReconConfig) -> Result<ReconResult> {
    parallel(meas.shape(), Some(meas), cfg, &mut |_| {})
}

pub fn parallel_reconstruct_observed(
    meas: &Measurement,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(SlotEvent<'_>),
) -> Result<ReconResult> {
    parallel(meas.shape(), Some(meas), cfg, observer)
}

/// Runs the combination selected in `cfg`.
pub fn reconstruct(meas: &Measurement, cfg: &ReconConfig) -> Result<ReconResult> {
    dispatch(meas.shape(), Some(meas), cfg, &mut |_| {})
}

/// Reverse diffusion without data consistency: a draw from the prior the
/// providers describe.
pub fn generate(height: usize, width: usize, cfg: &ReconConfig) -> Result<ReconResult> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("recon", "shape", "grid must be nonempty"));
    }
    dispatch((height, width), None, cfg, &mut |_| {})
}

pub fn generate_observed(
    height: usize,
    width: usize,
    cfg: &ReconConfig,
    observer: &mut dyn FnMut(SlotEvent<'_>),
) -> Result<ReconResult> {
    if height == 0 || width == 0 {
        return Err(Error::invalid("recon", "shape", "grid must be nonempty"));
    }
    dispatch((height, width), None, cfg, observer)
}
