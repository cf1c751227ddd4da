use std::sync::Arc;

use num_complex::Complex64;

use super::steps::{DcMode, StepSize};
use crate::error::{Error, Result};
use crate::grid::ComplexGrid;
use crate::masks::{VirtualMask, WeightMatrix};
use crate::sde::{NoiseSchedule, ScoreProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Structure,
    Detail,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Structure => "structure",
            Role::Detail => "detail",
        }
    }
}

/// Coordinates a slot's provider works in.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotTransform {
    Weighted(WeightMatrix),
    Masked(VirtualMask),
    Identity,
}

impl SlotTransform {
    pub fn name(&self) -> &'static str {
        match self {
            SlotTransform::Weighted(_) => "weighted",
            SlotTransform::Masked(_) => "mask",
            SlotTransform::Identity => "identity",
        }
    }

    fn dims(&self) -> Option<(usize, usize)> {
        match self {
            SlotTransform::Weighted(w) => Some(w.shape()),
            SlotTransform::Masked(m) => Some(m.dims()),
            SlotTransform::Identity => None,
        }
    }

    /// Raw k-space into slot coordinates.
    pub(crate) fn forward(&self, x: &ComplexGrid) -> ComplexGrid {
        match self {
            SlotTransform::Weighted(w) => scaled(x, w.values().data(), |a, s| a * s),
            SlotTransform::Masked(m) => {
                let zero = Complex64::new(0.0, 0.0);
                let data = x
                    .data()
                    .iter()
                    .zip(m.mask().data())
                    .map(|(&z, &keep)| if keep { z } else { zero })
                    .collect();
                ComplexGrid::from_parts_unchecked(x.height(), x.width(), x.domain(), data)
            }
            SlotTransform::Identity => x.clone(),
        }
    }

    /// Slot output back into raw k-space, given the estimate the slot started from.
    pub(crate) fn back(&self, out: ComplexGrid, start: &ComplexGrid, update: MaskedUpdate) -> ComplexGrid {
        match self {
            SlotTransform::Weighted(w) => scaled(&out, w.values().data(), |a, s| a / s),
            SlotTransform::Masked(m) => {
                let mut next = start.clone();
                for ((dst, &o), &keep) in next.data_mut().iter_mut().zip(out.data()).zip(m.mask().data()) {
                    if keep {
                        *dst = match update {
                            MaskedUpdate::Replace => o,
                            MaskedUpdate::LiteralResidual => *dst + (*dst - o),
                        };
                    }
                }
                next
            }
            SlotTransform::Identity => out,
        }
    }
}

fn scaled(x: &ComplexGrid, factors: &[f64], op: impl Fn(Complex64, f64) -> Complex64) -> ComplexGrid {
    let data = x.data().iter().zip(factors).map(|(&z, &s)| op(z, s)).collect();
    ComplexGrid::from_parts_unchecked(x.height(), x.width(), x.domain(), data)
}

/// One generative model in the roster.
#[derive(Clone)]
pub struct ModelSlot {
    pub provider: Arc<dyn ScoreProvider>,
    pub transform: SlotTransform,
    pub role: Role,
}

impl ModelSlot {
    pub fn new(provider: Arc<dyn ScoreProvider>, transform: SlotTransform, role: Role) -> Self {
        Self {
            provider,
            transform,
            role,
        }
    }

    /// Structure model working on weighted k-space.
    pub fn structure(provider: Arc<dyn ScoreProvider>, weight: WeightMatrix) -> Self {
        Self::new(provider, SlotTransform::Weighted(weight), Role::Structure)
    }

    /// Detail model confined to a mask support.
    pub fn detail(provider: Arc<dyn ScoreProvider>, mask: VirtualMask) -> Self {
        Self::new(provider, SlotTransform::Masked(mask), Role::Detail)
    }

    /// Plain model on raw k-space.
    pub fn plain(provider: Arc<dyn ScoreProvider>) -> Self {
        Self::new(provider, SlotTransform::Identity, Role::Structure)
    }

    pub fn label(&self) -> &str {
        self.provider.label()
    }
}

impl std::fmt::Debug for ModelSlot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSlot")
            .field("provider", &self.provider.label())
            .field("transform", &self.transform.name())
            .field("role", &self.role)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combination {
    #[default]
    Cascade,
    Parallel,
}

impl Combination {
    pub fn name(self) -> &'static str {
        match self {
            Combination::Cascade => "cascade",
            Combination::Parallel => "parallel",
        }
    }
}

/// How a masked slot's output is written back on its support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskedUpdate {
    /// The support takes the detail model's output.
    #[default]
    Replace,
    /// `x + (m x - x_detail)` on the support, the residual taken as printed.
    LiteralResidual,
}

#[derive(Debug, Clone)]
pub struct ReconConfig {
    pub schedule: NoiseSchedule,
    /// Corrector rounds per level.
    pub corrector_steps: usize,
    pub step: StepSize,
    pub dc: DcMode,
    pub slots: Vec<ModelSlot>,
    pub combination: Combination,
    pub seed: u64,
    pub masked_update: MaskedUpdate,
    /// Parallel mode only: every slot replays the same random stream.
    pub pin_slot_streams: bool,
    /// Test hook: predictor and corrector noise is zero. Initialization
    /// still draws from the seeded stream.
    pub pin_noise: bool,
}

impl ReconConfig {
    pub fn new(schedule: NoiseSchedule, slots: Vec<ModelSlot>) -> Self {
        Self {
            schedule,
            corrector_steps: 1,
            step: StepSize::default(),
            dc: DcMode::Hard,
            slots,
            combination: Combination::Cascade,
            seed: 0,
            masked_update: MaskedUpdate::Replace,
            pin_slot_streams: false,
            pin_noise: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_combination(mut self, combination: Combination) -> Self {
        self.combination = combination;
        self
    }

    pub(crate) fn validate(&self, shape: (usize, usize)) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::invalid("recon", "slots", "at least one model slot is required"));
        }
        self.dc.validate()?;
        let mut seen_detail = false;
        for slot in &self.slots {
            match (&slot.transform, slot.role) {
                (SlotTransform::Weighted(_), Role::Detail) => {
                    return Err(Error::invalid(
                        "recon",
                        slot.label(),
                        "weighted transforms belong to structure slots",
                    ));
                }
                (SlotTransform::Masked(_), Role::Structure) => {
                    return Err(Error::invalid(
                        "recon",
                        slot.label(),
                        "masked transforms belong to detail slots",
                    ));
                }
                _ => {}
            }
            match slot.role {
                Role::Detail => seen_detail = true,
                Role::Structure if seen_detail => {
                    return Err(Error::invalid(
                        "recon",
                        slot.label(),
                        "structure slots must precede detail slots",
                    ));
                }
                Role::Structure => {}
            }
            if let Some(dims) = slot.transform.dims() {
                if dims != shape {
                    return Err(Error::ShapeMismatch {
                        module: "recon",
                        param: format!("{} transform", slot.label()),
                        expected: shape,
                        actual: dims,
                    });
                }
            }
        }
        Ok(())
    }
}
