//! Pipeline steps behind the `kdiff` subcommands. Each writes its outputs
//! into a directory and returns a `key=value` report.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::entropy::entropy_report;
use crate::error::{Error, Result};
use crate::fft::{fft2c, ifft2c};
use crate::grid::{ComplexGrid, Domain, RealGrid};
use crate::io::{read_grid, read_pattern, write_grid, write_pattern, GridData, RunConfig};
use crate::metrics::evaluate;
use crate::recon::{
    gaussian_posterior_mean, mean_kspace, reconstruct_coils, reconstruct_many, relative_l2, thread_cap, MultiCoilResult,
};
use crate::sampling::{apply_forward, generate, Measurement};

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_num(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, format_num(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn save(&self, out: &Path) -> Result<()> {
        let p = out.join("report.txt");
        std::fs::write(&p, self.to_string()).map_err(|e| Error::io(&p, e))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Six decimals; infinities print as `inf` and `-inf`.
pub fn format_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Any grid file as k-space: images are transformed, real grids are taken as
/// real-valued images.
pub fn load_kspace(path: &Path) -> Result<ComplexGrid> {
    match read_grid(path)? {
        GridData::Complex(g) if g.domain() == Domain::KSpace => Ok(g),
        GridData::Complex(g) => fft2c(&g),
        GridData::Real(g) => fft2c(&g.to_complex(Domain::Image)),
    }
}

/// Any grid file as a magnitude image: k-space is transformed first.
pub fn load_magnitude(path: &Path) -> Result<RealGrid> {
    match read_grid(path)? {
        GridData::Complex(g) if g.domain() == Domain::KSpace => Ok(ifft2c(&g)?.magnitude()),
        other => Ok(other.to_magnitude()),
    }
}

/// Writes the weighting matrix and every configured mask.
pub fn cmd_mask(cfg: &RunConfig, height: usize, width: usize, out: &Path) -> Result<Report> {
    ensure_dir(out)?;
    let weight = crate::masks::make_weight(height, width, cfg.weight_r, cfg.weight_p, cfg.weight_eps)?;
    write_grid(&GridData::Real(weight.values().clone()), out.join("weight.grid"))?;
    let mut report = Report::default();
    report.push("height", height);
    report.push("width", width);
    report.push_num("weight_min", weight.values().min());
    report.push_num("weight_max", weight.values().max());
    let masks = cfg.build_masks(height, width)?;
    for (name, m) in &masks {
        write_grid(
            &GridData::Real(m.mask().to_real()),
            out.join(format!("mask_{name}.grid")),
        )?;
        report.push(format!("mask.{name}.shape"), m.shape().name());
        report.push(format!("mask.{name}.complement"), m.is_complemented());
        report.push(format!("mask.{name}.popcount"), m.mask().popcount());
        report.push_num(format!("mask.{name}.coverage"), m.mask().coverage());
    }
    for pair in masks.windows(2) {
        let rel = crate::entropy::relationship(&pair[0].1, &pair[1].1)?;
        report.push(format!("relationship.{}.{}", pair[0].0, pair[1].0), rel.name());
    }
    report.save(out)?;
    Ok(report)
}

/// Generates the configured pattern for the input's shape and applies it.
pub fn cmd_undersample(cfg: &RunConfig, input: &Path, out: &Path) -> Result<Report> {
    ensure_dir(out)?;
    let x = load_kspace(input)?;
    let (h, w) = x.shape();
    let pattern = generate(cfg.pattern, h, w, cfg.accel, cfg.acs, cfg.pattern_seed)?;
    let meas = apply_forward(&x, &pattern, cfg.noise_sd, cfg.noise_seed)?;
    write_grid(&GridData::Complex(meas.y.clone()), out.join("measured.ksp"))?;
    write_pattern(&pattern, out.join("pattern.grid"))?;
    let mut report = Report::default();
    report.push("kind", pattern.kind.name());
    report.push("height", h);
    report.push("width", w);
    report.push("acs", pattern.acs);
    report.push("seed", pattern.seed);
    report.push("sampled", pattern.mask.popcount());
    report.push_num("target_r", pattern.target_r);
    report.push_num("achieved_r", pattern.achieved_r);
    report.push("within_tolerance", pattern.within_tolerance());
    report.push_num("noise_sd", cfg.noise_sd);
    report.save(out)?;
    Ok(report)
}

/// Inputs to [`cmd_reconstruct`].
#[derive(Debug, Clone)]
pub struct ReconstructArgs {
    /// Measured k-space, one file per coil.
    pub inputs: Vec<PathBuf>,
    pub pattern: PathBuf,
    /// Optional ground truth for PSNR and SSIM.
    pub reference: Option<PathBuf>,
    pub out: PathBuf,
}

/// Reconstructs every coil, averaging `samples` runs per coil, and writes
/// k-space, image and magnitude grids plus a report.
pub fn cmd_reconstruct(cfg: &RunConfig, args: &ReconstructArgs) -> Result<Report> {
    if args.inputs.is_empty() {
        return Err(Error::invalid(
            "cli",
            "input",
            "at least one measured k-space file is required",
        ));
    }
    let out = args.out.as_path();
    ensure_dir(out)?;
    let pattern = read_pattern(&args.pattern)?;
    let measurements = args
        .inputs
        .iter()
        .map(|p| {
            let y = crate::io::read_complex(p)?;
            Measurement::new(y, pattern.clone(), cfg.noise_sd)
        })
        .collect::<Result<Vec<_>>>()?;
    let (h, w) = measurements[0].shape();
    let rc = cfg.recon_config(h, w)?;
    let threads = thread_cap();

    let estimates: Vec<ComplexGrid> = if cfg.samples == 1 {
        let MultiCoilResult { coils, .. } = reconstruct_coils(&measurements, &rc, threads)?;
        coils.into_iter().map(|r| r.kspace).collect()
    } else {
        measurements
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let mut job = rc.clone();
                job.seed = crate::recon::derive_seed(rc.seed, c as u64);
                mean_kspace(&reconstruct_many(m, &job, cfg.samples, threads)?)
            })
            .collect::<Result<_>>()?
    };

    let mut report = Report::default();
    report.push("combination", rc.combination.name());
    report.push(
        "slots",
        rc.slots
            .iter()
            .map(|s| format!("{}:{}", s.label(), s.transform.name()))
            .collect::<Vec<_>>()
            .join(","),
    );
    report.push("levels", rc.schedule.levels());
    report.push("corrector_steps", rc.corrector_steps);
    report.push("samples", cfg.samples);
    report.push("coils", estimates.len());
    report.push("seed", rc.seed);

    let mut images = Vec::with_capacity(estimates.len());
    for (c, (k, m)) in estimates.iter().zip(&measurements).enumerate() {
        let img = ifft2c(k)?;
        let suffix = if estimates.len() == 1 {
            String::new()
        } else {
            format!("_coil{c}")
        };
        write_grid(&GridData::Complex(k.clone()), out.join(format!("kspace{suffix}.ksp")))?;
        write_grid(&GridData::Complex(img.clone()), out.join(format!("image{suffix}.ksp")))?;
        let residual: f64 = k
            .data()
            .iter()
            .zip(m.y.data())
            .zip(m.mask().data())
            .filter(|(_, &s)| s)
            .map(|((a, b), _)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        report.push_num(format!("residual{suffix}"), residual);
        images.push(img);
    }
    let magnitude = if images.len() == 1 {
        images[0].magnitude()
    } else {
        crate::grid::sos_combine(&crate::grid::CoilStack::new(images)?)?
    };
    write_grid(&GridData::Real(magnitude.clone()), out.join("magnitude.grid"))?;

    if estimates.len() == 1 {
        if let Some(prior) = cfg.shared_gaussian_prior()? {
            let oracle = gaussian_posterior_mean(&prior, &measurements[0])?;
            report.push(
                "posterior_mean_rel_err",
                format!("{:.6e}", relative_l2(&estimates[0], &oracle)?),
            );
        }
    }
    if let Some(reference) = &args.reference {
        let r = evaluate(&load_magnitude(reference)?, &magnitude)?;
        report.push_num("psnr", r.psnr);
        report.push_num("ssim", r.ssim);
        report.push_num("data_range", r.data_range);
    }
    report.save(out)?;
    Ok(report)
}

/// PSNR and SSIM of `test` against `reference`, both as magnitude images.
pub fn cmd_evaluate(reference: &Path, test: &Path) -> Result<Report> {
    let r = evaluate(&load_magnitude(reference)?, &load_magnitude(test)?)?;
    let mut report = Report::default();
    report.push_num("psnr", r.psnr);
    report.push_num("ssim", r.ssim);
    report.push_num("data_range", r.data_range);
    Ok(report)
}

/// Entropy of the input's magnitude inside the first two configured masks.
pub fn cmd_entropy(cfg: &RunConfig, input: &Path) -> Result<Report> {
    let x = load_kspace(input)?;
    let (h, w) = x.shape();
    let masks = cfg.build_masks(h, w)?;
    if masks.len() < 2 {
        return Err(Error::invalid("config", "mask", "entropy needs two masks"));
    }
    let (n1, m1) = &masks[0];
    let (n2, m2) = &masks[1];
    let e = entropy_report(&x, m1, m2, cfg.entropy_bins)?;
    let mut report = Report::default();
    report.push("mask1", n1);
    report.push("mask2", n2);
    report.push("bins", e.bins);
    report.push_num("e1", e.e1);
    report.push_num("e2", e.e2);
    report.push_num("total", e.total);
    report.push("relationship", e.relationship.name());
    Ok(report)
}
