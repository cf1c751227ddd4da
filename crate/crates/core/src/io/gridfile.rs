use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ComplexGrid, Domain, RealGrid};
use crate::sampling::{PatternKind, SamplingPattern};
use crate::sde::GaussianPrior;

pub const GRID_MAGIC: [u8; 4] = *b"KSP1";
pub const GRID_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 17;

const TAG_IMAGE: u8 = 0;
const TAG_KSPACE: u8 = 1;
const TAG_REAL: u8 = 2;

/// Contents of one grid record.
#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Complex(ComplexGrid),
    Real(RealGrid),
}

impl GridData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GridData::Complex(g) => g.shape(),
            GridData::Real(g) => g.shape(),
        }
    }

    /// Real grids pass through; complex grids become magnitudes.
    pub fn to_magnitude(&self) -> RealGrid {
        match self {
            GridData::Complex(g) => g.magnitude(),
            GridData::Real(g) => g.clone(),
        }
    }

    fn tag(&self) -> u8 {
        match self {
            GridData::Complex(g) => match g.domain() {
                Domain::Image => TAG_IMAGE,
                Domain::KSpace => TAG_KSPACE,
            },
            GridData::Real(_) => TAG_REAL,
        }
    }
}

impl From<ComplexGrid> for GridData {
    fn from(g: ComplexGrid) -> Self {
        GridData::Complex(g)
    }
}

impl From<RealGrid> for GridData {
    fn from(g: RealGrid) -> Self {
        GridData::Real(g)
    }
}

/// Serializes one record. Values are stored as `f32`.
pub fn encode_grid(grid: &GridData) -> Vec<u8> {
    let (h, w) = grid.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + h * w * 8);
    out.extend_from_slice(&GRID_MAGIC);
    out.extend_from_slice(&GRID_VERSION.to_le_bytes());
    out.push(grid.tag());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    match grid {
        GridData::Complex(g) => {
            for z in g.data() {
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
        GridData::Real(g) => {
            for v in g.data() {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    out
}

struct Header {
    tag: u8,
    height: usize,
    width: usize,
    payload: usize,
}

fn parse_header(bytes: &[u8; HEADER_LEN], path: &Path) -> Result<Header> {
    let magic: [u8; 4] = bytes[0..4].try_into().expect("slice of 4");
    if magic != GRID_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found: magic,
            expected: GRID_MAGIC,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("slice of 4"));
    if version != GRID_VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let tag = bytes[8];
    if tag > TAG_REAL {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unknown domain tag {tag}"),
        });
    }
    let h = u32::from_le_bytes(bytes[9..13].try_into().expect("slice of 4")) as u64;
    let w = u32::from_le_bytes(bytes[13..17].try_into().expect("slice of 4")) as u64;
    if h == 0 || w == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("empty grid {h}x{w}"),
        });
    }
    let floats_per = if tag == TAG_REAL { 4u64 } else { 8u64 };
    let payload = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(floats_per))
        .filter(|&n| n <= isize::MAX as u64)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or(Error::DimensionOverflow {
            path: path.to_path_buf(),
            height: h,
            width: w,
        })?;
    Ok(Header {
        tag,
        height: h as usize,
        width: w as usize,
        payload,
    })
}

fn decode_payload(header: &Header, payload: &[u8], path: &Path) -> Result<GridData> {
    let floats = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64);
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if header.tag == TAG_REAL {
        let data: Vec<f64> = floats.collect();
        RealGrid::new(header.height, header.width, data)
            .map(GridData::Real)
            .map_err(|e| bad(e.to_string()))
    } else {
        let vals: Vec<f64> = floats.collect();
        let data = vals.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let domain = if header.tag == TAG_IMAGE {
            Domain::Image
        } else {
            Domain::KSpace
        };
        ComplexGrid::new(header.height, header.width, domain, data)
            .map(GridData::Complex)
            .map_err(|e| bad(e.to_string()))
    }
}

/// Reads the next record, or `None` at a clean end of stream.
fn read_record(reader: &mut impl Read, path: &Path) -> Result<Option<GridData>> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = reader.read(&mut header[got..]).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        got += n;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            found: got,
        });
    }
    let header = parse_header(&header, path)?;
    let mut payload = Vec::new();
    reader
        .take(header.payload as u64)
        .read_to_end(&mut payload)
        .map_err(|e| Error::io(path, e))?;
    if payload.len() < header.payload {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: header.payload,
            found: payload.len(),
        });
    }
    decode_payload(&header, &payload, path).map(Some)
}

fn read_records(path: &Path, expected: usize) -> Result<Vec<GridData>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut out = Vec::with_capacity(expected);
    for i in 0..expected {
        match read_record(&mut reader, path)? {
            Some(g) => out.push(g),
            None => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("expected {expected} grid records, found {i}"),
                })
            }
        }
    }
    let mut extra = [0u8; 1];
    if reader.read(&mut extra).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "trailing bytes after payload".into(),
        });
    }
    Ok(out)
}

/// Decodes a single in-memory record; `path` only labels errors.
pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<GridData> {
    let mut cursor = bytes;
    let grid = read_record(&mut cursor, path)?.ok_or(Error::Truncated {
        path: path.to_path_buf(),
        expected: HEADER_LEN,
        found: 0,
    })?;
    if !cursor.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("{} trailing bytes after payload", cursor.len()),
        });
    }
    Ok(grid)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridData> {
    let path = path.as_ref();
    Ok(read_records(path, 1)?.remove(0))
}

fn write_bytes(path: &Path, chunks: &[Vec<u8>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in chunks {
        w.write_all(c).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_grid(grid: &GridData, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &[encode_grid(grid)])
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<ComplexGrid> {
    let path = path.as_ref();
    match read_grid(path)? {
        GridData::Complex(g) => Ok(g),
        GridData::Real(_) => Err(Error::Format {
            path: path.to_path_buf(),
            reason: "expected a complex grid, found a real one".into(),
        }),
    }
}

pub fn read_real(path: impl AsRef<Path>) -> Result<RealGrid> {
    let path = path.as_ref();
    match read_grid(path)? {
        GridData::Real(g) => Ok(g),
        GridData::Complex(_) => Err(Error::Format {
            path: path.to_path_buf(),
            reason: "expected a real grid, found a complex one".into(),
        }),
    }
}

/// A Gaussian prior file holds the k-space mean followed by the variance.
pub fn write_prior(prior: &GaussianPrior, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(
        path.as_ref(),
        &[
            encode_grid(&GridData::Complex(prior.mean().clone())),
            encode_grid(&GridData::Real(prior.variance().clone())),
        ],
    )
}

pub fn read_prior(path: impl AsRef<Path>) -> Result<GaussianPrior> {
    let path = path.as_ref();
    let mut records = read_records(path, 2)?.into_iter();
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    };
    let mean = match records.next() {
        Some(GridData::Complex(g)) if g.domain() == Domain::KSpace => g,
        _ => return Err(bad("prior mean must be a k-space grid")),
    };
    let var = match records.next() {
        Some(GridData::Real(g)) => g,
        _ => return Err(bad("prior variance must be a real grid")),
    };
    GaussianPrior::new(mean, var).map_err(|e| bad(&e.to_string()))
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Mask as a real 0/1 grid plus a `.meta` sidecar with the generation settings.
pub fn write_pattern(pattern: &SamplingPattern, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_grid(&GridData::Real(pattern.mask.to_real()), path)?;
    let mut meta = format!(
        "kind={}\ntarget_r={}\nachieved_r={}\nacs={}\nseed={}\n",
        pattern.kind.name(),
        pattern.target_r,
        pattern.achieved_r,
        pattern.acs,
        pattern.seed
    );
    if let Some(s) = pattern.poisson_scale {
        meta.push_str(&format!("poisson_scale={s}\n"));
    }
    let mp = meta_path(path);
    std::fs::write(&mp, meta).map_err(|e| Error::io(&mp, e))
}

/// Reads a pattern mask; without a sidecar the pattern is treated as a
/// random 2-D pattern whose target equals the achieved acceleration.
pub fn read_pattern(path: impl AsRef<Path>) -> Result<SamplingPattern> {
    let path = path.as_ref();
    let mask = BinaryMask::from_real(&read_real(path)?).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mp = meta_path(path);
    let mut pattern = SamplingPattern::from_mask(PatternKind::Random2D, mask, 1.0, 0, 0)?;
    pattern.target_r = pattern.achieved_r;
    let text = match std::fs::read_to_string(&mp) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(pattern),
        Err(e) => return Err(Error::io(&mp, e)),
    };
    let bad = |reason: String| Error::Format {
        path: mp.clone(),
        reason,
    };
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number for {k}: {v:?}")));
        let int = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("bad integer for {k}: {v:?}")));
        match k {
            "kind" => pattern.kind = PatternKind::parse(v).ok_or_else(|| bad(format!("unknown pattern kind {v:?}")))?,
            "target_r" => pattern.target_r = num(v)?,
            "achieved_r" => {}
            "acs" => pattern.acs = int(v)? as usize,
            "seed" => pattern.seed = int(v)?,
            "poisson_scale" => pattern.poisson_scale = Some(num(v)?),
            _ => return Err(bad(format!("unknown key {k:?}"))),
        }
    }
    Ok(pattern)
}
