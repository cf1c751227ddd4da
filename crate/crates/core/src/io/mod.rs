//! Grid files, pattern sidecars, prior files and run configuration.

mod config;
mod gridfile;

pub use config::{MaskSpec, ProviderSpec, RunConfig, SlotSpec, TransformSpec, CONFIG_HELP};
pub use gridfile::{
    decode_grid, encode_grid, meta_path, read_complex, read_grid, read_pattern, read_prior, read_real, write_grid,
    write_pattern, write_prior, GridData, GRID_MAGIC, GRID_VERSION, HEADER_LEN,
};
