//! State bundle persistence: a directory with `state.json` (metadata,
//! config hash, module versions) plus BQFL field dumps for `T`, `v`, `u`
//! and `p`. A bundle contains everything needed to re-audit a state: the
//! extended fields are deterministic functions of `(c, T, v)` and are
//! reconstructed on load.

use anyhow::{anyhow, Context, Result};
use bqwave::fields::dump;
use bqwave::fields::{ChannelGrid, ScalarField, VectorField};
use bqwave::geometry::{CpwConvention, CrossSection, OriginConvention, PhysParams};
use bqwave::reaction::NonlinearitySpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

pub const STATE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateMeta {
    pub format: String,
    pub format_version: u32,
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub c: f64,
    pub tau: f64,
    pub a: f64,
    pub axial_cells: usize,
    pub margin_cells: usize,
    pub geometry_kind: String,
    pub ly: f64,
    pub lz: f64,
    pub ny: usize,
    pub nz: usize,
    pub polygon: Option<Vec<[f64; 2]>>,
    pub origin: String,
    pub cpw_convention: String,
    pub nu: f64,
    pub rho: [f64; 3],
    pub d: u8,
    pub reaction_family: String,
    pub reaction_k: f64,
    pub theta0: f64,
    pub extension_order: u32,
    pub slack: f64,
    pub degenerate: bool,
    pub reaction_integral: f64,
}

pub struct LoadedState {
    pub meta: StateMeta,
    pub grid: ChannelGrid,
    pub params: PhysParams,
    pub t: ScalarField,
    pub v: VectorField,
    pub u: VectorField,
    pub p: ScalarField,
}

pub fn write_state(
    dir: &Path,
    meta: &StateMeta,
    t: &ScalarField,
    v: &VectorField,
    u: &VectorField,
    p: &ScalarField,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(dir.join("state.json"), json + "\n")?;
    dump::write_scalar(&dir.join("t.bqfl"), t)?;
    dump::write_vector(dir, "v", v)?;
    dump::write_vector(dir, "u", u)?;
    dump::write_scalar(&dir.join("p.bqfl"), p)?;
    Ok(())
}

pub fn load_state(dir: &Path) -> Result<LoadedState> {
    let meta_text = std::fs::read_to_string(dir.join("state.json"))
        .with_context(|| format!("cannot read {}/state.json", dir.display()))?;
    let meta: StateMeta = serde_json::from_str(&meta_text).context("malformed state.json")?;
    if meta.format != "bqwave-state" || meta.format_version != STATE_FORMAT_VERSION {
        return Err(anyhow!(
            "unsupported state format {}/{}",
            meta.format,
            meta.format_version
        ));
    }
    let mut cross = match meta.geometry_kind.as_str() {
        "rectangle" => CrossSection::build_rectangle(meta.ly, meta.lz, meta.ny, meta.nz)?,
        "polygon" => CrossSection::build_polygon(
            meta.polygon
                .clone()
                .ok_or_else(|| anyhow!("polygon kind without vertices"))?,
            meta.ny,
            meta.nz,
        )?,
        other => return Err(anyhow!("unknown geometry kind '{other}'")),
    };
    cross.origin_convention = match meta.origin.as_str() {
        "centroid" => OriginConvention::Centroid,
        _ => OriginConvention::AsGiven,
    };
    cross.cpw_convention = match meta.cpw_convention.as_str() {
        "literal" => CpwConvention::Literal,
        _ => CpwConvention::Sharp,
    };
    let grid = ChannelGrid::with_margin_cells(
        Arc::new(cross),
        meta.a,
        meta.axial_cells,
        meta.margin_cells,
    )?;
    let family = match meta.reaction_family.as_str() {
        "quadratic" => bqwave::reaction::NonlinearityFamily::Quadratic,
        _ => bqwave::reaction::NonlinearityFamily::Hat,
    };
    let params = PhysParams {
        nu: meta.nu,
        rho: meta.rho,
        d: meta.d,
        reaction: NonlinearitySpec {
            family,
            k: meta.reaction_k,
            theta0: meta.theta0,
        },
    };
    let t = dump::read_scalar(&dir.join("t.bqfl"))?;
    let v = dump::read_vector(dir, "v")?;
    let u = dump::read_vector(dir, "u")?;
    let p = dump::read_scalar(&dir.join("p.bqfl"))?;
    if t.nxv != grid.nx_temp + 1 || v.nx != grid.nx_temp || u.nx != grid.nx_flow {
        return Err(anyhow!("field dumps do not match the grid in state.json"));
    }
    Ok(LoadedState {
        meta,
        grid,
        params,
        t,
        v,
        u,
        p,
    })
}
