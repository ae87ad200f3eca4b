//! Corruption processes that turn nominal samples into stand-in anomalies.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result, Tensor};

/// How corrupted samples are produced from nominal rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CorruptionProcess {
    Gaussian {
        #[serde(default = "unit")]
        sigma: f64,
    },
    PatchShuffle {
        #[serde(default = "four")]
        patch: usize,
        #[serde(default = "twenty_eight")]
        side: usize,
    },
}

fn unit() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

fn twenty_eight() -> usize {
    28
}

impl CorruptionProcess {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorruptionProcess::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::Config(format!(
                    "corruption sigma {sigma} must be finite and nonnegative"
                )))
            }
            CorruptionProcess::PatchShuffle { patch, side } if patch == 0 || side % patch != 0 => {
                Err(Error::Config(format!(
                    "patch size {patch} does not divide side {side}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, batch: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        match *self {
            CorruptionProcess::Gaussian { sigma } => gaussian_corrupt(batch, sigma, rng),
            CorruptionProcess::PatchShuffle { patch, side } => {
                patch_shuffle(batch, patch, side, rng)
            }
        }
    }
}

/// `batch + ε` with `ε` i.i.d. `N(0, sigma²)` per coordinate.
pub fn gaussian_corrupt(batch: &Tensor, sigma: f64, rng: &mut Rng) -> Result<Tensor> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Contract(format!(
            "sigma {sigma} must be finite and nonnegative"
        )));
    }
    if sigma == 0.0 {
        return Ok(batch.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut out = batch.clone();
    for v in out.data_mut() {
        *v += normal.sample(rng);
    }
    Ok(out)
}

/// Splits every `side × side` image into `patch × patch` tiles and places them
/// in a fresh uniformly random order.
pub fn patch_shuffle(batch: &Tensor, patch: usize, side: usize, rng: &mut Rng) -> Result<Tensor> {
    Ok(patch_shuffle_logged(batch, patch, side, rng)?.0)
}

/// Like [`patch_shuffle`], also returning each row's permutation: tile `k` of
/// the output is tile `perm[k]` of the input, tiles numbered row-major.
pub fn patch_shuffle_logged(
    batch: &Tensor,
    patch: usize,
    side: usize,
    rng: &mut Rng,
) -> Result<(Tensor, Vec<Vec<usize>>)> {
    check_tiling(batch, patch, side)?;
    let tiles = (side / patch) * (side / patch);
    let mut out = batch.clone();
    let mut perms = Vec::with_capacity(batch.rows());
    for i in 0..batch.rows() {
        let mut perm: Vec<usize> = (0..tiles).collect();
        perm.shuffle(rng);
        permute_row(batch.row(i), out.row_mut(i), &perm, patch, side);
        perms.push(perm);
    }
    Ok((out, perms))
}

/// Applies given tile permutations, one per row, in the convention of
/// [`patch_shuffle_logged`].
pub fn apply_patch_permutation(
    batch: &Tensor,
    perms: &[Vec<usize>],
    patch: usize,
    side: usize,
) -> Result<Tensor> {
    check_tiling(batch, patch, side)?;
    let tiles = (side / patch) * (side / patch);
    if perms.len() != batch.rows() {
        return Err(Error::Contract(format!(
            "{} permutations for {} rows",
            perms.len(),
            batch.rows()
        )));
    }
    let mut out = batch.clone();
    for (i, perm) in perms.iter().enumerate() {
        let mut seen = vec![false; tiles];
        if perm.len() != tiles
            || !perm
                .iter()
                .all(|&k| k < tiles && !std::mem::replace(&mut seen[k], true))
        {
            return Err(Error::Contract(format!(
                "row {i}: not a permutation of {tiles} tiles"
            )));
        }
        permute_row(batch.row(i), out.row_mut(i), perm, patch, side);
    }
    Ok(out)
}

fn check_tiling(batch: &Tensor, patch: usize, side: usize) -> Result<()> {
    if patch == 0 || side % patch != 0 {
        return Err(Error::Contract(format!(
            "patch size {patch} does not divide side {side}"
        )));
    }
    if batch.cols() != side * side {
        return Err(Error::Contract(format!(
            "rows of length {} are not {side}×{side} images",
            batch.cols()
        )));
    }
    Ok(())
}

fn permute_row(src: &[f64], dst: &mut [f64], perm: &[usize], patch: usize, side: usize) {
    let per_side = side / patch;
    for (k, &from) in perm.iter().enumerate() {
        let (dr, dc) = (k / per_side * patch, k % per_side * patch);
        let (sr, sc) = (from / per_side * patch, from % per_side * patch);
        for r in 0..patch {
            let d = (dr + r) * side + dc;
            let s = (sr + r) * side + sc;
            dst[d..d + patch].copy_from_slice(&src[s..s + patch]);
        }
    }
}
