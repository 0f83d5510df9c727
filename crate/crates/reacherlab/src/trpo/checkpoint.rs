//! Flat binary checkpoints: a shape header followed by little-endian
//! f64 parameter arrays for the policy, the critic and the position
//! smoother state.
//!
//! Layout:
//!
//! ```text
//! magic "RLCP" (4) | version u8 = 1 |
//! obs_dim u32 | act_dim u32 | n_hidden u32 | hidden[u32; n_hidden] |
//! smoother_len u32 |
//! policy params [f64] | critic params [f64] | smoother y [f64]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Critic, GaussianPolicy};

const MAGIC: [u8; 4] = *b"RLCP";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint magic")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u8),
    #[error("checkpoint truncated")]
    Truncated,
}

pub fn save_checkpoint(
    path: &Path,
    policy: &GaussianPolicy,
    critic: &Critic,
    smoother_y: &[f64],
) -> Result<(), CheckpointError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    buf.push(VERSION);
    let hidden: Vec<u32> = policy.net.trunk.iter().map(|l| l.out_dim as u32).collect();
    buf.extend_from_slice(&(policy.obs_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(policy.act_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(hidden.len() as u32).to_le_bytes());
    for h in &hidden {
        buf.extend_from_slice(&h.to_le_bytes());
    }
    buf.extend_from_slice(&(smoother_y.len() as u32).to_le_bytes());
    for arr in [policy.net.flat_params(), critic.net.flat_params(), smoother_y.to_vec()] {
        for v in arr {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(GaussianPolicy, Critic, Vec<f64>), CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut off = 0usize;
    let take = |off: &mut usize, n: usize| -> Result<&[u8], CheckpointError> {
        if *off + n > bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        let s = &bytes[*off..*off + n];
        *off += n;
        Ok(s)
    };
    if take(&mut off, 4)? != MAGIC {
        return Err(CheckpointError::Magic);
    }
    let version = take(&mut off, 1)?[0];
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let read_u32 = |off: &mut usize| -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(take(off, 4)?.try_into().unwrap()))
    };
    let obs_dim = read_u32(&mut off)? as usize;
    let act_dim = read_u32(&mut off)? as usize;
    let n_hidden = read_u32(&mut off)? as usize;
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        hidden.push(read_u32(&mut off)? as usize);
    }
    let smoother_len = read_u32(&mut off)? as usize;

    let mut policy = GaussianPolicy::zeroed(obs_dim, act_dim, &hidden);
    let mut critic = Critic {
        net: super::net::Mlp::zeros(obs_dim, &hidden, &[1]),
        obs_dim,
    };
    let read_f64s = |off: &mut usize, n: usize| -> Result<Vec<f64>, CheckpointError> {
        let raw = take(off, n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let p = read_f64s(&mut off, policy.net.param_count())?;
    policy.net.set_flat_params(&p);
    let c = read_f64s(&mut off, critic.net.param_count())?;
    critic.net.set_flat_params(&c);
    let y = read_f64s(&mut off, smoother_len)?;
    Ok((policy, critic, y))
}
