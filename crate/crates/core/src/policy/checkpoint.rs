//! Binary checkpoint container holding both agents.
//!
//! Layout, all integers little-endian: magic, version (u32), agent count (u32), then per
//! agent a role byte, layer count (u32), (inputs, outputs) pairs (u32 each), parameter
//! count (u64) and the parameters as f64. A SHA-256 digest of everything before it closes
//! the file.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::net::{PolicyNet, Role, SHAPES};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MRTAGENT";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

fn encode_agent(out: &mut Vec<u8>, role: Role, shapes: &[(usize, usize)], params: &[f64]) {
    out.push(match role {
        Role::Planner => 0,
        Role::Executor => 1,
    });
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for &(i, o) in shapes {
        out.extend_from_slice(&(i as u32).to_le_bytes());
        out.extend_from_slice(&(o as u32).to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
}

fn seal(mut body: Vec<u8>) -> Vec<u8> {
    let digest = Sha256::digest(&body);
    body.extend_from_slice(&digest);
    body
}

fn encode_raw(agents: &[(Role, &[(usize, usize)], &[f64])]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(agents.len() as u32).to_le_bytes());
    for (role, shapes, params) in agents {
        encode_agent(&mut out, *role, shapes, params);
    }
    seal(out)
}

pub fn encode(planner: &PolicyNet, executor: &PolicyNet) -> Vec<u8> {
    encode_raw(&[
        (Role::Planner, &SHAPES, planner.params()),
        (Role::Executor, &SHAPES, executor.params()),
    ])
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::CorruptCheckpoint("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn decode_agent(r: &mut Reader<'_>, expected: Role) -> Result<PolicyNet> {
    let role = match r.u8()? {
        0 => Role::Planner,
        1 => Role::Executor,
        b => return Err(Error::CorruptCheckpoint(format!("unknown agent tag {b}"))),
    };
    if role != expected {
        return Err(Error::CorruptCheckpoint(format!("expected the {expected}, found the {role}")));
    }
    let n_layers = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(n_layers.min(64));
    for _ in 0..n_layers {
        shapes.push((r.u32()? as usize, r.u32()? as usize));
    }
    if shapes != SHAPES {
        let first = shapes.iter().zip(SHAPES.iter()).position(|(a, b)| a != b);
        let detail = match first {
            Some(i) => format!(
                "{role} layer {i} is {}x{}, expected {}x{}",
                shapes[i].0, shapes[i].1, SHAPES[i].0, SHAPES[i].1
            ),
            None => format!("{role} has {n_layers} layers, expected {}", SHAPES.len()),
        };
        return Err(Error::ShapeMismatch(detail));
    }
    let n = r.u64()? as usize;
    if n != super::net::PARAM_COUNT {
        return Err(Error::ShapeMismatch(format!(
            "{role} stores {n} parameters, expected {}",
            super::net::PARAM_COUNT
        )));
    }
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let p = r.f64()?;
        if !p.is_finite() {
            return Err(Error::CorruptCheckpoint(format!("{role} holds a non-finite parameter")));
        }
        params.push(p);
    }
    PolicyNet::from_params(role, params)
}

pub fn decode(bytes: &[u8]) -> Result<(PolicyNet, PolicyNet)> {
    if bytes.len() < MAGIC.len() + 8 + DIGEST_LEN || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::CorruptCheckpoint("not a checkpoint file".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::CorruptCheckpoint("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::CorruptCheckpoint(format!("unsupported version {version}")));
    }
    if r.u32()? != 2 {
        return Err(Error::CorruptCheckpoint("expected two agents".into()));
    }
    let planner = decode_agent(&mut r, Role::Planner)?;
    let executor = decode_agent(&mut r, Role::Executor)?;
    if r.pos != body.len() {
        return Err(Error::CorruptCheckpoint("trailing data".into()));
    }
    Ok((planner, executor))
}

pub fn save_checkpoint(path: &Path, planner: &PolicyNet, executor: &PolicyNet) -> Result<()> {
    std::fs::write(path, encode(planner, executor))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicyNet, PolicyNet)> {
    decode(&std::fs::read(path)?)
}
