//! Chunk payload of one quadtree node.
//!
//! Layout (little-endian): `[version u8 = 1][tag u8][level u32]` followed by
//! four `u64` child handles (tag 1, branch) or a leaf encoding (tag 0, leaf).
//! Children are ordered NW, NE, SW, SE.

use quadmat_runtime::ChunkId;

use crate::MatrixError;

pub const NODE_FORMAT_VERSION: u8 = 1;

const TAG_LEAF: u8 = 0;
const TAG_BRANCH: u8 = 1;
const HEADER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadNode<'a> {
    Leaf { level: u32, payload: &'a [u8] },
    Branch { level: u32, children: [ChunkId; 4] },
}

impl<'a> QuadNode<'a> {
    pub fn decode(bytes: &'a [u8]) -> Result<Self, MatrixError> {
        if bytes.len() < HEADER {
            return Err(MatrixError::Corrupt(format!(
                "{} bytes is shorter than a node header",
                bytes.len()
            )));
        }
        if bytes[0] != NODE_FORMAT_VERSION {
            return Err(MatrixError::Corrupt(format!(
                "unsupported node format version {}",
                bytes[0]
            )));
        }
        let level = u32::from_le_bytes(bytes[2..6].try_into().unwrap());
        let body = &bytes[HEADER..];
        match bytes[1] {
            TAG_LEAF => Ok(QuadNode::Leaf { level, payload: body }),
            TAG_BRANCH if body.len() == 32 => {
                let children = std::array::from_fn(|i| {
                    ChunkId::from_raw(u64::from_le_bytes(body[8 * i..8 * i + 8].try_into().unwrap()))
                });
                Ok(QuadNode::Branch { level, children })
            }
            t => Err(MatrixError::Corrupt(format!(
                "bad node tag {t} with {} body bytes",
                body.len()
            ))),
        }
    }

    pub fn level(&self) -> u32 {
        match *self {
            QuadNode::Leaf { level, .. } | QuadNode::Branch { level, .. } => level,
        }
    }
}

fn header(tag: u8, level: u32, extra: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + extra);
    out.push(NODE_FORMAT_VERSION);
    out.push(tag);
    out.extend_from_slice(&level.to_le_bytes());
    out
}

pub fn encode_branch(level: u32, children: &[ChunkId; 4]) -> Vec<u8> {
    let mut out = header(TAG_BRANCH, level, 32);
    for c in children {
        out.extend_from_slice(&c.to_raw().to_le_bytes());
    }
    out
}

/// Wraps an encoded leaf in a node header.
pub fn encode_leaf_with(level: u32, encode: impl FnOnce(&mut Vec<u8>)) -> Vec<u8> {
    let mut out = header(TAG_LEAF, level, 0);
    encode(&mut out);
    out
}
