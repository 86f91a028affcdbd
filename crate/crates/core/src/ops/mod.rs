//! Task types implementing matrix operations one quadtree level at a time.
//!
//! Every matrix task takes the node level as its first parameter. Branch
//! inputs spawn child tasks per quadrant and forward to an `assemble` task;
//! leaf inputs call the leaf kernels. Nil inputs take the fallback path.

mod arith;
mod cholesky;
mod elements;
mod multiply;
mod truncate;

use std::marker::PhantomData;
use std::sync::Arc;

use quadmat_runtime::{Arg, ChunkId, TaskContext, TaskError, TaskKind, TaskOutput, TaskRegistry};

use crate::leaf::{LeafConfig, LeafMatrix};
use crate::node::{encode_branch, encode_leaf_with, QuadNode};
use crate::{MatrixError, MatrixParams};

pub(crate) use multiply::{product_params, Operand};
pub use truncate::drop_threshold;

/// Task type names.
pub mod names {
    pub const ASSEMBLE: &str = "assemble";
    pub const ADD: &str = "add";
    pub const SCALE: &str = "scale";
    pub const ADD_IDENTITY: &str = "add_identity";
    pub const MULTIPLY: &str = "multiply";
    pub const SPAMM: &str = "spamm";
    pub const SPAMM_SELECT: &str = "spamm_select";
    pub const NORM2: &str = "norm2";
    pub const SUM: &str = "sum";
    pub const CENSUS: &str = "census";
    pub const CONCAT: &str = "concat";
    pub const TRUNCATE_BELOW: &str = "truncate_below";
    pub const INV_CHOL: &str = "inv_chol";
    pub const ASSIGN: &str = "assign";
    pub const EXTRACT: &str = "extract";
}

/// Matrix shape plus leaf shape; fixed for all tasks of one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub params: MatrixParams,
    pub leaf: LeafConfig,
}

pub(crate) enum Node<L> {
    Leaf(L),
    Branch([ChunkId; 4]),
}

pub(crate) struct Env<'a, 'e, L> {
    ctx: &'a TaskContext<'e>,
    geom: &'a Geometry,
    _leaf: PhantomData<fn() -> L>,
}

impl<L: LeafMatrix> Env<'_, '_, L> {
    /// Reads and decodes a non-nil node, checking it sits at `level`.
    pub fn read(&self, id: ChunkId, level: u32) -> Result<Node<L>, MatrixError> {
        let chunk = self.ctx.get_chunk(id)?;
        let node = QuadNode::decode(chunk.payload())?;
        if node.level() != level {
            return Err(MatrixError::Corrupt(format!(
                "expected level {level}, found {}",
                node.level()
            )));
        }
        Ok(match node {
            QuadNode::Leaf { payload, .. } => Node::Leaf(L::decode(payload)?),
            QuadNode::Branch { children, .. } => Node::Branch(children),
        })
    }

    pub fn raw(&self, id: ChunkId) -> Result<Arc<quadmat_runtime::Chunk>, MatrixError> {
        Ok(self.ctx.get_chunk(id)?)
    }

    pub fn put_leaf(&self, level: u32, leaf: &L) -> Result<ChunkId, MatrixError> {
        if leaf.is_zero() {
            return Ok(ChunkId::NIL);
        }
        Ok(self.ctx.register_chunk(encode_leaf_with(level, |o| leaf.encode(o)))?)
    }

    pub fn put_bytes(&self, bytes: Vec<u8>) -> Result<ChunkId, MatrixError> {
        if bytes.is_empty() {
            return Ok(ChunkId::NIL);
        }
        Ok(self.ctx.register_chunk(bytes)?)
    }

    pub fn spawn(&self, name: &str, inputs: Vec<Arg>, params: Vec<f64>) -> Result<Arg, MatrixError> {
        Ok(Arg::Future(self.ctx.register_task(name, inputs, params)?))
    }

    /// Spawns `name` unless `id` is nil, in which case the result is nil.
    pub fn spawn_on(&self, name: &str, id: ChunkId, params: Vec<f64>) -> Result<Arg, MatrixError> {
        if id.is_nil() {
            return Ok(Arg::Chunk(ChunkId::NIL));
        }
        self.spawn(name, vec![id.into()], params)
    }

    /// Result made of four quadrants, some possibly still pending.
    pub fn assemble(&self, level: u32, kids: [Arg; 4]) -> Result<TaskOutput, MatrixError> {
        let ready: Option<Vec<ChunkId>> = kids
            .iter()
            .map(|a| match a {
                Arg::Chunk(c) => Some(*c),
                Arg::Future(_) => None,
            })
            .collect();
        match ready {
            Some(ids) => Ok(TaskOutput::Chunk(put_branch(
                self.ctx,
                level,
                &ids.try_into().unwrap(),
            )?)),
            None => {
                let h = self
                    .ctx
                    .register_task(names::ASSEMBLE, kids.to_vec(), vec![level as f64])?;
                Ok(TaskOutput::Forward(h))
            }
        }
    }
}

pub(crate) fn put_branch(ctx: &TaskContext<'_>, level: u32, kids: &[ChunkId; 4]) -> Result<ChunkId, MatrixError> {
    if kids.iter().all(|k| k.is_nil()) {
        return Ok(ChunkId::NIL);
    }
    Ok(ctx.register_chunk(encode_branch(level, kids))?)
}

pub(crate) fn level_of(params: &[f64]) -> u32 {
    params[0] as u32
}

pub(crate) fn nil() -> Arg {
    Arg::Chunk(ChunkId::NIL)
}

type Body<L> = for<'a, 'e> fn(&Env<'a, 'e, L>, &[ChunkId], &[f64]) -> Result<TaskOutput, MatrixError>;

struct Op<L> {
    name: &'static str,
    geom: Arc<Geometry>,
    run: Body<L>,
    fallback: Body<L>,
}

impl<L: LeafMatrix> Op<L> {
    fn call(
        &self,
        body: Body<L>,
        ctx: &TaskContext<'_>,
        inputs: &[ChunkId],
        params: &[f64],
    ) -> Result<TaskOutput, TaskError> {
        let env = Env {
            ctx,
            geom: &self.geom,
            _leaf: PhantomData,
        };
        body(&env, inputs, params).map_err(|e| Box::new(e) as TaskError)
    }
}

impl<L: LeafMatrix> TaskKind for Op<L> {
    fn name(&self) -> &str {
        self.name
    }

    fn execute(&self, ctx: &mut TaskContext<'_>, inputs: &[ChunkId], params: &[f64]) -> Result<TaskOutput, TaskError> {
        self.call(self.run, ctx, inputs, params)
    }

    fn execute_fallback(
        &self,
        ctx: &mut TaskContext<'_>,
        inputs: &[ChunkId],
        params: &[f64],
    ) -> Result<TaskOutput, TaskError> {
        self.call(self.fallback, ctx, inputs, params)
    }
}

/// Registers every matrix task type for leaf type `L`.
pub(crate) fn install<L: LeafMatrix>(registry: &mut TaskRegistry, geom: Geometry) {
    let geom = Arc::new(geom);
    let table: [(&'static str, Body<L>, Body<L>); 15] = [
        (names::ASSEMBLE, arith::assemble, arith::assemble),
        (names::ADD, arith::add, arith::add_fallback),
        (names::SCALE, arith::scale, arith::nil_result),
        (names::ADD_IDENTITY, arith::add_identity, arith::add_identity_fallback),
        (names::MULTIPLY, multiply::multiply, multiply::multiply_fallback),
        (names::SPAMM, multiply::spamm, arith::nil_result),
        (names::SPAMM_SELECT, multiply::spamm_select, multiply::spamm_select),
        (names::NORM2, multiply::norm2, arith::nil_result),
        (names::SUM, multiply::sum, multiply::sum),
        (names::CENSUS, truncate::census, arith::nil_result),
        (names::CONCAT, truncate::concat, truncate::concat),
        (names::TRUNCATE_BELOW, truncate::truncate_below, arith::nil_result),
        (names::INV_CHOL, cholesky::inv_chol, cholesky::inv_chol_fallback),
        (names::ASSIGN, elements::assign, elements::assign),
        (names::EXTRACT, elements::extract, arith::nil_result),
    ];
    for (name, run, fallback) in table {
        registry.register(Op::<L> {
            name,
            geom: Arc::clone(&geom),
            run,
            fallback,
        });
    }
}
