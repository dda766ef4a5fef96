//! Graph learning for hardware designs.
//!
//! Verilog sources become syntax trees or data-flow graphs ([`hwgraph`]),
//! graphs become one-hot tensors ([`graphdata`]), a graph neural network
//! built on a small autodiff engine ([`nncore`], [`graph2vec`]) embeds them,
//! and [`learnpipe`] trains Trojan classifiers and piracy detectors.
//!
//! Numeric code is generic over [`nncore::Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

mod binio;
pub mod graph2vec;
pub mod graphdata;
pub mod hwgraph;
pub mod learnpipe;
pub mod nncore;
pub mod synth;

pub type DefaultScalar = f64;
pub type Matrix = nncore::Matrix<DefaultScalar>;
pub type Tape = nncore::Tape<DefaultScalar>;
pub type ParamStore = nncore::ParamStore<DefaultScalar>;
pub type GnnModel = graph2vec::GnnModel<DefaultScalar>;
pub type GraphTensors = graphdata::GraphTensors<DefaultScalar>;
pub type Checkpoint = learnpipe::Checkpoint<DefaultScalar>;
