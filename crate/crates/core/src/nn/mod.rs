//! Minimal reverse-mode autodiff: dense f64 tensors and an eager tape graph.

pub mod graph;
pub mod tensor;

pub use graph::{sigmoid, Graph, NodeId};
pub use tensor::Tensor;
