pub mod camera;
pub mod cli;
pub mod codec;
pub mod depth;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod linop;
pub mod pipeline;
pub mod prox;
pub mod scene;
pub mod solver;
pub mod warp;

pub use error::{Error, Result};
