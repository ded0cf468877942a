pub mod ihopt;
pub mod instance;
pub mod pipeline;
pub mod sampler;
pub mod sep;
pub mod tsp;
