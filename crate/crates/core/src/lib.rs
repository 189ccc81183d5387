pub mod embedding;
pub mod evaluation;
pub mod expansion;
pub mod link_pruning;
pub mod recommender;
pub mod synth;
pub mod taxonomy;
pub mod text;
