//! Trace-kernel attention and multi-head diagnostics.

mod heads;
mod ops;

pub use heads::{
    amalgamated_freeness_deficit, conditional_expectation, haar_head_deficits, multi_head_aggregate, HeadFamily,
    Subalgebra,
};
pub use ops::{
    attention_output, attention_weights, positional_decomposition, similarity_scores, symmetrize, weighted_sum,
    AttentionContext, PositionalTerms,
};
