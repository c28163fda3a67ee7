//! Exact construction of the random Cantor sets and their interval geometry.

mod alphabet;
mod approx;
mod interval;
mod regularity;

pub use alphabet::{
    binomial, enumerate_alphabets, enumerate_alphabets_capped, sample_alphabet, Alphabet,
    Combinations, DEFAULT_ENUMERATION_CAP,
};
pub use approx::{
    build_cantor, hausdorff_dim, refine, refine_shared, CantorApprox, EnsembleKind, EnsembleSpec,
    LevelAlphabets, Limits,
};
pub use interval::{intervals, neighborhood, symdiff_measure, Interval, IntervalSet};
pub use regularity::{audit_intervals, regularity_over, verify_regularity, Audit, RegularityReport};
