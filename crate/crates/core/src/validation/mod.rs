//! Synthetic corpus with planted periodicities, noise injection, and
//! scoring of detections against the planted ground truth.

mod generate;
mod noise;
mod scoring;

pub use generate::{
    generate, generate_series, is_exact_repetition, isolated_plant, GeneratorConfig, GroundTruth, Planted,
    SeriesTruth,
};
pub use noise::{inject_noise, inject_noise_with, NoiseKind, NoiseReport};
pub use scoring::{
    characterization_correct, evaluate, evaluate_series, match_detections, noise_seed,
    score_at_levels, score_series, EvalConfig, EvalReport, EvalRow, Matching, PlantedOutcome, SeriesScore,
};
