//! Text encoding, from-scratch classifiers and audience matching for
//! delivering peer-authored interventions to pro-tobacco posters.

pub mod audience;
pub mod corpus;
pub mod models;
pub mod synth;
pub mod text;
