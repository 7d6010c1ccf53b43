pub mod attainment;
pub mod cf;
pub mod datagen;
pub mod evalstats;
pub mod fixtures;
pub mod graphstore;
pub mod queryexec;
pub mod querylang;
