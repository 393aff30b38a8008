pub mod exact;
pub mod hilbert;
pub mod pilotwave;
pub mod rng;
pub mod circuit;
pub mod inference;
pub mod scenario;
