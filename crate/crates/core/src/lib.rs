//! Finite-scale C*-categories and their spectra.
//!
//! Commutative full C*-categories are modelled by structure constants over
//! finite-dimensional hom-spaces; their spectra are spaceoids, rank-one Fell
//! bundles over a finite point set times a finite object set. The crate
//! computes the spectrum and the sections functor between the two, the
//! Gel'fand transform, and the conversions from spaceoids to enriched Fell
//! bundles over line bundles or one-dimensional C*-categories.
//!
//! Everything numeric is generic over `f32` and `f64`; the aliases below fix
//! the scalar for the common cases.

pub mod cstar;
pub mod enriched;
pub mod error;
pub mod monoidal;
pub mod numlin;
pub mod scalar;
pub mod spaceoid;
pub mod spectra;
pub mod textio;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CStarCategory64 = cstar::CStarCategory<f64>;
pub type CStarCategory32 = cstar::CStarCategory<f32>;
pub type Spaceoid64 = spaceoid::Spaceoid<f64>;
pub type Spaceoid32 = spaceoid::Spaceoid<f32>;
pub type SpaceoidMorphism64 = spaceoid::SpaceoidMorphism<f64>;
pub type SpaceoidMorphism32 = spaceoid::SpaceoidMorphism<f32>;
pub type StarFunctor64 = cstar::StarFunctor<f64>;
pub type StarFunctor32 = cstar::StarFunctor<f32>;
pub type CMatrix64 = numlin::CMatrix<f64>;
pub type CMatrix32 = numlin::CMatrix<f32>;
pub type Report64 = cstar::Report<f64>;
pub type LineFellBundle64 = enriched::EnrichedBundle<f64, monoidal::LineBundles>;
pub type CField64 = enriched::EnrichedBundle<f64, monoidal::OneDimCats>;
