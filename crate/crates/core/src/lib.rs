pub mod error;
pub mod formats;
pub mod identify;
pub mod matrixcore;
pub mod model;
pub mod moments;
pub mod refixtures;
pub mod restrictions;
pub mod scalar;
pub mod yulewalker;

pub use error::{Error, Result};
pub use matrixcore::{Mat, TolPolicy};
pub use model::{StabilityReport, SvarModel};
pub use restrictions::{
    CompileOptions, NoiseParametrization, NoiseRestrictionSet, RestrictionEntry, RestrictionSpec,
    SystemRestrictionSet, Target,
};

pub type Mat64 = Mat<f64>;
pub type SvarModel64 = SvarModel<f64>;
