pub mod dual;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod numeric;
pub mod primal;
pub mod scalar_oracle;
pub mod solver;

pub use error::{Result, SnlError};
