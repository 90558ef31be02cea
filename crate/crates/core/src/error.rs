use thiserror::Error;

use crate::inequalities::InequalityError;
use crate::kernel::KernelError;
use crate::measure::MeasureError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error("parameter out of range: {0}")]
    Domain(String),
}
