use crate::grid::CellId;
use crate::nn::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Generator,
    Discriminator,
}

/// Published state of one network: the unit exchanged between cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot<T> {
    pub params: ModelParams<T>,
    pub role: Role,
    pub learning_rate: f64,
    pub origin: CellId,
    pub version: u64,
}
