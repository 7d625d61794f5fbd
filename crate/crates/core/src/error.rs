use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A (state, input, output) tuple with zero probability under the channel law.
    #[error("infeasible channel tuple: state={state}, input={input}, output={output}")]
    InfeasibleTuple { state: u8, input: u8, output: u8 },

    #[error("impossible observation: output {output} has zero probability")]
    ImpossibleObservation { output: usize },

    #[error("invalid belief {0}: must lie in [0, 1]")]
    InvalidBelief(f64),

    #[error("invalid action (delta={delta}, gamma={gamma}) for belief z={z}")]
    InvalidAction { z: f64, delta: f64, gamma: f64 },

    #[error("invalid stochastic matrix: {0}")]
    InvalidMatrix(String),

    #[error("policy defined on [b1, b4] only, got z={0}")]
    OutsidePolicyDomain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block length {0} is not supported (codebook size overflows u128 beyond N={max})", max = crate::codec::MAX_BLOCK_LENGTH)]
    BlockLengthTooLarge(usize),

    #[error(
        "message index {index} out of range for block length {block_length} ({size} codewords)"
    )]
    MessageOutOfRange {
        index: u128,
        block_length: usize,
        size: u128,
    },

    #[error("invalid action sequence: {0}")]
    InvalidSequence(String),

    #[error("flush did not reveal the channel state within {0} uses")]
    FlushCapExceeded(usize),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
