use thiserror::Error;

/// Errors raised while building, reading or validating a [`crate::MixedMesh`].
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{entity} {id}: {message}")]
    Invariant {
        entity: &'static str,
        id: usize,
        message: String,
    },
    #[error("invalid mesh input: {0}")]
    InvalidInput(String),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MeshError {
    pub(crate) fn invariant(entity: &'static str, id: usize, message: impl Into<String>) -> Self {
        MeshError::Invariant {
            entity,
            id,
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        MeshError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Errors raised by the physics stages and the time stepper.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular linear system in {stage}")]
    Singular { stage: &'static str },
    #[error("non-finite value in {stage}")]
    NonFinite { stage: &'static str },
    #[error("stage {stage} failed at t = {time}: {source}")]
    Stage {
        stage: &'static str,
        time: f64,
        #[source]
        source: Box<SimError>,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
