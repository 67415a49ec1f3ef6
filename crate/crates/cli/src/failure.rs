//! Error classification for process exit codes.

use std::fmt;

use copyguard::dpo::DpoError;
use copyguard::eval::EvalError;
use copyguard::index::IndexError;
use copyguard::lm::LmError;
use copyguard::metrics::MetricError;
use copyguard::pipeline::PipelineError;
use copyguard::toy::ToyError;
use copyguard::VocabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags or parameter values.
    Usage,
    /// Missing, malformed or empty inputs.
    Data,
    /// The remote model endpoint failed.
    Remote,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Remote => 3,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind,
            error: error.into(),
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Self::new(Kind::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self::new(Kind::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn context(self, msg: String) -> Self {
        Self {
            kind: self.kind,
            error: self.error.context(msg),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub trait Context<T> {
    fn ctx(self, msg: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn ctx(self, msg: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| e.into().context(msg.to_string()))
    }
}

fn lm_kind(e: &LmError) -> Kind {
    if e.is_remote() {
        Kind::Remote
    } else if matches!(e, LmError::InvalidConfig(_)) {
        Kind::Usage
    } else {
        Kind::Data
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(Kind::Data, e)
            }
        }
    )*};
}

data_errors!(std::io::Error, serde_json::Error, IndexError, VocabError, MetricError);

impl From<LmError> for Failure {
    fn from(e: LmError) -> Self {
        Failure::new(lm_kind(&e), e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let kind = match &e {
            _ if e.is_remote() => Kind::Remote,
            PipelineError::Lm(inner) => lm_kind(inner),
            PipelineError::InvalidFraction(_) => Kind::Usage,
            _ => Kind::Data,
        };
        Failure::new(kind, e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let kind = match &e {
            EvalError::Lm(inner) => lm_kind(inner),
            EvalError::Unknown { .. } => Kind::Usage,
            _ => Kind::Data,
        };
        Failure::new(kind, e)
    }
}

impl From<DpoError> for Failure {
    fn from(e: DpoError) -> Self {
        let kind = match &e {
            DpoError::Lm(inner) => lm_kind(inner),
            DpoError::InvalidConfig(_) => Kind::Usage,
            _ => Kind::Data,
        };
        Failure::new(kind, e)
    }
}

impl From<ToyError> for Failure {
    fn from(e: ToyError) -> Self {
        match e {
            ToyError::Pipeline(e) => e.into(),
            ToyError::Dpo(e) => e.into(),
            ToyError::Eval(e) => e.into(),
            ToyError::Lm(e) => e.into(),
            e @ ToyError::InvalidConfig(_) => Failure::new(Kind::Usage, e),
        }
    }
}
