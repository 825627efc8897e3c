use chronoqa_core::bench::BenchError;
use chronoqa_core::data::DataError;
use chronoqa_core::eval::MismatchError;
use chronoqa_core::gateway::GatewayError;
use chronoqa_core::reasoner::ReasonError;
use chronoqa_core::tel::EvalFailure;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Gateway(String),
    #[error("{0}")]
    Tel(EvalFailure),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Tel(_) => 3,
            CliError::Gateway(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Data(_) | CliError::Tel(_) => "data",
            CliError::Gateway(_) => "gateway",
            CliError::Internal(_) => "internal",
        };
        let mut v = json!({"error": kind, "message": self.to_string(), "exit_code": self.exit_code()});
        if let CliError::Tel(f) = self {
            v["tel_error"] = serde_json::to_value(&f.error).expect("error serializes");
        }
        v
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::InvalidRequest(m) => CliError::Internal(m),
            other => CliError::Gateway(other.to_string()),
        }
    }
}

impl From<ReasonError> for CliError {
    fn from(e: ReasonError) -> Self {
        match e {
            ReasonError::Gateway(g) => g.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Gateway(g) => g.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MismatchError> for CliError {
    fn from(e: MismatchError) -> Self {
        CliError::Data(e.to_string())
    }
}
