use chronoqa_core::gateway::{
    ChatBackend, FixtureStore, LiveBackend, LiveConfig, RecordBackend, ReplayBackend, ScriptedBackend,
};

use crate::config::{self, BackendKind, FileConfig};
use crate::error::CliError;
use crate::GatewayArgs;

fn scripted(args: &GatewayArgs, file: &FileConfig) -> Result<ScriptedBackend, CliError> {
    let path = config::existing(args.script.clone(), &file.script, "script")?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ScriptedBackend::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn live(args: &GatewayArgs, file: &FileConfig) -> Result<LiveBackend, CliError> {
    let mut cfg = LiveConfig::from_env().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.requests_per_minute = args.rate_limit.or(file.rate_limit);
    Ok(LiveBackend::new(cfg)?)
}

/// Builds the configured backend. Every input path is checked here, before
/// any request is sent.
pub fn build(args: &GatewayArgs, file: &FileConfig) -> Result<Box<dyn ChatBackend>, CliError> {
    let kind = args
        .backend
        .or(file.backend)
        .ok_or_else(|| CliError::Config("--backend is required (live, record, replay or scripted)".into()))?;
    Ok(match kind {
        BackendKind::Replay => {
            let dir = args
                .fixtures
                .clone()
                .or_else(|| file.fixtures.clone())
                .ok_or_else(|| CliError::Config("the replay backend needs --fixtures".into()))?;
            let store = FixtureStore::open(&dir).map_err(|e| CliError::Config(e.to_string()))?;
            Box::new(ReplayBackend::new(store))
        }
        BackendKind::Scripted => Box::new(scripted(args, file)?),
        BackendKind::Live => Box::new(live(args, file)?),
        BackendKind::Record => {
            let dir = args
                .fixtures
                .clone()
                .or_else(|| file.fixtures.clone())
                .ok_or_else(|| CliError::Config("the record backend needs --fixtures".into()))?;
            let inner: Box<dyn ChatBackend> = if args.script.is_some() || file.script.is_some() {
                Box::new(scripted(args, file)?)
            } else {
                Box::new(live(args, file)?)
            };
            let store = FixtureStore::create(&dir).map_err(|e| CliError::Config(e.to_string()))?;
            let mut rec = RecordBackend::new(inner, store);
            if let Some(stamp) = &args.record_timestamp {
                rec = rec.with_timestamp(stamp.clone());
            }
            Box::new(rec)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_without_fixtures_is_a_config_error() {
        let args = GatewayArgs { backend: Some(BackendKind::Replay), ..Default::default() };
        let err = build(&args, &FileConfig::default()).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        let args = GatewayArgs {
            backend: Some(BackendKind::Replay),
            fixtures: Some("/definitely/not/here".into()),
            ..Default::default()
        };
        assert_eq!(build(&args, &FileConfig::default()).err().unwrap().exit_code(), 2);
    }

    #[test]
    fn missing_backend_is_a_config_error() {
        let err = build(&GatewayArgs::default(), &FileConfig::default()).err().unwrap();
        assert!(matches!(err, CliError::Config(_)));
    }
}
