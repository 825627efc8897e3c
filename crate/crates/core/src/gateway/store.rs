use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub backend: String,
    pub recorded_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub key: String,
    pub request: ChatRequest,
    pub response: String,
    pub meta: FixtureMeta,
}

/// A directory holding one `<key>.json` file per fixture.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(GatewayError::Store(format!("{} is not a directory", dir.display())));
        }
        Ok(FixtureStore { dir })
    }

    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| GatewayError::Store(format!("{}: {e}", dir.display())))?;
        Ok(FixtureStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<Fixture>, GatewayError> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::Store(format!("{}: {e}", path.display()))),
        };
        let fixture: Fixture = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Store(format!("{}: {e}", path.display())))?;
        if fixture.key != key {
            return Err(GatewayError::Store(format!(
                "{} holds key {}",
                path.display(),
                fixture.key
            )));
        }
        Ok(Some(fixture))
    }

    /// Writes to a temporary file in the same directory, then renames it
    /// into place.
    pub fn put(&self, fixture: &Fixture) -> Result<(), GatewayError> {
        let err = |e: std::io::Error| GatewayError::Store(format!("{}: {e}", self.dir.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        let mut body = serde_json::to_string_pretty(fixture).expect("fixture serializes");
        body.push('\n');
        tmp.write_all(body.as_bytes()).map_err(err)?;
        tmp.persist(self.path(&fixture.key)).map_err(|e| err(e.error))?;
        Ok(())
    }

    /// All fixtures, ordered by key.
    pub fn list(&self) -> Result<Vec<Fixture>, GatewayError> {
        let err = |e: std::io::Error| GatewayError::Store(format!("{}: {e}", self.dir.display()));
        let mut keys = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(err)? {
            let name = entry.map_err(err)?.file_name();
            if let Some(key) = name.to_str().and_then(|n| n.strip_suffix(".json")) {
                keys.push(key.to_string());
            }
        }
        keys.sort();
        keys.iter().filter_map(|k| self.get(k).transpose()).collect()
    }
}

/// Answers only from the fixture store.
pub struct ReplayBackend {
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore) -> Self {
        ReplayBackend { store }
    }
}

impl ChatBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let key = req.key();
        match self.store.get(&key)? {
            Some(f) => Ok(f.response),
            None => Err(GatewayError::MissingFixture { role_tag: req.role_tag, key }),
        }
    }
}

/// Forwards to an inner backend and persists every response.
pub struct RecordBackend {
    inner: Box<dyn ChatBackend>,
    store: FixtureStore,
    recorded_at: Option<String>,
}

impl RecordBackend {
    pub fn new(inner: Box<dyn ChatBackend>, store: FixtureStore) -> Self {
        RecordBackend { inner, store, recorded_at: None }
    }

    /// Pins the `recorded_at` stamp, for reproducible fixture generation.
    pub fn with_timestamp(mut self, stamp: impl Into<String>) -> Self {
        self.recorded_at = Some(stamp.into());
        self
    }
}

impl ChatBackend for RecordBackend {
    fn name(&self) -> &str {
        "record"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let response = self.inner.complete(req)?;
        let recorded_at = self
            .recorded_at
            .clone()
            .unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
        self.store.put(&Fixture {
            key: req.key(),
            request: req.clone(),
            response: response.clone(),
            meta: FixtureMeta { backend: self.inner.name().to_string(), recorded_at },
        })?;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Message, RoleTag, ScriptRule, ScriptedBackend};

    fn req(text: &str) -> ChatRequest {
        ChatRequest::new(RoleTag::Select, vec![Message::user(text)])
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::create(dir.path().join("fx")).unwrap();
        let script = ScriptedBackend::new(vec![ScriptRule::new(RoleTag::Select, &["alpha"], "Answer: B")]);
        let rec = RecordBackend::new(Box::new(script), store.clone()).with_timestamp("2024-01-01T00:00:00Z");
        assert_eq!(rec.complete(&req("alpha question")).unwrap(), "Answer: B");

        let replay = ReplayBackend::new(FixtureStore::open(store.dir()).unwrap());
        assert_eq!(replay.complete(&req("alpha question")).unwrap(), "Answer: B");
        let listed = store.list().unwrap();
        assert_eq!(listed.len(), 1);
        assert_eq!(listed[0].meta.backend, "scripted");
        assert_eq!(listed[0].request, req("alpha question"));
    }

    #[test]
    fn replay_miss_names_role() {
        let dir = tempfile::tempdir().unwrap();
        let replay = ReplayBackend::new(FixtureStore::open(dir.path()).unwrap());
        let err = replay.complete(&req("never recorded")).unwrap_err();
        assert!(matches!(err, GatewayError::MissingFixture { role_tag: RoleTag::Select, .. }));
        assert!(err.to_string().contains("select"));
    }

    #[test]
    fn responses_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::create(dir.path()).unwrap();
        let odd = "line one\r\n  trailing spaces   \n\u{00e9}\t\"quoted\"";
        let r = req("x");
        store
            .put(&Fixture {
                key: r.key(),
                request: r.clone(),
                response: odd.into(),
                meta: FixtureMeta { backend: "test".into(), recorded_at: "t".into() },
            })
            .unwrap();
        assert_eq!(ReplayBackend::new(store).complete(&r).unwrap(), odd);
    }

    #[test]
    fn mislabelled_fixture_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::create(dir.path()).unwrap();
        let r = req("x");
        let f = Fixture {
            key: "0000".into(),
            request: r.clone(),
            response: "y".into(),
            meta: FixtureMeta { backend: "test".into(), recorded_at: "t".into() },
        };
        std::fs::write(dir.path().join(format!("{}.json", r.key())), serde_json::to_string(&f).unwrap()).unwrap();
        assert!(matches!(store.get(&r.key()), Err(GatewayError::Store(_))));
    }
}
