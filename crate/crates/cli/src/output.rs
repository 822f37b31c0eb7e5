//! Reproducibility headers for output files.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::SCHEMA_VERSION;

/// Identifies the run that produced an output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub command: String,
    pub schema_version: u64,
    pub config_sha256: String,
    pub master_seed: u64,
    pub config: Value,
}

impl Header {
    /// Header for `config` as it was actually used, defaults included.
    pub fn new<C: Serialize>(command: &str, config: &C, master_seed: u64) -> Self {
        let config = serde_json::to_value(config).expect("configs serialize to JSON");
        // serde_json maps keep keys sorted, so this text is canonical
        let canonical = config.to_string();
        Header {
            command: command.to_string(),
            schema_version: SCHEMA_VERSION,
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
            master_seed,
            config,
        }
    }

    /// `#` comment lines placed before a CSV table.
    pub fn csv_comment(&self) -> String {
        format!(
            "# logcount {}\n# schema_version={}\n# config_sha256={}\n# master_seed={}\n# config={}\n",
            self.command, self.schema_version, self.config_sha256, self.master_seed, self.config
        )
    }

    /// A config document that reruns this header's experiment.
    pub fn replay_config(&self) -> Value {
        let mut v = self.config.clone();
        if let Some(obj) = v.as_object_mut() {
            obj.insert("schema_version".into(), json!(self.schema_version));
            obj.insert("seed".into(), json!(self.master_seed));
        }
        v
    }
}

/// Pretty JSON document `{"header": ..., <body fields>}` with a final newline.
pub fn json_document<B: Serialize>(header: &Header, body: &B) -> Vec<u8> {
    let mut doc = json!({ "header": header });
    if let (Some(obj), Value::Object(fields)) = (doc.as_object_mut(), serde_json::to_value(body).expect("serializable body")) {
        obj.extend(fields);
    }
    let mut out = serde_json::to_vec_pretty(&doc).expect("serializable document");
    out.push(b'\n');
    out
}
