//! Blindness check for participant-facing responses.

use serde_json::Value;

/// Keys that would name the true state or the sound's parameters.
pub const FORBIDDEN_KEYS: &[&str] = &[
    "s_real",
    "state",
    "action",
    "levels",
    "labels",
    "params",
    "file",
    "bpm",
    "bpl",
    "pitch",
    "pitch_bend",
];

/// What the server knows about the outstanding trial.
#[derive(Clone, Debug)]
pub struct TrialSecret {
    pub state: String,
    pub file: String,
    /// Level labels of the played sound, e.g. `["140", "4", "-4"]`.
    pub labels: Vec<String>,
}

/// Every leak found in `body`, as `path: reason` strings. State names are
/// allowed only inside `state_options`.
pub fn scan(body: &Value, secret: Option<&TrialSecret>) -> Vec<String> {
    let mut found = Vec::new();
    walk(body, "$", false, secret, &mut found);
    found
}

fn walk(v: &Value, path: &str, in_options: bool, secret: Option<&TrialSecret>, found: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = format!("{path}.{k}");
                if FORBIDDEN_KEYS.contains(&k.as_str()) {
                    found.push(format!("{p}: forbidden key"));
                }
                walk(child, &p, k == "state_options", secret, found);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                walk(child, &format!("{path}[{i}]"), in_options, secret, found);
            }
            if let Some(s) = secret {
                let strings: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
                if !s.labels.is_empty() && strings == s.labels {
                    found.push(format!("{path}: parameter labels"));
                }
            }
        }
        Value::String(text) => {
            if let Some(s) = secret {
                if !in_options && text == &s.state {
                    found.push(format!("{path}: true state"));
                }
                if text.contains(&s.file) {
                    found.push(format!("{path}: sound file name"));
                }
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn secret() -> TrialSecret {
        TrialSecret {
            state: "Stuck".into(),
            file: "bpm1_bpl2_pitch0.wav".into(),
            labels: vec!["140".into(), "4".into(), "-4".into()],
        }
    }

    #[test]
    fn clean_view_passes() {
        let body = json!({"trial_id": 3, "audio_url": "/libraries/A/audio/abc.wav", "state_options": ["Stuck", "Accomplished"]});
        assert!(scan(&body, Some(&secret())).is_empty());
    }

    #[test]
    fn leaks_are_reported() {
        let body = json!({"s_real": "x", "hint": "Stuck", "u": "/a/bpm1_bpl2_pitch0.wav", "l": ["140", "4", "-4"]});
        let found = scan(&body, Some(&secret()));
        assert_eq!(found.len(), 4, "{found:?}");
    }
}
