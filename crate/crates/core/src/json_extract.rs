//! Pulls JSON values out of model replies that wrap them in markdown fences or
//! surrounding prose.

use serde_json::Value;

/// Removes markdown code-fence lines (```` ``` ```` or ```` ```json ````).
pub fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Every top-level JSON object or array found scanning left to right.
///
/// Each `{` or `[` is tried as the start of a value; on success the scan
/// resumes after the parsed value.
pub fn json_values(text: &str) -> Vec<Value> {
    let cleaned = strip_fences(text);
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < cleaned.len() {
        let Some(offset) = cleaned[pos..].find(['{', '[']) else {
            break;
        };
        let start = pos + offset;
        let mut stream = serde_json::Deserializer::from_str(&cleaned[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(v)) => {
                pos = start + stream.byte_offset();
                out.push(v);
            }
            _ => pos = start + 1,
        }
    }
    out
}

/// First JSON object in `text`.
pub fn first_object(text: &str) -> Option<serde_json::Map<String, Value>> {
    json_values(text).into_iter().find_map(|v| match v {
        Value::Object(m) => Some(m),
        _ => None,
    })
}

/// First JSON array in `text`, or a lone object wrapped as a one-element array.
pub fn first_array_or_object(text: &str) -> Option<Vec<Value>> {
    json_values(text).into_iter().find_map(|v| match v {
        Value::Array(a) => Some(a),
        Value::Object(_) => Some(vec![v]),
        _ => None,
    })
}
