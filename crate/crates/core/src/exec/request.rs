use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use url::form_urlencoded;

use crate::oas::{CollectionFormat, Location, OperationSpec, Verb};

/// Characters escaped inside one path segment.
const SEGMENT: &AsciiSet = &CONTROLS
    .add(b' ')
    .add(b'"')
    .add(b'#')
    .add(b'%')
    .add(b'/')
    .add(b'<')
    .add(b'>')
    .add(b'?')
    .add(b'\\')
    .add(b'^')
    .add(b'`')
    .add(b'{')
    .add(b'|')
    .add(b'}');

/// Header values must be visible ASCII; everything else is escaped.
const HEADER_VALUE: &AsciiSet = &CONTROLS.add(b' ').add(b'%');

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequestBody {
    pub media_type: String,
    pub text: String,
}

/// A fully formed HTTP request, ready to send.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestPlan {
    pub verb: Verb,
    pub url: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub headers: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<RequestBody>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("path parameter {0:?} has no value")]
    MissingPathParameter(String),
}

/// Renders a scalar the way it appears in a URL or header: strings bare,
/// everything else as JSON text.
pub fn render_scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Percent-encodes one path segment. `.` and `..` are escaped as well so
/// they are not read as dot segments.
fn encode_segment(raw: &str) -> String {
    if raw == "." || raw == ".." {
        return raw.replace('.', "%2E");
    }
    utf8_percent_encode(raw, SEGMENT).to_string()
}

fn render_values(value: &Value) -> Vec<String> {
    match value {
        Value::Array(items) => items.iter().map(render_scalar).collect(),
        other => vec![render_scalar(other)],
    }
}

fn render_joined(value: &Value) -> String {
    render_values(value).join(",")
}

/// Builds the request for `op` from an assignment keyed `location.name`.
///
/// Parameters absent from the assignment are left out of the request,
/// except path parameters, which make the request unsendable.
pub fn build_request(
    op: &OperationSpec,
    assignment: &Map<String, Value>,
    base_url: &str,
) -> Result<RequestPlan, BuildError> {
    let mut path = op.path_template.clone();
    let mut query = form_urlencoded::Serializer::new(String::new());
    let mut has_query = false;
    let mut form = form_urlencoded::Serializer::new(String::new());
    let mut has_form = false;
    let mut headers = Vec::new();
    let mut body = None;

    for param in &op.parameters {
        let value = assignment.get(&param.key());
        if param.location == Location::Path {
            let value = value.ok_or_else(|| BuildError::MissingPathParameter(param.name.clone()))?;
            let rendered = encode_segment(&render_joined(value));
            path = path.replace(&format!("{{{}}}", param.name), &rendered);
            continue;
        }
        let Some(value) = value else { continue };
        let multi = param.collection_format == Some(CollectionFormat::Multi);
        match param.location {
            Location::Query => {
                has_query = true;
                if multi {
                    for v in render_values(value) {
                        query.append_pair(&param.name, &v);
                    }
                } else {
                    query.append_pair(&param.name, &render_joined(value));
                }
            }
            Location::Form => {
                has_form = true;
                if multi {
                    for v in render_values(value) {
                        form.append_pair(&param.name, &v);
                    }
                } else {
                    form.append_pair(&param.name, &render_joined(value));
                }
            }
            Location::Header => {
                let raw = render_joined(value);
                headers.push((
                    param.name.clone(),
                    utf8_percent_encode(&raw, HEADER_VALUE).to_string(),
                ));
            }
            Location::Body => {
                body = Some(RequestBody {
                    media_type: "application/json".into(),
                    text: value.to_string(),
                });
            }
            Location::Path => unreachable!(),
        }
    }
    if has_form {
        body = Some(RequestBody {
            media_type: "application/x-www-form-urlencoded".into(),
            text: form.finish(),
        });
    }
    let mut url = format!("{}{}", base_url.trim_end_matches('/'), path);
    if has_query {
        url.push('?');
        url.push_str(&query.finish());
    }
    Ok(RequestPlan {
        verb: op.verb,
        url,
        headers,
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::parse_document;
    use serde_json::json;

    const FIG1: &str = include_str!("../../tests/data/fig1.json");

    fn ops() -> crate::oas::ApiDescription {
        parse_document(FIG1).unwrap()
    }

    fn assignment(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn query_parameter_is_appended() {
        let api = ops();
        let op = api.operation("/objects", Verb::Get).unwrap();
        let plan = build_request(op, &assignment(json!({"query.q": "x"})), "http://h:1/").unwrap();
        assert_eq!(plan.url, "http://h:1/objects?q=x");
        assert_eq!(plan.verb, Verb::Get);
        assert!(plan.body.is_none());
    }

    #[test]
    fn omitted_query_leaves_no_query_string() {
        let api = ops();
        let op = api.operation("/objects", Verb::Get).unwrap();
        let plan = build_request(op, &Map::new(), "http://h:1").unwrap();
        assert_eq!(plan.url, "http://h:1/objects");
    }

    #[test]
    fn path_parameter_round_trips_through_encoding() {
        let api = ops();
        let op = api.operation("/objects/{objectid}", Verb::Get).unwrap();
        for raw in ["3fa85f64-5717-4562-b3fc-2c963f66afa6", "a/b?c#d%e f", "\u{7}ü{x}", ".", ".."] {
            let plan = build_request(op, &assignment(json!({"path.objectid": raw})), "http://h").unwrap();
            let seg = plan.url.strip_prefix("http://h/objects/").unwrap();
            assert!(!seg.contains('/') && seg != "." && seg != "..");
            let decoded = percent_encoding::percent_decode_str(seg).decode_utf8().unwrap();
            assert_eq!(decoded, raw);
            assert!(!plan.url.contains('{'));
        }
    }

    #[test]
    fn missing_path_parameter_is_an_error() {
        let api = ops();
        let op = api.operation("/objects/{objectid}", Verb::Get).unwrap();
        assert_eq!(
            build_request(op, &Map::new(), "http://h"),
            Err(BuildError::MissingPathParameter("objectid".into()))
        );
    }

    #[test]
    fn query_values_are_percent_encoded() {
        let api = ops();
        let op = api.operation("/objects", Verb::Get).unwrap();
        let plan = build_request(op, &assignment(json!({"query.q": "a&b=c d\u{0}"})), "http://h").unwrap();
        let url = url::Url::parse(&plan.url).unwrap();
        let pairs: Vec<(String, String)> = url.query_pairs().into_owned().collect();
        assert_eq!(pairs, vec![("q".to_string(), "a&b=c d\u{0}".to_string())]);
    }

    #[test]
    fn body_header_form_and_collections() {
        let api = parse_document(
            r#"{"swagger":"2.0","paths":{
              "/a/{n}":{"post":{"parameters":[
                {"name":"n","in":"path","required":true,"type":"integer"},
                {"name":"tags","in":"query","type":"array","items":{"type":"string"},"collectionFormat":"multi"},
                {"name":"ids","in":"query","type":"array","items":{"type":"integer"}},
                {"name":"X-Token","in":"header","type":"string"},
                {"name":"b","in":"body","schema":{"type":"object"}}],
                "responses":{"200":{"description":"ok"}}}},
              "/f":{"post":{"parameters":[
                {"name":"x","in":"formData","type":"string"},
                {"name":"y","in":"formData","type":"boolean"}],
                "responses":{"200":{"description":"ok"}}}}}}"#,
        )
        .unwrap();
        let op = api.operation("/a/{n}", Verb::Post).unwrap();
        let plan = build_request(
            op,
            &assignment(json!({
                "path.n": -3,
                "query.tags": ["p", "q"],
                "query.ids": [1, 2],
                "header.X-Token": "tok en\n",
                "body.b": {"k": [1, "v"]}
            })),
            "http://h",
        )
        .unwrap();
        assert_eq!(plan.url, "http://h/a/-3?tags=p&tags=q&ids=1%2C2");
        assert_eq!(plan.headers, vec![("X-Token".to_string(), "tok%20en%0A".to_string())]);
        let body = plan.body.unwrap();
        assert_eq!(body.media_type, "application/json");
        assert_eq!(serde_json::from_str::<Value>(&body.text).unwrap(), json!({"k": [1, "v"]}));

        let op = api.operation("/f", Verb::Post).unwrap();
        let plan = build_request(op, &assignment(json!({"form.x": "a b", "form.y": true})), "http://h").unwrap();
        let body = plan.body.unwrap();
        assert_eq!(body.media_type, "application/x-www-form-urlencoded");
        assert_eq!(body.text, "x=a+b&y=true");
    }
}
