//! SPARQL 1.1 query results in JSON.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::graph::Node;
use super::EndpointError;

#[derive(Debug, Clone, PartialEq)]
pub enum ResultSet {
    Bindings {
        variables: Vec<String>,
        rows: Vec<BTreeMap<String, Node>>,
    },
    Boolean(bool),
}

impl ResultSet {
    /// Rows sorted, for comparisons that ignore solution order.
    pub fn normalized(&self) -> ResultSet {
        match self {
            ResultSet::Bindings { variables, rows } => {
                let mut rows = rows.clone();
                rows.sort();
                ResultSet::Bindings {
                    variables: variables.clone(),
                    rows,
                }
            }
            b => b.clone(),
        }
    }

    /// Every bound value in the result, as answer strings.
    pub fn answer_values(&self) -> BTreeSet<String> {
        match self {
            ResultSet::Bindings { variables, rows } => rows
                .iter()
                .flat_map(|r| variables.iter().filter_map(|v| r.get(v)))
                .map(|n| n.value().to_string())
                .collect(),
            ResultSet::Boolean(b) => BTreeSet::from([b.to_string()]),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ResultSet::Boolean(b) => json!({ "head": {}, "boolean": b }),
            ResultSet::Bindings { variables, rows } => {
                let bindings: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        let mut obj = Map::new();
                        for (k, node) in row {
                            obj.insert(k.clone(), node_to_json(node));
                        }
                        Value::Object(obj)
                    })
                    .collect();
                json!({ "head": { "vars": variables }, "results": { "bindings": bindings } })
            }
        }
    }

    pub fn from_json(value: &Value) -> Result<ResultSet, EndpointError> {
        let bad = |why: &str| EndpointError::MalformedResults(why.to_string());
        let obj = value.as_object().ok_or_else(|| bad("top level is not an object"))?;
        if let Some(b) = obj.get("boolean") {
            return b
                .as_bool()
                .map(ResultSet::Boolean)
                .ok_or_else(|| bad("`boolean` is not a boolean"));
        }
        let variables: Vec<String> = match obj.get("head").and_then(|h| h.get("vars")) {
            Some(Value::Array(vs)) => vs
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| bad("non-string variable")))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
            Some(_) => return Err(bad("`head.vars` is not an array")),
        };
        let bindings = obj
            .get("results")
            .and_then(|r| r.get("bindings"))
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `results.bindings`"))?;
        let mut rows = Vec::with_capacity(bindings.len());
        for b in bindings {
            let b = b.as_object().ok_or_else(|| bad("binding is not an object"))?;
            let mut row = BTreeMap::new();
            for (k, v) in b {
                if !variables.contains(k) {
                    return Err(bad(&format!("binding for undeclared variable {k}")));
                }
                row.insert(k.clone(), node_from_json(v)?);
            }
            rows.push(row);
        }
        Ok(ResultSet::Bindings { variables, rows })
    }

    pub fn parse(text: &str) -> Result<ResultSet, EndpointError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| EndpointError::MalformedResults(e.to_string()))?;
        Self::from_json(&value)
    }
}

fn node_to_json(node: &Node) -> Value {
    match node {
        Node::Iri(i) => json!({ "type": "uri", "value": i }),
        Node::Literal {
            value,
            datatype: Some(dt),
        } => json!({ "type": "literal", "value": value, "datatype": dt }),
        Node::Literal { value, datatype: None } => json!({ "type": "literal", "value": value }),
    }
}

fn node_from_json(v: &Value) -> Result<Node, EndpointError> {
    let bad = |why: String| EndpointError::MalformedResults(why);
    let kind = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("term without `type`".into()))?;
    let value = v
        .get("value")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("term without `value`".into()))?
        .to_string();
    match kind {
        "uri" => Ok(Node::Iri(value)),
        "literal" | "typed-literal" => Ok(Node::Literal {
            value,
            datatype: v.get("datatype").and_then(Value::as_str).map(str::to_string),
        }),
        // Blank nodes are kept as opaque labels.
        "bnode" => Ok(Node::Iri(format!("_:{value}"))),
        other => Err(bad(format!("unknown term type {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bindings_round_trip() {
        let text = r#"{"head":{"vars":["count"]},"results":{"bindings":[{"count":{"type":"typed-literal","datatype":"http://www.w3.org/2001/XMLSchema#integer","value":"1"}}]}}"#;
        let rs = ResultSet::parse(text).unwrap();
        assert_eq!(rs.answer_values(), BTreeSet::from(["1".to_string()]));
        assert_eq!(ResultSet::from_json(&rs.to_json()).unwrap(), rs);
    }

    #[test]
    fn boolean_kind() {
        let rs = ResultSet::parse(r#"{"head":{},"boolean":false}"#).unwrap();
        assert_eq!(rs, ResultSet::Boolean(false));
        assert_eq!(rs.answer_values(), BTreeSet::from(["false".to_string()]));
    }

    #[test]
    fn malformed() {
        for text in [
            "[]",
            r#"{"head":{"vars":["x"]}}"#,
            r#"{"head":{"vars":["x"]},"results":{"bindings":[{"y":{"type":"uri","value":"u"}}]}}"#,
            r#"{"head":{"vars":["x"]},"results":{"bindings":[{"x":{"type":"weird","value":"u"}}]}}"#,
            "not json",
        ] {
            assert!(matches!(
                ResultSet::parse(text),
                Err(EndpointError::MalformedResults(_))
            ), "{text}");
        }
    }
}
