use serde_json::{json, Value};

fn body(schema: &str) -> Value {
    json!({
        "required": true,
        "content": { "application/json": { "schema": { "$ref": format!("#/components/schemas/{schema}") } } }
    })
}

fn responses(ok: &str, extra: &[(&str, &str)]) -> Value {
    let mut r = serde_json::Map::new();
    r.insert(
        ok.split(':').next().unwrap_or("200").into(),
        json!({ "description": ok.split(':').nth(1).unwrap_or("OK") }),
    );
    r.insert("400".into(), json!({ "$ref": "#/components/responses/Invalid" }));
    for (code, desc) in extra {
        r.insert((*code).into(), json!({ "description": desc }));
    }
    Value::Object(r)
}

pub fn document() -> Value {
    let id = json!([{ "name": "id", "in": "path", "required": true, "schema": { "type": "string" } }]);
    json!({
        "openapi": "3.0.3",
        "info": {
            "title": "ransomgame API",
            "version": env!("CARGO_PKG_VERSION"),
            "description": "Multi-round ransom payment game: victim policies, optimal attacker reputation, scenario runs and interactive sessions."
        },
        "paths": {
            "/v1/solve": { "post": {
                "summary": "Victim best response for an instance and reputation",
                "requestBody": body("SolveRequest"),
                "responses": responses("200:Policy, recommendation and profit breakdown", &[])
            }},
            "/v1/optimize": { "post": {
                "summary": "Profit-maximizing attacker reputation with the per-case LP table",
                "requestBody": body("OptimizeRequest"),
                "responses": responses("200:Optimal reputation result", &[])
            }},
            "/v1/simulate": { "post": {
                "summary": "Monte Carlo scenario over one or more reputation modes",
                "requestBody": body("ScenarioConfig"),
                "responses": responses("200:Per-mode summaries and CSV artifact URLs", &[])
            }},
            "/v1/sweep": { "post": {
                "summary": "Optimal reputation or expected profit over a ransom grid",
                "requestBody": body("SweepRequest"),
                "responses": responses("200:Sweep rows and CSV artifact URL", &[])
            }},
            "/v1/artifacts/{id}/{name}": { "get": {
                "summary": "CSV produced by an earlier simulate or sweep call",
                "parameters": [
                    { "name": "id", "in": "path", "required": true, "schema": { "type": "string" } },
                    { "name": "name", "in": "path", "required": true, "schema": { "type": "string", "enum": ["victims.csv", "rounds.csv", "sweep.csv"] } }
                ],
                "responses": { "200": { "description": "text/csv" }, "404": { "description": "Unknown artifact" } }
            }},
            "/v1/sessions": { "post": {
                "summary": "Create a decision session",
                "requestBody": body("CreateSession"),
                "responses": responses("201:Session view", &[])
            }},
            "/v1/sessions/{id}": { "get": {
                "summary": "Session state with the current recommendation",
                "parameters": id,
                "responses": { "200": { "description": "Session view" }, "404": { "description": "Unknown session" } }
            }},
            "/v1/sessions/{id}/decision": { "post": {
                "summary": "Pay or abort the current round; paying samples the attacker's response",
                "parameters": id,
                "requestBody": body("DecisionRequest"),
                "responses": responses("200:Updated session view", &[("404", "Unknown session"), ("409", "Session has ended")])
            }},
            "/v1/sessions/{id}/whatif": { "post": {
                "summary": "Policy of the remaining game under another reputation; does not change the session",
                "parameters": id,
                "requestBody": body("WhatIfRequest"),
                "responses": responses("200:Policy and recommendation", &[("404", "Unknown session"), ("409", "Session has ended")])
            }},
            "/v1/spec": { "get": { "summary": "This document", "responses": { "200": { "description": "OpenAPI JSON" } } } }
        },
        "components": {
            "responses": {
                "Invalid": {
                    "description": "Schema or model violation",
                    "content": { "application/json": { "schema": { "$ref": "#/components/schemas/Error" } } }
                }
            },
            "schemas": {
                "Error": { "type": "object", "properties": {
                    "error": { "type": "string" },
                    "violations": { "type": "array", "items": { "type": "object", "properties": {
                        "path": { "type": "string", "example": "instance.ransoms[1]" },
                        "message": { "type": "string" }
                    }}}
                }},
                "Instance": { "type": "object", "required": ["ransoms", "data_value"], "properties": {
                    "n": { "type": "integer", "minimum": 1 },
                    "ransoms": { "type": "array", "items": { "type": "number", "minimum": 0 } },
                    "data_value": { "type": "number", "minimum": 0 },
                    "recovery_cost": { "type": "number", "minimum": 0, "default": 0 },
                    "losses": { "type": "array", "items": { "type": "number" }, "description": "Derived from decay and sale_ratio when absent" },
                    "sale_profits": { "type": "array", "items": { "type": "number" } },
                    "decay": { "type": "string", "enum": ["quadratic", "linear", "circular"] },
                    "sale_ratio": { "type": "number", "minimum": 0, "maximum": 1, "default": 0.7 }
                }},
                "Reputation": { "oneOf": [
                    { "type": "string", "enum": ["perfect", "worst"] },
                    { "type": "array", "items": { "type": "number", "minimum": 0, "maximum": 1 }, "description": "[beta_r, beta_1, ..., beta_n]" },
                    { "type": "object", "required": ["beta_r", "betas"], "properties": {
                        "beta_r": { "type": "number", "minimum": 0, "maximum": 1 },
                        "betas": { "type": "array", "items": { "type": "number", "minimum": 0, "maximum": 1 } }
                    }}
                ]},
                "SolveRequest": { "type": "object", "required": ["instance", "reputation"], "properties": {
                    "instance": { "$ref": "#/components/schemas/Instance" },
                    "reputation": { "$ref": "#/components/schemas/Reputation" },
                    "from_round": { "type": "integer", "minimum": 1 }
                }},
                "OptimizeRequest": { "type": "object", "required": ["instance"], "properties": {
                    "instance": { "$ref": "#/components/schemas/Instance" },
                    "epsilon_margin": { "type": "number", "minimum": 0 }
                }},
                "ScenarioConfig": { "type": "object", "required": ["rounds", "total_ransom", "victim_count", "value_distribution"], "properties": {
                    "rounds": { "type": "integer", "minimum": 1 },
                    "total_ransom": { "type": "number" },
                    "first_round_fraction": { "type": "number", "default": 0.5 },
                    "victim_count": { "type": "integer", "minimum": 1 },
                    "value_distribution": { "type": "object", "properties": { "lo": { "type": "number" }, "hi": { "type": "number" } } },
                    "decay_mix": { "type": "array", "items": { "type": "string" } },
                    "sale_ratio": { "type": "number", "default": 0.7 },
                    "recovery_cost": { "type": "number", "default": 0 },
                    "reputation_mode": { "type": "string", "enum": ["WORST", "PERFECT_SINGLE", "PERFECT_MULTI", "OPTIMAL_MULTI"] },
                    "modes": { "type": "array", "items": { "type": "string" } },
                    "seed": { "type": "integer" },
                    "detection_lag": { "type": "integer", "default": 0 },
                    "epsilon_margin": { "type": "number" }
                }},
                "SweepRequest": { "type": "object", "required": ["kind", "config"], "properties": {
                    "kind": { "type": "string", "enum": ["reputation", "profit"] },
                    "config": { "type": "object", "required": ["data_value", "rounds", "decay", "ransom_grid"] }
                }},
                "CreateSession": { "type": "object", "required": ["instance", "reputation"], "properties": {
                    "instance": { "$ref": "#/components/schemas/Instance" },
                    "reputation": { "$ref": "#/components/schemas/Reputation" },
                    "seed": { "type": "integer" }
                }},
                "DecisionRequest": { "type": "object", "required": ["action"], "properties": {
                    "action": { "type": "string", "enum": ["pay", "abort"] }
                }},
                "WhatIfRequest": { "type": "object", "required": ["reputation"], "properties": {
                    "reputation": { "$ref": "#/components/schemas/Reputation" }
                }}
            }
        }
    })
}
