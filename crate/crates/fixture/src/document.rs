use serde_json::{json, Value};

/// The fixture's OpenAPI 2.0 document, with `host` set to `host`.
///
/// `/teapot` omits the 418 it returns and `/badbody` documents a body it does
/// not send. Everything else is described truthfully.
pub fn document(host: &str) -> Value {
    json!({
        "swagger": "2.0",
        "info": { "title": "quickrest fixture", "version": "1.0" },
        "host": host,
        "basePath": "/",
        "schemes": ["http"],
        "consumes": ["application/json"],
        "produces": ["application/json"],
        "paths": {
            "/objects": {
                "get": {
                    "operationId": "searchObjects",
                    "parameters": [
                        { "name": "q", "in": "query", "required": true, "type": "string" }
                    ],
                    "responses": {
                        "200": {
                            "description": "matching objects",
                            "schema": { "type": "array", "items": { "$ref": "#/definitions/ObjectInfo" } }
                        },
                        "400": { "description": "missing query" },
                        "500": { "description": "query is not alphanumeric" }
                    }
                },
                "post": {
                    "operationId": "createObject",
                    "parameters": [
                        { "name": "body", "in": "body", "required": true, "schema": { "$ref": "#/definitions/ObjectInfo" } }
                    ],
                    "responses": {
                        "201": { "description": "created", "schema": { "$ref": "#/definitions/ObjectInfo" } },
                        "400": { "description": "invalid name" },
                        "500": { "description": "name contains non-ASCII characters" }
                    }
                }
            },
            "/objects/{objectid}": {
                "get": {
                    "operationId": "getObject",
                    "parameters": [
                        { "name": "objectid", "in": "path", "required": true, "type": "string", "format": "uuid" }
                    ],
                    "responses": {
                        "200": { "description": "the object", "schema": { "$ref": "#/definitions/ObjectInfo" } },
                        "404": { "description": "no such object" }
                    }
                }
            },
            "/items/{n}": {
                "get": {
                    "operationId": "getItem",
                    "parameters": [
                        { "name": "n", "in": "path", "required": true, "type": "integer", "format": "int64" }
                    ],
                    "responses": {
                        "200": { "description": "the item", "schema": { "$ref": "#/definitions/Item" } },
                        "400": { "description": "not an integer" },
                        "500": { "description": "n is not positive" }
                    }
                }
            },
            "/resources": {
                "post": {
                    "operationId": "createResource",
                    "parameters": [
                        { "name": "body", "in": "body", "required": true, "schema": { "$ref": "#/definitions/NewResource" } }
                    ],
                    "responses": {
                        "201": { "description": "created", "schema": { "$ref": "#/definitions/Resource" } },
                        "400": { "description": "body is not an object" }
                    }
                }
            },
            "/resources/{id}": {
                "get": {
                    "operationId": "getResource",
                    "parameters": [
                        { "name": "id", "in": "path", "required": true, "type": "string", "format": "uuid" }
                    ],
                    "responses": {
                        "200": { "description": "the resource", "schema": { "$ref": "#/definitions/Resource" } },
                        "404": { "description": "no such resource" }
                    }
                },
                "put": {
                    "operationId": "editResource",
                    "parameters": [
                        { "name": "id", "in": "path", "required": true, "type": "string", "format": "uuid" },
                        { "name": "body", "in": "body", "required": true, "schema": { "$ref": "#/definitions/NewResource" } }
                    ],
                    "responses": {
                        "200": { "description": "updated", "schema": { "$ref": "#/definitions/Resource" } },
                        "400": { "description": "body is not an object" },
                        "404": { "description": "no such resource" },
                        "500": { "description": "resource was deleted" }
                    }
                },
                "delete": {
                    "operationId": "deleteResource",
                    "parameters": [
                        { "name": "id", "in": "path", "required": true, "type": "string", "format": "uuid" }
                    ],
                    "responses": {
                        "204": { "description": "deleted" },
                        "404": { "description": "no such resource" }
                    }
                }
            },
            "/teapot": {
                "get": {
                    "operationId": "teapot",
                    "responses": {
                        "200": { "description": "brewed" }
                    }
                }
            },
            "/badbody": {
                "get": {
                    "operationId": "badBody",
                    "responses": {
                        "200": { "description": "an object", "schema": { "$ref": "#/definitions/ObjectInfo" } }
                    }
                }
            },
            "/health": {
                "get": {
                    "operationId": "health",
                    "responses": {
                        "200": { "description": "up", "schema": { "$ref": "#/definitions/Health" } }
                    }
                }
            }
        },
        "definitions": {
            "ObjectInfo": {
                "type": "object",
                "required": ["name", "id"],
                "properties": {
                    "name": { "type": "string" },
                    "id": { "type": "string", "format": "uuid" }
                }
            },
            "Item": {
                "type": "object",
                "required": ["n"],
                "properties": { "n": { "type": "integer" } }
            },
            "NewResource": {
                "type": "object",
                "properties": { "name": { "type": "string" } }
            },
            "Resource": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": { "type": "string", "format": "uuid" },
                    "name": { "type": "string" }
                }
            },
            "Health": {
                "type": "object",
                "required": ["status"],
                "properties": { "status": { "type": "string" } }
            }
        }
    })
}
