//! A small deterministic REST API used as a fuzzing target in tests.
//!
//! Everything is served under `/api/v3`. It offers a form login that sets a
//! session cookie, a JSON login that returns a bearer token, a gated CRUD set
//! of posts, and a handful of deliberately broken endpoints.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};

pub const PREFIX: &str = "/api/v3";
pub const CATEGORIES: [&str; 3] = ["news", "tech", "life"];
pub const CREATED_AT: &str = "2024-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedUser {
    pub username: String,
    pub password: String,
    pub role: String,
}

impl SeedUser {
    pub fn new(username: &str, password: &str, role: &str) -> Self {
        Self {
            username: username.into(),
            password: password.into(),
            role: role.into(),
        }
    }
}

/// Switches for the deliberately broken endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    /// `GET /api/tags/{id}` answers 500 for integer ids.
    pub tags_crash: bool,
    /// `GET /api/archive` answers 410, which its schema does not declare.
    pub archive_gone: bool,
    /// `GET /api/info` returns a number where the schema promises a string.
    pub info_mismatch: bool,
    /// `GET /api/search` accepts any query with 200.
    pub search_lenient: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            tags_crash: true,
            archive_gone: true,
            info_mismatch: true,
            search_lenient: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestbedSpec {
    /// 0 picks a free port.
    pub port: u16,
    pub seed_users: Vec<SeedUser>,
    pub toggles: Toggles,
}

impl Default for TestbedSpec {
    fn default() -> Self {
        Self {
            port: 0,
            seed_users: vec![
                SeedUser::new("admin", "admin", "ADMIN"),
                SeedUser::new("user1", "password", "USER"),
                SeedUser::new("admin", "bar123", "ADMIN"),
                SeedUser::new("user", "bar123", "USER"),
            ],
            toggles: Toggles::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TestbedError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("could not start server: {0}")]
    Start(String),
}

/// A running testbed. Stops when dropped.
pub struct Testbed {
    server: Arc<Server>,
    worker: Option<JoinHandle<()>>,
    port: u16,
}

impl Testbed {
    pub fn port(&self) -> u16 {
        self.port
    }

    /// `http://127.0.0.1:<port>`
    pub fn origin(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    /// Origin plus the `/api/v3` prefix.
    pub fn api_base(&self) -> String {
        format!("{}{PREFIX}", self.origin())
    }

    pub fn openapi_v3(&self) -> String {
        openapi_v3().to_string()
    }

    pub fn openapi_v2(&self) -> String {
        openapi_v2().to_string()
    }
}

impl Drop for Testbed {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

pub fn start_testbed(spec: TestbedSpec) -> Result<Testbed, TestbedError> {
    let server = Server::http(("127.0.0.1", spec.port)).map_err(|e| {
        match e.downcast_ref::<std::io::Error>() {
            Some(io) if io.kind() == std::io::ErrorKind::AddrInUse => TestbedError::PortInUse(spec.port),
            _ => TestbedError::Start(e.to_string()),
        }
    })?;
    let port = server
        .server_addr()
        .to_ip()
        .map(|a| a.port())
        .ok_or_else(|| TestbedError::Start("not bound to an IP address".into()))?;
    let server = Arc::new(server);
    let worker_server = Arc::clone(&server);
    let worker = std::thread::spawn(move || {
        let mut state = State::new(spec);
        for request in worker_server.incoming_requests() {
            state.serve(request);
        }
    });
    Ok(Testbed {
        server,
        worker: Some(worker),
        port,
    })
}

#[derive(Debug, Clone)]
struct Post {
    id: String,
    title: String,
    category: String,
}

impl Post {
    fn to_json(&self) -> Value {
        json!({"id": self.id, "title": self.title, "category": self.category, "createdAt": CREATED_AT})
    }
}

struct State {
    spec: TestbedSpec,
    posts: BTreeMap<String, Post>,
    next_post: u64,
}

struct Reply {
    status: u16,
    body: Option<Value>,
    headers: Vec<(String, String)>,
}

impl Reply {
    fn json(status: u16, body: Value) -> Self {
        Self {
            status,
            body: Some(body),
            headers: Vec::new(),
        }
    }

    fn empty(status: u16) -> Self {
        Self {
            status,
            body: None,
            headers: Vec::new(),
        }
    }

    fn message(status: u16, message: &str) -> Self {
        Self::json(status, json!({"message": message}))
    }

    fn header(mut self, name: &str, value: String) -> Self {
        self.headers.push((name.into(), value));
        self
    }
}

struct Incoming {
    method: String,
    path: String,
    query: Vec<(String, String)>,
    headers: Vec<(String, String)>,
    body: Vec<u8>,
}

impl Incoming {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

impl State {
    fn new(spec: TestbedSpec) -> Self {
        Self {
            spec,
            posts: BTreeMap::new(),
            next_post: 1,
        }
    }

    fn serve(&mut self, mut request: Request) {
        let mut body = Vec::new();
        let _ = std::io::Read::read_to_end(request.as_reader(), &mut body);
        let parsed = url::Url::parse(&format!("http://testbed{}", request.url()));
        let reply = match parsed {
            Ok(u) => {
                let incoming = Incoming {
                    method: method_name(request.method()),
                    path: u.path().to_string(),
                    query: u.query_pairs().map(|(k, v)| (k.into_owned(), v.into_owned())).collect(),
                    headers: request
                        .headers()
                        .iter()
                        .map(|h| (h.field.as_str().as_str().to_string(), h.value.as_str().to_string()))
                        .collect(),
                    body,
                };
                self.route(&incoming)
            }
            Err(_) => Reply::message(400, "Malformed request target"),
        };
        let _ = request.respond(render(reply));
    }

    fn user_by_credentials(&self, username: &str, password: &str) -> Option<&SeedUser> {
        self.spec
            .seed_users
            .iter()
            .find(|u| u.username == username && u.password == password)
    }

    fn user_by_name(&self, username: &str) -> Option<&SeedUser> {
        self.spec.seed_users.iter().find(|u| u.username == username)
    }

    fn authenticated(&self, req: &Incoming) -> Option<SeedUser> {
        if let Some(token) = req.header("Authorization").and_then(|h| h.strip_prefix("Bearer ")) {
            if let Some(user) = token.strip_prefix("tok-").and_then(|n| self.user_by_name(n)) {
                return Some(user.clone());
            }
        }
        let cookies = req.header("Cookie")?;
        cookies
            .split(';')
            .filter_map(|c| c.trim().split_once('='))
            .find(|(k, _)| *k == "SESSION")
            .and_then(|(_, v)| v.strip_prefix("sess-"))
            .and_then(|n| self.user_by_name(n))
            .cloned()
    }

    fn route(&mut self, req: &Incoming) -> Reply {
        match req.path.as_str() {
            "/openapi.json" => return Reply::json(200, openapi_v3()),
            "/openapi-v2.json" => return Reply::json(200, openapi_v2()),
            "/" | "/health" => return Reply::json(200, json!({"status": "up"})),
            _ => {}
        }
        let Some(path) = req.path.strip_prefix(PREFIX) else {
            return Reply::message(404, "Not Found");
        };
        let segments: Vec<&str> = path.trim_start_matches('/').split('/').collect();
        let m = req.method.as_str();
        match (m, segments.as_slice()) {
            (_, [""]) => Reply::json(200, json!({"status": "up"})),
            ("POST", ["login"]) => self.form_login(req),
            ("POST", ["api", "auth", "signin"]) => self.json_login(req),
            (_, ["api", "posts", ..]) | (_, ["api", "users", "me"]) => {
                let Some(user) = self.authenticated(req) else {
                    return Reply::message(401, "Unauthorized");
                };
                match (m, &segments[1..]) {
                    ("GET", ["posts"]) => Reply::json(200, Value::Array(self.posts.values().map(Post::to_json).collect())),
                    ("POST", ["posts"]) => self.create_post(req),
                    ("GET", ["posts", id]) => match self.posts.get(*id) {
                        Some(p) => Reply::json(200, p.to_json()),
                        None => Reply::message(404, "Post not found"),
                    },
                    ("PUT", ["posts", id]) => self.update_post(id, req),
                    ("DELETE", ["posts", id]) => match self.posts.remove(*id) {
                        Some(_) => Reply::empty(204),
                        None => Reply::message(404, "Post not found"),
                    },
                    ("GET", ["users", "me"]) => Reply::json(200, json!({"username": user.username, "role": user.role})),
                    (_, ["posts"]) | (_, ["posts", _]) | (_, ["users", "me"]) => Reply::message(405, "Method Not Allowed"),
                    _ => Reply::message(404, "Not Found"),
                }
            }
            ("GET", ["api", "tags", id]) => self.tag(id, path),
            ("GET", ["api", "archive"]) => {
                if self.spec.toggles.archive_gone {
                    Reply::message(410, "The archive has been retired")
                } else {
                    Reply::json(200, json!([]))
                }
            }
            ("GET", ["api", "info"]) => {
                let version = if self.spec.toggles.info_mismatch { json!(3) } else { json!("3") };
                Reply::json(200, json!({"name": "testbed", "version": version}))
            }
            ("GET", ["api", "search"]) => self.search(req),
            _ => Reply::message(404, "Not Found"),
        }
    }

    fn form_login(&self, req: &Incoming) -> Reply {
        let form: BTreeMap<String, String> = url::form_urlencoded::parse(&req.body).into_owned().collect();
        let user = match (form.get("username"), form.get("password")) {
            (Some(u), Some(p)) => self.user_by_credentials(u, p),
            _ => None,
        };
        match user {
            Some(u) => Reply::json(200, json!({"status": "ok"}))
                .header("Set-Cookie", format!("SESSION=sess-{}; Path=/; HttpOnly", u.username)),
            None => Reply::message(401, "Bad credentials"),
        }
    }

    fn json_login(&self, req: &Incoming) -> Reply {
        let body: Value = match serde_json::from_slice(&req.body) {
            Ok(v) => v,
            Err(_) => return Reply::message(400, "Malformed JSON"),
        };
        let user = match (
            body.get("usernameOrEmail").and_then(Value::as_str),
            body.get("password").and_then(Value::as_str),
        ) {
            (Some(u), Some(p)) => self.user_by_credentials(u, p),
            _ => None,
        };
        match user {
            Some(u) => Reply::json(200, json!({"accessToken": format!("tok-{}", u.username), "tokenType": "Bearer"})),
            None => Reply::message(401, "Bad credentials"),
        }
    }

    fn post_input(req: &Incoming) -> Result<(String, String), Reply> {
        let body: Value = serde_json::from_slice(&req.body).map_err(|_| Reply::message(400, "Malformed JSON"))?;
        let title = body
            .get("title")
            .and_then(Value::as_str)
            .filter(|t| !t.is_empty() && t.chars().count() <= 50)
            .ok_or_else(|| Reply::message(400, "Invalid title"))?;
        let category = body
            .get("category")
            .and_then(Value::as_str)
            .filter(|c| CATEGORIES.contains(c))
            .ok_or_else(|| Reply::message(400, "Invalid category"))?;
        Ok((title.to_string(), category.to_string()))
    }

    fn create_post(&mut self, req: &Incoming) -> Reply {
        let (title, category) = match Self::post_input(req) {
            Ok(v) => v,
            Err(reply) => return reply,
        };
        let id = format!("p-{}", self.next_post);
        self.next_post += 1;
        let post = Post {
            id: id.clone(),
            title,
            category,
        };
        let body = post.to_json();
        self.posts.insert(id.clone(), post);
        Reply::json(201, body).header("Location", format!("{PREFIX}/api/posts/{id}"))
    }

    fn update_post(&mut self, id: &str, req: &Incoming) -> Reply {
        let (title, category) = match Self::post_input(req) {
            Ok(v) => v,
            Err(reply) => return reply,
        };
        match self.posts.get_mut(id) {
            Some(p) => {
                p.title = title;
                p.category = category;
                Reply::json(200, p.to_json())
            }
            None => Reply::message(404, "Post not found"),
        }
    }

    fn tag(&self, id: &str, path: &str) -> Reply {
        if id.parse::<i64>().is_err() {
            return Reply::message(400, "Tag id must be an integer");
        }
        if self.spec.toggles.tags_crash {
            return Reply::json(
                500,
                json!({"status": 500, "error": "Internal Server Error", "message": "Failed to load tag", "path": format!("{PREFIX}{path}")}),
            );
        }
        Reply::json(200, json!({"id": id.parse::<i64>().unwrap_or(0), "name": format!("tag{id}")}))
    }

    fn search(&self, req: &Incoming) -> Reply {
        let category = req.query.iter().find(|(k, _)| k == "category").map(|(_, v)| v.as_str());
        let limit = req.query.iter().find(|(k, _)| k == "limit").map(|(_, v)| v.as_str());
        if !self.spec.toggles.search_lenient {
            if category.is_some_and(|c| !CATEGORIES.contains(&c)) {
                return Reply::message(400, "Invalid category");
            }
            if limit.is_some_and(|l| l.parse::<u32>().map_or(true, |n| !(1..=50).contains(&n))) {
                return Reply::message(400, "Invalid limit");
            }
        }
        let hits: Vec<Value> = self
            .posts
            .values()
            .filter(|p| category.is_none_or(|c| p.category == c))
            .map(Post::to_json)
            .collect();
        Reply::json(200, Value::Array(hits))
    }
}

fn method_name(m: &Method) -> String {
    m.as_str().to_ascii_uppercase()
}

fn render(reply: Reply) -> Response<std::io::Cursor<Vec<u8>>> {
    let data = reply
        .body
        .as_ref()
        .map(|b| serde_json::to_vec(b).expect("JSON serializes"))
        .unwrap_or_default();
    let mut response = Response::from_data(data).with_status_code(reply.status);
    if reply.body.is_some() {
        response.add_header(Header::from_bytes("Content-Type", "application/json").expect("valid header"));
    }
    for (k, v) in reply.headers {
        response.add_header(Header::from_bytes(k.as_bytes(), v.as_bytes()).expect("valid header"));
    }
    response
}

fn post_schema_v3() -> Value {
    json!({
        "type": "object",
        "required": ["id", "title", "category"],
        "properties": {
            "id": {"type": "string"},
            "title": {"type": "string"},
            "category": {"type": "string", "enum": CATEGORIES},
            "createdAt": {"type": "string", "format": "date-time"}
        }
    })
}

fn post_input_schema() -> Value {
    json!({
        "type": "object",
        "required": ["title", "category"],
        "properties": {
            "title": {"type": "string", "minLength": 1, "maxLength": 50},
            "category": {"type": "string", "enum": CATEGORIES}
        }
    })
}

/// The published v3 document. `GET /api/users/me` refers to a schema that
/// does not exist.
pub fn openapi_v3() -> Value {
    let json_content = |schema: Value| json!({"application/json": {"schema": schema}});
    let ok = |schema: Value| json!({"description": "OK", "content": json_content(schema)});
    let plain = |d: &str| json!({"description": d});
    let gated = json!([{"bearerAuth": []}, {"cookieAuth": []}]);
    let id_param = json!({"name": "id", "in": "path", "required": true, "schema": {"type": "string"}});
    json!({
        "openapi": "3.0.3",
        "info": {"title": "wfc testbed", "version": "1.0.0"},
        "servers": [{"url": PREFIX}],
        "paths": {
            "/login": {"post": {
                "requestBody": {"required": true, "content": {"application/x-www-form-urlencoded": {"schema": {
                    "type": "object", "required": ["username", "password"],
                    "properties": {"username": {"type": "string"}, "password": {"type": "string"}}}}}},
                "responses": {"200": ok(json!({"type": "object"})), "401": plain("Bad credentials")}
            }},
            "/api/auth/signin": {"post": {
                "requestBody": {"required": true, "content": json_content(json!({
                    "type": "object", "required": ["usernameOrEmail", "password"],
                    "properties": {"usernameOrEmail": {"type": "string"}, "password": {"type": "string"}}}))},
                "responses": {
                    "200": ok(json!({"type": "object", "required": ["accessToken"], "properties": {
                        "accessToken": {"type": "string"}, "tokenType": {"type": "string"}}})),
                    "400": plain("Malformed"),
                    "401": plain("Bad credentials")
                }
            }},
            "/api/posts": {
                "get": {"security": gated, "responses": {
                    "200": ok(json!({"type": "array", "items": {"$ref": "#/components/schemas/Post"}})),
                    "401": plain("Unauthorized")}},
                "post": {"security": gated,
                    "requestBody": {"required": true, "content": json_content(json!({"$ref": "#/components/schemas/PostInput"}))},
                    "responses": {
                        "201": {"description": "Created", "content": json_content(json!({"$ref": "#/components/schemas/Post"}))},
                        "400": plain("Invalid input"),
                        "401": plain("Unauthorized")}}
            },
            "/api/posts/{id}": {
                "parameters": [id_param],
                "get": {"security": gated, "responses": {
                    "200": ok(json!({"$ref": "#/components/schemas/Post"})),
                    "401": plain("Unauthorized"), "404": plain("Not found")}},
                "put": {"security": gated,
                    "requestBody": {"required": true, "content": json_content(json!({"$ref": "#/components/schemas/PostInput"}))},
                    "responses": {
                        "200": ok(json!({"$ref": "#/components/schemas/Post"})),
                        "400": plain("Invalid input"), "401": plain("Unauthorized"), "404": plain("Not found")}},
                "delete": {"security": gated, "responses": {
                    "204": plain("Deleted"), "401": plain("Unauthorized"), "404": plain("Not found")}}
            },
            "/api/users/me": {"get": {"security": gated, "responses": {
                "200": ok(json!({"$ref": "#/components/schemas/UserProfile"})),
                "401": plain("Unauthorized")}}},
            "/api/tags/{id}": {"get": {
                "parameters": [{"name": "id", "in": "path", "required": true, "schema": {"type": "integer", "format": "int64"}}],
                "responses": {
                    "200": ok(json!({"type": "object", "properties": {"id": {"type": "integer"}, "name": {"type": "string"}}})),
                    "400": plain("Bad id")}}},
            "/api/archive": {"get": {"responses": {"200": ok(json!({"type": "array", "items": {}}))}}},
            "/api/info": {"get": {"responses": {"200": ok(json!({
                "type": "object", "required": ["name", "version"],
                "properties": {"name": {"type": "string"}, "version": {"type": "string"}}}))}}},
            "/api/search": {"get": {
                "parameters": [
                    {"name": "category", "in": "query", "required": false, "schema": {"type": "string", "enum": CATEGORIES}},
                    {"name": "limit", "in": "query", "required": false, "schema": {"type": "integer", "minimum": 1, "maximum": 50}}
                ],
                "responses": {
                    "200": ok(json!({"type": "array", "items": {"$ref": "#/components/schemas/Post"}})),
                    "400": plain("Invalid query")}}}
        },
        "components": {
            "schemas": {"Post": post_schema_v3(), "PostInput": post_input_schema()},
            "securitySchemes": {
                "bearerAuth": {"type": "http", "scheme": "bearer"},
                "cookieAuth": {"type": "apiKey", "in": "cookie", "name": "SESSION"}
            }
        }
    })
}

/// The same API as a v2 document using `basePath`.
pub fn openapi_v2() -> Value {
    let ok = |schema: Value| json!({"description": "OK", "schema": schema});
    let plain = |d: &str| json!({"description": d});
    let gated = json!([{"bearerAuth": []}]);
    let id_param = json!({"name": "id", "in": "path", "required": true, "type": "string"});
    let body_param = json!({"name": "body", "in": "body", "required": true, "schema": {"$ref": "#/definitions/PostInput"}});
    json!({
        "swagger": "2.0",
        "info": {"title": "wfc testbed", "version": "1.0.0"},
        "basePath": PREFIX,
        "consumes": ["application/json"],
        "produces": ["application/json"],
        "paths": {
            "/login": {"post": {
                "consumes": ["application/x-www-form-urlencoded"],
                "parameters": [
                    {"name": "username", "in": "formData", "required": true, "type": "string"},
                    {"name": "password", "in": "formData", "required": true, "type": "string"}],
                "responses": {"200": ok(json!({"type": "object"})), "401": plain("Bad credentials")}}},
            "/api/auth/signin": {"post": {
                "parameters": [{"name": "body", "in": "body", "required": true, "schema": {
                    "type": "object", "required": ["usernameOrEmail", "password"],
                    "properties": {"usernameOrEmail": {"type": "string"}, "password": {"type": "string"}}}}],
                "responses": {"200": ok(json!({"type": "object"})), "400": plain("Malformed"), "401": plain("Bad credentials")}}},
            "/api/posts": {
                "get": {"security": gated, "responses": {
                    "200": ok(json!({"type": "array", "items": {"$ref": "#/definitions/Post"}})), "401": plain("Unauthorized")}},
                "post": {"security": gated, "parameters": [body_param.clone()], "responses": {
                    "201": ok(json!({"$ref": "#/definitions/Post"})), "400": plain("Invalid input"), "401": plain("Unauthorized")}}
            },
            "/api/posts/{id}": {
                "parameters": [id_param],
                "get": {"security": gated, "responses": {
                    "200": ok(json!({"$ref": "#/definitions/Post"})), "401": plain("Unauthorized"), "404": plain("Not found")}},
                "put": {"security": gated, "parameters": [body_param], "responses": {
                    "200": ok(json!({"$ref": "#/definitions/Post"})), "400": plain("Invalid input"),
                    "401": plain("Unauthorized"), "404": plain("Not found")}},
                "delete": {"security": gated, "responses": {
                    "204": plain("Deleted"), "401": plain("Unauthorized"), "404": plain("Not found")}}
            },
            "/api/users/me": {"get": {"security": gated, "responses": {
                "200": ok(json!({"$ref": "#/definitions/UserProfile"})), "401": plain("Unauthorized")}}},
            "/api/tags/{id}": {"get": {
                "parameters": [{"name": "id", "in": "path", "required": true, "type": "integer", "format": "int64"}],
                "responses": {"200": ok(json!({"type": "object"})), "400": plain("Bad id")}}},
            "/api/archive": {"get": {"responses": {"200": ok(json!({"type": "array", "items": {}}))}}},
            "/api/info": {"get": {"responses": {"200": ok(json!({
                "type": "object", "required": ["name", "version"],
                "properties": {"name": {"type": "string"}, "version": {"type": "string"}}}))}}},
            "/api/search": {"get": {
                "parameters": [
                    {"name": "category", "in": "query", "required": false, "type": "string", "enum": CATEGORIES},
                    {"name": "limit", "in": "query", "required": false, "type": "integer", "minimum": 1, "maximum": 50}],
                "responses": {"200": ok(json!({"type": "array", "items": {"$ref": "#/definitions/Post"}})), "400": plain("Invalid query")}}}
        },
        "definitions": {"Post": post_schema_v3(), "PostInput": post_input_schema()},
        "securityDefinitions": {"bearerAuth": {"type": "apiKey", "in": "header", "name": "Authorization"}}
    })
}
