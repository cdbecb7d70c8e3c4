#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rcses_server::{router, AppState, Clock, ServiceConfig, SystemClock};
use serde_json::Value;
use tower::ServiceExt;

pub const ONTOLOGY_DOC: &str = include_str!("../../../core/tests/fixtures/ontology.xml");
pub const RULES_DOC: &str = include_str!("../../../core/tests/fixtures/rules.xml");

pub const MODEL: &str = "إنهاء الخدمة";
pub const R1_CONCEPT: &str = "الإستقالة";
pub const R1_VALUE: &str = "تقديم الإستقالة وقبولها";
pub const R1_CONSEQUENT: &str = "إنهاء الخدمة بالإستقالة";
pub const R2_CONCEPT: &str = "طلب الإحالة على التقاعد قبل بلوغ السن النظامية";
pub const R2_VALUE: &str = "تقديم الطلب قبل بلوغ السن النظامية وقبوله";
pub const R2_OTHER: &str = "لم يقدم الطلب";
pub const TOKEN: &str = "s3cret-token";

pub fn augmented_ontology() -> String {
    ONTOLOGY_DOC.replace(
        "</KSA_Civil_Ontology>",
        &format!(
            r#"<OntParent ParentName="{MODEL}">
<OntChild ChildName="{R1_CONSEQUENT}">
<OntConcept ConceptName="{R1_CONCEPT}">
<OntVal ValueName="{R1_VALUE}"/>
<OntVal ValueName="لم يتم تقديم الإستقالة"/>
</OntConcept>
</OntChild>
<OntChild ChildName="إنهاء الخدمة بطلب الإحالة على التقاعد">
<OntConcept ConceptName="{R2_CONCEPT}">
<OntVal ValueName="{R2_VALUE}"/>
<OntVal ValueName="{R2_OTHER}"/>
</OntConcept>
</OntChild>
</OntParent>
</KSA_Civil_Ontology>"#
        ),
    )
}

pub struct TestApp {
    pub dir: tempfile::TempDir,
    pub state: Arc<AppState>,
    pub router: Router,
}

pub struct Options {
    pub ontology: String,
    pub rules: String,
    pub strict: bool,
    pub token: Option<&'static str>,
    pub ttl: u64,
    pub clock: Arc<dyn Clock>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            ontology: ONTOLOGY_DOC.to_owned(),
            rules: RULES_DOC.to_owned(),
            strict: false,
            token: Some(TOKEN),
            ttl: 3600,
            clock: Arc::new(SystemClock),
        }
    }
}

pub fn app_with(opts: Options) -> TestApp {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ontology.xml"), &opts.ontology).unwrap();
    std::fs::write(dir.path().join("rules.xml"), &opts.rules).unwrap();
    let mut config = ServiceConfig::new(dir.path());
    config.strict_kb = opts.strict;
    config.admin_token = opts.token.map(str::to_owned);
    config.session_ttl = opts.ttl;
    let state = Arc::new(AppState::from_config(&config, opts.clock).unwrap());
    TestApp {
        router: router(state.clone()),
        state,
        dir,
    }
}

pub fn fixture_app() -> TestApp {
    app_with(Options::default())
}

pub fn augmented_app() -> TestApp {
    app_with(Options {
        ontology: augmented_ontology(),
        ..Options::default()
    })
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

/// Percent-encodes a path segment or query value.
pub fn enc(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl TestApp {
    pub async fn send(&self, req: Request<Body>) -> Reply {
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply {
            status,
            headers,
            body,
        }
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<Value>) -> Reply {
        let mut builder = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                builder = builder.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        self.send(builder.body(body).unwrap()).await
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.call(Method::GET, uri, None).await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.call(Method::POST, uri, Some(body)).await
    }

    pub async fn put_doc(
        &self,
        which: &str,
        doc: &str,
        token: Option<&str>,
        etag: Option<&str>,
    ) -> Reply {
        let mut builder = Request::builder()
            .method(Method::PUT)
            .uri(format!("/api/v1/kb/{which}"))
            .header("content-type", "application/xml");
        if let Some(t) = token {
            builder = builder.header("authorization", format!("Bearer {t}"));
        }
        if let Some(e) = etag {
            builder = builder.header("if-match", e);
        }
        self.send(builder.body(Body::from(doc.to_owned())).unwrap())
            .await
    }

    pub async fn new_session(&self, model: &str) -> String {
        let r = self
            .post("/api/v1/sessions", serde_json::json!({ "model": model }))
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
        r.json()["session_id"].as_str().unwrap().to_owned()
    }

    pub async fn answer(&self, id: &str, concept: &str, value: &str) -> Reply {
        self.post(
            &format!("/api/v1/sessions/{id}/findings"),
            serde_json::json!({ "concept": concept, "property": "Value", "value": value }),
        )
        .await
    }
}

pub fn names(v: &Value, list: &str) -> Vec<String> {
    v[list]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["rule"].as_str().unwrap().to_owned())
        .collect()
}
