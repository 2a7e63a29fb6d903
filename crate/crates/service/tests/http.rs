//! In-process HTTP contract tests.

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use dynabuf_core::random::ValueGen;
use dynabuf_core::rexp::{self, RData, RValue};
use dynabuf_core::wire::decode_named;
use dynabuf_core::{bundled, DynamicMessage, Value};
use dynabuf_service::{router, AppState, PROTOBUF_CONTENT_TYPE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    /// Checks the success contract and decodes the body.
    fn value(&self) -> RValue {
        assert_eq!(self.status, StatusCode::OK, "{}", self.text());
        assert_eq!(self.content_type.as_deref(), Some(PROTOBUF_CONTENT_TYPE));
        let m = decode_named(bundled::pool(), rexp::REXP_TYPE, &self.body).unwrap();
        assert_no_unknown_fields(&m);
        rexp::from_message(&m).unwrap()
    }
}

fn assert_no_unknown_fields(m: &DynamicMessage) {
    assert!(m.unknown_fields().is_empty());
    for (_, values) in m.set_fields() {
        for v in values {
            if let Value::Message(inner) = v {
                assert_no_unknown_fields(inner);
            }
        }
    }
}

fn app() -> Router {
    router(AppState::builtin())
}

async fn send(app: &Router, req: Request<Body>) -> Reply {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string());
    let body = to_bytes(res.into_body(), usize::MAX).await.unwrap().to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

async fn get(app: &Router, path: &str) -> Reply {
    send(app, Request::get(path).body(Body::empty()).unwrap()).await
}

async fn post_raw(app: &Router, path: &str, content_type: &str, body: Vec<u8>) -> Reply {
    let req = Request::post(path)
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .unwrap();
    send(app, req).await
}

async fn call(app: &Router, name: &str, args: &RValue) -> Reply {
    let body = rexp::serialize_value(args).bytes;
    post_raw(app, &format!("/ocpu/fn/{name}/pb"), PROTOBUF_CONTENT_TYPE, body).await
}

#[tokio::test]
async fn get_object_contract() {
    let app = app();
    let first = get(&app, "/ocpu/object/animals/pb").await;
    let animals = first.value();
    assert!(rexp::value_equal(&animals, &dynabuf_service::store::animals()));
    assert_eq!(animals.attr("row.names").unwrap().len(), 28);
    for _ in 0..5 {
        assert_eq!(get(&app, "/ocpu/object/animals/pb").await.body, first.body);
    }
    let letters = get(&app, "/ocpu/object/letters/pb").await.value();
    assert_eq!(letters.len(), 26);
}

#[tokio::test]
async fn get_object_errors() {
    let app = app();
    let missing = get(&app, "/ocpu/object/nothing/pb").await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
    assert!(missing.text().contains("nothing"));
    assert_eq!(get(&app, "/ocpu/object/animals/json").await.status, StatusCode::NOT_ACCEPTABLE);
    assert_eq!(get(&app, "/ocpu/object/animals").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn identity_echo() {
    let app = app();
    let gen = ValueGen::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..150 {
        let v = gen.value(&mut rng);
        let out = call(&app, "identity", &RValue::named_list([("x", v.clone())])).await.value();
        assert!(rexp::value_equal(&out, &v), "{v:?}");
    }
}

#[tokio::test]
async fn positional_and_named_arguments() {
    let app = app();
    let positional = RValue::list(vec![RValue::int(vec![2]), RValue::int(vec![5])]);
    assert_eq!(call(&app, "seq", &positional).await.value(), RValue::int(vec![2, 3, 4, 5]));
    let mixed = RValue::list(vec![RValue::real(vec![0.5]), RValue::int(vec![0]), RValue::int(vec![2])])
        .with_attr("names", RValue::string(["by", "", ""]));
    assert_eq!(call(&app, "seq", &mixed).await.value(), RValue::real(vec![0.0, 0.5, 1.0, 1.5, 2.0]));
    let total = call(&app, "sum", &RValue::list(vec![RValue::real(vec![1.5, 2.5])])).await.value();
    assert_eq!(total, RValue::real(vec![4.0]));
}

#[tokio::test]
async fn gaussian_sample() {
    let app = app();
    let args = |seed: i32| {
        RValue::named_list([
            ("n", RValue::real(vec![42.0])),
            ("mean", RValue::real(vec![100.0])),
            ("seed", RValue::int(vec![seed])),
        ])
    };
    let bound = 3.0 / 42f64.sqrt();
    let sample_mean = |v: &RValue| {
        let RData::Real(x) = &v.data else { panic!("{v:?}") };
        assert_eq!(x.len(), 42);
        x.iter().sum::<f64>() / 42.0
    };
    let first = call(&app, "gaussian", &args(7)).await;
    let v = first.value();
    assert!((sample_mean(&v) - 100.0).abs() < bound);
    assert_eq!(call(&app, "gaussian", &args(7)).await.body, first.body);

    // the bound is three standard errors, so nearly every seed satisfies it
    let mut inside = 0;
    for seed in 0..200 {
        if (sample_mean(&call(&app, "gaussian", &args(seed)).await.value()) - 100.0).abs() < bound {
            inside += 1;
        }
    }
    assert!(inside >= 195, "{inside}/200");
}

#[tokio::test]
async fn histogram_over_http() {
    let app = app();
    let args = RValue::named_list([
        ("points", RValue::real(vec![0.5, 1.5, 1.6, 7.0])),
        ("breaks", RValue::real(vec![0.0, 1.0, 2.0])),
    ]);
    let out = call(&app, "bin_histogram", &args).await.value();
    let RData::List(items) = &out.data else { panic!() };
    assert_eq!(items[1], RValue::int(vec![1, 2]));
    assert_eq!(items[3], RValue::real(vec![1.0]));
}

#[tokio::test]
async fn post_error_statuses() {
    let app = app();
    let empty = RValue::list(vec![]);

    assert_eq!(call(&app, "nope", &empty).await.status, StatusCode::NOT_FOUND);
    let not_pb = post_raw(&app, "/ocpu/fn/identity/json", PROTOBUF_CONTENT_TYPE, vec![]).await;
    assert_eq!(not_pb.status, StatusCode::NOT_ACCEPTABLE);

    let body = rexp::serialize_value(&RValue::named_list([("x", RValue::null())])).bytes;
    let wrong_type = post_raw(&app, "/ocpu/fn/identity/pb", "application/json", body.clone()).await;
    assert_eq!(wrong_type.status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let req = Request::post("/ocpu/fn/identity/pb").body(Body::from(body.clone())).unwrap();
    assert_eq!(send(&app, req).await.status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let with_params = post_raw(&app, "/ocpu/fn/identity/pb", "Application/X-Protobuf; charset=binary", body).await;
    assert_eq!(with_params.status, StatusCode::OK);

    let garbage = post_raw(&app, "/ocpu/fn/identity/pb", PROTOBUF_CONTENT_TYPE, vec![0xff, 0xff]).await;
    assert_eq!(garbage.status, StatusCode::BAD_REQUEST);
    let not_list = call(&app, "identity", &RValue::int(vec![1])).await;
    assert_eq!(not_list.status, StatusCode::BAD_REQUEST);
    let missing = call(&app, "gaussian", &empty).await;
    assert_eq!(missing.status, StatusCode::BAD_REQUEST);
    assert!(missing.text().contains("`n`"), "{}", missing.text());

    let failing = call(&app, "sum", &RValue::list(vec![RValue::string(["a"])])).await;
    assert_eq!(failing.status, StatusCode::INTERNAL_SERVER_ERROR);
    assert!(failing.content_type.as_deref().unwrap().starts_with("text/plain"));
    assert!(failing.text().contains("invalid type"));

    let get_on_fn = send(&app, Request::get("/ocpu/fn/identity/pb").body(Body::empty()).unwrap()).await;
    assert_eq!(get_on_fn.status, StatusCode::METHOD_NOT_ALLOWED);
}
